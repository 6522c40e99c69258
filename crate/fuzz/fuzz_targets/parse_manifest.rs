#![no_main]

use libfuzzer_sys::fuzz_target;
use monge_slit::cli::{parse_manifest, parse_manifest_with_command, Command};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_manifest(text);
        let _ = parse_manifest_with_command(text, Some(Command::SweepK));
    }
});
