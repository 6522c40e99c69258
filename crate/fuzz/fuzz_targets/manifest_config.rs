#![no_main]

use libfuzzer_sys::fuzz_target;
use monge_slit::cli::parse_manifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(manifest) = parse_manifest(text) else { return };
    let config = &manifest.config;
    assert!(config.spec.d() > 0.0 && config.spec.a() > 0.0 && config.hbar() > 0.0);
    assert!(config.grid_points.is_power_of_two());
    assert!(config.position_extent > 0.0);
    assert!(manifest.a_values.windows(2).all(|w| w[1] < w[0]));
    let _ = config.operator.validate();
});
