//! Run manifests and the batch executor behind the `monge-slit` binary.
//!
//! A manifest is a JSON object with a fixed set of keys; anything else is
//! rejected by name. Results go to CSV (header
//! `d,a,k,monge,bound,product,outcome_probability,formulation_gap`) or JSON,
//! written through a temporary file and renamed into place.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::error::Error;
use crate::experiments::{
    bound_check, convergence_study, run_single, selftest, sweep_k, DisturbanceResult, ExperimentConfig,
    SelfTestCheck, DEFAULT_GRID_POINTS, MAX_GRID_POINTS,
};
use crate::measurement::MeasurementOperator;
use crate::states::{SlitProfile, TwinSlitSpec};

pub const CSV_HEADER: &str = "d,a,k,monge,bound,product,outcome_probability,formulation_gap";

pub const EXIT_OK: i32 = 0;
pub const EXIT_PHYSICS: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BOUND_VIOLATED: i32 = 3;

const TOP_LEVEL_KEYS: &[&str] = &[
    "command",
    "d",
    "a",
    "hbar",
    "operator",
    "grid_points",
    "position_extent",
    "k_values",
    "a_values",
    "seed",
    "output_path",
    "output_format",
];

const OPERATOR_KEYS: &[&str] = &["kind", "cut", "softness", "alpha_re", "alpha_im", "beta_re", "beta_im"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Single,
    SweepK,
    Converge,
    BoundCheck,
    Selftest,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Single => "single",
            Command::SweepK => "sweep-k",
            Command::Converge => "converge",
            Command::BoundCheck => "bound-check",
            Command::Selftest => "selftest",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Command::Single),
            "sweep-k" => Ok(Command::SweepK),
            "converge" => Ok(Command::Converge),
            "bound-check" => Ok(Command::BoundCheck),
            "selftest" => Ok(Command::Selftest),
            other => Err(format!("unknown command `{other}`")),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown output format `{other}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ManifestError {
    #[error("malformed manifest at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid manifest field `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ManifestError {
    ManifestError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

/// A validated run description with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub config: ExperimentConfig,
    pub k_values: Vec<f64>,
    pub a_values: Vec<f64>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
}

/// Parses a manifest that names its own command.
pub fn parse_manifest(text: &str) -> Result<RunManifest, ManifestError> {
    parse_manifest_with_command(text, None)
}

/// Parses a manifest; `command` comes from the command line and must agree
/// with the manifest's `command` field when both are present.
pub fn parse_manifest_with_command(text: &str, command: Option<Command>) -> Result<RunManifest, ManifestError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ManifestError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| invalid("<root>", "manifest must be a JSON object"))?;
    if let Some(key) = obj.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
        return Err(invalid(key, "unknown field"));
    }

    let from_manifest = match obj.get("command") {
        Some(v) => Some(
            v.as_str()
                .ok_or_else(|| invalid("command", "must be a string"))?
                .parse::<Command>()
                .map_err(|m| invalid("command", m))?,
        ),
        None => None,
    };
    let command = match (from_manifest, command) {
        (Some(a), Some(b)) if a != b => {
            return Err(invalid("command", format!("manifest says `{a}` but `{b}` was requested")))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(invalid("command", "missing")),
    };

    let d = positive(obj, "d")?.ok_or_else(|| invalid("d", "missing"))?;
    let a = positive(obj, "a")?.ok_or_else(|| invalid("a", "missing"))?;
    let hbar = positive(obj, "hbar")?.unwrap_or(1.0);
    let spec = SlitProfile::gaussian(a)
        .and_then(|p| TwinSlitSpec::new(p, d, hbar))
        .map_err(|e| invalid("a", e.to_string()))?;

    let operator = match obj.get("operator") {
        None => MeasurementOperator::HardMask { cut: 0.5 * d },
        Some(v) => parse_operator(v, d)?,
    };

    let grid_points = match obj.get("grid_points") {
        None => DEFAULT_GRID_POINTS,
        Some(v) => {
            let n = v
                .as_u64()
                .ok_or_else(|| invalid("grid_points", "must be a positive integer"))?;
            if n < 2 || !n.is_power_of_two() || n > MAX_GRID_POINTS as u64 {
                return Err(invalid(
                    "grid_points",
                    format!("must be a power of two between 2 and {MAX_GRID_POINTS}, got {n}"),
                ));
            }
            n as usize
        }
    };
    let position_extent = positive(obj, "position_extent")?.unwrap_or(40.0 * a.max(d));
    let seed = match obj.get("seed") {
        None => 0,
        Some(v) => v.as_u64().ok_or_else(|| invalid("seed", "must be a nonnegative integer"))?,
    };

    let k_values = match obj.get("k_values") {
        None => (0..121).map(|i| -3.0 + 6.0 * i as f64 / 120.0).collect(),
        Some(v) => number_list(v, "k_values")?,
    };
    let a_values = match obj.get("a_values") {
        None => [0.2, 0.1, 0.05, 0.02, 0.01].iter().map(|x| x * d).collect(),
        Some(v) => {
            let list = number_list(v, "a_values")?;
            if list.is_empty() || list.iter().any(|x| !(*x > 0.0)) || list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(invalid("a_values", "must be positive and strictly decreasing"));
            }
            list
        }
    };

    let output_path = match obj.get("output_path") {
        None => None,
        Some(v) => Some(PathBuf::from(
            v.as_str().ok_or_else(|| invalid("output_path", "must be a string"))?,
        )),
    };
    let output_format = match obj.get("output_format") {
        None => OutputFormat::Csv,
        Some(v) => v
            .as_str()
            .ok_or_else(|| invalid("output_format", "must be a string"))?
            .parse()
            .map_err(|m| invalid("output_format", m))?,
    };

    let mut config = ExperimentConfig::new(spec, operator).with_grid(grid_points, position_extent);
    config.seed = seed;
    Ok(RunManifest {
        command,
        config,
        k_values,
        a_values,
        output_path,
        output_format,
    })
}

fn number(v: &Value, field: &str) -> Result<f64, ManifestError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| invalid(field, "must be a finite number"))
}

fn positive(obj: &Map<String, Value>, field: &str) -> Result<Option<f64>, ManifestError> {
    match obj.get(field) {
        None => Ok(None),
        Some(v) => {
            let x = number(v, field)?;
            if x > 0.0 {
                Ok(Some(x))
            } else {
                Err(invalid(field, format!("must be positive, got {x}")))
            }
        }
    }
}

fn number_list(v: &Value, field: &str) -> Result<Vec<f64>, ManifestError> {
    v.as_array()
        .ok_or_else(|| invalid(field, "must be an array of numbers"))?
        .iter()
        .map(|x| number(x, field))
        .collect()
}

fn parse_operator(v: &Value, d: f64) -> Result<MeasurementOperator, ManifestError> {
    let (kind, fields) = match v {
        Value::String(s) => (s.as_str(), None),
        Value::Object(map) => {
            if let Some(key) = map.keys().find(|k| !OPERATOR_KEYS.contains(&k.as_str())) {
                return Err(invalid(&format!("operator.{key}"), "unknown field"));
            }
            let kind = map
                .get("kind")
                .and_then(Value::as_str)
                .ok_or_else(|| invalid("operator.kind", "missing or not a string"))?;
            (kind, Some(map))
        }
        _ => return Err(invalid("operator", "must be a string or an object")),
    };
    let get = |name: &str, default: f64| -> Result<f64, ManifestError> {
        match fields.and_then(|m| m.get(name)) {
            None => Ok(default),
            Some(x) => number(x, &format!("operator.{name}")),
        }
    };
    let op = match kind {
        "identity" => MeasurementOperator::Identity,
        "hard_mask" => MeasurementOperator::HardMask { cut: get("cut", 0.5 * d)? },
        "smooth_mask" => {
            let softness = get("softness", 0.01 * d)?;
            if !(softness > 0.0) {
                return Err(invalid("operator.softness", format!("must be positive, got {softness}")));
            }
            MeasurementOperator::SmoothMask {
                cut: get("cut", 0.5 * d)?,
                softness,
            }
        }
        "exponential_family" => MeasurementOperator::ExponentialFamily {
            alpha: Complex64::new(get("alpha_re", 0.0)?, get("alpha_im", 0.0)?),
            beta: Complex64::new(get("beta_re", 0.0)?, get("beta_im", 0.0)?),
            cut: get("cut", 0.5 * d)?,
        },
        other => return Err(invalid("operator.kind", format!("unknown operator kind `{other}`"))),
    };
    Ok(op)
}

/// One failed point of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub index: Option<usize>,
    pub stage: Option<String>,
    pub message: String,
    pub exit_code: i32,
}

impl Diagnostic {
    fn from_error(index: Option<usize>, err: &Error) -> Self {
        let stage = match err {
            Error::Stage { stage, .. } => Some(stage.to_string()),
            _ => None,
        };
        Diagnostic {
            index,
            stage,
            message: err.to_string(),
            exit_code: if err.is_config() { EXIT_CONFIG } else { EXIT_PHYSICS },
        }
    }
}

/// Everything a command produced, ready to be rendered.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub results: Vec<DisturbanceResult>,
    pub errors: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<SelfTestCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bound_violations: Vec<usize>,
    pub exit_code: i32,
}

impl RunReport {
    fn new(command: Command) -> Self {
        RunReport {
            command: command.to_string(),
            results: Vec::new(),
            errors: Vec::new(),
            checks: Vec::new(),
            bound_violations: Vec::new(),
            exit_code: EXIT_OK,
        }
    }

    fn collect(&mut self, points: Vec<crate::Result<DisturbanceResult>>) {
        for (i, p) in points.into_iter().enumerate() {
            match p {
                Ok(r) => self.results.push(r),
                Err(e) => self.errors.push(Diagnostic::from_error(Some(i), &e)),
            }
        }
    }

    fn fail(&mut self, err: &Error) {
        self.errors.push(Diagnostic::from_error(None, err));
    }

    fn finish(mut self) -> Self {
        self.exit_code = self
            .errors
            .iter()
            .map(|d| d.exit_code)
            .max_by_key(|c| if *c == EXIT_CONFIG { 2 } else { 1 })
            .unwrap_or(if self.bound_violations.is_empty() { EXIT_OK } else { EXIT_BOUND_VIOLATED });
        if self.exit_code == EXIT_OK && self.checks.iter().any(|c| !c.passed) {
            self.exit_code = EXIT_PHYSICS;
        }
        self
    }
}

/// Runs the manifest's command. Never panics on bad physics input; failures
/// end up in [`RunReport::errors`] and the exit code.
pub fn run_manifest(manifest: &RunManifest) -> RunReport {
    let config = &manifest.config;
    let mut report = RunReport::new(manifest.command);
    match manifest.command {
        Command::Single => report.collect(vec![run_single(config)]),
        Command::SweepK => match sweep_k(config, &manifest.k_values) {
            Ok(points) => report.collect(points),
            Err(e) => report.fail(&e),
        },
        Command::Converge => match convergence_study(config, &manifest.a_values) {
            Ok(points) => report.collect(points),
            Err(e) => report.fail(&e),
        },
        Command::BoundCheck => match bound_check(config) {
            Ok(points) => {
                let hbar = config.hbar();
                for (i, (_, p)) in points.into_iter().enumerate() {
                    match p {
                        Ok(r) => {
                            if !r.satisfies_bound(hbar) {
                                report.bound_violations.push(i);
                            }
                            report.results.push(r);
                        }
                        Err(e) => report.errors.push(Diagnostic::from_error(Some(i), &e)),
                    }
                }
            }
            Err(e) => report.fail(&e),
        },
        Command::Selftest => {
            match selftest(config.seed) {
                Ok(checks) => report.checks = checks,
                Err(e) => report.fail(&e),
            }
            let identity = config.with_operator(MeasurementOperator::Identity);
            report.collect(vec![run_single(&identity), run_single(config)]);
        }
    }
    report.finish()
}

pub fn render_csv(results: &[DisturbanceResult]) -> String {
    let mut out = String::with_capacity(64 * (results.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in results {
        // `{:?}` is the shortest representation that round-trips
        out.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
            r.d, r.a, r.k, r.monge, r.bound, r.product, r.outcome_probability, r.formulation_gap
        ));
    }
    out
}

pub fn render(report: &RunReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(&report.results),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomically(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Runs the manifest and writes its output; returns the process exit code.
/// Diagnostics go to stderr (and into the JSON output).
pub fn execute(manifest: &RunManifest) -> i32 {
    let report = run_manifest(manifest);
    for d in &report.errors {
        eprintln!("error: {}", serde_json::to_string(d).expect("diagnostic serializes"));
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("selftest failed: {} ({})", c.name, c.detail);
    }
    if !report.bound_violations.is_empty() {
        eprintln!("bound violated at battery points {:?}", report.bound_violations);
    }
    let text = render(&report, manifest.output_format);
    match &manifest.output_path {
        Some(path) => {
            if let Err(e) = write_atomically(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
        None => print!("{text}"),
    }
    report.exit_code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_manifest_gets_defaults() {
        let m = parse_manifest(r#"{"command":"single","d":1,"a":0.01,"operator":"hard_mask"}"#).unwrap();
        assert_eq!(m.command, Command::Single);
        assert_eq!(m.config.hbar(), 1.0);
        assert_eq!(m.config.grid_points, 16384);
        assert_eq!(m.config.position_extent, 40.0);
        assert_eq!(m.config.operator, MeasurementOperator::HardMask { cut: 0.5 });
        assert_eq!(m.output_format, OutputFormat::Csv);
        assert_eq!(m.k_values.len(), 121);
        assert_eq!(m.a_values, vec![0.2, 0.1, 0.05, 0.02, 0.01]);
    }

    #[test]
    fn negative_d_names_field() {
        match parse_manifest(r#"{"command":"single","d":-1,"a":0.01}"#) {
            Err(ManifestError::Validation { field, .. }) => assert_eq!(field, "d"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_named() {
        match parse_manifest(r#"{"command":"single","d":1,"a":0.01,"slits":2}"#) {
            Err(ManifestError::Validation { field, .. }) => assert_eq!(field, "slits"),
            other => panic!("{other:?}"),
        }
        match parse_manifest(r#"{"command":"single","d":1,"a":0.01,"operator":{"kind":"hard_mask","edge":1}}"#) {
            Err(ManifestError::Validation { field, .. }) => assert_eq!(field, "operator.edge"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_have_position() {
        match parse_manifest("{\n  \"command\": \"single\",\n  \"d\": 1,,\n}") {
            Err(ManifestError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn operator_object_and_validation() {
        let m = parse_manifest(
            r#"{"command":"single","d":2,"a":0.02,"operator":{"kind":"exponential_family","alpha_im":3,"beta_re":-1}}"#,
        )
        .unwrap();
        assert_eq!(
            m.config.operator,
            MeasurementOperator::ExponentialFamily {
                alpha: Complex64::new(0.0, 3.0),
                beta: Complex64::new(-1.0, 0.0),
                cut: 1.0
            }
        );
        let bad = [
            (r#"{"command":"single","d":1,"a":0.01,"grid_points":1000}"#, "grid_points"),
            (r#"{"command":"single","d":1,"a":0.01,"a_values":[0.1,0.2]}"#, "a_values"),
            (r#"{"command":"single","d":1,"a":0.01,"output_format":"xml"}"#, "output_format"),
            (r#"{"command":"nope","d":1,"a":0.01}"#, "command"),
            (r#"{"d":1,"a":0.01}"#, "command"),
            (r#"{"command":"single","a":0.01}"#, "d"),
            (r#"{"command":"single","d":1,"a":"x"}"#, "a"),
            (r#"{"command":"single","d":1,"a":0.01,"operator":{"kind":"smooth_mask","softness":0}}"#, "operator.softness"),
            (r#"[1,2]"#, "<root>"),
        ];
        for (text, field) in bad {
            match parse_manifest(text) {
                Err(ManifestError::Validation { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn command_line_command_must_agree() {
        let text = r#"{"d":1,"a":0.01}"#;
        assert_eq!(parse_manifest_with_command(text, Some(Command::Converge)).unwrap().command, Command::Converge);
        let both = r#"{"command":"single","d":1,"a":0.01}"#;
        assert!(parse_manifest_with_command(both, Some(Command::SweepK)).is_err());
    }

    #[test]
    fn csv_rendering() {
        let r = DisturbanceResult {
            d: 1.0,
            a: 0.01,
            k: 0.0,
            monge: 0.1 + 0.2,
            bound: 2.0 / std::f64::consts::PI,
            product: 1e-20,
            outcome_probability: 0.5,
            formulation_gap: 0.0,
        };
        let text = render_csv(std::slice::from_ref(&r));
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let fields: Vec<f64> = lines.next().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields, vec![r.d, r.a, r.k, r.monge, r.bound, r.product, r.outcome_probability, r.formulation_gap]);
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    proptest::proptest! {
        #[test]
        fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
            let _ = parse_manifest(&text);
        }

        #[test]
        fn accepted_manifests_are_consistent(
            d in -2.0f64..5.0,
            a in -0.1f64..0.5,
            log_n in 0u32..26,
            kind in proptest::sample::select(vec!["identity", "hard_mask", "smooth_mask", "exponential_family", "x"]),
            extra in proptest::option::of("[a-z]{1,6}"),
        ) {
            let mut text = format!(
                r#"{{"command":"single","d":{d},"a":{a},"grid_points":{},"operator":"{kind}""#,
                1u64 << log_n
            );
            if let Some(key) = &extra {
                text.push_str(&format!(r#","{key}":1"#));
            }
            text.push('}');
            if let Ok(m) = parse_manifest(&text) {
                proptest::prop_assert!(m.config.spec.d() > 0.0 && m.config.spec.a() > 0.0);
                proptest::prop_assert!(m.config.grid_points.is_power_of_two());
                proptest::prop_assert!(m.config.grid_points <= MAX_GRID_POINTS);
                proptest::prop_assert!(m.config.operator.validate().is_ok());
                proptest::prop_assert!(extra.as_deref().is_none_or(|k| TOP_LEVEL_KEYS.contains(&k)));
            }
        }
    }

    #[test]
    fn exit_code_precedence() {
        let mut report = RunReport::new(Command::BoundCheck);
        report.bound_violations.push(4);
        assert_eq!(report.clone().finish().exit_code, EXIT_BOUND_VIOLATED);
        report.errors.push(Diagnostic {
            index: Some(1),
            stage: Some("transport".into()),
            message: "x".into(),
            exit_code: EXIT_PHYSICS,
        });
        assert_eq!(report.clone().finish().exit_code, EXIT_PHYSICS);
        report.errors[0].exit_code = EXIT_CONFIG;
        assert_eq!(report.finish().exit_code, EXIT_CONFIG);

        let mut selftest = RunReport::new(Command::Selftest);
        selftest.checks.push(SelfTestCheck {
            name: "c".into(),
            passed: false,
            detail: String::new(),
        });
        assert_eq!(selftest.finish().exit_code, EXIT_PHYSICS);
    }

    #[test]
    fn physics_failure_maps_to_exit_one() {
        let m = parse_manifest(r#"{"command":"single","d":1,"a":0.01,"operator":{"kind":"hard_mask","cut":-30}}"#)
            .unwrap();
        let report = run_manifest(&m);
        assert_eq!(report.exit_code, EXIT_PHYSICS);
        assert_eq!(report.errors[0].stage.as_deref(), Some("measurement"));

        let coarse = parse_manifest(r#"{"command":"single","d":1,"a":0.01,"grid_points":256}"#).unwrap();
        assert_eq!(run_manifest(&coarse).exit_code, EXIT_CONFIG);
    }
}
