//! Flat `key = value` scenario files.
//!
//! ```text
//! # reference run
//! dimension = 2+1
//! alice.gap = 3
//! alice.alpha_re = 0.7071067811865476
//! alice.beta_im = -0.7071067811865476
//! alice.t_on = 0
//! alice.t_off = 3
//! alice.position = 0, 0
//! bob.gap = 3
//! ...
//! lambda_product = 0.01
//! noise_R = 0
//! ```
//!
//! `#` starts a comment. Position components are separated by commas or
//! whitespace. Unknown and repeated keys are errors. Amplitude components
//! default to 0, `lambda_product` to 0.01 and `noise_R` to 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::scenario::{ComplexAmplitudePair, DetectorSpec, Dimension, InvalidScenario, Scenario, SwitchingWindow};

pub const DEFAULT_LAMBDA_PRODUCT: f64 = 0.01;
pub const DEFAULT_NOISE_R: f64 = 0.0;

const DETECTOR_FIELDS: [&str; 8] = ["gap", "alpha_re", "alpha_im", "beta_re", "beta_im", "t_on", "t_off", "position"];
const AMPLITUDE_FIELDS: [&str; 4] = ["alpha_re", "alpha_im", "beta_re", "beta_im"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` already set on line {first}")]
    DuplicateKey { line: usize, key: String, first: usize },
    #[error("line {line}: invalid value {value:?} for `{key}`")]
    InvalidValue { line: usize, key: String, value: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("line {line}: `{key}` must be {requirement}")]
    OutOfRange {
        line: usize,
        key: String,
        requirement: &'static str,
    },
    #[error(transparent)]
    Invalid(#[from] InvalidScenario),
}

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub lambda_product: f64,
    pub noise_r: f64,
}

fn known_key(key: &str) -> bool {
    if matches!(key, "dimension" | "lambda_product" | "noise_R") {
        return true;
    }
    match key.split_once('.') {
        Some(("alice" | "bob", field)) => DETECTOR_FIELDS.contains(&field),
        _ => false,
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn raw(&self, key: &str) -> Result<&Entry, ConfigError> {
        self.0.get(key).ok_or_else(|| ConfigError::MissingKey(key.to_owned()))
    }

    fn invalid(key: &str, e: &Entry) -> ConfigError {
        ConfigError::InvalidValue {
            line: e.line,
            key: key.to_owned(),
            value: e.value.clone(),
        }
    }

    fn number(&self, key: &str) -> Result<f64, ConfigError> {
        let e = self.raw(key)?;
        parse_number(&e.value).ok_or_else(|| Self::invalid(key, e))
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        if self.0.contains_key(key) {
            self.number(key)
        } else {
            Ok(default)
        }
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let e = self.raw(key)?;
        e.value
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(parse_number)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Self::invalid(key, e))
    }

    fn line(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |e| e.line)
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_entries(text: &str) -> Result<Entries, ConfigError> {
    let mut map: BTreeMap<String, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: raw.to_owned(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: raw.to_owned(),
            });
        }
        if !known_key(key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_owned(),
            });
        }
        if let Some(prev) = map.get(key) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_owned(),
                first: prev.line,
            });
        }
        map.insert(
            key.to_owned(),
            Entry {
                line,
                value: value.to_owned(),
            },
        );
    }
    Ok(Entries(map))
}

fn detector(entries: &Entries, role: &str) -> Result<DetectorSpec, ConfigError> {
    let key = |field: &str| format!("{role}.{field}");
    let num = |field: &str| {
        if AMPLITUDE_FIELDS.contains(&field) {
            entries.number_or(&key(field), 0.0)
        } else {
            entries.number(&key(field))
        }
    };
    let state = ComplexAmplitudePair::new(
        Complex64::new(num("alpha_re")?, num("alpha_im")?),
        Complex64::new(num("beta_re")?, num("beta_im")?),
    );
    let window = SwitchingWindow::new(num("t_on")?, num("t_off")?);
    Ok(DetectorSpec::new(num("gap")?, state, entries.vector(&key("position"))?, window))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = parse_entries(text)?;
        let dim_entry = entries.raw("dimension")?;
        let dimension: Dimension = dim_entry
            .value
            .parse()
            .map_err(|_| Entries::invalid("dimension", dim_entry))?;
        let scenario = Scenario::new(dimension, detector(&entries, "alice")?, detector(&entries, "bob")?);
        let lambda_product = entries.number_or("lambda_product", DEFAULT_LAMBDA_PRODUCT)?;
        let noise_r = entries.number_or("noise_R", DEFAULT_NOISE_R)?;
        if noise_r < 0.0 {
            return Err(ConfigError::OutOfRange {
                line: entries.line("noise_R"),
                key: "noise_R".into(),
                requirement: "non-negative",
            });
        }
        scenario.check()?;
        Ok(Self {
            scenario,
            lambda_product,
            noise_r,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Serialises to the file format; `parse(to_text())` reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.scenario;
        let _ = writeln!(out, "dimension = {}", s.dimension());
        for (role, d) in [("alice", s.alice()), ("bob", s.bob())] {
            let pos: Vec<String> = d.position.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "{role}.gap = {:?}", d.gap);
            let _ = writeln!(out, "{role}.alpha_re = {:?}", d.state.alpha.re);
            let _ = writeln!(out, "{role}.alpha_im = {:?}", d.state.alpha.im);
            let _ = writeln!(out, "{role}.beta_re = {:?}", d.state.beta.re);
            let _ = writeln!(out, "{role}.beta_im = {:?}", d.state.beta.im);
            let _ = writeln!(out, "{role}.t_on = {:?}", d.window.t_on);
            let _ = writeln!(out, "{role}.t_off = {:?}", d.window.t_off);
            let _ = writeln!(out, "{role}.position = {}", pos.join(", "));
        }
        let _ = writeln!(out, "lambda_product = {:?}", self.lambda_product);
        let _ = writeln!(out, "noise_R = {:?}", self.noise_r);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = "\
# two detectors one unit apart
dimension = 2+1
alice.gap = 3
alice.alpha_re = 0.7071067811865476
alice.beta_im = -0.7071067811865476   # (|e> - i|g>)/sqrt2
alice.t_on = 0
alice.t_off = 3
alice.position = 0, 0
bob.gap = 3
bob.alpha_re = 0.7071067811865476
bob.beta_re = 0.7071067811865476
bob.t_on = 5
bob.t_off = 8
bob.position = 1 0
";

    #[test]
    fn parses_reference_file() {
        let c = ExperimentConfig::parse(REFERENCE).unwrap();
        assert_eq!(c.scenario.dimension(), Dimension::D2p1);
        assert_eq!(c.scenario.separation(), 1.0);
        assert_eq!(c.lambda_product, DEFAULT_LAMBDA_PRODUCT);
        assert_eq!(c.noise_r, 0.0);
        assert_eq!(c.scenario.alice().state.beta, Complex64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2));
        assert_eq!(c.scenario.bob().window, SwitchingWindow::new(5.0, 8.0));
    }

    #[test]
    fn round_trips() {
        let c = ExperimentConfig::parse(REFERENCE).unwrap();
        let again = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let unknown = REFERENCE.replace("bob.gap = 3", "bob.gpa = 3");
        assert!(matches!(
            ExperimentConfig::parse(&unknown),
            Err(ConfigError::UnknownKey { line: 9, .. })
        ));
        let dup = format!("{REFERENCE}alice.gap = 4\n");
        assert!(matches!(
            ExperimentConfig::parse(&dup),
            Err(ConfigError::DuplicateKey { line: 15, first: 3, .. })
        ));
        let bad = REFERENCE.replace("bob.t_on = 5", "bob.t_on = five");
        let err = ExperimentConfig::parse(&bad).unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { line: 12, .. }));
        assert!(err.to_string().starts_with("line 12:"));
        let syntax = REFERENCE.replace("bob.t_on = 5", "bob.t_on 5");
        assert!(matches!(ExperimentConfig::parse(&syntax), Err(ConfigError::Syntax { line: 12, .. })));
        let missing = REFERENCE.replace("bob.t_off = 8\n", "");
        assert!(matches!(ExperimentConfig::parse(&missing), Err(ConfigError::MissingKey(k)) if k == "bob.t_off"));
        let nan = REFERENCE.replace("bob.gap = 3", "bob.gap = NaN");
        assert!(matches!(ExperimentConfig::parse(&nan), Err(ConfigError::InvalidValue { .. })));
        let noise = format!("{REFERENCE}noise_R = -0.1\n");
        assert!(matches!(ExperimentConfig::parse(&noise), Err(ConfigError::OutOfRange { line: 15, .. })));
    }

    #[test]
    fn physical_validation_is_applied() {
        let overlap = REFERENCE.replace("bob.t_on = 5", "bob.t_on = 2");
        assert!(matches!(ExperimentConfig::parse(&overlap), Err(ConfigError::Invalid(_))));
        let wrong_len = REFERENCE.replace("bob.position = 1 0", "bob.position = 1");
        assert!(matches!(ExperimentConfig::parse(&wrong_len), Err(ConfigError::Invalid(_))));
        let unnormalised = REFERENCE.replace("bob.beta_re = 0.7071067811865476", "bob.beta_re = 0.8");
        assert!(matches!(ExperimentConfig::parse(&unnormalised), Err(ConfigError::Invalid(_))));
    }
}
