//! `--check`: compares a run summary against bundled reference values.

use crate::error::{CliError, CliResult};
use crate::experiments::Outcome;
use serde::Deserialize;

pub const REFERENCES: &str = include_str!("../references/references.toml");

const MATCH_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub criterion: u32,
    pub experiment: String,
    #[serde(default)]
    pub when: toml::Table,
    pub key: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub target: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Deserialize)]
struct File {
    reference: Vec<Reference>,
}

impl Reference {
    pub fn bounds(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (self.min.unwrap_or(f64::NEG_INFINITY), self.max.unwrap_or(f64::INFINITY));
        if let Some(t) = self.target {
            let tol = self.tol.unwrap_or(0.0);
            lo = lo.max(t - tol);
            hi = hi.min(t + tol);
        }
        (lo, hi)
    }

    pub fn applies(&self, experiment: &str, o: &Outcome) -> bool {
        self.experiment == experiment
            && self.when.iter().all(|(k, want)| {
                let Some(got) = o.get(k) else { return false };
                match want {
                    toml::Value::Integer(i) => got.parse::<f64>().is_ok_and(|g| (g - *i as f64).abs() <= MATCH_TOL),
                    toml::Value::Float(f) => got.parse::<f64>().is_ok_and(|g| (g - f).abs() <= MATCH_TOL),
                    toml::Value::String(s) => got == s,
                    toml::Value::Boolean(b) => got == b.to_string(),
                    _ => false,
                }
            })
    }
}

pub fn references() -> CliResult<Vec<Reference>> {
    let f: File = toml::from_str(REFERENCES).map_err(|e| CliError::Config(format!("bundled references: {e}")))?;
    Ok(f.reference)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub criterion: u32,
    pub key: String,
    pub value: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.value.map(|v| format!("{v:.6}")).unwrap_or_else(|| "missing".into());
        write!(
            f,
            "check criterion={} key={} value={} range=[{:.6}, {:.6}] {}",
            self.criterion,
            self.key,
            v,
            self.lo,
            self.hi,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Evaluates every applicable reference. Errors with a config error when
/// none applies.
pub fn check(experiment: &str, o: &Outcome) -> CliResult<Vec<CheckLine>> {
    let lines: Vec<CheckLine> = references()?
        .iter()
        .filter(|r| r.applies(experiment, o))
        .map(|r| {
            let (lo, hi) = r.bounds();
            let value = o.value(&r.key);
            CheckLine {
                criterion: r.criterion,
                key: r.key.clone(),
                value,
                lo,
                hi,
                pass: value.is_some_and(|v| v >= lo && v <= hi),
            }
        })
        .collect();
    if lines.is_empty() {
        return Err(CliError::Config(format!("--check: no bundled reference matches this {experiment} run")));
    }
    Ok(lines)
}

pub fn failures(lines: &[CheckLine]) -> usize {
    lines.iter().filter(|l| !l.pass).count()
}
