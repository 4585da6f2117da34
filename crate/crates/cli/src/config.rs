//! Config loading, flag parsing and error classification.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use hetforecast::experiments::ExperimentConfig;
use hetforecast::{Dgp, Error};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::RootInsideUnitCircle { .. }
            | Error::NonStationary { .. }
            | Error::InsufficientData { .. }
            | Error::TruncationCap { .. }
            | Error::Unsupported(_) => CliError::Config(e.to_string()),
            Error::Overflow { .. }
            | Error::OutOfRange { .. }
            | Error::IllConditioned { .. }
            | Error::AmbiguousOracle(_)
            | Error::AllCandidatesFailed(_) => CliError::Runtime(e.to_string()),
        }
    }
}

/// Settings shared by `simulate`, `select` and `eigprobe`. Flags override
/// fields; the fully resolved record is echoed into the run manifest.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dgp: Option<Dgp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cn_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    // A run manifest carries the config it ran with.
    Ok(match value {
        Value::Object(mut m) if m.contains_key("resolved_config") => m.remove("resolved_config").expect("checked"),
        other => other,
    })
}

fn decode<T: DeserializeOwned>(path: &Path, value: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value)
        .map_err(|e| CliError::Config(format!("{}: field `{}`: {}", path.display(), e.path(), e.inner())))
}

/// Loads a run config. A bare DGP object (with a `filter` key) is accepted
/// as shorthand for `{"dgp": ...}`.
pub fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    let value = read_json(path)?;
    let value = match value {
        Value::Object(m) if m.contains_key("filter") => {
            let mut wrapped = serde_json::Map::new();
            wrapped.insert("dgp".into(), Value::Object(m));
            Value::Object(wrapped)
        }
        other => other,
    };
    decode(path, value)
}

/// Loads one experiment config or an array of them.
pub fn load_experiments(path: &Path) -> Result<Vec<ExperimentConfig>, CliError> {
    match read_json(path)? {
        Value::Array(items) => items.into_iter().map(|v| decode(path, v)).collect(),
        single => Ok(vec![decode(path, single)?]),
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| CliError::Config(format!("bad {what} entry '{t}' in '{s}'"))))
        .collect()
}

/// Parses `"1;2"` or `"1,2;3"` into lag sets.
pub fn parse_candidates(s: &str) -> Result<Vec<Vec<usize>>, CliError> {
    s.split(';').map(|set| parse_list(set, "lag")).collect()
}

pub fn parse_grid(s: &str) -> Result<Vec<usize>, CliError> {
    parse_list(s, "sample size")
}

/// Reads a numeric series from CSV: the `x` column when there is a header
/// row containing one, otherwise the first column.
pub fn read_series(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut column = 0;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let field = rec.get(column).unwrap_or("");
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if line == 0 => {
                column = rec.iter().position(|h| h == "x").unwrap_or(0);
            }
            Err(_) => {
                return Err(CliError::Config(format!("{}: line {}: '{field}' is not a number", path.display(), line + 1)))
            }
        }
    }
    Ok(out)
}
