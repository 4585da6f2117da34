//! Output files: CSV with 17 significant digits, JSON, and run manifests.
//! Every file is written to a temporary sibling and renamed into place.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::CliError;

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("HETFORECAST_GIT_DESCRIBE"), ")");

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

/// Scientific notation with 17 significant digits, enough to round-trip any f64.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let mut tmp_name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| io_err(path, e))?;
    write_atomic(path, &bytes)
}

#[derive(Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub config_path: Option<PathBuf>,
    pub resolved_config: &'a C,
    pub master_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub tool_version: &'static str,
    pub outputs: Vec<PathBuf>,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(
        command: &'a str,
        config_path: Option<&Path>,
        resolved_config: &'a C,
        master_seed: u64,
        started_at: String,
        outputs: Vec<&Path>,
    ) -> Self {
        Manifest {
            command,
            config_path: config_path.map(Path::to_path_buf),
            resolved_config,
            master_seed,
            started_at,
            finished_at: String::new(),
            tool_version: VERSION,
            outputs: outputs.into_iter().map(Path::to_path_buf).collect(),
        }
    }

    pub fn write(mut self, path: &Path) -> Result<(), CliError> {
        self.finished_at = now();
        write_atomic(path, &to_json(&self)?)
    }
}
