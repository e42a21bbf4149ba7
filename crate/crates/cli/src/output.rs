//! Config ingestion, error codes and file emission.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use duelgame::model::validate_params;
use duelgame::{GameError, GameParams, RawParams};

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn check_failed(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CHECK_FAILED,
            message: message.into(),
        }
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        let code = match e {
            GameError::NonPositiveRate { .. }
            | GameError::NonIntegerThreshold { .. }
            | GameError::ThresholdTooSmall { .. } => EXIT_CONFIG,
            _ => EXIT_DOMAIN,
        };
        CliError {
            code,
            message: format!("{e:?}: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::config(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> CliResult<(RawParams, GameParams)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let raw: RawParams = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))?;
    let params = validate_params(&raw)?;
    Ok((raw, params))
}

/// Writes `text` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

pub fn metadata_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// CSV with a header row, LF line endings and 17 significant digits.
pub fn csv(header: &str, rows: impl Iterator<Item = (String, f64)>) -> String {
    let mut s = String::new();
    s.push_str(header);
    s.push('\n');
    for (key, value) in rows {
        s.push_str(&format!("{key},{value:.16e}\n"));
    }
    s
}

pub fn json_pretty<T: serde::Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}
