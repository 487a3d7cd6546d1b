//! Failure classes, file plumbing and the run record.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cop_core::io::FormatError;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum Failure {
    /// Malformed input. Exit 2.
    Parse(String),
    /// Precondition or consistency violation. Exit 3.
    Semantic(String),
    /// A certification or verification did not pass. Exit 4.
    Check(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Semantic(_) => 3,
            Failure::Check(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Parse(m) => write!(f, "parse error: {m}"),
            Failure::Semantic(m) => write!(f, "error: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<cop_core::Error> for Failure {
    fn from(e: cop_core::Error) -> Self {
        Failure::Semantic(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Rounds to 12 significant digits for reports.
pub fn sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// A JSON number at report precision; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(sig(x))
    } else {
        Value::from(x.to_string())
    }
}

#[derive(Debug, Serialize)]
struct InputDigest {
    path: PathBuf,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    command: &'a [String],
    inputs: &'a [InputDigest],
    seed: Option<u64>,
    outputs: &'a [PathBuf],
    wall_time_secs: f64,
}

/// Tracks what a command read and wrote so the run can be recorded.
pub struct Context {
    argv: Vec<String>,
    inputs: Vec<InputDigest>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
    started: Instant,
}

impl Context {
    pub fn new(argv: Vec<String>) -> Self {
        Context { argv, inputs: Vec::new(), outputs: Vec::new(), seed: None, started: Instant::now() }
    }

    pub fn read(&mut self, path: &Path) -> CliResult<String> {
        let bytes = fs::read(path).map_err(|e| Failure::Semantic(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputDigest { path: path.to_path_buf(), sha256: hex::encode(Sha256::digest(&bytes)) });
        String::from_utf8(bytes).map_err(|e| Failure::Parse(format!("{}: not UTF-8: {e}", path.display())))
    }

    /// Reads and parses a file, tagging parse errors with the path.
    pub fn load<T>(&mut self, path: &Path, parse: impl FnOnce(&str) -> Result<T, FormatError>) -> CliResult<T> {
        let text = self.read(path)?;
        parse(&text).map_err(|e| match e {
            FormatError::Parse { line, column, message } => {
                Failure::Parse(format!("{}:{line}:{column}: {message}", path.display()))
            }
            FormatError::Invalid(e) => Failure::Semantic(format!("{}: {e}", path.display())),
        })
    }

    /// Writes to `out`, or to stdout when absent.
    pub fn emit(&mut self, out: Option<&Path>, content: &str) -> CliResult<()> {
        let mut text = content.to_string();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match out {
            Some(path) => {
                fs::write(path, text).map_err(|e| Failure::Semantic(format!("cannot write {}: {e}", path.display())))?;
                self.outputs.push(path.to_path_buf());
            }
            None => print!("{text}"),
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn write_record(&self, path: &Path) -> CliResult<()> {
        let record = RunRecord {
            command: &self.argv,
            inputs: &self.inputs,
            seed: self.seed,
            outputs: &self.outputs,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&record).expect("record serialises");
        fs::write(path, text + "\n").map_err(|e| Failure::Semantic(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("value serialises")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig(0.5625), 0.5625);
        assert_eq!(sig(std::f64::consts::PI).to_string(), "3.14159265359");
        assert_eq!(sig(1.234_567_890_123_456e-7).to_string(), "0.000000123456789012");
        assert_eq!(num(f64::NEG_INFINITY), Value::from("-inf"));
    }
}
