use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use legendrian::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug)]
pub enum Failure {
    Io(String),
    Validation(String),
    Numerical(String),
    Abort(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Abort(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(m) | Failure::Validation(m) | Failure::Numerical(m) | Failure::Abort(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::StepRejected { .. } | Error::StageAbort { .. } => Failure::Abort(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn io(path: &Path, e: impl fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub command: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    header: &'a Header,
    #[serde(flatten)]
    body: &'a T,
}

pub struct Context {
    pub config: ExperimentConfig,
    pub header: Header,
    out: PathBuf,
}

impl Context {
    pub fn new(command: &'static str, config: ExperimentConfig, out: PathBuf) -> Result<Self, Failure> {
        let canonical = serde_json::to_vec(&config).map_err(|e| Failure::Validation(e.to_string()))?;
        let config_hash = format!("{:x}", Sha256::digest(&canonical));
        std::fs::create_dir_all(&out).map_err(|e| io(&out, e))?;
        Ok(Context {
            header: Header {
                command,
                version: env!("CARGO_PKG_VERSION"),
                config_hash,
                seed: config.seed,
            },
            config,
            out,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Pretty JSON with the header prepended to the body's fields.
    pub fn write_report<T: Serialize>(&self, name: &str, body: &T) -> Result<(), Failure> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(&Report {
            header: &self.header,
            body,
        })
        .map_err(|e| io(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io(&path, e))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        let path = self.path(name);
        let mut text = serde_json::to_string(value).map_err(|e| io(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io(&path, e))
    }

    pub fn write_jsonl<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io(&path, e))?;
        let mut w = BufWriter::new(file);
        for row in rows {
            serde_json::to_writer(&mut w, row).map_err(|e| io(&path, e))?;
            w.write_all(b"\n").map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))
    }

    pub fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
        for row in rows {
            w.serialize(row).map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))
    }
}
