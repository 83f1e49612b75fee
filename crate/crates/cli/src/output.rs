use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Written next to the outputs of every run. Re-running `argv` reproduces
/// the outputs byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub duration_secs: f64,
}

pub const MANIFEST: &str = "manifest.json";

/// 17 significant digits, enough for a lossless round trip.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Collects the outputs of one command: files under `dir` when given,
/// stdout otherwise.
pub struct Sink {
    dir: Option<PathBuf>,
    format: Format,
    written: Vec<PathBuf>,
    started: Instant,
}

impl Sink {
    pub fn new(dir: Option<&Path>, format: Format) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).with_context(|| format!("cannot create output directory {}", d.display()))?;
        }
        Ok(Sink { dir: dir.map(Path::to_path_buf), format, written: Vec::new(), started: Instant::now() })
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    fn emit(&mut self, file: String, body: String) -> Result<()> {
        match &self.dir {
            Some(d) => {
                let path = d.join(&file);
                fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
                self.written.push(path);
            }
            None => print!("{body}"),
        }
        Ok(())
    }

    /// A JSON document, whatever `--format` says.
    pub fn json<T: Serialize + ?Sized>(&mut self, stem: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.emit(format!("{stem}.json"), body)
    }

    /// Rows as CSV with `header`, or as a JSON array of the row structs.
    pub fn table<T: Serialize>(
        &mut self,
        stem: &str,
        header: &str,
        rows: &[T],
        csv: impl Fn(&T) -> String,
    ) -> Result<()> {
        match self.format {
            Format::Json => self.json(stem, rows),
            Format::Csv => {
                let mut body = format!("{header}\n");
                for r in rows {
                    body.push_str(&csv(r));
                    body.push('\n');
                }
                self.emit(format!("{stem}.csv"), body)
            }
        }
    }

    /// Writes the manifest when outputs went to a directory.
    pub fn finish(self, command: &str, argv: Vec<String>, config: serde_json::Value, seed: u64) -> Result<()> {
        let Some(dir) = self.dir else { return Ok(()) };
        let manifest = RunManifest {
            command: command.to_string(),
            argv,
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.written,
            duration_secs: self.started.elapsed().as_secs_f64(),
        };
        let path = dir.join(MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
    }
}
