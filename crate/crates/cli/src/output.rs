//! Output directory handling. Every run writes `config.resolved.toml`, and
//! every JSON report carries the artifact version and the config hash.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Output {
    dir: PathBuf,
    formats: Vec<Format>,
    pub config_hash: String,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    version: &'static str,
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

impl Output {
    pub fn create(cfg: &RunConfig) -> Result<Self, CliError> {
        let dir = cfg.output.directory.clone();
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("config.resolved.toml"), cfg.resolved_toml())?;
        Ok(Output { dir, formats: cfg.output.formats.clone(), config_hash: cfg.hash() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// JSON report stamped with version and config hash; also returned as
    /// a string for printing.
    pub fn report<T: Serialize>(&self, name: &str, body: &T) -> Result<String, CliError> {
        let text = serde_json::to_string_pretty(&Stamped { version: VERSION, config_hash: &self.config_hash, body })?;
        if self.wants(Format::Json) {
            fs::write(self.dir.join(name), format!("{text}\n"))?;
        }
        Ok(text)
    }

    /// Buffered writer for a table or event stream, if its format is enabled.
    pub fn writer(&self, name: &str, format: Format) -> Result<Option<BufWriter<fs::File>>, CliError> {
        if !self.wants(format) {
            return Ok(None);
        }
        Ok(Some(BufWriter::new(fs::File::create(self.dir.join(name))?)))
    }

    /// Writes a CSV table with a header row.
    pub fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let Some(mut w) = self.writer(name, Format::Csv)? else {
            return Ok(());
        };
        writeln!(w, "{}", header.join(","))?;
        for r in rows {
            writeln!(w, "{}", r.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-tripping decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
