//! Output writers: CSV tables with a seed/config stamp, the metadata
//! header, and deterministic float formatting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::json;

use crate::config::ResolvedConfig;

/// Floats are printed in scientific notation with 17 significant digits,
/// enough to round-trip any f64 bit pattern.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV cell.
pub enum Cell {
    Uint(u64),
    Float(f64),
    Str(String),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Uint(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Uint(v as u64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Uint(v) => v.to_string(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Str(v) => v.clone(),
        }
    }
}

/// Tracks every file written so a failed run can remove its partial
/// outputs.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
    stamp: String,
    seed: u64,
    hash: String,
}

impl OutputDir {
    pub fn new(dir: &Path, config: &ResolvedConfig) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            stamp: format!("# alloctrack seed={} config={}", config.seed, config.hash),
            seed: config.seed,
            hash: config.hash.clone(),
        })
    }

    pub fn write_metadata(&mut self, config: &ResolvedConfig, threads: usize) -> Result<PathBuf> {
        let meta = json!({
            "config": serde_json::from_str::<serde_json::Value>(&config.canonical)?,
            "config_hash": config.hash,
            "seed": config.seed,
            "rng_algorithm": alloctrack::RNG_ALGORITHM_ID,
            "library_version": env!("CARGO_PKG_VERSION"),
            "threads": threads,
        });
        let path = self.dir.join("metadata.json");
        let mut file = fs::File::create(&path)?;
        // serde_json sorts object keys, so reruns emit identical bytes.
        writeln!(file, "{}", serde_json::to_string_pretty(&meta)?)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<Cell>],
    ) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut out = String::new();
        out.push_str(&self.stamp);
        out.push('\n');
        out.push_str(&header.join(","));
        out.push('\n');
        for row in rows {
            let rendered: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&rendered.join(","));
            out.push('\n');
        }
        fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_jsonl<T: serde::Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut file = fs::File::create(&path)?;
        writeln!(
            file,
            "{}",
            json!({ "alloctrack": { "seed": self.seed, "config": self.hash } })
        )?;
        for row in rows {
            writeln!(file, "{}", serde_json::to_string(row)?)?;
        }
        self.written.push(path.clone());
        Ok(path)
    }

    /// Remove everything written so far (used on failure).
    pub fn discard(&mut self) {
        for path in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.written
    }
}
