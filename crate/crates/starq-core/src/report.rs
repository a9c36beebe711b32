//! Run artifacts: deterministic CSV/JSON writers, the run manifest, and
//! the fixed-order reduction helper that keeps parallel results
//! independent of the worker count.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Manifest written next to every command's outputs. Re-running with the
/// same inputs (and seed) reproduces the referenced files byte-for-byte.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub device: String,
    pub seed: u64,
    pub tool_version: String,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
    pub config_hash: String,
}

impl RunManifest {
    pub fn new(command: &str, device: &str, seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update(device.as_bytes());
        hasher.update(seed.to_le_bytes());
        Self {
            command: command.to_string(),
            device: device.to_string(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_s: 0.0,
            outputs: Vec::new(),
            config_hash: format!("{:x}", hasher.finalize()),
        }
    }

    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self).expect("serializable"))?;
        Ok(path)
    }
}

/// Write a CSV with a header row; cells use the shortest round-trip
/// float formatting, so bodies are byte-stable across runs and worker
/// counts.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(f, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value).expect("serializable"))
}

/// Pairwise-tree summation in index order: the reduction tree depends
/// only on the element count, never on scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let seq: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - seq).abs() < 1e-9);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[3.5]), 3.5);
    }

    #[test]
    fn csv_bodies_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 0.1 + 0.2], vec![-3.25, 1e-12]];
        write_csv(&p1, &["x", "y"], rows.clone()).unwrap();
        write_csv(&p2, &["x", "y"], rows).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }
}
