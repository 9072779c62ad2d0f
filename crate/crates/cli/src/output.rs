//! Tables, number formatting and atomic report files.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use griffith_core::energy::Energy;
use serde::{Deserialize, Serialize};

/// 17 significant digits, "INF" for +∞; NaN never reaches a report.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v == f64::INFINITY {
        "INF".into()
    } else if v == f64::NEG_INFINITY {
        "-INF".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn energy(e: Energy) -> String {
    match e {
        Energy::Finite(v) => num(v),
        Energy::Infinite => "INF".into(),
    }
}

/// A CSV table whose last column records the row status.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub flagged: usize,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut header: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
        header.push("status".into());
        Self { header, rows: Vec::new(), flagged: 0 }
    }

    /// Appends a row; a `Some` reason flags it. A NaN cell flags the row and is blanked.
    pub fn push(&mut self, mut cells: Vec<String>, flag: Option<String>) {
        assert_eq!(cells.len() + 1, self.header.len(), "row width");
        let mut flag = flag;
        for c in cells.iter_mut().filter(|c| c.as_str() == "NaN") {
            c.clear();
            flag.get_or_insert_with(|| "non-finite value".into());
        }
        if flag.is_some() {
            self.flagged += 1;
        }
        cells.push(flag.map_or_else(|| "ok".into(), |f| format!("flagged: {f}")));
        self.rows.push(cells);
    }

    /// A row that could not be computed; the leading cells identify it.
    pub fn push_error(&mut self, lead: Vec<String>, err: impl std::fmt::Display) {
        let width = self.header.len() - 1;
        let mut cells = lead;
        cells.resize(width, String::new());
        self.push(cells, Some(format!("error: {err}")));
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub rows: usize,
    pub flagged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub experiment: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub outputs: Vec<OutputFile>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn flagged(&self) -> usize {
        self.outputs.iter().map(|o| o.flagged).sum()
    }
}

/// Collects the files of one run under `dir`.
#[derive(Debug)]
pub struct Reporter {
    pub dir: PathBuf,
    pub outputs: Vec<OutputFile>,
}

impl Reporter {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), outputs: Vec::new() }
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, &table.to_csv()?)?;
        self.outputs.push(OutputFile { path, rows: table.rows.len(), flagged: table.flagged });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        self.outputs.push(OutputFile { path, rows: 0, flagged: 0 });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_at_full_precision() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::INFINITY), "INF");
        assert_eq!(energy(Energy::Infinite), "INF");
    }

    #[test]
    fn nan_cells_flag_their_row() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(1.0), num(f64::NAN)], None);
        t.push(vec![num(1.0), num(2.0)], None);
        assert_eq!(t.flagged, 1);
        assert_eq!(t.rows[0][1], "");
        assert!(t.rows[0][2].starts_with("flagged"));
        assert_eq!(t.rows[1][2], "ok");
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
