//! Per-generation metrics CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::format::sig6;
use crate::error::{Error, Result};
use crate::probe::{grid, ProbeSpec, ZetaMatrix};
use crate::trainer::GenerationReport;

pub const FIXED_COLUMNS: [&str; 8] = [
    "generation",
    "mean_episode_reward",
    "mean_skirmish_length",
    "agreement_rate",
    "loss_a",
    "loss_b",
    "entropy_a",
    "entropy_b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub generation: u32,
    pub mean_episode_reward: f64,
    pub mean_skirmish_length: f64,
    pub agreement_rate: f64,
    pub loss_a: f64,
    pub loss_b: f64,
    pub entropy_a: f64,
    pub entropy_b: f64,
    /// Agent A's grid then agent B's, in [`grid`] order; `None` on generations without a probe.
    pub zeta: Vec<Option<f64>>,
}

impl MetricsRow {
    pub fn new(report: &GenerationReport, zeta: Option<&ZetaMatrix>, spec: &ProbeSpec) -> Self {
        let cells = grid(spec).len() * 2;
        let zeta = match zeta {
            Some(m) => m.entries.iter().flatten().map(|e| Some(e.zeta)).collect(),
            None => vec![None; cells],
        };
        Self {
            generation: report.generation,
            mean_episode_reward: report.mean_episode_reward,
            mean_skirmish_length: report.mean_skirmish_length,
            agreement_rate: report.agreement_rate,
            loss_a: report.losses[0].total,
            loss_b: report.losses[1].total,
            entropy_a: report.losses[0].entropy,
            entropy_b: report.losses[1].entropy,
            zeta,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut cells = vec![
            self.generation.to_string(),
            sig6(self.mean_episode_reward),
            sig6(self.mean_skirmish_length),
            sig6(self.agreement_rate),
            sig6(self.loss_a),
            sig6(self.loss_b),
            sig6(self.entropy_a),
            sig6(self.entropy_b),
        ];
        cells.extend(self.zeta.iter().map(|z| z.map(sig6).unwrap_or_default()));
        cells.join(",")
    }
}

/// Column name for ζ(n, d) of `agent` ("a" or "b").
pub fn zeta_column(agent: &str, n: u32, d: f64) -> String {
    format!("zeta_{agent}_n{n}_d{}", sig6(d))
}

pub fn metrics_header(spec: &ProbeSpec) -> String {
    let mut cols: Vec<String> = FIXED_COLUMNS.iter().map(|c| c.to_string()).collect();
    for agent in ["a", "b"] {
        cols.extend(grid(spec).into_iter().map(|(n, d)| zeta_column(agent, n, d)));
    }
    cols.join(",")
}

/// Streams rows into `metrics.csv`, flushing after each.
pub struct MetricsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl MetricsWriter {
    pub fn create(path: impl AsRef<Path>, spec: &ProbeSpec) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = Self {
            path,
            out: BufWriter::new(file),
        };
        w.line(&metrics_header(spec))?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn append(&mut self, row: &MetricsRow) -> Result<()> {
        self.line(&row.to_csv())
    }
}

pub fn write_metrics(rows: &[MetricsRow], spec: &ProbeSpec, path: impl AsRef<Path>) -> Result<()> {
    let mut w = MetricsWriter::create(path, spec)?;
    rows.iter().try_for_each(|r| w.append(r))
}

/// A metrics file read back as text cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl MetricsTable {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header: Vec<String> = match lines.next() {
            Some(line) => line
                .map_err(|e| Error::io(path, e))?
                .split(',')
                .map(str::to_string)
                .collect(),
            None => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    message: "empty metrics file".into(),
                })
            }
        };
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let cells: Vec<String> = line.split(',').map(str::to_string).collect();
            if cells.len() != header.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    message: format!("row {} has {} cells, header has {}", i + 1, cells.len(), header.len()),
                });
            }
            rows.push(cells);
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Cell of `name` in the row whose generation is `generation`.
    pub fn cell(&self, generation: u32, name: &str) -> Option<&str> {
        let col = self.column(name)?;
        let gen = generation.to_string();
        self.rows
            .iter()
            .find(|r| r[0] == gen)
            .map(|r| r[col].as_str())
    }
}
