//! On-disk layout of a training run.
//!
//! ```text
//! <run>/metrics.csv            one row per generation
//! <run>/traces-gen<G>.jsonl    every turn of generation G
//! <run>/zeta-gen<G>.csv        probe sweep of generation G
//! <run>/ckpt-gen<G>-{a,b}.bin  policy checkpoints
//! <run>/reward.svg, zeta.svg   charts, written when the run finishes
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use super::chart::{render_chart, BarSeries, ChartData};
use super::checkpoint::save_checkpoint;
use super::format::sig6;
use super::metrics::{MetricsRow, MetricsWriter};
use super::trace::TraceWriter;
use crate::env::{Agent, EpisodeTrace};
use crate::error::{Error, Result};
use crate::policy::PolicyParams;
use crate::probe::{ProbeSpec, ZetaMatrix};
use crate::trainer::{GenerationReport, TrainObserver};

pub fn traces_path(dir: &Path, generation: u32) -> PathBuf {
    dir.join(format!("traces-gen{generation}.jsonl"))
}

pub fn checkpoint_path(dir: &Path, generation: u32, agent: Agent) -> PathBuf {
    dir.join(format!("ckpt-gen{generation}-{}.bin", agent.label()))
}

pub fn zeta_path(dir: &Path, generation: u32) -> PathBuf {
    dir.join(format!("zeta-gen{generation}.csv"))
}

/// `agent,n,d,zeta` rows, agent A first.
pub fn write_zeta_csv(matrix: &ZetaMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("agent,n,d,zeta\n");
    for agent in Agent::BOTH {
        for e in &matrix.entries[agent.index()] {
            text.push_str(&format!("{},{},{},{}\n", agent.label(), e.n, sig6(e.d), sig6(e.zeta)));
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// ζ averaged over several sweeps, per agent, in grid order.
pub fn average_zeta(matrices: &[ZetaMatrix]) -> Option<[Vec<f64>; 2]> {
    let first = matrices.first()?;
    let mut sums = [vec![0.0; first.entries[0].len()], vec![0.0; first.entries[1].len()]];
    for m in matrices {
        for (sum, entries) in sums.iter_mut().zip(&m.entries) {
            for (s, e) in sum.iter_mut().zip(entries) {
                *s += e.zeta;
            }
        }
    }
    let k = matrices.len() as f64;
    Some(sums.map(|v| v.into_iter().map(|s| s / k).collect()))
}

/// Bar chart data: one group per n, one bar per (agent, d).
pub fn zeta_chart(spec: &ProbeSpec, averages: &[Vec<f64>; 2]) -> ChartData {
    let categories = spec.n_values.iter().map(|n| n.to_string()).collect();
    let mut series = Vec::new();
    for agent in Agent::BOTH {
        for (k, d) in spec.d_values.iter().enumerate() {
            let offset = k * spec.n_values.len();
            series.push(BarSeries {
                label: format!("agent {} d={}", agent.label(), sig6(*d)),
                values: averages[agent.index()][offset..offset + spec.n_values.len()].to_vec(),
            });
        }
    }
    ChartData::ZetaBars { categories, series }
}

/// Writes every training output into one directory.
pub struct RunDirectory {
    dir: PathBuf,
    spec: ProbeSpec,
    metrics: MetricsWriter,
    rewards: Vec<(f64, f64)>,
    zetas: Vec<ZetaMatrix>,
}

impl RunDirectory {
    pub fn create(dir: impl AsRef<Path>, spec: &ProbeSpec) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let metrics = MetricsWriter::create(dir.join("metrics.csv"), spec)?;
        Ok(Self {
            dir,
            spec: spec.clone(),
            metrics,
            rewards: Vec::new(),
            zetas: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))
    }
}

impl TrainObserver for RunDirectory {
    fn on_generation(
        &mut self,
        report: &GenerationReport,
        zeta: Option<&ZetaMatrix>,
        traces: Option<&[EpisodeTrace]>,
    ) -> Result<()> {
        let g = report.generation;
        if let Some(traces) = traces {
            let mut w = TraceWriter::create(traces_path(&self.dir, g))?;
            for (e, t) in traces.iter().enumerate() {
                w.write_episode(g, e as u64, t)?;
            }
        }
        if let Some(m) = zeta {
            write_zeta_csv(m, zeta_path(&self.dir, g))?;
            self.zetas.push(m.clone());
        }
        self.metrics.append(&MetricsRow::new(report, zeta, &self.spec))?;
        self.rewards.push((f64::from(g), report.mean_episode_reward));
        Ok(())
    }

    fn on_checkpoint(&mut self, generation: u32, params: [&PolicyParams; 2]) -> Result<()> {
        for agent in Agent::BOTH {
            save_checkpoint(params[agent.index()], checkpoint_path(&self.dir, generation, agent))?;
        }
        Ok(())
    }

    fn on_finish(&mut self, _error: Option<&str>) -> Result<()> {
        render_chart(
            &ChartData::RewardCurve {
                points: self.rewards.clone(),
            },
            self.dir.join("reward.svg"),
        )?;
        if let Some(avg) = average_zeta(&self.zetas) {
            render_chart(&zeta_chart(&self.spec, &avg), self.dir.join("zeta.svg"))?;
        }
        Ok(())
    }
}
