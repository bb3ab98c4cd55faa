//! Recompute metrics from traces and check them against a metrics file.

use std::collections::BTreeMap;

use super::format::sig6;
use super::metrics::MetricsTable;
use super::trace::TraceRecord;
use crate::env::EpisodeTrace;
use crate::trainer::RolloutStats;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSummary {
    pub generation: u32,
    pub episodes: usize,
    pub stats: RolloutStats,
    /// Skirmish length → count, trailing unfinished skirmishes included.
    pub skirmish_lengths: BTreeMap<u32, usize>,
}

/// Group records by generation and episode (both ascending) and summarize each generation.
pub fn summarize(records: &[TraceRecord]) -> Vec<GenerationSummary> {
    let mut episodes: BTreeMap<(u32, u64), Vec<&TraceRecord>> = BTreeMap::new();
    for r in records {
        episodes.entry((r.generation, r.episode_id)).or_default().push(r);
    }
    let mut by_generation: BTreeMap<u32, Vec<EpisodeTrace>> = BTreeMap::new();
    for ((generation, _), mut recs) in episodes {
        recs.sort_by_key(|r| r.turn_index);
        let turns: Vec<_> = recs.iter().map(|r| r.to_turn()).collect();
        let total_reward = turns.iter().fold(0.0, |acc, t| acc + t.reward);
        by_generation
            .entry(generation)
            .or_default()
            .push(EpisodeTrace { turns, total_reward });
    }
    by_generation
        .into_iter()
        .map(|(generation, traces)| {
            let mut skirmish_lengths = BTreeMap::new();
            for t in &traces {
                for len in t.skirmish_lengths() {
                    *skirmish_lengths.entry(len).or_insert(0) += 1;
                }
            }
            GenerationSummary {
                generation,
                episodes: traces.len(),
                stats: RolloutStats::from_traces(&traces),
                skirmish_lengths,
            }
        })
        .collect()
}

/// Columns recomputable from traces.
pub const CHECKED_COLUMNS: [&str; 3] = ["mean_episode_reward", "mean_skirmish_length", "agreement_rate"];

/// Compare recomputed statistics with the metrics file cell by cell, as formatted text.
/// Returns one message per mismatch.
pub fn verify(summaries: &[GenerationSummary], table: &MetricsTable) -> Vec<String> {
    let mut problems = Vec::new();
    for column in CHECKED_COLUMNS {
        if table.column(column).is_none() {
            problems.push(format!("metrics file has no `{column}` column"));
        }
    }
    if !problems.is_empty() {
        return problems;
    }
    for s in summaries {
        let expected = [
            sig6(s.stats.mean_episode_reward),
            sig6(s.stats.mean_skirmish_length),
            sig6(s.stats.agreement_rate),
        ];
        for (column, want) in CHECKED_COLUMNS.iter().zip(expected) {
            match table.cell(s.generation, column) {
                None => {
                    problems.push(format!("generation {}: no metrics row", s.generation));
                    break;
                }
                Some(got) if got != want => problems.push(format!(
                    "generation {}: {column} is {got} in metrics, {want} from traces",
                    s.generation
                )),
                Some(_) => {}
            }
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{run_episode, EnvConfig};
    use crate::policy::PolicySpec;

    fn records() -> Vec<TraceRecord> {
        let mut out = Vec::new();
        for g in 0..2u32 {
            for e in 0..3u64 {
                let t = run_episode(
                    &EnvConfig::default(),
                    u64::from(g) * 10 + e,
                    &PolicySpec::UniformRandom,
                    &PolicySpec::GreedyEstimate,
                    &mut (),
                )
                .unwrap();
                out.extend(t.turns.iter().map(|r| TraceRecord::from_turn(g, e, r)));
            }
        }
        out
    }

    #[test]
    fn summaries_per_generation() {
        let s = summarize(&records());
        assert_eq!(s.len(), 2);
        for g in &s {
            assert_eq!(g.episodes, 3);
            let turns: usize = g.skirmish_lengths.iter().map(|(len, c)| *len as usize * c).sum();
            assert_eq!(turns, 120);
        }
    }

    #[test]
    fn shuffled_input_gives_same_summary() {
        let recs = records();
        let mut rev = recs.clone();
        rev.reverse();
        assert_eq!(summarize(&recs), summarize(&rev));
    }
}
