//! Traces, metrics, checkpoints and charts: write them, read them back, verify.
//!
//! ```bash
//! cargo run --release --example telemetry_roundtrip
//! ```

use stubborn::telemetry::{
    load_checkpoint, read_traces, render_chart, summarize, verify, ChartData, MetricsTable, RunDirectory,
};
use stubborn::{train, Agent, EnvConfig, Policy, ProbeSpec, Schedule, TrainConfig};

fn main() -> stubborn::Result<()> {
    let dir = std::env::temp_dir().join("stubborn-telemetry-example");
    let _ = std::fs::remove_dir_all(&dir);
    let env = EnvConfig::default();
    let config = TrainConfig {
        generations: 12,
        episodes_per_generation: 8,
        ..TrainConfig::default()
    };
    let probe = ProbeSpec::default();
    let schedule = Schedule {
        checkpoint_interval: 5,
        ..Schedule::default()
    };
    let mut run = RunDirectory::create(&dir, &probe)?;
    let outcome = train(&env, &config, &probe, schedule, 4, &mut run)?;

    let mut records = Vec::new();
    for g in 0..config.generations {
        records.extend(read_traces(dir.join(format!("traces-gen{g}.jsonl")))?);
    }
    let summaries = summarize(&records);
    let table = MetricsTable::read(dir.join("metrics.csv"))?;
    let problems = verify(&summaries, &table);
    println!("{} trace lines, {} generations, {} mismatches", records.len(), summaries.len(), problems.len());

    let last = config.generations - 1;
    let restored = load_checkpoint(dir.join(format!("ckpt-gen{last}-a.bin")))?;
    let obs = stubborn::EpisodeState::new(&env, 99)?.observe(Agent::A)?;
    println!(
        "checkpoint p_left {} vs in-memory {}",
        restored.dist(&obs)?.p_left,
        outcome.params[0].dist(&obs)?.p_left
    );

    let points = outcome
        .reports
        .iter()
        .map(|r| (f64::from(r.generation), r.agreement_rate))
        .collect();
    render_chart(&ChartData::RewardCurve { points }, dir.join("agreement.svg"))?;
    println!("files in {}", dir.display());
    Ok(())
}
