//! Self-play training of two independent learners, writing a full run directory.
//!
//! ```bash
//! cargo run --release --example train_selfplay -- [generations] [out-dir]
//! cargo run --release -- analyze --run <out-dir>
//! ```

use stubborn::telemetry::RunDirectory;
use stubborn::{train, EnvConfig, ProbeSpec, Schedule, TrainConfig};

fn main() -> stubborn::Result<()> {
    let mut args = std::env::args().skip(1);
    let generations = args.next().map_or(100, |g| g.parse().expect("generations"));
    let out = args.next().unwrap_or_else(|| "run-selfplay".into());

    let env = EnvConfig::default();
    let config = TrainConfig {
        generations,
        ..TrainConfig::default()
    };
    let probe = ProbeSpec::default();
    let mut run = RunDirectory::create(&out, &probe)?;
    let outcome = train(&env, &config, &probe, Schedule::default(), 1, &mut run)?;

    for report in outcome.reports.iter().step_by((generations as usize / 10).max(1)) {
        println!(
            "gen {:>4}  reward {:>7.2}  skirmish length {:>5.2}  agreement {:.3}  entropy {:.3}/{:.3}",
            report.generation,
            report.mean_episode_reward,
            report.mean_skirmish_length,
            report.agreement_rate,
            report.losses[0].entropy,
            report.losses[1].entropy
        );
    }
    println!("outputs in {out}/ (metrics.csv, traces, checkpoints, reward.svg, zeta.svg)");
    Ok(())
}
