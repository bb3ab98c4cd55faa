//! Scripted policies playing each other: the game's reward structure without any learning.
//!
//! ```bash
//! cargo run --release --example play_baselines
//! ```

use stubborn::cli::evaluate;
use stubborn::{EnvConfig, PolicySpec};

fn main() -> stubborn::Result<()> {
    let policies = [
        PolicySpec::AlwaysLeft,
        PolicySpec::UniformRandom,
        PolicySpec::GreedyEstimate,
        PolicySpec::ThresholdStubborn { k: 1, margin: 0.0 },
        PolicySpec::ThresholdStubborn { k: 3, margin: 2.0 },
    ];
    for handicap in [0.0, 2.0, 5.0] {
        let env = EnvConfig::default().with_handicaps(handicap, handicap);
        println!("handicap {handicap}");
        println!("  {:<22} {:<22} {:>8} {:>9} {:>7}", "agent a", "agent b", "episode", "skirmish", "agree");
        for a in &policies {
            for b in &policies {
                let s = evaluate(&env, a, b, 500, 42, None)?;
                println!(
                    "  {:<22} {:<22} {:>8.1} {:>9.3} {:>7.3}",
                    a.name(),
                    b.name(),
                    s.mean_episode_reward,
                    s.mean_skirmish_reward,
                    s.agreement_rate
                );
            }
        }
    }
    Ok(())
}
