//! Unequal and randomized handicaps, with each agent seeing its own.
//!
//! Trains a pair where handicaps are redrawn every episode and reports how stubborn each
//! learned agent is when it believes its estimates are good versus poor.
//!
//! ```bash
//! cargo run --release --example handicap_variant
//! ```

use stubborn::cli::evaluate;
use stubborn::probe::ProbeContext;
use stubborn::{
    measure_zeta, train, Agent, EnvConfig, HandicapMode, PolicySpec, ProbeSpec, Schedule, TrainConfig,
};

fn main() -> stubborn::Result<()> {
    // fixed and unequal: the better-informed agent should lead
    let uneven = EnvConfig::default().with_handicaps(1.0, 6.0);
    let greedy = PolicySpec::GreedyEstimate;
    let leader = PolicySpec::ThresholdStubborn { k: 40, margin: 0.0 };
    let follower = PolicySpec::ThresholdStubborn { k: 0, margin: 0.0 };
    for (name, a, b) in [("greedy vs greedy", &greedy, &greedy), ("a leads, b follows", &leader, &follower), ("b leads, a follows", &follower, &leader)] {
        let s = evaluate(&uneven, a, b, 2000, 8, None)?;
        println!("handicaps (1, 6) {name:<20} episode {:>6.1}  skirmish {:.3}", s.mean_episode_reward, s.mean_skirmish_reward);
    }

    let env = EnvConfig {
        handicap_mode: HandicapMode::Randomized { min: 0.5, max: 6.0 },
        observe_own_handicap: true,
        ..EnvConfig::default()
    };
    let config = TrainConfig {
        generations: 150,
        ..TrainConfig::default()
    };
    let quiet = Schedule {
        probe_interval: 0,
        checkpoint_interval: 0,
        trace_interval: 0,
    };
    let spec = ProbeSpec::default();
    let outcome = train(&env, &config, &spec, quiet, 21, &mut ())?;
    let first = outcome.reports.first().map_or(0.0, |r| r.mean_episode_reward);
    let last = outcome.reports.last().map_or(0.0, |r| r.mean_episode_reward);
    println!("randomized handicaps: reward {first:.1} -> {last:.1} over {} generations", config.generations);

    for agent in Agent::BOTH {
        let policy = &outcome.params[agent.index()];
        for own in [0.5, 3.0, 6.0] {
            let ctx = ProbeContext {
                own_handicap: Some(own),
                ..ProbeContext::for_agent(&env, agent)
            };
            let zeta: Vec<String> = (0..5)
                .map(|n| measure_zeta(policy, n, 5.0, &spec, &ctx).map(|z| format!("{z:.3}")))
                .collect::<stubborn::Result<_>>()?;
            println!("agent {} own handicap {own:>3}: zeta(n, 5) = {}", agent.label(), zeta.join(" "));
        }
    }
    Ok(())
}
