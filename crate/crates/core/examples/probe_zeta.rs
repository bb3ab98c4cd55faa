//! ζ(n, d): how likely an agent is to keep its preferred side after n turns of disagreement.
//!
//! Calibrates the probe on scripted policies, then measures a briefly trained pair in both
//! base modes and with the mirrored probe.
//!
//! ```bash
//! cargo run --release --example probe_zeta
//! ```

use stubborn::probe::{BaseMode, ProbeContext};
use stubborn::{measure_zeta, train, Agent, EnvConfig, Policy, PolicySpec, ProbeSpec, Schedule, TrainConfig};

fn row(policy: &dyn Policy, spec: &ProbeSpec, ctx: &ProbeContext, d: f64) -> stubborn::Result<String> {
    let mut cells = Vec::new();
    for n in 0..5 {
        cells.push(format!("{:.3}", measure_zeta(policy, n, d, spec, ctx)?));
    }
    Ok(cells.join("  "))
}

fn main() -> stubborn::Result<()> {
    let env = EnvConfig::default();
    let ctx = ProbeContext::for_agent(&env, Agent::A);
    let symmetric = ProbeSpec::default();

    println!("scripted policies, d = 5, n = 0..4");
    for p in [
        PolicySpec::GreedyEstimate,
        PolicySpec::UniformRandom,
        PolicySpec::ThresholdStubborn { k: 2, margin: 0.0 },
    ] {
        println!("  {:<22} {}", p.name(), row(&p, &symmetric, &ctx, 5.0)?);
    }

    let config = TrainConfig {
        generations: 150,
        ..TrainConfig::default()
    };
    let no_probe = Schedule {
        probe_interval: 0,
        checkpoint_interval: 0,
        trace_interval: 0,
    };
    let outcome = train(&env, &config, &symmetric, no_probe, 3, &mut ())?;
    let agent_a = &outcome.params[0];

    let averaged = ProbeSpec {
        base_mode: BaseMode::Averaged { samples: 64 },
        ..ProbeSpec::default()
    };
    let mirrored = ProbeSpec {
        mirror: true,
        ..ProbeSpec::default()
    };
    println!("learned agent a after {} generations", config.generations);
    for d in [1.0, 3.0, 5.0] {
        println!("  symmetric d={d}  {}", row(agent_a, &symmetric, &ctx, d)?);
        println!("  averaged  d={d}  {}", row(agent_a, &averaged, &ctx, d)?);
        println!("  mirrored  d={d}  {}", row(agent_a, &mirrored, &ctx, d)?);
    }
    Ok(())
}
