//! Simulation lab for the Stubborn game, a two-agent fully cooperative game in which the
//! agents hold different noisy estimates of the same two rewards and must agree on one.
//!
//! - [`env`]: the game itself, seeded and deterministic.
//! - [`policy`]: scripted baselines and a small learned network policy.
//! - [`trainer`]: self-play training of two independent learners with a clipped-surrogate
//!   policy-gradient update.
//! - [`probe`]: the ζ(n, d) stubbornness measurement.
//! - [`telemetry`]: traces, metrics, checkpoints and SVG charts.
//! - [`cli`]: the `stubborn` command-line driver.
//!
//! Runnable walkthroughs live in `examples/`, one per capability:
//!
//! - `step_loop`: drive [`EpisodeState`] by hand and watch skirmishes resolve.
//! - `play_baselines`: every scripted policy pair at several handicaps.
//! - `train_selfplay`: a full training run writing traces, metrics, checkpoints and charts.
//! - `probe_zeta`: probe calibration on scripted policies, then ζ of a trained agent in
//!   symmetric, averaged and mirrored modes.
//! - `gradient_check`: analytic policy gradients against finite differences.
//! - `handicap_variant`: unequal and randomized handicaps with observed own handicap.
//! - `telemetry_roundtrip`: write run outputs, read them back and verify them.
//!
//! ```bash
//! cargo run --release --example train_selfplay -- 300 run
//! cargo run --release -- analyze --run run
//! ```

pub mod cli;
pub mod env;
pub mod error;
pub mod policy;
pub mod probe;
pub mod rng;
pub mod telemetry;
pub mod trainer;

pub use env::{run_episode, Action, Agent, EnvConfig, EpisodeState, HandicapMode, Observation, TurnEvent, TurnOutcome};
pub use error::{Error, Result};
pub use policy::{ActionDistribution, Policy, PolicyParams, PolicySpec};
pub use probe::{measure_zeta, zeta_sweep, ProbeSpec, ZetaMatrix};
pub use trainer::{train, GenerationReport, Schedule, TrainConfig};
