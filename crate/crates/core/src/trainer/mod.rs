//! Self-play training of two independent learned policies.
//!
//! Each generation both agents play `episodes_per_generation` fresh episodes against each
//! other, then each agent runs its own clipped-surrogate update on its own experience.

mod gae;
mod ppo;
mod rollout;

pub use gae::{advantages, gae, normalize, Advantages, VARIANCE_FLOOR};
pub use ppo::{minibatch_loss, update, Adam, LossReport};
pub use rollout::{collect, Collected, RolloutBatch, RolloutStats, Step};

use crate::env::{Agent, EnvConfig, EpisodeTrace};
use crate::error::{Error, Result};
use crate::policy::{FeatureLayout, Policy, PolicyParams, DEFAULT_HIDDEN};
use crate::probe::{zeta_sweep, ProbeContext, ProbeSpec, ZetaMatrix};
use crate::rng::{derive_seed, substream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub generations: u32,
    pub episodes_per_generation: u32,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub learning_rate: f64,
    pub epochs_per_generation: u32,
    pub minibatch_count: u32,
    pub entropy_coefficient: f64,
    pub value_coefficient: f64,
    pub hidden: usize,
    pub seeds: Vec<u64>,
    /// Worker threads for rollout collection; does not affect results.
    pub jobs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            generations: 300,
            episodes_per_generation: 16,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            learning_rate: 3e-4,
            epochs_per_generation: 4,
            minibatch_count: 4,
            entropy_coefficient: 0.01,
            value_coefficient: 0.5,
            hidden: DEFAULT_HIDDEN,
            seeds: vec![0],
            jobs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&str, bool, &str); 11] = [
            ("train.generations", self.generations >= 1, "must be >= 1"),
            ("train.episodes_per_generation", self.episodes_per_generation >= 1, "must be >= 1"),
            ("train.gamma", self.gamma > 0.0 && self.gamma <= 1.0, "must be in (0, 1]"),
            ("train.gae_lambda", (0.0..=1.0).contains(&self.gae_lambda), "must be in [0, 1]"),
            ("train.clip", self.clip > 0.0, "must be > 0"),
            ("train.learning_rate", self.learning_rate > 0.0 && self.learning_rate.is_finite(), "must be > 0"),
            ("train.epochs_per_generation", self.epochs_per_generation >= 1, "must be >= 1"),
            ("train.minibatch_count", self.minibatch_count >= 1, "must be >= 1"),
            ("train.entropy_coefficient", self.entropy_coefficient >= 0.0 && self.entropy_coefficient.is_finite(), "must be >= 0"),
            ("train.value_coefficient", self.value_coefficient >= 0.0 && self.value_coefficient.is_finite(), "must be >= 0"),
            ("train.hidden", self.hidden >= 1, "must be >= 1"),
        ];
        for (key, ok, msg) in checks {
            if !ok {
                return Err(Error::config(key, msg));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::config("train.seeds", "at least one seed is required"));
        }
        Ok(())
    }
}

/// How often optional outputs are produced. An interval of 0 disables that output; the final
/// generation always gets a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub probe_interval: u32,
    pub checkpoint_interval: u32,
    pub trace_interval: u32,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            probe_interval: 1,
            checkpoint_interval: 50,
            trace_interval: 1,
        }
    }
}

fn due(interval: u32, generation: u32) -> bool {
    interval != 0 && generation.is_multiple_of(interval)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub generation: u32,
    pub mean_episode_reward: f64,
    pub mean_skirmish_length: f64,
    pub agreement_rate: f64,
    /// Indexed by [`Agent::index`].
    pub losses: [LossReport; 2],
}

/// Receives training outputs as they are produced.
pub trait TrainObserver {
    fn on_generation(
        &mut self,
        report: &GenerationReport,
        zeta: Option<&ZetaMatrix>,
        traces: Option<&[EpisodeTrace]>,
    ) -> Result<()>;

    fn on_checkpoint(&mut self, generation: u32, params: [&PolicyParams; 2]) -> Result<()>;

    /// Called once after the last generation, or after a failed one with the error message.
    fn on_finish(&mut self, _error: Option<&str>) -> Result<()> {
        Ok(())
    }
}

/// Observer that keeps nothing.
impl TrainObserver for () {
    fn on_generation(&mut self, _: &GenerationReport, _: Option<&ZetaMatrix>, _: Option<&[EpisodeTrace]>) -> Result<()> {
        Ok(())
    }

    fn on_checkpoint(&mut self, _: u32, _: [&PolicyParams; 2]) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub reports: Vec<GenerationReport>,
    pub zetas: Vec<ZetaMatrix>,
    pub params: [PolicyParams; 2],
}

pub fn feature_layout(env: &EnvConfig) -> FeatureLayout {
    FeatureLayout {
        strict: env.strict_observation,
        handicap: env.observe_own_handicap,
    }
}

/// Freshly initialized parameters for both agents of a run.
pub fn initial_params(env: &EnvConfig, train: &TrainConfig, seed: u64) -> [PolicyParams; 2] {
    let layout = feature_layout(env);
    let scale = env.reward_low.abs().max(env.reward_high.abs());
    Agent::BOTH.map(|agent| {
        let mut rng = substream(derive_seed(seed, agent.index() as u64), Stream::Init);
        PolicyParams::init(layout, scale, env.turns_per_episode, train.hidden, &mut rng)
    })
}

/// Seed of generation `g` within run `seed`.
pub fn generation_seed(seed: u64, generation: u32) -> u64 {
    derive_seed(derive_seed(seed, 0x0067_656e), u64::from(generation))
}

/// Train both agents for `train.generations` generations from `seed`.
pub fn train(
    env: &EnvConfig,
    train: &TrainConfig,
    probe: &ProbeSpec,
    schedule: Schedule,
    seed: u64,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome> {
    env.validate()?;
    train.validate()?;
    probe.validate()?;
    let result = run(env, train, probe, schedule, seed, observer);
    match &result {
        Ok(_) => observer.on_finish(None)?,
        Err(e) => {
            // the original error is more useful than a secondary flush failure
            let _ = observer.on_finish(Some(&e.to_string()));
        }
    }
    result
}

fn run(
    env: &EnvConfig,
    train: &TrainConfig,
    probe: &ProbeSpec,
    schedule: Schedule,
    seed: u64,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome> {
    let mut params = initial_params(env, train, seed);
    let mut optimizers = [Adam::new(params[0].len()), Adam::new(params[1].len())];
    let mut shuffles = [
        substream(seed, Stream::ShuffleA),
        substream(seed, Stream::ShuffleB),
    ];
    let contexts = Agent::BOTH.map(|a| ProbeContext::for_agent(env, a));
    let mut reports = Vec::with_capacity(train.generations as usize);
    let mut zetas = Vec::new();

    for g in 0..train.generations {
        let collected = collect(env, train, &params[0], &params[1], generation_seed(seed, g))?;
        let mut losses = [LossReport::default(); 2];
        for i in 0..2 {
            let adv = advantages(&collected.batches[i], train.gamma, train.gae_lambda)?;
            let (next, loss) = update(
                &params[i],
                &mut optimizers[i],
                &collected.batches[i],
                &adv,
                train,
                &mut shuffles[i],
            )?;
            params[i] = next;
            losses[i] = loss;
        }
        let report = GenerationReport {
            generation: g,
            mean_episode_reward: collected.stats.mean_episode_reward,
            mean_skirmish_length: collected.stats.mean_skirmish_length,
            agreement_rate: collected.stats.agreement_rate,
            losses,
        };
        let zeta = if due(schedule.probe_interval, g) {
            let pair: [&dyn Policy; 2] = [&params[0], &params[1]];
            Some(zeta_sweep(pair, probe, &contexts, g)?)
        } else {
            None
        };
        let traces = due(schedule.trace_interval, g).then_some(collected.traces.as_slice());
        observer.on_generation(&report, zeta.as_ref(), traces)?;
        if due(schedule.checkpoint_interval, g) || g + 1 == train.generations {
            observer.on_checkpoint(g, [&params[0], &params[1]])?;
        }
        reports.push(report);
        zetas.extend(zeta);
    }
    Ok(TrainOutcome {
        reports,
        zetas,
        params,
    })
}
