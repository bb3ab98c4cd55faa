//! Experience collection with both learned policies in the loop.

use crate::env::{play_turn, Action, Agent, EnvConfig, EpisodeState, EpisodeTrace, TurnEvent};
use crate::error::{Error, Result};
use crate::policy::PolicyParams;
use crate::rng::derive_seed;

use super::TrainConfig;

/// One agent's view of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub features: Vec<f64>,
    pub action: Action,
    pub old_log_prob: f64,
    pub reward: f64,
    pub value: f64,
    /// Last step of its episode.
    pub done: bool,
}

/// Consecutive episodes of one agent's experience.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    steps: Vec<Step>,
}

impl RolloutBatch {
    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn episodes(&self) -> usize {
        self.steps.iter().filter(|s| s.done).count()
    }
}

/// Episode-level summary statistics shared by the trainer and the trace analyzer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutStats {
    pub mean_episode_reward: f64,
    pub mean_skirmish_length: f64,
    pub agreement_rate: f64,
}

impl RolloutStats {
    /// Summaries over traces, in the order given.
    ///
    /// Episode totals are summed turn by turn, then averaged in episode order, so the same
    /// traces always produce bit-identical statistics.
    pub fn from_traces<'a>(traces: impl IntoIterator<Item = &'a EpisodeTrace>) -> Self {
        let mut episodes = 0usize;
        let mut reward_sum = 0.0;
        let mut turns = 0usize;
        let mut agreements = 0usize;
        let mut skirmishes = 0usize;
        for trace in traces {
            let mut total = 0.0;
            for t in &trace.turns {
                total += t.reward;
                agreements += usize::from(t.event.is_agreement());
            }
            reward_sum += total;
            turns += trace.turns.len();
            skirmishes += trace.turns.last().map_or(0, |t| t.skirmish_index as usize + 1);
            episodes += 1;
        }
        let ratio = |a: f64, b: usize| if b == 0 { 0.0 } else { a / b as f64 };
        Self {
            mean_episode_reward: ratio(reward_sum, episodes),
            mean_skirmish_length: ratio(turns as f64, skirmishes),
            agreement_rate: ratio(agreements as f64, turns),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Collected {
    pub batches: [RolloutBatch; 2],
    pub stats: RolloutStats,
    pub traces: Vec<EpisodeTrace>,
}

fn play_episode(
    env: &EnvConfig,
    seed: u64,
    params: [&PolicyParams; 2],
) -> Result<(EpisodeTrace, [Vec<Step>; 2])> {
    let mut ep = EpisodeState::new(env, seed)?;
    let n = env.turns_per_episode as usize;
    let mut steps: [Vec<Step>; 2] = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut turns = Vec::with_capacity(n);
    while !ep.is_over() {
        let mut actions = [Action::Left; 2];
        for agent in Agent::BOTH {
            let i = agent.index();
            let obs = ep.observe(agent)?;
            let fwd = params[i].forward_obs(&obs)?;
            let log_probs = fwd.log_probs();
            let u: f64 = rand::Rng::random(ep.policy_rng(agent));
            let action = if u < log_probs[0].exp() {
                Action::Left
            } else {
                Action::Right
            };
            actions[i] = action;
            steps[i].push(Step {
                features: fwd.x,
                action,
                old_log_prob: log_probs[action.index()],
                reward: 0.0,
                value: fwd.value,
                done: false,
            });
        }
        let record = play_turn(&mut ep, actions[0], actions[1])?;
        let done = ep.is_over();
        for s in &mut steps {
            let last = s.last_mut().expect("step pushed this turn");
            last.reward = record.reward;
            last.done = done;
        }
        turns.push(record);
    }
    let trace = EpisodeTrace {
        turns,
        total_reward: ep.cumulative_reward(Agent::A),
    };
    Ok((trace, steps))
}

/// Run `episodes_per_generation` self-play episodes with both learned policies.
///
/// Episode `e` is seeded with `derive_seed(generation_seed, e)`. With `jobs > 1` episodes are
/// spread over worker threads; results are merged in episode order so the output does not
/// depend on `jobs`.
pub fn collect(
    env: &EnvConfig,
    train: &TrainConfig,
    params_a: &PolicyParams,
    params_b: &PolicyParams,
    generation_seed: u64,
) -> Result<Collected> {
    let count = train.episodes_per_generation as usize;
    let seeds: Vec<u64> = (0..count as u64).map(|e| derive_seed(generation_seed, e)).collect();
    let params = [params_a, params_b];
    let jobs = train.jobs.max(1).min(count.max(1));

    let results: Vec<Result<(EpisodeTrace, [Vec<Step>; 2])>> = if jobs <= 1 {
        seeds.iter().map(|&s| play_episode(env, s, params)).collect()
    } else {
        let chunk = count.div_ceil(jobs);
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || {
                        part.iter()
                            .map(|&s| play_episode(env, s, params))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("rollout worker panicked"))
                .collect()
        })
    };

    let mut batches = [RolloutBatch::default(), RolloutBatch::default()];
    let mut traces = Vec::with_capacity(count);
    for result in results {
        let (trace, steps) = result?;
        for (batch, agent_steps) in batches.iter_mut().zip(steps) {
            batch.steps.extend(agent_steps);
        }
        traces.push(trace);
    }
    if traces.is_empty() {
        return Err(Error::Contract("no episodes collected".into()));
    }
    debug_assert!(traces
        .iter()
        .all(|t| t.turns.iter().all(|r| r.event != TurnEvent::Disagree || r.reward == 0.0)));
    let stats = RolloutStats::from_traces(&traces);
    Ok(Collected {
        batches,
        stats,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::FeatureLayout;
    use crate::rng::{substream, Stream};
    use rand::Rng;

    fn zero_params(env: &EnvConfig) -> PolicyParams {
        PolicyParams::zeros(FeatureLayout::default(), env.reward_high, env.turns_per_episode, 8)
    }

    #[test]
    fn batch_sizes() {
        let env = EnvConfig::default();
        let train = TrainConfig::default();
        let p = zero_params(&env);
        let c = collect(&env, &train, &p, &p, 3).unwrap();
        for b in &c.batches {
            assert_eq!(b.len(), 640);
            assert_eq!(b.episodes(), 16);
        }
        assert_eq!(c.traces.len(), 16);
    }

    #[test]
    fn uniform_agreement_matches_coin_oracle() {
        // Zero networks act uniformly; a turn is an agreement exactly when both agents'
        // policy-stream draws fall on the same side of 0.5.
        let env = EnvConfig::default();
        let train = TrainConfig::default();
        let p = zero_params(&env);
        let gen_seed = 17;
        let c = collect(&env, &train, &p, &p, gen_seed).unwrap();
        let mut same = 0usize;
        let mut total = 0usize;
        for e in 0..16 {
            let seed = derive_seed(gen_seed, e);
            let mut ra = substream(seed, Stream::PolicyA);
            let mut rb = substream(seed, Stream::PolicyB);
            for _ in 0..40 {
                let a = ra.random::<f64>() < 0.5;
                let b = rb.random::<f64>() < 0.5;
                same += usize::from(a == b);
                total += 1;
            }
        }
        let oracle = same as f64 / total as f64;
        assert_eq!(c.stats.agreement_rate, oracle);
        assert!((oracle - 0.5).abs() <= 0.06);
    }

    #[test]
    fn job_count_does_not_change_results() {
        let env = EnvConfig::default();
        let mut rng = substream(4, Stream::Init);
        let pa = PolicyParams::init(FeatureLayout::default(), 10.0, 40, 8, &mut rng);
        let pb = PolicyParams::init(FeatureLayout::default(), 10.0, 40, 8, &mut rng);
        let serial = collect(&env, &TrainConfig::default(), &pa, &pb, 9).unwrap();
        let parallel = collect(&env, &TrainConfig { jobs: 3, ..TrainConfig::default() }, &pa, &pb, 9).unwrap();
        assert_eq!(serial.batches, parallel.batches);
        assert_eq!(serial.traces, parallel.traces);
        assert_eq!(serial.stats, parallel.stats);
    }

    #[test]
    fn stats_mean_reward_matches_trace_sums() {
        let env = EnvConfig::default();
        let p = zero_params(&env);
        let c = collect(&env, &TrainConfig::default(), &p, &p, 5).unwrap();
        let mut sum = 0.0;
        for t in &c.traces {
            sum += t.turns.iter().map(|r| r.reward).sum::<f64>();
        }
        assert!((c.stats.mean_episode_reward - sum / 16.0).abs() < 1e-9);
        for t in &c.traces {
            assert_eq!(t.total_reward, t.turns.iter().fold(0.0, |acc, r| acc + r.reward));
        }
    }
}
