//! The Stubborn game.
//!
//! Two agents repeatedly pick the left or right reward of a shared pair. Matching picks pay
//! the chosen true reward to both agents and start a new skirmish with freshly drawn rewards.
//! Mismatched picks pay nothing and the skirmish continues, unless both agents switched sides
//! at once, in which case a fair coin picks the side that is paid out. An episode is a fixed
//! number of turns; whatever skirmish is running when the turns run out is simply abandoned.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::rng::{substream, Stream, StreamRng};

/// How estimate-noise standard deviations are assigned to the two agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HandicapMode {
    Fixed { a: f64, b: f64 },
    /// Both handicaps drawn uniformly from `[min, max]` once per episode.
    Randomized { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub turns_per_episode: u32,
    pub reward_low: f64,
    pub reward_high: f64,
    pub handicap_mode: HandicapMode,
    pub observe_own_handicap: bool,
    /// Hide `own_prev` and the skirmish turn counter from learned policies.
    pub strict_observation: bool,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            turns_per_episode: 40,
            reward_low: 0.0,
            reward_high: 10.0,
            handicap_mode: HandicapMode::Fixed { a: 2.0, b: 2.0 },
            observe_own_handicap: false,
            strict_observation: false,
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn with_handicaps(mut self, a: f64, b: f64) -> Self {
        self.handicap_mode = HandicapMode::Fixed { a, b };
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.turns_per_episode < 1 {
            return Err(Error::config("env.turns_per_episode", "must be at least 1"));
        }
        if !(self.reward_low.is_finite() && self.reward_high.is_finite()) {
            return Err(Error::config("env.reward_low", "reward bounds must be finite"));
        }
        if self.reward_low >= self.reward_high {
            return Err(Error::config(
                "env.reward_high",
                format!(
                    "reward_low ({}) must be below reward_high ({})",
                    self.reward_low, self.reward_high
                ),
            ));
        }
        match self.handicap_mode {
            HandicapMode::Fixed { a, b } => {
                for (key, h) in [("env.handicap_a", a), ("env.handicap_b", b)] {
                    if !(h.is_finite() && h >= 0.0) {
                        return Err(Error::config(key, format!("handicap must be >= 0, got {h}")));
                    }
                }
            }
            HandicapMode::Randomized { min, max } => {
                if !(min.is_finite() && min >= 0.0) {
                    return Err(Error::config("env.handicap_min", "must be finite and >= 0"));
                }
                if !(max.is_finite() && max >= min) {
                    return Err(Error::config("env.handicap_max", "must be finite and >= handicap_min"));
                }
            }
        }
        Ok(())
    }

    /// Midpoint of the reward range.
    pub fn reward_mid(&self) -> f64 {
        0.5 * (self.reward_low + self.reward_high)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Agent {
    A,
    B,
}

impl Agent {
    pub const BOTH: [Agent; 2] = [Agent::A, Agent::B];

    pub fn index(self) -> usize {
        match self {
            Agent::A => 0,
            Agent::B => 1,
        }
    }

    pub fn other(self) -> Agent {
        match self {
            Agent::A => Agent::B,
            Agent::B => Agent::A,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Agent::A => "a",
            Agent::B => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Left, Action::Right];

    pub fn opposite(self) -> Action {
        match self {
            Action::Left => Action::Right,
            Action::Right => Action::Left,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Action::Left => 0,
            Action::Right => 1,
        }
    }
}

/// One agent's private view of the two rewards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimates {
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkirmishState {
    pub true_left: f64,
    pub true_right: f64,
    /// Indexed by [`Agent::index`].
    pub est: [Estimates; 2],
    /// Completed disagreement turns in this skirmish.
    pub turn_in_skirmish: u32,
    /// Previous action of each agent; `None` exactly on the first turn.
    pub prev_action: [Option<Action>; 2],
}

impl SkirmishState {
    pub fn true_reward(&self, side: Action) -> f64 {
        match side {
            Action::Left => self.true_left,
            Action::Right => self.true_right,
        }
    }
}

/// What an agent sees before choosing its action.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub est_left: f64,
    pub est_right: f64,
    pub own_prev: Option<Action>,
    pub other_prev: Option<Action>,
    /// `turn_in_skirmish / turns_per_episode`.
    pub skirmish_turn_norm: f64,
    pub turn_in_skirmish: u32,
    pub own_handicap: Option<f64>,
}

impl Observation {
    /// Estimate advantage of the left side.
    pub fn d(&self) -> f64 {
        self.est_left - self.est_right
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TurnEvent {
    AgreeLeft,
    AgreeRight,
    Disagree,
    TiebreakLeft,
    TiebreakRight,
}

impl TurnEvent {
    pub fn is_agreement(self) -> bool {
        matches!(self, TurnEvent::AgreeLeft | TurnEvent::AgreeRight)
    }

    pub fn paid_side(self) -> Option<Action> {
        match self {
            TurnEvent::AgreeLeft | TurnEvent::TiebreakLeft => Some(Action::Left),
            TurnEvent::AgreeRight | TurnEvent::TiebreakRight => Some(Action::Right),
            TurnEvent::Disagree => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurnOutcome {
    pub event: TurnEvent,
    /// Paid identically to both agents.
    pub reward: f64,
    pub skirmish_ended: bool,
    pub episode_ended: bool,
}

/// Full snapshot of a single turn, taken before the turn resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnRecord {
    pub turn_index: u32,
    pub skirmish_index: u32,
    pub turn_in_skirmish: u32,
    pub true_left: f64,
    pub true_right: f64,
    pub est: [Estimates; 2],
    pub actions: [Action; 2],
    pub event: TurnEvent,
    pub reward: f64,
}

#[derive(Debug, Clone)]
struct EpisodeStreams {
    rewards: StreamRng,
    estimates: [StreamRng; 2],
    tie_break: StreamRng,
    policy: [StreamRng; 2],
}

#[derive(Debug, Clone)]
pub struct EpisodeState {
    config: EnvConfig,
    turn_index: u32,
    skirmish_index: u32,
    cumulative_reward: [f64; 2],
    current: SkirmishState,
    handicaps: [f64; 2],
    streams: EpisodeStreams,
}

impl EpisodeState {
    /// Start a fresh episode. Handicaps are fixed here for the whole episode.
    pub fn new(config: &EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let handicaps = match config.handicap_mode {
            HandicapMode::Fixed { a, b } => [a, b],
            HandicapMode::Randomized { min, max } => {
                let mut rng = substream(seed, Stream::Handicaps);
                let mut draw = || min + (max - min) * rng.random::<f64>();
                let a = draw();
                let b = draw();
                [a, b]
            }
        };
        let streams = EpisodeStreams {
            rewards: substream(seed, Stream::Rewards),
            estimates: [
                substream(seed, Stream::EstimatesA),
                substream(seed, Stream::EstimatesB),
            ],
            tie_break: substream(seed, Stream::TieBreak),
            policy: [
                substream(seed, Stream::PolicyA),
                substream(seed, Stream::PolicyB),
            ],
        };
        let placeholder = SkirmishState {
            true_left: config.reward_low,
            true_right: config.reward_low,
            est: [Estimates { left: 0.0, right: 0.0 }; 2],
            turn_in_skirmish: 0,
            prev_action: [None, None],
        };
        let mut ep = Self {
            config: config.clone(),
            turn_index: 0,
            skirmish_index: 0,
            cumulative_reward: [0.0; 2],
            current: placeholder,
            handicaps,
            streams,
        };
        ep.begin_skirmish();
        Ok(ep)
    }

    /// Draw a new reward pair and four new estimates, replacing the current skirmish.
    pub fn begin_skirmish(&mut self) -> &SkirmishState {
        let (low, high) = (self.config.reward_low, self.config.reward_high);
        let rewards = &mut self.streams.rewards;
        let true_left = low + (high - low) * rewards.random::<f64>();
        let true_right = low + (high - low) * rewards.random::<f64>();
        let mut est = [Estimates { left: 0.0, right: 0.0 }; 2];
        for agent in Agent::BOTH {
            let i = agent.index();
            let h = self.handicaps[i];
            let rng = &mut self.streams.estimates[i];
            let z_left: f64 = rng.sample(StandardNormal);
            let z_right: f64 = rng.sample(StandardNormal);
            est[i] = Estimates {
                left: true_left + h * z_left,
                right: true_right + h * z_right,
            };
        }
        self.current = SkirmishState {
            true_left,
            true_right,
            est,
            turn_in_skirmish: 0,
            prev_action: [None, None],
        };
        &self.current
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn turn_index(&self) -> u32 {
        self.turn_index
    }

    pub fn skirmish_index(&self) -> u32 {
        self.skirmish_index
    }

    pub fn cumulative_reward(&self, agent: Agent) -> f64 {
        self.cumulative_reward[agent.index()]
    }

    pub fn current(&self) -> &SkirmishState {
        &self.current
    }

    pub fn handicap(&self, agent: Agent) -> f64 {
        self.handicaps[agent.index()]
    }

    pub fn is_over(&self) -> bool {
        self.turn_index >= self.config.turns_per_episode
    }

    /// Random source reserved for `agent`'s action sampling.
    pub fn policy_rng(&mut self, agent: Agent) -> &mut StreamRng {
        &mut self.streams.policy[agent.index()]
    }

    /// Overwrite the current reward pair; both agents' estimates become the true values.
    /// Only valid at the start of a skirmish. Used for scripted scenarios.
    pub fn force_rewards(&mut self, true_left: f64, true_right: f64) -> Result<()> {
        if self.current.turn_in_skirmish != 0 {
            return Err(Error::InvalidState(
                "rewards can only be forced on a skirmish's first turn".into(),
            ));
        }
        let est = Estimates {
            left: true_left,
            right: true_right,
        };
        self.current.true_left = true_left;
        self.current.true_right = true_right;
        self.current.est = [est; 2];
        Ok(())
    }

    pub fn observe(&self, agent: Agent) -> Result<Observation> {
        if self.is_over() {
            return Err(Error::InvalidState("observe after episode end".into()));
        }
        let i = agent.index();
        let sk = &self.current;
        Ok(Observation {
            est_left: sk.est[i].left,
            est_right: sk.est[i].right,
            own_prev: sk.prev_action[i],
            other_prev: sk.prev_action[agent.other().index()],
            skirmish_turn_norm: f64::from(sk.turn_in_skirmish)
                / f64::from(self.config.turns_per_episode),
            turn_in_skirmish: sk.turn_in_skirmish,
            own_handicap: self.config.observe_own_handicap.then_some(self.handicaps[i]),
        })
    }

    /// Resolve one simultaneous turn.
    pub fn step(&mut self, action_a: Action, action_b: Action) -> Result<TurnOutcome> {
        if self.is_over() {
            return Err(Error::InvalidState("step after episode end".into()));
        }
        let sk = &self.current;
        let both_switched = match sk.prev_action {
            [Some(prev_a), Some(prev_b)] => action_a != prev_a && action_b != prev_b,
            _ => false,
        };
        let event = if action_a == action_b {
            match action_a {
                Action::Left => TurnEvent::AgreeLeft,
                Action::Right => TurnEvent::AgreeRight,
            }
        } else if both_switched {
            if self.streams.tie_break.random::<f64>() < 0.5 {
                TurnEvent::TiebreakLeft
            } else {
                TurnEvent::TiebreakRight
            }
        } else {
            TurnEvent::Disagree
        };
        let reward = event.paid_side().map_or(0.0, |side| sk.true_reward(side));

        self.turn_index += 1;
        for r in &mut self.cumulative_reward {
            *r += reward;
        }
        let episode_ended = self.is_over();
        let skirmish_ended = match event {
            TurnEvent::Disagree => {
                self.current.turn_in_skirmish += 1;
                self.current.prev_action = [Some(action_a), Some(action_b)];
                episode_ended
            }
            _ => {
                if !episode_ended {
                    self.skirmish_index += 1;
                    self.begin_skirmish();
                }
                true
            }
        };
        Ok(TurnOutcome {
            event,
            reward,
            skirmish_ended,
            episode_ended,
        })
    }
}

/// Receives every turn of an episode as it is played.
pub trait TurnRecorder {
    fn record(&mut self, turn: &TurnRecord) -> Result<()>;

    fn end_episode(&mut self) -> Result<()> {
        Ok(())
    }
}

impl TurnRecorder for () {
    fn record(&mut self, _turn: &TurnRecord) -> Result<()> {
        Ok(())
    }
}

impl TurnRecorder for Vec<TurnRecord> {
    fn record(&mut self, turn: &TurnRecord) -> Result<()> {
        self.push(turn.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub turns: Vec<TurnRecord>,
    pub total_reward: f64,
}

impl EpisodeTrace {
    /// Lengths of each skirmish, including a trailing unfinished one.
    pub fn skirmish_lengths(&self) -> Vec<u32> {
        let mut lengths: Vec<u32> = Vec::new();
        for turn in &self.turns {
            let k = turn.skirmish_index as usize;
            if lengths.len() <= k {
                lengths.resize(k + 1, 0);
            }
            lengths[k] += 1;
        }
        lengths
    }

    /// Rewards of finished skirmishes (agreement or tie-break).
    pub fn skirmish_rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.turns
            .iter()
            .filter(|t| t.event != TurnEvent::Disagree)
            .map(|t| t.reward)
    }
}

/// Play one full episode between two policies acting simultaneously.
pub fn run_episode(
    config: &EnvConfig,
    seed: u64,
    policy_a: &dyn Policy,
    policy_b: &dyn Policy,
    recorder: &mut dyn TurnRecorder,
) -> Result<EpisodeTrace> {
    let mut ep = EpisodeState::new(config, seed)?;
    let mut turns = Vec::with_capacity(config.turns_per_episode as usize);
    while !ep.is_over() {
        let obs_a = ep.observe(Agent::A)?;
        let obs_b = ep.observe(Agent::B)?;
        let (action_a, _) = policy_a.act(&obs_a, ep.policy_rng(Agent::A))?;
        let (action_b, _) = policy_b.act(&obs_b, ep.policy_rng(Agent::B))?;
        let record = play_turn(&mut ep, action_a, action_b)?;
        recorder.record(&record)?;
        turns.push(record);
    }
    recorder.end_episode()?;
    Ok(EpisodeTrace {
        turns,
        total_reward: ep.cumulative_reward(Agent::A),
    })
}

/// Step `ep` and capture the pre-step snapshot together with the outcome.
pub fn play_turn(ep: &mut EpisodeState, action_a: Action, action_b: Action) -> Result<TurnRecord> {
    let turn_index = ep.turn_index;
    let skirmish_index = ep.skirmish_index;
    let sk = ep.current.clone();
    let outcome = ep.step(action_a, action_b)?;
    Ok(TurnRecord {
        turn_index,
        skirmish_index,
        turn_in_skirmish: sk.turn_in_skirmish,
        true_left: sk.true_left,
        true_right: sk.true_right,
        est: sk.est,
        actions: [action_a, action_b],
        event: outcome.event,
        reward: outcome.reward,
    })
}
