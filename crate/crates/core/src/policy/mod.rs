//! Policies: the acting interface, scripted baselines and the learned network policy.

mod network;

pub use network::{FeatureLayout, Forward, PolicyParams, DEFAULT_HIDDEN};

use rand::Rng;

use crate::env::{Action, Observation};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Two-point distribution over [`Action`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDistribution {
    pub p_left: f64,
}

impl ActionDistribution {
    pub fn new(p_left: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_left) {
            return Err(Error::Numeric(format!("p_left = {p_left} outside [0, 1]")));
        }
        Ok(Self { p_left })
    }

    pub fn certain(action: Action) -> Self {
        match action {
            Action::Left => Self { p_left: 1.0 },
            Action::Right => Self { p_left: 0.0 },
        }
    }

    pub fn p_right(&self) -> f64 {
        1.0 - self.p_left
    }

    pub fn prob(&self, action: Action) -> f64 {
        match action {
            Action::Left => self.p_left,
            Action::Right => self.p_right(),
        }
    }

    /// Inverse-CDF sample from a uniform draw in `[0, 1)`.
    pub fn pick(&self, u: f64) -> Action {
        if u < self.p_left {
            Action::Left
        } else {
            Action::Right
        }
    }
}

/// Anything that can choose actions from observations.
pub trait Policy: Sync {
    fn dist(&self, obs: &Observation) -> Result<ActionDistribution>;

    /// Sample an action and return it with its log-probability.
    fn act(&self, obs: &Observation, rng: &mut StreamRng) -> Result<(Action, f64)> {
        let dist = self.dist(obs)?;
        let action = dist.pick(rng.random::<f64>());
        Ok((action, dist.prob(action).ln()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    AlwaysLeft,
    AlwaysRight,
    UniformRandom,
    /// Pick the side with the larger estimate; fair coin on an exact tie.
    GreedyEstimate,
    /// Greedy while the estimate gap exceeds `margin` and fewer than `k` disagreement turns
    /// have passed; afterwards copy the partner's previous move.
    ThresholdStubborn { k: u32, margin: f64 },
    Learned(Box<PolicyParams>),
}

impl PolicySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PolicySpec::ThresholdStubborn { margin, .. } if !(margin.is_finite() && *margin >= 0.0) => {
                Err(Error::config("policy.margin", "must be finite and >= 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            PolicySpec::AlwaysLeft => "left".into(),
            PolicySpec::AlwaysRight => "right".into(),
            PolicySpec::UniformRandom => "uniform".into(),
            PolicySpec::GreedyEstimate => "greedy".into(),
            PolicySpec::ThresholdStubborn { k, margin } => format!("stubborn:{k}:{margin}"),
            PolicySpec::Learned(_) => "learned".into(),
        }
    }
}

fn greedy(obs: &Observation) -> ActionDistribution {
    if obs.est_left > obs.est_right {
        ActionDistribution { p_left: 1.0 }
    } else if obs.est_left < obs.est_right {
        ActionDistribution { p_left: 0.0 }
    } else {
        ActionDistribution { p_left: 0.5 }
    }
}

fn check_finite(obs: &Observation) -> Result<()> {
    let handicap_ok = obs.own_handicap.is_none_or(f64::is_finite);
    if obs.est_left.is_finite() && obs.est_right.is_finite() && obs.skirmish_turn_norm.is_finite() && handicap_ok {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite observation {obs:?}")))
    }
}

impl Policy for PolicySpec {
    fn dist(&self, obs: &Observation) -> Result<ActionDistribution> {
        check_finite(obs)?;
        Ok(match self {
            PolicySpec::AlwaysLeft => ActionDistribution::certain(Action::Left),
            PolicySpec::AlwaysRight => ActionDistribution::certain(Action::Right),
            PolicySpec::UniformRandom => ActionDistribution { p_left: 0.5 },
            PolicySpec::GreedyEstimate => greedy(obs),
            PolicySpec::ThresholdStubborn { k, margin } => {
                if obs.d().abs() > *margin && obs.turn_in_skirmish < *k {
                    greedy(obs)
                } else {
                    match obs.other_prev {
                        Some(partner) => ActionDistribution::certain(partner),
                        None => greedy(obs),
                    }
                }
            }
            PolicySpec::Learned(params) => params.dist(obs)?,
        })
    }

    fn act(&self, obs: &Observation, rng: &mut StreamRng) -> Result<(Action, f64)> {
        match self {
            PolicySpec::Learned(params) => params.act(obs, rng),
            _ => {
                let dist = self.dist(obs)?;
                let action = dist.pick(rng.random::<f64>());
                Ok((action, dist.prob(action).ln()))
            }
        }
    }
}

impl Policy for PolicyParams {
    fn dist(&self, obs: &Observation) -> Result<ActionDistribution> {
        let fwd = self.forward_obs(obs)?;
        Ok(ActionDistribution {
            p_left: fwd.log_probs()[0].exp(),
        })
    }

    fn act(&self, obs: &Observation, rng: &mut StreamRng) -> Result<(Action, f64)> {
        let fwd = self.forward_obs(obs)?;
        let log_probs = fwd.log_probs();
        let dist = ActionDistribution {
            p_left: log_probs[0].exp(),
        };
        let action = dist.pick(rng.random::<f64>());
        Ok((action, log_probs[action.index()]))
    }
}
