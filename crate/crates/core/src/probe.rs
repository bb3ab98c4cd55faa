//! Counterfactual stubbornness probe.
//!
//! ζ(n, d) is the probability that an agent picks the left reward when its own estimates
//! favor left by `d` points and the last `n` turns were spent disagreeing, with this agent on
//! the left and its partner on the right. Values come straight from the policy's action
//! distribution on a synthetic observation; nothing is sampled from the environment.

use rand::Rng;

use crate::env::{Action, Agent, EnvConfig, HandicapMode, Observation};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::rng::{derive_seed, substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseMode {
    /// Estimates `(mid + d/2, mid - d/2)` around the reward-range midpoint.
    Symmetric,
    /// Average over `samples` midpoints drawn so both estimates stay inside the reward range.
    Averaged { samples: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub n_values: Vec<u32>,
    pub d_values: Vec<f64>,
    pub base_mode: BaseMode,
    /// Average with the mirrored (right-favoring) probe.
    pub mirror: bool,
    /// Seed for averaged-mode base draws.
    pub seed: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            n_values: vec![0, 1, 2, 3, 4],
            d_values: vec![5.0],
            base_mode: BaseMode::Symmetric,
            mirror: false,
            seed: 0,
        }
    }
}

impl ProbeSpec {
    pub fn validate(&self) -> Result<()> {
        if let BaseMode::Averaged { samples: 0 } = self.base_mode {
            return Err(Error::config("probe.samples", "must be >= 1"));
        }
        if self.d_values.iter().any(|d| !d.is_finite()) {
            return Err(Error::config("probe.d_values", "must be finite"));
        }
        Ok(())
    }
}

/// Environment facts a probe observation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeContext {
    pub turns_per_episode: u32,
    pub reward_low: f64,
    pub reward_high: f64,
    pub own_handicap: Option<f64>,
}

impl ProbeContext {
    /// Context for `agent`. Randomized handicaps are probed at the middle of their range.
    pub fn for_agent(env: &EnvConfig, agent: Agent) -> Self {
        let handicap = match env.handicap_mode {
            HandicapMode::Fixed { a, b } => match agent {
                Agent::A => a,
                Agent::B => b,
            },
            HandicapMode::Randomized { min, max } => 0.5 * (min + max),
        };
        Self {
            turns_per_episode: env.turns_per_episode,
            reward_low: env.reward_low,
            reward_high: env.reward_high,
            own_handicap: env.observe_own_handicap.then_some(handicap),
        }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.reward_low + self.reward_high)
    }
}

/// The observation seen after `n` disagreement turns with estimates `(est_left, est_right)`,
/// this agent having played `own` and its partner the opposite side.
pub fn conflict_observation(n: u32, est_left: f64, est_right: f64, own: Action, ctx: &ProbeContext) -> Observation {
    let (own_prev, other_prev) = if n == 0 {
        (None, None)
    } else {
        (Some(own), Some(own.opposite()))
    };
    Observation {
        est_left,
        est_right,
        own_prev,
        other_prev,
        skirmish_turn_norm: f64::from(n) / f64::from(ctx.turns_per_episode),
        turn_in_skirmish: n,
        own_handicap: ctx.own_handicap,
    }
}

/// Probe observation centered on `mid`. The mirrored probe swaps the estimates and the sides
/// both agents held.
pub fn probe_observation(n: u32, d: f64, mid: f64, mirrored: bool, ctx: &ProbeContext) -> Observation {
    let high = mid + 0.5 * d;
    let low = mid - 0.5 * d;
    if mirrored {
        conflict_observation(n, low, high, Action::Right, ctx)
    } else {
        conflict_observation(n, high, low, Action::Left, ctx)
    }
}

/// Midpoints at which `d` is probed.
pub fn base_draws(spec: &ProbeSpec, d: f64, ctx: &ProbeContext) -> Result<Vec<f64>> {
    match spec.base_mode {
        BaseMode::Symmetric => Ok(vec![ctx.mid()]),
        BaseMode::Averaged { samples } => {
            let width = ctx.reward_high - ctx.reward_low;
            if d.abs() > width {
                return Err(Error::InfeasibleBase {
                    d,
                    low: ctx.reward_low,
                    high: ctx.reward_high,
                });
            }
            let lo = ctx.reward_low + 0.5 * d.abs();
            let hi = ctx.reward_high - 0.5 * d.abs();
            let mut rng = substream(derive_seed(spec.seed, d.to_bits()), Stream::Probe);
            Ok((0..samples).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
        }
    }
}

pub fn measure_zeta(policy: &dyn Policy, n: u32, d: f64, spec: &ProbeSpec, ctx: &ProbeContext) -> Result<f64> {
    let bases = base_draws(spec, d, ctx)?;
    let mut total = 0.0;
    for &mid in &bases {
        let left = policy.dist(&probe_observation(n, d, mid, false, ctx))?.p_left;
        total += if spec.mirror {
            let right = policy.dist(&probe_observation(n, d, mid, true, ctx))?.p_right();
            0.5 * (left + right)
        } else {
            left
        };
    }
    Ok(total / bases.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEntry {
    pub n: u32,
    pub d: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaMatrix {
    pub generation: u32,
    /// Indexed by [`Agent::index`], entries in (d, n) grid order of the spec.
    pub entries: [Vec<ZetaEntry>; 2],
    pub spec: ProbeSpec,
}

impl ZetaMatrix {
    pub fn get(&self, agent: Agent, n: u32, d: f64) -> Option<f64> {
        self.entries[agent.index()]
            .iter()
            .find(|e| e.n == n && e.d == d)
            .map(|e| e.zeta)
    }

    /// ζ over the n grid for one agent at fixed `d`.
    pub fn series(&self, agent: Agent, d: f64) -> Vec<f64> {
        self.spec
            .n_values
            .iter()
            .filter_map(|&n| self.get(agent, n, d))
            .collect()
    }
}

/// Grid order shared by sweeps, metrics columns and CSV output.
pub fn grid(spec: &ProbeSpec) -> Vec<(u32, f64)> {
    spec.d_values
        .iter()
        .flat_map(|&d| spec.n_values.iter().map(move |&n| (n, d)))
        .collect()
}

pub fn zeta_sweep(
    policies: [&dyn Policy; 2],
    spec: &ProbeSpec,
    contexts: &[ProbeContext; 2],
    generation: u32,
) -> Result<ZetaMatrix> {
    let mut entries = [Vec::new(), Vec::new()];
    for (i, policy) in policies.iter().enumerate() {
        for (n, d) in grid(spec) {
            let zeta = measure_zeta(*policy, n, d, spec, &contexts[i])?;
            entries[i].push(ZetaEntry { n, d, zeta });
        }
    }
    Ok(ZetaMatrix {
        generation,
        entries,
        spec: spec.clone(),
    })
}

/// Spearman rank correlation with average ranks for ties. `None` if either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}
