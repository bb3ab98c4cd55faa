use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::{Action, Observation};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

pub const DEFAULT_HIDDEN: usize = 32;

/// Which observation fields the network consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FeatureLayout {
    /// Drop `own_prev` and `skirmish_turn_norm`.
    pub strict: bool,
    /// Append the agent's own handicap.
    pub handicap: bool,
}

impl FeatureLayout {
    pub fn dim(&self) -> usize {
        let base = if self.strict { 3 } else { 5 };
        base + usize::from(self.handicap)
    }

    pub fn bits(&self) -> u8 {
        u8::from(self.strict) | (u8::from(self.handicap) << 1)
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        (bits < 4).then_some(Self {
            strict: bits & 1 != 0,
            handicap: bits & 2 != 0,
        })
    }
}

fn encode_prev(a: Option<Action>) -> f64 {
    match a {
        None => 0.0,
        Some(Action::Left) => 1.0,
        Some(Action::Right) => -1.0,
    }
}

/// Two tanh hidden layers feeding a 2-logit action head, and a separate tower of the same
/// shape feeding a scalar value head.
///
/// The towers share no weights: value targets are episode returns in the hundreds, and a
/// shared trunk lets the value loss drown the policy gradient. All weights live in one flat
/// vector so optimizers and gradient checks can treat the network as a point in R^n.
/// Layout, in order: policy tower `w1[h×in] b1[h] w2[h×h] b2[h] wp[2×h] bp[2]`, then value
/// tower `u1[h×in] c1[h] u2[h×h] c2[h] wv[h] bv[1]`, matrices row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    layout: FeatureLayout,
    /// Reward scale; estimates are divided by it.
    reward_scale: f64,
    turns_per_episode: u32,
    hidden: usize,
    theta: Vec<f64>,
}

/// Start of each block in the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Tower {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    /// Output weights, `outputs × hidden`, followed by `outputs` biases.
    wo: usize,
    bo: usize,
    end: usize,
}

impl Tower {
    fn at(start: usize, input: usize, hidden: usize, outputs: usize) -> Self {
        let w1 = start;
        let b1 = w1 + hidden * input;
        let w2 = b1 + hidden;
        let b2 = w2 + hidden * hidden;
        let wo = b2 + hidden;
        let bo = wo + outputs * hidden;
        Self {
            w1,
            b1,
            w2,
            b2,
            wo,
            bo,
            end: bo + outputs,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    policy: Tower,
    value: Tower,
    len: usize,
}

fn offsets(input: usize, hidden: usize) -> Offsets {
    let policy = Tower::at(0, input, hidden, 2);
    let value = Tower::at(policy.end, input, hidden, 1);
    Offsets {
        policy,
        value,
        len: value.end,
    }
}

/// `tanh(W·x + b)` for a `hidden × x.len()` row-major `W` starting at `w`.
fn dense(theta: &[f64], w: usize, b: usize, hidden: usize, x: &[f64]) -> Vec<f64> {
    (0..hidden)
        .map(|i| {
            let row = &theta[w + i * x.len()..w + (i + 1) * x.len()];
            let z: f64 = theta[b + i] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
            z.tanh()
        })
        .collect()
}

/// Backpropagate `d_out` (gradient w.r.t. the tower outputs) through one tower,
/// accumulating parameter gradients into `grad`.
fn tower_backward(
    theta: &[f64],
    t: Tower,
    x: &[f64],
    h1: &[f64],
    h2: &[f64],
    d_out: &[f64],
    grad: &mut [f64],
) {
    let h = h2.len();
    let mut dh2 = vec![0.0; h];
    for (a, &dz) in d_out.iter().enumerate() {
        grad[t.bo + a] += dz;
        let row = t.wo + a * h;
        for j in 0..h {
            grad[row + j] += dz * h2[j];
            dh2[j] += dz * theta[row + j];
        }
    }
    // through tanh: d(pre) = d(post) * (1 - post^2)
    let dz2: Vec<f64> = dh2.iter().zip(h2).map(|(d, a)| d * (1.0 - a * a)).collect();
    let mut dh1 = vec![0.0; h];
    for i in 0..h {
        grad[t.b2 + i] += dz2[i];
        let row = t.w2 + i * h;
        for j in 0..h {
            grad[row + j] += dz2[i] * h1[j];
            dh1[j] += dz2[i] * theta[row + j];
        }
    }
    let dz1: Vec<f64> = dh1.iter().zip(h1).map(|(d, a)| d * (1.0 - a * a)).collect();
    for i in 0..h {
        grad[t.b1 + i] += dz1[i];
        let row = t.w1 + i * x.len();
        for (k, xk) in x.iter().enumerate() {
            grad[row + k] += dz1[i] * xk;
        }
    }
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct Forward {
    pub x: Vec<f64>,
    /// Policy tower activations.
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// Value tower activations.
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub logits: [f64; 2],
    pub value: f64,
}

impl Forward {
    pub fn log_probs(&self) -> [f64; 2] {
        let [z0, z1] = self.logits;
        let m = z0.max(z1);
        let lse = m + ((z0 - m).exp() + (z1 - m).exp()).ln();
        [z0 - lse, z1 - lse]
    }

    pub fn probs(&self) -> [f64; 2] {
        let [l0, l1] = self.log_probs();
        [l0.exp(), l1.exp()]
    }

    pub fn entropy(&self) -> f64 {
        let lp = self.log_probs();
        -(lp[0].exp() * lp[0] + lp[1].exp() * lp[1])
    }
}

impl PolicyParams {
    pub fn zeros(layout: FeatureLayout, reward_scale: f64, turns_per_episode: u32, hidden: usize) -> Self {
        let len = offsets(layout.dim(), hidden).len;
        Self {
            layout,
            reward_scale,
            turns_per_episode,
            hidden,
            theta: vec![0.0; len],
        }
    }

    /// Scaled-normal initialization: hidden and value-head weights with variance 1/fan_in,
    /// action head with standard deviation 0.01 so the initial policy is close to uniform.
    pub fn init(
        layout: FeatureLayout,
        reward_scale: f64,
        turns_per_episode: u32,
        hidden: usize,
        rng: &mut StreamRng,
    ) -> Self {
        let mut params = Self::zeros(layout, reward_scale, turns_per_episode, hidden);
        let input = layout.dim();
        let o = offsets(input, hidden);
        let mut fill = |theta: &mut [f64], std: f64| {
            for w in theta {
                let z: f64 = rng.sample(StandardNormal);
                *w = std * z;
            }
        };
        let th = &mut params.theta;
        for (t, head_std) in [(o.policy, 0.01), (o.value, (1.0 / hidden as f64).sqrt())] {
            fill(&mut th[t.w1..t.b1], (1.0 / input as f64).sqrt());
            fill(&mut th[t.w2..t.b2], (1.0 / hidden as f64).sqrt());
            fill(&mut th[t.wo..t.bo], head_std);
        }
        params
    }

    pub fn from_parts(
        layout: FeatureLayout,
        reward_scale: f64,
        turns_per_episode: u32,
        hidden: usize,
        theta: Vec<f64>,
    ) -> Result<Self> {
        let expected = offsets(layout.dim(), hidden).len;
        if theta.len() != expected {
            return Err(Error::Contract(format!(
                "parameter vector has {} entries, layout needs {expected}",
                theta.len()
            )));
        }
        if !(reward_scale.is_finite() && reward_scale > 0.0) || turns_per_episode == 0 || hidden == 0 {
            return Err(Error::Contract("invalid network normalization constants".into()));
        }
        if theta.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        Ok(Self {
            layout,
            reward_scale,
            turns_per_episode,
            hidden,
            theta,
        })
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn reward_scale(&self) -> f64 {
        self.reward_scale
    }

    pub fn turns_per_episode(&self) -> u32 {
        self.turns_per_episode
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Index range of the action head (weights and biases).
    pub fn action_head_range(&self) -> std::ops::Range<usize> {
        let p = offsets(self.layout.dim(), self.hidden).policy;
        p.wo..p.end
    }

    /// Index of the action-head bias for `action`.
    pub fn action_bias_index(&self, action: Action) -> usize {
        offsets(self.layout.dim(), self.hidden).policy.bo + action.index()
    }

    pub fn features(&self, obs: &Observation) -> Result<Vec<f64>> {
        let mut x = Vec::with_capacity(self.layout.dim());
        x.push(obs.est_left / self.reward_scale);
        x.push(obs.est_right / self.reward_scale);
        if !self.layout.strict {
            x.push(encode_prev(obs.own_prev));
        }
        x.push(encode_prev(obs.other_prev));
        if !self.layout.strict {
            x.push(obs.skirmish_turn_norm);
        }
        if self.layout.handicap {
            let h = obs.own_handicap.ok_or_else(|| {
                Error::Contract("network expects own_handicap in the observation".into())
            })?;
            x.push(h / self.reward_scale);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite features {x:?}")));
        }
        Ok(x)
    }

    pub fn forward_obs(&self, obs: &Observation) -> Result<Forward> {
        let x = self.features(obs)?;
        self.forward(x)
    }

    pub fn forward(&self, x: Vec<f64>) -> Result<Forward> {
        let input = self.layout.dim();
        if x.len() != input {
            return Err(Error::Contract(format!("feature length {} != {input}", x.len())));
        }
        let h = self.hidden;
        let o = offsets(input, h);
        let th = &self.theta;
        let h1 = dense(th, o.policy.w1, o.policy.b1, h, &x);
        let h2 = dense(th, o.policy.w2, o.policy.b2, h, &h1);
        let g1 = dense(th, o.value.w1, o.value.b1, h, &x);
        let g2 = dense(th, o.value.w2, o.value.b2, h, &g1);
        let dot = |w: usize, a: &[f64]| th[w..w + h].iter().zip(a).map(|(w, a)| w * a).sum::<f64>();
        let (wp, bp) = (o.policy.wo, o.policy.bo);
        let logits = [th[bp] + dot(wp, &h2), th[bp + 1] + dot(wp + h, &h2)];
        let value = th[o.value.bo] + dot(o.value.wo, &g2);
        if !(logits[0].is_finite() && logits[1].is_finite() && value.is_finite()) {
            return Err(Error::Numeric("non-finite network output".into()));
        }
        Ok(Forward {
            x,
            h1,
            h2,
            g1,
            g2,
            logits,
            value,
        })
    }

    /// Accumulate into `grad` the parameter gradient of a scalar whose derivatives with
    /// respect to the logits and the value output are `dlogits` and `dvalue`.
    pub fn backward(&self, fwd: &Forward, dlogits: [f64; 2], dvalue: f64, grad: &mut [f64]) {
        let o = offsets(self.layout.dim(), self.hidden);
        tower_backward(&self.theta, o.policy, &fwd.x, &fwd.h1, &fwd.h2, &dlogits, grad);
        if dvalue != 0.0 {
            tower_backward(&self.theta, o.value, &fwd.x, &fwd.g1, &fwd.g2, &[dvalue], grad);
        }
    }

    /// Gradient of `ln π(action | obs)` with respect to every parameter.
    pub fn logprob_grad(&self, obs: &Observation, action: Action) -> Result<Vec<f64>> {
        let fwd = self.forward_obs(obs)?;
        let p = fwd.probs();
        let mut dlogits = [-p[0], -p[1]];
        dlogits[action.index()] += 1.0;
        let mut grad = vec![0.0; self.theta.len()];
        self.backward(&fwd, dlogits, 0.0, &mut grad);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        Ok(grad)
    }

    pub fn log_prob(&self, obs: &Observation, action: Action) -> Result<f64> {
        Ok(self.forward_obs(obs)?.log_probs()[action.index()])
    }

    pub fn value(&self, obs: &Observation) -> Result<f64> {
        Ok(self.forward_obs(obs)?.value)
    }
}
