//! Clipped-surrogate policy update.

use rand::seq::SliceRandom;

use super::gae::Advantages;
use super::rollout::RolloutBatch;
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::policy::PolicyParams;
use crate::rng::StreamRng;

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Losses averaged over every minibatch of an update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossReport {
    /// `-mean(min(ρA, clip(ρ)A))`
    pub surrogate: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
}

/// Loss and gradient of one minibatch.
pub fn minibatch_loss(
    params: &PolicyParams,
    batch: &RolloutBatch,
    adv: &Advantages,
    indices: &[usize],
    train: &TrainConfig,
    grad: &mut [f64],
) -> Result<LossReport> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let m = indices.len() as f64;
    let (lo, hi) = (1.0 - train.clip, 1.0 + train.clip);
    let mut report = LossReport::default();
    for &i in indices {
        let step = &batch.steps()[i];
        let a = adv.advantages[i];
        let target = adv.returns[i];
        let fwd = params.forward(step.features.clone())?;
        let log_probs = fwd.log_probs();
        let probs = [log_probs[0].exp(), log_probs[1].exp()];
        let k = step.action.index();
        let ratio = (log_probs[k] - step.old_log_prob).exp();
        let unclipped = ratio * a;
        let clipped = ratio.clamp(lo, hi) * a;
        let surrogate = unclipped.min(clipped);
        // d(-surrogate)/d(log π): the clipped branch is constant in θ
        let d_logp = if unclipped <= clipped { -ratio * a } else { 0.0 };
        let entropy = fwd.entropy();
        let err = fwd.value - target;

        let mut dlogits = [0.0; 2];
        for j in 0..2 {
            let onehot = if j == k { 1.0 } else { 0.0 };
            dlogits[j] += d_logp * (onehot - probs[j]);
            // -c·H, with dH/dz_j = -p_j (ln p_j + H)
            dlogits[j] += train.entropy_coefficient * probs[j] * (log_probs[j] + entropy);
            dlogits[j] /= m;
        }
        let dvalue = 2.0 * train.value_coefficient * err / m;
        params.backward(&fwd, dlogits, dvalue, grad);

        report.surrogate -= surrogate / m;
        report.value += err * err / m;
        report.entropy += entropy / m;
    }
    report.total = report.surrogate + train.value_coefficient * report.value
        - train.entropy_coefficient * report.entropy;
    if !report.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("non-finite loss {report:?}")));
    }
    Ok(report)
}

/// Split `0..len` into `parts` contiguous, near-equal chunks of `order`.
fn minibatches(order: &[usize], parts: usize) -> impl Iterator<Item = &[usize]> {
    let len = order.len();
    let parts = parts.clamp(1, len.max(1));
    (0..parts).map(move |k| &order[k * len / parts..(k + 1) * len / parts])
}

/// Run `epochs_per_generation` passes of shuffled minibatch Adam steps on the clipped
/// surrogate plus value and entropy terms.
pub fn update(
    params: &PolicyParams,
    optimizer: &mut Adam,
    batch: &RolloutBatch,
    adv: &Advantages,
    train: &TrainConfig,
    rng: &mut StreamRng,
) -> Result<(PolicyParams, LossReport)> {
    let n = batch.len();
    if n == 0 || adv.advantages.len() != n || adv.returns.len() != n {
        return Err(Error::Contract(format!(
            "batch of {n} steps with {} advantages and {} returns",
            adv.advantages.len(),
            adv.returns.len()
        )));
    }
    let mut next = params.clone();
    let mut grad = vec![0.0; next.len()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut sum = LossReport::default();
    let mut count = 0.0;
    for _ in 0..train.epochs_per_generation {
        order.shuffle(rng);
        for mb in minibatches(&order, train.minibatch_count as usize) {
            if mb.is_empty() {
                continue;
            }
            let loss = minibatch_loss(&next, batch, adv, mb, train, &mut grad)?;
            optimizer.step(next.theta_mut(), &grad, train.learning_rate);
            if next.theta().iter().any(|w| !w.is_finite()) {
                return Err(Error::Numeric("parameters diverged".into()));
            }
            sum.surrogate += loss.surrogate;
            sum.value += loss.value;
            sum.entropy += loss.entropy;
            sum.total += loss.total;
            count += 1.0;
        }
    }
    if count > 0.0 {
        sum.surrogate /= count;
        sum.value /= count;
        sum.entropy /= count;
        sum.total /= count;
    }
    Ok((next, sum))
}
