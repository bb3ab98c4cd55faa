//! Generalized advantage estimation over fixed-length episodes.

use super::rollout::RolloutBatch;
use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Advantages (normalized per batch) and discounted returns-to-go, aligned with the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Advantages {
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// Raw GAE advantages and returns-to-go. Episode boundaries are terminal.
pub fn gae(batch: &RolloutBatch, gamma: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Contract("advantages of an empty batch".into()));
    }
    let steps = batch.steps();
    let n = steps.len();
    let mut adv = vec![0.0; n];
    let mut ret = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_ret = 0.0;
    let mut next_value = 0.0;
    for t in (0..n).rev() {
        let s = &steps[t];
        if s.done {
            next_adv = 0.0;
            next_ret = 0.0;
            next_value = 0.0;
        }
        let delta = s.reward + gamma * next_value - s.value;
        next_adv = delta + gamma * lambda * next_adv;
        next_ret = s.reward + gamma * next_ret;
        adv[t] = next_adv;
        ret[t] = next_ret;
        next_value = s.value;
    }
    Ok((adv, ret))
}

/// Shift to zero mean and scale to unit variance; near-constant inputs are only centered.
pub fn normalize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let scale = var.max(VARIANCE_FLOOR).sqrt();
    for v in values.iter_mut() {
        *v = (*v - mean) / scale;
    }
}

pub fn advantages(batch: &RolloutBatch, gamma: f64, lambda: f64) -> Result<Advantages> {
    let (mut advantages, returns) = gae(batch, gamma, lambda)?;
    normalize(&mut advantages);
    Ok(Advantages {
        advantages,
        returns,
    })
}
