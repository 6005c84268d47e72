//! Generalized advantage estimation and discounted returns.

use crate::RlError;

/// `A_t = sum_k (gamma * lambda)^k delta_{t+k}` with
/// `delta_t = r_t + gamma V_{t+1} - V_t` and `V_T = bootstrap`.
pub fn gae_advantages(rewards: &[f64], values: &[f64], bootstrap: f64, gamma: f64, lambda: f64) -> Result<Vec<f64>, RlError> {
    if rewards.len() != values.len() {
        return Err(RlError::Shape(format!("{} rewards but {} values", rewards.len(), values.len())));
    }
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_value = bootstrap;
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let delta = rewards[t] + gamma * next_value - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
        next_value = values[t];
    }
    Ok(adv)
}

/// `R_t = sum_{t' >= t} gamma^(t' - t) r_t'`, optionally seeded with a bootstrap value past the end.
pub fn rewards_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
    rewards_to_go_bootstrapped(rewards, gamma, 0.0)
}

pub fn rewards_to_go_bootstrapped(rewards: &[f64], gamma: f64, bootstrap: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = bootstrap;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Zero mean, unit variance. A constant input maps to zeros.
pub fn normalize(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for x in xs.iter_mut() {
        *x = if std > 0.0 { (*x - mean) / (std + 1e-8) } else { 0.0 };
    }
}
