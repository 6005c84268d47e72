//! Double DQN: the online network picks the next action, the target network scores it.

use rand::Rng;

use crate::adam::Adam;
use crate::mlp::Mlp;
use crate::policy::argmax;
use crate::ppo::HIDDEN;
use crate::RlError;

#[derive(Clone, Debug, PartialEq)]
pub struct DdqnConfig {
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of training over which epsilon decays linearly.
    pub eps_decay_fraction: f64,
    /// Decision steps between hard target syncs.
    pub target_sync: u64,
    pub lr: f64,
    pub gamma: f64,
}

impl Default for DdqnConfig {
    fn default() -> Self {
        Self {
            buffer_capacity: 100_000,
            batch_size: 64,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_fraction: 0.3,
            target_sync: 1000,
            lr: 1e-3,
            gamma: 0.99,
        }
    }
}

impl DdqnConfig {
    /// Exploration rate after `progress` (0 to 1) of training.
    pub fn epsilon(&self, progress: f64) -> f64 {
        let frac = if self.eps_decay_fraction > 0.0 { (progress / self.eps_decay_fraction).clamp(0.0, 1.0) } else { 1.0 };
        self.eps_start + frac * (self.eps_end - self.eps_start)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring buffer.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    data: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), data: Vec::new(), next: 0 }
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&Transition>, RlError> {
        if self.data.len() < n || n == 0 {
            return Err(RlError::InsufficientData { have: self.data.len(), need: n.max(1) });
        }
        Ok((0..n).map(|_| &self.data[rng.random_range(0..self.data.len())]).collect())
    }
}

/// `r` for terminal transitions, otherwise `r + gamma * Q_target(s', argmax_a Q_online(s', a))`.
pub fn double_q_target(reward: f64, done: bool, gamma: f64, q_online_next: &[f64], q_target_next: &[f64]) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * q_target_next[argmax(q_online_next)]
    }
}

/// Uniformly random action with probability `eps`, otherwise greedy.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], eps: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < eps {
        rng.random_range(0..q.len())
    } else {
        argmax(q)
    }
}

/// Mean squared TD error of `online` on `batch` against fixed targets; gradient into `grad`.
pub fn q_loss_grad(online: &Mlp, batch: &[&Transition], targets: &[f64], grad: &mut [f64]) -> Result<f64, RlError> {
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for (t, &y) in batch.iter().zip(targets) {
        let cache = online.forward_cached(&t.obs)?;
        let err = cache.output()[t.action] - y;
        if !err.is_finite() {
            return Err(RlError::NonFinite("temporal-difference error".into()));
        }
        loss += err * err / n;
        let mut d = vec![0.0; online.output_dim()];
        d[t.action] = 2.0 * err / n;
        online.backward(&cache, &d, grad);
    }
    Ok(loss)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DdqnAgent {
    pub online: Mlp,
    pub target: Mlp,
    pub opt: Adam,
    pub cfg: DdqnConfig,
    pub updates: u64,
}

impl DdqnAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, n_actions: usize, cfg: DdqnConfig, rng: &mut R) -> Result<Self, RlError> {
        let online = Mlp::glorot(&[obs_dim, HIDDEN[0], HIDDEN[1], n_actions], 1.0, rng)?;
        let opt = Adam::new(online.num_params(), cfg.lr);
        Ok(Self { target: online.clone(), online, opt, cfg, updates: 0 })
    }

    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>, RlError> {
        self.online.forward(obs)
    }

    pub fn greedy(&self, obs: &[f64]) -> Result<usize, RlError> {
        Ok(argmax(&self.q_values(obs)?))
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }

    /// One gradient step on a sampled minibatch; returns the loss.
    pub fn update<R: Rng + ?Sized>(&mut self, buffer: &ReplayBuffer, rng: &mut R) -> Result<f64, RlError> {
        let batch = buffer.sample(self.cfg.batch_size, rng)?;
        let mut targets = Vec::with_capacity(batch.len());
        for t in &batch {
            let qo = self.online.forward(&t.next_obs)?;
            let qt = self.target.forward(&t.next_obs)?;
            targets.push(double_q_target(t.reward, t.done, self.cfg.gamma, &qo, &qt));
        }
        let mut grad = vec![0.0; self.online.num_params()];
        let loss = q_loss_grad(&self.online, &batch, &targets, &mut grad)?;
        self.opt.step(self.online.params_mut(), &grad);
        self.updates += 1;
        Ok(loss)
    }
}
