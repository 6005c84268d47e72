//! Clipped-surrogate policy optimization with a separately fitted value function.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::adam::Adam;
use crate::advantage::normalize;
use crate::mlp::Mlp;
use crate::policy::{log_softmax, sample_action};
use crate::RlError;

#[derive(Clone, Debug, PartialEq)]
pub struct PpoConfig {
    pub clip: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub train_steps: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub minibatch: usize,
    /// Entropy bonus weight, used only in combined mode.
    pub entropy_coef: f64,
    /// Value loss weight, used only in combined mode.
    pub value_coef: f64,
    /// Optimize `-L_clip + c1 L_vf - c2 S` instead of two independent losses.
    pub combined: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            actor_lr: 1e-3,
            critic_lr: 3e-4,
            train_steps: 80,
            gamma: 0.99,
            lambda: 0.97,
            minibatch: 46,
            entropy_coef: 0.0,
            value_coef: 0.5,
            combined: false,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let ok = self.clip > 0.0
            && self.clip < 1.0
            && self.gamma > 0.0
            && self.gamma <= 1.0
            && self.lambda > 0.0
            && self.lambda <= 1.0
            && self.actor_lr > 0.0
            && self.critic_lr > 0.0
            && self.minibatch > 0;
        if ok {
            Ok(())
        } else {
            Err(RlError::Config(format!("{self:?}")))
        }
    }
}

/// Per-sample clipped surrogate `min(r A, clip(r, 1-eps, 1+eps) A)`.
pub fn clip_objective(ratio: f64, adv: f64, eps: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv)
}

/// Training data for one update.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Batch {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub logprob_old: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    fn check(&self) -> Result<(), RlError> {
        let n = self.obs.len();
        if n == 0 {
            return Err(RlError::EmptyBatch);
        }
        if [self.actions.len(), self.logprob_old.len(), self.advantages.len(), self.returns.len()].iter().any(|&m| m != n) {
            return Err(RlError::Shape("batch columns differ in length".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PolicyLoss {
    /// Mean clipped surrogate.
    pub objective: f64,
    pub entropy: f64,
    /// Quantity that is minimized: `-(objective + c2 * entropy)`.
    pub loss: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Policy loss over `idx` and its gradient, accumulated into `grad`.
pub fn policy_loss_grad(
    actor: &Mlp,
    batch: &Batch,
    idx: &[usize],
    eps: f64,
    entropy_coef: f64,
    grad: &mut [f64],
) -> Result<PolicyLoss, RlError> {
    let n = idx.len() as f64;
    let mut out = PolicyLoss::default();
    for &i in idx {
        let cache = actor.forward_cached(&batch.obs[i])?;
        let z = cache.output();
        let lp = log_softmax(z);
        let p: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
        let a = batch.actions[i];
        let ratio = (lp[a] - batch.logprob_old[i]).exp();
        let adv = batch.advantages[i];
        let obj = clip_objective(ratio, adv, eps);
        let ent: f64 = -p.iter().zip(&lp).map(|(pk, lk)| pk * lk).sum::<f64>();
        if !(obj.is_finite() && ent.is_finite()) {
            return Err(RlError::NonFinite(format!("sample {i}: ratio {ratio}, advantage {adv}, logits {z:?}")));
        }
        out.objective += obj / n;
        out.entropy += ent / n;
        out.approx_kl += (batch.logprob_old[i] - lp[a]) / n;
        if (ratio - 1.0).abs() > eps {
            out.clip_fraction += 1.0 / n;
        }
        // the min picks the unclipped term whenever r A <= clip(r) A
        let unclipped = ratio * adv <= ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
        let mut dz = vec![0.0; z.len()];
        for k in 0..z.len() {
            let delta = if k == a { 1.0 } else { 0.0 };
            let mut g = 0.0;
            if unclipped {
                g -= adv * ratio * (delta - p[k]);
            }
            if entropy_coef != 0.0 {
                g += entropy_coef * p[k] * (lp[k] + ent);
            }
            dz[k] = g / n;
        }
        actor.backward(&cache, &dz, grad);
    }
    out.loss = -(out.objective + entropy_coef * out.entropy);
    Ok(out)
}

/// Mean squared error of the value head over `idx`, scaled by `weight`; gradient into `grad`.
pub fn value_loss_grad(critic: &Mlp, batch: &Batch, idx: &[usize], weight: f64, grad: &mut [f64]) -> Result<f64, RlError> {
    let n = idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let cache = critic.forward_cached(&batch.obs[i])?;
        let err = cache.output()[0] - batch.returns[i];
        if !err.is_finite() {
            return Err(RlError::NonFinite(format!("value error at sample {i}")));
        }
        loss += weight * err * err / n;
        critic.backward(&cache, &[weight * 2.0 * err / n], grad);
    }
    Ok(loss)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Actor, critic and their optimizers.
#[derive(Clone, Debug, PartialEq)]
pub struct PpoAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub cfg: PpoConfig,
}

pub const HIDDEN: [usize; 2] = [64, 32];

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, n_actions: usize, cfg: PpoConfig, rng: &mut R) -> Result<Self, RlError> {
        cfg.validate()?;
        let actor = Mlp::glorot(&[obs_dim, HIDDEN[0], HIDDEN[1], n_actions], 0.01, rng)?;
        let critic = Mlp::glorot(&[obs_dim, HIDDEN[0], HIDDEN[1], 1], 1.0, rng)?;
        let actor_opt = Adam::new(actor.num_params(), cfg.actor_lr);
        let critic_opt = Adam::new(critic.num_params(), cfg.critic_lr);
        Ok(Self { actor, critic, actor_opt, critic_opt, cfg })
    }

    /// Stochastic action, its log-probability and the value estimate.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(usize, f64, f64), RlError> {
        let logits = self.actor.forward(obs)?;
        let (a, lp) = sample_action(&logits, rng);
        Ok((a, lp, self.value(obs)?))
    }

    pub fn greedy(&self, obs: &[f64]) -> Result<usize, RlError> {
        Ok(crate::policy::argmax(&self.actor.forward(obs)?))
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64, RlError> {
        Ok(self.critic.forward(obs)?[0])
    }

    pub fn logprob(&self, obs: &[f64], action: usize) -> Result<f64, RlError> {
        Ok(log_softmax(&self.actor.forward(obs)?)[action])
    }

    /// Normalizes advantages, then runs `train_steps` Adam steps on the policy
    /// and the value function over shuffled minibatches.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<PpoStats, RlError> {
        batch.check()?;
        let mut batch = batch.clone();
        normalize(&mut batch.advantages);
        let n = batch.len();
        let mb = self.cfg.minibatch.min(n);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut cursor = 0;
        let mut stats = PpoStats::default();
        let steps = self.cfg.train_steps.max(1) as f64;
        let (c1, c2) = if self.cfg.combined { (self.cfg.value_coef, self.cfg.entropy_coef) } else { (1.0, 0.0) };
        for _ in 0..self.cfg.train_steps {
            if cursor + mb > n {
                order.shuffle(rng);
                cursor = 0;
            }
            let idx = &order[cursor..cursor + mb];
            cursor += mb;

            let mut g_actor = vec![0.0; self.actor.num_params()];
            let pl = policy_loss_grad(&self.actor, &batch, idx, self.cfg.clip, c2, &mut g_actor)?;
            let mut g_critic = vec![0.0; self.critic.num_params()];
            let vl = value_loss_grad(&self.critic, &batch, idx, c1, &mut g_critic)?;
            if g_actor.iter().chain(&g_critic).any(|g| !g.is_finite()) {
                return Err(RlError::NonFinite("gradient".into()));
            }
            self.actor_opt.step(self.actor.params_mut(), &g_actor);
            self.critic_opt.step(self.critic.params_mut(), &g_critic);

            stats.policy_loss += pl.loss / steps;
            stats.value_loss += vl / steps;
            stats.entropy += pl.entropy / steps;
            stats.approx_kl += pl.approx_kl / steps;
            stats.clip_fraction += pl.clip_fraction / steps;
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clip_examples() {
        assert!((clip_objective(1.5, 2.0, 0.2) - 2.4).abs() < 1e-12);
        assert!((clip_objective(0.5, -1.0, 0.2) + 0.8).abs() < 1e-12);
        assert_eq!(clip_objective(1.0, 0.7, 0.2), 0.7);
    }

    #[test]
    fn first_step_objective_is_mean_advantage() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let agent = PpoAgent::new(5, 3, PpoConfig::default(), &mut rng).unwrap();
        let obs: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let actions: Vec<usize> = (0..6).map(|i| i % 3).collect();
        let logprob_old = obs.iter().zip(&actions).map(|(o, &a)| agent.logprob(o, a).unwrap()).collect();
        let advantages = vec![0.5, -1.0, 2.0, 0.1, -0.3, 0.9];
        let mean = advantages.iter().sum::<f64>() / 6.0;
        let batch = Batch { obs, actions, logprob_old, advantages, returns: vec![0.0; 6] };
        let mut g = vec![0.0; agent.actor.num_params()];
        let idx: Vec<usize> = (0..6).collect();
        let pl = policy_loss_grad(&agent.actor, &batch, &idx, 0.2, 0.0, &mut g).unwrap();
        assert!((pl.objective - mean).abs() < 1e-12);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = PpoConfig { clip: 1.5, ..PpoConfig::default() };
        assert!(PpoAgent::new(5, 3, cfg, &mut rng).is_err());
    }

    #[test]
    fn empty_batch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut agent = PpoAgent::new(5, 3, PpoConfig::default(), &mut rng).unwrap();
        assert_eq!(agent.update(&Batch::default(), &mut rng).unwrap_err(), RlError::EmptyBatch);
    }
}
