//! Learners and the policies they expose to the collector.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tprl_rl::ddqn::epsilon_greedy;
use tprl_rl::policy::sample_action;
use tprl_rl::{
    gae_advantages, rewards_to_go_bootstrapped, Batch, DdqnAgent, PpoAgent, PpoStats, ReplayBuffer, Transition,
};

use crate::rollout::{Decision, Policy, Sample, SampleEnd};
use crate::HarnessError;

pub const OBS_DIM: usize = 5;
pub const N_ACTIONS: usize = 3;

/// Contiguous runs of samples, each closed by a terminal, a truncation or the
/// end of the rollout.
fn segments(samples: &[Sample]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, s) in samples.iter().enumerate() {
        if s.end != SampleEnd::Continue || i + 1 == samples.len() {
            out.push(start..i + 1);
            start = i + 1;
        }
    }
    out
}

/// GAE advantages and discounted rewards-to-go over a rollout. Segments cut by
/// a collision bootstrap with zero, all others with `value(next_obs)`.
pub fn advantages_and_returns(
    samples: &[Sample],
    gamma: f64,
    lambda: f64,
    mut value: impl FnMut(&[f64]) -> Result<f64, HarnessError>,
) -> Result<(Vec<f64>, Vec<f64>), HarnessError> {
    let mut adv = Vec::with_capacity(samples.len());
    let mut ret = Vec::with_capacity(samples.len());
    for seg in segments(samples) {
        let part = &samples[seg];
        let last = part.last().expect("segments are non-empty");
        let bootstrap = if last.end == SampleEnd::Terminal { 0.0 } else { value(&last.next_obs)? };
        let rewards: Vec<f64> = part.iter().map(|s| s.reward).collect();
        let values: Vec<f64> = part.iter().map(|s| s.value).collect();
        adv.extend(gae_advantages(&rewards, &values, bootstrap, gamma, lambda)?);
        ret.extend(rewards_to_go_bootstrapped(&rewards, gamma, bootstrap));
    }
    Ok((adv, ret))
}

/// Stochastic PPO policy used while collecting.
pub struct PpoExplorer<'a> {
    pub agent: &'a PpoAgent,
    pub rng: &'a mut ChaCha8Rng,
}

impl Policy for PpoExplorer<'_> {
    fn decide(&mut self, obs: &[f64]) -> Result<Decision, HarnessError> {
        let logits = self.agent.actor.forward(obs)?;
        let (action, logprob) = sample_action(&logits, self.rng);
        Ok(Decision { action, logprob, value: self.agent.value(obs)? })
    }

    fn score(&mut self, obs: &[f64], action: usize) -> Result<Decision, HarnessError> {
        Ok(Decision { action, logprob: self.agent.logprob(obs, action)?, value: self.agent.value(obs)? })
    }
}

/// Epsilon-greedy DDQN policy used while collecting.
pub struct DdqnExplorer<'a> {
    pub agent: &'a DdqnAgent,
    pub rng: &'a mut ChaCha8Rng,
    pub epsilon: f64,
}

impl Policy for DdqnExplorer<'_> {
    fn decide(&mut self, obs: &[f64]) -> Result<Decision, HarnessError> {
        let q = self.agent.q_values(obs)?;
        let action = epsilon_greedy(&q, self.epsilon, self.rng);
        Ok(Decision { action, logprob: 0.0, value: q[action] })
    }

    fn score(&mut self, obs: &[f64], action: usize) -> Result<Decision, HarnessError> {
        let q = self.agent.q_values(obs)?;
        Ok(Decision { action, logprob: 0.0, value: q[action] })
    }
}

/// Trained networks in inference form.
#[derive(Clone, Debug)]
pub enum Agent {
    Ppo(PpoAgent),
    Ddqn(DdqnAgent),
}

/// Argmax policy for evaluation.
pub struct Greedy<'a>(pub &'a Agent);

impl Policy for Greedy<'_> {
    fn decide(&mut self, obs: &[f64]) -> Result<Decision, HarnessError> {
        let action = match self.0 {
            Agent::Ppo(a) => a.greedy(obs)?,
            Agent::Ddqn(a) => a.greedy(obs)?,
        };
        Ok(Decision { action, logprob: 0.0, value: 0.0 })
    }

    fn score(&mut self, _obs: &[f64], action: usize) -> Result<Decision, HarnessError> {
        Ok(Decision { action, logprob: 0.0, value: 0.0 })
    }
}

/// Always the same action; used for scripted baselines.
pub struct Scripted(pub usize);

impl Policy for Scripted {
    fn decide(&mut self, _obs: &[f64]) -> Result<Decision, HarnessError> {
        Ok(Decision { action: self.0, logprob: 0.0, value: 0.0 })
    }

    fn score(&mut self, _obs: &[f64], action: usize) -> Result<Decision, HarnessError> {
        Ok(Decision { action, logprob: 0.0, value: 0.0 })
    }
}

/// Uniformly random actions; the reference for an untrained policy.
pub struct Uniform<'a>(pub &'a mut ChaCha8Rng);

impl Policy for Uniform<'_> {
    fn decide(&mut self, _obs: &[f64]) -> Result<Decision, HarnessError> {
        let action = self.0.random_range(0..N_ACTIONS);
        Ok(Decision { action, logprob: -(N_ACTIONS as f64).ln(), value: 0.0 })
    }

    fn score(&mut self, _obs: &[f64], action: usize) -> Result<Decision, HarnessError> {
        Ok(Decision { action, logprob: -(N_ACTIONS as f64).ln(), value: 0.0 })
    }
}

/// PPO update on one rollout.
pub fn ppo_train(agent: &mut PpoAgent, samples: &[Sample], rng: &mut ChaCha8Rng) -> Result<PpoStats, HarnessError> {
    let (gamma, lambda) = (agent.cfg.gamma, agent.cfg.lambda);
    let (advantages, returns) = advantages_and_returns(samples, gamma, lambda, |o| Ok(agent.value(o)?))?;
    let batch = Batch {
        obs: samples.iter().map(|s| s.obs.clone()).collect(),
        actions: samples.iter().map(|s| s.action).collect(),
        logprob_old: samples.iter().map(|s| s.logprob).collect(),
        advantages,
        returns,
    };
    Ok(agent.update(&batch, rng)?)
}

/// Pushes a rollout into the replay buffer and runs one gradient step per
/// new transition once the buffer can fill a batch. Returns the mean loss.
pub fn ddqn_train(
    agent: &mut DdqnAgent,
    buffer: &mut ReplayBuffer,
    samples: &[Sample],
    decisions_seen: &mut u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64, HarnessError> {
    let mut loss = 0.0;
    let mut n = 0usize;
    for s in samples {
        buffer.push(Transition {
            obs: s.obs.clone(),
            action: s.action,
            reward: s.reward,
            next_obs: s.next_obs.clone(),
            done: s.end == SampleEnd::Terminal,
        });
        *decisions_seen += 1;
        if buffer.len() >= agent.cfg.batch_size {
            loss += agent.update(buffer, rng)?;
            n += 1;
        }
        if agent.cfg.target_sync > 0 && *decisions_seen % agent.cfg.target_sync == 0 {
            agent.sync_target();
        }
    }
    Ok(if n > 0 { loss / n as f64 } else { 0.0 })
}
