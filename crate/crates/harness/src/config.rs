//! Run configuration, loaded from TOML.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tprl_core::geometry::{build_cross_map, build_oval_map, CrossParams, OvalParams};
use tprl_core::{PlannerConfig, RuleThresholds, ScenarioConfig, TrackMap};
use tprl_rl::{DdqnConfig, PpoConfig};

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Oval,
    Cross,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Ppo,
    Ddqn,
}

/// How often the high-level action is drawn and how samples are stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// A fresh action every step, one sample per step.
    NoSkip,
    /// Action held for a period, one sample per step.
    PeriodSkip,
    /// Action held for a period, one sample per period with the discounted period return.
    Tprl,
}

macro_rules! named_enum {
    ($t:ty, $($v:ident => $s:literal),+) => {
        impl $t {
            pub fn name(self) -> &'static str {
                match self { $(Self::$v => $s),+ }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $t {
            type Err = HarnessError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($s => Ok(Self::$v),)+
                    _ => Err(HarnessError::Config(format!(
                        "unknown {} '{s}', expected one of: {}", stringify!($t), [$($s),+].join(", ")
                    ))),
                }
            }
        }
    };
}

named_enum!(MapKind, Oval => "oval", Cross => "cross");
named_enum!(Algo, Ppo => "ppo", Ddqn => "ddqn");
named_enum!(Variant, NoSkip => "noskip", PeriodSkip => "periodskip", Tprl => "tprl");

/// PPO hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoParams {
    pub policy_lr: f64,
    /// Gradient descent steps per epoch.
    pub train_steps: usize,
    pub value_lr: f64,
    pub clip_ratio: f64,
    pub gamma: f64,
    pub minibatch: usize,
    /// GAE lambda.
    pub gae_lambda: f64,
    /// Optimize one combined loss with the coefficients below instead of two
    /// separate losses.
    pub combined_loss: bool,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

impl Default for PpoParams {
    fn default() -> Self {
        Self {
            policy_lr: 1e-3,
            train_steps: 80,
            value_lr: 3e-4,
            clip_ratio: 0.2,
            gamma: 0.99,
            minibatch: 46,
            gae_lambda: 0.97,
            combined_loss: false,
            value_coef: 0.5,
            entropy_coef: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdqnParams {
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_fraction: f64,
    pub target_sync: u64,
    pub lr: f64,
}

impl Default for DdqnParams {
    fn default() -> Self {
        let d = DdqnConfig::default();
        Self {
            buffer_capacity: d.buffer_capacity,
            batch_size: d.batch_size,
            eps_start: d.eps_start,
            eps_end: d.eps_end,
            eps_decay_fraction: d.eps_decay_fraction,
            target_sync: d.target_sync,
            lr: d.lr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train_map: MapKind,
    pub test_map: MapKind,
    pub algo: Algo,
    pub variant: Variant,
    pub seed: u64,
    pub epochs: usize,
    /// Simulation steps collected per epoch.
    pub steps_per_epoch: usize,
    /// Action sampling interval N in simulation steps.
    pub period: usize,
    /// Ego laps per training episode.
    pub laps_per_episode: u32,
    pub test_laps: u32,
    /// Step budget of a test run.
    pub test_step_cap: u64,
    /// Write an intermediate checkpoint every this many epochs; 0 disables.
    pub checkpoint_every: usize,
    /// Divisors applied to `(r_s, r_d, d_l, d_r, v)` before they reach the networks.
    pub obs_scale: [f64; 5],
    pub ppo: PpoParams,
    pub ddqn: DdqnParams,
    pub scenario: ScenarioConfig,
    pub planner: PlannerConfig,
    pub rules: RuleThresholds,
    pub oval: OvalParams,
    pub cross: CrossParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train_map: MapKind::Oval,
            test_map: MapKind::Cross,
            algo: Algo::Ppo,
            variant: Variant::Tprl,
            seed: 1,
            epochs: 200,
            steps_per_epoch: 20_000,
            period: 300,
            laps_per_episode: 5,
            test_laps: 10,
            test_step_cap: 300_000,
            checkpoint_every: 10,
            obs_scale: [5.0, 0.8, 0.8, 0.8, 0.556],
            ppo: PpoParams::default(),
            ddqn: DdqnParams::default(),
            scenario: ScenarioConfig::default(),
            planner: PlannerConfig::default(),
            rules: RuleThresholds::default(),
            oval: OvalParams::default(),
            cross: CrossParams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.period == 0 {
            return bad("period must be positive");
        }
        if self.steps_per_epoch == 0 {
            return bad("steps_per_epoch must be positive");
        }
        if self.variant == Variant::Tprl && self.steps_per_epoch < self.period {
            return bad("steps_per_epoch must cover at least one period");
        }
        if self.laps_per_episode == 0 || self.test_laps == 0 {
            return bad("lap quotas must be positive");
        }
        if self.obs_scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("obs_scale entries must be positive");
        }
        if !(self.ddqn.batch_size > 0 && self.ddqn.batch_size <= self.ddqn.buffer_capacity) {
            return bad("ddqn batch_size must lie in 1..=buffer_capacity");
        }
        self.ppo_config().validate()?;
        Ok(())
    }

    pub fn ppo_config(&self) -> PpoConfig {
        let p = &self.ppo;
        PpoConfig {
            clip: p.clip_ratio,
            actor_lr: p.policy_lr,
            critic_lr: p.value_lr,
            train_steps: p.train_steps,
            gamma: p.gamma,
            lambda: p.gae_lambda,
            minibatch: p.minibatch,
            entropy_coef: p.entropy_coef,
            value_coef: p.value_coef,
            combined: p.combined_loss,
        }
    }

    pub fn ddqn_config(&self) -> DdqnConfig {
        let d = &self.ddqn;
        DdqnConfig {
            buffer_capacity: d.buffer_capacity,
            batch_size: d.batch_size,
            eps_start: d.eps_start,
            eps_end: d.eps_end,
            eps_decay_fraction: d.eps_decay_fraction,
            target_sync: d.target_sync,
            lr: d.lr,
            gamma: self.ppo.gamma,
        }
    }

    pub fn build_map(&self, kind: MapKind) -> Result<TrackMap, HarnessError> {
        Ok(match kind {
            MapKind::Oval => build_oval_map(&self.oval)?,
            MapKind::Cross => build_cross_map(&self.cross)?,
        })
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("run configuration serializes");
        hex::encode(Sha256::digest(&json))
    }
}
