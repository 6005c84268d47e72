//! The training loop: collect an epoch, update, log a curve row, checkpoint.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tprl_rl::{Checkpoint, DdqnAgent, PpoAgent, ReplayBuffer, RlError};

use crate::agent::{ddqn_train, ppo_train, Agent, DdqnExplorer, PpoExplorer, N_ACTIONS, OBS_DIM};
use crate::config::{Algo, RunConfig};
use crate::env::Env;
use crate::rollout::{Collector, Rollout};
use crate::HarnessError;

/// One row of the curves CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epoch: usize,
    pub steps: u64,
    pub samples: usize,
    /// Mean discounted return of the periods finished in this epoch.
    pub mean_period_reward: f64,
    pub mean_step_reward: f64,
    /// Mean per-step reward contributed by each rule.
    pub r1_mean: f64,
    pub r2_mean: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub collisions: u64,
    pub emergencies: u64,
    pub episodes: u64,
}

impl CurveRow {
    fn from_rollout(epoch: usize, r: &Rollout) -> Self {
        let n = r.steps.max(1) as f64;
        let periods = r.period_returns.len();
        Self {
            epoch,
            steps: r.steps,
            samples: r.samples.len(),
            mean_period_reward: if periods > 0 { r.period_returns.iter().sum::<f64>() / periods as f64 } else { f64::NAN },
            mean_step_reward: r.reward_sum / n,
            r1_mean: r.r1_sum / n,
            r2_mean: r.r2_sum / n,
            policy_loss: 0.0,
            value_loss: 0.0,
            entropy: 0.0,
            approx_kl: 0.0,
            collisions: r.collisions,
            emergencies: r.emergencies,
            episodes: r.episodes_finished,
        }
    }
}

pub fn write_curves(path: &Path, rows: &[CurveRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Trace(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Trace(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_curves(path: &Path) -> Result<Vec<CurveRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::Trace(format!("{}: {e}", path.display())))?;
    r.deserialize().map(|row| row.map_err(|e| HarnessError::Trace(e.to_string()))).collect()
}

pub struct TrainOutput {
    pub agent: Agent,
    pub curves: Vec<CurveRow>,
    pub checkpoint: Checkpoint,
}

fn checkpoint_of(agent: &Agent, epoch: u64, rng: &ChaCha8Rng) -> Checkpoint {
    match agent {
        Agent::Ppo(a) => Checkpoint::from_ppo(a, epoch, rng),
        Agent::Ddqn(a) => Checkpoint::from_ddqn(a, epoch, rng),
    }
}

/// Rebuilds the agent stored in a checkpoint.
pub fn agent_from_checkpoint(ck: &Checkpoint, cfg: &RunConfig) -> Result<Agent, HarnessError> {
    Ok(match ck.algorithm {
        tprl_rl::Algorithm::Ppo => Agent::Ppo(ck.to_ppo(cfg.ppo_config())?),
        tprl_rl::Algorithm::Ddqn => Agent::Ddqn(ck.to_ddqn(cfg.ddqn_config())?),
    })
}

fn diverged(out: Option<&Path>, epoch: usize, err: HarnessError, ck: &Checkpoint) -> HarnessError {
    if let Some(dir) = out {
        let dump = format!("epoch {epoch}\nerror: {err}\nlast good checkpoint: checkpoint_last_good.bin\n");
        let _ = fs::write(dir.join("diagnostic.txt"), dump);
        let _ = ck.save(&dir.join("checkpoint_last_good.bin"));
    }
    HarnessError::Diverged { epoch, message: err.to_string() }
}

/// Trains from scratch. With `out`, writes `config.toml`, `curves.csv`,
/// periodic `checkpoint_epoch<k>.bin` files and the final `checkpoint.bin`.
/// `progress` sees every curve row as it is produced.
pub fn train(cfg: &RunConfig, out: Option<&Path>, progress: &mut dyn FnMut(&CurveRow)) -> Result<TrainOutput, HarnessError> {
    cfg.validate()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let p = dir.join("config.toml");
        fs::write(&p, cfg.to_toml()).map_err(|e| HarnessError::io(&p, e))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut agent = match cfg.algo {
        Algo::Ppo => Agent::Ppo(PpoAgent::new(OBS_DIM, N_ACTIONS, cfg.ppo_config(), &mut rng)?),
        Algo::Ddqn => Agent::Ddqn(DdqnAgent::new(OBS_DIM, N_ACTIONS, cfg.ddqn_config(), &mut rng)?),
    };
    let mut buffer = ReplayBuffer::new(cfg.ddqn.buffer_capacity);
    let mut decisions_seen = 0u64;
    let env = Env::from_config(cfg, cfg.build_map(cfg.train_map)?)?;
    let mut collector = Collector::new(env, cfg.variant, cfg.period, cfg.ppo.gamma, cfg.laps_per_episode);
    let mut curves = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let last_good = checkpoint_of(&agent, epoch as u64, &rng);
        let mut step = |agent: &mut Agent, rng: &mut ChaCha8Rng, buffer: &mut ReplayBuffer, seen: &mut u64| {
            let rollout = match agent {
                Agent::Ppo(a) => collector.collect(&mut PpoExplorer { agent: a, rng }, cfg.steps_per_epoch, false)?,
                Agent::Ddqn(a) => {
                    let progress = epoch as f64 / cfg.epochs.max(1) as f64;
                    let epsilon = a.cfg.epsilon(progress);
                    collector.collect(&mut DdqnExplorer { agent: a, rng, epsilon }, cfg.steps_per_epoch, false)?
                }
            };
            let mut row = CurveRow::from_rollout(epoch, &rollout);
            match agent {
                Agent::Ppo(a) => {
                    let stats = ppo_train(a, &rollout.samples, rng)?;
                    row.policy_loss = stats.policy_loss;
                    row.value_loss = stats.value_loss;
                    row.entropy = stats.entropy;
                    row.approx_kl = stats.approx_kl;
                }
                Agent::Ddqn(a) => {
                    row.value_loss = ddqn_train(a, buffer, &rollout.samples, seen, rng)?;
                }
            }
            if !(row.policy_loss.is_finite() && row.value_loss.is_finite()) {
                return Err(HarnessError::Rl(RlError::NonFinite(format!(
                    "losses {} / {}",
                    row.policy_loss, row.value_loss
                ))));
            }
            Ok::<_, HarnessError>(row)
        };
        let row = match step(&mut agent, &mut rng, &mut buffer, &mut decisions_seen) {
            Ok(row) => row,
            Err(e @ HarnessError::Rl(RlError::NonFinite(_))) => return Err(diverged(out, epoch, e, &last_good)),
            Err(e) => return Err(e),
        };
        progress(&row);
        curves.push(row);
        if let Some(dir) = out {
            if cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs {
                checkpoint_of(&agent, epoch as u64 + 1, &rng).save(&dir.join(format!("checkpoint_epoch{}.bin", epoch + 1)))?;
            }
        }
    }

    let checkpoint = checkpoint_of(&agent, cfg.epochs as u64, &rng);
    if let Some(dir) = out {
        checkpoint.save(&dir.join("checkpoint.bin"))?;
        write_curves(&dir.join("curves.csv"), &curves)?;
    }
    Ok(TrainOutput { agent, curves, checkpoint })
}

/// Standard file names inside a run directory.
pub fn run_files(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (dir.join("config.toml"), dir.join("checkpoint.bin"), dir.join("curves.csv"))
}
