//! Decision-period training and evaluation on top of the simulator, planner
//! and rule monitor in `tprl-core`, using the learners in `tprl-rl`.
//!
//! A high-level action is held for a period of N simulation steps while the
//! planner turns it into controls. The three variants differ in how often an
//! action is drawn and in what is stored for learning:
//!
//! | variant      | action drawn   | samples stored                       |
//! |--------------|----------------|--------------------------------------|
//! | `noskip`     | every step     | one per step                         |
//! | `periodskip` | every N steps  | one per step                         |
//! | `tprl`       | every N steps  | one per period, discounted sum reward |

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;
use tprl_core::geometry::GeometryError;
use tprl_core::world::WorldError;
use tprl_rl::RlError;

pub mod agent;
pub mod config;
pub mod env;
pub mod evaluate;
pub mod rollout;
pub mod trace;
pub mod train;

pub use config::{Algo, MapKind, RunConfig, Variant};
pub use env::{Env, StepRecord};
pub use evaluate::{evaluate, metrics_from_trace, Metrics, TestRun};
pub use rollout::{run_decision_period, Collector, PeriodAccumulator, Policy, Rollout};
pub use train::{train, CurveRow, TrainOutput};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("policy error: {0}")]
    Policy(String),
    #[error("trace error: {0}")]
    Trace(String),
    #[error("test run reached the cap of {cap} steps after {} laps", metrics.laps)]
    StepCap { cap: u64, metrics: Box<Metrics> },
    #[error("training diverged at epoch {epoch}: {message}")]
    Diverged { epoch: usize, message: String },
}

impl HarnessError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}
