//! Small actor-critic networks with hand-written backpropagation, PPO with a
//! clipped surrogate, Double DQN, and a binary checkpoint format.

pub mod adam;
pub mod advantage;
pub mod checkpoint;
pub mod ddqn;
pub mod gradcheck;
pub mod mlp;
pub mod policy;
pub mod ppo;

pub use adam::Adam;
pub use advantage::{gae_advantages, normalize, rewards_to_go, rewards_to_go_bootstrapped};
pub use checkpoint::{Algorithm, Checkpoint, RngState};
pub use ddqn::{DdqnAgent, DdqnConfig, ReplayBuffer, Transition};
pub use mlp::Mlp;
pub use ppo::{clip_objective, Batch, PpoAgent, PpoConfig, PpoStats};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("replay buffer holds {have} transitions, {need} needed")]
    InsufficientData { have: usize, need: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
