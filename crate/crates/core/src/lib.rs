//! Two-vehicle lane-change simulation on closed model-car tracks: Frenet
//! geometry, kinematic world, hybrid A* lane-change planner with an emergency
//! supervisor, and a runtime monitor for premise/conclusion traffic rules.
//!
//! Trigonometry goes through `libm` rather than the platform C library. LLVM
//! fuses neighbouring `sin`/`cos` calls into `sincos` depending on inlining,
//! and glibc's `sincos` rounds differently from the separate calls, so the
//! same seed would give different runs in debug, test and release builds.

pub mod geometry;
pub mod planner;
pub mod rules;
pub mod world;

pub use geometry::{FrenetCoord, Point2, Pose, ReferencePath, TrackMap};
pub use planner::{HighLevelAction, Planner, PlannerConfig, PlannerEvent, Trajectory};
pub use rules::{AtomicValuation, RuleThresholds, RuleVerdict};
pub use world::{FrenetObservation, ScenarioConfig, VehicleParams, VehicleState, World};
