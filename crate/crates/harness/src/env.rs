//! Simulator, planner and rule monitor bundled into one steppable environment.

use serde::{Deserialize, Serialize};
use tprl_core::planner::PlannerEvent;
use tprl_core::rules::{eval_atomics, eval_rules};
use tprl_core::world::init_scenario;
use tprl_core::{
    AtomicValuation, HighLevelAction, Planner, PlannerConfig, RuleThresholds, RuleVerdict, ScenarioConfig, TrackMap,
    World,
};

use crate::config::RunConfig;
use crate::HarnessError;

/// One simulation step as written to the trace log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Steps taken by this environment since creation, across episodes.
    pub step: u64,
    pub episode: u64,
    pub episode_step: u64,
    /// Simulation time of the world after the step.
    pub t: f64,
    /// Ego `x, y, theta, v` after the step.
    pub ego: [f64; 4],
    pub target: [f64; 4],
    pub lane: usize,
    /// Raw observation the action was chosen from (before the step).
    pub obs: [f64; 5],
    /// High-level action in force during this step.
    pub action: HighLevelAction,
    /// What was handed to the planner, if anything.
    pub request: Option<HighLevelAction>,
    /// A new action was drawn from the policy at this step.
    pub decision: bool,
    /// A learning sample starts at this step.
    pub sample: bool,
    pub planner: PlannerEvent,
    pub emergency_active: bool,
    pub collision: bool,
    /// Laps completed so far; cumulative over resets in test runs.
    pub laps: u32,
    pub atomics: AtomicValuation,
    pub verdict: RuleVerdict,
    pub reward: i32,
    /// Discounted return of the period that ends with this step.
    pub period_return: Option<f64>,
}

pub struct Env {
    map: TrackMap,
    scenario: ScenarioConfig,
    planner_cfg: PlannerConfig,
    thresholds: RuleThresholds,
    obs_scale: [f64; 5],
    world: World,
    planner: Planner,
    episode: u64,
    episode_step: u64,
    total_steps: u64,
}

impl Env {
    pub fn new(
        map: TrackMap,
        scenario: ScenarioConfig,
        planner_cfg: PlannerConfig,
        thresholds: RuleThresholds,
        obs_scale: [f64; 5],
    ) -> Result<Self, HarnessError> {
        let world = init_scenario(&map, &scenario)?;
        let planner = Planner::new(planner_cfg.clone());
        Ok(Self {
            map,
            scenario,
            planner_cfg,
            thresholds,
            obs_scale,
            world,
            planner,
            episode: 0,
            episode_step: 0,
            total_steps: 0,
        })
    }

    pub fn from_config(cfg: &RunConfig, map: TrackMap) -> Result<Self, HarnessError> {
        Self::new(map, cfg.scenario.clone(), cfg.planner.clone(), cfg.rules.clone(), cfg.obs_scale)
    }

    /// Starts a new episode from the initial scenario.
    pub fn reset(&mut self) -> Result<(), HarnessError> {
        self.world = init_scenario(&self.map, &self.scenario)?;
        self.planner = Planner::new(self.planner_cfg.clone());
        self.episode += 1;
        self.episode_step = 0;
        Ok(())
    }

    pub fn map(&self) -> &TrackMap {
        &self.map
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn planner(&self) -> &Planner {
        &self.planner
    }

    pub fn dt(&self) -> f64 {
        self.world.dt()
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn episode_step(&self) -> u64 {
        self.episode_step
    }

    pub fn laps(&self) -> u32 {
        self.world.ego_laps()
    }

    pub fn is_halted(&self) -> bool {
        self.world.is_halted()
    }

    /// True when no lane-change trajectory is being tracked.
    pub fn planner_idle(&self) -> bool {
        self.planner.active_trajectory().is_none()
    }

    pub fn raw_observation(&self) -> [f64; 5] {
        self.world.observe(&self.map).to_array()
    }

    /// Observation scaled for the networks.
    pub fn observation(&self) -> Vec<f64> {
        self.normalize(&self.raw_observation())
    }

    pub fn normalize(&self, raw: &[f64; 5]) -> Vec<f64> {
        raw.iter().zip(&self.obs_scale).map(|(v, s)| v / s).collect()
    }

    /// Runs the planner and the world for one step and scores the new state.
    pub fn step(&mut self, action: HighLevelAction, request: Option<HighLevelAction>) -> Result<StepRecord, HarnessError> {
        let obs = self.raw_observation();
        let out = self.planner.step(&self.world, &self.map, request);
        let events = self.world.step(&self.map, out.control, out.emergency_active)?;
        let atomics = eval_atomics(&self.world, &self.map, &self.thresholds);
        let verdict = eval_rules(&atomics);
        self.total_steps += 1;
        self.episode_step += 1;
        let (e, t) = (&self.world.ego, &self.world.target);
        Ok(StepRecord {
            step: self.total_steps,
            episode: self.episode,
            episode_step: self.episode_step,
            t: self.world.sim_time(),
            ego: [e.x, e.y, e.theta, e.v],
            target: [t.x, t.y, t.theta, t.v],
            lane: e.lane,
            obs,
            action,
            request,
            decision: false,
            sample: false,
            planner: out.events,
            emergency_active: out.emergency_active,
            collision: events.collision,
            laps: self.world.ego_laps(),
            atomics,
            verdict,
            reward: verdict.step_reward,
            period_return: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MapKind;

    #[test]
    fn stay_behind_slow_target_is_compliant() {
        let cfg = RunConfig::default();
        let mut env = Env::from_config(&cfg, cfg.build_map(MapKind::Oval).unwrap()).unwrap();
        for _ in 0..1500 {
            let r = env.step(HighLevelAction::Stay, Some(HighLevelAction::Stay)).unwrap();
            assert!(!r.collision);
        }
        let r = env.step(HighLevelAction::Stay, None).unwrap();
        assert_eq!(r.lane, 0);
        assert_eq!(r.reward, 0);
        assert_eq!(r.step, 1501);
        assert!((r.ego[3] - 0.278).abs() < 0.02, "following speed {}", r.ego[3]);
    }

    #[test]
    fn reset_starts_new_episode() {
        let cfg = RunConfig::default();
        let mut env = Env::from_config(&cfg, cfg.build_map(MapKind::Cross).unwrap()).unwrap();
        let first = env.observation();
        env.step(HighLevelAction::Stay, None).unwrap();
        env.reset().unwrap();
        assert_eq!(env.episode(), 1);
        assert_eq!(env.episode_step(), 0);
        assert_eq!(env.observation(), first);
    }
}
