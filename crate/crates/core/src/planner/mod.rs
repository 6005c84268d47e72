//! Low-level lane-change layer: goal selection, hybrid A* trajectory search,
//! pure-pursuit tracking and the emergency-brake supervisor.

mod astar;
mod supervisor;
mod tracker;

pub use astar::{hybrid_astar_plan, min_clearance, ObstaclePrediction, PlanError, PlanRequest, SpeedProfile};
pub use supervisor::{leader_gap, EmergencySupervisor};
pub use tracker::{lane_keep_control, track_trajectory, TrackOutput};

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, TrackMap};
use crate::world::{Control, VehicleParams, World};

/// High-level decision of the agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HighLevelAction {
    Stay,
    ChangeLeft,
    ChangeRight,
}

impl HighLevelAction {
    pub const ALL: [HighLevelAction; 3] = [Self::Stay, Self::ChangeLeft, Self::ChangeRight];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Lane reached by this action from `lane`. Changes off the road become `Stay`.
    pub fn degrade(self, lane: usize, lane_count: usize) -> Self {
        match self {
            Self::ChangeLeft if lane + 1 >= lane_count => Self::Stay,
            Self::ChangeRight if lane == 0 => Self::Stay,
            a => a,
        }
    }

    pub fn goal_lane(self, lane: usize, lane_count: usize) -> usize {
        match self.degrade(lane, lane_count) {
            Self::Stay => lane,
            Self::ChangeLeft => lane + 1,
            Self::ChangeRight => lane - 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub cruise_speed: f64,
    pub follow_speed: f64,
    /// Arc length between the ego and a lane-change goal.
    pub goal_lookahead: f64,
    pub r_safe: f64,
    pub d_emergency: f64,
    pub emergency_hysteresis: f64,
    pub grid_xy: f64,
    pub grid_theta_deg: f64,
    pub primitive_arc: f64,
    pub node_budget: usize,
    pub steer_change_weight: f64,
    /// Acceleration of the speed ramps in planned trajectories.
    pub ramp_accel: f64,
    pub sample_dt: f64,
    pub lookahead_min: f64,
    /// Seconds; the pure-pursuit lookahead grows with speed.
    pub lookahead_gain: f64,
    pub speed_gain: f64,
    /// Desired bumper gap to a slower leader when lane keeping.
    pub follow_gap: f64,
    pub follow_gain: f64,
    /// Steps during which lane-change requests are ignored after a failed plan.
    pub replan_cooldown: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            cruise_speed: 0.556,
            follow_speed: 0.278,
            goal_lookahead: 1.5,
            r_safe: 0.1,
            d_emergency: 0.25,
            emergency_hysteresis: 0.05,
            grid_xy: 0.05,
            grid_theta_deg: 10.0,
            primitive_arc: 0.15,
            node_budget: 200_000,
            steer_change_weight: 0.1,
            ramp_accel: 0.5,
            sample_dt: 0.01,
            lookahead_min: 0.2,
            lookahead_gain: 0.3,
            speed_gain: 3.0,
            follow_gap: 0.6,
            follow_gain: 0.5,
            replan_cooldown: 25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub steer: f64,
}

impl TrajectorySample {
    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.theta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub goal_lane: usize,
    pub creation_step: u64,
    /// Arc length of the geometric path.
    pub path_length: f64,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }
}

/// Goal state of a high-level action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoalPose {
    pub pose: Pose,
    pub v: f64,
    pub lane: usize,
    /// Reference-path arc length of the goal.
    pub s_ref: f64,
}

/// Goal on the centerline of the lane selected by `action`, `goal_lookahead` ahead of the ego.
pub fn lane_change_goal(world: &World, map: &TrackMap, action: HighLevelAction, cfg: &PlannerConfig) -> GoalPose {
    let fix = world.ego_fix();
    let action = action.degrade(fix.lane, map.lane_count());
    let lane = action.goal_lane(fix.lane, map.lane_count());
    let s_ref = map.reference().wrap_s(fix.reference.s + cfg.goal_lookahead);
    let pose = map
        .reference()
        .to_cartesian(crate::geometry::FrenetCoord::new(s_ref, map.lane_offset(lane)))
        .unwrap_or_else(|_| map.centerlines()[lane].pose_at(s_ref));
    let v = match action {
        HighLevelAction::Stay => match leader_gap(world, map) {
            Some((gap, _)) if gap < cfg.goal_lookahead + 1.0 => cfg.follow_speed,
            _ => cfg.cruise_speed,
        },
        _ => cfg.cruise_speed,
    };
    GoalPose { pose, v, lane, s_ref }
}

/// Constant-velocity prediction of the other vehicle along its lane.
pub fn predict_obstacles(world: &World) -> Vec<ObstaclePrediction> {
    vec![ObstaclePrediction {
        lane: world.target_lane(),
        s0: world.target_s(),
        d: 0.0,
        v: world.target_speed(),
        length: world.target.length,
        width: world.target.width,
    }]
}

/// Plans toward the goal of `action` from the current ego state.
pub fn plan_action(
    world: &World,
    map: &TrackMap,
    action: HighLevelAction,
    cfg: &PlannerConfig,
) -> Result<Trajectory, PlanError> {
    let goal = lane_change_goal(world, map, action, cfg);
    let obstacles = predict_obstacles(world);
    let req = PlanRequest {
        map,
        start: world.ego.pose(),
        start_v: world.ego.v,
        start_ref_s: world.ego_fix().reference.s,
        goal,
        obstacles: &obstacles,
        creation_step: world.step_index(),
        vehicle: world.params,
    };
    hybrid_astar_plan(&req, cfg)
}

/// Events raised by one planner step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerEvent {
    pub planned: bool,
    pub refused: bool,
    pub completed: bool,
    /// Rising edge of the emergency brake.
    pub emergency: bool,
    pub plan_failed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannerOutput {
    pub control: Control,
    pub events: PlannerEvent,
    pub emergency_active: bool,
}

/// Orchestrates planning, tracking, lane keeping and emergency braking.
#[derive(Clone, Debug)]
pub struct Planner {
    pub cfg: PlannerConfig,
    active: Option<Trajectory>,
    progress: usize,
    started_at: f64,
    supervisor: EmergencySupervisor,
    cooldown_until: u64,
}

impl Planner {
    pub fn new(cfg: PlannerConfig) -> Self {
        Self { cfg, active: None, progress: 0, started_at: 0.0, supervisor: EmergencySupervisor::default(), cooldown_until: 0 }
    }

    pub fn active_trajectory(&self) -> Option<&Trajectory> {
        self.active.as_ref()
    }

    pub fn emergency_active(&self) -> bool {
        self.supervisor.active()
    }

    pub fn emergency_count(&self) -> u64 {
        self.supervisor.activations()
    }

    /// Installs a trajectory as if it had just been planned.
    pub fn install(&mut self, traj: Trajectory, now: f64) {
        self.active = Some(traj);
        self.progress = 0;
        self.started_at = now;
    }

    /// One control step. `request` is a new high-level action, if any.
    pub fn step(&mut self, world: &World, map: &TrackMap, request: Option<HighLevelAction>) -> PlannerOutput {
        let mut events = PlannerEvent::default();
        let params: VehicleParams = world.params;
        let (emergency, rising) = self.supervisor.update(world, map, &self.cfg);
        if rising {
            events.emergency = true;
            self.active = None;
        }

        if let Some(action) = request {
            let action = action.degrade(world.ego.lane, map.lane_count());
            if action != HighLevelAction::Stay {
                if self.active.is_some() {
                    events.refused = true;
                } else if !emergency && world.step_index() >= self.cooldown_until {
                    match plan_action(world, map, action, &self.cfg) {
                        Ok(traj) => {
                            self.install(traj, world.sim_time());
                            events.planned = true;
                        }
                        Err(_) => {
                            events.plan_failed = true;
                            self.cooldown_until = world.step_index() + self.cfg.replan_cooldown;
                        }
                    }
                }
            }
        }

        let lane_keep = |planner: &Self| {
            let v_ref = match leader_gap(world, map) {
                Some((gap, v_lead)) => {
                    (v_lead + planner.cfg.follow_gain * (gap - planner.cfg.follow_gap)).clamp(0.0, planner.cfg.cruise_speed)
                }
                None => planner.cfg.cruise_speed,
            };
            lane_keep_control(world, map, world.ego.lane, v_ref, &planner.cfg)
        };

        let control = if emergency {
            let steer = lane_keep(self).steer;
            Control::new(-params.max_decel, steer)
        } else if let Some(traj) = &self.active {
            let out = track_trajectory(&world.ego, traj, world.sim_time() - self.started_at, &mut self.progress, &self.cfg, &params);
            if out.completed {
                self.active = None;
                events.completed = true;
                lane_keep(self)
            } else {
                out.control
            }
        } else {
            lane_keep(self)
        };
        PlannerOutput { control, events, emergency_active: emergency }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_oval_map, OvalParams};
    use crate::world::{init_scenario, ScenarioConfig};

    #[test]
    fn boundary_actions_degrade() {
        assert_eq!(HighLevelAction::ChangeRight.degrade(0, 2), HighLevelAction::Stay);
        assert_eq!(HighLevelAction::ChangeLeft.degrade(1, 2), HighLevelAction::Stay);
        assert_eq!(HighLevelAction::ChangeLeft.goal_lane(0, 2), 1);
        assert_eq!(HighLevelAction::from_index(2), Some(HighLevelAction::ChangeRight));
        assert_eq!(HighLevelAction::from_index(3), None);
    }

    fn following_world() -> (TrackMap, World) {
        let map = build_oval_map(&OvalParams::default()).unwrap();
        let cfg = ScenarioConfig { ego_spawn_delay: 0.0, target_spawn_s: 1.0, ..ScenarioConfig::default() };
        let w = init_scenario(&map, &cfg).unwrap();
        (map, w)
    }

    #[test]
    fn goals() {
        let (map, w) = following_world();
        let cfg = PlannerConfig::default();
        let left = lane_change_goal(&w, &map, HighLevelAction::ChangeLeft, &cfg);
        assert_eq!(left.lane, 1);
        assert!((left.s_ref - 1.5).abs() < 1e-9 && (left.v - 0.556).abs() < 1e-15);
        assert!((map.reference().project(left.pose.position()).d - 0.8).abs() < 1e-9);
        let right = lane_change_goal(&w, &map, HighLevelAction::ChangeRight, &cfg);
        let stay = lane_change_goal(&w, &map, HighLevelAction::Stay, &cfg);
        assert_eq!(right, stay);
        assert_eq!(stay.lane, 0);
        assert!((stay.v - 0.278).abs() < 1e-15);
    }

    #[test]
    fn request_while_active_is_refused() {
        let (map, w) = following_world();
        let mut p = Planner::new(PlannerConfig::default());
        let out = p.step(&w, &map, Some(HighLevelAction::ChangeLeft));
        assert!(out.events.planned);
        assert_eq!(p.active_trajectory().unwrap().goal_lane, 1);
        let out = p.step(&w, &map, Some(HighLevelAction::ChangeLeft));
        assert!(out.events.refused && !out.events.planned);
        assert!(p.active_trajectory().is_some());
    }

    #[test]
    fn emergency_overrides_tracking() {
        let (map, mut w) = following_world();
        let mut p = Planner::new(PlannerConfig::default());
        assert!(p.step(&w, &map, Some(HighLevelAction::ChangeLeft)).events.planned);
        w.place_target(&map, 0, 0.55, 0.278);
        let out = p.step(&w, &map, None);
        assert!(out.events.emergency && out.emergency_active);
        assert_eq!(out.control.accel, -w.params.max_decel);
        assert!(p.active_trajectory().is_none());
    }
}
