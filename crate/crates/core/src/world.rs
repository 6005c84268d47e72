//! Two-vehicle kinematic world: bicycle-model ego, lane-following target,
//! scenario spawning, Frenet observations and footprint collisions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{lane_boundary_distances, FrenetCoord, GeometryError, LanePosition, Point2, Pose, TrackMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("spawn poses overlap")]
    SpawnCollision,
    #[error("the world halted after a collision at step {0}")]
    Halted(u64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub v_max: f64,
    /// Radians.
    pub steer_max: f64,
    pub max_accel: f64,
    /// Positive magnitude of the strongest braking.
    pub max_decel: f64,
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 0.36,
            v_max: 1.0,
            steer_max: 30f64.to_radians(),
            max_accel: 1.0,
            max_decel: 6.0,
            length: 0.4,
            width: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub lane: usize,
    pub length: f64,
    pub width: f64,
}

impl VehicleState {
    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.theta)
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn footprint(&self) -> [Point2; 4] {
        footprint(self.pose(), self.length, self.width)
    }
}

/// Corners of a `length` x `width` rectangle centered on `pose`, counterclockwise.
pub fn footprint(pose: Pose, length: f64, width: f64) -> [Point2; 4] {
    let f = Point2::from_heading(pose.theta) * (0.5 * length);
    let l = Point2::from_heading(pose.theta).perp() * (0.5 * width);
    let c = pose.position();
    [c + f - l, c + f + l, c - f + l, c - f - l]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub accel: f64,
    pub steer: f64,
}

impl Control {
    pub const fn new(accel: f64, steer: f64) -> Self {
        Self { accel, steer }
    }
}

/// One explicit Euler step of the kinematic bicycle. Controls are saturated
/// at the vehicle bounds and speed never goes negative.
pub fn step_vehicle(state: &VehicleState, control: Control, dt: f64, params: &VehicleParams) -> VehicleState {
    let steer = control.steer.clamp(-params.steer_max, params.steer_max);
    let accel = control.accel.clamp(-params.max_decel, params.max_accel);
    let mut next = *state;
    next.x += state.v * libm::cos(state.theta) * dt;
    next.y += state.v * libm::sin(state.theta) * dt;
    next.theta += state.v * libm::tan(steer) / params.wheelbase * dt;
    next.v = (state.v + accel * dt).clamp(0.0, params.v_max);
    next
}

fn project(poly: &[Point2; 4], axis: Point2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in poly {
        let v = p.dot(axis);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Separating-axis test. Rectangles that merely touch do not overlap.
pub fn footprints_overlap(a: &[Point2; 4], b: &[Point2; 4]) -> bool {
    for poly in [a, b] {
        for i in 0..2 {
            let axis = (poly[i + 1] - poly[i]).perp();
            let (alo, ahi) = project(a, axis);
            let (blo, bhi) = project(b, axis);
            if ahi <= blo || bhi <= alo {
                return false;
            }
        }
    }
    true
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    let u = if len_sq > 0.0 { ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(a + ab * u)
}

/// Euclidean distance between two convex quadrilaterals, 0 when they overlap.
pub fn footprint_clearance(a: &[Point2; 4], b: &[Point2; 4]) -> f64 {
    if footprints_overlap(a, b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let (a0, a1) = (a[i], a[(i + 1) % 4]);
        let (b0, b1) = (b[i], b[(i + 1) % 4]);
        for j in 0..4 {
            best = best.min(point_segment_distance(b[j], a0, a1));
            best = best.min(point_segment_distance(a[j], b0, b1));
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub dt: f64,
    pub target_speed: f64,
    pub ego_speed: f64,
    /// Seconds the target drives alone before the ego appears.
    pub ego_spawn_delay: f64,
    /// Reference-path arc length of the ego spawn point.
    pub ego_spawn_s: f64,
    pub ego_lane: usize,
    /// Arc length along the target's lane at t = 0.
    pub target_spawn_s: f64,
    /// `None` means the rightmost lane.
    pub target_lane: Option<usize>,
    pub vehicle: VehicleParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            target_speed: 0.278,
            ego_speed: 0.556,
            ego_spawn_delay: 8.0,
            ego_spawn_s: 0.0,
            ego_lane: 0,
            target_spawn_s: 0.0,
            target_lane: None,
            vehicle: VehicleParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn delay_steps(&self) -> u64 {
        (self.ego_spawn_delay / self.dt).round() as u64
    }
}

/// Events raised by the most recent step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Events {
    pub collision: bool,
    pub lap_completed: bool,
    pub target_lap: bool,
    pub emergency_brake_active: bool,
}

/// Agent-facing observation `(r_s, r_d, d_l, d_r, v)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrenetObservation {
    pub r_s: f64,
    pub r_d: f64,
    pub d_l: f64,
    pub d_r: f64,
    pub v: f64,
}

impl FrenetObservation {
    pub fn to_array(&self) -> [f64; 5] {
        [self.r_s, self.r_d, self.d_l, self.d_r, self.v]
    }
}

#[derive(Clone, Debug)]
pub struct World {
    pub ego: VehicleState,
    pub target: VehicleState,
    pub params: VehicleParams,
    dt: f64,
    step_index: u64,
    halted: bool,
    events: Events,
    last_control: Control,
    target_lane: usize,
    target_s: f64,
    target_speed: f64,
    ego_fix: LanePosition,
    ego_prev_lane: usize,
    target_ref: FrenetCoord,
    target_on_ego_lane: FrenetCoord,
    ego_wraps: i64,
    ego_laps: u32,
    target_laps: u32,
}

/// Spawns the target, runs the target alone for the configured delay and then
/// spawns the ego.
pub fn init_scenario(map: &TrackMap, cfg: &ScenarioConfig) -> Result<World, WorldError> {
    if !(cfg.dt > 0.0) || cfg.ego_spawn_delay < 0.0 || cfg.target_speed < 0.0 || cfg.ego_speed < 0.0 {
        return Err(WorldError::InvalidScenario(format!("{cfg:?}")));
    }
    let target_lane = cfg.target_lane.unwrap_or(map.rightmost_lane_index());
    let lane_path = map.centerline(target_lane)?;
    let delay = cfg.delay_steps();
    let mut s = lane_path.wrap_s(cfg.target_spawn_s);
    for _ in 0..delay {
        s = lane_path.wrap_s(s + cfg.target_speed * cfg.dt);
    }
    let ego_lane = cfg.ego_lane;
    let ego_pose = map.reference().to_cartesian(FrenetCoord::new(cfg.ego_spawn_s, map.lane_offset(ego_lane)))?;
    map.centerline(ego_lane)?;
    let ego = VehicleState {
        x: ego_pose.x,
        y: ego_pose.y,
        theta: ego_pose.theta,
        v: cfg.ego_speed.min(cfg.vehicle.v_max),
        lane: ego_lane,
        length: cfg.vehicle.length,
        width: cfg.vehicle.width,
    };
    World::new(map, cfg.vehicle, cfg.dt, ego, target_lane, s, cfg.target_speed, delay)
}

impl World {
    /// Builds a world from explicit states; fails if the footprints overlap.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        map: &TrackMap,
        params: VehicleParams,
        dt: f64,
        ego: VehicleState,
        target_lane: usize,
        target_s: f64,
        target_speed: f64,
        step_index: u64,
    ) -> Result<Self, WorldError> {
        let lane_path = map.centerline(target_lane)?;
        let s = lane_path.wrap_s(target_s);
        let tp = lane_path.pose_at(s);
        let target = VehicleState {
            x: tp.x,
            y: tp.y,
            theta: tp.theta,
            v: target_speed,
            lane: target_lane,
            length: params.length,
            width: params.width,
        };
        let ego_fix = map.locate(ego.position(), None);
        let mut w = Self {
            ego: VehicleState { lane: ego_fix.lane, ..ego },
            target,
            params,
            dt,
            step_index,
            halted: false,
            events: Events::default(),
            last_control: Control::default(),
            target_lane,
            target_s: s,
            target_speed,
            ego_fix,
            ego_prev_lane: ego_fix.lane,
            target_ref: FrenetCoord::default(),
            target_on_ego_lane: FrenetCoord::default(),
            ego_wraps: 0,
            ego_laps: 0,
            target_laps: 0,
        };
        w.refresh_target_frames(map, true);
        if footprints_overlap(&w.ego.footprint(), &w.target.footprint()) {
            return Err(WorldError::SpawnCollision);
        }
        Ok(w)
    }

    /// Moves the ego to `pose` with speed `v` (used to construct test situations).
    pub fn place_ego(&mut self, map: &TrackMap, pose: Pose, v: f64) {
        self.ego.x = pose.x;
        self.ego.y = pose.y;
        self.ego.theta = pose.theta;
        self.ego.v = v;
        self.ego_fix = map.locate(self.ego.position(), None);
        self.ego.lane = self.ego_fix.lane;
        self.ego_prev_lane = self.ego.lane;
        self.refresh_target_frames(map, true);
    }

    /// Moves the target along its lane to `s` with speed `v`.
    pub fn place_target(&mut self, map: &TrackMap, lane: usize, s: f64, v: f64) {
        let path = &map.centerlines()[lane];
        self.target_lane = lane;
        self.target_s = path.wrap_s(s);
        self.target_speed = v;
        let p = path.pose_at(self.target_s);
        self.target.x = p.x;
        self.target.y = p.y;
        self.target.theta = p.theta;
        self.target.v = v;
        self.target.lane = lane;
        self.refresh_target_frames(map, true);
    }

    fn refresh_target_frames(&mut self, map: &TrackMap, global: bool) {
        self.target_ref = if self.target_lane == map.rightmost_lane_index() {
            FrenetCoord::new(self.target_s, 0.0)
        } else if global {
            map.reference().project(self.target.position())
        } else {
            map.reference().project_near(self.target.position(), self.target_ref.s)
        };
        self.target_on_ego_lane = if self.ego.lane == self.target_lane {
            FrenetCoord::new(self.target_s, 0.0)
        } else {
            map.project_on_lane(self.target.position(), self.ego.lane, self.target_ref.s)
        };
    }

    /// Advances both vehicles by one time step.
    pub fn step(&mut self, map: &TrackMap, control: Control, emergency_active: bool) -> Result<Events, WorldError> {
        if self.halted {
            return Err(WorldError::Halted(self.step_index));
        }
        let mut events = Events { emergency_brake_active: emergency_active, ..Events::default() };
        self.last_control = control;
        self.ego = step_vehicle(&self.ego, control, self.dt, &self.params);

        let path = &map.centerlines()[self.target_lane];
        let raw = self.target_s + self.target_speed * self.dt;
        if path.is_closed() && raw >= path.length() {
            self.target_laps += 1;
            events.target_lap = true;
        }
        self.target_s = path.wrap_s(raw);
        let tp = path.pose_at(self.target_s);
        self.target.x = tp.x;
        self.target.y = tp.y;
        self.target.theta = tp.theta;

        let prev_s = self.ego_fix.reference.s;
        self.ego_prev_lane = self.ego.lane;
        self.ego_fix = map.locate(self.ego.position(), Some(prev_s));
        self.ego.lane = self.ego_fix.lane;
        let reference = map.reference();
        if reference.is_closed() {
            let new_s = self.ego_fix.reference.s;
            let gap = reference.signed_gap(prev_s, new_s);
            if gap > 0.0 && new_s < prev_s {
                self.ego_wraps += 1;
                if self.ego_wraps > self.ego_laps as i64 {
                    self.ego_laps += 1;
                    events.lap_completed = true;
                }
            } else if gap < 0.0 && new_s > prev_s {
                self.ego_wraps -= 1;
            }
        }
        self.refresh_target_frames(map, false);
        self.step_index += 1;

        if footprints_overlap(&self.ego.footprint(), &self.target.footprint()) {
            events.collision = true;
            self.halted = true;
        }
        self.events = events;
        Ok(events)
    }

    pub fn observe(&self, map: &TrackMap) -> FrenetObservation {
        let path = &map.centerlines()[self.ego.lane];
        let (d_l, d_r) = lane_boundary_distances(map, self.ego_fix.reference, self.ego.lane);
        FrenetObservation {
            r_s: path.signed_gap(self.ego_fix.in_lane.s, self.target_on_ego_lane.s),
            r_d: self.target_on_ego_lane.d - self.ego_fix.in_lane.d,
            d_l,
            d_r,
            v: self.ego.v,
        }
    }

    pub fn check_collision(&self) -> bool {
        footprints_overlap(&self.ego.footprint(), &self.target.footprint())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn sim_time(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn events(&self) -> Events {
        self.events
    }

    pub fn last_control(&self) -> Control {
        self.last_control
    }

    pub fn ego_laps(&self) -> u32 {
        self.ego_laps
    }

    pub fn target_laps(&self) -> u32 {
        self.target_laps
    }

    /// Ego location on the rightmost-lane reference path and on its own lane.
    pub fn ego_fix(&self) -> &LanePosition {
        &self.ego_fix
    }

    /// Ego lane before the most recent step.
    pub fn ego_prev_lane(&self) -> usize {
        self.ego_prev_lane
    }

    pub fn target_lane(&self) -> usize {
        self.target_lane
    }

    /// Arc length of the target along its own lane.
    pub fn target_s(&self) -> f64 {
        self.target_s
    }

    pub fn target_speed(&self) -> f64 {
        self.target_speed
    }

    /// Target location on the rightmost-lane reference path.
    pub fn target_reference(&self) -> FrenetCoord {
        self.target_ref
    }

    /// Lateral offsets of the ego footprint corners on the reference path.
    pub fn ego_corner_offsets(&self, map: &TrackMap) -> [f64; 4] {
        let normal = Point2::from_heading(map.reference().pose_at(self.ego_fix.reference.s).theta).perp();
        let c = self.ego.position();
        let d = self.ego_fix.reference.d;
        self.ego.footprint().map(|p| d + (p - c).dot(normal))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_oval_map, OvalParams, ReferencePath};

    fn state(v: f64) -> VehicleState {
        VehicleState { x: 0.0, y: 0.0, theta: 0.0, v, lane: 0, length: 0.4, width: 0.2 }
    }

    #[test]
    fn straight_motion() {
        let s = step_vehicle(&state(1.0), Control::new(0.0, 0.0), 0.02, &VehicleParams::default());
        assert!((s.x - 0.02).abs() < 1e-15 && s.y == 0.0 && s.theta == 0.0);
    }

    #[test]
    fn yaw_rate_formula() {
        let params = VehicleParams { steer_max: 60f64.to_radians(), ..VehicleParams::default() };
        let s = step_vehicle(&state(1.0), Control::new(0.0, 45f64.to_radians()), 0.02, &params);
        assert!((s.theta - 0.02 / 0.36).abs() < 1e-12);
        assert!((s.theta - 0.055556).abs() < 1e-6);
    }

    #[test]
    fn steer_is_saturated() {
        let p = VehicleParams::default();
        let s = step_vehicle(&state(1.0), Control::new(0.0, 1.0), 0.02, &p);
        assert!((s.theta - p.steer_max.tan() / p.wheelbase * 0.02).abs() < 1e-15);
    }

    #[test]
    fn speed_never_negative() {
        let s = step_vehicle(&state(0.1), Control::new(-10.0, 0.0), 0.02, &VehicleParams::default());
        assert_eq!(s.v, 0.0);
    }

    #[test]
    fn collision_conventions() {
        let a = footprint(Pose::new(0.0, 0.0, 0.0), 0.4, 0.2);
        assert!(footprints_overlap(&a, &a));
        let far = footprint(Pose::new(2.0, 0.0, 0.3), 0.4, 0.2);
        assert!(!footprints_overlap(&a, &far));
        let corner = footprint(Pose::new(0.4, 0.2, 0.0), 0.4, 0.2);
        assert!(!footprints_overlap(&a, &corner));
        let edge = footprint(Pose::new(0.4, 0.0, 0.0), 0.4, 0.2);
        assert!(!footprints_overlap(&a, &edge));
        let slight = footprint(Pose::new(0.399, 0.0, 0.0), 0.4, 0.2);
        assert!(footprints_overlap(&a, &slight));
    }

    #[test]
    fn clearance_between_parallel_boxes() {
        let a = footprint(Pose::new(0.0, 0.0, 0.0), 0.4, 0.2);
        let b = footprint(Pose::new(1.0, 0.0, 0.0), 0.4, 0.2);
        assert!((footprint_clearance(&a, &b) - 0.6).abs() < 1e-12);
        let c = footprint(Pose::new(0.0, 0.5, 0.0), 0.4, 0.2);
        assert!((footprint_clearance(&a, &c) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn default_scenario_gives_target_head_start() {
        let map = build_oval_map(&OvalParams::default()).unwrap();
        let w = init_scenario(&map, &ScenarioConfig::default()).unwrap();
        assert_eq!(w.step_index(), 400);
        assert!((w.target_s() - 0.278 * 8.0).abs() < 1e-9);
        assert!((w.ego.v - 0.556).abs() < 1e-15);
        assert_eq!(w.ego.lane, 0);
        let obs = w.observe(&map);
        assert!((obs.r_s - 2.224).abs() < 1e-9);
    }

    #[test]
    fn zero_delay_spawns_together_and_overlap_is_rejected() {
        let map = build_oval_map(&OvalParams::default()).unwrap();
        let cfg = ScenarioConfig { ego_spawn_delay: 0.0, target_spawn_s: 1.0, ..ScenarioConfig::default() };
        let w = init_scenario(&map, &cfg).unwrap();
        assert_eq!(w.step_index(), 0);
        assert!((w.target_s() - 1.0).abs() < 1e-12);
        assert!((w.ego.v - 0.556).abs() < 1e-15 && (w.target.v - 0.278).abs() < 1e-15);
        let bad = ScenarioConfig { ego_spawn_delay: 0.0, ..ScenarioConfig::default() };
        assert_eq!(init_scenario(&map, &bad).unwrap_err(), WorldError::SpawnCollision);
    }

    #[test]
    fn observation_examples() {
        let map = build_oval_map(&OvalParams::default()).unwrap();
        let cfg = ScenarioConfig { ego_spawn_delay: 0.0, target_spawn_s: 1.2, ..ScenarioConfig::default() };
        let mut w = init_scenario(&map, &cfg).unwrap();
        let o = w.observe(&map);
        assert!((o.r_s - 1.2).abs() < 1e-9 && o.r_d.abs() < 1e-12);
        assert!((o.d_l - 0.4).abs() < 1e-12 && (o.d_r - 0.4).abs() < 1e-12 && (o.v - 0.556).abs() < 1e-15);

        w.place_target(&map, 1, 0.0, 0.278);
        let o = w.observe(&map);
        assert!(o.r_s.abs() < 1e-6 && (o.r_d - 0.8).abs() < 1e-6);

        let len = map.reference().length();
        w.place_target(&map, 0, len - 0.3, 0.278);
        let o = w.observe(&map);
        assert!((o.r_s + 0.3).abs() < 1e-9, "{}", o.r_s);
    }

    #[test]
    fn halted_world_refuses_to_step() {
        let map = build_oval_map(&OvalParams::default()).unwrap();
        let cfg = ScenarioConfig { ego_spawn_delay: 0.0, target_spawn_s: 1.0, ..ScenarioConfig::default() };
        let mut w = init_scenario(&map, &cfg).unwrap();
        let tp = w.target.pose();
        w.place_ego(&map, tp, 0.0);
        let ev = w.step(&map, Control::default(), false).unwrap();
        assert!(ev.collision && w.is_halted());
        assert!(matches!(w.step(&map, Control::default(), false), Err(WorldError::Halted(_))));
    }

    #[test]
    fn constant_speed_on_straight() {
        let path = ReferencePath::from_waypoints(&[Point2::new(0.0, 0.0), Point2::new(50.0, 0.0)], false).unwrap();
        let map = TrackMap::from_reference(path, 0.8, 2).unwrap();
        let ego = VehicleState { v: 0.556, ..state(0.556) };
        let mut w = World::new(&map, VehicleParams::default(), 0.02, ego, 1, 10.0, 0.0, 0).unwrap();
        for _ in 0..50 {
            w.step(&map, Control::default(), false).unwrap();
        }
        assert!((w.ego.x - 0.556).abs() < 1e-12);
        assert_eq!(w.ego.v, 0.556);
        assert_eq!(w.ego.theta, 0.0);
        assert_eq!(w.sim_time(), 50.0 * 0.02);
    }
}
