//! Hybrid A* over (x, y, heading) bins with constant-curvature primitives.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use super::{GoalPose, PlannerConfig, Trajectory, TrajectorySample};
use crate::geometry::{wrap_angle, FrenetCoord, Point2, Pose, TrackMap};
use crate::world::{footprint, footprint_clearance, VehicleParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("start pose is already within the safety margin of an obstacle")]
    StartInCollision,
    #[error("search space exhausted after {0} expansions")]
    Exhausted(usize),
    #[error("node budget of {0} expansions exceeded")]
    BudgetExceeded(usize),
    #[error("trajectory failed clearance validation at t = {0:.2} s")]
    Validation(f64),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// A vehicle-sized obstacle moving at constant speed along a lane at fixed lateral offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObstaclePrediction {
    pub lane: usize,
    /// Arc length along the lane centerline at planning time.
    pub s0: f64,
    pub d: f64,
    pub v: f64,
    pub length: f64,
    pub width: f64,
}

impl ObstaclePrediction {
    pub fn pose_at(&self, map: &TrackMap, t: f64) -> Pose {
        let path = &map.centerlines()[self.lane];
        let s = self.s0 + self.v * t;
        path.to_cartesian(FrenetCoord::new(s, self.d)).unwrap_or_else(|_| path.pose_at(s))
    }

    pub fn footprint_at(&self, map: &TrackMap, t: f64) -> [Point2; 4] {
        footprint(self.pose_at(map, t), self.length, self.width)
    }
}

/// Linear ramp from `v0` to `v1` at `accel`, then constant `v1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedProfile {
    pub v0: f64,
    pub v1: f64,
    pub accel: f64,
}

impl SpeedProfile {
    fn signed_accel(&self) -> f64 {
        if self.v1 >= self.v0 {
            self.accel
        } else {
            -self.accel
        }
    }

    pub fn ramp_time(&self) -> f64 {
        (self.v1 - self.v0).abs() / self.accel
    }

    pub fn ramp_length(&self) -> f64 {
        0.5 * (self.v0 + self.v1) * self.ramp_time()
    }

    pub fn v_at(&self, t: f64) -> f64 {
        if t >= self.ramp_time() {
            self.v1
        } else {
            self.v0 + self.signed_accel() * t
        }
    }

    pub fn accel_at(&self, t: f64) -> f64 {
        if t >= self.ramp_time() {
            0.0
        } else {
            self.signed_accel()
        }
    }

    pub fn arc_at(&self, t: f64) -> f64 {
        let tr = self.ramp_time();
        if t >= tr {
            self.ramp_length() + self.v1 * (t - tr)
        } else {
            self.v0 * t + 0.5 * self.signed_accel() * t * t
        }
    }

    pub fn time_at(&self, arc: f64) -> f64 {
        if arc <= 0.0 {
            return 0.0;
        }
        let dr = self.ramp_length();
        if arc >= dr {
            return self.ramp_time() + (arc - dr) / self.v1;
        }
        let a = self.signed_accel();
        let disc = (self.v0 * self.v0 + 2.0 * a * arc).max(0.0);
        // arc = v0 t + a t^2 / 2, rationalized to stay accurate for tiny a·arc
        2.0 * arc / (self.v0 + disc.sqrt())
    }
}

pub struct PlanRequest<'a> {
    pub map: &'a TrackMap,
    pub start: Pose,
    pub start_v: f64,
    /// Reference-path arc length of the start pose.
    pub start_ref_s: f64,
    pub goal: GoalPose,
    pub obstacles: &'a [ObstaclePrediction],
    pub creation_step: u64,
    pub vehicle: VehicleParams,
}

/// Constant-curvature piece of the solution path.
#[derive(Clone, Copy, Debug)]
struct Primitive {
    start: Pose,
    kappa: f64,
    length: f64,
}

fn arc_pose(start: Pose, kappa: f64, l: f64) -> Pose {
    if kappa.abs() < 1e-12 {
        Pose::new(start.x + l * libm::cos(start.theta), start.y + l * libm::sin(start.theta), start.theta)
    } else {
        let th = start.theta + kappa * l;
        Pose::new(
            start.x + (libm::sin(th) - libm::sin(start.theta)) / kappa,
            start.y - (libm::cos(th) - libm::cos(start.theta)) / kappa,
            th,
        )
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    pose: Pose,
    g: f64,
    arc: f64,
    ref_s: f64,
    steer_idx: usize,
    parent: u32,
    kappa: f64,
    prim_len: f64,
}

#[derive(Clone, Copy, Debug)]
struct Open {
    f: f64,
    seq: u64,
    node: u32,
}

impl PartialEq for Open {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Open {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f).then(o.seq.cmp(&self.seq))
    }
}

const GOAL_LATERAL_TOL: f64 = 0.05;
const GOAL_HEADING_TOL_DEG: f64 = 10.0;
const SEARCH_SLACK: f64 = 0.02;
const SAMPLE_STEP: f64 = 0.025;

struct Search<'a, 'b> {
    req: &'b PlanRequest<'a>,
    cfg: &'b PlannerConfig,
    profile: SpeedProfile,
    goal_gap: f64,
    edges: (f64, f64),
    circum: f64,
}

impl Search<'_, '_> {
    fn goal_frame(&self, p: Pose) -> (f64, f64, f64) {
        let g = self.req.goal.pose;
        let t = Point2::from_heading(g.theta);
        let rel = p.position() - g.position();
        (rel.dot(t), rel.dot(t.perp()), wrap_angle(p.theta - g.theta))
    }

    /// Returns the reference arc length of `p` if it is admissible at path arc `arc`.
    fn admissible(&self, p: Pose, arc: f64, hint_s: f64) -> Option<f64> {
        let map = self.req.map;
        let fc = map.reference().project_near(p.position(), hint_s);
        let half_w = 0.5 * self.req.vehicle.width;
        if fc.d < self.edges.0 + half_w || fc.d > self.edges.1 - half_w {
            return None;
        }
        let ds = map.reference().signed_gap(self.req.start_ref_s, fc.s);
        if ds < -0.3 || ds > self.goal_gap + 1.0 {
            return None;
        }
        let t = self.profile.time_at(arc);
        if !self.clear(p, t, self.cfg.r_safe + SEARCH_SLACK) {
            return None;
        }
        Some(fc.s)
    }

    fn clear(&self, p: Pose, t: f64, margin: f64) -> bool {
        let mine = footprint(p, self.req.vehicle.length, self.req.vehicle.width);
        self.req.obstacles.iter().all(|o| {
            let op = o.pose_at(self.req.map, t);
            let reach = self.circum + 0.5 * libm::hypot(o.length, o.width) + margin;
            if op.position().distance_sq(p.position()) > reach * reach {
                return true;
            }
            footprint_clearance(&mine, &footprint(op, o.length, o.width)) >= margin
        })
    }

    fn heuristic(&self, p: Pose) -> f64 {
        (p.position().distance(self.req.goal.pose.position()) - GOAL_LATERAL_TOL).max(0.0)
    }

    fn bin(&self, p: Pose) -> (i64, i64, i64) {
        let th = self.cfg.grid_theta_deg.to_radians();
        (
            (p.x / self.cfg.grid_xy).floor() as i64,
            (p.y / self.cfg.grid_xy).floor() as i64,
            (p.theta.rem_euclid(2.0 * std::f64::consts::PI) / th).floor() as i64,
        )
    }
}

/// Searches a kinematically feasible path to the goal line and returns it
/// time-parameterized with a speed ramp toward the goal speed.
pub fn hybrid_astar_plan(req: &PlanRequest, cfg: &PlannerConfig) -> Result<Trajectory, PlanError> {
    if !(req.goal.v > 0.0) || !(cfg.ramp_accel > 0.0) || !(cfg.primitive_arc > 0.0) {
        return Err(PlanError::InvalidRequest("goal speed, ramp and primitive arc must be positive".into()));
    }
    let v = &req.vehicle;
    let profile = SpeedProfile { v0: req.start_v.max(0.0), v1: req.goal.v, accel: cfg.ramp_accel };
    let search = Search {
        req,
        cfg,
        profile,
        goal_gap: req.map.reference().signed_gap(req.start_ref_s, req.goal.s_ref),
        edges: req.map.road_edges(),
        circum: 0.5 * libm::hypot(v.length, v.width),
    };
    if !search.clear(req.start, 0.0, cfg.r_safe) {
        return Err(PlanError::StartInCollision);
    }

    let steers: Vec<f64> = [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|k| k * v.steer_max).collect();
    let mut nodes = vec![Node {
        pose: req.start,
        g: 0.0,
        arc: 0.0,
        ref_s: req.start_ref_s,
        steer_idx: 2,
        parent: u32::MAX,
        kappa: 0.0,
        prim_len: 0.0,
    }];
    let mut best_g: HashMap<(i64, i64, i64), f64> = HashMap::new();
    best_g.insert(search.bin(req.start), 0.0);
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Open { f: search.heuristic(req.start), seq, node: 0 });
    let mut expanded = 0usize;
    let heading_tol = GOAL_HEADING_TOL_DEG.to_radians();
    let sub = (cfg.primitive_arc / SAMPLE_STEP).ceil().max(1.0) as usize;

    while let Some(Open { node: idx, .. }) = open.pop() {
        let cur = nodes[idx as usize];
        if cur.g > best_g.get(&search.bin(cur.pose)).copied().unwrap_or(f64::INFINITY) + 1e-12 {
            continue;
        }
        expanded += 1;
        if expanded > cfg.node_budget {
            return Err(PlanError::BudgetExceeded(cfg.node_budget));
        }
        let (along0, _, _) = search.goal_frame(cur.pose);
        for (si, &steer) in steers.iter().enumerate() {
            let kappa = libm::tan(steer) / v.wheelbase;
            let end = arc_pose(cur.pose, kappa, cfg.primitive_arc);
            let (along1, _, _) = search.goal_frame(end);
            // goal line crossing inside this primitive
            let mut length = cfg.primitive_arc;
            let mut reached = false;
            if along0 < 0.0 && along1 >= 0.0 {
                let (mut lo, mut hi) = (0.0, cfg.primitive_arc);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if search.goal_frame(arc_pose(cur.pose, kappa, mid)).0 < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (_, lat, dth) = search.goal_frame(arc_pose(cur.pose, kappa, hi));
                if lat.abs() <= GOAL_LATERAL_TOL && dth.abs() <= heading_tol {
                    length = hi;
                    reached = true;
                }
            }
            if !reached && along1 > 0.2 {
                continue;
            }
            let mut ok = true;
            let mut ref_s = cur.ref_s;
            let pieces = if reached { (length / SAMPLE_STEP).ceil().max(1.0) as usize } else { sub };
            for k in 1..=pieces {
                let l = length * k as f64 / pieces as f64;
                match search.admissible(arc_pose(cur.pose, kappa, l), cur.arc + l, ref_s) {
                    Some(s) => ref_s = s,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let penalty = if si != cur.steer_idx { cfg.steer_change_weight * length } else { 0.0 };
            let child = Node {
                pose: arc_pose(cur.pose, kappa, length),
                g: cur.g + length + penalty,
                arc: cur.arc + length,
                ref_s,
                steer_idx: si,
                parent: idx,
                kappa,
                prim_len: length,
            };
            if reached {
                nodes.push(child);
                let traj = finish(req, cfg, &search, &nodes, nodes.len() - 1)?;
                return Ok(traj);
            }
            let key = search.bin(child.pose);
            if child.g + 1e-12 < best_g.get(&key).copied().unwrap_or(f64::INFINITY) {
                best_g.insert(key, child.g);
                nodes.push(child);
                seq += 1;
                open.push(Open { f: child.g + search.heuristic(child.pose), seq, node: (nodes.len() - 1) as u32 });
            }
        }
    }
    Err(PlanError::Exhausted(expanded))
}

fn finish(
    req: &PlanRequest,
    cfg: &PlannerConfig,
    search: &Search,
    nodes: &[Node],
    leaf: usize,
) -> Result<Trajectory, PlanError> {
    let mut prims = Vec::new();
    let mut i = leaf;
    while nodes[i].parent != u32::MAX {
        let n = nodes[i];
        let parent = nodes[n.parent as usize];
        prims.push(Primitive { start: parent.pose, kappa: n.kappa, length: n.prim_len });
        i = n.parent as usize;
    }
    prims.reverse();
    let total: f64 = prims.iter().map(|p| p.length).sum();
    let profile = search.profile;
    let duration = profile.time_at(total);

    let mut cum = Vec::with_capacity(prims.len());
    let mut acc = 0.0;
    for p in &prims {
        cum.push(acc);
        acc += p.length;
    }
    let eval = |arc: f64| -> (Pose, f64) {
        let k = cum.partition_point(|&c| c <= arc).saturating_sub(1).min(prims.len() - 1);
        let p = prims[k];
        let l = (arc - cum[k]).clamp(0.0, p.length);
        (arc_pose(p.start, p.kappa, l), libm::atan(p.kappa * req.vehicle.wheelbase))
    };

    let mut samples = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * cfg.sample_dt;
        if t >= duration - 1e-9 {
            break;
        }
        let (pose, steer) = eval(profile.arc_at(t));
        samples.push(TrajectorySample { t, x: pose.x, y: pose.y, theta: pose.theta, v: profile.v_at(t), steer });
        k += 1;
    }
    let (pose, steer) = eval(total);
    samples.push(TrajectorySample { t: duration, x: pose.x, y: pose.y, theta: pose.theta, v: profile.v_at(duration), steer });

    for s in &samples {
        if !search.clear(s.pose(), s.t, cfg.r_safe) {
            return Err(PlanError::Validation(s.t));
        }
    }
    Ok(Trajectory { samples, goal_lane: req.goal.lane, creation_step: req.creation_step, path_length: total })
}

/// Smallest clearance between the trajectory footprint and the predicted
/// obstacles, checked at every sample.
pub fn min_clearance(traj: &Trajectory, obstacles: &[ObstaclePrediction], map: &TrackMap, vehicle: &VehicleParams) -> f64 {
    let mut best = f64::INFINITY;
    for s in &traj.samples {
        let mine = footprint(s.pose(), vehicle.length, vehicle.width);
        for o in obstacles {
            best = best.min(footprint_clearance(&mine, &o.footprint_at(map, s.t)));
        }
    }
    best
}
