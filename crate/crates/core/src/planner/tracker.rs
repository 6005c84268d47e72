//! Pure-pursuit steering with feedforward-plus-proportional speed control.

use super::{PlannerConfig, Trajectory};
use crate::geometry::{FrenetCoord, Point2, TrackMap};
use crate::world::{Control, VehicleParams, VehicleState, World};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackOutput {
    pub control: Control,
    /// The ego has passed the end of the trajectory.
    pub completed: bool,
    /// Distance from the ego to the trajectory polyline.
    pub cross_track: f64,
}

fn pursuit_steer(state: &VehicleState, target: Point2, wheelbase: f64) -> f64 {
    let rel = target - state.position();
    let ld = rel.norm();
    if ld < 1e-9 {
        return 0.0;
    }
    let alpha = libm::atan2(rel.y, rel.x) - state.theta;
    libm::atan(2.0 * wheelbase * libm::sin(alpha) / ld)
}

fn speed_control(v: f64, v_ref: f64, a_ref: f64, cfg: &PlannerConfig) -> f64 {
    a_ref + cfg.speed_gain * (v_ref - v)
}

fn lookahead(v: f64, cfg: &PlannerConfig) -> f64 {
    cfg.lookahead_min.max(cfg.lookahead_gain * v)
}

/// Tracks `traj`, `now` seconds after it was installed. `progress` is the
/// index of the nearest sample and only moves forward.
pub fn track_trajectory(
    state: &VehicleState,
    traj: &Trajectory,
    now: f64,
    progress: &mut usize,
    cfg: &PlannerConfig,
    params: &VehicleParams,
) -> TrackOutput {
    let samples = &traj.samples;
    let last = samples.len() - 1;
    let pos = state.position();
    let end = samples[last];
    let end_dir = Point2::from_heading(end.theta);
    if (pos - end.pose().position()).dot(end_dir) >= 0.0 || now > end.t + 3.0 {
        return TrackOutput { control: Control::default(), completed: true, cross_track: 0.0 };
    }

    let start = (*progress).min(last);
    let stop = (start + 400).min(last);
    let mut nearest = start;
    let mut best = f64::INFINITY;
    for (i, s) in samples.iter().enumerate().take(stop + 1).skip(start) {
        let d = s.pose().position().distance_sq(pos);
        if d < best {
            best = d;
            nearest = i;
        }
    }
    *progress = nearest;

    let mut cross_track = best.sqrt();
    for j in [nearest.saturating_sub(1), nearest] {
        if j < last {
            let a = samples[j].pose().position();
            let b = samples[j + 1].pose().position();
            let ab = b - a;
            let len_sq = ab.dot(ab);
            if len_sq > 0.0 {
                let u = ((pos - a).dot(ab) / len_sq).clamp(0.0, 1.0);
                cross_track = cross_track.min(pos.distance(a + ab * u));
            }
        }
    }

    let ld = lookahead(state.v, cfg);
    let mut acc = 0.0;
    let mut target = None;
    for i in nearest..last {
        let a = samples[i].pose().position();
        let b = samples[i + 1].pose().position();
        let seg = a.distance(b);
        if acc + seg >= ld {
            target = Some(a.lerp(b, (ld - acc) / seg));
            break;
        }
        acc += seg;
    }
    let target = target.unwrap_or_else(|| end.pose().position() + end_dir * (ld - acc));
    let steer = pursuit_steer(state, target, params.wheelbase).clamp(-params.steer_max, params.steer_max);

    let k = ((now / cfg.sample_dt).floor().max(0.0) as usize).min(last);
    let (v_ref, a_ref) = if k < last {
        let (s0, s1) = (samples[k], samples[k + 1]);
        (s0.v, (s1.v - s0.v) / (s1.t - s0.t))
    } else {
        (end.v, 0.0)
    };
    let accel = speed_control(state.v, v_ref, a_ref, cfg).clamp(-params.max_decel, params.max_accel);
    TrackOutput { control: Control::new(accel, steer), completed: false, cross_track }
}

/// Pure pursuit on the centerline of `lane` with proportional speed control toward `v_ref`.
pub fn lane_keep_control(world: &World, map: &TrackMap, lane: usize, v_ref: f64, cfg: &PlannerConfig) -> Control {
    let params = &world.params;
    let fix = world.ego_fix();
    let ld = lookahead(world.ego.v, cfg);
    let target = map
        .reference()
        .to_cartesian(FrenetCoord::new(fix.reference.s + ld, map.lane_offset(lane)))
        .map(|p| p.position())
        .unwrap_or_else(|_| map.centerlines()[lane].pose_at(fix.in_lane.s + ld).position());
    let steer = pursuit_steer(&world.ego, target, params.wheelbase).clamp(-params.steer_max, params.steer_max);
    let accel = speed_control(world.ego.v, v_ref, 0.0, cfg).clamp(-params.max_decel, params.max_accel);
    Control::new(accel, steer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::TrajectorySample;

    fn straight_traj(v: f64) -> Trajectory {
        let samples = (0..300)
            .map(|i| {
                let t = i as f64 * 0.01;
                TrajectorySample { t, x: v * t, y: 0.0, theta: 0.0, v, steer: 0.0 }
            })
            .collect();
        Trajectory { samples, goal_lane: 0, creation_step: 0, path_length: v * 2.99 }
    }

    fn ego(x: f64, y: f64, v: f64) -> VehicleState {
        VehicleState { x, y, theta: 0.0, v, lane: 0, length: 0.4, width: 0.2 }
    }

    #[test]
    fn on_trajectory_gives_zero_controls() {
        let traj = straight_traj(0.556);
        let mut progress = 0;
        let s = traj.samples[100];
        let out = track_trajectory(&ego(s.x, 0.0, 0.556), &traj, s.t, &mut progress, &PlannerConfig::default(), &VehicleParams::default());
        assert!(!out.completed);
        assert!(out.control.steer.abs() < 1e-6 && out.control.accel.abs() < 1e-6);
        assert!(out.cross_track < 1e-12);
    }

    #[test]
    fn right_offset_steers_left() {
        let traj = straight_traj(0.556);
        let mut progress = 0;
        let out = track_trajectory(&ego(0.3, -0.05, 0.556), &traj, 0.54, &mut progress, &PlannerConfig::default(), &VehicleParams::default());
        assert!(out.control.steer > 0.0);
        assert!((out.cross_track - 0.05).abs() < 1e-12);
    }

    #[test]
    fn passing_the_end_completes() {
        let traj = straight_traj(0.556);
        let mut progress = 0;
        let end = traj.samples.last().unwrap().x;
        let out = track_trajectory(&ego(end + 0.01, 0.0, 0.556), &traj, 1.0, &mut progress, &PlannerConfig::default(), &VehicleParams::default());
        assert!(out.completed);
    }
}
