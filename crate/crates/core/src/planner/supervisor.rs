//! Emergency brake: latches full braking when a same-lane leader gets too close.

use super::PlannerConfig;
use crate::geometry::TrackMap;
use crate::world::World;

/// Bumper-to-bumper gap to the other vehicle and its speed, if it is ahead in the ego lane.
pub fn leader_gap(world: &World, map: &TrackMap) -> Option<(f64, f64)> {
    let obs = world.observe(map);
    if obs.r_s > 0.0 && obs.r_d.abs() < 0.5 * map.lane_width() {
        let gap = obs.r_s - 0.5 * (world.ego.length + world.target.length);
        Some((gap, world.target.v))
    } else {
        None
    }
}

#[derive(Clone, Debug, Default)]
pub struct EmergencySupervisor {
    active: bool,
    activations: u64,
}

impl EmergencySupervisor {
    pub fn active(&self) -> bool {
        self.active
    }

    /// Number of rising edges so far.
    pub fn activations(&self) -> u64 {
        self.activations
    }

    /// True iff a closing leader is within `d_emergency`.
    pub fn check(world: &World, map: &TrackMap, cfg: &PlannerConfig) -> bool {
        matches!(leader_gap(world, map), Some((gap, v_lead)) if gap < cfg.d_emergency && world.ego.v > v_lead)
    }

    /// Updates the latch; returns `(active, rising_edge)`.
    pub fn update(&mut self, world: &World, map: &TrackMap, cfg: &PlannerConfig) -> (bool, bool) {
        let was = self.active;
        if Self::check(world, map, cfg) {
            self.active = true;
        } else if self.active {
            let release = match leader_gap(world, map) {
                Some((gap, _)) => gap > cfg.d_emergency + cfg.emergency_hysteresis,
                None => true,
            };
            if release {
                self.active = false;
            }
        }
        let rising = self.active && !was;
        if rising {
            self.activations += 1;
        }
        (self.active, rising)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_oval_map, OvalParams};
    use crate::world::{init_scenario, ScenarioConfig};

    #[test]
    fn gating() {
        let map = build_oval_map(&OvalParams::default()).unwrap();
        let cfg = ScenarioConfig { ego_spawn_delay: 0.0, target_spawn_s: 1.0, ..ScenarioConfig::default() };
        let mut w = init_scenario(&map, &cfg).unwrap();
        let pc = PlannerConfig::default();
        w.place_target(&map, 0, 0.55, 0.278);
        assert!(EmergencySupervisor::check(&w, &map, &pc));
        w.place_target(&map, 1, 0.0, 0.278);
        assert!(!EmergencySupervisor::check(&w, &map, &pc));
    }

    #[test]
    fn latch_and_release() {
        let map = build_oval_map(&OvalParams::default()).unwrap();
        let cfg = ScenarioConfig { ego_spawn_delay: 0.0, target_spawn_s: 0.55, ..ScenarioConfig::default() };
        let mut w = init_scenario(&map, &cfg).unwrap();
        let pc = PlannerConfig::default();
        let mut sup = EmergencySupervisor::default();
        assert_eq!(sup.update(&w, &map, &pc), (true, true));
        // slower ego no longer closing, but the gap is still inside the hysteresis band
        w.ego.v = 0.0;
        w.place_target(&map, 0, 0.68, 0.278);
        assert_eq!(sup.update(&w, &map, &pc), (true, false));
        w.place_target(&map, 0, 0.75, 0.278);
        assert_eq!(sup.update(&w, &map, &pc), (false, false));
        assert_eq!(sup.activations(), 1);
    }
}
