//! Test runs and the metrics derived from their traces.

use serde::{Deserialize, Serialize};
use tprl_core::rules::{trace_compliance, Compliance};
use tprl_core::HighLevelAction;

use crate::config::{MapKind, RunConfig, Variant};
use crate::env::{Env, StepRecord};
use crate::rollout::{held_request, Policy};
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Fraction of steps without violations, per rule and overall.
    pub compliance: Compliance,
    /// Emergency brake activations over the whole test.
    pub emergency_brakes: u64,
    pub emergency_brakes_per_lap: f64,
    /// Driving time until the lap quota was met, in seconds.
    pub time_cost: f64,
    pub laps: u32,
    pub steps: u64,
    pub completed: bool,
    pub collisions: u64,
    pub refusals: u64,
    pub lane_changes_planned: u64,
}

/// Metrics are a pure function of the trace.
pub fn metrics_from_trace(records: &[StepRecord], dt: f64, lap_quota: u32) -> Result<Metrics, HarnessError> {
    let verdicts: Vec<_> = records.iter().map(|r| r.verdict).collect();
    let compliance = trace_compliance(&verdicts).map_err(|e| HarnessError::Trace(e.to_string()))?;
    let done_at = records.iter().position(|r| r.laps >= lap_quota);
    let steps = done_at.map_or(records.len(), |i| i + 1) as u64;
    let laps = records.last().map_or(0, |r| r.laps);
    let emergency_brakes = records.iter().filter(|r| r.planner.emergency).count() as u64;
    Ok(Metrics {
        compliance,
        emergency_brakes,
        emergency_brakes_per_lap: emergency_brakes as f64 / laps.max(1) as f64,
        time_cost: steps as f64 * dt,
        laps,
        steps: records.len() as u64,
        completed: done_at.is_some(),
        collisions: records.iter().filter(|r| r.collision).count() as u64,
        refusals: records.iter().filter(|r| r.planner.refused).count() as u64,
        lane_changes_planned: records.iter().filter(|r| r.planner.planned).count() as u64,
    })
}

/// Contents of the metrics summary file written after a test run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub config_hash: String,
    pub map: MapKind,
    pub algo: crate::config::Algo,
    pub variant: Variant,
    pub seed: u64,
    pub metrics: Metrics,
}

impl MetricsSummary {
    pub fn new(cfg: &RunConfig, map: MapKind, metrics: Metrics) -> Self {
        Self { config_hash: cfg.hash(), map, algo: cfg.algo, variant: cfg.variant, seed: cfg.seed, metrics }
    }
}

#[derive(Clone, Debug)]
pub struct TestRun {
    pub metrics: Metrics,
    pub trace: Vec<StepRecord>,
}

/// Drives `cfg.test_laps` laps on `map`, drawing actions on the schedule of
/// `cfg.variant`. A collision respawns the scenario and keeps the lap count.
pub fn evaluate(cfg: &RunConfig, map: MapKind, policy: &mut dyn Policy) -> Result<TestRun, HarnessError> {
    let mut env = Env::from_config(cfg, cfg.build_map(map)?)?;
    let dt = env.dt();
    let mut trace: Vec<StepRecord> = Vec::new();
    let mut carried = 0u32;
    let mut pos = 0usize;
    let mut held = HighLevelAction::Stay;
    loop {
        if trace.len() as u64 >= cfg.test_step_cap {
            let metrics = metrics_from_trace(&trace, dt, cfg.test_laps)?;
            return Err(HarnessError::StepCap { cap: cfg.test_step_cap, metrics: Box::new(metrics) });
        }
        let obs = env.observation();
        let fresh = cfg.variant == Variant::NoSkip || pos == 0;
        if fresh {
            let d = policy.decide(&obs)?;
            held = HighLevelAction::from_index(d.action)
                .ok_or_else(|| HarnessError::Policy(format!("action index {} out of range", d.action)))?;
        }
        let request = if cfg.variant == Variant::NoSkip { Some(held) } else { held_request(&env, held) };
        let mut rec = env.step(held, request)?;
        rec.decision = fresh;
        rec.sample = fresh;
        rec.laps += carried;
        pos = (pos + 1) % cfg.period;
        let (laps, collision) = (rec.laps, rec.collision);
        trace.push(rec);
        if laps >= cfg.test_laps {
            break;
        }
        if collision {
            carried = laps;
            env.reset()?;
            pos = 0;
        }
    }
    let metrics = metrics_from_trace(&trace, dt, cfg.test_laps)?;
    Ok(TestRun { metrics, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Scripted;

    #[test]
    fn always_stay_is_fully_compliant() {
        let cfg = RunConfig { test_laps: 1, ..RunConfig::default() };
        let run = evaluate(&cfg, MapKind::Cross, &mut Scripted(HighLevelAction::Stay.index())).unwrap();
        let m = &run.metrics;
        assert!(m.completed && m.laps == 1);
        assert_eq!(m.compliance.r2, 1.0);
        assert_eq!(m.compliance.overall, 1.0);
        assert_eq!(m.lane_changes_planned, 0);
        assert_eq!(m.collisions, 0);
        assert_eq!(metrics_from_trace(&run.trace, cfg.scenario.dt, 1).unwrap(), *m);
    }

    #[test]
    fn step_cap_reports_partial_metrics() {
        let cfg = RunConfig { test_step_cap: 200, ..RunConfig::default() };
        match evaluate(&cfg, MapKind::Oval, &mut Scripted(0)) {
            Err(HarnessError::StepCap { metrics, .. }) => {
                assert_eq!(metrics.steps, 200);
                assert!(!metrics.completed);
            }
            other => panic!("expected step cap, got {other:?}"),
        }
    }
}
