//! Traffic rules as globally scoped premise/conclusion implications over
//! per-step atomic propositions, and the rule-violation reward.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::TrackMap;
use crate::world::World;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("compliance of an empty trace is undefined")]
    EmptyTrace,
    #[error("formula `{0}` is not step-local")]
    NotStepLocal(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleThresholds {
    pub r_dense: f64,
    /// Minimum number of nearby vehicles for `dense`.
    pub dense_count: usize,
    pub t_headway: f64,
    pub d_min: f64,
}

impl Default for RuleThresholds {
    fn default() -> Self {
        Self { r_dense: 2.0, dense_count: 1, t_headway: 1.0, d_min: 0.3 }
    }
}

/// Truth values of the atomic propositions at one step. Relational
/// propositions describe the target relative to the ego.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicValuation {
    pub dense: bool,
    pub right: bool,
    pub left: bool,
    pub in_front: bool,
    pub behind: bool,
    pub sd_front: bool,
    pub sd_rear: bool,
    pub lane_change: bool,
    pub rightmost_lane: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prop {
    Dense,
    Right,
    Left,
    InFront,
    Behind,
    SdFront,
    SdRear,
    LaneChange,
    RightmostLane,
}

impl AtomicValuation {
    pub fn get(&self, p: Prop) -> bool {
        match p {
            Prop::Dense => self.dense,
            Prop::Right => self.right,
            Prop::Left => self.left,
            Prop::InFront => self.in_front,
            Prop::Behind => self.behind,
            Prop::SdFront => self.sd_front,
            Prop::SdRear => self.sd_rear,
            Prop::LaneChange => self.lane_change,
            Prop::RightmostLane => self.rightmost_lane,
        }
    }
}

/// Linear temporal logic over the atomic propositions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    True,
    Atom(Prop),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Globally(Box<Formula>),
}

impl Formula {
    pub fn atom(p: Prop) -> Self {
        Self::Atom(p)
    }

    pub fn not(f: Formula) -> Self {
        Self::Not(Box::new(f))
    }

    /// Evaluates a formula without temporal operators at a single step.
    pub fn eval_step(&self, v: &AtomicValuation) -> Result<bool, RuleError> {
        Ok(match self {
            Self::True => true,
            Self::Atom(p) => v.get(*p),
            Self::Not(f) => !f.eval_step(v)?,
            Self::And(a, b) => a.eval_step(v)? && b.eval_step(v)?,
            Self::Or(a, b) => a.eval_step(v)? || b.eval_step(v)?,
            Self::Implies(a, b) => !a.eval_step(v)? || b.eval_step(v)?,
            other => return Err(RuleError::NotStepLocal(format!("{other:?}"))),
        })
    }
}

/// `G(premise -> conclusion)`, checked at every step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub name: String,
    pub premise: Formula,
    pub conclusion: Formula,
}

impl Rule {
    pub fn as_formula(&self) -> Formula {
        Formula::Globally(Box::new(Formula::Implies(Box::new(self.premise.clone()), Box::new(self.conclusion.clone()))))
    }

    pub fn check(&self, v: &AtomicValuation) -> Result<RuleOutcome, RuleError> {
        let premise_active = self.premise.eval_step(v)?;
        let violated = premise_active && !self.conclusion.eval_step(v)?;
        Ok(RuleOutcome { premise_active, violated })
    }
}

/// Keep right unless traffic is dense, and change lanes only with a safe gap ahead.
pub fn standard_rules() -> [Rule; 2] {
    [
        Rule {
            name: "R1".into(),
            premise: Formula::not(Formula::atom(Prop::Dense)),
            conclusion: Formula::atom(Prop::RightmostLane),
        },
        Rule { name: "R2".into(), premise: Formula::atom(Prop::LaneChange), conclusion: Formula::atom(Prop::SdFront) },
    ]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub premise_active: bool,
    pub violated: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleVerdict {
    pub r1: RuleOutcome,
    pub r2: RuleOutcome,
    /// Minus the number of violated rules.
    pub step_reward: i32,
}

impl RuleVerdict {
    pub fn compliant(&self) -> bool {
        !self.r1.violated && !self.r2.violated
    }
}

pub fn eval_rules(v: &AtomicValuation) -> RuleVerdict {
    let [r1, r2] = standard_rules();
    let r1 = r1.check(v).expect("standard rules are step-local");
    let r2 = r2.check(v).expect("standard rules are step-local");
    RuleVerdict { r1, r2, step_reward: -(r1.violated as i32) - (r2.violated as i32) }
}

pub fn eval_atomics(world: &World, map: &TrackMap, th: &RuleThresholds) -> AtomicValuation {
    let obs = world.observe(map);
    let ego = &world.ego;
    let near = (ego.position().distance(world.target.position()) < th.r_dense) as usize;
    let same_band = obs.r_d.abs() < 0.5 * map.lane_width();
    let in_front = same_band && obs.r_s > 0.0;
    let behind = same_band && obs.r_s < 0.0;
    let bumper = 0.5 * (ego.length + world.target.length);
    let sd_front = !in_front || obs.r_s - bumper >= ego.v * th.t_headway + th.d_min;
    let sd_rear = !behind || -obs.r_s - bumper >= world.target.v * th.t_headway + th.d_min;

    let corners = world.ego_corner_offsets(map);
    let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let straddles = (0..map.lane_count() - 1).any(|k| {
        let b = map.lane_offset(k) + 0.5 * map.lane_width();
        lo < b && b < hi
    });

    AtomicValuation {
        dense: near >= th.dense_count,
        right: world.target_lane() < ego.lane,
        left: world.target_lane() > ego.lane,
        in_front,
        behind,
        sd_front,
        sd_rear,
        lane_change: straddles || ego.lane != world.ego_prev_lane(),
        rightmost_lane: ego.lane == map.rightmost_lane_index(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Compliance {
    pub r1: f64,
    pub r2: f64,
    pub overall: f64,
}

/// Fraction of steps without violations, per rule and overall.
pub fn trace_compliance(verdicts: &[RuleVerdict]) -> Result<Compliance, RuleError> {
    if verdicts.is_empty() {
        return Err(RuleError::EmptyTrace);
    }
    let n = verdicts.len() as f64;
    let count = |f: &dyn Fn(&RuleVerdict) -> bool| verdicts.iter().filter(|v| f(v)).count() as f64 / n;
    Ok(Compliance {
        r1: count(&|v| !v.r1.violated),
        r2: count(&|v| !v.r2.violated),
        overall: count(&|v| v.compliant()),
    })
}
