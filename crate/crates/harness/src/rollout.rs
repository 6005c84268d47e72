//! Decision periods and sample collection for the three skip variants.

use tprl_core::HighLevelAction;

use crate::config::Variant;
use crate::env::{Env, StepRecord};
use crate::HarnessError;

/// Discounted sum `sum_n gamma^n r_n` of the step rewards of one period.
///
/// Uses compensated summation so the result does not depend on how long the
/// period is.
#[derive(Clone, Copy, Debug)]
pub struct PeriodAccumulator {
    gamma: f64,
    /// `gamma^n`, kept as a running product so every build rounds alike.
    discount: f64,
    n: usize,
    sum: f64,
    comp: f64,
}

impl PeriodAccumulator {
    pub fn new(gamma: f64) -> Self {
        Self { gamma, discount: 1.0, n: 0, sum: 0.0, comp: 0.0 }
    }

    pub fn push(&mut self, reward: f64) {
        let term = reward * self.discount;
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
        self.discount *= self.gamma;
        self.n += 1;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// The planner request for a held action: it is re-issued only while no
/// trajectory is being tracked, so holding never produces refusals.
pub(crate) fn held_request(env: &Env, action: HighLevelAction) -> Option<HighLevelAction> {
    env.planner_idle().then_some(action)
}

#[derive(Clone, Debug)]
pub struct PeriodResult {
    /// Discounted period return.
    pub reward: f64,
    pub steps: Vec<StepRecord>,
    /// The episode ended by collision inside the period.
    pub terminated: bool,
}

/// Holds `action` for `n` steps, or until a collision ends the episode.
pub fn run_decision_period(env: &mut Env, action: HighLevelAction, n: usize, gamma: f64) -> Result<PeriodResult, HarnessError> {
    let mut acc = PeriodAccumulator::new(gamma);
    let mut steps = Vec::with_capacity(n);
    let mut terminated = false;
    for _ in 0..n {
        let rec = env.step(action, held_request(env, action))?;
        acc.push(rec.reward as f64);
        terminated = rec.collision;
        steps.push(rec);
        if terminated {
            break;
        }
    }
    let reward = acc.value();
    debug_assert!({
        let brute: f64 = steps.iter().enumerate().map(|(k, r)| r.reward as f64 * gamma.powi(k as i32)).sum();
        (brute - reward).abs() <= 1e-9
    });
    if let Some(last) = steps.last_mut() {
        last.period_return = Some(reward);
    }
    Ok(PeriodResult { reward, steps, terminated })
}

/// Output of a policy for one observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub action: usize,
    pub logprob: f64,
    pub value: f64,
}

pub trait Policy {
    /// Draws a new action.
    fn decide(&mut self, obs: &[f64]) -> Result<Decision, HarnessError>;

    /// Scores an action that was drawn earlier and is still held.
    fn score(&mut self, obs: &[f64], action: usize) -> Result<Decision, HarnessError>;
}

/// How the sample's trajectory continues after it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleEnd {
    Continue,
    /// Collision; nothing follows.
    Terminal,
    /// Episode cut by the lap quota; the value of `next_obs` stands in for the rest.
    Truncated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub obs: Vec<f64>,
    pub action: usize,
    pub logprob: f64,
    pub value: f64,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub end: SampleEnd,
}

#[derive(Clone, Debug, Default)]
pub struct Rollout {
    pub samples: Vec<Sample>,
    /// Discounted returns of the periods finished during the rollout.
    pub period_returns: Vec<f64>,
    pub steps: u64,
    /// Sums over steps of the per-rule rewards (minus one per violation).
    pub r1_sum: f64,
    pub r2_sum: f64,
    pub reward_sum: f64,
    pub collisions: u64,
    pub episodes_finished: u64,
    pub emergencies: u64,
    pub refusals: u64,
    /// Step records, kept only when requested.
    pub trace: Vec<StepRecord>,
}

impl Rollout {
    fn record(&mut self, rec: &StepRecord, keep: bool) {
        self.steps += 1;
        self.r1_sum -= rec.verdict.r1.violated as i32 as f64;
        self.r2_sum -= rec.verdict.r2.violated as i32 as f64;
        self.reward_sum += rec.reward as f64;
        self.collisions += rec.collision as u64;
        self.emergencies += rec.planner.emergency as u64;
        self.refusals += rec.planner.refused as u64;
        if let Some(p) = rec.period_return {
            self.period_returns.push(p);
        }
        if keep {
            self.trace.push(rec.clone());
        }
    }
}

/// Per-step variants may cut an epoch in the middle of a period; this is the
/// part that carries over.
#[derive(Clone, Copy, Debug)]
struct OpenPeriod {
    action: HighLevelAction,
    pos: usize,
    acc: PeriodAccumulator,
}

/// Owns the environment across epochs and turns policy decisions into samples.
pub struct Collector {
    pub env: Env,
    pub variant: Variant,
    pub period: usize,
    pub gamma: f64,
    pub lap_quota: u32,
    open: Option<OpenPeriod>,
}

fn action_of(i: usize) -> Result<HighLevelAction, HarnessError> {
    HighLevelAction::from_index(i).ok_or_else(|| HarnessError::Policy(format!("action index {i} out of range")))
}

impl Collector {
    pub fn new(env: Env, variant: Variant, period: usize, gamma: f64, lap_quota: u32) -> Self {
        Self { env, variant, period, gamma, lap_quota, open: None }
    }

    /// Resets the environment at a period boundary once the lap quota is met.
    /// Returns true if an episode ended.
    fn boundary(&mut self) -> Result<bool, HarnessError> {
        if self.env.laps() >= self.lap_quota {
            self.env.reset()?;
            return Ok(true);
        }
        Ok(false)
    }

    /// Collects `budget` simulation steps (whole periods for TPRL).
    pub fn collect(&mut self, policy: &mut dyn Policy, budget: usize, keep_trace: bool) -> Result<Rollout, HarnessError> {
        if budget == 0 {
            return Err(HarnessError::Config("rollout budget must be positive".into()));
        }
        match self.variant {
            Variant::Tprl => self.collect_periods(policy, budget, keep_trace),
            _ => self.collect_steps(policy, budget, keep_trace),
        }
    }

    fn collect_periods(&mut self, policy: &mut dyn Policy, budget: usize, keep: bool) -> Result<Rollout, HarnessError> {
        if budget < self.period {
            return Err(HarnessError::Config(format!("budget {budget} is shorter than one period ({})", self.period)));
        }
        let mut out = Rollout::default();
        for _ in 0..budget / self.period {
            if self.boundary()? {
                out.episodes_finished += 1;
                if let Some(s) = out.samples.last_mut() {
                    s.end = SampleEnd::Truncated;
                }
            }
            let obs = self.env.observation();
            let d = policy.decide(&obs)?;
            let action = action_of(d.action)?;
            let mut res = run_decision_period(&mut self.env, action, self.period, self.gamma)?;
            if let Some(first) = res.steps.first_mut() {
                first.decision = true;
                first.sample = true;
            }
            for rec in &res.steps {
                out.record(rec, keep);
            }
            let next_obs = self.env.observation();
            let end = if res.terminated { SampleEnd::Terminal } else { SampleEnd::Continue };
            out.samples.push(Sample { obs, action: d.action, logprob: d.logprob, value: d.value, reward: res.reward, next_obs, end });
            if res.terminated {
                self.env.reset()?;
            }
        }
        Ok(out)
    }

    fn collect_steps(&mut self, policy: &mut dyn Policy, budget: usize, keep: bool) -> Result<Rollout, HarnessError> {
        let mut out = Rollout::default();
        for _ in 0..budget {
            let mut fresh_period = false;
            if self.open.is_none() {
                if self.boundary()? {
                    out.episodes_finished += 1;
                    if let Some(s) = out.samples.last_mut() {
                        s.end = SampleEnd::Truncated;
                    }
                }
                fresh_period = true;
            }
            let obs = self.env.observation();
            let (d, action, request) = match self.variant {
                Variant::NoSkip => {
                    let d = policy.decide(&obs)?;
                    let a = action_of(d.action)?;
                    (d, a, Some(a))
                }
                _ => {
                    let d = match self.open {
                        Some(p) => policy.score(&obs, p.action.index())?,
                        None => policy.decide(&obs)?,
                    };
                    let a = action_of(d.action)?;
                    (d, a, held_request(&self.env, a))
                }
            };
            let mut open = self.open.take().unwrap_or(OpenPeriod { action, pos: 0, acc: PeriodAccumulator::new(self.gamma) });
            let mut rec = self.env.step(action, request)?;
            rec.sample = true;
            rec.decision = self.variant == Variant::NoSkip || fresh_period;
            open.acc.push(rec.reward as f64);
            open.pos += 1;
            let terminated = rec.collision;
            if open.pos == self.period || terminated {
                rec.period_return = Some(open.acc.value());
            } else {
                self.open = Some(open);
            }
            out.record(&rec, keep);
            let next_obs = self.env.observation();
            let end = if terminated { SampleEnd::Terminal } else { SampleEnd::Continue };
            out.samples.push(Sample { obs, action: d.action, logprob: d.logprob, value: d.value, reward: rec.reward as f64, next_obs, end });
            if terminated {
                self.open = None;
                self.env.reset()?;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{MapKind, RunConfig};

    #[test]
    fn accumulator_examples() {
        let mut a = PeriodAccumulator::new(0.99);
        for r in [-1.0, -1.0, 0.0] {
            a.push(r);
        }
        assert!((a.value() + 1.99).abs() < 1e-15);
        let mut z = PeriodAccumulator::new(0.99);
        (0..10).for_each(|_| z.push(0.0));
        assert_eq!(z.value(), 0.0);
        let mut g = PeriodAccumulator::new(0.99);
        (0..300).for_each(|_| g.push(-2.0));
        let closed = -2.0 * (1.0 - 0.99f64.powi(300)) / 0.01;
        assert!((g.value() - closed).abs() < 1e-10);
        assert!((g.value() + 190.19).abs() < 0.01);
    }

    struct Fixed(usize);

    impl Policy for Fixed {
        fn decide(&mut self, _: &[f64]) -> Result<Decision, HarnessError> {
            Ok(Decision { action: self.0, logprob: 0.0, value: 0.0 })
        }
        fn score(&mut self, _: &[f64], action: usize) -> Result<Decision, HarnessError> {
            Ok(Decision { action, logprob: 0.0, value: 0.0 })
        }
    }

    fn collector(variant: Variant) -> Collector {
        let cfg = RunConfig::default();
        let env = Env::from_config(&cfg, cfg.build_map(MapKind::Oval).unwrap()).unwrap();
        Collector::new(env, variant, 300, 0.99, 5)
    }

    #[test]
    fn sample_counts() {
        let mut c = collector(Variant::Tprl);
        let r = c.collect(&mut Fixed(0), 900, false).unwrap();
        assert_eq!(r.samples.len(), 3);
        assert_eq!(r.steps, 900);
        let mut c = collector(Variant::PeriodSkip);
        assert_eq!(c.collect(&mut Fixed(0), 450, false).unwrap().samples.len(), 450);
        assert!(collector(Variant::Tprl).collect(&mut Fixed(0), 299, false).is_err());
        assert!(collector(Variant::NoSkip).collect(&mut Fixed(0), 0, false).is_err());
    }

    #[test]
    fn period_straddles_epochs() {
        let mut c = collector(Variant::PeriodSkip);
        let a = c.collect(&mut Fixed(0), 450, false).unwrap();
        assert_eq!(a.period_returns.len(), 1);
        let b = c.collect(&mut Fixed(0), 150, false).unwrap();
        assert_eq!(b.period_returns.len(), 1);
    }
}
