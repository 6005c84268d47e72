//! Line-delimited JSON trace logs and their consistency checks.
//!
//! The first line is a [`TraceHeader`] holding the full run configuration; each
//! following line is one [`StepRecord`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tprl_core::rules::eval_rules;

use crate::config::{MapKind, RunConfig, Variant};
use crate::env::StepRecord;
use crate::HarnessError;

pub const TRACE_FORMAT: &str = "tprl-trace";
pub const TRACE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    /// Steps collected for learning.
    Rollout,
    /// A test run.
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub kind: TraceKind,
    pub map: MapKind,
    pub config_hash: String,
    pub config: RunConfig,
}

impl TraceHeader {
    pub fn new(kind: TraceKind, map: MapKind, config: &RunConfig) -> Self {
        Self {
            format: TRACE_FORMAT.into(),
            version: TRACE_VERSION,
            kind,
            map,
            config_hash: config.hash(),
            config: config.clone(),
        }
    }
}

pub fn write_trace(path: &Path, header: &TraceHeader, records: &[StepRecord]) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| HarnessError::io(path, e);
    serde_json::to_writer(&mut w, header).map_err(|e| HarnessError::Trace(e.to_string()))?;
    w.write_all(b"\n").map_err(io)?;
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| HarnessError::Trace(e.to_string()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_trace(path: &Path) -> Result<(TraceHeader, Vec<StepRecord>), HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let parse_err = |n: usize, e: serde_json::Error| HarnessError::Trace(format!("{} line {n}: {e}", path.display()));
    let first = lines
        .next()
        .ok_or_else(|| HarnessError::Trace(format!("{}: empty trace", path.display())))?
        .map_err(|e| HarnessError::io(path, e))?;
    let header: TraceHeader = serde_json::from_str(&first).map_err(|e| parse_err(1, e))?;
    if header.format != TRACE_FORMAT || header.version != TRACE_VERSION {
        return Err(HarnessError::Trace(format!(
            "{}: unsupported trace format {} v{}",
            path.display(),
            header.format,
            header.version
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| parse_err(i + 2, e))?);
    }
    Ok((header, records))
}

/// Summary of a consistent trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceReport {
    pub steps: usize,
    pub samples: usize,
    pub decisions: usize,
    /// Periods whose discounted return was checked.
    pub periods: usize,
}

/// Checks that rewards follow from the logged valuations, that every logged
/// period return equals the discounted sum of its step rewards, and, for the
/// period variants, that the action is constant inside each period.
pub fn check_trace(header: &TraceHeader, records: &[StepRecord]) -> Result<TraceReport, Vec<String>> {
    let cfg = &header.config;
    let gamma = cfg.ppo.gamma;
    let held = cfg.variant != Variant::NoSkip;
    let mut errors = Vec::new();
    let mut report = TraceReport { steps: records.len(), ..TraceReport::default() };
    let mut window_start = 0usize;

    for (i, r) in records.iter().enumerate() {
        report.samples += r.sample as usize;
        report.decisions += r.decision as usize;
        let v = eval_rules(&r.atomics);
        if v != r.verdict || r.reward != v.step_reward {
            errors.push(format!("step {}: reward {} does not follow from the logged propositions", r.step, r.reward));
        }
        if i > window_start && r.episode != records[i - 1].episode {
            window_start = i;
        }
        if held {
            if r.decision && i > window_start {
                if i - window_start != cfg.period {
                    errors.push(format!("step {}: new decision after {} steps of a period", r.step, i - window_start));
                }
                window_start = i;
            }
            if r.action != records[window_start].action {
                errors.push(format!("step {}: action changed inside a period", r.step));
            }
            if i - window_start >= cfg.period {
                errors.push(format!("step {}: period longer than {}", r.step, cfg.period));
            }
        }
        if let Some(ret) = r.period_return {
            let brute: f64 =
                records[window_start..=i].iter().enumerate().map(|(n, s)| s.reward as f64 * gamma.powi(n as i32)).sum();
            if (brute - ret).abs() > 1e-12 {
                errors.push(format!("step {}: period return {ret} differs from discounted sum {brute}", r.step));
            }
            report.periods += 1;
            window_start = i + 1;
        } else if r.collision {
            window_start = i + 1;
        }
    }
    if errors.is_empty() {
        Ok(report)
    } else {
        Err(errors)
    }
}
