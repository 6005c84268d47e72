use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tprl_core::planner::plan_action;
use tprl_core::world::init_scenario;
use tprl_core::HighLevelAction;
use tprl_harness::agent::Greedy;
use tprl_harness::evaluate::MetricsSummary;
use tprl_harness::trace::{check_trace, read_trace, write_trace, TraceHeader, TraceKind};
use tprl_harness::train::agent_from_checkpoint;
use tprl_harness::{evaluate, metrics_from_trace, train, Algo, HarnessError, MapKind, RunConfig, Variant};
use tprl_rl::Checkpoint;

#[derive(Parser)]
#[command(name = "tprl", version, about = "Train and test decision-period lane-change policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write its checkpoint and training curves.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        algo: Option<Algo>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        steps_per_epoch: Option<usize>,
    },
    /// Drive the test laps with a trained policy and report metrics.
    Test {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Plan one left lane change from the initial scenario and print the trajectory.
    Plan {
        #[command(flatten)]
        common: Common,
    },
    /// Recompute metrics from a recorded test trace.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        /// Metrics summary to compare against.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Verify the internal consistency of a trace.
    CheckTrace {
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    map: Option<MapKind>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self, fallback: Option<&Path>) -> Result<RunConfig, HarnessError> {
        let mut cfg = match (&self.config, fallback) {
            (Some(p), _) => RunConfig::load(p)?,
            (None, Some(p)) if p.exists() => RunConfig::load(p)?,
            _ => RunConfig::default(),
        };
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Trace(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Train { common, algo, epochs, steps_per_epoch } => {
            let mut cfg = common.load(None)?;
            if let Some(m) = common.map {
                cfg.train_map = m;
            }
            if let Some(a) = algo {
                cfg.algo = a;
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(s) = steps_per_epoch {
                cfg.steps_per_epoch = s;
            }
            cfg.validate()?;
            let out = common
                .out
                .unwrap_or_else(|| PathBuf::from(format!("runs/{}-{}-seed{}", cfg.algo, cfg.variant, cfg.seed)));
            train(&cfg, Some(&out), &mut |row| {
                eprintln!(
                    "epoch {:>4}  period reward {:>9.3}  R1 {:>7.4}  R2 {:>7.4}  policy loss {:>8.4}  value loss {:>10.3}",
                    row.epoch, row.mean_period_reward, row.r1_mean, row.r2_mean, row.policy_loss, row.value_loss
                )
            })?;
            println!("{}", out.display());
        }
        Command::Test { common, checkpoint } => {
            let dir = checkpoint.parent().map(Path::to_path_buf).unwrap_or_default();
            let cfg = common.load(Some(&dir.join("config.toml")))?;
            let map = common.map.unwrap_or(cfg.test_map);
            let ck = Checkpoint::load(&checkpoint)?;
            let agent = agent_from_checkpoint(&ck, &cfg)?;
            let out = common.out.unwrap_or(dir);
            fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
            let run = evaluate(&cfg, map, &mut Greedy(&agent))?;
            write_trace(&out.join("trace.jsonl"), &TraceHeader::new(TraceKind::Test, map, &cfg), &run.trace)?;
            let summary = MetricsSummary::new(&cfg, map, run.metrics);
            write_json(&out.join("metrics.json"), &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("metrics serialize"));
        }
        Command::Plan { common } => {
            let cfg = common.load(None)?;
            let map = cfg.build_map(common.map.unwrap_or(cfg.test_map))?;
            let world = init_scenario(&map, &cfg.scenario)?;
            let traj = plan_action(&world, &map, HighLevelAction::ChangeLeft, &cfg.planner)
                .map_err(|e| HarnessError::Policy(format!("planning failed: {e}")))?;
            let mut csv = String::from("t,x,y,theta,v,steer\n");
            for s in &traj.samples {
                csv += &format!("{},{},{},{},{},{}\n", s.t, s.x, s.y, s.theta, s.v, s.steer);
            }
            match common.out {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
                    let p = dir.join("trajectory.csv");
                    fs::write(&p, csv).map_err(|e| HarnessError::io(&p, e))?;
                    println!("{}", p.display());
                }
                None => print!("{csv}"),
            }
        }
        Command::Replay { trace, metrics } => {
            let (header, records) = read_trace(&trace)?;
            let cfg = &header.config;
            let m = metrics_from_trace(&records, cfg.scenario.dt, cfg.test_laps)?;
            let summary = MetricsSummary::new(cfg, header.map, m);
            println!("{}", serde_json::to_string_pretty(&summary).expect("metrics serialize"));
            if let Some(p) = metrics {
                let text = fs::read_to_string(&p).map_err(|e| HarnessError::io(&p, e))?;
                let recorded: MetricsSummary =
                    serde_json::from_str(&text).map_err(|e| HarnessError::Trace(format!("{}: {e}", p.display())))?;
                if recorded != summary {
                    eprintln!("replayed metrics differ from {}", p.display());
                    return Ok(ExitCode::FAILURE);
                }
                eprintln!("replayed metrics match {}", p.display());
            }
        }
        Command::CheckTrace { trace } => {
            let (header, records) = read_trace(&trace)?;
            match check_trace(&header, &records) {
                Ok(r) => println!(
                    "ok: {} steps, {} samples, {} decisions, {} period returns checked",
                    r.steps, r.samples, r.decisions, r.periods
                ),
                Err(errors) => {
                    for e in &errors {
                        eprintln!("{e}");
                    }
                    eprintln!("{} inconsistencies", errors.len());
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
