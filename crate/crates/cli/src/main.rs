//! `evcoord` — reproducible runs of the EV charging coordination toolkit.
//!
//! Subcommands cover the whole pipeline: `ingest` or `synth` to build an
//! episodic day store, `collect` to record random-rollout experience, `train`
//! to fit a charging policy, `eval` to score it against business-as-usual and
//! the offline optimum, `sweep` for the training-span/monthly/scale studies,
//! and `oracle` to solve single days exactly. Every run writes a manifest
//! with the resolved configuration and seeds next to its outputs.

mod manifest;
mod store;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use evcoord_core::baselines::{dp_oracle, offline_optimum};
use evcoord_core::error::Error as CoreError;
use evcoord_core::evaluation::{
    evaluate_policy, run_monthly_sweep, run_scale_test, run_training_sweep, RegressorSpec,
    SplitSpec, TrainSettings,
};
use evcoord_core::fqi::{collect_experience, fitted_q_iteration, ExperienceSet, Policy};
use evcoord_core::mlp::MlpConfig;
use evcoord_core::session::distinct_stations;
use evcoord_core::{
    episodize, generate_synthetic, load_sessions_path, select_top_stations, ArrivalProfile,
    FleetConfig,
};

use manifest::RunDir;

#[derive(Parser)]
#[command(name = "evcoord", version, about = "Joint EV charging coordination toolkit")]
struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for data-parallel stages (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

/// Baseline configuration; every field can be overridden by a flag.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    n_max: u32,
    slot_min: u32,
    h_max_min: u32,
    mean_sessions: f64,
    min_stay: u32,
    max_stay: u32,
    max_charge: u32,
    trajectories: u32,
    action_cap: usize,
    regressor: String,
    learning_rate: f64,
    epochs: u32,
    batch_size: usize,
    huber_delta: f64,
    t_steps: u32,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self {
            n_max: 10,
            slot_min: 120,
            h_max_min: 1440,
            mean_sessions: 12.0,
            min_stay: 1,
            max_stay: u32::MAX, // clipped to the horizon
            max_charge: u32::MAX,
            trajectories: 1000,
            action_cap: 512,
            regressor: "mlp".into(),
            learning_rate: 1e-3,
            epochs: 20,
            batch_size: 64,
            huber_delta: 1.0,
            t_steps: 0, // 0 = horizon length
        }
    }
}

#[derive(Args, Clone, Debug, Serialize)]
struct FleetFlags {
    /// Number of jointly coordinated stations.
    #[arg(long)]
    n_max: Option<u32>,
    /// Decision slot length in minutes.
    #[arg(long)]
    slot_min: Option<u32>,
    /// Horizon length in minutes.
    #[arg(long)]
    h_max_min: Option<u32>,
}

#[derive(Args, Clone, Debug, Serialize)]
struct TrainFlags {
    /// Q-function approximator: `mlp` or `exact`.
    #[arg(long)]
    regressor: Option<String>,
    /// Fitted Q-iteration steps (default: the horizon length).
    #[arg(long)]
    t_steps: Option<u32>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    huber_delta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a sessions CSV into an episodic day store.
    Ingest {
        /// Input CSV (station_id,arrival,departure,energy_kwh,charge_rate_kw).
        #[arg(long)]
        csv: PathBuf,
        /// Keep only the busiest N stations.
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fleet: FleetFlags,
    },
    /// Generate a synthetic episodic day store.
    Synth {
        #[arg(long)]
        days: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        mean_sessions: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fleet: FleetFlags,
    },
    /// Record random-rollout experience tuples from a day store.
    Collect {
        #[arg(long)]
        days: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trajectories: Option<u32>,
        #[arg(long)]
        action_cap: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a charging policy from recorded experience.
    Train {
        #[arg(long)]
        experience: PathBuf,
        /// Seed for regressor initialization and minibatch order.
        #[arg(long, default_value_t = 0)]
        train_seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Score a trained policy against business-as-usual and the optimum.
    Eval {
        /// Directory containing policy.json (as written by `train`).
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        days: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve days exactly: flow optimum, optionally the DP oracle.
    Oracle {
        #[arg(long)]
        days: PathBuf,
        /// Also run exhaustive backward induction per day.
        #[arg(long)]
        dp: bool,
        /// State-action expansion budget for the DP oracle.
        #[arg(long, default_value_t = 1_000_000)]
        max_nodes: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// The experimental studies.
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
}

#[derive(Subcommand)]
enum SweepKind {
    /// Grid over training spans and trajectory counts.
    Training {
        #[arg(long)]
        train_days: PathBuf,
        #[arg(long)]
        test_days: PathBuf,
        /// Training spans, in window units.
        #[arg(long, value_delimiter = ',', required = true)]
        spans: Vec<u32>,
        /// Trajectories per day to sweep.
        #[arg(long, value_delimiter = ',', required = true)]
        samples: Vec<u32>,
        #[arg(long, default_value_t = 5)]
        runs: u32,
        /// Days per window unit.
        #[arg(long, default_value_t = 30)]
        unit_days: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        action_cap: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Evaluate each window unit on a policy trained from preceding units.
    Monthly {
        #[arg(long)]
        days: PathBuf,
        #[arg(long, default_value_t = 30)]
        unit_days: u32,
        /// Longest training span, in preceding units.
        #[arg(long, default_value_t = 5)]
        max_span: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trajectories: Option<u32>,
        #[arg(long)]
        action_cap: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Evaluate a fixed policy on duplicated test days.
    Scale {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        days: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        scales: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Runtime(anyhow!(other)),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| CliError::Runtime(anyhow!("cannot size worker pool: {e}")))?;
    }
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { csv, top, out, fleet } => cmd_ingest(&config, &csv, top, &out, &fleet),
        Command::Synth {
            days,
            seed,
            mean_sessions,
            out,
            fleet,
        } => cmd_synth(&config, days, seed, mean_sessions, &out, &fleet),
        Command::Collect {
            days,
            seed,
            trajectories,
            action_cap,
            out,
        } => cmd_collect(&config, &days, seed, trajectories, action_cap, &out),
        Command::Train {
            experience,
            train_seed,
            out,
            train,
        } => cmd_train(&config, &experience, train_seed, &out, &train),
        Command::Eval { policy, days, out } => cmd_eval(&policy, &days, &out),
        Command::Oracle {
            days,
            dp,
            max_nodes,
            out,
        } => cmd_oracle(&days, dp, max_nodes, &out),
        Command::Sweep { kind } => match kind {
            SweepKind::Training {
                train_days,
                test_days,
                spans,
                samples,
                runs,
                unit_days,
                seed,
                action_cap,
                out,
                train,
            } => cmd_sweep_training(
                &config, &train_days, &test_days, &spans, &samples, runs, unit_days, seed,
                action_cap, &out, &train,
            ),
            SweepKind::Monthly {
                days,
                unit_days,
                max_span,
                seed,
                trajectories,
                action_cap,
                out,
                train,
            } => cmd_sweep_monthly(
                &config, &days, unit_days, max_span, seed, trajectories, action_cap, &out, &train,
            ),
            SweepKind::Scale {
                policy,
                days,
                scales,
                out,
            } => cmd_sweep_scale(&policy, &days, &scales, &out),
        },
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|_| usage(format!("missing config file: {}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| usage(format!("bad config file {}: {e}", p.display())))
        }
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(usage(format!("missing {what}: {}", path.display())));
    }
    Ok(())
}

fn fleet_config(config: &FileConfig, flags: &FleetFlags) -> Result<FleetConfig, CliError> {
    FleetConfig::new(
        flags.n_max.unwrap_or(config.n_max),
        flags.h_max_min.unwrap_or(config.h_max_min),
        flags.slot_min.unwrap_or(config.slot_min),
    )
    .map_err(|e| usage(e.to_string()))
}

fn regressor_spec(
    config: &FileConfig,
    train: &TrainFlags,
    train_seed: u64,
) -> Result<RegressorSpec, CliError> {
    let kind = train.regressor.as_deref().unwrap_or(&config.regressor);
    match kind {
        "exact" => Ok(RegressorSpec::Exact),
        "mlp" => Ok(RegressorSpec::Mlp(MlpConfig {
            learning_rate: train.learning_rate.unwrap_or(config.learning_rate),
            epochs: train.epochs.unwrap_or(config.epochs),
            batch_size: train.batch_size.unwrap_or(config.batch_size),
            huber_delta: train.huber_delta.unwrap_or(config.huber_delta),
            seed: train_seed,
        })),
        other => Err(usage(format!("unknown regressor {other:?}; use mlp or exact"))),
    }
}

fn cmd_ingest(
    config: &FileConfig,
    csv: &Path,
    top: Option<usize>,
    out: &Path,
    fleet: &FleetFlags,
) -> Result<(), CliError> {
    require_file(csv, "sessions CSV")?;
    let cfg = fleet_config(config, fleet)?;
    let (mut sessions, mut summary) =
        load_sessions_path(csv, &cfg).map_err(|e| CliError::Runtime(anyhow!(e)))?;
    if let Some(n) = top {
        let distinct = distinct_stations(&sessions);
        if distinct < n {
            eprintln!("warning: only {distinct} distinct stations, keeping all (asked for top {n})");
        }
        sessions = select_top_stations(&sessions, n);
    }
    let episodized = episodize(&sessions, &cfg);
    summary.merge(&episodized.summary);

    let mut run_dir = RunDir::create(out)?;
    run_dir.write_bytes("days.jsonl", &store::days_to_bytes(&episodized.days, &cfg)?)?;
    run_dir.write_json(
        "summary.json",
        &serde_json::json!({
            "preprocess": summary,
            "days": episodized.days.len(),
            "sessions": episodized.days.iter().map(|d| d.sessions.len()).sum::<usize>(),
        }),
    )?;
    let args = serde_json::json!({
        "csv": csv.display().to_string(),
        "top": top,
        "fleet": cfg,
    });
    run_dir.commit("ingest", &args, &[])?;
    println!(
        "ingested {} days ({} sessions) into {}",
        episodized.days.len(),
        episodized.days.iter().map(|d| d.sessions.len()).sum::<usize>(),
        out.display()
    );
    Ok(())
}

fn cmd_synth(
    config: &FileConfig,
    days: u32,
    seed: u64,
    mean_sessions: Option<f64>,
    out: &Path,
    fleet: &FleetFlags,
) -> Result<(), CliError> {
    let cfg = fleet_config(config, fleet)?;
    let mut profile = ArrivalProfile::two_peak(&cfg, mean_sessions.unwrap_or(config.mean_sessions));
    profile.min_stay_slots = config.min_stay.min(cfg.s_max() as u32);
    profile.max_stay_slots = config.max_stay.min(cfg.s_max() as u32);
    profile.max_charge_slots = config.max_charge.min(cfg.s_max() as u32);
    let generated = generate_synthetic(days, &cfg, &profile, seed)?;

    let mut run_dir = RunDir::create(out)?;
    run_dir.write_bytes("days.jsonl", &store::days_to_bytes(&generated, &cfg)?)?;
    run_dir.write_json(
        "summary.json",
        &serde_json::json!({
            "days": generated.len(),
            "sessions": generated.iter().map(|d| d.sessions.len()).sum::<usize>(),
            "profile": profile,
        }),
    )?;
    let args = serde_json::json!({
        "days": days,
        "seed": seed,
        "fleet": cfg,
        "profile": profile,
    });
    run_dir.commit("synth", &args, &[("synth", seed)])?;
    println!(
        "generated {} days ({} sessions) into {}",
        generated.len(),
        generated.iter().map(|d| d.sessions.len()).sum::<usize>(),
        out.display()
    );
    Ok(())
}

fn cmd_collect(
    config: &FileConfig,
    days_path: &Path,
    seed: u64,
    trajectories: Option<u32>,
    action_cap: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    require_file(days_path, "day store")?;
    let (days, cfg) = store::load_days(days_path)?;
    let trajectories = trajectories.unwrap_or(config.trajectories);
    let action_cap = action_cap.unwrap_or(config.action_cap);
    let experience = collect_experience(&days, &cfg, trajectories, seed, action_cap)?;
    if experience.meta.skipped_days > 0 {
        eprintln!(
            "warning: skipped {} infeasible days during collection",
            experience.meta.skipped_days
        );
    }

    let mut run_dir = RunDir::create(out)?;
    let mut bytes = Vec::new();
    experience
        .save_jsonl(&mut bytes)
        .map_err(|e| CliError::Runtime(anyhow!(e)))?;
    run_dir.write_bytes("experience.jsonl", &bytes)?;
    let args = serde_json::json!({
        "days": days_path.display().to_string(),
        "trajectories": trajectories,
        "action_cap": action_cap,
        "fleet": cfg,
    });
    run_dir.commit("collect", &args, &[("collect", seed)])?;
    println!(
        "collected {} transitions from {} days into {}",
        experience.tuples.len(),
        days.len(),
        out.display()
    );
    Ok(())
}

fn cmd_train(
    config: &FileConfig,
    experience_path: &Path,
    train_seed: u64,
    out: &Path,
    train: &TrainFlags,
) -> Result<(), CliError> {
    require_file(experience_path, "experience file")?;
    let experience = ExperienceSet::load_jsonl_path(experience_path)
        .map_err(|e| CliError::Runtime(anyhow!(e)))?;
    let spec = regressor_spec(config, train, train_seed)?;
    let regressor = spec.build(evcoord_core::fqi::feature_dim(experience.meta.s_max as usize));
    let t_steps = match train.t_steps.unwrap_or(config.t_steps) {
        0 => experience.meta.s_max,
        t => t,
    };
    let policy = fitted_q_iteration(&experience, regressor, t_steps)?;

    let mut run_dir = RunDir::create(out)?;
    for path in policy.save(run_dir.path())? {
        run_dir.adopt(path);
    }
    let args = serde_json::json!({
        "experience": experience_path.display().to_string(),
        "experience_meta": experience.meta,
        "regressor": spec,
        "t_steps": t_steps,
        "train_seed": train_seed,
    });
    run_dir.commit(
        "train",
        &args,
        &[("experience", experience.meta.seed), ("train", train_seed)],
    )?;
    println!(
        "trained {} policy over {} tuples into {}",
        policy.regressor.kind(),
        experience.tuples.len(),
        out.display()
    );
    Ok(())
}

fn cmd_eval(policy_dir: &Path, days_path: &Path, out: &Path) -> Result<(), CliError> {
    let policy_file = policy_dir.join(evcoord_core::fqi::POLICY_FILE);
    require_file(&policy_file, "trained policy (policy.json)")?;
    require_file(days_path, "day store")?;
    let policy = Policy::load(policy_dir).map_err(|e| CliError::Runtime(anyhow!(e)))?;
    let (days, cfg) = store::load_days(days_path)?;
    let report = evaluate_policy(&policy, &days, &cfg)?;

    let mut run_dir = RunDir::create(out)?;
    run_dir.write_json("report.json", &report)?;
    run_dir.write_bytes("report.csv", report.to_csv().as_bytes())?;
    let args = serde_json::json!({
        "policy": policy_dir.display().to_string(),
        "days": days_path.display().to_string(),
        "action_cap": policy.action_cap,
        "fleet": cfg,
    });
    run_dir.commit("eval", &args, &[("policy", policy.seed)])?;
    println!(
        "C_RL = {:.4}, C_BAU = {:.4} over {} days ({} excluded, {} stranded)",
        report.c_rl,
        report.c_bau,
        report.included_days,
        report.excluded_zero_days,
        report.rl_stranded_total
    );
    Ok(())
}

fn cmd_oracle(days_path: &Path, dp: bool, max_nodes: u64, out: &Path) -> Result<(), CliError> {
    require_file(days_path, "day store")?;
    let (days, cfg) = store::load_days(days_path)?;
    let mut run_dir = RunDir::create(out)?;
    let mut rows = Vec::new();
    for day in &days {
        let opt = offline_optimum(day, &cfg)?;
        run_dir.write_bytes(&format!("optimum_{}.csv", day.date), opt.to_csv().as_bytes())?;
        let dp_cost = if dp {
            match dp_oracle(day, &cfg, max_nodes) {
                Ok(solution) => Some(solution.return_cost),
                Err(CoreError::NodeBudget { .. }) => {
                    eprintln!(
                        "note: {} exceeds the DP node budget, reporting the flow optimum only",
                        day.date
                    );
                    None
                }
                Err(e) => return Err(CliError::Runtime(anyhow!(e))),
            }
        } else {
            None
        };
        rows.push(serde_json::json!({
            "date": day.date,
            "sessions": day.sessions.len(),
            "optimum_cost": opt.cost,
            "slot_loads": opt.slot_loads,
            "dp_cost": dp_cost,
        }));
    }
    run_dir.write_json("oracle.json", &rows)?;
    let args = serde_json::json!({
        "days": days_path.display().to_string(),
        "dp": dp,
        "max_nodes": max_nodes,
        "fleet": cfg,
    });
    run_dir.commit("oracle", &args, &[])?;
    println!("solved {} days into {}", days.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep_training(
    config: &FileConfig,
    train_days_path: &Path,
    test_days_path: &Path,
    spans: &[u32],
    samples: &[u32],
    runs: u32,
    unit_days: u32,
    seed: u64,
    action_cap: Option<usize>,
    out: &Path,
    train: &TrainFlags,
) -> Result<(), CliError> {
    require_file(train_days_path, "training day store")?;
    require_file(test_days_path, "test day store")?;
    let (train_days, cfg) = store::load_days(train_days_path)?;
    let (test_days, test_cfg) = store::load_days(test_days_path)?;
    if cfg != test_cfg {
        return Err(usage("training and test day stores use different fleets"));
    }
    let split = SplitSpec {
        unit_days,
        spans: spans.to_vec(),
        runs,
        seed,
    };
    let settings = TrainSettings {
        regressor: regressor_spec(config, train, seed)?,
        trajectories_per_day: config.trajectories,
        action_cap: action_cap.unwrap_or(config.action_cap),
        seed,
        t_steps: match train.t_steps.unwrap_or(config.t_steps) {
            0 => None,
            t => Some(t),
        },
    };
    let report = run_training_sweep(&train_days, &test_days, &split, samples, &settings, &cfg)?;

    let mut run_dir = RunDir::create(out)?;
    run_dir.write_json("training_sweep.json", &report)?;
    run_dir.write_bytes("training_sweep.csv", report.to_csv().as_bytes())?;
    let args = serde_json::json!({
        "train_days": train_days_path.display().to_string(),
        "test_days": test_days_path.display().to_string(),
        "split": split,
        "samples": samples,
        "settings": settings,
        "fleet": cfg,
    });
    run_dir.commit("sweep-training", &args, &[("sweep", seed)])?;
    println!(
        "training sweep: {} cells, {} absent, into {}",
        report.cells.len(),
        report.absent.len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep_monthly(
    config: &FileConfig,
    days_path: &Path,
    unit_days: u32,
    max_span: u32,
    seed: u64,
    trajectories: Option<u32>,
    action_cap: Option<usize>,
    out: &Path,
    train: &TrainFlags,
) -> Result<(), CliError> {
    require_file(days_path, "day store")?;
    let (days, cfg) = store::load_days(days_path)?;
    let settings = TrainSettings {
        regressor: regressor_spec(config, train, seed)?,
        trajectories_per_day: trajectories.unwrap_or(config.trajectories),
        action_cap: action_cap.unwrap_or(config.action_cap),
        seed,
        t_steps: match train.t_steps.unwrap_or(config.t_steps) {
            0 => None,
            t => Some(t),
        },
    };
    let report = run_monthly_sweep(&days, unit_days, max_span, &settings, &cfg)?;

    let mut run_dir = RunDir::create(out)?;
    run_dir.write_json("monthly_sweep.json", &report)?;
    run_dir.write_bytes("monthly_sweep.csv", report.to_csv().as_bytes())?;
    let args = serde_json::json!({
        "days": days_path.display().to_string(),
        "unit_days": unit_days,
        "max_span": max_span,
        "settings": settings,
        "fleet": cfg,
    });
    run_dir.commit("sweep-monthly", &args, &[("sweep", seed)])?;
    println!(
        "monthly sweep: {} rows, {} skipped, into {}",
        report.rows.len(),
        report.skipped.len(),
        out.display()
    );
    Ok(())
}

fn cmd_sweep_scale(
    policy_dir: &Path,
    days_path: &Path,
    scales: &[u32],
    out: &Path,
) -> Result<(), CliError> {
    let policy_file = policy_dir.join(evcoord_core::fqi::POLICY_FILE);
    require_file(&policy_file, "trained policy (policy.json)")?;
    require_file(days_path, "day store")?;
    let policy = Policy::load(policy_dir).map_err(|e| CliError::Runtime(anyhow!(e)))?;
    let (days, cfg) = store::load_days(days_path)?;
    let points = run_scale_test(&policy, &days, scales, &cfg)?;

    let mut run_dir = RunDir::create(out)?;
    run_dir.write_json("scale_sweep.json", &points)?;
    let mut csv = String::from("scale,n_max,c_rl,c_bau,rl_stranded\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.scale, p.n_max, p.c_rl, p.c_bau, p.rl_stranded
        ));
    }
    run_dir.write_bytes("scale_sweep.csv", csv.as_bytes())?;
    let args = serde_json::json!({
        "policy": policy_dir.display().to_string(),
        "days": days_path.display().to_string(),
        "scales": scales,
        "fleet": cfg,
    });
    run_dir.commit("sweep-scale", &args, &[("policy", policy.seed)])?;
    for p in &points {
        println!("scale {}: C_RL = {:.4}, C_BAU = {:.4}", p.scale, p.c_rl, p.c_bau);
    }
    Ok(())
}
