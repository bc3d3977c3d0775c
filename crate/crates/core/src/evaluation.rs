//! Normalized-cost metrics and the experimental studies: training-span and
//! sample sweeps, per-month evaluation, and fleet-scale generalization.
//!
//! Costs are reported relative to the perfect-foresight optimum of each day
//! (mean over days of `cost / optimal cost`), so 1.0 means optimal play.
//! Days with no sessions have an undefined ratio; they are excluded and
//! counted.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{bau_rollout, offline_optimum};
use crate::config::FleetConfig;
use crate::error::{Error, Result};
use crate::exec;
use crate::fqi::{collect_experience, fitted_q_iteration, greedy_rollout, Policy};
use crate::mlp::{Mlp, MlpConfig};
use crate::regressor::{AnyRegressor, ExactTable};
use crate::seeds::mix_seed;
use crate::session::{duplicate_sessions, EpisodeDay};
use crate::episode::ArrivalSchedule;

/// Mean over days of `policy cost / optimal cost`.
///
/// Lengths must match and every optimal cost must be positive (exclude
/// zero-session days before calling).
pub fn normalized_cost(policy_costs: &[f64], opt_costs: &[f64]) -> Result<f64> {
    if policy_costs.len() != opt_costs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} policy costs vs {} optimal costs",
            policy_costs.len(),
            opt_costs.len()
        )));
    }
    if policy_costs.is_empty() {
        return Err(Error::EmptyInput("no days to normalize over".into()));
    }
    if opt_costs.iter().any(|&c| c <= 0.0) {
        return Err(Error::InvalidArgument(
            "optimal costs must be positive; exclude empty days".into(),
        ));
    }
    let sum: f64 = policy_costs
        .iter()
        .zip(opt_costs)
        .map(|(&p, &o)| p / o)
        .sum();
    Ok(sum / policy_costs.len() as f64)
}

/// Costs of one evaluated day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub date: chrono::NaiveDate,
    pub sessions: usize,
    pub rl_cost: f64,
    pub bau_cost: f64,
    pub opt_cost: f64,
    pub rl_stranded: u32,
    /// True when the day has no sessions and is excluded from the means.
    pub excluded: bool,
}

/// Evaluation of one policy over a set of test days.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub n_max: u32,
    pub s_max: u32,
    pub action_cap: usize,
    pub seed: u64,
    /// Mean normalized cost of the learned policy (1.0 = optimal).
    pub c_rl: f64,
    /// Mean normalized cost of business-as-usual charging.
    pub c_bau: f64,
    pub included_days: usize,
    pub excluded_zero_days: usize,
    pub rl_stranded_total: u32,
    pub days: Vec<DayRecord>,
}

impl EvalReport {
    /// `date,sessions,rl,bau,opt,stranded,excluded` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,sessions,rl_cost,bau_cost,opt_cost,rl_stranded,excluded\n");
        for d in &self.days {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                d.date, d.sessions, d.rl_cost, d.bau_cost, d.opt_cost, d.rl_stranded, d.excluded
            ));
        }
        out
    }
}

/// Rolls the greedy policy, business-as-usual, and the offline optimum over
/// every day and aggregates normalized costs.
pub fn evaluate_policy(policy: &Policy, days: &[EpisodeDay], cfg: &FleetConfig) -> Result<EvalReport> {
    if days.is_empty() {
        return Err(Error::EmptyInput("no evaluation days".into()));
    }
    let evaluated: Vec<Result<DayRecord>> = exec::map_slice(days, |day| {
        let schedule = ArrivalSchedule::from_day(day, cfg)?;
        let rl = greedy_rollout(policy, &schedule, cfg)?;
        let bau = bau_rollout(day, cfg)?;
        let opt = offline_optimum(day, cfg)?;
        Ok(DayRecord {
            date: day.date,
            sessions: day.sessions.len(),
            rl_cost: rl.total_cost(),
            bau_cost: bau.total_cost(),
            opt_cost: opt.cost,
            rl_stranded: rl.stranded_total(),
            excluded: day.sessions.is_empty(),
        })
    });

    let mut records = Vec::with_capacity(days.len());
    for r in evaluated {
        records.push(r?);
    }
    summarize(records, cfg, policy.action_cap, policy.seed)
}

fn summarize(
    days: Vec<DayRecord>,
    cfg: &FleetConfig,
    action_cap: usize,
    seed: u64,
) -> Result<EvalReport> {
    let included: Vec<&DayRecord> = days.iter().filter(|d| !d.excluded).collect();
    if included.is_empty() {
        return Err(Error::EmptyInput("every evaluation day was empty".into()));
    }
    let rl: Vec<f64> = included.iter().map(|d| d.rl_cost).collect();
    let bau: Vec<f64> = included.iter().map(|d| d.bau_cost).collect();
    let opt: Vec<f64> = included.iter().map(|d| d.opt_cost).collect();
    Ok(EvalReport {
        schema_version: 1,
        n_max: cfg.n_max,
        s_max: cfg.s_max() as u32,
        action_cap,
        seed,
        c_rl: normalized_cost(&rl, &opt)?,
        c_bau: normalized_cost(&bau, &opt)?,
        included_days: included.len(),
        excluded_zero_days: days.len() - included.len(),
        rl_stranded_total: days.iter().map(|d| d.rl_stranded).sum(),
        days,
    })
}

/// Which approximator a training run uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorSpec {
    Exact,
    Mlp(MlpConfig),
}

impl RegressorSpec {
    pub fn build(&self, input_dim: usize) -> AnyRegressor {
        match self {
            RegressorSpec::Exact => AnyRegressor::Exact(ExactTable::new()),
            RegressorSpec::Mlp(config) => AnyRegressor::Mlp(Mlp::new(input_dim, config.clone())),
        }
    }
}

/// Everything needed to train one policy from a set of days.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub regressor: RegressorSpec,
    pub trajectories_per_day: u32,
    pub action_cap: usize,
    pub seed: u64,
    /// Fitted Q-iteration steps; defaults to the horizon length.
    pub t_steps: Option<u32>,
}

/// Collects experience from `days` and runs fitted Q-iteration.
pub fn train_policy(days: &[EpisodeDay], cfg: &FleetConfig, settings: &TrainSettings) -> Result<Policy> {
    let experience = collect_experience(
        days,
        cfg,
        settings.trajectories_per_day,
        settings.seed,
        settings.action_cap,
    )?;
    let regressor = settings
        .regressor
        .build(crate::fqi::feature_dim(cfg.s_max()));
    let t_steps = settings.t_steps.unwrap_or(cfg.s_max() as u32);
    fitted_q_iteration(&experience, regressor, t_steps)
}

/// Train/test split layout for the sweep studies. Calendar months are
/// generalized to fixed-size windows of `unit_days` so synthetic datasets of
/// any length reuse the machinery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub unit_days: u32,
    /// Training spans to sweep, in window units.
    pub spans: Vec<u32>,
    /// Random contiguous training windows drawn per span.
    pub runs: u32,
    pub seed: u64,
}

/// One trained-and-evaluated sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub span_units: u32,
    pub samples_per_day: u32,
    pub run: u32,
    pub start_day: usize,
    pub c_rl: f64,
    pub c_bau: f64,
    pub rl_stranded: u32,
}

/// Mean and spread across runs of one `(span, samples)` grid point. Both the
/// standard deviation and the min-max range are reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub span_units: u32,
    pub samples_per_day: u32,
    pub runs: u32,
    pub mean_c_rl: f64,
    pub std_c_rl: f64,
    pub min_c_rl: f64,
    pub max_c_rl: f64,
    pub mean_c_bau: f64,
}

/// Full grid produced by [`run_training_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSweepReport {
    pub schema_version: u32,
    pub spans: Vec<u32>,
    pub samples_per_day: Vec<u32>,
    pub runs: u32,
    pub cells: Vec<SweepCell>,
    /// `(span, samples)` pairs with too little training data.
    pub absent: Vec<(u32, u32)>,
    pub stats: Vec<CellStats>,
}

impl TrainingSweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("span_units,samples_per_day,run,start_day,c_rl,c_bau,rl_stranded\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.span_units, c.samples_per_day, c.run, c.start_day, c.c_rl, c.c_bau, c.rl_stranded
            ));
        }
        out
    }
}

/// Trains one policy per `(span, samples, run)` cell on random contiguous
/// windows of the training pool and evaluates each on the fixed test days.
pub fn run_training_sweep(
    train_pool: &[EpisodeDay],
    test_days: &[EpisodeDay],
    split: &SplitSpec,
    samples_per_day: &[u32],
    settings: &TrainSettings,
    cfg: &FleetConfig,
) -> Result<TrainingSweepReport> {
    if split.unit_days < 1 || split.runs < 1 {
        return Err(Error::InvalidArgument("unit_days and runs must be positive".into()));
    }
    let pool_units = train_pool.len() / split.unit_days as usize;
    let mut cells = Vec::new();
    let mut absent = Vec::new();
    let mut stats = Vec::new();

    for &span in &split.spans {
        for &samples in samples_per_day {
            if span as usize > pool_units {
                absent.push((span, samples));
                continue;
            }
            let max_start_unit = pool_units - span as usize;
            let mut cell_group = Vec::with_capacity(split.runs as usize);
            for run in 0..split.runs {
                let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(
                    split.seed,
                    &[u64::from(span), u64::from(samples), u64::from(run)],
                ));
                let start_unit = rng.gen_range(0..=max_start_unit);
                let start_day = start_unit * split.unit_days as usize;
                let window =
                    &train_pool[start_day..start_day + (span * split.unit_days) as usize];
                let run_settings = TrainSettings {
                    trajectories_per_day: samples,
                    seed: mix_seed(settings.seed, &[u64::from(span), u64::from(samples), u64::from(run)]),
                    ..settings.clone()
                };
                let policy = train_policy(window, cfg, &run_settings)?;
                let report = evaluate_policy(&policy, test_days, cfg)?;
                cell_group.push(SweepCell {
                    span_units: span,
                    samples_per_day: samples,
                    run,
                    start_day,
                    c_rl: report.c_rl,
                    c_bau: report.c_bau,
                    rl_stranded: report.rl_stranded_total,
                });
            }
            stats.push(group_stats(span, samples, &cell_group));
            cells.extend(cell_group);
        }
    }

    Ok(TrainingSweepReport {
        schema_version: 1,
        spans: split.spans.clone(),
        samples_per_day: samples_per_day.to_vec(),
        runs: split.runs,
        cells,
        absent,
        stats,
    })
}

fn group_stats(span: u32, samples: u32, cells: &[SweepCell]) -> CellStats {
    let n = cells.len() as f64;
    let mean = cells.iter().map(|c| c.c_rl).sum::<f64>() / n;
    let var = cells.iter().map(|c| (c.c_rl - mean).powi(2)).sum::<f64>() / n;
    CellStats {
        span_units: span,
        samples_per_day: samples,
        runs: cells.len() as u32,
        mean_c_rl: mean,
        std_c_rl: var.sqrt(),
        min_c_rl: cells.iter().map(|c| c.c_rl).fold(f64::INFINITY, f64::min),
        max_c_rl: cells.iter().map(|c| c.c_rl).fold(f64::NEG_INFINITY, f64::max),
        mean_c_bau: cells.iter().map(|c| c.c_bau).sum::<f64>() / n,
    }
}

/// One per-month (window-unit) evaluation row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonthlyRow {
    /// Index of the test window within the dataset.
    pub unit: u32,
    /// Training span actually used, in preceding units.
    pub span_units: u32,
    pub c_rl: f64,
    pub c_bau: f64,
    /// Reduction of normalized cost relative to business-as-usual.
    pub improvement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonthlySweepReport {
    pub schema_version: u32,
    pub unit_days: u32,
    pub rows: Vec<MonthlyRow>,
    /// `(unit, reason)` for windows that could not be evaluated.
    pub skipped: Vec<(u32, String)>,
}

impl MonthlySweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("unit,span_units,c_rl,c_bau,improvement\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.unit, r.span_units, r.c_rl, r.c_bau, r.improvement
            ));
        }
        out
    }
}

/// Uses each window unit in turn as the test set, training on up to
/// `max_span` preceding units.
pub fn run_monthly_sweep(
    days: &[EpisodeDay],
    unit_days: u32,
    max_span: u32,
    settings: &TrainSettings,
    cfg: &FleetConfig,
) -> Result<MonthlySweepReport> {
    if unit_days < 1 || max_span < 1 {
        return Err(Error::InvalidArgument("unit_days and max_span must be positive".into()));
    }
    let units = days.len() / unit_days as usize;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();

    for unit in 1..units {
        let span = max_span.min(unit as u32);
        let test =
            &days[unit * unit_days as usize..(unit + 1) * unit_days as usize];
        if test.iter().all(|d| d.sessions.is_empty()) {
            skipped.push((unit as u32, "no sessions in test window".into()));
            continue;
        }
        let train_start = (unit - span as usize) * unit_days as usize;
        let train = &days[train_start..unit * unit_days as usize];
        if train.iter().all(|d| d.sessions.is_empty()) {
            skipped.push((unit as u32, "no sessions in training window".into()));
            continue;
        }
        let run_settings = TrainSettings {
            seed: mix_seed(settings.seed, &[unit as u64]),
            ..settings.clone()
        };
        let policy = train_policy(train, cfg, &run_settings)?;
        let report = evaluate_policy(&policy, test, cfg)?;
        rows.push(MonthlyRow {
            unit: unit as u32,
            span_units: span,
            c_rl: report.c_rl,
            c_bau: report.c_bau,
            improvement: report.c_bau - report.c_rl,
        });
    }

    Ok(MonthlySweepReport {
        schema_version: 1,
        unit_days,
        rows,
        skipped,
    })
}

/// Normalized costs of a fixed policy on duplicated test days.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalePoint {
    pub scale: u32,
    pub n_max: u32,
    pub c_rl: f64,
    pub c_bau: f64,
    pub rl_stranded: u32,
}

/// Evaluates a policy trained on a small fleet against `scale`-fold
/// duplicated sessions on a `scale`-fold fleet.
pub fn run_scale_test(
    policy: &Policy,
    test_days: &[EpisodeDay],
    scales: &[u32],
    cfg: &FleetConfig,
) -> Result<Vec<ScalePoint>> {
    let mut out = Vec::with_capacity(scales.len());
    for &scale in scales {
        let scaled_cfg = cfg.scaled(scale)?;
        let scaled_days: Vec<EpisodeDay> = test_days
            .iter()
            .map(|d| duplicate_sessions(d, scale))
            .collect::<Result<_>>()?;
        let report = evaluate_policy(policy, &scaled_days, &scaled_cfg)?;
        out.push(ScalePoint {
            scale,
            n_max: scaled_cfg.n_max,
            c_rl: report.c_rl,
            c_bau: report.c_bau,
            rl_stranded: report.rl_stranded_total,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_cost_basics() {
        assert_eq!(normalized_cost(&[0.75], &[0.75]).unwrap(), 1.0);
        let bau_over_opt = normalized_cost(&[1.25], &[0.75]).unwrap();
        assert!((bau_over_opt - 5.0 / 3.0).abs() < 1e-12);
        assert!(normalized_cost(&[], &[]).is_err());
        assert!(normalized_cost(&[1.0], &[0.0]).is_err());
        assert!(normalized_cost(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn adding_a_day_moves_the_mean_toward_its_ratio() {
        let base = normalized_cost(&[2.0, 3.0], &[1.0, 2.0]).unwrap();
        let with_high = normalized_cost(&[2.0, 3.0, 9.0], &[1.0, 2.0, 1.0]).unwrap();
        let with_low = normalized_cost(&[2.0, 3.0, 1.0], &[1.0, 2.0, 1.0]).unwrap();
        assert!(with_high > base && 9.0 > base);
        assert!(with_low < base && 1.0 < base);
    }
}
