//! Batch reinforcement learning: experience collection by random rollouts
//! and fitted Q-iteration over a pluggable regressor.
//!
//! The value function starts at zero everywhere; each iteration relabels
//! every stored transition with `cost + min over candidate actions at s'` of
//! the previous approximation (terminal states are pinned to zero) and refits
//! the regressor from scratch on the full labeled set. After `t_steps`
//! iterations the greedy policy over the final approximation is returned.
//!
//! Action sets are enumerated exhaustively when small enough, otherwise
//! sampled under a cap with a per-state seed derived from the base seed, so
//! collection, target computation, and greedy action selection all see the
//! same candidates for the same state.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::action::{enumerate_actions, ActionVector};
use crate::config::FleetConfig;
use crate::episode::{rollout, ArrivalSchedule, Trajectory, Transition};
use crate::error::{Error, Result};
use crate::exec;
use crate::mlp::{Mlp, MlpConfig};
use crate::regressor::{AnyRegressor, ExactTable, FeatureMatrix, Regressor};
use crate::seeds::mix_seed;
use crate::session::EpisodeDay;
use crate::state::{diagonal_totals, AggregateState, DiagonalTotals};

/// Default cap on enumerated candidate actions per state.
pub const DEFAULT_ACTION_CAP: usize = 512;

const ENUM_SALT: u64 = 0xAC7;
const TRAJ_SALT: u64 = 0x7247;

/// Feature vector length for a grid of `s_max` slots.
pub fn feature_dim(s_max: usize) -> usize {
    s_max * s_max + s_max + 1
}

/// Encodes `(s, u)` as `[t scaled to [0, 1], x row-major, u fractions]`.
pub fn encode(state: &AggregateState, action: &ActionVector) -> Vec<f64> {
    let totals = diagonal_totals(state);
    let mut out = Vec::with_capacity(feature_dim(state.s_max()));
    encode_with_totals(state, &totals, action, &mut out);
    out
}

fn encode_with_totals(
    state: &AggregateState,
    totals: &DiagonalTotals,
    action: &ActionVector,
    out: &mut Vec<f64>,
) {
    let s_max = state.s_max();
    out.clear();
    out.push(f64::from(state.t) / (s_max as f64 + 1.0));
    let n = f64::from(state.n_max);
    out.extend(state.counts().iter().map(|&c| f64::from(c) / n));
    for d in 0..s_max {
        let total = totals.count(d);
        let charged = action.charged_in(d);
        out.push(if total == 0 {
            0.0
        } else {
            f64::from(charged) / f64::from(total)
        });
    }
}

/// Candidate actions for a state, with the seed discipline shared by
/// collection, target computation, and greedy play.
pub fn candidate_actions(
    state: &AggregateState,
    totals: &DiagonalTotals,
    action_cap: usize,
    base_seed: u64,
) -> Vec<ActionVector> {
    enumerate_actions(
        totals,
        action_cap,
        mix_seed(base_seed, &[ENUM_SALT, state.fingerprint()]),
    )
}

/// Provenance of a batch of recorded transitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperienceMeta {
    pub version: u32,
    pub seed: u64,
    pub source: String,
    pub trajectories_per_day: u32,
    pub action_cap: usize,
    pub n_max: u32,
    pub s_max: u32,
    pub skipped_days: u32,
}

/// The batch `F` of `(s, u, s', cost)` tuples fitted Q-iteration consumes.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperienceSet {
    pub meta: ExperienceMeta,
    pub tuples: Vec<Transition>,
}

impl ExperienceSet {
    /// One meta line followed by one transition per line.
    pub fn save_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.meta)?;
        writeln!(w)?;
        for tuple in &self.tuples {
            serde_json::to_writer(&mut w, tuple)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_jsonl_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.save_jsonl(std::io::BufWriter::new(file))
    }

    /// Loads and validates: every stored cost must match recomputation.
    pub fn load_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let meta_line = lines
            .next()
            .ok_or_else(|| Error::EmptyInput("experience file has no meta line".into()))??;
        let meta: ExperienceMeta = serde_json::from_str(&meta_line)?;
        let mut tuples = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let tuple: Transition = serde_json::from_str(&line).map_err(|e| Error::CorruptRecord {
                line: idx as u64 + 2,
                msg: e.to_string(),
            })?;
            if (tuple.cost - tuple.recomputed_cost()).abs() > 1e-9 {
                return Err(Error::CorruptRecord {
                    line: idx as u64 + 2,
                    msg: format!(
                        "stored cost {} does not match recomputed {}",
                        tuple.cost,
                        tuple.recomputed_cost()
                    ),
                });
            }
            tuples.push(tuple);
        }
        Ok(Self { meta, tuples })
    }

    pub fn load_jsonl_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::load_jsonl(std::io::BufReader::new(file))
    }
}

/// Rolls random trajectories through every day and records all transitions.
///
/// Each trajectory picks uniformly among the state's candidate actions until
/// the terminal state. Deterministic given the seed; days whose sessions
/// exceed capacity are skipped and counted in the meta.
pub fn collect_experience(
    days: &[EpisodeDay],
    cfg: &FleetConfig,
    trajectories_per_day: u32,
    seed: u64,
    action_cap: usize,
) -> Result<ExperienceSet> {
    if days.is_empty() {
        return Err(Error::EmptyInput("no days to collect from".into()));
    }
    if trajectories_per_day < 1 {
        return Err(Error::InvalidArgument(
            "trajectories_per_day must be at least 1".into(),
        ));
    }

    let mut schedules = Vec::with_capacity(days.len());
    let mut skipped_days = 0u32;
    for day in days {
        match ArrivalSchedule::from_day(day, cfg).and_then(|s| {
            s.initial_state(cfg)?;
            Ok(s)
        }) {
            Ok(s) => schedules.push(s),
            Err(Error::Capacity { .. }) => skipped_days += 1,
            Err(e) => return Err(e),
        }
    }
    if schedules.is_empty() {
        return Err(Error::EmptyInput("all days were infeasible".into()));
    }

    let total = schedules.len() * trajectories_per_day as usize;
    let trajectories: Vec<Result<Trajectory>> = exec::map_range(total, |k| {
        let day_idx = k / trajectories_per_day as usize;
        let traj_idx = (k % trajectories_per_day as usize) as u64;
        let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(
            seed,
            &[TRAJ_SALT, day_idx as u64, traj_idx],
        ));
        rollout(&schedules[day_idx], cfg, |state, totals| {
            let candidates = candidate_actions(state, totals, action_cap, seed);
            candidates[rng.gen_range(0..candidates.len())].clone()
        })
    });

    let mut tuples = Vec::with_capacity(total * cfg.s_max());
    for traj in trajectories {
        tuples.extend(traj?.transitions);
    }

    Ok(ExperienceSet {
        meta: ExperienceMeta {
            version: 1,
            seed,
            source: format!("{} days", days.len()),
            trajectories_per_day,
            action_cap,
            n_max: cfg.n_max,
            s_max: cfg.s_max() as u32,
            skipped_days,
        },
        tuples,
    })
}

/// A greedy policy over a trained Q-function approximation.
#[derive(Clone, Debug)]
pub struct Policy {
    pub regressor: AnyRegressor,
    pub action_cap: usize,
    pub seed: u64,
}

/// Runs fitted Q-iteration on a batch of experience.
///
/// `t_steps` should equal the horizon `s_max` so the final approximation
/// carries the full episode return. The candidate cap and seed discipline
/// are inherited from the experience meta.
pub fn fitted_q_iteration(
    experience: &ExperienceSet,
    mut regressor: AnyRegressor,
    t_steps: u32,
) -> Result<Policy> {
    if experience.tuples.is_empty() {
        return Err(Error::EmptyInput("experience set is empty".into()));
    }
    let meta = &experience.meta;
    let dim = feature_dim(meta.s_max as usize);

    // Features never change across iterations; encode once.
    let rows: Vec<Vec<f64>> = exec::map_slice(&experience.tuples, |t| encode(&t.state, &t.action));
    let mut features = FeatureMatrix::with_capacity(dim, rows.len());
    for row in &rows {
        features.push_row(row);
    }
    drop(rows);

    // Distinct successor states (ignoring the stranded tally, which does not
    // affect values) so each inner minimization runs once per iteration.
    let mut distinct: Vec<&AggregateState> = Vec::new();
    let mut key_of: HashMap<(u32, &[u32]), usize> = HashMap::new();
    let mut tuple_value_idx: Vec<Option<usize>> = Vec::with_capacity(experience.tuples.len());
    for tuple in &experience.tuples {
        let next = &tuple.next;
        if next.is_terminal() {
            tuple_value_idx.push(None);
            continue;
        }
        let key = (next.t, next.counts());
        let idx = *key_of.entry(key).or_insert_with(|| {
            distinct.push(next);
            distinct.len() - 1
        });
        tuple_value_idx.push(Some(idx));
    }

    for iteration in 1..=t_steps {
        let targets: Vec<f64> = if iteration == 1 {
            // The zero-initialized value function contributes nothing.
            experience.tuples.iter().map(|t| t.cost).collect()
        } else {
            let values = exec::map_slice(&distinct, |state| {
                min_q_value(&regressor, state, meta.action_cap, meta.seed)
            });
            experience
                .tuples
                .iter()
                .zip(&tuple_value_idx)
                .map(|(t, idx)| t.cost + idx.map_or(0.0, |i| values[i]))
                .collect()
        };
        regressor.fit(&features, &targets).map_err(|e| match e {
            Error::RegressorDiverged { loss, .. } => Error::RegressorDiverged { iteration, loss },
            other => other,
        })?;
    }

    Ok(Policy {
        regressor,
        action_cap: meta.action_cap,
        seed: meta.seed,
    })
}

/// Feature rows for every candidate at a state; the state prefix is encoded
/// once and only the action suffix varies per row.
fn candidate_features(
    state: &AggregateState,
    totals: &DiagonalTotals,
    candidates: &[ActionVector],
) -> FeatureMatrix {
    let s_max = state.s_max();
    let dim = feature_dim(s_max);
    let mut row = Vec::with_capacity(dim);
    encode_with_totals(state, totals, &ActionVector::zeros(s_max), &mut row);
    let mut features = FeatureMatrix::with_capacity(dim, candidates.len());
    for action in candidates {
        for d in 0..s_max {
            let total = totals.count(d);
            row[1 + s_max * s_max + d] = if total == 0 {
                0.0
            } else {
                f64::from(action.charged_in(d)) / f64::from(total)
            };
        }
        features.push_row(&row);
    }
    features
}

fn min_q_value(regressor: &AnyRegressor, state: &AggregateState, cap: usize, seed: u64) -> f64 {
    let totals = diagonal_totals(state);
    let candidates = candidate_actions(state, &totals, cap, seed);
    let features = candidate_features(state, &totals, &candidates);
    regressor
        .predict(&features)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Greedy action: the candidate minimizing the learned Q-value, ties broken
/// by the lexicographically smallest charge vector.
pub fn act(policy: &Policy, state: &AggregateState) -> ActionVector {
    if state.is_terminal() {
        return ActionVector::zeros(state.s_max());
    }
    let totals = diagonal_totals(state);
    let candidates = candidate_actions(state, &totals, policy.action_cap, policy.seed);
    let features = candidate_features(state, &totals, &candidates);
    let values = policy.regressor.predict(&features);
    let mut best_value = f64::INFINITY;
    let mut best: Option<&ActionVector> = None;
    for (action, value) in candidates.iter().zip(values) {
        let better = match best {
            None => true,
            Some(current) => {
                value < best_value || (value == best_value && action.charged() < current.charged())
            }
        };
        if better {
            best_value = value;
            best = Some(action);
        }
    }
    best.expect("candidate set is never empty").clone()
}

/// Rolls a day under the greedy policy.
pub fn greedy_rollout(
    policy: &Policy,
    schedule: &ArrivalSchedule,
    cfg: &FleetConfig,
) -> Result<Trajectory> {
    rollout(schedule, cfg, |state, _| act(policy, state))
}

// --- Policy persistence ---------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    version: u32,
    action_cap: usize,
    seed: u64,
    regressor: PolicyRegressorFile,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PolicyRegressorFile {
    Exact { table: ExactTable },
    Mlp { config: MlpConfig, weights_file: String },
}

pub const POLICY_FILE: &str = "policy.json";
pub const POLICY_WEIGHTS_FILE: &str = "policy_weights.bin";

impl Policy {
    /// Writes `policy.json` (plus a flat weights binary for the network)
    /// into `dir`; returns the files written.
    pub fn save(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let regressor = match &self.regressor {
            AnyRegressor::Exact(table) => PolicyRegressorFile::Exact {
                table: table.clone(),
            },
            AnyRegressor::Mlp(mlp) => {
                let weights_path = dir.join(POLICY_WEIGHTS_FILE);
                mlp.save_path(&weights_path)?;
                written.push(weights_path);
                PolicyRegressorFile::Mlp {
                    config: mlp.config.clone(),
                    weights_file: POLICY_WEIGHTS_FILE.to_string(),
                }
            }
        };
        let file = PolicyFile {
            version: 1,
            action_cap: self.action_cap,
            seed: self.seed,
            regressor,
        };
        let path = dir.join(POLICY_FILE);
        let mut out = serde_json::to_vec_pretty(&file)?;
        out.push(b'\n');
        std::fs::write(&path, out)?;
        written.push(path);
        Ok(written)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(POLICY_FILE);
        let bytes = std::fs::read(&path)?;
        let file: PolicyFile = serde_json::from_slice(&bytes)?;
        let regressor = match file.regressor {
            PolicyRegressorFile::Exact { table } => AnyRegressor::Exact(table),
            PolicyRegressorFile::Mlp {
                config,
                weights_file,
            } => AnyRegressor::Mlp(Mlp::load_path(&dir.join(weights_file), config)?),
        };
        Ok(Self {
            regressor,
            action_cap: file.action_cap,
            seed: file.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{bin_sessions, EvDemand};

    fn small_cfg() -> FleetConfig {
        FleetConfig::new(2, 6 * 60, 2 * 60).unwrap()
    }

    fn two_car_day() -> EpisodeDay {
        let date = chrono::NaiveDate::from_ymd_opt(2015, 3, 2).unwrap();
        EpisodeDay {
            date,
            sessions: vec![
                crate::session::Session {
                    station_id: "A".into(),
                    arrival: date.and_hms_opt(7, 0, 0).unwrap(),
                    departure: date.and_hms_opt(13, 0, 0).unwrap(),
                    charge_slots: 2,
                },
                crate::session::Session {
                    station_id: "B".into(),
                    arrival: date.and_hms_opt(7, 30, 0).unwrap(),
                    departure: date.and_hms_opt(11, 0, 0).unwrap(),
                    charge_slots: 1,
                },
            ],
        }
    }

    #[test]
    fn feature_layout_matches_grid_size() {
        assert_eq!(feature_dim(12), 157); // 144 state cells + 12 actions + time
        let cfg = small_cfg();
        let s = AggregateState::empty(&cfg, 4);
        let u = ActionVector::zeros(3);
        let features = encode(&s, &u);
        assert_eq!(features.len(), feature_dim(3));
        assert_eq!(features[0], 1.0); // terminal slot scaled by s_max + 1
        assert!(features[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn encode_distinguishes_random_pairs() {
        use std::collections::HashSet;
        let cfg = FleetConfig::new(4, 8 * 60, 2 * 60).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut seen: HashMap<Vec<u64>, (AggregateState, ActionVector)> = HashMap::new();
        let mut distinct_pairs = HashSet::new();
        for _ in 0..10_000 {
            let n_evs = rng.gen_range(0..=4);
            let evs: Vec<EvDemand> = (0..n_evs)
                .map(|_| {
                    let depart = rng.gen_range(1..=4);
                    EvDemand::new(depart, rng.gen_range(1..=depart))
                })
                .collect();
            let mut state = bin_sessions(&evs, &cfg).unwrap();
            state.t = rng.gen_range(1..=4);
            let totals = diagonal_totals(&state);
            let charged: Vec<u32> =
                totals.counts().iter().map(|&c| rng.gen_range(0..=c)).collect();
            let action = ActionVector::from_charged(charged);
            if !distinct_pairs.insert((state.clone(), action.clone())) {
                continue;
            }
            let key: Vec<u64> = encode(&state, &action).iter().map(|v| v.to_bits()).collect();
            if let Some((other_s, other_a)) = seen.insert(key, (state.clone(), action.clone())) {
                assert_eq!(
                    (other_s, other_a),
                    (state, action),
                    "two distinct pairs encoded identically"
                );
            }
        }
        assert!(distinct_pairs.len() > 1000);
    }

    #[test]
    fn collection_is_deterministic_and_horizon_bounded() {
        let cfg = small_cfg();
        let days = vec![two_car_day()];
        let a = collect_experience(&days, &cfg, 5, 17, 64).unwrap();
        let b = collect_experience(&days, &cfg, 5, 17, 64).unwrap();
        assert_eq!(a.tuples, b.tuples);
        assert_eq!(a.tuples.len(), 5 * cfg.s_max());
        for tuple in &a.tuples {
            assert!((tuple.cost - tuple.recomputed_cost()).abs() < 1e-12);
        }
        // Every trajectory ends in the empty terminal state.
        for chunk in a.tuples.chunks(cfg.s_max()) {
            let last = &chunk.last().unwrap().next;
            assert!(last.is_terminal() && last.is_empty());
        }
    }

    #[test]
    fn experience_round_trips_and_validates() {
        let cfg = small_cfg();
        let days = vec![two_car_day()];
        let set = collect_experience(&days, &cfg, 3, 7, 64).unwrap();
        let mut buf = Vec::new();
        set.save_jsonl(&mut buf).unwrap();
        let reloaded = ExperienceSet::load_jsonl(buf.as_slice()).unwrap();
        assert_eq!(reloaded.meta, set.meta);
        assert_eq!(reloaded.tuples, set.tuples);

        // Corrupt a cost: load must reject it.
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let tampered = lines[1].replace("\"cost\":", "\"cost\":9e9, \"_x\":");
        assert_ne!(tampered, lines[1]);
        lines[1] = tampered;
        let corrupted = lines.join("\n");
        match ExperienceSet::load_jsonl(corrupted.as_bytes()) {
            Err(Error::CorruptRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected corrupt record, got {other:?}"),
        }
    }

    #[test]
    fn empty_day_experience_yields_the_empty_action() {
        let cfg = small_cfg();
        let date = chrono::NaiveDate::from_ymd_opt(2015, 3, 2).unwrap();
        let days = vec![EpisodeDay {
            date,
            sessions: vec![],
        }];
        let experience = collect_experience(&days, &cfg, 2, 3, 64).unwrap();
        let policy = fitted_q_iteration(
            &experience,
            AnyRegressor::Exact(ExactTable::new()),
            cfg.s_max() as u32,
        )
        .unwrap();
        let empty = AggregateState::empty(&cfg, 2);
        assert_eq!(act(&policy, &empty), ActionVector::zeros(3));
        let terminal = AggregateState::empty(&cfg, 4);
        assert_eq!(act(&policy, &terminal), ActionVector::zeros(3));
    }

    #[test]
    fn policy_save_load_round_trips() {
        let cfg = small_cfg();
        let days = vec![two_car_day()];
        let experience = collect_experience(&days, &cfg, 20, 5, 64).unwrap();
        let policy = fitted_q_iteration(
            &experience,
            AnyRegressor::Exact(ExactTable::new()),
            cfg.s_max() as u32,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        policy.save(dir.path()).unwrap();
        let reloaded = Policy::load(dir.path()).unwrap();
        assert_eq!(reloaded.action_cap, policy.action_cap);
        assert_eq!(reloaded.seed, policy.seed);
        let sched = ArrivalSchedule::from_day(&two_car_day(), &cfg).unwrap();
        let s0 = sched.initial_state(&cfg).unwrap();
        assert_eq!(act(&policy, &s0), act(&reloaded, &s0));
    }
}
