//! Test support: an independent per-EV simulator used as the correctness
//! oracle for the aggregate dynamics, fuzz-day generators, and an exhaustive
//! experience builder for tiny instances.
//!
//! Enabled by the `testkit` feature; not part of the regular API.

use chrono::{Duration, NaiveDate};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use crate::action::ActionVector;
use crate::config::{FleetConfig, EPISODE_START_HOUR};
use crate::cost::cost_of;
use crate::dynamics::apply_action;
use crate::episode::{ArrivalSchedule, Transition};
use crate::error::Result;
use crate::fqi::{candidate_actions, ExperienceMeta, ExperienceSet};
use crate::session::{EpisodeDay, Session};
use crate::state::{diagonal_totals, AggregateState, EvDemand};

/// One car in the reference model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefEv {
    pub charge_left: u32,
    pub depart_left: u32,
}

/// Straightforward per-EV simulation of the same charging rules, kept
/// deliberately separate from the aggregate-matrix implementation: per
/// flexibility class it charges the requested number of cars earliest
/// deadline first, then ages every car individually.
#[derive(Clone, Debug)]
pub struct RefSimulator {
    pub evs: Vec<RefEv>,
    pub t: u32,
    /// Cars that crossed into infeasibility on the last step.
    pub stranded_last: u32,
    /// Cars that finished charging on the last step.
    pub completed_last: u32,
    /// Cars whose connection time ran out on the last step.
    pub departed_last: u32,
    s_max: u32,
    n_max: u32,
}

impl RefSimulator {
    pub fn new(cfg: &FleetConfig, initial: &[EvDemand]) -> Self {
        let mut sim = Self {
            evs: Vec::new(),
            t: 1,
            stranded_last: 0,
            completed_last: 0,
            departed_last: 0,
            s_max: cfg.s_max() as u32,
            n_max: cfg.n_max,
        };
        sim.admit(initial);
        sim
    }

    fn admit(&mut self, arrivals: &[EvDemand]) {
        for ev in arrivals {
            self.evs.push(RefEv {
                charge_left: ev.charge_slots,
                depart_left: ev.depart_slots,
            });
        }
    }

    /// Advances one slot under `action`, then admits `arrivals`.
    pub fn step(&mut self, action: &ActionVector, arrivals: &[EvDemand]) {
        let mut stranded = 0u32;
        // Pick the charged cars: per feasible class, earliest deadline first.
        let mut charge_flags = vec![false; self.evs.len()];
        for d in 0..self.s_max {
            let mut members: Vec<usize> = (0..self.evs.len())
                .filter(|&i| {
                    let ev = self.evs[i];
                    ev.depart_left >= ev.charge_left && ev.depart_left - ev.charge_left == d
                })
                .collect();
            members.sort_by_key(|&i| self.evs[i].depart_left);
            for &i in members.iter().take(action.charged_in(d as usize) as usize) {
                charge_flags[i] = true;
            }
        }

        let mut completed = 0u32;
        let mut departed = 0u32;
        let mut survivors = Vec::with_capacity(self.evs.len());
        for (i, ev) in self.evs.iter().enumerate() {
            let zero_flex = ev.depart_left == ev.charge_left;
            let mut ev = *ev;
            if charge_flags[i] {
                ev.charge_left -= 1;
                ev.depart_left -= 1;
            } else {
                ev.depart_left -= 1;
                if zero_flex {
                    stranded += 1;
                }
            }
            if ev.charge_left == 0 {
                completed += 1;
            } else if ev.depart_left == 0 {
                departed += 1;
            } else {
                survivors.push(ev);
            }
        }
        self.evs = survivors;
        self.admit(arrivals);
        self.t += 1;
        self.stranded_last = stranded;
        self.completed_last = completed;
        self.departed_last = departed;
    }

    /// Bins the current cars into an aggregate state, independently of
    /// `bin_sessions`.
    pub fn aggregate(&self) -> AggregateState {
        let s = self.s_max as usize;
        let mut counts = vec![0u32; s * s];
        for ev in &self.evs {
            counts[(ev.charge_left as usize - 1) * s + (ev.depart_left as usize - 1)] += 1;
        }
        AggregateState::from_parts(self.t, self.n_max, self.s_max, self.stranded_last, counts)
    }

    pub fn connected(&self) -> u32 {
        self.evs.len() as u32
    }
}

/// Bounds for fuzzed day generation.
#[derive(Clone, Copy, Debug)]
pub struct FuzzDayParams {
    pub max_sessions: u32,
    /// Cap charge demands at `n_max + 1` slots, the regime in which the
    /// stranding penalty provably dominates any demand saving (so optimal
    /// play never strands and the DP and flow oracles must agree).
    pub charge_envelope: bool,
}

impl Default for FuzzDayParams {
    fn default() -> Self {
        Self {
            max_sessions: 8,
            charge_envelope: true,
        }
    }
}

/// A random feasible episodic day: capacity-respecting arrivals with
/// charge <= depart, departures inside the window.
pub fn fuzz_day(rng: &mut ChaCha12Rng, cfg: &FleetConfig, params: &FuzzDayParams) -> EpisodeDay {
    let s_max = cfg.s_max() as u32;
    let date = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()
        + Duration::days(rng.gen_range(0..365));
    let start = date.and_hms_opt(EPISODE_START_HOUR, 0, 0).unwrap();

    let n_sessions = rng.gen_range(0..=params.max_sessions);
    let mut free_from = vec![1u32; cfg.n_max as usize];
    let mut drafts: Vec<(u32, u32, u32)> = (0..n_sessions)
        .map(|_| {
            let slot = rng.gen_range(1..=s_max);
            let stay = rng.gen_range(1..=s_max - slot + 1);
            let charge_cap = if params.charge_envelope {
                stay.min(cfg.n_max + 1)
            } else {
                stay
            };
            (slot, stay, rng.gen_range(1..=charge_cap))
        })
        .collect();
    drafts.sort();

    let mut sessions = Vec::new();
    for (slot, stay, charge) in drafts {
        let Some(station) = free_from.iter().position(|&f| f <= slot) else {
            continue;
        };
        free_from[station] = slot + stay;
        sessions.push(Session {
            station_id: format!("fuzz-{station:02}"),
            arrival: start + Duration::minutes(i64::from((slot - 1) * cfg.slot_min)),
            departure: start + Duration::minutes(i64::from((slot + stay - 1) * cfg.slot_min)),
            charge_slots: charge,
        });
    }
    EpisodeDay { date, sessions }
}

/// Every reachable `(s, u, s', cost)` tuple of a deterministic day, found by
/// walking the full decision tree. Only sensible for tiny instances.
pub fn exhaustive_experience(day: &EpisodeDay, cfg: &FleetConfig, action_cap: usize, seed: u64) -> Result<ExperienceSet> {
    let schedule = ArrivalSchedule::from_day(day, cfg)?;
    let mut tuples = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![schedule.initial_state(cfg)?];
    while let Some(state) = stack.pop() {
        if state.is_terminal() {
            continue;
        }
        if !seen.insert((state.t, state.counts().to_vec())) {
            continue;
        }
        let totals = diagonal_totals(&state);
        for action in candidate_actions(&state, &totals, action_cap, seed) {
            let next = apply_action(&state, &action, schedule.arrivals_in(state.t + 1))?;
            let cost = cost_of(&state, &action, &next);
            stack.push(next.clone());
            tuples.push(Transition {
                state: state.clone(),
                action,
                next,
                cost,
            });
        }
    }
    Ok(ExperienceSet {
        meta: ExperienceMeta {
            version: 1,
            seed,
            source: format!("exhaustive tree of {}", day.date),
            trajectories_per_day: 0,
            action_cap,
            n_max: cfg.n_max,
            s_max: cfg.s_max() as u32,
            skipped_days: 0,
        },
        tuples,
    })
}

/// Builds an `EpisodeDay` from per-slot `(slot, depart_slots, charge_slots)`
/// triples, the inverse of schedule extraction.
pub fn day_from_slots(cfg: &FleetConfig, date: NaiveDate, arrivals: &[(u32, u32, u32)]) -> EpisodeDay {
    let start = date.and_hms_opt(EPISODE_START_HOUR, 0, 0).unwrap();
    let sessions = arrivals
        .iter()
        .enumerate()
        .map(|(i, &(slot, depart, charge))| Session {
            station_id: format!("S{i:02}"),
            arrival: start + Duration::minutes(i64::from((slot - 1) * cfg.slot_min)),
            departure: start + Duration::minutes(i64::from((slot + depart - 1) * cfg.slot_min)),
            charge_slots: charge,
        })
        .collect();
    EpisodeDay { date, sessions }
}
