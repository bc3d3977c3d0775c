//! Episode rollout machinery shared by experience collection, baselines, and
//! policy evaluation.

use serde::{Deserialize, Serialize};

use crate::action::ActionVector;
use crate::config::FleetConfig;
use crate::cost::cost_of;
use crate::dynamics::{apply_action, validate_action};
use crate::error::{Error, Result};
use crate::session::EpisodeDay;
use crate::state::{bin_sessions_at, diagonal_totals, AggregateState, DiagonalTotals, EvDemand};

/// Per-slot arrival lists for one episodic day.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrivalSchedule {
    /// `arrivals[k]` holds the demands of EVs arriving in slot `k + 1`.
    arrivals: Vec<Vec<EvDemand>>,
    pub n_max: u32,
}

impl ArrivalSchedule {
    pub fn from_day(day: &EpisodeDay, cfg: &FleetConfig) -> Result<Self> {
        let s_max = cfg.s_max();
        let mut arrivals = vec![Vec::new(); s_max];
        for session in &day.sessions {
            let slot = day.slot_of(session.arrival, cfg).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "session at {} is outside its episode window",
                    session.arrival
                ))
            })?;
            let slot_start = day.episode_start()
                + chrono::Duration::minutes(i64::from((slot - 1) * cfg.slot_min));
            let depart_minutes = (session.departure - slot_start).num_minutes();
            if depart_minutes <= 0 {
                return Err(Error::InvalidArgument(format!(
                    "session at {} departs before its arrival slot ends",
                    session.arrival
                )));
            }
            let depart_slots = (depart_minutes as u32).div_ceil(cfg.slot_min);
            if depart_slots as usize > s_max - (slot as usize - 1) {
                return Err(Error::InvalidArgument(format!(
                    "session at {} overruns the episode; run episodize first",
                    session.arrival
                )));
            }
            if session.charge_slots > depart_slots {
                return Err(Error::InfeasibleSession {
                    charge_slots: session.charge_slots,
                    depart_slots,
                });
            }
            arrivals[(slot - 1) as usize].push(EvDemand::new(depart_slots, session.charge_slots));
        }
        Ok(Self {
            arrivals,
            n_max: cfg.n_max,
        })
    }

    /// Builds a schedule directly from per-slot demands (mostly for tests).
    pub fn from_slots(arrivals: Vec<Vec<EvDemand>>, n_max: u32) -> Self {
        Self { arrivals, n_max }
    }

    pub fn s_max(&self) -> usize {
        self.arrivals.len()
    }

    /// Demands arriving in 1-based slot `t` (empty past the horizon).
    pub fn arrivals_in(&self, t: u32) -> &[EvDemand] {
        self.arrivals
            .get((t - 1) as usize)
            .map_or(&[], Vec::as_slice)
    }

    pub fn total_sessions(&self) -> usize {
        self.arrivals.iter().map(Vec::len).sum()
    }

    /// State at the first decision slot: the slot-1 arrivals, binned.
    pub fn initial_state(&self, cfg: &FleetConfig) -> Result<AggregateState> {
        bin_sessions_at(self.arrivals_in(1), cfg, 1)
    }
}

/// One experience tuple `(s, u, s', cost)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: AggregateState,
    pub action: ActionVector,
    pub next: AggregateState,
    pub cost: f64,
}

impl Transition {
    /// Recomputes the cost from the triple; must match `self.cost`.
    pub fn recomputed_cost(&self) -> f64 {
        cost_of(&self.state, &self.action, &self.next)
    }
}

/// A full episode: `s_max` transitions from the first slot to the terminal
/// empty state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn total_cost(&self) -> f64 {
        self.transitions.iter().map(|t| t.cost).sum()
    }

    pub fn stranded_total(&self) -> u32 {
        self.transitions.iter().map(|t| t.next.stranded).sum()
    }

    /// Charged EV count per slot.
    pub fn slot_loads(&self) -> Vec<u32> {
        self.transitions
            .iter()
            .map(|t| t.action.charged_total())
            .collect()
    }
}

/// Rolls an episode from its initial state to the terminal state, asking
/// `choose` for the action at every decision slot.
pub fn rollout<F>(schedule: &ArrivalSchedule, cfg: &FleetConfig, mut choose: F) -> Result<Trajectory>
where
    F: FnMut(&AggregateState, &DiagonalTotals) -> ActionVector,
{
    let s_max = cfg.s_max() as u32;
    let mut state = schedule.initial_state(cfg)?;
    let mut transitions = Vec::with_capacity(s_max as usize);
    for t in 1..=s_max {
        debug_assert_eq!(state.t, t);
        let totals = diagonal_totals(&state);
        let action = choose(&state, &totals);
        validate_action(&action, &totals)?;
        let next = apply_action(&state, &action, schedule.arrivals_in(t + 1))?;
        let cost = cost_of(&state, &action, &next);
        transitions.push(Transition {
            state,
            action,
            next: next.clone(),
            cost,
        });
        state = next;
    }
    debug_assert!(state.is_terminal());
    debug_assert!(state.is_empty(), "episodized days must end empty");
    Ok(Trajectory { transitions })
}
