//! Aggregate state representation.
//!
//! Connected EVs are binned into an `s_max x s_max` matrix by their remaining
//! demand: row `i` = slots of charging still needed, column `j` = slots left
//! until departure (both 1-based). An EV's flexibility is the diagonal index
//! `d = j - i`; cells with `j >= i` hold feasible EVs, cells below the main
//! diagonal hold EVs whose demand can no longer be met. Entries are stored as
//! raw EV counts and normalized by `n_max` on read, which keeps the
//! representation independent of the fleet size.

use serde::{Deserialize, Serialize};

use crate::config::FleetConfig;
use crate::error::{Error, Result};
use crate::seeds;

/// Remaining demand of one connected EV, in whole slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvDemand {
    pub depart_slots: u32,
    pub charge_slots: u32,
}

impl EvDemand {
    pub fn new(depart_slots: u32, charge_slots: u32) -> Self {
        Self {
            depart_slots,
            charge_slots,
        }
    }

    /// Slots by which charging can still be delayed (negative once infeasible).
    pub fn flexibility(&self) -> i64 {
        i64::from(self.depart_slots) - i64::from(self.charge_slots)
    }
}

/// MDP state: timeslot plus the aggregate demand matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggregateState {
    /// Timeslot, `1..=s_max + 1`; `s_max + 1` is the terminal slot.
    pub t: u32,
    /// Fleet size the matrix is normalized by.
    pub n_max: u32,
    /// EVs that became infeasible on the transition into this state.
    pub stranded: u32,
    s_max: u32,
    /// Row-major counts; row = charge slots - 1, column = depart slots - 1.
    counts: Vec<u32>,
}

impl AggregateState {
    /// Empty matrix at timeslot `t`.
    pub fn empty(cfg: &FleetConfig, t: u32) -> Self {
        let s_max = cfg.s_max() as u32;
        Self {
            t,
            n_max: cfg.n_max,
            stranded: 0,
            s_max,
            counts: vec![0; (s_max * s_max) as usize],
        }
    }

    pub(crate) fn from_parts(t: u32, n_max: u32, s_max: u32, stranded: u32, counts: Vec<u32>) -> Self {
        debug_assert_eq!(counts.len(), (s_max * s_max) as usize);
        Self {
            t,
            n_max,
            stranded,
            s_max,
            counts,
        }
    }

    pub fn s_max(&self) -> usize {
        self.s_max as usize
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub(crate) fn counts_mut(&mut self) -> &mut [u32] {
        &mut self.counts
    }

    /// EV count in the cell for `charge_slots` remaining charge and
    /// `depart_slots` remaining connection time (both 1-based).
    pub fn count(&self, charge_slots: u32, depart_slots: u32) -> u32 {
        self.counts[self.cell(charge_slots, depart_slots)]
    }

    pub(crate) fn cell(&self, charge_slots: u32, depart_slots: u32) -> usize {
        debug_assert!((1..=self.s_max).contains(&charge_slots));
        debug_assert!((1..=self.s_max).contains(&depart_slots));
        ((charge_slots - 1) * self.s_max + (depart_slots - 1)) as usize
    }

    /// Normalized entry, an integer multiple of `1 / n_max`.
    pub fn normalized(&self, charge_slots: u32, depart_slots: u32) -> f64 {
        f64::from(self.count(charge_slots, depart_slots)) / f64::from(self.n_max)
    }

    pub fn total_connected(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Past the last decision slot; no further action is possible.
    pub fn is_terminal(&self) -> bool {
        self.t > self.s_max
    }

    /// Stable fingerprint of `(t, x)`, ignoring the stranded tally (which has
    /// no effect on future dynamics or costs).
    pub fn fingerprint(&self) -> u64 {
        seeds::fingerprint(
            [u64::from(self.t), u64::from(self.n_max)]
                .into_iter()
                .chain(self.counts.iter().map(|&c| u64::from(c))),
        )
    }

    pub(crate) fn bin_in(&mut self, ev: &EvDemand) -> Result<()> {
        let s_max = self.s_max;
        if ev.charge_slots < 1 || ev.depart_slots < 1 || ev.depart_slots > s_max {
            return Err(Error::InvalidArgument(format!(
                "EV demand ({}, {}) is outside the {s_max}-slot grid",
                ev.depart_slots, ev.charge_slots
            )));
        }
        if ev.charge_slots > ev.depart_slots {
            return Err(Error::InfeasibleSession {
                charge_slots: ev.charge_slots,
                depart_slots: ev.depart_slots,
            });
        }
        let cell = self.cell(ev.charge_slots, ev.depart_slots);
        self.counts[cell] += 1;
        Ok(())
    }
}

/// Summed EV counts per feasible diagonal: `counts[d]` is the number of
/// connected EVs with flexibility `d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalTotals {
    counts: Vec<u32>,
    n_max: u32,
}

impl DiagonalTotals {
    pub fn from_counts(counts: Vec<u32>, n_max: u32) -> Self {
        Self { counts, n_max }
    }

    pub fn s_max(&self) -> usize {
        self.counts.len()
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// EV count on the `d`-th feasible diagonal.
    pub fn count(&self, d: usize) -> u32 {
        self.counts[d]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Normalized total, `count(d) / n_max`.
    pub fn normalized(&self, d: usize) -> f64 {
        f64::from(self.counts[d]) / f64::from(self.n_max)
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }
}

/// Bins connected EVs into the aggregate matrix at timeslot 1.
pub fn bin_sessions(connected: &[EvDemand], cfg: &FleetConfig) -> Result<AggregateState> {
    bin_sessions_at(connected, cfg, 1)
}

/// Bins connected EVs into the aggregate matrix at an arbitrary timeslot.
pub fn bin_sessions_at(connected: &[EvDemand], cfg: &FleetConfig, t: u32) -> Result<AggregateState> {
    if connected.len() > cfg.n_max as usize {
        return Err(Error::Capacity {
            connected: connected.len() as u32,
            n_max: cfg.n_max,
        });
    }
    let mut state = AggregateState::empty(cfg, t);
    for ev in connected {
        state.bin_in(ev)?;
    }
    Ok(state)
}

/// Sums each feasible diagonal of the state matrix.
pub fn diagonal_totals(state: &AggregateState) -> DiagonalTotals {
    let s_max = state.s_max();
    let mut totals = vec![0u32; s_max];
    for (d, total) in totals.iter_mut().enumerate() {
        for i in 1..=(s_max - d) as u32 {
            *total += state.count(i, i + d as u32);
        }
    }
    DiagonalTotals::from_counts(totals, state.n_max)
}
