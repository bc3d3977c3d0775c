//! Deterministic state transition given an action and the slot's arrivals.
//!
//! Per slot, a charged EV moves diagonally down-left (one slot less to charge,
//! one slot closer to departure); an uncharged EV moves left (closer to
//! departure only). EVs that finish charging or depart leave the matrix. An
//! EV with zero flexibility that is not charged can no longer complete: it is
//! tallied as stranded on the resulting state and, if still connected, keeps
//! drifting through the lower diagonals until departure.

use crate::action::ActionVector;
use crate::error::{Error, Result};
use crate::state::{AggregateState, DiagonalTotals, EvDemand};

/// Which EVs of a class are charged first: the ones closest to departure.
/// Within a flexibility class this is also fewest-remaining-charge first.
pub const INTRA_DIAGONAL_RULE: &str = "earliest-deadline-first";

/// Applies `action` to `state`, bins in `arrivals`, and advances the clock.
pub fn apply_action(
    state: &AggregateState,
    action: &ActionVector,
    arrivals: &[EvDemand],
) -> Result<AggregateState> {
    if state.is_terminal() {
        return Err(Error::InvalidArgument(
            "cannot act in the terminal state".into(),
        ));
    }
    let s_max = state.s_max() as u32;
    if action.s_max() != s_max as usize {
        return Err(Error::InvalidArgument(format!(
            "action has {} classes, state has {s_max}",
            action.s_max()
        )));
    }

    let mut next = AggregateState::empty_like(state);

    // Feasible diagonals: charge the requested number per class,
    // earliest deadline first.
    for d in 0..s_max {
        let mut remaining = action.charged_in(d as usize);
        for i in 1..=(s_max - d) {
            let j = i + d;
            let here = state.count(i, j);
            let take = remaining.min(here);
            remaining -= take;

            // Charged EVs: completed at i = 1, otherwise one step down-left.
            if take > 0 && i > 1 {
                *next.cell_mut(i - 1, j - 1) += take;
            }
            // Uncharged EVs: departed at j = 1, otherwise one step left.
            let idle = here - take;
            if idle > 0 && j > 1 {
                *next.cell_mut(i, j - 1) += idle;
            }
        }
        if remaining > 0 {
            return Err(Error::InvalidArgument(format!(
                "action charges more EVs than class {d} holds"
            )));
        }
    }

    // Every zero-flexibility EV left uncharged crossed into infeasibility on
    // this transition, whether it stays connected or departs right away.
    let diag0: u32 = (1..=s_max).map(|i| state.count(i, i)).sum();
    let newly_stranded = diag0 - action.charged_in(0);

    // Already-infeasible EVs below the main diagonal cannot be charged; they
    // only drift toward departure.
    for i in 2..=s_max {
        for j in 1..i {
            let here = state.count(i, j);
            if here > 0 && j > 1 {
                *next.cell_mut(i, j - 1) += here;
            }
        }
    }

    for ev in arrivals {
        next.bin_in(ev)?;
    }
    let connected = next.total_connected();
    if connected > state.n_max {
        return Err(Error::Capacity {
            connected,
            n_max: state.n_max,
        });
    }

    next.t = state.t + 1;
    next.stranded = newly_stranded;
    Ok(next)
}

impl AggregateState {
    fn empty_like(other: &AggregateState) -> AggregateState {
        AggregateState::from_parts(
            other.t,
            other.n_max,
            other.s_max() as u32,
            0,
            vec![0; other.counts().len()],
        )
    }

    fn cell_mut(&mut self, charge_slots: u32, depart_slots: u32) -> &mut u32 {
        let cell = self.cell(charge_slots, depart_slots);
        &mut self.counts_mut()[cell]
    }
}

/// Action validity check shared by rollouts and experience replay.
pub fn validate_action(action: &ActionVector, totals: &DiagonalTotals) -> Result<()> {
    if !action.is_valid_for(totals) {
        return Err(Error::InvalidArgument(
            "action charges more EVs than its state holds".into(),
        ));
    }
    Ok(())
}
