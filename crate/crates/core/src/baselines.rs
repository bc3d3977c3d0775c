//! Reference policies: business-as-usual charging, the perfect-foresight
//! offline optimum, and an exact dynamic-programming oracle for tiny
//! instances.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::action::{count_actions, enumerate_actions, ActionVector};
use crate::config::FleetConfig;
use crate::cost::{cost_from_numerator, cost_numerator};
use crate::dynamics::apply_action;
use crate::episode::{rollout, ArrivalSchedule, Trajectory};
use crate::error::{Error, Result};
use crate::flow::MinCostFlow;
use crate::session::EpisodeDay;
use crate::state::{diagonal_totals, AggregateState};

/// Business-as-usual: every connected, uncompleted EV charges at full power
/// from the moment it arrives. Never strands a feasible session.
pub fn bau_rollout(day: &EpisodeDay, cfg: &FleetConfig) -> Result<Trajectory> {
    let schedule = ArrivalSchedule::from_day(day, cfg)?;
    rollout(&schedule, cfg, |_, totals| ActionVector::all_ones(totals))
}

/// A perfect-foresight charging plan and its cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineSchedule {
    /// Charged EV count per decision slot.
    pub slot_loads: Vec<u32>,
    /// Sum of squared normalized loads, on the same scale as rollout costs.
    pub cost: f64,
    /// Exact integer numerator of `cost` over `n_max^2`.
    pub cost_numerator: u64,
}

impl OfflineSchedule {
    /// `slot,charged_count` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slot,charged_count\n");
        for (slot, load) in self.slot_loads.iter().enumerate() {
            out.push_str(&format!("{},{load}\n", slot + 1));
        }
        out
    }
}

/// Minimizes the sum of squared per-slot loads given full knowledge of the
/// day's sessions, subject to each EV charging a whole slot at a time within
/// its connection window and finishing exactly its demand.
///
/// Solved as a convex-cost integer flow: each slot absorbs load through
/// parallel unit edges with marginal costs 1, 3, 5, ..., so filling
/// cheapest-first yields exactly `load^2` per slot. Integral by construction
/// and exact for this separable convex objective.
pub fn offline_optimum(day: &EpisodeDay, cfg: &FleetConfig) -> Result<OfflineSchedule> {
    let schedule = ArrivalSchedule::from_day(day, cfg)?;
    let s_max = cfg.s_max();

    struct Car {
        first_slot: usize,
        last_slot: usize,
        charge: u32,
    }
    let mut cars = Vec::new();
    for t in 1..=s_max as u32 {
        for ev in schedule.arrivals_in(t) {
            cars.push(Car {
                first_slot: t as usize,
                last_slot: (t + ev.depart_slots - 1) as usize,
                charge: ev.charge_slots,
            });
        }
    }
    let total_charge: u32 = cars.iter().map(|c| c.charge).sum();

    let source = 0;
    let sink = 1;
    let car_base = 2;
    let slot_base = car_base + cars.len();
    let mut net = MinCostFlow::new(slot_base + s_max);
    for (idx, car) in cars.iter().enumerate() {
        net.add_edge(source, car_base + idx, car.charge, 0);
        for slot in car.first_slot..=car.last_slot {
            net.add_edge(car_base + idx, slot_base + slot - 1, 1, 0);
        }
    }
    let mut sink_edges: Vec<Vec<usize>> = Vec::with_capacity(s_max);
    for slot in 0..s_max {
        let mut edges = Vec::with_capacity(cfg.n_max as usize);
        for k in 1..=cfg.n_max {
            edges.push(net.add_edge(slot_base + slot, sink, 1, i64::from(2 * k - 1)));
        }
        sink_edges.push(edges);
    }

    let (flow, cost) = net.solve(source, sink);
    if flow < total_charge {
        return Err(Error::InvalidArgument(
            "day is infeasible: not every charging demand fits before departure".into(),
        ));
    }

    let slot_loads: Vec<u32> = sink_edges
        .iter()
        .map(|edges| edges.iter().map(|&e| net.flow_on(e)).sum())
        .collect();
    let numerator: u64 = slot_loads.iter().map(|&l| u64::from(l) * u64::from(l)).sum();
    debug_assert_eq!(numerator as i64, cost);
    let _ = cost;
    Ok(OfflineSchedule {
        cost: cost_from_numerator(numerator, cfg.n_max),
        cost_numerator: numerator,
        slot_loads,
    })
}

/// Result of exhaustive backward induction over a day's decision tree.
#[derive(Clone, Debug, PartialEq)]
pub struct DpSolution {
    /// Minimal total cost from the first slot to the terminal state.
    pub return_cost: f64,
    /// Exact integer numerator of `return_cost` over `n_max^2`.
    pub return_numerator: u64,
    /// An optimal action at the initial state (lexicographically smallest
    /// among ties).
    pub first_action: ActionVector,
    /// State-action edges expanded, for budget reporting.
    pub expansions: u64,
}

struct DpContext<'a> {
    schedule: &'a ArrivalSchedule,
    n_max: u32,
    memo: HashMap<(u32, Vec<u32>), u64>,
    expansions: u64,
    max_nodes: u64,
}

impl DpContext<'_> {
    /// Minimal integer cost-to-go from `state`.
    fn value(&mut self, state: &AggregateState) -> Result<u64> {
        if state.is_terminal() {
            return Ok(0);
        }
        let key = (state.t, state.counts().to_vec());
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let totals = diagonal_totals(state);
        let n_actions = count_actions(&totals);
        let budget_left = self.max_nodes - self.expansions;
        if n_actions.saturated || n_actions.count > u128::from(budget_left) {
            return Err(Error::NodeBudget {
                limit: self.max_nodes,
            });
        }
        let mut best = u64::MAX;
        for action in enumerate_actions(&totals, usize::MAX, 0) {
            self.expansions += 1;
            let next = apply_action(state, &action, self.schedule.arrivals_in(state.t + 1))?;
            let cost = cost_numerator(action.charged_total(), next.stranded, self.n_max);
            let total = cost + self.value(&next)?;
            best = best.min(total);
        }
        self.memo.insert(key, best);
        Ok(best)
    }
}

/// Exact backward induction over the aggregate-MDP decision tree; refuses
/// (rather than thrashes) once `max_nodes` state-action expansions are spent.
pub fn dp_oracle(day: &EpisodeDay, cfg: &FleetConfig, max_nodes: u64) -> Result<DpSolution> {
    let schedule = ArrivalSchedule::from_day(day, cfg)?;
    let mut ctx = DpContext {
        schedule: &schedule,
        n_max: cfg.n_max,
        memo: HashMap::new(),
        expansions: 0,
        max_nodes,
    };

    let initial = schedule.initial_state(cfg)?;
    let totals = diagonal_totals(&initial);
    let n_actions = count_actions(&totals);
    if n_actions.saturated || n_actions.count > u128::from(max_nodes) {
        return Err(Error::NodeBudget { limit: max_nodes });
    }

    let mut best: Option<(u64, ActionVector)> = None;
    for action in enumerate_actions(&totals, usize::MAX, 0) {
        ctx.expansions += 1;
        let next = apply_action(&initial, &action, schedule.arrivals_in(initial.t + 1))?;
        let cost = cost_numerator(action.charged_total(), next.stranded, cfg.n_max);
        let total = cost + ctx.value(&next)?;
        // Enumeration is lexicographic, so strict improvement keeps the
        // lexicographically smallest optimal action.
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, action));
        }
    }
    let (numerator, first_action) = best.expect("at least the all-zero action exists");
    Ok(DpSolution {
        return_cost: cost_from_numerator(numerator, cfg.n_max),
        return_numerator: numerator,
        first_action,
        expansions: ctx.expansions,
    })
}
