//! Transition cost: quadratic demand charge plus a stranding penalty.

use crate::action::ActionVector;
use crate::state::AggregateState;

/// Penalty factor `M = 2 n_max + 1`.
///
/// Strictly above `2 n_max`, so that one stranded EV
/// (`M / n_max >= 2 + 1/n_max`) costs more than charging the whole fleet for
/// a slot (demand cost at most 1).
pub fn penalty_weight(n_max: u32) -> f64 {
    f64::from(2 * n_max + 1)
}

/// Demand cost of an action: the squared normalized count of charging EVs.
pub fn demand_cost(action: &ActionVector, n_max: u32) -> f64 {
    let fraction = f64::from(action.charged_total()) / f64::from(n_max);
    fraction * fraction
}

/// Penalty for EVs that became impossible to complete on this transition.
pub fn penalty_cost(next: &AggregateState) -> f64 {
    penalty_weight(next.n_max) * f64::from(next.stranded) / f64::from(next.n_max)
}

/// Instantaneous cost of the transition `(s, u, s')`.
pub fn cost_of(state: &AggregateState, action: &ActionVector, next: &AggregateState) -> f64 {
    debug_assert_eq!(state.n_max, next.n_max);
    demand_cost(action, state.n_max) + penalty_cost(next)
}

/// Exact integer numerator of a transition cost over the common
/// denominator `n_max^2`: `charged^2 + (2 n_max + 1) * stranded * n_max`.
///
/// Oracles accumulate these to compare costs without float rounding.
pub fn cost_numerator(charged_total: u32, stranded: u32, n_max: u32) -> u64 {
    let charged = u64::from(charged_total);
    charged * charged + u64::from(2 * n_max + 1) * u64::from(stranded) * u64::from(n_max)
}

/// Converts an accumulated integer numerator back to the Eq-scale cost.
pub fn cost_from_numerator(numerator: u64, n_max: u32) -> f64 {
    numerator as f64 / f64::from(n_max * n_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FleetConfig;
    use crate::dynamics::apply_action;
    use crate::state::{bin_sessions, EvDemand};

    fn small_cfg() -> FleetConfig {
        FleetConfig::new(2, 6 * 60, 2 * 60).unwrap()
    }

    #[test]
    fn charging_the_full_fleet_costs_one() {
        let cfg = small_cfg();
        let s = bin_sessions(&[EvDemand::new(3, 2), EvDemand::new(2, 1)], &cfg).unwrap();
        let u = ActionVector::from_charged(vec![0, 2, 0]);
        let next = apply_action(&s, &u, &[]).unwrap();
        assert_eq!(cost_of(&s, &u, &next), 1.0);
    }

    #[test]
    fn one_stranded_ev_outweighs_charging_everyone() {
        let cfg = small_cfg();
        let s = bin_sessions(&[EvDemand::new(1, 1), EvDemand::new(3, 1)], &cfg).unwrap();
        let u = ActionVector::zeros(3);
        let next = apply_action(&s, &u, &[]).unwrap();
        assert_eq!(next.stranded, 1);
        let cost = cost_of(&s, &u, &next);
        assert_eq!(cost, 2.5); // (2*2+1) * 1/2
        assert!(cost > 1.0);
    }

    #[test]
    fn idle_transition_without_stranding_is_free() {
        let cfg = small_cfg();
        let s = bin_sessions(&[EvDemand::new(3, 1)], &cfg).unwrap();
        let u = ActionVector::zeros(3);
        let next = apply_action(&s, &u, &[]).unwrap();
        assert_eq!(cost_of(&s, &u, &next), 0.0);
    }

    #[test]
    fn integer_numerator_matches_float_cost() {
        let n_max = 7;
        for charged in 0..=n_max {
            for stranded in 0..=2 {
                let num = cost_numerator(charged, stranded, n_max);
                let direct = (f64::from(charged) / f64::from(n_max)).powi(2)
                    + penalty_weight(n_max) * f64::from(stranded) / f64::from(n_max);
                assert!((cost_from_numerator(num, n_max) - direct).abs() < 1e-12);
            }
        }
    }
}
