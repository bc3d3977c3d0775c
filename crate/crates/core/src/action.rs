//! Charging actions over the aggregate state.
//!
//! An action decides, for every flexibility class `d` (diagonal of the state
//! matrix), how many of its EVs charge at full power this slot. Internally an
//! action stores whole-EV counts; the fractional view `u(d) = charged(d) /
//! total(d)` is derived, which keeps "a whole number of EVs per class" exact.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::state::DiagonalTotals;

/// Count of EVs to charge in each flexibility class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionVector {
    charged: Vec<u32>,
}

impl ActionVector {
    pub fn from_charged(charged: Vec<u32>) -> Self {
        Self { charged }
    }

    /// Charge nothing.
    pub fn zeros(s_max: usize) -> Self {
        Self {
            charged: vec![0; s_max],
        }
    }

    /// Charge every connected feasible EV.
    pub fn all_ones(totals: &DiagonalTotals) -> Self {
        Self {
            charged: totals.counts().to_vec(),
        }
    }

    /// Charge exactly the EVs that would otherwise strand (flexibility 0).
    pub fn minimal_safe(totals: &DiagonalTotals) -> Self {
        let mut charged = vec![0; totals.s_max()];
        charged[0] = totals.count(0);
        Self { charged }
    }

    pub fn charged(&self) -> &[u32] {
        &self.charged
    }

    pub fn charged_in(&self, d: usize) -> u32 {
        self.charged[d]
    }

    pub fn charged_total(&self) -> u32 {
        self.charged.iter().sum()
    }

    pub fn s_max(&self) -> usize {
        self.charged.len()
    }

    /// Fraction of each class being charged (0 for empty classes).
    pub fn fractions(&self, totals: &DiagonalTotals) -> Vec<f64> {
        self.charged
            .iter()
            .zip(totals.counts())
            .map(|(&c, &n)| if n == 0 { 0.0 } else { f64::from(c) / f64::from(n) })
            .collect()
    }

    /// Whether every per-class count is within the state's totals.
    pub fn is_valid_for(&self, totals: &DiagonalTotals) -> bool {
        self.charged.len() == totals.s_max()
            && self.charged.iter().zip(totals.counts()).all(|(&c, &n)| c <= n)
    }
}

/// Size of the action set, saturating on overflow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCount {
    pub count: u128,
    pub saturated: bool,
}

impl ActionCount {
    pub fn exact(&self) -> Option<u128> {
        (!self.saturated).then_some(self.count)
    }
}

/// Number of possible actions: the product over classes of `total(d) + 1`.
pub fn count_actions(totals: &DiagonalTotals) -> ActionCount {
    let mut count: u128 = 1;
    let mut saturated = false;
    for &n in totals.counts() {
        match count.checked_mul(u128::from(n) + 1) {
            Some(c) => count = c,
            None => {
                count = u128::MAX;
                saturated = true;
                break;
            }
        }
    }
    ActionCount { count, saturated }
}

/// Enumerates the action set for a state.
///
/// When the exact count fits under `cap` the full set is returned in
/// lexicographic order. Otherwise `cap` distinct vectors are drawn (uniformly
/// and independently per class, without replacement of whole vectors),
/// deterministically from `seed`; the charge-everything action and the
/// minimal stranding-free action are always included.
pub fn enumerate_actions(totals: &DiagonalTotals, cap: usize, seed: u64) -> Vec<ActionVector> {
    let cap = cap.max(1);
    let count = count_actions(totals);
    match count.exact() {
        Some(c) if c <= cap as u128 => enumerate_all(totals),
        _ => sample_actions(totals, cap, seed),
    }
}

fn enumerate_all(totals: &DiagonalTotals) -> Vec<ActionVector> {
    let s_max = totals.s_max();
    let mut out = Vec::new();
    let mut digits = vec![0u32; s_max];
    loop {
        out.push(ActionVector::from_charged(digits.clone()));
        // Odometer increment with the last class varying fastest, so the
        // output is in ascending lexicographic order.
        let mut pos = s_max;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if digits[pos] < totals.count(pos) {
                digits[pos] += 1;
                for d in digits.iter_mut().skip(pos + 1) {
                    *d = 0;
                }
                break;
            }
        }
    }
}

fn sample_actions(totals: &DiagonalTotals, cap: usize, seed: u64) -> Vec<ActionVector> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut seen: HashSet<Vec<u32>> = HashSet::with_capacity(cap);
    let mut out: Vec<ActionVector> = Vec::with_capacity(cap);

    for forced in [ActionVector::all_ones(totals), ActionVector::minimal_safe(totals)] {
        if seen.insert(forced.charged().to_vec()) {
            out.push(forced);
        }
    }

    // The action space here is at least cap + 1 vectors, so rejection
    // sampling terminates quickly; the attempt bound is a safety net.
    let mut attempts: u64 = 0;
    let max_attempts = (cap as u64) * 1000 + 1000;
    while out.len() < cap && attempts < max_attempts {
        attempts += 1;
        let charged: Vec<u32> = totals
            .counts()
            .iter()
            .map(|&n| rng.gen_range(0..=n))
            .collect();
        if seen.insert(charged.clone()) {
            out.push(ActionVector::from_charged(charged));
        }
    }
    out
}
