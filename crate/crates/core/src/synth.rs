//! Seeded synthetic session generator.
//!
//! Stands in for proprietary transaction logs: arrivals follow a two-peak
//! (commuter-style) slot distribution, stays and charge demands are drawn so
//! every request is feasible, and at most `n_max` sessions are connected at
//! once. Identical seeds produce identical days.

use chrono::{Duration, NaiveDate};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::config::FleetConfig;
use crate::error::{Error, Result};
use crate::seeds::mix_seed;
use crate::session::{EpisodeDay, Session};

/// Parameters of the synthetic arrival process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProfile {
    /// Probability of an arrival falling in each decision slot; must sum to 1.
    pub slot_weights: Vec<f64>,
    /// Mean number of sessions per day (Poisson).
    pub mean_sessions_per_day: f64,
    /// Shortest connection, in slots.
    pub min_stay_slots: u32,
    /// Longest connection, in slots (clipped to the episode end per arrival).
    pub max_stay_slots: u32,
    /// Upper bound on charge demand, in slots (clipped to the stay).
    pub max_charge_slots: u32,
}

impl ArrivalProfile {
    /// Morning-heavy two-peak profile sized for `cfg`'s slot grid.
    pub fn two_peak(cfg: &FleetConfig, mean_sessions_per_day: f64) -> Self {
        let s_max = cfg.s_max();
        let p1 = 1.0 + 0.10 * (s_max as f64 - 1.0);
        let p2 = 1.0 + 0.60 * (s_max as f64 - 1.0);
        let sigma = (s_max as f64 / 6.0).max(0.8);
        let mut weights: Vec<f64> = (1..=s_max)
            .map(|k| {
                let k = k as f64;
                let morning = (-(k - p1).powi(2) / (2.0 * sigma * sigma)).exp();
                let evening = 0.7 * (-(k - p2).powi(2) / (2.0 * sigma * sigma)).exp();
                morning + evening
            })
            .collect();
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        Self {
            slot_weights: weights,
            mean_sessions_per_day,
            min_stay_slots: 1,
            max_stay_slots: s_max as u32,
            max_charge_slots: s_max as u32,
        }
    }

    pub fn validate(&self, cfg: &FleetConfig) -> Result<()> {
        if self.slot_weights.len() != cfg.s_max() {
            return Err(Error::Config(format!(
                "profile has {} slot weights, grid has {}",
                self.slot_weights.len(),
                cfg.s_max()
            )));
        }
        let sum: f64 = self.slot_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "slot weights sum to {sum}, expected 1 within 1e-9"
            )));
        }
        if self.slot_weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Config("slot weights must be non-negative".into()));
        }
        if self.mean_sessions_per_day <= 0.0 {
            return Err(Error::Config("mean_sessions_per_day must be positive".into()));
        }
        if self.min_stay_slots < 1 || self.min_stay_slots > self.max_stay_slots {
            return Err(Error::Config("invalid stay-slot range".into()));
        }
        if self.max_charge_slots < 1 {
            return Err(Error::Config("max_charge_slots must be at least 1".into()));
        }
        Ok(())
    }
}

/// First calendar date of generated data.
pub const SYNTH_EPOCH: (i32, u32, u32) = (2015, 1, 1);

/// Generates `days` episodic days, deterministically from `seed`.
pub fn generate_synthetic(
    days: u32,
    cfg: &FleetConfig,
    profile: &ArrivalProfile,
    seed: u64,
) -> Result<Vec<EpisodeDay>> {
    if days < 1 {
        return Err(Error::InvalidArgument("days must be at least 1".into()));
    }
    profile.validate(cfg)?;
    let slot_picker = WeightedIndex::new(&profile.slot_weights)
        .map_err(|e| Error::Config(format!("bad slot weights: {e}")))?;
    let epoch = NaiveDate::from_ymd_opt(SYNTH_EPOCH.0, SYNTH_EPOCH.1, SYNTH_EPOCH.2)
        .expect("valid epoch");

    let mut out = Vec::with_capacity(days as usize);
    for day_idx in 0..days {
        let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, &[u64::from(day_idx)]));
        let date = epoch + Duration::days(i64::from(day_idx));
        out.push(generate_day(date, cfg, profile, &slot_picker, &mut rng));
    }
    Ok(out)
}

fn generate_day(
    date: NaiveDate,
    cfg: &FleetConfig,
    profile: &ArrivalProfile,
    slot_picker: &WeightedIndex<f64>,
    rng: &mut ChaCha12Rng,
) -> EpisodeDay {
    let s_max = cfg.s_max() as u32;
    let n_sessions = sample_poisson(profile.mean_sessions_per_day, rng);

    // Draw raw (slot, minute, stay, charge) tuples first, then admit them in
    // arrival order onto the lowest free station; draws that find no free
    // station are discarded, which enforces the concurrency cap.
    let mut drafts: Vec<(u32, u32, u32, u32)> = (0..n_sessions)
        .map(|_| {
            let slot = slot_picker.sample(rng) as u32 + 1;
            let minute = rng.gen_range(0..cfg.slot_min);
            let stay_cap = profile.max_stay_slots.min(s_max - slot + 1);
            let stay = rng.gen_range(profile.min_stay_slots.min(stay_cap)..=stay_cap);
            let charge = rng.gen_range(1..=stay.min(profile.max_charge_slots));
            (slot, minute, stay, charge)
        })
        .collect();
    drafts.sort();

    let start = date
        .and_hms_opt(crate::config::EPISODE_START_HOUR, 0, 0)
        .expect("valid episode start");
    // Slot index (1-based) at which each station becomes free again.
    let mut free_from = vec![1u32; cfg.n_max as usize];
    let mut sessions = Vec::with_capacity(drafts.len());
    for (slot, minute, stay, charge) in drafts {
        let Some(station) = free_from.iter().position(|&f| f <= slot) else {
            continue;
        };
        free_from[station] = slot + stay;
        let arrival = start + Duration::minutes(i64::from((slot - 1) * cfg.slot_min + minute));
        let departure = start + Duration::minutes(i64::from((slot + stay - 1) * cfg.slot_min));
        sessions.push(Session {
            station_id: format!("synth-{station:03}"),
            arrival,
            departure,
            charge_slots: charge,
        });
    }
    EpisodeDay { date, sessions }
}

/// Knuth's product method; means here are small (tens per day).
fn sample_poisson(mean: f64, rng: &mut ChaCha12Rng) -> u32 {
    let limit = (-mean).exp();
    let mut k = 0u32;
    let mut product: f64 = 1.0;
    loop {
        product *= rng.gen::<f64>();
        if product <= limit {
            return k;
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episode::ArrivalSchedule;
    use crate::state::bin_sessions_at;

    fn cfg() -> FleetConfig {
        FleetConfig::new(10, 12 * 60, 2 * 60).unwrap() // s_max = 6
    }

    #[test]
    fn same_seed_same_days() {
        let cfg = cfg();
        let profile = ArrivalProfile::two_peak(&cfg, 12.0);
        let a = generate_synthetic(20, &cfg, &profile, 99).unwrap();
        let b = generate_synthetic(20, &cfg, &profile, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(20, &cfg, &profile, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_days_respect_capacity_and_feasibility() {
        let cfg = cfg();
        let profile = ArrivalProfile::two_peak(&cfg, 20.0);
        let days = generate_synthetic(30, &cfg, &profile, 7).unwrap();
        for day in &days {
            let sched = ArrivalSchedule::from_day(day, &cfg).unwrap();
            // Per-slot overlap of connection windows must stay within n_max.
            let mut occupancy = vec![0u32; cfg.s_max()];
            for t in 1..=cfg.s_max() as u32 {
                for ev in sched.arrivals_in(t) {
                    assert!(ev.charge_slots >= 1 && ev.charge_slots <= ev.depart_slots);
                    for slot in t..t + ev.depart_slots {
                        occupancy[(slot - 1) as usize] += 1;
                    }
                }
            }
            assert!(occupancy.iter().all(|&o| o <= cfg.n_max));
            // And the initial state bins without a capacity error.
            bin_sessions_at(sched.arrivals_in(1), &cfg, 1).unwrap();
        }
    }

    #[test]
    fn mean_sessions_tracks_profile_mean() {
        let cfg = cfg();
        let mean = 12.0;
        let profile = ArrivalProfile::two_peak(&cfg, mean);
        let days = generate_synthetic(90, &cfg, &profile, 2024).unwrap();
        let total: usize = days.iter().map(|d| d.sessions.len()).sum();
        let observed = total as f64 / days.len() as f64;
        assert!(
            (observed - mean).abs() <= 0.2 * mean,
            "observed mean {observed}, configured {mean}"
        );
    }

    #[test]
    fn bad_weights_are_rejected() {
        let cfg = cfg();
        let mut profile = ArrivalProfile::two_peak(&cfg, 10.0);
        profile.slot_weights[0] += 0.01;
        match generate_synthetic(1, &cfg, &profile, 1) {
            Err(Error::Config(_)) => {}
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
