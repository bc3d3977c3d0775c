//! The sweep studies: grid shapes, degenerate cases, the more-data-helps
//! property on stationary synthetic data, and flexibility-dependent gaps.

use evcoord_core::baselines::{bau_rollout, offline_optimum};
use evcoord_core::evaluation::{
    evaluate_policy, normalized_cost, run_monthly_sweep, run_scale_test, run_training_sweep,
    EvalReport, RegressorSpec, SplitSpec, TrainSettings,
};
use evcoord_core::mlp::MlpConfig;
use evcoord_core::seeds::mix_seed;
use evcoord_core::{generate_synthetic, ArrivalProfile, EpisodeDay, FleetConfig};

fn small_cfg() -> FleetConfig {
    FleetConfig::new(4, 8 * 60, 2 * 60).unwrap() // 4 slots
}

fn exact_settings(seed: u64) -> TrainSettings {
    TrainSettings {
        regressor: RegressorSpec::Exact,
        trajectories_per_day: 20,
        action_cap: 64,
        seed,
        t_steps: None,
    }
}

fn mlp_settings(seed: u64) -> TrainSettings {
    TrainSettings {
        regressor: RegressorSpec::Mlp(MlpConfig {
            learning_rate: 3e-3,
            epochs: 6,
            batch_size: 32,
            huber_delta: 1.0,
            seed,
        }),
        trajectories_per_day: 60,
        action_cap: 64,
        seed,
        t_steps: None,
    }
}

#[test]
fn degenerate_sweep_equals_a_single_run() {
    let cfg = small_cfg();
    let profile = ArrivalProfile::two_peak(&cfg, 5.0);
    // Pool of exactly one window unit, so the window choice is forced.
    let train = generate_synthetic(4, &cfg, &profile, 31).unwrap();
    let test = generate_synthetic(5, &cfg, &profile, 32).unwrap();
    let split = SplitSpec {
        unit_days: 4,
        spans: vec![1],
        runs: 1,
        seed: 9,
    };
    let settings = exact_settings(5);
    let report =
        run_training_sweep(&train, &test, &split, &[20], &settings, &cfg).unwrap();
    assert_eq!(report.cells.len(), 1);

    let manual_settings = TrainSettings {
        trajectories_per_day: 20,
        seed: mix_seed(settings.seed, &[1, 20, 0]),
        ..settings
    };
    let policy = evcoord_core::evaluation::train_policy(&train, &cfg, &manual_settings).unwrap();
    let manual = evaluate_policy(&policy, &test, &cfg).unwrap();
    assert_eq!(report.cells[0].c_rl, manual.c_rl);
    assert_eq!(report.cells[0].c_bau, manual.c_bau);
}

#[test]
fn sweep_grid_has_full_dimensions_and_marks_absent_spans() {
    let cfg = small_cfg();
    let profile = ArrivalProfile::two_peak(&cfg, 5.0);
    let train = generate_synthetic(8, &cfg, &profile, 41).unwrap();
    let test = generate_synthetic(4, &cfg, &profile, 42).unwrap();
    let split = SplitSpec {
        unit_days: 2,
        spans: vec![1, 2, 9], // 9 units do not exist in an 8-day pool
        runs: 2,
        seed: 3,
    };
    let report =
        run_training_sweep(&train, &test, &split, &[10, 20], &exact_settings(1), &cfg).unwrap();
    // 2 feasible spans x 2 sample levels x 2 runs.
    assert_eq!(report.cells.len(), 8);
    assert_eq!(report.absent, vec![(9, 10), (9, 20)]);
    assert_eq!(report.stats.len(), 4);
    let json = serde_json::to_string(&report).unwrap();
    let back: evcoord_core::evaluation::TrainingSweepReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
}

#[test]
fn longer_training_spans_do_not_hurt_on_stationary_data() {
    let cfg = small_cfg();
    let profile = ArrivalProfile::two_peak(&cfg, 6.0);
    let train = generate_synthetic(24, &cfg, &profile, 71).unwrap();
    let test = generate_synthetic(8, &cfg, &profile, 72).unwrap();
    let split = SplitSpec {
        unit_days: 4,
        spans: vec![1, 3],
        runs: 3,
        seed: 11,
    };
    let report =
        run_training_sweep(&train, &test, &split, &[60], &mlp_settings(2), &cfg).unwrap();
    let short = &report.stats[0];
    let long = &report.stats[1];
    assert_eq!((short.span_units, long.span_units), (1, 3));
    let slack = short.std_c_rl + long.std_c_rl + 0.02;
    assert!(
        long.mean_c_rl <= short.mean_c_rl + slack,
        "span 3 mean {} vs span 1 mean {} (slack {slack})",
        long.mean_c_rl,
        short.mean_c_rl
    );
}

#[test]
fn monthly_sweep_covers_every_unit_with_preceding_data() {
    let cfg = small_cfg();
    let profile = ArrivalProfile::two_peak(&cfg, 5.0);
    // 13 window units of 2 days: every unit after the first gets a row.
    let days = generate_synthetic(26, &cfg, &profile, 55).unwrap();
    let report = run_monthly_sweep(&days, 2, 3, &exact_settings(4), &cfg).unwrap();
    assert_eq!(report.rows.len(), 12);
    assert!(report.skipped.is_empty());
    for row in &report.rows {
        assert!((row.improvement - (row.c_bau - row.c_rl)).abs() < 1e-12);
    }
}

#[test]
fn monthly_sweep_skips_empty_test_windows() {
    let cfg = small_cfg();
    let profile = ArrivalProfile::two_peak(&cfg, 5.0);
    let mut days = generate_synthetic(6, &cfg, &profile, 66).unwrap();
    // Force an empty middle window.
    for day in &mut days[2..4] {
        day.sessions.clear();
    }
    let report = run_monthly_sweep(&days, 2, 2, &exact_settings(4), &cfg).unwrap();
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].0, 1);
}

/// Flexible sessions leave room between business-as-usual and the optimum;
/// rigid sessions do not.
#[test]
fn flexibility_widens_the_bau_optimality_gap() {
    let cfg = small_cfg();
    let mut flexible = ArrivalProfile::two_peak(&cfg, 6.0);
    flexible.min_stay_slots = 3;
    flexible.max_charge_slots = 1;
    let mut rigid = ArrivalProfile::two_peak(&cfg, 6.0);
    rigid.max_stay_slots = 2;

    let gap = |profile: &ArrivalProfile, seed: u64| -> f64 {
        let days = generate_synthetic(10, &cfg, profile, seed).unwrap();
        let (mut bau, mut opt) = (Vec::new(), Vec::new());
        for day in &days {
            if day.sessions.is_empty() {
                continue;
            }
            bau.push(bau_rollout(day, &cfg).unwrap().total_cost());
            opt.push(offline_optimum(day, &cfg).unwrap().cost);
        }
        normalized_cost(&bau, &opt).unwrap() - 1.0
    };

    let flexible_gap = gap(&flexible, 81);
    let rigid_gap = gap(&rigid, 82);
    assert!(
        flexible_gap > rigid_gap + 0.05,
        "flexible gap {flexible_gap} vs rigid gap {rigid_gap}"
    );
}

#[test]
fn scale_one_matches_plain_evaluation_and_reports_round_trip() {
    let cfg = small_cfg();
    let profile = ArrivalProfile::two_peak(&cfg, 5.0);
    let train = generate_synthetic(6, &cfg, &profile, 91).unwrap();
    let test = generate_synthetic(4, &cfg, &profile, 92).unwrap();
    let policy =
        evcoord_core::evaluation::train_policy(&train, &cfg, &mlp_settings(7)).unwrap();
    let direct = evaluate_policy(&policy, &test, &cfg).unwrap();
    let points = run_scale_test(&policy, &test, &[1, 2], &cfg).unwrap();
    assert_eq!(points[0].c_rl, direct.c_rl);
    assert_eq!(points[0].c_bau, direct.c_bau);
    for point in &points {
        assert!(point.c_rl >= 1.0 - 1e-9);
        assert!(point.c_bau >= 1.0 - 1e-9);
    }

    let json = serde_json::to_string(&direct).unwrap();
    let back: EvalReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, direct);
    // Per-day sanity: the optimum lower-bounds both policies.
    for day in &direct.days {
        if !day.excluded {
            assert!(day.rl_cost >= day.opt_cost - 1e-9);
            assert!(day.bau_cost >= day.opt_cost - 1e-9);
        }
    }
}
