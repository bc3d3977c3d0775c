//! Property tests over the session pipeline: episodization always yields
//! feasible days, duplication composes, and the CSV schema round-trips.

use chrono::NaiveDateTime;
use proptest::prelude::*;

use evcoord_core::{
    duplicate_sessions, episodize, load_sessions, write_sessions, ArrivalSchedule, FleetConfig,
    Session,
};

fn arb_session() -> impl Strategy<Value = Session> {
    // Arrivals across three days around the episode boundary, any duration up
    // to ~40 h, any demand; episodize must make all of it feasible.
    (
        "[A-Z]{1,3}[0-9]{1,2}",
        0i64..(3 * 24 * 60),
        1i64..(40 * 60),
        1u32..30,
    )
        .prop_map(|(station_id, arrival_min, duration_min, charge_slots)| {
            let base = NaiveDateTime::parse_from_str("2015-03-01T00:00:00", "%Y-%m-%dT%H:%M:%S")
                .unwrap();
            let arrival = base + chrono::Duration::minutes(arrival_min);
            Session {
                station_id,
                arrival,
                departure: arrival + chrono::Duration::minutes(duration_min),
                charge_slots,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn episodize_always_produces_feasible_days(sessions in prop::collection::vec(arb_session(), 0..40)) {
        let cfg = FleetConfig::new(64, 24 * 60, 2 * 60).unwrap();
        let out = episodize(&sessions, &cfg);
        let mut kept = 0;
        for day in &out.days {
            let end = day.episode_end(&cfg);
            for s in &day.sessions {
                prop_assert!(s.departure <= end);
                prop_assert!(s.arrival >= day.episode_start());
                prop_assert!(s.charge_slots >= 1);
            }
            // The schedule extraction re-derives slot demands and enforces
            // charge <= depart <= remaining horizon.
            let sched = ArrivalSchedule::from_day(day, &cfg).unwrap();
            kept += sched.total_sessions();
        }
        prop_assert_eq!(kept, sessions.len());
    }

    #[test]
    fn duplication_composes_up_to_station_relabeling(
        sessions in prop::collection::vec(arb_session(), 1..10),
        a in 1u32..4,
        b in 1u32..4,
    ) {
        let cfg = FleetConfig::new(64, 24 * 60, 2 * 60).unwrap();
        let days = episodize(&sessions, &cfg).days;
        let day = &days[0];
        let once = duplicate_sessions(day, a * b).unwrap();
        let twice = duplicate_sessions(&duplicate_sessions(day, a).unwrap(), b).unwrap();
        let strip = |d: &evcoord_core::EpisodeDay| {
            let mut v: Vec<(NaiveDateTime, NaiveDateTime, u32)> = d
                .sessions
                .iter()
                .map(|s| (s.arrival, s.departure, s.charge_slots))
                .collect();
            v.sort();
            v
        };
        prop_assert_eq!(strip(&once), strip(&twice));
        prop_assert_eq!(once.date, twice.date);
    }

    #[test]
    fn csv_round_trips_session_lists(sessions in prop::collection::vec(arb_session(), 0..20)) {
        let cfg = FleetConfig::new(64, 24 * 60, 2 * 60).unwrap();
        let mut buf = Vec::new();
        write_sessions(&mut buf, &sessions, &cfg).unwrap();
        let (reloaded, summary) = load_sessions(buf.as_slice(), &cfg).unwrap();
        prop_assert_eq!(reloaded, sessions);
        prop_assert_eq!(summary.dropped_invalid, 0);
    }
}
