//! Charging-session records and their episodic preprocessing.
//!
//! A [`Session`] is one EV charging transaction. Raw transactions become
//! [`EpisodeDay`]s: 24 h windows starting at 07:00 in which the car park is
//! guaranteed empty at both ends, with departures clipped to the window and
//! charge demands reduced to what fits before departure.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::config::{FleetConfig, EPISODE_START_HOUR};
use crate::error::{Error, Result};

/// One EV charging transaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub station_id: String,
    pub arrival: NaiveDateTime,
    pub departure: NaiveDateTime,
    /// Slots of charging needed at the fleet's uniform rate.
    pub charge_slots: u32,
}

/// All sessions of one episodic day (07:00 to 07:00 next day).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeDay {
    /// Calendar day on which the 07:00 window opens.
    pub date: NaiveDate,
    /// Sessions sorted by arrival, all arriving and departing in the window.
    pub sessions: Vec<Session>,
}

impl EpisodeDay {
    pub fn episode_start(&self) -> NaiveDateTime {
        self.date
            .and_hms_opt(EPISODE_START_HOUR, 0, 0)
            .expect("valid wall-clock time")
    }

    pub fn episode_end(&self, cfg: &FleetConfig) -> NaiveDateTime {
        self.episode_start() + Duration::minutes(i64::from(cfg.h_max_min))
    }

    /// 1-based decision slot containing `ts`, if inside the window.
    pub fn slot_of(&self, ts: NaiveDateTime, cfg: &FleetConfig) -> Option<u32> {
        let minutes = (ts - self.episode_start()).num_minutes();
        if minutes < 0 || minutes >= i64::from(cfg.h_max_min) {
            return None;
        }
        Some(1 + (minutes as u32) / cfg.slot_min)
    }
}

/// Calendar day of the episode containing `ts` (episodes open at 07:00).
pub fn episode_date_of(ts: NaiveDateTime) -> NaiveDate {
    if ts.time().hour() >= EPISODE_START_HOUR {
        ts.date()
    } else {
        ts.date().pred_opt().expect("date in range")
    }
}

/// Counts of records altered or removed while preparing data.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub parsed: u64,
    /// Rows with departure <= arrival or non-positive energy.
    pub dropped_invalid: u64,
    /// Departures pulled back to the episode end.
    pub clipped_departures: u64,
    /// Charge demands reduced to fit before departure.
    pub reduced_charges: u64,
}

impl PreprocessSummary {
    pub fn merge(&mut self, other: &PreprocessSummary) {
        self.parsed += other.parsed;
        self.dropped_invalid += other.dropped_invalid;
        self.clipped_departures += other.clipped_departures;
        self.reduced_charges += other.reduced_charges;
    }
}

pub const CSV_HEADER: &str = "station_id,arrival,departure,energy_kwh,charge_rate_kw";

fn parse_timestamp(s: &str, line: u64) -> Result<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .map_err(|e| Error::Parse {
            line,
            msg: format!("bad timestamp {s:?}: {e}"),
        })
}

fn parse_f64(s: &str, field: &str, line: u64) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {field}: {s:?}"),
    })
}

/// Parses the sessions CSV (`station_id,arrival,departure,energy_kwh,charge_rate_kw`).
///
/// Charge demand is converted to whole slots at the session's rate:
/// `ceil((energy / rate) / slot_hours)`. Rows with non-positive duration or
/// energy are dropped and counted; an empty file yields an empty list.
pub fn load_sessions<R: Read>(reader: R, cfg: &FleetConfig) -> Result<(Vec<Session>, PreprocessSummary)> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut sessions = Vec::new();
    let mut summary = PreprocessSummary::default();

    for record in csv_reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 5 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 5 fields, got {}", record.len()),
            });
        }
        summary.parsed += 1;

        let station_id = record[0].trim().to_string();
        let arrival = parse_timestamp(record[1].trim(), line)?;
        let departure = parse_timestamp(record[2].trim(), line)?;
        let energy_kwh = parse_f64(&record[3], "energy_kwh", line)?;
        let rate_kw = parse_f64(&record[4], "charge_rate_kw", line)?;
        if !rate_kw.is_finite() || rate_kw <= 0.0 {
            return Err(Error::Parse {
                line,
                msg: format!("charge_rate_kw must be positive, got {rate_kw}"),
            });
        }

        if departure <= arrival || energy_kwh <= 0.0 {
            summary.dropped_invalid += 1;
            continue;
        }

        let hours_needed = energy_kwh / rate_kw;
        let charge_slots = (hours_needed / cfg.slot_hours()).ceil() as u32;
        sessions.push(Session {
            station_id,
            arrival,
            departure,
            charge_slots: charge_slots.max(1),
        });
    }
    Ok((sessions, summary))
}

pub fn load_sessions_path(path: &Path, cfg: &FleetConfig) -> Result<(Vec<Session>, PreprocessSummary)> {
    let file = std::fs::File::open(path)?;
    load_sessions(std::io::BufReader::new(file), cfg)
}

/// Writes sessions in the canonical CSV schema.
///
/// Energy is emitted at a 1 kW reference rate (`charge_slots * slot_hours`),
/// so `load_sessions` recovers the same `charge_slots` exactly.
pub fn write_sessions<W: Write>(mut writer: W, sessions: &[Session], cfg: &FleetConfig) -> Result<()> {
    writeln!(writer, "{CSV_HEADER}")?;
    for s in sessions {
        writeln!(
            writer,
            "{},{},{},{},1",
            s.station_id,
            s.arrival.format("%Y-%m-%dT%H:%M:%S"),
            s.departure.format("%Y-%m-%dT%H:%M:%S"),
            f64::from(s.charge_slots) * cfg.slot_hours(),
        )?;
    }
    Ok(())
}

/// Result of cutting a session stream into episodic days.
#[derive(Clone, Debug)]
pub struct Episodized {
    pub days: Vec<EpisodeDay>,
    pub summary: PreprocessSummary,
}

/// Assigns each session to the episode containing its arrival, clips
/// departures to the episode end, and reduces charge demands so every
/// session can complete before departing.
pub fn episodize(sessions: &[Session], cfg: &FleetConfig) -> Episodized {
    let mut by_day: HashMap<NaiveDate, Vec<Session>> = HashMap::new();
    let mut summary = PreprocessSummary::default();

    for session in sessions {
        let date = episode_date_of(session.arrival);
        let day_probe = EpisodeDay {
            date,
            sessions: Vec::new(),
        };
        let end = day_probe.episode_end(cfg);

        let mut s = session.clone();
        if s.departure > end {
            s.departure = end;
            summary.clipped_departures += 1;
        }

        // Remaining-slot budget from the slot containing the arrival.
        let arrival_slot = day_probe
            .slot_of(s.arrival, cfg)
            .expect("arrival inside its own episode window");
        let slot_start =
            day_probe.episode_start() + Duration::minutes(i64::from((arrival_slot - 1) * cfg.slot_min));
        let depart_minutes = (s.departure - slot_start).num_minutes() as u32;
        let depart_slots = depart_minutes.div_ceil(cfg.slot_min).max(1);
        if s.charge_slots > depart_slots {
            s.charge_slots = depart_slots;
            summary.reduced_charges += 1;
        }

        by_day.entry(date).or_default().push(s);
    }

    let mut days: Vec<EpisodeDay> = by_day
        .into_iter()
        .map(|(date, mut sessions)| {
            sessions.sort_by(|a, b| {
                a.arrival
                    .cmp(&b.arrival)
                    .then_with(|| a.station_id.cmp(&b.station_id))
            });
            EpisodeDay { date, sessions }
        })
        .collect();
    days.sort_by_key(|d| d.date);
    Episodized { days, summary }
}

/// Keeps only sessions from the `n` busiest stations (by transaction count),
/// breaking count ties by lexicographically smaller station id. With fewer
/// than `n` distinct stations everything is kept.
pub fn select_top_stations(sessions: &[Session], n: usize) -> Vec<Session> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in sessions {
        *counts.entry(s.station_id.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(n);
    let keep: std::collections::HashSet<&str> = ranked.iter().map(|(id, _)| *id).collect();
    sessions
        .iter()
        .filter(|s| keep.contains(s.station_id.as_str()))
        .cloned()
        .collect()
}

/// Number of distinct station ids in a session list.
pub fn distinct_stations(sessions: &[Session]) -> usize {
    sessions
        .iter()
        .map(|s| s.station_id.as_str())
        .collect::<std::collections::HashSet<_>>()
        .len()
}

/// Repeats every session of a day `scale` times under fresh synthetic
/// station ids. The associated fleet grows by the same factor
/// (see [`FleetConfig::scaled`]).
pub fn duplicate_sessions(day: &EpisodeDay, scale: u32) -> Result<EpisodeDay> {
    if scale < 1 {
        return Err(Error::InvalidArgument("scale must be at least 1".into()));
    }
    if scale == 1 {
        return Ok(day.clone());
    }
    let mut sessions = Vec::with_capacity(day.sessions.len() * scale as usize);
    for s in &day.sessions {
        for copy in 0..scale {
            let mut dup = s.clone();
            if copy > 0 {
                dup.station_id = format!("{}~dup{}", s.station_id, copy);
            }
            sessions.push(dup);
        }
    }
    sessions.sort_by(|a, b| {
        a.arrival
            .cmp(&b.arrival)
            .then_with(|| a.station_id.cmp(&b.station_id))
    });
    Ok(EpisodeDay {
        date: day.date,
        sessions,
    })
}
