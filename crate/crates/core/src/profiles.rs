//! Route-level tables and per-stop diurnal curves.
//!
//! Counts are aggregated over every date in the cohort (no per-day
//! averaging), with events binned by the floor of their local hour.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Read, Write};

use chrono::Datelike;
use thiserror::Error;

use crate::apc::StopEvent;

pub const HOURS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("zero total for stop(s): {}", .stops.join(", "))]
    ZeroTotal { stops: Vec<String> },
    #[error("profile CSV line {line}: {reason}")]
    Format { line: u64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Boardings,
    Alightings,
}

impl Measure {
    fn of(self, e: &StopEvent) -> u64 {
        let v = match self {
            Measure::Boardings => e.boardings,
            Measure::Alightings => e.alightings,
        };
        v.max(0) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiurnalProfile {
    pub stop_id: String,
    pub measure: Measure,
    pub counts: [f64; HOURS],
    pub total: f64,
}

impl DiurnalProfile {
    /// Builds a profile from hourly counts; the total is their sum.
    pub fn new(stop_id: impl Into<String>, measure: Measure, counts: [f64; HOURS]) -> Self {
        Self {
            stop_id: stop_id.into(),
            measure,
            total: counts.iter().sum(),
            counts,
        }
    }
}

/// A diurnal curve divided by its total: when a stop is used, not how much.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionProfile {
    pub stop_id: String,
    pub proportions: [f64; HOURS],
    /// Total of the curve this was normalized from.
    pub source_total: f64,
}

pub fn to_proportions(profile: &DiurnalProfile) -> Result<ProportionProfile, ProfileError> {
    if !(profile.total > 0.0) {
        return Err(ProfileError::ZeroTotal {
            stops: vec![profile.stop_id.clone()],
        });
    }
    let mut proportions = [0.0; HOURS];
    for (p, c) in proportions.iter_mut().zip(&profile.counts) {
        *p = c / profile.total;
    }
    Ok(ProportionProfile {
        stop_id: profile.stop_id.clone(),
        proportions,
        source_total: profile.total,
    })
}

/// Sums the chosen measure per stop and hour. Stops with no events in the
/// input do not appear.
pub fn stop_diurnal_profiles(events: &[StopEvent], measure: Measure) -> BTreeMap<String, DiurnalProfile> {
    let mut sums: BTreeMap<&str, [u64; HOURS]> = BTreeMap::new();
    for e in events {
        sums.entry(e.stop_id.as_str()).or_insert([0; HOURS])[e.hour()] += measure.of(e);
    }
    sums.into_iter()
        .map(|(stop, counts)| {
            let counts = counts.map(|c| c as f64);
            (stop.to_string(), DiurnalProfile::new(stop, measure, counts))
        })
        .collect()
}

/// Stops whose total is at least `min_total` (inclusive).
pub fn eligible_stops(profiles: &BTreeMap<String, DiurnalProfile>, min_total: f64) -> BTreeSet<String> {
    profiles
        .iter()
        .filter(|(_, p)| p.total >= min_total)
        .map(|(id, _)| id.clone())
        .collect()
}

/// Natural log of each stop's total volume.
pub fn log_volumes(profiles: &BTreeMap<String, DiurnalProfile>) -> Result<BTreeMap<String, f64>, ProfileError> {
    let zero: Vec<String> = profiles
        .iter()
        .filter(|(_, p)| !(p.total > 0.0))
        .map(|(id, _)| id.clone())
        .collect();
    if !zero.is_empty() {
        return Err(ProfileError::ZeroTotal { stops: zero });
    }
    Ok(profiles.iter().map(|(id, p)| (id.clone(), p.total.ln())).collect())
}

/// Day of week, 0 = Monday.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DayOfWeek(pub u8);

impl DayOfWeek {
    pub const WEEKDAYS: [DayOfWeek; 5] = [DayOfWeek(0), DayOfWeek(1), DayOfWeek(2), DayOfWeek(3), DayOfWeek(4)];

    pub fn of(date: chrono::NaiveDate) -> Self {
        DayOfWeek(date.weekday().num_days_from_monday() as u8)
    }
}

impl fmt::Display for DayOfWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const NAMES: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
        f.write_str(NAMES[self.0 as usize % 7])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    ByDayOfWeek,
    ByHour,
    ByDayOfWeekAndHour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKey {
    Day(DayOfWeek),
    Hour(u8),
    DayHour(DayOfWeek, u8),
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Day(d) => write!(f, "{d}"),
            GroupKey::Hour(h) => write!(f, "{h:02}"),
            GroupKey::DayHour(d, h) => write!(f, "{d} {h:02}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTable {
    pub grouping: Grouping,
    pub measure: Measure,
    pub cells: BTreeMap<GroupKey, f64>,
}

impl AggregateTable {
    pub fn total(&self) -> f64 {
        self.cells.values().sum()
    }
}

/// Route-level totals by day of week, hour of day, or both.
///
/// Day keys always cover Monday through Friday. Saturday and Sunday keys
/// appear only when the input holds weekend events, so the table total
/// always equals the input total.
pub fn aggregate_counts(events: &[StopEvent], grouping: Grouping, measure: Measure) -> AggregateTable {
    let mut sums: BTreeMap<GroupKey, u64> = BTreeMap::new();
    match grouping {
        Grouping::ByDayOfWeek => {
            for d in DayOfWeek::WEEKDAYS {
                sums.insert(GroupKey::Day(d), 0);
            }
        }
        Grouping::ByHour => {
            for h in 0..HOURS as u8 {
                sums.insert(GroupKey::Hour(h), 0);
            }
        }
        Grouping::ByDayOfWeekAndHour => {
            for d in DayOfWeek::WEEKDAYS {
                for h in 0..HOURS as u8 {
                    sums.insert(GroupKey::DayHour(d, h), 0);
                }
            }
        }
    }
    for e in events {
        let day = DayOfWeek::of(e.service_date);
        let hour = e.hour() as u8;
        let key = match grouping {
            Grouping::ByDayOfWeek => GroupKey::Day(day),
            Grouping::ByHour => GroupKey::Hour(hour),
            Grouping::ByDayOfWeekAndHour => {
                if day.0 >= 5 && !sums.contains_key(&GroupKey::DayHour(day, 0)) {
                    for h in 0..HOURS as u8 {
                        sums.insert(GroupKey::DayHour(day, h), 0);
                    }
                }
                GroupKey::DayHour(day, hour)
            }
        };
        *sums.entry(key).or_insert(0) += measure.of(e);
    }
    AggregateTable {
        grouping,
        measure,
        cells: sums.into_iter().map(|(k, v)| (k, v as f64)).collect(),
    }
}

pub fn write_aggregate_csv<W: Write>(writer: W, table: &AggregateTable) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["group", "value"])?;
    for (k, v) in &table.cells {
        csv.write_record([k.to_string(), v.to_string()])?;
    }
    csv.flush()
}

/// One row of a profile CSV: either raw counts or proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub stop_id: String,
    pub values: [f64; HOURS],
    pub total: f64,
}

impl From<&DiurnalProfile> for ProfileRow {
    fn from(p: &DiurnalProfile) -> Self {
        Self {
            stop_id: p.stop_id.clone(),
            values: p.counts,
            total: p.total,
        }
    }
}

impl From<&ProportionProfile> for ProfileRow {
    fn from(p: &ProportionProfile) -> Self {
        Self {
            stop_id: p.stop_id.clone(),
            values: p.proportions,
            total: p.source_total,
        }
    }
}

fn profile_header() -> Vec<String> {
    std::iter::once("stop_id".to_string())
        .chain((0..HOURS).map(|h| format!("h{h:02}")))
        .chain(std::iter::once("total".to_string()))
        .collect()
}

/// Writes `stop_id,h00..h23,total`. For proportion rows `total` is the
/// count total the curve was normalized from.
pub fn write_profiles_csv<W: Write>(writer: W, rows: &[ProfileRow]) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(profile_header())?;
    for row in rows {
        let mut rec = vec![row.stop_id.clone()];
        rec.extend(row.values.iter().map(|v| v.to_string()));
        rec.push(row.total.to_string());
        csv.write_record(rec)?;
    }
    csv.flush()
}

pub fn read_profiles_csv<R: Read>(reader: R) -> Result<Vec<ProfileRow>, ProfileError> {
    let mut csv = csv::Reader::from_reader(reader);
    let format_err = |line: u64, reason: String| ProfileError::Format { line, reason };
    let headers = csv.headers().map_err(|e| format_err(1, e.to_string()))?.clone();
    let expected = profile_header();
    if headers.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(format_err(1, "expected header stop_id,h00..h23,total".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| format_err(line, e.to_string()))?;
        let num = |col: usize| -> Result<f64, ProfileError> {
            let raw = rec.get(col).unwrap_or("").trim();
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| format_err(line, format!("column {}: bad value `{raw}`", expected[col])))
        };
        let mut values = [0.0; HOURS];
        for (h, v) in values.iter_mut().enumerate() {
            *v = num(h + 1)?;
        }
        rows.push(ProfileRow {
            stop_id: rec.get(0).unwrap_or("").to_string(),
            values,
            total: num(HOURS + 1)?,
        });
    }
    Ok(rows)
}
