//! Domain types for automated passenger count (APC) records.
//!
//! A [`StopEvent`] is one doors-open record. The bus may stop and open its
//! doors without anyone moving, so zero boardings and zero alightings is a
//! valid event.

use std::fmt;

use chrono::{NaiveDate, NaiveTime};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EventError {
    #[error("value out of range for field `{field}`: {value}")]
    Range { field: &'static str, value: String },
    #[error("events belong to more than one trip: `{first}` and `{other}`")]
    MixedTrip { first: String, other: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Inbound,
    Outbound,
}

impl Direction {
    /// File encoding: `I` or `O`.
    pub fn code(self) -> &'static str {
        match self {
            Direction::Inbound => "I",
            Direction::Outbound => "O",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "I" => Some(Direction::Inbound),
            "O" => Some(Direction::Outbound),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One doors-open record.
///
/// Counts are held as signed integers so that raw input with sensor
/// garbage can be represented and then rejected by [`validate_event`].
/// `load` is carried through but never used for analysis: APC sensors
/// routinely produce trips where more riders leave than ever boarded.
#[derive(Debug, Clone, PartialEq)]
pub struct StopEvent {
    pub route_id: String,
    pub direction: Direction,
    pub variation_id: String,
    pub trip_id: String,
    pub stop_id: String,
    pub stop_name: String,
    pub service_date: NaiveDate,
    pub event_time: NaiveTime,
    pub boardings: i64,
    pub alightings: i64,
    pub load: i64,
    /// Meters travelled since the start of the trip.
    pub cum_distance: f64,
    /// Position of the stop in the route ordering, starting at 1.
    pub global_seq: i64,
    pub lat: f64,
    pub lon: f64,
}

/// Key under which two events are considered the same record.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventKey {
    pub trip_id: String,
    pub service_date: NaiveDate,
    pub event_time: NaiveTime,
    pub stop_id: String,
}

impl StopEvent {
    pub fn key(&self) -> EventKey {
        EventKey {
            trip_id: self.trip_id.clone(),
            service_date: self.service_date,
            event_time: self.event_time,
            stop_id: self.stop_id.clone(),
        }
    }

    /// Hour of day, 0..=23, by floor of the local event time.
    pub fn hour(&self) -> usize {
        use chrono::Timelike;
        self.event_time.hour() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServicePeriod {
    pub label: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub weekdays_only: bool,
}

impl ServicePeriod {
    pub fn new(
        label: impl Into<String>,
        start_date: NaiveDate,
        end_date: NaiveDate,
        weekdays_only: bool,
    ) -> Result<Self, EventError> {
        if start_date > end_date {
            return Err(EventError::Range {
                field: "end_date",
                value: format!("{end_date} precedes {start_date}"),
            });
        }
        Ok(Self {
            label: label.into(),
            start_date,
            end_date,
            weekdays_only,
        })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        date >= self.start_date && date <= self.end_date && (!self.weekdays_only || is_weekday(date))
    }
}

pub fn is_weekday(date: NaiveDate) -> bool {
    use chrono::{Datelike, Weekday};
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Per-stop summary with one canonical value for each location attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct StopInfo {
    pub stop_id: String,
    pub stop_name: String,
    pub canonical_global_seq: i64,
    pub canonical_cum_distance: f64,
    pub canonical_lat: f64,
    pub canonical_lon: f64,
    pub total_boardings: u64,
    pub total_alightings: u64,
}

fn range(field: &'static str, value: impl fmt::Display) -> EventError {
    EventError::Range {
        field,
        value: value.to_string(),
    }
}

/// Checks every field invariant and returns the event unchanged.
pub fn validate_event(event: StopEvent) -> Result<StopEvent, EventError> {
    if event.boardings < 0 {
        return Err(range("boardings", event.boardings));
    }
    if event.alightings < 0 {
        return Err(range("alightings", event.alightings));
    }
    if !(event.cum_distance >= 0.0) || !event.cum_distance.is_finite() {
        return Err(range("cum_distance", event.cum_distance));
    }
    if event.global_seq < 1 {
        return Err(range("global_seq", event.global_seq));
    }
    if !(-90.0..=90.0).contains(&event.lat) {
        return Err(range("lat", event.lat));
    }
    if !(-180.0..=180.0).contains(&event.lon) {
        return Err(range("lon", event.lon));
    }
    Ok(event)
}

/// Net passenger flow over one trip: total boardings minus total alightings.
///
/// A negative value is the sensor artifact where more riders leave the bus
/// than boarded it.
pub fn trip_flow_imbalance(events: &[StopEvent]) -> Result<i64, EventError> {
    let Some(first) = events.first() else {
        return Ok(0);
    };
    let mut net = 0i64;
    for e in events {
        if e.trip_id != first.trip_id {
            return Err(EventError::MixedTrip {
                first: first.trip_id.clone(),
                other: e.trip_id.clone(),
            });
        }
        net += e.boardings - e.alightings;
    }
    Ok(net)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn event(trip: &str, stop: &str, boardings: i64, alightings: i64) -> StopEvent {
        StopEvent {
            route_id: "39".into(),
            direction: Direction::Inbound,
            variation_id: "10".into(),
            trip_id: trip.into(),
            stop_id: stop.into(),
            stop_name: format!("Stop {stop}"),
            service_date: NaiveDate::from_ymd_opt(2015, 1, 26).unwrap(),
            event_time: NaiveTime::from_hms_opt(7, 30, 0).unwrap(),
            boardings,
            alightings,
            load: 0,
            cum_distance: 120.0,
            global_seq: 3,
            lat: 43.15,
            lon: -77.61,
        }
    }
}
