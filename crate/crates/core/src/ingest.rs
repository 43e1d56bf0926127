//! Reading and writing APC event files, and cohort filtering.
//!
//! Event files are comma-separated with a header row. The standard column
//! layout is [`EVENT_COLUMNS`]; dates are `YYYY-MM-DD`, times `HH:MM:SS`
//! in local civil time, and direction is `I` or `O`. Files whose name ends
//! in `.gz` are read through a gzip decoder.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveTime};
use flate2::read::GzDecoder;
use thiserror::Error;

use crate::apc::{validate_event, Direction, EventError, ServicePeriod, StopEvent};

pub const EVENT_COLUMNS: [&str; 15] = [
    "route_id",
    "direction",
    "variation_id",
    "trip_id",
    "stop_id",
    "stop_name",
    "service_date",
    "event_time",
    "boardings",
    "alightings",
    "load",
    "cum_distance",
    "global_seq",
    "lat",
    "lon",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: cannot parse column `{column}`: {reason}")]
    Parse {
        line: u64,
        column: String,
        reason: String,
    },
    #[error("line {line}: {source}")]
    Range {
        line: u64,
        #[source]
        source: EventError,
    },
    #[error("line {line}: duplicate event (trip {trip_id}, {service_date} {event_time}, stop {stop_id})")]
    Duplicate {
        line: u64,
        trip_id: String,
        service_date: NaiveDate,
        event_time: NaiveTime,
        stop_id: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Header name used for each field, in [`EVENT_COLUMNS`] order. Columns may
/// appear in any order in the file and extra columns are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSchema {
    pub columns: Vec<String>,
}

impl Default for EventSchema {
    fn default() -> Self {
        Self::standard()
    }
}

impl EventSchema {
    pub fn standard() -> Self {
        Self {
            columns: EVENT_COLUMNS.iter().map(|c| c.to_string()).collect(),
        }
    }
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    index: &'a [usize],
    line: u64,
}

impl Row<'_> {
    fn raw(&self, field: usize) -> &str {
        self.record.get(self.index[field]).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, field: usize) -> Result<T, IngestError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(field).trim();
        raw.parse::<T>().map_err(|e| self.error(field, e.to_string()))
    }

    fn error(&self, field: usize, reason: String) -> IngestError {
        IngestError::Parse {
            line: self.line,
            column: EVENT_COLUMNS[field].to_string(),
            reason,
        }
    }
}

/// Parses an event stream, validating every row and rejecting duplicate
/// event keys. Row order is preserved.
pub fn parse_events<R: Read>(reader: R, schema: &EventSchema) -> Result<Vec<StopEvent>, IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = csv.headers().map_err(csv_error)?.clone();

    let mut index = Vec::with_capacity(EVENT_COLUMNS.len());
    for (field, name) in EVENT_COLUMNS.iter().enumerate() {
        let wanted = schema.columns.get(field).map(String::as_str).unwrap_or(name);
        let pos = headers
            .iter()
            .position(|h| h.trim() == wanted)
            .ok_or_else(|| IngestError::Parse {
                line: 1,
                column: name.to_string(),
                reason: format!("header `{wanted}` missing"),
            })?;
        index.push(pos);
    }

    let mut seen = HashSet::new();
    let mut events = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut line = 1u64;
    while csv.read_record(&mut record).map_err(csv_error)? {
        line = record.position().map(|p| p.line()).unwrap_or(line + 1);
        let row = Row {
            record: &record,
            index: &index,
            line,
        };
        let event = parse_row(&row)?;
        let event = validate_event(event).map_err(|source| IngestError::Range { line, source })?;
        if !seen.insert(event.key()) {
            return Err(IngestError::Duplicate {
                line,
                trip_id: event.trip_id,
                service_date: event.service_date,
                event_time: event.event_time,
                stop_id: event.stop_id,
            });
        }
        events.push(event);
    }
    Ok(events)
}

fn parse_row(row: &Row<'_>) -> Result<StopEvent, IngestError> {
    let direction = Direction::from_code(row.raw(1).trim())
        .ok_or_else(|| row.error(1, format!("expected I or O, got `{}`", row.raw(1))))?;
    let service_date = NaiveDate::parse_from_str(row.raw(6).trim(), "%Y-%m-%d")
        .map_err(|e| row.error(6, e.to_string()))?;
    let event_time = NaiveTime::parse_from_str(row.raw(7).trim(), "%H:%M:%S")
        .map_err(|e| row.error(7, e.to_string()))?;
    Ok(StopEvent {
        route_id: row.raw(0).to_string(),
        direction,
        variation_id: row.raw(2).to_string(),
        trip_id: row.raw(3).to_string(),
        stop_id: row.raw(4).to_string(),
        stop_name: row.raw(5).to_string(),
        service_date,
        event_time,
        boardings: row.parse(8)?,
        alightings: row.parse(9)?,
        load: row.parse(10)?,
        cum_distance: row.parse(11)?,
        global_seq: row.parse(12)?,
        lat: row.parse(13)?,
        lon: row.parse(14)?,
    })
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::Parse {
            line,
            column: String::new(),
            reason: format!("{other:?}"),
        },
    }
}

/// Reads an event file from disk, decompressing when the name ends in `.gz`.
pub fn read_events_file(path: &Path) -> Result<Vec<StopEvent>, IngestError> {
    let file = BufReader::new(File::open(path)?);
    let schema = EventSchema::standard();
    if path.extension().is_some_and(|ext| ext == "gz") {
        parse_events(GzDecoder::new(file), &schema)
    } else {
        parse_events(file, &schema)
    }
}

/// Writes events in the standard column layout.
pub fn write_events<W: Write>(writer: W, events: &[StopEvent]) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(EVENT_COLUMNS)?;
    for e in events {
        csv.write_record([
            e.route_id.clone(),
            e.direction.code().to_string(),
            e.variation_id.clone(),
            e.trip_id.clone(),
            e.stop_id.clone(),
            e.stop_name.clone(),
            e.service_date.format("%Y-%m-%d").to_string(),
            e.event_time.format("%H:%M:%S").to_string(),
            e.boardings.to_string(),
            e.alightings.to_string(),
            e.load.to_string(),
            e.cum_distance.to_string(),
            e.global_seq.to_string(),
            e.lat.to_string(),
            e.lon.to_string(),
        ])?;
    }
    csv.flush()
}

/// Selects an analysis cohort. Unset fields match everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterCriteria {
    pub route_id: Option<String>,
    pub direction: Option<Direction>,
    pub period: Option<ServicePeriod>,
    pub variation_ids: Option<BTreeSet<String>>,
}

impl FilterCriteria {
    pub fn matches(&self, e: &StopEvent) -> bool {
        self.route_id.as_ref().is_none_or(|r| *r == e.route_id)
            && self.direction.is_none_or(|d| d == e.direction)
            && self.period.as_ref().is_none_or(|p| p.contains(e.service_date))
            && self
                .variation_ids
                .as_ref()
                .is_none_or(|v| v.contains(&e.variation_id))
    }
}

pub fn filter_events(events: &[StopEvent], criteria: &FilterCriteria) -> Vec<StopEvent> {
    events.iter().filter(|e| criteria.matches(e)).cloned().collect()
}
