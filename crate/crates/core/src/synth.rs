//! Synthetic APC events with planted diurnal archetypes.
//!
//! Each stop draws an archetype from the mixture weights and a study-period
//! volume `V = exp(N(volume_log_mean, volume_log_sd))`. For every weekday
//! `d` and hour `h` the expected boardings are
//!
//! ```text
//! V * p[h] * (1 + noise_scale * eps) / n_weekdays     (clamped at 0)
//! ```
//!
//! with `eps` a standard normal draw, and the count is Poisson with that
//! mean. Alightings use the archetype reversed in time (`p[23 - h]`) with
//! their own noise draw. One event is emitted per (stop, day, hour) whose
//! boarding or alighting mean is nonzero.
//!
//! All randomness comes from a single [`Pcg32`] stream seeded with
//! `config.seed`, consumed in this order: per stop (in sequence order) one
//! uniform for the archetype, one normal for the volume (skipped in
//! deterministic mode) and two uniforms for the position jitter; then for
//! each day, hour and stop one normal for boarding noise, one for alighting
//! noise (both skipped when `noise_scale` is 0 or in deterministic mode) and
//! the two Poisson draws.
//!
//! In deterministic mode every draw is replaced by its mean and counts are
//! rounded. The daily volume is also rounded to a multiple of
//! [`ARCHETYPE_GRID`], so archetypes whose proportions sit on the 1/1000
//! grid (all built-in ones do) are reproduced exactly by the generated
//! counts.

use std::collections::BTreeMap;
use std::io::{self, Write};

use chrono::{Datelike, Duration, NaiveDate, NaiveTime, Weekday};
use thiserror::Error;

use crate::apc::{Direction, StopEvent};
use crate::profiles::HOURS;
use crate::rng::Pcg32;

/// Resolution of the built-in archetype proportions.
pub const ARCHETYPE_GRID: u64 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Archetype {
    pub name: String,
    pub proportions: [f64; HOURS],
}

impl Archetype {
    pub fn peak_hour(&self) -> usize {
        let mut best = 0;
        for h in 1..HOURS {
            if self.proportions[h] > self.proportions[best] {
                best = h;
            }
        }
        best
    }
}

fn bump(h: usize, center: f64, width: f64) -> f64 {
    let z = (h as f64 - center) / width;
    (-0.5 * z * z).exp()
}

/// Rounds a nonnegative shape to integer per-mille weights summing to 1000
/// with largest-remainder apportionment (ties to the earlier hour).
fn to_grid(shape: [f64; HOURS]) -> [f64; HOURS] {
    let total: f64 = shape.iter().sum();
    let scaled: Vec<f64> = shape.iter().map(|v| v / total * ARCHETYPE_GRID as f64).collect();
    let mut weights: Vec<u64> = scaled.iter().map(|v| v.floor() as u64).collect();
    let short = ARCHETYPE_GRID - weights.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..HOURS).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &h in order.iter().take(short as usize) {
        weights[h] += 1;
    }
    let mut out = [0.0; HOURS];
    for (o, w) in out.iter_mut().zip(weights) {
        *o = w as f64 / ARCHETYPE_GRID as f64;
    }
    out
}

fn shape(f: impl Fn(usize) -> f64) -> [f64; HOURS] {
    let mut out = [0.0; HOURS];
    for (h, o) in out.iter_mut().enumerate() {
        let service = if (5..=22).contains(&h) { 1.0 } else { 0.15 };
        *o = service + f(h);
    }
    out
}

/// The four built-in ridership shapes.
pub fn builtin_archetypes() -> Vec<Archetype> {
    let make = |name: &str, s: [f64; HOURS]| Archetype {
        name: name.to_string(),
        proportions: to_grid(s),
    };
    vec![
        make("MorningPeak", shape(|h| 12.0 * bump(h, 7.0, 1.2))),
        make("EveningPeak", shape(|h| 12.0 * bump(h, 17.0, 1.5))),
        make("TwoPeak", shape(|h| 7.0 * bump(h, 7.0, 1.0) + 7.0 * bump(h, 17.0, 1.2))),
        make(
            "EarlyPlusLate",
            shape(|h| 9.0 * bump(h, 6.0, 0.9) + if (14..=21).contains(&h) { 3.0 } else { 0.0 }),
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_stops: usize,
    pub archetypes: Vec<Archetype>,
    pub mixture_weights: Vec<f64>,
    pub volume_log_mean: f64,
    pub volume_log_sd: f64,
    pub noise_scale: f64,
    pub n_weekdays: usize,
    pub seed: u64,
    pub route_id: String,
    pub variation_id: String,
    pub deterministic: bool,
    /// First service date; generation skips forward to a weekday.
    pub start_date: NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let archetypes = builtin_archetypes();
        Self {
            n_stops: 40,
            mixture_weights: vec![1.0; archetypes.len()],
            archetypes,
            volume_log_mean: 7.0,
            volume_log_sd: 0.8,
            noise_scale: 0.1,
            n_weekdays: 45,
            seed: 0,
            route_id: "R1".into(),
            variation_id: "V1".into(),
            deterministic: false,
            start_date: NaiveDate::from_ymd_opt(2024, 1, 8).expect("valid date"),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::Config(msg));
        if self.n_stops == 0 {
            return fail("n_stops must be positive".into());
        }
        if self.n_weekdays == 0 {
            return fail("n_weekdays must be positive".into());
        }
        if self.archetypes.is_empty() {
            return fail("at least one archetype is required".into());
        }
        if self.mixture_weights.len() != self.archetypes.len() {
            return fail(format!(
                "{} mixture weights for {} archetypes",
                self.mixture_weights.len(),
                self.archetypes.len()
            ));
        }
        if let Some(w) = self.mixture_weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return fail(format!("mixture weight {w} is not positive"));
        }
        for a in &self.archetypes {
            if a.proportions.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return fail(format!("archetype {} has a negative or non-finite proportion", a.name));
            }
            let s: f64 = a.proportions.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return fail(format!("archetype {} sums to {s}, not 1", a.name));
            }
        }
        if !self.volume_log_mean.is_finite() {
            return fail("volume_log_mean must be finite".into());
        }
        if !(self.volume_log_sd >= 0.0) || !self.volume_log_sd.is_finite() {
            return fail("volume_log_sd must be nonnegative".into());
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return fail("noise_scale must be nonnegative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub events: Vec<StopEvent>,
    /// Archetype name per generated stop.
    pub ground_truth: BTreeMap<String, String>,
}

impl SynthOutput {
    pub fn write_ground_truth<W: Write>(&self, writer: W) -> io::Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["stop_id", "archetype"])?;
        for (stop, arch) in &self.ground_truth {
            csv.write_record([stop, arch])?;
        }
        csv.flush()
    }
}

/// Stop id for the stop at 1-based route position `seq`.
pub fn stop_id(seq: usize, n_stops: usize) -> String {
    let width = n_stops.to_string().len().max(3);
    format!("S{seq:0width$}")
}

fn weekdays_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

struct PlantedStop {
    id: String,
    archetype: usize,
    /// Expected boardings per service day.
    daily_volume: f64,
    lat: f64,
    lon: f64,
}

pub fn generate(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let mut rng = Pcg32::new(config.seed);
    let n = config.n_stops;
    let days = config.n_weekdays as f64;
    let weight_total: f64 = config.mixture_weights.iter().sum();

    let mut stops = Vec::with_capacity(n);
    for seq in 1..=n {
        let u = rng.next_f64() * weight_total;
        let mut acc = 0.0;
        let mut archetype = config.archetypes.len() - 1;
        for (i, w) in config.mixture_weights.iter().enumerate() {
            acc += w;
            if u < acc {
                archetype = i;
                break;
            }
        }
        let volume = if config.deterministic {
            let daily = config.volume_log_mean.exp() / days;
            let grid = ARCHETYPE_GRID as f64;
            (daily / grid).round().max(1.0) * grid
        } else {
            (config.volume_log_mean + config.volume_log_sd * rng.normal()).exp() / days
        };
        let (jlat, jlon) = (rng.next_f64() - 0.5, rng.next_f64() - 0.5);
        stops.push(PlantedStop {
            id: stop_id(seq, n),
            archetype,
            daily_volume: volume,
            lat: 43.10 + 0.002 * seq as f64 + 0.0004 * jlat,
            lon: -77.70 + 0.003 * seq as f64 + 0.0004 * jlon,
        });
    }

    let noisy = config.noise_scale > 0.0 && !config.deterministic;
    let mut events = Vec::new();
    for date in weekdays_from(config.start_date, config.n_weekdays) {
        for hour in 0..HOURS {
            let trip_id = format!("T{hour:02}");
            let mut load = 0i64;
            for (idx, stop) in stops.iter().enumerate() {
                let p = &config.archetypes[stop.archetype].proportions;
                let eps_b = if noisy { rng.normal() } else { 0.0 };
                let eps_a = if noisy { rng.normal() } else { 0.0 };
                let mean_b = (stop.daily_volume * p[hour] * (1.0 + config.noise_scale * eps_b)).max(0.0);
                let mean_a =
                    (stop.daily_volume * p[HOURS - 1 - hour] * (1.0 + config.noise_scale * eps_a)).max(0.0);
                let (boardings, alightings) = if config.deterministic {
                    (mean_b.round() as i64, mean_a.round() as i64)
                } else {
                    (rng.poisson(mean_b) as i64, rng.poisson(mean_a) as i64)
                };
                if mean_b == 0.0 && mean_a == 0.0 {
                    continue;
                }
                load += boardings - alightings;
                let seq = idx + 1;
                let offset = (seq * 3600 / (n + 1)) as u32;
                events.push(StopEvent {
                    route_id: config.route_id.clone(),
                    direction: Direction::Inbound,
                    variation_id: config.variation_id.clone(),
                    trip_id: trip_id.clone(),
                    stop_id: stop.id.clone(),
                    stop_name: format!("Stop {seq}"),
                    service_date: date,
                    event_time: NaiveTime::from_hms_opt(hour as u32, offset / 60, offset % 60)
                        .expect("offset below one hour"),
                    boardings,
                    alightings,
                    load,
                    cum_distance: 250.0 * seq as f64,
                    global_seq: seq as i64,
                    lat: stop.lat,
                    lon: stop.lon,
                });
            }
        }
    }

    let ground_truth = stops
        .iter()
        .map(|s| (s.id.clone(), config.archetypes[s.archetype].name.clone()))
        .collect();
    Ok(SynthOutput { events, ground_truth })
}
