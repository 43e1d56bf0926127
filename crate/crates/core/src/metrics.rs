//! Pairwise stop dissimilarities and labeled distance matrices.
//!
//! Five measures are supported: two on ridership curves (Euclidean and band
//! distance) and three on a stop's canonical location (global sequence
//! number, planar geographic distance, cumulative travel distance).
//!
//! # Band distance
//!
//! For a sample of `n` curves of length `T`, the band of a pair `(i, j)` at
//! time `t` is the closed interval between `c_i(t)` and `c_j(t)`. The band
//! distance counts how often the *other* curves fall inside it:
//!
//! ```text
//! d(i, j) = #{ (h, t) : h ∉ {i, j}, min(c_i(t), c_j(t)) <= c_h(t) <= max(c_i(t), c_j(t)) }
//!           / ((n - 2) * T)
//! ```
//!
//! A pair whose band captures much of the sample is far apart relative to
//! the data. The value lies in `[0, 1]`, depends only on the pointwise
//! ordering of the curves, and is 0 when `n = 2`. The count is accumulated
//! as an integer and divided once, so parallel and sequential evaluation are
//! bitwise identical. The final scaling is pluggable through
//! [`BandNormalization`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::apc::{StopEvent, StopInfo};
use crate::numfmt::significant;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("too few curves: band distance needs at least 2, got {0}")]
    TooFewCurves(usize),
    #[error("non-finite value in curve `{0}`")]
    NonFinite(String),
    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("no trips found for variation `{0}`")]
    UnknownVariation(String),
    #[error("distance matrix invariant violated: {0}")]
    Invariant(String),
    #[error("unknown metric `{0}` (expected eucl, band, gseq, geo or trdist)")]
    UnknownMetric(String),
    #[error("distance matrix CSV line {line}: {reason}")]
    Format { line: u64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    CurveEuclidean,
    CurveBand,
    SeqNumber,
    Geographic,
    TravelDistance,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::CurveEuclidean,
        MetricKind::CurveBand,
        MetricKind::SeqNumber,
        MetricKind::Geographic,
        MetricKind::TravelDistance,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            MetricKind::CurveEuclidean => "eucl",
            MetricKind::CurveBand => "band",
            MetricKind::SeqNumber => "gseq",
            MetricKind::Geographic => "geo",
            MetricKind::TravelDistance => "trdist",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for MetricKind {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|m| m.short_name() == s)
            .ok_or_else(|| MetricError::UnknownMetric(s.to_string()))
    }
}

/// Symmetric, zero-diagonal, nonnegative matrix of stop dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
    metric: MetricKind,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major values, checking every invariant.
    pub fn new(labels: Vec<String>, values: Vec<f64>, metric: MetricKind) -> Result<Self, MetricError> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(MetricError::LengthMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        let m = Self { labels, values, metric };
        m.check_invariants()?;
        Ok(m)
    }

    pub fn check_invariants(&self) -> Result<(), MetricError> {
        let n = self.len();
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(MetricError::Invariant(format!("diagonal ({i},{i}) = {}", self.get(i, i))));
            }
            for j in 0..n {
                let v = self.get(i, j);
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(MetricError::Invariant(format!("entry ({i},{j}) = {v}")));
                }
                if v != self.get(j, i) {
                    return Err(MetricError::Invariant(format!("asymmetric at ({i},{j})")));
                }
                if self.metric == MetricKind::CurveBand && v > 1.0 {
                    return Err(MetricError::Invariant(format!("band entry ({i},{j}) = {v} > 1")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.labels.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Off-diagonal entries `(i, j)` with `i < j`.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| self.get(i, j)))
    }

    /// Restricts the matrix to `labels`, in that order.
    pub fn select(&self, labels: &[String]) -> Result<Self, MetricError> {
        let pos: HashMap<&str, usize> = self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let idx: Vec<usize> = labels
            .iter()
            .map(|l| {
                pos.get(l.as_str())
                    .copied()
                    .ok_or_else(|| MetricError::Invariant(format!("label `{l}` not in matrix")))
            })
            .collect::<Result<_, _>>()?;
        let values = idx.iter().flat_map(|&i| idx.iter().map(move |&j| self.get(i, j))).collect();
        Ok(Self {
            labels: labels.to_vec(),
            values,
            metric: self.metric,
        })
    }

    /// CSV with stop ids as first row and column and 12 significant digits
    /// per cell. The top-left cell holds the metric's short name.
    pub fn write_csv<W: Write>(&self, writer: W) -> io::Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec![self.metric.short_name().to_string()];
        header.extend(self.labels.iter().cloned());
        csv.write_record(&header)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut rec = vec![label.clone()];
            rec.extend(self.row(i).iter().map(|v| significant(*v, 12)));
            csv.write_record(&rec)?;
        }
        csv.flush()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, MetricError> {
        let err = |line: u64, reason: String| MetricError::Format { line, reason };
        let mut csv = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut records = csv.records();
        let header = records
            .next()
            .ok_or_else(|| err(1, "empty file".into()))?
            .map_err(|e| err(1, e.to_string()))?;
        let metric: MetricKind = header.get(0).unwrap_or("").trim().parse()?;
        let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let n = labels.len();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let line = i as u64 + 2;
            let rec = records
                .next()
                .ok_or_else(|| err(line, "missing row".into()))?
                .map_err(|e| err(line, e.to_string()))?;
            if rec.get(0) != Some(labels[i].as_str()) {
                return Err(err(line, format!("row label does not match column `{}`", labels[i])));
            }
            if rec.len() != n + 1 {
                return Err(err(line, format!("expected {} cells, got {}", n + 1, rec.len())));
            }
            for cell in rec.iter().skip(1) {
                values.push(cell.trim().parse::<f64>().map_err(|e| err(line, e.to_string()))?);
            }
        }
        if records.next().is_some() {
            return Err(err(n as u64 + 2, "trailing rows".into()));
        }
        Self::new(labels, values, metric)
    }
}

fn check_curves(labels: &[String], curves: &[Vec<f64>]) -> Result<usize, MetricError> {
    if labels.len() != curves.len() {
        return Err(MetricError::LengthMismatch {
            expected: labels.len(),
            got: curves.len(),
        });
    }
    let t = curves.first().map_or(0, Vec::len);
    for (label, c) in labels.iter().zip(curves) {
        if c.len() != t {
            return Err(MetricError::LengthMismatch { expected: t, got: c.len() });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite(label.clone()));
        }
    }
    Ok(t)
}

/// L2 distance between two curves.
pub fn curve_euclidean(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

pub fn curve_euclidean_matrix(labels: &[String], curves: &[Vec<f64>]) -> Result<DistanceMatrix, MetricError> {
    check_curves(labels, curves)?;
    let n = labels.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = curve_euclidean(&curves[i], &curves[j])?;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DistanceMatrix::new(labels.to_vec(), values, MetricKind::CurveEuclidean)
}

/// Turns the integer band-membership count of a pair into a dissimilarity.
pub trait BandNormalization: Sync {
    fn normalize(&self, inside: u64, n_curves: usize, n_times: usize) -> f64;
}

/// Fraction of (reference curve, time) cells inside the pair's band, with
/// the pair's own two curves excluded from the reference set.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceFraction;

impl BandNormalization for ReferenceFraction {
    fn normalize(&self, inside: u64, n_curves: usize, n_times: usize) -> f64 {
        if n_curves <= 2 || n_times == 0 {
            return 0.0;
        }
        inside as f64 / ((n_curves - 2) * n_times) as f64
    }
}

pub fn band_distance_matrix(labels: &[String], curves: &[Vec<f64>]) -> Result<DistanceMatrix, MetricError> {
    band_distance_matrix_with(labels, curves, &ReferenceFraction, 0)
}

/// Band distance with a chosen normalization. `threads` caps the worker
/// count (0 or 1 = sequential); the output does not depend on it.
pub fn band_distance_matrix_with(
    labels: &[String],
    curves: &[Vec<f64>],
    norm: &dyn BandNormalization,
    threads: usize,
) -> Result<DistanceMatrix, MetricError> {
    let t = check_curves(labels, curves)?;
    let n = curves.len();
    if n < 2 {
        return Err(MetricError::TooFewCurves(n));
    }
    if t == 0 {
        return Err(MetricError::LengthMismatch { expected: 1, got: 0 });
    }
    // Sorted column per time point: the number of curves in [lo, hi] is
    // upper_bound(hi) - lower_bound(lo).
    let columns: Vec<Vec<f64>> = (0..t)
        .map(|k| {
            let mut col: Vec<f64> = curves.iter().map(|c| c[k]).collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();

    let row = |i: usize| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for j in i + 1..n {
            let mut inside = 0u64;
            for (k, col) in columns.iter().enumerate() {
                let (a, b) = (curves[i][k], curves[j][k]);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let below_lo = col.partition_point(|v| *v < lo);
                let up_to_hi = col.partition_point(|v| *v <= hi);
                // Both members of the pair lie in their own band.
                inside += (up_to_hi - below_lo - 2) as u64;
            }
            out[j] = norm.normalize(inside, n, t);
        }
        out
    };

    let upper: Vec<Vec<f64>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| MetricError::Invariant(e.to_string()))?;
        pool.install(|| (0..n).into_par_iter().map(row).collect())
    } else {
        (0..n).map(row).collect()
    };

    let mut values = vec![0.0; n * n];
    for (i, r) in upper.iter().enumerate() {
        for j in i + 1..n {
            values[i * n + j] = r[j];
            values[j * n + i] = r[j];
        }
    }
    DistanceMatrix::new(labels.to_vec(), values, MetricKind::CurveBand)
}

fn mode_by<T: Copy>(mut values: Vec<T>, cmp: impl Fn(&T, &T) -> Ordering) -> Option<T> {
    values.sort_by(&cmp);
    let mut best: Option<(T, usize)> = None;
    let mut i = 0;
    while i < values.len() {
        let mut j = i + 1;
        while j < values.len() && cmp(&values[i], &values[j]) == Ordering::Equal {
            j += 1;
        }
        // Strictly greater keeps the smallest value among equally common ones.
        if best.is_none_or(|(_, count)| j - i > count) {
            best = Some((values[i], j - i));
        }
        i = j;
    }
    best.map(|(v, _)| v)
}

/// One location value per stop: the most common global sequence number,
/// cumulative distance and (lat, lon) pair over its events, ties to the
/// smallest value. Stops may be recorded at several route positions when
/// they are served by more than one variation.
pub fn canonical_location_values(events: &[StopEvent]) -> BTreeMap<String, StopInfo> {
    let mut by_stop: BTreeMap<&str, Vec<&StopEvent>> = BTreeMap::new();
    for e in events {
        by_stop.entry(e.stop_id.as_str()).or_default().push(e);
    }
    by_stop
        .into_iter()
        .map(|(stop, evs)| {
            let seq = mode_by(evs.iter().map(|e| e.global_seq).collect(), Ord::cmp).unwrap_or(1);
            let dist = mode_by(evs.iter().map(|e| e.cum_distance).collect(), f64::total_cmp).unwrap_or(0.0);
            let (lat, lon) = mode_by(evs.iter().map(|e| (e.lat, e.lon)).collect(), |a, b| {
                a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
            })
            .unwrap_or((0.0, 0.0));
            let mut names: Vec<&str> = evs.iter().map(|e| e.stop_name.as_str()).collect();
            names.sort_unstable();
            let name = mode_by(names, Ord::cmp).unwrap_or_default();
            let info = StopInfo {
                stop_id: stop.to_string(),
                stop_name: name.to_string(),
                canonical_global_seq: seq,
                canonical_cum_distance: dist,
                canonical_lat: lat,
                canonical_lon: lon,
                total_boardings: evs.iter().map(|e| e.boardings.max(0) as u64).sum(),
                total_alightings: evs.iter().map(|e| e.alightings.max(0) as u64).sum(),
            };
            (stop.to_string(), info)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeoMode {
    /// Euclidean distance on raw (lon, lat) degrees.
    #[default]
    PlanarDegrees,
    /// Great-circle distance in meters.
    HaversineMeters,
}

const EARTH_RADIUS_M: f64 = 6_371_008.8;

fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

pub fn location_distance_matrix(infos: &[StopInfo], kind: MetricKind) -> Result<DistanceMatrix, MetricError> {
    location_distance_matrix_with(infos, kind, GeoMode::default())
}

pub fn location_distance_matrix_with(
    infos: &[StopInfo],
    kind: MetricKind,
    geo: GeoMode,
) -> Result<DistanceMatrix, MetricError> {
    let d: Box<dyn Fn(&StopInfo, &StopInfo) -> f64> = match kind {
        MetricKind::SeqNumber => Box::new(|a, b| (a.canonical_global_seq - b.canonical_global_seq).abs() as f64),
        MetricKind::TravelDistance => Box::new(|a, b| (a.canonical_cum_distance - b.canonical_cum_distance).abs()),
        MetricKind::Geographic => match geo {
            GeoMode::PlanarDegrees => Box::new(|a, b| {
                (a.canonical_lon - b.canonical_lon).hypot(a.canonical_lat - b.canonical_lat)
            }),
            GeoMode::HaversineMeters => Box::new(|a, b| {
                haversine(a.canonical_lat, a.canonical_lon, b.canonical_lat, b.canonical_lon)
            }),
        },
        other => {
            return Err(MetricError::UnknownMetric(format!("{other} is not a location metric")));
        }
    };
    let n = infos.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = d(&infos[i], &infos[j]);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    let labels = infos.iter().map(|s| s.stop_id.clone()).collect();
    DistanceMatrix::new(labels, values, kind)
}

/// Relabels the matrix so that new index `i` holds old index `perm[i]`.
pub fn reorder(matrix: &DistanceMatrix, perm: &[usize]) -> Result<DistanceMatrix, MetricError> {
    let n = matrix.len();
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(MetricError::NotAPermutation(n));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(MetricError::NotAPermutation(n));
        }
    }
    let labels = perm.iter().map(|&p| matrix.labels[p].clone()).collect();
    let values = perm
        .iter()
        .flat_map(|&pi| perm.iter().map(move |&pj| matrix.get(pi, pj)))
        .collect();
    Ok(DistanceMatrix {
        labels,
        values,
        metric: matrix.metric,
    })
}

/// Stops in the order a representative trip of `variation_id` visits them.
///
/// A trip is one `(trip_id, service_date)` run. The representative is the
/// run with the most events, ties to the smallest trip id and then the
/// earliest date.
pub fn variation_order(events: &[StopEvent], variation_id: &str) -> Result<Vec<String>, MetricError> {
    let mut runs: BTreeMap<(&str, chrono::NaiveDate), Vec<&StopEvent>> = BTreeMap::new();
    for e in events.iter().filter(|e| e.variation_id == variation_id) {
        runs.entry((e.trip_id.as_str(), e.service_date)).or_default().push(e);
    }
    // First run of maximal size in (trip_id, date) order.
    let mut best: Option<&Vec<&StopEvent>> = None;
    for run in runs.values() {
        if best.is_none_or(|b| run.len() > b.len()) {
            best = Some(run);
        }
    }
    let run = best.ok_or_else(|| MetricError::UnknownVariation(variation_id.to_string()))?;
    let mut ordered: Vec<&StopEvent> = run.clone();
    ordered.sort_by_key(|e| e.event_time);
    let mut out: Vec<String> = Vec::new();
    for e in ordered {
        if !out.contains(&e.stop_id) {
            out.push(e.stop_id.clone());
        }
    }
    Ok(out)
}

/// Index permutation that orders `matrix` by the given stop order; stops
/// missing from `order` follow in their current relative order.
pub fn permutation_for(matrix: &DistanceMatrix, order: &[String]) -> Vec<usize> {
    let pos: HashMap<&str, usize> = matrix.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut perm: Vec<usize> = Vec::with_capacity(matrix.len());
    let mut used = vec![false; matrix.len()];
    for stop in order {
        if let Some(&i) = pos.get(stop.as_str()) {
            if !used[i] {
                used[i] = true;
                perm.push(i);
            }
        }
    }
    perm.extend((0..matrix.len()).filter(|&i| !used[i]));
    perm
}

/// Permutation sorting the matrix by canonical global sequence number,
/// ties by stop id. Stops without info go last.
pub fn global_seq_permutation(matrix: &DistanceMatrix, infos: &BTreeMap<String, StopInfo>) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..matrix.len()).collect();
    perm.sort_by_key(|&i| {
        let label = &matrix.labels[i];
        (infos.get(label).map_or(i64::MAX, |s| s.canonical_global_seq), label.clone())
    });
    perm
}
