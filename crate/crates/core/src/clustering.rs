//! k-means over curve vectors, PAM k-medoids over a precomputed distance
//! matrix, and the adjusted Rand index for comparing partitions.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::metrics::DistanceMatrix;
use crate::numfmt::significant;
use crate::rng::Pcg32;

/// Number of clusters used for stop profiles unless overridden.
pub const DEFAULT_K: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("k = {k} is out of range for {n} points")]
    BadK { k: usize, n: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cluster CSV line {line}: {reason}")]
    Format { line: u64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    KMeans,
    KMedoids,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KMeans => "kmeans",
            Algorithm::KMedoids => "kmedoids",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub algorithm: Algorithm,
    pub labels: Vec<String>,
    /// Cluster index per label, aligned with `labels`.
    pub assignment: Vec<usize>,
    /// k-means centers; empty for k-medoids.
    pub centers: Vec<Vec<f64>>,
    /// k-medoids medoids, cluster `c` is represented by `medoid_ids[c]`;
    /// empty for k-means.
    pub medoid_ids: Vec<String>,
    pub objective: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Objective after each step: every Lloyd assignment for k-means, the
    /// BUILD result and every accepted swap for k-medoids.
    pub history: Vec<f64>,
}

impl ClusterResult {
    pub fn k(&self) -> usize {
        self.centers.len().max(self.medoid_ids.len())
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// `stop_id,cluster` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> io::Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["stop_id", "cluster"])?;
        for (l, c) in self.labels.iter().zip(&self.assignment) {
            csv.write_record([l.as_str(), &c.to_string()])?;
        }
        csv.flush()
    }

    /// Single metadata line written next to the assignment CSV.
    pub fn metadata_line(&self) -> String {
        format!(
            "algo={},k={},seed={},objective={},iterations={}\n",
            self.algorithm.name(),
            self.k(),
            self.seed,
            significant(self.objective, 12),
            self.iterations
        )
    }
}

/// Reads a `stop_id,<label>` CSV (cluster assignments or ground truth).
pub fn read_partition_csv<R: Read>(reader: R) -> Result<Vec<(String, String)>, ClusterError> {
    let mut csv = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| ClusterError::Format {
            line,
            reason: e.to_string(),
        })?;
        match (rec.get(0), rec.get(1)) {
            (Some(id), Some(label)) => out.push((id.to_string(), label.to_string())),
            _ => {
                return Err(ClusterError::Format {
                    line,
                    reason: "expected two columns".into(),
                })
            }
        }
    }
    Ok(out)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center, ties to the lowest index.
fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Draws one index with probability proportional to `weights`.
fn sample_weighted(weights: &[f64], total: f64, rng: &mut Pcg32) -> usize {
    let target = rng.next_f64() * total;
    let mut acc = 0.0;
    let mut pick = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        pick = Some(i);
        if acc > target {
            break;
        }
    }
    pick.expect("positive total has a positive entry")
}

/// Greedy k-means++ seeding: the first center is uniform; each further
/// center is the best of `2 + floor(ln k)` D²-weighted candidates, judged by
/// the resulting total squared distance (ties to the earliest draw).
fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut Pcg32) -> Vec<Vec<f64>> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut chosen = vec![false; n];
    let first = rng.below(n);
    chosen[first] = true;
    let mut centers = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let (next, next_d2) = if total > 0.0 {
            let mut best: Option<(usize, Vec<f64>, f64)> = None;
            for _ in 0..trials {
                let cand = sample_weighted(&d2, total, rng);
                let updated: Vec<f64> = points
                    .iter()
                    .zip(&d2)
                    .map(|(p, &d)| d.min(sq_dist(p, &points[cand])))
                    .collect();
                let potential: f64 = updated.iter().sum();
                if best.as_ref().is_none_or(|(_, _, b)| potential < *b) {
                    best = Some((cand, updated, potential));
                }
            }
            let (cand, updated, _) = best.expect("at least one trial");
            (cand, updated)
        } else {
            // Fewer distinct points than k: take the lowest unused index.
            let i = (0..n).find(|&i| !chosen[i]).expect("k <= n");
            (i, d2.clone())
        };
        chosen[next] = true;
        centers.push(points[next].clone());
        d2 = next_d2;
    }
    centers
}

/// Gives every empty cluster a singleton: the point farthest from its
/// current center among clusters that can spare one.
fn repair_empty(points: &[Vec<f64>], centers: &mut [Vec<f64>], assignment: &mut [usize]) {
    let k = centers.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if sizes[assignment[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centers[assignment[i]]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("k <= n leaves a cluster with two members");
        centers[empty] = points[i].clone();
        assignment[i] = empty;
    }
}

fn objective(points: &[Vec<f64>], centers: &[Vec<f64>], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| sq_dist(p, &centers[c]))
        .sum()
}

/// Lloyd's algorithm from a greedy k-means++ start.
///
/// Each iteration recomputes centers as cluster means and then reassigns
/// points to their nearest center (ties to the lowest index); empty clusters
/// are refilled with the farthest point. The loop stops when the assignment
/// no longer changes or after `max_iter` iterations.
pub fn kmeans(
    labels: &[String],
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterResult, ClusterError> {
    let n = points.len();
    if labels.len() != n {
        return Err(ClusterError::LengthMismatch(labels.len(), n));
    }
    if k < 1 || k > n {
        return Err(ClusterError::BadK { k, n });
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(ClusterError::LengthMismatch(dim, p.len()));
    }

    let mut rng = Pcg32::new(seed);
    let mut centers = kmeans_pp(points, k, &mut rng);
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    repair_empty(points, &mut centers, &mut assignment);
    let mut history = vec![objective(points, &centers, &assignment)];

    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        // Means are accumulated as offsets from the previous center so that a
        // cluster of identical points keeps its center bit for bit.
        let mut offsets = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for ((s, x), m) in offsets[c].iter_mut().zip(p).zip(&centers[c]) {
                *s += x - m;
            }
        }
        for ((center, offset), &count) in centers.iter_mut().zip(offsets).zip(&counts) {
            for (m, s) in center.iter_mut().zip(offset) {
                *m += s / count as f64;
            }
        }
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
        repair_empty(points, &mut centers, &mut next);
        history.push(objective(points, &centers, &next));
        if next == assignment {
            break;
        }
        assignment = next;
    }

    Ok(ClusterResult {
        algorithm: Algorithm::KMeans,
        labels: labels.to_vec(),
        objective: objective(points, &centers, &assignment),
        assignment,
        centers,
        medoid_ids: Vec::new(),
        iterations,
        seed,
        history,
    })
}

/// Assigns every point to its nearest medoid (ties to the lowest medoid
/// position); a medoid always belongs to its own cluster.
fn assign_to_medoids(matrix: &DistanceMatrix, medoids: &[usize]) -> (Vec<usize>, f64) {
    let n = matrix.len();
    let mut assignment = vec![0; n];
    let mut cost = 0.0;
    for (i, slot) in assignment.iter_mut().enumerate() {
        if let Some(own) = medoids.iter().position(|&m| m == i) {
            *slot = own;
            continue;
        }
        let mut best = (0, f64::INFINITY);
        for (c, &m) in medoids.iter().enumerate() {
            let d = matrix.get(i, m);
            if d < best.1 {
                best = (c, d);
            }
        }
        *slot = best.0;
        cost += best.1;
    }
    (assignment, cost)
}

fn medoid_cost(matrix: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..matrix.len())
        .map(|i| medoids.iter().map(|&m| matrix.get(i, m)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Partitioning Around Medoids on a precomputed matrix.
///
/// BUILD adds medoids greedily, each time the point that lowers the total
/// cost most (ties to the lowest index). SWAP then evaluates every
/// (medoid, non-medoid) exchange and applies the best one while it strictly
/// lowers the cost. The algorithm is deterministic; `seed` is recorded for
/// provenance only.
pub fn kmedoids(matrix: &DistanceMatrix, k: usize, seed: u64) -> Result<ClusterResult, ClusterError> {
    let n = matrix.len();
    if k < 1 || k > n {
        return Err(ClusterError::BadK { k, n });
    }

    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];
    while medoids.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for cand in (0..n).filter(|c| !medoids.contains(c)) {
            let cost: f64 = (0..n).map(|i| nearest[i].min(matrix.get(i, cand))).sum();
            if best.is_none_or(|(_, b)| cost < b) {
                best = Some((cand, cost));
            }
        }
        let (m, _) = best.expect("k <= n");
        medoids.push(m);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(matrix.get(i, m));
        }
    }

    let mut cost = medoid_cost(matrix, &medoids);
    let mut history = vec![cost];
    let mut iterations = 0;
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        let mut trial = medoids.clone();
        for slot in 0..k {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                trial[slot] = cand;
                let c = medoid_cost(matrix, &trial);
                if c < cost && best.is_none_or(|(_, _, b)| c < b) {
                    best = Some((slot, cand, c));
                }
            }
            trial[slot] = medoids[slot];
        }
        let Some((slot, cand, c)) = best else { break };
        medoids[slot] = cand;
        cost = c;
        history.push(c);
        iterations += 1;
    }

    let (assignment, objective) = assign_to_medoids(matrix, &medoids);
    Ok(ClusterResult {
        algorithm: Algorithm::KMedoids,
        labels: matrix.labels().to_vec(),
        assignment,
        centers: Vec::new(),
        medoid_ids: medoids.iter().map(|&m| matrix.labels()[m].clone()).collect(),
        objective,
        iterations,
        seed,
        history,
    })
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two partitions given as label vectors.
///
/// When both partitions are trivial in the same way (every point in one
/// cluster, or every point alone) the index is defined as 1.
pub fn adjusted_rand_index<A, B>(a: &[A], b: &[B]) -> Result<f64, ClusterError>
where
    A: Eq + std::hash::Hash,
    B: Eq + std::hash::Hash,
{
    if a.len() != b.len() {
        return Err(ClusterError::LengthMismatch(a.len(), b.len()));
    }
    let mut table: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(a.len() as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    // Scaled by `total` so every term stays an exact integer until the
    // final division.
    let expected = sum_a * sum_b;
    let max = 0.5 * (sum_a + sum_b) * total;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index * total - expected) / (max - expected))
}
