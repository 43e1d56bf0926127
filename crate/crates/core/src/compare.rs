//! Agreement between distance metrics: Spearman's rank correlation of the
//! vectorized upper triangles of two distance matrices.
//!
//! Ranks ascend with distance and ties get the mean of the ranks they span.
//! Reversing the convention for both inputs leaves ρ unchanged.

use std::io::{self, Write};

use thiserror::Error;

use crate::metrics::{DistanceMatrix, MetricKind};
use crate::numfmt::significant;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("need at least 2 stops, got {0}")]
    TooFewStops(usize),
    #[error("cannot rank an empty vector")]
    EmptyInput,
    #[error("matrices have different labels")]
    LabelMismatch,
    #[error("rank correlation undefined: all distances in `{0}` are tied")]
    Degenerate(MetricKind),
}

/// Entries `(i, j)` with `i < j`, row-major.
pub fn upper_triangle(matrix: &DistanceMatrix) -> Result<Vec<f64>, CompareError> {
    if matrix.len() < 2 {
        return Err(CompareError::TooFewStops(matrix.len()));
    }
    Ok(matrix.off_diagonal().collect())
}

/// Ranks starting at 1 for the smallest value; ties share their mean rank.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>, CompareError> {
    if values.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let mean = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mean;
        }
        start = end;
    }
    Ok(ranks)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's ρ of two equal-length vectors: Pearson correlation of their
/// midranks. `None` when the lengths differ, the input is empty, or either
/// vector is constant.
pub fn rank_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    pearson(&average_ranks(a).ok()?, &average_ranks(b).ok()?)
}

/// ρ between the upper triangles of two matrices over the same labels.
pub fn spearman_rho(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<f64, CompareError> {
    if a.labels() != b.labels() {
        return Err(CompareError::LabelMismatch);
    }
    let (ua, ub) = (upper_triangle(a)?, upper_triangle(b)?);
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(&ua) {
        return Err(CompareError::Degenerate(a.metric()));
    }
    if constant(&ub) {
        return Err(CompareError::Degenerate(b.metric()));
    }
    rank_correlation(&ua, &ub).ok_or(CompareError::Degenerate(a.metric()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub metric_labels: Vec<MetricKind>,
    /// Row-major `m × m`.
    pub values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.metric_labels.len() + j]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> io::Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let names: Vec<&str> = self.metric_labels.iter().map(|m| m.short_name()).collect();
        let mut header = vec!["metric"];
        header.extend(&names);
        csv.write_record(&header)?;
        for (i, name) in names.iter().enumerate() {
            let mut rec = vec![name.to_string()];
            rec.extend((0..names.len()).map(|j| significant(self.get(i, j), 12)));
            csv.write_record(&rec)?;
        }
        csv.flush()
    }
}

/// Pairwise ρ between every pair of matrices, unit diagonal.
pub fn correlation_matrix(matrices: &[DistanceMatrix]) -> Result<CorrelationMatrix, CompareError> {
    let m = matrices.len();
    let mut values = vec![0.0; m * m];
    for i in 0..m {
        values[i * m + i] = 1.0;
        for j in i + 1..m {
            let rho = spearman_rho(&matrices[i], &matrices[j])?;
            values[i * m + j] = rho;
            values[j * m + i] = rho;
        }
    }
    Ok(CorrelationMatrix {
        metric_labels: matrices.iter().map(|d| d.metric()).collect(),
        values,
    })
}
