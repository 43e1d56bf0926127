//! Heatmaps of distance matrices (binary PGM and SVG) and curve exports.
//!
//! Off-diagonal entries are min-max scaled to gray levels 0..=255, with the
//! smallest distance black. The diagonal is black. Levels are rounded half
//! to even. With `invert = false` every level `g` becomes `255 - g`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::metrics::{reorder, DistanceMatrix, MetricError};
use crate::profiles::{ProportionProfile, HOURS};

/// Level used for every off-diagonal cell when the scale is undefined.
pub const MID_GRAY: u8 = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("stop `{0}` has no profile")]
    UnknownStop(String),
    #[error("invalid scale [{0}, {1}]")]
    BadScale(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Svg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSpec {
    pub matrix: DistanceMatrix,
    /// Row/column order as indices into the matrix; `None` keeps it.
    pub permutation: Option<Vec<usize>>,
    pub format: ImageFormat,
    /// Darker means smaller when true.
    pub invert: bool,
    /// Fixed `(min, max)` for scaling, e.g. shared across several matrices.
    /// Defaults to the matrix's own off-diagonal range.
    pub scale: Option<(f64, f64)>,
}

impl HeatmapSpec {
    pub fn new(matrix: DistanceMatrix, format: ImageFormat) -> Self {
        Self {
            matrix,
            permutation: None,
            format,
            invert: true,
            scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RenderWarning {
    /// All off-diagonal values were equal; cells were drawn mid-gray.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub width: usize,
    /// Row-major gray levels.
    pub levels: Vec<u8>,
    pub bytes: Vec<u8>,
    pub warning: Option<RenderWarning>,
}

/// Round half to even on a nonnegative value.
fn round_half_even(x: f64) -> f64 {
    let floor = x.floor();
    let diff = x - floor;
    if diff > 0.5 || (diff == 0.5 && floor % 2.0 != 0.0) {
        floor + 1.0
    } else {
        floor
    }
}

fn gray_levels(matrix: &DistanceMatrix, scale: Option<(f64, f64)>, invert: bool) -> Result<(Vec<u8>, bool), RenderError> {
    let n = matrix.len();
    let (lo, hi) = match scale {
        Some((lo, hi)) => {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(RenderError::BadScale(lo, hi));
            }
            (lo, hi)
        }
        None => matrix
            .off_diagonal()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v))),
    };
    let degenerate = !(hi > lo);
    let mut levels = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            let g = if i == j {
                0
            } else if degenerate {
                MID_GRAY
            } else {
                let t = ((matrix.get(i, j) - lo) / (hi - lo)).clamp(0.0, 1.0);
                round_half_even(255.0 * t) as u8
            };
            levels[i * n + j] = if invert { g } else { 255 - g };
        }
    }
    Ok((levels, degenerate))
}

fn encode_pgm(width: usize, levels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {width}\n255\n").into_bytes();
    out.extend_from_slice(levels);
    out
}

fn encode_svg(labels: &[String], levels: &[u8]) -> Vec<u8> {
    let n = labels.len();
    let cell = 10;
    let size = n * cell;
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">"
    );
    for i in 0..n {
        for j in 0..n {
            let g = levels[i * n + j];
            let _ = writeln!(
                s,
                "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({g},{g},{g})\"><title>{} / {}</title></rect>",
                j * cell,
                i * cell,
                escape(&labels[i]),
                escape(&labels[j]),
            );
        }
    }
    s.push_str("</svg>\n");
    s.into_bytes()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn heatmap(spec: &HeatmapSpec) -> Result<Heatmap, RenderError> {
    let matrix = match &spec.permutation {
        Some(p) => reorder(&spec.matrix, p)?,
        None => spec.matrix.clone(),
    };
    let (levels, degenerate) = gray_levels(&matrix, spec.scale, spec.invert)?;
    let bytes = match spec.format {
        ImageFormat::Pgm => encode_pgm(matrix.len(), &levels),
        ImageFormat::Svg => encode_svg(matrix.labels(), &levels),
    };
    Ok(Heatmap {
        width: matrix.len(),
        levels,
        bytes,
        warning: degenerate.then_some(RenderWarning::Degenerate),
    })
}

/// `stop_id,position_index,h00..h23` rows in the given order. The position
/// index is the 0-based rank in `ordering`, for coloring by route position.
pub fn curve_export(profiles: &BTreeMap<String, ProportionProfile>, ordering: &[String]) -> Result<Vec<u8>, RenderError> {
    let mut csv = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["stop_id".to_string(), "position_index".to_string()];
    header.extend((0..HOURS).map(|h| format!("h{h:02}")));
    csv.write_record(&header).expect("in-memory write");
    for (pos, stop) in ordering.iter().enumerate() {
        let p = profiles.get(stop).ok_or_else(|| RenderError::UnknownStop(stop.clone()))?;
        let mut rec = vec![stop.clone(), pos.to_string()];
        rec.extend(p.proportions.iter().map(|v| v.to_string()));
        csv.write_record(&rec).expect("in-memory write");
    }
    Ok(csv.into_inner().expect("in-memory flush"))
}
