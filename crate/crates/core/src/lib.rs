//! Diurnal ridership profiles for bus stops from automated passenger
//! counts: ingestion and cohort filtering, per-stop hourly curves, five stop
//! dissimilarity measures, k-means and k-medoids clustering, rank-based
//! comparison of distance matrices, a planted-structure data generator and
//! heatmap rendering.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apc;
pub mod clustering;
pub mod compare;
pub mod ingest;
pub mod metrics;
mod numfmt;
pub mod pipeline;
pub mod profiles;
pub mod render;
pub mod rng;
pub mod synth;

pub use apc::{validate_event, Direction, EventError, ServicePeriod, StopEvent, StopInfo};
pub use clustering::{adjusted_rand_index, kmeans, kmedoids, ClusterError, ClusterResult};
pub use compare::{correlation_matrix, rank_correlation, spearman_rho, CompareError, CorrelationMatrix};
pub use ingest::{filter_events, parse_events, FilterCriteria, IngestError};
pub use metrics::{DistanceMatrix, MetricError, MetricKind};
pub use numfmt::significant;
pub use profiles::{DiurnalProfile, Measure, ProfileError, ProportionProfile};
pub use render::{heatmap, HeatmapSpec, ImageFormat, RenderError};
pub use synth::{generate, SynthConfig, SynthError, SynthOutput};

use thiserror::Error;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
