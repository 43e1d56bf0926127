//! Glue between stages: events to labeled curve sets.

use std::collections::BTreeMap;

use crate::apc::StopEvent;
use crate::profiles::{eligible_stops, stop_diurnal_profiles, to_proportions, Measure, ProfileError, ProfileRow};

/// Default minimum study-period total for a stop to enter curve analysis.
pub const DEFAULT_MIN_TOTAL: f64 = 50.0;

/// Stop ids and their curves, aligned by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveSet {
    pub labels: Vec<String>,
    pub curves: Vec<Vec<f64>>,
}

impl CurveSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl From<&[ProfileRow]> for CurveSet {
    fn from(rows: &[ProfileRow]) -> Self {
        Self {
            labels: rows.iter().map(|r| r.stop_id.clone()).collect(),
            curves: rows.iter().map(|r| r.values.to_vec()).collect(),
        }
    }
}

/// Profiles of the eligible stops, sorted by stop id, as count rows or as
/// proportion rows.
pub fn profile_rows(
    events: &[StopEvent],
    measure: Measure,
    min_total: f64,
    proportions: bool,
) -> Result<Vec<ProfileRow>, ProfileError> {
    let profiles = stop_diurnal_profiles(events, measure);
    let keep = eligible_stops(&profiles, min_total);
    let selected: BTreeMap<_, _> = profiles.into_iter().filter(|(id, _)| keep.contains(id)).collect();
    selected
        .values()
        .map(|p| {
            if proportions {
                to_proportions(p).map(|pp| ProfileRow::from(&pp))
            } else {
                Ok(ProfileRow::from(p))
            }
        })
        .collect()
}

/// Proportion curves of the eligible stops.
pub fn proportion_curves(events: &[StopEvent], measure: Measure, min_total: f64) -> Result<CurveSet, ProfileError> {
    Ok(CurveSet::from(profile_rows(events, measure, min_total, true)?.as_slice()))
}
