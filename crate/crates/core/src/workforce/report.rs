use std::collections::BTreeMap;

use serde::Serialize;

use crate::sim::{EventKind, EventLog};
use crate::types::FacilityId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pattern4Row {
    pub facility_id: FacilityId,
    pub target_hours: f64,
    /// Average attended hours per simulated day.
    pub simulated_hours: f64,
    pub ratio: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pattern4Report {
    pub rows: Vec<Pattern4Row>,
    pub mean: f64,
    pub std: f64,
    pub days: u32,
}

/// Ratio of simulated average daily hours to target hours per nursing home.
/// `targets` maps facility id to target daily hours. Facilities with zero
/// target hours get no ratio and are left out of the summary.
pub fn pattern4_report(log: &EventLog, targets: &BTreeMap<FacilityId, f64>, days: u32) -> Pattern4Report {
    let mut hours: BTreeMap<FacilityId, f64> = BTreeMap::new();
    for e in log.of_kind(EventKind::Attendance) {
        if let (Some(f), Some(h)) = (e.facility, e.value) {
            *hours.entry(f).or_default() += h;
        }
    }
    let days_f = f64::from(days.max(1));
    let rows: Vec<Pattern4Row> = targets
        .iter()
        .map(|(&f, &target)| {
            let simulated = hours.get(&f).copied().unwrap_or(0.0) / days_f;
            let (ratio, note) = if target > 0.0 {
                (Some(simulated / target), String::new())
            } else {
                (None, "excluded: zero target hours".to_string())
            };
            Pattern4Row {
                facility_id: f,
                target_hours: target,
                simulated_hours: simulated,
                ratio,
                note,
            }
        })
        .collect();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let (mean, std) = mean_std(&ratios);
    Pattern4Report { rows, mean, std, days }
}

/// Mean and population standard deviation; NaN for an empty slice.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
