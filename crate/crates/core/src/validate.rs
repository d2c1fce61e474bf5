//! Pattern checks recomputed from an event log, gated by config tolerances.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::case_engine::SeverityTable;
use crate::error::{Error, Result};
use crate::io::{pattern2, pattern3, Pattern2Row};
use crate::pipeline::ForecastSet;
use crate::seirs::SeirsState;
use crate::sim::{EventKind, EventLog};
use crate::types::CountyId;
use crate::visitation::VisitationParams;
use crate::workforce::pattern4_report;

/// Gate tolerances. Defaults follow the acceptance criteria. Proportion
/// checks whose sample is below the stated minimum widen to the `z`-sigma
/// sampling bound when that is larger than the absolute tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationTolerances {
    pub pattern1_sigma: f64,
    pub pattern2_abs: f64,
    pub pattern2_min_cases: u64,
    pub reported_abs: f64,
    pub reported_min_cases: u64,
    pub visitor_share_abs: f64,
    pub visitor_share_min_residents: u64,
    pub visit_rate_sigma: f64,
    pub pattern4_mean_min: f64,
    pub pattern4_mean_max: f64,
    pub pattern4_std_max: f64,
    pub seirs_conservation: f64,
    /// Sigma multiple for the widened small-sample bounds.
    pub small_sample_sigma: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self {
            pattern1_sigma: 3.0,
            pattern2_abs: 0.01,
            pattern2_min_cases: 5000,
            reported_abs: 0.01,
            reported_min_cases: 10_000,
            visitor_share_abs: 0.02,
            visitor_share_min_residents: 10_000,
            visit_rate_sigma: 3.0,
            pattern4_mean_min: 0.98,
            pattern4_mean_max: 1.02,
            pattern4_std_max: 0.06,
            seirs_conservation: 1e-9,
            small_sample_sigma: 3.0,
        }
    }
}

impl ValidationTolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pattern1_sigma", self.pattern1_sigma),
            ("pattern2_abs", self.pattern2_abs),
            ("reported_abs", self.reported_abs),
            ("visitor_share_abs", self.visitor_share_abs),
            ("visit_rate_sigma", self.visit_rate_sigma),
            ("pattern4_std_max", self.pattern4_std_max),
            ("seirs_conservation", self.seirs_conservation),
            ("small_sample_sigma", self.small_sample_sigma),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("validation.{name} must be positive")));
            }
        }
        if !(self.pattern4_mean_min <= self.pattern4_mean_max) {
            return Err(Error::config("validation.pattern4_mean_min exceeds pattern4_mean_max"));
        }
        Ok(())
    }

    fn proportion_bound(&self, abs: f64, min_n: u64, p: f64, n: u64) -> f64 {
        if n >= min_n || n == 0 {
            abs
        } else {
            abs.max(self.small_sample_sigma * binomial_sd(p, n))
        }
    }
}

/// Standard deviation of a binomial proportion.
pub fn binomial_sd(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub pattern: &'static str,
    pub check: String,
    pub observed: f64,
    pub expected: f64,
    /// Allowed absolute deviation, or the upper bound for one-sided checks.
    pub tolerance: f64,
    pub n: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rows: Vec<CheckRow>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Pass or fail per pattern, in first-seen order.
    pub fn by_pattern(&self) -> Vec<(&'static str, bool)> {
        let mut out: Vec<(&'static str, bool)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(p, _)| *p == r.pattern) {
                Some(entry) => entry.1 &= r.pass,
                None => out.push((r.pattern, r.pass)),
            }
        }
        out
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:<44} {:>12} {:>12} {:>10} {:>8}  result", "pattern", "check", "observed", "expected", "tol", "n")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<10} {:<44} {:>12.5} {:>12.5} {:>10.5} {:>8}  {}",
                r.pattern,
                r.check,
                r.observed,
                r.expected,
                r.tolerance,
                r.n,
                if r.pass { "PASS" } else { "FAIL" }
            )?;
        }
        for (p, ok) in self.by_pattern() {
            writeln!(f, "{p}: {}", if ok { "PASS" } else { "FAIL" })?;
        }
        Ok(())
    }
}

/// Per-county Pattern 1 totals: modeled cases against the blocked-exposure
/// expectation `sum (n - shortfall)(1 - q)` with binomial variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pattern1Total {
    pub county: CountyId,
    pub modeled: u64,
    pub expected: f64,
    pub sd: f64,
}

pub fn pattern1_totals(log: &EventLog, counties: &[CountyId]) -> Vec<Pattern1Total> {
    // (day, county) -> (exposures, block share, shortfall)
    let mut quota: BTreeMap<(u32, CountyId), (f64, f64, f64)> = BTreeMap::new();
    let mut modeled: BTreeMap<CountyId, u64> = BTreeMap::new();
    for e in log.iter() {
        let Some(c) = e.county else { continue };
        match e.kind {
            EventKind::ExposureQuota => {
                let q = quota.entry((e.day, c)).or_default();
                q.0 += e.count.unwrap_or(0) as f64;
                q.1 = e.aux.unwrap_or(0.0);
            }
            EventKind::ExposureShortfall => quota.entry((e.day, c)).or_default().2 += e.count.unwrap_or(0) as f64,
            EventKind::Case => *modeled.entry(c).or_default() += 1,
            _ => {}
        }
    }
    counties
        .iter()
        .map(|&c| {
            let (mut mean, mut var) = (0.0, 0.0);
            for (_, &(n, q, short)) in quota.iter().filter(|((_, k), _)| *k == c) {
                let drawn = (n - short).max(0.0);
                mean += drawn * (1.0 - q);
                var += drawn * q * (1.0 - q);
            }
            Pattern1Total {
                county: c,
                modeled: modeled.get(&c).copied().unwrap_or(0),
                expected: mean,
                sd: var.sqrt(),
            }
        })
        .collect()
}

/// Largest `|S+E+I+R - 1|` over every county-day of the trajectories.
pub fn conservation_error(trajectories: &[Vec<SeirsState>]) -> f64 {
    trajectories
        .iter()
        .flatten()
        .map(|s| (s.total() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Everything a validation pass reads besides the log.
pub struct ValidationContext<'a> {
    pub counties: Vec<CountyId>,
    pub horizon: u32,
    pub severity: &'a SeverityTable,
    pub visitation: &'a VisitationParams,
    pub pbj_hours: BTreeMap<u32, f64>,
    pub forecast: Option<&'a ForecastSet>,
    pub tolerances: &'a ValidationTolerances,
}

pub fn validate_run(log: &EventLog, ctx: &ValidationContext) -> ValidationReport {
    let tol = ctx.tolerances;
    let mut rows = Vec::new();

    for t in pattern1_totals(log, &ctx.counties) {
        let bound = tol.pattern1_sigma * t.sd;
        let diff = (t.modeled as f64 - t.expected).abs();
        // With nothing blocked the count is deterministic up to rounding.
        let pass = if t.sd == 0.0 { diff < 1e-6 } else { diff <= bound };
        rows.push(CheckRow {
            pattern: "pattern1",
            check: format!("county {} total cases", t.county),
            observed: t.modeled as f64,
            expected: t.expected,
            tolerance: bound,
            n: ctx.horizon as u64,
            pass,
        });
    }

    let p2 = pattern2(log, ctx.severity);
    for block in p2.chunks(4) {
        let n: u64 = block.iter().map(|r| r.modeled_cases).sum();
        if n == 0 {
            continue;
        }
        for r in block {
            rows.push(pattern2_row(r, n, tol));
        }
    }

    let cases: Vec<_> = log.of_kind(EventKind::Case).collect();
    let n = cases.len() as u64;
    if n > 0 {
        let reported = cases.iter().filter(|e| e.reported == Some(true)).count() as f64 / n as f64;
        let target = ctx.severity.reported_fraction;
        let bound = tol.proportion_bound(tol.reported_abs, tol.reported_min_cases, target, n);
        rows.push(CheckRow {
            pattern: "pattern2",
            check: "reported fraction".into(),
            observed: reported,
            expected: target,
            tolerance: bound,
            n,
            pass: (reported - target).abs() <= bound,
        });
    }

    for r in pattern3(log, ctx.visitation) {
        match r.metric {
            "visitor_count_share" if r.n > 0 => {
                let bound = tol.proportion_bound(tol.visitor_share_abs, tol.visitor_share_min_residents, r.target, r.n);
                rows.push(CheckRow {
                    pattern: "pattern3",
                    check: format!("residents with {} visitors", r.category),
                    observed: r.modeled,
                    expected: r.target,
                    tolerance: bound,
                    n: r.n,
                    pass: (r.modeled - r.target).abs() <= bound,
                });
            }
            "daily_selection_rate" if r.n > 0 => {
                let bound = tol.visit_rate_sigma * binomial_sd(r.target, r.n);
                rows.push(CheckRow {
                    pattern: "pattern3",
                    check: format!("{} daily visit rate", r.category),
                    observed: r.modeled,
                    expected: r.target,
                    tolerance: bound,
                    n: r.n,
                    pass: (r.modeled - r.target).abs() <= bound,
                });
            }
            _ => {}
        }
    }

    let p4 = pattern4_report(log, &ctx.pbj_hours, ctx.horizon);
    let facilities = p4.rows.iter().filter(|r| r.ratio.is_some()).count() as u64;
    if facilities > 0 {
        let mid = (tol.pattern4_mean_min + tol.pattern4_mean_max) / 2.0;
        rows.push(CheckRow {
            pattern: "pattern4",
            check: "mean hours ratio".into(),
            observed: p4.mean,
            expected: mid,
            tolerance: tol.pattern4_mean_max - mid,
            n: facilities,
            pass: (tol.pattern4_mean_min..=tol.pattern4_mean_max).contains(&p4.mean),
        });
        rows.push(CheckRow {
            pattern: "pattern4",
            check: "std hours ratio".into(),
            observed: p4.std,
            expected: 0.0,
            tolerance: tol.pattern4_std_max,
            n: facilities,
            pass: p4.std <= tol.pattern4_std_max,
        });
    }

    if let Some(f) = ctx.forecast {
        if !f.trajectories.is_empty() {
            let err = conservation_error(&f.trajectories);
            rows.push(CheckRow {
                pattern: "seirs",
                check: "S+E+I+R = 1".into(),
                observed: err,
                expected: 0.0,
                tolerance: tol.seirs_conservation,
                n: f.trajectories.iter().map(|t| t.len() as u64).sum(),
                pass: err <= tol.seirs_conservation,
            });
        }
    }

    ValidationReport { rows }
}

fn pattern2_row(r: &Pattern2Row, n: u64, tol: &ValidationTolerances) -> CheckRow {
    let bound = tol.proportion_bound(tol.pattern2_abs, tol.pattern2_min_cases, r.target_proportion, n);
    CheckRow {
        pattern: "pattern2",
        check: format!("{} age {} {}", r.vaccination, r.age, r.covid_state),
        observed: r.modeled_proportion,
        expected: r.target_proportion,
        tolerance: bound,
        n,
        pass: (r.modeled_proportion - r.target_proportion).abs() <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Event;

    fn ctx<'a>(sev: &'a SeverityTable, vis: &'a VisitationParams, tol: &'a ValidationTolerances) -> ValidationContext<'a> {
        ValidationContext {
            counties: vec![1],
            horizon: 2,
            severity: sev,
            visitation: vis,
            pbj_hours: BTreeMap::new(),
            forecast: None,
            tolerances: tol,
        }
    }

    #[test]
    fn exact_when_nothing_blocked() {
        let mut log = EventLog::new();
        for day in 0..2 {
            log.push(Event::new(day, EventKind::ExposureQuota).county(1).count(2).aux(0.0).value(2.0));
            for _ in 0..2 {
                log.push(Event::new(day, EventKind::Case).county(1));
            }
        }
        let t = pattern1_totals(&log, &[1])[0];
        assert_eq!((t.modeled, t.expected, t.sd), (4, 4.0, 0.0));
        let mut sev = SeverityTable::default();
        sev.reported_unvaccinated[2] = Some([0.05, 0.85, 0.075, 0.025]);
        let (vis, tol) = (VisitationParams::default(), ValidationTolerances::default());
        let report = validate_run(&log, &ctx(&sev, &vis, &tol));
        assert!(report.rows.iter().filter(|r| r.pattern == "pattern1").all(|r| r.pass));

        log.push(Event::new(1, EventKind::Case).county(1));
        let report = validate_run(&log, &ctx(&sev, &vis, &tol));
        assert!(!report.rows.iter().find(|r| r.pattern == "pattern1").unwrap().pass);
        assert!(report.to_string().contains("pattern1: FAIL"));
    }

    #[test]
    fn shortfall_and_blocking_enter_expectation() {
        let mut log = EventLog::new();
        log.push(Event::new(0, EventKind::ExposureQuota).county(1).count(100).aux(0.2));
        log.push(Event::new(0, EventKind::ExposureShortfall).county(1).count(20));
        let t = pattern1_totals(&log, &[1])[0];
        assert!((t.expected - 64.0).abs() < 1e-9);
        assert!((t.sd - (80.0f64 * 0.16).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn small_samples_widen() {
        let tol = ValidationTolerances::default();
        assert_eq!(tol.proportion_bound(0.01, 5000, 0.5, 5000), 0.01);
        assert!(tol.proportion_bound(0.01, 5000, 0.5, 100) > 0.1);
    }

    #[test]
    fn tolerances_reject_nonsense() {
        let t = ValidationTolerances {
            pattern4_mean_min: 1.1,
            ..Default::default()
        };
        assert!(t.validate().is_err());
    }
}
