//! Reports derived from the event log and config.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::svg::line_chart;
use super::writers::{csv_bytes, write_file};
use crate::case_engine::SeverityTable;
use crate::error::Result;
use crate::sim::{EventKind, EventLog};
use crate::types::{CountyId, CovidState, Severity, AGE_GROUPS};
use crate::visitation::VisitationParams;
use crate::workforce::{pattern4_report, HcwType, Pattern4Report};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pattern1Row {
    pub county: CountyId,
    pub day: u32,
    /// Forecast infections at agent scale.
    pub expected: f64,
    pub modeled: u64,
}

/// Expected vs modeled cases per county and day.
pub fn pattern1(log: &EventLog, counties: &[CountyId], horizon: u32) -> Vec<Pattern1Row> {
    let mut expected: BTreeMap<(CountyId, u32), f64> = BTreeMap::new();
    let mut modeled: BTreeMap<(CountyId, u32), u64> = BTreeMap::new();
    for e in log.iter() {
        match (e.kind, e.county) {
            (EventKind::ExposureQuota, Some(c)) => *expected.entry((c, e.day)).or_default() += e.value.unwrap_or(0.0),
            (EventKind::Case, Some(c)) => *modeled.entry((c, e.day)).or_default() += 1,
            _ => {}
        }
    }
    counties
        .iter()
        .flat_map(|&c| {
            let expected = &expected;
            let modeled = &modeled;
            (0..horizon).map(move |d| Pattern1Row {
                county: c,
                day: d,
                expected: expected.get(&(c, d)).copied().unwrap_or(0.0),
                modeled: modeled.get(&(c, d)).copied().unwrap_or(0),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pattern2Row {
    pub vaccination: &'static str,
    pub age: u8,
    pub covid_state: &'static str,
    pub modeled_cases: u64,
    pub modeled_proportion: f64,
    pub target_proportion: f64,
}

pub fn vaccination_label(vaccinated: bool) -> &'static str {
    if vaccinated {
        "Vaccinated"
    } else {
        "Not Vaccinated"
    }
}

/// Outcomes of reported cases by vaccination status and age group.
pub fn pattern2(log: &EventLog, table: &SeverityTable) -> Vec<Pattern2Row> {
    let mut counts: BTreeMap<(bool, u8, u8), u64> = BTreeMap::new();
    for e in log.of_kind(EventKind::Case) {
        if e.reported != Some(true) {
            continue;
        }
        if let (Some(v), Some(a), Some(s)) = (e.vaccinated, e.age_group, e.covid_state) {
            *counts.entry((v, a, s)).or_default() += 1;
        }
    }
    let mut rows = Vec::new();
    for vaccinated in [false, true] {
        for age in 0..AGE_GROUPS as u8 {
            let total: u64 = Severity::ALL
                .iter()
                .map(|s| counts.get(&(vaccinated, age, s.state().code())).copied().unwrap_or(0))
                .sum();
            let target = table.row(vaccinated, true, age as usize);
            for (k, s) in Severity::ALL.iter().enumerate() {
                let n = counts.get(&(vaccinated, age, s.state().code())).copied().unwrap_or(0);
                rows.push(Pattern2Row {
                    vaccination: vaccination_label(vaccinated),
                    age,
                    covid_state: s.state().label(),
                    modeled_cases: n,
                    modeled_proportion: if total > 0 { n as f64 / total as f64 } else { 0.0 },
                    target_proportion: target[k],
                });
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pattern3Row {
    pub metric: &'static str,
    pub category: String,
    pub modeled: f64,
    pub target: f64,
    /// Sample size behind `modeled`.
    pub n: u64,
}

/// Visitor counts, visitor ages, daily selection and visit rates per
/// visitor index, and total visits.
pub fn pattern3(log: &EventLog, params: &VisitationParams) -> Vec<Pattern3Row> {
    let mut drawn = [0u64; 4];
    let mut ages = [[0u64; AGE_GROUPS]; 3];
    let mut evaluations = [0u64; 3];
    let mut not_selected = [0u64; 3];
    let mut visits = [0u64; 3];
    for e in log.iter() {
        let idx = e.count.unwrap_or(0) as usize;
        match e.kind {
            EventKind::VisitorsDrawn if idx < 4 => drawn[idx] += 1,
            EventKind::VisitorAssigned if (1..=3).contains(&idx) => {
                if let Some(a) = e.age_group {
                    ages[idx - 1][a as usize] += 1;
                }
            }
            EventKind::Visit if (1..=3).contains(&idx) => {
                evaluations[idx - 1] += 1;
                visits[idx - 1] += 1;
            }
            EventKind::VisitBlocked if (1..=3).contains(&idx) => {
                evaluations[idx - 1] += 1;
                if e.value == Some(1.0) {
                    not_selected[idx - 1] += 1;
                }
            }
            _ => {}
        }
    }
    let ratio = |a: u64, b: u64| if b > 0 { a as f64 / b as f64 } else { 0.0 };
    let mut rows = Vec::new();
    let residents: u64 = drawn.iter().sum();
    for (k, &n) in drawn.iter().enumerate() {
        rows.push(Pattern3Row {
            metric: "visitor_count_share",
            category: k.to_string(),
            modeled: ratio(n, residents),
            target: params.count_distribution[k],
            n: residents,
        });
    }
    for k in 0..3 {
        let total: u64 = ages[k].iter().sum();
        for a in 0..AGE_GROUPS {
            rows.push(Pattern3Row {
                metric: "visitor_age_share",
                category: format!("visitor_{}_age_{a}", k + 1),
                modeled: ratio(ages[k][a], total),
                target: params.visitors[k].age_weights[a],
                n: total,
            });
        }
    }
    for k in 0..3 {
        let p = params.visitors[k].daily_probability;
        rows.push(Pattern3Row {
            metric: "daily_selection_rate",
            category: format!("visitor_{}", k + 1),
            modeled: ratio(evaluations[k] - not_selected[k], evaluations[k]),
            target: p,
            n: evaluations[k],
        });
        rows.push(Pattern3Row {
            metric: "daily_visit_rate",
            category: format!("visitor_{}", k + 1),
            modeled: ratio(visits[k], evaluations[k]),
            target: p,
            n: evaluations[k],
        });
    }
    let expected: f64 = (0..3)
        .map(|k| evaluations[k] as f64 * params.visitors[k].daily_probability)
        .sum();
    rows.push(Pattern3Row {
        metric: "total_visits",
        category: "all".into(),
        modeled: visits.iter().sum::<u64>() as f64,
        target: expected,
        n: evaluations.iter().sum(),
    });
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRow {
    pub day: u32,
    pub acute: i64,
    pub icu: i64,
    pub admissions: u64,
    pub discharges: u64,
}

/// End-of-day COVID hospital census rebuilt from the log: day-0 placements
/// plus cumulative admissions minus discharges.
pub fn census(log: &EventLog, horizon: u32) -> Vec<CensusRow> {
    let mut rows: Vec<CensusRow> = (0..horizon)
        .map(|day| CensusRow {
            day,
            acute: 0,
            icu: 0,
            admissions: 0,
            discharges: 0,
        })
        .collect();
    let mut delta = vec![(0i64, 0i64); horizon as usize];
    let bump = |state: Option<u8>, sign: i64, d: &mut (i64, i64)| match state {
        Some(4) => d.0 += sign,
        Some(5) => d.1 += sign,
        _ => {}
    };
    for e in log.iter() {
        let Some(i) = (e.day < horizon).then_some(e.day as usize) else {
            continue;
        };
        match e.kind {
            EventKind::InitAdmission => bump(e.covid_state, 1, &mut delta[i]),
            EventKind::Admission => {
                bump(e.covid_state, 1, &mut delta[i]);
                rows[i].admissions += 1;
            }
            EventKind::Discharge => {
                bump(e.other_state, -1, &mut delta[i]);
                rows[i].discharges += 1;
            }
            _ => {}
        }
    }
    let (mut acute, mut icu) = (0, 0);
    for (r, d) in rows.iter_mut().zip(delta) {
        acute += d.0;
        icu += d.1;
        r.acute = acute;
        r.icu = icu;
    }
    rows
}

/// Counts and checks a run summary reports.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub start_date: String,
    pub horizon: u32,
    pub event_log_sha256: String,
    pub events: u64,
    pub events_by_kind: BTreeMap<String, u64>,
    pub cases: u64,
    pub reported_cases: u64,
    pub reported_fraction: f64,
    pub pattern4_mean_ratio: f64,
    pub pattern4_std_ratio: f64,
}

fn kind_name(k: EventKind) -> String {
    serde_json::to_value(k)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn summary(log: &EventLog, seed: u64, start_date: String, horizon: u32, p4: &Pattern4Report) -> Summary {
    let mut by_kind = BTreeMap::new();
    for e in log.iter() {
        *by_kind.entry(kind_name(e.kind)).or_default() += 1;
    }
    let cases = log.of_kind(EventKind::Case).count() as u64;
    let reported = log.of_kind(EventKind::Case).filter(|e| e.reported == Some(true)).count() as u64;
    Summary {
        seed,
        start_date,
        horizon,
        event_log_sha256: log.checksum(),
        events: log.len() as u64,
        events_by_kind: by_kind,
        cases,
        reported_cases: reported,
        reported_fraction: if cases > 0 { reported as f64 / cases as f64 } else { 0.0 },
        pattern4_mean_ratio: p4.mean,
        pattern4_std_ratio: p4.std,
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn state_label(code: Option<u8>) -> String {
    code.and_then(|c| CovidState::try_from(c).ok())
        .map(|s| s.label().to_string())
        .unwrap_or_default()
}

pub fn attendance_bytes(log: &EventLog) -> Result<Vec<u8>> {
    let rows = log
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Attendance | EventKind::Absence))
        .map(|e| {
            let attended = e.kind == EventKind::Attendance;
            vec![
                e.day.to_string(),
                opt(e.agent),
                e.count
                    .and_then(|t| HcwType::ALL.get(t as usize))
                    .map(|t| t.label().to_string())
                    .unwrap_or_default(),
                attended.to_string(),
                opt(e.facility),
                state_label(e.covid_state),
                if attended { opt(e.value) } else { "0".into() },
                e.reason.map(kind_reason).unwrap_or_default(),
            ]
        });
    csv_bytes(
        &["day", "agent", "hcw_type", "attended", "facility_id", "covid_state", "hours", "reason"],
        rows,
    )
}

fn kind_reason(r: crate::sim::Reason) -> String {
    serde_json::to_value(r)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn visits_bytes(log: &EventLog) -> Result<Vec<u8>> {
    let rows = log
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Visit | EventKind::VisitBlocked))
        .map(|e| {
            let visited = e.kind == EventKind::Visit;
            vec![
                e.day.to_string(),
                opt(e.agent),
                opt(e.other_agent),
                opt(e.count),
                opt(e.facility),
                state_label(e.covid_state),
                state_label(e.other_state),
                opt(e.vaccinated),
                visited.to_string(),
                if visited { String::new() } else { opt(e.value.map(|b| b as u8)) },
                e.reason.map(kind_reason).unwrap_or_default(),
            ]
        });
    csv_bytes(
        &[
            "day",
            "resident",
            "visitor",
            "visitor_index",
            "facility_id",
            "visitor_covid_state",
            "resident_covid_state",
            "visitor_vaccinated",
            "visited",
            "barrier",
            "reason",
        ],
        rows,
    )
}

pub fn pattern1_bytes(rows: &[Pattern1Row]) -> Result<Vec<u8>> {
    csv_bytes(
        &["county", "day", "expected", "modeled"],
        rows.iter()
            .map(|r| vec![r.county.to_string(), r.day.to_string(), r.expected.to_string(), r.modeled.to_string()]),
    )
}

pub fn pattern2_bytes(rows: &[Pattern2Row]) -> Result<Vec<u8>> {
    csv_bytes(
        &[
            "vaccination",
            "age",
            "covid_state",
            "modeled_cases",
            "modeled_proportion",
            "target_proportion",
        ],
        rows.iter().map(|r| {
            vec![
                r.vaccination.to_string(),
                r.age.to_string(),
                r.covid_state.to_string(),
                r.modeled_cases.to_string(),
                r.modeled_proportion.to_string(),
                r.target_proportion.to_string(),
            ]
        }),
    )
}

pub fn pattern3_bytes(rows: &[Pattern3Row]) -> Result<Vec<u8>> {
    csv_bytes(
        &["metric", "category", "modeled", "target", "n"],
        rows.iter().map(|r| {
            vec![
                r.metric.to_string(),
                r.category.clone(),
                r.modeled.to_string(),
                r.target.to_string(),
                r.n.to_string(),
            ]
        }),
    )
}

pub fn pattern4_bytes(report: &Pattern4Report) -> Result<Vec<u8>> {
    let mut rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.facility_id.to_string(),
                r.target_hours.to_string(),
                r.simulated_hours.to_string(),
                opt(r.ratio),
                r.note.clone(),
            ]
        })
        .collect();
    rows.push(vec!["mean".into(), String::new(), String::new(), report.mean.to_string(), String::new()]);
    rows.push(vec!["std".into(), String::new(), String::new(), report.std.to_string(), String::new()]);
    csv_bytes(&["facility_id", "target_hours", "simulated_hours", "ratio", "note"], rows)
}

pub fn census_bytes(rows: &[CensusRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["day", "acute", "icu", "admissions", "discharges"],
        rows.iter().map(|r| {
            vec![
                r.day.to_string(),
                r.acute.to_string(),
                r.icu.to_string(),
                r.admissions.to_string(),
                r.discharges.to_string(),
            ]
        }),
    )
}

/// What a report pass needs besides the log.
pub struct ReportContext<'a> {
    pub seed: u64,
    pub start_date: String,
    pub horizon: u32,
    /// County ids and names in world order.
    pub counties: Vec<(CountyId, String)>,
    pub severity: &'a SeverityTable,
    pub visitation: &'a VisitationParams,
    /// Target daily hours per nursing-home id.
    pub pbj_hours: BTreeMap<u32, f64>,
}

/// Writes the pattern tables, census, attendance, visits, summary and one
/// Pattern 1 chart per county into `dir`.
pub fn write_reports(dir: &Path, log: &EventLog, ctx: &ReportContext) -> Result<Summary> {
    let ids: Vec<CountyId> = ctx.counties.iter().map(|c| c.0).collect();
    let p1 = pattern1(log, &ids, ctx.horizon);
    write_file(&dir.join("pattern1.csv"), &pattern1_bytes(&p1)?)?;
    write_file(&dir.join("pattern2.csv"), &pattern2_bytes(&pattern2(log, ctx.severity))?)?;
    write_file(&dir.join("pattern3.csv"), &pattern3_bytes(&pattern3(log, ctx.visitation))?)?;
    let p4 = pattern4_report(log, &ctx.pbj_hours, ctx.horizon);
    write_file(&dir.join("pattern4.csv"), &pattern4_bytes(&p4)?)?;
    write_file(&dir.join("census.csv"), &census_bytes(&census(log, ctx.horizon))?)?;
    write_file(&dir.join("attendance.csv"), &attendance_bytes(log)?)?;
    write_file(&dir.join("visits.csv"), &visits_bytes(log)?)?;
    for (id, name) in &ctx.counties {
        let rows: Vec<&Pattern1Row> = p1.iter().filter(|r| r.county == *id).collect();
        let expected: Vec<f64> = rows.iter().map(|r| r.expected).collect();
        let modeled: Vec<f64> = rows.iter().map(|r| r.modeled as f64).collect();
        let svg = line_chart(&format!("{name} (county {id}): expected vs modeled cases"), &expected, &modeled);
        write_file(&dir.join(format!("pattern1_county_{id}.svg")), svg.as_bytes())?;
    }
    let s = summary(log, ctx.seed, ctx.start_date.clone(), ctx.horizon, &p4);
    let json = serde_json::to_string_pretty(&s)? + "\n";
    write_file(&dir.join("summary.json"), json.as_bytes())?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Event;
    use crate::types::CovidState;

    fn table() -> SeverityTable {
        let mut t = SeverityTable::default();
        t.reported_unvaccinated[2] = Some([0.05, 0.85, 0.075, 0.025]);
        t
    }

    #[test]
    fn zero_case_run_models_zero() {
        let mut log = EventLog::new();
        log.push(Event::new(0, EventKind::ExposureQuota).county(1).value(0.0).count(0));
        let rows = pattern1(&log, &[1, 2], 3);
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.modeled == 0));
    }

    #[test]
    fn pattern2_blocks_sum_to_one() {
        let mut log = EventLog::new();
        let states = [CovidState::Asymptomatic, CovidState::Mild, CovidState::Mild, CovidState::Severe];
        for (i, s) in states.iter().enumerate() {
            log.push(
                Event::new(0, EventKind::Case)
                    .agent(i as u32)
                    .age_group(0)
                    .state(*s)
                    .vaccinated(false)
                    .reported(true),
            );
        }
        let rows = pattern2(&log, &table());
        assert_eq!(rows.len(), 24);
        let block: f64 = rows[..4].iter().map(|r| r.modeled_proportion).sum();
        assert!((block - 1.0).abs() < 1e-9);
        assert_eq!(rows[1].modeled_cases, 2);
        assert_eq!(rows[0].target_proportion, 0.050);
        let header = String::from_utf8(pattern2_bytes(&rows).unwrap()).unwrap();
        assert!(header.starts_with("vaccination,age,covid_state,modeled_cases,modeled_proportion,target_proportion\n"));
        assert!(header.contains("Not Vaccinated,0,Mild,2,0.5,0.935"));
    }

    #[test]
    fn census_ledger() {
        let mut log = EventLog::new();
        log.push(Event::new(0, EventKind::InitAdmission).state(CovidState::Severe));
        log.push(Event::new(0, EventKind::InitAdmission).state(CovidState::Critical));
        log.push(Event::new(1, EventKind::Admission).state(CovidState::Severe));
        log.push(
            Event::new(2, EventKind::Discharge)
                .state(CovidState::Recovered)
                .other_state(CovidState::Critical),
        );
        let c = census(&log, 3);
        assert_eq!((c[0].acute, c[0].icu), (1, 1));
        assert_eq!((c[1].acute, c[1].icu, c[1].admissions), (2, 1, 1));
        assert_eq!((c[2].acute, c[2].icu, c[2].discharges), (2, 0, 1));
    }

    #[test]
    fn pattern3_rates() {
        let mut log = EventLog::new();
        log.push(Event::new(0, EventKind::VisitorsDrawn).count(1));
        log.push(Event::new(0, EventKind::VisitorAssigned).count(1).age_group(2));
        log.push(Event::new(0, EventKind::Visit).count(1));
        log.push(Event::new(1, EventKind::VisitBlocked).count(1).value(1.0));
        log.push(Event::new(2, EventKind::VisitBlocked).count(1).value(4.0));
        let rows = pattern3(&log, &VisitationParams::default());
        let get = |m: &str, c: &str| rows.iter().find(|r| r.metric == m && r.category == c).unwrap().modeled;
        assert_eq!(get("visitor_count_share", "1"), 1.0);
        assert_eq!(get("visitor_age_share", "visitor_1_age_2"), 1.0);
        assert!((get("daily_selection_rate", "visitor_1") - 2.0 / 3.0).abs() < 1e-12);
        assert!((get("daily_visit_rate", "visitor_1") - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(get("total_visits", "all"), 1.0);
    }
}
