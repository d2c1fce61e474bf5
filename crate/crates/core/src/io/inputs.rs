//! Loaders for the world spec and the three input tables.
//!
//! Headers must match exactly. Every row error names the file, line and
//! column; a file either loads completely or not at all.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::population::{FacilityKind, VaccinationData, WorldSpec};
use crate::seirs::CountyCaseHistory;
use crate::types::{CountyId, FacilityId, AGE_GROUPS};

pub const CASES_HEADER: [&str; 3] = ["county", "date", "cases"];
pub const VACCINATIONS_HEADER: [&str; 4] = ["county", "age_group", "population", "vaccinated"];
pub const PBJ_HEADER: [&str; 4] = ["facility_id", "county", "avg_daily_nurse_hours", "avg_daily_non_nurse_hours"];

/// County label for the statewide block of the vaccinations file.
pub const STATE_LABEL: &str = "state";

/// One row of the vaccinations file; `county = None` is the statewide row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaccinationRow {
    pub county: Option<CountyId>,
    pub age_group: u8,
    pub population: u64,
    pub vaccinated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbjRow {
    pub facility_id: FacilityId,
    pub county: CountyId,
    pub avg_daily_nurse_hours: f64,
    pub avg_daily_non_nurse_hours: f64,
}

impl PbjRow {
    pub fn total_hours(&self) -> f64 {
        self.avg_daily_nurse_hours + self.avg_daily_non_nurse_hours
    }
}

/// Daily reported cases of one county.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSeries {
    pub county: CountyId,
    pub first_date: NaiveDate,
    pub cases: Vec<f64>,
}

/// Everything a run reads, parsed and cross-checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Inputs {
    pub world: WorldSpec,
    pub cases: Vec<CaseSeries>,
    pub vaccination_rows: Vec<VaccinationRow>,
    pub pbj_rows: Vec<PbjRow>,
}

impl Inputs {
    /// Observed rates: CR per county and age group, SR from the state rows.
    pub fn vaccination_data(&self) -> VaccinationData {
        let mut data = VaccinationData::default();
        for r in &self.vaccination_rows {
            let rate = r.vaccinated as f64 / r.population as f64;
            match r.county {
                None => data.state_rates[r.age_group as usize] = rate,
                Some(c) => data.county_rates.entry(c).or_insert([0.0; AGE_GROUPS])[r.age_group as usize] = rate,
            }
        }
        data
    }

    /// Average daily hours per facility id.
    pub fn pbj_hours(&self) -> BTreeMap<FacilityId, f64> {
        self.pbj_rows.iter().map(|r| (r.facility_id, r.total_hours())).collect()
    }

    /// Case histories in world county order, with populations from the world.
    pub fn case_histories(&self) -> Result<Vec<CountyCaseHistory>> {
        self.world
            .counties
            .iter()
            .map(|c| {
                let s = self
                    .cases
                    .iter()
                    .find(|s| s.county == c.id)
                    .ok_or_else(|| Error::CrossCheck(format!("county {} has no rows in the cases file", c.id)))?;
                Ok(CountyCaseHistory {
                    county: c.id,
                    population: c.population as f64,
                    first_date: s.first_date,
                    cases: s.cases.clone(),
                })
            })
            .collect()
    }
}

fn input_err(file: &Path, line: u64, column: &str, message: impl Into<String>) -> Error {
    Error::Input {
        file: file.display().to_string(),
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Reads a CSV, checks its header and returns (line, record) pairs.
fn read_table(path: &Path, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(file);
    let mut rows = Vec::new();
    let mut records = rdr.records();
    match records.next() {
        None => return Err(input_err(path, 1, header[0], "file is empty; expected a header")),
        Some(r) => {
            let r = r.map_err(|e| input_err(path, 1, header[0], e.to_string()))?;
            let got: Vec<&str> = r.iter().collect();
            if got != header {
                return Err(input_err(
                    path,
                    1,
                    got.first().copied().unwrap_or(""),
                    format!("header must be `{}`, found `{}`", header.join(","), got.join(",")),
                ));
            }
        }
    }
    for r in records {
        let r = r.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            input_err(path, line, "", e.to_string())
        })?;
        let line = r.position().map_or(0, |p| p.line());
        if r.len() != header.len() {
            return Err(input_err(
                path,
                line,
                "",
                format!("expected {} fields, found {}", header.len(), r.len()),
            ));
        }
        rows.push((line, r));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, rec: &csv::StringRecord, i: usize, header: &[&str]) -> Result<T> {
    let raw = rec.get(i).unwrap_or("").trim();
    raw.parse::<T>()
        .map_err(|_| input_err(path, line, header[i], format!("cannot parse `{raw}`")))
}

fn non_negative(path: &Path, line: u64, column: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(input_err(path, line, column, format!("value {v} must be a non-negative number")))
    }
}

pub fn load_world(path: &Path) -> Result<WorldSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| input_err(path, e.line() as u64, &format!("col {}", e.column()), e.to_string()))
}

/// Cases per county; each county's dates must be consecutive days.
pub fn load_cases(path: &Path) -> Result<Vec<CaseSeries>> {
    let h = &CASES_HEADER;
    let mut by_county: BTreeMap<CountyId, CaseSeries> = BTreeMap::new();
    for (line, rec) in read_table(path, h)? {
        let county: CountyId = field(path, line, &rec, 0, h)?;
        let date: NaiveDate = field(path, line, &rec, 1, h)?;
        let cases = non_negative(path, line, h[2], field(path, line, &rec, 2, h)?)?;
        let s = by_county.entry(county).or_insert_with(|| CaseSeries {
            county,
            first_date: date,
            cases: Vec::new(),
        });
        let expected = s.first_date + Days::new(s.cases.len() as u64);
        if date != expected {
            return Err(input_err(
                path,
                line,
                h[1],
                format!("county {county}: expected {expected} (dates must be consecutive), found {date}"),
            ));
        }
        s.cases.push(cases);
    }
    Ok(by_county.into_values().collect())
}

pub fn load_vaccinations(path: &Path) -> Result<Vec<VaccinationRow>> {
    let h = &VACCINATIONS_HEADER;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, rec) in read_table(path, h)? {
        let label = rec.get(0).unwrap_or("").trim();
        let county = if label == STATE_LABEL {
            None
        } else {
            Some(field::<CountyId>(path, line, &rec, 0, h)?)
        };
        let age_group: u8 = field(path, line, &rec, 1, h)?;
        if age_group as usize >= AGE_GROUPS {
            return Err(input_err(path, line, h[1], format!("age group {age_group} must be 0, 1 or 2")));
        }
        let population: u64 = field(path, line, &rec, 2, h)?;
        let vaccinated: u64 = field(path, line, &rec, 3, h)?;
        if population == 0 {
            return Err(input_err(path, line, h[2], "population must be positive"));
        }
        if vaccinated > population {
            return Err(input_err(path, line, h[3], format!("{vaccinated} vaccinated exceeds population {population}")));
        }
        if !seen.insert((county, age_group)) {
            return Err(input_err(path, line, h[0], format!("duplicate row for {label}, age group {age_group}")));
        }
        rows.push(VaccinationRow {
            county,
            age_group,
            population,
            vaccinated,
        });
    }
    let groups = |c: Option<CountyId>| (0..AGE_GROUPS as u8).all(|a| seen.contains(&(c, a)));
    if !groups(None) {
        return Err(input_err(path, 0, h[0], "statewide rows must cover age groups 0, 1 and 2"));
    }
    for (c, _) in &seen {
        if !groups(*c) {
            return Err(input_err(
                path,
                0,
                h[0],
                format!("county {} must have rows for age groups 0, 1 and 2", c.expect("county row")),
            ));
        }
    }
    Ok(rows)
}

pub fn load_pbj(path: &Path) -> Result<Vec<PbjRow>> {
    let h = &PBJ_HEADER;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, rec) in read_table(path, h)? {
        let facility_id: FacilityId = field(path, line, &rec, 0, h)?;
        let county: CountyId = field(path, line, &rec, 1, h)?;
        let nurse = non_negative(path, line, h[2], field(path, line, &rec, 2, h)?)?;
        let non_nurse = non_negative(path, line, h[3], field(path, line, &rec, 3, h)?)?;
        if !seen.insert(facility_id) {
            return Err(input_err(path, line, h[0], format!("duplicate facility {facility_id}")));
        }
        rows.push(PbjRow {
            facility_id,
            county,
            avg_daily_nurse_hours: nurse,
            avg_daily_non_nurse_hours: non_nurse,
        });
    }
    Ok(rows)
}

/// Cross-checks: every county in the cases file has vaccination rows and is
/// in the world, every world county has cases, and every nursing home has a
/// PBJ row in its county.
pub fn cross_check(inputs: &Inputs) -> Result<()> {
    let world_counties: BTreeSet<CountyId> = inputs.world.counties.iter().map(|c| c.id).collect();
    let vacc_counties: BTreeSet<CountyId> = inputs.vaccination_rows.iter().filter_map(|r| r.county).collect();
    for s in &inputs.cases {
        if !vacc_counties.contains(&s.county) {
            return Err(Error::CrossCheck(format!("county {} has cases but no vaccination rows", s.county)));
        }
        if !world_counties.contains(&s.county) {
            return Err(Error::CrossCheck(format!("county {} in the cases file is not in the world", s.county)));
        }
    }
    for c in &world_counties {
        if !inputs.cases.iter().any(|s| s.county == *c) {
            return Err(Error::CrossCheck(format!("county {c} has no rows in the cases file")));
        }
    }
    let pbj: BTreeMap<FacilityId, &PbjRow> = inputs.pbj_rows.iter().map(|r| (r.facility_id, r)).collect();
    for f in inputs.world.facilities.iter().filter(|f| f.kind == FacilityKind::NursingHome) {
        match pbj.get(&f.id) {
            None => return Err(Error::CrossCheck(format!("nursing home {} has no PBJ row", f.id))),
            Some(r) if r.county != f.county => {
                return Err(Error::CrossCheck(format!(
                    "nursing home {} is in county {} but its PBJ row says {}",
                    f.id, f.county, r.county
                )))
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Loads and cross-checks the inputs named by a config.
pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let mut world = load_world(&cfg.resolve(&cfg.inputs.world))?;
    if let Some(s) = cfg.scale_factor {
        world.scale_factor = s;
    }
    let inputs = Inputs {
        world,
        cases: load_cases(&cfg.resolve(&cfg.inputs.cases))?,
        vaccination_rows: load_vaccinations(&cfg.resolve(&cfg.inputs.vaccinations))?,
        pbj_rows: load_pbj(&cfg.resolve(&cfg.inputs.pbj))?,
    };
    cross_check(&inputs)?;
    Ok(inputs)
}
