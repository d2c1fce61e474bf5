//! Synthetic input bundles: world, cases, vaccinations and PBJ hours that
//! pass every loader cross-check.

use std::path::Path;

use chrono::Days;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::inputs::{cross_check, CaseSeries, Inputs, PbjRow, VaccinationRow};
use super::writers::{cases_bytes, pbj_bytes, vaccinations_bytes, world_bytes, write_file};
use crate::config::{InputPaths, RunConfig};
use crate::error::{Error, Result};
use crate::population::{largest_remainder, BoundingBox, CountySpec, FacilityKind, FacilitySpec, WorldSpec};
use crate::rng::{RngStream, StreamTag};
use crate::types::{CountyId, FacilityId, AGE_GROUPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCounty {
    pub id: CountyId,
    pub name: String,
    pub population: u64,
    pub age_shares: [f64; AGE_GROUPS],
    pub lat: f64,
    pub lon: f64,
    /// Reported cases per day on the start date.
    pub base_cases: f64,
    /// Daily exponential growth rate of reported cases.
    #[serde(default)]
    pub growth: f64,
    /// Observed vaccination rate per age group.
    pub vaccination_rates: [f64; AGE_GROUPS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthNursingHome {
    pub id: FacilityId,
    pub county: CountyId,
    pub capacity: u32,
    pub occupancy: u32,
    /// Staff hours per resident-day; falls back to `SynthSpec::hours_per_resident_day`.
    #[serde(default)]
    pub hours_per_resident_day: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthHospital {
    pub id: FacilityId,
    pub county: CountyId,
    pub acute_beds: u32,
    pub icu_beds: u32,
}

fn default_history() -> u32 {
    150
}
fn default_hprd() -> f64 {
    4.0
}
fn default_nurse_share() -> f64 {
    0.45
}
fn default_scale() -> f64 {
    1.0
}

/// Description of a synthetic state. Facility counts, beds and occupancy
/// are at agent scale; populations and cases are at full scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub counties: Vec<SynthCounty>,
    #[serde(default)]
    pub nursing_homes: Vec<SynthNursingHome>,
    #[serde(default)]
    pub hospitals: Vec<SynthHospital>,
    #[serde(default = "default_scale")]
    pub scale_factor: f64,
    /// Days of case history before the start date.
    #[serde(default = "default_history")]
    pub history_days: u32,
    #[serde(default = "default_hprd")]
    pub hours_per_resident_day: f64,
    /// Share of PBJ hours reported as nurse hours.
    #[serde(default = "default_nurse_share")]
    pub nurse_share: f64,
    /// Relative standard deviation of multiplicative noise on daily cases.
    #[serde(default)]
    pub case_noise: f64,
    #[serde(default)]
    pub bounding_box: Option<BoundingBox>,
    /// Run configuration written next to the generated inputs.
    #[serde(default)]
    pub config: RunConfig,
}

impl SynthSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.counties.is_empty() {
            return Err(Error::config("synth spec has no counties"));
        }
        for c in &self.counties {
            if c.vaccination_rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(Error::config(format!("county {}: vaccination rates must be in [0, 1]", c.id)));
            }
            if !(c.base_cases >= 0.0) || !c.growth.is_finite() {
                return Err(Error::config(format!("county {}: base_cases must be non-negative", c.id)));
            }
            if c.population == 0 {
                return Err(Error::config(format!("county {}: population must be positive", c.id)));
            }
        }
        for nh in &self.nursing_homes {
            if nh.hours_per_resident_day.is_some_and(|h| !(h >= 0.0)) {
                return Err(Error::config(format!("nursing home {}: negative hours", nh.id)));
            }
        }
        if !(self.hours_per_resident_day >= 0.0) || !(0.0..=1.0).contains(&self.nurse_share) {
            return Err(Error::config("hours_per_resident_day must be non-negative and nurse_share in [0, 1]"));
        }
        if !(self.case_noise >= 0.0) {
            return Err(Error::config("case_noise must be non-negative"));
        }
        Ok(())
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Generates a consistent input bundle and the run config that reads it.
pub fn synth_inputs(spec: &SynthSpec) -> Result<(Inputs, RunConfig)> {
    spec.validate()?;
    let cfg = RunConfig {
        inputs: InputPaths::default(),
        ..spec.config.clone()
    };
    let county = |id: CountyId| {
        spec.counties
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::config(format!("facility references unknown county {id}")))
    };

    let mut facilities = Vec::new();
    let mut pbj_rows = Vec::new();
    for nh in &spec.nursing_homes {
        let c = county(nh.county)?;
        facilities.push(FacilitySpec {
            id: nh.id,
            kind: FacilityKind::NursingHome,
            county: nh.county,
            acute_beds: 0,
            icu_beds: 0,
            nh_capacity: nh.capacity,
            nh_occupancy: nh.occupancy,
            lat: c.lat,
            lon: c.lon,
        });
        let hours = f64::from(nh.occupancy) * nh.hours_per_resident_day.unwrap_or(spec.hours_per_resident_day);
        let nurse = round2(hours * spec.nurse_share);
        pbj_rows.push(PbjRow {
            facility_id: nh.id,
            county: nh.county,
            avg_daily_nurse_hours: nurse,
            avg_daily_non_nurse_hours: round2(hours - nurse),
        });
    }
    for h in &spec.hospitals {
        let c = county(h.county)?;
        facilities.push(FacilitySpec {
            id: h.id,
            kind: FacilityKind::Hospital,
            county: h.county,
            acute_beds: h.acute_beds,
            icu_beds: h.icu_beds,
            nh_capacity: 0,
            nh_occupancy: 0,
            lat: c.lat,
            lon: c.lon,
        });
    }
    let world = WorldSpec {
        counties: spec
            .counties
            .iter()
            .map(|c| CountySpec {
                id: c.id,
                name: c.name.clone(),
                population: c.population,
                age_shares: c.age_shares,
                lat: c.lat,
                lon: c.lon,
            })
            .collect(),
        facilities,
        scale_factor: spec.scale_factor,
        bounding_box: spec.bounding_box,
    };

    let mut rng = RngStream::new(cfg.seed).substream(StreamTag::Synth, 0);
    let noise = Normal::new(0.0, spec.case_noise.max(0.0)).map_err(|e| Error::config(e.to_string()))?;
    let first = cfg.start_date - Days::new(u64::from(spec.history_days));
    let days = spec.history_days + cfg.horizon;
    let cases = spec
        .counties
        .iter()
        .map(|c| CaseSeries {
            county: c.id,
            first_date: first,
            cases: (0..days)
                .map(|k| {
                    let t = f64::from(k) - f64::from(spec.history_days);
                    let mean = c.base_cases * (c.growth * t).exp();
                    let eps = if spec.case_noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                    (mean * (1.0 + eps)).round().max(0.0)
                })
                .collect(),
        })
        .collect();

    let mut vaccination_rows = Vec::new();
    let mut state = [(0u64, 0u64); AGE_GROUPS];
    for c in &spec.counties {
        let pops = largest_remainder(c.population, &c.age_shares);
        for a in 0..AGE_GROUPS {
            if pops[a] == 0 {
                return Err(Error::config(format!("county {}: age group {a} has no population", c.id)));
            }
            let vaccinated = (c.vaccination_rates[a] * pops[a] as f64).round() as u64;
            state[a].0 += pops[a];
            state[a].1 += vaccinated;
            vaccination_rows.push(VaccinationRow {
                county: Some(c.id),
                age_group: a as u8,
                population: pops[a],
                vaccinated,
            });
        }
    }
    for (a, (population, vaccinated)) in state.iter().enumerate() {
        vaccination_rows.push(VaccinationRow {
            county: None,
            age_group: a as u8,
            population: *population,
            vaccinated: *vaccinated,
        });
    }

    let inputs = Inputs {
        world,
        cases,
        vaccination_rows,
        pbj_rows,
    };
    cross_check(&inputs)?;
    Ok((inputs, cfg))
}

/// Writes an input bundle and `config.json` into `dir`.
pub fn write_bundle(dir: &Path, inputs: &Inputs, cfg: &RunConfig) -> Result<()> {
    let p = &cfg.inputs;
    write_file(&dir.join(&p.world), &world_bytes(&inputs.world))?;
    write_file(&dir.join(&p.cases), &cases_bytes(&inputs.cases)?)?;
    write_file(&dir.join(&p.vaccinations), &vaccinations_bytes(&inputs.vaccination_rows)?)?;
    write_file(&dir.join(&p.pbj), &pbj_bytes(&inputs.pbj_rows)?)?;
    write_file(&dir.join("config.json"), cfg.to_json().as_bytes())
}
