//! Run configuration. JSON, with every field defaulted.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::case_engine::CaseParams;
use crate::error::{Error, Result};
use crate::population::{InitHospitalization, VaccinationParams};
use crate::seirs::SeirsParams;
use crate::validate::ValidationTolerances;
use crate::visitation::VisitationParams;
use crate::workforce::WorkforceParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastSource {
    /// County SEIRS forecasts.
    Seirs,
    /// Reported cases times the case multiplier, for historical periods.
    Historical,
}

/// Input files, relative to the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub world: PathBuf,
    pub cases: PathBuf,
    pub vaccinations: PathBuf,
    pub pbj: PathBuf,
}

impl Default for InputPaths {
    fn default() -> Self {
        Self {
            world: "world.json".into(),
            cases: "covid19_cases.csv".into(),
            vaccinations: "vaccinations_by_age.csv".into(),
            pbj: "PBJ.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub start_date: NaiveDate,
    pub horizon: u32,
    /// Overrides the world file's scale factor when set.
    pub scale_factor: Option<f64>,
    pub forecast_source: ForecastSource,
    pub inputs: InputPaths,
    pub seirs: SeirsParams,
    pub vaccination: VaccinationParams,
    pub hospital_init: InitHospitalization,
    pub cases: CaseParams,
    pub visitation: VisitationParams,
    pub workforce: WorkforceParams,
    pub validation: ValidationTolerances,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            start_date: NaiveDate::from_ymd_opt(2021, 12, 15).expect("valid date"),
            horizon: 30,
            scale_factor: None,
            forecast_source: ForecastSource::Seirs,
            inputs: InputPaths::default(),
            seirs: SeirsParams::default(),
            vaccination: VaccinationParams::default(),
            hospital_init: InitHospitalization::default(),
            cases: CaseParams::default(),
            visitation: VisitationParams::default(),
            workforce: WorkforceParams::default(),
            validation: ValidationTolerances::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    /// Reads and validates a config; relative input paths resolve against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if let Some(s) = self.scale_factor {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("scale_factor must be positive"));
            }
        }
        self.seirs.validate()?;
        self.vaccination.validate()?;
        self.hospital_init.validate()?;
        self.cases.validate()?;
        self.visitation.validate()?;
        self.workforce.validate()?;
        self.validation.validate()
    }
}
