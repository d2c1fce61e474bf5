//! Small domain types shared by every module.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of an agent in [`crate::population::World::agents`].
pub type AgentId = u32;

/// External county identifier, as written in input files.
pub type CountyId = u32;

/// External facility identifier, as written in input files.
pub type FacilityId = u32;

/// Simulation day index; day 0 is the start date.
pub type Day = u32;

pub const AGE_GROUPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum AgeGroup {
    /// Under 50.
    Under50 = 0,
    /// 50 to 64.
    From50To64 = 1,
    /// 65 and over.
    Over65 = 2,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; AGE_GROUPS] = [AgeGroup::Under50, AgeGroup::From50To64, AgeGroup::Over65];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl From<AgeGroup> for u8 {
    fn from(a: AgeGroup) -> u8 {
        a as u8
    }
}

impl TryFrom<u8> for AgeGroup {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        AgeGroup::from_index(v as usize).ok_or_else(|| format!("age group {v} not in 0..=2"))
    }
}

/// COVID-19 state codes 1..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum CovidState {
    Susceptible = 1,
    Asymptomatic = 2,
    Mild = 3,
    Severe = 4,
    Critical = 5,
    Recovered = 6,
}

impl CovidState {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn is_infectious_community(self) -> bool {
        matches!(self, CovidState::Asymptomatic | CovidState::Mild)
    }

    pub fn is_hospital_level(self) -> bool {
        matches!(self, CovidState::Severe | CovidState::Critical)
    }

    pub fn label(self) -> &'static str {
        match self {
            CovidState::Susceptible => "Susceptible",
            CovidState::Asymptomatic => "Asymptomatic",
            CovidState::Mild => "Mild",
            CovidState::Severe => "Severe",
            CovidState::Critical => "Critical",
            CovidState::Recovered => "Recovered",
        }
    }
}

impl From<CovidState> for u8 {
    fn from(s: CovidState) -> u8 {
        s as u8
    }
}

impl TryFrom<u8> for CovidState {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Ok(match v {
            1 => CovidState::Susceptible,
            2 => CovidState::Asymptomatic,
            3 => CovidState::Mild,
            4 => CovidState::Severe,
            5 => CovidState::Critical,
            6 => CovidState::Recovered,
            _ => return Err(format!("covid state {v} not in 1..=6")),
        })
    }
}

impl fmt::Display for CovidState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Severity drawn for a new case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Severity {
    Asymptomatic = 0,
    Mild = 1,
    Severe = 2,
    Critical = 3,
}

impl Severity {
    pub const ALL: [Severity; 4] = [
        Severity::Asymptomatic,
        Severity::Mild,
        Severity::Severe,
        Severity::Critical,
    ];

    pub fn from_index(i: usize) -> Severity {
        Self::ALL[i]
    }

    pub fn state(self) -> CovidState {
        match self {
            Severity::Asymptomatic => CovidState::Asymptomatic,
            Severity::Mild => CovidState::Mild,
            Severity::Severe => CovidState::Severe,
            Severity::Critical => CovidState::Critical,
        }
    }
}

/// Where an agent currently is. Facility payloads are indices into
/// [`crate::population::World::facilities`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Location {
    Community,
    NursingHome(usize),
    HospitalAcute(usize),
    HospitalIcu(usize),
}

impl Location {
    pub fn is_community(self) -> bool {
        matches!(self, Location::Community)
    }

    pub fn is_hospital(self) -> bool {
        matches!(self, Location::HospitalAcute(_) | Location::HospitalIcu(_))
    }

    pub fn facility(self) -> Option<usize> {
        match self {
            Location::Community => None,
            Location::NursingHome(f) | Location::HospitalAcute(f) | Location::HospitalIcu(f) => Some(f),
        }
    }
}
