//! Nursing-home workforce: staffing targets, HCW assignment and daily
//! attendance.

mod assign;
mod attendance;
mod report;

pub use assign::{assign_hcws, check_assignment, AssignmentCheck, CapCheck};
pub use attendance::{simulate_attendance, AttendanceOutcome, AttendanceRecord, HOURS_PER_SHIFT};
pub use report::{pattern4_report, Pattern4Report, Pattern4Row};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::World;
use crate::types::{AgentId, FacilityId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HcwType {
    SingleSiteFullTime,
    SingleSitePartTime,
    Multisite,
    Contract,
}

impl HcwType {
    pub const ALL: [HcwType; 4] = [
        HcwType::SingleSiteFullTime,
        HcwType::SingleSitePartTime,
        HcwType::Multisite,
        HcwType::Contract,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            HcwType::SingleSiteFullTime => "single_site_full_time",
            HcwType::SingleSitePartTime => "single_site_part_time",
            HcwType::Multisite => "multisite",
            HcwType::Contract => "contract",
        }
    }
}

/// How a mild infection changes the chance an HCW goes to work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MildAttendance {
    /// Attendance probability reduced by 80% (multiplied by 0.2).
    ReducedBy80,
    /// Attendance at 80% of the normal probability.
    At80,
}

impl MildAttendance {
    pub fn factor(self) -> f64 {
        match self {
            MildAttendance::ReducedBy80 => 0.2,
            MildAttendance::At80 => 0.8,
        }
    }
}

/// Maximum shares of workers whose farthest assigned facility lies beyond a
/// distance from their home county.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceCaps {
    pub multisite_over_50: f64,
    pub multisite_over_100: f64,
    pub contract_over_50: f64,
    pub contract_over_100: f64,
    pub contract_over_200: f64,
}

impl Default for DistanceCaps {
    fn default() -> Self {
        Self {
            multisite_over_50: 0.10,
            multisite_over_100: 0.05,
            contract_over_50: 0.40,
            contract_over_100: 0.20,
            contract_over_200: 0.05,
        }
    }
}

impl DistanceCaps {
    /// The five caps as (name, worker type, miles, max share).
    pub fn caps(&self) -> [(&'static str, HcwType, f64, f64); 5] {
        [
            ("multisite_over_50", HcwType::Multisite, 50.0, self.multisite_over_50),
            ("multisite_over_100", HcwType::Multisite, 100.0, self.multisite_over_100),
            ("contract_over_50", HcwType::Contract, 50.0, self.contract_over_50),
            ("contract_over_100", HcwType::Contract, 100.0, self.contract_over_100),
            ("contract_over_200", HcwType::Contract, 200.0, self.contract_over_200),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkforceParams {
    /// Share of facility hours covered by each type, in `HcwType::ALL` order.
    pub type_shares: [f64; 4],
    /// Probability that a given day is a workday, per type.
    pub workday_probability: [f64; 4],
    pub contract_facility_count: usize,
    pub mild_attendance: MildAttendance,
    pub caps: DistanceCaps,
    /// Randomized assignment attempts before reporting a violated cap.
    pub max_attempts: u32,
}

impl Default for WorkforceParams {
    fn default() -> Self {
        Self {
            type_shares: [0.5, 0.2, 0.2, 0.1],
            workday_probability: [5.0 / 7.0, 2.5 / 7.0, 5.0 / 7.0, 4.0 / 7.0],
            contract_facility_count: 3,
            mild_attendance: MildAttendance::ReducedBy80,
            caps: DistanceCaps::default(),
            max_attempts: 50,
        }
    }
}

impl WorkforceParams {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.type_shares.iter().sum();
        if self.type_shares.iter().any(|s| !(0.0..=1.0).contains(s)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "workforce type_shares must be in [0, 1] and sum to 1 (got {sum})"
            )));
        }
        if self.workday_probability.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(Error::config("workday probabilities must be in (0, 1]"));
        }
        if self.contract_facility_count == 0 {
            return Err(Error::config("contract_facility_count must be at least 1"));
        }
        for (name, _, _, cap) in self.caps.caps() {
            if !(0.0..=1.0).contains(&cap) {
                return Err(Error::config(format!("distance cap {name} must be in [0, 1]")));
            }
        }
        if self.max_attempts == 0 {
            return Err(Error::config("max_attempts must be at least 1"));
        }
        Ok(())
    }

    pub fn workday(&self, t: HcwType) -> f64 {
        self.workday_probability[t.index()]
    }
}

/// Worker counts a nursing home needs, per type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityStaffTarget {
    pub facility: FacilityId,
    pub avg_daily_hours: f64,
    pub targets: [u32; 4],
}

impl FacilityStaffTarget {
    pub fn target(&self, t: HcwType) -> u32 {
        self.targets[t.index()]
    }

    /// Daily hours these targets deliver in expectation.
    pub fn expected_hours(&self, params: &WorkforceParams) -> f64 {
        HcwType::ALL
            .iter()
            .map(|t| f64::from(self.target(*t)) * HOURS_PER_SHIFT * params.workday(*t))
            .sum()
    }
}

/// Target workers per type: `round(share * hours / (8 * p_workday))`.
pub fn staff_targets_for(facility: FacilityId, hours: f64, params: &WorkforceParams) -> FacilityStaffTarget {
    let mut targets = [0u32; 4];
    for t in HcwType::ALL {
        let raw = params.type_shares[t.index()] * hours / (HOURS_PER_SHIFT * params.workday(t));
        targets[t.index()] = raw.round() as u32;
    }
    FacilityStaffTarget {
        facility,
        avg_daily_hours: hours,
        targets,
    }
}

/// Targets for every nursing home, in facility order. `pbj` maps facility
/// id to average daily hours.
pub fn compute_staff_targets(
    pbj: &BTreeMap<FacilityId, f64>,
    world: &World,
    params: &WorkforceParams,
) -> Result<Vec<FacilityStaffTarget>> {
    params.validate()?;
    world
        .nursing_homes()
        .map(|f| {
            let id = world.facilities[f].id;
            let hours = *pbj
                .get(&id)
                .ok_or_else(|| Error::CrossCheck(format!("nursing home {id} has no PBJ row")))?;
            if !(hours >= 0.0) {
                return Err(Error::config(format!("nursing home {id}: negative PBJ hours")));
            }
            Ok(staff_targets_for(id, hours, params))
        })
        .collect()
}

/// One agent's HCW role. Facilities are world facility indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HcwAssignment {
    pub agent: AgentId,
    pub hcw_type: HcwType,
    /// Contract workers have no primary facility.
    pub primary_facility: Option<usize>,
    pub secondary_facilities: Vec<usize>,
    pub workday_probability: f64,
}

impl HcwAssignment {
    /// Every facility the worker may attend, primary first.
    pub fn facilities(&self) -> Vec<usize> {
        self.primary_facility
            .iter()
            .chain(self.secondary_facilities.iter())
            .copied()
            .collect()
    }
}
