use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::world::World;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::types::{CountyId, Location, AGE_GROUPS};

/// Configured vaccination targets by agent group.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct VaccinationParams {
    /// Statewide target rate per age group for community agents.
    pub community_targets: [f64; AGE_GROUPS],
    pub hcw_rate: f64,
    pub nh_resident_rate: f64,
}

impl Default for VaccinationParams {
    fn default() -> Self {
        Self {
            community_targets: [0.47, 0.74, 0.92],
            hcw_rate: 0.80,
            nh_resident_rate: 0.87,
        }
    }
}

impl VaccinationParams {
    pub fn validate(&self) -> Result<()> {
        for &t in &self.community_targets {
            check_prob("community target", t)?;
        }
        check_prob("hcw_rate", self.hcw_rate)?;
        check_prob("nh_resident_rate", self.nh_resident_rate)
    }
}

/// Observed vaccination rates from the vaccinations file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VaccinationData {
    pub state_rates: [f64; AGE_GROUPS],
    pub county_rates: BTreeMap<CountyId, [f64; AGE_GROUPS]>,
}

/// Everything needed to draw vaccination status, resolved against a world.
#[derive(Debug, Clone, PartialEq)]
pub struct VaccinationRates {
    pub community_targets: [f64; AGE_GROUPS],
    pub state_rates: [f64; AGE_GROUPS],
    /// Indexed by county index.
    pub county_rates: Vec<[f64; AGE_GROUPS]>,
    pub hcw_rate: f64,
    pub nh_resident_rate: f64,
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} = {p} is not a probability")))
    }
}

impl VaccinationRates {
    pub fn resolve(params: &VaccinationParams, data: &VaccinationData, world: &World) -> Result<Self> {
        let county_rates = world
            .counties
            .iter()
            .map(|c| {
                data.county_rates
                    .get(&c.id)
                    .copied()
                    .ok_or_else(|| Error::CrossCheck(format!("no vaccination rows for county {}", c.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        let rates = Self {
            community_targets: params.community_targets,
            state_rates: data.state_rates,
            county_rates,
            hcw_rate: params.hcw_rate,
            nh_resident_rate: params.nh_resident_rate,
        };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..AGE_GROUPS {
            check_prob("community target", self.community_targets[a])?;
            check_prob("state rate", self.state_rates[a])?;
            if self.state_rates[a] <= 0.0 && self.community_targets[a] > 0.0 {
                return Err(Error::config(format!(
                    "state vaccination rate for age group {a} is zero but its target is {}",
                    self.community_targets[a]
                )));
            }
        }
        for row in &self.county_rates {
            for &r in row {
                check_prob("county rate", r)?;
            }
        }
        check_prob("hcw_rate", self.hcw_rate)?;
        check_prob("nh_resident_rate", self.nh_resident_rate)
    }

    /// Community vaccination probability for age group `age` in county
    /// `county`: `IP_a / SR_a * CR_ac`, clamped to [0, 1].
    pub fn community_probability(&self, age: usize, county: usize) -> f64 {
        community_probability(
            self.community_targets[age],
            self.state_rates[age],
            self.county_rates[county][age],
        )
    }

    /// Population-weighted observed vaccination rate of a county.
    pub fn county_rate(&self, world: &World, county: usize) -> f64 {
        let shares = world.counties[county].age_shares;
        (0..AGE_GROUPS).map(|a| shares[a] * self.county_rates[county][a]).sum()
    }
}

/// `IP_a / SR_a * CR_ac` clamped to [0, 1]; zero when no one in the age
/// group was observed vaccinated.
pub fn community_probability(target: f64, state_rate: f64, county_rate: f64) -> f64 {
    if state_rate <= 0.0 {
        return 0.0;
    }
    (target / state_rate * county_rate).clamp(0.0, 1.0)
}

/// Draws each agent's vaccination status once. HCW flags must already be set.
pub fn assign_vaccinations(world: &mut World, rates: &VaccinationRates, rng: &mut SimRng) {
    for agent in &mut world.agents {
        let p = if agent.is_hcw {
            rates.hcw_rate
        } else if matches!(agent.home_location, Location::NursingHome(_)) {
            rates.nh_resident_rate
        } else {
            rates.community_probability(agent.age_group.index(), agent.home_county)
        };
        agent.vaccinated = rng.random::<f64>() < p;
    }
}

/// Each vaccinated agent becomes immune with probability `v_eff`.
pub fn assign_vaccine_immunity(world: &mut World, v_eff: f64, rng: &mut SimRng) -> Result<()> {
    check_prob("v_eff", v_eff)?;
    for agent in &mut world.agents {
        agent.vaccine_immune = agent.vaccinated && rng.random::<f64>() < v_eff;
    }
    Ok(())
}
