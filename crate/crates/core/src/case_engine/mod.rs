//! Daily case creation: inflation of forecast infections to exposures,
//! immunity blocking, severity, hospitalization and recovery.

mod los;
mod severity;

pub use los::LosDistribution;
pub use severity::{SeverityRow, SeverityTable};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::haversine_miles;
use crate::population::World;
use crate::rng::{categorical, SimRng};
use crate::sim::{Event, EventKind, EventLog, Reason};
use crate::types::{AgentId, CovidState, Day, Severity, AGE_GROUPS};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CaseParams {
    /// Share of vaccinated agents who are immune.
    pub v_eff: f64,
    /// Days an asymptomatic or mild infection lasts.
    pub infection_days: u32,
    /// Age weights used to pick exposed agents.
    pub age_distribution: [f64; AGE_GROUPS],
    pub severity: SeverityTable,
    pub los: LosDistribution,
}

impl Default for CaseParams {
    fn default() -> Self {
        Self {
            v_eff: 0.24,
            infection_days: 7,
            age_distribution: [0.70, 0.18, 0.12],
            severity: SeverityTable::default(),
            los: LosDistribution::default(),
        }
    }
}

impl CaseParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.v_eff) {
            return Err(Error::config("cases.v_eff must be in [0,1]"));
        }
        if self.infection_days == 0 {
            return Err(Error::config("cases.infection_days must be positive"));
        }
        check_distribution("cases.age_distribution", &self.age_distribution)?;
        self.severity.validate()?;
        self.los.validate()
    }
}

pub(crate) fn check_distribution(name: &str, d: &[f64]) -> Result<()> {
    if d.iter().any(|p| !(0.0..=1.0).contains(p)) || (d.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("{name} must be probabilities summing to 1")));
    }
    Ok(())
}

/// Potential cases `PC = Inf / ((1 - Vacc) + Vacc * (1 - V_eff))`: the
/// exposures needed so that, after immune agents block theirs, about `Inf`
/// cases remain.
pub fn inflate_to_exposures(infections: f64, vacc: f64, v_eff: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&vacc) || !(0.0..=1.0).contains(&v_eff) {
        return Err(Error::config("vaccination rate and V_eff must be in [0,1]"));
    }
    let denom = (1.0 - vacc) + vacc * (1.0 - v_eff);
    if denom <= 0.0 {
        return Err(Error::config("every exposure would be blocked (Vacc = V_eff = 1)"));
    }
    Ok(infections / denom)
}

/// Expected share of a county's exposures that hit an immune agent, given
/// the current pool and the age weights used for selection.
pub fn expected_block_share(world: &World, county: usize, weights: &[f64; AGE_GROUPS]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, &w) in weights.iter().enumerate() {
        let members = world.pool.members(county, a);
        if members.is_empty() || w <= 0.0 {
            continue;
        }
        let immune = members.iter().filter(|&&id| world.agent(id).vaccine_immune).count();
        num += w * immune as f64 / members.len() as f64;
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Picks up to `n` distinct susceptible community agents of a county.
/// Logs a shortfall event when the pool runs dry.
pub fn draw_exposures(
    world: &mut World,
    county: usize,
    n: u64,
    weights: &[f64; AGE_GROUPS],
    day: Day,
    rng: &mut SimRng,
    log: &mut EventLog,
) -> Vec<AgentId> {
    let drawn = world.pool.sample(county, weights, n as usize, rng);
    let missing = n - drawn.len() as u64;
    if missing > 0 {
        log.push(
            Event::new(day, EventKind::ExposureShortfall)
                .county(world.counties[county].id)
                .count(missing)
                .reason(Reason::PoolExhausted),
        );
    }
    drawn
}

/// Turns one drawn exposure into a case, or logs it as blocked or stale.
pub fn execute_exposure(
    world: &mut World,
    id: AgentId,
    params: &CaseParams,
    day: Day,
    rng: &mut SimRng,
    log: &mut EventLog,
) -> Result<()> {
    let agent = world.agent(id);
    if !agent.alive || agent.covid_state != CovidState::Susceptible || !agent.location.is_community() {
        log.push(Event::new(day, EventKind::Skipped).agent(id).reason(Reason::StaleAgent));
        return Ok(());
    }
    let county_id = world.counties[agent.home_county].id;
    if agent.vaccine_immune {
        log.push(
            Event::new(day, EventKind::ExposureBlocked)
                .agent(id)
                .county(county_id)
                .age_group(agent.age_group.into())
                .vaccinated(true),
        );
        return Ok(());
    }
    let (severity, reported) = assign_severity(world, id, &params.severity, rng);
    let agent = world.agent(id);
    log.push(
        Event::new(day, EventKind::Case)
            .agent(id)
            .county(county_id)
            .age_group(agent.age_group.into())
            .state(severity.state())
            .vaccinated(agent.vaccinated)
            .reported(reported),
    );
    match severity {
        Severity::Asymptomatic | Severity::Mild => {
            world.infect(id, severity.state(), reported, day + params.infection_days);
            Ok(())
        }
        Severity::Severe | Severity::Critical => {
            world.agents[id as usize].reported = reported;
            hospitalize(world, id, severity, &params.los, day, rng, log)
        }
    }
}

/// Draws `(severity, reported)` for an agent's new case.
pub fn assign_severity(world: &World, id: AgentId, table: &SeverityTable, rng: &mut SimRng) -> (Severity, bool) {
    let a = world.agent(id);
    table.draw(a.vaccinated, a.age_group.index(), rng)
}

/// Draws and executes `n_exposures` for one county in sequence. Returns the
/// number of cases created. The scheduler interleaves these steps with other
/// actions; this is the same work without the shuffle.
pub fn create_daily_cases(
    world: &mut World,
    county: usize,
    n_exposures: u64,
    params: &CaseParams,
    day: Day,
    rng: &mut SimRng,
    log: &mut EventLog,
) -> Result<u64> {
    let before = log.of_kind(EventKind::Case).count();
    let drawn = draw_exposures(world, county, n_exposures, &params.age_distribution, day, rng, log);
    for id in drawn {
        execute_exposure(world, id, params, day, rng, log)?;
    }
    Ok((log.of_kind(EventKind::Case).count() - before) as u64)
}

fn spare(world: &World, h: usize, critical: bool) -> i64 {
    let f = &world.facilities[h];
    let occ = world.occupancy[h];
    if critical {
        i64::from(f.icu_beds) - i64::from(occ.icu)
    } else {
        i64::from(f.acute_beds) - i64::from(occ.acute)
    }
}

/// Hospital for a new admission: the nearest hospital (by county centroid,
/// home county first) with a free bed of the right class; when every bed is
/// taken, the nearest hospital overall. The flag is true for an over-capacity
/// admission.
pub fn choose_hospital(world: &World, home_county: usize, critical: bool) -> Option<(usize, bool)> {
    let home = &world.counties[home_county];
    let distance = |h: usize| {
        let c = &world.counties[world.facilities[h].county];
        haversine_miles(home.lat, home.lon, c.lat, c.lon)
    };
    let nearest = |candidates: &mut dyn Iterator<Item = usize>| {
        candidates.min_by(|&a, &b| {
            distance(a)
                .total_cmp(&distance(b))
                .then((world.facilities[a].county != home_county).cmp(&(world.facilities[b].county != home_county)))
                .then(a.cmp(&b))
        })
    };
    if let Some(h) = nearest(&mut world.hospitals().filter(|&h| spare(world, h, critical) > 0)) {
        return Some((h, false));
    }
    nearest(&mut world.hospitals()).map(|h| (h, true))
}

/// Admits a severe or critical case with a sampled length of stay.
pub fn hospitalize(
    world: &mut World,
    id: AgentId,
    severity: Severity,
    los: &LosDistribution,
    day: Day,
    rng: &mut SimRng,
    log: &mut EventLog,
) -> Result<()> {
    let critical = match severity {
        Severity::Critical => true,
        Severity::Severe => false,
        _ => return Err(Error::Simulation(format!("agent {id}: only severe or critical cases are hospitalized"))),
    };
    let agent = world.agent(id);
    let (h, over) = choose_hospital(world, agent.home_county, critical)
        .ok_or_else(|| Error::Simulation(format!("agent {id} needs a hospital but the world has none")))?;
    let stay = los.sample_days(rng);
    let facility_id = world.facilities[h].id;
    if over {
        log.push(
            Event::new(day, EventKind::CapacityBreach)
                .agent(id)
                .facility(facility_id)
                .state(severity.state())
                .reason(Reason::OverCapacity),
        );
    }
    let vaccinated = agent.vaccinated;
    world.admit(id, severity.state(), h, day + stay);
    log.push(
        Event::new(day, EventKind::Admission)
            .agent(id)
            .facility(facility_id)
            .state(severity.state())
            .vaccinated(vaccinated)
            .value(f64::from(stay))
            .count(u64::from(day + stay)),
    );
    Ok(())
}

/// Recovers every community case and discharges every hospitalized case
/// whose day has come. Agents are visited in id order.
pub fn process_recoveries(world: &mut World, day: Day, log: &mut EventLog) {
    for i in 0..world.agents.len() {
        let a = &world.agents[i];
        let id = a.id;
        if a.recovery_day == Some(day) {
            let a = &mut world.agents[i];
            a.covid_state = CovidState::Recovered;
            a.recovery_day = None;
            log.push(Event::new(day, EventKind::Recovery).agent(id).state(CovidState::Recovered));
        } else if a.discharge_day == Some(day) {
            let prior = a.covid_state;
            if let Some(h) = world.discharge(id) {
                log.push(
                    Event::new(day, EventKind::Discharge)
                        .agent(id)
                        .facility(world.facilities[h].id)
                        .state(CovidState::Recovered)
                        .other_state(prior),
                );
            }
        }
    }
}

/// Picks a hospital with probability proportional to its spare beds of the
/// requested class.
pub(crate) fn hospital_by_spare_capacity(world: &World, critical: bool, rng: &mut SimRng) -> Option<usize> {
    let hospitals: Vec<usize> = world.hospitals().collect();
    let weights: Vec<f64> = hospitals.iter().map(|&h| spare(world, h, critical).max(0) as f64).collect();
    categorical(&weights, rng).map(|i| hospitals[i])
}

/// Uniform draw of `1..=n` for day-0 community infections.
pub(crate) fn remaining_days(rng: &mut SimRng, n: u32) -> u32 {
    rng.random_range(1..=n)
}
