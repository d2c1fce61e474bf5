use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::pool::SusceptiblePool;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::types::{AgeGroup, AgentId, CountyId, CovidState, Day, FacilityId, Location, AGE_GROUPS};
use crate::visitation::VisitorAssignment;
use crate::workforce::HcwAssignment;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CountySpec {
    pub id: CountyId,
    pub name: String,
    pub population: u64,
    pub age_shares: [f64; AGE_GROUPS],
    /// County centroid, degrees.
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FacilityKind {
    NursingHome,
    Hospital,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FacilitySpec {
    pub id: FacilityId,
    pub kind: FacilityKind,
    pub county: CountyId,
    #[serde(default)]
    pub acute_beds: u32,
    #[serde(default)]
    pub icu_beds: u32,
    #[serde(default)]
    pub nh_capacity: u32,
    /// Residents placed at initialization.
    #[serde(default)]
    pub nh_occupancy: u32,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.min_lat..=self.max_lat).contains(&lat) && (self.min_lon..=self.max_lon).contains(&lon)
    }
}

/// World spec file contents.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub counties: Vec<CountySpec>,
    #[serde(default)]
    pub facilities: Vec<FacilitySpec>,
    /// Agents per resident; county populations are multiplied by this.
    #[serde(default = "one")]
    pub scale_factor: f64,
    #[serde(default)]
    pub bounding_box: Option<BoundingBox>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone)]
pub struct County {
    pub id: CountyId,
    pub name: String,
    /// Resident population before scaling.
    pub population: u64,
    pub age_shares: [f64; AGE_GROUPS],
    pub lat: f64,
    pub lon: f64,
    /// Number of agents homed here.
    pub agents: usize,
}

#[derive(Debug, Clone)]
pub struct Facility {
    pub id: FacilityId,
    pub kind: FacilityKind,
    /// County index.
    pub county: usize,
    pub acute_beds: u32,
    pub icu_beds: u32,
    pub nh_capacity: u32,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Occupancy {
    pub acute: u32,
    pub icu: u32,
    pub residents: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: AgentId,
    pub age_group: AgeGroup,
    /// County index.
    pub home_county: usize,
    pub location: Location,
    /// Where the agent returns after a hospital stay.
    pub home_location: Location,
    pub covid_state: CovidState,
    pub vaccinated: bool,
    pub vaccine_immune: bool,
    pub is_hcw: bool,
    pub reported: bool,
    pub recovery_day: Option<Day>,
    pub discharge_day: Option<Day>,
    pub alive: bool,
}

impl Agent {
    fn new(id: AgentId, age_group: AgeGroup, home_county: usize) -> Self {
        Self {
            id,
            age_group,
            home_county,
            location: Location::Community,
            home_location: Location::Community,
            covid_state: CovidState::Susceptible,
            vaccinated: false,
            vaccine_immune: false,
            is_hcw: false,
            reported: false,
            recovery_day: None,
            discharge_day: None,
            alive: true,
        }
    }

    /// Checks the per-agent invariants.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.vaccine_immune && !self.vaccinated {
            return Err(format!("agent {} immune but not vaccinated", self.id));
        }
        let infectious = self.covid_state.is_infectious_community();
        if self.recovery_day.is_some() != infectious {
            return Err(format!("agent {} recovery_day/state mismatch", self.id));
        }
        let hospitalized = self.location.is_hospital() && self.covid_state.is_hospital_level();
        if self.discharge_day.is_some() != hospitalized {
            return Err(format!("agent {} discharge_day/location mismatch", self.id));
        }
        Ok(())
    }
}

/// Agents, facilities and counties plus the indexes the daily step needs.
#[derive(Debug, Clone)]
pub struct World {
    pub counties: Vec<County>,
    pub facilities: Vec<Facility>,
    pub agents: Vec<Agent>,
    pub scale_factor: f64,
    pub occupancy: Vec<Occupancy>,
    pub pool: SusceptiblePool,
    /// Nursing-home residents in id order.
    pub nh_residents: Vec<AgentId>,
    pub hcws: Vec<HcwAssignment>,
    pub visitors: BTreeMap<AgentId, VisitorAssignment>,
    county_index: HashMap<CountyId, usize>,
    facility_index: HashMap<FacilityId, usize>,
}

impl World {
    pub fn county_index(&self, id: CountyId) -> Option<usize> {
        self.county_index.get(&id).copied()
    }

    pub fn facility_index(&self, id: FacilityId) -> Option<usize> {
        self.facility_index.get(&id).copied()
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id as usize]
    }

    pub fn nursing_homes(&self) -> impl Iterator<Item = usize> + '_ {
        self.facilities
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FacilityKind::NursingHome)
            .map(|(i, _)| i)
    }

    pub fn hospitals(&self) -> impl Iterator<Item = usize> + '_ {
        self.facilities
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FacilityKind::Hospital)
            .map(|(i, _)| i)
    }

    pub fn agents_in_county(&self, county: usize) -> impl Iterator<Item = &Agent> + '_ {
        self.agents.iter().filter(move |a| a.home_county == county)
    }

    /// Removes an agent from the susceptible pool, if present.
    pub fn leave_pool(&mut self, id: AgentId) {
        let a = &self.agents[id as usize];
        let (c, g) = (a.home_county, a.age_group.index());
        self.pool.remove(id, c, g);
    }

    /// Starts an asymptomatic or mild infection in the community.
    pub fn infect(&mut self, id: AgentId, state: CovidState, reported: bool, recovery_day: Day) {
        debug_assert!(state.is_infectious_community());
        self.leave_pool(id);
        let a = &mut self.agents[id as usize];
        a.covid_state = state;
        a.reported = reported;
        a.recovery_day = Some(recovery_day);
    }

    /// Marks an agent recovered without an active infection.
    pub fn mark_recovered(&mut self, id: AgentId) {
        self.leave_pool(id);
        let a = &mut self.agents[id as usize];
        a.covid_state = CovidState::Recovered;
        a.recovery_day = None;
    }

    /// Moves an agent into a hospital bed. Occupancy may exceed capacity.
    pub fn admit(&mut self, id: AgentId, state: CovidState, hospital: usize, discharge_day: Day) {
        debug_assert!(state.is_hospital_level());
        self.leave_pool(id);
        let a = &mut self.agents[id as usize];
        a.covid_state = state;
        a.recovery_day = None;
        a.discharge_day = Some(discharge_day);
        let occ = &mut self.occupancy[hospital];
        if state == CovidState::Critical {
            a.location = Location::HospitalIcu(hospital);
            occ.icu += 1;
        } else {
            a.location = Location::HospitalAcute(hospital);
            occ.acute += 1;
        }
    }

    /// Returns a hospitalized agent to their home location as recovered.
    /// Returns the hospital index they left.
    pub fn discharge(&mut self, id: AgentId) -> Option<usize> {
        let a = &mut self.agents[id as usize];
        let hospital = match a.location {
            Location::HospitalAcute(h) => {
                self.occupancy[h].acute -= 1;
                h
            }
            Location::HospitalIcu(h) => {
                self.occupancy[h].icu -= 1;
                h
            }
            _ => return None,
        };
        a.location = a.home_location;
        a.covid_state = CovidState::Recovered;
        a.discharge_day = None;
        Some(hospital)
    }

    /// Total COVID hospital census as (acute, icu).
    pub fn covid_census(&self) -> (u64, u64) {
        self.agents.iter().fold((0, 0), |(acute, icu), a| match a.location {
            Location::HospitalAcute(_) if a.covid_state.is_hospital_level() => (acute + 1, icu),
            Location::HospitalIcu(_) if a.covid_state.is_hospital_level() => (acute, icu + 1),
            _ => (acute, icu),
        })
    }
}

/// Splits `total` by `shares` with largest-remainder rounding; the parts
/// always sum to `total`.
pub fn largest_remainder(total: u64, shares: &[f64]) -> Vec<u64> {
    let sum: f64 = shares.iter().sum();
    if total == 0 || sum <= 0.0 {
        return vec![0; shares.len()];
    }
    let raw: Vec<f64> = shares.iter().map(|s| total as f64 * s / sum).collect();
    let mut parts: Vec<u64> = raw.iter().map(|r| r.floor() as u64).collect();
    let assigned: u64 = parts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    // stable sort: ties go to the earlier group
    order.sort_by(|&i, &j| {
        let fi = raw[i] - raw[i].floor();
        let fj = raw[j] - raw[j].floor();
        fj.partial_cmp(&fi).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &i in order.iter().take((total - assigned) as usize) {
        parts[i] += 1;
    }
    parts
}

fn validate_spec(spec: &WorldSpec) -> Result<()> {
    if spec.counties.is_empty() {
        return Err(Error::config("world spec has no counties"));
    }
    if !(spec.scale_factor > 0.0 && spec.scale_factor.is_finite()) {
        return Err(Error::config("scale_factor must be positive"));
    }
    let mut seen = HashMap::new();
    for c in &spec.counties {
        if seen.insert(c.id, ()).is_some() {
            return Err(Error::config(format!("duplicate county id {}", c.id)));
        }
        if c.age_shares.iter().any(|s| !(0.0..=1.0).contains(s))
            || (c.age_shares.iter().sum::<f64>() - 1.0).abs() > 1e-6
        {
            return Err(Error::config(format!("county {}: age_shares must be in [0,1] and sum to 1", c.id)));
        }
    }
    let mut fseen = HashMap::new();
    for f in &spec.facilities {
        if fseen.insert(f.id, ()).is_some() {
            return Err(Error::config(format!("duplicate facility id {}", f.id)));
        }
        if !seen.contains_key(&f.county) {
            return Err(Error::config(format!("facility {} references unknown county {}", f.id, f.county)));
        }
        if f.nh_occupancy > f.nh_capacity {
            return Err(Error::config(format!(
                "facility {}: nursing-home occupancy {} exceeds capacity {}",
                f.id, f.nh_occupancy, f.nh_capacity
            )));
        }
        if f.kind == FacilityKind::Hospital && f.nh_occupancy > 0 {
            return Err(Error::config(format!("hospital {} cannot hold nursing-home residents", f.id)));
        }
        if let Some(bb) = &spec.bounding_box {
            if !bb.contains(f.lat, f.lon) {
                return Err(Error::config(format!("facility {} lies outside the bounding box", f.id)));
            }
        }
    }
    Ok(())
}

/// Builds agents, facilities and counties from a world spec.
///
/// Agent counts per county are `round(population * scale_factor)`, split over
/// age groups by largest remainder. Nursing-home residents are drawn from
/// their facility's county, oldest age group first.
pub fn synthesize_world(spec: &WorldSpec, rng: &mut SimRng) -> Result<World> {
    validate_spec(spec)?;

    let county_index: HashMap<CountyId, usize> = spec.counties.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
    let facility_index: HashMap<FacilityId, usize> =
        spec.facilities.iter().enumerate().map(|(i, f)| (f.id, i)).collect();

    let mut counties = Vec::with_capacity(spec.counties.len());
    let mut agents = Vec::new();
    // community agents per county and age group, for resident placement
    let mut by_county_age: Vec<[Vec<AgentId>; AGE_GROUPS]> = Vec::new();
    for (ci, c) in spec.counties.iter().enumerate() {
        let n = (c.population as f64 * spec.scale_factor).round() as u64;
        let per_age = largest_remainder(n, &c.age_shares);
        let mut buckets: [Vec<AgentId>; AGE_GROUPS] = Default::default();
        for (g, &count) in per_age.iter().enumerate() {
            let age = AgeGroup::ALL[g];
            for _ in 0..count {
                let id = agents.len() as AgentId;
                agents.push(Agent::new(id, age, ci));
                buckets[g].push(id);
            }
        }
        by_county_age.push(buckets);
        counties.push(County {
            id: c.id,
            name: c.name.clone(),
            population: c.population,
            age_shares: c.age_shares,
            lat: c.lat,
            lon: c.lon,
            agents: n as usize,
        });
    }
    if agents.len() > u32::MAX as usize - 1 {
        return Err(Error::config("too many agents"));
    }

    let facilities: Vec<Facility> = spec
        .facilities
        .iter()
        .map(|f| Facility {
            id: f.id,
            kind: f.kind,
            county: county_index[&f.county],
            acute_beds: f.acute_beds,
            icu_beds: f.icu_beds,
            nh_capacity: f.nh_capacity,
            lat: f.lat,
            lon: f.lon,
        })
        .collect();
    let mut occupancy = vec![Occupancy::default(); facilities.len()];

    for buckets in &mut by_county_age {
        for b in buckets.iter_mut() {
            b.shuffle(rng);
        }
    }
    let mut nh_residents = Vec::new();
    for (fi, f) in spec.facilities.iter().enumerate() {
        if f.nh_occupancy == 0 {
            continue;
        }
        let ci = county_index[&f.county];
        for _ in 0..f.nh_occupancy {
            let id = by_county_age[ci]
                .iter_mut()
                .rev()
                .find_map(|b| b.pop())
                .ok_or_else(|| {
                    Error::config(format!(
                        "county {} has too few agents to fill nursing home {}",
                        f.county, f.id
                    ))
                })?;
            let a = &mut agents[id as usize];
            a.location = Location::NursingHome(fi);
            a.home_location = Location::NursingHome(fi);
            occupancy[fi].residents += 1;
            nh_residents.push(id);
        }
    }
    nh_residents.sort_unstable();

    let mut pool = SusceptiblePool::new(counties.len(), agents.len());
    for a in &agents {
        if a.location.is_community() {
            pool.insert(a.id, a.home_county, a.age_group.index());
        }
    }

    Ok(World {
        counties,
        facilities,
        agents,
        scale_factor: spec.scale_factor,
        occupancy,
        pool,
        nh_residents,
        hcws: Vec::new(),
        visitors: BTreeMap::new(),
        county_index,
        facility_index,
    })
}
