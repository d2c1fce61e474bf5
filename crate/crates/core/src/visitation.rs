//! Nursing-home visitors and daily visits.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::World;
use crate::rng::{categorical, SimRng};
use crate::sim::{Event, EventKind, EventLog, Reason};
use crate::types::{AgentId, CovidState, Day, FacilityId, Location, AGE_GROUPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisitorClass {
    pub daily_probability: f64,
    pub age_weights: [f64; AGE_GROUPS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisitPolicy {
    pub enabled: bool,
    /// Proof of vaccination required at every nursing home.
    pub require_vaccination_proof: bool,
    /// Nursing homes requiring proof in addition to the global flag.
    pub proof_required_at: Vec<FacilityId>,
    pub max_visits_per_week: Option<u32>,
    pub max_visits_per_month: Option<u32>,
}

impl Default for VisitPolicy {
    fn default() -> Self {
        Self {
            enabled: true,
            require_vaccination_proof: false,
            proof_required_at: Vec::new(),
            max_visits_per_week: None,
            max_visits_per_month: None,
        }
    }
}

impl VisitPolicy {
    pub fn requires_proof(&self, facility: FacilityId) -> bool {
        self.require_vaccination_proof || self.proof_required_at.contains(&facility)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisitationParams {
    /// Probability of exactly 0, 1, 2 or 3 visitors.
    pub count_distribution: [f64; 4],
    pub visitors: [VisitorClass; 3],
    /// Visit probability multiplier for visitors with a mild case.
    pub mild_factor: f64,
    pub policy: VisitPolicy,
}

impl Default for VisitationParams {
    fn default() -> Self {
        Self {
            count_distribution: [0.15, 0.45, 0.25, 0.15],
            visitors: [
                VisitorClass {
                    daily_probability: 0.50,
                    age_weights: [0.10, 0.20, 0.70],
                },
                VisitorClass {
                    daily_probability: 0.16,
                    age_weights: [0.20, 0.40, 0.40],
                },
                VisitorClass {
                    daily_probability: 0.03,
                    age_weights: [0.40, 0.40, 0.20],
                },
            ],
            mild_factor: 0.4,
            policy: VisitPolicy::default(),
        }
    }
}

impl VisitationParams {
    pub fn validate(&self) -> Result<()> {
        crate::case_engine::check_distribution("visitor count distribution", &self.count_distribution)?;
        for (k, v) in self.visitors.iter().enumerate() {
            crate::case_engine::check_distribution(&format!("visitor {} age weights", k + 1), &v.age_weights)?;
            if !(0.0..=1.0).contains(&v.daily_probability) {
                return Err(Error::config(format!("visitor {} daily probability must be in [0, 1]", k + 1)));
            }
        }
        if !(0.0..=1.0).contains(&self.mild_factor) {
            return Err(Error::config("mild_factor must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignedVisitor {
    pub visitor: AgentId,
    pub daily_probability: f64,
    /// 1-based visitor index.
    pub index: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitorAssignment {
    pub resident: AgentId,
    /// Visitor count drawn; may exceed `visitors.len()` when the pool ran out.
    pub drawn: u8,
    pub visitors: Vec<AssignedVisitor>,
}

/// Community agents by county and age group, for visitor sampling.
pub struct VisitorPool {
    by_county: Vec<[Vec<AgentId>; AGE_GROUPS]>,
    statewide: [Vec<AgentId>; AGE_GROUPS],
}

impl VisitorPool {
    pub fn build(world: &World) -> Self {
        let mut by_county: Vec<[Vec<AgentId>; AGE_GROUPS]> = vec![Default::default(); world.counties.len()];
        let mut statewide: [Vec<AgentId>; AGE_GROUPS] = Default::default();
        for a in &world.agents {
            if a.alive && a.location == Location::Community && a.home_location == Location::Community {
                by_county[a.home_county][a.age_group.index()].push(a.id);
                statewide[a.age_group.index()].push(a.id);
            }
        }
        Self { by_county, statewide }
    }

    fn draw_from(list: &[AgentId], exclude: &BTreeSet<AgentId>, rng: &mut SimRng) -> Option<AgentId> {
        if list.len() <= exclude.len() {
            let rest: Vec<AgentId> = list.iter().copied().filter(|id| !exclude.contains(id)).collect();
            return (!rest.is_empty()).then(|| rest[rng.random_range(0..rest.len())]);
        }
        // rejection; the excluded set is at most four agents
        loop {
            let id = list[rng.random_range(0..list.len())];
            if !exclude.contains(&id) {
                return Some(id);
            }
        }
    }

    /// A community agent of `age` from `county`, else from anywhere.
    pub fn draw(&self, county: usize, age: usize, exclude: &BTreeSet<AgentId>, rng: &mut SimRng) -> Option<AgentId> {
        Self::draw_from(&self.by_county[county][age], exclude, rng)
            .or_else(|| Self::draw_from(&self.statewide[age], exclude, rng))
    }
}

/// Draws a resident's visitor count, then each visitor's age group from its
/// class weights, then an agent of that age.
pub fn assign_visitors(
    resident: AgentId,
    world: &World,
    pool: &VisitorPool,
    params: &VisitationParams,
    day: Day,
    rng: &mut SimRng,
    log: &mut EventLog,
) -> VisitorAssignment {
    let r = world.agent(resident);
    let drawn = categorical(&params.count_distribution, rng).unwrap_or(0);
    let mut chosen = BTreeSet::from([resident]);
    let mut visitors = Vec::with_capacity(drawn);
    for (k, class) in params.visitors.iter().enumerate().take(drawn) {
        let Some(age) = categorical(&class.age_weights, rng) else {
            continue;
        };
        let Some(v) = pool.draw(r.home_county, age, &chosen, rng) else {
            continue;
        };
        chosen.insert(v);
        visitors.push(AssignedVisitor {
            visitor: v,
            daily_probability: class.daily_probability,
            index: k as u8 + 1,
        });
    }
    let facility = r.location.facility().map(|f| world.facilities[f].id);
    let mut summary = Event::new(day, EventKind::VisitorsDrawn)
        .agent(resident)
        .county(world.counties[r.home_county].id)
        .count(drawn as u64)
        .value(visitors.len() as f64);
    if let Some(f) = facility {
        summary = summary.facility(f);
    }
    log.push(summary);
    for v in &visitors {
        let va = world.agent(v.visitor);
        log.push(
            Event::new(day, EventKind::VisitorAssigned)
                .agent(resident)
                .other_agent(v.visitor)
                .age_group(va.age_group.index() as u8)
                .county(world.counties[va.home_county].id)
                .value(v.daily_probability)
                .count(u64::from(v.index)),
        );
    }
    if visitors.len() < drawn {
        log.push(
            Event::new(day, EventKind::VisitorShortfall)
                .agent(resident)
                .count((drawn - visitors.len()) as u64)
                .reason(Reason::PoolExhausted),
        );
    }
    VisitorAssignment {
        resident,
        drawn: drawn as u8,
        visitors,
    }
}

/// Assigns visitors to every current nursing-home resident.
pub fn assign_all_visitors(world: &mut World, params: &VisitationParams, rng: &mut SimRng, log: &mut EventLog) {
    let pool = VisitorPool::build(world);
    let residents: Vec<AgentId> = world
        .nh_residents
        .iter()
        .copied()
        .filter(|&id| matches!(world.agent(id).location, Location::NursingHome(_)))
        .collect();
    for id in residents {
        let a = assign_visitors(id, world, &pool, params, 0, rng, log);
        world.visitors.insert(id, a);
    }
}

/// Visit days per visitor, for the weekly and monthly caps.
#[derive(Debug, Clone, Default)]
pub struct VisitHistory {
    days: BTreeMap<AgentId, VecDeque<Day>>,
}

impl VisitHistory {
    /// Visits in the rolling window of `window` days ending on `day`.
    pub fn count_within(&self, visitor: AgentId, day: Day, window: u32) -> u32 {
        self.days.get(&visitor).map_or(0, |d| {
            d.iter().filter(|&&v| v + window > day && v <= day).count() as u32
        })
    }

    pub fn record(&mut self, visitor: AgentId, day: Day) {
        let d = self.days.entry(visitor).or_default();
        d.push_back(day);
        while d.front().is_some_and(|&f| f + 30 <= day) {
            d.pop_front();
        }
    }
}

/// A visitor that cleared or failed the barriers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitOutcome {
    pub visitor: AgentId,
    pub index: u8,
    /// Failing barrier (1-7), or `None` for a visit.
    pub barrier: Option<u8>,
}

fn barrier(
    v: &AssignedVisitor,
    facility: FacilityId,
    params: &VisitationParams,
    day: Day,
    world: &World,
    history: &VisitHistory,
    rng: &mut SimRng,
) -> Option<(u8, Reason)> {
    let a = world.agent(v.visitor);
    let policy = &params.policy;
    if rng.random::<f64>() >= v.daily_probability {
        return Some((1, Reason::NotSelected));
    }
    if !a.location.is_community() {
        return Some((2, Reason::NotInCommunity));
    }
    if !a.alive {
        return Some((3, Reason::NotAlive));
    }
    if a.covid_state.is_hospital_level() {
        return Some((4, Reason::SevereOrCritical));
    }
    if a.covid_state == CovidState::Mild && rng.random::<f64>() >= params.mild_factor {
        return Some((5, Reason::MildStayedHome));
    }
    if policy.requires_proof(facility) && !a.vaccinated {
        return Some((6, Reason::NoVaccinationProof));
    }
    let over_week = policy
        .max_visits_per_week
        .is_some_and(|cap| history.count_within(v.visitor, day, 7) >= cap);
    let over_month = policy
        .max_visits_per_month
        .is_some_and(|cap| history.count_within(v.visitor, day, 30) >= cap);
    if over_week || over_month {
        return Some((7, Reason::VisitCap));
    }
    None
}

/// Runs the seven barriers for each of a resident's visitors, in index
/// order. Visits and blocked visits are both logged.
#[allow(clippy::too_many_arguments)]
pub fn simulate_visits(
    assignment: &VisitorAssignment,
    params: &VisitationParams,
    day: Day,
    world: &World,
    history: &mut VisitHistory,
    rng: &mut SimRng,
    log: &mut EventLog,
) -> Vec<VisitOutcome> {
    if !params.policy.enabled {
        return Vec::new();
    }
    let resident = world.agent(assignment.resident);
    let Location::NursingHome(f) = resident.location else {
        return Vec::new();
    };
    let facility = world.facilities[f].id;
    let mut out = Vec::with_capacity(assignment.visitors.len());
    for v in &assignment.visitors {
        let blocked = barrier(v, facility, params, day, world, history, rng);
        let va = world.agent(v.visitor);
        let e = Event::new(day, if blocked.is_some() { EventKind::VisitBlocked } else { EventKind::Visit })
            .agent(assignment.resident)
            .other_agent(v.visitor)
            .facility(facility)
            .state(va.covid_state)
            .other_state(resident.covid_state)
            .vaccinated(va.vaccinated)
            .count(u64::from(v.index));
        match blocked {
            Some((b, reason)) => log.push(e.value(f64::from(b)).reason(reason)),
            None => {
                history.record(v.visitor, day);
                log.push(e);
            }
        }
        out.push(VisitOutcome {
            visitor: v.visitor,
            index: v.index,
            barrier: blocked.map(|(b, _)| b),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{synthesize_world, CountySpec, FacilityKind, FacilitySpec, WorldSpec};
    use crate::rng::{RngStream, StreamTag};

    fn world(pop: u64, residents: u32) -> World {
        let spec = WorldSpec {
            counties: vec![CountySpec {
                id: 1,
                name: "A".into(),
                population: pop,
                age_shares: [0.5, 0.25, 0.25],
                lat: 35.0,
                lon: -79.0,
            }],
            facilities: vec![FacilitySpec {
                id: 9,
                kind: FacilityKind::NursingHome,
                county: 1,
                acute_beds: 0,
                icu_beds: 0,
                nh_capacity: residents,
                nh_occupancy: residents,
                lat: 35.0,
                lon: -79.0,
            }],
            scale_factor: 1.0,
            bounding_box: None,
        };
        synthesize_world(&spec, &mut RngStream::new(3).substream(StreamTag::Population, 0)).unwrap()
    }

    fn rng(seed: u64) -> SimRng {
        RngStream::new(seed).substream(StreamTag::VisitorAssignment, 0)
    }

    /// One resident with a single first-index visitor at probability `p`.
    fn single(world: &World, p: f64) -> VisitorAssignment {
        let visitor = world.agents.iter().find(|a| a.location.is_community()).unwrap().id;
        VisitorAssignment {
            resident: world.nh_residents[0],
            drawn: 1,
            visitors: vec![AssignedVisitor {
                visitor,
                daily_probability: p,
                index: 1,
            }],
        }
    }

    #[test]
    fn count_and_age_shares() {
        let mut w = world(60_000, 10_000);
        let mut log = EventLog::new();
        assign_all_visitors(&mut w, &VisitationParams::default(), &mut rng(1), &mut log);
        assert_eq!(w.visitors.len(), 10_000);
        let mut counts = [0usize; 4];
        let mut first_age = [0usize; 3];
        let mut firsts = 0;
        for a in w.visitors.values() {
            counts[a.visitors.len()] += 1;
            assert_eq!(a.visitors.len(), a.drawn as usize);
            let ids: BTreeSet<AgentId> = a.visitors.iter().map(|v| v.visitor).collect();
            assert_eq!(ids.len(), a.visitors.len());
            assert!(!ids.contains(&a.resident));
            for v in &a.visitors {
                assert!(w.agent(v.visitor).location.is_community());
                assert_eq!(v.daily_probability, [0.50, 0.16, 0.03][v.index as usize - 1]);
            }
            if let Some(v) = a.visitors.first() {
                first_age[w.agent(v.visitor).age_group.index()] += 1;
                firsts += 1;
            }
        }
        for (c, want) in counts.iter().zip([0.15, 0.45, 0.25, 0.15]) {
            assert!((*c as f64 / 10_000.0 - want).abs() <= 0.02, "{counts:?}");
        }
        for (c, want) in first_age.iter().zip([0.10, 0.20, 0.70]) {
            assert!((*c as f64 / firsts as f64 - want).abs() <= 0.02, "{first_age:?}");
        }
    }

    #[test]
    fn zero_visitors_never_visited() {
        let w = world(200, 1);
        let a = VisitorAssignment {
            resident: w.nh_residents[0],
            drawn: 0,
            visitors: vec![],
        };
        let mut log = EventLog::new();
        let mut h = VisitHistory::default();
        for day in 0..30 {
            assert!(simulate_visits(&a, &VisitationParams::default(), day, &w, &mut h, &mut rng(2), &mut log).is_empty());
        }
        assert!(log.is_empty());
    }

    #[test]
    fn small_pool_shortfall() {
        // only the resident and one other agent exist
        let mut w = world(2, 1);
        let mut log = EventLog::new();
        let mut params = VisitationParams {
            count_distribution: [0.0, 0.0, 0.0, 1.0],
            ..Default::default()
        };
        for v in &mut params.visitors {
            v.age_weights = [1.0, 0.0, 0.0];
        }
        assign_all_visitors(&mut w, &params, &mut rng(1), &mut log);
        let a = &w.visitors[&w.nh_residents[0]];
        assert_eq!(a.drawn, 3);
        assert_eq!(a.visitors.len(), 1);
        assert_eq!(log.of_kind(EventKind::VisitorShortfall).count(), 1);
    }

    fn run(w: &World, a: &VisitorAssignment, params: &VisitationParams, days: u32) -> (u32, EventLog) {
        let mut log = EventLog::new();
        let mut h = VisitHistory::default();
        let mut r = rng(9);
        let mut visits = 0;
        for day in 0..days {
            visits += simulate_visits(a, params, day, w, &mut h, &mut r, &mut log)
                .iter()
                .filter(|o| o.barrier.is_none())
                .count() as u32;
        }
        (visits, log)
    }

    #[test]
    fn disabled_policy_blocks_everything() {
        let w = world(100, 1);
        let params = VisitationParams {
            policy: VisitPolicy {
                enabled: false,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(run(&w, &single(&w, 1.0), &params, 30).0, 0);
    }

    #[test]
    fn hospitalized_visitor_fails_barrier_two() {
        let mut w = world(100, 1);
        let a = single(&w, 1.0);
        let v = a.visitors[0].visitor as usize;
        w.agents[v].location = Location::HospitalAcute(0);
        w.agents[v].covid_state = CovidState::Severe;
        let (visits, log) = run(&w, &a, &VisitationParams::default(), 5);
        assert_eq!(visits, 0);
        assert!(log.iter().all(|e| e.value == Some(2.0) && e.reason == Some(Reason::NotInCommunity)));
    }

    #[test]
    fn mild_visitor_rate() {
        let mut w = world(100, 1);
        let a = single(&w, 0.5);
        w.agents[a.visitors[0].visitor as usize].covid_state = CovidState::Mild;
        let n = 20_000;
        let (visits, _) = run(&w, &a, &VisitationParams::default(), n);
        let rate = f64::from(visits) / f64::from(n);
        let sd = (0.2f64 * 0.8 / f64::from(n)).sqrt();
        assert!((rate - 0.2).abs() <= 3.0 * sd, "{rate}");
    }

    #[test]
    fn proof_required_blocks_unvaccinated() {
        let mut w = world(100, 1);
        let a = single(&w, 1.0);
        let params = VisitationParams {
            policy: VisitPolicy {
                require_vaccination_proof: true,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(run(&w, &a, &params, 10).0, 0);
        w.agents[a.visitors[0].visitor as usize].vaccinated = true;
        let (visits, log) = run(&w, &a, &params, 10);
        assert_eq!(visits, 10);
        assert!(log.of_kind(EventKind::Visit).all(|e| e.vaccinated == Some(true)));
    }

    #[test]
    fn weekly_and_monthly_caps() {
        let w = world(100, 1);
        let a = single(&w, 1.0);
        let weekly = VisitationParams {
            policy: VisitPolicy {
                max_visits_per_week: Some(2),
                ..Default::default()
            },
            ..Default::default()
        };
        // rolling 7-day window: 2 visits in every 7 consecutive days
        let (visits, log) = run(&w, &a, &weekly, 28);
        assert_eq!(visits, 8);
        assert!(log.of_kind(EventKind::VisitBlocked).all(|e| e.value == Some(7.0)));
        let monthly = VisitationParams {
            policy: VisitPolicy {
                max_visits_per_month: Some(4),
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(run(&w, &a, &monthly, 30).0, 4);
        assert_eq!(run(&w, &a, &monthly, 31).0, 5);
    }
}
