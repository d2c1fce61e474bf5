use serde::Serialize;

use super::{Action, ActionQueue, Event, EventKind, EventLog, Reason, SimClock};
use crate::case_engine::{
    draw_exposures, execute_exposure, expected_block_share, inflate_to_exposures, process_recoveries, CaseParams,
};
use crate::error::{Error, Result};
use crate::population::World;
use crate::rng::{RngStream, SimRng, StreamTag};
use crate::types::{Day, Location, AGE_GROUPS};
use crate::visitation::{simulate_visits, VisitHistory, VisitationParams};
use crate::workforce::{simulate_attendance, WorkforceParams};

/// Exposures to create in one county on one day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DailyQuota {
    /// County index.
    pub county: usize,
    /// Forecast infections at agent scale.
    pub infections: f64,
    /// `round(PC)` after inflation for blocked exposures.
    pub exposures: u64,
    /// Expected share of exposures that will be blocked.
    pub block_share: f64,
}

/// Builds one day's queue: a recovery batch, one new-case action per drawn
/// exposure, one visitation action per current nursing-home resident and
/// one attendance action per HCW. Quotas and shortfalls are logged.
pub fn enqueue_daily_actions(
    day: Day,
    world: &mut World,
    quotas: &[DailyQuota],
    age_weights: &[f64; AGE_GROUPS],
    rng: &mut SimRng,
    log: &mut EventLog,
) -> Result<ActionQueue> {
    if world.counties.is_empty() {
        return Err(Error::config("world is not initialized"));
    }
    let mut queue = ActionQueue::new();
    queue.push(Action::Recovery);
    for q in quotas {
        log.push(
            Event::new(day, EventKind::ExposureQuota)
                .county(world.counties[q.county].id)
                .value(q.infections)
                .aux(q.block_share)
                .count(q.exposures),
        );
        for agent in draw_exposures(world, q.county, q.exposures, age_weights, day, rng, log) {
            queue.push(Action::NewCase { agent, county: q.county });
        }
    }
    for &resident in &world.nh_residents {
        if matches!(world.agent(resident).location, Location::NursingHome(_)) {
            queue.push(Action::Visitation { resident });
        }
    }
    for hcw in 0..world.hcws.len() {
        queue.push(Action::Attendance { hcw });
    }
    Ok(queue)
}

/// Parameters the daily step needs.
#[derive(Debug, Clone, Default)]
pub struct StepParams {
    pub cases: CaseParams,
    pub visitation: VisitationParams,
    pub workforce: WorkforceParams,
}

/// An initialized world stepping through its horizon.
pub struct Simulation {
    pub world: World,
    pub log: EventLog,
    clock: SimClock,
    rng: RngStream,
    params: StepParams,
    /// Agent-scale forecast infections by county index, then day.
    forecast: Vec<Vec<f64>>,
    /// Vaccination rate per county index used for inflation.
    county_vaccination: Vec<f64>,
    visits: VisitHistory,
}

impl Simulation {
    /// Wraps an initialized world. `forecast[c]` must cover the horizon.
    pub fn from_world(
        world: World,
        log: EventLog,
        params: StepParams,
        forecast: Vec<Vec<f64>>,
        county_vaccination: Vec<f64>,
        clock: SimClock,
        seed: u64,
    ) -> Result<Self> {
        params.cases.validate()?;
        params.visitation.validate()?;
        params.workforce.validate()?;
        let n = world.counties.len();
        if forecast.len() != n || county_vaccination.len() != n {
            return Err(Error::config(format!(
                "forecast for {} counties and vaccination rates for {} counties; the world has {n}",
                forecast.len(),
                county_vaccination.len()
            )));
        }
        if let Some(c) = forecast.iter().position(|f| f.len() < clock.horizon() as usize) {
            return Err(Error::config(format!(
                "county {} forecast covers {} days but the horizon is {}",
                world.counties[c].id,
                forecast[c].len(),
                clock.horizon()
            )));
        }
        Ok(Self {
            world,
            log,
            clock,
            rng: RngStream::new(seed),
            params,
            forecast,
            county_vaccination,
            visits: VisitHistory::default(),
        })
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn params(&self) -> &StepParams {
        &self.params
    }

    pub fn forecast(&self) -> &[Vec<f64>] {
        &self.forecast
    }

    pub fn county_vaccination(&self) -> &[f64] {
        &self.county_vaccination
    }

    /// Exposure quotas for `day` given the world's current state.
    pub fn daily_quotas(&self, day: Day) -> Result<Vec<DailyQuota>> {
        let cases = &self.params.cases;
        (0..self.world.counties.len())
            .map(|c| {
                let infections = self.forecast[c][day as usize];
                let pc = inflate_to_exposures(infections, self.county_vaccination[c], cases.v_eff)?;
                Ok(DailyQuota {
                    county: c,
                    infections,
                    exposures: pc.round() as u64,
                    block_share: expected_block_share(&self.world, c, &cases.age_distribution),
                })
            })
            .collect()
    }

    /// Builds the current day's queue.
    pub fn enqueue(&mut self) -> Result<ActionQueue> {
        let day = self.clock.day();
        let quotas = self.daily_quotas(day)?;
        let mut rng = self.rng.substream(StreamTag::Exposure, day);
        enqueue_daily_actions(
            day,
            &mut self.world,
            &quotas,
            &self.params.cases.age_distribution,
            &mut rng,
            &mut self.log,
        )
    }

    /// Shuffles a queue and executes every action once, in order.
    pub fn shuffle_and_execute(&mut self, mut queue: ActionQueue) -> Result<()> {
        let day = self.clock.day();
        queue.shuffle(&mut self.rng.substream(StreamTag::Shuffle, day));
        let mut rng = self.rng.substream(StreamTag::Execute, day);
        for action in queue.into_actions() {
            self.execute(action, day, &mut rng)?;
        }
        Ok(())
    }

    fn execute(&mut self, action: Action, day: Day, rng: &mut SimRng) -> Result<()> {
        let world = &mut self.world;
        let log = &mut self.log;
        match action {
            Action::Recovery => process_recoveries(world, day, log),
            Action::NewCase { agent, .. } => execute_exposure(world, agent, &self.params.cases, day, rng, log)?,
            Action::Visitation { resident } => {
                let a = world.agent(resident);
                if !a.alive || !matches!(a.location, Location::NursingHome(_)) {
                    log.push(Event::new(day, EventKind::Skipped).agent(resident).reason(Reason::StaleAgent));
                } else if let Some(assignment) = world.visitors.get(&resident) {
                    simulate_visits(assignment, &self.params.visitation, day, world, &mut self.visits, rng, log);
                }
            }
            Action::Attendance { hcw } => {
                let h = &world.hcws[hcw];
                simulate_attendance(h, day, world, &self.params.workforce, rng, log);
            }
        }
        Ok(())
    }

    /// Runs one day. Returns false once the horizon is reached.
    pub fn step(&mut self) -> Result<bool> {
        if self.clock.is_finished() {
            return Ok(false);
        }
        let queue = self.enqueue()?;
        self.shuffle_and_execute(queue)?;
        self.clock.advance();
        Ok(!self.clock.is_finished())
    }

    pub fn run(&mut self) -> Result<()> {
        while self.step()? {}
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{synthesize_world, CountySpec, FacilityKind, FacilitySpec, WorldSpec};
    use crate::types::CovidState;
    use crate::visitation::{AssignedVisitor, VisitorAssignment};
    use crate::workforce::{HcwAssignment, HcwType};
    use chrono::NaiveDate;

    fn world(residents: u32) -> World {
        let spec = WorldSpec {
            counties: vec![CountySpec {
                id: 1,
                name: "A".into(),
                population: 200,
                age_shares: [0.6, 0.25, 0.15],
                lat: 35.0,
                lon: -79.0,
            }],
            facilities: vec![
                FacilitySpec {
                    id: 5,
                    kind: FacilityKind::NursingHome,
                    county: 1,
                    acute_beds: 0,
                    icu_beds: 0,
                    nh_capacity: 10,
                    nh_occupancy: residents,
                    lat: 35.0,
                    lon: -79.0,
                },
                FacilitySpec {
                    id: 6,
                    kind: FacilityKind::Hospital,
                    county: 1,
                    acute_beds: 10,
                    icu_beds: 5,
                    nh_capacity: 0,
                    nh_occupancy: 0,
                    lat: 35.0,
                    lon: -79.0,
                },
            ],
            scale_factor: 1.0,
            bounding_box: None,
        };
        synthesize_world(&spec, &mut RngStream::new(1).substream(StreamTag::Population, 0)).unwrap()
    }

    fn params() -> StepParams {
        let mut p = StepParams::default();
        p.cases.severity.reported_unvaccinated[2] = Some([0.05, 0.85, 0.075, 0.025]);
        p
    }

    fn with_staff(mut w: World, hcws: usize) -> World {
        for i in 0..hcws {
            let agent = w.agents.iter().filter(|a| a.location.is_community()).nth(i).unwrap().id;
            w.agents[agent as usize].is_hcw = true;
            w.hcws.push(HcwAssignment {
                agent,
                hcw_type: HcwType::SingleSiteFullTime,
                primary_facility: Some(0),
                secondary_facilities: vec![],
                workday_probability: 5.0 / 7.0,
            });
        }
        w
    }

    fn sim(w: World, forecast: f64, horizon: u32, seed: u64) -> Simulation {
        let clock = SimClock::new(NaiveDate::from_ymd_opt(2021, 12, 15).unwrap(), horizon).unwrap();
        Simulation::from_world(w, EventLog::new(), params(), vec![vec![forecast; horizon as usize]], vec![0.0], clock, seed)
            .unwrap()
    }

    #[test]
    fn empty_world_queue_is_recovery_only() {
        let mut s = sim(world(0), 0.0, 1, 1);
        let q = s.enqueue().unwrap();
        assert_eq!(q.actions(), &[Action::Recovery]);
    }

    #[test]
    fn counts_visitation_and_attendance() {
        let mut s = sim(with_staff(world(3), 2), 0.0, 1, 1);
        let q = s.enqueue().unwrap();
        assert_eq!(q.count_where(|a| matches!(a, Action::Visitation { .. })), 3);
        assert_eq!(q.count_where(|a| matches!(a, Action::Attendance { .. })), 2);
        assert_eq!(q.len(), 6);
    }

    #[test]
    fn same_seed_same_order() {
        let order = |seed| {
            let mut s = sim(with_staff(world(3), 5), 4.0, 1, seed);
            let mut q = s.enqueue().unwrap();
            q.shuffle(&mut RngStream::new(seed).substream(StreamTag::Shuffle, 0));
            q.into_actions()
        };
        assert_eq!(order(3), order(3));
        assert_eq!(order(3).len(), 1 + 4 + 3 + 5);
    }

    #[test]
    fn cases_match_quota_without_immunity() {
        let mut s = sim(world(0), 6.4, 5, 2);
        s.run().unwrap();
        assert!(s.clock().is_finished());
        for day in 0..5 {
            let cases = s.log.iter().filter(|e| e.day == day && e.kind == EventKind::Case).count();
            assert_eq!(cases, 6);
        }
    }

    #[test]
    fn stale_resident_is_skipped() {
        let mut w = world(1);
        let r = w.nh_residents[0];
        let v = w.agents.iter().find(|a| a.location.is_community()).unwrap().id;
        w.visitors.insert(
            r,
            VisitorAssignment {
                resident: r,
                drawn: 1,
                visitors: vec![AssignedVisitor {
                    visitor: v,
                    daily_probability: 1.0,
                    index: 1,
                }],
            },
        );
        let mut s = sim(w, 0.0, 2, 1);
        let q = s.enqueue().unwrap();
        s.world.agents[r as usize].alive = false;
        s.shuffle_and_execute(q).unwrap();
        let skipped: Vec<_> = s.log.of_kind(EventKind::Skipped).collect();
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].reason, Some(Reason::StaleAgent));
        assert_eq!(s.log.of_kind(EventKind::Visit).count(), 0);
    }

    #[test]
    fn hospitalized_hcw_stays_home() {
        let mut w = with_staff(world(0), 1);
        let id = w.hcws[0].agent;
        w.agents[id as usize].covid_state = CovidState::Severe;
        w.agents[id as usize].location = Location::HospitalAcute(1);
        let mut s = sim(w, 0.0, 20, 4);
        s.run().unwrap();
        assert_eq!(s.log.of_kind(EventKind::Attendance).count(), 0);
        assert_eq!(s.log.of_kind(EventKind::Absence).count(), 20);
    }

    #[test]
    fn log_days_monotone() {
        let mut s = sim(with_staff(world(3), 3), 3.0, 10, 9);
        s.run().unwrap();
        let days: Vec<Day> = s.log.iter().map(|e| e.day).collect();
        assert!(days.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*days.last().unwrap(), 9);
    }
}
