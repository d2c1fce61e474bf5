use serde::{Deserialize, Serialize};

use super::world::World;
use crate::case_engine::{hospital_by_spare_capacity, remaining_days, LosDistribution, SeverityTable};
use crate::error::{Error, Result};
use crate::rng::{categorical, SimRng};
use crate::seirs::SeirsState;
use crate::sim::{Event, EventKind, EventLog, Reason};
use crate::types::{CovidState, AGE_GROUPS};

/// COVID hospital census placed at day 0, before scaling.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct InitHospitalization {
    pub severe_count: u64,
    pub critical_count: u64,
    pub age_distribution: [f64; AGE_GROUPS],
}

impl Default for InitHospitalization {
    fn default() -> Self {
        Self {
            severe_count: 1_194,
            critical_count: 417,
            age_distribution: [0.31, 0.25, 0.44],
        }
    }
}

impl InitHospitalization {
    pub fn validate(&self) -> Result<()> {
        crate::case_engine::check_distribution("hospital_init.age_distribution", &self.age_distribution)
    }

    /// Requested (severe, critical) counts after applying the world scale.
    pub fn scaled_counts(&self, scale: f64) -> (u64, u64) {
        (
            (self.severe_count as f64 * scale).round() as u64,
            (self.critical_count as f64 * scale).round() as u64,
        )
    }
}

/// Picks one susceptible community agent statewide: age group by `weights`,
/// then uniform within the group.
fn pick_statewide(world: &mut World, weights: &[f64; AGE_GROUPS], rng: &mut SimRng) -> Option<u32> {
    let counties = world.counties.len();
    let sizes: [usize; AGE_GROUPS] = std::array::from_fn(|a| (0..counties).map(|c| world.pool.len(c, a)).sum());
    let masked: [f64; AGE_GROUPS] = std::array::from_fn(|a| if sizes[a] > 0 { weights[a] } else { 0.0 });
    let age = categorical(&masked, rng)?;
    let per_county: Vec<f64> = (0..counties).map(|c| world.pool.len(c, age) as f64).collect();
    let county = categorical(&per_county, rng)?;
    let mut one_hot = [0.0; AGE_GROUPS];
    one_hot[age] = 1.0;
    world.pool.sample(county, &one_hot, 1, rng).pop()
}

/// Moves community agents into hospital beds so the day-0 census matches the
/// configured severe (acute) and critical (ICU) counts. Hospitals are chosen
/// in proportion to spare beds. When beds run out the census is clipped and
/// a shortfall event is logged.
pub fn init_covid_hospitalizations(
    world: &mut World,
    init: &InitHospitalization,
    los: &LosDistribution,
    rng: &mut SimRng,
    log: &mut EventLog,
) -> Result<(u64, u64)> {
    init.validate()?;
    let (severe, critical) = init.scaled_counts(world.scale_factor);
    let mut placed = [0u64; 2];
    for (slot, state, wanted) in [(0, CovidState::Severe, severe), (1, CovidState::Critical, critical)] {
        let is_critical = state == CovidState::Critical;
        while placed[slot] < wanted {
            let Some(h) = hospital_by_spare_capacity(world, is_critical, rng) else {
                log.push(
                    Event::new(0, EventKind::InitShortfall)
                        .state(state)
                        .count(wanted - placed[slot])
                        .reason(Reason::BedsExhausted),
                );
                break;
            };
            let Some(id) = pick_statewide(world, &init.age_distribution, rng) else {
                log.push(
                    Event::new(0, EventKind::InitShortfall)
                        .state(state)
                        .count(wanted - placed[slot])
                        .reason(Reason::PoolExhausted),
                );
                break;
            };
            let remaining = los.sample_remaining(rng);
            world.admit(id, state, h, remaining);
            let a = world.agent(id);
            log.push(
                Event::new(0, EventKind::InitAdmission)
                    .agent(id)
                    .facility(world.facilities[h].id)
                    .county(world.counties[a.home_county].id)
                    .age_group(a.age_group.into())
                    .state(state)
                    .vaccinated(a.vaccinated)
                    .value(f64::from(remaining))
                    .count(u64::from(remaining)),
            );
            placed[slot] += 1;
        }
    }
    Ok((placed[0], placed[1]))
}

/// Seeds day-0 community infections and recoveries from each county's
/// estimated compartments. Per county, `round(I * agents)` susceptible
/// community agents become asymptomatic or mild and `round(R * agents)`
/// become recovered, picked by `age_distribution`.
pub fn init_community_infections(
    world: &mut World,
    day0: &[SeirsState],
    table: &SeverityTable,
    age_distribution: &[f64; AGE_GROUPS],
    infection_days: u32,
    rng: &mut SimRng,
    log: &mut EventLog,
) -> Result<()> {
    if day0.len() != world.counties.len() {
        return Err(Error::config(format!(
            "{} day-0 compartment states for {} counties",
            day0.len(),
            world.counties.len()
        )));
    }
    for (c, state) in day0.iter().enumerate() {
        let agents = world.counties[c].agents as f64;
        let infected = (state.i * agents).round() as u64;
        let recovered = (state.r * agents).round() as u64;
        let available = world.pool.county_len(c) as u64;
        if infected + recovered > available {
            return Err(Error::config(format!(
                "county {}: {} infected + {} recovered exceed {} susceptible community agents",
                world.counties[c].id, infected, recovered, available
            )));
        }
        let county_id = world.counties[c].id;
        for id in world.pool.sample(c, age_distribution, infected as usize, rng) {
            let a = world.agent(id);
            let (severity, reported) = table.draw_community(a.vaccinated, a.age_group.index(), rng);
            let days_left = remaining_days(rng, infection_days);
            world.infect(id, severity.state(), reported, days_left);
            let a = world.agent(id);
            log.push(
                Event::new(0, EventKind::InitInfection)
                    .agent(id)
                    .county(county_id)
                    .age_group(a.age_group.into())
                    .state(severity.state())
                    .vaccinated(a.vaccinated)
                    .reported(reported)
                    .count(u64::from(days_left)),
            );
        }
        for id in world.pool.sample(c, age_distribution, recovered as usize, rng) {
            world.mark_recovered(id);
            let a = world.agent(id);
            log.push(
                Event::new(0, EventKind::InitRecovered)
                    .agent(id)
                    .county(county_id)
                    .age_group(a.age_group.into())
                    .state(CovidState::Recovered),
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{synthesize_world, CountySpec, FacilityKind, FacilitySpec, WorldSpec};
    use crate::rng::{RngStream, StreamTag};

    fn table() -> SeverityTable {
        let mut t = SeverityTable::default();
        t.reported_unvaccinated[2] = Some([0.05, 0.85, 0.075, 0.025]);
        t
    }

    fn world(pop: u64, acute: u32, icu: u32) -> World {
        let mut facilities = Vec::new();
        for (i, split) in [(0u32, 2u32), (1, 1)] {
            facilities.push(FacilitySpec {
                id: 900 + i,
                kind: FacilityKind::Hospital,
                county: 1,
                acute_beds: acute / 3 * split,
                icu_beds: icu / 3 * split,
                nh_capacity: 0,
                nh_occupancy: 0,
                lat: 35.0,
                lon: -79.0,
            });
        }
        let spec = WorldSpec {
            counties: vec![CountySpec {
                id: 1,
                name: "A".into(),
                population: pop,
                age_shares: [0.6, 0.25, 0.15],
                lat: 35.0,
                lon: -79.0,
            }],
            facilities,
            scale_factor: 1.0,
            bounding_box: None,
        };
        synthesize_world(&spec, &mut RngStream::new(1).substream(StreamTag::Population, 0)).unwrap()
    }

    fn init(severe: u64, critical: u64) -> InitHospitalization {
        InitHospitalization {
            severe_count: severe,
            critical_count: critical,
            ..Default::default()
        }
    }

    #[test]
    fn zero_request_places_nobody() {
        let mut w = world(1000, 30, 30);
        let mut log = EventLog::new();
        let mut rng = RngStream::new(2).substream(StreamTag::HospitalInit, 0);
        let placed = init_covid_hospitalizations(&mut w, &init(0, 0), &LosDistribution::default(), &mut rng, &mut log).unwrap();
        assert_eq!(placed, (0, 0));
        assert_eq!(w.covid_census(), (0, 0));
    }

    #[test]
    fn full_scale_census_is_exact() {
        let mut w = world(20_000, 1_500, 600);
        let mut log = EventLog::new();
        let mut rng = RngStream::new(2).substream(StreamTag::HospitalInit, 0);
        let placed =
            init_covid_hospitalizations(&mut w, &init(1_194, 417), &LosDistribution::default(), &mut rng, &mut log).unwrap();
        assert_eq!(placed, (1_194, 417));
        assert_eq!(w.covid_census(), (1_194, 417));
        for a in &w.agents {
            a.check_invariants().unwrap();
        }
    }

    #[test]
    fn clipped_to_capacity_with_warning() {
        let mut w = world(1000, 3, 3);
        let mut log = EventLog::new();
        let mut rng = RngStream::new(2).substream(StreamTag::HospitalInit, 0);
        let placed = init_covid_hospitalizations(&mut w, &init(10, 1), &LosDistribution::default(), &mut rng, &mut log).unwrap();
        assert_eq!(placed, (3, 1));
        let warn: Vec<_> = log.of_kind(EventKind::InitShortfall).collect();
        assert_eq!(warn.len(), 1);
        assert_eq!(warn[0].count, Some(7));
    }

    #[test]
    fn hospitalized_age_shares_follow_weights() {
        let mut w = world(60_000, 15_000, 0);
        let mut log = EventLog::new();
        let mut rng = RngStream::new(3).substream(StreamTag::HospitalInit, 0);
        init_covid_hospitalizations(&mut w, &init(10_000, 0), &LosDistribution::default(), &mut rng, &mut log).unwrap();
        let mut counts = [0f64; 3];
        for e in log.of_kind(EventKind::InitAdmission) {
            counts[e.age_group.unwrap() as usize] += 1.0;
        }
        for (c, t) in counts.iter().zip([0.31, 0.25, 0.44]) {
            assert!((c / 10_000.0 - t).abs() <= 0.02, "{counts:?}");
        }
    }

    #[test]
    fn community_init_counts_by_hand() {
        let mut w = world(600, 0, 0);
        let mut log = EventLog::new();
        let mut rng = RngStream::new(4).substream(StreamTag::CommunityInit, 0);
        let s = SeirsState {
            s: 0.83,
            e: 0.01,
            i: 0.01,
            r: 0.15,
        };
        init_community_infections(&mut w, &[s], &table(), &[0.70, 0.18, 0.12], 7, &mut rng, &mut log).unwrap();
        assert_eq!(log.of_kind(EventKind::InitInfection).count(), 6);
        assert_eq!(log.of_kind(EventKind::InitRecovered).count(), 90);
        for a in &w.agents {
            assert!(!a.covid_state.is_hospital_level());
            if let Some(d) = a.recovery_day {
                assert!((1..=7).contains(&d));
            }
            a.check_invariants().unwrap();
        }
    }

    #[test]
    fn zero_compartments_change_nothing() {
        let mut w = world(600, 0, 0);
        let mut log = EventLog::new();
        let mut rng = RngStream::new(4).substream(StreamTag::CommunityInit, 0);
        let s = SeirsState {
            s: 1.0,
            e: 0.0,
            i: 0.0,
            r: 0.0,
        };
        init_community_infections(&mut w, &[s], &table(), &[0.70, 0.18, 0.12], 7, &mut rng, &mut log).unwrap();
        assert!(log.is_empty());
        assert!(w.agents.iter().all(|a| a.covid_state == CovidState::Susceptible));
    }

    #[test]
    fn oversubscribed_county_is_config_error() {
        let mut w = world(100, 0, 0);
        let mut log = EventLog::new();
        let mut rng = RngStream::new(4).substream(StreamTag::CommunityInit, 0);
        let s = SeirsState {
            s: 0.0,
            e: 0.0,
            i: 0.5,
            r: 0.6,
        };
        let res = init_community_infections(&mut w, &[s], &table(), &[0.70, 0.18, 0.12], 7, &mut rng, &mut log);
        assert!(matches!(res, Err(Error::Config(_))));
    }

    #[test]
    fn infection_age_shares_follow_case_distribution() {
        let mut w = world(100_000, 0, 0);
        let mut log = EventLog::new();
        let mut rng = RngStream::new(5).substream(StreamTag::CommunityInit, 0);
        let s = SeirsState {
            s: 0.9,
            e: 0.0,
            i: 0.1,
            r: 0.0,
        };
        init_community_infections(&mut w, &[s], &table(), &[0.70, 0.18, 0.12], 7, &mut rng, &mut log).unwrap();
        let mut counts = [0f64; 3];
        for e in log.of_kind(EventKind::InitInfection) {
            counts[e.age_group.unwrap() as usize] += 1.0;
        }
        let n: f64 = counts.iter().sum();
        assert_eq!(n, 10_000.0);
        for (c, t) in counts.iter().zip([0.70, 0.18, 0.12]) {
            assert!((c / n - t).abs() <= 0.02, "{counts:?}");
        }
    }
}
