//! Run assembly: forecast, initialization order and the simulation handle.

use crate::config::{ForecastSource, RunConfig};
use crate::error::Result;
use crate::io::Inputs;
use crate::population::{
    assign_vaccinations, assign_vaccine_immunity, init_community_infections, init_covid_hospitalizations,
    synthesize_world, VaccinationRates,
};
use crate::rng::{RngStream, StreamTag};
use crate::seirs::{estimate_compartments, historical_forecast, run_seirs_trajectory, CountyForecast, SeirsState};
use crate::sim::{EventLog, SimClock, Simulation, StepParams};
use crate::visitation::assign_all_visitors;
use crate::workforce::{assign_hcws, compute_staff_targets, FacilityStaffTarget};

/// Per-county forecasts in world county order.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSet {
    pub day0: Vec<SeirsState>,
    /// Daily infections at population scale.
    pub forecasts: Vec<CountyForecast>,
    /// SEIRS compartments per day (`horizon + 1` states); empty for
    /// historical forecasts.
    pub trajectories: Vec<Vec<SeirsState>>,
}

pub fn forecast(cfg: &RunConfig, inputs: &Inputs) -> Result<ForecastSet> {
    let histories = inputs.case_histories()?;
    let mut out = ForecastSet {
        day0: Vec::new(),
        forecasts: Vec::new(),
        trajectories: Vec::new(),
    };
    for h in &histories {
        let s0 = estimate_compartments(h, cfg.start_date, &cfg.seirs)?;
        out.day0.push(s0);
        match cfg.forecast_source {
            ForecastSource::Seirs => {
                let (f, traj) = run_seirs_trajectory(h.county, s0, h.population, &cfg.seirs, cfg.horizon)?;
                out.forecasts.push(f);
                out.trajectories.push(traj);
            }
            ForecastSource::Historical => {
                out.forecasts.push(historical_forecast(h, cfg.start_date, cfg.horizon, &cfg.seirs)?);
            }
        }
    }
    Ok(out)
}

/// An initialized simulation plus what was derived while building it.
pub struct Prepared {
    pub sim: Simulation,
    pub forecast: ForecastSet,
    pub targets: Vec<FacilityStaffTarget>,
}

/// Builds the world and runs initialization in order: synthesis, HCWs,
/// vaccination, immunity, day-0 hospitalizations, day-0 community
/// infections, visitors.
pub fn prepare(cfg: &RunConfig, inputs: &Inputs) -> Result<Prepared> {
    cfg.validate()?;
    let rng = RngStream::new(cfg.seed);
    let mut log = EventLog::new();
    let forecast = forecast(cfg, inputs)?;

    let mut world = synthesize_world(&inputs.world, &mut rng.substream(StreamTag::Population, 0))?;
    let targets = compute_staff_targets(&inputs.pbj_hours(), &world, &cfg.workforce)?;
    assign_hcws(&mut world, &targets, &cfg.workforce, &mut rng.substream(StreamTag::Workforce, 0), &mut log)?;
    let rates = VaccinationRates::resolve(&cfg.vaccination, &inputs.vaccination_data(), &world)?;
    assign_vaccinations(&mut world, &rates, &mut rng.substream(StreamTag::Vaccination, 0));
    assign_vaccine_immunity(&mut world, cfg.cases.v_eff, &mut rng.substream(StreamTag::Immunity, 0))?;
    init_covid_hospitalizations(
        &mut world,
        &cfg.hospital_init,
        &cfg.cases.los,
        &mut rng.substream(StreamTag::HospitalInit, 0),
        &mut log,
    )?;
    init_community_infections(
        &mut world,
        &forecast.day0,
        &cfg.cases.severity,
        &cfg.cases.age_distribution,
        cfg.cases.infection_days,
        &mut rng.substream(StreamTag::CommunityInit, 0),
        &mut log,
    )?;
    assign_all_visitors(&mut world, &cfg.visitation, &mut rng.substream(StreamTag::VisitorAssignment, 0), &mut log);

    let scale = world.scale_factor;
    let agent_forecast = forecast
        .forecasts
        .iter()
        .map(|f| f.infections.iter().map(|x| x * scale).collect())
        .collect();
    let county_vaccination = (0..world.counties.len()).map(|c| rates.county_rate(&world, c)).collect();
    let params = StepParams {
        cases: cfg.cases.clone(),
        visitation: cfg.visitation.clone(),
        workforce: cfg.workforce.clone(),
    };
    let clock = SimClock::new(cfg.start_date, cfg.horizon)?;
    let sim = Simulation::from_world(world, log, params, agent_forecast, county_vaccination, clock, cfg.seed)?;
    Ok(Prepared { sim, forecast, targets })
}

/// Prepares and runs a simulation to its horizon.
pub fn run(cfg: &RunConfig, inputs: &Inputs) -> Result<Prepared> {
    let mut p = prepare(cfg, inputs)?;
    p.sim.run()?;
    Ok(p)
}
