//! Synthetic world construction and day-0 initialization.

mod init;
mod pool;
mod vaccination;
mod world;

pub use init::{init_community_infections, init_covid_hospitalizations, InitHospitalization};
pub use pool::SusceptiblePool;
pub use vaccination::{
    assign_vaccinations, assign_vaccine_immunity, community_probability, VaccinationData, VaccinationParams,
    VaccinationRates,
};
pub use world::{
    largest_remainder, synthesize_world, Agent, BoundingBox, County, CountySpec, Facility, FacilityKind,
    FacilitySpec, Occupancy, World, WorldSpec,
};
