//! County-level agent-based simulation of COVID-19 cases, hospital census,
//! nursing-home visitation and healthcare-worker attendance, driven by
//! SEIRS county forecasts.

pub mod case_engine;
pub mod config;
pub mod error;
pub mod geo;
pub mod io;
pub mod pipeline;
pub mod population;
pub mod rng;
pub mod seirs;
pub mod sim;
pub mod types;
pub mod validate;
pub mod visitation;
pub mod workforce;

pub use config::RunConfig;
pub use error::{Error, Result};
