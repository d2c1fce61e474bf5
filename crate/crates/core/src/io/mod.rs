//! Input loading, synthetic bundles, report writers.

mod inputs;
mod reports;
mod svg;
mod synth;
mod writers;

pub use inputs::{
    cross_check, load_cases, load_inputs, load_pbj, load_vaccinations, load_world, CaseSeries, Inputs, PbjRow,
    VaccinationRow, CASES_HEADER, PBJ_HEADER, STATE_LABEL, VACCINATIONS_HEADER,
};
pub use reports::{
    attendance_bytes, census, census_bytes, pattern1, pattern1_bytes, pattern2, pattern2_bytes, pattern3,
    pattern3_bytes, pattern4_bytes, summary, vaccination_label, visits_bytes, write_reports, CensusRow, Pattern1Row,
    Pattern2Row, Pattern3Row, ReportContext, Summary,
};
pub use svg::line_chart;
pub use synth::{synth_inputs, write_bundle, SynthCounty, SynthHospital, SynthNursingHome, SynthSpec};
pub use writers::{
    cases_bytes, csv_bytes, forecast_bytes, pbj_bytes, vaccinations_bytes, world_bytes, write_file, FORECAST_HEADER,
};
