//! Writers for input tables and run outputs. CSV with LF line endings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::Days;

use super::inputs::{
    CaseSeries, PbjRow, VaccinationRow, CASES_HEADER, PBJ_HEADER, STATE_LABEL, VACCINATIONS_HEADER,
};
use crate::error::{Error, Result};
use crate::population::WorldSpec;
use crate::seirs::CountyForecast;

pub const FORECAST_HEADER: [&str; 3] = ["county", "day", "estimated_infections"];

/// CSV bytes for a header and rows of already formatted fields.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<String>>())?;
    }
    w.into_inner().map_err(|e| Error::config(format!("csv buffer: {e}")))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn cases_bytes(series: &[CaseSeries]) -> Result<Vec<u8>> {
    let rows = series.iter().flat_map(|s| {
        s.cases.iter().enumerate().map(move |(i, c)| {
            vec![
                s.county.to_string(),
                (s.first_date + Days::new(i as u64)).to_string(),
                c.to_string(),
            ]
        })
    });
    csv_bytes(&CASES_HEADER, rows)
}

pub fn vaccinations_bytes(rows: &[VaccinationRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &VACCINATIONS_HEADER,
        rows.iter().map(|r| {
            vec![
                r.county.map_or_else(|| STATE_LABEL.to_string(), |c| c.to_string()),
                r.age_group.to_string(),
                r.population.to_string(),
                r.vaccinated.to_string(),
            ]
        }),
    )
}

pub fn pbj_bytes(rows: &[PbjRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &PBJ_HEADER,
        rows.iter().map(|r| {
            vec![
                r.facility_id.to_string(),
                r.county.to_string(),
                r.avg_daily_nurse_hours.to_string(),
                r.avg_daily_non_nurse_hours.to_string(),
            ]
        }),
    )
}

pub fn world_bytes(world: &WorldSpec) -> Vec<u8> {
    (serde_json::to_string_pretty(world).expect("world serializes") + "\n").into_bytes()
}

pub fn forecast_bytes(forecasts: &[CountyForecast]) -> Result<Vec<u8>> {
    let rows = forecasts.iter().flat_map(|f| {
        f.infections
            .iter()
            .enumerate()
            .map(move |(d, x)| vec![f.county.to_string(), d.to_string(), x.to_string()])
    });
    csv_bytes(&FORECAST_HEADER, rows)
}
