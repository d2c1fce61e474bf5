use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::categorical;
use crate::types::{Severity, AGE_GROUPS};

/// Probabilities over (asymptomatic, mild, severe, critical).
pub type SeverityRow = [f64; 4];

/// Severity probabilities keyed by (vaccinated, reported, age group).
///
/// Reported unvaccinated rows for age groups 0 and 1 default to the
/// calibration targets; the age-65+ row has no default and must be supplied.
/// Reported vaccinated rows split their hospital share 4:1 between severe and
/// critical. Nonreported rows never hospitalize.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SeverityTable {
    pub reported_fraction: f64,
    pub reported_unvaccinated: [Option<SeverityRow>; AGE_GROUPS],
    pub reported_vaccinated: [Option<SeverityRow>; AGE_GROUPS],
    pub nonreported_unvaccinated: [Option<SeverityRow>; AGE_GROUPS],
    pub nonreported_vaccinated: [Option<SeverityRow>; AGE_GROUPS],
}

impl Default for SeverityTable {
    fn default() -> Self {
        let vacc = Some([0.25, 0.65, 0.08, 0.02]);
        let nonrep_unvacc = Some([0.25, 0.75, 0.0, 0.0]);
        let nonrep_vacc = Some([0.5, 0.5, 0.0, 0.0]);
        Self {
            reported_fraction: 0.125,
            reported_unvaccinated: [Some([0.050, 0.935, 0.012, 0.003]), Some([0.05, 0.904, 0.037, 0.009]), None],
            reported_vaccinated: [vacc; AGE_GROUPS],
            nonreported_unvaccinated: [nonrep_unvacc; AGE_GROUPS],
            nonreported_vaccinated: [nonrep_vacc; AGE_GROUPS],
        }
    }
}

impl SeverityTable {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.reported_fraction) {
            return Err(Error::config("severity.reported_fraction must be in [0,1]"));
        }
        let blocks = [
            ("reported_unvaccinated", &self.reported_unvaccinated, false),
            ("reported_vaccinated", &self.reported_vaccinated, false),
            ("nonreported_unvaccinated", &self.nonreported_unvaccinated, true),
            ("nonreported_vaccinated", &self.nonreported_vaccinated, true),
        ];
        for (name, rows, nonreported) in blocks {
            for (age, row) in rows.iter().enumerate() {
                let row = row.ok_or_else(|| {
                    Error::config(format!("severity.{name}[{age}] is required but missing"))
                })?;
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::config(format!("severity.{name}[{age}] has entries outside [0,1]")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::config(format!("severity.{name}[{age}] sums to {sum}, not 1")));
                }
                if nonreported && (row[2] != 0.0 || row[3] != 0.0) {
                    return Err(Error::config(format!(
                        "severity.{name}[{age}]: nonreported cases cannot be severe or critical"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Row for a case. Call only on a validated table.
    pub fn row(&self, vaccinated: bool, reported: bool, age: usize) -> SeverityRow {
        let block = match (reported, vaccinated) {
            (true, false) => &self.reported_unvaccinated,
            (true, true) => &self.reported_vaccinated,
            (false, false) => &self.nonreported_unvaccinated,
            (false, true) => &self.nonreported_vaccinated,
        };
        block[age].expect("severity table validated")
    }

    /// Draws the reported flag, then a severity from the matching row.
    pub fn draw<R: Rng + ?Sized>(&self, vaccinated: bool, age: usize, rng: &mut R) -> (Severity, bool) {
        let reported = rng.random::<f64>() < self.reported_fraction;
        let row = self.row(vaccinated, reported, age);
        let idx = categorical(&row, rng).expect("validated row has positive mass");
        (Severity::from_index(idx), reported)
    }

    /// Like [`Self::draw`] but conditioned on a non-hospital severity.
    /// Falls back to mild when a row has no asymptomatic or mild mass.
    pub fn draw_community<R: Rng + ?Sized>(&self, vaccinated: bool, age: usize, rng: &mut R) -> (Severity, bool) {
        let reported = rng.random::<f64>() < self.reported_fraction;
        let row = self.row(vaccinated, reported, age);
        let idx = categorical(&row[..2], rng).unwrap_or(1);
        (Severity::from_index(idx), reported)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngStream, StreamTag};

    fn full_table() -> SeverityTable {
        let mut t = SeverityTable::default();
        t.reported_unvaccinated[2] = Some([0.05, 0.85, 0.075, 0.025]);
        t
    }

    #[test]
    fn default_requires_oldest_reported_row() {
        let err = SeverityTable::default().validate().unwrap_err();
        assert!(err.to_string().contains("reported_unvaccinated[2]"));
        full_table().validate().unwrap();
    }

    #[test]
    fn rows_match_calibration_targets() {
        let t = full_table();
        assert_eq!(t.row(false, true, 0), [0.050, 0.935, 0.012, 0.003]);
        assert_eq!(t.row(false, true, 1), [0.05, 0.904, 0.037, 0.009]);
        assert_eq!(t.row(false, false, 0), [0.25, 0.75, 0.0, 0.0]);
        assert_eq!(t.row(true, false, 2), [0.5, 0.5, 0.0, 0.0]);
        assert_eq!(t.reported_fraction, 0.125);
    }

    #[test]
    fn rejects_non_stochastic_row() {
        let mut t = full_table();
        t.reported_vaccinated[0] = Some([0.3, 0.65, 0.08, 0.02]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn rejects_hospitalizing_nonreported_row() {
        let mut t = full_table();
        t.nonreported_vaccinated[1] = Some([0.5, 0.4, 0.1, 0.0]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn nonreported_never_hospital_level() {
        let t = full_table();
        let mut rng = RngStream::new(8).substream(StreamTag::Execute, 0);
        for i in 0..50_000 {
            let (sev, reported) = t.draw(i % 2 == 0, i % 3, &mut rng);
            if !reported {
                assert!(matches!(sev, Severity::Asymptomatic | Severity::Mild));
            }
        }
    }

    #[test]
    fn community_draw_never_hospital_level() {
        let t = full_table();
        let mut rng = RngStream::new(8).substream(StreamTag::CommunityInit, 0);
        for i in 0..20_000 {
            let (sev, _) = t.draw_community(i % 2 == 0, i % 3, &mut rng);
            assert!(matches!(sev, Severity::Asymptomatic | Severity::Mild));
        }
    }
}
