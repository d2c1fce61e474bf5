use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::types::Day;

/// Simulation time in whole days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    day: Day,
    horizon: Day,
    start_date: NaiveDate,
}

impl SimClock {
    pub fn new(start_date: NaiveDate, horizon: Day) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::config("horizon must be at least 1 day"));
        }
        Ok(Self {
            day: 0,
            horizon,
            start_date,
        })
    }

    pub fn day(&self) -> Day {
        self.day
    }

    pub fn horizon(&self) -> Day {
        self.horizon
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn is_finished(&self) -> bool {
        self.day >= self.horizon
    }

    pub fn date_of(&self, day: Day) -> NaiveDate {
        self.start_date + Days::new(u64::from(day))
    }

    /// Moves to the next day. Returns false once the horizon is reached.
    pub fn advance(&mut self) -> bool {
        if self.day < self.horizon {
            self.day += 1;
        }
        self.day < self.horizon
    }
}
