//! County SEIRS forecasting.
//!
//! Day-0 compartments are estimated from the reported-case history
//! (smoothing, case multipliers, windowed sums), then each county's SEIRS
//! model is stepped forward one day at a time to give daily estimated
//! infections.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::CountyId;

/// Case multiplier in effect on `[start, end)`; `end = None` is open-ended.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MultiplierPeriod {
    pub start: NaiveDate,
    pub end: Option<NaiveDate>,
    pub multiplier: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SeirsParams {
    pub case_multipliers: Vec<MultiplierPeriod>,
    pub infectious_days: u32,
    pub exposure_days: u32,
    pub immunity_days: u32,
    pub r0: f64,
    /// Effective reproductive number for the forecast; `None` uses `r0`.
    pub re: Option<f64>,
    /// Rate used to convert next-day infections into the exposed share.
    pub alpha: f64,
    pub smoothing_window: usize,
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

impl Default for SeirsParams {
    fn default() -> Self {
        Self {
            case_multipliers: vec![
                MultiplierPeriod {
                    start: ymd(2020, 2, 1),
                    end: Some(ymd(2020, 6, 1)),
                    multiplier: 10.0,
                },
                MultiplierPeriod {
                    start: ymd(2020, 10, 1),
                    end: Some(ymd(2021, 12, 15)),
                    multiplier: 4.0,
                },
                MultiplierPeriod {
                    start: ymd(2021, 12, 15),
                    end: None,
                    multiplier: 8.0,
                },
            ],
            infectious_days: 6,
            exposure_days: 5,
            immunity_days: 90,
            r0: 1.25,
            re: None,
            alpha: 1.0 / 6.0,
            smoothing_window: 10,
        }
    }
}

impl SeirsParams {
    pub fn validate(&self) -> Result<()> {
        if self.infectious_days == 0 || self.exposure_days == 0 || self.immunity_days == 0 {
            return Err(Error::config("SEIRS durations must be positive"));
        }
        if !(self.re() >= 0.0) {
            return Err(Error::config("re must be non-negative"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::config("alpha must be positive"));
        }
        if self.smoothing_window == 0 {
            return Err(Error::config("smoothing_window must be positive"));
        }
        for p in &self.case_multipliers {
            if !(p.multiplier >= 1.0) {
                return Err(Error::config(format!("case multiplier {} is below 1", p.multiplier)));
            }
            if p.end.is_some_and(|e| e <= p.start) {
                return Err(Error::config(format!("case multiplier period starting {} is empty", p.start)));
            }
        }
        Ok(())
    }

    pub fn re(&self) -> f64 {
        self.re.unwrap_or(self.r0)
    }

    pub fn gamma(&self) -> f64 {
        1.0 / f64::from(self.infectious_days)
    }

    pub fn sigma(&self) -> f64 {
        1.0 / f64::from(self.exposure_days)
    }

    pub fn omega(&self) -> f64 {
        1.0 / f64::from(self.immunity_days)
    }

    pub fn beta(&self) -> f64 {
        self.re() * self.gamma()
    }

    pub fn multiplier_for(&self, date: NaiveDate) -> Option<f64> {
        self.case_multipliers
            .iter()
            .find(|p| date >= p.start && p.end.is_none_or(|e| date < e))
            .map(|p| p.multiplier)
    }

    /// Days of case history, through the start date, a compartment estimate needs.
    pub fn required_history(&self) -> usize {
        (self.immunity_days + self.infectious_days) as usize
    }
}

/// Compartment shares of one county's population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeirsState {
    pub s: f64,
    pub e: f64,
    pub i: f64,
    pub r: f64,
}

impl SeirsState {
    pub const SUSCEPTIBLE: SeirsState = SeirsState {
        s: 1.0,
        e: 0.0,
        i: 0.0,
        r: 0.0,
    };

    pub fn total(&self) -> f64 {
        self.s + self.e + self.i + self.r
    }

    fn in_bounds(&self, tol: f64) -> bool {
        [self.s, self.e, self.i, self.r].iter().all(|x| *x >= -tol && *x <= 1.0 + tol)
    }
}

/// Daily reported cases for one county starting at `first_date`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountyCaseHistory {
    pub county: CountyId,
    /// Resident population.
    pub population: f64,
    pub first_date: NaiveDate,
    pub cases: Vec<f64>,
}

impl CountyCaseHistory {
    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.first_date + Days::new(index as u64)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let d = (date - self.first_date).num_days();
        (d >= 0 && (d as usize) < self.cases.len()).then_some(d as usize)
    }
}

/// Daily estimated infections for the forecast horizon, in persons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountyForecast {
    pub county: CountyId,
    pub infections: Vec<f64>,
}

/// Trailing rolling mean over `window` days (shorter at the start of the
/// series), rescaled so the smoothed total equals the raw total.
pub fn smooth_and_scale(cases: &[f64], window: usize) -> Result<Vec<f64>> {
    if cases.len() < window {
        return Err(Error::config(format!(
            "case series has {} days; smoothing needs at least {window}",
            cases.len()
        )));
    }
    let mut smoothed = Vec::with_capacity(cases.len());
    let mut running = 0.0;
    for i in 0..cases.len() {
        running += cases[i];
        if i >= window {
            running -= cases[i - window];
        }
        let n = (i + 1).min(window) as f64;
        smoothed.push(running / n);
    }
    let raw: f64 = cases.iter().sum();
    let total: f64 = smoothed.iter().sum();
    if total > 0.0 {
        let k = raw / total;
        smoothed.iter_mut().for_each(|x| *x *= k);
    } else {
        smoothed.iter_mut().for_each(|x| *x = 0.0);
    }
    Ok(smoothed)
}

/// Multiplies each day's smoothed cases by the multiplier in effect on its
/// date.
pub fn estimate_infections(smoothed: &[f64], first_date: NaiveDate, params: &SeirsParams) -> Result<Vec<f64>> {
    let mut gaps: Vec<NaiveDate> = Vec::new();
    let out: Vec<f64> = smoothed
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let date = first_date + Days::new(k as u64);
            match params.multiplier_for(date) {
                Some(m) => c * m,
                None => {
                    gaps.push(date);
                    0.0
                }
            }
        })
        .collect();
    if let (Some(first), Some(last)) = (gaps.first(), gaps.last()) {
        return Err(Error::config(format!(
            "no case multiplier covers {} day(s) between {first} and {last}",
            gaps.len()
        )));
    }
    Ok(out)
}

/// Estimated infections for one county through `through` (inclusive).
pub fn infection_series(history: &CountyCaseHistory, through: NaiveDate, params: &SeirsParams) -> Result<Vec<f64>> {
    let last = history.index_of(through).ok_or_else(|| {
        Error::config(format!(
            "county {}: case history ({} days from {}) does not reach {through}",
            history.county,
            history.cases.len(),
            history.first_date
        ))
    })?;
    let smoothed = smooth_and_scale(&history.cases[..=last], params.smoothing_window)?;
    estimate_infections(&smoothed, history.first_date, params)
}

/// Day-0 compartments for a county whose model starts on `start_date`.
///
/// The estimate is taken on the day before the start, so the "next day"
/// infections feeding the exposed share are the start date's. The history
/// must therefore run through `start_date`.
pub fn estimate_compartments(
    history: &CountyCaseHistory,
    start_date: NaiveDate,
    params: &SeirsParams,
) -> Result<SeirsState> {
    params.validate()?;
    if !(history.population > 0.0) {
        return Err(Error::config(format!("county {}: population must be positive", history.county)));
    }
    let infections = infection_series(history, start_date, params)?;
    let next = infections.len() - 1;
    let needed = params.required_history();
    if infections.len() < needed {
        return Err(Error::config(format!(
            "county {}: {} days of history through {start_date}; compartment estimation needs {needed}",
            history.county,
            infections.len()
        )));
    }
    let i = next - 1;
    let pop = history.population;
    let window = params.infectious_days as usize;
    let infectious_share = |d: usize| infections[d + 1 - window..=d].iter().sum::<f64>() / pop;

    let e = infections[i + 1] / (pop * params.alpha);
    let inf = infectious_share(i);
    // recovered flow summed over the immunity window: TR_i - TR_{i-immunity}
    let immunity = params.immunity_days as usize;
    let r: f64 = (i + 1 - immunity..=i).map(|d| infectious_share(d) * params.gamma()).sum();
    let s = 1.0 - e - inf - r;
    if s < 0.0 {
        return Err(Error::Numerical(format!(
            "county {}: estimated compartments leave S = {s:.6} < 0; case inputs are too high for the estimator",
            history.county
        )));
    }
    Ok(SeirsState { s, e, i: inf, r })
}

/// Runs the daily SEIRS update for `horizon` days. Returns the forecast and
/// the compartment trajectory (`horizon + 1` states, starting with `state0`).
///
/// Forecast day `d` is the exposed-to-infectious flow `sigma * E_d` times the
/// population.
pub fn run_seirs_trajectory(
    county: CountyId,
    state0: SeirsState,
    population: f64,
    params: &SeirsParams,
    horizon: u32,
) -> Result<(CountyForecast, Vec<SeirsState>)> {
    const TOL: f64 = 1e-9;
    if !state0.in_bounds(TOL) || (state0.total() - 1.0).abs() > TOL {
        return Err(Error::Numerical(format!("county {county}: invalid initial state {state0:?}")));
    }
    let (beta, sigma, gamma, omega) = (params.beta(), params.sigma(), params.gamma(), params.omega());
    let mut x = state0;
    let mut states = Vec::with_capacity(horizon as usize + 1);
    let mut infections = Vec::with_capacity(horizon as usize);
    states.push(x);
    for day in 0..horizon {
        infections.push(sigma * x.e * population);
        let new_exposed = beta * x.s * x.i;
        let incident = sigma * x.e;
        let recovering = gamma * x.i;
        let waning = omega * x.r;
        x = SeirsState {
            s: x.s - new_exposed + waning,
            e: x.e + new_exposed - incident,
            i: x.i + incident - recovering,
            r: x.r + recovering - waning,
        };
        if !x.in_bounds(TOL) || (x.total() - 1.0).abs() > TOL {
            return Err(Error::Numerical(format!(
                "county {county}: SEIRS diverged on day {day}: {x:?}"
            )));
        }
        states.push(x);
    }
    Ok((CountyForecast { county, infections }, states))
}

pub fn run_seirs(
    county: CountyId,
    state0: SeirsState,
    population: f64,
    params: &SeirsParams,
    horizon: u32,
) -> Result<CountyForecast> {
    run_seirs_trajectory(county, state0, population, params, horizon).map(|(f, _)| f)
}

/// Uses reported cases times the case multiplier in place of a SEIRS
/// forecast, for historical runs.
pub fn historical_forecast(
    history: &CountyCaseHistory,
    start_date: NaiveDate,
    horizon: u32,
    params: &SeirsParams,
) -> Result<CountyForecast> {
    let infections = (0..horizon)
        .map(|d| {
            let date = start_date + Days::new(u64::from(d));
            let idx = history.index_of(date).ok_or_else(|| {
                Error::config(format!("county {}: no reported cases for {date}", history.county))
            })?;
            let m = params
                .multiplier_for(date)
                .ok_or_else(|| Error::config(format!("no case multiplier covers {date}")))?;
            Ok(history.cases[idx] * m)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CountyForecast {
        county: history.county,
        infections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn history(cases: Vec<f64>, population: f64, first: NaiveDate) -> CountyCaseHistory {
        CountyCaseHistory {
            county: 1,
            population,
            first_date: first,
            cases,
        }
    }

    #[test]
    fn constant_series_smooths_to_itself() {
        let s = smooth_and_scale(&[7.0; 30], 10).unwrap();
        assert!(s.iter().all(|x| (x - 7.0).abs() < 1e-12));
    }

    #[test]
    fn zero_series_stays_zero() {
        let s = smooth_and_scale(&[0.0; 30], 10).unwrap();
        assert!(s.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn short_series_rejected() {
        assert!(smooth_and_scale(&[1.0; 9], 10).is_err());
    }

    #[test]
    fn trailing_window_alignment() {
        // a single spike on day 0 spreads over days 0..=9 only
        let mut c = vec![0.0; 20];
        c[0] = 10.0;
        let s = smooth_and_scale(&c, 10).unwrap();
        assert!(s[10..].iter().all(|x| *x == 0.0));
        assert!(s[..10].iter().all(|x| *x > 0.0));
    }

    proptest! {
        #[test]
        fn smoothing_preserves_total(cases in prop::collection::vec(0.0f64..5_000.0, 100)) {
            let s = smooth_and_scale(&cases, 10).unwrap();
            // direct summation oracle
            let mut raw = 0.0;
            for c in &cases { raw += c; }
            let mut out = 0.0;
            for x in &s { out += x; }
            prop_assert!((out - raw).abs() <= 1e-6 * raw.max(1.0));
            prop_assert_eq!(s.len(), cases.len());
        }
    }

    #[test]
    fn multipliers_by_date() {
        let p = SeirsParams::default();
        let one = [1.0];
        assert_eq!(estimate_infections(&one, ymd(2022, 1, 10), &p).unwrap(), vec![8.0]);
        assert_eq!(estimate_infections(&one, ymd(2020, 11, 3), &p).unwrap(), vec![4.0]);
        assert_eq!(estimate_infections(&one, ymd(2020, 3, 3), &p).unwrap(), vec![10.0]);
        assert_eq!(estimate_infections(&one, ymd(2021, 12, 15), &p).unwrap(), vec![8.0]);
        assert_eq!(estimate_infections(&[0.0], ymd(2022, 1, 10), &p).unwrap(), vec![0.0]);
    }

    #[test]
    fn schedule_gap_is_reported() {
        let p = SeirsParams::default();
        let err = estimate_infections(&[1.0; 5], ymd(2020, 7, 1), &p).unwrap_err();
        assert!(err.to_string().contains("2020-07-01"), "{err}");
    }

    /// 1 infection/day after the multiplier: reported cases 1/8 per day
    /// entirely inside the 8x period.
    fn constant_incidence(pop: f64, scale: f64) -> (CountyCaseHistory, NaiveDate) {
        let first = ymd(2022, 1, 1);
        let h = history(vec![scale / 8.0; 200], pop, first);
        (h, first + Days::new(150))
    }

    #[test]
    fn constant_incidence_compartments() {
        let (h, start) = constant_incidence(600.0, 1.0);
        let s = estimate_compartments(&h, start, &SeirsParams::default()).unwrap();
        assert!((s.i - 0.01).abs() < 1e-9, "{s:?}");
        assert!((s.e - 0.01).abs() < 1e-9, "{s:?}");
        assert!((s.r - 0.15).abs() < 1e-9, "{s:?}");
        assert!((s.s - 0.83).abs() < 1e-9, "{s:?}");
        assert_eq!(s.total(), 1.0);
    }

    #[test]
    fn zero_history_is_fully_susceptible() {
        let h = history(vec![0.0; 200], 1000.0, ymd(2022, 1, 1));
        let s = estimate_compartments(&h, ymd(2022, 6, 1), &SeirsParams::default()).unwrap();
        assert_eq!(s, SeirsState::SUSCEPTIBLE);
    }

    #[test]
    fn short_history_rejected() {
        let h = history(vec![1.0; 95], 1000.0, ymd(2022, 1, 1));
        let start = ymd(2022, 1, 1) + Days::new(94);
        assert!(estimate_compartments(&h, start, &SeirsParams::default()).is_err());
        let h = history(vec![1.0; 96], 1000.0, ymd(2022, 1, 1));
        let start = ymd(2022, 1, 1) + Days::new(95);
        assert!(estimate_compartments(&h, start, &SeirsParams::default()).is_ok());
    }

    #[test]
    fn saturated_inputs_name_the_county() {
        let h = history(vec![100.0; 200], 1000.0, ymd(2022, 1, 1));
        let err = estimate_compartments(&h, ymd(2022, 6, 1), &SeirsParams::default()).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
        assert!(err.to_string().contains("county 1"));
    }

    #[test]
    fn scale_invariance() {
        let (h1, start) = constant_incidence(600.0, 1.0);
        let mut h2 = h1.clone();
        h2.population *= 2.0;
        h2.cases.iter_mut().for_each(|c| *c *= 2.0);
        let a = estimate_compartments(&h1, start, &SeirsParams::default()).unwrap();
        let b = estimate_compartments(&h2, start, &SeirsParams::default()).unwrap();
        for (x, y) in [(a.s, b.s), (a.e, b.e), (a.i, b.i), (a.r, b.r)] {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn susceptible_only_forecasts_zero() {
        let f = run_seirs(1, SeirsState::SUSCEPTIBLE, 1e5, &SeirsParams::default(), 30).unwrap();
        assert_eq!(f.infections.len(), 30);
        assert!(f.infections.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn no_transmission_decays() {
        let p = SeirsParams {
            re: Some(0.0),
            ..Default::default()
        };
        let s0 = SeirsState {
            s: 0.83,
            e: 0.01,
            i: 0.01,
            r: 0.15,
        };
        let (f, states) = run_seirs_trajectory(1, s0, 1e5, &p, 30).unwrap();
        for w in states.windows(2) {
            assert!(w[1].i <= w[0].i + 1e-15 || w[0].e > 0.0);
        }
        for w in f.infections[p.exposure_days as usize..].windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    proptest! {
        #[test]
        fn conservation_every_step(
            e in 0.0f64..0.05, i in 0.0f64..0.05, r in 0.0f64..0.5, re in 0.0f64..3.0,
        ) {
            let s0 = SeirsState { s: 1.0 - e - i - r, e, i, r };
            let p = SeirsParams { re: Some(re), ..Default::default() };
            let (f, states) = run_seirs_trajectory(7, s0, 50_000.0, &p, 30).unwrap();
            for s in &states {
                prop_assert!((s.total() - 1.0).abs() <= 1e-9);
                prop_assert!(s.s >= 0.0 && s.e >= 0.0 && s.i >= 0.0 && s.r >= 0.0);
            }
            prop_assert!(f.infections.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn historical_uses_reported_cases() {
        let h = history(vec![3.0; 40], 1000.0, ymd(2022, 1, 1));
        let f = historical_forecast(&h, ymd(2022, 1, 5), 10, &SeirsParams::default()).unwrap();
        assert_eq!(f.infections, vec![24.0; 10]);
        assert!(historical_forecast(&h, ymd(2022, 2, 5), 10, &SeirsParams::default()).is_err());
    }
}
