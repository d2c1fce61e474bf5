use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::types::{AgentId, CountyId, CovidState, Day, FacilityId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Day-0 hospitalization placed by initialization.
    InitAdmission,
    /// Day-0 community infection.
    InitInfection,
    /// Day-0 recovered agent.
    InitRecovered,
    /// Initialization could not place the requested count.
    InitShortfall,
    /// `count` = HCW type index, `aux` = number of sites.
    HcwAssigned,
    /// Visitor count drawn for a resident in `count`; `value` = visitors found.
    VisitorsDrawn,
    /// `other_agent` = visitor, `count` = visitor index (1-3).
    VisitorAssigned,
    /// Fewer visitors than drawn could be found.
    VisitorShortfall,
    /// Per-county daily exposure quota: `value` = forecast infections,
    /// `aux` = expected blocked share, `count` = exposures drawn.
    ExposureQuota,
    ExposureShortfall,
    ExposureBlocked,
    Case,
    Admission,
    CapacityBreach,
    Recovery,
    Discharge,
    /// `agent` = resident, `other_agent` = visitor, `count` = visitor index.
    Visit,
    /// As `Visit`, with the failing barrier (1-7) in `value`.
    VisitBlocked,
    Attendance,
    Absence,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    StaleAgent,
    NotSelected,
    NotWorkday,
    NotInCommunity,
    NotAlive,
    SevereOrCritical,
    MildStayedHome,
    NoVaccinationProof,
    VisitCap,
    BedsExhausted,
    PoolExhausted,
    OverCapacity,
}

/// One row of the event log. Columns not meaningful for a kind stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub day: Day,
    pub seq: u64,
    pub kind: EventKind,
    pub agent: Option<AgentId>,
    pub other_agent: Option<AgentId>,
    pub facility: Option<FacilityId>,
    pub county: Option<CountyId>,
    pub age_group: Option<u8>,
    pub covid_state: Option<u8>,
    pub other_state: Option<u8>,
    pub vaccinated: Option<bool>,
    pub reported: Option<bool>,
    pub value: Option<f64>,
    pub aux: Option<f64>,
    pub count: Option<u64>,
    pub reason: Option<Reason>,
}

impl Event {
    pub fn new(day: Day, kind: EventKind) -> Self {
        Self {
            day,
            seq: 0,
            kind,
            agent: None,
            other_agent: None,
            facility: None,
            county: None,
            age_group: None,
            covid_state: None,
            other_state: None,
            vaccinated: None,
            reported: None,
            value: None,
            aux: None,
            count: None,
            reason: None,
        }
    }

    pub fn agent(mut self, id: AgentId) -> Self {
        self.agent = Some(id);
        self
    }

    pub fn other_agent(mut self, id: AgentId) -> Self {
        self.other_agent = Some(id);
        self
    }

    pub fn facility(mut self, id: FacilityId) -> Self {
        self.facility = Some(id);
        self
    }

    pub fn county(mut self, id: CountyId) -> Self {
        self.county = Some(id);
        self
    }

    pub fn age_group(mut self, a: u8) -> Self {
        self.age_group = Some(a);
        self
    }

    pub fn state(mut self, s: CovidState) -> Self {
        self.covid_state = Some(s.code());
        self
    }

    pub fn other_state(mut self, s: CovidState) -> Self {
        self.other_state = Some(s.code());
        self
    }

    pub fn vaccinated(mut self, v: bool) -> Self {
        self.vaccinated = Some(v);
        self
    }

    pub fn reported(mut self, r: bool) -> Self {
        self.reported = Some(r);
        self
    }

    pub fn value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn aux(mut self, v: f64) -> Self {
        self.aux = Some(v);
        self
    }

    pub fn count(mut self, n: u64) -> Self {
        self.count = Some(n);
        self
    }

    pub fn reason(mut self, r: Reason) -> Self {
        self.reason = Some(r);
        self
    }

    pub fn covid_state(&self) -> Option<CovidState> {
        self.covid_state.and_then(|c| CovidState::try_from(c).ok())
    }
}

/// Append-only record of every stochastic outcome, ordered by `(day, seq)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    entries: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an event, stamping its sequence number.
    ///
    /// Panics if `event.day` is earlier than the last logged day; the clock
    /// never moves backwards.
    pub fn push(&mut self, mut event: Event) {
        if let Some(last) = self.entries.last() {
            assert!(
                event.day >= last.day,
                "event for day {} logged after day {}",
                event.day,
                last.day
            );
        }
        event.seq = self.entries.len() as u64;
        self.entries.push(event);
    }

    pub fn entries(&self) -> &[Event] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.entries.iter()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.entries.iter().filter(move |e| e.kind == kind)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        for e in &self.entries {
            wtr.serialize(e)?;
        }
        if self.entries.is_empty() {
            wtr.write_record(HEADER)?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut log = EventLog::new();
        for row in rdr.deserialize() {
            let e: Event = row?;
            log.entries.push(e);
        }
        Ok(log)
    }

    /// SHA-256 of the CSV serialization, hex encoded.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv_bytes()))
    }
}

pub const HEADER: [&str; 16] = [
    "day",
    "seq",
    "kind",
    "agent",
    "other_agent",
    "facility",
    "county",
    "age_group",
    "covid_state",
    "other_state",
    "vaccinated",
    "reported",
    "value",
    "aux",
    "count",
    "reason",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seq_follows_push_order() {
        let mut log = EventLog::new();
        log.push(Event::new(0, EventKind::Recovery).agent(3));
        log.push(Event::new(1, EventKind::Case).agent(1));
        assert_eq!(log.entries()[0].seq, 0);
        assert_eq!(log.entries()[1].seq, 1);
    }

    #[test]
    #[should_panic(expected = "logged after day")]
    fn rejects_backwards_day() {
        let mut log = EventLog::new();
        log.push(Event::new(2, EventKind::Recovery));
        log.push(Event::new(1, EventKind::Recovery));
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let mut log = EventLog::new();
        log.push(Event::new(0, EventKind::ExposureQuota).county(37001).value(12.345678901).aux(0.1).count(12));
        log.push(
            Event::new(0, EventKind::Visit)
                .agent(4)
                .other_agent(9)
                .facility(100)
                .state(CovidState::Mild)
                .other_state(CovidState::Susceptible)
                .vaccinated(true),
        );
        log.push(Event::new(1, EventKind::VisitBlocked).agent(4).count(5).reason(Reason::MildStayedHome));
        let bytes = log.to_csv_bytes();
        let back = EventLog::read_csv(&bytes[..]).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.to_csv_bytes(), bytes);
        assert!(String::from_utf8(bytes).unwrap().starts_with("day,seq,kind,agent,"));
    }

    #[test]
    fn empty_log_still_has_header() {
        let bytes = EventLog::new().to_csv_bytes();
        assert_eq!(String::from_utf8(bytes).unwrap(), HEADER.join(",") + "\n");
    }
}
