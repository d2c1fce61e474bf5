use rand::Rng;

use super::assign::pick_facility;
use super::{HcwAssignment, WorkforceParams};
use crate::population::World;
use crate::rng::SimRng;
use crate::sim::{Event, EventKind, EventLog, Reason};
use crate::types::{AgentId, CovidState, Day};

pub const HOURS_PER_SHIFT: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AttendanceRecord {
    pub day: Day,
    pub agent: AgentId,
    /// World facility index.
    pub facility: usize,
    pub covid_state: CovidState,
    pub hours: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttendanceOutcome {
    Attended(AttendanceRecord),
    Absent(Reason),
}

/// One HCW's workday: the workday draw, then the community, alive,
/// severity and mild-illness checks in that order. Workers with several
/// sites pick one at random.
pub fn simulate_attendance(
    hcw: &HcwAssignment,
    day: Day,
    world: &World,
    params: &WorkforceParams,
    rng: &mut SimRng,
    log: &mut EventLog,
) -> AttendanceOutcome {
    let agent = world.agent(hcw.agent);
    let outcome = if rng.random::<f64>() >= hcw.workday_probability {
        AttendanceOutcome::Absent(Reason::NotWorkday)
    } else if !agent.location.is_community() {
        AttendanceOutcome::Absent(Reason::NotInCommunity)
    } else if !agent.alive {
        AttendanceOutcome::Absent(Reason::NotAlive)
    } else if agent.covid_state.is_hospital_level() {
        AttendanceOutcome::Absent(Reason::SevereOrCritical)
    } else if agent.covid_state == CovidState::Mild && rng.random::<f64>() >= params.mild_attendance.factor() {
        AttendanceOutcome::Absent(Reason::MildStayedHome)
    } else {
        AttendanceOutcome::Attended(AttendanceRecord {
            day,
            agent: hcw.agent,
            facility: pick_facility(hcw, rng),
            covid_state: agent.covid_state,
            hours: HOURS_PER_SHIFT,
        })
    };
    let base = |kind| {
        Event::new(day, kind)
            .agent(hcw.agent)
            .state(agent.covid_state)
            .vaccinated(agent.vaccinated)
            .count(hcw.hcw_type.index() as u64)
    };
    match &outcome {
        AttendanceOutcome::Attended(r) => log.push(
            base(EventKind::Attendance)
                .facility(world.facilities[r.facility].id)
                .value(r.hours),
        ),
        AttendanceOutcome::Absent(reason) => log.push(base(EventKind::Absence).reason(*reason)),
    }
    outcome
}
