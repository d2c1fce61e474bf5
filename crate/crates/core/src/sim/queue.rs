use rand::seq::SliceRandom;

use crate::rng::SimRng;
use crate::types::AgentId;

/// One unit of daily work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    /// Recovery and discharge checks for the whole world.
    Recovery,
    /// A drawn exposure for one agent; `county` is the county index.
    NewCase { agent: AgentId, county: usize },
    /// Visits for one nursing-home resident.
    Visitation { resident: AgentId },
    /// Attendance for one HCW; `hcw` indexes the world's assignments.
    Attendance { hcw: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionQueue {
    pending: Vec<Action>,
}

impl ActionQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, a: Action) {
        self.pending.push(a);
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn actions(&self) -> &[Action] {
        &self.pending
    }

    pub fn count_where(&self, f: impl Fn(&Action) -> bool) -> usize {
        self.pending.iter().filter(|a| f(a)).count()
    }

    /// Puts the actions in a uniformly random order.
    pub fn shuffle(&mut self, rng: &mut SimRng) {
        self.pending.shuffle(rng);
    }

    pub fn into_actions(self) -> Vec<Action> {
        self.pending
    }
}
