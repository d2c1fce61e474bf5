//! Simulation time, action queue, event log and the daily scheduler.

mod clock;
mod event;
mod queue;
mod scheduler;

pub use clock::SimClock;
pub use event::{Event, EventKind, EventLog, Reason, HEADER};
pub use queue::{Action, ActionQueue};
pub use scheduler::{enqueue_daily_actions, DailyQuota, Simulation, StepParams};
