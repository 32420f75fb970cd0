//! DISH iteration: update kinds, schedules, the stacked and message-level
//! engines, and the run loop.

mod compact;
mod distributed;
mod kinds;
mod run;
mod schedule;

pub use compact::{step_compact, CompactEngine, LocalMatrices, RunState, StepRecord, Stepsizes};
pub use distributed::{
    agents_from_state, state_from_agents, step_distributed, AgentState, DistributedEngine, Mailbox, Message,
};
pub use kinds::{dual_update_matrix, primal_update_matrix, DualKind, PrimalKind, UpdateKind};
pub use run::{
    kinds_histogram, run, AnalysisOptions, ErrorTracker, RunFailure, RunOptions, Trace, TraceRow, DIVERGENCE_LIMIT,
};
pub use schedule::{PeriodDistribution, ScheduleSpec, Spread, UpdateSchedule};
