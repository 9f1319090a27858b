//! Fixed-step full-batch gradient descent and the schedules that turn a
//! proxy condition into a step size, an iteration count and a bound.

pub mod audit;
mod gd;
mod schedule;

pub use audit::StepRecord;
pub use gd::{run_gd, run_gd_observed, GdConfig, StepView, Trajectory, TrajectoryPoint};
pub use schedule::{
    best_proxy_value, schedule_proxy_convex_lipschitz, schedule_proxy_convex_self_bounding,
    schedule_proxy_pl, validate_bound, BoundReport, Guarantee, ScheduleInputs, TheoremSchedule,
    BOUND_TOLERANCE,
};
