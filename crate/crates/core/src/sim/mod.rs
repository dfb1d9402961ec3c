//! Kinematic person-following simulation.
//!
//! A scripted person walks, spins and pauses; the robot observes the
//! person's position at 10 Hz and an orientation estimate at 25 Hz, and a
//! receding-horizon controller steers it towards a goal pose kept `d`
//! metres behind (or in front of) the person.

mod controller;
mod geometry;
mod run;
mod scenario;

pub use controller::{controller_step, rollout_cost, ControllerConfig, RobotLimits};
pub use geometry::{
    backward_goal, cv_orientation, forward_goal, step_robot, GoalPose, PersonState, RobotState, Task,
};
pub use run::{
    ate, frames_ate, run_scenario, trajectory_csv, Estimator, EstimatorKind, Frame, RunSummary, SimConfig,
    SimRun, TRAJECTORY_HEADER,
};
pub use scenario::{NoiseLevels, Scenario, Segment};
