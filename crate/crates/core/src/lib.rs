//! Decentralized multi-robot path planning on warehouse grids with uncertain
//! speeds: a traffic-cost planner, typed conflict management, queue
//! scheduling, comparison baselines and a benchmark harness.

pub mod baselines;
pub mod conflict;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod model;
pub mod planner;
pub mod runner;
pub mod scenario;
pub mod scheduler;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
pub use grid::{Cell, CellMask, Direction, GridGraph};
pub use model::{Action, Pose, PreservedQueue, RobotState, Slot};
pub use planner::{Plan, PlanStep, PlannerConfig};
pub use runner::{run_simulation, Algorithm, RunConfig, RunReport};
pub use scenario::Scenario;
pub use sim::SpeedRegime;
