//! Comparison planners sharing the simulator and scheduler: node-popularity
//! cost, prioritized space-time planning and priority-based search.

pub mod adcc;
pub mod castar;
pub mod pbs;
pub mod reservation;

use crate::grid::{CellMask, GridGraph};
use crate::model::RobotState;

/// Per-robot distance-to-goal fields, recomputed when the frozen set grows.
#[derive(Clone, Debug, Default)]
pub struct DistanceCache {
    entries: Vec<Option<(usize, Vec<u32>)>>,
}

impl DistanceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, graph: &GridGraph, robot: &RobotState, frozen: &CellMask) -> &[u32] {
        if self.entries.len() <= robot.id {
            self.entries.resize(robot.id + 1, None);
        }
        let version = frozen.len();
        let stale = !matches!(&self.entries[robot.id], Some((v, _)) if *v == version);
        if stale {
            let goal = robot.goal.cell;
            let d = graph.distances_to(goal, |c| c != goal && frozen.contains(c));
            self.entries[robot.id] = Some((version, d));
        }
        &self.entries[robot.id].as_ref().expect("just filled").1
    }
}
