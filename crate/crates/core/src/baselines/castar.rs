//! Cooperative A*: robots plan one after another in a random priority
//! order through a shared space-time reservation table.

use rand::seq::SliceRandom;
use rand::Rng;

use super::reservation::{descend, timed_plan, ReservationTable, SpaceTimeSearch};
use super::DistanceCache;
use crate::grid::{CellMask, GridGraph};
use crate::model::RobotState;
use crate::planner::Plan;

/// Plans of one prioritized pass plus robots that could not move.
#[derive(Clone, Debug, PartialEq)]
pub struct PrioritizedOutcome {
    pub plans: Vec<Plan>,
    pub order: Vec<usize>,
    /// Robots left with a wait-in-place plan.
    pub stuck: Vec<usize>,
}

pub struct CaStar {
    table: ReservationTable,
    search: SpaceTimeSearch,
    distances: DistanceCache,
}

impl CaStar {
    pub fn new(graph: &GridGraph, horizon: usize) -> Self {
        CaStar {
            table: ReservationTable::new(graph, horizon),
            search: SpaceTimeSearch::new(),
            distances: DistanceCache::new(),
        }
    }

    /// Plans every active robot in a fresh random order.
    pub fn plan_all<R: Rng + ?Sized>(
        &mut self,
        graph: &GridGraph,
        states: &[RobotState],
        frozen: &CellMask,
        now: u64,
        rng: &mut R,
    ) -> PrioritizedOutcome {
        let mut order: Vec<usize> = states.iter().filter(|s| !s.done).map(|s| s.id).collect();
        order.shuffle(rng);
        self.plan_in_order(graph, states, frozen, now, order)
    }

    /// Plans active robots in the given order; earlier robots have
    /// priority.
    pub fn plan_in_order(
        &mut self,
        graph: &GridGraph,
        states: &[RobotState],
        frozen: &CellMask,
        now: u64,
        order: Vec<usize>,
    ) -> PrioritizedOutcome {
        self.table.clear();
        self.table.seed(graph, states, frozen);
        let mut plans: Vec<Plan> = states.iter().map(Plan::hold).collect();
        let mut stuck = Vec::new();
        for &id in &order {
            let robot = &states[id];
            let dist = self.distances.get(graph, robot, frozen);
            match self.search.search(graph, &self.table, robot, dist) {
                Some(path) => {
                    let last = *path.last().expect("path has the head");
                    let tail = if last == robot.goal.cell {
                        Vec::new()
                    } else {
                        let heading = heading_of(&path).unwrap_or(robot.direction);
                        descend(graph, last, heading, dist)
                    };
                    self.table.reserve_path(graph, &path, robot.goal.cell, id);
                    plans[id] = timed_plan(robot, &path, &tail, now);
                }
                None => {
                    let held: Vec<_> = robot.queue.cells().to_vec();
                    self.table.reserve_path(graph, &held, robot.goal.cell, id);
                    self.table.park(graph, robot.queue.tail(), held.len() - 1, id);
                    plans[id] = timed_plan(robot, &held, &[], now);
                    stuck.push(id);
                }
            }
        }
        PrioritizedOutcome { plans, order, stuck }
    }
}

fn heading_of(path: &[crate::grid::Cell]) -> Option<crate::grid::Direction> {
    path.windows(2)
        .rev()
        .find(|w| w[0] != w[1])
        .and_then(|w| crate::grid::direction_between(w[0], w[1]).ok())
}
