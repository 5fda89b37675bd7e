//! Node-popularity cost: the same planning framework as the traffic model
//! with the traffic term replaced by `c₁·n/n_max`.

use crate::grid::{Cell, GridGraph};
use crate::planner::Plan;

/// `c₁·n/n_max`, defined as 0 when `n_max` is 0.
pub fn adcc_cost(n: u32, n_max: u32, c1: f64) -> f64 {
    if n_max == 0 {
        return 0.0;
    }
    c1 * n as f64 / n_max as f64
}

/// How many of the given plans pass through each cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisitCounts {
    counts: Vec<u32>,
    max: u32,
}

impl VisitCounts {
    pub fn from_plans(graph: &GridGraph, plans: &[&Plan]) -> Self {
        let mut counts = vec![0u32; graph.cell_count()];
        for plan in plans {
            for cell in plan.cells() {
                if graph.in_bounds(cell) {
                    counts[graph.index(cell)] += 1;
                }
            }
        }
        let max = counts.iter().copied().max().unwrap_or(0);
        VisitCounts { counts, max }
    }

    pub fn count(&self, graph: &GridGraph, cell: Cell) -> u32 {
        self.counts[graph.index(cell)]
    }

    pub fn max(&self) -> u32 {
        self.max
    }
}
