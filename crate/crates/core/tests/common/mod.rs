//! Brute-force references shared by the integration tests.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use warehouse_mapf::{Cell, Direction, GridGraph, Plan};

pub fn c(x: i32, y: i32) -> Cell {
    Cell::new(x, y)
}

fn state(graph: &GridGraph, cell: Cell, dir: Direction) -> usize {
    graph.index(cell) * 4 + (dir.code() as usize - 1)
}

/// Optimal cost from every `(cell, heading)` to the goal pose when a move
/// costs 1 and changing heading in place costs `turn`. Unreachable states
/// hold `u64::MAX`. Runs Dijkstra backwards from the goal.
pub fn pose_costs_to(graph: &GridGraph, goal: Cell, goal_dir: Direction, turn: u64) -> Vec<u64> {
    let n = graph.cell_count() * 4;
    let mut dist = vec![u64::MAX; n];
    let mut heap = BinaryHeap::new();
    let s = state(graph, goal, goal_dir);
    dist[s] = 0;
    heap.push(Reverse((0u64, goal.x, goal.y, goal_dir.code())));
    while let Some(Reverse((d, x, y, code))) = heap.pop() {
        let cell = c(x, y);
        let dir = Direction::from_code(code).unwrap();
        if d > dist[state(graph, cell, dir)] {
            continue;
        }
        // Predecessors: same cell with another heading, or one step behind.
        for other in Direction::MOVES {
            if other == dir {
                continue;
            }
            let p = state(graph, cell, other);
            if d + turn < dist[p] {
                dist[p] = d + turn;
                heap.push(Reverse((d + turn, x, y, other.code())));
            }
        }
        let back = cell.step(dir.opposite());
        if graph.is_free(back) {
            let p = state(graph, back, dir);
            if d + 1 < dist[p] {
                dist[p] = d + 1;
                heap.push(Reverse((d + 1, back.x, back.y, code)));
            }
        }
    }
    dist
}

pub fn pose_cost(costs: &[u64], graph: &GridGraph, cell: Cell, dir: Direction) -> u64 {
    costs[state(graph, cell, dir)]
}

/// Moves plus `turn` per heading change along a plan, counting the final
/// in-place turn onto `goal_dir`.
pub fn plan_cost(plan: &Plan, start_dir: Direction, goal_dir: Direction, turn: u64) -> u64 {
    let cells: Vec<Cell> = plan.cells().collect();
    let mut heading = start_dir;
    let mut cost = 0;
    for w in cells.windows(2) {
        let d = warehouse_mapf::grid::direction_between(w[0], w[1]).unwrap();
        if d != heading {
            cost += turn;
            heading = d;
        }
        cost += 1;
    }
    if heading != goal_dir {
        cost += turn;
    }
    cost
}
