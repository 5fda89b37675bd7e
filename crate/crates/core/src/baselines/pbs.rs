//! Priority-based search: depth-first search over partial priority
//! orderings, with windowed space-time A* as the low level.

use super::castar::CaStar;
use super::reservation::{descend, position_at, timed_plan, ReservationTable, SpaceTimeSearch};
use super::DistanceCache;
use crate::grid::{Cell, CellMask, GridGraph};
use crate::model::RobotState;
use crate::planner::Plan;

/// Partial order "i has priority over j" as an adjacency matrix. Edges
/// are only inserted when they keep the relation acyclic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriorityOrdering {
    m: usize,
    higher: Vec<bool>,
}

impl PriorityOrdering {
    pub fn new(m: usize) -> Self {
        PriorityOrdering {
            m,
            higher: vec![false; m * m],
        }
    }

    pub fn has(&self, i: usize, j: usize) -> bool {
        self.higher[i * self.m + j]
    }

    /// True when `from` reaches `to` along priority edges.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.m];
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            if u == to {
                return true;
            }
            if std::mem::replace(&mut seen[u], true) {
                continue;
            }
            stack.extend((0..self.m).filter(|&v| self.has(u, v) && !seen[v]));
        }
        false
    }

    /// Adds `i ≻ j`; refuses (returns false) if that would close a cycle.
    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        if i == j || self.reaches(j, i) {
            return false;
        }
        self.higher[i * self.m + j] = true;
        true
    }

    /// Robots with priority over `j`, directly or transitively.
    pub fn ancestors(&self, j: usize) -> Vec<usize> {
        (0..self.m).filter(|&i| i != j && self.reaches(i, j)).collect()
    }

    pub fn descendants(&self, i: usize) -> Vec<usize> {
        (0..self.m).filter(|&j| j != i && self.reaches(i, j)).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().len() == self.m
    }

    /// Kahn's order with the lowest id first among ready robots.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut indeg: Vec<usize> = (0..self.m).map(|j| (0..self.m).filter(|&i| self.has(i, j)).count()).collect();
        let mut out = Vec::with_capacity(self.m);
        let mut done = vec![false; self.m];
        loop {
            let Some(u) = (0..self.m).find(|&u| !done[u] && indeg[u] == 0) else {
                break;
            };
            done[u] = true;
            out.push(u);
            for v in 0..self.m {
                if self.has(u, v) {
                    indeg[v] -= 1;
                }
            }
        }
        out
    }
}

/// A window path: time-indexed cells from the queue head, and whether
/// the robot parks on its last cell.
#[derive(Clone, Debug, PartialEq, Eq)]
struct WindowPath {
    cells: Vec<Cell>,
    parked: bool,
    cost: u32,
}

#[derive(Clone, Debug)]
struct Node {
    ordering: PriorityOrdering,
    paths: Vec<Option<WindowPath>>,
    cost: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Collision {
    a: usize,
    b: usize,
    t: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PbsStatus {
    Solved,
    /// Every branch failed; plans come from a fixed-order prioritized pass.
    Exhausted,
    /// The node cap was reached.
    NodeCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PbsOutcome {
    pub plans: Vec<Plan>,
    pub nodes: usize,
    pub status: PbsStatus,
}

pub struct Pbs {
    horizon: usize,
    node_cap: usize,
    table: ReservationTable,
    search: SpaceTimeSearch,
    distances: DistanceCache,
    fallback: CaStar,
    occupancy: Vec<u32>,
}

impl Pbs {
    pub fn new(graph: &GridGraph, horizon: usize, node_cap: usize) -> Self {
        Pbs {
            horizon,
            node_cap,
            table: ReservationTable::new(graph, horizon),
            search: SpaceTimeSearch::new(),
            distances: DistanceCache::new(),
            fallback: CaStar::new(graph, horizon),
            occupancy: vec![u32::MAX; graph.cell_count() * 2],
        }
    }

    fn low_level(
        &mut self,
        graph: &GridGraph,
        states: &[RobotState],
        frozen: &CellMask,
        robot: usize,
        higher: &[usize],
        paths: &[Option<WindowPath>],
    ) -> Option<WindowPath> {
        self.table.clear();
        self.table.seed(graph, states, frozen);
        for &h in higher {
            if let Some(p) = &paths[h] {
                self.table.reserve_path(graph, &p.cells, states[h].goal.cell, h);
            }
        }
        let r = &states[robot];
        let dist = self.distances.get(graph, r, frozen);
        let cells = self.search.search(graph, &self.table, r, dist)?;
        let last = *cells.last().expect("non-empty");
        let parked = last == r.goal.cell && cells.len() <= self.horizon + 1;
        let cost = (cells.len() - 1) as u32 + dist[graph.index(last)];
        Some(WindowPath { cells, parked, cost })
    }

    fn first_collision(&mut self, graph: &GridGraph, paths: &[Option<WindowPath>]) -> Option<Collision> {
        let cells = graph.cell_count();
        let mut best: Option<Collision> = None;
        for t in 0..=self.horizon {
            self.occupancy.fill(u32::MAX);
            let (now, next) = self.occupancy.split_at_mut(cells);
            for (id, p) in paths.iter().enumerate() {
                let Some(p) = p else { continue };
                if let Some(c) = position_at(&p.cells, p.parked, t) {
                    let slot = &mut now[graph.index(c)];
                    if *slot != u32::MAX {
                        let found = Collision {
                            a: *slot as usize,
                            b: id,
                            t,
                        };
                        best = Some(best.map_or(found, |b| b.min_by_ids(found)));
                    } else {
                        *slot = id as u32;
                    }
                }
                if let Some(c) = position_at(&p.cells, p.parked, t + 1) {
                    next[graph.index(c)] = id as u32;
                }
            }
            if best.is_some() {
                return best;
            }
            if t == self.horizon {
                break;
            }
            // Edge swaps between t and t+1.
            for (id, p) in paths.iter().enumerate() {
                let Some(p) = p else { continue };
                let (Some(u), Some(v)) = (position_at(&p.cells, p.parked, t), position_at(&p.cells, p.parked, t + 1)) else {
                    continue;
                };
                if u == v {
                    continue;
                }
                let other = now[graph.index(v)];
                if other != u32::MAX && other as usize != id && next[graph.index(u)] == other {
                    let (a, b) = (id.min(other as usize), id.max(other as usize));
                    let found = Collision { a, b, t };
                    best = Some(best.map_or(found, |x| x.min_by_ids(found)));
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    fn collides_with_any(&mut self, robot: usize, others: &[usize], paths: &[Option<WindowPath>]) -> bool {
        let Some(p) = &paths[robot] else { return false };
        others.iter().any(|&o| match &paths[o] {
            Some(q) => pair_collides(p, q, self.horizon),
            None => false,
        })
    }

    /// Applies `hi ≻ lo` to `parent` and re-plans `lo` and every lower robot
    /// that then collides with a robot above it.
    fn expand(
        &mut self,
        graph: &GridGraph,
        states: &[RobotState],
        frozen: &CellMask,
        parent: &Node,
        hi: usize,
        lo: usize,
    ) -> Option<Node> {
        // An existing edge cannot resolve the collision again.
        if parent.ordering.has(hi, lo) {
            return None;
        }
        let mut ordering = parent.ordering.clone();
        if !ordering.insert(hi, lo) {
            return None;
        }
        let mut paths = parent.paths.clone();
        let mut affected = ordering.descendants(lo);
        affected.push(lo);
        let topo = ordering.topological_order();
        for r in topo.into_iter().filter(|r| affected.contains(r)) {
            let higher = ordering.ancestors(r);
            if r != lo && !self.collides_with_any(r, &higher, &paths) {
                continue;
            }
            let p = self.low_level(graph, states, frozen, r, &higher, &paths)?;
            paths[r] = Some(p);
        }
        let cost = paths.iter().flatten().map(|p| p.cost as u64).sum();
        Some(Node { ordering, paths, cost })
    }

    pub fn plan_all(&mut self, graph: &GridGraph, states: &[RobotState], frozen: &CellMask, now: u64) -> PbsOutcome {
        let m = states.len();
        let mut root = Node {
            ordering: PriorityOrdering::new(m),
            paths: vec![None; m],
            cost: 0,
        };
        let mut root_ok = true;
        for s in states.iter().filter(|s| !s.done) {
            match self.low_level(graph, states, frozen, s.id, &[], &root.paths) {
                Some(p) => root.paths[s.id] = Some(p),
                None => root_ok = false,
            }
        }
        root.cost = root.paths.iter().flatten().map(|p| p.cost as u64).sum();

        let mut nodes = 1;
        let mut stack = if root_ok { vec![root] } else { Vec::new() };
        while let Some(node) = stack.pop() {
            let Some(col) = self.first_collision(graph, &node.paths) else {
                return PbsOutcome {
                    plans: self.to_plans(graph, states, frozen, &node.paths, now),
                    nodes,
                    status: PbsStatus::Solved,
                };
            };
            if nodes >= self.node_cap {
                return PbsOutcome {
                    plans: self.to_plans(graph, states, frozen, &node.paths, now),
                    nodes,
                    status: PbsStatus::NodeCap,
                };
            }
            let mut children = Vec::with_capacity(2);
            for (hi, lo) in [(col.a, col.b), (col.b, col.a)] {
                nodes += 1;
                if let Some(child) = self.expand(graph, states, frozen, &node, hi, lo) {
                    children.push(child);
                }
            }
            // Cheaper child is explored first.
            children.sort_by(|x, y| y.cost.cmp(&x.cost));
            stack.extend(children);
        }

        let order: Vec<usize> = states.iter().filter(|s| !s.done).map(|s| s.id).collect();
        let out = self.fallback.plan_in_order(graph, states, frozen, now, order);
        PbsOutcome {
            plans: out.plans,
            nodes,
            status: PbsStatus::Exhausted,
        }
    }

    fn to_plans(
        &mut self,
        graph: &GridGraph,
        states: &[RobotState],
        frozen: &CellMask,
        paths: &[Option<WindowPath>],
        now: u64,
    ) -> Vec<Plan> {
        states
            .iter()
            .map(|s| match &paths[s.id] {
                Some(p) => {
                    let last = *p.cells.last().expect("non-empty");
                    let tail = if last == s.goal.cell {
                        Vec::new()
                    } else {
                        let dist = self.distances.get(graph, s, frozen);
                        let heading = p
                            .cells
                            .windows(2)
                            .rev()
                            .find(|w| w[0] != w[1])
                            .and_then(|w| crate::grid::direction_between(w[0], w[1]).ok())
                            .unwrap_or(s.direction);
                        descend(graph, last, heading, dist)
                    };
                    timed_plan(s, &p.cells, &tail, now)
                }
                None => Plan::hold(s),
            })
            .collect()
    }
}

impl Collision {
    fn min_by_ids(self, other: Collision) -> Collision {
        if (other.a, other.b) < (self.a, self.b) {
            other
        } else {
            self
        }
    }
}

fn pair_collides(p: &WindowPath, q: &WindowPath, horizon: usize) -> bool {
    for t in 0..=horizon {
        let (a0, b0) = (position_at(&p.cells, p.parked, t), position_at(&q.cells, q.parked, t));
        if a0.is_some() && a0 == b0 {
            return true;
        }
        let (a1, b1) = (position_at(&p.cells, p.parked, t + 1), position_at(&q.cells, q.parked, t + 1));
        if t < horizon && a0.is_some() && a1.is_some() && a0 != a1 && a0 == b1 && a1 == b0 {
            return true;
        }
    }
    false
}
