//! Space-time reservations and the windowed `(cell, t)` A* shared by the
//! prioritized baselines.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::grid::{Cell, CellMask, Direction, GridGraph};
use crate::model::RobotState;
use crate::planner::{Plan, PlanStep};

const FREE: u32 = u32::MAX;
const FROZEN: u32 = u32::MAX - 1;

/// Which robot occupies each cell at each time in `0..=horizon`, plus
/// cells claimed for good from some time on (parked robots).
#[derive(Clone, Debug)]
pub struct ReservationTable {
    cells: usize,
    horizon: usize,
    table: Vec<u32>,
    parked: Vec<(u32, u32)>,
    /// Reserved moves `(from, to, t)`; kept apart from `table` because
    /// higher robots may overlap each other there.
    edges: HashSet<(u32, u32, u32)>,
}

impl ReservationTable {
    pub fn new(graph: &GridGraph, horizon: usize) -> Self {
        let cells = graph.cell_count();
        ReservationTable {
            cells,
            horizon,
            table: vec![FREE; cells * (horizon + 1)],
            parked: vec![(FREE, u32::MAX); cells],
            edges: HashSet::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn clear(&mut self) {
        self.table.fill(FREE);
        self.parked.fill((FREE, u32::MAX));
        self.edges.clear();
    }

    fn slot(&self, cell: usize, t: usize) -> usize {
        t * self.cells + cell
    }

    /// Owner of `cell` at `t`, counting parked claims.
    pub fn holder(&self, graph: &GridGraph, cell: Cell, t: usize) -> Option<u32> {
        let ci = graph.index(cell);
        let (owner, since) = self.parked[ci];
        if owner != FREE && t as u32 >= since {
            return Some(owner);
        }
        if t > self.horizon {
            return None;
        }
        match self.table[self.slot(ci, t)] {
            FREE => None,
            r => Some(r),
        }
    }

    pub fn is_free_for(&self, graph: &GridGraph, cell: Cell, t: usize, robot: usize) -> bool {
        self.holder(graph, cell, t).is_none_or(|h| h == robot as u32)
    }

    pub fn reserve(&mut self, graph: &GridGraph, cell: Cell, t: usize, robot: usize) {
        if t <= self.horizon {
            let s = self.slot(graph.index(cell), t);
            self.table[s] = robot as u32;
        }
    }

    /// Claims `cell` for every time from `t` on.
    pub fn park(&mut self, graph: &GridGraph, cell: Cell, t: usize, robot: usize) {
        self.parked[graph.index(cell)] = (robot as u32, t as u32);
    }

    pub fn block(&mut self, graph: &GridGraph, cell: Cell) {
        self.parked[graph.index(cell)] = (FROZEN, 0);
    }

    /// `robot` may stand at `from` at `t` and at `to` at `t+1` without
    /// sharing a vertex or swapping with another robot.
    pub fn can_move(&self, graph: &GridGraph, from: Cell, to: Cell, t: usize, robot: usize) -> bool {
        if !self.is_free_for(graph, to, t + 1, robot) {
            return false;
        }
        if from == to {
            return true;
        }
        if self.edges.contains(&(graph.index(to) as u32, graph.index(from) as u32, t as u32)) {
            return false;
        }
        match (self.holder(graph, to, t), self.holder(graph, from, t + 1)) {
            (Some(a), Some(b)) => a != b || a == robot as u32,
            _ => true,
        }
    }

    /// Reserves a time-indexed path; a path that ends on `goal` before the
    /// horizon parks there.
    pub fn reserve_path(&mut self, graph: &GridGraph, path: &[Cell], goal: Cell, robot: usize) {
        for (t, &c) in path.iter().enumerate() {
            self.reserve(graph, c, t, robot);
        }
        for (t, w) in path.windows(2).enumerate() {
            if w[0] != w[1] {
                self.edges.insert((graph.index(w[0]) as u32, graph.index(w[1]) as u32, t as u32));
            }
        }
        if let Some(&last) = path.last() {
            if last == goal || path.len() <= self.horizon {
                self.park(graph, last, path.len() - 1, robot);
            }
        }
    }

    /// Current queues held by their robots (`q_k` for `t ≤ k`) and frozen
    /// cells blocked for good.
    pub fn seed(&mut self, graph: &GridGraph, states: &[RobotState], frozen: &CellMask) {
        for s in states {
            if s.done || frozen.contains(s.position()) {
                self.block(graph, s.position());
                continue;
            }
            for (k, &c) in s.queue.cells().iter().enumerate() {
                for t in 0..=k.min(self.horizon) {
                    self.reserve(graph, c, t, s.id);
                }
            }
        }
        for c in graph.free_cells() {
            if frozen.contains(c) {
                self.block(graph, c);
            }
        }
    }
}

#[derive(Clone, Copy)]
struct Node {
    f: u32,
    h: u32,
    t: u32,
    cell: Cell,
    state: u32,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // min-heap on (f, h), then later time first, then cell
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then_with(|| other.h.cmp(&self.h))
            .then_with(|| self.t.cmp(&other.t))
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

const NONE: u32 = u32::MAX;

/// Reusable windowed space-time A*. Moves and waits cost one tick; a path
/// either parks on the goal inside the window or is charged
/// `horizon + distance-to-goal` at the window edge.
pub struct SpaceTimeSearch {
    stamp: Vec<u32>,
    generation: u32,
    g: Vec<u32>,
    parent: Vec<u32>,
    closed: Vec<bool>,
    heap: BinaryHeap<Node>,
}

impl Default for SpaceTimeSearch {
    fn default() -> Self {
        Self::new()
    }
}

impl SpaceTimeSearch {
    pub fn new() -> Self {
        SpaceTimeSearch {
            stamp: Vec::new(),
            generation: 0,
            g: Vec::new(),
            parent: Vec::new(),
            closed: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn touch(&mut self, s: usize) {
        if self.stamp[s] != self.generation {
            self.stamp[s] = self.generation;
            self.g[s] = u32::MAX;
            self.parent[s] = NONE;
            self.closed[s] = false;
        }
    }

    /// Time-indexed positions from the queue head: the queue cells at
    /// `t = 0..n-1`, then the searched continuation. `dist` holds
    /// distances to the robot's goal. `None` when the robot cannot even
    /// stay put.
    pub fn search(
        &mut self,
        graph: &GridGraph,
        table: &ReservationTable,
        robot: &RobotState,
        dist: &[u32],
    ) -> Option<Vec<Cell>> {
        let horizon = table.horizon();
        let layers = horizon + 1;
        let states = graph.cell_count() * layers;
        if self.stamp.len() != states {
            self.stamp = vec![0; states];
            self.g = vec![u32::MAX; states];
            self.parent = vec![NONE; states];
            self.closed = vec![false; states];
            self.generation = 0;
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.fill(0);
            self.generation = 1;
        }
        self.heap.clear();

        let id = robot.id;
        let goal = robot.goal.cell;
        let prefix = robot.queue.cells();
        let t0 = (prefix.len() - 1).min(horizon);
        let start = robot.queue.tail();
        let state_of = |c: Cell, t: usize| (t * graph.cell_count() + graph.index(c)) as u32;
        let h_of = |c: Cell| dist[graph.index(c)];

        let parks = |c: Cell, t: usize| c == goal && (t..=horizon).all(|u| table.is_free_for(graph, c, u, id));

        let s0 = state_of(start, t0) as usize;
        self.touch(s0);
        self.g[s0] = t0 as u32;
        let h0 = h_of(start);
        if h0 == u32::MAX {
            return None;
        }
        self.heap.push(Node {
            f: t0 as u32 + h0,
            h: h0,
            t: t0 as u32,
            cell: start,
            state: s0 as u32,
        });

        let mut end = None;
        while let Some(node) = self.heap.pop() {
            let si = node.state as usize;
            if self.closed[si] {
                continue;
            }
            self.closed[si] = true;
            let t = node.t as usize;
            if t == horizon || parks(node.cell, t) {
                end = Some(node);
                break;
            }
            for dir in [Direction::Stay, Direction::Up, Direction::Right, Direction::Down, Direction::Left] {
                let next = if dir == Direction::Stay { node.cell } else { node.cell.step(dir) };
                if !graph.is_free(next) || !table.can_move(graph, node.cell, next, t, id) {
                    continue;
                }
                let h = h_of(next);
                if h == u32::MAX {
                    continue;
                }
                let ns = state_of(next, t + 1) as usize;
                self.touch(ns);
                if self.closed[ns] {
                    continue;
                }
                let ng = t as u32 + 1;
                if ng < self.g[ns] {
                    self.g[ns] = ng;
                    self.parent[ns] = node.state;
                    self.heap.push(Node {
                        f: ng + h,
                        h,
                        t: t as u32 + 1,
                        cell: next,
                        state: ns as u32,
                    });
                }
            }
        }

        let end = end?;
        let mut tail = vec![end.cell];
        let mut cur = end.state as usize;
        while self.parent[cur] != NONE {
            cur = self.parent[cur] as usize;
            tail.push(graph.cell_at(cur % graph.cell_count()));
        }
        tail.reverse();
        let mut path: Vec<Cell> = prefix[..t0].to_vec();
        path.extend(tail);
        Some(path)
    }
}

/// Continues from `from` to the goal by descending `dist`, keeping the
/// current heading when it is one of the best moves.
pub fn descend(graph: &GridGraph, from: Cell, heading: Direction, dist: &[u32]) -> Vec<Cell> {
    let mut out = Vec::new();
    let mut cur = from;
    let mut dir = heading;
    while dist[graph.index(cur)] > 0 && dist[graph.index(cur)] != u32::MAX {
        let here = dist[graph.index(cur)];
        let mut best: Option<Direction> = None;
        for d in std::iter::once(dir).chain(Direction::MOVES) {
            if !d.is_moving() {
                continue;
            }
            let n = cur.step(d);
            if graph.is_free(n) && dist[graph.index(n)] < here {
                best = Some(d);
                break;
            }
        }
        let Some(d) = best else { break };
        cur = cur.step(d);
        dir = d;
        out.push(cur);
    }
    out
}

/// Turns a time-indexed window path plus its tail into a plan. Steps
/// reached after a planned wait may not be requested before one tick
/// ahead of their scheduled arrival.
pub fn timed_plan(robot: &RobotState, path: &[Cell], tail: &[Cell], now: u64) -> Plan {
    let mut steps: Vec<PlanStep> = Vec::with_capacity(path.len() + tail.len());
    let mut gated = false;
    let mut heading = robot.direction;
    for (t, &c) in path.iter().chain(tail).enumerate() {
        if let Some(last) = steps.last() {
            if last.cell == c {
                gated = true;
                continue;
            }
            heading = crate::grid::direction_between(last.cell, c).unwrap_or(heading);
        }
        let eta = now + t as u64;
        steps.push(PlanStep {
            cell: c,
            dir: heading,
            index: steps.len(),
            eta: Some(eta),
            release: gated.then(|| eta.saturating_sub(1)),
        });
    }
    Plan { robot: robot.id, steps }
}

/// Position of a time-indexed path at `t`; a parked path stays on its
/// last cell, a window-edge path is unknown afterwards.
pub fn position_at(path: &[Cell], parked: bool, t: usize) -> Option<Cell> {
    match path.get(t) {
        Some(&c) => Some(c),
        None if parked => path.last().copied(),
        None => None,
    }
}
