//! Single-robot A* over `(cell, heading)` states with a traffic penalty
//! derived from the other robots' plans.
//!
//! Path cost is one unit per move, `W` per heading change, plus the
//! traffic term of every cell entered. The traffic term for a cell `V`
//! reached after `s` moves sums, over each other robot whose plan visits
//! `V` within the horizon at index `d`, a Gaussian in `s − d` discounted
//! by `c₁^(−(s+d)/2)` and amplified by `c₂^m` where `m` is the number of
//! conflicts of that kind at `V`. A turn into `V` adds `c₃`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::baselines::adcc::{adcc_cost, VisitCounts};
use crate::conflict::{classify_pair, classify_visits, Conflict, ConflictKind, Visit};
use crate::error::{Error, Result};
use crate::grid::{direction_between, Cell, CellMask, Direction, GridGraph};
use crate::model::RobotState;

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    /// Base cost per conflict kind: opposite, following, crossing.
    pub zeta: [f64; 3],
    pub sigma: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Ticks spent turning in place (`W`).
    pub turn_wait: u32,
    /// Preserved-queue capacity (`N`).
    pub queue_len: usize,
    pub delta_fol: f64,
    pub delta_cross: f64,
    /// Conflict look-ahead in path-index units (`τ`).
    pub horizon: usize,
    /// Re-planning threshold on the weighted conflict score (`φ`).
    pub phi: f64,
    /// Largest exponent applied to `c₂`.
    pub m_cap: u32,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            zeta: [4.0, 1.0, 2.0],
            sigma: 4.0,
            c1: 1.05,
            c2: 1.5,
            c3: 2.0,
            turn_wait: 2,
            queue_len: 4,
            delta_fol: 1.0,
            delta_cross: 2.0,
            horizon: 12,
            phi: 3.0,
            m_cap: 10,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if self.zeta.iter().any(|z| !(*z > 0.0)) {
            return bad("zeta values must be positive");
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if !(self.c1 > 1.0) {
            return bad("c1 must exceed 1");
        }
        if !(self.c2 > 0.0) {
            return bad("c2 must be positive");
        }
        if !(self.c3 >= 0.0) {
            return bad("c3 must be non-negative");
        }
        if self.queue_len <= 2 {
            return bad("queue length N must exceed 2");
        }
        if !(self.delta_fol >= 0.0 && self.delta_cross >= 0.0 && self.phi >= 0.0) {
            return bad("conflict weights and threshold must be non-negative");
        }
        Ok(())
    }
}

/// One cell of a plan. `dir` is the heading on arrival (the robot's current
/// heading for the first step); `index` is the path position used as the
/// arrival-time proxy. Timetabled planners also set `eta` (scheduled
/// arrival tick) and `release` (earliest tick the cell may be reserved).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlanStep {
    pub cell: Cell,
    pub dir: Direction,
    pub index: usize,
    pub eta: Option<u64>,
    pub release: Option<u64>,
}

/// Route of one robot from its queue head toward its goal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub robot: usize,
    pub steps: Vec<PlanStep>,
}

impl Plan {
    /// Plan through `cells`, headings derived from consecutive moves.
    pub fn from_cells(robot: usize, heading: Direction, cells: &[Cell]) -> Result<Plan> {
        if cells.is_empty() {
            return Err(Error::Queue("plan needs at least one cell".into()));
        }
        let mut steps = Vec::with_capacity(cells.len());
        for (i, &cell) in cells.iter().enumerate() {
            let dir = if i == 0 {
                heading
            } else {
                let d = direction_between(cells[i - 1], cell)?;
                if d == Direction::Stay {
                    return Err(Error::Queue(format!("plan repeats {cell} consecutively")));
                }
                d
            };
            steps.push(PlanStep {
                cell,
                dir,
                index: i,
                eta: None,
                release: None,
            });
        }
        Ok(Plan { robot, steps })
    }

    /// Plan that keeps the robot on its current queue and goes no further.
    pub fn hold(robot: &RobotState) -> Plan {
        Plan::from_cells(robot.id, robot.direction, robot.queue.cells()).expect("queue is a valid path")
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.steps.iter().map(|s| s.cell)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn head(&self) -> Cell {
        self.steps[0].cell
    }

    pub fn last(&self) -> Cell {
        self.steps.last().expect("plans are non-empty").cell
    }

    pub fn reaches(&self, goal: Cell) -> bool {
        self.last() == goal
    }

    /// Drops `count` leading steps after the robot has completed that many
    /// movements, re-basing indices so the head is at index 0.
    pub fn advance(&mut self, count: usize) {
        if count == 0 {
            return;
        }
        let count = count.min(self.steps.len() - 1);
        self.steps.drain(..count);
        for (i, s) in self.steps.iter_mut().enumerate() {
            s.index = i;
        }
    }

    pub fn same_route(&self, other: &Plan) -> bool {
        self.steps.len() == other.steps.len() && self.cells().eq(other.cells())
    }

    /// Graph moves plus heading changes, including the final in-place turn
    /// to `goal_dir` when the plan ends on the goal.
    pub fn move_and_turn_counts(&self, start_dir: Direction, goal_dir: Direction) -> (usize, usize) {
        let mut heading = start_dir;
        let mut turns = 0;
        for s in &self.steps[1..] {
            if s.dir != heading {
                turns += 1;
                heading = s.dir;
            }
        }
        if heading != goal_dir {
            turns += 1;
        }
        (self.steps.len() - 1, turns)
    }

    /// First visit to each cell up to `horizon`, in path order.
    pub(crate) fn visits(&self, horizon: usize) -> Vec<Visit> {
        let upto = self.steps.len().min(horizon + 1);
        let mut out: Vec<Visit> = Vec::with_capacity(upto);
        for k in 0..upto {
            let cell = self.steps[k].cell;
            if out.iter().any(|v| v.cell == cell) {
                continue;
            }
            out.push(Visit {
                robot: self.robot,
                cell,
                index: k,
                dir: self.steps[k].dir,
                prev: (k > 0).then(|| self.steps[k - 1].cell),
                next: self.steps.get(k + 1).map(|s| s.cell),
            });
        }
        out
    }
}

/// `d_j` distances of conflicts at one node, grouped by kind.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConflictDistances {
    pub opposite: Vec<f64>,
    pub following: Vec<f64>,
    pub crossing: Vec<f64>,
}

impl ConflictDistances {
    pub fn push(&mut self, kind: ConflictKind, d: f64) {
        match kind {
            ConflictKind::Opposite => self.opposite.push(d),
            ConflictKind::Following => self.following.push(d),
            ConflictKind::Crossing => self.crossing.push(d),
        }
    }

    fn by_kind(&self) -> [&[f64]; 3] {
        [&self.opposite, &self.following, &self.crossing]
    }

    pub fn is_empty(&self) -> bool {
        self.opposite.is_empty() && self.following.is_empty() && self.crossing.is_empty()
    }
}

/// Traffic penalty for a node at distance `s`:
/// `Σ_kinds Σ_j ζ·exp(−(s−d_j)²/(2σ²))·c₁^(−(s+d_j)/2)·c₂^m + c₃·β`,
/// with the `c₂` exponent capped at `m_cap`.
pub fn traffic_cost(s: f64, conflicts: &ConflictDistances, turn: bool, cfg: &PlannerConfig) -> f64 {
    let two_sigma_sq = 2.0 * cfg.sigma * cfg.sigma;
    let ln_c1 = cfg.c1.ln();
    let mut total = 0.0;
    for (zeta, ds) in cfg.zeta.iter().zip(conflicts.by_kind()) {
        if ds.is_empty() {
            continue;
        }
        let m = (ds.len() as u32).min(cfg.m_cap);
        let amplify = cfg.c2.powi(m as i32);
        for &d in ds {
            let gauss = (-(s - d) * (s - d) / two_sigma_sq).exp();
            let discount = (-(s + d) / 2.0 * ln_c1).exp();
            total += zeta * gauss * discount * amplify;
        }
    }
    if turn {
        total += cfg.c3;
    }
    total
}

fn required_headings(node: Cell, goal: Cell) -> Vec<Direction> {
    let mut out = Vec::with_capacity(2);
    if goal.x > node.x {
        out.push(Direction::Right);
    } else if goal.x < node.x {
        out.push(Direction::Left);
    }
    if goal.y > node.y {
        out.push(Direction::Down);
    } else if goal.y < node.y {
        out.push(Direction::Up);
    }
    out
}

fn count_changes(seq: &[Direction]) -> u32 {
    seq.windows(2).filter(|w| w[0] != w[1]).count() as u32
}

/// Fewest heading changes any route from `(node, node_dir)` to
/// `(goal, goal_dir)` needs: it must face every direction in which it has
/// net displacement, then end facing `goal_dir`.
pub fn min_turns(node: Cell, node_dir: Direction, goal: Cell, goal_dir: Direction) -> u32 {
    let req = required_headings(node, goal);
    match req.as_slice() {
        [] => count_changes(&[node_dir, goal_dir]),
        [a] => count_changes(&[node_dir, *a, goal_dir]),
        [a, b] => count_changes(&[node_dir, *a, *b, goal_dir]).min(count_changes(&[node_dir, *b, *a, goal_dir])),
        _ => unreachable!(),
    }
}

/// Manhattan distance plus `turn_cost` per unavoidable heading change.
pub fn heuristic(node: Cell, node_dir: Direction, goal: Cell, goal_dir: Direction, turn_cost: f64) -> f64 {
    node.manhattan(goal) as f64 + turn_cost * min_turns(node, node_dir, goal, goal_dir) as f64
}

/// Other robots' plan visits bucketed by cell, truncated at the horizon.
pub struct TrafficIndex {
    buckets: Vec<Vec<Visit>>,
}

impl TrafficIndex {
    pub fn build(graph: &GridGraph, plans: &[&Plan], horizon: usize) -> Self {
        let mut buckets: Vec<Vec<Visit>> = vec![Vec::new(); graph.cell_count()];
        for plan in plans {
            for v in plan.visits(horizon) {
                if graph.in_bounds(v.cell) {
                    buckets[graph.index(v.cell)].push(v);
                }
            }
        }
        TrafficIndex { buckets }
    }

    pub(crate) fn at(&self, graph: &GridGraph, cell: Cell) -> &[Visit] {
        &self.buckets[graph.index(cell)]
    }
}

/// Which penalty is added on top of moves and turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostModel {
    /// Gaussian traffic cost against other robots' plans.
    Traffic,
    /// Node-popularity cost `c₁·n/n_max`.
    VisitCount,
}

/// Anything that can produce a plan for one robot given the others.
pub trait RobotPlanner {
    fn plan(
        &mut self,
        graph: &GridGraph,
        robot: &RobotState,
        others: &[&Plan],
        frozen: &CellMask,
        extra_blocked: Option<&CellMask>,
    ) -> Result<Plan>;
}

#[derive(Clone, Copy)]
struct Open {
    f: f64,
    h: f64,
    cell: Cell,
    dir: Direction,
    state: u32,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // min-heap on (f, h, x, y, dir)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.cell.cmp(&self.cell))
            .then_with(|| other.dir.cmp(&self.dir))
    }
}

const NO_PARENT: u32 = u32::MAX;

/// Turn-aware A* with a pluggable congestion penalty. Search buffers are
/// reused across calls.
pub struct PathPlanner {
    pub cfg: PlannerConfig,
    pub model: CostModel,
    g: Vec<f64>,
    moves: Vec<u32>,
    parent: Vec<u32>,
    closed: Vec<bool>,
    touched: Vec<u32>,
    heap: BinaryHeap<Open>,
}

impl PathPlanner {
    pub fn new(cfg: PlannerConfig, model: CostModel) -> Self {
        PathPlanner {
            cfg,
            model,
            g: Vec::new(),
            moves: Vec::new(),
            parent: Vec::new(),
            closed: Vec::new(),
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn turn_penalty(&self) -> f64 {
        match self.model {
            CostModel::Traffic => self.cfg.turn_wait as f64 + self.cfg.c3,
            CostModel::VisitCount => self.cfg.turn_wait as f64,
        }
    }

    fn reset(&mut self, states: usize) {
        if self.g.len() != states {
            self.g = vec![f64::INFINITY; states];
            self.moves = vec![0; states];
            self.parent = vec![NO_PARENT; states];
            self.closed = vec![false; states];
            self.touched.clear();
        } else {
            for &s in &self.touched {
                let s = s as usize;
                self.g[s] = f64::INFINITY;
                self.parent[s] = NO_PARENT;
                self.closed[s] = false;
            }
            self.touched.clear();
        }
        self.heap.clear();
    }

    /// Plans for `robot` against pre-indexed traffic (or visit counts).
    pub fn plan_with(
        &mut self,
        graph: &GridGraph,
        robot: &RobotState,
        penalty: &Penalty<'_>,
        frozen: &CellMask,
        extra_blocked: Option<&CellMask>,
    ) -> Result<Plan> {
        let prefix = robot.queue.cells();
        let goal = robot.goal;
        let start_cell = robot.queue.tail();
        let start_dir = robot.tail_heading();
        let s0 = (prefix.len() - 1) as u32;
        let n_states = graph.cell_count() * 4;
        self.reset(n_states);

        let state_of = |c: Cell, d: Direction| (graph.index(c) * 4 + d.index()) as u32;
        let turn_penalty = self.turn_penalty();
        let turn_wait = self.cfg.turn_wait as f64;
        let blocked = |c: Cell| {
            !graph.is_free(c) || frozen.contains(c) || extra_blocked.is_some_and(|m| m.contains(c))
        };

        let start = state_of(start_cell, start_dir);
        self.g[start as usize] = 0.0;
        self.moves[start as usize] = s0;
        self.touched.push(start);
        let h0 = heuristic(start_cell, start_dir, goal.cell, goal.dir, turn_penalty);
        self.heap.push(Open {
            f: h0,
            h: h0,
            cell: start_cell,
            dir: start_dir,
            state: start,
        });

        let mut found = None;
        while let Some(node) = self.heap.pop() {
            let si = node.state as usize;
            if self.closed[si] {
                continue;
            }
            self.closed[si] = true;
            if node.cell == goal.cell && node.dir == goal.dir {
                found = Some(node.state);
                break;
            }
            let g = self.g[si];
            let s = self.moves[si];

            let relax = |planner: &mut PathPlanner, cell: Cell, dir: Direction, cost: f64, moves: u32| {
                let ni = state_of(cell, dir) as usize;
                if planner.closed[ni] {
                    return;
                }
                let ng = g + cost;
                if ng < planner.g[ni] {
                    if planner.g[ni].is_infinite() && planner.parent[ni] == NO_PARENT {
                        planner.touched.push(ni as u32);
                    }
                    planner.g[ni] = ng;
                    planner.moves[ni] = moves;
                    planner.parent[ni] = node.state;
                    let h = heuristic(cell, dir, goal.cell, goal.dir, turn_penalty);
                    planner.heap.push(Open {
                        f: ng + h,
                        h,
                        cell,
                        dir,
                        state: ni as u32,
                    });
                }
            };

            if node.cell == goal.cell && node.dir != goal.dir {
                let extra = match self.model {
                    CostModel::Traffic => self.cfg.c3,
                    CostModel::VisitCount => 0.0,
                };
                relax(self, node.cell, goal.dir, turn_wait + extra, s);
            }
            for dir in Direction::MOVES {
                let next = node.cell.step(dir);
                if blocked(next) {
                    continue;
                }
                let turn = dir != node.dir;
                let mut cost = 1.0 + if turn { turn_wait } else { 0.0 };
                cost += penalty.at(graph, &self.cfg, next, node.cell, dir, s + 1, turn);
                relax(self, next, dir, cost, s + 1);
            }
        }

        let Some(end) = found else {
            return Err(Error::Unreachable {
                robot: robot.id,
                from: start_cell,
                to: goal.cell,
            });
        };

        let mut chain = vec![end];
        let mut cur = end;
        while self.parent[cur as usize] != NO_PARENT {
            cur = self.parent[cur as usize];
            chain.push(cur);
        }
        chain.reverse();

        let mut cells: Vec<Cell> = prefix.to_vec();
        for &st in &chain[1..] {
            let cell = graph.cell_at(st as usize / 4);
            if *cells.last().unwrap() != cell {
                cells.push(cell);
            }
        }
        Plan::from_cells(robot.id, robot.direction, &cells)
    }
}

impl RobotPlanner for PathPlanner {
    fn plan(
        &mut self,
        graph: &GridGraph,
        robot: &RobotState,
        others: &[&Plan],
        frozen: &CellMask,
        extra_blocked: Option<&CellMask>,
    ) -> Result<Plan> {
        let penalty = match self.model {
            CostModel::Traffic => Penalty::Traffic(TrafficIndex::build(graph, others, self.cfg.horizon)),
            CostModel::VisitCount => Penalty::Visits(VisitCounts::from_plans(graph, others)),
        };
        self.plan_with(graph, robot, &penalty, frozen, extra_blocked)
    }
}

/// Per-node congestion term precomputed from other robots' plans.
pub enum Penalty<'a> {
    None,
    Traffic(TrafficIndex),
    TrafficRef(&'a TrafficIndex),
    Visits(VisitCounts),
}

impl Penalty<'_> {
    #[allow(clippy::too_many_arguments)]
    fn at(
        &self,
        graph: &GridGraph,
        cfg: &PlannerConfig,
        cell: Cell,
        from: Cell,
        dir: Direction,
        s: u32,
        turn: bool,
    ) -> f64 {
        match self {
            Penalty::None => {
                if turn {
                    cfg.c3
                } else {
                    0.0
                }
            }
            Penalty::Traffic(index) => node_traffic(graph, cfg, index, cell, from, dir, s, turn),
            Penalty::TrafficRef(index) => node_traffic(graph, cfg, index, cell, from, dir, s, turn),
            Penalty::Visits(counts) => adcc_cost(counts.count(graph, cell), counts.max(), cfg.c1),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn node_traffic(
    graph: &GridGraph,
    cfg: &PlannerConfig,
    index: &TrafficIndex,
    cell: Cell,
    from: Cell,
    dir: Direction,
    s: u32,
    turn: bool,
) -> f64 {
    let s = s as usize;
    if s > cfg.horizon {
        return traffic_cost(s as f64, &ConflictDistances::default(), turn, cfg);
    }
    let visits = index.at(graph, cell);
    if visits.is_empty() {
        return if turn { cfg.c3 } else { 0.0 };
    }
    let me = Visit {
        robot: usize::MAX,
        cell,
        index: s,
        dir,
        prev: Some(from),
        next: None,
    };
    let mut found = ConflictDistances::default();
    for other in visits {
        found.push(classify_visits(&me, other), other.index as f64);
    }
    traffic_cost(s as f64, &found, turn, cfg)
}

/// Convenience wrapper: traffic-cost plan for `robot` against `others`.
pub fn plan_path(
    graph: &GridGraph,
    robot: &RobotState,
    others: &[&Plan],
    frozen: &CellMask,
    cfg: &PlannerConfig,
) -> Result<Plan> {
    PathPlanner::new(cfg.clone(), CostModel::Traffic).plan(graph, robot, others, frozen, None)
}

/// Conflicts a candidate plan has with others inside the horizon.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathConflicts {
    /// `[opposite, following, crossing]` counts.
    pub counts: [usize; 3],
    pub conflicts: Vec<Conflict>,
}

impl PathConflicts {
    /// `(own distance, other robot's distance)` for every conflict of `kind`.
    pub fn distances(&self, kind: ConflictKind) -> Vec<(usize, usize)> {
        self.conflicts
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| c.indices)
            .collect()
    }
}

pub fn count_path_conflicts(candidate: &Plan, others: &[&Plan], horizon: usize) -> PathConflicts {
    let mut out = PathConflicts::default();
    for other in others {
        if other.robot == candidate.robot {
            continue;
        }
        for c in classify_pair(candidate, other, horizon) {
            out.counts[c.kind as usize] += 1;
            out.conflicts.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pose;

    fn c(x: i32, y: i32) -> Cell {
        Cell::new(x, y)
    }

    fn robot(g: &GridGraph, id: usize, start: Pose, goal: Pose) -> RobotState {
        RobotState::initial(id, start, goal, 4, g).unwrap()
    }

    #[test]
    fn traffic_cost_examples() {
        let cfg = PlannerConfig::default();
        let none = ConflictDistances::default();
        assert_eq!(traffic_cost(3.0, &none, false, &cfg), 0.0);
        assert_eq!(traffic_cost(3.0, &none, true, &cfg), 2.0);
        let mut one = ConflictDistances::default();
        one.following.push(4.0);
        let expected = 1.5 * 1.05f64.powi(-4);
        let got = traffic_cost(4.0, &one, false, &cfg);
        assert!(((got - expected) / expected).abs() < 1e-12);
        assert!((got - 1.2341).abs() < 1e-4);
    }

    #[test]
    fn adding_conflicts_never_lowers_traffic_cost() {
        let cfg = PlannerConfig::default();
        let mut d = ConflictDistances::default();
        let mut last = traffic_cost(5.0, &d, false, &cfg);
        for (i, kind) in [ConflictKind::Crossing, ConflictKind::Following, ConflictKind::Opposite]
            .into_iter()
            .cycle()
            .take(15)
            .enumerate()
        {
            d.push(kind, (i % 9) as f64);
            let now = traffic_cost(5.0, &d, false, &cfg);
            assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn heuristic_examples() {
        let g = c(3, 3);
        assert_eq!(heuristic(g, Direction::Up, g, Direction::Up, 2.0), 0.0);
        assert_eq!(heuristic(g, Direction::Up, g, Direction::Right, 2.0), 2.0);
        assert_eq!(heuristic(c(0, 3), Direction::Right, g, Direction::Right, 2.0), 3.0);
        assert_eq!(min_turns(g, Direction::Up, g, Direction::Down), 1);
        assert_eq!(min_turns(c(0, 0), Direction::Left, c(2, 2), Direction::Left), 3);
    }

    #[test]
    fn single_robot_goes_straight() {
        let g = GridGraph::open(8, 3);
        let r = robot(&g, 0, Pose::new(c(0, 1), Direction::Right), Pose::new(c(6, 1), Direction::Right));
        let p = plan_path(&g, &r, &[], &CellMask::new(&g), &PlannerConfig::default()).unwrap();
        let cells: Vec<Cell> = p.cells().collect();
        assert_eq!(cells, (0..=6).map(|x| c(x, 1)).collect::<Vec<_>>());
        assert_eq!(p.steps[3].index, 3);
    }

    #[test]
    fn enclosed_goal_is_unreachable() {
        let g = GridGraph::open(5, 5);
        let r = robot(&g, 0, Pose::new(c(0, 0), Direction::Right), Pose::new(c(2, 2), Direction::Up));
        let frozen = CellMask::from_cells(&g, [c(1, 2), c(3, 2), c(2, 1), c(2, 3)]);
        let err = plan_path(&g, &r, &[], &frozen, &PlannerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Unreachable { robot: 0, .. }));
    }

    #[test]
    fn plan_starts_with_queue_and_is_connected() {
        let g = GridGraph::open(6, 6);
        let mut r = robot(&g, 0, Pose::new(c(0, 0), Direction::Right), Pose::new(c(4, 4), Direction::Down));
        r.queue = r.queue.append(&[c(1, 0), c(2, 0)], &g).unwrap();
        let p = plan_path(&g, &r, &[], &CellMask::new(&g), &PlannerConfig::default()).unwrap();
        let cells: Vec<Cell> = p.cells().collect();
        assert_eq!(&cells[..3], r.queue.cells());
        assert!(cells.windows(2).all(|w| w[0].manhattan(w[1]) == 1));
        assert_eq!(p.last(), c(4, 4));
    }

    #[test]
    fn plan_avoids_corridor_with_opposing_traffic() {
        // Two equal corridors (rows 0 and 2) separated by a wall on row 1.
        let wall: Vec<Cell> = (1..6).map(|x| c(x, 1)).collect();
        let g = GridGraph::with_blocked(7, 3, wall).unwrap();
        let cfg = PlannerConfig::default();
        let r = robot(&g, 0, Pose::new(c(0, 1), Direction::Up), Pose::new(c(6, 1), Direction::Down));
        let baseline = plan_path(&g, &r, &[], &CellMask::new(&g), &cfg).unwrap();
        let via_top = baseline.cells().any(|cell| cell == c(3, 0));

        // Opponent drives the corridor the traffic-free plan uses, in reverse.
        let row = if via_top { 0 } else { 2 };
        let opp_cells: Vec<Cell> = (0..7).rev().map(|x| c(x, row)).collect();
        let opponent = Plan::from_cells(1, Direction::Left, &opp_cells).unwrap();
        let p = plan_path(&g, &r, &[&opponent], &CellMask::new(&g), &cfg).unwrap();
        assert!(p.cells().all(|cell| cell.y != row || cell.x == 0 || cell.x == 6));
    }
}
