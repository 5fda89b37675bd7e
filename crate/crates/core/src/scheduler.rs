//! Per-tick queue filling with pairwise arbitration of contested cells.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Cell, GridGraph};
use crate::model::{Action, RobotState};
use crate::planner::Plan;

/// One side of a contested cell: the robot's queue as it would look after
/// its full request, and the position `k` of the contested cell in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArbitrationContext {
    pub robot: usize,
    pub sequence: Vec<Cell>,
    pub k: usize,
    pub goal: Cell,
    /// Remaining distance to the destination along the plan.
    pub remaining: usize,
}

impl ArbitrationContext {
    pub fn cell(&self) -> Cell {
        self.sequence[self.k]
    }

    pub fn prev(&self) -> Option<Cell> {
        self.k.checked_sub(1).map(|p| self.sequence[p])
    }

    pub fn next(&self) -> Option<Cell> {
        self.sequence.get(self.k + 1).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    I,
    J,
}

/// The arbitration rule that settled a contest, in evaluation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Reason {
    /// The cell is i's goal and j arrives from where i is heading back to:
    /// i keeps it.
    GoalOfIFollowed,
    /// The cell is i's goal otherwise: j takes it.
    GoalOfI,
    /// The cell is j's goal and i's next cell is j's previous one: j keeps it.
    GoalOfJFollowed,
    /// The cell is j's goal otherwise: i takes it.
    GoalOfJ,
    /// Only i's next cell matches j's previous one: j is ahead and wins.
    JAhead,
    /// Only i's previous cell matches j's next one: i is ahead and wins.
    IAhead,
    /// The shorter remaining distance wins; equal distances tie.
    Distance,
}

/// Outcome of the arbitration rules: the winner, or `None` when the
/// final rule falls to a coin flip, and the rule that fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub winner: Option<Side>,
    pub reason: Reason,
}

/// Equality that is false whenever either side is out of range.
fn same(a: Option<Cell>, b: Option<Cell>) -> bool {
    matches!((a, b), (Some(x), Some(y)) if x == y)
}

/// Applies the arbitration rules in order; see [`Reason`].
pub fn decide(i: &ArbitrationContext, j: &ArbitrationContext) -> Decision {
    let pick = |side, reason| Decision {
        winner: Some(side),
        reason,
    };
    let back = same(i.prev(), j.next());
    let front = same(i.next(), j.prev());
    if i.cell() == i.goal {
        if back {
            pick(Side::I, Reason::GoalOfIFollowed)
        } else {
            pick(Side::J, Reason::GoalOfI)
        }
    } else if j.cell() == j.goal {
        if front {
            pick(Side::J, Reason::GoalOfJFollowed)
        } else {
            pick(Side::I, Reason::GoalOfJ)
        }
    } else if front && !back {
        pick(Side::J, Reason::JAhead)
    } else if !front && back {
        pick(Side::I, Reason::IAhead)
    } else if i.remaining < j.remaining {
        pick(Side::I, Reason::Distance)
    } else if j.remaining < i.remaining {
        pick(Side::J, Reason::Distance)
    } else {
        Decision { winner: None, reason: Reason::Distance }
    }
}

/// `decide`, with distance ties broken by a fair coin from `rng`.
pub fn arbitrate<R: Rng + ?Sized>(i: &ArbitrationContext, j: &ArbitrationContext, rng: &mut R) -> Side {
    match decide(i, j).winner {
        Some(side) => side,
        None if rng.gen_bool(0.5) => Side::I,
        None => Side::J,
    }
}

/// Cells from the queue head to the goal along `plan`; a plan that stops
/// short adds the Manhattan distance from its end.
pub fn remaining_distance(robot: &RobotState, plan: &Plan) -> usize {
    let along = plan.len().saturating_sub(1);
    along + plan.last().manhattan(robot.goal.cell) as usize
}

/// Cells one robot asks to append this tick.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueueRequest {
    pub robot: usize,
    pub cells: Vec<Cell>,
    /// Queue length before the request; appended cell `c` lands at
    /// `base + c`.
    pub base: usize,
}

impl QueueRequest {
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells.len()).map(|c| self.base + c)
    }
}

/// Checks that `plan` begins with the robot's queue.
pub fn check_sync(robot: &RobotState, plan: &Plan) -> Result<()> {
    let q = robot.queue.cells();
    if plan.robot != robot.id || plan.len() < q.len() || !plan.cells().zip(q).all(|(a, &b)| a == b) {
        return Err(Error::Desync { robot: robot.id });
    }
    Ok(())
}

/// Requested extension of each active robot, before arbitration.
pub fn build_requests(states: &[RobotState], plans: &[Plan], tick: u64, graph: &GridGraph) -> Result<Vec<QueueRequest>> {
    let mut holder: Vec<usize> = vec![usize::MAX; graph.cell_count()];
    for s in states {
        for &c in s.queue.cells() {
            holder[graph.index(c)] = s.id;
        }
    }
    let mut out = Vec::with_capacity(states.len());
    for (s, plan) in states.iter().zip(plans) {
        let base = s.queue.effective_length();
        let mut req = QueueRequest {
            robot: s.id,
            cells: Vec::new(),
            base,
        };
        if !s.done {
            check_sync(s, plan)?;
            let room = s.queue.capacity() - base;
            for step in plan.steps.iter().skip(base).take(room) {
                let c = step.cell;
                let h = holder[graph.index(c)];
                if h != usize::MAX && h != s.id {
                    break;
                }
                if s.queue.contains(c) || req.cells.contains(&c) {
                    break;
                }
                if step.release.is_some_and(|r| tick < r) {
                    break;
                }
                req.cells.push(c);
            }
        }
        out.push(req);
    }
    Ok(out)
}

fn context(s: &RobotState, plan: &Plan, req: &QueueRequest, cell: Cell) -> ArbitrationContext {
    let mut sequence = s.queue.cells().to_vec();
    sequence.extend_from_slice(&req.cells);
    let k = sequence.iter().position(|&c| c == cell).expect("contested cell is requested");
    ArbitrationContext {
        robot: s.id,
        sequence,
        k,
        goal: s.goal.cell,
        remaining: remaining_distance(s, plan),
    }
}

/// Extends every queue along its plan toward capacity. Contested cells are
/// settled in ascending `(x, y)` order; at each, claimants in id order meet
/// pairwise and the loser truncates its request at that cell.
pub fn fill_queues<R: Rng + ?Sized>(
    graph: &GridGraph,
    states: &[RobotState],
    plans: &[Plan],
    tick: u64,
    rng: &mut R,
) -> Result<Vec<Action>> {
    if plans.len() != states.len() {
        return Err(Error::Config(format!("{} plans for {} robots", plans.len(), states.len())));
    }
    let mut requests = build_requests(states, plans, tick, graph)?;

    let mut claims: Vec<(Cell, usize)> = requests
        .iter()
        .flat_map(|r| r.cells.iter().map(move |&c| (c, r.robot)))
        .collect();
    claims.sort_unstable();
    let contested: Vec<Cell> = claims
        .chunk_by(|a, b| a.0 == b.0)
        .filter(|g| g.len() > 1)
        .map(|g| g[0].0)
        .collect();

    for cell in contested {
        let mut claimants: Vec<usize> = requests
            .iter()
            .filter(|r| r.cells.contains(&cell))
            .map(|r| r.robot)
            .collect();
        if claimants.len() < 2 {
            continue;
        }
        claimants.sort_unstable();
        let mut winner = claimants[0];
        for &challenger in &claimants[1..] {
            let ci = context(&states[winner], &plans[winner], &requests[winner], cell);
            let cj = context(&states[challenger], &plans[challenger], &requests[challenger], cell);
            let loser = match arbitrate(&ci, &cj, rng) {
                Side::I => challenger,
                Side::J => std::mem::replace(&mut winner, challenger),
            };
            let req = &mut requests[loser];
            let cut = req.cells.iter().position(|&c| c == cell).expect("claimant requests the cell");
            req.cells.truncate(cut);
        }
    }

    Ok(states
        .iter()
        .zip(&requests)
        .map(|(s, r)| Action::extend(s.id, &s.queue, &r.cells))
        .collect())
}
