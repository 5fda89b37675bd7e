//! Preserved queues, actions and per-robot state.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{direction_between, Cell, Direction, GridGraph};

/// One slot of a fixed-length queue: a real cell or the `#` placeholder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Cell(Cell),
    Placeholder,
}

impl Slot {
    pub fn cell(self) -> Option<Cell> {
        match self {
            Slot::Cell(c) => Some(c),
            Slot::Placeholder => None,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Cell(c) => write!(f, "{c}"),
            Slot::Placeholder => f.write_str("#"),
        }
    }
}

/// Cells a robot currently holds: its own cell first, then the cells it
/// has reserved ahead. Always non-empty, edge-connected, revisit-free and
/// no longer than its capacity `N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PreservedQueue {
    capacity: usize,
    cells: Vec<Cell>,
}

impl PreservedQueue {
    pub fn new(capacity: usize, cells: Vec<Cell>, graph: &GridGraph) -> Result<Self> {
        if capacity < 3 {
            return Err(Error::Queue(format!("capacity {capacity} must exceed 2")));
        }
        if cells.is_empty() {
            return Err(Error::Queue("queue needs at least its head cell".into()));
        }
        if cells.len() > capacity {
            return Err(Error::Queue(format!(
                "{} real cells exceed capacity {capacity}",
                cells.len()
            )));
        }
        for &c in &cells {
            if !graph.is_free(c) {
                return Err(Error::InvalidCell(c));
            }
        }
        for pair in cells.windows(2) {
            if !graph.is_edge(pair[0], pair[1]) {
                return Err(Error::Queue(format!("{} -> {} is not an edge", pair[0], pair[1])));
            }
        }
        for (i, c) in cells.iter().enumerate() {
            if cells[i + 1..].contains(c) {
                return Err(Error::Queue(format!("cell {c} appears twice")));
            }
        }
        Ok(PreservedQueue { capacity, cells })
    }

    /// Queue holding only the starting cell.
    pub fn singleton(capacity: usize, cell: Cell, graph: &GridGraph) -> Result<Self> {
        PreservedQueue::new(capacity, vec![cell], graph)
    }

    /// Builds a queue from its slot form; placeholders must form a suffix.
    pub fn from_slots(slots: &[Slot], graph: &GridGraph) -> Result<Self> {
        let cells = real_prefix(slots)?;
        PreservedQueue::new(slots.len(), cells, graph)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn head(&self) -> Cell {
        self.cells[0]
    }

    pub fn tail(&self) -> Cell {
        *self.cells.last().expect("queue is never empty")
    }

    /// Number of real (non-placeholder) slots.
    pub fn effective_length(&self) -> usize {
        self.cells.len()
    }

    pub fn is_full(&self) -> bool {
        self.cells.len() == self.capacity
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.contains(&cell)
    }

    pub fn slots(&self) -> Vec<Slot> {
        let mut out: Vec<Slot> = self.cells.iter().copied().map(Slot::Cell).collect();
        out.resize(self.capacity, Slot::Placeholder);
        out
    }

    /// New queue with `extra` appended after the current cells.
    pub fn append(&self, extra: &[Cell], graph: &GridGraph) -> Result<Self> {
        let mut cells = self.cells.clone();
        cells.extend_from_slice(extra);
        PreservedQueue::new(self.capacity, cells, graph)
    }

    /// Drops the head after a completed movement. A single-cell queue is
    /// returned unchanged.
    pub fn pop_head(&self) -> Self {
        if self.cells.len() == 1 {
            return self.clone();
        }
        PreservedQueue {
            capacity: self.capacity,
            cells: self.cells[1..].to_vec(),
        }
    }

    /// Heading of the last move inside the queue, if it has one.
    pub fn tail_heading(&self) -> Option<Direction> {
        let n = self.cells.len();
        if n < 2 {
            return None;
        }
        direction_between(self.cells[n - 2], self.cells[n - 1]).ok()
    }
}

pub fn effective_length(queue: &PreservedQueue) -> usize {
    queue.effective_length()
}

fn real_prefix(slots: &[Slot]) -> Result<Vec<Cell>> {
    let mut cells = Vec::with_capacity(slots.len());
    let mut seen_placeholder = false;
    for slot in slots {
        match slot {
            Slot::Cell(c) if seen_placeholder => {
                return Err(Error::Queue(format!("real cell {c} after a placeholder")));
            }
            Slot::Cell(c) => cells.push(*c),
            Slot::Placeholder => seen_placeholder = true,
        }
    }
    Ok(cells)
}

/// A robot's queue after this tick's appends, in slot form. Kept unchecked
/// so that malformed actions can be reported by the validator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Action {
    pub robot: usize,
    pub slots: Vec<Slot>,
}

impl Action {
    pub fn hold(robot: usize, queue: &PreservedQueue) -> Self {
        Action {
            robot,
            slots: queue.slots(),
        }
    }

    pub fn extend(robot: usize, queue: &PreservedQueue, extra: &[Cell]) -> Self {
        let mut slots: Vec<Slot> = queue
            .cells()
            .iter()
            .chain(extra)
            .copied()
            .map(Slot::Cell)
            .collect();
        if slots.len() < queue.capacity() {
            slots.resize(queue.capacity(), Slot::Placeholder);
        }
        Action { robot, slots }
    }

    /// Real cells in slot order, placeholders skipped.
    pub fn real_cells(&self) -> Vec<Cell> {
        self.slots.iter().filter_map(|s| s.cell()).collect()
    }

    pub fn real_len(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, Slot::Cell(_))).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub cell: Cell,
    pub dir: Direction,
}

impl Pose {
    pub fn new(cell: Cell, dir: Direction) -> Self {
        Pose { cell, dir }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotState {
    pub id: usize,
    pub direction: Direction,
    pub queue: PreservedQueue,
    /// Progress of the current one-cell movement.
    pub phase: f64,
    /// Remaining ticks of an in-place turn.
    pub wait: u32,
    pub start: Pose,
    pub goal: Pose,
    pub done: bool,
}

impl RobotState {
    /// State at `t = 0`: heading `DS`, queue `[S, #, …]`, zero phase and wait.
    pub fn initial(id: usize, start: Pose, goal: Pose, capacity: usize, graph: &GridGraph) -> Result<Self> {
        if !start.dir.is_moving() || !goal.dir.is_moving() {
            return Err(Error::Config(format!("robot {id}: start and goal headings must be 1..=4")));
        }
        if !graph.is_free(goal.cell) {
            return Err(Error::InvalidCell(goal.cell));
        }
        let mut state = RobotState {
            id,
            direction: start.dir,
            queue: PreservedQueue::singleton(capacity, start.cell, graph)?,
            phase: 0.0,
            wait: 0,
            start,
            goal,
            done: false,
        };
        state.done = state.at_goal();
        Ok(state)
    }

    pub fn position(&self) -> Cell {
        self.queue.head()
    }

    /// Standing on the goal cell, facing the goal heading, at rest.
    pub fn at_goal(&self) -> bool {
        self.queue.effective_length() == 1
            && self.queue.head() == self.goal.cell
            && self.direction == self.goal.dir
            && self.phase == 0.0
            && self.wait == 0
    }

    /// Heading the robot will have at the tail of its queue.
    pub fn tail_heading(&self) -> Direction {
        self.queue.tail_heading().unwrap_or(self.direction)
    }
}
