//! Discrete-time transition of robot states under sampled speeds, plus the
//! joint-action rule validator.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{direction_between, Cell, GridGraph};
use crate::model::{Action, PreservedQueue, RobotState, Slot};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpeedMode {
    Fixed,
    Uniform,
}

/// Nominal speed `v` handed to every robot each tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedRegime {
    pub v_min: f64,
    pub v_max: f64,
    pub mode: SpeedMode,
}

impl SpeedRegime {
    pub fn fixed(v: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("fixed speed {v} must be positive")));
        }
        Ok(SpeedRegime {
            v_min: v,
            v_max: v,
            mode: SpeedMode::Fixed,
        })
    }

    pub fn uniform(v_min: f64, v_max: f64) -> Result<Self> {
        if !(v_min >= 0.0 && v_max > 0.0 && v_min <= v_max && v_max.is_finite()) {
            return Err(Error::Config(format!("bad speed range [{v_min}, {v_max}]")));
        }
        Ok(SpeedRegime {
            v_min,
            v_max,
            mode: SpeedMode::Uniform,
        })
    }

    /// The five regimes of the make-span benchmark.
    pub fn benchmark_set() -> Vec<SpeedRegime> {
        vec![
            SpeedRegime::fixed(1.0).unwrap(),
            SpeedRegime::uniform(0.5, 1.0).unwrap(),
            SpeedRegime::uniform(0.0, 1.0).unwrap(),
            SpeedRegime::fixed(0.5).unwrap(),
            SpeedRegime::uniform(0.0, 0.5).unwrap(),
        ]
    }

    /// `"1"` for a fixed speed, `"0.5-1"` for a uniform range.
    pub fn label(&self) -> String {
        match self.mode {
            SpeedMode::Fixed => format!("{}", self.v_max),
            SpeedMode::Uniform => format!("{}-{}", self.v_min, self.v_max),
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        let label = label.trim();
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad speed regime {label:?}")))
        };
        match label.split_once('-') {
            Some((lo, hi)) => SpeedRegime::uniform(num(lo)?, num(hi)?),
            None => SpeedRegime::fixed(num(label)?),
        }
    }
}

impl fmt::Display for SpeedRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn sample_speed<R: Rng + ?Sized>(regime: &SpeedRegime, rng: &mut R) -> f64 {
    match regime.mode {
        SpeedMode::Fixed => regime.v_max,
        SpeedMode::Uniform => rng.gen_range(regime.v_min..=regime.v_max),
    }
}

/// When a robot's speed is redrawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpeedSampling {
    #[default]
    PerTick,
    /// Held constant from the start of a movement until its completion.
    PerEdge,
}

/// Draws one speed per robot per tick. The stream advances identically in
/// both modes so runs stay aligned across algorithms.
#[derive(Clone, Debug)]
pub struct SpeedSampler {
    regime: SpeedRegime,
    sampling: SpeedSampling,
    held: Vec<Option<f64>>,
}

impl SpeedSampler {
    pub fn new(regime: SpeedRegime, sampling: SpeedSampling, robots: usize) -> Self {
        SpeedSampler {
            regime,
            sampling,
            held: vec![None; robots],
        }
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, states: &[RobotState], rng: &mut R) -> Vec<f64> {
        states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let fresh = sample_speed(&self.regime, rng);
                match self.sampling {
                    SpeedSampling::PerTick => fresh,
                    SpeedSampling::PerEdge => {
                        if s.phase == 0.0 || self.held[i].is_none() {
                            self.held[i] = Some(fresh);
                        }
                        self.held[i].unwrap()
                    }
                }
            })
            .collect()
    }
}

/// `v_i = (f − 1)/(N − 1) · v`.
pub fn compute_speed(f: usize, n: usize, v: f64) -> Result<f64> {
    if n <= 2 || f == 0 || f > n {
        return Err(Error::SpeedArgument { f, n });
    }
    Ok((f - 1) as f64 / (n - 1) as f64 * v)
}

/// Number of action elements up to and including the first one entered
/// with a heading different from the first move. A straight action gives
/// its real length; a single real element gives 1.
pub fn first_turn_count(action: &Action) -> usize {
    let cells = action.real_cells();
    run_length(&cells)
}

fn run_length(cells: &[Cell]) -> usize {
    if cells.len() < 2 {
        return cells.len().max(1);
    }
    let first = direction_between(cells[0], cells[1]).ok();
    for k in 1..cells.len() - 1 {
        if direction_between(cells[k], cells[k + 1]).ok() != first {
            return k + 2;
        }
    }
    cells.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepEvent {
    PoppedHead,
    TurnStarted,
    WaitDecrement,
    Idle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: RobotState,
    pub events: Vec<StepEvent>,
}

/// Which joint-action rule a violation breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// The action starts with the preserved queue.
    Prefix,
    /// No cell is held by two robots.
    Exclusive,
    /// No cell repeats within one queue.
    NoRevisit,
    /// Consecutive real cells are free move edges, placeholders trail.
    Path,
    /// At most `N` slots.
    Length,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Prefix => "prefix",
            Rule::Exclusive => "exclusive",
            Rule::NoRevisit => "no-revisit",
            Rule::Path => "path",
            Rule::Length => "length",
        })
    }
}

/// A breach of one joint-action rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    pub robots: Vec<usize>,
    pub cells: Vec<Cell>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} robots {:?}", self.rule, self.robots)?;
        if !self.cells.is_empty() {
            let cells: Vec<String> = self.cells.iter().map(|c| c.to_string()).collect();
            write!(f, " at {}", cells.join(" "))?;
        }
        write!(f, ": {}", self.detail)
    }
}

fn violation(rule: Rule, robots: Vec<usize>, cells: Vec<Cell>, detail: impl Into<String>) -> Violation {
    Violation {
        rule,
        robots,
        cells,
        detail: detail.into(),
    }
}

/// Single-robot checks: every rule except [`Rule::Exclusive`].
fn check_action(graph: &GridGraph, state: &RobotState, action: &Action) -> Vec<Violation> {
    let id = state.id;
    let mut out = Vec::new();
    let capacity = state.queue.capacity();
    if action.robot != id {
        out.push(violation(Rule::Prefix, vec![id, action.robot], vec![], "action addressed to another robot"));
        return out;
    }
    if action.slots.len() > capacity || action.real_len() > capacity {
        out.push(violation(
            Rule::Length,
            vec![id],
            vec![],
            format!("{} slots / {} real cells exceed N = {capacity}", action.slots.len(), action.real_len()),
        ));
    }
    let mut seen_placeholder = false;
    for slot in &action.slots {
        match slot {
            Slot::Placeholder => seen_placeholder = true,
            Slot::Cell(c) if seen_placeholder => {
                out.push(violation(Rule::Path, vec![id], vec![*c], "real cell after a placeholder"));
                break;
            }
            Slot::Cell(_) => {}
        }
    }
    let cells = action.real_cells();
    let held = state.queue.cells();
    if cells.len() < held.len() || cells[..held.len()] != *held {
        out.push(violation(Rule::Prefix, vec![id], held.to_vec(), "action does not start with the preserved queue"));
    }
    for (l, c) in cells.iter().enumerate() {
        if cells[l + 1..].contains(c) {
            out.push(violation(Rule::NoRevisit, vec![id], vec![*c], "cell repeated within the queue"));
        }
    }
    for pair in cells.windows(2) {
        if !graph.is_edge(pair[0], pair[1]) || pair[0] == pair[1] {
            out.push(violation(Rule::Path, vec![id], pair.to_vec(), "consecutive cells are not a move edge"));
        }
    }
    if let Some(&c) = cells.iter().find(|&&c| !graph.is_free(c)) {
        out.push(violation(Rule::Path, vec![id], vec![c], "cell outside the free grid"));
    }
    out
}

/// Every rule violation in the joint action; empty iff all hold.
pub fn validate_constraints(graph: &GridGraph, states: &[RobotState], actions: &[Action]) -> Vec<Violation> {
    let mut out = Vec::new();
    if states.len() != actions.len() {
        out.push(violation(
            Rule::Prefix,
            vec![],
            vec![],
            format!("{} states but {} actions", states.len(), actions.len()),
        ));
        return out;
    }
    for (state, action) in states.iter().zip(actions) {
        out.extend(check_action(graph, state, action));
    }
    let mut owner: Vec<Option<usize>> = vec![None; graph.cell_count()];
    for action in actions {
        for c in action.real_cells() {
            if !graph.in_bounds(c) {
                continue;
            }
            let idx = graph.index(c);
            match owner[idx] {
                Some(other) if other != action.robot => {
                    out.push(violation(Rule::Exclusive, vec![other, action.robot], vec![c], "cell held by two robots"));
                }
                _ => owner[idx] = Some(action.robot),
            }
        }
    }
    out
}

fn constraint_error(v: Violation) -> Error {
    Error::Constraint {
        rule: v.rule,
        robot: v.robots.first().copied().unwrap_or(usize::MAX),
        detail: v.detail,
    }
}

/// One tick of the single-robot transition.
pub fn step_robot(
    graph: &GridGraph,
    state: &RobotState,
    action: &Action,
    v: f64,
    turn_wait: u32,
) -> Result<StepOutcome> {
    if let Some(v) = check_action(graph, state, action).into_iter().next() {
        return Err(constraint_error(v));
    }
    let mut next = state.clone();
    let mut events = Vec::new();
    if state.done {
        events.push(StepEvent::Idle);
        return Ok(StepOutcome { state: next, events });
    }
    let cells = action.real_cells();
    let capacity = state.queue.capacity();

    // heading change
    if cells.len() > 1 {
        let heading = direction_between(cells[0], cells[1])?;
        if heading != next.direction {
            next.direction = heading;
            next.wait = turn_wait;
            events.push(StepEvent::TurnStarted);
        }
    } else if cells[0] == state.goal.cell && next.direction != state.goal.dir && next.wait == 0 {
        next.direction = state.goal.dir;
        next.wait = turn_wait;
        events.push(StepEvent::TurnStarted);
    }

    let appended = PreservedQueue::new(capacity, cells.clone(), graph)?;
    if next.wait > 0 {
        next.queue = appended;
        next.phase = 0.0;
        next.wait -= 1;
        events.push(StepEvent::WaitDecrement);
    } else {
        let f = run_length(&cells);
        let vi = compute_speed(f, capacity, v)?;
        next.phase += vi;
        if next.phase >= 1.0 {
            next.queue = appended.pop_head();
            next.phase = 0.0;
            events.push(StepEvent::PoppedHead);
        } else {
            next.queue = appended;
            if vi == 0.0 {
                events.push(StepEvent::Idle);
            }
        }
    }
    next.done = next.at_goal();
    Ok(StepOutcome { state: next, events })
}

#[derive(Clone, Debug)]
pub struct WorldStep {
    pub states: Vec<RobotState>,
    pub events: Vec<Vec<StepEvent>>,
}

/// Steps all robots with the given per-robot speeds. Robots already at
/// their goal stay frozen.
pub fn step_world_with_speeds(
    graph: &GridGraph,
    states: &[RobotState],
    actions: &[Action],
    speeds: &[f64],
    turn_wait: u32,
) -> Result<WorldStep> {
    let mut owner: Vec<Option<usize>> = vec![None; graph.cell_count()];
    for action in actions {
        for c in action.real_cells() {
            if !graph.in_bounds(c) {
                return Err(Error::InvalidCell(c));
            }
            let idx = graph.index(c);
            match owner[idx] {
                Some(a) if a != action.robot => {
                    return Err(Error::Collision {
                        a,
                        b: action.robot,
                        cell: c,
                    })
                }
                _ => owner[idx] = Some(action.robot),
            }
        }
    }
    let mut next = Vec::with_capacity(states.len());
    let mut events = Vec::with_capacity(states.len());
    for ((state, action), &v) in states.iter().zip(actions).zip(speeds) {
        let out = step_robot(graph, state, action, v, turn_wait)?;
        next.push(out.state);
        events.push(out.events);
    }
    Ok(WorldStep { states: next, events })
}

/// Samples one speed per robot (in id order) and steps the world.
pub fn step_world<R: Rng + ?Sized>(
    graph: &GridGraph,
    states: &[RobotState],
    actions: &[Action],
    regime: &SpeedRegime,
    rng: &mut R,
    turn_wait: u32,
) -> Result<WorldStep> {
    let speeds: Vec<f64> = states.iter().map(|_| sample_speed(regime, rng)).collect();
    step_world_with_speeds(graph, states, actions, &speeds, turn_wait)
}
