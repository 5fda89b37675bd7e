//! Typed conflict detection between plans and the re-planning round that
//! removes opposite conflicts and drives the weighted score below `φ`.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Cell, CellMask, Direction, GridGraph};
use crate::model::RobotState;
use crate::planner::{Plan, PlannerConfig, RobotPlanner};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConflictKind {
    Opposite = 0,
    Following = 1,
    Crossing = 2,
}

impl ConflictKind {
    pub fn label(self) -> &'static str {
        match self {
            ConflictKind::Opposite => "opposite",
            ConflictKind::Following => "following",
            ConflictKind::Crossing => "crossing",
        }
    }
}

impl fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A robot's first arrival at a cell within the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Visit {
    pub robot: usize,
    pub cell: Cell,
    pub index: usize,
    /// Entry heading; the robot's current heading at index 0.
    pub dir: Direction,
    pub prev: Option<Cell>,
    pub next: Option<Cell>,
}

fn both_eq(a: Option<Cell>, b: Option<Cell>) -> bool {
    matches!((a, b), (Some(x), Some(y)) if x == y)
}

/// Kind of the conflict between two visits of the same cell.
pub fn classify_visits(a: &Visit, b: &Visit) -> ConflictKind {
    if a.index == b.index || both_eq(a.next, b.prev) || both_eq(a.prev, b.next) {
        ConflictKind::Opposite
    } else if a.dir == b.dir {
        ConflictKind::Following
    } else {
        ConflictKind::Crossing
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub robots: (usize, usize),
    pub cell: Cell,
    /// Path indices of the shared cell in each robot's plan.
    pub indices: (usize, usize),
}

/// One conflict per shared cell whose first arrivals are both within the
/// horizon.
pub fn classify_pair(plan_i: &Plan, plan_j: &Plan, horizon: usize) -> Vec<Conflict> {
    let vj = plan_j.visits(horizon);
    let mut out = Vec::new();
    for a in plan_i.visits(horizon) {
        if let Some(b) = vj.iter().find(|b| b.cell == a.cell) {
            out.push(Conflict {
                kind: classify_visits(&a, b),
                robots: (plan_i.robot, plan_j.robot),
                cell: a.cell,
                indices: (a.index, b.index),
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub opposite: usize,
    pub following: usize,
    pub crossing: usize,
}

impl Tally {
    fn add(&mut self, kind: ConflictKind) {
        match kind {
            ConflictKind::Opposite => self.opposite += 1,
            ConflictKind::Following => self.following += 1,
            ConflictKind::Crossing => self.crossing += 1,
        }
    }

    /// `γ_i = δ_fol·n_fol + δ_cross·n_cross`.
    pub fn gamma(&self, delta_fol: f64, delta_cross: f64) -> f64 {
        delta_fol * self.following as f64 + delta_cross * self.crossing as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConflictReport {
    pub conflicts: Vec<Conflict>,
    /// Indexed by robot id.
    pub tallies: Vec<Tally>,
    pub gammas: Vec<f64>,
    pub gamma: f64,
}

impl ConflictReport {
    pub fn opposite_count(&self) -> usize {
        self.conflicts.iter().filter(|c| c.kind == ConflictKind::Opposite).count()
    }

    /// Robot with the largest `key`, lowest id on ties, among `eligible`.
    fn argmax<K: PartialOrd + Copy>(&self, eligible: &[bool], key: impl Fn(usize) -> K, floor: K) -> Option<usize> {
        let mut best: Option<(usize, K)> = None;
        for (i, ok) in eligible.iter().enumerate() {
            if !ok {
                continue;
            }
            let k = key(i);
            if k > floor && best.is_none_or(|(_, b)| k > b) {
                best = Some((i, k));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Pairwise classification over all plans whose robot is not parked on a
/// frozen cell. `plans[i].robot` must equal `i`.
pub fn detect_all(plans: &[Plan], frozen: &CellMask, cfg: &PlannerConfig) -> ConflictReport {
    let m = plans.len();
    let mut visits: Vec<Visit> = Vec::new();
    for plan in plans {
        if frozen.contains(plan.head()) {
            continue;
        }
        visits.extend(plan.visits(cfg.horizon));
    }
    visits.sort_by_key(|v| (v.cell, v.robot));

    let mut report = ConflictReport {
        conflicts: Vec::new(),
        tallies: vec![Tally::default(); m],
        gammas: vec![0.0; m],
        gamma: 0.0,
    };
    for group in visits.chunk_by(|a, b| a.cell == b.cell) {
        for (x, a) in group.iter().enumerate() {
            for b in &group[x + 1..] {
                let kind = classify_visits(a, b);
                report.tallies[a.robot].add(kind);
                report.tallies[b.robot].add(kind);
                report.conflicts.push(Conflict {
                    kind,
                    robots: (a.robot, b.robot),
                    cell: a.cell,
                    indices: (a.index, b.index),
                });
            }
        }
    }
    for (g, t) in report.gammas.iter_mut().zip(&report.tallies) {
        *g = t.gamma(cfg.delta_fol, cfg.delta_cross);
    }
    report.gamma = report.gammas.iter().copied().fold(0.0, f64::max);
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundExit {
    /// No opposite conflicts remain and `γ ≤ φ`.
    Normal,
    /// The opposite-elimination loop hit its cap of `4m` re-plans.
    OppositeLimit,
    /// The `γ` loop hit its cap of `2m` re-plans or ran out of robots whose
    /// re-plan changes anything.
    GammaLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    pub exit: RoundExit,
    pub replans: usize,
    pub report: ConflictReport,
    /// Robots whose plan was replaced during the round.
    pub changed: Vec<usize>,
}

impl RoundOutcome {
    pub fn is_soft_failure(&self) -> bool {
        self.exit != RoundExit::Normal
    }
}

/// One conflict-management round over all active robots. Robots that are
/// done are never re-planned. A robot whose re-plan leaves its route
/// unchanged (or fails) is not selected again within the round.
pub fn replan_round(
    graph: &GridGraph,
    states: &[RobotState],
    plans: &mut [Plan],
    frozen: &CellMask,
    planner: &mut dyn RobotPlanner,
    cfg: &PlannerConfig,
) -> Result<RoundOutcome> {
    if plans.len() != states.len() {
        return Err(Error::Config(format!("{} plans for {} robots", plans.len(), states.len())));
    }
    let m = states.len();
    let mut eligible: Vec<bool> = states.iter().map(|s| !s.done).collect();
    let mut changed = vec![false; m];
    let mut report = detect_all(plans, frozen, cfg);
    let mut opposite_replans = 0;
    let mut gamma_replans = 0;

    let mut replan = |i: usize, plans: &mut [Plan], eligible: &mut [bool], changed: &mut [bool]| -> Result<()> {
        let others: Vec<&Plan> = plans
            .iter()
            .filter(|p| p.robot != i && !states[p.robot].done)
            .collect();
        match planner.plan(graph, &states[i], &others, frozen, None) {
            Ok(p) if !p.same_route(&plans[i]) => {
                plans[i] = p;
                changed[i] = true;
            }
            Ok(_) | Err(Error::Unreachable { .. }) => eligible[i] = false,
            Err(e) => return Err(e),
        }
        Ok(())
    };

    let exit = 'round: loop {
        // Remove opposite conflicts first.
        while let Some(i) = report.argmax(&eligible, |i| report.tallies[i].opposite, 0) {
            if opposite_replans >= 4 * m {
                break 'round RoundExit::OppositeLimit;
            }
            opposite_replans += 1;
            replan(i, plans, &mut eligible, &mut changed)?;
            report = detect_all(plans, frozen, cfg);
        }
        // Then reduce γ; a re-plan that reopens an opposite conflict restarts the round loop.
        loop {
            if report.gamma <= cfg.phi {
                break 'round if report.opposite_count() == 0 {
                    RoundExit::Normal
                } else {
                    RoundExit::OppositeLimit
                };
            }
            let Some(i) = report.argmax(&eligible, |i| report.gammas[i], cfg.phi) else {
                break 'round RoundExit::GammaLimit;
            };
            if gamma_replans >= 2 * m {
                break 'round RoundExit::GammaLimit;
            }
            gamma_replans += 1;
            replan(i, plans, &mut eligible, &mut changed)?;
            report = detect_all(plans, frozen, cfg);
            let reopened = (0..m).any(|r| eligible[r] && report.tallies[r].opposite > 0);
            if reopened {
                continue 'round;
            }
        }
    };

    Ok(RoundOutcome {
        exit,
        replans: opposite_replans + gamma_replans,
        report,
        changed: (0..m).filter(|&i| changed[i]).collect(),
    })
}

/// Writes conflicts as `tick,kind,robot_i,robot_j,x,y,idx_i,idx_j` rows.
pub fn write_conflict_log<W: Write>(out: &mut W, tick: u64, report: &ConflictReport, header: bool) -> std::io::Result<()> {
    if header {
        writeln!(out, "tick,kind,robot_i,robot_j,x,y,idx_i,idx_j")?;
    }
    for c in &report.conflicts {
        writeln!(
            out,
            "{tick},{},{},{},{},{},{},{}",
            c.kind, c.robots.0, c.robots.1, c.cell.x, c.cell.y, c.indices.0, c.indices.1
        )?;
    }
    Ok(())
}
