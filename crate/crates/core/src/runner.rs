//! Closed-loop simulation of one algorithm on one scenario: plan, fill
//! queues, validate, step with sampled speeds, repeat until every robot
//! is parked on its goal or the tick cap is reached.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::castar::CaStar;
use crate::baselines::pbs::{Pbs, PbsStatus};
use crate::conflict::{detect_all, replan_round};
use crate::error::{Error, Result};
use crate::grid::{CellMask, GridGraph};
use crate::model::RobotState;
use crate::planner::{CostModel, PathPlanner, Plan, PlannerConfig, RobotPlanner};
use crate::scenario::Scenario;
use crate::scheduler::fill_queues;
use crate::sim::{step_world_with_speeds, validate_constraints, SpeedRegime, SpeedSampler, SpeedSampling, StepEvent};
use crate::trace::{TraceMeta, TraceSink};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Traffic-cost planner with conflict management.
    Pa,
    /// Same framework with the node-popularity cost.
    Adcc,
    CaStar,
    Pbs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Pa, Algorithm::Adcc, Algorithm::CaStar, Algorithm::Pbs];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Pa => "pa",
            Algorithm::Adcc => "adcc",
            Algorithm::CaStar => "castar",
            Algorithm::Pbs => "pbs",
        }
    }

    pub fn parse(s: &str) -> Result<Algorithm> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}` (expected pa, adcc, castar, pbs)")))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub planner: PlannerConfig,
    pub regime: SpeedRegime,
    pub sampling: SpeedSampling,
    /// Conflict-management cadence in ticks (`K`).
    pub replan_every: u64,
    /// Ticks a robot may sit with an empty queue before a detour re-plan.
    pub stall_ticks: u64,
    pub max_ticks: u64,
    /// Ticks without any head pop, turn or arrival before the run is
    /// declared deadlocked and scored as a timeout.
    pub deadlock_ticks: u64,
    pub pbs_node_cap: usize,
    pub keep_trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            planner: PlannerConfig::default(),
            regime: SpeedRegime::fixed(1.0).expect("valid"),
            sampling: SpeedSampling::PerTick,
            replan_every: 1,
            stall_ticks: 6,
            max_ticks: 10_000,
            deadlock_ticks: 1_000,
            pbs_node_cap: 10_000,
            keep_trace: false,
        }
    }
}

impl RunConfig {
    /// Sets one tunable by name, as used by config files and `--param`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::Config(format!("bad value `{value}` for `{key}`"));
        let f = || value.trim().parse::<f64>().map_err(|_| bad());
        let u = || value.trim().parse::<u64>().map_err(|_| bad());
        let p = &mut self.planner;
        match key.trim() {
            "zeta" => {
                let parts: Vec<f64> = value.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
                p.zeta = parts.try_into().map_err(|_| bad())?;
            }
            "sigma" => p.sigma = f()?,
            "c1" => p.c1 = f()?,
            "c2" => p.c2 = f()?,
            "c3" => p.c3 = f()?,
            "turn_wait" => p.turn_wait = u()? as u32,
            "queue_len" => p.queue_len = u()? as usize,
            "delta_fol" => p.delta_fol = f()?,
            "delta_cross" => p.delta_cross = f()?,
            "horizon" => p.horizon = u()? as usize,
            "phi" => p.phi = f()?,
            "m_cap" => p.m_cap = u()? as u32,
            "replan_every" => self.replan_every = u()?,
            "stall_ticks" => self.stall_ticks = u()?,
            "max_ticks" => self.max_ticks = u()?,
            "deadlock_ticks" => self.deadlock_ticks = u()?,
            "pbs_node_cap" => self.pbs_node_cap = u()? as usize,
            "sampling" => {
                self.sampling = match value.trim() {
                    "tick" => SpeedSampling::PerTick,
                    "edge" => SpeedSampling::PerEdge,
                    _ => return Err(bad()),
                }
            }
            other => return Err(Error::Config(format!("unknown parameter `{other}`"))),
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Completed,
    TickCap,
    Deadlock,
    NodeCap,
    Safety,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub makespan: Option<u64>,
    pub termination: Termination,
    pub ticks: u64,
    pub trace_hash: String,
    pub trace: Option<String>,
    pub violations: Vec<String>,
    pub rounds: u64,
    pub soft_failures: u64,
    /// Normal round exits whose plans, re-checked from scratch, still hold
    /// an opposite conflict or exceed the `γ` threshold. Always zero unless
    /// the round logic is broken.
    pub round_breaches: u64,
    pub replans: u64,
    pub diagnostics: Vec<String>,
}

impl RunReport {
    pub fn timed_out(&self) -> bool {
        self.makespan.is_none()
    }
}

/// Independent streams for speed draws and planner/scheduler decisions.
pub fn rng_streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut speed = ChaCha8Rng::seed_from_u64(seed);
    speed.set_stream(0);
    let mut decision = ChaCha8Rng::seed_from_u64(seed);
    decision.set_stream(1);
    (speed, decision)
}

enum Controller {
    Framework(PathPlanner),
    CaStar(CaStar),
    Pbs(Pbs),
}

struct Stats {
    rounds: u64,
    soft_failures: u64,
    round_breaches: u64,
    replans: u64,
    diagnostics: Vec<String>,
    node_cap: bool,
}

const MAX_DIAGNOSTICS: usize = 50;

impl Stats {
    fn note(&mut self, msg: String) {
        if self.diagnostics.len() < MAX_DIAGNOSTICS {
            self.diagnostics.push(msg);
        }
    }
}

fn others_of(plans: &[Plan], states: &[RobotState], id: usize) -> Vec<usize> {
    (0..plans.len()).filter(|&j| j != id && !states[j].done).collect()
}

fn replan_one(
    planner: &mut PathPlanner,
    graph: &GridGraph,
    states: &[RobotState],
    plans: &mut [Plan],
    frozen: &CellMask,
    id: usize,
    extra: Option<&CellMask>,
) -> Result<bool> {
    let idx = others_of(plans, states, id);
    let others: Vec<&Plan> = idx.iter().map(|&j| &plans[j]).collect();
    match planner.plan(graph, &states[id], &others, frozen, extra) {
        Ok(p) => {
            let changed = !p.same_route(&plans[id]);
            plans[id] = p;
            Ok(changed)
        }
        Err(Error::Unreachable { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

struct Tick<'a> {
    t: u64,
    graph: &'a GridGraph,
    states: &'a [RobotState],
    frozen: &'a CellMask,
    newly_frozen: &'a [usize],
    stalled: &'a [usize],
}

impl Controller {
    fn new(algo: Algorithm, graph: &GridGraph, cfg: &RunConfig) -> Self {
        match algo {
            Algorithm::Pa => Controller::Framework(PathPlanner::new(cfg.planner.clone(), CostModel::Traffic)),
            Algorithm::Adcc => Controller::Framework(PathPlanner::new(cfg.planner.clone(), CostModel::VisitCount)),
            Algorithm::CaStar => Controller::CaStar(CaStar::new(graph, cfg.planner.horizon)),
            Algorithm::Pbs => Controller::Pbs(Pbs::new(graph, cfg.planner.horizon, cfg.pbs_node_cap)),
        }
    }

    fn update(
        &mut self,
        tick: &Tick<'_>,
        plans: &mut Vec<Plan>,
        cfg: &RunConfig,
        rng: &mut ChaCha8Rng,
        stats: &mut Stats,
    ) -> Result<()> {
        let Tick {
            t,
            graph,
            states,
            frozen,
            newly_frozen,
            stalled,
        } = *tick;
        let blocked_by_frozen =
            |p: &Plan| !newly_frozen.is_empty() && p.steps.iter().skip(1).any(|s| frozen.contains(s.cell));
        match self {
            Controller::Framework(planner) => {
                if t == 0 {
                    for id in 0..states.len() {
                        if !states[id].done {
                            replan_one(planner, graph, states, plans, frozen, id, None)?;
                        }
                    }
                }
                for id in 0..states.len() {
                    if !states[id].done && blocked_by_frozen(&plans[id]) {
                        replan_one(planner, graph, states, plans, frozen, id, None)?;
                    }
                }
                if t % cfg.replan_every == 0 {
                    let out = replan_round(graph, states, plans, frozen, planner, &cfg.planner)?;
                    stats.rounds += 1;
                    stats.replans += out.replans as u64;
                    if out.is_soft_failure() {
                        stats.soft_failures += 1;
                    } else {
                        let check = detect_all(plans, frozen, &cfg.planner);
                        if check.opposite_count() > 0 || check.gamma > cfg.planner.phi {
                            stats.round_breaches += 1;
                        }
                    }
                }
                for &id in stalled {
                    let mut extra = CellMask::new(graph);
                    for s in states.iter().filter(|s| s.id != id) {
                        for &c in s.queue.cells() {
                            extra.insert(c);
                        }
                    }
                    replan_one(planner, graph, states, plans, frozen, id, Some(&extra))?;
                }
            }
            Controller::CaStar(_) | Controller::Pbs(_) => {
                let drift = states.iter().zip(plans.iter()).any(|(s, p)| {
                    !s.done
                        && match p.steps.get(1) {
                            Some(next) => next.eta.is_some_and(|eta| t >= eta),
                            None => s.position() != s.goal.cell,
                        }
                });
                let due = t == 0
                    || !stalled.is_empty()
                    || plans.iter().any(blocked_by_frozen)
                    || (drift && t % cfg.replan_every == 0);
                if !due {
                    return Ok(());
                }
                stats.replans += 1;
                match self {
                    Controller::CaStar(ca) => {
                        let out = ca.plan_all(graph, states, frozen, t, rng);
                        if !out.stuck.is_empty() {
                            stats.note(format!("t={t}: no space-time path for robots {:?}", out.stuck));
                        }
                        *plans = out.plans;
                    }
                    Controller::Pbs(pbs) => {
                        let out = pbs.plan_all(graph, states, frozen, t);
                        match out.status {
                            PbsStatus::Solved => {}
                            PbsStatus::Exhausted => stats.note(format!("t={t}: priority search exhausted")),
                            PbsStatus::NodeCap => {
                                stats.note(format!("t={t}: priority search hit {} nodes", out.nodes));
                                stats.node_cap = true;
                            }
                        }
                        *plans = out.plans;
                    }
                    Controller::Framework(_) => unreachable!(),
                }
            }
        }
        Ok(())
    }
}

/// Simulates `algo` on `scenario` with the given master seed.
pub fn run_simulation(scenario: &Scenario, algo: Algorithm, cfg: &RunConfig, seed: u64) -> Result<RunReport> {
    cfg.planner.validate()?;
    if cfg.replan_every == 0 {
        return Err(Error::Config("replan cadence must be at least one tick".into()));
    }
    let graph = &scenario.graph;
    let mut states = scenario.initial_states(cfg.planner.queue_len)?;
    let m = states.len();
    let (mut speed_rng, mut decision_rng) = rng_streams(seed);
    let mut sampler = SpeedSampler::new(cfg.regime, cfg.sampling, m);
    let mut controller = Controller::new(algo, graph, cfg);
    let mut plans: Vec<Plan> = states.iter().map(Plan::hold).collect();
    let mut frozen = CellMask::new(graph);
    let mut idle = vec![0u64; m];
    let mut quiet = 0u64;
    let mut stats = Stats {
        rounds: 0,
        soft_failures: 0,
        round_breaches: 0,
        replans: 0,
        diagnostics: Vec::new(),
        node_cap: false,
    };

    let meta = TraceMeta {
        width: graph.width(),
        height: graph.height(),
        seed,
        capacity: cfg.planner.queue_len,
        goals: scenario.robots.iter().map(|r| r.goal).collect(),
        blocked: graph.blocked_cells().collect(),
    };
    let mut sink = TraceSink::new(&meta, cfg.keep_trace);
    sink.record(0, &states);

    let mut t = 0u64;
    let (termination, violations) = loop {
        let mut newly_frozen = Vec::new();
        for s in states.iter_mut() {
            if !s.done && s.at_goal() {
                s.done = true;
            }
            if s.done && !frozen.contains(s.position()) {
                frozen.insert(s.position());
                newly_frozen.push(s.id);
            }
        }
        if !newly_frozen.is_empty() {
            quiet = 0;
        }
        if states.iter().all(|s| s.done) {
            break (Termination::Completed, Vec::new());
        }
        if t >= cfg.max_ticks {
            break (Termination::TickCap, Vec::new());
        }
        if quiet >= cfg.deadlock_ticks {
            stats.note(format!("t={t}: no progress for {quiet} ticks"));
            break (Termination::Deadlock, Vec::new());
        }

        let stalled: Vec<usize> = (0..m).filter(|&i| idle[i] >= cfg.stall_ticks).collect();
        for &i in &stalled {
            idle[i] = 0;
        }
        let tick = Tick {
            t,
            graph,
            states: &states,
            frozen: &frozen,
            newly_frozen: &newly_frozen,
            stalled: &stalled,
        };
        controller.update(&tick, &mut plans, cfg, &mut decision_rng, &mut stats)?;
        if stats.node_cap {
            break (Termination::NodeCap, Vec::new());
        }

        let actions = fill_queues(graph, &states, &plans, t, &mut decision_rng)?;
        let violations = validate_constraints(graph, &states, &actions);
        if !violations.is_empty() {
            break (Termination::Safety, violations.iter().map(|v| format!("t={t}: {v}")).collect());
        }
        let speeds = sampler.draw(&states, &mut speed_rng);
        let step = step_world_with_speeds(graph, &states, &actions, &speeds, cfg.planner.turn_wait)?;

        let mut progressed = false;
        for (i, events) in step.events.iter().enumerate() {
            let popped = events.contains(&StepEvent::PoppedHead);
            if popped {
                plans[i].advance(1);
            }
            if popped || events.contains(&StepEvent::TurnStarted) {
                progressed = true;
            }
            let s = &step.states[i];
            let waiting = !s.done && s.queue.effective_length() == 1 && s.wait == 0 && s.position() != s.goal.cell;
            idle[i] = if waiting { idle[i] + 1 } else { 0 };
        }
        quiet = if progressed { 0 } else { quiet + 1 };
        states = step.states;
        t += 1;
        sink.record(t, &states);
    };

    let (trace_hash, trace) = sink.finish();
    Ok(RunReport {
        makespan: (termination == Termination::Completed).then_some(t),
        termination,
        ticks: t,
        trace_hash,
        trace,
        violations,
        rounds: stats.rounds,
        soft_failures: stats.soft_failures,
        round_breaches: stats.round_breaches,
        replans: stats.replans,
        diagnostics: stats.diagnostics,
    })
}
