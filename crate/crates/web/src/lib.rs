//! Browser bindings: run a seeded simulation and scrub through its frames,
//! preview a single planned path, and sample the traffic-cost curve.
//!
//! Every binding wraps a plain Rust method so the logic is testable off the
//! browser.

use wasm_bindgen::prelude::*;
use warehouse_mapf::conflict::ConflictKind;
use warehouse_mapf::planner::{traffic_cost, ConflictDistances, CostModel, PathPlanner, RobotPlanner};
use warehouse_mapf::scenario::generate_scenario;
use warehouse_mapf::trace::Trace;
use warehouse_mapf::{
    run_simulation, Algorithm, Cell, CellMask, Direction, Error, GridGraph, PlannerConfig, Pose, RobotState, RunConfig,
    SpeedRegime,
};

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// A finished run held in memory with a cursor over its frames.
#[wasm_bindgen]
pub struct Demo {
    graph: GridGraph,
    trace: Trace,
    cursor: usize,
    makespan: Option<u64>,
}

impl Demo {
    /// Generates an open-grid instance and runs `algo` on it to completion.
    pub fn build(width: u32, height: u32, robots: usize, algo: &str, regime: &str, seed: u64) -> Result<Demo, Error> {
        let scenario = generate_scenario(width, height, robots, 0.0, seed)?;
        let cfg = RunConfig {
            regime: SpeedRegime::parse(regime)?,
            keep_trace: true,
            ..RunConfig::default()
        };
        let report = run_simulation(&scenario, Algorithm::parse(algo)?, &cfg, seed)?;
        let trace: Trace = report.trace.as_deref().unwrap_or_default().parse()?;
        Ok(Demo {
            graph: scenario.graph,
            trace,
            cursor: 0,
            makespan: report.makespan,
        })
    }

    /// Shortest-cost path for a lone robot on this demo's map, as cells.
    pub fn preview(&self, start: Pose, goal: Pose) -> Result<Vec<Cell>, Error> {
        let cfg = PlannerConfig::default();
        let robot = RobotState::initial(0, start, goal, cfg.queue_len, &self.graph)?;
        let mut planner = PathPlanner::new(cfg, CostModel::Traffic);
        let plan = planner.plan(&self.graph, &robot, &[], &CellMask::new(&self.graph), None)?;
        Ok(plan.cells().collect())
    }
}

fn direction(code: u8) -> Result<Direction, JsError> {
    Direction::from_code(code)
        .filter(|d| d.is_moving())
        .ok_or_else(|| js(format!("heading code {code} is not 1-4")))
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(width: u32, height: u32, robots: usize, algo: &str, regime: &str, seed: u64) -> Result<Demo, JsError> {
        Demo::build(width, height, robots, algo, regime, seed).map_err(js)
    }

    pub fn width(&self) -> u32 {
        self.graph.width()
    }

    pub fn height(&self) -> u32 {
        self.graph.height()
    }

    /// Blocked cells as flat `[x0, y0, x1, y1, ...]`.
    pub fn blocked(&self) -> Vec<i32> {
        self.graph.blocked_cells().flat_map(|c| [c.x, c.y]).collect()
    }

    /// Goal poses as flat `[x, y, heading]` triples in robot order.
    pub fn goals(&self) -> Vec<i32> {
        self.trace
            .meta
            .goals
            .iter()
            .flat_map(|g| [g.cell.x, g.cell.y, i32::from(g.dir.code())])
            .collect()
    }

    /// Completion tick, or -1 when the run timed out.
    pub fn makespan(&self) -> i64 {
        self.makespan.map_or(-1, |t| t as i64)
    }

    pub fn frame_count(&self) -> usize {
        self.trace.frames.len()
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Moves the cursor by `delta` frames, clamped; returns the tick shown.
    pub fn step(&mut self, delta: i32) -> u64 {
        let last = self.trace.frames.len().saturating_sub(1) as i64;
        self.cursor = (self.cursor as i64 + i64::from(delta)).clamp(0, last) as usize;
        self.tick()
    }

    pub fn seek(&mut self, frame: usize) -> u64 {
        self.cursor = frame.min(self.trace.frames.len().saturating_sub(1));
        self.tick()
    }

    pub fn tick(&self) -> u64 {
        self.trace.frames.get(self.cursor).map_or(0, |f| f.t)
    }

    /// Robots at the cursor as flat `[x, y, heading, queued]` quadruples.
    pub fn positions(&self) -> Vec<i32> {
        self.trace
            .frames
            .get(self.cursor)
            .map(|f| {
                f.robots
                    .iter()
                    .flat_map(|r| [r.cell.x, r.cell.y, i32::from(r.dir.code()), r.queue.len() as i32])
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Planned cells from one pose to another as flat `[x, y, ...]`.
    #[wasm_bindgen(js_name = planPreview)]
    pub fn plan_preview(&self, sx: i32, sy: i32, sdir: u8, gx: i32, gy: i32, gdir: u8) -> Result<Vec<i32>, JsError> {
        let start = Pose::new(Cell::new(sx, sy), direction(sdir)?);
        let goal = Pose::new(Cell::new(gx, gy), direction(gdir)?);
        let cells = self.preview(start, goal).map_err(js)?;
        Ok(cells.into_iter().flat_map(|c| [c.x, c.y]).collect())
    }
}

/// Traffic cost at path indices `0..samples` with `count` conflicts of one
/// kind all located at index `d`, under default planner settings.
#[wasm_bindgen(js_name = trafficCurve)]
pub fn traffic_curve(kind: &str, d: f64, count: u32, samples: u32) -> Result<Vec<f64>, JsError> {
    let kind = match kind {
        "opposite" => ConflictKind::Opposite,
        "following" => ConflictKind::Following,
        "crossing" => ConflictKind::Crossing,
        other => return Err(js(format!("unknown conflict kind `{other}`"))),
    };
    Ok(curve(kind, d, count, samples))
}

/// Native half of [`traffic_curve`].
pub fn curve(kind: ConflictKind, d: f64, count: u32, samples: u32) -> Vec<f64> {
    let cfg = PlannerConfig::default();
    let mut conflicts = ConflictDistances::default();
    for _ in 0..count {
        conflicts.push(kind, d);
    }
    (0..samples).map(|s| traffic_cost(f64::from(s), &conflicts, false, &cfg)).collect()
}
