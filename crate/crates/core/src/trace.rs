//! Per-tick state traces: a line-oriented text format, streaming SHA-256
//! hashing, parsing, offline validation and ASCII replay.
//!
//! ```text
//! # width=W
//! # height=H
//! # seed=S
//! # N=4
//! # goals=x:y:d;x:y:d
//! # blocked=x:y;x:y
//! t,robot,x,y,dir,phase,wait,queue
//! 0,0,3,4,2,0,0,3:4;4:4
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Cell, Direction, GridGraph};
use crate::model::{Pose, RobotState};

pub const HEADER: &str = "t,robot,x,y,dir,phase,wait,queue";

#[derive(Clone, Debug, PartialEq)]
pub struct TraceMeta {
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub capacity: usize,
    pub goals: Vec<Pose>,
    pub blocked: Vec<Cell>,
}

/// Streams trace lines into a hash and, optionally, a text buffer.
pub struct TraceSink {
    hasher: Sha256,
    text: Option<String>,
    line: String,
}

impl TraceSink {
    pub fn new(meta: &TraceMeta, keep_text: bool) -> Self {
        let mut sink = TraceSink {
            hasher: Sha256::new(),
            text: keep_text.then(String::new),
            line: String::new(),
        };
        let goals: Vec<String> = meta
            .goals
            .iter()
            .map(|p| format!("{}:{}:{}", p.cell.x, p.cell.y, p.dir.code()))
            .collect();
        let blocked: Vec<String> = meta.blocked.iter().map(|c| format!("{}:{}", c.x, c.y)).collect();
        for l in [
            format!("# width={}", meta.width),
            format!("# height={}", meta.height),
            format!("# seed={}", meta.seed),
            format!("# N={}", meta.capacity),
            format!("# goals={}", goals.join(";")),
            format!("# blocked={}", blocked.join(";")),
            HEADER.to_string(),
        ] {
            sink.push_line(&l);
        }
        sink
    }

    fn push_line(&mut self, line: &str) {
        self.hasher.update(line.as_bytes());
        self.hasher.update(b"\n");
        if let Some(t) = &mut self.text {
            t.push_str(line);
            t.push('\n');
        }
    }

    /// One row per robot for tick `t`.
    pub fn record(&mut self, t: u64, states: &[RobotState]) {
        let mut line = std::mem::take(&mut self.line);
        for s in states {
            line.clear();
            let head = s.position();
            let _ = write!(
                line,
                "{t},{},{},{},{},{},{},",
                s.id,
                head.x,
                head.y,
                s.direction.code(),
                s.phase,
                s.wait
            );
            for (i, c) in s.queue.cells().iter().enumerate() {
                if i > 0 {
                    line.push(';');
                }
                let _ = write!(line, "{}:{}", c.x, c.y);
            }
            self.push_line(&line);
        }
        self.line = line;
    }

    /// Hex digest and the text, if it was kept.
    pub fn finish(self) -> (String, Option<String>) {
        let digest = self.hasher.finalize();
        let hex = digest.iter().map(|b| format!("{b:02x}")).collect();
        (hex, self.text)
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotRow {
    pub robot: usize,
    pub cell: Cell,
    pub dir: Direction,
    pub phase: f64,
    pub wait: u32,
    pub queue: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: u64,
    pub robots: Vec<RobotRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub frames: Vec<Frame>,
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::TraceParse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| perr(line, format!("bad {what} `{s}`")))
}

fn parse_cell(s: &str, line: usize) -> Result<Cell> {
    let mut it = s.split(':');
    match (it.next(), it.next(), it.next()) {
        (Some(x), Some(y), None) => Ok(Cell::new(parse_num(x, line, "x")?, parse_num(y, line, "y")?)),
        _ => Err(perr(line, format!("bad cell `{s}`"))),
    }
}

fn parse_dir(s: &str, line: usize) -> Result<Direction> {
    let code: u8 = parse_num(s, line, "direction")?;
    Direction::from_code(code).ok_or_else(|| perr(line, format!("bad direction {code}")))
}

impl FromStr for Trace {
    type Err = Error;

    fn from_str(text: &str) -> Result<Trace> {
        let mut width = None;
        let mut height = None;
        let mut seed = 0;
        let mut capacity = None;
        let mut goals = Vec::new();
        let mut blocked = Vec::new();
        let mut frames: Vec<Frame> = Vec::new();
        let mut seen_header = false;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let (key, value) = meta
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| perr(ln, "metadata needs key=value"))?;
                match key.trim() {
                    "width" => width = Some(parse_num(value, ln, "width")?),
                    "height" => height = Some(parse_num(value, ln, "height")?),
                    "seed" => seed = parse_num(value, ln, "seed")?,
                    "N" => capacity = Some(parse_num(value, ln, "N")?),
                    "goals" => {
                        for g in value.split(';').filter(|s| !s.is_empty()) {
                            let parts: Vec<&str> = g.split(':').collect();
                            if parts.len() != 3 {
                                return Err(perr(ln, format!("bad goal `{g}`")));
                            }
                            let cell = Cell::new(parse_num(parts[0], ln, "x")?, parse_num(parts[1], ln, "y")?);
                            goals.push(Pose::new(cell, parse_dir(parts[2], ln)?));
                        }
                    }
                    "blocked" => {
                        for c in value.split(';').filter(|s| !s.is_empty()) {
                            blocked.push(parse_cell(c, ln)?);
                        }
                    }
                    _ => {}
                }
                continue;
            }
            if !seen_header {
                if line != HEADER {
                    return Err(perr(ln, "missing column header"));
                }
                seen_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(perr(ln, format!("expected 8 fields, found {}", f.len())));
            }
            let t: u64 = parse_num(f[0], ln, "tick")?;
            let queue = f[7]
                .split(';')
                .map(|c| parse_cell(c, ln))
                .collect::<Result<Vec<Cell>>>()?;
            let row = RobotRow {
                robot: parse_num(f[1], ln, "robot")?,
                cell: Cell::new(parse_num(f[2], ln, "x")?, parse_num(f[3], ln, "y")?),
                dir: parse_dir(f[4], ln)?,
                phase: parse_num(f[5], ln, "phase")?,
                wait: parse_num(f[6], ln, "wait")?,
                queue,
            };
            match frames.last_mut() {
                Some(fr) if fr.t == t => fr.robots.push(row),
                Some(fr) if fr.t > t => return Err(perr(ln, "ticks go backwards")),
                _ => frames.push(Frame { t, robots: vec![row] }),
            }
        }
        let meta = TraceMeta {
            width: width.ok_or_else(|| perr(0, "missing width"))?,
            height: height.ok_or_else(|| perr(0, "missing height"))?,
            seed,
            capacity: capacity.ok_or_else(|| perr(0, "missing N"))?,
            goals,
            blocked,
        };
        Ok(Trace { meta, frames })
    }
}

impl Trace {
    pub fn graph(&self) -> Result<GridGraph> {
        GridGraph::with_blocked(self.meta.width, self.meta.height, self.meta.blocked.iter().copied())
    }

    /// Tick at which every robot stands on its goal with the goal heading
    /// and nothing pending, if the trace gets there.
    pub fn makespan(&self) -> Option<u64> {
        self.frames
            .iter()
            .find(|f| {
                f.robots.len() == self.meta.goals.len()
                    && f.robots.iter().all(|r| {
                        let g = self.meta.goals[r.robot];
                        r.queue.len() == 1 && r.cell == g.cell && r.dir == g.dir && r.phase == 0.0 && r.wait == 0
                    })
            })
            .map(|f| f.t)
    }
}

/// Offline check of every frame: queue well-formedness, exclusive cells,
/// and queue continuity between consecutive frames.
pub fn validate_trace(trace: &Trace, graph: &GridGraph) -> Vec<String> {
    let mut out = Vec::new();
    let n = trace.meta.capacity;
    let mut prev: Option<&Frame> = None;
    for frame in &trace.frames {
        let mut owner = vec![usize::MAX; graph.cell_count()];
        for r in &frame.robots {
            let q = &r.queue;
            let tag = format!("t={} robot {}", frame.t, r.robot);
            if q.is_empty() || q.len() > n {
                out.push(format!("{tag}: queue length {} outside 1..={n}", q.len()));
                continue;
            }
            if q[0] != r.cell {
                out.push(format!("{tag}: position {} is not the queue head", r.cell));
            }
            for (i, &c) in q.iter().enumerate() {
                if !graph.is_free(c) {
                    out.push(format!("{tag}: queue cell {c} is blocked"));
                    continue;
                }
                if q[..i].contains(&c) {
                    out.push(format!("{tag}: queue revisits {c}"));
                }
                let o = &mut owner[graph.index(c)];
                if *o != usize::MAX && *o != r.robot {
                    out.push(format!("{tag}: cell {c} also held by robot {o}"));
                }
                *o = r.robot;
            }
            for w in q.windows(2) {
                if !graph.is_edge(w[0], w[1]) {
                    out.push(format!("{tag}: {} -> {} is not an edge", w[0], w[1]));
                }
            }
            if let Some(p) = prev.and_then(|p| p.robots.iter().find(|x| x.robot == r.robot)) {
                let popped = q.starts_with(&p.queue[1..]) && (p.queue.len() > 1 || graph.is_edge(p.queue[0], q[0]) && q[0] != p.queue[0]);
                let kept = q.starts_with(&p.queue) || popped;
                if !kept {
                    out.push(format!("{tag}: queue does not continue the previous one"));
                }
            }
        }
        prev = Some(frame);
    }
    out
}

/// Text picture of one frame: `#` blocked, `.` free, robot ids mod 36 on
/// heads, `+` on reserved cells, `*` on unoccupied goals.
pub fn render_frame(trace: &Trace, graph: &GridGraph, frame: &Frame) -> String {
    let w = trace.meta.width as usize;
    let h = trace.meta.height as usize;
    let mut grid = vec![vec!['.'; w]; h];
    for c in graph.blocked_cells() {
        grid[c.y as usize][c.x as usize] = '#';
    }
    for g in &trace.meta.goals {
        grid[g.cell.y as usize][g.cell.x as usize] = '*';
    }
    for r in &frame.robots {
        for c in &r.queue[1..] {
            grid[c.y as usize][c.x as usize] = '+';
        }
    }
    for r in &frame.robots {
        let ch = std::char::from_digit((r.robot % 36) as u32, 36).unwrap_or('?');
        grid[r.cell.y as usize][r.cell.x as usize] = ch;
    }
    let mut s = format!("t={}\n", frame.t);
    for row in grid {
        s.extend(row);
        s.push('\n');
    }
    s
}
