//! Seeded benchmark instances: map layouts and start/goal placement.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Cell, CellMask, Direction, GridGraph};
use crate::model::{Pose, RobotState};

const MAX_ATTEMPTS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RobotSpec {
    pub id: usize,
    pub start: Pose,
    pub goal: Pose,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub graph: GridGraph,
    pub robots: Vec<RobotSpec>,
    pub seed: u64,
}

impl Scenario {
    pub fn initial_states(&self, capacity: usize) -> Result<Vec<RobotState>> {
        self.robots
            .iter()
            .map(|r| RobotState::initial(r.id, r.start, r.goal, capacity, &self.graph))
            .collect()
    }

    /// Distinct starts, distinct goals, all on free cells, and every goal
    /// reachable from its start with the other goals blocked.
    pub fn check(&self) -> Result<()> {
        let g = &self.graph;
        let mut starts = CellMask::new(g);
        let mut goals = CellMask::new(g);
        for r in &self.robots {
            for p in [r.start, r.goal] {
                if !g.is_free(p.cell) {
                    return Err(Error::InvalidCell(p.cell));
                }
                if !p.dir.is_moving() {
                    return Err(Error::Generation(format!("robot {} has no heading", r.id)));
                }
            }
            if starts.contains(r.start.cell) || goals.contains(r.goal.cell) {
                return Err(Error::Generation(format!("robot {} shares a start or goal", r.id)));
            }
            starts.insert(r.start.cell);
            goals.insert(r.goal.cell);
        }
        for r in &self.robots {
            if !reachable(g, r, &goals) {
                return Err(Error::Generation(format!(
                    "robot {} cannot reach {} from {}",
                    r.id, r.goal.cell, r.start.cell
                )));
            }
        }
        Ok(())
    }
}

fn reachable(graph: &GridGraph, robot: &RobotSpec, goals: &CellMask) -> bool {
    let goal = robot.goal.cell;
    let dist = graph.distances_to(goal, |c| c != goal && c != robot.start.cell && goals.contains(c));
    dist[graph.index(robot.start.cell)] != u32::MAX
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Layout {
    /// Obstacles scattered uniformly with the given density.
    #[default]
    Open,
    /// 2-wide, 4-tall shelf blocks on a regular lattice with one-cell aisles.
    Shelves,
}

impl Layout {
    pub fn parse(s: &str) -> Result<Layout> {
        match s {
            "open" => Ok(Layout::Open),
            "shelves" => Ok(Layout::Shelves),
            other => Err(Error::Config(format!("unknown layout `{other}`"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Layout::Open => "open",
            Layout::Shelves => "shelves",
        }
    }
}

/// Shelf lattice: blocks start two cells in from the border and repeat
/// every 3 columns and 5 rows.
pub fn shelf_map(width: u32, height: u32) -> GridGraph {
    let mut blocked = Vec::new();
    let (w, h) = (width as i32, height as i32);
    let mut y0 = 2;
    while y0 + 4 <= h - 2 {
        let mut x0 = 2;
        while x0 + 2 <= w - 2 {
            for dy in 0..4 {
                for dx in 0..2 {
                    blocked.push(Cell::new(x0 + dx, y0 + dy));
                }
            }
            x0 += 3;
        }
        y0 += 5;
    }
    GridGraph::with_blocked(width, height, blocked).expect("lattice lies inside the grid")
}

fn scatter_map<R: Rng>(width: u32, height: u32, density: f64, rng: &mut R) -> GridGraph {
    let mut g = GridGraph::open(width, height);
    let total = g.cell_count();
    let count = (density * total as f64).round() as usize;
    let mut cells: Vec<Cell> = g.free_cells().collect();
    cells.shuffle(rng);
    for &c in cells.iter().take(count) {
        g.set_blocked(c, true);
    }
    g
}

fn random_heading<R: Rng>(rng: &mut R) -> Direction {
    Direction::MOVES[rng.gen_range(0..4)]
}

/// Places `robot_count` robots on `graph`: starts first, then goals, all
/// distinct, resampling until every goal is reachable.
pub fn place_robots(graph: &GridGraph, robot_count: usize, seed: u64) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<Cell> = graph.free_cells().collect();
    if free.len() < 2 * robot_count {
        return Err(Error::Generation(format!(
            "{} free cells cannot host {robot_count} distinct starts and goals",
            free.len()
        )));
    }
    for _ in 0..MAX_ATTEMPTS {
        let picked: Vec<Cell> = free.choose_multiple(&mut rng, 2 * robot_count).copied().collect();
        let robots: Vec<RobotSpec> = (0..robot_count)
            .map(|id| RobotSpec {
                id,
                start: Pose::new(picked[id], random_heading(&mut rng)),
                goal: Pose::new(picked[robot_count + id], random_heading(&mut rng)),
            })
            .collect();
        let scenario = Scenario {
            graph: graph.clone(),
            robots,
            seed,
        };
        if scenario.check().is_ok() {
            return Ok(scenario);
        }
    }
    Err(Error::Generation(format!("no connected placement after {MAX_ATTEMPTS} attempts")))
}

/// Open grid with scattered obstacles plus robot placement.
pub fn generate_scenario(width: u32, height: u32, robot_count: usize, obstacle_density: f64, seed: u64) -> Result<Scenario> {
    generate_with_layout(width, height, robot_count, Layout::Open, obstacle_density, seed)
}

pub fn generate_with_layout(
    width: u32,
    height: u32,
    robot_count: usize,
    layout: Layout,
    obstacle_density: f64,
    seed: u64,
) -> Result<Scenario> {
    if !(0.0..1.0).contains(&obstacle_density) {
        return Err(Error::Config(format!("obstacle density {obstacle_density} outside [0, 1)")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Config("grid must be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..MAX_ATTEMPTS as u64 {
        let graph = match layout {
            Layout::Open => scatter_map(width, height, obstacle_density, &mut rng),
            Layout::Shelves => shelf_map(width, height),
        };
        match place_robots(&graph, robot_count, seed.wrapping_add(attempt)) {
            Ok(mut s) => {
                s.seed = seed;
                return Ok(s);
            }
            Err(e) if layout == Layout::Shelves || obstacle_density == 0.0 => return Err(e),
            Err(_) => continue,
        }
    }
    Err(Error::Generation(format!("no valid map after {MAX_ATTEMPTS} attempts")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_instance_has_distinct_starts_and_goals() {
        let s = generate_scenario(30, 30, 80, 0.0, 7).unwrap();
        assert_eq!(s.robots.len(), 80);
        s.check().unwrap();
    }

    #[test]
    fn zero_robots_is_empty() {
        let s = generate_scenario(5, 5, 0, 0.0, 1).unwrap();
        assert!(s.robots.is_empty());
    }

    #[test]
    fn same_seed_same_scenario() {
        let a = generate_scenario(12, 9, 10, 0.1, 99).unwrap();
        let b = generate_scenario(12, 9, 10, 0.1, 99).unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(12, 9, 10, 0.1, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_many_robots_is_an_error() {
        assert!(matches!(generate_scenario(3, 3, 5, 0.0, 0), Err(Error::Generation(_))));
    }

    #[test]
    fn shelf_layout_is_connected() {
        let g = shelf_map(30, 30);
        assert!(g.blocked_cells().count() > 0);
        let free: Vec<Cell> = g.free_cells().collect();
        let d = g.distances_to(free[0], |_| false);
        assert!(free.iter().all(|&c| d[g.index(c)] != u32::MAX));
        generate_with_layout(30, 30, 40, Layout::Shelves, 0.0, 3).unwrap().check().unwrap();
    }
}
