//! Grid world: cells, headings, and the 4-connected graph with self-loops.
//!
//! Coordinates are `(x, y)` with `x` growing rightward and `y` growing
//! downward, so heading 1 (`Δy = −1`) renders as "up".

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn step(self, dir: Direction) -> Cell {
        let (dx, dy) = dir.delta();
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Robot heading. The numeric codes 1..=4 follow the warehouse convention;
/// `Stay` is the self-loop direction and never a robot's heading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Right,
    Down,
    Left,
    Stay,
}

impl Direction {
    pub const MOVES: [Direction; 4] = [
        Direction::Up,
        Direction::Right,
        Direction::Down,
        Direction::Left,
    ];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (0, -1),
            Direction::Right => (1, 0),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
            Direction::Stay => (0, 0),
        }
    }

    /// Numeric code: 1 up, 2 right, 3 down, 4 left, 0 for `Stay`.
    pub fn code(self) -> u8 {
        match self {
            Direction::Up => 1,
            Direction::Right => 2,
            Direction::Down => 3,
            Direction::Left => 4,
            Direction::Stay => 0,
        }
    }

    pub fn from_code(code: u8) -> Option<Direction> {
        match code {
            0 => Some(Direction::Stay),
            1 => Some(Direction::Up),
            2 => Some(Direction::Right),
            3 => Some(Direction::Down),
            4 => Some(Direction::Left),
            _ => None,
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Right => Direction::Left,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Stay => Direction::Stay,
        }
    }

    pub fn is_moving(self) -> bool {
        self != Direction::Stay
    }

    pub fn is_perpendicular(self, other: Direction) -> bool {
        self.is_moving() && other.is_moving() && self != other && self != other.opposite()
    }

    /// Dense index in `0..4` for moving headings (`Stay` maps to 4).
    pub fn index(self) -> usize {
        match self {
            Direction::Up => 0,
            Direction::Right => 1,
            Direction::Down => 2,
            Direction::Left => 3,
            Direction::Stay => 4,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Heading of the move from `from` to `to`.
pub fn direction_between(from: Cell, to: Cell) -> Result<Direction> {
    match (to.x - from.x, to.y - from.y) {
        (0, 0) => Ok(Direction::Stay),
        (0, -1) => Ok(Direction::Up),
        (1, 0) => Ok(Direction::Right),
        (0, 1) => Ok(Direction::Down),
        (-1, 0) => Ok(Direction::Left),
        _ => Err(Error::NotAdjacent { a: from, b: to }),
    }
}

/// Directed grid graph. Every free cell has a self-loop and edges to its
/// free 4-neighbours; blocked cells have no edges at all.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridGraph {
    width: u32,
    height: u32,
    blocked: Vec<bool>,
}

impl GridGraph {
    pub fn open(width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        GridGraph {
            width,
            height,
            blocked: vec![false; (width * height) as usize],
        }
    }

    pub fn with_blocked(width: u32, height: u32, blocked: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let mut graph = GridGraph::open(width, height);
        for cell in blocked {
            if !graph.in_bounds(cell) {
                return Err(Error::InvalidCell(cell));
            }
            let idx = graph.index(cell);
            graph.blocked[idx] = true;
        }
        Ok(graph)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.blocked.len()
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.x >= 0 && cell.y >= 0 && (cell.x as u32) < self.width && (cell.y as u32) < self.height
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && !self.blocked[self.index(cell)]
    }

    pub fn set_blocked(&mut self, cell: Cell, blocked: bool) {
        let idx = self.index(cell);
        self.blocked[idx] = blocked;
    }

    /// Row-major index. Caller guarantees `cell` is in bounds.
    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        cell.y as usize * self.width as usize + cell.x as usize
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        let w = self.width as usize;
        Cell::new((index % w) as i32, (index / w) as i32)
    }

    /// `true` when `(a, b)` is an edge of the graph, self-loops included.
    pub fn is_edge(&self, a: Cell, b: Cell) -> bool {
        self.is_free(a) && self.is_free(b) && a.manhattan(b) <= 1
    }

    /// `v` itself plus every free in-bounds 4-neighbour.
    pub fn neighbors(&self, v: Cell) -> Result<Vec<Cell>> {
        if !self.is_free(v) {
            return Err(Error::InvalidCell(v));
        }
        let mut out = vec![v];
        out.extend(Direction::MOVES.iter().map(|&d| v.step(d)).filter(|&c| self.is_free(c)));
        Ok(out)
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.blocked.len())
            .filter(|&i| !self.blocked[i])
            .map(|i| self.cell_at(i))
    }

    pub fn blocked_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.blocked.len())
            .filter(|&i| self.blocked[i])
            .map(|i| self.cell_at(i))
    }

    /// Breadth-first hop distances to `target` over free cells, skipping
    /// any cell for which `extra_blocked` returns true. Unreachable cells
    /// get `u32::MAX`.
    pub fn distances_to(&self, target: Cell, extra_blocked: impl Fn(Cell) -> bool) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.cell_count()];
        if !self.is_free(target) || extra_blocked(target) {
            return dist;
        }
        let mut queue = std::collections::VecDeque::new();
        dist[self.index(target)] = 0;
        queue.push_back(target);
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c)];
            for dir in Direction::MOVES {
                let n = c.step(dir);
                if self.is_free(n) && !extra_blocked(n) {
                    let ni = self.index(n);
                    if dist[ni] == u32::MAX {
                        dist[ni] = d + 1;
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    /// Plain-text map: `"<width> <height>"` then one row per line with `.`
    /// for free and `@` for blocked.
    pub fn to_map_string(&self) -> String {
        let mut out = format!("{} {}\n", self.width, self.height);
        for y in 0..self.height as i32 {
            for x in 0..self.width as i32 {
                out.push(if self.is_free(Cell::new(x, y)) { '.' } else { '@' });
            }
            out.push('\n');
        }
        out
    }
}

impl FromStr for GridGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::MapParse {
            line: 1,
            message: "empty map".into(),
        })?;
        let dims: Vec<u32> = header
            .split_whitespace()
            .map(|t| t.parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::MapParse {
                line: 1,
                message: e.to_string(),
            })?;
        let [width, height] = dims[..] else {
            return Err(Error::MapParse {
                line: 1,
                message: "expected \"<width> <height>\"".into(),
            });
        };
        if width == 0 || height == 0 {
            return Err(Error::MapParse {
                line: 1,
                message: "dimensions must be positive".into(),
            });
        }
        let mut blocked = Vec::new();
        let mut rows = 0;
        for (i, raw) in lines {
            let row = raw.trim_end();
            if row.is_empty() && rows == height {
                continue;
            }
            if rows == height {
                return Err(Error::MapParse {
                    line: i + 1,
                    message: "more rows than declared height".into(),
                });
            }
            let chars: Vec<char> = row.chars().collect();
            if chars.len() != width as usize {
                return Err(Error::MapParse {
                    line: i + 1,
                    message: format!("expected {width} columns, found {}", chars.len()),
                });
            }
            for (x, ch) in chars.into_iter().enumerate() {
                match ch {
                    '.' => {}
                    '@' => blocked.push(Cell::new(x as i32, rows as i32)),
                    other => {
                        return Err(Error::MapParse {
                            line: i + 1,
                            message: format!("unexpected character {other:?}"),
                        })
                    }
                }
            }
            rows += 1;
        }
        if rows != height {
            return Err(Error::MapParse {
                line: rows as usize + 2,
                message: format!("expected {height} rows, found {rows}"),
            });
        }
        GridGraph::with_blocked(width, height, blocked)
    }
}

/// Dense set of cells over one grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellMask {
    width: u32,
    bits: Vec<bool>,
}

impl CellMask {
    pub fn new(graph: &GridGraph) -> Self {
        CellMask {
            width: graph.width,
            bits: vec![false; graph.cell_count()],
        }
    }

    pub fn from_cells(graph: &GridGraph, cells: impl IntoIterator<Item = Cell>) -> Self {
        let mut mask = CellMask::new(graph);
        for c in cells {
            mask.insert(c);
        }
        mask
    }

    #[inline]
    fn slot(&self, cell: Cell) -> Option<usize> {
        let h = self.bits.len() as u32 / self.width.max(1);
        if cell.x < 0 || cell.y < 0 || cell.x as u32 >= self.width || cell.y as u32 >= h {
            return None;
        }
        Some(cell.y as usize * self.width as usize + cell.x as usize)
    }

    pub fn insert(&mut self, cell: Cell) {
        if let Some(i) = self.slot(cell) {
            self.bits[i] = true;
        }
    }

    pub fn remove(&mut self, cell: Cell) {
        if let Some(i) = self.slot(cell) {
            self.bits[i] = false;
        }
    }

    #[inline]
    pub fn contains(&self, cell: Cell) -> bool {
        self.slot(cell).is_some_and(|i| self.bits[i])
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_codes_follow_coordinate_rules() {
        assert_eq!(direction_between(Cell::new(2, 5), Cell::new(2, 4)).unwrap().code(), 1);
        assert_eq!(direction_between(Cell::new(2, 5), Cell::new(3, 5)).unwrap().code(), 2);
        assert_eq!(direction_between(Cell::new(2, 5), Cell::new(2, 6)).unwrap().code(), 3);
        assert_eq!(direction_between(Cell::new(2, 5), Cell::new(1, 5)).unwrap().code(), 4);
        assert_eq!(direction_between(Cell::new(2, 5), Cell::new(2, 5)).unwrap(), Direction::Stay);
    }

    #[test]
    fn direction_between_rejects_non_adjacent() {
        assert!(matches!(
            direction_between(Cell::new(0, 0), Cell::new(1, 1)),
            Err(Error::NotAdjacent { .. })
        ));
        assert!(direction_between(Cell::new(0, 0), Cell::new(0, 2)).is_err());
    }

    #[test]
    fn neighbors_interior_corner_and_isolated() {
        let g = GridGraph::open(5, 5);
        assert_eq!(g.neighbors(Cell::new(2, 2)).unwrap().len(), 5);
        assert_eq!(g.neighbors(Cell::new(0, 0)).unwrap().len(), 3);

        let walls = [Cell::new(1, 2), Cell::new(3, 2), Cell::new(2, 1), Cell::new(2, 3)];
        let g = GridGraph::with_blocked(5, 5, walls).unwrap();
        assert_eq!(g.neighbors(Cell::new(2, 2)).unwrap(), vec![Cell::new(2, 2)]);
    }

    #[test]
    fn neighbors_rejects_blocked_and_outside() {
        let g = GridGraph::with_blocked(3, 3, [Cell::new(1, 1)]).unwrap();
        assert!(g.neighbors(Cell::new(1, 1)).is_err());
        assert!(g.neighbors(Cell::new(3, 0)).is_err());
        assert!(g.neighbors(Cell::new(-1, 0)).is_err());
    }

    #[test]
    fn edges_include_self_loops_but_not_blocked_cells() {
        let g = GridGraph::with_blocked(3, 1, [Cell::new(2, 0)]).unwrap();
        assert!(g.is_edge(Cell::new(0, 0), Cell::new(0, 0)));
        assert!(g.is_edge(Cell::new(0, 0), Cell::new(1, 0)));
        assert!(!g.is_edge(Cell::new(1, 0), Cell::new(2, 0)));
        assert!(!g.is_edge(Cell::new(2, 0), Cell::new(2, 0)));
    }

    #[test]
    fn map_text_round_trip() {
        let text = "4 3\n..@.\n....\n@...\n";
        let g: GridGraph = text.parse().unwrap();
        assert_eq!(g.width(), 4);
        assert!(!g.is_free(Cell::new(2, 0)));
        assert!(!g.is_free(Cell::new(0, 2)));
        assert_eq!(g.to_map_string(), text);
    }

    #[test]
    fn map_parse_errors() {
        assert!("".parse::<GridGraph>().is_err());
        assert!("3 2\n...\n".parse::<GridGraph>().is_err());
        assert!("3 1\n.x.\n".parse::<GridGraph>().is_err());
        assert!("3 1\n....\n".parse::<GridGraph>().is_err());
    }

    #[test]
    fn bfs_distances() {
        let g = GridGraph::with_blocked(3, 3, [Cell::new(1, 0), Cell::new(1, 1)]).unwrap();
        let d = g.distances_to(Cell::new(0, 0), |_| false);
        assert_eq!(d[g.index(Cell::new(2, 0))], 6);
        assert_eq!(d[g.index(Cell::new(1, 0))], u32::MAX);
    }
}
