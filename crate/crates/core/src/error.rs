use std::path::PathBuf;

use thiserror::Error;

use crate::grid::Cell;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cells {a} and {b} are neither equal nor adjacent")]
    NotAdjacent { a: Cell, b: Cell },

    #[error("cell {0} is blocked or outside the grid")]
    InvalidCell(Cell),

    #[error("malformed preserved queue: {0}")]
    Queue(String),

    #[error("first-turn count {f} outside 1..={n}")]
    SpeedArgument { f: usize, n: usize },

    #[error("{rule} rule violated by robot {robot}: {detail}")]
    Constraint {
        rule: crate::sim::Rule,
        robot: usize,
        detail: String,
    },

    #[error("robots {a} and {b} both hold cell {cell}")]
    Collision { a: usize, b: usize, cell: Cell },

    #[error("no path for robot {robot} from {from} to {to}")]
    Unreachable { robot: usize, from: Cell, to: Cell },

    #[error("plan of robot {robot} does not continue its preserved queue")]
    Desync { robot: usize },

    #[error("map parse error at line {line}: {message}")]
    MapParse { line: usize, message: String },

    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: usize, message: String },

    #[error("scenario generation failed: {0}")]
    Generation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("safety violation during run: {0}")]
    Safety(String),

    #[error("{0}")]
    Csv(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
