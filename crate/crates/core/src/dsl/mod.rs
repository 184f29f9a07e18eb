//! Line-oriented protocol scripts.
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! params rb85 delta_over_omega_r=1e4
//! cavity c plus
//! atom a1 g P0
//! bragg a1 c auto
//! pulse a1 P-2 pi -pi/2 minus
//! aux x c auto e
//! measure a1 int enumerate
//! expect entropy a1 0 1e-9
//! ```
//!
//! Parsing checks that every id is declared before use. Running is fully
//! deterministic: selective steps either post-select a named outcome or
//! enumerate all of them into an outcome table.

mod ast;
mod parser;
mod runner;
mod sweep;

pub use ast::*;
pub use parser::{parse_angle, parse_script};
pub use runner::{
    run, script_hash, ExpectResult, OracleRecord, OutcomeRow, OutcomeTable, RunOptions, RunReport,
    Selection,
};
pub use sweep::{substitute, sweep, sweep_csv_header, to_csv, SweepRow};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct RunError {
    /// `None` for failures before the first statement, e.g. a missing preset.
    pub line: Option<usize>,
    pub statement: String,
    pub message: String,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line} `{}`: {}", self.statement, self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SweepError {
    #[error("empty grid")]
    EmptyGrid,
    #[error("variable ${{{0}}} does not appear in the template")]
    MissingVariable(String),
    #[error("grid point {value:?}: {source}")]
    Parse { value: String, source: ParseError },
    #[error("grid point {value:?}: {source}")]
    Run { value: String, source: RunError },
}
