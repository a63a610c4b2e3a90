use std::fmt;

use thiserror::Error;

/// A syntax error in one of the text formats, with an optional source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn msg(message: impl Into<String>) -> Self {
        ParseError { line: 0, col: 0, message: message.into() }
    }

    pub fn at(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into() }
    }

    /// Attaches a position unless one is already known.
    pub fn or_at(mut self, line: usize, col: usize) -> Self {
        if self.line == 0 {
            self.line = line;
            self.col = col;
        }
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "{}:{}: {}", self.line, self.col, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

impl std::error::Error for ParseError {}

/// Top-level error for pipeline commands.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error(transparent)]
    Eval(#[from] crate::formula::EvalError),
    #[error(transparent)]
    Formula(#[from] crate::formula::FormulaError),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error(transparent)]
    Machine(#[from] crate::machine::MachineError),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
    #[error(transparent)]
    Emit(#[from] crate::emit::EmitError),
    #[error(transparent)]
    Sim(#[from] crate::netsim::SimError),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl Error {
    pub fn parse(path: impl Into<String>, source: ParseError) -> Self {
        Error::Parse { path: path.into(), source }
    }
}
