//! λ-SFA: deterministic symbolic automata whose transitions may capture a snapshot.

pub mod dsl;
pub mod product;
pub mod run;

use thiserror::Error;

use crate::formula::{EvalError, Formula, FormulaError};
use crate::oracle::{OracleError, SatOracle};

pub use dsl::{parse_machine, to_dsl};
pub use product::{product, product_with_pruned, report};
pub use run::{bindings, environments, environments_from_initial, initial_env, next_env, run, run_multistep, step, Outcome, RunResult, StepResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("{machine}: start state `{start}` is not the source of the first transition")]
    StartMismatch { machine: String, start: String },
    #[error("{machine}: unknown state `{state}`")]
    UnknownState { machine: String, state: String },
    #[error("{machine}: transitions {first} and {second} can both fire")]
    Nondeterministic { machine: String, first: String, second: String },
    #[error("{machine}: no transitions")]
    Empty { machine: String },
    #[error("vocabulary mismatch: {a} and {b} share no trace variable")]
    VocabularyMismatch { a: String, b: String },
    #[error("product of zero machines")]
    NoFactors,
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace time {time} at position {index} does not increase")]
    TimeNotIncreasing { index: usize, time: i64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: String,
    pub to: String,
    pub label: Formula,
    pub binds_snapshot: bool,
}

impl Transition {
    pub fn new(from: impl Into<String>, to: impl Into<String>, label: Formula) -> Self {
        let binds_snapshot = label.binds_snapshot();
        Transition { from: from.into(), to: to.into(), label, binds_snapshot }
    }

    pub fn name(&self) -> String {
        format!("{}->{}", self.from, self.to)
    }
}

/// A product state and the component states it pairs, in factor order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductState {
    pub name: String,
    pub components: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaSFA {
    pub name: String,
    pub params: Vec<String>,
    pub states: Vec<String>,
    pub start: String,
    pub transitions: Vec<Transition>,
    /// Present for products: the component tuple of every state.
    pub tuples: Vec<ProductState>,
}

impl LambdaSFA {
    /// States are listed in order of first appearance; the start state is the source
    /// of the first transition.
    pub fn new(name: impl Into<String>, params: Vec<String>, transitions: Vec<Transition>) -> Result<Self, MachineError> {
        let name = name.into();
        let start = transitions.first().ok_or_else(|| MachineError::Empty { machine: name.clone() })?.from.clone();
        let mut states: Vec<String> = Vec::new();
        for t in &transitions {
            for s in [&t.from, &t.to] {
                if !states.contains(s) {
                    states.push(s.clone());
                }
            }
        }
        Ok(LambdaSFA { name, params, states, start, transitions, tuples: Vec::new() })
    }

    pub fn outgoing<'a>(&'a self, state: &'a str) -> impl Iterator<Item = (usize, &'a Transition)> + 'a {
        self.transitions.iter().enumerate().filter(move |(_, t)| t.from == state)
    }

    pub fn tuple(&self, state: &str) -> Option<&ProductState> {
        self.tuples.iter().find(|p| p.name == state)
    }

    /// Structural checks only: start state, declared states, λ flags.
    pub fn check_structure(&self) -> Result<(), MachineError> {
        let first = self.transitions.first().ok_or_else(|| MachineError::Empty { machine: self.name.clone() })?;
        if first.from != self.start {
            return Err(MachineError::StartMismatch { machine: self.name.clone(), start: self.start.clone() });
        }
        for t in &self.transitions {
            for s in [&t.from, &t.to] {
                if !self.states.contains(s) {
                    return Err(MachineError::UnknownState { machine: self.name.clone(), state: s.clone() });
                }
            }
        }
        Ok(())
    }

    /// Structural checks plus determinism: labels leaving one state must be pairwise
    /// unsatisfiable.
    pub fn validate(&self, oracle: &SatOracle) -> Result<(), MachineError> {
        self.check_structure()?;
        for s in &self.states {
            let out: Vec<_> = self.outgoing(s).collect();
            for (i, (ia, a)) in out.iter().enumerate() {
                for (ib, b) in &out[i + 1..] {
                    let both = Formula::and([a.label.strip_lambda().clone(), b.label.strip_lambda().clone()]);
                    if oracle.is_satisfiable(&both)? {
                        return Err(MachineError::Nondeterministic {
                            machine: self.name.clone(),
                            first: format!("#{ia} {}", a.name()),
                            second: format!("#{ib} {}", b.name()),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Trace variables read by any label.
    pub fn vocabulary(&self) -> std::collections::BTreeSet<String> {
        self.transitions.iter().flat_map(|t| t.label.vocabulary()).collect()
    }
}
