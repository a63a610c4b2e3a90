//! The predicate language labelling automaton transitions.

pub mod ast;
pub mod dnf;
pub mod eval;
pub mod parse;

use thiserror::Error;

pub use ast::{Atom, EntryField, Formula, FrameField, Index, Term, Var};
pub use dnf::{atoms, minimize_dnf, to_dnf, Disjunct, DisjunctSet, Literal, DEFAULT_DNF_CAP};
pub use eval::{eval, Env, EvalError};
pub use parse::{parse_formula, parse_term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("DNF exceeds the cap of {cap} disjuncts")]
    DnfTooLarge { cap: usize },
    #[error("a lambda binder may only appear at the outermost position")]
    NestedLambda,
}
