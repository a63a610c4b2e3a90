//! Predicate classification, lowering of branch trees into guarded action blocks,
//! and template-driven source emission.

pub mod classify;
pub mod discharge;
pub mod lower;
pub mod pattern;
pub mod program;

use thiserror::Error;

use crate::error::ParseError;
use crate::formula::FormulaError;
use crate::oracle::OracleError;
use crate::synth::SynthError;

pub use classify::{classify, ClassConfig, PredicateClass, Section};
pub use discharge::{discharge, DischargeTable, EmitContext, Emission, EntryKind};
pub use lower::{compare_programs, lower, lower_product, retree, verify_lowering, LoweringCheck};
pub use pattern::Pattern;
pub use program::{Block, DecisionProgram, LoweredTransition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("no classification rule in section `{section}` matches {atom}")]
    Unclassifiable { atom: String, section: String },
    #[error("wrapper context does not imply {atom}")]
    WrapperNotImplied { atom: String },
    #[error("{transition}: guard {atom} reads an output")]
    ClassificationConflict { atom: String, transition: String },
    #[error("no classification section applies to state {state}")]
    NoSection { state: String },
    #[error("no {kind} template matches {literal}")]
    MissingTemplate { literal: String, kind: String },
    #[error("template for {pattern} uses placeholder {{{index}}} but the pattern captures {captures}")]
    PlaceholderArity { pattern: String, index: usize, captures: usize },
    #[error("{transition}: {reason}")]
    NotEquivalent { transition: String, reason: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}
