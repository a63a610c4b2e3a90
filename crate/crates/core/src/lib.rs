//! Network functions as products of symbolic automata with snapshot bindings:
//! composition, branch synthesis, code emission and trace validation.

pub mod cli;
pub mod emit;
pub mod error;
pub mod formula;
pub mod machine;
pub mod netsim;
pub mod oracle;
pub mod sexp;
pub mod synth;

pub use error::{Error, ParseError};
