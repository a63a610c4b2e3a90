//! Learning-switch simulation, traces and invariant monitors.

pub mod frame;
pub mod gen;
pub mod mac_table;
pub mod monitor;
pub mod sim;
pub mod trace;

use thiserror::Error;

use frame::{Mac, Port};

pub use gen::{random_trace, random_workload, TraceParams};
pub use monitor::{check_phi_b1, check_phi_ml, equivalence_check, estimate_profile, EquivalenceReport, InvariantId, InvariantReport, Violation};
pub use sim::{simulate, Executable, Simulation};
pub use trace::{Ingress, TraceEvent};

use crate::formula::EvalError;
use crate::machine::MachineError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("{0}")]
    Invalid(String),
    #[error("time {time}: instance self={self_port} is stuck in {state}")]
    Stuck { time: i64, state: String, self_port: Port },
    #[error("time {time}: instances disagree: {detail}")]
    Diverged { time: i64, detail: String },
    #[error("time {time}: {transition} action {action} does not hold")]
    ActionViolated { time: i64, transition: String, action: String },
    #[error("no interpretation for action {0}")]
    UnsupportedAction(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

/// Fixed parameters of the simulated switch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchConfig {
    pub num_ports: usize,
    pub uplink: Port,
    /// MAC table timeout.
    pub mto: i64,
    pub mlt_size: usize,
    /// Hardware address of port `p` at index `p - 1`.
    pub haddrs: Vec<Mac>,
}

impl SwitchConfig {
    pub fn new(num_ports: usize, uplink: Port, mto: i64, mlt_size: usize) -> Self {
        SwitchConfig {
            num_ports,
            uplink,
            mto,
            mlt_size,
            haddrs: (1..=num_ports as Port).map(Mac::port_address).collect(),
        }
    }

    /// Four ports, uplink 1, timeout 5, four table entries.
    pub fn desk() -> Self {
        SwitchConfig::new(4, 1, 5, 4)
    }

    pub fn ports(&self) -> impl Iterator<Item = Port> {
        1..=self.num_ports as Port
    }
}
