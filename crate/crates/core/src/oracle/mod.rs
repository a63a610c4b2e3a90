//! Satisfiability of transition formulas over finite domains.
//!
//! The internal backend searches assignments to the formula's cells directly. The
//! external backend prints an SMT-LIB v2 script and runs a solver as a child process.

mod enumerate;
mod search;
pub mod smtlib;

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::formula::eval::{Cell, EvalError, Scalar};
use crate::formula::Formula;
use crate::netsim::frame::{Iface, IfaceSet, Mac, Port, Proto};

pub use enumerate::enumerate_model;
pub use smtlib::to_smtlib;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search budget of {budget} nodes exhausted")]
    DomainTooLarge { budget: u64 },
    #[error("external solver failed: {0}")]
    ExternalSolver(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("invalid domain configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Finite sorts the oracle quantifies over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainConfig {
    pub num_ports: usize,
    /// Frame and table addresses; must contain the broadcast address. Port hardware
    /// addresses are added implicitly.
    pub mac_universe: Vec<Mac>,
    /// Times range over `0..=time_bound`.
    pub time_bound: i64,
    pub mlt_size: usize,
    /// Protocol tags besides the per-port ARP-request tags.
    pub proto_tags: Vec<String>,
    /// Maximum search nodes per query.
    pub node_budget: u64,
}

impl DomainConfig {
    /// Four ports, four unicast hosts plus broadcast, a four-entry table.
    pub fn desk() -> Self {
        DomainConfig {
            num_ports: 4,
            mac_universe: vec![
                "04:0c:ce:d2:08:6c".parse().unwrap(),
                "7c:d1:c3:e8:a4:67".parse().unwrap(),
                "3a:11:7e:00:52:09".parse().unwrap(),
                "e4:5f:01:9b:2c:d3".parse().unwrap(),
                Mac::BROADCAST,
            ],
            time_bound: 8,
            mlt_size: 4,
            proto_tags: vec!["arpreply".into(), "ipv4".into()],
            node_budget: 2_000_000,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.num_ports < 2 {
            return Err(OracleError::BadConfig("at least two ports are required".into()));
        }
        if self.mlt_size < 1 {
            return Err(OracleError::BadConfig("the MAC table needs at least one entry".into()));
        }
        if !self.mac_universe.contains(&Mac::BROADCAST) {
            return Err(OracleError::BadConfig("the MAC universe must include broadcast".into()));
        }
        if self.time_bound < 0 {
            return Err(OracleError::BadConfig("time bound must be non-negative".into()));
        }
        Ok(())
    }

    pub fn haddrs(&self) -> Vec<Mac> {
        (1..=self.num_ports as Port).map(Mac::port_address).collect()
    }

    pub fn ports(&self) -> Vec<i64> {
        (1..=self.num_ports as Port).collect()
    }

    pub fn macs(&self) -> Vec<Mac> {
        let mut out = self.mac_universe.clone();
        for h in self.haddrs() {
            if !out.contains(&h) {
                out.push(h);
            }
        }
        out
    }

    pub fn protos(&self) -> Vec<Proto> {
        let mut out: Vec<Proto> = self.proto_tags.iter().map(|t| Proto::new(t)).collect();
        out.extend((1..=self.num_ports as Port).map(Proto::arp_request_for));
        out
    }

    pub fn interfaces(&self) -> Vec<Iface> {
        self.ports()
            .into_iter()
            .flat_map(|p| [Iface::ingress(p), Iface::egress(p)])
            .collect()
    }

    /// Candidate values of a cell. `port` cells are never branched on directly: their
    /// value follows from `loc`.
    pub fn domain(&self, cell: &Cell) -> Vec<Scalar> {
        use crate::formula::ast::{EntryField as E, FrameField as F};
        let ints = |r: std::ops::RangeInclusive<i64>| r.map(Scalar::Int).collect();
        match cell {
            Cell::Time { .. } | Cell::Mto | Cell::Entry { field: E::Time, .. } => ints(0..=self.time_bound),
            Cell::Port { .. } | Cell::SelfPort | Cell::Uplink | Cell::Entry { field: E::Port, .. } => {
                ints(1..=self.num_ports as i64)
            }
            Cell::Loc { .. } => IfaceSet::all_subsets(self.num_ports).into_iter().map(Scalar::Set).collect(),
            Cell::Frame { field: F::Da | F::Sa, .. } | Cell::Entry { field: E::Mac, .. } => {
                self.macs().into_iter().map(Scalar::Mac).collect()
            }
            Cell::Frame { field: F::Proto, .. } => self.protos().into_iter().map(Scalar::Proto).collect(),
            Cell::Prop(_) => vec![Scalar::Bool(true), Scalar::Bool(false)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    Internal,
    External { path: PathBuf, args: Vec<String>, timeout: Duration },
}

/// A satisfying assignment of the cells a formula reads.
pub type Model = BTreeMap<Cell, Scalar>;

pub struct SatOracle {
    pub config: DomainConfig,
    pub backend: Backend,
    memo: Mutex<HashMap<Formula, bool>>,
}

impl SatOracle {
    pub fn internal(config: DomainConfig) -> Self {
        SatOracle { config, backend: Backend::Internal, memo: Mutex::new(HashMap::new()) }
    }

    /// Solver reading a script on standard input (`z3 -in` style).
    pub fn external(config: DomainConfig, path: impl Into<PathBuf>, timeout: Duration) -> Self {
        SatOracle {
            config,
            backend: Backend::External { path: path.into(), args: vec!["-in".into()], timeout },
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn is_satisfiable(&self, f: &Formula) -> Result<bool, OracleError> {
        if let Some(&r) = self.memo.lock().unwrap().get(f) {
            return Ok(r);
        }
        self.config.validate()?;
        let r = match &self.backend {
            Backend::Internal => search::find_model(f, &self.config)?.is_some(),
            Backend::External { path, args, timeout } => {
                let script = to_smtlib(f, &self.config)?;
                run_solver(path, args, *timeout, &script)?
            }
        };
        self.memo.lock().unwrap().insert(f.clone(), r);
        Ok(r)
    }

    /// A model from the internal search, regardless of the configured backend.
    pub fn find_model(&self, f: &Formula) -> Result<Option<Model>, OracleError> {
        self.config.validate()?;
        search::find_model(f, &self.config)
    }
}

fn run_solver(path: &PathBuf, args: &[String], timeout: Duration, script: &str) -> Result<bool, OracleError> {
    let fail = |m: String| OracleError::ExternalSolver(format!("{}: {m}", path.display()));
    let mut child = Command::new(path)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| fail(e.to_string()))?;
    child
        .stdin
        .take()
        .expect("piped stdin")
        .write_all(script.as_bytes())
        .map_err(|e| fail(e.to_string()))?;
    let start = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait().map_err(|e| fail(e.to_string()))? {
            break status;
        }
        if start.elapsed() > timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(fail(format!("timed out after {timeout:?}")));
        }
        std::thread::sleep(Duration::from_millis(2));
    };
    let mut out = String::new();
    child.stdout.take().expect("piped stdout").read_to_string(&mut out).map_err(|e| fail(e.to_string()))?;
    if !status.success() {
        let mut err = String::new();
        let _ = child.stderr.take().expect("piped stderr").read_to_string(&mut err);
        return Err(fail(format!("exit status {status}: {}{}", out.trim(), err.trim())));
    }
    match out.lines().map(str::trim).find(|l| !l.is_empty()) {
        Some("sat") => Ok(true),
        Some("unsat") => Ok(false),
        other => Err(fail(format!("unexpected reply {:?}", other.unwrap_or("")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn sat(src: &str) -> bool {
        SatOracle::internal(DomainConfig::desk()).is_satisfiable(&parse_formula(src).unwrap()).unwrap()
    }

    #[test]
    fn contradictions_are_unsat() {
        assert!(!sat("(and (ucast (fld f da)) (not (ucast (fld f da))))"));
        assert!(!sat("(and (= port uplink-port) (!= port uplink-port))"));
        assert!(!sat("false"));
        assert!(sat("true"));
    }

    #[test]
    fn port_is_bound_only_at_ingress() {
        assert!(sat("(and (= loc (set (ing port))) (= port 3))"));
        assert!(!sat("(and (subset loc egress) (= port 3))"));
        assert!(sat("(and (subset loc egress) (!= loc (set (ing port))))"));
    }

    #[test]
    fn time_arithmetic() {
        assert!(sat("(and (<= (- t (entry mlt 0 t)) mto) (= mto 2) (= t 8))"));
        assert!(!sat("(and (<= (- t (entry mlt 0 t)) mto) (= mto 2) (= t 8) (<= (entry mlt 0 t) 5))"));
    }

    #[test]
    fn table_update_equalities() {
        assert!(sat("(exists k (= mlt (upd (x mlt) k (fld f sa) t port)))"));
        assert!(!sat(
            "(and (= mlt (x mlt)) (= (entry mlt 0 mac) (fld f sa)) (!= (entry (x mlt) 0 mac) (fld f sa)))"
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = DomainConfig::desk();
        cfg.mac_universe.retain(|m| !m.is_broadcast());
        assert!(matches!(cfg.validate(), Err(OracleError::BadConfig(_))));
    }
}
