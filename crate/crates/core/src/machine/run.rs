//! Running a λ-SFA over a timed trace.
//!
//! Position `i` is evaluated in an environment whose snapshot `x` is position `i - 1`.
//! Position 0 sees the initial world: no frame, empty location, an all-expired table
//! and time one less than the first event.

use crate::formula::{eval, Env, EvalError};
use crate::netsim::frame::{Mac, Port};
use crate::netsim::mac_table::MacTable;
use crate::netsim::{SwitchConfig, TraceEvent};

use super::{LambdaSFA, MachineError};

pub fn initial_env(sw: &SwitchConfig, self_port: Port, time: i64) -> Env {
    Env {
        time,
        frame: None,
        loc: Default::default(),
        port: None,
        self_port,
        uplink: sw.uplink,
        mto: sw.mto,
        mlt: MacTable::all_expired(sw.mlt_size, time, sw.mto),
        snapshot: None,
        haddrs: sw.haddrs.clone(),
    }
}

/// The environment of `event`, following `prev`. An event without a pinned table
/// takes the previous table, updated by the learning rule on ingress.
pub fn next_env(prev: &Env, event: &TraceEvent, sw: &SwitchConfig) -> Env {
    let port = event.loc.ingress_port();
    let mlt = match &event.mlt {
        Some(t) => t.clone(),
        None => {
            let mut t = prev.mlt.clone();
            if let Some(p) = port {
                t.learn(event.frame.sa, p, event.time, sw.uplink, sw.mto);
            }
            t
        }
    };
    Env {
        time: event.time,
        frame: Some(event.frame.clone()),
        loc: event.loc.clone(),
        port,
        self_port: prev.self_port,
        uplink: sw.uplink,
        mto: sw.mto,
        mlt,
        snapshot: Some(Box::new(prev.detached())),
        haddrs: sw.haddrs.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult {
    /// Index of the transition taken.
    Moved(usize),
    Stuck,
}

/// One move from `state`. A label that reads an unbound variable does not hold.
pub fn step(m: &LambdaSFA, state: &str, env: &Env) -> Result<StepResult, MachineError> {
    let mut taken: Option<usize> = None;
    for (i, t) in m.outgoing(state) {
        let holds = match eval(t.label.strip_lambda(), env) {
            Ok(b) => b,
            Err(EvalError::Unbound(_)) => false,
            Err(e) => return Err(e.into()),
        };
        if holds {
            if let Some(j) = taken {
                return Err(MachineError::Nondeterministic {
                    machine: m.name.clone(),
                    first: format!("#{j} {}", m.transitions[j].name()),
                    second: format!("#{i} {}", t.name()),
                });
            }
            taken = Some(i);
        }
    }
    Ok(taken.map_or(StepResult::Stuck, StepResult::Moved))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    /// No transition held at this trace index.
    Stuck { index: usize },
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    /// Visited states, starting with the start state.
    pub states: Vec<String>,
    /// Transition index taken at each consumed position.
    pub taken: Vec<usize>,
    /// Environment of each position reached, stuck position included.
    pub history: Vec<Env>,
}

impl RunResult {
    pub fn final_state(&self) -> &str {
        self.states.last().map(String::as_str).unwrap_or("")
    }

    pub fn accepted(&self) -> bool {
        self.outcome == Outcome::Accepted
    }

    pub fn stuck_at(&self) -> Option<usize> {
        match self.outcome {
            Outcome::Stuck { index } => Some(index),
            Outcome::Accepted => None,
        }
    }
}

/// Variable bindings visible at one position: `(time, f.da, x.f.da, port, x.port)`.
pub fn bindings(env: &Env) -> (i64, Option<Mac>, Option<Mac>, Option<Port>, Option<Port>) {
    let x = env.snapshot.as_deref();
    (
        env.time,
        env.frame.as_ref().map(|f| f.da),
        x.and_then(|x| x.frame.as_ref()).map(|f| f.da),
        env.port,
        x.and_then(|x| x.port),
    )
}

fn check_times(trace: &[TraceEvent]) -> Result<(), MachineError> {
    if trace.is_empty() {
        return Err(MachineError::EmptyTrace);
    }
    for (i, w) in trace.windows(2).enumerate() {
        if w[1].time <= w[0].time {
            return Err(MachineError::TimeNotIncreasing { index: i + 1, time: w[1].time });
        }
    }
    Ok(())
}

/// The environments of every trace position, each carrying its predecessor as `x`.
pub fn environments(trace: &[TraceEvent], sw: &SwitchConfig, self_port: Port) -> Result<Vec<Env>, MachineError> {
    check_times(trace)?;
    let mut prev = initial_env(sw, self_port, trace[0].time - 1);
    let mut out = Vec::with_capacity(trace.len());
    for ev in trace {
        let env = next_env(&prev, ev, sw);
        prev = env.clone();
        out.push(env);
    }
    Ok(out)
}

/// [`environments`] preceded by the initial world, as a timed state sequence.
pub fn environments_from_initial(trace: &[TraceEvent], sw: &SwitchConfig, self_port: Port) -> Result<Vec<Env>, MachineError> {
    let envs = environments(trace, sw, self_port)?;
    let mut out = Vec::with_capacity(envs.len() + 1);
    out.push(initial_env(sw, self_port, trace[0].time - 1));
    out.extend(envs);
    Ok(out)
}

pub fn run(m: &LambdaSFA, trace: &[TraceEvent], sw: &SwitchConfig, self_port: Port) -> Result<RunResult, MachineError> {
    run_envs(m, environments(trace, sw, self_port)?)
}

/// Runs over prepared environments, as produced by [`environments`].
pub fn run_envs(m: &LambdaSFA, envs: Vec<Env>) -> Result<RunResult, MachineError> {
    let mut state = m.start.clone();
    let mut res = RunResult { outcome: Outcome::Accepted, states: vec![state.clone()], taken: Vec::new(), history: Vec::new() };
    for (i, env) in envs.into_iter().enumerate() {
        let r = step(m, &state, &env)?;
        res.history.push(env);
        match r {
            StepResult::Moved(t) => {
                state = m.transitions[t].to.clone();
                res.taken.push(t);
                res.states.push(state.clone());
            }
            StepResult::Stuck => {
                res.outcome = Outcome::Stuck { index: i };
                break;
            }
        }
    }
    Ok(res)
}

/// The extended transition function over a world sequence whose first element is
/// the initial world. `None` when the machine gets stuck.
pub fn run_multistep(m: &LambdaSFA, worlds: &[Env]) -> Result<Option<String>, MachineError> {
    match worlds {
        [] => Err(MachineError::EmptyTrace),
        [_] => Ok(Some(m.start.clone())),
        [prefix @ .., last] => {
            let Some(q) = run_multistep(m, prefix)? else {
                return Ok(None);
            };
            let mut w = last.clone();
            w.snapshot = Some(Box::new(prefix[prefix.len() - 1].detached()));
            Ok(match step(m, &q, &w)? {
                StepResult::Moved(t) => Some(m.transitions[t].to.clone()),
                StepResult::Stuck => None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::parse_machine;
    use crate::netsim::trace::parse_trace;

    const I: &str = "(machine I (trans I1 I2 (= loc (set (ing port)))) (trans I2 I1 (subset loc egress)))";
    const ARP_EXCHANGE: &str = "10 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | arpreq | {2i}\n\
                          11 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | arpreq | {3e,4e}\n\
                          12 | 04:0c:ce:d2:08:6c | 7c:d1:c3:e8:a4:67 | arpreply | {3i}\n\
                          13 | 04:0c:ce:d2:08:6c | 7c:d1:c3:e8:a4:67 | arpreply | {2e}\n";

    #[test]
    fn interleaver_accepts_and_sticks() {
        let m = parse_machine(I).unwrap();
        let sw = SwitchConfig::desk();
        let tr = parse_trace(ARP_EXCHANGE).unwrap();
        let r = run(&m, &tr, &sw, 1).unwrap();
        assert!(r.accepted());
        assert_eq!(r.states, ["I1", "I2", "I1", "I2", "I1"]);
        let r = run(&m, &tr[1..], &sw, 1).unwrap();
        assert_eq!(r.stuck_at(), Some(0));
    }

    #[test]
    fn learning_follows_ingress() {
        let sw = SwitchConfig::desk();
        let envs = environments(&parse_trace(ARP_EXCHANGE).unwrap(), &sw, 2).unwrap();
        let sa: Mac = "04:0c:ce:d2:08:6c".parse().unwrap();
        assert_eq!(envs[0].mlt.lookup(sa, 10, 5), Some(2));
        assert_eq!(envs[3].mlt.lookup(sa, 13, 5), Some(2));
        assert_eq!(bindings(&envs[1]).4, Some(2));
        assert_eq!(bindings(&envs[2]).4, None);
    }

    #[test]
    fn multistep_matches_run() {
        let m = parse_machine(I).unwrap();
        let sw = SwitchConfig::desk();
        let tr = parse_trace(ARP_EXCHANGE).unwrap();
        let mut worlds = vec![initial_env(&sw, 1, 9)];
        worlds.extend(environments(&tr, &sw, 1).unwrap());
        assert_eq!(run_multistep(&m, &worlds).unwrap().as_deref(), Some("I1"));
        assert_eq!(run_multistep(&m, &worlds[..3]).unwrap().as_deref(), Some("I1"));
    }

    #[test]
    fn rejects_bad_times() {
        let m = parse_machine(I).unwrap();
        let mut tr = parse_trace(ARP_EXCHANGE).unwrap();
        tr[2].time = 11;
        assert!(matches!(run(&m, &tr, &SwitchConfig::desk(), 1), Err(MachineError::TimeNotIncreasing { index: 2, .. })));
        assert!(matches!(run(&m, &[], &SwitchConfig::desk(), 1), Err(MachineError::EmptyTrace)));
    }
}
