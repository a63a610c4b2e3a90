//! Running a product or a lowered program as a switch over an ingress workload.
//!
//! Every ingress is followed by one egress event one time unit later. All per-port
//! instances (`self = 1..=num_ports`) consume the same events and must move along the
//! same transition.

use crate::emit::{Block, DecisionProgram};
use crate::formula::{eval, parse_formula, Env, EvalError, Formula};
use crate::formula::ast::Atom;
use crate::machine::{initial_env, next_env, step, LambdaSFA, StepResult};

use super::frame::{Iface, IfaceSet, Port};
use super::{Ingress, SimError, SwitchConfig, TraceEvent};

#[derive(Clone, Copy, Debug)]
pub enum Executable<'a> {
    Product(&'a LambdaSFA),
    Program(&'a DecisionProgram),
}

impl Executable<'_> {
    fn start(&self) -> &str {
        match self {
            Executable::Product(m) => &m.start,
            Executable::Program(p) => &p.start,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub events: Vec<TraceEvent>,
    /// `worlds[0]` is the initial world; `worlds[k]` is the world of `events[k - 1]`.
    pub worlds: Vec<Env>,
    /// `states[k]` is the state after `k` events.
    pub states: Vec<String>,
}

impl Simulation {
    /// Egress port sets, one per ingress.
    pub fn egress_sets(&self) -> Vec<IfaceSet> {
        self.events.iter().filter(|e| !e.is_ingress()).map(|e| e.loc.clone()).collect()
    }
}

fn holds(f: &Formula, env: &Env) -> Result<bool, SimError> {
    match eval(f.strip_lambda(), env) {
        Ok(b) => Ok(b),
        Err(EvalError::Unbound(_)) => Ok(false),
        Err(e) => Err(e.into()),
    }
}

fn mentions(f: &Formula, atom: &Formula) -> bool {
    let mut found = false;
    f.visit_atoms(&mut |a: &Atom| found |= Formula::atom(a.clone()) == *atom);
    found
}

struct Actions {
    in_egress: Formula,
    keep_table: Formula,
    learn: Formula,
    copy_frame: Formula,
}

impl Actions {
    fn new() -> Self {
        let p = |s: &str| parse_formula(s).expect("built-in action");
        Actions {
            in_egress: p("(in (egr self) loc)"),
            keep_table: p("(= mlt (x mlt))"),
            learn: p("(exists i (= mlt (upd (x mlt) i (fld f sa) t port)))"),
            copy_frame: p("(= f (x f))"),
        }
    }

    fn forwards(&self, b: &Block) -> bool {
        b.actions.iter().any(|a| a.positive && a.atom == self.in_egress)
    }

    fn learns(&self, b: &Block) -> Result<bool, SimError> {
        let mut learn = false;
        for a in &b.actions {
            let known = [&self.in_egress, &self.keep_table, &self.copy_frame].contains(&&a.atom);
            if a.positive && a.atom == self.learn {
                learn = true;
            } else if !known {
                return Err(SimError::UnsupportedAction(a.to_string()));
            }
        }
        Ok(learn)
    }
}

struct Runner<'a> {
    exe: Executable<'a>,
    sw: &'a SwitchConfig,
    actions: Actions,
}

impl Runner<'_> {
    /// Moves every instance; returns the common successor state.
    fn product_move(&self, m: &LambdaSFA, state: &str, env: &Env) -> Result<String, SimError> {
        let mut taken: Option<usize> = None;
        for p in self.sw.ports() {
            match step(m, state, &env.with_self(p))? {
                StepResult::Moved(t) if taken.is_none_or(|u| u == t) => taken = Some(t),
                StepResult::Moved(t) => {
                    return Err(SimError::Diverged { time: env.time, detail: format!("self={p} takes {}", m.transitions[t].name()) })
                }
                StepResult::Stuck => return Err(SimError::Stuck { time: env.time, state: state.to_string(), self_port: p }),
            }
        }
        Ok(taken.map(|t| m.transitions[t].to.clone()).unwrap_or_else(|| state.to_string()))
    }

    /// The block every instance selects, checked for agreement on the transition.
    fn program_select(&self, p: &DecisionProgram, state: &str, env: &Env) -> Result<Vec<(usize, usize)>, SimError> {
        let mut out = Vec::new();
        for port in self.sw.ports() {
            let Some(sel) = p.select(state, &env.with_self(port))? else {
                return Err(SimError::Stuck { time: env.time, state: state.to_string(), self_port: port });
            };
            if out.first().is_some_and(|&(t, _): &(usize, usize)| t != sel.0) {
                return Err(SimError::Diverged { time: env.time, detail: format!("self={port} takes {}", p.transitions[sel.0].name()) });
            }
            out.push(sel);
        }
        Ok(out)
    }

    fn check_actions(&self, p: &DecisionProgram, sel: &[(usize, usize)], env: &Env) -> Result<String, SimError> {
        for (port, &(t, b)) in self.sw.ports().zip(sel) {
            let lt = &p.transitions[t];
            for a in &lt.blocks[b].actions {
                if !holds(&a.to_formula(), &env.with_self(port))? {
                    return Err(SimError::ActionViolated { time: env.time, transition: lt.name(), action: a.to_string() });
                }
            }
        }
        Ok(p.transitions[sel[0].0].to.clone())
    }

    fn ingress(&self, state: &str, prev: &Env, ev: &TraceEvent) -> Result<(Env, String), SimError> {
        match self.exe {
            Executable::Product(m) => {
                let env = next_env(prev, ev, self.sw);
                let next = self.product_move(m, state, &env)?;
                Ok((env, next))
            }
            Executable::Program(p) => {
                let mut pinned = ev.clone();
                pinned.mlt = Some(prev.mlt.clone());
                let mut env = next_env(prev, &pinned, self.sw);
                let sel = self.program_select(p, state, &env)?;
                let (t, b) = sel[0];
                if self.actions.learns(&p.transitions[t].blocks[b])? {
                    let port = env.port.unwrap_or_default();
                    env.mlt.learn(ev.frame.sa, port, ev.time, self.sw.uplink, self.sw.mto);
                }
                let next = self.check_actions(p, &sel, &env)?;
                Ok((env, next))
            }
        }
    }

    fn egress(&self, state: &str, prev: &Env, ev: &mut TraceEvent) -> Result<(Env, String), SimError> {
        let base = next_env(prev, ev, self.sw);
        let mut loc = IfaceSet::new();
        match self.exe {
            Executable::Product(m) => {
                if let Some((_, t)) = m.outgoing(state).find(|(_, t)| mentions(&t.label, &self.actions.in_egress)) {
                    for port in self.sw.ports() {
                        let mut e = base.with_self(port);
                        e.loc = IfaceSet::single(Iface::egress(port));
                        if holds(&t.label, &e)? {
                            loc.insert(Iface::egress(port));
                        }
                    }
                }
                ev.loc = loc;
                let env = next_env(prev, ev, self.sw);
                let next = self.product_move(m, state, &env)?;
                Ok((env, next))
            }
            Executable::Program(p) => {
                let sel = self.program_select(p, state, &base)?;
                for (port, &(t, b)) in self.sw.ports().zip(&sel) {
                    let block = &p.transitions[t].blocks[b];
                    self.actions.learns(block)?;
                    if self.actions.forwards(block) {
                        loc.insert(Iface::egress(port));
                    }
                }
                ev.loc = loc;
                let env = next_env(prev, ev, self.sw);
                let next = self.check_actions(p, &sel, &env)?;
                Ok((env, next))
            }
        }
    }
}

/// Simulates `workload` on the switch. Ingress times must leave room for each egress.
pub fn simulate(exe: Executable<'_>, workload: &[Ingress], sw: &SwitchConfig) -> Result<Simulation, SimError> {
    let Some(first) = workload.first() else {
        return Err(SimError::Invalid("empty workload".into()));
    };
    for w in workload.windows(2) {
        if w[1].time <= w[0].time + 1 {
            return Err(SimError::Invalid(format!("ingress at {} leaves no room for the egress of {}", w[1].time, w[0].time)));
        }
    }
    if let Some(i) = workload.iter().find(|i| !sw.ports().any(|p| p == i.port)) {
        return Err(SimError::Invalid(format!("port {} at time {} is outside 1..={}", i.port, i.time, sw.num_ports)));
    }
    let runner = Runner { exe, sw, actions: Actions::new() };
    let mut prev = initial_env(sw, 1, first.time - 1);
    let mut state = exe.start().to_string();
    let mut sim = Simulation { events: Vec::new(), worlds: vec![prev.clone()], states: vec![state.clone()] };
    for i in workload {
        let ev = TraceEvent::new(i.time, i.frame.clone(), IfaceSet::single(Iface::ingress(i.port)));
        let (env, next) = runner.ingress(&state, &prev, &ev)?;
        sim.events.push(TraceEvent { mlt: None, ..ev });
        sim.worlds.push(env.clone());
        sim.states.push(next.clone());
        prev = env;
        state = next;

        let mut ev = TraceEvent::new(i.time + 1, i.frame.clone(), IfaceSet::new());
        let (env, next) = runner.egress(&state, &prev, &mut ev)?;
        sim.events.push(ev);
        sim.worlds.push(env.clone());
        sim.states.push(next.clone());
        prev = env;
        state = next;
    }
    Ok(sim)
}

/// Egress ports of a simulated egress event.
pub fn egress_ports(loc: &IfaceSet) -> Vec<Port> {
    loc.iter().map(|i| i.port).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::parse_machine;
    use crate::netsim::frame::Frame;

    const I: &str = "(machine I (trans I1 I2 (= loc (set (ing port)))) (trans I2 I1 (subset loc egress)))";

    fn ingress(time: i64, port: Port, da: &str, sa: &str) -> Ingress {
        Ingress { time, port, frame: Frame::new(da.parse().unwrap(), sa.parse().unwrap(), "data") }
    }

    #[test]
    fn interleaver_alone_emits_empty_egress() {
        let m = parse_machine(I).unwrap();
        let sw = SwitchConfig::desk();
        let w = [ingress(10, 2, "ff:ff:ff:ff:ff:ff", "04:0c:ce:d2:08:6c"), ingress(12, 3, "04:0c:ce:d2:08:6c", "7c:d1:c3:e8:a4:67")];
        let s = simulate(Executable::Product(&m), &w, &sw).unwrap();
        assert_eq!(s.events.len(), 4);
        assert_eq!(s.states, ["I1", "I2", "I1", "I2", "I1"]);
        assert!(s.egress_sets().iter().all(IfaceSet::is_empty));
        assert_eq!(s.worlds.len(), 5);
        assert_eq!(s.worlds[2].mlt.lookup(w[0].frame.sa, 11, 5), Some(2));
    }

    #[test]
    fn workload_validation() {
        let m = parse_machine(I).unwrap();
        let sw = SwitchConfig::desk();
        let tight = [ingress(10, 2, "ff:ff:ff:ff:ff:ff", "04:0c:ce:d2:08:6c"), ingress(11, 3, "ff:ff:ff:ff:ff:ff", "04:0c:ce:d2:08:6c")];
        assert!(matches!(simulate(Executable::Product(&m), &tight, &sw), Err(SimError::Invalid(_))));
        let bad_port = [ingress(10, 9, "ff:ff:ff:ff:ff:ff", "04:0c:ce:d2:08:6c")];
        assert!(matches!(simulate(Executable::Product(&m), &bad_port, &sw), Err(SimError::Invalid(_))));
        assert!(simulate(Executable::Product(&m), &[], &sw).is_err());
    }
}
