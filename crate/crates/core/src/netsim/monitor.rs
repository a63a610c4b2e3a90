//! State-invariant monitors, product/component equivalence and profile estimation.

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::{eval, parse_formula, Env, EvalError, Formula};
use crate::machine::{run, LambdaSFA, Outcome};
use crate::machine::run::environments;
use crate::synth::{Assignment, DistributionProfile};

use super::frame::Port;
use super::mac_table::MacTable;
use super::{SimError, SwitchConfig, TraceEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvariantId {
    PhiB1,
    PhiMl,
}

impl fmt::Display for InvariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InvariantId::PhiB1 => "PHI_B1",
            InvariantId::PhiMl => "PHI_ML",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Index into the history.
    pub step: usize,
    /// `entry-port` for Φ_B1; `forward` (entry without a learning witness) or
    /// `backward` (witness without its entry) for Φ_ML.
    pub clause: &'static str,
    pub self_port: Option<Port>,
    /// Table slot, for Φ_ML.
    pub slot: Option<usize>,
    pub env: Env,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantReport {
    pub id: InvariantId,
    pub holds: bool,
    pub first_violation: Option<Violation>,
}

impl InvariantReport {
    fn from(id: InvariantId, first_violation: Option<Violation>) -> Self {
        InvariantReport { id, holds: first_violation.is_none(), first_violation }
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.first_violation {
            None => write!(f, "{} holds", self.id),
            Some(v) => {
                write!(f, "{} violated at step {} clause {}", self.id, v.step, v.clause)?;
                if let Some(p) = v.self_port {
                    write!(f, " self={p}")?;
                }
                if let Some(d) = v.slot {
                    write!(f, " slot={d}")?;
                }
                write!(f, " time={} mlt={}", v.env.time, v.env.mlt)
            }
        }
    }
}

fn holds(f: &Formula, env: &Env) -> Result<bool, SimError> {
    match eval(f, env) {
        Ok(b) => Ok(b),
        Err(EvalError::Unbound(_)) => Ok(false),
        Err(e) => Err(e.into()),
    }
}

fn builtin(src: &str) -> Formula {
    parse_formula(src).expect("built-in formula")
}

/// Φ_B1 for every `self` port over `history` (`history[0]` is the initial world).
pub fn check_phi_b1(history: &[Env], sw: &SwitchConfig) -> Result<InvariantReport, SimError> {
    let arrived = builtin("(and (= loc (set (ing port))) (not (= port uplink-port)) (not (= (fld f da) (haddr port))))");
    let leaves = builtin("(and (in (egr self) loc) (ucast (fld f da)))");
    let consistent = builtin(
        "(or (exists i (and (= (fld f da) (entry mlt i mac)) (<= (- t (entry mlt i t)) mto) (= self (entry mlt i port)))) \
         (forall i (or (not (= (fld f da) (entry mlt i mac))) (not (<= (- t (entry mlt i t)) mto)))))",
    );
    for (i, w) in history.windows(2).enumerate() {
        if !holds(&arrived, &w[0])? {
            continue;
        }
        for p in sw.ports() {
            let next = w[1].with_self(p);
            if holds(&leaves, &next)? && !holds(&consistent, &next)? {
                let v = Violation { step: i + 1, clause: "entry-port", self_port: Some(p), slot: None, env: next.detached() };
                return Ok(InvariantReport::from(InvariantId::PhiB1, Some(v)));
            }
        }
    }
    Ok(InvariantReport::from(InvariantId::PhiB1, None))
}

/// An ingress at world `w` that satisfies the learning condition: `(port, sa, time)`.
fn learning_witness(w: &Env) -> Option<(Port, crate::netsim::frame::Mac, i64)> {
    let port = w.port?;
    let f = w.frame.as_ref()?;
    if !f.sa.is_unicast() {
        return None;
    }
    let room = w.mlt.entries.iter().any(|e| MacTable::is_expired(e, w.time, w.mto) || e.mac == f.sa);
    room.then_some((port, f.sa, w.time))
}

/// Φ_ML over `history` (`history[0]` is the initial world). A learning step `j`
/// witnesses entries at every `k >= j`, the learning position included, since an
/// entry learned at `j` is already present in world `j`.
pub fn check_phi_ml(history: &[Env]) -> InvariantReport {
    let witnesses: Vec<Option<(Port, crate::netsim::frame::Mac, i64)>> = history.iter().map(learning_witness).collect();
    for (k, w) in history.iter().enumerate() {
        let recent = || witnesses[..=k].iter().flatten().filter(|(_, _, tj)| w.time - tj <= w.mto);
        for (d, e) in w.mlt.entries.iter().enumerate() {
            let violation = |clause| Violation { step: k, clause, self_port: None, slot: Some(d), env: w.detached() };
            let live = !MacTable::is_expired(e, w.time, w.mto);
            if live && !recent().any(|&(p, m, tj)| p == e.port && m == e.mac && e.t == tj) {
                return InvariantReport::from(InvariantId::PhiMl, Some(violation("forward")));
            }
            if recent().any(|&(p, m, tj)| e.t == tj && !(live && e.mac == m && e.port == p)) {
                return InvariantReport::from(InvariantId::PhiMl, Some(violation("backward")));
            }
        }
    }
    InvariantReport::from(InvariantId::PhiMl, None)
}

/// Add-one smoothed profile of `atoms` over the positions of `events`, evaluated with
/// `self = self_port`. An atom reading an unbound variable counts as false.
pub fn estimate_profile(
    events: &[TraceEvent],
    atoms: &BTreeSet<Formula>,
    sw: &SwitchConfig,
    self_port: Port,
    support: usize,
) -> Result<DistributionProfile, SimError> {
    let envs = environments(events, sw, self_port)?;
    let observations = envs
        .iter()
        .map(|env| atoms.iter().map(|a| Ok((a.clone(), holds(a, env)?))).collect::<Result<Assignment, SimError>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DistributionProfile::estimate(atoms, &observations, support))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub trace: usize,
    pub self_port: Port,
    pub product: Outcome,
    pub components: Outcome,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub traces: usize,
    /// One run per trace and `self` port.
    pub runs: usize,
    pub accepted: usize,
    pub stuck: usize,
    pub divergences: Vec<Divergence>,
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "traces {} runs {} accepted {} stuck {} divergences {}",
            self.traces,
            self.runs,
            self.accepted,
            self.stuck,
            self.divergences.len()
        )?;
        for d in &self.divergences {
            writeln!(f, "  trace {} self={}: product {:?}, components {:?}: {}", d.trace, d.self_port, d.product, d.components, d.detail)?;
        }
        Ok(())
    }
}

/// Runs `product` and each component on every trace for every `self` port and compares
/// the product's outcome with the conjunction of component outcomes (earliest stuck
/// index), and the visited product states with the component state tuples.
pub fn equivalence_check(
    product: &LambdaSFA,
    components: &[LambdaSFA],
    traces: &[Vec<TraceEvent>],
    sw: &SwitchConfig,
) -> Result<EquivalenceReport, SimError> {
    let mut report = EquivalenceReport { traces: traces.len(), ..Default::default() };
    for (ti, trace) in traces.iter().enumerate() {
        for p in sw.ports() {
            report.runs += 1;
            let r = run(product, trace, sw, p)?;
            let cs = components.iter().map(|c| run(c, trace, sw, p)).collect::<Result<Vec<_>, _>>()?;
            let joint = cs
                .iter()
                .filter_map(|c| c.stuck_at())
                .min()
                .map_or(Outcome::Accepted, |index| Outcome::Stuck { index });
            let mut detail = String::new();
            if r.outcome != joint {
                detail = "outcomes differ".into();
            } else if let Some(i) = (0..r.states.len()).find(|&i| r.states[i] != cs.iter().map(|c| c.states[i].as_str()).collect::<String>()) {
                detail = format!("state {} at position {i} is not the component tuple", r.states[i]);
            }
            if detail.is_empty() {
                if r.accepted() {
                    report.accepted += 1;
                } else {
                    report.stuck += 1;
                }
            } else {
                report.divergences.push(Divergence { trace: ti, self_port: p, product: r.outcome, components: joint, detail });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{environments_from_initial, parse_machine};
    use crate::netsim::frame::Mac;
    use crate::netsim::mac_table::MacEntry;
    use crate::netsim::trace::parse_trace;
    use crate::synth::ratio;

    const ARP_EXCHANGE: &str = "10 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | arpreq | {2i}\n\
                          11 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | arpreq | {3e,4e}\n\
                          12 | 04:0c:ce:d2:08:6c | 7c:d1:c3:e8:a4:67 | arpreply | {3i}\n\
                          13 | 04:0c:ce:d2:08:6c | 7c:d1:c3:e8:a4:67 | arpreply | {2e}\n";

    fn history(src: &str, sw: &SwitchConfig) -> Vec<Env> {
        environments_from_initial(&parse_trace(src).unwrap(), sw, 1).unwrap()
    }

    #[test]
    fn arp_exchange_satisfies_both() {
        let sw = SwitchConfig::desk();
        let h = history(ARP_EXCHANGE, &sw);
        assert!(check_phi_ml(&h).holds);
        assert!(check_phi_b1(&h, &sw).unwrap().holds);
    }

    #[test]
    fn injected_entry_breaks_phi_ml_forward() {
        let sw = SwitchConfig::desk();
        let mut h = history(ARP_EXCHANGE, &sw);
        let rogue = MacEntry { mac: "7c:d1:c3:e8:a4:99".parse().unwrap(), t: h[2].time, port: 4 };
        for w in &mut h[2..] {
            w.mlt.entries[3] = rogue;
        }
        let r = check_phi_ml(&h);
        let v = r.first_violation.unwrap();
        assert_eq!((v.step, v.clause, v.slot), (2, "forward", Some(3)));
    }

    #[test]
    fn expired_entries_are_exempt() {
        let sw = SwitchConfig::new(4, 1, 2, 4);
        let src = "10 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | data | {2i}\n\
                   11 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | data | {3e,4e}\n\
                   14 | ff:ff:ff:ff:ff:ff | 7c:d1:c3:e8:a4:67 | data | {3i}\n\
                   15 | ff:ff:ff:ff:ff:ff | 7c:d1:c3:e8:a4:67 | data | {2e,4e}\n";
        let h = history(src, &sw);
        assert_eq!(h[3].mlt.entries[0].mac, "7c:d1:c3:e8:a4:67".parse::<Mac>().unwrap());
        assert!(check_phi_ml(&h).holds);
    }

    #[test]
    fn forwarding_away_from_learned_port_breaks_phi_b1() {
        let sw = SwitchConfig::desk();
        let src = ARP_EXCHANGE.replace("{2e}", "{4e}");
        let r = check_phi_b1(&history(&src, &sw), &sw).unwrap();
        let v = r.first_violation.unwrap();
        assert_eq!((v.step, v.clause, v.self_port), (4, "entry-port", Some(4)));
    }

    #[test]
    fn smoothing() {
        let sw = SwitchConfig::desk();
        let bcast = parse_formula("(bcast (fld f da))").unwrap();
        let line = |t: i64| format!("{t} | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | data | {{2i}}\n");
        let src: String = (0..14).map(|i| line(10 + i)).collect();
        let tr = parse_trace(&src).unwrap();
        let p = estimate_profile(&tr, &BTreeSet::from([bcast.clone()]), &sw, 1, 0).unwrap();
        assert_eq!(p.base[&bcast], ratio(15, 16));
        let p = estimate_profile(&tr, &BTreeSet::new(), &sw, 1, 0).unwrap();
        assert!(p.base.is_empty());
        let mixed: String = (0..14)
            .map(|i| if i < 11 { line(10 + i) } else { format!("{} | {} | 04:0c:ce:d2:08:6c | data | {{2i}}\n", 10 + i, Mac::port_address(3)) })
            .collect();
        let p = estimate_profile(&parse_trace(&mixed).unwrap(), &BTreeSet::from([bcast.clone()]), &sw, 1, 0).unwrap();
        assert_eq!(p.base[&bcast], ratio(12, 16));
    }

    #[test]
    fn stuck_hub_instance_matches_product() {
        let h = parse_machine(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets/h.sfa")).unwrap()).unwrap();
        let i = parse_machine("(machine I (trans I1 I2 (= loc (set (ing port)))) (trans I2 I1 (subset loc egress)))").unwrap();
        let o = crate::oracle::SatOracle::internal(crate::oracle::DomainConfig::desk());
        let (p, _) = crate::machine::product_with_pruned(&[h.clone(), i.clone()], &o).unwrap();
        let sw = SwitchConfig::desk();
        let bad = parse_trace(&ARP_EXCHANGE.replace("{2e}", "{2e,3e}")).unwrap();
        let r = equivalence_check(&p, &[h, i], &[parse_trace(ARP_EXCHANGE).unwrap(), bad], &sw).unwrap();
        assert!(r.divergences.is_empty(), "{r}");
        assert_eq!((r.runs, r.accepted, r.stuck), (8, 7, 1));
    }
}
