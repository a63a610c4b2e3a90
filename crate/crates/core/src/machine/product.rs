//! Tensor product of λ-SFA.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use crate::formula::Formula;
use crate::oracle::SatOracle;

use super::{LambdaSFA, MachineError, ProductState, Transition};

pub fn product(machines: &[LambdaSFA], oracle: &SatOracle) -> Result<LambdaSFA, MachineError> {
    product_with_pruned(machines, oracle).map(|(m, _)| m)
}

fn components_of(m: &LambdaSFA, state: &str) -> Vec<(String, String)> {
    match m.tuple(state) {
        Some(p) => p.components.clone(),
        None => vec![(m.name.clone(), state.to_string())],
    }
}

/// The conjunction of component labels, bound by one shared snapshot when any
/// component binds.
pub fn conjoin(labels: &[&Formula]) -> Formula {
    let body = Formula::and(labels.iter().map(|l| l.strip_lambda().clone()));
    if labels.iter().any(|l| l.binds_snapshot()) {
        Formula::Lambda(Box::new(body))
    } else {
        body
    }
}

/// Reachable product plus every raw transition removed as unsatisfiable.
///
/// Tuples are explored breadth first; transitions of one tuple are combined in
/// order of the component transition indices.
pub fn product_with_pruned(machines: &[LambdaSFA], oracle: &SatOracle) -> Result<(LambdaSFA, Vec<Transition>), MachineError> {
    if machines.is_empty() {
        return Err(MachineError::NoFactors);
    }
    for (i, a) in machines.iter().enumerate() {
        a.check_structure()?;
        let va = a.vocabulary();
        for b in &machines[i + 1..] {
            let vb = b.vocabulary();
            if !va.is_empty() && !vb.is_empty() && va.is_disjoint(&vb) {
                return Err(MachineError::VocabularyMismatch { a: a.name.clone(), b: b.name.clone() });
            }
        }
    }

    let name = machines.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join("x");
    let mut params: Vec<String> = Vec::new();
    for m in machines {
        for p in &m.params {
            if !params.contains(p) {
                params.push(p.clone());
            }
        }
    }
    let tuple_name = |t: &[String]| t.concat();

    let start: Vec<String> = machines.iter().map(|m| m.start.clone()).collect();
    let mut seen: HashSet<Vec<String>> = HashSet::from([start.clone()]);
    let mut order = vec![start.clone()];
    let mut queue = VecDeque::from([start]);
    let mut kept = Vec::new();
    let mut pruned = Vec::new();

    while let Some(tuple) = queue.pop_front() {
        let outs: Vec<Vec<&Transition>> =
            machines.iter().zip(&tuple).map(|(m, s)| m.outgoing(s).map(|(_, t)| t).collect()).collect();
        if outs.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; outs.len()];
        loop {
            let picks: Vec<&Transition> = idx.iter().zip(&outs).map(|(&i, o)| o[i]).collect();
            let labels: Vec<&Formula> = picks.iter().map(|t| &t.label).collect();
            let target: Vec<String> = picks.iter().map(|t| t.to.clone()).collect();
            let tr = Transition::new(tuple_name(&tuple), tuple_name(&target), conjoin(&labels));
            if oracle.is_satisfiable(tr.label.strip_lambda())? {
                if seen.insert(target.clone()) {
                    order.push(target.clone());
                    queue.push_back(target);
                }
                kept.push(tr);
            } else {
                pruned.push(tr);
            }
            if !advance(&mut idx, &outs) {
                break;
            }
        }
    }

    let mut m = LambdaSFA::new(name.clone(), params, kept).map_err(|_| MachineError::Empty { machine: name })?;
    m.states = order.iter().map(|t| tuple_name(t)).filter(|s| m.states.contains(s)).collect();
    m.tuples = order
        .iter()
        .filter(|t| m.states.contains(&tuple_name(t)))
        .map(|t| ProductState {
            name: tuple_name(t),
            components: machines.iter().zip(t).flat_map(|(mm, s)| components_of(mm, s)).collect(),
        })
        .collect();
    Ok((m, pruned))
}

/// Mixed-radix increment, last factor fastest; false after the final combination.
fn advance(idx: &mut [usize], outs: &[Vec<&Transition>]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < outs[k].len() {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// Human-readable listing: one block per transition, label below its arrow.
pub fn report(m: &LambdaSFA) -> String {
    let mut s = format!("{}: {} states, {} transitions\n", m.name, m.states.len(), m.transitions.len());
    let _ = writeln!(s, "states: {}", m.states.join(" "));
    let _ = writeln!(s, "start: {}", m.start);
    for t in &m.transitions {
        let _ = writeln!(s, "\n{} -> {}\n  {}", t.from, t.to, t.label);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::parse_machine;
    use crate::oracle::DomainConfig;

    #[test]
    fn unit_factor_is_identity() {
        let i = parse_machine("(machine I (trans I1 I2 (= loc (set (ing port)))) (trans I2 I1 (subset loc egress)))").unwrap();
        let one = parse_machine("(machine U (trans U U true))").unwrap();
        let o = SatOracle::internal(DomainConfig::desk());
        let p = product(&[i.clone(), one], &o).unwrap();
        assert_eq!(p.states, ["I1U", "I2U"]);
        assert_eq!(p.transitions.len(), 2);
        for (a, b) in p.transitions.iter().zip(&i.transitions) {
            assert_eq!(a.label, b.label);
        }
        assert_eq!(p.tuple("I2U").unwrap().components, [("I".into(), "I2".into()), ("U".into(), "U".into())]);
    }

    #[test]
    fn prunes_contradictions() {
        let a = parse_machine("(machine A (trans A1 A2 (= loc (set (ing port)))) (trans A1 A1 (subset loc egress)) (trans A2 A1 true))").unwrap();
        let b = parse_machine("(machine B (trans B1 B2 (subset loc egress)) (trans B2 B1 true))").unwrap();
        let o = SatOracle::internal(DomainConfig::desk());
        let (p, pruned) = product_with_pruned(&[a, b], &o).unwrap();
        assert_eq!(p.states, ["A1B1", "A1B2", "A2B1"]);
        assert!(pruned.iter().any(|t| t.to == "A2B2"));
        assert!(report(&p).starts_with("AxB: 3 states"));
    }

    #[test]
    fn disjoint_vocabularies_fail() {
        let a = parse_machine("(machine A (trans A A (ucast (fld f da))))").unwrap();
        let b = parse_machine("(machine B (trans B B (subset loc egress)))").unwrap();
        let o = SatOracle::internal(DomainConfig::desk());
        assert!(matches!(product(&[a, b], &o), Err(MachineError::VocabularyMismatch { .. })));
    }
}
