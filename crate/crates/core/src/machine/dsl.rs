//! Machine description language.
//!
//! ```text
//! (machine NAME
//!   (params self)                   ; optional
//!   (states S…)                     ; optional, defaults to order of appearance
//!   (start S)                       ; optional, must be the first transition's source
//!   (tuple S (M1 S1) (M2 S2) …)     ; products only, one per state
//!   (trans FROM TO FORMULA)…)
//! ```
//!
//! [`to_dsl`] writes the canonical form, which parses back to an equal machine and
//! re-serializes byte for byte.

use std::fmt::Write as _;

use crate::error::ParseError;
use crate::formula::parse::formula_from_sexp;
use crate::sexp::{self, Sexp};

use super::{LambdaSFA, ProductState, Transition};

fn name_of(s: &Sexp, what: &str) -> Result<String, ParseError> {
    s.sym().map(str::to_string).ok_or_else(|| s.error(format!("expected {what}")))
}

pub fn parse_machine(src: &str) -> Result<LambdaSFA, ParseError> {
    let top = sexp::parse_one(src)?;
    let items = top.list().ok_or_else(|| top.error("expected `(machine …)`"))?;
    if items.first().and_then(Sexp::sym) != Some("machine") {
        return Err(top.error("expected `(machine …)`"));
    }
    let name = name_of(items.get(1).ok_or_else(|| top.error("machine needs a name"))?, "a machine name")?;

    let mut params = Vec::new();
    let mut states: Option<(Vec<String>, &Sexp)> = None;
    let mut start: Option<(String, &Sexp)> = None;
    let mut tuples = Vec::new();
    let mut transitions = Vec::new();
    for clause in &items[2..] {
        let parts = clause.list().ok_or_else(|| clause.error("expected a clause"))?;
        let head = parts.first().and_then(Sexp::sym).unwrap_or("");
        let args = &parts[1.min(parts.len())..];
        match head {
            "params" => {
                params = args.iter().map(|a| name_of(a, "a parameter name")).collect::<Result<_, _>>()?;
            }
            "states" => {
                let names = args.iter().map(|a| name_of(a, "a state name")).collect::<Result<_, _>>()?;
                states = Some((names, clause));
            }
            "start" => {
                let [s] = args else {
                    return Err(clause.error("`start` takes one state"));
                };
                start = Some((name_of(s, "a state name")?, clause));
            }
            "tuple" => {
                let (first, rest) = args.split_first().ok_or_else(|| clause.error("`tuple` needs a state"))?;
                let mut components = Vec::new();
                for c in rest {
                    match c.list() {
                        Some([m, s]) => components.push((name_of(m, "a machine name")?, name_of(s, "a state name")?)),
                        _ => return Err(c.error("expected `(MACHINE STATE)`")),
                    }
                }
                tuples.push(ProductState { name: name_of(first, "a state name")?, components });
            }
            "trans" => {
                let [from, to, label] = args else {
                    return Err(clause.error("`trans` takes a source, a target and a formula"));
                };
                transitions.push((
                    Transition::new(name_of(from, "a state name")?, name_of(to, "a state name")?, formula_from_sexp(label)?),
                    clause,
                ));
            }
            other => return Err(clause.error(format!("unknown clause `{other}`"))),
        }
    }

    let (first, _) = transitions.first().ok_or_else(|| top.error("machine has no transitions"))?;
    if let Some((s, at)) = &start {
        if *s != first.from {
            return Err(at.error(format!("start state `{s}` must be the source of the first transition")));
        }
    }
    for (t, at) in &transitions {
        if t.label.strip_lambda().binds_snapshot() || contains_inner_lambda(t.label.strip_lambda()) {
            return Err(at.error("a lambda binder may only appear at the outermost position"));
        }
    }
    let mut m = LambdaSFA::new(name, params, transitions.into_iter().map(|(t, _)| t).collect())
        .map_err(|e| ParseError::msg(e.to_string()))?;
    if let Some((declared, at)) = states {
        for s in &m.states {
            if !declared.contains(s) {
                return Err(at.error(format!("state `{s}` is used but not declared")));
            }
        }
        m.states = declared;
    }
    m.tuples = tuples;
    Ok(m)
}

fn contains_inner_lambda(f: &crate::formula::Formula) -> bool {
    use crate::formula::Formula as F;
    match f {
        F::Lambda(_) => true,
        F::Not(g) | F::Exists(_, g) | F::Forall(_, g) => contains_inner_lambda(g),
        F::And(gs) | F::Or(gs) => gs.iter().any(contains_inner_lambda),
        F::Implies(a, b) => contains_inner_lambda(a) || contains_inner_lambda(b),
        F::True | F::False | F::Atom(_) => false,
    }
}

pub fn to_dsl(m: &LambdaSFA) -> String {
    let mut s = format!("(machine {}\n", m.name);
    if !m.params.is_empty() {
        let _ = writeln!(s, "  (params {})", m.params.join(" "));
    }
    let _ = writeln!(s, "  (states {})", m.states.join(" "));
    let _ = writeln!(s, "  (start {})", m.start);
    for p in &m.tuples {
        let comps: Vec<String> = p.components.iter().map(|(a, b)| format!("({a} {b})")).collect();
        let _ = writeln!(s, "  (tuple {} {})", p.name, comps.join(" "));
    }
    for (i, t) in m.transitions.iter().enumerate() {
        let close = if i + 1 == m.transitions.len() { ")" } else { "" };
        let _ = writeln!(s, "  (trans {} {}\n    {}){close}", t.from, t.to, t.label);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const I: &str = "(machine I\n  (states I1 I2)\n  (start I1)\n  (trans I1 I2\n    (= loc (set (ing port))))\n  (trans I2 I1\n    (subset loc egress)))\n";

    #[test]
    fn canonical_round_trip() {
        let m = parse_machine(I).unwrap();
        assert_eq!(m.start, "I1");
        assert_eq!(m.transitions.len(), 2);
        assert_eq!(to_dsl(&m), I);
        assert_eq!(parse_machine(&to_dsl(&m)).unwrap(), m);
    }

    #[test]
    fn start_must_lead() {
        let e = parse_machine("(machine X (start B) (trans A B true))").unwrap_err();
        assert!(e.message.contains("first transition"), "{e}");
        assert_eq!((e.line, e.col), (1, 12));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_machine("(machine X\n  (trans A B (ucast (fld port da))))").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_machine("(machine X (trans A B (and (lambda x true))))").is_err());
        assert!(parse_machine("(machine X (states A) (trans A B true))").is_err());
    }
}
