//! Plain exhaustive enumeration, kept independent of the search in `search.rs` so
//! the two can cross-check each other.
//!
//! Cells are assigned depth first, each over its full domain, and a branch is cut
//! only when the formula already evaluates to false. No grounding, normal form,
//! propagation or restarts are involved. A literal over an unbound `port` is false
//! under either polarity.

use std::collections::BTreeMap;

use crate::formula::eval::{eval_atom, unassigned_cells, Cell, EvalError, Scalar, Scope, Tri, Valuation};
use crate::formula::{Atom, Formula};
use crate::netsim::frame::{Mac, Port};

use super::{DomainConfig, Model, OracleError};

struct Assignment<'a> {
    cfg: &'a DomainConfig,
    haddrs: Vec<Mac>,
    vals: BTreeMap<Cell, Scalar>,
}

impl Valuation for Assignment<'_> {
    fn cell(&self, cell: &Cell) -> Result<Option<Scalar>, EvalError> {
        if let Cell::Port { snap } = cell {
            return match self.vals.get(&Cell::Loc { snap: *snap }) {
                None => Ok(None),
                Some(Scalar::Set(s)) => s.ingress_port().map(|p| Some(Scalar::Int(p))).ok_or_else(|| EvalError::Unbound(cell.to_string())),
                Some(other) => Err(EvalError::Malformed(format!("loc = {other}"))),
            };
        }
        Ok(self.vals.get(cell).cloned())
    }

    fn mlt_size(&self) -> usize {
        self.cfg.mlt_size
    }

    fn num_ports(&self) -> usize {
        self.cfg.num_ports
    }

    fn haddr(&self, port: Port) -> Option<Mac> {
        usize::try_from(port - 1).ok().and_then(|i| self.haddrs.get(i)).copied()
    }
}

fn and(parts: impl IntoIterator<Item = Result<Tri, EvalError>>) -> Result<Tri, EvalError> {
    let mut unknown = false;
    for r in parts {
        match r? {
            Tri::False => return Ok(Tri::False),
            Tri::Unknown => unknown = true,
            Tri::True => {}
        }
    }
    Ok(if unknown { Tri::Unknown } else { Tri::True })
}

fn or(parts: impl IntoIterator<Item = Result<Tri, EvalError>>) -> Result<Tri, EvalError> {
    and(parts.into_iter().map(|r| r.map(Tri::not))).map(Tri::not)
}

/// Value of `f` (negated when `neg`), pushing negation down to the literals.
fn value(v: &Assignment<'_>, f: &Formula, neg: bool, scope: &mut Scope) -> Result<Tri, EvalError> {
    match f {
        Formula::True => Ok((!neg).into()),
        Formula::False => Ok(neg.into()),
        Formula::Atom(a) => match eval_atom(v, a, scope) {
            Ok(t) => Ok(if neg { t.not() } else { t }),
            Err(EvalError::Unbound(_)) => Ok(Tri::False),
            Err(e) => Err(e),
        },
        Formula::Not(g) => value(v, g, !neg, scope),
        Formula::Lambda(g) => value(v, g, neg, scope),
        Formula::And(gs) | Formula::Or(gs) => {
            let vals: Vec<_> = gs.iter().map(|g| value(v, g, neg, scope)).collect();
            if matches!(f, Formula::And(_)) != neg {
                and(vals)
            } else {
                or(vals)
            }
        }
        Formula::Implies(a, b) => {
            let vals = [value(v, a, !neg, scope), value(v, b, neg, scope)];
            if neg {
                and(vals)
            } else {
                or(vals)
            }
        }
        Formula::Exists(name, body) | Formula::Forall(name, body) => {
            let mut vals = Vec::with_capacity(v.cfg.mlt_size);
            for i in 0..v.cfg.mlt_size {
                scope.push((name.clone(), i));
                vals.push(value(v, body, neg, scope));
                scope.pop();
            }
            if matches!(f, Formula::Forall(..)) != neg {
                and(vals)
            } else {
                or(vals)
            }
        }
    }
}

/// First atom, in formula order, that is still undecided.
fn undecided(v: &Assignment<'_>, f: &Formula, scope: &mut Scope) -> Result<Option<(Atom, Scope)>, EvalError> {
    match f {
        Formula::True | Formula::False => Ok(None),
        Formula::Atom(a) => Ok(match eval_atom(v, a, scope) {
            Ok(Tri::Unknown) => Some((a.clone(), scope.clone())),
            Ok(_) | Err(EvalError::Unbound(_)) => None,
            Err(e) => return Err(e),
        }),
        Formula::Not(g) | Formula::Lambda(g) => undecided(v, g, scope),
        Formula::And(gs) | Formula::Or(gs) => {
            for g in gs {
                if let Some(found) = undecided(v, g, scope)? {
                    return Ok(Some(found));
                }
            }
            Ok(None)
        }
        Formula::Implies(a, b) => match undecided(v, a, scope)? {
            Some(found) => Ok(Some(found)),
            None => undecided(v, b, scope),
        },
        Formula::Exists(name, body) | Formula::Forall(name, body) => {
            for i in 0..v.cfg.mlt_size {
                scope.push((name.clone(), i));
                let r = undecided(v, body, scope);
                scope.pop();
                if let Some(found) = r? {
                    return Ok(Some(found));
                }
            }
            Ok(None)
        }
    }
}

struct Walk<'a> {
    v: Assignment<'a>,
    f: &'a Formula,
    nodes: u64,
    budget: u64,
}

impl Walk<'_> {
    fn go(&mut self) -> Result<bool, OracleError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(OracleError::DomainTooLarge { budget: self.budget });
        }
        match value(&self.v, self.f, false, &mut Vec::new())? {
            Tri::True => return Ok(true),
            Tri::False => return Ok(false),
            Tri::Unknown => {}
        }
        let Some((atom, scope)) = undecided(&self.v, self.f, &mut Vec::new())? else {
            return Err(OracleError::Unsupported("undecided formula with no undecided atom".into()));
        };
        let cell = match unassigned_cells(&self.v, &atom, &scope)?.into_iter().next() {
            Some(Cell::Port { snap }) => Cell::Loc { snap },
            Some(c) => c,
            None => return Err(OracleError::Unsupported(format!("undecided atom {atom} reads no free cell"))),
        };
        for val in self.v.cfg.domain(&cell) {
            self.v.vals.insert(cell.clone(), val);
            if self.go()? {
                return Ok(true);
            }
        }
        self.v.vals.remove(&cell);
        Ok(false)
    }
}

/// A model of `f` found by exhaustive enumeration, or `None` if every assignment
/// falsifies it. Fails once `budget` nodes have been visited.
pub fn enumerate_model(f: &Formula, cfg: &DomainConfig, budget: u64) -> Result<Option<Model>, OracleError> {
    cfg.validate()?;
    let mut w = Walk { v: Assignment { cfg, haddrs: cfg.haddrs(), vals: BTreeMap::new() }, f, nodes: 0, budget };
    Ok(if w.go()? { Some(w.v.vals) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn sat(s: &str) -> bool {
        enumerate_model(&parse_formula(s).unwrap(), &DomainConfig::desk(), 10_000_000).unwrap().is_some()
    }

    #[test]
    fn small_formulas() {
        assert!(sat("(and (= port 2) (in (egr self) egress))"));
        assert!(!sat("(and (= port 2) (= port 3))"));
        assert!(!sat("(and (= loc (set (ing port))) (subset loc egress))"));
        assert!(!sat("(and (bcast (fld f da)) (ucast (fld f da)))"));
        assert!(sat("(exists i (and (= (entry mlt i mac) (fld f da)) (<= (- t (entry mlt i t)) mto)))"));
        assert!(!sat("(and (= loc (set (egr 1))) (not (= port 1)))"));
    }

    #[test]
    fn models_satisfy() {
        let f = parse_formula("(and (= port (x port)) (not (= (fld f da) (fld (x f) da))))").unwrap();
        let m = enumerate_model(&f, &DomainConfig::desk(), 1_000_000).unwrap().unwrap();
        assert_ne!(m[&Cell::Frame { snap: false, field: crate::formula::ast::FrameField::Da }], m[&Cell::Frame { snap: true, field: crate::formula::ast::FrameField::Da }]);
    }
}
