//! Disjunctive normal form over opaque atoms.
//!
//! Quantified subformulas are not expanded: each `∃i.φ` becomes a single atom whose
//! body is in negation normal form with bound indices renamed by nesting depth, and
//! `∀i.φ` is stored as `¬∃i.¬φ`. Two spellings of the same quantified condition thus
//! share one atom.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::oracle::{OracleError, SatOracle};

use super::ast::Formula;
use super::FormulaError;

/// Default cap on the number of disjuncts produced by distribution.
pub const DEFAULT_DNF_CAP: usize = 4096;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    pub atom: Formula,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Formula) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Formula) -> Self {
        Literal { atom, positive: false }
    }

    pub fn negated(&self) -> Literal {
        Literal { atom: self.atom.clone(), positive: !self.positive }
    }

    pub fn to_formula(&self) -> Formula {
        if self.positive {
            self.atom.clone()
        } else {
            Formula::not(self.atom.clone())
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

pub type Disjunct = BTreeSet<Literal>;

pub fn conjunction(d: &Disjunct) -> Formula {
    Formula::and(d.iter().map(Literal::to_formula))
}

fn contradictory(d: &Disjunct) -> bool {
    d.iter().any(|l| l.positive && d.contains(&l.negated()))
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DisjunctSet {
    pub disjuncts: Vec<Disjunct>,
}

impl DisjunctSet {
    pub fn to_formula(&self) -> Formula {
        Formula::or(self.disjuncts.iter().map(conjunction))
    }

    pub fn is_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.disjuncts.len()
    }

    /// Distinct atoms in first-occurrence order.
    pub fn atoms(&self) -> Vec<Formula> {
        let mut out: Vec<Formula> = Vec::new();
        for l in self.disjuncts.iter().flatten() {
            if !out.contains(&l.atom) {
                out.push(l.atom.clone());
            }
        }
        out
    }
}

impl fmt::Display for DisjunctSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

fn index_name(depth: usize) -> String {
    const NAMES: [&str; 4] = ["i", "j", "k", "l"];
    NAMES.get(depth).map(|s| s.to_string()).unwrap_or_else(|| format!("i{depth}"))
}

/// Gives every binder a unique name so the depth-based renaming cannot capture.
fn rename_binders(f: &mut Formula, fresh: &mut usize) {
    match f {
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            *fresh += 1;
            let new = format!("_q{fresh}");
            body.rename_index(v, &new);
            *v = new;
            rename_binders(body, fresh);
        }
        Formula::Not(g) | Formula::Lambda(g) => rename_binders(g, fresh),
        Formula::And(gs) | Formula::Or(gs) => gs.iter_mut().for_each(|g| rename_binders(g, fresh)),
        Formula::Implies(a, b) => {
            rename_binders(a, fresh);
            rename_binders(b, fresh);
        }
        Formula::True | Formula::False | Formula::Atom(_) => {}
    }
}

fn canonical_binders(f: &mut Formula, depth: usize) {
    match f {
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            let new = index_name(depth);
            body.rename_index(v, &new);
            *v = new;
            canonical_binders(body, depth + 1);
        }
        Formula::Not(g) | Formula::Lambda(g) => canonical_binders(g, depth),
        Formula::And(gs) | Formula::Or(gs) => gs.iter_mut().for_each(|g| canonical_binders(g, depth)),
        Formula::Implies(a, b) => {
            canonical_binders(a, depth);
            canonical_binders(b, depth);
        }
        Formula::True | Formula::False | Formula::Atom(_) => {}
    }
}

/// Negation normal form; quantifiers become `∃` (a `∀` turns into `¬∃¬`).
fn nnf(f: &Formula, negate: bool) -> Result<Formula, FormulaError> {
    Ok(match f {
        Formula::True => if negate { Formula::False } else { Formula::True },
        Formula::False => if negate { Formula::True } else { Formula::False },
        Formula::Atom(_) => {
            if negate {
                Formula::not(f.clone())
            } else {
                f.clone()
            }
        }
        Formula::Not(g) => nnf(g, !negate)?,
        Formula::And(gs) | Formula::Or(gs) => {
            let parts = gs.iter().map(|g| nnf(g, negate)).collect::<Result<Vec<_>, _>>()?;
            if matches!(f, Formula::And(_)) != negate {
                Formula::and(parts)
            } else {
                Formula::or(parts)
            }
        }
        Formula::Implies(a, b) => {
            let na = nnf(a, !negate)?;
            let nb = nnf(b, negate)?;
            if negate {
                Formula::and([na, nb])
            } else {
                Formula::or([na, nb])
            }
        }
        Formula::Exists(v, body) => {
            let e = Formula::Exists(v.clone(), Box::new(nnf(body, false)?));
            if negate {
                Formula::not(e)
            } else {
                e
            }
        }
        Formula::Forall(v, body) => {
            let e = Formula::Exists(v.clone(), Box::new(nnf(body, true)?));
            if negate {
                e
            } else {
                Formula::not(e)
            }
        }
        Formula::Lambda(_) => return Err(FormulaError::NestedLambda),
    })
}

/// Canonical negation normal form of a formula with its outer λ removed.
pub fn normalize(f: &Formula) -> Result<Formula, FormulaError> {
    let mut g = f.strip_lambda().clone();
    rename_binders(&mut g, &mut 0);
    canonical_binders(&mut g, 0);
    nnf(&g, false)
}

fn literal_of(f: &Formula) -> Option<Literal> {
    match f {
        Formula::Atom(_) | Formula::Exists(..) => Some(Literal::pos(f.clone())),
        Formula::Not(g) if matches!(**g, Formula::Atom(_) | Formula::Exists(..)) => {
            Some(Literal::neg((**g).clone()))
        }
        _ => None,
    }
}

fn distribute(f: &Formula, cap: usize) -> Result<Vec<Disjunct>, FormulaError> {
    if let Some(l) = literal_of(f) {
        return Ok(vec![BTreeSet::from([l])]);
    }
    match f {
        Formula::True => Ok(vec![BTreeSet::new()]),
        Formula::False => Ok(vec![]),
        Formula::Or(gs) => {
            let mut out: Vec<Disjunct> = Vec::new();
            for g in gs {
                for d in distribute(g, cap)? {
                    if !out.contains(&d) {
                        out.push(d);
                    }
                }
                if out.len() > cap {
                    return Err(FormulaError::DnfTooLarge { cap });
                }
            }
            Ok(out)
        }
        Formula::And(gs) => {
            let mut acc: Vec<Disjunct> = vec![BTreeSet::new()];
            for g in gs {
                let rhs = distribute(g, cap)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &rhs {
                        let d: Disjunct = a.union(b).cloned().collect();
                        if !contradictory(&d) && !next.contains(&d) {
                            next.push(d);
                        }
                    }
                }
                if next.len() > cap {
                    return Err(FormulaError::DnfTooLarge { cap });
                }
                acc = next;
            }
            Ok(acc)
        }
        _ => unreachable!("input is in negation normal form"),
    }
}

/// Equivalent disjunctive normal form. Complementary disjuncts are dropped; more than
/// `cap` disjuncts is an error.
pub fn to_dnf(f: &Formula, cap: usize) -> Result<DisjunctSet, FormulaError> {
    let n = normalize(f)?;
    let disjuncts = distribute(&n, cap)?.into_iter().filter(|d| !contradictory(d)).collect();
    Ok(DisjunctSet { disjuncts })
}

/// Distinct opaque atoms of a formula, as the DNF machinery sees them.
pub fn atoms(f: &Formula) -> Result<BTreeSet<Formula>, FormulaError> {
    fn walk(f: &Formula, out: &mut BTreeSet<Formula>) {
        if let Some(l) = literal_of(f) {
            out.insert(l.atom);
            return;
        }
        match f {
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| walk(g, out)),
            Formula::Not(g) => walk(g, out),
            _ => {}
        }
    }
    let mut out = BTreeSet::new();
    walk(&normalize(f)?, &mut out);
    Ok(out)
}

struct Cached<'a> {
    oracle: &'a SatOracle,
    memo: HashMap<Formula, bool>,
}

impl Cached<'_> {
    fn sat(&mut self, f: Formula) -> Result<bool, OracleError> {
        if let Some(&r) = self.memo.get(&f) {
            return Ok(r);
        }
        let r = self.oracle.is_satisfiable(&f)?;
        self.memo.insert(f, r);
        Ok(r)
    }
}

fn remove_subsumed(ds: &mut Vec<Disjunct>) -> bool {
    let before = ds.len();
    let mut keep: Vec<Disjunct> = Vec::with_capacity(ds.len());
    for (i, d) in ds.iter().enumerate() {
        let absorbed = ds.iter().enumerate().any(|(j, e)| {
            j != i && e.is_subset(d) && (e.len() < d.len() || j < i)
        });
        if !absorbed {
            keep.push(d.clone());
        }
    }
    *ds = keep;
    ds.len() != before
}

/// The literal on which two disjuncts clash, if they clash on exactly one.
fn single_clash(a: &Disjunct, b: &Disjunct) -> Option<Literal> {
    let mut clash = None;
    for l in a {
        if b.contains(&l.negated()) {
            if clash.is_some() {
                return None;
            }
            clash = Some(l.clone());
        }
    }
    clash
}

fn merge_pass(ds: &mut Vec<Disjunct>) -> bool {
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            let Some(l) = single_clash(&ds[i], &ds[j]) else { continue };
            let mut a = ds[i].clone();
            let mut b = ds[j].clone();
            a.remove(&l);
            b.remove(&l.negated());
            if a == b {
                ds[i] = a;
                ds.remove(j);
                return true;
            }
        }
    }
    false
}

fn consensus_pass(ds: &mut Vec<Disjunct>) -> bool {
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            let Some(l) = single_clash(&ds[i], &ds[j]) else { continue };
            let mut c: Disjunct = ds[i].clone();
            c.remove(&l);
            c.extend(ds[j].iter().filter(|m| **m != l.negated()).cloned());
            let useful = ds.iter().any(|d| c.is_subset(d) && c.len() < d.len());
            if useful && !ds.contains(&c) {
                ds.push(c);
                return true;
            }
        }
    }
    false
}

/// Simplifies `d` to a fixpoint of: unsatisfiable-disjunct removal, redundant-literal
/// removal, absorption, merging, and consensus. The result is equivalent to `d` on
/// every valuation the oracle's domain admits.
pub fn minimize_dnf(d: &DisjunctSet, oracle: &SatOracle) -> Result<DisjunctSet, OracleError> {
    let mut cache = Cached { oracle, memo: HashMap::new() };
    let mut ds: Vec<Disjunct> = Vec::new();
    for x in &d.disjuncts {
        if !ds.contains(x) {
            ds.push(x.clone());
        }
    }
    loop {
        let mut changed = false;

        let mut kept = Vec::with_capacity(ds.len());
        for x in ds.drain(..) {
            if !contradictory(&x) && cache.sat(conjunction(&x))? {
                kept.push(x);
            } else {
                changed = true;
            }
        }
        ds = kept;

        for x in ds.iter_mut() {
            let lits: Vec<Literal> = x.iter().cloned().collect();
            for l in lits {
                if x.len() < 2 {
                    break;
                }
                let mut rest = x.clone();
                rest.remove(&l);
                let probe = Formula::and([conjunction(&rest), l.negated().to_formula()]);
                if !cache.sat(probe)? {
                    *x = rest;
                    changed = true;
                }
            }
        }

        let mut dedup: Vec<Disjunct> = Vec::with_capacity(ds.len());
        for x in ds.drain(..) {
            if !dedup.contains(&x) {
                dedup.push(x);
            }
        }
        ds = dedup;

        changed |= remove_subsumed(&mut ds);
        while merge_pass(&mut ds) {
            changed = true;
        }
        if !changed && consensus_pass(&mut ds) {
            changed = true;
        }
        if !changed {
            return Ok(DisjunctSet { disjuncts: ds });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse::parse_formula;
    use crate::oracle::DomainConfig;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn shown(d: &DisjunctSet) -> Vec<String> {
        d.disjuncts.iter().map(|x| conjunction(x).to_string()).collect()
    }

    #[test]
    fn distributes_conjunction_over_disjunction() {
        let d = to_dnf(&f("(and a (or b c))"), DEFAULT_DNF_CAP).unwrap();
        assert_eq!(shown(&d), vec!["(and a b)", "(and a c)"]);
    }

    #[test]
    fn minimizes_by_merging_and_drops_contradictions() {
        let oracle = SatOracle::internal(DomainConfig::desk());
        let d = to_dnf(&f("(or (and a b) (and a (not b)) c)"), DEFAULT_DNF_CAP).unwrap();
        assert_eq!(shown(&minimize_dnf(&d, &oracle).unwrap()), vec!["a", "c"]);
        let d = DisjunctSet {
            disjuncts: vec![BTreeSet::from([
                Literal::pos(f("(ucast (fld f da))")),
                Literal::neg(f("(ucast (fld f da))")),
            ])],
        };
        assert!(minimize_dnf(&d, &oracle).unwrap().is_empty());
    }

    #[test]
    fn atoms_are_canonical() {
        let a = atoms(&f("(or (and c b) (and fx b) e)")).unwrap();
        assert_eq!(a.len(), 4);
        let swapped = atoms(&f("(= uplink-port port)")).unwrap();
        assert_eq!(swapped, atoms(&f("(= port uplink-port)")).unwrap());
        assert!(atoms(&Formula::True).unwrap().is_empty());
        assert_eq!(atoms(&f("(and (ucast (fld f da)) (not (ucast (fld f da))))")).unwrap().len(), 1);
    }

    #[test]
    fn quantifiers_are_opaque_and_canonically_named() {
        let a = f("(forall q (not (= (entry mlt q mac) (fld f sa))))");
        let b = f("(not (exists z (= (entry mlt z mac) (fld f sa))))");
        assert_eq!(atoms(&a).unwrap(), atoms(&b).unwrap());
        let d = to_dnf(&a, DEFAULT_DNF_CAP).unwrap();
        assert_eq!(shown(&d), vec!["(not (exists i (= (fld f sa) (entry mlt i mac))))"]);
    }

    #[test]
    fn cap_is_an_explicit_failure() {
        let big = f("(and (or a b) (or c d) (or e g) (or h m))");
        assert!(matches!(to_dnf(&big, 8), Err(FormulaError::DnfTooLarge { cap: 8 })));
        assert_eq!(to_dnf(&big, 16).unwrap().len(), 16);
    }
}
