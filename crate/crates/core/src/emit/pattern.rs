//! Atom shapes with placeholders.
//!
//! `_` matches any subexpression; `?name` matches any subexpression and captures
//! it, and a repeated `?name` must match the same text. Both sides of `=` may be
//! matched in either order.

use std::fmt;

use crate::error::ParseError;
use crate::formula::Formula;
use crate::sexp::{self, Sexp};

#[derive(Clone, Debug)]
pub struct Pattern {
    sexp: Sexp,
    /// Capture names in order of first appearance.
    names: Vec<String>,
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

impl Eq for Pattern {}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.sexp.fmt(f)
    }
}

fn capture_name(s: &Sexp) -> Option<&str> {
    s.sym().filter(|t| t.len() > 1 && t.starts_with('?')).map(|t| &t[1..])
}

fn collect_names(s: &Sexp, out: &mut Vec<String>) {
    if let Some(n) = capture_name(s) {
        if !out.iter().any(|m| m == n) {
            out.push(n.to_string());
        }
    }
    for item in s.list().unwrap_or_default() {
        collect_names(item, out);
    }
}

impl Pattern {
    pub fn from_sexp(sexp: Sexp) -> Self {
        let mut names = Vec::new();
        collect_names(&sexp, &mut names);
        Pattern { sexp, names }
    }

    pub fn parse(src: &str) -> Result<Self, ParseError> {
        Ok(Pattern::from_sexp(sexp::parse_one(src)?))
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    /// Captured subexpressions in order of first appearance, if `f` matches.
    pub fn matches(&self, f: &Formula) -> Option<Vec<String>> {
        let target = to_sexp(f);
        self.matches_sexp(&target)
    }

    pub fn matches_sexp(&self, target: &Sexp) -> Option<Vec<String>> {
        let mut caps: Vec<(String, String)> = Vec::new();
        if !match_into(&self.sexp, target, &mut caps) {
            return None;
        }
        Some(
            self.names
                .iter()
                .map(|n| caps.iter().find(|(m, _)| m == n).map(|(_, v)| v.clone()).unwrap_or_default())
                .collect(),
        )
    }
}

pub fn to_sexp(f: &Formula) -> Sexp {
    sexp::parse_one(&f.to_string()).expect("formulas print as s-expressions")
}

fn match_into(pat: &Sexp, s: &Sexp, caps: &mut Vec<(String, String)>) -> bool {
    if pat.sym() == Some("_") {
        return true;
    }
    if let Some(name) = capture_name(pat) {
        let text = s.to_string();
        return match caps.iter().find(|(n, _)| n == name) {
            Some((_, v)) => *v == text,
            None => {
                caps.push((name.to_string(), text));
                true
            }
        };
    }
    match (pat, s) {
        (Sexp::Sym { text: a, .. }, Sexp::Sym { text: b, .. }) => a == b,
        (Sexp::List { items: ps, .. }, Sexp::List { items: xs, .. }) => {
            if ps.len() != xs.len() {
                return false;
            }
            let mark = caps.len();
            if ps.iter().zip(xs).all(|(p, x)| match_into(p, x, caps)) {
                return true;
            }
            caps.truncate(mark);
            if ps.len() == 3 && ps[0].sym() == Some("=") && xs[0].sym() == Some("=") {
                if match_into(&ps[1], &xs[2], caps) && match_into(&ps[2], &xs[1], caps) {
                    return true;
                }
                caps.truncate(mark);
            }
            false
        }
        _ => false,
    }
}

/// Whether `s` reads the unsnapshotted variable `name` anywhere outside an `(x …)` form.
pub fn mentions_current(s: &Sexp, name: &str) -> bool {
    match s {
        Sexp::Sym { text, .. } => text == name,
        Sexp::List { items, .. } => {
            if items.first().and_then(Sexp::sym) == Some("x") {
                return false;
            }
            items.iter().any(|i| mentions_current(i, name))
        }
    }
}

/// Replaces every unsnapshotted occurrence of the symbol `name` by `by`.
pub fn substitute(s: &Sexp, name: &str, by: &Sexp) -> Sexp {
    match s {
        Sexp::Sym { text, .. } if text == name => by.clone(),
        Sexp::Sym { .. } => s.clone(),
        Sexp::List { items, line, col } => {
            if items.first().and_then(Sexp::sym) == Some("x") {
                return s.clone();
            }
            Sexp::List { items: items.iter().map(|i| substitute(i, name, by)).collect(), line: *line, col: *col }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    #[test]
    fn wildcards_and_captures() {
        let p = Pattern::parse("(exists ?i (= (fld f sa) (entry (x mlt) ?i mac)))").unwrap();
        let f = parse_formula("(exists k (= (fld f sa) (entry (x mlt) k mac)))").unwrap();
        assert_eq!(p.matches(&f), Some(vec!["k".to_string()]));
        assert_eq!(p.arity(), 1);
        let g = parse_formula("(exists k (= (fld f da) (entry (x mlt) k mac)))").unwrap();
        assert_eq!(p.matches(&g), None);
        assert!(Pattern::parse("(ucast _)").unwrap().matches(&g).is_none());
    }

    #[test]
    fn equality_is_symmetric() {
        let p = Pattern::parse("(= self (x port))").unwrap();
        assert!(p.matches(&parse_formula("(= (x port) self)").unwrap()).is_some());
        let q = Pattern::parse("(= ?a ?a)").unwrap();
        assert!(q.matches(&parse_formula("(= port uplink-port)").unwrap()).is_none());
    }

    #[test]
    fn current_reads_and_substitution() {
        let s = sexp::parse_one("(ucast (fld f da))").unwrap();
        assert!(mentions_current(&s, "f"));
        assert!(!mentions_current(&sexp::parse_one("(ucast (fld (x f) da))").unwrap(), "f"));
        let by = sexp::parse_one("(x f)").unwrap();
        assert_eq!(substitute(&s, "f", &by).to_string(), "(ucast (fld (x f) da))");
    }
}
