//! Traffic distribution profiles.
//!
//! ```text
//! # comment
//! default 1/2                      ; or `default none`
//! pr (bcast (fld f da)) = 12/16
//! pr C given B (not E) = 1/3
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num::{BigInt, BigRational, One, Zero};

use crate::error::ParseError;
use crate::formula::dnf::Literal;
use crate::formula::parse::formula_from_sexp;
use crate::formula::Formula;
use crate::sexp::{self, Sexp};

use super::SynthError;

/// A truth assignment to opaque atoms.
pub type Assignment = BTreeMap<Formula, bool>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistributionProfile {
    pub base: BTreeMap<Formula, BigRational>,
    pub conditional: BTreeMap<(Formula, BTreeSet<Literal>), BigRational>,
    /// Used when an atom has no entry; `None` makes a missing entry an error.
    pub default: Option<BigRational>,
}

impl Default for DistributionProfile {
    fn default() -> Self {
        DistributionProfile { base: BTreeMap::new(), conditional: BTreeMap::new(), default: Some(half()) }
    }
}

fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn format_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let p: BigInt = p.parse().ok()?;
    let q: BigInt = q.parse().ok()?;
    if q.is_zero() {
        return None;
    }
    Some(BigRational::new(p, q))
}

pub fn assignment_literals(a: &Assignment) -> BTreeSet<Literal> {
    a.iter().map(|(f, &b)| Literal { atom: f.clone(), positive: b }).collect()
}

impl DistributionProfile {
    pub fn with_base(entries: impl IntoIterator<Item = (Formula, BigRational)>) -> Self {
        DistributionProfile { base: entries.into_iter().collect(), ..Default::default() }
    }

    /// `Pr[atom | a]`: the exact conditional entry, else the base entry, else the default.
    pub fn probability(&self, atom: &Formula, a: &Assignment) -> Result<BigRational, SynthError> {
        if !self.conditional.is_empty() {
            if let Some(p) = self.conditional.get(&(atom.clone(), assignment_literals(a))) {
                return Ok(p.clone());
            }
        }
        self.base
            .get(atom)
            .or(self.default.as_ref())
            .cloned()
            .ok_or_else(|| SynthError::MissingProbability(atom.to_string()))
    }

    /// Add-one smoothed estimate from observed assignments. Conditionals on a single
    /// other literal are kept when that literal was observed at least `support` times.
    pub fn estimate(atoms: &BTreeSet<Formula>, observations: &[Assignment], support: usize) -> Self {
        let n = observations.len() as i64;
        let count = |pred: &dyn Fn(&Assignment) -> bool| observations.iter().filter(|o| pred(o)).count() as i64;
        let mut prof = DistributionProfile::default();
        for a in atoms {
            let c = count(&|o| o.get(a) == Some(&true));
            prof.base.insert(a.clone(), ratio(c + 1, n + 2));
            if support == 0 {
                continue;
            }
            for b in atoms.iter().filter(|b| *b != a) {
                for val in [true, false] {
                    let m = count(&|o| o.get(b) == Some(&val));
                    if m as usize >= support {
                        let c = count(&|o| o.get(b) == Some(&val) && o.get(a) == Some(&true));
                        let key = (a.clone(), BTreeSet::from([Literal { atom: b.clone(), positive: val }]));
                        prof.conditional.insert(key, ratio(c + 1, m + 2));
                    }
                }
            }
        }
        prof
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match &self.default {
            Some(d) => {
                let _ = writeln!(s, "default {}", format_ratio(d));
            }
            None => s.push_str("default none\n"),
        }
        for (a, p) in &self.base {
            let _ = writeln!(s, "pr {a} = {}", format_ratio(p));
        }
        for ((a, given), p) in &self.conditional {
            let lits: Vec<String> = given.iter().map(|l| l.to_formula().to_string()).collect();
            let _ = writeln!(s, "pr {a} given {} = {}", lits.join(" "), format_ratio(p));
        }
        s
    }

    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let mut prof = DistributionProfile::default();
        for (i, line) in src.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            let toks = sexp::tokenize_from(line, i + 1);
            if toks.is_empty() {
                continue;
            }
            let mut pos = 0;
            let mut items = Vec::new();
            while pos < toks.len() {
                items.push(sexp::read(&toks, &mut pos)?);
            }
            parse_entry(&mut prof, &items)?;
        }
        Ok(prof)
    }
}

fn probability_of(s: &Sexp) -> Result<BigRational, ParseError> {
    let r = s.sym().and_then(parse_ratio).ok_or_else(|| s.error("expected a probability `p/q`"))?;
    if r < BigRational::zero() || r > BigRational::one() {
        return Err(s.error("probability outside [0, 1]"));
    }
    Ok(r)
}

fn parse_entry(prof: &mut DistributionProfile, items: &[Sexp]) -> Result<(), ParseError> {
    match items[0].sym() {
        Some("default") => {
            let [_, v] = items else {
                return Err(items[0].error("`default` takes one value"));
            };
            prof.default = if v.sym() == Some("none") { None } else { Some(probability_of(v)?) };
        }
        Some("pr") => {
            let n = items.len();
            if n < 4 || items[n - 2].sym() != Some("=") {
                return Err(items[0].error("expected `pr ATOM [given LIT…] = p/q`"));
            }
            let atom = formula_from_sexp(&items[1])?;
            let p = probability_of(&items[n - 1])?;
            if n == 4 {
                prof.base.insert(atom, p);
            } else {
                if items[2].sym() != Some("given") {
                    return Err(items[2].error("expected `given`"));
                }
                let mut given = BTreeSet::new();
                for l in &items[3..n - 2] {
                    given.insert(match formula_from_sexp(l)? {
                        Formula::Not(a) => Literal::neg(*a),
                        a => Literal::pos(a),
                    });
                }
                prof.conditional.insert((atom, given), p);
            }
        }
        _ => return Err(items[0].error("expected `pr` or `default`")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn atom(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn parse_and_print() {
        let src = "# example\ndefault 1/2\npr B = 12/16\npr (bcast (fld f da)) = 1/16\npr C given B (not E) = 1/3\n";
        let p = DistributionProfile::parse(src).unwrap();
        assert_eq!(p.base[&atom("B")], ratio(3, 4));
        let a = Assignment::from([(atom("B"), true), (atom("E"), false)]);
        assert_eq!(p.probability(&atom("C"), &a).unwrap(), ratio(1, 3));
        assert_eq!(p.probability(&atom("C"), &Assignment::new()).unwrap(), ratio(1, 2));
        assert_eq!(DistributionProfile::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn missing_without_default() {
        let p = DistributionProfile::parse("default none\n").unwrap();
        assert!(matches!(p.probability(&atom("Z"), &Assignment::new()), Err(SynthError::MissingProbability(_))));
    }

    #[test]
    fn bad_lines_report_position() {
        let e = DistributionProfile::parse("pr B = 12/16\npr B = 3/2\n").unwrap_err();
        assert_eq!((e.line, e.col), (2, 8));
        assert!(DistributionProfile::parse("pr B 1/2").is_err());
    }

    #[test]
    fn smoothing() {
        let b = atom("(bcast (fld f da))");
        let obs: Vec<Assignment> = (0..14).map(|i| Assignment::from([(b.clone(), i < 11)])).collect();
        let p = DistributionProfile::estimate(&BTreeSet::from([b.clone()]), &obs, 0);
        assert_eq!(p.base[&b], ratio(12, 16));
        assert!(DistributionProfile::estimate(&BTreeSet::new(), &obs, 0).base.is_empty());
    }
}
