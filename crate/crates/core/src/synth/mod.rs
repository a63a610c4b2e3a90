//! Residuals, branch ordering and decision-tree synthesis over minimized DNF.

pub mod profile;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigRational, One, Zero};
use thiserror::Error;

use crate::formula::dnf::{conjunction, Disjunct, DisjunctSet, Literal};
use crate::formula::Formula;
use crate::oracle::{OracleError, SatOracle};

pub use profile::{format_ratio, parse_ratio, ratio, Assignment, DistributionProfile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("no probability for atom {0} and no default")]
    MissingProbability(String),
    #[error("resynthesized tree disagrees with the original on {0}")]
    NotEquivalent(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Objective {
    ExpectedTime,
    MinSize,
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "expected-time" => Ok(Objective::ExpectedTime),
            "min-size" => Ok(Objective::MinSize),
            _ => Err(format!("unknown objective `{s}` (expected-time | min-size)")),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::ExpectedTime => "expected-time",
            Objective::MinSize => "min-size",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BranchTree {
    /// Index of the selected disjunct, or `None` for no match.
    Leaf(Option<usize>),
    Test {
        atom: Formula,
        /// Assignment fixed on the path above this node.
        assignment: Assignment,
        then: Box<BranchTree>,
        otherwise: Box<BranchTree>,
    },
}

impl BranchTree {
    /// Number of test nodes.
    pub fn size(&self) -> usize {
        match self {
            BranchTree::Leaf(_) => 0,
            BranchTree::Test { then, otherwise, .. } => 1 + then.size() + otherwise.size(),
        }
    }

    pub fn root(&self) -> Option<&Formula> {
        match self {
            BranchTree::Leaf(_) => None,
            BranchTree::Test { atom, .. } => Some(atom),
        }
    }

    pub fn is_no_match(&self) -> bool {
        matches!(self, BranchTree::Leaf(None))
    }

    /// The leaf reached under `a`; atoms absent from `a` read as false.
    pub fn decide(&self, a: &Assignment) -> Option<usize> {
        match self {
            BranchTree::Leaf(d) => *d,
            BranchTree::Test { atom, then, otherwise, .. } => {
                if a.get(atom).copied().unwrap_or(false) {
                    then.decide(a)
                } else {
                    otherwise.decide(a)
                }
            }
        }
    }

    /// Atoms tested anywhere in the tree.
    pub fn atoms(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Formula>) {
        if let BranchTree::Test { atom, then, otherwise, .. } = self {
            out.insert(atom.clone());
            then.collect_atoms(out);
            otherwise.collect_atoms(out);
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        match self {
            BranchTree::Leaf(Some(d)) => writeln!(f, "{pad}leaf d{d}"),
            BranchTree::Leaf(None) => writeln!(f, "{pad}leaf none"),
            BranchTree::Test { atom, then, otherwise, .. } => {
                writeln!(f, "{pad}test {atom}")?;
                then.write(f, depth + 1)?;
                otherwise.write(f, depth + 1)
            }
        }
    }
}

impl fmt::Display for BranchTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

pub fn satisfies(d: &Disjunct, a: &Assignment) -> bool {
    d.iter().all(|l| a.get(&l.atom).copied().unwrap_or(false) == l.positive)
}

/// Every assignment over `atoms`, in binary counting order.
pub fn all_assignments(atoms: &[Formula]) -> Vec<Assignment> {
    (0u64..1 << atoms.len())
        .map(|bits| atoms.iter().enumerate().map(|(i, a)| (a.clone(), bits >> i & 1 == 1)).collect())
        .collect()
}

type Rest = Vec<(usize, Disjunct)>;

fn restrict(rest: &[(usize, Disjunct)], lit: &Literal) -> Rest {
    let neg = lit.negated();
    rest.iter()
        .filter(|(_, d)| !d.contains(&neg))
        .map(|(i, d)| {
            let mut d = d.clone();
            d.remove(lit);
            (*i, d)
        })
        .collect()
}

fn leaf_of(rest: &[(usize, Disjunct)], ranked: bool) -> Option<Option<usize>> {
    if rest.is_empty() {
        return Some(None);
    }
    if ranked {
        return rest[0].1.is_empty().then_some(Some(rest[0].0));
    }
    rest.iter().find(|(_, d)| d.is_empty()).map(|(i, _)| Some(*i))
}

fn rest_atoms(rest: &[(usize, Disjunct)]) -> BTreeSet<Formula> {
    rest.iter().flat_map(|(_, d)| d.iter().map(|l| l.atom.clone())).collect()
}

fn residual_of(p: &Literal, ds: &[&Disjunct], oracle: &SatOracle) -> Result<BTreeSet<Formula>, SynthError> {
    if ds.iter().any(|d| d.len() == 1 && d.contains(p)) {
        return Ok(BTreeSet::new());
    }
    let neg = p.negated();
    let mut out = BTreeSet::new();
    for d in ds {
        if d.contains(&neg) {
            continue;
        }
        let both = Formula::and([conjunction(d), p.to_formula()]);
        if !oracle.is_satisfiable(&both)? {
            continue;
        }
        out.extend(d.iter().map(|l| l.atom.clone()).filter(|a| *a != p.atom));
    }
    Ok(out)
}

/// Atoms still to evaluate once `p` is fixed.
pub fn residual(p: &Literal, d: &DisjunctSet, oracle: &SatOracle) -> Result<BTreeSet<Formula>, SynthError> {
    residual_of(p, &d.disjuncts.iter().collect::<Vec<_>>(), oracle)
}

fn expected_of(
    p: &Formula,
    ds: &[&Disjunct],
    a: &Assignment,
    profile: &DistributionProfile,
    oracle: &SatOracle,
) -> Result<BigRational, SynthError> {
    let pr = profile.probability(p, a)?;
    let yes = residual_of(&Literal::pos(p.clone()), ds, oracle)?.len();
    let no = residual_of(&Literal::neg(p.clone()), ds, oracle)?.len();
    Ok(&pr * BigRational::from_integer(yes.into()) + (BigRational::one() - &pr) * BigRational::from_integer(no.into()))
}

/// `Pr[p|A]·|res(p,D)| + (1 − Pr[p|A])·|res(¬p,D)|`.
pub fn expected_residual(
    p: &Formula,
    d: &DisjunctSet,
    a: &Assignment,
    profile: &DistributionProfile,
    oracle: &SatOracle,
) -> Result<BigRational, SynthError> {
    expected_of(p, &d.disjuncts.iter().collect::<Vec<_>>(), a, profile, oracle)
}

struct Synth<'a> {
    profile: &'a DistributionProfile,
    oracle: &'a SatOracle,
    objective: Objective,
    ranked: bool,
    sizes: BTreeMap<Rest, usize>,
}

impl Synth<'_> {
    fn min_size(&mut self, rest: &Rest) -> usize {
        if leaf_of(rest, self.ranked).is_some() {
            return 0;
        }
        if let Some(&s) = self.sizes.get(rest) {
            return s;
        }
        let mut best = usize::MAX;
        for atom in rest_atoms(rest) {
            let s = 1 + self.min_size(&restrict(rest, &Literal::pos(atom.clone()))) + self.min_size(&restrict(rest, &Literal::neg(atom)));
            best = best.min(s);
        }
        self.sizes.insert(rest.clone(), best);
        best
    }

    fn choose(&mut self, rest: &Rest, a: &Assignment) -> Result<Formula, SynthError> {
        let mut best: Option<(Formula, BigRational)> = None;
        let ds: Vec<&Disjunct> = rest.iter().map(|(_, d)| d).collect();
        for atom in rest_atoms(rest) {
            let key = match self.objective {
                Objective::ExpectedTime => expected_of(&atom, &ds, a, self.profile, self.oracle)?,
                Objective::MinSize => {
                    let s = 1 + self.min_size(&restrict(rest, &Literal::pos(atom.clone())))
                        + self.min_size(&restrict(rest, &Literal::neg(atom.clone())));
                    BigRational::from_integer(s.into())
                }
            };
            if best.as_ref().map_or(true, |(_, k)| key < *k) {
                best = Some((atom, key));
            }
        }
        Ok(best.expect("a non-leaf node has an open atom").0)
    }

    fn build(&mut self, rest: Rest, a: Assignment) -> Result<BranchTree, SynthError> {
        if let Some(leaf) = leaf_of(&rest, self.ranked) {
            return Ok(BranchTree::Leaf(leaf));
        }
        let atom = self.choose(&rest, &a)?;
        let mut at = a.clone();
        at.insert(atom.clone(), true);
        let mut af = a.clone();
        af.insert(atom.clone(), false);
        let then = self.build(restrict(&rest, &Literal::pos(atom.clone())), at)?;
        let otherwise = self.build(restrict(&rest, &Literal::neg(atom.clone())), af)?;
        Ok(BranchTree::Test { atom, assignment: a, then: Box::new(then), otherwise: Box::new(otherwise) })
    }
}

fn run_synth(
    d: &DisjunctSet,
    profile: &DistributionProfile,
    objective: Objective,
    oracle: &SatOracle,
    ranked: bool,
) -> Result<BranchTree, SynthError> {
    let mut s = Synth { profile, oracle, objective, ranked, sizes: BTreeMap::new() };
    s.build(d.disjuncts.iter().cloned().enumerate().collect(), Assignment::new())
}

/// A tree whose leaves name some satisfied disjunct. An empty `d` yields the
/// no-match leaf alone.
pub fn synthesize(
    d: &DisjunctSet,
    profile: &DistributionProfile,
    objective: Objective,
    oracle: &SatOracle,
) -> Result<BranchTree, SynthError> {
    run_synth(d, profile, objective, oracle, false)
}

/// Like [`synthesize`], but each leaf names the first satisfied disjunct in order.
pub fn synthesize_ranked(
    d: &DisjunctSet,
    profile: &DistributionProfile,
    objective: Objective,
    oracle: &SatOracle,
) -> Result<BranchTree, SynthError> {
    run_synth(d, profile, objective, oracle, true)
}

/// Test count and probability-weighted path length.
pub fn tree_metrics(t: &BranchTree, profile: &DistributionProfile) -> Result<(usize, BigRational), SynthError> {
    fn expected(t: &BranchTree, profile: &DistributionProfile) -> Result<BigRational, SynthError> {
        match t {
            BranchTree::Leaf(_) => Ok(BigRational::zero()),
            BranchTree::Test { atom, assignment, then, otherwise } => {
                let p = profile.probability(atom, assignment)?;
                let e = &p * expected(then, profile)? + (BigRational::one() - &p) * expected(otherwise, profile)?;
                Ok(BigRational::one() + e)
            }
        }
    }
    Ok((t.size(), expected(t, profile)?))
}

/// Whether two trees agree on every full assignment over `d`'s atoms: both reach a
/// disjunct the assignment satisfies, or both reach no match. Returns the first
/// disagreeing assignment.
pub fn first_disagreement(a: &BranchTree, b: &BranchTree, d: &DisjunctSet) -> Option<Assignment> {
    let ok = |leaf: Option<usize>, asg: &Assignment| leaf.map_or(true, |i| satisfies(&d.disjuncts[i], asg));
    all_assignments(&d.atoms()).into_iter().find(|asg| {
        let (x, y) = (a.decide(asg), b.decide(asg));
        x.is_some() != y.is_some() || !ok(x, asg) || !ok(y, asg)
    })
}

/// Fresh expected-time synthesis under `new_profile`, checked equivalent to `tree`.
pub fn resynthesize(
    tree: &BranchTree,
    new_profile: &DistributionProfile,
    d: &DisjunctSet,
    oracle: &SatOracle,
) -> Result<BranchTree, SynthError> {
    let fresh = synthesize(d, new_profile, Objective::ExpectedTime, oracle)?;
    if let Some(asg) = first_disagreement(tree, &fresh, d) {
        let lits: Vec<String> = profile::assignment_literals(&asg).iter().map(|l| l.to_string()).collect();
        return Err(SynthError::NotEquivalent(lits.join(" ")));
    }
    Ok(fresh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::oracle::DomainConfig;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn example() -> DisjunctSet {
        let d = |xs: &[&str]| xs.iter().map(|x| Literal::pos(p(x))).collect::<Disjunct>();
        DisjunctSet { disjuncts: vec![d(&["C", "B"]), d(&["F", "B"]), d(&["E"])] }
    }

    fn profile() -> DistributionProfile {
        DistributionProfile::with_base([(p("B"), ratio(12, 16)), (p("C"), ratio(2, 16)), (p("E"), ratio(1, 16)), (p("F"), ratio(1, 16))])
    }

    #[test]
    fn residual_sizes() {
        let o = SatOracle::internal(DomainConfig::desk());
        let d = example();
        assert_eq!(residual(&Literal::pos(p("B")), &d, &o).unwrap().len(), 3);
        assert_eq!(residual(&Literal::neg(p("B")), &d, &o).unwrap(), BTreeSet::from([p("E")]));
        assert!(residual(&Literal::pos(p("E")), &d, &o).unwrap().is_empty());
    }

    #[test]
    fn single_atom_tree() {
        let o = SatOracle::internal(DomainConfig::desk());
        let d = DisjunctSet { disjuncts: vec![BTreeSet::from([Literal::pos(p("A"))])] };
        let t = synthesize(&d, &DistributionProfile::default(), Objective::ExpectedTime, &o).unwrap();
        assert_eq!(t.to_string(), "test A\n  leaf d0\n  leaf none\n");
        assert_eq!(tree_metrics(&t, &DistributionProfile::default()).unwrap(), (1, BigRational::one()));
        let empty = synthesize(&DisjunctSet::default(), &profile(), Objective::MinSize, &o).unwrap();
        assert!(empty.is_no_match());
    }

    #[test]
    fn ranked_leaves_pick_first() {
        let o = SatOracle::internal(DomainConfig::desk());
        let d = example();
        let t = synthesize_ranked(&d, &profile(), Objective::ExpectedTime, &o).unwrap();
        for asg in all_assignments(&d.atoms()) {
            let first = d.disjuncts.iter().position(|x| satisfies(x, &asg));
            assert_eq!(t.decide(&asg), first);
        }
    }

    #[test]
    fn objectives_disagree() {
        let o = SatOracle::internal(DomainConfig::desk());
        let (d, prof) = (example(), profile());
        let er: Vec<_> = ["B", "C", "F", "E"]
            .iter()
            .map(|a| expected_residual(&p(a), &d, &Assignment::new(), &prof, &o).unwrap())
            .collect();
        assert_eq!(er, [ratio(40, 16), ratio(48, 16), ratio(48, 16), ratio(45, 16)]);
        let et = synthesize(&d, &prof, Objective::ExpectedTime, &o).unwrap();
        let ms = synthesize(&d, &prof, Objective::MinSize, &o).unwrap();
        assert_eq!((et.root(), ms.root()), (Some(&p("B")), Some(&p("E"))));
        assert_eq!(tree_metrics(&et, &prof).unwrap(), (5, ratio(1675, 512)));
        assert_eq!(tree_metrics(&ms, &prof).unwrap(), (4, ratio(1667, 512)));
        assert!(first_disagreement(&et, &ms, &d).is_none());
    }
}
