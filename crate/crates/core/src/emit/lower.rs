//! Lowering of product transitions into guarded action blocks.
//!
//! Per transition: minimize the label's DNF, apply the section's preferences and
//! bindings, classify every literal, drop wrapper-guaranteed ones (each proven from
//! the section's facts), split guards from actions, rank the blocks, and synthesize a
//! ranked guard tree whose leaves select blocks.

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::dnf::{conjunction, Disjunct, DisjunctSet, Literal, DEFAULT_DNF_CAP};
use crate::formula::parse::formula_from_sexp;
use crate::formula::{minimize_dnf, to_dnf, Formula};
use crate::machine::{LambdaSFA, Transition};
use crate::oracle::SatOracle;
use crate::synth::{all_assignments, satisfies, synthesize, synthesize_ranked, Assignment, DistributionProfile, Objective};

use super::classify::{ClassConfig, PredicateClass, Section};
use super::pattern::{substitute, to_sexp};
use super::program::{Block, DecisionProgram, LoweredTransition};
use super::EmitError;

/// Minimized DNF of a transition label.
pub fn minimized(label: &Formula, oracle: &SatOracle) -> Result<DisjunctSet, EmitError> {
    Ok(minimize_dnf(&to_dnf(label.strip_lambda(), DEFAULT_DNF_CAP)?, oracle)?)
}

/// `f` as the literal the DNF machinery would produce for it.
fn canonical(f: &Formula) -> Result<Literal, EmitError> {
    let d = to_dnf(f, DEFAULT_DNF_CAP)?;
    Ok(match d.disjuncts.as_slice() {
        [one] if one.len() == 1 => one.iter().next().cloned().unwrap_or_else(|| Literal::pos(f.clone())),
        _ => Literal::pos(f.clone()),
    })
}

fn rebind(l: &Literal, var: &str, by: &crate::sexp::Sexp) -> Result<Literal, EmitError> {
    let s = substitute(&to_sexp(&l.atom), var, by);
    let atom = canonical(&formula_from_sexp(&s)?)?;
    Ok(if l.positive { atom } else { atom.negated() })
}

fn prepare(d: &Disjunct, section: &Section, oracle: &SatOracle) -> Result<Disjunct, EmitError> {
    let ctx = section.context();
    let mut d = d.clone();
    for p in &section.prefer {
        let lit = canonical(&p.atom)?;
        if d.iter().any(|l| l.atom == lit.atom) {
            continue;
        }
        if let Some(w) = &p.with {
            if !d.contains(&canonical(w)?) {
                continue;
            }
        }
        if oracle.is_satisfiable(&Formula::and([ctx.clone(), conjunction(&d), lit.to_formula()]))? {
            d.insert(lit);
        }
    }
    for b in &section.binds {
        let eq = canonical(&b.equality()?)?;
        if !d.contains(&eq) {
            continue;
        }
        d = d.iter().map(|l| if *l == eq { Ok(l.clone()) } else { rebind(l, &b.var, &b.term) }).collect::<Result<_, _>>()?;
    }
    Ok(d)
}

struct Proofs<'a> {
    section: &'a Section,
    oracle: &'a SatOracle,
    proven: BTreeMap<Formula, bool>,
}

impl Proofs<'_> {
    /// Whether the section's facts imply `g`.
    fn implied(&mut self, g: &Formula) -> Result<bool, EmitError> {
        if let Some(&r) = self.proven.get(g) {
            return Ok(r);
        }
        let r = !self.oracle.is_satisfiable(&Formula::and([self.section.context(), Formula::not(g.clone())]))?;
        self.proven.insert(g.clone(), r);
        Ok(r)
    }
}

/// Lowers one transition under `section`.
pub fn lower(
    t: &Transition,
    section: &Section,
    profile: &DistributionProfile,
    objective: Objective,
    oracle: &SatOracle,
) -> Result<LoweredTransition, EmitError> {
    let dnf = minimized(&t.label, oracle)?;
    let mut proofs = Proofs { section, oracle, proven: BTreeMap::new() };
    let mut eliminated: Vec<Formula> = Vec::new();
    let mut blocks: Vec<Block> = Vec::new();
    'disjuncts: for d in &dnf.disjuncts {
        let d = prepare(d, section, oracle)?;
        let mut b = Block::default();
        for l in &d {
            match section.classify(&l.atom)? {
                PredicateClass::WrapperGuaranteed => {
                    if !proofs.implied(&l.atom)? {
                        return Err(EmitError::WrapperNotImplied { atom: l.atom.to_string() });
                    }
                    if !eliminated.contains(&l.atom) {
                        eliminated.push(l.atom.clone());
                    }
                    if !l.positive {
                        continue 'disjuncts;
                    }
                }
                PredicateClass::Checkable => {
                    if section.output_read(&l.atom).is_some() {
                        return Err(EmitError::ClassificationConflict { atom: l.to_string(), transition: t.name() });
                    }
                    b.guards.push(l.clone());
                }
                PredicateClass::Enforceable => b.actions.push(l.clone()),
            }
        }
        blocks.push(b);
    }
    blocks.sort_by_key(|b| (b.negative_actions(), b.actions.len()));
    let mut ranked: Vec<Block> = Vec::new();
    for b in blocks {
        if ranked.iter().any(|r| r.guard_set().is_subset(&b.guard_set())) {
            continue;
        }
        ranked.push(b);
    }
    let lowered = LoweredTransition {
        from: t.from.clone(),
        to: t.to.clone(),
        section: section.name.clone(),
        eliminated,
        tree: crate::synth::BranchTree::Leaf(None),
        blocks: ranked,
    };
    let tree = synthesize_ranked(&lowered.guard_dnf(), profile, objective, oracle)?;
    Ok(LoweredTransition { tree, ..lowered })
}

fn section_for<'a>(product: &LambdaSFA, cfg: &'a ClassConfig, state: &str) -> Result<&'a Section, EmitError> {
    let components = product.tuple(state).map(|p| p.components.clone()).unwrap_or_default();
    cfg.section_for(&components).ok_or_else(|| EmitError::NoSection { state: state.to_string() })
}

/// Lowers every transition of `product`.
pub fn lower_product(
    product: &LambdaSFA,
    cfg: &ClassConfig,
    profile: &DistributionProfile,
    objective: Objective,
    oracle: &SatOracle,
) -> Result<DecisionProgram, EmitError> {
    let transitions = product
        .transitions
        .iter()
        .map(|t| lower(t, section_for(product, cfg, &t.from)?, profile, objective, oracle))
        .collect::<Result<_, _>>()?;
    Ok(DecisionProgram {
        name: product.name.clone(),
        states: product.states.clone(),
        start: product.start.clone(),
        transitions,
    })
}

/// `prog` with every guard tree resynthesized under `profile`; blocks are unchanged.
pub fn retree(
    prog: &DecisionProgram,
    profile: &DistributionProfile,
    objective: Objective,
    oracle: &SatOracle,
) -> Result<DecisionProgram, EmitError> {
    let transitions = prog
        .transitions
        .iter()
        .map(|lt| Ok(LoweredTransition { tree: synthesize_ranked(&lt.guard_dnf(), profile, objective, oracle)?, ..lt.clone() }))
        .collect::<Result<_, EmitError>>()?;
    Ok(DecisionProgram { transitions, ..prog.clone() })
}

/// Compares the block each program selects, transition by transition, over every
/// assignment of the guard atoms. Disagreements on assignments the oracle refutes are
/// ignored. Returns the number of assignments compared.
pub fn compare_programs(a: &DecisionProgram, b: &DecisionProgram, oracle: &SatOracle) -> Result<usize, EmitError> {
    if a.transitions.len() != b.transitions.len() {
        return Err(EmitError::NotEquivalent { transition: a.name.clone(), reason: "transition counts differ".into() });
    }
    let mut n = 0;
    for (x, y) in a.transitions.iter().zip(&b.transitions) {
        let fail = |reason: String| EmitError::NotEquivalent { transition: x.name(), reason };
        if (&x.from, &x.to, &x.blocks) != (&y.from, &y.to, &y.blocks) {
            return Err(fail(format!("paired with {} or its blocks differ", y.name())));
        }
        let atoms: Vec<Formula> = x.tree.atoms().into_iter().chain(y.tree.atoms()).chain(x.guard_dnf().atoms()).collect::<BTreeSet<_>>().into_iter().collect();
        for asg in all_assignments(&atoms) {
            n += 1;
            if x.tree.decide(&asg) != y.tree.decide(&asg) && oracle.is_satisfiable(&literals(&asg))? {
                return Err(fail(format!("programs select different blocks on {}", literals(&asg))));
            }
        }
    }
    Ok(n)
}

/// What [`verify_lowering`] established for one transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoweringCheck {
    pub transition: String,
    pub dnf_atoms: usize,
    pub guard_atoms: usize,
    /// Full assignments enumerated over DNF atoms and over guard atoms.
    pub assignments: usize,
    /// Propositional disagreements excused because the oracle refutes the assignment.
    pub infeasible: usize,
    pub eliminated: Vec<String>,
    pub blocks: usize,
}

fn literals(a: &Assignment) -> Formula {
    Formula::and(a.iter().map(|(f, &v)| if v { f.clone() } else { Formula::not(f.clone()) }))
}

/// Checks, for every transition:
/// - the synthesized tree against the minimized DNF over all assignments of its atoms;
/// - the program's guard tree against ranked first match over all guard assignments;
/// - each eliminated atom is implied by the section's facts;
/// - each block is consistent with the facts and implies the label under them;
/// - under the facts, the label implies some block's guards.
///
/// A propositional disagreement is accepted only when the oracle shows the
/// assignment itself is infeasible.
pub fn verify_lowering(
    product: &LambdaSFA,
    program: &DecisionProgram,
    cfg: &ClassConfig,
    profile: &DistributionProfile,
    objective: Objective,
    oracle: &SatOracle,
) -> Result<Vec<LoweringCheck>, EmitError> {
    let fail = |t: &Transition, reason: String| EmitError::NotEquivalent { transition: t.name(), reason };
    let show = |a: &Assignment| literals(a).to_string();
    let mut out = Vec::new();
    for (t, lt) in product.transitions.iter().zip(&program.transitions) {
        if (t.from.as_str(), t.to.as_str()) != (lt.from.as_str(), lt.to.as_str()) {
            return Err(fail(t, format!("program lists {} here", lt.name())));
        }
        let section = section_for(product, cfg, &t.from)?;
        let ctx = section.context();
        let label = t.label.strip_lambda().clone();
        let dnf = minimized(&t.label, oracle)?;
        let tree = synthesize(&dnf, profile, objective, oracle)?;
        let mut check = LoweringCheck {
            transition: t.name(),
            dnf_atoms: dnf.atoms().len(),
            guard_atoms: 0,
            assignments: 0,
            infeasible: 0,
            eliminated: lt.eliminated.iter().map(ToString::to_string).collect(),
            blocks: lt.blocks.len(),
        };

        for a in all_assignments(&dnf.atoms()) {
            check.assignments += 1;
            let sat = dnf.disjuncts.iter().any(|d| satisfies(d, &a));
            let ok = match tree.decide(&a) {
                Some(i) => satisfies(&dnf.disjuncts[i], &a),
                None => !sat,
            };
            if !ok {
                if oracle.is_satisfiable(&literals(&a))? {
                    return Err(fail(t, format!("tree and DNF disagree on {}", show(&a))));
                }
                check.infeasible += 1;
            }
        }

        let guards = lt.guard_dnf();
        let guard_atoms: Vec<Formula> = lt.tree.atoms().into_iter().chain(guards.atoms()).collect::<BTreeSet<_>>().into_iter().collect();
        check.guard_atoms = guard_atoms.len();
        for a in all_assignments(&guard_atoms) {
            check.assignments += 1;
            let first = guards.disjuncts.iter().position(|d| satisfies(d, &a));
            if lt.tree.decide(&a) != first {
                if oracle.is_satisfiable(&Formula::and([ctx.clone(), literals(&a)]))? {
                    return Err(fail(t, format!("program selects a different block on {}", show(&a))));
                }
                check.infeasible += 1;
            }
        }

        for g in &lt.eliminated {
            if oracle.is_satisfiable(&Formula::and([ctx.clone(), Formula::not(g.clone())]))? {
                return Err(EmitError::WrapperNotImplied { atom: g.to_string() });
            }
        }
        for (i, b) in lt.blocks.iter().enumerate() {
            if !oracle.is_satisfiable(&Formula::and([ctx.clone(), b.conjunction()]))? {
                return Err(fail(t, format!("block {i} is inconsistent with the wrapper facts")));
            }
            if oracle.is_satisfiable(&Formula::and([ctx.clone(), b.conjunction(), Formula::not(label.clone())]))? {
                return Err(fail(t, format!("block {i} does not imply the label")));
            }
        }
        if !lt.blocks.iter().any(|b| b.guards.is_empty()) {
            let covered = Formula::or(lt.blocks.iter().map(|b| conjunction(&b.guard_set())));
            if oracle.is_satisfiable(&Formula::and([ctx.clone(), label.clone(), Formula::not(covered)]))? {
                return Err(fail(t, "the label holds where no guard does".to_string()));
            }
        }
        out.push(check);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::oracle::DomainConfig;
    use crate::synth::ratio;

    fn section(src: &str) -> Section {
        ClassConfig::parse(src).unwrap().sections.remove(0)
    }

    #[test]
    fn true_label_lowers_to_one_unguarded_block() {
        let o = SatOracle::internal(DomainConfig::desk());
        let t = Transition::new("A", "A", Formula::True);
        let s = section("section s\ncheckable _\n");
        let lt = lower(&t, &s, &DistributionProfile::default(), Objective::ExpectedTime, &o).unwrap();
        assert_eq!(lt.blocks, vec![Block::default()]);
        assert_eq!(lt.tree, crate::synth::BranchTree::Leaf(Some(0)));
    }

    #[test]
    fn guards_actions_and_wrapper_elimination() {
        let o = SatOracle::internal(DomainConfig::desk());
        let label = parse_formula("(or (and A C) (and B D) (and W (not D)))").unwrap();
        let t = Transition::new("S", "S", label);
        let s = section("section s\nfact W\nwrapper W\nenforceable C\nenforceable D\ncheckable _\n");
        let prof = DistributionProfile::with_base([(parse_formula("A").unwrap(), ratio(1, 2))]);
        let lt = lower(&t, &s, &prof, Objective::ExpectedTime, &o).unwrap();
        assert_eq!(lt.eliminated, vec![parse_formula("W").unwrap()]);
        assert_eq!(lt.blocks.len(), 3);
        assert!(lt.blocks.iter().all(|b| b.guards.iter().all(|g| g.atom != parse_formula("C").unwrap())));
        // The unguarded, negative-action block ranks last.
        assert!(lt.blocks[2].guards.is_empty() && lt.blocks[2].negative_actions() == 1);

        let s = section("section s\nwrapper W\nenforceable C\nenforceable D\ncheckable _\n");
        assert!(matches!(lower(&t, &s, &prof, Objective::ExpectedTime, &o), Err(EmitError::WrapperNotImplied { .. })));
    }

    #[test]
    fn unclassified_atoms_fail_loudly() {
        let o = SatOracle::internal(DomainConfig::desk());
        let t = Transition::new("S", "S", parse_formula("(and A B)").unwrap());
        let s = section("section s\ncheckable A\n");
        let e = lower(&t, &s, &DistributionProfile::default(), Objective::ExpectedTime, &o).unwrap_err();
        assert!(matches!(e, EmitError::Unclassifiable { .. }));
    }
}
