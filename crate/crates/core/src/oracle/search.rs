//! Backtracking search over cell assignments with three-valued pruning.
//!
//! The formula is first grounded: the λ is dropped, bounded quantifiers are unrolled
//! and frame/table equalities become conjunctions of scalar equalities. At each node
//! the formula is simplified under the partial assignment. A remaining conjunction is
//! split into groups that share no unassigned cell and each group is solved on its
//! own. Otherwise the search branches on the cell, among those of the undecided atom
//! reading the fewest cells, with the fewest values that keep the formula alive
//! (forward checking); values making that atom true go first.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::eval::{
    components, eval_atom, unassigned_cells, Cell, EvalError, Scalar, Scope, Tri, Valuation,
};
use crate::formula::{Atom, Formula, Index, Term, Var};
use crate::netsim::frame::{Mac, Port};

use super::{DomainConfig, Model, OracleError};

struct Partial<'a> {
    cfg: &'a DomainConfig,
    haddrs: Vec<Mac>,
    vals: HashMap<Cell, Scalar>,
}

impl Valuation for Partial<'_> {
    fn cell(&self, cell: &Cell) -> Result<Option<Scalar>, EvalError> {
        if let Cell::Port { snap } = cell {
            return match self.vals.get(&Cell::Loc { snap: *snap }) {
                None => Ok(None),
                Some(Scalar::Set(s)) => match s.ingress_port() {
                    Some(p) => Ok(Some(Scalar::Int(p))),
                    None => Err(EvalError::Unbound(cell.to_string())),
                },
                Some(_) => unreachable!("loc holds a set"),
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

fn ground_index(i: &Index, scope: &Scope) -> Result<Index, EvalError> {
    match i {
        Index::Lit(_) => Ok(i.clone()),
        Index::Bound(n) => scope
            .iter()
            .rev()
            .find(|(m, _)| m == n)
            .map(|(_, k)| Index::Lit(*k))
            .ok_or_else(|| EvalError::Malformed(format!("index `{n}` is not bound by a quantifier"))),
    }
}

fn ground_term(t: &Term, scope: &Scope) -> Result<Term, EvalError> {
    let g = |t: &Term| ground_term(t, scope).map(Box::new);
    Ok(match t {
        Term::Field(b, f) => Term::Field(g(b)?, *f),
        Term::Entry { table, index, field } => {
            Term::Entry { table: g(table)?, index: ground_index(index, scope)?, field: *field }
        }
        Term::Iface(p, d) => Term::Iface(g(p)?, *d),
        Term::Set(items) => Term::Set(items.iter().map(|i| ground_term(i, scope)).collect::<Result<_, _>>()?),
        Term::Haddr(p) => Term::Haddr(g(p)?),
        Term::Sub(a, b) => Term::Sub(g(a)?, g(b)?),
        Term::Update { table, index, mac, time, port } => Term::Update {
            table: g(table)?,
            index: ground_index(index, scope)?,
            mac: g(mac)?,
            time: g(time)?,
            port: g(port)?,
        },
        Term::Var { .. } | Term::Mac(_) | Term::Int(_) | Term::Proto(_) | Term::Egress => t.clone(),
    })
}

fn composite(t: &Term) -> bool {
    matches!(t, Term::Var { var: Var::Frame | Var::Mlt, .. } | Term::Update { .. })
}

/// Quantifier-free, λ-free equivalent with scalar atoms only.
pub fn ground<V: Valuation + ?Sized>(v: &V, f: &Formula, scope: &mut Scope) -> Result<Formula, EvalError> {
    let rec = |g: &Formula, scope: &mut Scope| ground(v, g, scope);
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(Atom::Eq(a, b)) if composite(a) || composite(b) => {
            let ca = components(v, a, scope)?;
            let cb = components(v, b, scope)?;
            if ca.len() != cb.len() {
                return Err(EvalError::Malformed(format!("`{a}` and `{b}` have different sorts")));
            }
            let parts = ca
                .iter()
                .zip(&cb)
                .map(|(x, y)| Ok(Formula::Atom(Atom::eq(ground_term(x, scope)?, ground_term(y, scope)?))))
                .collect::<Result<Vec<_>, EvalError>>()?;
            Formula::And(parts)
        }
        Formula::Atom(a) => Formula::Atom(match a {
            Atom::Eq(x, y) => Atom::eq(ground_term(x, scope)?, ground_term(y, scope)?),
            Atom::In(x, y) => Atom::In(ground_term(x, scope)?, ground_term(y, scope)?),
            Atom::Subset(x, y) => Atom::Subset(ground_term(x, scope)?, ground_term(y, scope)?),
            Atom::Le(x, y) => Atom::Le(ground_term(x, scope)?, ground_term(y, scope)?),
            Atom::Ucast(x) => Atom::Ucast(ground_term(x, scope)?),
            Atom::Bcast(x) => Atom::Bcast(ground_term(x, scope)?),
            Atom::ArpReqRx(x, y) => Atom::ArpReqRx(ground_term(x, scope)?, ground_term(y, scope)?),
            Atom::Prop(_) => a.clone(),
        }),
        Formula::Not(g) => Formula::Not(Box::new(rec(g, scope)?)),
        Formula::Lambda(g) => rec(g, scope)?,
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rec(g, scope)).collect::<Result<_, _>>()?),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rec(g, scope)).collect::<Result<_, _>>()?),
        Formula::Implies(a, b) => Formula::Implies(Box::new(rec(a, scope)?), Box::new(rec(b, scope)?)),
        Formula::Exists(name, body) | Formula::Forall(name, body) => {
            let mut parts = Vec::with_capacity(v.mlt_size());
            for i in 0..v.mlt_size() {
                scope.push((name.clone(), i));
                let r = rec(body, scope);
                scope.pop();
                parts.push(r?);
            }
            if matches!(f, Formula::Exists(..)) {
                Formula::Or(parts)
            } else {
                Formula::And(parts)
            }
        }
    })
}

/// Negation normal form of a quantifier-free, λ-free formula.
pub fn nnf(f: &Formula, negate: bool) -> Formula {
    match f {
        Formula::True | Formula::False => {
            if negate == matches!(f, Formula::True) {
                Formula::False
            } else {
                Formula::True
            }
        }
        Formula::Atom(_) if negate => Formula::Not(Box::new(f.clone())),
        Formula::Not(g) => nnf(g, !negate),
        Formula::And(gs) | Formula::Or(gs) => {
            let parts = gs.iter().map(|g| nnf(g, negate));
            if matches!(f, Formula::And(_)) != negate {
                Formula::and(parts)
            } else {
                Formula::or(parts)
            }
        }
        Formula::Implies(a, b) => {
            if negate {
                Formula::and([nnf(a, false), nnf(b, true)])
            } else {
                Formula::or([nnf(a, true), nnf(b, false)])
            }
        }
        Formula::Lambda(g) => nnf(g, negate),
        _ => f.clone(),
    }
}

/// A node of the compiled negation-normal-form formula.
enum Node {
    Const(bool),
    Lit(usize, bool),
    And(Vec<usize>),
    Or(Vec<usize>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum AtomVal {
    True,
    False,
    Unknown,
    /// Reads an unbound variable; false under either polarity.
    Error,
}

struct Compiled {
    atoms: Vec<Atom>,
    /// Branch cells of each atom, `port` mapped to its location.
    atom_cells: Vec<Vec<usize>>,
    cells: Vec<Cell>,
    cell_atoms: Vec<Vec<usize>>,
    nodes: Vec<Node>,
}

impl Compiled {
    fn new(f: &Formula, v: &Partial<'_>) -> Result<(Compiled, usize), OracleError> {
        let mut c = Compiled { atoms: Vec::new(), atom_cells: Vec::new(), cells: Vec::new(), cell_atoms: Vec::new(), nodes: Vec::new() };
        let mut atom_ids = HashMap::new();
        let mut cell_ids = HashMap::new();
        let root = c.add(f, v, &mut atom_ids, &mut cell_ids)?;
        Ok((c, root))
    }

    fn add(
        &mut self,
        f: &Formula,
        v: &Partial<'_>,
        atom_ids: &mut HashMap<Atom, usize>,
        cell_ids: &mut HashMap<Cell, usize>,
    ) -> Result<usize, OracleError> {
        let node = match f {
            Formula::True => Node::Const(true),
            Formula::False => Node::Const(false),
            Formula::Atom(a) => Node::Lit(self.atom(a, v, atom_ids, cell_ids)?, true),
            Formula::Not(g) => match g.as_ref() {
                Formula::Atom(a) => Node::Lit(self.atom(a, v, atom_ids, cell_ids)?, false),
                other => return Err(OracleError::Unsupported(format!("negated compound `{other}` after normalization"))),
            },
            Formula::And(gs) | Formula::Or(gs) => {
                let kids = gs.iter().map(|g| self.add(g, v, atom_ids, cell_ids)).collect::<Result<Vec<_>, _>>()?;
                if matches!(f, Formula::And(_)) {
                    Node::And(kids)
                } else {
                    Node::Or(kids)
                }
            }
            other => return Err(OracleError::Unsupported(format!("`{other}` after normalization"))),
        };
        self.nodes.push(node);
        Ok(self.nodes.len() - 1)
    }

    fn atom(
        &mut self,
        a: &Atom,
        v: &Partial<'_>,
        atom_ids: &mut HashMap<Atom, usize>,
        cell_ids: &mut HashMap<Cell, usize>,
    ) -> Result<usize, OracleError> {
        if let Some(&i) = atom_ids.get(a) {
            return Ok(i);
        }
        let id = self.atoms.len();
        let mut cells = Vec::new();
        for cell in unassigned_cells(v, a, NO_SCOPE)? {
            let cell = match cell {
                Cell::Port { snap } => Cell::Loc { snap },
                other => other,
            };
            let ci = *cell_ids.entry(cell.clone()).or_insert_with(|| {
                self.cells.push(cell);
                self.cell_atoms.push(Vec::new());
                self.cells.len() - 1
            });
            if !cells.contains(&ci) {
                cells.push(ci);
                self.cell_atoms[ci].push(id);
            }
        }
        self.atoms.push(a.clone());
        self.atom_cells.push(cells);
        atom_ids.insert(a.clone(), id);
        Ok(id)
    }
}

const NO_SCOPE: &Scope = &Vec::new();

enum Undo {
    Cell(usize),
    Atom(usize, AtomVal),
    Forced(usize),
}

struct Search<'a> {
    p: Partial<'a>,
    c: Compiled,
    assigned: Vec<bool>,
    atom_val: Vec<AtomVal>,
    /// Values assumed for atoms of open goal literals until their cells decide them.
    forced: Vec<Option<bool>>,
    trail: Vec<Undo>,
    nodes: u64,
    budget: u64,
    /// Shuffles values of equal rank; `None` keeps domain order.
    rng: Option<ChaCha8Rng>,
}

impl Search<'_> {
    fn eval_atom(&self, a: usize) -> Result<AtomVal, OracleError> {
        match eval_atom(&self.p, &self.c.atoms[a], NO_SCOPE) {
            Ok(Tri::True) => Ok(AtomVal::True),
            Ok(Tri::False) => Ok(AtomVal::False),
            Ok(Tri::Unknown) => Ok(AtomVal::Unknown),
            Err(EvalError::Unbound(_)) => Ok(AtomVal::Error),
            Err(e) => Err(e.into()),
        }
    }

    fn assign(&mut self, cell: usize, value: Scalar) -> Result<(), OracleError> {
        self.p.vals.insert(self.c.cells[cell].clone(), value);
        self.assigned[cell] = true;
        self.trail.push(Undo::Cell(cell));
        for k in 0..self.c.cell_atoms[cell].len() {
            let a = self.c.cell_atoms[cell][k];
            let new = self.eval_atom(a)?;
            if new != self.atom_val[a] {
                self.trail.push(Undo::Atom(a, self.atom_val[a]));
                self.atom_val[a] = new;
            }
        }
        Ok(())
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().expect("trail above mark") {
                Undo::Cell(c) => {
                    self.p.vals.remove(&self.c.cells[c]);
                    self.assigned[c] = false;
                }
                Undo::Atom(a, v) => self.atom_val[a] = v,
                Undo::Forced(a) => self.forced[a] = None,
            }
        }
    }

    fn val(&self, n: usize) -> Tri {
        match &self.c.nodes[n] {
            Node::Const(b) => Tri::from(*b),
            Node::Lit(a, pos) => match self.atom_val[*a] {
                AtomVal::Unknown => match self.forced[*a] {
                    Some(b) => Tri::from(b == *pos),
                    None => Tri::Unknown,
                },
                AtomVal::Error => Tri::False,
                AtomVal::True => Tri::from(*pos),
                AtomVal::False => Tri::from(!*pos),
            },
            Node::And(ks) => {
                let mut acc = Tri::True;
                for &k in ks {
                    match self.val(k) {
                        Tri::False => return Tri::False,
                        Tri::Unknown => acc = Tri::Unknown,
                        Tri::True => {}
                    }
                }
                acc
            }
            Node::Or(ks) => {
                let mut acc = Tri::False;
                for &k in ks {
                    match self.val(k) {
                        Tri::True => return Tri::True,
                        Tri::Unknown => acc = Tri::Unknown,
                        Tri::False => {}
                    }
                }
                acc
            }
        }
    }

    fn tick(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(OracleError::DomainTooLarge { budget: self.budget });
        }
        Ok(())
    }

    /// Like [`Self::val`], but a literal ignores its forced value.
    fn goal_val(&self, n: usize) -> Tri {
        match self.c.nodes[n] {
            Node::Lit(a, pos) => match self.atom_val[a] {
                AtomVal::Unknown => Tri::Unknown,
                AtomVal::Error => Tri::False,
                AtomVal::True => Tri::from(pos),
                AtomVal::False => Tri::from(!pos),
            },
            _ => self.val(n),
        }
    }

    /// Undecided goals, with undecided conjunctions opened up. `None` if one is false.
    fn open_goals(&self, goals: &[usize]) -> Option<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = goals.to_vec();
        while let Some(g) = stack.pop() {
            match self.goal_val(g) {
                Tri::False => return None,
                Tri::True => {}
                Tri::Unknown => match &self.c.nodes[g] {
                    Node::And(ks) => stack.extend(ks.iter().rev()),
                    _ => out.push(g),
                },
            }
        }
        Some(out)
    }

    fn open_lits(&self, n: usize, out: &mut Vec<usize>) {
        if self.val(n) != Tri::Unknown {
            return;
        }
        match &self.c.nodes[n] {
            Node::Lit(..) => out.push(n),
            Node::And(ks) | Node::Or(ks) => {
                for &k in ks {
                    self.open_lits(k, out);
                }
            }
            Node::Const(_) => {}
        }
    }

    fn lit_atom(&self, n: usize) -> usize {
        match self.c.nodes[n] {
            Node::Lit(a, _) => a,
            _ => unreachable!("not a literal"),
        }
    }

    /// Unassigned cells read by literal node `n`.
    fn open_cells(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.c.atom_cells[self.lit_atom(n)].iter().copied().filter(|&c| !self.assigned[c])
    }

    fn all_hold(&self, goals: &[usize]) -> Option<bool> {
        let mut all = true;
        for &g in goals {
            match self.goal_val(g) {
                Tri::False => return None,
                Tri::Unknown => all = false,
                Tri::True => {}
            }
        }
        Some(all)
    }

    /// Forces the atoms of goal literals and promotes disjunctions left with one
    /// live alternative, until nothing changes. `None` on a conflict.
    fn propagate(&mut self, goals: &[usize]) -> Option<Vec<usize>> {
        let mut goals = self.open_goals(goals)?;
        loop {
            let mut changed = false;
            for g in goals.iter_mut() {
                match self.c.nodes[*g] {
                    Node::Lit(a, pos) => match self.forced[a] {
                        None => {
                            self.forced[a] = Some(pos);
                            self.trail.push(Undo::Forced(a));
                            changed = true;
                        }
                        Some(b) if b != pos => return None,
                        Some(_) => {}
                    },
                    Node::Or(ref ks) => {
                        let mut live = ks.iter().copied().filter(|&k| self.val(k) != Tri::False);
                        match (live.next(), live.next()) {
                            (None, _) => return None,
                            (Some(k), None) => {
                                *g = k;
                                changed = true;
                            }
                            _ => {}
                        }
                    }
                    _ => {}
                }
            }
            if !changed {
                return Some(goals);
            }
            goals = self.open_goals(&goals)?;
        }
    }

    fn solve(&mut self, goals: &[usize]) -> Result<bool, OracleError> {
        self.tick()?;
        let Some(goals) = self.propagate(goals) else {
            return Ok(false);
        };
        if goals.is_empty() {
            return Ok(true);
        }
        let groups = self.independent_groups(&goals);
        if groups.len() > 1 {
            let mark = self.trail.len();
            for g in groups {
                if !self.solve(&g)? {
                    self.undo_to(mark);
                    return Ok(false);
                }
            }
            return Ok(true);
        }
        if goals.iter().any(|&g| matches!(self.c.nodes[g], Node::Or(..))) {
            let lits: Vec<usize> = goals.iter().copied().filter(|&g| matches!(self.c.nodes[g], Node::Lit(..))).collect();
            if !lits.is_empty() && self.refuted(&lits)? {
                return Ok(false);
            }
            return self.split(&goals);
        }
        self.branch(&goals)
    }

    /// Whether a short search shows the literal goals alone are unsatisfiable.
    fn refuted(&mut self, lits: &[usize]) -> Result<bool, OracleError> {
        let (mark, budget) = (self.trail.len(), self.budget);
        self.budget = self.nodes + RELAXED_BUDGET;
        let r = self.solve(lits);
        self.budget = budget;
        self.undo_to(mark);
        if self.nodes > self.budget {
            return Err(OracleError::DomainTooLarge { budget });
        }
        match r {
            Ok(sat) => Ok(!sat),
            Err(OracleError::DomainTooLarge { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// Case split on the open disjunction with the fewest live alternatives.
    fn split(&mut self, goals: &[usize]) -> Result<bool, OracleError> {
        let live = |s: &Self, n: usize| match &s.c.nodes[n] {
            Node::Or(ks) => ks.iter().copied().filter(|&k| s.val(k) != Tri::False).collect::<Vec<_>>(),
            _ => Vec::new(),
        };
        let (pos, alts) = goals
            .iter()
            .enumerate()
            .filter(|(_, &g)| matches!(self.c.nodes[g], Node::Or(..)))
            .map(|(i, &g)| (i, live(self, g)))
            .min_by_key(|(_, alts)| alts.len())
            .expect("open goals");
        let mut rest: Vec<usize> = goals.to_vec();
        rest.swap_remove(pos);
        for alt in alts {
            let mark = self.trail.len();
            rest.push(alt);
            if self.solve(&rest)? {
                return Ok(true);
            }
            rest.pop();
            self.undo_to(mark);
        }
        Ok(false)
    }

    fn independent_groups(&self, goals: &[usize]) -> Vec<Vec<usize>> {
        let mut groups: Vec<(BTreeSet<usize>, Vec<usize>)> = Vec::new();
        for &g in goals {
            let mut lits = Vec::new();
            if matches!(self.c.nodes[g], Node::Lit(..)) {
                lits.push(g);
            } else {
                self.open_lits(g, &mut lits);
            }
            let mut cells: BTreeSet<usize> = lits.iter().flat_map(|&a| self.open_cells(a)).collect();
            let mut members = vec![g];
            let mut i = 0;
            while i < groups.len() {
                if groups[i].0.is_disjoint(&cells) {
                    i += 1;
                } else {
                    let (c, m) = groups.swap_remove(i);
                    cells.extend(c);
                    members.extend(m);
                }
            }
            groups.push((cells, members));
        }
        groups.into_iter().map(|(_, m)| m).collect()
    }

    fn branch(&mut self, goals: &[usize]) -> Result<bool, OracleError> {
        let lits: Vec<usize> = goals.iter().copied().filter(|&g| matches!(self.c.nodes[g], Node::Lit(..))).collect();
        // Locations decide whether `port` is bound, so they are split first.
        let key = |s: &Self, n: usize| {
            let cells: Vec<usize> = s.open_cells(n).collect();
            (!cells.iter().any(|&c| matches!(s.c.cells[c], Cell::Loc { .. })), cells.len())
        };
        let focus_lit = lits
            .iter()
            .copied()
            .filter(|&n| self.open_cells(n).next().is_some())
            .min_by_key(|&n| key(self, n))
            .ok_or_else(|| OracleError::Unsupported("no branchable cell".into()))?;
        let focus = self.lit_atom(focus_lit);

        let cells: Vec<usize> = self.open_cells(focus_lit).collect();
        let mut best: Option<(usize, Vec<(u8, Scalar)>)> = None;
        for cell in cells {
            let mut alive = Vec::new();
            for value in self.p.cfg.domain(&self.c.cells[cell]) {
                let mark = self.trail.len();
                self.assign(cell, value.clone())?;
                match self.all_hold(goals) {
                    Some(true) => return Ok(true),
                    Some(false) => {
                        let rank = match (self.goal_val(focus_lit), self.atom_val[focus]) {
                            (Tri::True, _) => 0,
                            (_, AtomVal::Unknown) => 1,
                            _ => 2,
                        };
                        alive.push((rank, value));
                    }
                    None => {}
                }
                self.undo_to(mark);
            }
            if alive.is_empty() {
                return Ok(false);
            }
            if best.as_ref().is_none_or(|(_, b)| alive.len() < b.len()) {
                best = Some((cell, alive));
            }
        }
        let (cell, mut alive) = best.expect("at least one cell");
        if let Some(rng) = &mut self.rng {
            alive.shuffle(rng);
        }
        alive.sort_by_key(|(rank, _)| *rank);
        for (_, value) in alive {
            let mark = self.trail.len();
            self.assign(cell, value)?;
            if self.solve(goals)? {
                return Ok(true);
            }
            self.undo_to(mark);
        }
        Ok(false)
    }
}

/// Node budget of the literal-only refutation tried before each case split.
const RELAXED_BUDGET: u64 = 256;

/// Node budgets of the randomized runs tried before the complete one.
const RESTART_BUDGETS: [u64; 6] = [500, 1_000, 2_000, 4_000, 8_000, 16_000];

/// Some assignment of the cells `f` reads under which `f` holds, if one exists in
/// `cfg`'s domains.
///
/// Short randomized runs go first; a run that exhausts its budget is restarted with
/// a new seed. The final run keeps domain order and uses the configured budget.
pub fn find_model(f: &Formula, cfg: &DomainConfig) -> Result<Option<Model>, OracleError> {
    let p = Partial { cfg, haddrs: cfg.haddrs(), vals: HashMap::new() };
    let g = nnf(&ground(&p, f, &mut Vec::new())?, false);
    let (c, root) = Compiled::new(&g, &p)?;
    let mut s = Search {
        assigned: vec![false; c.cells.len()],
        atom_val: vec![AtomVal::Unknown; c.atoms.len()],
        forced: vec![None; c.atoms.len()],
        p,
        c,
        trail: Vec::new(),
        nodes: 0,
        budget: 0,
        rng: None,
    };
    for a in 0..s.c.atoms.len() {
        s.atom_val[a] = s.eval_atom(a)?;
    }
    let runs = RESTART_BUDGETS.iter().enumerate().map(|(i, &b)| (b, Some(ChaCha8Rng::seed_from_u64(i as u64))));
    for (budget, rng) in runs.chain([(cfg.node_budget, None)]) {
        s.nodes = 0;
        s.budget = budget.min(cfg.node_budget);
        s.rng = rng;
        match s.solve(&[root]) {
            Ok(true) => return Ok(Some(s.p.vals.into_iter().collect())),
            Ok(false) => return Ok(None),
            Err(OracleError::DomainTooLarge { .. }) if s.rng.is_some() => s.undo_to(0),
            Err(e) => return Err(e),
        }
    }
    unreachable!("the final run returns")
}
