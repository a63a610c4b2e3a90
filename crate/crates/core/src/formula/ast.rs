use std::collections::BTreeSet;
use std::fmt;

use crate::netsim::frame::{Dir, Mac};

/// Trace variables. Each may also be read through the snapshot binder `x`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Var {
    Time,
    Frame,
    Loc,
    Port,
    SelfPort,
    Uplink,
    Mto,
    Mlt,
}

impl Var {
    pub const ALL: [Var; 8] = [
        Var::Time,
        Var::Frame,
        Var::Loc,
        Var::Port,
        Var::SelfPort,
        Var::Uplink,
        Var::Mto,
        Var::Mlt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Var::Time => "t",
            Var::Frame => "f",
            Var::Loc => "loc",
            Var::Port => "port",
            Var::SelfPort => "self",
            Var::Uplink => "uplink-port",
            Var::Mto => "mto",
            Var::Mlt => "mlt",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == s)
    }

    /// Configuration constants read the same through the snapshot.
    pub fn is_static(self) -> bool {
        matches!(self, Var::SelfPort | Var::Uplink | Var::Mto)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum FrameField {
    Da,
    Sa,
    Proto,
}

impl FrameField {
    pub const ALL: [FrameField; 3] = [FrameField::Da, FrameField::Sa, FrameField::Proto];

    pub fn name(self) -> &'static str {
        match self {
            FrameField::Da => "da",
            FrameField::Sa => "sa",
            FrameField::Proto => "proto",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum EntryField {
    Mac,
    Time,
    Port,
}

impl EntryField {
    pub const ALL: [EntryField; 3] = [EntryField::Mac, EntryField::Time, EntryField::Port];

    pub fn name(self) -> &'static str {
        match self {
            EntryField::Mac => "mac",
            EntryField::Time => "t",
            EntryField::Port => "port",
        }
    }
}

/// Table index: a quantifier-bound name or a literal slot.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Index {
    Bound(String),
    Lit(usize),
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Bound(n) => f.write_str(n),
            Index::Lit(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var { var: Var, snap: bool },
    Field(Box<Term>, FrameField),
    Entry { table: Box<Term>, index: Index, field: EntryField },
    Mac(Mac),
    Int(i64),
    Proto(String),
    Iface(Box<Term>, Dir),
    Set(Vec<Term>),
    Egress,
    Haddr(Box<Term>),
    Sub(Box<Term>, Box<Term>),
    /// `table(index){mac=…, t=…, port=…}`
    Update { table: Box<Term>, index: Index, mac: Box<Term>, time: Box<Term>, port: Box<Term> },
}

impl Term {
    pub fn var(var: Var) -> Term {
        Term::Var { var, snap: false }
    }

    pub fn snap(var: Var) -> Term {
        Term::Var { var, snap: !var.is_static() }
    }

    pub fn field(base: Term, field: FrameField) -> Term {
        Term::Field(Box::new(base), field)
    }

    pub fn entry(table: Term, index: Index, field: EntryField) -> Term {
        Term::Entry { table: Box::new(table), index, field }
    }

    fn visit<'a>(&'a self, out: &mut impl FnMut(&'a Term)) {
        out(self);
        match self {
            Term::Field(b, _) | Term::Iface(b, _) | Term::Haddr(b) => b.visit(out),
            Term::Entry { table, .. } => table.visit(out),
            Term::Set(items) => items.iter().for_each(|t| t.visit(out)),
            Term::Sub(a, b) => {
                a.visit(out);
                b.visit(out);
            }
            Term::Update { table, mac, time, port, .. } => {
                table.visit(out);
                mac.visit(out);
                time.visit(out);
                port.visit(out);
            }
            Term::Var { .. } | Term::Mac(_) | Term::Int(_) | Term::Proto(_) | Term::Egress => {}
        }
    }

    pub fn contains_update(&self) -> bool {
        let mut found = false;
        self.visit(&mut |t| found |= matches!(t, Term::Update { .. }));
        found
    }

    fn rename_index(&mut self, from: &str, to: &str) {
        let fix = |i: &mut Index| {
            if matches!(i, Index::Bound(n) if n == from) {
                *i = Index::Bound(to.to_string());
            }
        };
        match self {
            Term::Field(b, _) | Term::Iface(b, _) | Term::Haddr(b) => b.rename_index(from, to),
            Term::Entry { table, index, .. } => {
                fix(index);
                table.rename_index(from, to);
            }
            Term::Set(items) => items.iter_mut().for_each(|t| t.rename_index(from, to)),
            Term::Sub(a, b) => {
                a.rename_index(from, to);
                b.rename_index(from, to);
            }
            Term::Update { table, index, mac, time, port } => {
                fix(index);
                for t in [table, mac, time, port] {
                    t.rename_index(from, to);
                }
            }
            Term::Var { .. } | Term::Mac(_) | Term::Int(_) | Term::Proto(_) | Term::Egress => {}
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var { var, snap: false } => f.write_str(var.name()),
            Term::Var { var, snap: true } => write!(f, "(x {})", var.name()),
            Term::Field(b, fld) => write!(f, "(fld {b} {})", fld.name()),
            Term::Entry { table, index, field } => {
                write!(f, "(entry {table} {index} {})", field.name())
            }
            Term::Mac(m) => write!(f, "{m}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::Proto(p) => write!(f, "(proto {p})"),
            Term::Iface(p, Dir::Ingress) => write!(f, "(ing {p})"),
            Term::Iface(p, Dir::Egress) => write!(f, "(egr {p})"),
            Term::Set(items) => {
                f.write_str("(set")?;
                for t in items {
                    write!(f, " {t}")?;
                }
                f.write_str(")")
            }
            Term::Egress => f.write_str("egress"),
            Term::Haddr(p) => write!(f, "(haddr {p})"),
            Term::Sub(a, b) => write!(f, "(- {a} {b})"),
            Term::Update { table, index, mac, time, port } => {
                write!(f, "(upd {table} {index} {mac} {time} {port})")
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    /// Operands are kept in canonical (sorted) order; build through [`Atom::eq`].
    Eq(Term, Term),
    In(Term, Term),
    Subset(Term, Term),
    Le(Term, Term),
    Ucast(Term),
    Bcast(Term),
    ArpReqRx(Term, Term),
    Prop(String),
}

impl Atom {
    pub fn eq(a: Term, b: Term) -> Atom {
        if a <= b {
            Atom::Eq(a, b)
        } else {
            Atom::Eq(b, a)
        }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Eq(a, b)
            | Atom::In(a, b)
            | Atom::Subset(a, b)
            | Atom::Le(a, b)
            | Atom::ArpReqRx(a, b) => vec![a, b],
            Atom::Ucast(a) | Atom::Bcast(a) => vec![a],
            Atom::Prop(_) => vec![],
        }
    }

    fn rename_index(&mut self, from: &str, to: &str) {
        match self {
            Atom::Eq(a, b) => {
                a.rename_index(from, to);
                b.rename_index(from, to);
                *self = Atom::eq(a.clone(), b.clone());
            }
            Atom::In(a, b) | Atom::Subset(a, b) | Atom::Le(a, b) | Atom::ArpReqRx(a, b) => {
                a.rename_index(from, to);
                b.rename_index(from, to);
            }
            Atom::Ucast(a) | Atom::Bcast(a) => a.rename_index(from, to),
            Atom::Prop(_) => {}
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Eq(a, b) => write!(f, "(= {a} {b})"),
            Atom::In(a, b) => write!(f, "(in {a} {b})"),
            Atom::Subset(a, b) => write!(f, "(subset {a} {b})"),
            Atom::Le(a, b) => write!(f, "(<= {a} {b})"),
            Atom::Ucast(a) => write!(f, "(ucast {a})"),
            Atom::Bcast(a) => write!(f, "(bcast {a})"),
            Atom::ArpReqRx(a, b) => write!(f, "(arp-reqrx {a} {b})"),
            Atom::Prop(p) => f.write_str(p),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    /// `λx. body`: the body may read the snapshot `x`.
    Lambda(Box<Formula>),
}

impl Formula {
    pub fn atom(a: Atom) -> Formula {
        Formula::Atom(a)
    }

    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Conjunction with nested conjunctions flattened, `true` dropped and syntactic
    /// duplicates removed (first occurrence kept).
    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::And(inner) => {
                    for q in inner {
                        if !out.contains(&q) {
                            out.push(q);
                        }
                    }
                }
                Formula::False => return Formula::False,
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::Or(inner) => {
                    for q in inner {
                        if !out.contains(&q) {
                            out.push(q);
                        }
                    }
                }
                Formula::True => return Formula::True,
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn binds_snapshot(&self) -> bool {
        matches!(self, Formula::Lambda(_))
    }

    /// The formula with its outermost λ binder removed.
    pub fn strip_lambda(&self) -> &Formula {
        match self {
            Formula::Lambda(body) => body,
            other => other,
        }
    }

    pub fn visit_atoms<'a>(&'a self, out: &mut impl FnMut(&'a Atom)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => out(a),
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::Lambda(f) => {
                f.visit_atoms(out)
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.visit_atoms(out)),
            Formula::Implies(a, b) => {
                a.visit_atoms(out);
                b.visit_atoms(out);
            }
        }
    }

    /// Names of the trace variables read, `x.`-prefixed when read through the snapshot.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut vars = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            for t in a.terms() {
                t.visit(&mut |t| {
                    if let Term::Var { var, snap } = t {
                        let name = if *snap {
                            format!("x.{}", var.name())
                        } else {
                            var.name().to_string()
                        };
                        vars.insert(name);
                    }
                });
            }
        });
        vars
    }

    pub fn contains_update(&self) -> bool {
        let mut found = false;
        self.visit_atoms(&mut |a| found |= a.terms().iter().any(|t| t.contains_update()));
        found
    }

    /// Renames the bound table index `from` to `to` throughout (no capture checks; the
    /// caller picks fresh names).
    pub fn rename_index(&mut self, from: &str, to: &str) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => a.rename_index(from, to),
            Formula::Not(f) | Formula::Lambda(f) => f.rename_index(from, to),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                if v != from {
                    f.rename_index(from, to);
                }
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter_mut().for_each(|f| f.rename_index(from, to)),
            Formula::Implies(a, b) => {
                a.rename_index(from, to);
                b.rename_index(from, to);
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, head: &str, items: &[Formula]| {
            write!(f, "({head}")?;
            for i in items {
                write!(f, " {i}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(gs) => list(f, "and", gs),
            Formula::Or(gs) => list(f, "or", gs),
            Formula::Implies(a, b) => write!(f, "(=> {a} {b})"),
            Formula::Exists(v, g) => write!(f, "(exists {v} {g})"),
            Formula::Forall(v, g) => write!(f, "(forall {v} {g})"),
            Formula::Lambda(g) => write!(f, "(lambda x {g})"),
        }
    }
}
