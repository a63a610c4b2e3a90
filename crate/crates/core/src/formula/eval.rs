//! Evaluation of formulas over (possibly partial) valuations.
//!
//! Every formula reads a finite set of ground scalar *cells* (`t`, `f.da`,
//! `x.mlt(2).port`, …). A [`Valuation`] maps cells to values; an unassigned cell reads
//! as unknown and yields three-valued results, which is what the satisfiability
//! search builds on. A concrete [`Env`] assigns every cell it binds, so evaluation over
//! it is two-valued and fails only on unbound variables.

use std::fmt;

use thiserror::Error;

use crate::netsim::frame::{Dir, Frame, Iface, IfaceSet, Mac, Port, Proto};
use crate::netsim::mac_table::MacTable;

use super::ast::{Atom, EntryField, Formula, FrameField, Index, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("malformed projection: {0}")]
    Malformed(String),
}

/// A ground scalar location read by formulas.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Cell {
    Time { snap: bool },
    Port { snap: bool },
    Loc { snap: bool },
    Frame { snap: bool, field: FrameField },
    Entry { snap: bool, index: usize, field: EntryField },
    SelfPort,
    Uplink,
    Mto,
    Prop(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = |snap: &bool| if *snap { "x." } else { "" };
        match self {
            Cell::Time { snap } => write!(f, "{}t", x(snap)),
            Cell::Port { snap } => write!(f, "{}port", x(snap)),
            Cell::Loc { snap } => write!(f, "{}loc", x(snap)),
            Cell::Frame { snap, field } => write!(f, "{}f.{}", x(snap), field.name()),
            Cell::Entry { snap, index, field } => {
                write!(f, "{}mlt({index}).{}", x(snap), field.name())
            }
            Cell::SelfPort => f.write_str("self"),
            Cell::Uplink => f.write_str("uplink-port"),
            Cell::Mto => f.write_str("mto"),
            Cell::Prop(p) => f.write_str(p),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Scalar {
    Int(i64),
    Mac(Mac),
    Proto(Proto),
    Iface(Iface),
    Set(IfaceSet),
    Bool(bool),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Mac(m) => write!(f, "{m}"),
            Scalar::Proto(p) => write!(f, "{p}"),
            Scalar::Iface(i) => write!(f, "{i}"),
            Scalar::Set(s) => write!(f, "{s}"),
            Scalar::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Kleene truth value.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Tri {
    True,
    False,
    Unknown,
}

impl From<bool> for Tri {
    fn from(b: bool) -> Self {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }
}

impl Tri {
    pub fn not(self) -> Tri {
        match self {
            Tri::True => Tri::False,
            Tri::False => Tri::True,
            Tri::Unknown => Tri::Unknown,
        }
    }
}

pub trait Valuation {
    /// `Ok(None)` means the cell is not (yet) assigned.
    fn cell(&self, cell: &Cell) -> Result<Option<Scalar>, EvalError>;
    fn mlt_size(&self) -> usize;
    fn num_ports(&self) -> usize;
    fn haddr(&self, port: Port) -> Option<Mac>;
}

pub type Scope = Vec<(String, usize)>;

fn resolve(index: &Index, scope: &Scope) -> Result<usize, EvalError> {
    match index {
        Index::Lit(i) => Ok(*i),
        Index::Bound(name) => scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, i)| *i)
            .ok_or_else(|| EvalError::Malformed(format!("index `{name}` is not bound by a quantifier"))),
    }
}

fn is_composite(t: &Term) -> bool {
    matches!(t, Term::Var { var: Var::Frame | Var::Mlt, .. } | Term::Update { .. })
}

/// The cell a leaf term denotes, if it is a variable read.
pub fn term_cell(term: &Term, scope: &Scope) -> Result<Option<Cell>, EvalError> {
    Ok(match term {
        Term::Var { var, snap } => match var {
            Var::Time => Some(Cell::Time { snap: *snap }),
            Var::Port => Some(Cell::Port { snap: *snap }),
            Var::Loc => Some(Cell::Loc { snap: *snap }),
            Var::SelfPort => Some(Cell::SelfPort),
            Var::Uplink => Some(Cell::Uplink),
            Var::Mto => Some(Cell::Mto),
            Var::Frame | Var::Mlt => {
                return Err(EvalError::Malformed(format!("`{term}` is not a scalar")))
            }
        },
        Term::Field(base, field) => match **base {
            Term::Var { var: Var::Frame, snap } => Some(Cell::Frame { snap, field: *field }),
            _ => return Err(EvalError::Malformed(format!("`{term}`"))),
        },
        Term::Entry { table, index, field } => match **table {
            Term::Var { var: Var::Mlt, snap } => Some(Cell::Entry {
                snap,
                index: resolve(index, scope)?,
                field: *field,
            }),
            _ => return Err(EvalError::Malformed(format!("`{term}`"))),
        },
        _ => None,
    })
}

/// Scalar components of a frame- or table-valued term, in a fixed order.
pub fn components<V: Valuation + ?Sized>(
    v: &V,
    term: &Term,
    scope: &Scope,
) -> Result<Vec<Term>, EvalError> {
    match term {
        Term::Var { var: Var::Frame, .. } => Ok(FrameField::ALL
            .iter()
            .map(|f| Term::field(term.clone(), *f))
            .collect()),
        Term::Var { var: Var::Mlt, .. } => Ok((0..v.mlt_size())
            .flat_map(|i| {
                EntryField::ALL
                    .iter()
                    .map(move |f| Term::entry(term.clone(), Index::Lit(i), *f))
            })
            .collect()),
        Term::Update { table, index, mac, time, port } => {
            let k = resolve(index, scope)?;
            if k >= v.mlt_size() {
                return Err(EvalError::Malformed(format!("table index {k} out of range")));
            }
            let mut out = Vec::with_capacity(v.mlt_size() * 3);
            for i in 0..v.mlt_size() {
                if i == k {
                    out.extend([(**mac).clone(), (**time).clone(), (**port).clone()]);
                } else {
                    out.extend(
                        EntryField::ALL
                            .iter()
                            .map(|f| Term::entry((**table).clone(), Index::Lit(i), *f)),
                    );
                }
            }
            Ok(out)
        }
        _ => Err(EvalError::Malformed(format!("`{term}` is not a frame or table"))),
    }
}

pub fn scalar<V: Valuation + ?Sized>(
    v: &V,
    term: &Term,
    scope: &Scope,
) -> Result<Option<Scalar>, EvalError> {
    if let Some(cell) = term_cell(term, scope)? {
        if let Cell::Entry { index, .. } = cell {
            if index >= v.mlt_size() {
                return Err(EvalError::Malformed(format!("table index {index} out of range")));
            }
        }
        return v.cell(&cell);
    }
    let int = |t: &Term| -> Result<Option<i64>, EvalError> {
        match scalar(v, t, scope)? {
            None => Ok(None),
            Some(Scalar::Int(i)) => Ok(Some(i)),
            Some(other) => Err(EvalError::Malformed(format!("`{t}` = {other} is not an integer"))),
        }
    };
    Ok(match term {
        Term::Mac(m) => Some(Scalar::Mac(*m)),
        Term::Int(i) => Some(Scalar::Int(*i)),
        Term::Proto(p) => Some(Scalar::Proto(Proto::new(p))),
        Term::Iface(p, dir) => int(p)?.map(|port| Scalar::Iface(Iface { port, dir: *dir })),
        Term::Set(items) => {
            let mut set = IfaceSet::new();
            for item in items {
                match scalar(v, item, scope)? {
                    None => return Ok(None),
                    Some(Scalar::Iface(i)) => set.insert(i),
                    Some(other) => {
                        return Err(EvalError::Malformed(format!("set element {other}")))
                    }
                }
            }
            Some(Scalar::Set(set))
        }
        Term::Egress => Some(Scalar::Set(IfaceSet::all_egress(v.num_ports()))),
        Term::Haddr(p) => match int(p)? {
            None => None,
            Some(port) => Some(Scalar::Mac(
                v.haddr(port)
                    .ok_or_else(|| EvalError::Malformed(format!("no port {port}")))?,
            )),
        },
        Term::Sub(a, b) => match (int(a)?, int(b)?) {
            (Some(a), Some(b)) => Some(Scalar::Int(a - b)),
            _ => None,
        },
        Term::Var { .. } | Term::Field(..) | Term::Entry { .. } => unreachable!("handled as cells"),
        Term::Update { .. } => {
            return Err(EvalError::Malformed(format!("`{term}` is not a scalar")))
        }
    })
}

/// A set literal can never equal `known` when sizes or directions disagree, whatever its
/// unbound elements are.
fn set_literal_mismatch(literal: &Term, known: &Scalar) -> bool {
    let (Term::Set(items), Scalar::Set(s)) = (literal, known) else {
        return false;
    };
    let count = |dir: Dir| items.iter().filter(|i| matches!(i, Term::Iface(_, d) if *d == dir)).count();
    let known_count = |dir: Dir| s.iter().filter(|i| i.dir == dir).count();
    items.len() != s.len()
        || count(Dir::Ingress) != known_count(Dir::Ingress)
        || count(Dir::Egress) != known_count(Dir::Egress)
}

fn same_sort(a: &Scalar, b: &Scalar) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

fn eq_scalar_terms<V: Valuation + ?Sized>(
    v: &V,
    a: &Term,
    b: &Term,
    scope: &Scope,
) -> Result<Tri, EvalError> {
    let x = scalar(v, a, scope);
    let y = scalar(v, b, scope);
    match (x, y) {
        (Ok(Some(x)), Ok(Some(y))) => {
            if !same_sort(&x, &y) {
                return Err(EvalError::Malformed(format!("`{a}` and `{b}` have different sorts")));
            }
            Ok((x == y).into())
        }
        (Err(e), Ok(Some(known))) => {
            if set_literal_mismatch(a, &known) {
                Ok(Tri::False)
            } else {
                Err(e)
            }
        }
        (Ok(Some(known)), Err(e)) => {
            if set_literal_mismatch(b, &known) {
                Ok(Tri::False)
            } else {
                Err(e)
            }
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
        _ => Ok(Tri::Unknown),
    }
}

/// Conjunction accumulator: `False` wins, then `Unknown` (a completion may still decide
/// the value), then errors.
struct Conj {
    unknown: bool,
    err: Option<EvalError>,
}

impl Conj {
    fn new() -> Self {
        Conj { unknown: false, err: None }
    }

    /// Returns true when the conjunction is decided false.
    fn push(&mut self, r: Result<Tri, EvalError>) -> bool {
        match r {
            Ok(Tri::False) => return true,
            Ok(Tri::Unknown) => self.unknown = true,
            Ok(Tri::True) => {}
            Err(e) => {
                self.err.get_or_insert(e);
            }
        }
        false
    }

    fn finish(self) -> Result<Tri, EvalError> {
        match self.err {
            _ if self.unknown => Ok(Tri::Unknown),
            Some(e) => Err(e),
            None => Ok(Tri::True),
        }
    }
}

fn negate(r: Result<Tri, EvalError>) -> Result<Tri, EvalError> {
    r.map(Tri::not)
}

fn expect<T>(r: Option<Scalar>, what: &str, pick: impl Fn(Scalar) -> Option<T>) -> Result<Option<T>, EvalError> {
    match r {
        None => Ok(None),
        Some(s) => {
            let shown = s.to_string();
            pick(s)
                .map(Some)
                .ok_or_else(|| EvalError::Malformed(format!("expected {what}, found {shown}")))
        }
    }
}

pub fn eval_atom<V: Valuation + ?Sized>(v: &V, atom: &Atom, scope: &Scope) -> Result<Tri, EvalError> {
    let set = |t: &Term| expect(scalar(v, t, scope)?, "a location set", |s| match s {
        Scalar::Set(s) => Some(s),
        _ => None,
    });
    let int = |t: &Term| expect(scalar(v, t, scope)?, "an integer", |s| match s {
        Scalar::Int(i) => Some(i),
        _ => None,
    });
    let mac = |t: &Term| expect(scalar(v, t, scope)?, "a MAC address", |s| match s {
        Scalar::Mac(m) => Some(m),
        _ => None,
    });
    let known = |x: Option<bool>| x.map(Tri::from).unwrap_or(Tri::Unknown);
    match atom {
        Atom::Eq(a, b) => {
            if is_composite(a) || is_composite(b) {
                let ca = components(v, a, scope)?;
                let cb = components(v, b, scope)?;
                if ca.len() != cb.len() {
                    return Err(EvalError::Malformed(format!("`{a}` and `{b}` have different sorts")));
                }
                let mut acc = Conj::new();
                for (x, y) in ca.iter().zip(&cb) {
                    if acc.push(eq_scalar_terms(v, x, y, scope)) {
                        return Ok(Tri::False);
                    }
                }
                acc.finish()
            } else {
                eq_scalar_terms(v, a, b, scope)
            }
        }
        Atom::In(e, s) => {
            let elem = expect(scalar(v, e, scope)?, "an interface", |s| match s {
                Scalar::Iface(i) => Some(i),
                _ => None,
            })?;
            let s = set(s)?;
            Ok(known(elem.zip(s).map(|(i, s)| s.contains(&i))))
        }
        Atom::Subset(a, b) => {
            let (a, b) = (set(a)?, set(b)?);
            Ok(known(a.zip(b).map(|(a, b)| a.is_subset(&b))))
        }
        Atom::Le(a, b) => {
            let (a, b) = (int(a)?, int(b)?);
            Ok(known(a.zip(b).map(|(a, b)| a <= b)))
        }
        Atom::Ucast(t) => Ok(known(mac(t)?.map(|m| m.is_unicast()))),
        Atom::Bcast(t) => Ok(known(mac(t)?.map(|m| m.is_broadcast()))),
        Atom::ArpReqRx(frame, port) => {
            let proto = scalar(v, &Term::field(frame.clone(), FrameField::Proto), scope)?;
            let proto = expect(proto, "a protocol tag", |s| match s {
                Scalar::Proto(p) => Some(p),
                _ => None,
            })?;
            let port = int(port)?;
            Ok(known(proto.zip(port).map(|(p, port)| p.requests_port(port))))
        }
        Atom::Prop(name) => match v.cell(&Cell::Prop(name.clone()))? {
            None => Ok(Tri::Unknown),
            Some(Scalar::Bool(b)) => Ok(b.into()),
            Some(other) => Err(EvalError::Malformed(format!("proposition {name} = {other}"))),
        },
    }
}

pub fn eval_tri<V: Valuation + ?Sized>(
    v: &V,
    f: &Formula,
    scope: &mut Scope,
) -> Result<Tri, EvalError> {
    match f {
        Formula::True => Ok(Tri::True),
        Formula::False => Ok(Tri::False),
        Formula::Atom(a) => eval_atom(v, a, scope),
        Formula::Not(g) => negate(eval_tri(v, g, scope)),
        Formula::Lambda(g) => eval_tri(v, g, scope),
        Formula::And(gs) => {
            let mut acc = Conj::new();
            for g in gs {
                if acc.push(eval_tri(v, g, scope)) {
                    return Ok(Tri::False);
                }
            }
            acc.finish()
        }
        Formula::Or(gs) => {
            let mut acc = Conj::new();
            for g in gs {
                if acc.push(negate(eval_tri(v, g, scope))) {
                    return Ok(Tri::True);
                }
            }
            negate(acc.finish())
        }
        Formula::Implies(a, b) => {
            let mut acc = Conj::new();
            if acc.push(eval_tri(v, a, scope)) {
                return Ok(Tri::True);
            }
            if acc.push(negate(eval_tri(v, b, scope))) {
                return Ok(Tri::True);
            }
            negate(acc.finish())
        }
        Formula::Exists(name, body) | Formula::Forall(name, body) => {
            let exists = matches!(f, Formula::Exists(..));
            let mut acc = Conj::new();
            for i in 0..v.mlt_size() {
                scope.push((name.clone(), i));
                let r = eval_tri(v, body, scope);
                scope.pop();
                let r = if exists { negate(r) } else { r };
                if acc.push(r) {
                    return Ok(if exists { Tri::True } else { Tri::False });
                }
            }
            let r = acc.finish();
            if exists {
                negate(r)
            } else {
                r
            }
        }
    }
}

/// The first atom (in evaluation order) whose value is still unknown and on which the
/// formula's value depends, with the quantifier scope it is read under.
pub fn focus_atom<V: Valuation + ?Sized>(
    v: &V,
    f: &Formula,
    scope: &mut Scope,
) -> Result<Option<(Atom, Scope)>, EvalError> {
    match eval_tri(v, f, scope) {
        Ok(Tri::Unknown) => {}
        Ok(_) | Err(EvalError::Unbound(_)) => return Ok(None),
        Err(e) => return Err(e),
    }
    match f {
        Formula::True | Formula::False => Ok(None),
        Formula::Atom(a) => Ok(Some((a.clone(), scope.clone()))),
        Formula::Not(g) | Formula::Lambda(g) => focus_atom(v, g, scope),
        Formula::And(gs) | Formula::Or(gs) => {
            for g in gs {
                if let Some(found) = focus_atom(v, g, scope)? {
                    return Ok(Some(found));
                }
            }
            Ok(None)
        }
        Formula::Implies(a, b) => match focus_atom(v, a, scope)? {
            Some(found) => Ok(Some(found)),
            None => focus_atom(v, b, scope),
        },
        Formula::Exists(name, body) | Formula::Forall(name, body) => {
            for i in 0..v.mlt_size() {
                scope.push((name.clone(), i));
                let r = focus_atom(v, body, scope);
                scope.pop();
                if let Some(found) = r? {
                    return Ok(Some(found));
                }
            }
            Ok(None)
        }
    }
}

fn leaf_cells<V: Valuation + ?Sized>(
    v: &V,
    term: &Term,
    scope: &Scope,
    out: &mut Vec<Cell>,
) -> Result<(), EvalError> {
    if let Some(c) = term_cell(term, scope)? {
        if matches!(v.cell(&c), Ok(None)) && !out.contains(&c) {
            out.push(c);
        }
        return Ok(());
    }
    match term {
        Term::Iface(p, _) | Term::Haddr(p) => leaf_cells(v, p, scope, out),
        Term::Set(items) => items.iter().try_for_each(|t| leaf_cells(v, t, scope, out)),
        Term::Sub(a, b) => {
            leaf_cells(v, a, scope, out)?;
            leaf_cells(v, b, scope, out)
        }
        _ => Ok(()),
    }
}

/// Unassigned cells an atom reads, in branching order. For frame/table equalities only
/// the first undecided component pair is returned, the partner of an assigned side
/// first, so the search fixes components one at a time.
pub fn unassigned_cells<V: Valuation + ?Sized>(
    v: &V,
    atom: &Atom,
    scope: &Scope,
) -> Result<Vec<Cell>, EvalError> {
    let mut out = Vec::new();
    match atom {
        Atom::Eq(a, b) if is_composite(a) || is_composite(b) => {
            let ca = components(v, a, scope)?;
            let cb = components(v, b, scope)?;
            for (x, y) in ca.iter().zip(&cb) {
                if !matches!(eq_scalar_terms(v, x, y, scope), Ok(Tri::Unknown)) {
                    continue;
                }
                let (mut lx, mut ly) = (Vec::new(), Vec::new());
                leaf_cells(v, x, scope, &mut lx)?;
                leaf_cells(v, y, scope, &mut ly)?;
                out.extend(lx);
                for c in ly {
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
                break;
            }
        }
        Atom::ArpReqRx(frame, port) => {
            leaf_cells(v, &Term::field(frame.clone(), FrameField::Proto), scope, &mut out)?;
            leaf_cells(v, port, scope, &mut out)?;
        }
        Atom::Prop(name) => {
            let c = Cell::Prop(name.clone());
            if v.cell(&c)?.is_none() {
                out.push(c);
            }
        }
        _ => {
            for t in atom.terms() {
                leaf_cells(v, t, scope, &mut out)?;
            }
        }
    }
    Ok(out)
}

/// A concrete environment: one trace position with its bindings.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Env {
    pub time: i64,
    pub frame: Option<Frame>,
    pub loc: IfaceSet,
    /// Present iff `loc` is `{p i}`.
    pub port: Option<Port>,
    pub self_port: Port,
    pub uplink: Port,
    pub mto: i64,
    pub mlt: MacTable,
    /// The previous position, read through `x`.
    pub snapshot: Option<Box<Env>>,
    /// Hardware address of port `p` at index `p - 1`.
    pub haddrs: Vec<Mac>,
}

impl Env {
    /// Copy without the snapshot chain, for use as the next position's snapshot.
    pub fn detached(&self) -> Env {
        Env { snapshot: None, ..self.clone() }
    }

    pub fn with_self(&self, self_port: Port) -> Env {
        let mut e = self.clone();
        e.self_port = self_port;
        if let Some(s) = e.snapshot.as_mut() {
            s.self_port = self_port;
        }
        e
    }

    fn frame_field(&self, field: FrameField) -> Result<Scalar, EvalError> {
        let frame = self.frame.as_ref().ok_or_else(|| EvalError::Unbound("f".into()))?;
        Ok(match field {
            FrameField::Da => Scalar::Mac(frame.da),
            FrameField::Sa => Scalar::Mac(frame.sa),
            FrameField::Proto => Scalar::Proto(frame.proto.clone()),
        })
    }

    fn own_cell(&self, cell: &Cell) -> Result<Scalar, EvalError> {
        Ok(match cell {
            Cell::Time { .. } => Scalar::Int(self.time),
            Cell::Port { .. } => Scalar::Int(self.port.ok_or_else(|| EvalError::Unbound("port".into()))?),
            Cell::Loc { .. } => Scalar::Set(self.loc.clone()),
            Cell::Frame { field, .. } => self.frame_field(*field)?,
            Cell::Entry { index, field, .. } => {
                let e = self
                    .mlt
                    .entries
                    .get(*index)
                    .ok_or_else(|| EvalError::Malformed(format!("table index {index} out of range")))?;
                match field {
                    EntryField::Mac => Scalar::Mac(e.mac),
                    EntryField::Time => Scalar::Int(e.t),
                    EntryField::Port => Scalar::Int(e.port),
                }
            }
            Cell::SelfPort => Scalar::Int(self.self_port),
            Cell::Uplink => Scalar::Int(self.uplink),
            Cell::Mto => Scalar::Int(self.mto),
            Cell::Prop(p) => return Err(EvalError::Unbound(p.clone())),
        })
    }
}

impl Valuation for Env {
    fn cell(&self, cell: &Cell) -> Result<Option<Scalar>, EvalError> {
        let snap = matches!(
            cell,
            Cell::Time { snap: true }
                | Cell::Port { snap: true }
                | Cell::Loc { snap: true }
                | Cell::Frame { snap: true, .. }
                | Cell::Entry { snap: true, .. }
        );
        if snap {
            let s = self.snapshot.as_ref().ok_or_else(|| EvalError::Unbound(format!("x ({cell})")))?;
            s.own_cell(cell).map(Some).map_err(|e| match e {
                EvalError::Unbound(v) => EvalError::Unbound(format!("x.{v}")),
                other => other,
            })
        } else {
            self.own_cell(cell).map(Some)
        }
    }

    fn mlt_size(&self) -> usize {
        self.mlt.len()
    }

    fn num_ports(&self) -> usize {
        self.haddrs.len()
    }

    fn haddr(&self, port: Port) -> Option<Mac> {
        usize::try_from(port - 1).ok().and_then(|i| self.haddrs.get(i)).copied()
    }
}

/// Two-valued evaluation over a concrete environment.
pub fn eval(f: &Formula, env: &Env) -> Result<bool, EvalError> {
    match eval_tri(env, f, &mut Vec::new())? {
        Tri::True => Ok(true),
        Tri::False => Ok(false),
        Tri::Unknown => Err(EvalError::Unbound("(partial environment)".into())),
    }
}
