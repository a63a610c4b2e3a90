//! SMT-LIB v2 encoding.
//!
//! Each subformula is encoded as a pair `(T, F)`: conditions under which it is
//! definitely true and definitely false. The pair differs from `(e, ¬e)` only where
//! `port` is read while `loc` is not an ingress singleton, which makes the reading
//! atom undefined exactly as in the evaluator. The script asserts `T`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::formula::ast::{EntryField, FrameField, Var};
use crate::formula::eval::{components, term_cell, Cell, EvalError, Scalar, Scope, Valuation};
use crate::formula::{Atom, Formula, Term};
use crate::netsim::frame::{Dir, Mac, Port, Proto};

use super::{DomainConfig, OracleError};

fn and(parts: Vec<String>) -> String {
    let parts: Vec<String> = parts.into_iter().filter(|p| p != "true").collect();
    if parts.iter().any(|p| p == "false") {
        return "false".into();
    }
    match parts.len() {
        0 => "true".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

fn or(parts: Vec<String>) -> String {
    let parts: Vec<String> = parts.into_iter().filter(|p| p != "false").collect();
    if parts.iter().any(|p| p == "true") {
        return "true".into();
    }
    match parts.len() {
        0 => "false".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(or {})", parts.join(" ")),
    }
}

fn not(e: String) -> String {
    match e.as_str() {
        "true" => "false".into(),
        "false" => "true".into(),
        _ => format!("(not {e})"),
    }
}

fn int(i: i64) -> String {
    if i < 0 {
        format!("(- {})", -i)
    } else {
        i.to_string()
    }
}

fn quote(name: &str) -> String {
    format!("|{name}|")
}

#[derive(Clone, Debug)]
enum Val {
    Int(String),
    Mac(String),
    Proto(String),
    Iface(String, Dir),
    /// One bit per interface, in `DomainConfig::interfaces` order.
    Set(Vec<String>),
}

struct Shape<'a>(&'a DomainConfig);

impl Valuation for Shape<'_> {
    fn cell(&self, _: &Cell) -> Result<Option<Scalar>, EvalError> {
        Ok(None)
    }
    fn mlt_size(&self) -> usize {
        self.0.mlt_size
    }
    fn num_ports(&self) -> usize {
        self.0.num_ports
    }
    fn haddr(&self, port: Port) -> Option<Mac> {
        Some(Mac::port_address(port))
    }
}

struct Encoder<'a> {
    cfg: &'a DomainConfig,
    macs: Vec<Mac>,
    protos: Vec<Proto>,
    domain_macs: usize,
    domain_protos: usize,
    /// Declarations and side assertions per cell, emitted in name order.
    decls: BTreeMap<String, String>,
}

impl<'a> Encoder<'a> {
    fn new(cfg: &'a DomainConfig) -> Self {
        let macs = cfg.macs();
        let protos = cfg.protos();
        Encoder { cfg, domain_macs: macs.len(), domain_protos: protos.len(), macs, protos, decls: BTreeMap::new() }
    }

    fn mac_const(&mut self, m: Mac) -> String {
        let i = match self.macs.iter().position(|x| *x == m) {
            Some(i) => i,
            None => {
                self.macs.push(m);
                self.macs.len() - 1
            }
        };
        format!("mac{i}")
    }

    fn proto_const(&mut self, p: &Proto) -> String {
        let i = match self.protos.iter().position(|x| x == p) {
            Some(i) => i,
            None => {
                self.protos.push(p.clone());
                self.protos.len() - 1
            }
        };
        format!("proto{i}")
    }

    fn bounded_int(&mut self, name: &str, lo: i64, hi: i64) -> String {
        let q = quote(name);
        self.decls.entry(name.to_string()).or_insert_with(|| {
            format!("(declare-const {q} Int)\n(assert (and (<= {} {q}) (<= {q} {})))\n", int(lo), int(hi))
        });
        q
    }

    fn loc_bits(&mut self, snap: bool) -> Vec<String> {
        let prefix = if snap { "x.loc" } else { "loc" };
        let ifaces = self.cfg.interfaces();
        let names: Vec<String> = ifaces.iter().map(|i| format!("{prefix}.{i}")).collect();
        if !self.decls.contains_key(prefix) {
            let mut d = String::new();
            for n in &names {
                let _ = writeln!(d, "(declare-const {} Bool)", quote(n));
            }
            self.decls.insert(prefix.to_string(), d);
        }
        names.iter().map(|n| quote(n)).collect()
    }

    /// Name of the condition "`loc` is an ingress singleton", declaring the linked
    /// `port` cell on first use.
    fn port_defined(&mut self, snap: bool) -> (String, String) {
        let bits = self.loc_bits(snap);
        let port = self.bounded_int(if snap { "x.port" } else { "port" }, 1, self.cfg.num_ports as i64);
        let def_name = if snap { "x.port.defined" } else { "port.defined" };
        if !self.decls.contains_key(def_name) {
            let ifaces = self.cfg.interfaces();
            let mut singles = Vec::new();
            let mut links = String::new();
            for (k, iface) in ifaces.iter().enumerate() {
                if iface.dir != Dir::Ingress {
                    continue;
                }
                let others: Vec<String> =
                    bits.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, b)| not(b.clone())).collect();
                let single = and(std::iter::once(bits[k].clone()).chain(others).collect());
                let _ = writeln!(links, "(assert (=> {single} (= {port} {})))", iface.port);
                singles.push(single);
            }
            let mut d = format!("(define-fun {} () Bool {})\n", quote(def_name), or(singles));
            d.push_str(&links);
            self.decls.insert(def_name.to_string(), d);
        }
        (quote(def_name), port)
    }

    fn cell(&mut self, cell: &Cell, defs: &mut Vec<String>) -> Val {
        let name = cell.to_string();
        let n = self.cfg.num_ports as i64;
        let tb = self.cfg.time_bound;
        match cell {
            Cell::Time { .. } | Cell::Mto | Cell::Entry { field: EntryField::Time, .. } => {
                Val::Int(self.bounded_int(&name, 0, tb))
            }
            Cell::SelfPort | Cell::Uplink | Cell::Entry { field: EntryField::Port, .. } => {
                Val::Int(self.bounded_int(&name, 1, n))
            }
            Cell::Port { snap } => {
                let (def, port) = self.port_defined(*snap);
                if !defs.contains(&def) {
                    defs.push(def);
                }
                Val::Int(port)
            }
            Cell::Loc { snap } => Val::Set(self.loc_bits(*snap)),
            Cell::Frame { field: FrameField::Da | FrameField::Sa, .. } | Cell::Entry { field: EntryField::Mac, .. } => {
                let q = quote(&name);
                self.decls.entry(name).or_insert_with(|| format!("(declare-const {q} Mac)\n"));
                Val::Mac(q)
            }
            Cell::Frame { field: FrameField::Proto, .. } => {
                let q = quote(&name);
                self.decls.entry(name).or_insert_with(|| format!("(declare-const {q} Proto)\n"));
                Val::Proto(q)
            }
            Cell::Prop(_) => unreachable!("propositions are atoms"),
        }
    }

    fn term(&mut self, t: &Term, scope: &Scope, defs: &mut Vec<String>) -> Result<Val, OracleError> {
        if let Some(cell) = term_cell(t, scope)? {
            if let Cell::Entry { index, .. } = cell {
                if index >= self.cfg.mlt_size {
                    return Err(EvalError::Malformed(format!("table index {index} out of range")).into());
                }
            }
            return Ok(self.cell(&cell, defs));
        }
        let int_of = |v: Val| match v {
            Val::Int(s) => Ok(s),
            other => Err(OracleError::Unsupported(format!("expected an integer, found {other:?}"))),
        };
        Ok(match t {
            Term::Mac(m) => Val::Mac(self.mac_const(*m)),
            Term::Int(i) => Val::Int(int(*i)),
            Term::Proto(p) => Val::Proto(self.proto_const(&Proto::new(p))),
            Term::Iface(p, dir) => Val::Iface(int_of(self.term(p, scope, defs)?)?, *dir),
            Term::Set(items) => {
                let mut members = Vec::new();
                for item in items {
                    match self.term(item, scope, defs)? {
                        Val::Iface(p, d) => members.push((p, d)),
                        other => return Err(OracleError::Unsupported(format!("set element {other:?}"))),
                    }
                }
                let bits = self
                    .cfg
                    .interfaces()
                    .iter()
                    .map(|i| {
                        or(members
                            .iter()
                            .filter(|(_, d)| *d == i.dir)
                            .map(|(p, _)| format!("(= {p} {})", i.port))
                            .collect())
                    })
                    .collect();
                Val::Set(bits)
            }
            Term::Egress => Val::Set(
                self.cfg
                    .interfaces()
                    .iter()
                    .map(|i| if i.dir == Dir::Egress { "true".into() } else { "false".into() })
                    .collect(),
            ),
            Term::Haddr(p) => {
                let p = int_of(self.term(p, scope, defs)?)?;
                Val::Mac(format!("(haddr {p})"))
            }
            Term::Sub(a, b) => {
                let a = int_of(self.term(a, scope, defs)?)?;
                let b = int_of(self.term(b, scope, defs)?)?;
                Val::Int(format!("(- {a} {b})"))
            }
            Term::Update { .. } | Term::Var { .. } | Term::Field(..) | Term::Entry { .. } => {
                return Err(OracleError::Unsupported(format!("`{t}` outside a table equality")))
            }
        })
    }

    fn eq(&self, a: &Val, b: &Val) -> Result<String, OracleError> {
        Ok(match (a, b) {
            (Val::Int(x), Val::Int(y)) | (Val::Mac(x), Val::Mac(y)) | (Val::Proto(x), Val::Proto(y)) => {
                format!("(= {x} {y})")
            }
            (Val::Iface(x, d), Val::Iface(y, e)) => {
                if d == e {
                    format!("(= {x} {y})")
                } else {
                    "false".into()
                }
            }
            (Val::Set(x), Val::Set(y)) => and(x.iter().zip(y).map(|(a, b)| format!("(= {a} {b})")).collect()),
            _ => return Err(OracleError::Unsupported(format!("equality between {a:?} and {b:?}"))),
        })
    }

    /// "A set literal with these items cannot equal `known`" (see the evaluator).
    fn literal_mismatch(&self, literal: &Term, known: &Val) -> Option<String> {
        let (Term::Set(items), Val::Set(bits)) = (literal, known) else {
            return None;
        };
        let ifaces = self.cfg.interfaces();
        let count = |dir: Dir| {
            let sum: Vec<String> = ifaces
                .iter()
                .zip(bits)
                .filter(|(i, _)| i.dir == dir)
                .map(|(_, b)| format!("(ite {b} 1 0)"))
                .collect();
            let lit = items.iter().filter(|i| matches!(i, Term::Iface(_, d) if *d == dir)).count();
            format!("(not (= (+ 0 {}) {lit}))", sum.join(" "))
        };
        Some(or(vec![count(Dir::Ingress), count(Dir::Egress)]))
    }

    fn scalar_eq(&mut self, a: &Term, b: &Term, scope: &Scope) -> Result<(String, String), OracleError> {
        let (mut da, mut db) = (Vec::new(), Vec::new());
        let va = self.term(a, scope, &mut da)?;
        let vb = self.term(b, scope, &mut db)?;
        let e = self.eq(&va, &vb)?;
        let (ca, cb) = (and(da), and(db));
        let both = and(vec![ca.clone(), cb.clone()]);
        let t = and(vec![both.clone(), e.clone()]);
        let mut f = vec![and(vec![both, not(e)])];
        if let Some(m) = self.literal_mismatch(a, &vb) {
            f.push(and(vec![not(ca.clone()), cb.clone(), m]));
        }
        if let Some(m) = self.literal_mismatch(b, &va) {
            f.push(and(vec![ca, not(cb), m]));
        }
        Ok((t, or(f)))
    }

    fn atom(&mut self, atom: &Atom, scope: &Scope) -> Result<(String, String), OracleError> {
        let composite =
            |t: &Term| matches!(t, Term::Var { var: Var::Frame | Var::Mlt, .. } | Term::Update { .. });
        let mut defs = Vec::new();
        let e = match atom {
            Atom::Eq(a, b) if composite(a) || composite(b) => {
                let shape = Shape(self.cfg);
                let ca = components(&shape, a, scope)?;
                let cb = components(&shape, b, scope)?;
                if ca.len() != cb.len() {
                    return Err(OracleError::Unsupported(format!("`{atom}` compares different sorts")));
                }
                let (mut ts, mut fs) = (Vec::new(), Vec::new());
                for (x, y) in ca.iter().zip(&cb) {
                    let (t, f) = self.scalar_eq(x, y, scope)?;
                    ts.push(t);
                    fs.push(f);
                }
                return Ok((and(ts), or(fs)));
            }
            Atom::Eq(a, b) => return self.scalar_eq(a, b, scope),
            Atom::In(x, s) => {
                let Val::Iface(p, dir) = self.term(x, scope, &mut defs)? else {
                    return Err(OracleError::Unsupported(format!("`{atom}`")));
                };
                let Val::Set(bits) = self.term(s, scope, &mut defs)? else {
                    return Err(OracleError::Unsupported(format!("`{atom}`")));
                };
                let ifaces = self.cfg.interfaces();
                or(ifaces
                    .iter()
                    .zip(&bits)
                    .filter(|(i, _)| i.dir == dir)
                    .map(|(i, b)| and(vec![format!("(= {p} {})", i.port), b.clone()]))
                    .collect())
            }
            Atom::Subset(a, b) => {
                let (Val::Set(x), Val::Set(y)) = (self.term(a, scope, &mut defs)?, self.term(b, scope, &mut defs)?)
                else {
                    return Err(OracleError::Unsupported(format!("`{atom}`")));
                };
                and(x.iter().zip(&y).map(|(a, b)| format!("(=> {a} {b})")).collect())
            }
            Atom::Le(a, b) => match (self.term(a, scope, &mut defs)?, self.term(b, scope, &mut defs)?) {
                (Val::Int(x), Val::Int(y)) => format!("(<= {x} {y})"),
                _ => return Err(OracleError::Unsupported(format!("`{atom}`"))),
            },
            Atom::Ucast(t) | Atom::Bcast(t) => {
                let Val::Mac(m) = self.term(t, scope, &mut defs)? else {
                    return Err(OracleError::Unsupported(format!("`{atom}`")));
                };
                let f = if matches!(atom, Atom::Ucast(_)) { "ucast" } else { "bcast" };
                format!("({f} {m})")
            }
            Atom::ArpReqRx(frame, p) => {
                let proto = Term::field(frame.clone(), FrameField::Proto);
                let Val::Proto(pr) = self.term(&proto, scope, &mut defs)? else {
                    return Err(OracleError::Unsupported(format!("`{atom}`")));
                };
                let Val::Int(p) = self.term(p, scope, &mut defs)? else {
                    return Err(OracleError::Unsupported(format!("`{atom}`")));
                };
                format!("(arpreq {pr} {p})")
            }
            Atom::Prop(name) => {
                let q = quote(&format!("prop.{name}"));
                self.decls.entry(format!("prop.{name}")).or_insert_with(|| format!("(declare-const {q} Bool)\n"));
                q
            }
        };
        let d = and(defs);
        Ok((and(vec![d.clone(), e.clone()]), and(vec![d, not(e)])))
    }

    fn formula(&mut self, f: &Formula, scope: &mut Scope) -> Result<(String, String), OracleError> {
        Ok(match f {
            Formula::True => ("true".into(), "false".into()),
            Formula::False => ("false".into(), "true".into()),
            Formula::Atom(a) => self.atom(a, scope)?,
            Formula::Not(g) => {
                let (t, f) = self.formula(g, scope)?;
                (f, t)
            }
            Formula::Lambda(g) => self.formula(g, scope)?,
            Formula::And(gs) | Formula::Or(gs) => {
                let (mut ts, mut fs) = (Vec::new(), Vec::new());
                for g in gs {
                    let (t, f) = self.formula(g, scope)?;
                    ts.push(t);
                    fs.push(f);
                }
                if matches!(f, Formula::And(_)) {
                    (and(ts), or(fs))
                } else {
                    (or(ts), and(fs))
                }
            }
            Formula::Implies(a, b) => {
                let (ta, fa) = self.formula(a, scope)?;
                let (tb, fb) = self.formula(b, scope)?;
                (or(vec![fa, tb]), and(vec![ta, fb]))
            }
            Formula::Exists(name, body) | Formula::Forall(name, body) => {
                let (mut ts, mut fs) = (Vec::new(), Vec::new());
                for i in 0..self.cfg.mlt_size {
                    scope.push((name.clone(), i));
                    let r = self.formula(body, scope);
                    scope.pop();
                    let (t, f) = r?;
                    ts.push(t);
                    fs.push(f);
                }
                if matches!(f, Formula::Exists(..)) {
                    (or(ts), and(fs))
                } else {
                    (and(ts), or(fs))
                }
            }
        })
    }

    fn header(&self) -> String {
        let mut s = String::from("(set-logic ALL)\n");
        let enumerate = |prefix: &str, n: usize| -> String {
            (0..n).map(|i| format!("({prefix}{i})")).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(s, "(declare-datatype Mac ({}))", enumerate("mac", self.macs.len()));
        let _ = writeln!(s, "(declare-datatype Proto ({}))", enumerate("proto", self.protos.len()));
        let pick = |pred: &dyn Fn(&Mac) -> bool| {
            or(self
                .macs
                .iter()
                .enumerate()
                .filter(|(_, m)| pred(m))
                .map(|(i, _)| format!("(= m mac{i})"))
                .collect())
        };
        let _ = writeln!(s, "(define-fun ucast ((m Mac)) Bool {})", pick(&|m| m.is_unicast()));
        let _ = writeln!(s, "(define-fun bcast ((m Mac)) Bool {})", pick(&|m| m.is_broadcast()));
        let idx = |m: Mac| self.macs.iter().position(|x| *x == m).expect("port addresses are in the domain");
        let mut haddr = format!("mac{}", idx(Mac::port_address(self.cfg.num_ports as Port)));
        for p in (1..self.cfg.num_ports as Port).rev() {
            haddr = format!("(ite (= p {p}) mac{} {haddr})", idx(Mac::port_address(p)));
        }
        let _ = writeln!(s, "(define-fun haddr ((p Int)) Mac {haddr})");
        let arp: Vec<String> = (1..=self.cfg.num_ports as Port)
            .map(|p| {
                let i = self.protos.iter().position(|x| *x == Proto::arp_request_for(p)).expect("in domain");
                format!("(and (= p {p}) (= pr proto{i}))")
            })
            .collect();
        let _ = writeln!(s, "(define-fun arpreq ((pr Proto) (p Int)) Bool {})", or(arp));
        s
    }

    /// Cells of the enumerated sorts range over the configured domain only.
    fn domain_restrictions(&self) -> String {
        let mut s = String::new();
        for (name, decl) in &self.decls {
            let q = quote(name);
            if decl.contains(&format!("{q} Mac)")) && self.macs.len() > self.domain_macs {
                let alts: Vec<String> = (0..self.domain_macs).map(|i| format!("(= {q} mac{i})")).collect();
                let _ = writeln!(s, "(assert {})", or(alts));
            }
            if decl.contains(&format!("{q} Proto)")) && self.protos.len() > self.domain_protos {
                let alts: Vec<String> = (0..self.domain_protos).map(|i| format!("(= {q} proto{i})")).collect();
                let _ = writeln!(s, "(assert {})", or(alts));
            }
        }
        s
    }
}

/// A script whose `(check-sat)` reply is `sat` iff `f` has a model in `cfg`'s domains.
pub fn to_smtlib(f: &Formula, cfg: &DomainConfig) -> Result<String, OracleError> {
    cfg.validate()?;
    let mut enc = Encoder::new(cfg);
    let (t, _) = enc.formula(f, &mut Vec::new())?;
    let mut s = enc.header();
    for decl in enc.decls.values() {
        s.push_str(decl);
    }
    s.push_str(&enc.domain_restrictions());
    let _ = writeln!(s, "(assert {t})");
    s.push_str("(check-sat)\n(exit)\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    #[test]
    fn false_asserts_false() {
        let s = to_smtlib(&Formula::False, &DomainConfig::desk()).unwrap();
        assert!(s.contains("(assert false)"));
        assert!(s.ends_with("(check-sat)\n(exit)\n"));
    }

    #[test]
    fn port_reads_are_guarded() {
        let f = parse_formula("(= port uplink-port)").unwrap();
        let s = to_smtlib(&f, &DomainConfig::desk()).unwrap();
        assert!(s.contains("(declare-const |port| Int)"));
        assert!(s.contains("(assert (and |port.defined| (= |port| |uplink-port|)))"), "{s}");
    }

    #[test]
    fn parentheses_balance() {
        let f = parse_formula(
            "(lambda x (and (exists k (= mlt (upd (x mlt) k (fld f sa) t port))) (= loc (set (egr self)))))",
        )
        .unwrap();
        let s = to_smtlib(&f, &DomainConfig::desk()).unwrap();
        let open = s.matches('(').count();
        assert_eq!(open, s.matches(')').count());
    }
}
