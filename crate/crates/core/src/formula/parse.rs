//! Textual syntax for formulas.
//!
//! ```text
//! formula := true | false | NAME                       ; NAME: propositional atom
//!          | (not F) | (and F…) | (or F…) | (=> F F)
//!          | (exists i F) | (forall i F) | (lambda x F)
//!          | (= T T) | (!= T T) | (in T T) | (subset T T)
//!          | (<= T T) | (< T T) | (> T T) | (>= T T)
//!          | (ucast T) | (bcast T) | (arp-reqrx T T)
//! term    := t | f | loc | port | self | uplink-port | mto | mlt | egress
//!          | INT | MAC | (x VAR) | (fld T da|sa|proto) | (entry T IDX mac|t|port)
//!          | (proto TAG) | (ing T) | (egr T) | (set T…) | (haddr T) | (- T T)
//!          | (upd T IDX T T T)                          ; table(IDX){mac, t, port}
//! ```
//!
//! `!=`, `<`, `>` and `>=` are normalized to `not`/`<=` forms and equality operands are
//! stored in canonical order, so two spellings of one atom compare equal.

use crate::error::ParseError;
use crate::netsim::frame::{Dir, Mac};
use crate::sexp::{self, Sexp};

use super::ast::{Atom, EntryField, Formula, FrameField, Index, Term, Var};

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    formula_from_sexp(&sexp::parse_one(src)?)
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    term_from_sexp(&sexp::parse_one(src)?)
}

const RESERVED: &[&str] = &[
    "true", "false", "not", "and", "or", "=>", "exists", "forall", "lambda", "x", "egress",
];

fn is_prop_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        && Var::from_name(s).is_none()
        && !RESERVED.contains(&s)
}

pub fn formula_from_sexp(s: &Sexp) -> Result<Formula, ParseError> {
    match s {
        Sexp::Sym { text, .. } => match text.as_str() {
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            name if is_prop_name(name) => Ok(Formula::Atom(Atom::Prop(name.to_string()))),
            other => Err(s.error(format!("expected a formula, found `{other}`"))),
        },
        Sexp::List { items, .. } => {
            let Some(head) = items.first().and_then(Sexp::sym) else {
                return Err(s.error("expected an operator"));
            };
            let args = &items[1..];
            let arity = |n: usize| -> Result<(), ParseError> {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(s.error(format!("`{head}` takes {n} argument(s), found {}", args.len())))
                }
            };
            let t = |i: usize| term_from_sexp(&args[i]);
            let f = |i: usize| formula_from_sexp(&args[i]);
            let atom = |a: Atom| Ok(Formula::Atom(a));
            match head {
                "not" => {
                    arity(1)?;
                    Ok(Formula::Not(Box::new(f(0)?)))
                }
                "and" => Ok(Formula::And(args.iter().map(formula_from_sexp).collect::<Result<_, _>>()?)),
                "or" => Ok(Formula::Or(args.iter().map(formula_from_sexp).collect::<Result<_, _>>()?)),
                "=>" => {
                    arity(2)?;
                    Ok(Formula::implies(f(0)?, f(1)?))
                }
                "exists" | "forall" => {
                    arity(2)?;
                    let v = args[0]
                        .sym()
                        .filter(|v| is_prop_name(v))
                        .ok_or_else(|| args[0].error("expected an index variable name"))?
                        .to_string();
                    let body = Box::new(f(1)?);
                    Ok(if head == "exists" { Formula::Exists(v, body) } else { Formula::Forall(v, body) })
                }
                "lambda" => {
                    arity(2)?;
                    if args[0].sym() != Some("x") {
                        return Err(args[0].error("the snapshot binder must be named `x`"));
                    }
                    Ok(Formula::Lambda(Box::new(f(1)?)))
                }
                "=" => {
                    arity(2)?;
                    atom(Atom::eq(t(0)?, t(1)?))
                }
                "!=" => {
                    arity(2)?;
                    Ok(Formula::not(Formula::Atom(Atom::eq(t(0)?, t(1)?))))
                }
                "in" => {
                    arity(2)?;
                    atom(Atom::In(t(0)?, t(1)?))
                }
                "subset" => {
                    arity(2)?;
                    atom(Atom::Subset(t(0)?, t(1)?))
                }
                "<=" => {
                    arity(2)?;
                    atom(Atom::Le(t(0)?, t(1)?))
                }
                ">=" => {
                    arity(2)?;
                    atom(Atom::Le(t(1)?, t(0)?))
                }
                ">" => {
                    arity(2)?;
                    Ok(Formula::not(Formula::Atom(Atom::Le(t(0)?, t(1)?))))
                }
                "<" => {
                    arity(2)?;
                    Ok(Formula::not(Formula::Atom(Atom::Le(t(1)?, t(0)?))))
                }
                "ucast" => {
                    arity(1)?;
                    atom(Atom::Ucast(t(0)?))
                }
                "bcast" => {
                    arity(1)?;
                    atom(Atom::Bcast(t(0)?))
                }
                "arp-reqrx" => {
                    arity(2)?;
                    let frame = t(0)?;
                    if !matches!(frame, Term::Var { var: Var::Frame, .. }) {
                        return Err(args[0].error("arp-reqrx expects a frame variable"));
                    }
                    atom(Atom::ArpReqRx(frame, t(1)?))
                }
                other => Err(items[0].error(format!("unknown formula operator `{other}`"))),
            }
        }
    }
}

fn index_from_sexp(s: &Sexp) -> Result<Index, ParseError> {
    let text = s.sym().ok_or_else(|| s.error("expected a table index"))?;
    if let Ok(n) = text.parse::<usize>() {
        Ok(Index::Lit(n))
    } else if is_prop_name(text) {
        Ok(Index::Bound(text.to_string()))
    } else {
        Err(s.error(format!("bad table index `{text}`")))
    }
}

fn expect_table(t: Term, at: &Sexp) -> Result<Term, ParseError> {
    match t {
        Term::Var { var: Var::Mlt, .. } => Ok(t),
        _ => Err(at.error("malformed projection: expected a MAC table (`mlt` or `(x mlt)`)")),
    }
}

pub fn term_from_sexp(s: &Sexp) -> Result<Term, ParseError> {
    match s {
        Sexp::Sym { text, .. } => {
            if let Some(v) = Var::from_name(text) {
                return Ok(Term::var(v));
            }
            if text == "egress" {
                return Ok(Term::Egress);
            }
            if let Ok(i) = text.parse::<i64>() {
                return Ok(Term::Int(i));
            }
            if text.contains(':') {
                return text.parse::<Mac>().map(Term::Mac).map_err(|e| s.error(e.message));
            }
            Err(s.error(format!("expected a term, found `{text}`")))
        }
        Sexp::List { items, .. } => {
            let Some(head) = items.first().and_then(Sexp::sym) else {
                return Err(s.error("expected a term constructor"));
            };
            let args = &items[1..];
            let arity = |n: usize| -> Result<(), ParseError> {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(s.error(format!("`{head}` takes {n} argument(s), found {}", args.len())))
                }
            };
            let t = |i: usize| term_from_sexp(&args[i]);
            match head {
                "x" => {
                    arity(1)?;
                    let name = args[0].sym().unwrap_or("");
                    let v = Var::from_name(name)
                        .ok_or_else(|| args[0].error(format!("unknown trace variable `{name}`")))?;
                    Ok(Term::snap(v))
                }
                "fld" => {
                    arity(2)?;
                    let base = t(0)?;
                    if !matches!(base, Term::Var { var: Var::Frame, .. }) {
                        return Err(args[0].error("malformed projection: fields apply to `f` or `(x f)`"));
                    }
                    let field = match args[1].sym() {
                        Some("da") => FrameField::Da,
                        Some("sa") => FrameField::Sa,
                        Some("proto") => FrameField::Proto,
                        _ => return Err(args[1].error("unknown frame field")),
                    };
                    Ok(Term::field(base, field))
                }
                "entry" => {
                    arity(3)?;
                    let table = expect_table(t(0)?, &args[0])?;
                    let index = index_from_sexp(&args[1])?;
                    let field = match args[2].sym() {
                        Some("mac") => EntryField::Mac,
                        Some("t") => EntryField::Time,
                        Some("port") => EntryField::Port,
                        _ => return Err(args[2].error("unknown table entry field")),
                    };
                    Ok(Term::entry(table, index, field))
                }
                "proto" => {
                    arity(1)?;
                    let tag = args[0].sym().ok_or_else(|| args[0].error("expected a protocol tag"))?;
                    Ok(Term::Proto(tag.to_string()))
                }
                "ing" | "egr" => {
                    arity(1)?;
                    let dir = if head == "ing" { Dir::Ingress } else { Dir::Egress };
                    Ok(Term::Iface(Box::new(t(0)?), dir))
                }
                "set" => {
                    let items = args.iter().map(term_from_sexp).collect::<Result<Vec<_>, _>>()?;
                    if let Some(bad) = items.iter().position(|i| !matches!(i, Term::Iface(..))) {
                        return Err(args[bad].error("set literals hold interfaces"));
                    }
                    Ok(Term::Set(items))
                }
                "haddr" => {
                    arity(1)?;
                    Ok(Term::Haddr(Box::new(t(0)?)))
                }
                "-" => {
                    arity(2)?;
                    Ok(Term::Sub(Box::new(t(0)?), Box::new(t(1)?)))
                }
                "upd" => {
                    arity(5)?;
                    Ok(Term::Update {
                        table: Box::new(expect_table(t(0)?, &args[0])?),
                        index: index_from_sexp(&args[1])?,
                        mac: Box::new(t(2)?),
                        time: Box::new(t(3)?),
                        port: Box::new(t(4)?),
                    })
                }
                other => Err(items[0].error(format!("unknown term constructor `{other}`"))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_canonical_text() {
        let src = "(=> (= loc (set (ing port))) (or (= port uplink-port) (= (fld f da) (haddr port))))";
        let f = parse_formula(src).unwrap();
        assert_eq!(f.to_string(), src);
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn normalizes_disequality_and_order() {
        let a = parse_formula("(!= port uplink-port)").unwrap();
        let b = parse_formula("(not (= uplink-port port))").unwrap();
        assert_eq!(a, b);
        let gt = parse_formula("(> (- t (entry mlt i t)) mto)").unwrap();
        assert_eq!(gt.to_string(), "(not (<= (- t (entry mlt i t)) mto))");
    }

    #[test]
    fn snapshot_of_static_variable_is_the_variable() {
        assert_eq!(parse_term("(x self)").unwrap(), Term::var(Var::SelfPort));
        assert_eq!(parse_term("(x port)").unwrap().to_string(), "(x port)");
    }

    #[test]
    fn rejects_malformed_projection_with_position() {
        let e = parse_formula("(ucast (fld port da))").unwrap_err();
        assert!(e.message.contains("malformed projection"), "{e}");
        assert_eq!((e.line, e.col), (1, 13));
        assert!(parse_formula("(frob a)").is_err());
        assert!(parse_formula("(lambda y true)").is_err());
    }

    #[test]
    fn update_terms_parse() {
        let f = parse_formula("(exists k (= mlt (upd (x mlt) k (fld f sa) t port)))").unwrap();
        assert!(f.contains_update());
        assert_eq!(f.to_string(), "(exists k (= mlt (upd (x mlt) k (fld f sa) t port)))");
    }
}
