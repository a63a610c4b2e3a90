//! Checkable, enforceable and wrapper-guaranteed predicates.
//!
//! A classification file holds one section per step kind; the first section whose
//! `when` lines all hold for a transition's source state applies to it.
//!
//! ```text
//! section egress
//! when I I2                          # component I is in state I2
//! fact (subset loc egress)           # guaranteed by the wrapper at this step
//! output f loc                       # symbols only actions may write
//! bind f (x f)                       # read f as (x f) where (= f (x f)) is enforced
//! prefer (in (egr self) loc)         # add when consistent and unmentioned
//! prefer (= f (x f)) with (in (egr self) loc)
//! wrapper (subset loc egress)
//! checkable (ucast (fld (x f) _))
//! enforceable (= f (x f))
//! ```
//!
//! Rules are tried in order and the first match wins.

use std::fmt;

use crate::error::ParseError;
use crate::formula::parse::formula_from_sexp;
use crate::formula::Formula;
use crate::sexp::{self, Sexp};

use super::pattern::Pattern;
use super::EmitError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredicateClass {
    Checkable,
    Enforceable,
    /// Enforceable, and guaranteed by the wrapper, so removed at compile time.
    WrapperGuaranteed,
}

impl fmt::Display for PredicateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredicateClass::Checkable => "checkable",
            PredicateClass::Enforceable => "enforceable",
            PredicateClass::WrapperGuaranteed => "wrapper",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub class: PredicateClass,
    pub pattern: Pattern,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Preference {
    pub atom: Formula,
    /// Only disjuncts holding this atom positively receive the preference.
    pub with: Option<Formula>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bind {
    pub var: String,
    pub term: Sexp,
}

impl Bind {
    /// The equality whose presence licenses the substitution.
    pub fn equality(&self) -> Result<Formula, ParseError> {
        sexp::parse_one(&format!("(= {} {})", self.var, self.term)).and_then(|s| formula_from_sexp(&s))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub when: Vec<(String, String)>,
    pub facts: Vec<Formula>,
    pub outputs: Vec<String>,
    pub binds: Vec<Bind>,
    pub prefer: Vec<Preference>,
    pub rules: Vec<Rule>,
}

impl Section {
    pub fn applies(&self, components: &[(String, String)]) -> bool {
        self.when.iter().all(|w| components.contains(w))
    }

    /// Conjunction of the declared wrapper facts.
    pub fn context(&self) -> Formula {
        Formula::and(self.facts.iter().cloned())
    }

    /// Class of the first rule matching `atom`.
    pub fn classify(&self, atom: &Formula) -> Result<PredicateClass, EmitError> {
        self.rules
            .iter()
            .find(|r| r.pattern.matches(atom).is_some())
            .map(|r| r.class)
            .ok_or_else(|| EmitError::Unclassifiable { atom: atom.to_string(), section: self.name.clone() })
    }

    /// Output symbol read by `atom`, if any.
    pub fn output_read(&self, atom: &Formula) -> Option<&str> {
        let s = super::pattern::to_sexp(atom);
        self.outputs.iter().find(|o| super::pattern::mentions_current(&s, o)).map(String::as_str)
    }
}

pub fn classify(atom: &Formula, section: &Section) -> Result<PredicateClass, EmitError> {
    section.classify(atom)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassConfig {
    pub sections: Vec<Section>,
}

fn line_items(line: &str, number: usize) -> Result<Vec<Sexp>, ParseError> {
    let toks = sexp::tokenize_from(line, number);
    let mut pos = 0;
    let mut items = Vec::new();
    while pos < toks.len() {
        items.push(sexp::read(&toks, &mut pos)?);
    }
    Ok(items)
}

fn sym_arg(s: &Sexp, what: &str) -> Result<String, ParseError> {
    s.sym().map(str::to_string).ok_or_else(|| s.error(format!("expected {what}")))
}

impl ClassConfig {
    pub fn section_for(&self, components: &[(String, String)]) -> Option<&Section> {
        self.sections.iter().find(|s| s.applies(components))
    }

    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let mut cfg = ClassConfig::default();
        for (i, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            let items = line_items(line, i + 1)?;
            let Some((head, args)) = items.split_first() else {
                continue;
            };
            let key = head.sym().ok_or_else(|| head.error("expected a keyword"))?;
            if key == "section" {
                let [name] = args else {
                    return Err(head.error("`section` takes one name"));
                };
                cfg.sections.push(Section { name: sym_arg(name, "a section name")?, ..Default::default() });
                continue;
            }
            let sec = cfg.sections.last_mut().ok_or_else(|| head.error("expected `section` first"))?;
            match (key, args) {
                ("when", [m, s]) => sec.when.push((sym_arg(m, "a machine name")?, sym_arg(s, "a state name")?)),
                ("fact", [f]) => sec.facts.push(formula_from_sexp(f)?),
                ("output", names) if !names.is_empty() => {
                    for n in names {
                        sec.outputs.push(sym_arg(n, "a variable name")?);
                    }
                }
                ("bind", [v, t]) => sec.binds.push(Bind { var: sym_arg(v, "a variable name")?, term: t.clone() }),
                ("prefer", [a]) => sec.prefer.push(Preference { atom: formula_from_sexp(a)?, with: None }),
                ("prefer", [a, w, b]) if w.sym() == Some("with") => {
                    sec.prefer.push(Preference { atom: formula_from_sexp(a)?, with: Some(formula_from_sexp(b)?) })
                }
                ("checkable" | "enforceable" | "wrapper", [p]) => {
                    let class = match key {
                        "checkable" => PredicateClass::Checkable,
                        "enforceable" => PredicateClass::Enforceable,
                        _ => PredicateClass::WrapperGuaranteed,
                    };
                    sec.rules.push(Rule { class, pattern: Pattern::from_sexp(p.clone()) });
                }
                ("when" | "fact" | "output" | "bind" | "prefer" | "checkable" | "enforceable" | "wrapper", _) => {
                    return Err(head.error(format!("wrong arguments for `{key}`")));
                }
                _ => return Err(head.error(format!("unknown keyword `{key}`"))),
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    const CFG: &str = "section egress\nwhen I I2\nfact (subset loc egress)\noutput f loc\n\
                       wrapper (subset loc egress)\ncheckable (ucast (fld (x f) _))\nenforceable (= f (x f))\n\
                       section ingress\ncheckable (= port uplink-port)\n";

    #[test]
    fn first_matching_section_and_rule() {
        let cfg = ClassConfig::parse(CFG).unwrap();
        let eg = cfg.section_for(&[("I".into(), "I2".into())]).unwrap();
        assert_eq!(eg.name, "egress");
        let f = |s: &str| parse_formula(s).unwrap();
        assert_eq!(eg.classify(&f("(ucast (fld (x f) da))")).unwrap(), PredicateClass::Checkable);
        assert_eq!(eg.classify(&f("(= (x f) f)")).unwrap(), PredicateClass::Enforceable);
        assert_eq!(classify(&f("(subset loc egress)"), eg).unwrap(), PredicateClass::WrapperGuaranteed);
        assert!(matches!(eg.classify(&f("(ucast (fld f da))")), Err(EmitError::Unclassifiable { .. })));
        assert_eq!(eg.output_read(&f("(ucast (fld f da))")), Some("f"));
        assert_eq!(cfg.section_for(&[("I".into(), "I1".into())]).unwrap().name, "ingress");
    }

    #[test]
    fn errors_have_positions() {
        let e = ClassConfig::parse("checkable A\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = ClassConfig::parse("section s\nwhen I\n").unwrap_err();
        assert_eq!((e.line, e.col), (2, 1));
        assert!(ClassConfig::parse("section s\nfrobnicate x\n").is_err());
    }
}
