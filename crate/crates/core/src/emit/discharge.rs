//! Discharge tables and C emission.
//!
//! A table is a sequence of records separated by blank lines:
//!
//! ```text
//! (ucast (fld (x f) ?field))
//! guard
//!     is_unicast_ether_addr(np_in->{0})
//! ```
//!
//! The first line is a pattern, the second `guard` or `statement`, and the indented
//! lines after it the template. `{n}` is replaced by the n-th capture. A negated guard
//! is emitted as `!(…)`; a negated action needs its own `(not …)` pattern.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use sha2::{Digest, Sha256};

use crate::formula::dnf::Literal;
use crate::synth::BranchTree;

use super::pattern::{to_sexp, Pattern};
use super::program::DecisionProgram;
use super::EmitError;
use crate::error::ParseError;
use crate::sexp;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryKind {
    Guard,
    Statement,
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryKind::Guard => "guard",
            EntryKind::Statement => "statement",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub pattern: Pattern,
    pub kind: EntryKind,
    /// Template lines, common indentation removed.
    pub template: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DischargeTable {
    pub entries: Vec<Entry>,
}

fn placeholders(line: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut rest = line;
    while let Some(open) = rest.find('{') {
        rest = &rest[open + 1..];
        if let Some(close) = rest.find('}') {
            if let Ok(n) = rest[..close].parse() {
                out.push(n);
            }
        }
    }
    out
}

fn instantiate(line: &str, caps: &[String]) -> String {
    let mut s = line.to_string();
    for (i, c) in caps.iter().enumerate().rev() {
        s = s.replace(&format!("{{{i}}}"), c);
    }
    s
}

impl DischargeTable {
    pub fn parse(src: &str) -> Result<Self, EmitError> {
        let mut table = DischargeTable::default();
        let lines: Vec<(usize, &str)> =
            src.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim_start().starts_with('#')).collect();
        for record in lines.split(|(_, l)| l.trim().is_empty()).filter(|r| !r.is_empty()) {
            let (n, pat) = record[0];
            let toks = sexp::tokenize_from(pat, n);
            let mut pos = 0;
            let sx = sexp::read(&toks, &mut pos)?;
            if pos != toks.len() {
                return Err(ParseError::at(n, 1, "trailing text after pattern").into());
            }
            let pattern = Pattern::from_sexp(sx);
            let Some(&(kn, kind)) = record.get(1) else {
                return Err(ParseError::at(n, 1, "expected `guard` or `statement`").into());
            };
            let kind = match kind.trim() {
                "guard" => EntryKind::Guard,
                "statement" => EntryKind::Statement,
                other => return Err(ParseError::at(kn, 1, format!("expected `guard` or `statement`, found `{other}`")).into()),
            };
            let body = &record[2..];
            if body.is_empty() {
                return Err(ParseError::at(kn, 1, "missing template").into());
            }
            let indent = body.iter().map(|(_, l)| l.len() - l.trim_start().len()).min().unwrap_or(0);
            if indent == 0 {
                return Err(ParseError::at(body[0].0, 1, "template lines must be indented").into());
            }
            let template: Vec<String> = body.iter().map(|(_, l)| l[indent..].trim_end().to_string()).collect();
            for line in &template {
                if let Some(&index) = placeholders(line).iter().find(|&&i| i >= pattern.arity()) {
                    return Err(EmitError::PlaceholderArity {
                        pattern: pattern.to_string(),
                        index,
                        captures: pattern.arity(),
                    });
                }
            }
            table.entries.push(Entry { pattern, kind, template });
        }
        Ok(table)
    }

    /// The single entry of `kind` matching `atom`, with its captures.
    fn lookup(&self, atom: &crate::formula::Formula, kind: EntryKind) -> Option<(&Entry, Vec<String>)> {
        let s = to_sexp(atom);
        self.entries.iter().filter(|e| e.kind == kind).find_map(|e| e.pattern.matches_sexp(&s).map(|c| (e, c)))
    }

    /// Guard expression for a literal.
    pub fn guard(&self, lit: &Literal) -> Result<String, EmitError> {
        let (e, caps) = self
            .lookup(&lit.atom, EntryKind::Guard)
            .ok_or_else(|| EmitError::MissingTemplate { literal: lit.atom.to_string(), kind: "guard".into() })?;
        let text = e.template.iter().map(|l| instantiate(l, &caps)).collect::<Vec<_>>().join(" ");
        Ok(if lit.positive { text } else { format!("!({text})") })
    }

    /// Statement lines for an action literal.
    pub fn statement(&self, lit: &Literal) -> Result<Vec<String>, EmitError> {
        let f = lit.to_formula();
        let (e, caps) = self
            .lookup(&f, EntryKind::Statement)
            .ok_or_else(|| EmitError::MissingTemplate { literal: lit.to_string(), kind: "statement".into() })?;
        Ok(e.template.iter().map(|l| instantiate(l, &caps)).collect())
    }
}

/// Provenance recorded in the emitted header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmitContext {
    pub profile_sha256: String,
    pub toolchain: String,
    pub seed: Option<u64>,
}

impl EmitContext {
    pub fn new(profile_text: &str) -> Self {
        EmitContext {
            profile_sha256: hex::encode(Sha256::digest(profile_text.as_bytes())),
            toolchain: concat!("netprod ", env!("CARGO_PKG_VERSION")).to_string(),
            seed: None,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        EmitContext { seed: Some(seed), ..self }
    }
}

/// Emitted source plus the number of guard tests per state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Emission {
    pub source: String,
    pub guards: BTreeMap<String, usize>,
}

fn state_const(s: &str) -> String {
    format!("NP_{}", s.to_ascii_uppercase())
}

struct Writer<'a> {
    table: &'a DischargeTable,
    out: String,
    tests: usize,
}

impl Writer<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        let _ = writeln!(self.out, "{}{text}", "    ".repeat(depth));
    }

    fn leaf(&mut self, depth: usize, prog: &DecisionProgram, t: usize, block: usize) -> Result<(), EmitError> {
        let lt = &prog.transitions[t];
        for a in &lt.blocks[block].actions {
            for l in self.table.statement(a)? {
                self.line(depth, &l);
            }
        }
        self.line(depth, &format!("return {};", state_const(&lt.to)));
        Ok(())
    }

    fn tree(&mut self, depth: usize, prog: &DecisionProgram, t: usize, node: &BranchTree) -> Result<(), EmitError> {
        match node {
            BranchTree::Leaf(None) => Ok(()),
            BranchTree::Leaf(Some(b)) => self.leaf(depth, prog, t, *b),
            BranchTree::Test { atom, then, otherwise, .. } => {
                self.tests += 1;
                let test = self.table.guard(&Literal::pos(atom.clone()))?;
                if then.is_no_match() {
                    self.line(depth, &format!("if (!({test})) {{"));
                    self.tree(depth + 1, prog, t, otherwise)?;
                    self.line(depth, "}");
                    return Ok(());
                }
                self.line(depth, &format!("if ({test}) {{"));
                self.tree(depth + 1, prog, t, then)?;
                if otherwise.is_no_match() {
                    self.line(depth, "}");
                } else {
                    self.line(depth, "} else {");
                    self.tree(depth + 1, prog, t, otherwise)?;
                    self.line(depth, "}");
                }
                Ok(())
            }
        }
    }
}

/// C source for `prog`: one dispatch function per state and a step function.
pub fn discharge(prog: &DecisionProgram, table: &DischargeTable, ctx: &EmitContext) -> Result<Emission, EmitError> {
    let mut w = Writer { table, out: String::new(), tests: 0 };
    let mut guards = BTreeMap::new();
    let seed = ctx.seed.map(|s| format!(" * seed: {s}\n")).unwrap_or_default();
    w.out.push_str(&format!(
        "/* Generated dispatch for {}.\n * profile sha256: {}\n * toolchain: {}\n{seed} * Compiled against the netprod_wrapper.h declaration contract (a reconstruction).\n * Assumes a single-core wrapper that runs ingress and egress steps one at a time.\n */\n",
        prog.name, ctx.profile_sha256, ctx.toolchain
    ));
    w.out.push_str("#include \"netprod_wrapper.h\"\n\nenum np_state {\n");
    for s in &prog.states {
        w.line(1, &format!("{},", state_const(s)));
    }
    w.line(1, "NP_STUCK");
    w.out.push_str("};\n");
    for s in &prog.states {
        w.out.push_str(&format!("\nstatic enum np_state np_dispatch_{s}(void)\n{{\n"));
        let before = w.tests;
        for (i, t) in prog.outgoing(s) {
            w.line(1, &format!("/* {} */", t.name()));
            w.tree(1, prog, i, &t.tree)?;
        }
        w.line(1, "return NP_STUCK;");
        w.out.push_str("}\n");
        guards.insert(s.clone(), w.tests - before);
    }
    w.out.push_str("\nenum np_state np_step(enum np_state s)\n{\n    switch (s) {\n");
    for s in &prog.states {
        w.line(1, &format!("case {}:", state_const(s)));
        w.line(2, &format!("return np_dispatch_{s}();"));
    }
    w.line(1, "default:");
    w.line(2, "return NP_STUCK;");
    w.out.push_str("    }\n}\n");
    Ok(Emission { source: w.out, guards })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::program::{Block, LoweredTransition};
    use crate::formula::parse_formula;

    const TABLE: &str = "# test table\n(ucast (fld f ?field))\nguard\n    is_unicast_ether_addr(np_in->{0})\n\n\
                         (= f (x f))\nstatement\n    *np_out = *np_in;\n";

    fn program() -> DecisionProgram {
        let atom = parse_formula("(ucast (fld f da))").unwrap();
        let tree = BranchTree::Test {
            atom: atom.clone(),
            assignment: Default::default(),
            then: Box::new(BranchTree::Leaf(Some(0))),
            otherwise: Box::new(BranchTree::Leaf(None)),
        };
        let block = Block { guards: vec![Literal::pos(atom)], actions: vec![Literal::pos(parse_formula("(= f (x f))").unwrap())] };
        DecisionProgram {
            name: "P".into(),
            states: vec!["A".into(), "B".into()],
            start: "A".into(),
            transitions: vec![LoweredTransition {
                from: "A".into(),
                to: "B".into(),
                section: "s".into(),
                eliminated: vec![],
                blocks: vec![block],
                tree,
            }],
        }
    }

    #[test]
    fn guards_and_statements_render() {
        let t = DischargeTable::parse(TABLE).unwrap();
        let e = discharge(&program(), &t, &EmitContext::new("")).unwrap();
        assert!(e.source.contains("if (is_unicast_ether_addr(np_in->da)) {"));
        assert!(e.source.contains("*np_out = *np_in;\n        return NP_B;"));
        assert_eq!(e.guards["A"], 1);
        assert_eq!(e.guards["B"], 0);
        let neg = t.guard(&Literal::neg(parse_formula("(ucast (fld f sa))").unwrap())).unwrap();
        assert_eq!(neg, "!(is_unicast_ether_addr(np_in->sa))");
    }

    #[test]
    fn missing_templates_and_bad_placeholders_fail() {
        let t = DischargeTable::parse(&TABLE.replace("(= f (x f))", "(= mlt (x mlt))")).unwrap();
        assert!(matches!(discharge(&program(), &t, &EmitContext::new("")), Err(EmitError::MissingTemplate { .. })));
        let bad = "(ucast ?a)\nguard\n    f({1})\n";
        assert!(matches!(DischargeTable::parse(bad), Err(EmitError::PlaceholderArity { index: 1, captures: 1, .. })));
        assert!(DischargeTable::parse("(ucast ?a)\nwhatever\n    x\n").is_err());
    }

    #[test]
    fn empty_program_is_a_skeleton() {
        let p = DecisionProgram { name: "E".into(), states: vec![], start: String::new(), transitions: vec![] };
        let e = discharge(&p, &DischargeTable::default(), &EmitContext::new("x")).unwrap();
        assert!(e.source.contains("switch (s) {\n    default:\n        return NP_STUCK;"));
        let again = discharge(&p, &DischargeTable::default(), &EmitContext::new("x")).unwrap();
        assert_eq!(e, again);
    }
}
