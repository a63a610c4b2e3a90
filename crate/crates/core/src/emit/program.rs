//! Lowered decision programs and their text form.
//!
//! `#` lines are comments.
//!
//! ```text
//! program HxBxIxM
//! states H1B1I1ML H1B1I2ML H2B2I2ML
//! start H1B1I1ML
//!
//! transition H1B1I1ML H1B1I2ML
//!   section ingress
//!   eliminated (= loc (set (ing port)))
//!   block 0
//!     guard (= port uplink-port)
//!     action (= mlt (x mlt))
//!   tree
//!     test (= port uplink-port)
//!       leaf 0
//!       leaf none
//! ```

use std::fmt::Write as _;

use crate::error::ParseError;
use crate::formula::dnf::{Disjunct, DisjunctSet, Literal};
use crate::formula::{eval, parse_formula, Env, EvalError, Formula};
use crate::synth::{Assignment, BranchTree};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Block {
    /// Checkable literals.
    pub guards: Vec<Literal>,
    /// Enforceable literals.
    pub actions: Vec<Literal>,
}

impl Block {
    pub fn conjunction(&self) -> Formula {
        Formula::and(self.guards.iter().chain(&self.actions).map(Literal::to_formula))
    }

    pub fn guard_set(&self) -> Disjunct {
        self.guards.iter().cloned().collect()
    }

    pub fn negative_actions(&self) -> usize {
        self.actions.iter().filter(|l| !l.positive).count()
    }

    pub fn has_action(&self, lit: &Literal) -> bool {
        self.actions.contains(lit)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoweredTransition {
    pub from: String,
    pub to: String,
    pub section: String,
    /// Wrapper-guaranteed atoms removed from every disjunct.
    pub eliminated: Vec<Formula>,
    /// In rank order; the first block whose guards hold is taken.
    pub blocks: Vec<Block>,
    /// Tests checkable atoms only; leaves index `blocks`.
    pub tree: BranchTree,
}

impl LoweredTransition {
    pub fn name(&self) -> String {
        format!("{}->{}", self.from, self.to)
    }

    pub fn guard_dnf(&self) -> DisjunctSet {
        DisjunctSet { disjuncts: self.blocks.iter().map(Block::guard_set).collect() }
    }

    /// The block the guard tree reaches in `env`. Guards reading unbound variables
    /// are false.
    pub fn select(&self, env: &Env) -> Result<Option<usize>, EvalError> {
        let mut node = &self.tree;
        loop {
            match node {
                BranchTree::Leaf(b) => return Ok(*b),
                BranchTree::Test { atom, then, otherwise, .. } => {
                    let holds = match eval(atom, env) {
                        Ok(b) => b,
                        Err(EvalError::Unbound(_)) => false,
                        Err(e) => return Err(e),
                    };
                    node = if holds { then } else { otherwise };
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionProgram {
    pub name: String,
    pub states: Vec<String>,
    pub start: String,
    pub transitions: Vec<LoweredTransition>,
}

impl DecisionProgram {
    pub fn outgoing<'a>(&'a self, state: &'a str) -> impl Iterator<Item = (usize, &'a LoweredTransition)> + 'a {
        self.transitions.iter().enumerate().filter(move |(_, t)| t.from == state)
    }

    /// First outgoing transition whose tree reaches a block: `(transition, block)`.
    pub fn select(&self, state: &str, env: &Env) -> Result<Option<(usize, usize)>, EvalError> {
        for (i, t) in self.outgoing(state) {
            if let Some(b) = t.select(env)? {
                return Ok(Some((i, b)));
            }
        }
        Ok(None)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("program {}\nstates {}\nstart {}\n", self.name, self.states.join(" "), self.start);
        for t in &self.transitions {
            let _ = writeln!(s, "\ntransition {} {}", t.from, t.to);
            let _ = writeln!(s, "  section {}", t.section);
            for e in &t.eliminated {
                let _ = writeln!(s, "  eliminated {e}");
            }
            for (i, b) in t.blocks.iter().enumerate() {
                let _ = writeln!(s, "  block {i}");
                for g in &b.guards {
                    let _ = writeln!(s, "    guard {g}");
                }
                for a in &b.actions {
                    let _ = writeln!(s, "    action {a}");
                }
            }
            s.push_str("  tree\n");
            write_tree(&mut s, &t.tree, 2);
        }
        s
    }

    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let lines: Vec<Line> = src
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|(i, l)| Line { number: i + 1, indent: l.len() - l.trim_start().len(), text: l.trim() })
            .collect();
        let mut p = Parser { lines: &lines, pos: 0 };
        let name = p.header("program")?;
        let states = p.header("states")?.split_whitespace().map(str::to_string).collect();
        let start = p.header("start")?.to_string();
        let mut transitions = Vec::new();
        while p.pos < lines.len() {
            transitions.push(p.transition()?);
        }
        Ok(DecisionProgram { name: name.to_string(), states, start, transitions })
    }
}

fn write_tree(s: &mut String, t: &BranchTree, depth: usize) {
    let pad = "  ".repeat(depth);
    match t {
        BranchTree::Leaf(Some(b)) => {
            let _ = writeln!(s, "{pad}leaf {b}");
        }
        BranchTree::Leaf(None) => {
            let _ = writeln!(s, "{pad}leaf none");
        }
        BranchTree::Test { atom, then, otherwise, .. } => {
            let _ = writeln!(s, "{pad}test {atom}");
            write_tree(s, then, depth + 1);
            write_tree(s, otherwise, depth + 1);
        }
    }
}

struct Line<'a> {
    number: usize,
    indent: usize,
    text: &'a str,
}

struct Parser<'a> {
    lines: &'a [Line<'a>],
    pos: usize,
}

fn literal(src: &str, line: usize) -> Result<Literal, ParseError> {
    let f = parse_formula(src).map_err(|e| e.or_at(line, 1))?;
    Ok(match f {
        Formula::Not(a) => Literal::neg(*a),
        a => Literal::pos(a),
    })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Line<'a>> {
        self.lines.get(self.pos)
    }

    fn next_line(&mut self, what: &str) -> Result<&'a Line<'a>, ParseError> {
        let l = self.peek().ok_or_else(|| {
            let last = self.lines.last().map_or(1, |l| l.number);
            ParseError::at(last, 1, format!("expected {what}, found end of input"))
        })?;
        self.pos += 1;
        Ok(l)
    }

    fn header(&mut self, key: &str) -> Result<&'a str, ParseError> {
        let l = self.next_line(&format!("`{key}`"))?;
        match l.text.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            _ if l.text == key => Ok(""),
            _ => Err(ParseError::at(l.number, l.indent + 1, format!("expected `{key}`"))),
        }
    }

    /// The keyword and remainder of the next line when it is indented by `indent`.
    fn keyed(&mut self, indent: usize) -> Option<(&'a str, &'a str, usize)> {
        let l = self.peek().filter(|l| l.indent == indent)?;
        let (k, rest) = l.text.split_once(' ').unwrap_or((l.text, ""));
        Some((k, rest.trim(), l.number))
    }

    fn transition(&mut self) -> Result<LoweredTransition, ParseError> {
        let head = self.header("transition")?;
        let number = self.lines[self.pos - 1].number;
        let Some((from, to)) = head.split_once(' ') else {
            return Err(ParseError::at(number, 1, "expected `transition FROM TO`"));
        };
        let mut t = LoweredTransition {
            from: from.to_string(),
            to: to.trim().to_string(),
            section: String::new(),
            eliminated: Vec::new(),
            blocks: Vec::new(),
            tree: BranchTree::Leaf(None),
        };
        let mut has_tree = false;
        while let Some((k, rest, n)) = self.keyed(2) {
            self.pos += 1;
            match k {
                "section" => t.section = rest.to_string(),
                "eliminated" => t.eliminated.push(parse_formula(rest).map_err(|e| e.or_at(n, 1))?),
                "block" => {
                    let mut b = Block::default();
                    while let Some((k, rest, n)) = self.keyed(4) {
                        self.pos += 1;
                        match k {
                            "guard" => b.guards.push(literal(rest, n)?),
                            "action" => b.actions.push(literal(rest, n)?),
                            _ => return Err(ParseError::at(n, 5, format!("unexpected `{k}` in block"))),
                        }
                    }
                    t.blocks.push(b);
                }
                "tree" => {
                    t.tree = self.tree(4, Assignment::new())?;
                    has_tree = true;
                }
                _ => return Err(ParseError::at(n, 3, format!("unexpected `{k}` in transition"))),
            }
        }
        if !has_tree {
            return Err(ParseError::at(number, 1, "transition has no tree"));
        }
        Ok(t)
    }

    fn tree(&mut self, indent: usize, path: Assignment) -> Result<BranchTree, ParseError> {
        let l = self.next_line("a tree node")?;
        if l.indent != indent {
            return Err(ParseError::at(l.number, l.indent + 1, format!("expected a tree node at indent {indent}")));
        }
        let (k, rest) = l.text.split_once(' ').unwrap_or((l.text, ""));
        match k {
            "leaf" if rest == "none" => Ok(BranchTree::Leaf(None)),
            "leaf" => rest
                .parse()
                .map(|b| BranchTree::Leaf(Some(b)))
                .map_err(|_| ParseError::at(l.number, indent + 6, "expected a block index or `none`")),
            "test" => {
                let atom = parse_formula(rest).map_err(|e| e.or_at(l.number, indent + 6))?;
                let mut yes = path.clone();
                yes.insert(atom.clone(), true);
                let mut no = path.clone();
                no.insert(atom.clone(), false);
                let then = self.tree(indent + 2, yes)?;
                let otherwise = self.tree(indent + 2, no)?;
                Ok(BranchTree::Test { atom, assignment: path, then: Box::new(then), otherwise: Box::new(otherwise) })
            }
            _ => Err(ParseError::at(l.number, indent + 1, format!("unexpected `{k}` in tree"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "program P\nstates A B\nstart A\n\ntransition A B\n  section s\n  eliminated (subset loc egress)\n  \
                       block 0\n    guard (= port uplink-port)\n    action (not (in (egr self) loc))\n  block 1\n  tree\n    \
                       test (= port uplink-port)\n      leaf 0\n      leaf 1\n";

    #[test]
    fn text_round_trip() {
        let p = DecisionProgram::parse(SRC).unwrap();
        assert_eq!(p.transitions.len(), 1);
        let t = &p.transitions[0];
        assert_eq!(t.blocks[0].negative_actions(), 1);
        assert!(t.blocks[1].guards.is_empty());
        assert_eq!(t.tree.size(), 1);
        assert_eq!(p.to_text(), SRC);
    }

    #[test]
    fn malformed_trees_are_located() {
        let bad = SRC.replace("      leaf 1\n", "");
        assert!(DecisionProgram::parse(&bad).is_err());
        let bad = SRC.replace("leaf 0", "leaf zero");
        assert_eq!(DecisionProgram::parse(&bad).unwrap_err().line, 14);
    }
}
