//! Minimal S-expression reader shared by the text formats. `;` starts a line comment.

use std::fmt;

use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Sym { text: String, line: usize, col: usize },
    List { items: Vec<Sexp>, line: usize, col: usize },
}

impl Sexp {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Sym { line, col, .. } | Sexp::List { line, col, .. } => (*line, *col),
        }
    }

    pub fn sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Sym { .. } => None,
        }
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.pos();
        ParseError::at(line, col, message)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Sym { text, .. } => f.write_str(text),
            Sexp::List { items, .. } => {
                f.write_str("(")?;
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Token {
    Open,
    Close,
    Sym(String),
}

/// Tokens with 1-based (line, column) positions.
pub fn tokenize(src: &str) -> Vec<(Token, usize, usize)> {
    tokenize_from(src, 1)
}

pub fn tokenize_from(src: &str, first_line: usize) -> Vec<(Token, usize, usize)> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let line = line.split(';').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = (ln + first_line, i + 1);
            match c {
                '(' => {
                    out.push((Token::Open, pos.0, pos.1));
                    i += 1;
                }
                ')' => {
                    out.push((Token::Close, pos.0, pos.1));
                    i += 1;
                }
                c if c.is_whitespace() => i += 1,
                _ => {
                    let start = i;
                    while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '(' && chars[i] != ')' {
                        i += 1;
                    }
                    out.push((Token::Sym(chars[start..i].iter().collect()), pos.0, pos.1));
                }
            }
        }
    }
    out
}

/// Reads one expression starting at `*pos`.
pub fn read(tokens: &[(Token, usize, usize)], pos: &mut usize) -> Result<Sexp, ParseError> {
    let Some((tok, line, col)) = tokens.get(*pos) else {
        let (line, col) = tokens.last().map(|t| (t.1, t.2)).unwrap_or((1, 1));
        return Err(ParseError::at(line, col, "unexpected end of input"));
    };
    *pos += 1;
    match tok {
        Token::Sym(s) => Ok(Sexp::Sym { text: s.clone(), line: *line, col: *col }),
        Token::Close => Err(ParseError::at(*line, *col, "unexpected `)`")),
        Token::Open => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(ParseError::at(*line, *col, "unclosed `(`")),
                    Some((Token::Close, _, _)) => {
                        *pos += 1;
                        return Ok(Sexp::List { items, line: *line, col: *col });
                    }
                    Some(_) => items.push(read(tokens, pos)?),
                }
            }
        }
    }
}

/// Parses a string holding exactly one expression.
pub fn parse_one(src: &str) -> Result<Sexp, ParseError> {
    let tokens = tokenize(src);
    let mut pos = 0;
    let s = read(&tokens, &mut pos)?;
    if let Some((_, line, col)) = tokens.get(pos) {
        return Err(ParseError::at(*line, *col, "trailing input after expression"));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_positions() {
        let s = parse_one("(a (b c)\n  d) ; comment").unwrap();
        assert_eq!(s.to_string(), "(a (b c) d)");
        let items = s.list().unwrap();
        assert_eq!(items[2].pos(), (2, 3));
    }

    #[test]
    fn reports_unbalanced_input() {
        let e = parse_one("(a (b").unwrap_err();
        assert!(e.message.contains("unclosed"));
        let e = parse_one("a)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 2));
    }
}
