//! A small s-expression reader for f-structure and lexicon files.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SexpKind {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sexp {
    pub kind: SexpKind,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SexpError {
    pub line: usize,
    pub message: String,
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn string(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match &self.kind {
            SexpKind::List(l) => Some(l),
            _ => None,
        }
    }

    /// The leading atom of a list form such as `(fstruct ...)`.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(Sexp::atom)
    }

    pub fn error(&self, message: impl Into<String>) -> SexpError {
        SexpError { line: self.line, message: message.into() }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SexpKind::Atom(a) => write!(f, "{a}"),
            SexpKind::Str(s) => write!(f, "{s:?}"),
            SexpKind::List(items) => {
                write!(f, "(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Reads every top-level form. `;` starts a comment.
pub fn parse_all(src: &str) -> Result<Vec<Sexp>, SexpError> {
    let chars: Vec<char> = src.chars().collect();
    let mut pos = 0;
    let mut line = 1;
    let mut stack: Vec<(usize, Vec<Sexp>)> = Vec::new();
    let mut top = Vec::new();
    let mut emit = |stack: &mut Vec<(usize, Vec<Sexp>)>, x: Sexp| match stack.last_mut() {
        Some((_, items)) => items.push(x),
        None => top.push(x),
    };
    while pos < chars.len() {
        let c = chars[pos];
        match c {
            '\n' => {
                line += 1;
                pos += 1;
            }
            c if c.is_whitespace() => pos += 1,
            ';' => {
                while pos < chars.len() && chars[pos] != '\n' {
                    pos += 1;
                }
            }
            '(' => {
                stack.push((line, Vec::new()));
                pos += 1;
            }
            ')' => {
                let (start, items) = stack
                    .pop()
                    .ok_or_else(|| SexpError { line, message: "unbalanced `)`".into() })?;
                emit(&mut stack, Sexp { kind: SexpKind::List(items), line: start });
                pos += 1;
            }
            '"' => {
                let start = line;
                let mut s = String::new();
                pos += 1;
                loop {
                    match chars.get(pos) {
                        None => {
                            return Err(SexpError { line: start, message: "unterminated string".into() })
                        }
                        Some('"') => break,
                        Some('\\') if pos + 1 < chars.len() => {
                            s.push(chars[pos + 1]);
                            pos += 2;
                        }
                        Some(&ch) => {
                            if ch == '\n' {
                                line += 1;
                            }
                            s.push(ch);
                            pos += 1;
                        }
                    }
                }
                pos += 1;
                emit(&mut stack, Sexp { kind: SexpKind::Str(s), line: start });
            }
            _ => {
                let begin = pos;
                while pos < chars.len()
                    && !chars[pos].is_whitespace()
                    && !matches!(chars[pos], '(' | ')' | '"' | ';')
                {
                    pos += 1;
                }
                let a: String = chars[begin..pos].iter().collect();
                emit(&mut stack, Sexp { kind: SexpKind::Atom(a), line });
            }
        }
    }
    if let Some((start, _)) = stack.last() {
        return Err(SexpError { line: *start, message: "unbalanced `(`".into() });
    }
    Ok(top)
}
