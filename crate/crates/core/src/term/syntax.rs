//! Surface syntax for meaning terms and types.
//!
//! ```text
//! term  ::= \x. term | \x:type. term | ^term | !term | app
//! app   ::= atom ( '(' term, ... ')' )*
//! atom  ::= name | '(' term ')'
//! ```
//!
//! `^` and `!` bind looser than application, so `^f(x)` is `^(f(x))`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::typing::TypeSolver;
use super::{BaseType, MeaningType, Term, TypeError, TypingContext};
use crate::lex::{Cursor, SyntaxError, Tok};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermParseError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// A parsed but not yet elaborated term: names are unresolved and binder
/// types may be missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawTerm {
    Name(String),
    Lam(String, Option<MeaningType>, Box<RawTerm>),
    App(Box<RawTerm>, Vec<RawTerm>),
    Cap(Box<RawTerm>),
    Cup(Box<RawTerm>),
}

impl fmt::Display for RawTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawTerm::Name(n) => write!(f, "{n}"),
            RawTerm::Lam(x, Some(ty), b) => write!(f, "(\\{x}:{ty}. {b})"),
            RawTerm::Lam(x, None, b) => write!(f, "(\\{x}. {b})"),
            RawTerm::App(h, args) => {
                write!(f, "{h}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            RawTerm::Cap(b) => write!(f, "(^{b})"),
            RawTerm::Cup(b) => write!(f, "(!{b})"),
        }
    }
}

impl RawTerm {
    pub fn parse(src: &str) -> Result<RawTerm, SyntaxError> {
        let mut cur = Cursor::new(src)?;
        let t = parse_raw(&mut cur)?;
        if !cur.at_eof() {
            return Err(cur.error(format!("unexpected {}", cur.peek())));
        }
        Ok(t)
    }

    /// Resolves names against `ctx` and infers binder types. When
    /// `expected` is given the term's type is unified with it first.
    pub fn elaborate(
        &self,
        ctx: &TypingContext,
        expected: Option<&MeaningType>,
    ) -> Result<Term, TypeError> {
        let mut solver = TypeSolver::default();
        let mut scope = Vec::new();
        let (term, ty) = elab(self, ctx, &mut scope, &mut solver)?;
        if let Some(exp) = expected {
            if !solver.unify(&ty, exp) {
                return Err(TypeError::TypeMismatch {
                    location: self.to_string(),
                    expected: exp.clone(),
                    found: solver.resolve(&ty),
                });
            }
        }
        zonk(&term, &solver, self)
    }
}

pub(crate) fn parse_raw(cur: &mut Cursor) -> Result<RawTerm, SyntaxError> {
    match cur.peek() {
        Tok::Lambda => {
            cur.next();
            let x = cur.ident()?;
            let ty = if cur.eat(&Tok::Colon) { Some(parse_type_tokens(cur)?) } else { None };
            cur.expect(&Tok::Dot)?;
            let body = parse_raw(cur)?;
            Ok(RawTerm::Lam(x, ty, Box::new(body)))
        }
        Tok::Caret => {
            cur.next();
            Ok(RawTerm::Cap(Box::new(parse_raw(cur)?)))
        }
        Tok::Bang => {
            cur.next();
            Ok(RawTerm::Cup(Box::new(parse_raw(cur)?)))
        }
        _ => parse_app(cur),
    }
}

fn parse_app(cur: &mut Cursor) -> Result<RawTerm, SyntaxError> {
    let mut head = match cur.next() {
        Tok::Ident(n) => RawTerm::Name(n),
        Tok::LParen => {
            let t = parse_raw(cur)?;
            cur.expect(&Tok::RParen)?;
            t
        }
        other => return Err(cur.error(format!("expected a term, found {other}"))),
    };
    while cur.eat(&Tok::LParen) {
        let mut args = vec![parse_raw(cur)?];
        while cur.eat(&Tok::Comma) {
            args.push(parse_raw(cur)?);
        }
        cur.expect(&Tok::RParen)?;
        head = RawTerm::App(Box::new(head), args);
    }
    Ok(head)
}

pub(crate) fn parse_type_tokens(cur: &mut Cursor) -> Result<MeaningType, SyntaxError> {
    let from = match cur.next() {
        Tok::Ident(n) => match n.as_str() {
            "e" => MeaningType::e(),
            "t" => MeaningType::t(),
            "s" => MeaningType::s(),
            other => return Err(cur.error(format!("unknown base type `{other}`"))),
        },
        Tok::LParen => {
            let t = parse_type_tokens(cur)?;
            cur.expect(&Tok::RParen)?;
            t
        }
        other => return Err(cur.error(format!("expected a type, found {other}"))),
    };
    if cur.eat(&Tok::Arrow) {
        Ok(MeaningType::arrow(from, parse_type_tokens(cur)?))
    } else {
        Ok(from)
    }
}

/// Parses a type such as `(s -> e -> t) -> t`.
pub fn parse_type(src: &str) -> Result<MeaningType, SyntaxError> {
    let mut cur = Cursor::new(src)?;
    let ty = parse_type_tokens(&mut cur)?;
    if !cur.at_eof() {
        return Err(cur.error(format!("unexpected {}", cur.peek())));
    }
    Ok(ty)
}

/// Parses and elaborates a term against `ctx`.
pub fn parse_term(src: &str, ctx: &TypingContext) -> Result<Term, TermParseError> {
    let raw = RawTerm::parse(src)?;
    Ok(raw.elaborate(ctx, None)?)
}

fn elab(
    raw: &RawTerm,
    ctx: &TypingContext,
    scope: &mut Vec<(String, MeaningType)>,
    solver: &mut TypeSolver,
) -> Result<(Term, MeaningType), TypeError> {
    match raw {
        RawTerm::Name(n) => {
            if let Some(pos) = scope.iter().rposition(|(x, _)| x == n) {
                let idx = (scope.len() - 1 - pos) as u32;
                return Ok((Term::Bound(idx), scope[pos].1.clone()));
            }
            if let Some(ty) = ctx.var_type(n) {
                return Ok((Term::var(n), ty.clone()));
            }
            if let Some(ty) = ctx.const_type(n) {
                return Ok((Term::constant(n), ty.clone()));
            }
            Err(TypeError::UnboundName(n.clone()))
        }
        RawTerm::Lam(x, ty, body) => {
            let ty = ty.clone().unwrap_or_else(|| solver.fresh());
            scope.push((x.clone(), ty.clone()));
            let res = elab(body, ctx, scope, solver);
            scope.pop();
            let (b, bty) = res?;
            Ok((Term::lam(ty.clone(), b), MeaningType::arrow(ty, bty)))
        }
        RawTerm::App(h, args) => {
            let (mut term, mut ty) = elab(h, ctx, scope, solver)?;
            for a in args {
                let (at, aty) = elab(a, ctx, scope, solver)?;
                let fty = solver.resolve(&ty);
                let result = match &fty {
                    MeaningType::Arrow(from, to) => {
                        if !solver.unify(from, &aty) {
                            return Err(TypeError::TypeMismatch {
                                location: raw.to_string(),
                                expected: solver.resolve(from),
                                found: solver.resolve(&aty),
                            });
                        }
                        (**to).clone()
                    }
                    MeaningType::TypeVar(_) => {
                        let r = solver.fresh();
                        solver.unify(&fty, &MeaningType::arrow(aty, r.clone()));
                        r
                    }
                    MeaningType::Base(_) => {
                        return Err(TypeError::NotAFunction {
                            location: h.to_string(),
                            found: fty,
                        })
                    }
                };
                term = Term::app(term, at);
                ty = result;
            }
            Ok((term, ty))
        }
        RawTerm::Cap(b) => {
            let (t, ty) = elab(b, ctx, scope, solver)?;
            Ok((Term::cap(t), MeaningType::arrow(MeaningType::s(), ty)))
        }
        RawTerm::Cup(b) => {
            let (t, ty) = elab(b, ctx, scope, solver)?;
            let r = solver.fresh();
            let want = MeaningType::arrow(MeaningType::s(), r.clone());
            if !solver.unify(&ty, &want) {
                return Err(TypeError::TypeMismatch {
                    location: raw.to_string(),
                    expected: want,
                    found: solver.resolve(&ty),
                });
            }
            Ok((Term::cup(t), r))
        }
    }
}

fn zonk(term: &Term, solver: &TypeSolver, raw: &RawTerm) -> Result<Term, TypeError> {
    Ok(match term {
        Term::Lam(ty, b) => {
            let ty = solver.resolve(ty);
            if ty.has_type_vars() {
                return Err(TypeError::Ambiguous(raw.to_string()));
            }
            Term::lam(ty, zonk(b, solver, raw)?)
        }
        Term::App(f, a) => Term::app(zonk(f, solver, raw)?, zonk(a, solver, raw)?),
        Term::Cap(b) => Term::cap(zonk(b, solver, raw)?),
        Term::Cup(b) => Term::cup(zonk(b, solver, raw)?),
        _ => term.clone(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PrintOptions {
    /// Parenthesize every compound subterm.
    pub explicit_parens: bool,
}

const ENTITY_NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
const OTHER_NAMES: [&str; 5] = ["P", "Q", "R", "S", "T"];

struct Printer {
    opts: PrintOptions,
    avoid: BTreeSet<String>,
    stack: Vec<String>,
}

impl Printer {
    fn fresh(&self, ty: &MeaningType) -> String {
        let pool: &[&str] = if *ty == MeaningType::Base(BaseType::E) {
            &ENTITY_NAMES
        } else {
            &OTHER_NAMES
        };
        let taken = |n: &str| self.avoid.contains(n) || self.stack.iter().any(|s| s == n);
        for suffix in 0.. {
            for base in pool {
                let n = if suffix == 0 { base.to_string() } else { format!("{base}{suffix}") };
                if !taken(&n) {
                    return n;
                }
            }
        }
        unreachable!()
    }

    /// `top` is false for subterms that sit inside another construct.
    fn term(&mut self, t: &Term, out: &mut String, top: bool) {
        let wrap = self.opts.explicit_parens && !top && !is_atomic(t);
        if wrap {
            out.push('(');
        }
        match t {
            Term::Const(n) | Term::Var(n) => out.push_str(n),
            Term::Bound(i) => match self.stack.len().checked_sub(1 + *i as usize) {
                Some(k) => out.push_str(&self.stack[k]),
                None => out.push_str(&format!("#{i}")),
            },
            Term::Lam(ty, b) => {
                let x = self.fresh(ty);
                out.push('\\');
                out.push_str(&x);
                out.push_str(". ");
                self.stack.push(x);
                self.term(b, out, false);
                self.stack.pop();
            }
            Term::Cap(b) | Term::Cup(b) => {
                out.push(if matches!(t, Term::Cap(_)) { '^' } else { '!' });
                self.term(b, out, false);
            }
            Term::App(..) => {
                let (head, args) = t.spine();
                let paren_head = !is_atomic(head) && !self.opts.explicit_parens;
                if paren_head {
                    out.push('(');
                }
                self.term(head, out, false);
                if paren_head {
                    out.push(')');
                }
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.term(a, out, false);
                }
                out.push(')');
            }
        }
        if wrap {
            out.push(')');
        }
    }
}

fn is_atomic(t: &Term) -> bool {
    matches!(t, Term::Const(_) | Term::Var(_) | Term::Bound(_))
}

/// Prints a term in the surface syntax accepted by [`parse_term`]. Binder
/// names are regenerated: `x y z u v w` for entities, `P Q R S T` otherwise.
pub fn print_term(term: &Term, opts: PrintOptions) -> String {
    let avoid = term.free_names().iter().map(|n| n.to_string()).collect();
    let mut p = Printer { opts, avoid, stack: Vec::new() };
    let mut out = String::new();
    p.term(term, &mut out, true);
    out
}
