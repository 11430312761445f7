//! Glue-language formulas.
//!
//! ```text
//! formula ::= forall X:type, H:sem. formula
//!           | tensor -o formula
//!           | tensor
//! tensor  ::= unary (* unary)*
//! unary   ::= (formula) | sem ~> term [: type] | NAME
//! sem     ::= NAME | NAME.VAR | NAME.RESTR
//! ```
//!
//! A bare `NAME` atom abbreviates `NAME ~> NAME : t`.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::lex::{Cursor, SyntaxError, Tok};
use crate::structures::{SemStructure, SemTerm, Slot};
use crate::term::syntax::{parse_raw, parse_type_tokens};
use crate::term::{typecheck, MeaningType, Name, Term, TypeError, TypingContext};
use crate::unify::{Sort, Substitutable, Substitution};

/// A glue formula whose σ-positions hold values of type `S`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GlueFormula<S> {
    /// `sem ~> term`, with `ty` the type subscript
    Means { sem: S, term: Term, ty: MeaningType },
    Tensor(Arc<GlueFormula<S>>, Arc<GlueFormula<S>>),
    Limp(Arc<GlueFormula<S>>, Arc<GlueFormula<S>>),
    Forall { var: Name, sort: Sort, body: Arc<GlueFormula<S>> },
}

pub type Formula = GlueFormula<SemTerm>;

impl<S> GlueFormula<S> {
    pub fn means(sem: S, term: Term, ty: MeaningType) -> Self {
        GlueFormula::Means { sem, term, ty }
    }

    pub fn tensor(a: Self, b: Self) -> Self {
        GlueFormula::Tensor(Arc::new(a), Arc::new(b))
    }

    pub fn limp(a: Self, b: Self) -> Self {
        GlueFormula::Limp(Arc::new(a), Arc::new(b))
    }

    pub fn forall(var: &str, sort: Sort, body: Self) -> Self {
        GlueFormula::Forall { var: var.into(), sort, body: Arc::new(body) }
    }

    /// Rebuilds the formula with every σ-position mapped through `f`.
    pub fn try_map_sem<T, E>(&self, f: &mut impl FnMut(&S) -> Result<T, E>) -> Result<GlueFormula<T>, E> {
        Ok(match self {
            GlueFormula::Means { sem, term, ty } => {
                GlueFormula::Means { sem: f(sem)?, term: term.clone(), ty: ty.clone() }
            }
            GlueFormula::Tensor(a, b) => GlueFormula::tensor(a.try_map_sem(f)?, b.try_map_sem(f)?),
            GlueFormula::Limp(a, b) => GlueFormula::limp(a.try_map_sem(f)?, b.try_map_sem(f)?),
            GlueFormula::Forall { var, sort, body } => GlueFormula::Forall {
                var: var.clone(),
                sort: sort.clone(),
                body: Arc::new(body.try_map_sem(f)?),
            },
        })
    }

    /// Rebuilds the formula with every meaning term mapped through `f`.
    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Self
    where
        S: Clone,
    {
        match self {
            GlueFormula::Means { sem, term, ty } => {
                GlueFormula::Means { sem: sem.clone(), term: f(term), ty: ty.clone() }
            }
            GlueFormula::Tensor(a, b) => GlueFormula::tensor(a.map_terms(f), b.map_terms(f)),
            GlueFormula::Limp(a, b) => GlueFormula::limp(a.map_terms(f), b.map_terms(f)),
            GlueFormula::Forall { var, sort, body } => GlueFormula::Forall {
                var: var.clone(),
                sort: sort.clone(),
                body: Arc::new(body.map_terms(f)),
            },
        }
    }

    /// All `Means` atoms, left to right.
    pub fn atoms(&self) -> Vec<(&S, &Term, &MeaningType)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(&'a S, &'a Term, &'a MeaningType)>) {
        match self {
            GlueFormula::Means { sem, term, ty } => out.push((sem, term, ty)),
            GlueFormula::Tensor(a, b) | GlueFormula::Limp(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            GlueFormula::Forall { body, .. } => body.collect_atoms(out),
        }
    }

    /// Number of connectives and quantifiers.
    pub fn size(&self) -> usize {
        match self {
            GlueFormula::Means { .. } => 1,
            GlueFormula::Tensor(a, b) | GlueFormula::Limp(a, b) => 1 + a.size() + b.size(),
            GlueFormula::Forall { body, .. } => 1 + body.size(),
        }
    }
}

impl Formula {
    /// Replaces free occurrences of glue variable `var`.
    pub fn instantiate(&self, var: &str, value: &Binding) -> Formula {
        match self {
            GlueFormula::Means { sem, term, ty } => {
                let sem = match (sem, value) {
                    (SemTerm::Var(v), Binding::Sem(s)) if &**v == var => s.clone(),
                    _ => sem.clone(),
                };
                let term = match value {
                    Binding::Term(t) if term.mentions_var(var) => term.substitute(var, t),
                    _ => term.clone(),
                };
                GlueFormula::Means { sem, term, ty: ty.clone() }
            }
            GlueFormula::Tensor(a, b) => {
                GlueFormula::tensor(a.instantiate(var, value), b.instantiate(var, value))
            }
            GlueFormula::Limp(a, b) => GlueFormula::limp(a.instantiate(var, value), b.instantiate(var, value)),
            GlueFormula::Forall { var: v, sort, body } => {
                if &**v == var {
                    self.clone()
                } else {
                    GlueFormula::Forall { var: v.clone(), sort: sort.clone(), body: Arc::new(body.instantiate(var, value)) }
                }
            }
        }
    }

    /// Free glue variables (meaning and σ).
    pub fn free_vars(&self) -> BTreeSet<Name> {
        match self {
            GlueFormula::Means { sem, term, .. } => {
                let mut out = term.free_vars();
                if let SemTerm::Var(v) = sem {
                    out.insert(v.clone());
                }
                out
            }
            GlueFormula::Tensor(a, b) | GlueFormula::Limp(a, b) => {
                let mut out = a.free_vars();
                out.extend(b.free_vars());
                out
            }
            GlueFormula::Forall { var, body, .. } => {
                let mut out = body.free_vars();
                out.remove(var);
                out
            }
        }
    }

    /// Checks every atom's term against its type subscript. Bound
    /// variables get their declared types.
    pub fn typecheck(&self, ctx: &TypingContext) -> Result<(), TypeError> {
        match self {
            GlueFormula::Means { term, ty, .. } => {
                let found = typecheck(term, ctx)?;
                if found != *ty {
                    return Err(TypeError::TypeMismatch { location: term.to_string(), expected: ty.clone(), found });
                }
                Ok(())
            }
            GlueFormula::Tensor(a, b) | GlueFormula::Limp(a, b) => {
                a.typecheck(ctx)?;
                b.typecheck(ctx)
            }
            GlueFormula::Forall { var, sort: Sort::Term(ty), body } => {
                let mut inner = ctx.clone();
                inner.declare_var(var, ty.clone());
                body.typecheck(&inner)
            }
            GlueFormula::Forall { body, .. } => body.typecheck(ctx),
        }
    }
}

/// A value for a glue variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binding {
    Term(Term),
    Sem(SemTerm),
}

impl Substitutable for Formula {
    fn apply_subst(&self, s: &Substitution) -> Self {
        match self {
            GlueFormula::Means { sem, term, ty } => {
                GlueFormula::Means { sem: s.apply_sem(sem), term: s.apply(term), ty: ty.clone() }
            }
            GlueFormula::Tensor(a, b) => GlueFormula::tensor(a.apply_subst(s), b.apply_subst(s)),
            GlueFormula::Limp(a, b) => GlueFormula::limp(a.apply_subst(s), b.apply_subst(s)),
            GlueFormula::Forall { var, sort, body } => {
                GlueFormula::Forall { var: var.clone(), sort: sort.clone(), body: Arc::new(body.apply_subst(s)) }
            }
        }
    }
}

impl<S: fmt::Display> fmt::Display for GlueFormula<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlueFormula::Means { sem, term: Term::Const(c), ty }
                if *ty == MeaningType::t() && sem.to_string() == **c =>
            {
                write!(f, "{c}")
            }
            GlueFormula::Means { sem, term, .. } => write!(f, "{sem} ~> {term}"),
            GlueFormula::Forall { .. } => {
                write!(f, "forall ")?;
                let mut cur = self;
                let mut first = true;
                while let GlueFormula::Forall { var, sort, body } = cur {
                    if !first {
                        write!(f, ", ")?;
                    }
                    first = false;
                    match sort {
                        Sort::Sem => write!(f, "{var}:sem")?,
                        Sort::Term(ty) if matches!(ty, MeaningType::Arrow(..)) => write!(f, "{var}:({ty})")?,
                        Sort::Term(ty) => write!(f, "{var}:{ty}")?,
                    }
                    cur = body;
                }
                write!(f, ". {cur}")
            }
            GlueFormula::Limp(a, b) => {
                if matches!(**a, GlueFormula::Limp(..) | GlueFormula::Forall { .. }) {
                    write!(f, "({a}) -o {b}")
                } else {
                    write!(f, "{a} -o {b}")
                }
            }
            GlueFormula::Tensor(a, b) => {
                let wrap = |x: &GlueFormula<S>| matches!(x, GlueFormula::Limp(..) | GlueFormula::Forall { .. });
                if wrap(a) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " * ")?;
                if wrap(b) || matches!(**b, GlueFormula::Tensor(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("variable `{0}` is bound twice")]
    Shadowing(String),
}

/// Parses a closed formula. Names that are not bound σ-variables denote
/// σ-structures; terms are elaborated against `ctx`.
pub fn parse_formula(src: &str, ctx: &TypingContext) -> Result<Formula, FormulaError> {
    let mut cur = Cursor::new(src)?;
    let mut p = FormulaParser { ctx: ctx.clone(), sem_vars: Vec::new(), term_vars: Vec::new() };
    let f = p.formula(&mut cur)?;
    if !cur.at_eof() {
        return Err(cur.error(format!("unexpected {}", cur.peek())).into());
    }
    Ok(f)
}

struct FormulaParser {
    ctx: TypingContext,
    sem_vars: Vec<String>,
    term_vars: Vec<String>,
}

impl FormulaParser {
    fn formula(&mut self, cur: &mut Cursor) -> Result<Formula, FormulaError> {
        if *cur.peek() == Tok::Ident("forall".into()) {
            cur.next();
            let mut binders = Vec::new();
            loop {
                let var = cur.ident()?;
                cur.expect(&Tok::Colon)?;
                let sort = if *cur.peek() == Tok::Ident("sem".into()) {
                    cur.next();
                    Sort::Sem
                } else {
                    Sort::Term(parse_type_tokens(cur)?)
                };
                binders.push((var, sort));
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            cur.expect(&Tok::Dot)?;
            let saved = self.ctx.clone();
            for (var, sort) in &binders {
                if self.sem_vars.contains(var) || self.term_vars.contains(var) {
                    return Err(FormulaError::Shadowing(var.clone()));
                }
                match sort {
                    Sort::Sem => self.sem_vars.push(var.clone()),
                    Sort::Term(ty) => {
                        self.term_vars.push(var.clone());
                        self.ctx.declare_var(var, ty.clone());
                    }
                }
            }
            let body = self.formula(cur);
            for (var, sort) in &binders {
                match sort {
                    Sort::Sem => self.sem_vars.retain(|v| v != var),
                    Sort::Term(_) => self.term_vars.retain(|v| v != var),
                }
            }
            self.ctx = saved;
            let mut body = body?;
            for (var, sort) in binders.into_iter().rev() {
                body = GlueFormula::forall(&var, sort, body);
            }
            return Ok(body);
        }
        let lhs = self.tensor(cur)?;
        if cur.eat(&Tok::Lolli) {
            let rhs = self.formula(cur)?;
            return Ok(GlueFormula::limp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn tensor(&mut self, cur: &mut Cursor) -> Result<Formula, FormulaError> {
        let mut acc = self.unary(cur)?;
        while cur.eat(&Tok::Star) {
            let rhs = self.unary(cur)?;
            acc = GlueFormula::tensor(acc, rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self, cur: &mut Cursor) -> Result<Formula, FormulaError> {
        if cur.eat(&Tok::LParen) {
            let f = self.formula(cur)?;
            cur.expect(&Tok::RParen)?;
            return Ok(f);
        }
        let name = cur.ident()?;
        if name == "forall" {
            return Err(cur.error("parenthesize a quantified formula inside a tensor or antecedent").into());
        }
        let mut slot = Slot::Root;
        if *cur.peek() == Tok::Dot {
            if let Tok::Ident(a) = cur.peek_at(1).clone() {
                slot = match a.to_ascii_uppercase().as_str() {
                    "VAR" => Slot::Var,
                    "RESTR" => Slot::Restr,
                    _ => return Err(cur.error(format!("unknown σ attribute `{a}`")).into()),
                };
                cur.next();
                cur.next();
            }
        }
        let sem = if self.sem_vars.contains(&name) && slot == Slot::Root {
            SemTerm::Var(name.as_str().into())
        } else {
            SemTerm::Struct(SemStructure::new(&name, slot))
        };
        if !cur.eat(&Tok::Leadsto) {
            // propositional atom
            let mut ctx = self.ctx.clone();
            if ctx.const_type(&name).is_none() && ctx.var_type(&name).is_none() {
                ctx.declare_const(&name, MeaningType::t());
            }
            let term = if ctx.var_type(&name).is_some() { Term::var(&name) } else { Term::constant(&name) };
            return Ok(GlueFormula::means(sem, term, MeaningType::t()));
        }
        let raw = parse_raw(cur)?;
        let ty = if cur.eat(&Tok::Colon) { Some(parse_type_tokens(cur)?) } else { None };
        let term = raw.elaborate(&self.ctx, ty.as_ref())?;
        let ty = match ty {
            Some(ty) => ty,
            None => typecheck(&term, &self.ctx)?,
        };
        Ok(GlueFormula::means(sem, term, ty))
    }
}
