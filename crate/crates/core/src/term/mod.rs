//! The intensional higher-order meaning language.
//!
//! Terms use de Bruijn indices for lambda-bound variables, so two terms are
//! α-equivalent exactly when they compare equal with `==`. Free names are
//! either constants (declared in a [`TypingContext`]) or variables; glue
//! variables, eigenvariables and free lambda variables are all `Var`.

mod normalize;
pub(crate) mod syntax;
mod typing;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use normalize::{alpha_equal, normalize};
pub use syntax::{parse_term, parse_type, print_term, PrintOptions, RawTerm, TermParseError};
pub use typing::{substitute_checked, typecheck, TypeError, TypingContext};

pub type Name = Arc<str>;

/// Base types of the meaning language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseType {
    /// entities
    E,
    /// truth values
    T,
    /// world/time indices
    S,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeaningType {
    Base(BaseType),
    Arrow(Arc<MeaningType>, Arc<MeaningType>),
    /// Only produced while inferring types of unannotated binders and of the
    /// polymorphic `^`/`!` operators.
    TypeVar(u32),
}

impl MeaningType {
    pub fn e() -> Self {
        MeaningType::Base(BaseType::E)
    }

    pub fn t() -> Self {
        MeaningType::Base(BaseType::T)
    }

    pub fn s() -> Self {
        MeaningType::Base(BaseType::S)
    }

    pub fn arrow(from: MeaningType, to: MeaningType) -> Self {
        MeaningType::Arrow(Arc::new(from), Arc::new(to))
    }

    /// `a1 -> a2 -> ... -> result`
    pub fn curried(args: impl IntoIterator<Item = MeaningType>, result: MeaningType) -> Self {
        let args: Vec<_> = args.into_iter().collect();
        args.into_iter().rev().fold(result, |acc, a| MeaningType::arrow(a, acc))
    }

    /// Splits `a1 -> ... -> an -> r` into argument types and the final result.
    pub fn uncurry(&self) -> (Vec<MeaningType>, MeaningType) {
        let mut args = Vec::new();
        let mut cur = self;
        while let MeaningType::Arrow(a, b) = cur {
            args.push((**a).clone());
            cur = b;
        }
        (args, cur.clone())
    }

    pub fn has_type_vars(&self) -> bool {
        match self {
            MeaningType::Base(_) => false,
            MeaningType::Arrow(a, b) => a.has_type_vars() || b.has_type_vars(),
            MeaningType::TypeVar(_) => true,
        }
    }
}

impl fmt::Display for MeaningType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeaningType::Base(BaseType::E) => write!(f, "e"),
            MeaningType::Base(BaseType::T) => write!(f, "t"),
            MeaningType::Base(BaseType::S) => write!(f, "s"),
            MeaningType::TypeVar(n) => write!(f, "'a{n}"),
            MeaningType::Arrow(a, b) => {
                if matches!(**a, MeaningType::Arrow(..)) {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
        }
    }
}

/// A meaning term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Name),
    Var(Name),
    /// de Bruijn index; 0 is the innermost enclosing binder
    Bound(u32),
    Lam(MeaningType, Arc<Term>),
    App(Arc<Term>, Arc<Term>),
    /// intension `^M`
    Cap(Arc<Term>),
    /// extension `!M`
    Cup(Arc<Term>),
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const(name.into())
    }

    pub fn var(name: &str) -> Term {
        Term::Var(name.into())
    }

    pub fn lam(ty: MeaningType, body: Term) -> Term {
        Term::Lam(ty, Arc::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Arc::new(f), Arc::new(a))
    }

    /// Curried application `f(a1, ..., an)`.
    pub fn apply(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn cap(t: Term) -> Term {
        Term::Cap(Arc::new(t))
    }

    pub fn cup(t: Term) -> Term {
        Term::Cup(Arc::new(t))
    }

    /// Head and argument list of an application spine.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Term::App(f, a) = cur {
            args.push(&**a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// Names of free variables (not constants).
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out, false);
        out
    }

    /// Names of free variables and constants.
    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out, true);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<Name>, consts: bool) {
        match self {
            Term::Const(c) => {
                if consts {
                    out.insert(c.clone());
                }
            }
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Bound(_) => {}
            Term::Lam(_, b) | Term::Cap(b) | Term::Cup(b) => b.collect_names(out, consts),
            Term::App(f, a) => {
                f.collect_names(out, consts);
                a.collect_names(out, consts);
            }
        }
    }

    pub fn mentions_var(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => &**v == name,
            Term::Const(_) | Term::Bound(_) => false,
            Term::Lam(_, b) | Term::Cap(b) | Term::Cup(b) => b.mentions_var(name),
            Term::App(f, a) => f.mentions_var(name) || a.mentions_var(name),
        }
    }

    /// Replaces free occurrences of variable `var`. The replacement must not
    /// contain loose de Bruijn indices; capture is impossible by construction.
    pub fn substitute(&self, var: &str, replacement: &Term) -> Term {
        self.map_vars(&mut |v| (&**v == var).then(|| replacement.clone()))
    }

    /// Rebuilds the term, replacing each free variable for which `f` returns
    /// a term. Replacements must be closed with respect to de Bruijn indices.
    pub fn map_vars(&self, f: &mut impl FnMut(&Name) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Term::Const(_) | Term::Bound(_) => self.clone(),
            Term::Lam(ty, b) => Term::lam(ty.clone(), b.map_vars(f)),
            Term::App(g, a) => Term::app(g.map_vars(f), a.map_vars(f)),
            Term::Cap(b) => Term::cap(b.map_vars(f)),
            Term::Cup(b) => Term::cup(b.map_vars(f)),
        }
    }

    /// True when de Bruijn index `idx` (relative to this term) occurs free.
    pub fn has_loose_bound(&self, idx: u32) -> bool {
        match self {
            Term::Bound(i) => *i == idx,
            Term::Const(_) | Term::Var(_) => false,
            Term::Lam(_, b) => b.has_loose_bound(idx + 1),
            Term::Cap(b) | Term::Cup(b) => b.has_loose_bound(idx),
            Term::App(f, a) => f.has_loose_bound(idx) || a.has_loose_bound(idx),
        }
    }

    pub fn is_locally_closed(&self) -> bool {
        fn go(t: &Term, depth: u32) -> bool {
            match t {
                Term::Bound(i) => *i < depth,
                Term::Const(_) | Term::Var(_) => true,
                Term::Lam(_, b) => go(b, depth + 1),
                Term::Cap(b) | Term::Cup(b) => go(b, depth),
                Term::App(f, a) => go(f, depth) && go(a, depth),
            }
        }
        go(self, 0)
    }

    /// Shifts loose indices `>= cutoff` by `delta`.
    pub(crate) fn shift(&self, delta: i64, cutoff: u32) -> Term {
        match self {
            Term::Bound(i) if *i >= cutoff => {
                let n = *i as i64 + delta;
                debug_assert!(n >= 0, "negative de Bruijn index");
                Term::Bound(n as u32)
            }
            Term::Bound(_) | Term::Const(_) | Term::Var(_) => self.clone(),
            Term::Lam(ty, b) => Term::lam(ty.clone(), b.shift(delta, cutoff + 1)),
            Term::App(f, a) => Term::app(f.shift(delta, cutoff), a.shift(delta, cutoff)),
            Term::Cap(b) => Term::cap(b.shift(delta, cutoff)),
            Term::Cup(b) => Term::cup(b.shift(delta, cutoff)),
        }
    }

    /// Substitutes `value` for index `depth` and lowers higher indices: the
    /// body half of a β-step.
    pub(crate) fn instantiate_at(&self, depth: u32, value: &Term) -> Term {
        match self {
            Term::Bound(i) => {
                if *i == depth {
                    value.shift(depth as i64, 0)
                } else if *i > depth {
                    Term::Bound(i - 1)
                } else {
                    self.clone()
                }
            }
            Term::Const(_) | Term::Var(_) => self.clone(),
            Term::Lam(ty, b) => Term::lam(ty.clone(), b.instantiate_at(depth + 1, value)),
            Term::App(f, a) => {
                Term::app(f.instantiate_at(depth, value), a.instantiate_at(depth, value))
            }
            Term::Cap(b) => Term::cap(b.instantiate_at(depth, value)),
            Term::Cup(b) => Term::cup(b.instantiate_at(depth, value)),
        }
    }

    /// Body of a lambda with its bound variable replaced by `value`.
    pub fn open(body: &Term, value: &Term) -> Term {
        body.instantiate_at(0, value)
    }

    /// Abstracts the free variable `var` into a new outermost binder of
    /// type `ty` (inverse of [`Term::open`]).
    pub fn abstract_var(&self, var: &str, ty: MeaningType) -> Term {
        fn go(t: &Term, var: &str, depth: u32) -> Term {
            match t {
                Term::Var(v) if &**v == var => Term::Bound(depth),
                Term::Var(_) | Term::Const(_) => t.clone(),
                Term::Bound(i) => {
                    if *i >= depth {
                        Term::Bound(i + 1)
                    } else {
                        t.clone()
                    }
                }
                Term::Lam(ty, b) => Term::lam(ty.clone(), go(b, var, depth + 1)),
                Term::App(f, a) => Term::app(go(f, var, depth), go(a, var, depth)),
                Term::Cap(b) => Term::cap(go(b, var, depth)),
                Term::Cup(b) => Term::cup(go(b, var, depth)),
            }
        }
        Term::lam(ty, go(self, var, 0))
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Const(_) | Term::Var(_) | Term::Bound(_) => 1,
            Term::Lam(_, b) | Term::Cap(b) | Term::Cup(b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&syntax::print_term(self, PrintOptions::default()))
    }
}
