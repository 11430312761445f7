//! Higher-order pattern unification.
//!
//! Variables are classified as flex (to be solved) or eigen (local
//! constants). Each carries a stamp from a shared clock; a flex variable may
//! be instantiated with a term mentioning eigenvariable `e` only when `e` is
//! older than it, or when `e` is one of its pattern arguments.
//!
//! Besides Miller's fragment the solver accepts `(!S)(x1..xn) = t` with `S`
//! flex. When `t` is not itself headed by `!` this has the single solution
//! family `S := ^S'` followed by `S'(x1..xn) = t`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::structures::SemTerm;
use crate::term::{normalize, typecheck, MeaningType, Name, Term, TypeError, TypingContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Flex,
    Eigen,
}

/// What a glue variable ranges over.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Term(MeaningType),
    Sem,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub kind: VarKind,
    pub stamp: u64,
    pub sort: Sort,
}

/// Classification of every variable in play.
#[derive(Debug, Clone, Default)]
pub struct VarClass {
    vars: BTreeMap<Name, VarInfo>,
    clock: u64,
}

impl VarClass {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `name` with the next stamp.
    pub fn declare(&mut self, name: &str, kind: VarKind, sort: Sort) -> Name {
        self.clock += 1;
        let name: Name = name.into();
        self.vars.insert(name.clone(), VarInfo { kind, stamp: self.clock, sort });
        name
    }

    /// A new variable named `base#n`.
    pub fn fresh(&mut self, base: &str, kind: VarKind, sort: Sort) -> Name {
        self.clock += 1;
        let stamp = self.clock;
        self.fresh_at(base, kind, sort, stamp)
    }

    fn fresh_at(&mut self, base: &str, kind: VarKind, sort: Sort, stamp: u64) -> Name {
        self.clock += 1;
        let base = base.split('#').next().unwrap_or(base);
        let name: Name = format!("{base}#{}", self.clock).into();
        self.vars.insert(name.clone(), VarInfo { kind, stamp, sort });
        name
    }

    pub fn get(&self, name: &str) -> Option<&VarInfo> {
        self.vars.get(name)
    }

    pub fn is_flex(&self, name: &str) -> bool {
        self.get(name).is_some_and(|i| i.kind == VarKind::Flex)
    }

    pub fn is_eigen(&self, name: &str) -> bool {
        self.get(name).is_some_and(|i| i.kind == VarKind::Eigen)
    }

    pub fn term_type(&self, name: &str) -> Option<&MeaningType> {
        match self.get(name).map(|i| &i.sort) {
            Some(Sort::Term(ty)) => Some(ty),
            _ => None,
        }
    }

    fn stamp(&self, name: &str) -> u64 {
        self.get(name).map_or(0, |i| i.stamp)
    }

    /// `base` extended with the type of every term-sorted variable.
    pub fn typing_context(&self, base: &TypingContext) -> TypingContext {
        let mut ctx = base.clone();
        for (name, info) in &self.vars {
            if let Sort::Term(ty) = &info.sort {
                ctx.declare_var(name, ty.clone());
            }
        }
        ctx
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("no unifier: {0}")]
    NoSolution(String),
    #[error("not a higher-order pattern: {0}")]
    NonPattern(String),
    #[error(transparent)]
    TypeMismatch(#[from] TypeError),
    #[error("inconsistent bindings for `{0}`")]
    Inconsistent(String),
}

fn clash(a: &Term, b: &Term) -> UnifyError {
    UnifyError::NoSolution(format!("{a} = {b}"))
}

/// Bindings for flex variables, kept in solved form: no bound variable
/// occurs in any range.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    terms: BTreeMap<Name, Term>,
    sems: BTreeMap<Name, SemTerm>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.sems.is_empty()
    }

    pub fn term(&self, var: &str) -> Option<&Term> {
        self.terms.get(var)
    }

    pub fn sem(&self, var: &str) -> Option<&SemTerm> {
        self.sems.get(var)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.terms.iter()
    }

    pub fn sems(&self) -> impl Iterator<Item = (&Name, &SemTerm)> {
        self.sems.iter()
    }

    /// Adds `var := value`, rewriting existing ranges that mention `var`.
    pub fn bind_term(&mut self, var: Name, value: Term) {
        let value = self.apply(&value);
        let single = Substitution {
            terms: [(var.clone(), value.clone())].into_iter().collect(),
            sems: BTreeMap::new(),
        };
        for t in self.terms.values_mut() {
            if t.mentions_var(&var) {
                *t = single.apply(t);
            }
        }
        self.terms.insert(var, value);
    }

    pub fn bind_sem(&mut self, var: Name, value: SemTerm) {
        let value = self.apply_sem(&value);
        for s in self.sems.values_mut() {
            if matches!(s, SemTerm::Var(v) if *v == var) {
                *s = value.clone();
            }
        }
        self.sems.insert(var, value);
    }

    /// Replaces bound variables and normalizes the result if anything changed.
    pub fn apply(&self, t: &Term) -> Term {
        if self.terms.is_empty() || !t.free_vars().iter().any(|v| self.terms.contains_key(v)) {
            return t.clone();
        }
        normalize(&t.map_vars(&mut |v| self.terms.get(v).cloned()))
    }

    pub fn apply_sem(&self, s: &SemTerm) -> SemTerm {
        match s {
            SemTerm::Var(v) => self.sems.get(v).cloned().unwrap_or_else(|| s.clone()),
            SemTerm::Struct(_) => s.clone(),
        }
    }

    /// The substitution that acts as `self` followed by `other`.
    pub fn compose(&self, other: &Substitution) -> Result<Substitution, UnifyError> {
        let mut out = Substitution::new();
        for (x, t) in &self.terms {
            let t2 = other.apply(t);
            if let Some(u) = other.terms.get(x) {
                if normalize(u) != normalize(&t2) {
                    return Err(UnifyError::Inconsistent(x.to_string()));
                }
            }
            out.terms.insert(x.clone(), t2);
        }
        for (x, u) in &other.terms {
            out.terms.entry(x.clone()).or_insert_with(|| u.clone());
        }
        for (x, s) in &self.sems {
            let s2 = other.apply_sem(s);
            if let Some(u) = other.sems.get(x) {
                if *u != s2 {
                    return Err(UnifyError::Inconsistent(x.to_string()));
                }
            }
            out.sems.insert(x.clone(), s2);
        }
        for (x, u) in &other.sems {
            out.sems.entry(x.clone()).or_insert_with(|| u.clone());
        }
        Ok(out)
    }
}

/// Things a substitution can be applied to.
pub trait Substitutable {
    fn apply_subst(&self, s: &Substitution) -> Self;
}

impl Substitutable for Term {
    fn apply_subst(&self, s: &Substitution) -> Self {
        s.apply(self)
    }
}

impl Substitutable for SemTerm {
    fn apply_subst(&self, s: &Substitution) -> Self {
        s.apply_sem(self)
    }
}

pub fn apply<T: Substitutable>(s: &Substitution, target: &T) -> T {
    target.apply_subst(s)
}

/// Most general unifier of a list of equations. Both sides of each
/// equation must have the same type.
pub fn unify(
    equations: &[(Term, Term)],
    classes: &mut VarClass,
    ctx: &TypingContext,
) -> Result<Substitution, UnifyError> {
    let tctx = classes.typing_context(ctx);
    for (l, r) in equations {
        let lt = typecheck(l, &tctx)?;
        let rt = typecheck(r, &tctx)?;
        if lt != rt {
            return Err(TypeError::TypeMismatch { location: format!("{l} = {r}"), expected: lt, found: rt }.into());
        }
    }
    let mut s = Substitution::new();
    for (l, r) in equations {
        unify_terms(l, r, &mut s, classes)?;
    }
    Ok(s)
}

/// Extends `subst` to a unifier of `a` and `b`. On error `subst` and
/// `classes` may hold partial work and should be discarded.
pub fn unify_terms(
    a: &Term,
    b: &Term,
    subst: &mut Substitution,
    classes: &mut VarClass,
) -> Result<(), UnifyError> {
    Solver { s: subst, vars: classes }.unify(a, b)
}

/// First-order unification of σ-structure terms.
pub fn unify_sems(
    a: &SemTerm,
    b: &SemTerm,
    subst: &mut Substitution,
    classes: &VarClass,
) -> Result<(), UnifyError> {
    let a = subst.apply_sem(a);
    let b = subst.apply_sem(b);
    if a == b {
        return Ok(());
    }
    let fail = || UnifyError::NoSolution(format!("{a} = {b}"));
    let flex = |s: &SemTerm| match s {
        SemTerm::Var(v) if classes.is_flex(v) => Some(v.clone()),
        _ => None,
    };
    // the allowed value for a flex h: a structure, an older eigen, or another flex
    let fits = |h: &Name, other: &SemTerm| match other {
        SemTerm::Struct(_) => true,
        SemTerm::Var(v) if classes.is_flex(v) => true,
        SemTerm::Var(v) => classes.stamp(v) < classes.stamp(h),
    };
    match (flex(&a), flex(&b)) {
        (Some(h), Some(g)) => {
            // bind the younger to the older
            if classes.stamp(&h) >= classes.stamp(&g) {
                subst.bind_sem(h, b);
            } else {
                subst.bind_sem(g, a);
            }
            Ok(())
        }
        (Some(h), None) if fits(&h, &b) => {
            subst.bind_sem(h, b);
            Ok(())
        }
        (None, Some(g)) if fits(&g, &a) => {
            subst.bind_sem(g, a);
            Ok(())
        }
        _ => Err(fail()),
    }
}

enum Head {
    /// unbound flex variable applied to arguments
    Flex(Name, Vec<Term>),
    /// `(!S)(args)` with `S` an unbound flex variable
    CupFlex(Name, Vec<Term>),
    Rigid(Term, Vec<Term>),
}

struct Solver<'a> {
    s: &'a mut Substitution,
    vars: &'a mut VarClass,
}

impl Solver<'_> {
    fn classify(&self, t: &Term) -> Head {
        let (h, args) = t.spine();
        let args: Vec<Term> = args.into_iter().cloned().collect();
        match h {
            Term::Var(v) if self.vars.is_flex(v) => Head::Flex(v.clone(), args),
            Term::Cup(inner) => match &**inner {
                Term::Var(v) if self.vars.is_flex(v) => Head::CupFlex(v.clone(), args),
                _ => Head::Rigid(h.clone(), args),
            },
            _ => Head::Rigid(h.clone(), args),
        }
    }

    fn local(&mut self, ty: &MeaningType) -> Term {
        Term::Var(self.vars.fresh("l", VarKind::Eigen, Sort::Term(ty.clone())))
    }

    fn unify(&mut self, a: &Term, b: &Term) -> Result<(), UnifyError> {
        let a = normalize(&self.s.apply(a));
        let b = normalize(&self.s.apply(b));
        if a == b {
            return Ok(());
        }
        match (&a, &b) {
            (Term::Lam(ty, x), Term::Lam(_, y)) => {
                let c = self.local(ty);
                self.unify(&Term::open(x, &c), &Term::open(y, &c))
            }
            (Term::Lam(_, _), Term::Cap(_)) | (Term::Cap(_), Term::Lam(_, _)) => Err(clash(&a, &b)),
            (Term::Lam(ty, x), _) => {
                let c = self.local(ty);
                self.unify(&Term::open(x, &c), &Term::app(b.clone(), c))
            }
            (_, Term::Lam(..)) => self.unify(&b, &a),
            (Term::Cap(x), Term::Cap(y)) => self.unify(x, y),
            _ => self.unify_spines(&a, &b),
        }
    }

    fn unify_spines(&mut self, a: &Term, b: &Term) -> Result<(), UnifyError> {
        match (self.classify(a), self.classify(b)) {
            (Head::Flex(f, xs), Head::Flex(g, ys)) => self.flex_flex(f, xs, g, ys, a, b),
            (Head::Flex(f, xs), _) => self.flex_rigid(&f, &xs, b),
            (_, Head::Flex(g, ys)) => self.flex_rigid(&g, &ys, a),
            (Head::CupFlex(s, xs), other) => self.cup_flex(&s, &xs, a, other, b),
            (other, Head::CupFlex(s, ys)) => self.cup_flex(&s, &ys, b, other, a),
            (Head::Rigid(h1, xs), Head::Rigid(h2, ys)) => {
                if xs.len() != ys.len() {
                    return Err(clash(a, b));
                }
                match (&h1, &h2) {
                    (Term::Cup(p), Term::Cup(q)) | (Term::Cap(p), Term::Cap(q)) => self.unify(p, q)?,
                    _ if h1 == h2 => {}
                    _ => return Err(clash(a, b)),
                }
                for (x, y) in xs.iter().zip(&ys) {
                    self.unify(x, y)?;
                }
                Ok(())
            }
        }
    }

    /// `(!S)(xs) = t`
    fn cup_flex(
        &mut self,
        s: &Name,
        xs: &[Term],
        lhs: &Term,
        other: Head,
        t: &Term,
    ) -> Result<(), UnifyError> {
        let arity_match = match &other {
            Head::CupFlex(_, ys) => ys.len() == xs.len(),
            Head::Rigid(Term::Cup(_), ys) => ys.len() == xs.len(),
            _ => false,
        };
        if arity_match {
            let (saved_s, saved_v) = (self.s.clone(), self.vars.clone());
            let (t_head, ys) = t.spine();
            let Term::Cup(inner) = t_head else { unreachable!() };
            let attempt = (|| {
                self.unify(&Term::var(s), inner)?;
                for (x, y) in xs.iter().zip(ys) {
                    self.unify(x, y)?;
                }
                Ok(())
            })();
            if attempt.is_ok() {
                return attempt;
            }
            *self.s = saved_s;
            *self.vars = saved_v;
        }
        // S := ^S'
        let ty = self.vars.term_type(s).cloned();
        let inner_ty = match ty {
            Some(MeaningType::Arrow(from, to)) if *from == MeaningType::s() => (*to).clone(),
            _ => return Err(UnifyError::NonPattern(format!("{lhs} = {t}"))),
        };
        let stamp = self.vars.stamp(s);
        let s2 = self.vars.fresh_at(s, VarKind::Flex, Sort::Term(inner_ty), stamp);
        self.s.bind_term(s.clone(), Term::cap(Term::Var(s2)));
        self.unify(lhs, t)
    }

    /// Checks the pattern condition for `f(args)` and returns the argument names.
    fn pattern_args(&self, f: &Name, args: &[Term]) -> Option<Vec<Name>> {
        let fs = self.vars.stamp(f);
        let mut out: Vec<Name> = Vec::new();
        for a in args {
            match a {
                Term::Var(e)
                    if self.vars.is_eigen(e) && self.vars.stamp(e) > fs && !out.contains(e) =>
                {
                    out.push(e.clone())
                }
                _ => return None,
            }
        }
        Some(out)
    }

    fn flex_flex(
        &mut self,
        f: Name,
        xs: Vec<Term>,
        g: Name,
        ys: Vec<Term>,
        a: &Term,
        b: &Term,
    ) -> Result<(), UnifyError> {
        if f == g {
            let (Some(px), Some(py)) = (self.pattern_args(&f, &xs), self.pattern_args(&g, &ys))
            else {
                return Err(UnifyError::NonPattern(format!("{a} = {b}")));
            };
            let keep: Vec<usize> = (0..px.len()).filter(|&i| px[i] == py[i]).collect();
            return self.restrict(&f, px.len(), &keep, self.vars.stamp(&f));
        }
        if self.pattern_args(&f, &xs).is_some() {
            self.flex_rigid(&f, &xs, b)
        } else {
            self.flex_rigid(&g, &ys, a)
        }
    }

    /// Binds `f := \p1..pn. f'(p_keep...)` with `f'` fresh at `stamp`.
    /// Returns the new head.
    fn restrict(&mut self, f: &Name, n: usize, keep: &[usize], stamp: u64) -> Result<(), UnifyError> {
        self.restrict_head(f, n, keep, stamp).map(|_| ())
    }

    fn restrict_head(
        &mut self,
        f: &Name,
        n: usize,
        keep: &[usize],
        stamp: u64,
    ) -> Result<Name, UnifyError> {
        let ty = self
            .vars
            .term_type(f)
            .cloned()
            .ok_or_else(|| UnifyError::NonPattern(format!("untyped variable {f}")))?;
        let (arg_tys, res) = ty.uncurry();
        if arg_tys.len() < n {
            return Err(UnifyError::NonPattern(format!("{f} applied to too many arguments")));
        }
        let rest = MeaningType::curried(arg_tys[n..].iter().cloned(), res);
        let new_ty = MeaningType::curried(keep.iter().map(|&i| arg_tys[i].clone()), rest);
        let f2 = self.vars.fresh_at(f, VarKind::Flex, Sort::Term(new_ty), stamp);
        let body = Term::apply(
            Term::Var(f2.clone()),
            keep.iter().map(|&i| Term::Bound((n - 1 - i) as u32)),
        );
        let value = (0..n).rev().fold(body, |acc, i| Term::lam(arg_tys[i].clone(), acc));
        self.s.bind_term(f.clone(), normalize(&value));
        Ok(f2)
    }

    fn flex_rigid(&mut self, f: &Name, args: &[Term], t: &Term) -> Result<(), UnifyError> {
        let Some(params) = self.pattern_args(f, args) else {
            let lhs = Term::apply(Term::Var(f.clone()), args.iter().cloned());
            return Err(UnifyError::NonPattern(format!("{lhs} = {t}")));
        };
        let body = self.prune(t, f, &params)?;
        let mut value = body;
        for p in params.iter().rev() {
            let ty = self.vars.term_type(p).cloned().expect("eigenvariables are typed");
            value = value.abstract_var(p, ty);
        }
        self.s.bind_term(f.clone(), normalize(&value));
        Ok(())
    }

    fn allowed(&self, e: &Name, f: &Name, params: &[Name]) -> bool {
        params.contains(e) || self.vars.stamp(e) < self.vars.stamp(f)
    }

    /// Makes `t` a legal body for `f := \params. t`: occurs check, escape
    /// check, and pruning or lowering of nested flex variables.
    fn prune(&mut self, t: &Term, f: &Name, params: &[Name]) -> Result<Term, UnifyError> {
        match t {
            Term::Lam(ty, b) => Ok(Term::lam(ty.clone(), self.prune(b, f, params)?)),
            Term::Cap(b) => Ok(Term::cap(self.prune(b, f, params)?)),
            _ => {
                let (h, args) = t.spine();
                let args: Vec<Term> = args.into_iter().cloned().collect();
                match h {
                    Term::Var(g) if self.vars.is_flex(g) => {
                        if g == f {
                            return Err(UnifyError::NoSolution(format!("{f} occurs in {t}")));
                        }
                        if self.s.term(g).is_some() {
                            // bound earlier in this pass
                            let t2 = normalize(&self.s.apply(t));
                            return self.prune(&t2, f, params);
                        }
                        self.prune_flex(g, &args, f, params, t)
                    }
                    Term::Cup(inner) if matches!(&**inner, Term::Var(v) if self.vars.is_flex(v)) => {
                        let Term::Var(s) = &**inner else { unreachable!() };
                        if s == f {
                            return Err(UnifyError::NoSolution(format!("{f} occurs in {t}")));
                        }
                        let mut head = h.clone();
                        if self.s.term(s).is_some() {
                            let t2 = normalize(&self.s.apply(t));
                            return self.prune(&t2, f, params);
                        }
                        if self.vars.stamp(s) > self.vars.stamp(f) {
                            let s2 = self.restrict_head(s, 0, &[], self.vars.stamp(f))?;
                            head = Term::cup(Term::Var(s2));
                        }
                        let mut out = Vec::new();
                        for a in &args {
                            if let Term::Var(e) = a {
                                if self.vars.is_eigen(e) && !self.allowed(e, f, params) {
                                    return Err(UnifyError::NonPattern(format!(
                                        "cannot prune {e} from {t}"
                                    )));
                                }
                            }
                            out.push(self.prune(a, f, params)?);
                        }
                        Ok(Term::apply(head, out))
                    }
                    _ => {
                        let head = match h {
                            Term::Var(e) if self.vars.is_eigen(e) && !self.allowed(e, f, params) => {
                                return Err(UnifyError::NoSolution(format!(
                                    "{e} would escape its scope in {f}"
                                )))
                            }
                            Term::Cup(x) => Term::cup(self.prune(x, f, params)?),
                            Term::Cap(x) => Term::cap(self.prune(x, f, params)?),
                            Term::Lam(..) => self.prune(h, f, params)?,
                            _ => h.clone(),
                        };
                        let mut out = Vec::new();
                        for a in &args {
                            out.push(self.prune(a, f, params)?);
                        }
                        Ok(Term::apply(head, out))
                    }
                }
            }
        }
    }

    fn prune_flex(
        &mut self,
        g: &Name,
        args: &[Term],
        f: &Name,
        params: &[Name],
        t: &Term,
    ) -> Result<Term, UnifyError> {
        let mut keep = Vec::new();
        let mut simple = true;
        for (i, a) in args.iter().enumerate() {
            match a {
                Term::Bound(_) => keep.push(i),
                Term::Var(e) if self.vars.is_eigen(e) => {
                    if self.allowed(e, f, params) {
                        keep.push(i);
                    }
                }
                _ => {
                    simple = false;
                    keep.push(i);
                }
            }
        }
        let lower = self.vars.stamp(g) > self.vars.stamp(f);
        if keep.len() == args.len() && !lower {
            let mut out = Vec::new();
            for a in args {
                out.push(self.prune(a, f, params)?);
            }
            return Ok(Term::apply(Term::Var(g.clone()), out));
        }
        if !simple && keep.len() != args.len() {
            return Err(UnifyError::NonPattern(format!("cannot prune arguments of {t}")));
        }
        let stamp = self.vars.stamp(g).min(self.vars.stamp(f));
        let g2 = self.restrict_head(g, args.len(), &keep, stamp)?;
        let mut out = Vec::new();
        for &i in &keep {
            out.push(self.prune(&args[i], f, params)?);
        }
        Ok(Term::apply(Term::Var(g2), out))
    }
}
