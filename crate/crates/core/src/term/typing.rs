use std::collections::BTreeMap;

use thiserror::Error;

use super::{MeaningType, Name, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type mismatch at `{location}`: expected {expected}, found {found}")]
    TypeMismatch {
        location: String,
        expected: MeaningType,
        found: MeaningType,
    },
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("`{location}` is applied but has non-function type {found}")]
    NotAFunction { location: String, found: MeaningType },
    #[error("cannot determine the type of binder `{0}`")]
    Ambiguous(String),
    #[error("loose bound variable in `{0}`")]
    LooseBound(String),
}

/// Types of constants and free variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypingContext {
    consts: BTreeMap<Name, MeaningType>,
    vars: BTreeMap<Name, MeaningType>,
}

impl TypingContext {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The constants used by the intensional lexicon: determiners relate
    /// property intensions.
    pub fn standard() -> Self {
        let mut ctx = Self::base();
        let prop = MeaningType::curried([MeaningType::s(), MeaningType::e()], MeaningType::t());
        let det = MeaningType::curried([prop.clone(), prop.clone()], MeaningType::t());
        for d in ["every", "a"] {
            ctx.declare_const(d, det.clone());
        }
        let quant_intension =
            MeaningType::arrow(MeaningType::s(), MeaningType::arrow(prop, MeaningType::t()));
        ctx.declare_const(
            "seek",
            MeaningType::curried([MeaningType::e(), quant_intension], MeaningType::t()),
        );
        ctx
    }

    /// Purely extensional determiners `(e -> t) -> (e -> t) -> t`.
    pub fn extensional() -> Self {
        let mut ctx = Self::base();
        let prop = MeaningType::arrow(MeaningType::e(), MeaningType::t());
        let det = MeaningType::curried([prop.clone(), prop], MeaningType::t());
        for d in ["every", "a"] {
            ctx.declare_const(d, det.clone());
        }
        ctx
    }

    fn base() -> Self {
        let mut ctx = Self::default();
        let e = MeaningType::e;
        let pred = MeaningType::arrow(e(), MeaningType::t());
        let rel = MeaningType::curried([e(), e()], MeaningType::t());
        for n in ["Bill", "Hillary", "Al"] {
            ctx.declare_const(n, e());
        }
        for p in ["voter", "candidate", "manager", "unicorn"] {
            ctx.declare_const(p, pred.clone());
        }
        for r in ["appoint", "convince", "admirer", "conv-with"] {
            ctx.declare_const(r, rel.clone());
        }
        ctx
    }

    pub fn declare_const(&mut self, name: &str, ty: MeaningType) {
        self.consts.insert(name.into(), ty);
    }

    pub fn declare_var(&mut self, name: &str, ty: MeaningType) {
        self.vars.insert(name.into(), ty);
    }

    pub fn remove_var(&mut self, name: &str) {
        self.vars.remove(name);
    }

    pub fn const_type(&self, name: &str) -> Option<&MeaningType> {
        self.consts.get(name)
    }

    pub fn var_type(&self, name: &str) -> Option<&MeaningType> {
        self.vars.get(name)
    }

    pub fn is_const(&self, name: &str) -> bool {
        self.consts.contains_key(name)
    }

    pub fn constants(&self) -> impl Iterator<Item = (&Name, &MeaningType)> {
        self.consts.iter()
    }

    /// Adds every constant of `other`, overriding on conflict.
    pub fn extend_consts(&mut self, other: &TypingContext) {
        for (k, v) in &other.consts {
            self.consts.insert(k.clone(), v.clone());
        }
    }
}

/// Principal type of a fully elaborated term.
pub fn typecheck(term: &Term, ctx: &TypingContext) -> Result<MeaningType, TypeError> {
    let mut binders = Vec::new();
    check(term, ctx, &mut binders)
}

fn check(
    term: &Term,
    ctx: &TypingContext,
    binders: &mut Vec<MeaningType>,
) -> Result<MeaningType, TypeError> {
    match term {
        Term::Const(c) => ctx
            .const_type(c)
            .cloned()
            .ok_or_else(|| TypeError::UnboundName(c.to_string())),
        Term::Var(v) => ctx
            .var_type(v)
            .cloned()
            .ok_or_else(|| TypeError::UnboundName(v.to_string())),
        Term::Bound(i) => binders
            .iter()
            .rev()
            .nth(*i as usize)
            .cloned()
            .ok_or_else(|| TypeError::LooseBound(term.to_string())),
        Term::Lam(ty, body) => {
            binders.push(ty.clone());
            let res = check(body, ctx, binders);
            binders.pop();
            Ok(MeaningType::arrow(ty.clone(), res?))
        }
        Term::App(f, a) => {
            let fty = check(f, ctx, binders)?;
            let aty = check(a, ctx, binders)?;
            match fty {
                MeaningType::Arrow(from, to) => {
                    if *from == aty {
                        Ok((*to).clone())
                    } else {
                        Err(TypeError::TypeMismatch {
                            location: render(term, binders),
                            expected: (*from).clone(),
                            found: aty,
                        })
                    }
                }
                other => Err(TypeError::NotAFunction {
                    location: render(f, binders),
                    found: other,
                }),
            }
        }
        Term::Cap(b) => Ok(MeaningType::arrow(MeaningType::s(), check(b, ctx, binders)?)),
        Term::Cup(b) => match check(b, ctx, binders)? {
            MeaningType::Arrow(from, to) if *from == MeaningType::s() => Ok((*to).clone()),
            other => Err(TypeError::TypeMismatch {
                location: render(term, binders),
                expected: MeaningType::arrow(MeaningType::s(), MeaningType::TypeVar(0)),
                found: other,
            }),
        },
    }
}

fn render(term: &Term, binders: &[MeaningType]) -> String {
    // close over the enclosing binders so the printer sees no loose indices
    let mut t = term.clone();
    for ty in binders.iter().rev() {
        t = Term::lam(ty.clone(), t);
    }
    let mut s = t.to_string();
    if !binders.is_empty() {
        s = format!("... {s}");
    }
    s
}

/// `substitute` with the replacement checked against the variable's type.
pub fn substitute_checked(
    term: &Term,
    var: &str,
    replacement: &Term,
    ctx: &TypingContext,
) -> Result<Term, TypeError> {
    let expected = ctx
        .var_type(var)
        .cloned()
        .ok_or_else(|| TypeError::UnboundName(var.to_string()))?;
    let found = typecheck(replacement, ctx)?;
    if found != expected {
        return Err(TypeError::TypeMismatch {
            location: var.to_string(),
            expected,
            found,
        });
    }
    Ok(term.substitute(var, replacement))
}

/// First-order unification over simple types, used for inference.
#[derive(Debug, Default)]
pub(crate) struct TypeSolver {
    bindings: BTreeMap<u32, MeaningType>,
    next: u32,
}

impl TypeSolver {
    pub fn fresh(&mut self) -> MeaningType {
        self.next += 1;
        MeaningType::TypeVar(self.next)
    }

    pub fn resolve(&self, ty: &MeaningType) -> MeaningType {
        match ty {
            MeaningType::TypeVar(v) => match self.bindings.get(v) {
                Some(t) => self.resolve(t),
                None => ty.clone(),
            },
            MeaningType::Arrow(a, b) => MeaningType::arrow(self.resolve(a), self.resolve(b)),
            MeaningType::Base(_) => ty.clone(),
        }
    }

    fn occurs(&self, v: u32, ty: &MeaningType) -> bool {
        match self.resolve(ty) {
            MeaningType::TypeVar(w) => v == w,
            MeaningType::Arrow(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            MeaningType::Base(_) => false,
        }
    }

    pub fn unify(&mut self, a: &MeaningType, b: &MeaningType) -> bool {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            _ if a == b => true,
            (MeaningType::TypeVar(v), other) | (other, MeaningType::TypeVar(v)) => {
                if self.occurs(*v, other) {
                    return false;
                }
                self.bindings.insert(*v, other.clone());
                true
            }
            (MeaningType::Arrow(a1, b1), MeaningType::Arrow(a2, b2)) => {
                self.unify(a1, a2) && self.unify(b1, b2)
            }
            _ => false,
        }
    }
}
