//! Backward proof search for the tensor fragment of higher-order linear
//! logic.
//!
//! Right rules for `-o` and `forall` are applied eagerly. An atomic goal is
//! proved by focusing on one context entry and running left rules on it
//! until an identity closes the branch. Resources are threaded: each
//! subproof receives the whole remaining context and hands back what it did
//! not use, so no context splits are enumerated.
//!
//! Every context entry carries a scope level. A hypothesis introduced under
//! `-o R` lives at a deeper level than the context outside it, and leaving
//! that subproof requires every entry at the deeper level to be used up.
//! Outputs of a left rule inherit the deepest level they depend on, which
//! lets them flow out to sibling subproofs exactly when the rule could have
//! been applied lower in the tree.

mod derivation;

use std::cell::Cell;
use std::collections::BTreeMap;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::glue::{Binding, Formula, GlueFormula};
use crate::structures::{SemStructure, SemTerm};
use crate::term::{normalize, MeaningType, Name, Term};
use crate::unify::{unify_sems, unify_terms, Sort, Substitutable, Substitution, VarClass, VarKind};

pub use derivation::{check_linearity, render_trace, Derivation, LinearityError, Rule};
use derivation::var_binding;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Rule applications attempted, across the whole search.
    pub max_steps: u64,
    /// Nesting of subproofs along one branch.
    pub max_depth: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_steps: 100_000, max_depth: 40 }
    }
}

#[derive(Debug, Clone)]
pub struct Reading {
    pub term: Term,
    pub derivation: Derivation,
    pub goal: SemStructure,
}

#[derive(Debug, Clone, Error)]
pub enum ProverError {
    #[error("search budget exhausted after {steps} steps ({} partial readings)", partial.len())]
    BudgetExhausted { steps: u64, partial: Vec<Reading> },
    #[error("unsolved variable `{0}` in extracted meaning")]
    UnsolvedVariable(Name),
    #[error("the conclusion of the derivation is not an atom")]
    NotAtomic,
    #[error(transparent)]
    Linearity(#[from] LinearityError),
}

/// `context ⊢ goal`, with the context a multiset.
#[derive(Debug, Clone)]
pub struct Sequent {
    pub context: Vec<Formula>,
    pub goal: Formula,
}

/// Readings found, with the number of rule applications spent.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub readings: Vec<Reading>,
    pub steps: u64,
}

/// Every distinct meaning `M` such that `premises ⊢ goal ~> M : ty`.
/// Readings come in the order first found.
pub fn enumerate_readings(
    premises: &[Formula],
    goal: &SemStructure,
    ty: &MeaningType,
    budget: SearchBudget,
) -> Result<Enumeration, ProverError> {
    let mut vars = VarClass::new();
    let m = vars.fresh("M", VarKind::Flex, Sort::Term(ty.clone()));
    let sequent = Sequent {
        context: premises.to_vec(),
        goal: Formula::means(SemTerm::Struct(goal.clone()), Term::Var(m), ty.clone()),
    };
    let mut readings: Vec<Reading> = Vec::new();
    let mut failure = None;
    let outcome = prove(&sequent, vars, budget, |d, _| {
        if let Err(e) = check_linearity(&d, premises) {
            failure = Some(e.into());
            return ControlFlow::Break(());
        }
        match extract_meaning(&d) {
            Ok(term) => {
                if !readings.iter().any(|r| r.term == term) {
                    readings.push(Reading { term, derivation: d, goal: goal.clone() });
                }
                ControlFlow::Continue(())
            }
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    match outcome {
        Ok(steps) => Ok(Enumeration { readings, steps }),
        Err(Exhausted { steps }) => Err(ProverError::BudgetExhausted { steps, partial: readings }),
    }
}

/// The goal's meaning term, normalized. Fails if any variable is left.
pub fn extract_meaning(d: &Derivation) -> Result<Term, ProverError> {
    let GlueFormula::Means { term, .. } = &d.goal else {
        return Err(ProverError::NotAtomic);
    };
    let term = normalize(term);
    if let Some(v) = term.free_vars().into_iter().next() {
        return Err(ProverError::UnsolvedVariable(v));
    }
    Ok(term)
}

/// Whether `⊢ formula` is derivable, with a witness when it is.
pub fn check_theorem(formula: &Formula, budget: SearchBudget) -> Result<Option<Derivation>, ProverError> {
    let sequent = Sequent { context: Vec::new(), goal: formula.clone() };
    let mut found = None;
    let outcome = prove(&sequent, VarClass::new(), budget, |d, _| {
        found = Some(d);
        ControlFlow::Break(())
    });
    match outcome {
        Ok(_) => Ok(found),
        Err(_) if found.is_some() => Ok(found),
        Err(Exhausted { steps }) => Err(ProverError::BudgetExhausted { steps, partial: Vec::new() }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exhausted {
    pub steps: u64,
}

/// Runs the search, handing each complete proof to `visit` with the
/// derivation already resolved under the final substitution. Returns the
/// number of steps used. Variables in `vars` that are flex may be solved.
pub fn prove(
    sequent: &Sequent,
    vars: VarClass,
    budget: SearchBudget,
    mut visit: impl FnMut(Derivation, Substitution) -> ControlFlow<()>,
) -> Result<u64, Exhausted> {
    let search = Search { budget, steps: Cell::new(0), truncated: Cell::new(false) };
    let mut state = State {
        vars,
        subst: Substitution::new(),
        ctx: Vec::new(),
        scopes: Vec::new(),
        eigen_scope: BTreeMap::new(),
    };
    for f in &sequent.context {
        state.push(f.clone(), 0);
    }
    let result = search.goal(state, &sequent.goal, 0, 0, &mut |st, d| {
        if !st.ctx.is_empty() {
            return Ok(());
        }
        match visit(d.resolve(&st.subst), st.subst) {
            ControlFlow::Continue(()) => Ok(()),
            ControlFlow::Break(()) => Err(Stop::Done),
        }
    });
    let steps = search.steps.get();
    match result {
        Err(Stop::Budget) => Err(Exhausted { steps }),
        _ if search.truncated.get() => Err(Exhausted { steps }),
        _ => Ok(steps),
    }
}

enum Stop {
    Budget,
    Done,
}

type Cont<'a> = &'a mut dyn FnMut(State, Derivation) -> Result<(), Stop>;

#[derive(Debug, Clone)]
struct Entry {
    id: usize,
    formula: Formula,
}

#[derive(Debug, Clone)]
struct State {
    vars: VarClass,
    subst: Substitution,
    ctx: Vec<Entry>,
    /// scope level of every entry ever created, by id
    scopes: Vec<usize>,
    eigen_scope: BTreeMap<Name, usize>,
}

impl State {
    fn push(&mut self, formula: Formula, scope: usize) -> usize {
        let id = self.scopes.len();
        self.scopes.push(scope);
        self.ctx.push(Entry { id, formula });
        id
    }

    fn scope_of(&self, id: usize) -> usize {
        self.scopes[id]
    }

    /// Deepest eigenvariable scope that `f` mentions.
    fn eigen_depth(&self, f: &Formula) -> usize {
        f.apply_subst(&self.subst)
            .free_vars()
            .iter()
            .filter_map(|v| self.eigen_scope.get(v))
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Whether the subproof at `level` may be closed.
    fn closes(&self, level: usize) -> bool {
        self.ctx.iter().all(|e| self.scope_of(e.id) < level && self.eigen_depth(&e.formula) < level)
    }

    fn fresh(&mut self, var: &str, kind: VarKind, sort: &Sort) -> (Name, Binding) {
        let name = self.vars.fresh(var, kind, sort.clone());
        let b = var_binding(&name, *sort == Sort::Sem);
        (name, b)
    }
}

struct Search {
    budget: SearchBudget,
    steps: Cell<u64>,
    truncated: Cell<bool>,
}

/// Atoms a formula can eventually yield when used on the left.
fn heads(f: &Formula) -> Vec<(&SemTerm, &MeaningType)> {
    match f {
        GlueFormula::Means { sem, ty, .. } => vec![(sem, ty)],
        GlueFormula::Forall { body, .. } => heads(body),
        GlueFormula::Limp(_, b) => heads(b),
        GlueFormula::Tensor(a, b) => {
            let mut out = heads(a);
            out.extend(heads(b));
            out
        }
    }
}

impl Search {
    /// Counts one step; `false` means the branch is too deep.
    fn tick(&self, depth: usize) -> Result<bool, Stop> {
        let n = self.steps.get() + 1;
        self.steps.set(n);
        if n > self.budget.max_steps {
            return Err(Stop::Budget);
        }
        if depth > self.budget.max_depth {
            self.truncated.set(true);
            return Ok(false);
        }
        Ok(true)
    }

    fn goal(&self, mut st: State, goal: &Formula, scope: usize, depth: usize, k: Cont) -> Result<(), Stop> {
        if !self.tick(depth)? {
            return Ok(());
        }
        match goal {
            GlueFormula::Limp(a, b) => {
                let inner = scope + 1;
                let id = st.push((**a).clone(), inner);
                self.goal(st, b, inner, depth + 1, &mut |st, d| {
                    if !st.closes(inner) {
                        return Ok(());
                    }
                    let mut node = Derivation::leaf(Rule::LimpR, goal);
                    node.introduces.push((id, (**a).clone()));
                    node.premises.push(d);
                    k(st, node)
                })
            }
            GlueFormula::Forall { var, sort, body } => {
                let inner = scope + 1;
                let (eigen, b) = st.fresh(var, VarKind::Eigen, sort);
                st.eigen_scope.insert(eigen, inner);
                let body = body.instantiate(var, &b);
                self.goal(st, &body, inner, depth + 1, &mut |st, d| {
                    if !st.closes(inner) {
                        return Ok(());
                    }
                    let mut node = Derivation::leaf(Rule::PiR, goal);
                    node.bindings.push((var.clone(), b.clone()));
                    node.premises.push(d);
                    k(st, node)
                })
            }
            GlueFormula::Tensor(a, b) => self.goal(st, a, scope, depth + 1, &mut |st, da| {
                self.goal(st, b, scope, depth + 1, &mut |st, db| {
                    let mut node = Derivation::leaf(Rule::TensorR, goal);
                    node.premises = vec![da.clone(), db];
                    k(st, node)
                })
            }),
            GlueFormula::Means { .. } => self.atom(st, goal, scope, depth, k),
        }
    }

    fn atom(&self, mut st: State, goal: &Formula, scope: usize, depth: usize, k: Cont) -> Result<(), Stop> {
        // ⊗L is invertible, so split context tensors before choosing a focus
        if let Some(pos) = st.ctx.iter().position(|e| matches!(e.formula, GlueFormula::Tensor(..))) {
            let e = st.ctx.remove(pos);
            let GlueFormula::Tensor(a, b) = &e.formula else { unreachable!() };
            let level = st.scope_of(e.id);
            let ia = st.push((**a).clone(), level);
            let ib = st.push((**b).clone(), level);
            return self.atom(st, goal, scope, depth, &mut |st, d| {
                let mut node = Derivation::leaf(Rule::TensorL, goal);
                node.principal = Some(e.formula.clone());
                node.consumes.push(e.id);
                node.introduces = vec![(ia, (**a).clone()), (ib, (**b).clone())];
                node.premises.push(d);
                k(st, node)
            });
        }
        let GlueFormula::Means { sem: gsem, ty: gty, .. } = goal else { unreachable!() };
        let gsem = st.subst.apply_sem(gsem);
        // interchangeable copies of a resource give the same proofs
        let mut tried: Vec<(Formula, usize)> = Vec::new();
        for i in 0..st.ctx.len() {
            let key = (st.ctx[i].formula.apply_subst(&st.subst), st.scope_of(st.ctx[i].id));
            if tried.contains(&key) {
                continue;
            }
            tried.push(key);
            let plausible = heads(&st.ctx[i].formula).into_iter().any(|(sem, ty)| {
                ty == gty
                    && match (st.subst.apply_sem(sem), &gsem) {
                        (SemTerm::Struct(a), SemTerm::Struct(b)) => a == *b,
                        _ => true,
                    }
            });
            if !plausible {
                continue;
            }
            let mut next = st.clone();
            let e = next.ctx.remove(i);
            let level = next.scope_of(e.id);
            self.focus(next, e, level, goal, scope, depth + 1, k)?;
        }
        Ok(())
    }

    /// Left rules on the focused entry `e`. `dep` is the deepest scope
    /// the focused formula depends on.
    #[allow(clippy::too_many_arguments)]
    fn focus(
        &self,
        mut st: State,
        e: Entry,
        dep: usize,
        goal: &Formula,
        scope: usize,
        depth: usize,
        k: Cont,
    ) -> Result<(), Stop> {
        if !self.tick(depth)? {
            return Ok(());
        }
        match &e.formula {
            GlueFormula::Means { sem, term, ty } => {
                let GlueFormula::Means { sem: gsem, term: gterm, ty: gty } = goal else { unreachable!() };
                if ty != gty {
                    return Ok(());
                }
                let before = st.subst.clone();
                if unify_sems(sem, gsem, &mut st.subst, &st.vars).is_err() {
                    return Ok(());
                }
                let l = normalize(&st.subst.apply(term));
                let r = normalize(&st.subst.apply(gterm));
                if unify_terms(&l, &r, &mut st.subst, &mut st.vars).is_err() {
                    return Ok(());
                }
                let mut node = Derivation::leaf(Rule::Identity, goal);
                node.principal = Some(e.formula.clone());
                node.consumes.push(e.id);
                for (v, t) in st.subst.terms() {
                    if before.term(v).is_none() {
                        node.bindings.push((v.clone(), Binding::Term(t.clone())));
                    }
                }
                for (v, s) in st.subst.sems() {
                    if before.sem(v).is_none() {
                        node.bindings.push((v.clone(), Binding::Sem(s.clone())));
                    }
                }
                k(st, node)
            }
            GlueFormula::Forall { var, sort, body } => {
                let (_, b) = st.fresh(var, VarKind::Flex, sort);
                let inst = body.instantiate(var, &b);
                let id = st.scopes.len();
                st.scopes.push(dep);
                let next = Entry { id, formula: inst.clone() };
                self.focus(st, next, dep, goal, scope, depth, &mut |st, d| {
                    let mut node = Derivation::leaf(Rule::PiL, goal);
                    node.principal = Some(e.formula.clone());
                    node.consumes.push(e.id);
                    node.introduces.push((id, inst.clone()));
                    node.bindings.push((var.clone(), b.clone()));
                    node.premises.push(d);
                    k(st, node)
                })
            }
            GlueFormula::Limp(a, b) => self.goal(st, a, scope, depth + 1, &mut |mut st, da| {
                let used = da.external_consumption().into_iter().map(|i| st.scope_of(i)).max().unwrap_or(0);
                let level = dep.max(used).max(st.eigen_depth(b));
                let id = st.scopes.len();
                st.scopes.push(level);
                let head = Entry { id, formula: (**b).clone() };
                self.focus(st, head, level, goal, scope, depth + 1, &mut |st, db| {
                    let mut node = Derivation::leaf(Rule::LimpL, goal);
                    node.principal = Some(e.formula.clone());
                    node.consumes.push(e.id);
                    node.introduces.push((id, (**b).clone()));
                    node.premises = vec![da.clone(), db];
                    k(st, node)
                })
            }),
            GlueFormula::Tensor(..) => {
                st.scopes[e.id] = dep;
                st.ctx.push(e);
                self.atom(st, goal, scope, depth, k)
            }
        }
    }
}
