//! Generators and independent oracles shared by the property suites and
//! the acceptance run.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::sync::Arc;

use glue_core::glue::{parse_formula, Formula};
use glue_core::lexicon::{premises, Lexicon};
use glue_core::prover::{check_linearity, enumerate_readings, prove, SearchBudget, Sequent};
use glue_core::structures::{FStructure, SemStructure, SemTerm, Slot};
use glue_core::term::{normalize, typecheck, MeaningType, Name, Term, TypingContext};
use glue_core::unify::{unify_terms, Sort, Substitution, VarClass, VarKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Corpus documents and whether they are read with the extensional lexicon.
pub const CORPUS: &[(&str, bool)] = &[
    ("bah", false),
    ("convince-every-voter", true),
    ("every-candidate-a-manager", true),
    ("admirer-of-his", false),
    ("seeks-al", false),
    ("seeks-a-unicorn", false),
    ("conversation-every-unicorn", false),
    ("john-devoured", false),
    ("john-arrived-bill-the-sink", false),
];

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn lexicon(extensional: bool) -> Lexicon {
    if extensional {
        Lexicon::extensional()
    } else {
        Lexicon::standard()
    }
}

pub fn corpus_premises(name: &str, extensional: bool) -> (Vec<Formula>, SemStructure) {
    let text = std::fs::read_to_string(corpus_dir().join(format!("{name}.fstr"))).unwrap();
    let fs = FStructure::parse(&text).unwrap();
    let ps = premises(&fs, &lexicon(extensional)).unwrap().into_iter().map(|p| p.formula).collect();
    (ps, fs.sigma(fs.root(), Slot::Root))
}

pub fn readings_of(ps: &[Formula], goal: &SemStructure) -> Vec<Term> {
    enumerate_readings(ps, goal, &MeaningType::t(), SearchBudget::default())
        .unwrap()
        .readings
        .into_iter()
        .map(|r| r.term)
        .collect()
}

// ---------------------------------------------------------------------------
// random well-typed terms

fn e() -> MeaningType {
    MeaningType::e()
}
fn t() -> MeaningType {
    MeaningType::t()
}
fn s() -> MeaningType {
    MeaningType::s()
}
fn arr(a: MeaningType, b: MeaningType) -> MeaningType {
    MeaningType::arrow(a, b)
}

/// Constants used by the random term generator.
pub fn signature() -> TypingContext {
    let mut c = TypingContext::empty();
    c.declare_const("a", e());
    c.declare_const("b", e());
    c.declare_const("f", arr(e(), e()));
    c.declare_const("g", arr(e(), arr(e(), e())));
    c.declare_const("p", arr(e(), t()));
    c.declare_const("q", arr(e(), arr(e(), t())));
    c.declare_const("r", arr(arr(e(), t()), t()));
    c.declare_const("k", arr(arr(s(), arr(e(), t())), t()));
    c
}

fn result_after(ty: &MeaningType, want: &MeaningType) -> Option<Vec<MeaningType>> {
    let mut args = Vec::new();
    let mut cur = ty.clone();
    loop {
        if cur == *want {
            return Some(args);
        }
        match cur {
            MeaningType::Arrow(a, b) => {
                args.push((*a).clone());
                cur = (*b).clone();
            }
            _ => return None,
        }
    }
}

pub struct TermGen<'a> {
    pub rng: &'a mut ChaCha8Rng,
    pub sig: TypingContext,
}

impl TermGen<'_> {
    fn leaf(&mut self, ty: &MeaningType, env: &[MeaningType]) -> Term {
        let vars: Vec<u32> = env
            .iter()
            .rev()
            .enumerate()
            .filter(|(_, v)| *v == ty)
            .map(|(i, _)| i as u32)
            .collect();
        if !vars.is_empty() && self.rng.gen_bool(0.5) {
            return Term::Bound(*vars.choose(self.rng).unwrap());
        }
        match ty {
            MeaningType::Arrow(a, b) if **a == s() => Term::cap(self.leaf(b, env)),
            MeaningType::Arrow(a, b) => {
                let mut inner = env.to_vec();
                inner.push((**a).clone());
                Term::lam((**a).clone(), self.leaf(b, &inner))
            }
            _ if *ty == t() => Term::app(Term::constant("p"), self.leaf(&e(), env)),
            _ => Term::constant(if self.rng.gen_bool(0.5) { "a" } else { "b" }),
        }
    }

    /// A random closed-under-`env` term of type `ty`.
    pub fn term(&mut self, ty: &MeaningType, env: &[MeaningType], depth: u32) -> Term {
        if depth == 0 {
            return self.leaf(ty, env);
        }
        let choice = self.rng.gen_range(0..10);
        match choice {
            // a head applied to arguments
            0..=3 => {
                let mut heads: Vec<(Term, Vec<MeaningType>)> = Vec::new();
                for (name, cty) in self.sig.constants() {
                    if let Some(args) = result_after(cty, ty).filter(|a| !a.contains(&s())) {
                        heads.push((Term::Const(name.clone()), args));
                    }
                }
                for (i, vty) in env.iter().rev().enumerate() {
                    if let Some(args) = result_after(vty, ty).filter(|a| !a.contains(&s())) {
                        heads.push((Term::Bound(i as u32), args));
                    }
                }
                if heads.is_empty() {
                    return self.leaf(ty, env);
                }
                let (head, args) = heads.choose(self.rng).unwrap().clone();
                args.iter().fold(head, |acc, a| Term::app(acc, self.term(a, env, depth - 1)))
            }
            // a β-redex
            4 | 5 => {
                let binder = [e(), arr(e(), t()), arr(s(), arr(e(), t()))].choose(self.rng).unwrap().clone();
                let mut inner = env.to_vec();
                inner.push(binder.clone());
                let body = self.term(ty, &inner, depth - 1);
                Term::app(Term::lam(binder.clone(), body), self.term(&binder, env, depth - 1))
            }
            // an extension of an intension
            6 => Term::cup(Term::cap(self.term(ty, env, depth - 1))),
            // an extension of a variable
            7 => {
                let want = arr(s(), ty.clone());
                let vars: Vec<u32> = env
                    .iter()
                    .rev()
                    .enumerate()
                    .filter(|(_, v)| **v == want)
                    .map(|(i, _)| i as u32)
                    .collect();
                match vars.choose(self.rng) {
                    Some(i) => Term::cup(Term::Bound(*i)),
                    None => self.term(ty, env, depth - 1),
                }
            }
            _ => match ty {
                MeaningType::Arrow(a, b) if **a == s() => Term::cap(self.term(b, env, depth - 1)),
                MeaningType::Arrow(a, b) => {
                    let mut inner = env.to_vec();
                    inner.push((**a).clone());
                    if self.rng.gen_bool(0.5) {
                        // η-expanded form of some head
                        let f = self.term(ty, env, depth - 1);
                        Term::lam((**a).clone(), Term::app(shift(&f, 1, 0), Term::Bound(0)))
                    } else {
                        Term::lam((**a).clone(), self.term(b, &inner, depth - 1))
                    }
                }
                _ => self.leaf(ty, env),
            },
        }
    }
}

pub fn random_type(rng: &mut ChaCha8Rng) -> MeaningType {
    [e(), t(), arr(e(), t()), arr(s(), arr(e(), t())), arr(arr(e(), t()), t())].choose(rng).unwrap().clone()
}

// ---------------------------------------------------------------------------
// an independent reducer

pub fn shift(t: &Term, d: i64, cutoff: u32) -> Term {
    match t {
        Term::Bound(i) if *i >= cutoff => Term::Bound((*i as i64 + d) as u32),
        Term::Const(_) | Term::Var(_) | Term::Bound(_) => t.clone(),
        Term::Lam(ty, b) => Term::lam(ty.clone(), shift(b, d, cutoff + 1)),
        Term::App(f, a) => Term::app(shift(f, d, cutoff), shift(a, d, cutoff)),
        Term::Cap(b) => Term::cap(shift(b, d, cutoff)),
        Term::Cup(b) => Term::cup(shift(b, d, cutoff)),
    }
}

fn subst(t: &Term, j: u32, v: &Term) -> Term {
    match t {
        Term::Bound(i) if *i == j => v.clone(),
        Term::Const(_) | Term::Var(_) | Term::Bound(_) => t.clone(),
        Term::Lam(ty, b) => Term::lam(ty.clone(), subst(b, j + 1, &shift(v, 1, 0))),
        Term::App(f, a) => Term::app(subst(f, j, v), subst(a, j, v)),
        Term::Cap(b) => Term::cap(subst(b, j, v)),
        Term::Cup(b) => Term::cup(subst(b, j, v)),
    }
}

fn occurs(t: &Term, j: u32) -> bool {
    match t {
        Term::Bound(i) => *i == j,
        Term::Const(_) | Term::Var(_) => false,
        Term::Lam(_, b) => occurs(b, j + 1),
        Term::App(f, a) => occurs(f, j) || occurs(a, j),
        Term::Cap(b) | Term::Cup(b) => occurs(b, j),
    }
}

/// The contractum of `t` if `t` itself is a redex.
fn contract(t: &Term) -> Option<Term> {
    match t {
        Term::App(f, a) => match &**f {
            Term::Lam(_, body) => Some(shift(&subst(body, 0, &shift(a, 1, 0)), -1, 0)),
            _ => None,
        },
        Term::Lam(_, body) => match &**body {
            Term::App(g, x) if **x == Term::Bound(0) && !occurs(g, 0) => Some(shift(g, -1, 0)),
            _ => None,
        },
        Term::Cup(b) => match &**b {
            Term::Cap(m) => Some((**m).clone()),
            _ => None,
        },
        _ => None,
    }
}

fn count_redexes(t: &Term) -> usize {
    let here = contract(t).is_some() as usize;
    here + match t {
        Term::Lam(_, b) | Term::Cap(b) | Term::Cup(b) => count_redexes(b),
        Term::App(f, a) => count_redexes(f) + count_redexes(a),
        _ => 0,
    }
}

/// Contracts the `n`th redex in prefix order.
fn contract_nth(t: &Term, n: &mut usize) -> Term {
    if let Some(c) = contract(t) {
        if *n == 0 {
            *n = usize::MAX;
            return c;
        }
        *n -= 1;
    }
    if *n == usize::MAX {
        return t.clone();
    }
    match t {
        Term::Lam(ty, b) => Term::lam(ty.clone(), contract_nth(b, n)),
        Term::Cap(b) => Term::cap(contract_nth(b, n)),
        Term::Cup(b) => Term::cup(contract_nth(b, n)),
        Term::App(f, a) => {
            let f2 = contract_nth(f, n);
            let a2 = if *n == usize::MAX { (**a).clone() } else { contract_nth(a, n) };
            Term::app(f2, a2)
        }
        _ => t.clone(),
    }
}

/// Reduces to normal form, contracting a randomly chosen redex each step.
pub fn reduce_randomly(t: &Term, rng: &mut ChaCha8Rng) -> Term {
    let mut cur = t.clone();
    loop {
        let k = count_redexes(&cur);
        if k == 0 {
            return cur;
        }
        let mut n = rng.gen_range(0..k);
        cur = contract_nth(&cur, &mut n);
    }
}

/// Replaces free variables by closed values, then reduces.
pub fn instantiate(t: &Term, values: &BTreeMap<Name, Term>, rng: &mut ChaCha8Rng) -> Term {
    fn go(t: &Term, values: &BTreeMap<Name, Term>) -> Term {
        match t {
            Term::Var(v) => values.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Const(_) | Term::Bound(_) => t.clone(),
            Term::Lam(ty, b) => Term::lam(ty.clone(), go(b, values)),
            Term::App(f, a) => Term::app(go(f, values), go(a, values)),
            Term::Cap(b) => Term::cap(go(b, values)),
            Term::Cup(b) => Term::cup(go(b, values)),
        }
    }
    reduce_randomly(&go(t, values), rng)
}

/// Confluence against the library normalizer, idempotence and type
/// preservation on `cases` random terms.
pub fn check_normalization(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = signature();
    for i in 0..cases {
        let ty = random_type(&mut rng);
        let depth = rng.gen_range(1..=4);
        let term = TermGen { rng: &mut rng, sig: sig.clone() }.term(&ty, &[], depth);
        let found = typecheck(&term, &sig).map_err(|e| format!("case {i}: generator produced ill-typed {term}: {e}"))?;
        if found != ty {
            return Err(format!("case {i}: generated {term} has type {found}, wanted {ty}"));
        }
        let n = normalize(&term);
        let a = reduce_randomly(&term, &mut rng);
        let b = reduce_randomly(&term, &mut rng);
        if a != n || b != n {
            return Err(format!("case {i}: {term} normalizes to {n}, random reduction gave {a} and {b}"));
        }
        if normalize(&n) != n {
            return Err(format!("case {i}: normalize not idempotent on {n}"));
        }
        match typecheck(&n, &sig) {
            Ok(t2) if t2 == ty => {}
            other => return Err(format!("case {i}: {n} lost its type {ty}: {other:?}")),
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// pattern unification

struct Problem {
    vars: VarClass,
    flexes: Vec<(Name, MeaningType)>,
    lhs: Term,
}

fn flex_app(name: &Name, args: &[Term]) -> Term {
    Term::apply(Term::Var(name.clone()), args.iter().cloned())
}

/// Random first-order-ish proposition with flex occurrences applied to
/// distinct bound variables or the young eigenvariable `d`.
fn pattern_term(rng: &mut ChaCha8Rng, flexes: &[(Name, MeaningType)], ty: &MeaningType, bound: u32, depth: u32) -> Term {
    let distinct_args = |rng: &mut ChaCha8Rng, n: usize| -> Option<Vec<Term>> {
        let mut pool: Vec<Term> = (0..bound).map(Term::Bound).collect();
        pool.push(Term::var("d"));
        if pool.len() < n {
            return None;
        }
        pool.shuffle(rng);
        Some(pool.into_iter().take(n).collect())
    };
    if *ty == t() {
        return match rng.gen_range(0..4) {
            0 => Term::app(Term::constant("p"), pattern_term(rng, flexes, &e(), bound, depth.saturating_sub(1))),
            1 => Term::apply(
                Term::constant("q"),
                [
                    pattern_term(rng, flexes, &e(), bound, depth.saturating_sub(1)),
                    pattern_term(rng, flexes, &e(), bound, depth.saturating_sub(1)),
                ],
            ),
            2 if depth > 0 => {
                Term::app(Term::constant("r"), Term::lam(e(), pattern_term(rng, flexes, &t(), bound + 1, depth - 1)))
            }
            _ => {
                let preds: Vec<_> = flexes.iter().filter(|(_, ty)| result_after(ty, &t()).is_some()).collect();
                let Some((name, fty)) = preds.choose(rng) else {
                    return Term::app(Term::constant("p"), Term::constant("a"));
                };
                let n = result_after(fty, &t()).unwrap().len();
                match distinct_args(rng, n) {
                    Some(args) => flex_app(name, &args),
                    None => Term::app(Term::constant("p"), Term::constant("b")),
                }
            }
        };
    }
    let leafs = |rng: &mut ChaCha8Rng| -> Term {
        let mut pool = vec![Term::constant("a"), Term::constant("b"), Term::var("c"), Term::var("d")];
        pool.extend((0..bound).map(Term::Bound));
        pool.choose(rng).unwrap().clone()
    };
    if depth == 0 {
        return leafs(rng);
    }
    match rng.gen_range(0..5) {
        0 => leafs(rng),
        1 => Term::app(Term::constant("f"), pattern_term(rng, flexes, ty, bound, depth - 1)),
        2 => Term::apply(
            Term::constant("g"),
            [pattern_term(rng, flexes, ty, bound, depth - 1), pattern_term(rng, flexes, ty, bound, depth - 1)],
        ),
        _ => {
            let ents: Vec<_> = flexes.iter().filter(|(_, fty)| result_after(fty, &e()).is_some()).collect();
            let (name, fty) = ents.choose(rng).unwrap();
            let n = result_after(fty, &e()).unwrap().len();
            match distinct_args(rng, n) {
                Some(args) => flex_app(name, &args),
                None => leafs(rng),
            }
        }
    }
}

/// A random closed value of type `ty`; it may mention the old eigen `c`.
fn random_value(rng: &mut ChaCha8Rng, ty: &MeaningType) -> Term {
    fn body(rng: &mut ChaCha8Rng, ty: &MeaningType, arity: u32, depth: u32) -> Term {
        if *ty == t() {
            return match rng.gen_range(0..3) {
                0 => Term::app(Term::constant("p"), body(rng, &e(), arity, depth)),
                _ => Term::apply(Term::constant("q"), [body(rng, &e(), arity, depth), body(rng, &e(), arity, depth)]),
            };
        }
        let mut pool = vec![Term::constant("a"), Term::constant("b"), Term::var("c")];
        pool.extend((0..arity).map(Term::Bound));
        if depth == 0 || rng.gen_bool(0.4) {
            return pool.choose(rng).unwrap().clone();
        }
        if rng.gen_bool(0.5) {
            Term::app(Term::constant("f"), body(rng, ty, arity, depth - 1))
        } else {
            Term::apply(Term::constant("g"), [body(rng, ty, arity, depth - 1), body(rng, ty, arity, depth - 1)])
        }
    }
    let (args, res) = ty.uncurry();
    let b = body(rng, &res, args.len() as u32, 2);
    args.iter().rev().fold(b, |acc, a| Term::lam(a.clone(), acc))
}

fn pattern_problem(rng: &mut ChaCha8Rng) -> Problem {
    let mut vars = VarClass::new();
    vars.declare("c", VarKind::Eigen, Sort::Term(e()));
    let mut flexes = Vec::new();
    for (name, ty) in [
        ("F", arr(e(), e())),
        ("G", arr(e(), arr(e(), e()))),
        ("K", e()),
        ("P", arr(e(), t())),
    ] {
        flexes.push((vars.declare(name, VarKind::Flex, Sort::Term(ty.clone())), ty));
    }
    vars.declare("d", VarKind::Eigen, Sort::Term(e()));
    let lhs = pattern_term(rng, &flexes, &t(), 0, 3);
    Problem { vars, flexes, lhs }
}

fn apply_solution(s: &Substitution, t: &Term, rng: &mut ChaCha8Rng) -> Term {
    let values: BTreeMap<Name, Term> = s.terms().map(|(k, v)| (k.clone(), v.clone())).collect();
    instantiate(t, &values, rng)
}

/// `theta` is an instance of `s` on every variable in `names`: matching
/// `s(F)` against `theta(F)` succeeds, the unknowns being the variables
/// `s` introduced or left open.
fn is_instance(s: &Substitution, theta: &BTreeMap<Name, Term>, names: &[Name], vars: &VarClass) -> bool {
    let mut vars = vars.clone();
    let mut m = Substitution::new();
    names.iter().all(|n| {
        let general = s.term(n).cloned().unwrap_or_else(|| Term::Var(n.clone()));
        let general = normalize(&m.apply(&general));
        unify_terms(&general, &normalize(&theta[n]), &mut m, &mut vars).is_ok()
    })
}

/// Soundness on `cases` random pattern problems that have a known
/// solution: unification succeeds, its result equates both sides, and the
/// known solution is an instance of it.
pub fn check_unifier_soundness(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..cases {
        let Problem { mut vars, flexes, lhs } = pattern_problem(&mut rng);
        let theta: BTreeMap<Name, Term> =
            flexes.iter().map(|(n, ty)| (n.clone(), random_value(&mut rng, ty))).collect();
        let rhs = instantiate(&lhs, &theta, &mut rng);
        let mut s = Substitution::new();
        if let Err(err) = unify_terms(&normalize(&lhs), &rhs, &mut s, &mut vars) {
            return Err(format!("case {i}: {lhs} = {rhs} has a solution but unify said {err}"));
        }
        let l = apply_solution(&s, &lhs, &mut rng);
        let r = apply_solution(&s, &rhs, &mut rng);
        if l != r {
            return Err(format!("case {i}: unifier of {lhs} = {rhs} gives {l} and {r}"));
        }
        let names: Vec<Name> = flexes.iter().map(|(n, _)| n.clone()).collect();
        let theta_used: BTreeMap<Name, Term> =
            theta.into_iter().filter(|(n, _)| lhs.mentions_var(n)).collect();
        let used: Vec<Name> = names.into_iter().filter(|n| lhs.mentions_var(n)).collect();
        if !is_instance(&s, &theta_used, &used, &vars) {
            return Err(format!("case {i}: known solution of {lhs} = {rhs} is not an instance of the result"));
        }
    }
    Ok(())
}

/// First-order bodies over `leaves` with at most `max` symbols.
fn bodies(leaves: &[Term], max: usize) -> Vec<Term> {
    let mut by_size: Vec<Vec<Term>> = vec![Vec::new(); max + 1];
    if max >= 1 {
        by_size[1] = leaves.to_vec();
    }
    for n in 2..=max {
        let mut out: Vec<Term> = by_size[n - 1].iter().map(|b| Term::app(Term::constant("f"), b.clone())).collect();
        for k in 1..n - 1 {
            for l in &by_size[k] {
                for r in &by_size[n - 1 - k] {
                    out.push(Term::apply(Term::constant("g"), [l.clone(), r.clone()]));
                }
            }
        }
        by_size[n] = out;
    }
    by_size.concat()
}

/// Every candidate value for a variable of arity `n` up to size `max`
/// (λ-binders included in the size).
fn candidates(n: u32, max: usize) -> Vec<Term> {
    let mut leaves = vec![Term::constant("a"), Term::var("c")];
    leaves.extend((0..n).map(Term::Bound));
    bodies(&leaves, max.saturating_sub(n as usize))
        .into_iter()
        .map(|b| (0..n).fold(b, |acc, _| Term::lam(e(), acc)))
        .collect()
}

/// Generality against brute force: on small first-order-headed problems,
/// every solution found by enumerating candidate values up to size 5 is an
/// instance of the computed unifier, and no unifier means no solution.
pub fn check_unifier_generality(cases: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut solved = 0;
    for i in 0..cases {
        let mut vars = VarClass::new();
        vars.declare("c", VarKind::Eigen, Sort::Term(e()));
        let fa = rng.gen_range(0..=2u32);
        let fty = (0..fa).fold(e(), |acc, _| arr(e(), acc));
        let f = vars.declare("F", VarKind::Flex, Sort::Term(fty));
        let with_g = rng.gen_bool(0.35);
        let ga = rng.gen_range(0..=1u32);
        let g = vars.declare("G", VarKind::Flex, Sort::Term((0..ga).fold(e(), |acc, _| arr(e(), acc))));
        vars.declare("d1", VarKind::Eigen, Sort::Term(e()));
        vars.declare("d2", VarKind::Eigen, Sort::Term(e()));
        let mut ds = vec![Term::var("d1"), Term::var("d2")];
        ds.shuffle(&mut rng);
        let lhs = flex_app(&f, &ds[..fa as usize]);
        let mut leaves = vec![Term::constant("a"), Term::var("c"), Term::var("d1"), Term::var("d2")];
        if with_g {
            let mut gs = vec![Term::var("d1"), Term::var("d2")];
            gs.shuffle(&mut rng);
            leaves.push(flex_app(&g, &gs[..ga as usize]));
        }
        let pool = bodies(&leaves, 3);
        let rhs = pool.choose(&mut rng).unwrap().clone();
        let with_g = rhs.mentions_var(&g);

        let mut names = vec![f.clone()];
        if with_g {
            names.push(g.clone());
        }
        let cand_f = candidates(fa, 5);
        let cand_g = if with_g { candidates(ga, 4) } else { vec![Term::constant("a")] };
        let mut brute = Vec::new();
        for vf in &cand_f {
            for vg in &cand_g {
                let mut theta = BTreeMap::new();
                theta.insert(f.clone(), vf.clone());
                if with_g {
                    theta.insert(g.clone(), vg.clone());
                }
                if instantiate(&lhs, &theta, &mut rng) == instantiate(&rhs, &theta, &mut rng) {
                    brute.push(theta);
                }
            }
        }

        let mut s = Substitution::new();
        match unify_terms(&lhs, &rhs, &mut s, &mut vars) {
            Ok(()) => {
                solved += 1;
                for theta in &brute {
                    if !is_instance(&s, theta, &names, &vars) {
                        return Err(format!("case {i}: {lhs} = {rhs}: brute-force solution {theta:?} not covered"));
                    }
                }
                let ground =
                    names.iter().all(|n| s.term(n).is_some_and(|v| v.free_vars().iter().all(|x| vars.is_eigen(x))));
                if ground && brute.is_empty() {
                    return Err(format!("case {i}: {lhs} = {rhs}: unifier found but brute force found nothing"));
                }
            }
            Err(err) => {
                if !brute.is_empty() {
                    return Err(format!("case {i}: {lhs} = {rhs}: unify said {err} but brute force found {:?}", brute[0]));
                }
            }
        }
    }
    Ok(solved)
}

// ---------------------------------------------------------------------------
// exchange and linearity on the corpus

pub fn check_exchange(name: &str, extensional: bool, perms: usize, seed: u64) -> Result<(), String> {
    let (ps, goal) = corpus_premises(name, extensional);
    let base: BTreeSet<Term> = readings_of(&ps, &goal).into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..perms {
        let mut shuffled = ps.clone();
        shuffled.shuffle(&mut rng);
        let got: BTreeSet<Term> = readings_of(&shuffled, &goal).into_iter().collect();
        if got != base {
            return Err(format!("{name}: permutation {k} changed the reading set"));
        }
    }
    Ok(())
}

/// Runs the search over a corpus document, checking linearity on every
/// derivation. Returns how many derivations were checked.
pub fn check_corpus_linearity(name: &str, extensional: bool) -> Result<usize, String> {
    let (ps, goal) = corpus_premises(name, extensional);
    let mut vars = VarClass::new();
    let m = vars.fresh("M", VarKind::Flex, Sort::Term(t()));
    let sequent = Sequent { context: ps.clone(), goal: Formula::means(SemTerm::Struct(goal), Term::Var(m), t()) };
    let mut n = 0;
    let mut bad = None;
    prove(&sequent, vars, SearchBudget::default(), |d, _| {
        n += 1;
        match check_linearity(&d, &ps) {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                bad = Some(e.to_string());
                ControlFlow::Break(())
            }
        }
    })
    .map_err(|e| format!("{name}: budget exhausted after {} steps", e.steps))?;
    match bad {
        Some(e) => Err(format!("{name}: {e}")),
        None => Ok(n),
    }
}

// ---------------------------------------------------------------------------
// propositional oracle

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prop {
    Atom(char),
    Tensor(Arc<Prop>, Arc<Prop>),
    Limp(Arc<Prop>, Arc<Prop>),
}

impl Prop {
    pub fn render(&self) -> String {
        match self {
            Prop::Atom(c) => c.to_string(),
            Prop::Tensor(a, b) => format!("({} * {})", a.render(), b.render()),
            Prop::Limp(a, b) => format!("({} -o {})", a.render(), b.render()),
        }
    }
}

fn all_props(depth: u32, atoms: &[char]) -> Vec<Prop> {
    let mut out: Vec<Prop> = atoms.iter().map(|c| Prop::Atom(*c)).collect();
    if depth > 0 {
        let smaller = all_props(depth - 1, atoms);
        let atomic: Vec<Prop> = atoms.iter().map(|c| Prop::Atom(*c)).collect();
        for a in &smaller {
            for b in &atomic {
                out.push(Prop::Tensor(Arc::new(a.clone()), Arc::new(b.clone())));
                out.push(Prop::Limp(Arc::new(a.clone()), Arc::new(b.clone())));
                if a != b {
                    out.push(Prop::Limp(Arc::new(b.clone()), Arc::new(a.clone())));
                }
            }
        }
        out.sort();
        out.dedup();
    }
    out
}

fn random_prop(rng: &mut ChaCha8Rng, depth: u32) -> Prop {
    if depth == 0 || rng.gen_bool(0.35) {
        return Prop::Atom(*['A', 'B', 'C'].choose(rng).unwrap());
    }
    let a = Arc::new(random_prop(rng, depth - 1));
    let b = Arc::new(random_prop(rng, depth - 1));
    if rng.gen_bool(0.5) {
        Prop::Tensor(a, b)
    } else {
        Prop::Limp(a, b)
    }
}

fn mutate_atom(p: &Prop, rng: &mut ChaCha8Rng) -> Prop {
    match p {
        Prop::Atom(c) => {
            let others: Vec<char> = ['A', 'B', 'C'].into_iter().filter(|x| x != c).collect();
            Prop::Atom(*others.choose(rng).unwrap())
        }
        Prop::Tensor(a, b) | Prop::Limp(a, b) => {
            let (a, b) = if rng.gen_bool(0.5) {
                (Arc::new(mutate_atom(a, rng)), b.clone())
            } else {
                (a.clone(), Arc::new(mutate_atom(b, rng)))
            };
            match p {
                Prop::Tensor(..) => Prop::Tensor(a, b),
                _ => Prop::Limp(a, b),
            }
        }
    }
}

/// Every way to pick a sub-multiset of `ctx`.
fn splits(ctx: &[Prop]) -> Vec<(Vec<Prop>, Vec<Prop>)> {
    let n = ctx.len();
    let mut out = Vec::new();
    for mask in 0..(1u32 << n) {
        let (mut l, mut r) = (Vec::new(), Vec::new());
        for (i, p) in ctx.iter().enumerate() {
            if mask & (1 << i) != 0 {
                l.push(p.clone());
            } else {
                r.push(p.clone());
            }
        }
        out.push((l, r));
    }
    out
}

/// Plain sequent calculus for the multiplicative fragment: every
/// non-invertible rule is tried on every formula with every context split.
pub struct Oracle {
    memo: HashMap<(Vec<Prop>, Prop), bool>,
}

impl Oracle {
    pub fn new() -> Self {
        Oracle { memo: HashMap::new() }
    }

    pub fn provable(&mut self, ctx: &[Prop], goal: &Prop) -> bool {
        let mut key = ctx.to_vec();
        key.sort();
        let key = (key, goal.clone());
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let v = self.search(&key.0, goal);
        self.memo.insert(key, v);
        v
    }

    fn search(&mut self, ctx: &[Prop], goal: &Prop) -> bool {
        // ⊸R and ⊗L are invertible, so when one applies it is the only rule tried
        if let Prop::Limp(a, b) = goal {
            let mut c = ctx.to_vec();
            c.push((**a).clone());
            return self.provable(&c, b);
        }
        if let Some(i) = ctx.iter().position(|p| matches!(p, Prop::Tensor(..))) {
            let mut rest = ctx.to_vec();
            let Prop::Tensor(a, b) = rest.remove(i) else { unreachable!() };
            rest.push((*a).clone());
            rest.push((*b).clone());
            return self.provable(&rest, goal);
        }
        if let [only] = ctx {
            if only == goal {
                return true;
            }
        }
        if let Prop::Tensor(a, b) = goal {
            for (l, r) in splits(ctx) {
                if self.provable(&l, a) && self.provable(&r, b) {
                    return true;
                }
            }
        }
        for i in 0..ctx.len() {
            let mut rest = ctx.to_vec();
            if let Prop::Limp(a, b) = rest.remove(i) {
                for (l, mut r) in splits(&rest) {
                    r.push((*b).clone());
                    if self.provable(&l, &a) && self.provable(&r, goal) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

fn library_provable(ctx: &[Prop], goal: &Prop, consts: &TypingContext) -> bool {
    let parse = |p: &Prop| parse_formula(&p.render(), consts).unwrap();
    let sequent = Sequent { context: ctx.iter().map(parse).collect(), goal: parse(goal) };
    let mut found = false;
    prove(&sequent, VarClass::new(), SearchBudget::default(), |_, _| {
        found = true;
        ControlFlow::Break(())
    })
    .expect("propositional search fits the budget");
    found
}

/// Provability (the reading count of a propositional goal is 0 or 1)
/// agrees with the oracle on every context of up to three small formulas
/// and on random contexts of up to four formulas. Returns the number of
/// cases checked and how many of them were provable.
pub fn check_propositional(random_cases: usize, seed: u64) -> Result<(usize, usize), String> {
    let mut consts = TypingContext::empty();
    for c in ["A", "B", "C"] {
        consts.declare_const(c, t());
    }
    let mut oracle = Oracle::new();
    let mut checked = 0;
    let mut provable = 0;
    let compare = |ctx: &[Prop], goal: &Prop, oracle: &mut Oracle| -> Result<bool, String> {
        let want = oracle.provable(ctx, goal);
        let got = library_provable(ctx, goal, &consts);
        if want != got {
            let shown: Vec<String> = ctx.iter().map(Prop::render).collect();
            return Err(format!("{} ⊢ {}: oracle says {want}, prover says {got}", shown.join(", "), goal.render()));
        }
        Ok(want)
    };
    let pool = all_props(1, &['A', 'B']);
    let goals = pool.clone();
    for a in 0..pool.len() {
        for b in a..pool.len() {
            for c in b..pool.len() {
                for size in 1..=3 {
                    let ctx: Vec<Prop> = [a, b, c][..size].iter().map(|i| pool[*i].clone()).collect();
                    if size < 3 && (size == 1 && (b != a || c != a) || size == 2 && c != b) {
                        continue;
                    }
                    for g in &goals {
                        provable += compare(&ctx, g, &mut oracle)? as usize;
                        checked += 1;
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random_cases {
        let n = rng.gen_range(1..=4);
        let ctx: Vec<Prop> = (0..n).map(|_| random_prop(&mut rng, 2)).collect();
        let goal = match rng.gen_range(0..3) {
            0 => random_prop(&mut rng, 2),
            // the whole context tensored in some order, sometimes with one atom changed
            k => {
                let mut parts = ctx.clone();
                parts.shuffle(&mut rng);
                let whole = parts.into_iter().reduce(|a, b| Prop::Tensor(Arc::new(a), Arc::new(b))).unwrap();
                if k == 1 {
                    whole
                } else {
                    mutate_atom(&whole, &mut rng)
                }
            }
        };
        provable += compare(&ctx, &goal, &mut oracle)? as usize;
        checked += 1;
    }
    Ok((checked, provable))
}
