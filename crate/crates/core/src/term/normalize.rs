use super::Term;

/// Normal form under β-reduction, η-contraction and `!^M -> M`.
///
/// The input must be well typed; simply-typed terms are strongly
/// normalizing so this always terminates.
pub fn normalize(term: &Term) -> Term {
    match term {
        Term::Const(_) | Term::Var(_) | Term::Bound(_) => term.clone(),
        Term::App(f, a) => {
            let f = normalize(f);
            let a = normalize(a);
            beta(f, a)
        }
        Term::Lam(ty, body) => eta(Term::lam(ty.clone(), normalize(body))),
        Term::Cap(b) => Term::cap(normalize(b)),
        Term::Cup(b) => match normalize(b) {
            Term::Cap(inner) => (*inner).clone(),
            b => Term::cup(b),
        },
    }
}

/// Application of two normal terms, reduced to normal form.
fn beta(f: Term, a: Term) -> Term {
    match f {
        Term::Lam(_, body) => normalize(&Term::open(&body, &a)),
        f => Term::app(f, a),
    }
}

/// Contracts `\x. g(x)` to `g` when `x` is not free in `g`. The body is
/// already normal.
fn eta(lam: Term) -> Term {
    if let Term::Lam(_, body) = &lam {
        if let Term::App(g, arg) = &**body {
            if **arg == Term::Bound(0) && !g.has_loose_bound(0) {
                return g.shift(-1, 0);
            }
        }
    }
    lam
}

/// α-equivalence. With de Bruijn binding this is structural equality.
pub fn alpha_equal(a: &Term, b: &Term) -> bool {
    a == b
}
