use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::glue::{Binding, Formula, GlueFormula};
use crate::term::{Name, Term};
use crate::unify::{Substitutable, Substitution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Identity,
    TensorL,
    TensorR,
    LimpL,
    LimpR,
    PiL,
    PiR,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Identity => "Id",
            Rule::TensorL => "⊗L",
            Rule::TensorR => "⊗R",
            Rule::LimpL => "⊸L",
            Rule::LimpR => "⊸R",
            Rule::PiL => "ΠL",
            Rule::PiR => "ΠR",
        })
    }
}

/// A cut-free proof. Context entries are numbered; premises take
/// `0..n` and every other entry is introduced by some node.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub rule: Rule,
    /// The succedent proved by this node.
    pub goal: Formula,
    /// The context formula a left rule acts on.
    pub principal: Option<Formula>,
    pub consumes: Vec<usize>,
    pub introduces: Vec<(usize, Formula)>,
    /// Variable bindings made here, keyed by their source name.
    pub bindings: Vec<(Name, Binding)>,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub(crate) fn leaf(rule: Rule, goal: &Formula) -> Self {
        Derivation {
            rule,
            goal: goal.clone(),
            principal: None,
            consumes: Vec::new(),
            introduces: Vec::new(),
            bindings: Vec::new(),
            premises: Vec::new(),
        }
    }

    /// Every formula and binding with `s` applied.
    pub fn resolve(&self, s: &Substitution) -> Derivation {
        let binding = |b: &Binding| match b {
            Binding::Term(t) => Binding::Term(s.apply(t)),
            Binding::Sem(x) => Binding::Sem(s.apply_sem(x)),
        };
        Derivation {
            rule: self.rule,
            goal: self.goal.apply_subst(s),
            principal: self.principal.as_ref().map(|p| p.apply_subst(s)),
            consumes: self.consumes.clone(),
            introduces: self.introduces.iter().map(|(i, f)| (*i, f.apply_subst(s))).collect(),
            bindings: self.bindings.iter().map(|(n, b)| (n.clone(), binding(b))).collect(),
            premises: self.premises.iter().map(|p| p.resolve(s)).collect(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    pub(crate) fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Derivation)) {
        f(self);
        for p in &self.premises {
            p.walk(f);
        }
    }

    /// Ids consumed in this subtree that were not introduced in it.
    pub(crate) fn external_consumption(&self) -> Vec<usize> {
        let mut introduced = BTreeSet::new();
        let mut consumed = Vec::new();
        self.walk(&mut |d| {
            introduced.extend(d.introduces.iter().map(|(i, _)| *i));
            consumed.extend(d.consumes.iter().copied());
        });
        consumed.retain(|i| !introduced.contains(i));
        consumed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("linearity violated: {0}")]
pub struct LinearityError(pub String);

/// Checks that every premise and every introduced entry is consumed
/// exactly once, and that atoms are consumed only by identity leaves.
pub fn check_linearity(d: &Derivation, premises: &[Formula]) -> Result<(), LinearityError> {
    let mut available: BTreeMap<usize, &Formula> = premises.iter().enumerate().collect();
    let mut uses: BTreeMap<usize, usize> = BTreeMap::new();
    let mut identity_uses = 0;
    let mut problem = None;
    d.walk(&mut |n| {
        for (i, f) in &n.introduces {
            if available.insert(*i, f).is_some() && problem.is_none() {
                problem = Some(format!("entry {i} introduced twice"));
            }
        }
        for i in &n.consumes {
            *uses.entry(*i).or_default() += 1;
        }
        if n.rule == Rule::Identity {
            identity_uses += 1;
            if n.consumes.len() != 1 && problem.is_none() {
                problem = Some("identity leaf must consume one entry".into());
            }
        }
    });
    if let Some(p) = problem {
        return Err(LinearityError(p));
    }
    for (i, f) in &available {
        match uses.get(i).copied().unwrap_or(0) {
            1 => {}
            0 => return Err(LinearityError(format!("entry {i} `{f}` never consumed"))),
            k => return Err(LinearityError(format!("entry {i} `{f}` consumed {k} times"))),
        }
    }
    if let Some(i) = uses.keys().find(|i| !available.contains_key(i)) {
        return Err(LinearityError(format!("entry {i} consumed but never available")));
    }
    let atoms = available.values().filter(|f| matches!(f, GlueFormula::Means { .. })).count();
    if atoms != identity_uses {
        return Err(LinearityError(format!("{atoms} atomic entries but {identity_uses} identity leaves")));
    }
    Ok(())
}

fn tidy(s: String) -> String {
    s.replace('#', "")
}

fn show_binding(b: &Binding) -> String {
    match b {
        Binding::Term(t) => tidy(t.to_string()),
        Binding::Sem(s) => tidy(s.to_string()),
    }
}

/// One line per rule, children indented beneath their conclusion.
pub fn render_trace(d: &Derivation) -> String {
    let mut out = String::new();
    render(d, 0, &mut out);
    out
}

fn render(d: &Derivation, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    let subject = match (&d.rule, &d.principal) {
        (Rule::LimpR, _) => {
            let hyp = d.introduces.first().map(|(_, f)| format!("  assume {f}")).unwrap_or_default();
            format!("{}{hyp}", d.goal)
        }
        (_, Some(p)) => p.to_string(),
        (_, None) => d.goal.to_string(),
    };
    let _ = write!(out, "{pad}{}: {}", d.rule, tidy(subject));
    if !d.bindings.is_empty() {
        let shown: Vec<String> = d
            .bindings
            .iter()
            .map(|(n, b)| format!("{} ↦ {}", n.split('#').next().unwrap_or(n), show_binding(b)))
            .collect();
        let _ = write!(out, "  [{}]", shown.join(", "));
    }
    out.push('\n');
    for p in &d.premises {
        render(p, indent + 1, out);
    }
}

pub(crate) fn var_binding(name: &Name, sort_is_sem: bool) -> Binding {
    if sort_is_sem {
        Binding::Sem(crate::structures::SemTerm::Var(name.clone()))
    } else {
        Binding::Term(Term::Var(name.clone()))
    }
}
