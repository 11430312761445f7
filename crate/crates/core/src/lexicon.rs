//! Lexical entries, their instantiation against f-structures, and premise
//! collection.
//!
//! ```text
//! (const appoint (e -> e -> t))
//! (entry "appointed" V (trigger PRED "appoint")
//!   (constructor
//!     (forall ((X e) (Y e))
//!       (limp (tensor (means (sig (path up SUBJ)) X e)
//!                     (means (sig (path up OBJ)) Y e))
//!             (means (sig up) (appoint X Y) t)))))
//! ```

use std::fmt;

use thiserror::Error;

use crate::glue::{Formula, GlueFormula};
use crate::sexp::{parse_all, Sexp, SexpError, SexpKind};
use crate::structures::{FStructure, NodeId, Path, SemStructure, SemTerm, Slot, StructureError, Value};
use crate::term::{parse_type, MeaningType, Name, RawTerm, TypeError, TypingContext};
use crate::unify::Sort;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("ill-typed constructor for `{entry}`: {detail}")]
    IllTypedConstructor { entry: String, detail: TypeError },
    #[error("no lexical entry for {attr} \"{value}\"")]
    NoEntry { attr: String, value: String },
    #[error("more than one lexical entry for {attr} \"{value}\"")]
    AmbiguousEntry { attr: String, value: String },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

impl From<SexpError> for LexiconError {
    fn from(e: SexpError) -> Self {
        LexiconError::Syntax { line: e.line, message: e.message }
    }
}

fn syntax(x: &Sexp, message: impl Into<String>) -> LexiconError {
    LexiconError::Syntax { line: x.line, message: message.into() }
}

/// Part of a σ-projection named by a template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemSlot {
    Root,
    Var,
    Restr,
    Ant,
}

/// A σ-position in a template: a projection of an f-structure path, or a
/// bound σ-variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemExpr {
    Sigma { path: Path, slot: SemSlot },
    Bound(Name),
}

impl fmt::Display for SemExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemExpr::Bound(v) => write!(f, "{v}"),
            SemExpr::Sigma { path, slot } => {
                let base = if path.attrs.is_empty() && path.start.is_none() {
                    "up".to_string()
                } else {
                    path.to_string()
                };
                match slot {
                    SemSlot::Root => write!(f, "{base}σ"),
                    SemSlot::Var => write!(f, "({base}σ VAR)"),
                    SemSlot::Restr => write!(f, "({base}σ RESTR)"),
                    SemSlot::Ant => write!(f, "({base}σ ANT)"),
                }
            }
        }
    }
}

pub type Template = GlueFormula<SemExpr>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexEntry {
    pub headword: String,
    pub category: String,
    /// attribute whose value selects the entry, e.g. PRED or SPEC
    pub trigger_attr: String,
    pub trigger_value: String,
    /// further `(path, value)` equations the node must satisfy
    pub constraints: Vec<(Path, String)>,
    pub template: Template,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    pub constants: TypingContext,
    pub entries: Vec<LexEntry>,
}

const STANDARD: &str = include_str!("../../../corpus/lexicon.lex");
const EXTENSIONAL: &str = include_str!("../../../corpus/lexicon-ext.lex");

impl Lexicon {
    /// The bundled intensional lexicon.
    pub fn standard() -> Lexicon {
        parse_lexicon(STANDARD).expect("bundled lexicon parses")
    }

    /// The bundled lexicon with extensional determiners.
    pub fn extensional() -> Lexicon {
        parse_lexicon(EXTENSIONAL).expect("bundled lexicon parses")
    }

    pub fn entry(&self, headword: &str) -> Option<&LexEntry> {
        self.entries.iter().find(|e| e.headword == headword)
    }
}

pub fn parse_lexicon(text: &str) -> Result<Lexicon, LexiconError> {
    let mut lex = Lexicon { constants: TypingContext::empty(), entries: Vec::new() };
    for form in parse_all(text)? {
        let items = form.list().unwrap_or_default();
        match form.head() {
            Some("const") => {
                let [_, name, ty] = items else {
                    return Err(syntax(&form, "expected (const name type)"));
                };
                let name = name.atom().ok_or_else(|| syntax(name, "expected a constant name"))?;
                lex.constants.declare_const(name, sexp_type(ty)?);
            }
            Some("entry") => {
                let entry = parse_entry(&form, &lex.constants)?;
                lex.entries.push(entry);
            }
            _ => return Err(syntax(&form, format!("unexpected form {form}"))),
        }
    }
    Ok(lex)
}

fn parse_entry(form: &Sexp, ctx: &TypingContext) -> Result<LexEntry, LexiconError> {
    let items = form.list().unwrap_or_default();
    let (Some(headword), Some(category)) =
        (items.get(1).and_then(Sexp::string), items.get(2).and_then(Sexp::atom))
    else {
        return Err(syntax(form, "expected (entry \"word\" CATEGORY ...)"));
    };
    let mut trigger = None;
    let mut constraints = Vec::new();
    let mut template = None;
    for clause in &items[3..] {
        let parts = clause.list().unwrap_or_default();
        match clause.head() {
            Some("trigger") => {
                let attr = parts.get(1).and_then(Sexp::atom).ok_or_else(|| syntax(clause, "expected (trigger ATTR [\"value\"])"))?;
                let value = match parts.get(2) {
                    Some(v) => v.string().ok_or_else(|| syntax(v, "expected a quoted value"))?.to_string(),
                    None => headword.to_string(),
                };
                trigger = Some((attr.to_ascii_uppercase(), value));
            }
            Some("eq") => {
                let [_, p, v] = parts else { return Err(syntax(clause, "expected (eq PATH \"value\")")) };
                let value = v.string().ok_or_else(|| syntax(v, "expected a quoted value"))?;
                constraints.push((sexp_path(p)?, value.to_string()));
            }
            Some("constructor") => {
                let [_, body] = parts else { return Err(syntax(clause, "expected (constructor FORMULA)")) };
                let mut scope = Scope { ctx: ctx.clone(), sem_vars: Vec::new() };
                let t = scope.formula(body).map_err(|e| match e {
                    TemplateError::Lex(e) => e,
                    TemplateError::Type(detail) => {
                        LexiconError::IllTypedConstructor { entry: headword.to_string(), detail }
                    }
                })?;
                template = Some(t);
            }
            _ => return Err(syntax(clause, format!("unexpected clause {clause}"))),
        }
    }
    let (trigger_attr, trigger_value) = trigger.ok_or_else(|| syntax(form, "entry has no trigger"))?;
    let template = template.ok_or_else(|| syntax(form, "entry has no constructor"))?;
    Ok(LexEntry {
        headword: headword.to_string(),
        category: category.to_string(),
        trigger_attr,
        trigger_value,
        constraints,
        template,
    })
}

/// Reads `e`, `(e -> t)`, `((s -> e -> t) -> t)`.
pub fn sexp_type(x: &Sexp) -> Result<MeaningType, LexiconError> {
    match &x.kind {
        SexpKind::Atom(a) => parse_type(a).map_err(|e| syntax(x, e.message)),
        SexpKind::List(items) => {
            let parts: Vec<&[Sexp]> = items.split(|i| i.atom() == Some("->")).collect();
            let mut tys = Vec::new();
            for p in parts {
                let [one] = p else { return Err(syntax(x, "malformed type")) };
                tys.push(sexp_type(one)?);
            }
            let last = tys.pop().ok_or_else(|| syntax(x, "empty type"))?;
            Ok(MeaningType::curried(tys, last))
        }
        SexpKind::Str(s) => parse_type(s).map_err(|e| syntax(x, e.message)),
    }
}

/// `up` or `(path up SUBJ OBJ)`.
fn sexp_path(x: &Sexp) -> Result<Path, LexiconError> {
    if x.atom() == Some("up") {
        return Ok(Path { start: None, attrs: Vec::new() });
    }
    let items = x.list().unwrap_or_default();
    if x.head() != Some("path") || items.len() < 2 {
        return Err(syntax(x, "expected up or (path up ATTR...)"));
    }
    let start = match items[1].atom() {
        Some("up") => None,
        Some(label) => Some(label.into()),
        None => return Err(syntax(&items[1], "expected up or a label")),
    };
    let mut attrs = Vec::new();
    for a in &items[2..] {
        attrs.push(a.atom().ok_or_else(|| syntax(a, "expected an attribute name"))?.to_ascii_uppercase());
    }
    Ok(Path { start, attrs })
}

enum TemplateError {
    Lex(LexiconError),
    Type(TypeError),
}

impl From<LexiconError> for TemplateError {
    fn from(e: LexiconError) -> Self {
        TemplateError::Lex(e)
    }
}

struct Scope {
    ctx: TypingContext,
    sem_vars: Vec<String>,
}

impl Scope {
    fn formula(&mut self, x: &Sexp) -> Result<Template, TemplateError> {
        let items = x.list().unwrap_or_default();
        match (x.head(), items) {
            (Some("forall"), [_, binders, body]) => {
                let mut bs = Vec::new();
                for b in binders.list().ok_or_else(|| syntax(binders, "expected a binder list"))? {
                    let [v, sort] = b.list().unwrap_or_default() else {
                        return Err(syntax(b, "expected (VAR type) or (VAR sem)").into());
                    };
                    let v = v.atom().ok_or_else(|| syntax(v, "expected a variable"))?;
                    let sort = if sort.atom() == Some("sem") { Sort::Sem } else { Sort::Term(sexp_type(sort)?) };
                    bs.push((v.to_string(), sort));
                }
                let saved = (self.ctx.clone(), self.sem_vars.clone());
                for (v, sort) in &bs {
                    match sort {
                        Sort::Sem => self.sem_vars.push(v.clone()),
                        Sort::Term(ty) => self.ctx.declare_var(v, ty.clone()),
                    }
                }
                let body = self.formula(body);
                (self.ctx, self.sem_vars) = saved;
                let mut body = body?;
                for (v, sort) in bs.into_iter().rev() {
                    body = GlueFormula::forall(&v, sort, body);
                }
                Ok(body)
            }
            (Some("limp"), [_, a, b]) => Ok(GlueFormula::limp(self.formula(a)?, self.formula(b)?)),
            (Some("tensor"), [_, a, rest @ ..]) if !rest.is_empty() => {
                let mut acc = self.formula(a)?;
                for r in rest {
                    acc = GlueFormula::tensor(acc, self.formula(r)?);
                }
                Ok(acc)
            }
            (Some("means"), [_, sem, term, ty]) => {
                let sem = self.sem(sem)?;
                let ty = sexp_type(ty)?;
                let raw = sexp_term(term)?;
                let term = raw.elaborate(&self.ctx, Some(&ty)).map_err(TemplateError::Type)?;
                Ok(GlueFormula::means(sem, term, ty))
            }
            _ => Err(syntax(x, format!("malformed constructor {x}")).into()),
        }
    }

    fn sem(&self, x: &Sexp) -> Result<SemExpr, LexiconError> {
        if let Some(a) = x.atom() {
            if self.sem_vars.iter().any(|v| v == a) {
                return Ok(SemExpr::Bound(a.into()));
            }
            return Err(syntax(x, format!("unbound σ-variable `{a}`")));
        }
        let items = x.list().unwrap_or_default();
        let slot = match x.head() {
            Some("sig") => {
                let [_, p] = items else { return Err(syntax(x, "expected (sig PATH)")) };
                return Ok(SemExpr::Sigma { path: sexp_path(p)?, slot: SemSlot::Root });
            }
            Some("svar") => SemSlot::Var,
            Some("srestr") => SemSlot::Restr,
            Some("sant") => SemSlot::Ant,
            _ => return Err(syntax(x, "expected (sig ...), (svar ...), (srestr ...) or (sant ...)")),
        };
        let [_, inner] = items else { return Err(syntax(x, "expected one argument")) };
        match self.sem(inner)? {
            SemExpr::Sigma { path, slot: SemSlot::Root } => Ok(SemExpr::Sigma { path, slot }),
            _ => Err(syntax(x, "projection of a projection")),
        }
    }
}

/// Meaning terms in lexicon files: `(f a b)`, `(lam (x e) body)`,
/// `(^ M)`, `(! M)`, names, or a quoted term in surface syntax.
pub fn sexp_term(x: &Sexp) -> Result<RawTerm, LexiconError> {
    match &x.kind {
        SexpKind::Atom(a) => Ok(RawTerm::Name(a.clone())),
        SexpKind::Str(s) => RawTerm::parse(s).map_err(|e| syntax(x, e.to_string())),
        SexpKind::List(items) => match (x.head(), items.as_slice()) {
            (Some("lam"), [_, binder, body]) => {
                let (v, ty) = match (binder.atom(), binder.list()) {
                    (Some(v), _) => (v.to_string(), None),
                    (None, Some([v, ty])) => {
                        let v = v.atom().ok_or_else(|| syntax(v, "expected a variable"))?;
                        (v.to_string(), Some(sexp_type(ty)?))
                    }
                    _ => return Err(syntax(binder, "expected x or (x type)")),
                };
                Ok(RawTerm::Lam(v, ty, Box::new(sexp_term(body)?)))
            }
            (Some("^"), [_, m]) => Ok(RawTerm::Cap(Box::new(sexp_term(m)?))),
            (Some("!"), [_, m]) => Ok(RawTerm::Cup(Box::new(sexp_term(m)?))),
            (_, [f, args @ ..]) if !args.is_empty() => {
                let args = args.iter().map(sexp_term).collect::<Result<Vec<_>, _>>()?;
                Ok(RawTerm::App(Box::new(sexp_term(f)?), args))
            }
            _ => Err(syntax(x, format!("malformed term {x}"))),
        },
    }
}

/// Replaces `up` by `node` and resolves every σ-path.
pub fn instantiate(entry: &LexEntry, fs: &FStructure, node: NodeId) -> Result<Formula, LexiconError> {
    Ok(entry.template.try_map_sem(&mut |s| resolve_sem(s, fs, node))?)
}

fn resolve_sem(s: &SemExpr, fs: &FStructure, node: NodeId) -> Result<SemTerm, StructureError> {
    match s {
        SemExpr::Bound(v) => Ok(SemTerm::Var(v.clone())),
        SemExpr::Sigma { path, slot } => {
            let target = match fs.resolve(path, node)? {
                Value::Node(n) => n,
                Value::Atom(_) => {
                    return Err(StructureError::MissingAttribute {
                        label: fs.label(node).to_string(),
                        step: path.to_string(),
                    })
                }
            };
            Ok(SemTerm::Struct(match slot {
                SemSlot::Root => fs.sigma(target, Slot::Root),
                SemSlot::Var => fs.sigma(target, Slot::Var),
                SemSlot::Restr => fs.sigma(target, Slot::Restr),
                SemSlot::Ant => fs.sigma_ant(target)?,
            }))
        }
    }
}

/// Like [`resolve_sem`], but a path that does not resolve yields a σ-structure
/// that no other premise can mention.
fn resolve_sem_or_dangling(s: &SemExpr, fs: &FStructure, node: NodeId) -> SemTerm {
    resolve_sem(s, fs, node).unwrap_or_else(|_| {
        let SemExpr::Sigma { path, slot } = s else { unreachable!() };
        let mut owner = fs.label(node).to_string();
        for a in &path.attrs {
            owner.push('/');
            owner.push_str(a);
        }
        if *slot == SemSlot::Ant {
            owner.push_str("/ANT");
        }
        let slot = match slot {
            SemSlot::Var => Slot::Var,
            SemSlot::Restr => Slot::Restr,
            _ => Slot::Root,
        };
        SemTerm::Struct(SemStructure::new(&owner, slot))
    })
}

/// One instantiated meaning constructor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Premise {
    pub word: String,
    pub label: Name,
    pub formula: Formula,
}

fn satisfies(entry: &LexEntry, fs: &FStructure, node: NodeId) -> bool {
    entry
        .constraints
        .iter()
        .all(|(p, v)| matches!(fs.resolve(p, node), Ok(Value::Atom(a)) if a == *v))
}

/// Premises for every PRED and SPEC value, in document order. Paths the
/// f-structure lacks become σ-structures nothing else supplies, so an
/// incomplete structure has no readings rather than failing.
pub fn premises(fs: &FStructure, lexicon: &Lexicon) -> Result<Vec<Premise>, LexiconError> {
    let mut out = Vec::new();
    for (id, node) in fs.nodes() {
        for (attr, value) in &node.attrs {
            let Value::Atom(value) = value else { continue };
            let matches: Vec<&LexEntry> = lexicon
                .entries
                .iter()
                .filter(|e| e.trigger_attr == *attr && e.trigger_value == *value && satisfies(e, fs, id))
                .collect();
            match matches.as_slice() {
                [] if attr == "PRED" || attr == "SPEC" => {
                    return Err(LexiconError::NoEntry { attr: attr.clone(), value: value.clone() })
                }
                [] => {}
                [entry] => {
                    let formula = entry
                        .template
                        .try_map_sem(&mut |s| Ok::<_, ()>(resolve_sem_or_dangling(s, fs, id)))
                        .expect("infallible");
                    out.push(Premise { word: entry.headword.clone(), label: node.label.clone(), formula });
                }
                _ => return Err(LexiconError::AmbiguousEntry { attr: attr.clone(), value: value.clone() }),
            }
        }
    }
    Ok(out)
}
