//! F-structures, σ-projections and path navigation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::sexp::{parse_all, Sexp, SexpError};
use crate::term::Name;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("duplicate attribute {attr} in `{label}`")]
    DuplicateAttribute { label: String, attr: String },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("missing attribute {step} in `{label}`")]
    MissingAttribute { label: String, step: String },
    #[error("`{0}` has no antecedent")]
    NoAntecedent(String),
    #[error("`{0}` is linked to an antecedent but is not a pronoun")]
    NotAPronoun(String),
}

impl From<SexpError> for StructureError {
    fn from(e: SexpError) -> Self {
        StructureError::Syntax { line: e.line, message: e.message }
    }
}

fn syntax(x: &Sexp, message: impl Into<String>) -> StructureError {
    StructureError::Syntax { line: x.line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Atom(String),
    Node(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FNode {
    pub label: Name,
    /// document order
    pub attrs: Vec<(String, Value)>,
}

impl FNode {
    pub fn get(&self, attr: &str) -> Option<&Value> {
        let attr = attr.to_ascii_uppercase();
        self.attrs.iter().find(|(a, _)| *a == attr).map(|(_, v)| v)
    }

    pub fn atom(&self, attr: &str) -> Option<&str> {
        match self.get(attr) {
            Some(Value::Atom(a)) => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnaphorLink {
    pub pronoun: Name,
    pub antecedent: Name,
}

/// A parsed f-structure document: nodes in document order, root first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FStructure {
    nodes: Vec<FNode>,
    labels: BTreeMap<Name, NodeId>,
    links: Vec<AnaphorLink>,
}

/// Which part of a node's σ-projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Root,
    Var,
    Restr,
}

/// A σ-structure, identified by its owner's label and slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SemStructure {
    pub owner: Name,
    pub slot: Slot,
}

impl SemStructure {
    pub fn new(owner: &str, slot: Slot) -> Self {
        SemStructure { owner: owner.into(), slot }
    }

    pub fn root(owner: &str) -> Self {
        Self::new(owner, Slot::Root)
    }
}

impl fmt::Display for SemStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Slot::Root => write!(f, "{}", self.owner),
            Slot::Var => write!(f, "{}.VAR", self.owner),
            Slot::Restr => write!(f, "{}.RESTR", self.owner),
        }
    }
}

/// A σ-structure or a glue variable ranging over them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemTerm {
    Struct(SemStructure),
    Var(Name),
}

impl fmt::Display for SemTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemTerm::Struct(s) => write!(f, "{s}"),
            SemTerm::Var(v) => write!(f, "{v}"),
        }
    }
}

/// A path such as `(up OBJ OBL-OF)`, rooted at the anchor or a label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub start: Option<Name>,
    pub attrs: Vec<String>,
}

impl Path {
    pub fn up(attrs: &[&str]) -> Self {
        Path { start: None, attrs: attrs.iter().map(|a| a.to_ascii_uppercase()).collect() }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.start.as_deref().unwrap_or("up"))?;
        for a in &self.attrs {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

impl FStructure {
    pub fn parse(text: &str) -> Result<Self, StructureError> {
        parse_fstructure(text)
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &FNode {
        &self.nodes[id.0]
    }

    /// Nodes in document order.
    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &FNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn lookup(&self, label: &str) -> Option<NodeId> {
        self.labels.get(label).copied()
    }

    pub fn label(&self, id: NodeId) -> &Name {
        &self.nodes[id.0].label
    }

    pub fn links(&self) -> &[AnaphorLink] {
        &self.links
    }

    /// Follows `path` from `anchor` (or from its own start label).
    pub fn resolve(&self, path: &Path, anchor: NodeId) -> Result<Value, StructureError> {
        let mut cur = match &path.start {
            None => anchor,
            Some(l) => self.lookup(l).ok_or_else(|| StructureError::UnknownLabel(l.to_string()))?,
        };
        let mut iter = path.attrs.iter().peekable();
        while let Some(attr) = iter.next() {
            let node = self.node(cur);
            match node.get(attr) {
                Some(Value::Node(n)) => cur = *n,
                Some(Value::Atom(a)) if iter.peek().is_none() => return Ok(Value::Atom(a.clone())),
                _ => {
                    return Err(StructureError::MissingAttribute {
                        label: node.label.to_string(),
                        step: attr.clone(),
                    })
                }
            }
        }
        Ok(Value::Node(cur))
    }

    /// The σ-projection of `node`.
    pub fn sigma(&self, node: NodeId, slot: Slot) -> SemStructure {
        SemStructure { owner: self.label(node).clone(), slot }
    }

    /// `(σ ANT)` of a pronoun: its antecedent's root σ-structure.
    pub fn sigma_ant(&self, node: NodeId) -> Result<SemStructure, StructureError> {
        let label = self.label(node);
        self.links
            .iter()
            .find(|l| l.pronoun == *label)
            .map(|l| SemStructure::root(&l.antecedent))
            .ok_or_else(|| StructureError::NoAntecedent(label.to_string()))
    }

    /// Renders the document in the input format.
    pub fn print(&self) -> String {
        let mut out = String::new();
        let mut seen = BTreeSet::new();
        self.print_node(self.root(), 0, &mut seen, &mut out);
        out.push('\n');
        for l in &self.links {
            out.push_str(&format!("(ant {} {})\n", l.pronoun, l.antecedent));
        }
        out
    }

    fn print_node(&self, id: NodeId, indent: usize, seen: &mut BTreeSet<NodeId>, out: &mut String) {
        let node = self.node(id);
        if !seen.insert(id) {
            out.push_str(&format!("(ref {})", node.label));
            return;
        }
        out.push_str(&format!("(fstruct {}", node.label));
        for (attr, v) in &node.attrs {
            out.push('\n');
            out.push_str(&" ".repeat(indent + 2));
            out.push_str(&format!("({attr} "));
            match v {
                Value::Atom(a) => out.push_str(&format!("{a:?}")),
                Value::Node(n) => self.print_node(*n, indent + 2 + attr.len() + 2, seen, out),
            }
            out.push(')');
        }
        out.push(')');
    }
}

/// Parses a document: one `(fstruct label (ATTR value)...)` root followed
/// by `(ant pronoun antecedent)` links.
pub fn parse_fstructure(text: &str) -> Result<FStructure, StructureError> {
    let forms = parse_all(text)?;
    let mut it = forms.iter();
    let root = it
        .next()
        .ok_or(StructureError::Syntax { line: 1, message: "empty document".into() })?;
    let mut fs = FStructure { nodes: Vec::new(), labels: BTreeMap::new(), links: Vec::new() };
    let mut refs = Vec::new();
    build(root, &mut fs, &mut refs)?;
    for (node, attr_index, label, line) in refs {
        let target = fs.lookup(&label).ok_or_else(|| {
            let _ = line;
            StructureError::UnknownLabel(label.clone())
        })?;
        fs.nodes[node].attrs[attr_index].1 = Value::Node(target);
    }
    for form in it {
        let items = form.list().unwrap_or_default();
        match (form.head(), items) {
            (Some("ant"), [_, p, a]) => {
                let (Some(p), Some(a)) = (p.atom(), a.atom()) else {
                    return Err(syntax(form, "expected (ant pronoun antecedent)"));
                };
                let pid = fs.lookup(p).ok_or_else(|| StructureError::UnknownLabel(p.into()))?;
                fs.lookup(a).ok_or_else(|| StructureError::UnknownLabel(a.into()))?;
                if fs.node(pid).atom("PRED") != Some("pro") {
                    return Err(StructureError::NotAPronoun(p.into()));
                }
                fs.links.push(AnaphorLink { pronoun: p.into(), antecedent: a.into() });
            }
            (Some("fstruct"), _) => return Err(syntax(form, "only one root f-structure is allowed")),
            _ => return Err(syntax(form, format!("unexpected form {form}"))),
        }
    }
    Ok(fs)
}

type PendingRef = (usize, usize, String, usize);

fn build(x: &Sexp, fs: &mut FStructure, refs: &mut Vec<PendingRef>) -> Result<NodeId, StructureError> {
    let items = x.list().unwrap_or_default();
    let (Some("fstruct"), Some(label)) = (x.head(), items.get(1).and_then(Sexp::atom)) else {
        return Err(syntax(x, "expected (fstruct label ...)"));
    };
    if fs.labels.contains_key(label) {
        return Err(StructureError::DuplicateLabel(label.into()));
    }
    let id = NodeId(fs.nodes.len());
    fs.nodes.push(FNode { label: label.into(), attrs: Vec::new() });
    fs.labels.insert(label.into(), id);
    for pair in &items[2..] {
        let (Some(attr), Some(v), 2) =
            (pair.head(), pair.list().and_then(|l| l.get(1)), pair.list().map_or(0, |l| l.len()))
        else {
            return Err(syntax(pair, "expected (ATTRIBUTE value)"));
        };
        let attr = attr.to_ascii_uppercase();
        if fs.nodes[id.0].attrs.iter().any(|(a, _)| *a == attr) {
            return Err(StructureError::DuplicateAttribute { label: label.into(), attr });
        }
        let value = if let Some(s) = v.string() {
            Value::Atom(s.to_string())
        } else if v.head() == Some("fstruct") {
            Value::Node(build(v, fs, refs)?)
        } else if v.head() == Some("ref") {
            let target = v.list().and_then(|l| l.get(1)).and_then(Sexp::atom);
            let Some(target) = target else { return Err(syntax(v, "expected (ref label)")) };
            refs.push((id.0, fs.nodes[id.0].attrs.len(), target.to_string(), v.line));
            Value::Node(id)
        } else if let Some(a) = v.atom() {
            Value::Atom(a.to_string())
        } else {
            return Err(syntax(v, "expected a string, (fstruct ...) or (ref label)"));
        };
        fs.nodes[id.0].attrs.push((attr, value));
    }
    Ok(id)
}
