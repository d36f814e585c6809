//! Repository access: a small path language and the data-source interface
//! that slot-filling tags query.
//!
//! ```text
//! path := '/'? step ('/' step)*
//! step := name ('[' int ']')? | '@' name | 'text()'
//! ```
//!
//! Attribute and `text()` steps may only come last. Missing data is never an
//! error, it yields the empty node-set.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use thiserror::Error;

use crate::hedge::{is_valid_name, Element, Hedge, Node};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("empty query")]
    Empty,
    #[error("query {query:?}: {message}")]
    Syntax { query: String, message: String },
    #[error("query {query:?}: {step} must be the last step")]
    NotFinal { query: String, step: String },
    #[error("query {query:?}: malformed index in {step:?}")]
    BadIndex { query: String, step: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Step {
    Child { name: String, index: Option<usize> },
    Attribute(String),
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub absolute: bool,
    pub steps: Vec<Step>,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Child { name, index: None } => f.write_str(name),
            Step::Child {
                name,
                index: Some(i),
            } => write!(f, "{name}[{i}]"),
            Step::Attribute(name) => write!(f, "@{name}"),
            Step::Text => f.write_str("text()"),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.absolute {
            f.write_str("/")?;
        }
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

impl FromStr for Query {
    type Err = QueryError;

    fn from_str(src: &str) -> Result<Query, QueryError> {
        parse_query(src)
    }
}

fn is_step_name(name: &str) -> bool {
    is_valid_name(name) && !name.contains(['[', ']', '@', '(', ')'])
}

pub fn parse_query(src: &str) -> Result<Query, QueryError> {
    if src.is_empty() {
        return Err(QueryError::Empty);
    }
    let syntax = |message: &str| QueryError::Syntax {
        query: src.to_owned(),
        message: message.to_owned(),
    };
    let (absolute, body) = match src.strip_prefix('/') {
        Some(rest) => (true, rest),
        None => (false, src),
    };
    if body.is_empty() {
        return Err(syntax("missing step"));
    }
    let mut steps = Vec::new();
    for raw in body.split('/') {
        let step = if raw.is_empty() {
            return Err(syntax("empty step"));
        } else if raw == "text()" {
            Step::Text
        } else if let Some(name) = raw.strip_prefix('@') {
            if !is_step_name(name) {
                return Err(syntax(&format!("illegal attribute name in {raw:?}")));
            }
            Step::Attribute(name.to_owned())
        } else if let Some(open) = raw.find('[') {
            let bad_index = || QueryError::BadIndex {
                query: src.to_owned(),
                step: raw.to_owned(),
            };
            let digits = raw[open + 1..].strip_suffix(']').ok_or_else(bad_index)?;
            let index: usize = digits
                .parse()
                .ok()
                .filter(|i| *i >= 1 && digits.bytes().all(|b| b.is_ascii_digit()))
                .ok_or_else(bad_index)?;
            let name = &raw[..open];
            if !is_step_name(name) {
                return Err(syntax(&format!("illegal element name in {raw:?}")));
            }
            Step::Child {
                name: name.to_owned(),
                index: Some(index),
            }
        } else {
            if !is_step_name(raw) {
                return Err(syntax(&format!("illegal element name in {raw:?}")));
            }
            Step::Child {
                name: raw.to_owned(),
                index: None,
            }
        };
        steps.push(step);
    }
    if let Some(step) = steps[..steps.len() - 1]
        .iter()
        .find(|s| !matches!(s, Step::Child { .. }))
    {
        return Err(QueryError::NotFinal {
            query: src.to_owned(),
            step: step.to_string(),
        });
    }
    Ok(Query { absolute, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind<'a> {
    Element(&'a str),
    Text,
    Attribute(&'a str),
}

/// A read-only data source.
///
/// `Node` handles order by document order. Implementations must answer
/// identically for identical calls for as long as they are in use.
pub trait Repository {
    type Node: Copy + Ord + Hash + fmt::Debug;

    /// Top-level nodes; absolute queries start here.
    fn roots(&self) -> Vec<Self::Node>;

    /// Element and text children in order.
    fn children(&self, node: Self::Node) -> Vec<Self::Node>;

    fn attributes(&self, node: Self::Node) -> Vec<Self::Node>;

    fn kind(&self, node: Self::Node) -> NodeKind<'_>;

    fn string_of(&self, node: Self::Node) -> String;

    /// A copy of an element node as a hedge node; `None` for other kinds.
    fn fragment(&self, node: Self::Node) -> Option<Node>;

    fn select(&self, context: &Context<Self::Node>, query: &Query) -> Vec<Self::Node>
    where
        Self: Sized,
    {
        eval_query(self, context, query)
    }
}

/// The node-set relative queries are evaluated against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context<N> {
    pub current: Vec<N>,
}

impl<N> Context<N> {
    pub fn new(current: Vec<N>) -> Context<N> {
        Context { current }
    }
}

/// Evaluates `query`; the result is duplicate-free and in document order.
pub fn eval_query<R: Repository>(repo: &R, ctx: &Context<R::Node>, query: &Query) -> Vec<R::Node> {
    // `None` stands for the document node above the roots.
    let mut current: Vec<Option<R::Node>> = if query.absolute {
        vec![None]
    } else {
        ctx.current.iter().copied().map(Some).collect()
    };
    for step in &query.steps {
        let mut next = BTreeSet::new();
        for parent in current {
            let children = || match parent {
                Some(n) => repo.children(n),
                None => repo.roots(),
            };
            match step {
                Step::Child { name, index } => {
                    let mut named = children()
                        .into_iter()
                        .filter(|&c| repo.kind(c) == NodeKind::Element(name));
                    match index {
                        Some(i) => next.extend(named.nth(i - 1)),
                        None => next.extend(named),
                    }
                }
                Step::Attribute(name) => {
                    if let Some(n) = parent {
                        next.extend(
                            repo.attributes(n)
                                .into_iter()
                                .filter(|&a| repo.kind(a) == NodeKind::Attribute(name)),
                        );
                    }
                }
                Step::Text => next.extend(
                    children()
                        .into_iter()
                        .filter(|&c| repo.kind(c) == NodeKind::Text),
                ),
            }
        }
        current = next.into_iter().map(Some).collect();
    }
    current.into_iter().flatten().collect()
}

/// Handle into an [`XmlRepository`]: the node's preorder number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn preorder(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Entry {
    Element {
        name: String,
        attributes: Vec<NodeId>,
        children: Vec<NodeId>,
    },
    Text(String),
    Attribute {
        name: String,
        value: String,
    },
}

/// Repository over an XML document tree. Attributes are numbered right after
/// their element and before its children.
#[derive(Debug, Clone)]
pub struct XmlRepository {
    entries: Vec<Entry>,
    roots: Vec<NodeId>,
}

pub fn xml_repository(doc: &Hedge) -> XmlRepository {
    XmlRepository::new(doc)
}

impl XmlRepository {
    pub fn new(doc: &Hedge) -> XmlRepository {
        let mut repo = XmlRepository {
            entries: Vec::new(),
            roots: Vec::new(),
        };
        repo.roots = doc.iter().map(|n| repo.add(n)).collect();
        repo
    }

    fn add(&mut self, node: &Node) -> NodeId {
        let id = NodeId(self.entries.len());
        match node {
            Node::Text(t) => self.entries.push(Entry::Text(t.clone())),
            Node::Element(e) => {
                self.entries.push(Entry::Element {
                    name: e.name.clone(),
                    attributes: Vec::new(),
                    children: Vec::new(),
                });
                let attributes: Vec<NodeId> = e
                    .attributes
                    .iter()
                    .map(|(name, value)| {
                        let aid = NodeId(self.entries.len());
                        self.entries.push(Entry::Attribute {
                            name: name.clone(),
                            value: value.clone(),
                        });
                        aid
                    })
                    .collect();
                let children: Vec<NodeId> = e.children.iter().map(|c| self.add(c)).collect();
                if let Entry::Element {
                    attributes: a,
                    children: c,
                    ..
                } = &mut self.entries[id.0]
                {
                    *a = attributes;
                    *c = children;
                }
            }
        }
        id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn node(&self, id: NodeId) -> Node {
        match &self.entries[id.0] {
            Entry::Text(t) => Node::Text(t.clone()),
            Entry::Attribute { value, .. } => Node::Text(value.clone()),
            Entry::Element {
                name,
                attributes,
                children,
            } => {
                let mut e = Element::new(name.as_str());
                for a in attributes {
                    if let Entry::Attribute { name, value } = &self.entries[a.0] {
                        e.attributes.push((name.clone(), value.clone()));
                    }
                }
                e.children = children.iter().map(|&c| self.node(c)).collect();
                Node::Element(e)
            }
        }
    }
}

impl Repository for XmlRepository {
    type Node = NodeId;

    fn roots(&self) -> Vec<NodeId> {
        self.roots.clone()
    }

    fn children(&self, node: NodeId) -> Vec<NodeId> {
        match &self.entries[node.0] {
            Entry::Element { children, .. } => children.clone(),
            _ => Vec::new(),
        }
    }

    fn attributes(&self, node: NodeId) -> Vec<NodeId> {
        match &self.entries[node.0] {
            Entry::Element { attributes, .. } => attributes.clone(),
            _ => Vec::new(),
        }
    }

    fn kind(&self, node: NodeId) -> NodeKind<'_> {
        match &self.entries[node.0] {
            Entry::Element { name, .. } => NodeKind::Element(name),
            Entry::Text(_) => NodeKind::Text,
            Entry::Attribute { name, .. } => NodeKind::Attribute(name),
        }
    }

    fn string_of(&self, node: NodeId) -> String {
        match &self.entries[node.0] {
            Entry::Attribute { value, .. } => value.clone(),
            Entry::Text(t) => t.clone(),
            Entry::Element { children, .. } => children
                .iter()
                .map(|&c| self.string_of(c))
                .collect::<String>(),
        }
    }

    fn fragment(&self, node: NodeId) -> Option<Node> {
        matches!(self.entries[node.0], Entry::Element { .. }).then(|| self.node(node))
    }
}
