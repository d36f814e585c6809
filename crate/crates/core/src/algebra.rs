//! Boolean combinations of schemas, decided by membership.

use std::cmp::Ordering;

use thiserror::Error;

use crate::hedge::{is_valid_name, Element, Hedge, Node};
use crate::reg::{normalize, MacroTable, Reg, RegError};
use crate::validator::validate;

/// Text values used when enumerating documents.
pub const PROBE_TEXTS: [&str; 2] = ["", "t"];

/// Largest node count `enumerate_members` accepts.
pub const MAX_ENUMERATION_NODES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("max-nodes {0} exceeds the enumeration limit of {MAX_ENUMERATION_NODES}")]
    Bound(usize),
    #[error("the alphabet is empty")]
    EmptyAlphabet,
    #[error("{0:?} is not an element name")]
    BadName(String),
    #[error(transparent)]
    Reg(#[from] RegError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemaExpr {
    Atom { schema: Reg, macros: MacroTable },
    Union(Box<SchemaExpr>, Box<SchemaExpr>),
    Intersect(Box<SchemaExpr>, Box<SchemaExpr>),
    Minus(Box<SchemaExpr>, Box<SchemaExpr>),
}

impl SchemaExpr {
    /// An atom over the canonical form of `schema`.
    pub fn atom(schema: &Reg, macros: MacroTable) -> Result<SchemaExpr, RegError> {
        macros.check_resolved(schema)?;
        Ok(SchemaExpr::Atom {
            schema: normalize(schema)?,
            macros,
        })
    }

    pub fn union(self, other: SchemaExpr) -> SchemaExpr {
        SchemaExpr::Union(Box::new(self), Box::new(other))
    }

    pub fn intersect(self, other: SchemaExpr) -> SchemaExpr {
        SchemaExpr::Intersect(Box::new(self), Box::new(other))
    }

    pub fn minus(self, other: SchemaExpr) -> SchemaExpr {
        SchemaExpr::Minus(Box::new(self), Box::new(other))
    }
}

pub fn member(e: &SchemaExpr, doc: &Hedge) -> Result<bool, RegError> {
    Ok(match e {
        SchemaExpr::Atom { schema, macros } => validate(schema, macros, doc)?.valid,
        SchemaExpr::Union(l, r) => member(l, doc)? || member(r, doc)?,
        SchemaExpr::Intersect(l, r) => member(l, doc)? && member(r, doc)?,
        SchemaExpr::Minus(l, r) => member(l, doc)? && !member(r, doc)?,
    })
}

/// All members with at most `max_nodes` nodes, elements named from
/// `alphabet` without attributes, texts from [`PROBE_TEXTS`]. Ordered by
/// size, then lexicographically with text before element.
pub fn enumerate_members(
    e: &SchemaExpr,
    max_nodes: usize,
    alphabet: &[&str],
) -> Result<Vec<Hedge>, AlgebraError> {
    if max_nodes > MAX_ENUMERATION_NODES {
        return Err(AlgebraError::Bound(max_nodes));
    }
    if alphabet.is_empty() {
        return Err(AlgebraError::EmptyAlphabet);
    }
    if let Some(bad) = alphabet.iter().find(|n| !is_valid_name(n)) {
        return Err(AlgebraError::BadName(bad.to_string()));
    }
    let mut out = Vec::new();
    for hedge in hedges_up_to(max_nodes, alphabet) {
        if member(e, &hedge)? {
            out.push(hedge);
        }
    }
    Ok(out)
}

/// Every hedge of at most `max_nodes` nodes over the alphabet and probe
/// texts, in enumeration order.
fn hedges_up_to(max_nodes: usize, alphabet: &[&str]) -> Vec<Hedge> {
    let mut names: Vec<&str> = alphabet.to_vec();
    names.sort_unstable();
    names.dedup();
    // by_size[n] holds every hedge with exactly n nodes
    let mut by_size: Vec<Vec<Vec<Node>>> = vec![vec![Vec::new()]];
    let mut trees: Vec<Vec<Node>> = vec![Vec::new()];
    for n in 1..=max_nodes {
        let mut t = Vec::new();
        if n == 1 {
            t.extend(PROBE_TEXTS.iter().map(|v| Node::text(*v)));
        }
        for name in &names {
            for children in &by_size[n - 1] {
                t.push(Node::Element(
                    Element::new(*name).with_children(children.iter().cloned()),
                ));
            }
        }
        trees.push(t);
        let mut h = Vec::new();
        for first in 1..=n {
            for tree in &trees[first] {
                for rest in &by_size[n - first] {
                    let mut nodes = Vec::with_capacity(rest.len() + 1);
                    nodes.push(tree.clone());
                    nodes.extend(rest.iter().cloned());
                    h.push(nodes);
                }
            }
        }
        h.sort_by(|a, b| cmp_nodes(a, b));
        by_size.push(h);
    }
    by_size.into_iter().flatten().map(Hedge::from).collect()
}

fn cmp_nodes(a: &[Node], b: &[Node]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = cmp_node(x, y);
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn cmp_node(a: &Node, b: &Node) -> Ordering {
    match (a, b) {
        (Node::Text(x), Node::Text(y)) => x.cmp(y),
        (Node::Text(_), Node::Element(_)) => Ordering::Less,
        (Node::Element(_), Node::Text(_)) => Ordering::Greater,
        (Node::Element(x), Node::Element(y)) => x
            .name
            .cmp(&y.name)
            .then_with(|| cmp_nodes(&x.children, &y.children)),
    }
}
