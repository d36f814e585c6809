//! The regular model shared by templates and schemas.
//!
//! A [`Reg`] term is read two ways: the expander instantiates it against a
//! repository, the validator decides document membership in its language.
//! Sequences are right-nested `Then` chains ending in `Epsilon`, so the hedge
//! `n0 n1 n2` is `Then n0 (Then n1 (Then n2 Epsilon))`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::hedge::{attributes_eq, Hedge, Node};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegError {
    #[error("illegal combination: {0}")]
    IllegalCombination(String),
    #[error("unknown macro {0:?}")]
    UnknownMacro(String),
    #[error("duplicate macro definition {0:?}")]
    DuplicateMacro(String),
}

#[derive(Debug, Clone)]
pub enum Reg {
    /// Call of a named, unparameterised macro.
    Macro(String),
    /// Attribute slot filled from `query`; legal only at the start of
    /// element content.
    Attribute {
        name: String,
        query: String,
    },
    /// Text slot filled from `query`.
    TextSlot(String),
    /// Splice of a repository element selected by `query`.
    Include(String),
    Element {
        name: String,
        attributes: Vec<(String, String)>,
        content: Box<Reg>,
    },
    /// Literal text.
    Text(String),
    Epsilon,
    Or(Box<Reg>, Box<Reg>),
    Then(Box<Reg>, Box<Reg>),
    /// Repetition. The selector names the iteration source for expansion and
    /// carries no meaning for validation.
    Star {
        body: Box<Reg>,
        selector: Option<String>,
    },
}

static EPSILON: Reg = Reg::Epsilon;

impl PartialEq for Reg {
    fn eq(&self, other: &Reg) -> bool {
        use Reg::*;
        match (self, other) {
            (Macro(a), Macro(b)) => a == b,
            (
                Attribute {
                    name: n1,
                    query: q1,
                },
                Attribute {
                    name: n2,
                    query: q2,
                },
            ) => n1 == n2 && q1 == q2,
            (TextSlot(a), TextSlot(b)) => a == b,
            (Include(a), Include(b)) => a == b,
            (
                Element {
                    name: n1,
                    attributes: a1,
                    content: c1,
                },
                Element {
                    name: n2,
                    attributes: a2,
                    content: c2,
                },
            ) => n1 == n2 && attributes_eq(a1, a2) && c1 == c2,
            (Text(a), Text(b)) => a == b,
            (Epsilon, Epsilon) => true,
            (Or(a1, b1), Or(a2, b2)) => a1 == a2 && b1 == b2,
            (Then(a1, b1), Then(a2, b2)) => a1 == a2 && b1 == b2,
            (
                Star {
                    body: b1,
                    selector: s1,
                },
                Star {
                    body: b2,
                    selector: s2,
                },
            ) => s1 == s2 && b1 == b2,
            _ => false,
        }
    }
}

impl Eq for Reg {}

impl Reg {
    pub fn then(head: Reg, tail: Reg) -> Reg {
        Reg::Then(Box::new(head), Box::new(tail))
    }

    pub fn or(left: Reg, right: Reg) -> Reg {
        Reg::Or(Box::new(left), Box::new(right))
    }

    pub fn star(body: Reg) -> Reg {
        Reg::Star {
            body: Box::new(body),
            selector: None,
        }
    }

    pub fn for_each(body: Reg, selector: impl Into<String>) -> Reg {
        Reg::Star {
            body: Box::new(body),
            selector: Some(selector.into()),
        }
    }

    pub fn element(name: impl Into<String>, content: Reg) -> Reg {
        Reg::Element {
            name: name.into(),
            attributes: Vec::new(),
            content: Box::new(content),
        }
    }

    pub fn element_with(
        name: impl Into<String>,
        attributes: Vec<(String, String)>,
        content: Reg,
    ) -> Reg {
        Reg::Element {
            name: name.into(),
            attributes,
            content: Box::new(content),
        }
    }

    pub fn text(value: impl Into<String>) -> Reg {
        Reg::Text(value.into())
    }

    pub fn text_slot(query: impl Into<String>) -> Reg {
        Reg::TextSlot(query.into())
    }

    pub fn include(query: impl Into<String>) -> Reg {
        Reg::Include(query.into())
    }

    pub fn attribute(name: impl Into<String>, query: impl Into<String>) -> Reg {
        Reg::Attribute {
            name: name.into(),
            query: query.into(),
        }
    }

    pub fn call(name: impl Into<String>) -> Reg {
        Reg::Macro(name.into())
    }

    /// Right-nested `Then` chain over `items`, terminated by `Epsilon`.
    pub fn chain(items: impl IntoIterator<Item = Reg>) -> Reg {
        let items: Vec<Reg> = items.into_iter().collect();
        items
            .into_iter()
            .rev()
            .fold(Reg::Epsilon, |tail, head| Reg::then(head, tail))
    }

    /// Right-nested `Or` over `alternatives`. Panics on an empty list.
    pub fn choice(alternatives: impl IntoIterator<Item = Reg>) -> Reg {
        let mut alts: Vec<Reg> = alternatives.into_iter().collect();
        let mut acc = alts.pop().expect("choice needs at least one alternative");
        while let Some(alt) = alts.pop() {
            acc = Reg::or(alt, acc);
        }
        acc
    }

    /// Items of a `Then` chain, following tails. `Epsilon` has no items and
    /// any other term is a one-item sequence ending at itself.
    pub fn chain_items(&self) -> ChainItems<'_> {
        ChainItems { rest: Some(self) }
    }

    /// Number of constructors in the term.
    pub fn size(&self) -> usize {
        match self {
            Reg::Element { content, .. } => 1 + content.size(),
            Reg::Or(a, b) | Reg::Then(a, b) => 1 + a.size() + b.size(),
            Reg::Star { body, .. } => 1 + body.size(),
            _ => 1,
        }
    }

    /// Names of all macros called from this term.
    pub fn macro_calls(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_calls(&mut out);
        out
    }

    fn collect_calls<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Reg::Macro(m) => {
                out.insert(m.as_str());
            }
            Reg::Element { content, .. } => content.collect_calls(out),
            Reg::Or(a, b) | Reg::Then(a, b) => {
                a.collect_calls(out);
                b.collect_calls(out);
            }
            Reg::Star { body, .. } => body.collect_calls(out),
            _ => {}
        }
    }

    /// Splits element content into its attribute-slot prefix and the rest.
    pub fn split_attribute_prefix(&self) -> (Vec<(&str, &str)>, &Reg) {
        let mut slots = Vec::new();
        let mut rest = self;
        loop {
            match rest {
                Reg::Then(head, tail) => match head.as_ref() {
                    Reg::Attribute { name, query } => {
                        slots.push((name.as_str(), query.as_str()));
                        rest = tail;
                    }
                    _ => break,
                },
                Reg::Attribute { name, query } => {
                    slots.push((name.as_str(), query.as_str()));
                    rest = &EPSILON;
                    break;
                }
                _ => break,
            }
        }
        (slots, rest)
    }

    /// Structural equality that ignores `Star` selectors.
    pub fn same_language_shape(&self, other: &Reg) -> bool {
        use Reg::*;
        match (self, other) {
            (Star { body: b1, .. }, Star { body: b2, .. }) => b1.same_language_shape(b2),
            (
                Element {
                    name: n1,
                    attributes: a1,
                    content: c1,
                },
                Element {
                    name: n2,
                    attributes: a2,
                    content: c2,
                },
            ) => n1 == n2 && attributes_eq(a1, a2) && c1.same_language_shape(c2),
            (Or(a1, b1), Or(a2, b2)) | (Then(a1, b1), Then(a2, b2)) => {
                a1.same_language_shape(a2) && b1.same_language_shape(b2)
            }
            (a, b) => a == b,
        }
    }
}

pub struct ChainItems<'a> {
    rest: Option<&'a Reg>,
}

impl<'a> Iterator for ChainItems<'a> {
    type Item = &'a Reg;

    fn next(&mut self) -> Option<&'a Reg> {
        match self.rest? {
            Reg::Epsilon => {
                self.rest = None;
                None
            }
            Reg::Then(head, tail) => {
                self.rest = Some(tail);
                Some(head)
            }
            other => {
                self.rest = None;
                Some(other)
            }
        }
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(r: &Reg, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match r {
                Reg::Epsilon => write!(f, "{r}"),
                _ => write!(f, "({r})"),
            }
        }
        match self {
            Reg::Macro(m) => write!(f, "MacroR {m:?}"),
            Reg::Attribute { name, query } => write!(f, "AttrR {name:?} {query:?}"),
            Reg::TextSlot(q) => write!(f, "TextR {q:?}"),
            Reg::Include(q) => write!(f, "IncludeR {q:?}"),
            Reg::Element {
                name,
                attributes,
                content,
            } => {
                write!(f, "ElR {name:?} [")?;
                for (i, (n, v)) in attributes.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "({n:?}, {v:?})")?;
                }
                f.write_str("] ")?;
                atom(content, f)
            }
            Reg::Text(v) => write!(f, "TxtR {v:?}"),
            Reg::Epsilon => f.write_str("Epsilon"),
            Reg::Or(a, b) => {
                f.write_str("Or ")?;
                atom(a, f)?;
                f.write_str(" ")?;
                atom(b, f)
            }
            Reg::Then(a, b) => {
                f.write_str("Then ")?;
                atom(a, f)?;
                f.write_str(" ")?;
                atom(b, f)
            }
            Reg::Star { body, selector } => {
                f.write_str("Star ")?;
                atom(body, f)?;
                if let Some(s) = selector {
                    write!(f, " {s:?}")?;
                }
                Ok(())
            }
        }
    }
}

/// Named, unparameterised macro bodies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MacroTable {
    bodies: BTreeMap<String, Reg>,
}

impl MacroTable {
    pub fn new() -> MacroTable {
        MacroTable::default()
    }

    pub fn define(&mut self, name: impl Into<String>, body: Reg) -> Result<(), RegError> {
        let name = name.into();
        if self.bodies.contains_key(&name) {
            return Err(RegError::DuplicateMacro(name));
        }
        self.bodies.insert(name, body);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Reg> {
        self.bodies.get(name)
    }

    pub fn lookup(&self, name: &str) -> Result<&Reg, RegError> {
        self.get(name)
            .ok_or_else(|| RegError::UnknownMacro(name.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Reg)> {
        self.bodies.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    /// Fails on the first call in `entry` or in any body that names no
    /// defined macro.
    pub fn check_resolved(&self, entry: &Reg) -> Result<(), RegError> {
        for name in entry
            .macro_calls()
            .into_iter()
            .chain(self.bodies.values().flat_map(Reg::macro_calls))
        {
            self.lookup(name)?;
        }
        Ok(())
    }

    /// Macros reachable from `roots`, each listed after the macros its body
    /// calls (recursive self-calls aside). Mutually recursive groups are
    /// listed in name order.
    pub fn dependency_order<'a>(&self, roots: impl IntoIterator<Item = &'a str>) -> Vec<&str> {
        fn visit<'t>(
            table: &'t MacroTable,
            name: &str,
            state: &mut HashMap<&'t str, bool>,
            out: &mut Vec<&'t str>,
        ) {
            let Some((key, body)) = table.bodies.get_key_value(name) else {
                return;
            };
            if state.contains_key(key.as_str()) {
                return;
            }
            state.insert(key, false);
            for callee in body.macro_calls() {
                visit(table, callee, state, out);
            }
            state.insert(key, true);
            out.push(key);
        }
        let mut state = HashMap::new();
        let mut out = Vec::new();
        let mut roots: Vec<&str> = roots.into_iter().collect();
        roots.sort_unstable();
        for root in roots {
            visit(self, root, &mut state, &mut out);
        }
        out
    }
}

/// Lookahead symbol: what the first node of a hedge can look like.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeDescriptor {
    Element(String),
    AnyElement,
    AnyText,
    LiteralText(String),
}

impl NodeDescriptor {
    pub fn admits(&self, node: &Node) -> bool {
        match (self, node) {
            (NodeDescriptor::Element(n), Node::Element(e)) => *n == e.name,
            (NodeDescriptor::AnyElement, Node::Element(_)) => true,
            (NodeDescriptor::AnyText, Node::Text(_)) => true,
            (NodeDescriptor::LiteralText(v), Node::Text(t)) => v == t,
            _ => false,
        }
    }
}

impl fmt::Display for NodeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeDescriptor::Element(n) => write!(f, "element <{n}>"),
            NodeDescriptor::AnyElement => f.write_str("any element"),
            NodeDescriptor::AnyText => f.write_str("text"),
            NodeDescriptor::LiteralText(v) => write!(f, "text {v:?}"),
        }
    }
}

pub type FirstSet = BTreeSet<NodeDescriptor>;

/// True if some descriptor in `set` admits `node`.
pub fn first_set_admits(set: &FirstSet, node: &Node) -> bool {
    set.iter().any(|d| d.admits(node))
}

/// Encodes a hedge as a document-side term built from `Then`, `Epsilon`,
/// `Element` and `Text` only.
pub fn encode_document(hedge: &Hedge) -> Reg {
    Reg::chain(hedge.iter().map(encode_node))
}

fn encode_node(node: &Node) -> Reg {
    match node {
        Node::Text(t) => Reg::Text(t.clone()),
        Node::Element(e) => Reg::Element {
            name: e.name.clone(),
            attributes: e.attributes.clone(),
            content: Box::new(encode_document(&e.children)),
        },
    }
}

/// Rewrites `r` into canonical form.
///
/// `Then` is right-associated with an `Epsilon` terminator and no `Epsilon`
/// heads; `Or` is right-associated without duplicate alternatives, keeping
/// the first occurrence; `Star (Star r)` collapses; `Star Epsilon` becomes
/// `Epsilon`. Macro calls are left alone. Attribute slots are accepted only
/// as a prefix of element content, with names distinct from each other and
/// from the element's literal attributes.
pub fn normalize(r: &Reg) -> Result<Reg, RegError> {
    let out = rewrite(r);
    check_placement(&out)?;
    Ok(out)
}

/// True iff both terms normalize to the same shape. Literal attributes are
/// compared as sets and `Star` selectors are ignored.
pub fn canonical_eq(a: &Reg, b: &Reg) -> Result<bool, RegError> {
    Ok(normalize(a)?.same_language_shape(&normalize(b)?))
}

fn rewrite(r: &Reg) -> Reg {
    match r {
        Reg::Then(..) => {
            let mut items = Vec::new();
            flatten_then(r, &mut items);
            Reg::chain(items)
        }
        Reg::Or(..) => {
            let mut alts: Vec<Reg> = Vec::new();
            flatten_or(r, &mut alts);
            let mut unique: Vec<Reg> = Vec::with_capacity(alts.len());
            for alt in alts {
                if !unique.contains(&alt) {
                    unique.push(alt);
                }
            }
            Reg::choice(unique)
        }
        Reg::Star { body, selector } => match rewrite(body) {
            Reg::Epsilon => Reg::Epsilon,
            Reg::Star {
                body: inner,
                selector: inner_selector,
            } => Reg::Star {
                body: inner,
                selector: selector.clone().or(inner_selector),
            },
            body => Reg::Star {
                body: Box::new(body),
                selector: selector.clone(),
            },
        },
        Reg::Element {
            name,
            attributes,
            content,
        } => Reg::Element {
            name: name.clone(),
            attributes: attributes.clone(),
            content: Box::new(rewrite(content)),
        },
        leaf => leaf.clone(),
    }
}

fn flatten_then(r: &Reg, items: &mut Vec<Reg>) {
    match r {
        Reg::Then(head, tail) => {
            flatten_then(head, items);
            flatten_then(tail, items);
        }
        Reg::Epsilon => {}
        other => match rewrite(other) {
            Reg::Epsilon => {}
            chain @ Reg::Then(..) => items.extend(chain.chain_items().cloned()),
            item => items.push(item),
        },
    }
}

fn flatten_or(r: &Reg, alts: &mut Vec<Reg>) {
    match r {
        Reg::Or(a, b) => {
            flatten_or(a, alts);
            flatten_or(b, alts);
        }
        other => match rewrite(other) {
            choice @ Reg::Or(..) => {
                let mut rest = &choice;
                while let Reg::Or(a, b) = rest {
                    alts.push((**a).clone());
                    rest = b;
                }
                alts.push(rest.clone());
            }
            alt => alts.push(alt),
        },
    }
}

/// Rejects attribute slots outside element-content prefixes and duplicate
/// attribute names on one element.
pub fn check_placement(r: &Reg) -> Result<(), RegError> {
    match r {
        Reg::Attribute { name, .. } => Err(RegError::IllegalCombination(format!(
            "attribute slot {name:?} outside the start of element content"
        ))),
        Reg::Element {
            name,
            attributes,
            content,
        } => {
            let mut seen: Vec<&str> = Vec::new();
            for (attr, _) in attributes {
                if seen.contains(&attr.as_str()) {
                    return Err(RegError::IllegalCombination(format!(
                        "duplicate attribute {attr:?} on <{name}>"
                    )));
                }
                seen.push(attr);
            }
            let (slots, rest) = content.split_attribute_prefix();
            for (attr, _) in slots {
                if seen.contains(&attr) {
                    return Err(RegError::IllegalCombination(format!(
                        "duplicate attribute {attr:?} on <{name}>"
                    )));
                }
                seen.push(attr);
            }
            check_placement(rest)
        }
        Reg::Or(a, b) | Reg::Then(a, b) => {
            check_placement(a)?;
            check_placement(b)
        }
        Reg::Star { body, .. } => check_placement(body),
        _ => Ok(()),
    }
}

/// Nullability and first sets of every macro in a table, computed as least
/// fixed points.
#[derive(Debug, Clone)]
pub struct MacroAnalysis<'m> {
    macros: &'m MacroTable,
    nullable: HashMap<&'m str, bool>,
    first: HashMap<&'m str, FirstSet>,
}

impl<'m> MacroAnalysis<'m> {
    pub fn new(macros: &'m MacroTable) -> Result<MacroAnalysis<'m>, RegError> {
        macros.check_resolved(&Reg::Epsilon)?;
        let mut analysis = MacroAnalysis {
            macros,
            nullable: macros.iter().map(|(n, _)| (n, false)).collect(),
            first: macros.iter().map(|(n, _)| (n, FirstSet::new())).collect(),
        };
        // Both iterations are monotone over finite lattices.
        loop {
            let mut changed = false;
            for (name, body) in macros.iter() {
                if !analysis.nullable[name] && analysis.nullable_of(body)? {
                    analysis.nullable.insert(name, true);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        loop {
            let mut changed = false;
            for (name, body) in macros.iter() {
                let mut set = FirstSet::new();
                analysis.first_of(body, &mut set)?;
                let current = &analysis.first[name];
                if set.len() != current.len() {
                    analysis.first.insert(name, set);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(analysis)
    }

    pub fn macros(&self) -> &'m MacroTable {
        self.macros
    }

    pub fn nullable_of(&self, r: &Reg) -> Result<bool, RegError> {
        Ok(match r {
            Reg::Epsilon | Reg::Attribute { .. } | Reg::Star { .. } => true,
            Reg::TextSlot(_) | Reg::Include(_) | Reg::Text(_) | Reg::Element { .. } => false,
            Reg::Macro(m) => *self
                .nullable
                .get(m.as_str())
                .ok_or_else(|| RegError::UnknownMacro(m.clone()))?,
            Reg::Or(a, b) => self.nullable_of(a)? || self.nullable_of(b)?,
            Reg::Then(a, b) => self.nullable_of(a)? && self.nullable_of(b)?,
        })
    }

    pub fn first_set(&self, r: &Reg) -> Result<FirstSet, RegError> {
        let mut set = FirstSet::new();
        self.first_of(r, &mut set)?;
        Ok(set)
    }

    fn first_of(&self, r: &Reg, set: &mut FirstSet) -> Result<(), RegError> {
        match r {
            Reg::Epsilon | Reg::Attribute { .. } => {}
            Reg::TextSlot(_) => {
                set.insert(NodeDescriptor::AnyText);
            }
            Reg::Include(_) => {
                set.insert(NodeDescriptor::AnyElement);
            }
            Reg::Text(v) => {
                set.insert(NodeDescriptor::LiteralText(v.clone()));
            }
            Reg::Element { name, .. } => {
                set.insert(NodeDescriptor::Element(name.clone()));
            }
            Reg::Macro(m) => {
                let known = self
                    .first
                    .get(m.as_str())
                    .ok_or_else(|| RegError::UnknownMacro(m.clone()))?;
                set.extend(known.iter().cloned());
            }
            Reg::Or(a, b) => {
                self.first_of(a, set)?;
                self.first_of(b, set)?;
            }
            Reg::Then(h, t) => {
                self.first_of(h, set)?;
                if self.nullable_of(h)? {
                    self.first_of(t, set)?;
                }
            }
            Reg::Star { body, .. } => self.first_of(body, set)?,
        }
        Ok(())
    }
}

/// True iff the empty hedge belongs to the language of `r`.
pub fn nullable(r: &Reg, macros: &MacroTable) -> Result<bool, RegError> {
    MacroAnalysis::new(macros)?.nullable_of(r)
}

/// Descriptors covering the first node of every non-empty member of `r`.
pub fn first_set(r: &Reg, macros: &MacroTable) -> Result<FirstSet, RegError> {
    MacroAnalysis::new(macros)?.first_set(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hedge::Element;

    fn a() -> Reg {
        Reg::element("a", Reg::Epsilon)
    }

    fn b() -> Reg {
        Reg::element("b", Reg::Epsilon)
    }

    fn c() -> Reg {
        Reg::element("c", Reg::Epsilon)
    }

    #[test]
    fn encode_examples() {
        let h: Hedge = vec![
            Node::element("n0"),
            Node::element("n1"),
            Node::element("n2"),
        ]
        .into();
        let expected = Reg::then(
            Reg::element("n0", Reg::Epsilon),
            Reg::then(
                Reg::element("n1", Reg::Epsilon),
                Reg::then(Reg::element("n2", Reg::Epsilon), Reg::Epsilon),
            ),
        );
        assert_eq!(encode_document(&h), expected);
        assert_eq!(encode_document(&Hedge::new()), Reg::Epsilon);
        assert_eq!(
            encode_document(&vec![Node::text("hi")].into()),
            Reg::then(Reg::text("hi"), Reg::Epsilon)
        );
    }

    #[test]
    fn encode_keeps_attributes_and_nesting() {
        let h: Hedge = vec![Element::new("p")
            .with_attribute("k", "v")
            .with_child(Node::text("x"))
            .into()]
        .into();
        let expected = Reg::then(
            Reg::element_with(
                "p",
                vec![("k".into(), "v".into())],
                Reg::then(Reg::text("x"), Reg::Epsilon),
            ),
            Reg::Epsilon,
        );
        assert_eq!(encode_document(&h), expected);
        assert_eq!(normalize(&expected).unwrap(), expected);
    }

    #[test]
    fn normalize_right_associates() {
        let r = Reg::then(Reg::then(a(), b()), c());
        let expected = Reg::then(a(), Reg::then(b(), Reg::then(c(), Reg::Epsilon)));
        assert_eq!(normalize(&r).unwrap(), expected);
    }

    #[test]
    fn normalize_collapses_star() {
        let r = Reg::star(Reg::star(a()));
        assert_eq!(normalize(&r).unwrap(), Reg::star(a()));
        assert_eq!(normalize(&Reg::star(Reg::Epsilon)).unwrap(), Reg::Epsilon);
        let sel = Reg::star(Reg::for_each(a(), "/r/i"));
        assert_eq!(normalize(&sel).unwrap(), Reg::for_each(a(), "/r/i"));
    }

    #[test]
    fn normalize_removes_duplicate_alternatives() {
        let x = Reg::text("x");
        let y = Reg::text("y");
        let r = Reg::or(x.clone(), Reg::or(x.clone(), y.clone()));
        assert_eq!(normalize(&r).unwrap(), Reg::or(x.clone(), y.clone()));
        let nested = Reg::or(Reg::or(y.clone(), x.clone()), y.clone());
        assert_eq!(normalize(&nested).unwrap(), Reg::or(y.clone(), x.clone()));
        assert_eq!(normalize(&Reg::or(x.clone(), x.clone())).unwrap(), x);
    }

    #[test]
    fn normalize_drops_epsilon_heads() {
        let r = Reg::then(Reg::Epsilon, Reg::then(a(), Reg::then(Reg::Epsilon, b())));
        assert_eq!(normalize(&r).unwrap(), Reg::chain([a(), b()]));
        assert_eq!(
            normalize(&Reg::then(Reg::Epsilon, Reg::Epsilon)).unwrap(),
            Reg::Epsilon
        );
    }

    #[test]
    fn collapsed_choice_is_flattened_into_chain() {
        let dup = Reg::or(Reg::chain([a(), b()]), Reg::chain([a(), b()]));
        let r = Reg::then(dup, c());
        assert_eq!(normalize(&r).unwrap(), Reg::chain([a(), b(), c()]));
    }

    #[test]
    fn attribute_placement() {
        let ok = Reg::element(
            "e",
            Reg::chain([Reg::attribute("k", "@k"), Reg::attribute("j", "@j"), a()]),
        );
        assert_eq!(normalize(&ok).unwrap(), ok);
        let bare = Reg::element("e", Reg::attribute("k", "@k"));
        assert!(normalize(&bare).is_ok());

        for bad in [
            Reg::attribute("k", "q"),
            Reg::star(Reg::attribute("k", "q")),
            Reg::element("e", Reg::chain([a(), Reg::attribute("k", "q")])),
            Reg::element("e", Reg::or(Reg::attribute("k", "q"), a())),
            Reg::element(
                "e",
                Reg::chain([Reg::attribute("k", "q"), Reg::attribute("k", "r")]),
            ),
            Reg::element_with(
                "e",
                vec![("k".into(), "1".into())],
                Reg::chain([Reg::attribute("k", "q")]),
            ),
            Reg::element_with(
                "e",
                vec![("k".into(), "1".into()), ("k".into(), "2".into())],
                Reg::Epsilon,
            ),
        ] {
            assert!(
                matches!(normalize(&bad), Err(RegError::IllegalCombination(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn normalize_leaves_macros_alone() {
        let r = Reg::then(Reg::call("m"), Reg::Epsilon);
        assert_eq!(normalize(&r).unwrap(), r);
    }

    #[test]
    fn canonical_eq_examples() {
        let left = Reg::then(Reg::then(a(), b()), c());
        let right = Reg::then(a(), Reg::then(b(), c()));
        assert!(canonical_eq(&left, &right).unwrap());
        assert!(!canonical_eq(&Reg::star(a()), &a()).unwrap());
        assert!(canonical_eq(&left, &left).unwrap());
        assert!(canonical_eq(&Reg::for_each(a(), "x"), &Reg::star(a())).unwrap());
        let attrs1 = Reg::element_with(
            "e",
            vec![("x".into(), "1".into()), ("y".into(), "2".into())],
            Reg::Epsilon,
        );
        let attrs2 = Reg::element_with(
            "e",
            vec![("y".into(), "2".into()), ("x".into(), "1".into())],
            Reg::Epsilon,
        );
        assert!(canonical_eq(&attrs1, &attrs2).unwrap());
        assert!(canonical_eq(&Reg::attribute("k", "q"), &a()).is_err());
    }

    #[test]
    fn nullable_examples() {
        let m = MacroTable::new();
        assert!(nullable(&Reg::Epsilon, &m).unwrap());
        assert!(nullable(&Reg::star(a()), &m).unwrap());
        assert!(!nullable(&a(), &m).unwrap());
        assert!(!nullable(&Reg::text(""), &m).unwrap());
        assert!(nullable(&Reg::or(a(), Reg::Epsilon), &m).unwrap());
        assert!(!nullable(&Reg::then(Reg::Epsilon, a()), &m).unwrap());
        assert_eq!(
            nullable(&Reg::call("nope"), &m),
            Err(RegError::UnknownMacro("nope".into()))
        );
    }

    #[test]
    fn recursive_macro_nullability() {
        let mut m = MacroTable::new();
        // m = a m | Epsilon
        m.define(
            "list",
            Reg::or(Reg::chain([a(), Reg::call("list")]), Reg::Epsilon),
        )
        .unwrap();
        // loop = loop a  (empty language)
        m.define("loop", Reg::chain([Reg::call("loop"), a()]))
            .unwrap();
        // via = loop | list
        m.define("via", Reg::or(Reg::call("loop"), Reg::call("list")))
            .unwrap();
        assert!(nullable(&Reg::call("list"), &m).unwrap());
        assert!(!nullable(&Reg::call("loop"), &m).unwrap());
        assert!(nullable(&Reg::call("via"), &m).unwrap());
        let first = first_set(&Reg::call("via"), &m).unwrap();
        assert_eq!(first, [NodeDescriptor::Element("a".into())].into());
    }

    #[test]
    fn first_set_examples() {
        let m = MacroTable::new();
        assert_eq!(
            first_set(&Reg::then(a(), b()), &m).unwrap(),
            [NodeDescriptor::Element("a".into())].into()
        );
        assert_eq!(
            first_set(&Reg::or(Reg::text("x"), a()), &m).unwrap(),
            [
                NodeDescriptor::LiteralText("x".into()),
                NodeDescriptor::Element("a".into())
            ]
            .into()
        );
        assert_eq!(
            first_set(&Reg::then(Reg::star(a()), b()), &m).unwrap(),
            [
                NodeDescriptor::Element("a".into()),
                NodeDescriptor::Element("b".into())
            ]
            .into()
        );
        assert_eq!(
            first_set(&Reg::chain([Reg::text_slot("q"), Reg::include("q")]), &m).unwrap(),
            [NodeDescriptor::AnyText].into()
        );
        assert_eq!(
            first_set(&Reg::include("q"), &m).unwrap(),
            [NodeDescriptor::AnyElement].into()
        );
    }

    #[test]
    fn dependency_order_lists_callees_first() {
        let mut m = MacroTable::new();
        m.define("top", Reg::chain([Reg::call("mid"), Reg::call("top")]))
            .unwrap();
        m.define("mid", Reg::chain([Reg::call("leaf")])).unwrap();
        m.define("leaf", a()).unwrap();
        m.define("unused", a()).unwrap();
        assert_eq!(m.dependency_order(["top"]), vec!["leaf", "mid", "top"]);
    }

    #[test]
    fn display_uses_term_syntax() {
        let r = Reg::element("a", Reg::then(Reg::text_slot("/r/n"), Reg::Epsilon));
        assert_eq!(r.to_string(), r#"ElR "a" [] (Then (TextR "/r/n") Epsilon)"#);
    }
}
