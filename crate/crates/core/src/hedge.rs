//! Unranked ordered trees and hedges (sibling forests) with parsing and
//! serialization for the supported XML subset.
//!
//! The subset has elements, attributes and text. Comments are dropped.
//! CDATA sections, processing instructions, DOCTYPE declarations and
//! namespace declarations are rejected. The `xtl:` prefix is an ordinary
//! part of a name as far as this module is concerned.

use std::fmt;
use std::ops::Deref;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XmlError {
    #[error("{line}:{column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unsupported construct: {construct}")]
    Unsupported {
        line: usize,
        column: usize,
        construct: &'static str,
    },
    #[error("cannot serialize: {0}")]
    Serialize(String),
}

/// A single tree of a hedge.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Element(Element),
    Text(String),
}

#[derive(Debug, Clone)]
pub struct Element {
    pub name: String,
    /// Attributes in document order. Names are unique.
    pub attributes: Vec<(String, String)>,
    pub children: Hedge,
}

/// An ordered, possibly empty sequence of nodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Hedge {
    nodes: Vec<Node>,
}

impl Node {
    pub fn text(value: impl Into<String>) -> Node {
        Node::Text(value.into())
    }

    pub fn element(name: impl Into<String>) -> Node {
        Node::Element(Element::new(name))
    }

    pub fn as_element(&self) -> Option<&Element> {
        match self {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Node::Text(t) => Some(t),
            Node::Element(_) => None,
        }
    }

    /// Number of nodes in this tree, counting the node itself.
    pub fn size(&self) -> usize {
        match self {
            Node::Text(_) => 1,
            Node::Element(e) => 1 + e.children.size(),
        }
    }

    /// Height of the tree: a text node or an empty element has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Node::Text(_) => 1,
            Node::Element(e) => 1 + e.children.depth(),
        }
    }
}

impl From<Element> for Node {
    fn from(e: Element) -> Node {
        Node::Element(e)
    }
}

impl Element {
    pub fn new(name: impl Into<String>) -> Element {
        Element {
            name: name.into(),
            attributes: Vec::new(),
            children: Hedge::new(),
        }
    }

    pub fn with_attribute(mut self, name: impl Into<String>, value: impl Into<String>) -> Element {
        self.attributes.push((name.into(), value.into()));
        self
    }

    pub fn with_child(mut self, child: impl Into<Node>) -> Element {
        self.children.push(child.into());
        self
    }

    pub fn with_children(mut self, children: impl IntoIterator<Item = Node>) -> Element {
        self.children.extend(children);
        self
    }

    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }
}

// Attribute order is not significant.
impl PartialEq for Element {
    fn eq(&self, other: &Element) -> bool {
        self.name == other.name
            && attributes_eq(&self.attributes, &other.attributes)
            && self.children == other.children
    }
}

/// Compares two attribute lists as sets.
pub fn attributes_eq(a: &[(String, String)], b: &[(String, String)]) -> bool {
    a.len() == b.len() && a.iter().all(|pair| b.contains(pair))
}

impl Hedge {
    pub fn new() -> Hedge {
        Hedge { nodes: Vec::new() }
    }

    pub fn push(&mut self, node: Node) {
        self.nodes.push(node);
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Node> {
        self.nodes
    }

    /// Hedge concatenation `x · y`.
    pub fn concat(&self, other: &Hedge) -> Hedge {
        let mut nodes = Vec::with_capacity(self.len() + other.len());
        nodes.extend_from_slice(&self.nodes);
        nodes.extend_from_slice(&other.nodes);
        Hedge { nodes }
    }

    /// Total number of nodes in all trees.
    pub fn size(&self) -> usize {
        self.nodes.iter().map(Node::size).sum()
    }

    /// Maximum tree depth, 0 for the empty hedge.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(Node::depth).max().unwrap_or(0)
    }
}

impl Deref for Hedge {
    type Target = [Node];

    fn deref(&self) -> &[Node] {
        &self.nodes
    }
}

impl From<Vec<Node>> for Hedge {
    fn from(nodes: Vec<Node>) -> Hedge {
        Hedge { nodes }
    }
}

impl FromIterator<Node> for Hedge {
    fn from_iter<I: IntoIterator<Item = Node>>(iter: I) -> Hedge {
        Hedge {
            nodes: iter.into_iter().collect(),
        }
    }
}

impl Extend<Node> for Hedge {
    fn extend<I: IntoIterator<Item = Node>>(&mut self, iter: I) {
        self.nodes.extend(iter)
    }
}

impl IntoIterator for Hedge {
    type Item = Node;
    type IntoIter = std::vec::IntoIter<Node>;

    fn into_iter(self) -> Self::IntoIter {
        self.nodes.into_iter()
    }
}

impl<'a> IntoIterator for &'a Hedge {
    type Item = &'a Node;
    type IntoIter = std::slice::Iter<'a, Node>;

    fn into_iter(self) -> Self::IntoIter {
        self.nodes.iter()
    }
}

impl fmt::Display for Hedge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for node in &self.nodes {
            write_node_unchecked(&mut out, node);
        }
        f.write_str(&out)
    }
}

/// Concatenated text content of a node, in document order.
pub fn string_value(node: &Node) -> String {
    let mut out = String::new();
    collect_text(node, &mut out);
    out
}

fn collect_text(node: &Node, out: &mut String) {
    match node {
        Node::Text(t) => out.push_str(t),
        Node::Element(e) => e.children.iter().for_each(|c| collect_text(c, out)),
    }
}

/// Element and attribute names: non-empty, no whitespace, no markup
/// delimiters, no quotes.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '&' | '/' | '=' | '"' | '\''))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Keep whitespace-only text nodes instead of dropping them.
    pub preserve_space: bool,
}

/// Parses a document with exactly one root element.
pub fn parse_xml(input: &[u8]) -> Result<Hedge, XmlError> {
    parse_xml_with(input, ParseOptions::default())
}

pub fn parse_xml_with(input: &[u8], options: ParseOptions) -> Result<Hedge, XmlError> {
    Parser::new(input, options)?.run(true)
}

/// Parses a hedge: any number of top-level elements and text nodes.
pub fn parse_fragment(input: &[u8], options: ParseOptions) -> Result<Hedge, XmlError> {
    Parser::new(input, options)?.run(false)
}

struct Parser<'a> {
    text: &'a str,
    reader: Reader<&'a [u8]>,
    options: ParseOptions,
}

impl<'a> Parser<'a> {
    fn new(input: &'a [u8], options: ParseOptions) -> Result<Parser<'a>, XmlError> {
        let text = std::str::from_utf8(input).map_err(|e| {
            let (line, column) = line_column(&String::from_utf8_lossy(input), e.valid_up_to());
            XmlError::Malformed {
                line,
                column,
                message: "input is not valid UTF-8".into(),
            }
        })?;
        let mut reader = Reader::from_str(text);
        let config = reader.config_mut();
        config.check_end_names = true;
        config.check_comments = true;
        config.expand_empty_elements = false;
        config.trim_text(false);
        Ok(Parser {
            text,
            reader,
            options,
        })
    }

    fn malformed(&self, offset: u64, message: impl Into<String>) -> XmlError {
        let (line, column) = line_column(self.text, offset as usize);
        XmlError::Malformed {
            line,
            column,
            message: message.into(),
        }
    }

    fn unsupported(&self, offset: u64, construct: &'static str) -> XmlError {
        let (line, column) = line_column(self.text, offset as usize);
        XmlError::Unsupported {
            line,
            column,
            construct,
        }
    }

    fn run(mut self, single_root: bool) -> Result<Hedge, XmlError> {
        let mut stack: Vec<Element> = Vec::new();
        let mut top = Hedge::new();
        let mut seen_root = false;
        loop {
            let start = self.reader.buffer_position();
            let event = match self.reader.read_event() {
                Ok(event) => event,
                Err(e) => return Err(self.malformed(self.reader.error_position(), e.to_string())),
            };
            match event {
                Event::Start(tag) => {
                    let element = self.element(&tag, start)?;
                    if stack.is_empty() {
                        if single_root && seen_root {
                            return Err(self.malformed(start, "more than one root element"));
                        }
                        seen_root = true;
                    }
                    stack.push(element);
                }
                Event::Empty(tag) => {
                    let element = self.element(&tag, start)?;
                    if stack.is_empty() {
                        if single_root && seen_root {
                            return Err(self.malformed(start, "more than one root element"));
                        }
                        seen_root = true;
                    }
                    self.append(&mut stack, &mut top, Node::Element(element));
                }
                Event::End(_) => {
                    let mut element = stack
                        .pop()
                        .ok_or_else(|| self.malformed(start, "unexpected end tag"))?;
                    self.finish(&mut element.children);
                    self.append(&mut stack, &mut top, Node::Element(element));
                }
                Event::Text(t) => {
                    let value = t
                        .unescape()
                        .map_err(|e| self.malformed(start, e.to_string()))?
                        .into_owned();
                    if stack.is_empty() {
                        if !value.trim().is_empty() {
                            if single_root {
                                return Err(self.malformed(start, "text outside the root element"));
                            }
                            self.append(&mut stack, &mut top, Node::Text(value));
                        }
                    } else {
                        self.append(&mut stack, &mut top, Node::Text(value));
                    }
                }
                Event::Comment(_) | Event::Decl(_) => {}
                Event::CData(_) => return Err(self.unsupported(start, "CDATA section")),
                Event::PI(_) => return Err(self.unsupported(start, "processing instruction")),
                Event::DocType(_) => return Err(self.unsupported(start, "DOCTYPE declaration")),
                Event::Eof => break,
            }
        }
        if let Some(open) = stack.last() {
            return Err(self.malformed(
                self.text.len() as u64,
                format!("unclosed element <{}>", open.name),
            ));
        }
        if single_root && !seen_root {
            return Err(self.malformed(self.text.len() as u64, "no root element"));
        }
        self.finish(&mut top);
        Ok(top)
    }

    fn element(&self, tag: &BytesStart<'_>, offset: u64) -> Result<Element, XmlError> {
        let name = std::str::from_utf8(tag.name().as_ref())
            .map_err(|_| self.malformed(offset, "element name is not UTF-8"))?
            .to_owned();
        if !is_valid_name(&name) {
            return Err(self.malformed(offset, format!("illegal element name {name:?}")));
        }
        let mut element = Element::new(name);
        let mut attributes = tag.attributes();
        attributes.with_checks(true);
        for attr in attributes {
            let attr = attr.map_err(|e| self.malformed(offset, e.to_string()))?;
            let key = std::str::from_utf8(attr.key.as_ref())
                .map_err(|_| self.malformed(offset, "attribute name is not UTF-8"))?;
            if key == "xmlns:xtl" {
                continue;
            }
            if key == "xmlns" || key.starts_with("xmlns:") {
                return Err(self.unsupported(offset, "namespace declaration"));
            }
            if !is_valid_name(key) {
                return Err(self.malformed(offset, format!("illegal attribute name {key:?}")));
            }
            let value = attr
                .unescape_value()
                .map_err(|e| self.malformed(offset, e.to_string()))?
                .into_owned();
            element.attributes.push((key.to_owned(), value));
        }
        Ok(element)
    }

    fn append(&self, stack: &mut [Element], top: &mut Hedge, node: Node) {
        let target = match stack.last_mut() {
            Some(parent) => &mut parent.children,
            None => top,
        };
        // Comments split text runs; adjacent pieces become one node again.
        if let (Node::Text(more), Some(Node::Text(prev))) = (&node, target.nodes.last_mut()) {
            prev.push_str(more);
            return;
        }
        target.push(node);
    }

    fn finish(&self, children: &mut Hedge) {
        if !self.options.preserve_space {
            children
                .nodes
                .retain(|n| !matches!(n, Node::Text(t) if t.trim().is_empty()));
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text.as_bytes()[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = before
        .iter()
        .rposition(|&b| b == b'\n')
        .map_or(0, |p| p + 1);
    let column = String::from_utf8_lossy(&before[line_start..])
        .chars()
        .count()
        + 1;
    (line, column)
}

/// Serializes a hedge as compact UTF-8 markup.
pub fn serialize_xml(hedge: &Hedge) -> Result<String, XmlError> {
    let mut out = String::new();
    for node in hedge {
        check_node(node)?;
        write_node_unchecked(&mut out, node);
    }
    Ok(out)
}

fn check_node(node: &Node) -> Result<(), XmlError> {
    let Node::Element(e) = node else {
        return Ok(());
    };
    if !is_valid_name(&e.name) {
        return Err(XmlError::Serialize(format!(
            "illegal element name {:?}",
            e.name
        )));
    }
    for (i, (name, _)) in e.attributes.iter().enumerate() {
        if !is_valid_name(name) {
            return Err(XmlError::Serialize(format!(
                "illegal attribute name {name:?}"
            )));
        }
        if e.attributes[..i].iter().any(|(n, _)| n == name) {
            return Err(XmlError::Serialize(format!(
                "duplicate attribute {name:?} on <{}>",
                e.name
            )));
        }
    }
    e.children.iter().try_for_each(check_node)
}

fn write_node_unchecked(out: &mut String, node: &Node) {
    match node {
        Node::Text(t) => escape_into(out, t, false),
        Node::Element(e) => {
            out.push('<');
            out.push_str(&e.name);
            for (name, value) in &e.attributes {
                out.push(' ');
                out.push_str(name);
                out.push_str("=\"");
                escape_into(out, value, true);
                out.push('"');
            }
            if e.children.is_empty() {
                out.push_str("/>");
            } else {
                out.push('>');
                for child in &e.children {
                    write_node_unchecked(out, child);
                }
                out.push_str("</");
                out.push_str(&e.name);
                out.push('>');
            }
        }
    }
}

fn escape_into(out: &mut String, s: &str, attribute: bool) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' if attribute => out.push_str("&quot;"),
            '\'' if attribute => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
}
