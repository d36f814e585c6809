//! XTL surface syntax: XML documents with reserved `xtl:` tags.
//!
//! | tag                                   | term                          |
//! |---------------------------------------|-------------------------------|
//! | `<xtl:text select="Q"/>`              | `TextSlot Q`                  |
//! | `<xtl:attribute name="N" select="Q"/>`| `Attribute N Q`               |
//! | `<xtl:include select="Q"/>`           | `Include Q`                   |
//! | `<xtl:call-macro name="M"/>`          | `Macro M`                     |
//! | `<xtl:macro name="M">…</xtl:macro>`   | macro table entry             |
//! | `<xtl:for-each select="Q">…`          | `Star (…) Q`, select optional |
//! | `<xtl:choice>…</xtl:choice>`          | `Or` over the children        |
//! | `<xtl:sequence>…</xtl:sequence>`      | the children as one sequence  |
//! | `<xtl:template>…</xtl:template>`      | root wrapper for a sequence   |
//!
//! Anything else is literal. Macros are global to the document and must be
//! defined before they are called, in document order.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::hedge::{is_valid_name, Element, Hedge, Node};
use crate::reg::{normalize, MacroTable, Reg, RegError};

pub const PREFIX: &str = "xtl:";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XtlError {
    #[error("document must have exactly one root element")]
    NotSingleRoot,
    #[error("<{0}> cannot be the root element")]
    RootTag(String),
    #[error("unknown tag <{0}>")]
    UnknownTag(String),
    #[error("<{tag}> requires attribute {attribute:?}")]
    MissingAttribute {
        tag: String,
        attribute: &'static str,
    },
    #[error("<{tag}> does not take attribute {attribute:?}")]
    UnexpectedAttribute { tag: String, attribute: String },
    #[error("<{0}> must be empty")]
    UnexpectedContent(String),
    #[error("<xtl:choice> needs at least two alternatives, found {0}")]
    ChoiceArity(usize),
    #[error("macro {0:?} is called before its definition")]
    UndefinedMacro(String),
    #[error("not serializable: {0}")]
    NotSerializable(String),
    #[error(transparent)]
    Reg(#[from] RegError),
}

/// Reads an XTL document into its entry term and macro table. Both are
/// returned in canonical form.
pub fn parse_xtl(doc: &Hedge) -> Result<(Reg, MacroTable), XtlError> {
    let root = match doc.nodes() {
        [Node::Element(root)] => root,
        _ => return Err(XtlError::NotSingleRoot),
    };
    let mut reader = Reader::default();
    let entry = if root.name == "xtl:template" {
        allow_attributes(root, &[])?;
        Reg::chain(reader.children(&root.children)?)
    } else if root.name.starts_with(PREFIX) {
        return Err(XtlError::RootTag(root.name.clone()));
    } else {
        reader.element(root)?
    };
    let entry = normalize(&entry)?;
    let mut macros = MacroTable::new();
    for (name, body) in reader.bodies {
        macros.define(name, normalize(&body)?)?;
    }
    macros.check_resolved(&entry)?;
    Ok((entry, macros))
}

#[derive(Default)]
struct Reader {
    defined: BTreeSet<String>,
    bodies: Vec<(String, Reg)>,
}

impl Reader {
    fn children(&mut self, children: &Hedge) -> Result<Vec<Reg>, XtlError> {
        let mut items = Vec::with_capacity(children.len());
        for child in children {
            match child {
                Node::Element(e) if e.name == "xtl:macro" => self.definition(e)?,
                _ => items.push(self.node(child)?),
            }
        }
        Ok(items)
    }

    fn definition(&mut self, e: &Element) -> Result<(), XtlError> {
        allow_attributes(e, &["name"])?;
        let name = required(e, "name")?;
        if !self.defined.insert(name.clone()) {
            return Err(RegError::DuplicateMacro(name).into());
        }
        let body = Reg::chain(self.children(&e.children)?);
        self.bodies.push((name, body));
        Ok(())
    }

    fn node(&mut self, node: &Node) -> Result<Reg, XtlError> {
        match node {
            Node::Text(t) => Ok(Reg::Text(t.clone())),
            Node::Element(e) => self.element(e),
        }
    }

    fn element(&mut self, e: &Element) -> Result<Reg, XtlError> {
        let Some(command) = e.name.strip_prefix(PREFIX) else {
            return Ok(Reg::Element {
                name: e.name.clone(),
                attributes: e.attributes.clone(),
                content: Box::new(Reg::chain(self.children(&e.children)?)),
            });
        };
        match command {
            "text" => {
                empty_command(e, &["select"])?;
                Ok(Reg::TextSlot(required(e, "select")?))
            }
            "include" => {
                empty_command(e, &["select"])?;
                Ok(Reg::Include(required(e, "select")?))
            }
            "attribute" => {
                empty_command(e, &["name", "select"])?;
                Ok(Reg::Attribute {
                    name: required(e, "name")?,
                    query: required(e, "select")?,
                })
            }
            "call-macro" => {
                empty_command(e, &["name"])?;
                let name = required(e, "name")?;
                if !self.defined.contains(&name) {
                    return Err(XtlError::UndefinedMacro(name));
                }
                Ok(Reg::Macro(name))
            }
            "for-each" => {
                allow_attributes(e, &["select"])?;
                Ok(Reg::Star {
                    body: Box::new(Reg::chain(self.children(&e.children)?)),
                    selector: e.attribute("select").map(str::to_owned),
                })
            }
            "choice" => {
                allow_attributes(e, &[])?;
                let alternatives = self.children(&e.children)?;
                if alternatives.len() < 2 {
                    return Err(XtlError::ChoiceArity(alternatives.len()));
                }
                Ok(Reg::choice(alternatives))
            }
            "sequence" => {
                allow_attributes(e, &[])?;
                Ok(Reg::chain(self.children(&e.children)?))
            }
            _ => Err(XtlError::UnknownTag(e.name.clone())),
        }
    }
}

fn allow_attributes(e: &Element, allowed: &[&str]) -> Result<(), XtlError> {
    match e
        .attributes
        .iter()
        .find(|(n, _)| !allowed.contains(&n.as_str()))
    {
        Some((n, _)) => Err(XtlError::UnexpectedAttribute {
            tag: e.name.clone(),
            attribute: n.clone(),
        }),
        None => Ok(()),
    }
}

fn required(e: &Element, attribute: &'static str) -> Result<String, XtlError> {
    e.attribute(attribute)
        .map(str::to_owned)
        .ok_or_else(|| XtlError::MissingAttribute {
            tag: e.name.clone(),
            attribute,
        })
}

fn empty_command(e: &Element, allowed: &[&str]) -> Result<(), XtlError> {
    if !e.children.is_empty() {
        return Err(XtlError::UnexpectedContent(e.name.clone()));
    }
    allow_attributes(e, allowed)
}

/// Writes an entry term and its macros back as an XTL document. Macro
/// definitions become the leading children of the root.
pub fn serialize_xtl(entry: &Reg, macros: &MacroTable) -> Result<Hedge, XtlError> {
    let mut children = macro_definitions(macros, macros.iter().map(|(n, _)| n))?;
    let root = match entry {
        Reg::Element {
            name,
            attributes,
            content,
        } => {
            let mut root = literal_element(name, attributes)?;
            children.extend(sequence_nodes(content)?);
            root.children = children.into();
            root
        }
        Reg::Then(..) | Reg::Epsilon => {
            children.extend(sequence_nodes(entry)?);
            Element::new("xtl:template").with_children(children)
        }
        other => {
            return Err(XtlError::NotSerializable(format!(
                "{} cannot be the root of a document",
                constructor_name(other)
            )))
        }
    };
    Ok(vec![Node::Element(root)].into())
}

/// `xtl:macro` definitions for the macros reachable from `roots`, callees
/// first.
pub fn macro_definitions<'a>(
    macros: &MacroTable,
    roots: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<Node>, XtlError> {
    let order = macros.dependency_order(roots);
    let mut out = Vec::with_capacity(order.len());
    for (i, name) in order.iter().enumerate() {
        let body = macros.lookup(name)?;
        if let Some(later) = body
            .macro_calls()
            .into_iter()
            .find(|c| c != name && !order[..i].contains(c))
        {
            return Err(XtlError::NotSerializable(format!(
                "macros {name:?} and {later:?} call each other"
            )));
        }
        out.push(Node::Element(
            Element::new("xtl:macro")
                .with_attribute("name", *name)
                .with_children(sequence_nodes(body)?),
        ));
    }
    Ok(out)
}

/// Surface nodes of a sequence term (`Then` chain or `Epsilon`).
pub fn sequence_nodes(r: &Reg) -> Result<Vec<Node>, XtlError> {
    match r {
        Reg::Then(..) | Reg::Epsilon => r.chain_items().map(item_node).collect(),
        other => Err(XtlError::NotSerializable(format!(
            "expected a sequence, found {}",
            constructor_name(other)
        ))),
    }
}

/// Surface node of a single sequence item.
pub fn item_node(r: &Reg) -> Result<Node, XtlError> {
    let command = |tag: &str| Element::new(format!("{PREFIX}{tag}"));
    Ok(Node::Element(match r {
        Reg::Text(v) => return Ok(Node::Text(v.clone())),
        Reg::Macro(m) => command("call-macro").with_attribute("name", m),
        Reg::Attribute { name, query } => command("attribute")
            .with_attribute("name", name)
            .with_attribute("select", query),
        Reg::TextSlot(q) => command("text").with_attribute("select", q),
        Reg::Include(q) => command("include").with_attribute("select", q),
        Reg::Element {
            name,
            attributes,
            content,
        } => {
            let mut e = literal_element(name, attributes)?;
            e.children = sequence_nodes(content)?.into();
            e
        }
        Reg::Then(..) | Reg::Epsilon => command("sequence").with_children(sequence_nodes(r)?),
        Reg::Or(..) => {
            let mut e = command("choice");
            let mut rest = r;
            while let Reg::Or(a, b) = rest {
                e.children.push(item_node(a)?);
                rest = b;
            }
            e.children.push(item_node(rest)?);
            e
        }
        Reg::Star { body, selector } => {
            let mut e = command("for-each");
            if let Some(s) = selector {
                e.attributes.push(("select".into(), s.clone()));
            }
            e.with_children(sequence_nodes(body)?)
        }
    }))
}

fn literal_element(name: &str, attributes: &[(String, String)]) -> Result<Element, XtlError> {
    if !is_valid_name(name) || name.starts_with(PREFIX) {
        return Err(XtlError::NotSerializable(format!(
            "{name:?} is not a literal element name"
        )));
    }
    if let Some((n, _)) = attributes.iter().find(|(n, _)| !is_valid_name(n)) {
        return Err(XtlError::NotSerializable(format!(
            "{n:?} is not an attribute name"
        )));
    }
    let mut e = Element::new(name);
    e.attributes = attributes.to_vec();
    Ok(e)
}

fn constructor_name(r: &Reg) -> &'static str {
    match r {
        Reg::Macro(_) => "MacroR",
        Reg::Attribute { .. } => "AttrR",
        Reg::TextSlot(_) => "TextR",
        Reg::Include(_) => "IncludeR",
        Reg::Element { .. } => "ElR",
        Reg::Text(_) => "TxtR",
        Reg::Epsilon => "Epsilon",
        Reg::Or(..) => "Or",
        Reg::Then(..) => "Then",
        Reg::Star { .. } => "Star",
    }
}
