//! Template instantiation: fills a template's slots from a repository,
//! traversing the template top-down.
//!
//! A slot whose query selects nothing is staged: it is written back as its
//! own `xtl:` tag so the output is again a template. Staged output that
//! calls macros carries their definitions as leading children of the root.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::hedge::{Element, Hedge, Node};
use crate::reg::{MacroTable, Reg, RegError};
use crate::repo::{eval_query, parse_query, Context, Query, QueryError, Repository};
use crate::xtl::{item_node, macro_definitions, XtlError, PREFIX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("macro {name:?} exceeds the nesting limit of {limit}")]
    RecursionLimit { name: String, limit: usize },
    #[error("{path}: query {query:?} selects nothing")]
    Unsatisfied { query: String, path: String },
    #[error("max-macro-depth must be at least 1")]
    InvalidSettings,
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Reg(#[from] RegError),
    #[error(transparent)]
    Xtl(#[from] XtlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionSettings {
    pub max_macro_depth: usize,
    /// When false, any slot that would be staged is an error instead.
    pub staging: bool,
}

impl Default for ExpansionSettings {
    fn default() -> ExpansionSettings {
        ExpansionSettings {
            max_macro_depth: 256,
            staging: true,
        }
    }
}

/// A slot left unexpanded: its query and where it sits in the template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagingEvent {
    pub query: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub hedge: Hedge,
    pub staged: Vec<StagingEvent>,
}

pub fn expand<R: Repository>(
    entry: &Reg,
    macros: &MacroTable,
    repo: &R,
    settings: ExpansionSettings,
) -> Result<Hedge, ExpandError> {
    expand_detailed(entry, macros, repo, settings).map(|e| e.hedge)
}

pub fn expand_detailed<R: Repository>(
    entry: &Reg,
    macros: &MacroTable,
    repo: &R,
    settings: ExpansionSettings,
) -> Result<Expansion, ExpandError> {
    if settings.max_macro_depth == 0 {
        return Err(ExpandError::InvalidSettings);
    }
    macros.check_resolved(entry)?;
    let mut expander = Expander {
        macros,
        repo,
        settings,
        depth: 0,
        path: Vec::new(),
        queries: HashMap::new(),
    };
    let roots = repo.roots();
    let mut out = Vec::new();
    let mut trace = Trace::default();
    expander.expand(entry, &roots, &mut out, &mut trace)?;

    if let Some(first) = trace.events.first() {
        if !settings.staging {
            return Err(ExpandError::Unsatisfied {
                query: first.query.clone(),
                path: first.path.clone(),
            });
        }
    }
    if !trace.calls.is_empty() {
        let defs = macro_definitions(macros, trace.calls.iter().map(String::as_str))?;
        match out.as_mut_slice() {
            [Node::Element(root)] => {
                let children = std::mem::take(&mut root.children);
                root.children = defs.into_iter().chain(children).collect();
            }
            _ => {
                out.splice(0..0, defs);
            }
        }
    }
    Ok(Expansion {
        hedge: out.into(),
        staged: trace.events,
    })
}

/// True iff no `xtl:` element occurs anywhere in the hedge.
pub fn is_fully_expanded(hedge: &Hedge) -> bool {
    hedge.iter().all(|node| match node {
        Node::Text(_) => true,
        Node::Element(e) => !e.name.starts_with(PREFIX) && is_fully_expanded(&e.children),
    })
}

#[derive(Debug, Default)]
struct Trace {
    events: Vec<StagingEvent>,
    /// Macros called from staged output.
    calls: BTreeSet<String>,
}

impl Trace {
    fn append(&mut self, other: Trace) {
        self.events.extend(other.events);
        self.calls.extend(other.calls);
    }
}

struct Expander<'a, R: Repository> {
    macros: &'a MacroTable,
    repo: &'a R,
    settings: ExpansionSettings,
    depth: usize,
    path: Vec<String>,
    queries: HashMap<String, Query>,
}

impl<'a, R: Repository> Expander<'a, R> {
    fn select(&mut self, query: &str, ctx: &[R::Node]) -> Result<Vec<R::Node>, ExpandError> {
        if !self.queries.contains_key(query) {
            self.queries.insert(query.to_owned(), parse_query(query)?);
        }
        let parsed = &self.queries[query];
        Ok(eval_query(self.repo, &Context::new(ctx.to_vec()), parsed))
    }

    fn stage(
        &self,
        r: &Reg,
        query: &str,
        out: &mut Vec<Node>,
        trace: &mut Trace,
    ) -> Result<(), ExpandError> {
        let node = item_node(r)?;
        let tag = node.as_element().map_or("", |e| e.name.as_str());
        trace.events.push(StagingEvent {
            query: query.to_owned(),
            path: format!(
                "/{}",
                self.path
                    .iter()
                    .chain([&tag.to_owned()])
                    .cloned()
                    .collect::<Vec<_>>()
                    .join("/")
            ),
        });
        trace
            .calls
            .extend(r.macro_calls().into_iter().map(str::to_owned));
        out.push(node);
        Ok(())
    }

    fn expand(
        &mut self,
        r: &Reg,
        ctx: &[R::Node],
        out: &mut Vec<Node>,
        trace: &mut Trace,
    ) -> Result<(), ExpandError> {
        match r {
            Reg::Epsilon => {}
            Reg::Text(v) => out.push(Node::Text(v.clone())),
            Reg::Then(..) => {
                for item in r.chain_items() {
                    self.expand(item, ctx, out, trace)?;
                }
            }
            Reg::TextSlot(q) => match self.select(q, ctx)?.first() {
                Some(&n) => out.push(Node::Text(self.repo.string_of(n))),
                None => self.stage(r, q, out, trace)?,
            },
            Reg::Include(q) => {
                let selected = self.select(q, ctx)?;
                match selected.into_iter().find_map(|n| self.repo.fragment(n)) {
                    Some(fragment) => out.push(fragment),
                    None => self.stage(r, q, out, trace)?,
                }
            }
            Reg::Element {
                name,
                attributes,
                content,
            } => {
                self.path.push(name.clone());
                let result = self.element(name, attributes, content, ctx, trace);
                self.path.pop();
                out.push(Node::Element(result?));
            }
            Reg::Attribute { name, .. } => {
                return Err(RegError::IllegalCombination(format!(
                    "attribute slot {name:?} outside the start of element content"
                ))
                .into())
            }
            Reg::Star { selector: None, .. } => {
                self.stage(r, "", out, trace)?;
            }
            Reg::Star {
                body,
                selector: Some(q),
            } => {
                let selected = self.select(q, ctx)?;
                if selected.is_empty() {
                    self.stage(r, q, out, trace)?;
                }
                for n in selected {
                    self.expand(body, &[n], out, trace)?;
                }
            }
            Reg::Or(first, second) => {
                let mut first_out = Vec::new();
                let mut first_trace = Trace::default();
                self.expand(first, ctx, &mut first_out, &mut first_trace)?;
                if first_trace.events.is_empty() {
                    out.extend(first_out);
                    return Ok(());
                }
                let mut second_out = Vec::new();
                let mut second_trace = Trace::default();
                self.expand(second, ctx, &mut second_out, &mut second_trace)?;
                if second_trace.events.is_empty() {
                    out.extend(second_out);
                } else {
                    out.extend(first_out);
                    trace.append(first_trace);
                }
            }
            Reg::Macro(m) => {
                if self.depth >= self.settings.max_macro_depth {
                    return Err(ExpandError::RecursionLimit {
                        name: m.clone(),
                        limit: self.settings.max_macro_depth,
                    });
                }
                let body = self.macros.lookup(m)?;
                self.depth += 1;
                let result = self.expand(body, ctx, out, trace);
                self.depth -= 1;
                result?;
            }
        }
        Ok(())
    }

    fn element(
        &mut self,
        name: &str,
        attributes: &[(String, String)],
        content: &Reg,
        ctx: &[R::Node],
        trace: &mut Trace,
    ) -> Result<Element, ExpandError> {
        let mut element = Element::new(name);
        element.attributes = attributes.to_vec();
        let mut children = Vec::new();
        let (slots, rest) = content.split_attribute_prefix();
        for (attr, query) in slots {
            match self.select(query, ctx)?.first() {
                Some(&n) => {
                    let value = self.repo.string_of(n);
                    match element.attributes.iter_mut().find(|(a, _)| a == attr) {
                        Some(existing) => existing.1 = value,
                        None => element.attributes.push((attr.to_owned(), value)),
                    }
                }
                None => self.stage(&Reg::attribute(attr, query), query, &mut children, trace)?,
            }
        }
        self.expand(rest, ctx, &mut children, trace)?;
        element.children = children.into();
        Ok(element)
    }
}
