//! Schema validation: decides whether a document belongs to the language of
//! a template read as a regular hedge grammar.
//!
//! Sequences are split nondeterministically. Candidate split points are
//! pruned by one node of lookahead against first sets, and every
//! (schema node, hedge, slice) judgment is memoized, which also makes
//! recursive macros terminate.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use crate::hedge::{Element, Hedge, Node};
use crate::reg::{
    check_placement, first_set_admits, FirstSet, MacroAnalysis, MacroTable, Reg, RegError,
};

/// One mismatch. `path` lists (child index, node name) from the top-level
/// hedge down to the offending node, or to its parent when the document
/// ended early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub path: Vec<(usize, String)>,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid: bool,
    /// Mismatches at the furthest document position any attempt reached.
    pub failures: Vec<Failure>,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str("/")?;
        }
        for (index, name) in &self.path {
            write!(f, "/{name}[{index}]")?;
        }
        write!(f, ": expected {}, found {}", self.expected, self.found)
    }
}

/// Renders a report: `valid`, or one line per failure.
pub fn explain(report: &ValidationReport) -> String {
    if report.valid {
        return "valid".to_owned();
    }
    report
        .failures
        .iter()
        .map(Failure::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn validate(
    schema: &Reg,
    macros: &MacroTable,
    doc: &Hedge,
) -> Result<ValidationReport, RegError> {
    macros.check_resolved(schema)?;
    check_placement(schema)?;
    for (_, body) in macros.iter() {
        check_placement(body)?;
    }
    let analysis = MacroAnalysis::new(macros)?;
    let mut matcher = Matcher {
        analysis: &analysis,
        lookahead: HashMap::new(),
        memo: HashMap::new(),
        log: Vec::new(),
        ancestors: Vec::new(),
        furthest: None,
    };
    let valid = matcher.matches(schema, doc, 0, doc.len());
    if valid {
        return Ok(ValidationReport {
            valid,
            failures: Vec::new(),
        });
    }
    let mut failures = matcher.failures();
    if failures.is_empty() {
        failures.push(Failure {
            path: Vec::new(),
            expected: "a finite derivation".to_owned(),
            found: "only cyclic macro unfoldings".to_owned(),
        });
    }
    Ok(ValidationReport { valid, failures })
}

/// Reference decision procedure: plain backtracking over every split point,
/// without lookahead or memoization. A branch fails once it would unfold
/// more than `depth_bound` nested macro calls, or re-enter a macro on the
/// slice it is already matching (a minimal derivation never does).
pub fn oracle_validate(schema: &Reg, macros: &MacroTable, doc: &Hedge, depth_bound: usize) -> bool {
    Oracle {
        macros,
        active: Vec::new(),
    }
    .matches(schema, doc, 0, depth_bound)
}

struct Oracle<'m> {
    macros: &'m MacroTable,
    /// Macro calls on the current path: name, element depth, slice.
    active: Vec<(&'m str, usize, *const Node, usize)>,
}

impl<'m> Oracle<'m> {
    fn matches(&mut self, r: &'m Reg, nodes: &[Node], level: usize, budget: usize) -> bool {
        match r {
            Reg::Epsilon | Reg::Attribute { .. } => nodes.is_empty(),
            Reg::Text(v) => matches!(nodes, [Node::Text(t)] if t == v),
            Reg::TextSlot(_) => matches!(nodes, [Node::Text(_)]),
            Reg::Include(_) => matches!(nodes, [Node::Element(_)]),
            Reg::Element {
                name,
                attributes,
                content,
            } => match nodes {
                [Node::Element(e)] => {
                    let (slots, rest) = content.split_attribute_prefix();
                    e.name == *name
                        && attributes.iter().all(|(k, v)| e.attribute(k) == Some(v))
                        && slots.iter().all(|(k, _)| e.attribute(k).is_some())
                        && self.matches(rest, &e.children, level + 1, budget)
                }
                _ => false,
            },
            Reg::Or(a, b) => {
                self.matches(a, nodes, level, budget) || self.matches(b, nodes, level, budget)
            }
            Reg::Then(h, t) => (0..=nodes.len()).any(|k| {
                self.matches(h, &nodes[..k], level, budget)
                    && self.matches(t, &nodes[k..], level, budget)
            }),
            Reg::Star { body, .. } => {
                nodes.is_empty()
                    || (1..=nodes.len()).any(|k| {
                        self.matches(body, &nodes[..k], level, budget)
                            && self.matches(r, &nodes[k..], level, budget)
                    })
            }
            Reg::Macro(m) => {
                let call = (m.as_str(), level, nodes.as_ptr(), nodes.len());
                let Some(body) = self.macros.get(m) else {
                    return false;
                };
                if budget == 0 || self.active.contains(&call) {
                    return false;
                }
                self.active.push(call);
                let ok = self.matches(body, nodes, level, budget - 1);
                self.active.pop();
                ok
            }
        }
    }
}

/// Memo key: schema node, hedge, and slice bounds, by identity.
type Key = (*const Reg, *const Hedge, usize, usize);

#[derive(Debug, Clone, Copy)]
enum Memo {
    Done(bool),
    /// A macro judgment under evaluation; re-entering it assumes `false`.
    Pending {
        read: bool,
    },
}

struct Lookahead {
    nullable: bool,
    first: FirstSet,
}

struct Furthest {
    key: Vec<usize>,
    path: Vec<(usize, String)>,
    found: BTreeSet<(String, String)>,
}

struct Matcher<'a, 's> {
    analysis: &'a MacroAnalysis<'s>,
    lookahead: HashMap<*const Reg, Rc<Lookahead>>,
    memo: HashMap<Key, Memo>,
    log: Vec<Key>,
    ancestors: Vec<(usize, String)>,
    furthest: Option<Furthest>,
}

const END: &str = "end of content";

fn describe(node: Option<&Node>) -> String {
    match node {
        None => END.to_owned(),
        Some(Node::Element(e)) => format!("element <{}>", e.name),
        Some(Node::Text(t)) => format!("text {t:?}"),
    }
}

impl<'a, 's> Matcher<'a, 's> {
    fn lookahead(&mut self, r: &Reg) -> Rc<Lookahead> {
        if let Some(l) = self.lookahead.get(&(r as *const Reg)) {
            return l.clone();
        }
        // Macros were resolved before matching began.
        let l = Rc::new(Lookahead {
            nullable: self.analysis.nullable_of(r).unwrap_or(false),
            first: self.analysis.first_set(r).unwrap_or_default(),
        });
        self.lookahead.insert(r as *const Reg, l.clone());
        l
    }

    fn record(
        &mut self,
        h: &Hedge,
        pos: usize,
        expected: impl IntoIterator<Item = String>,
        found: Option<String>,
    ) {
        let key: Vec<usize> = self
            .ancestors
            .iter()
            .map(|(i, _)| *i)
            .chain([pos])
            .collect();
        if let Some(current) = &self.furthest {
            if key < current.key {
                return;
            }
        }
        let found = found.unwrap_or_else(|| describe(h.get(pos)));
        let fresh = self.furthest.as_ref().is_none_or(|f| key > f.key);
        if fresh {
            let mut path = self.ancestors.clone();
            if let Some(node) = h.get(pos) {
                let name = node.as_element().map_or("text()", |e| e.name.as_str());
                path.push((pos, name.to_owned()));
            }
            self.furthest = Some(Furthest {
                key,
                path,
                found: BTreeSet::new(),
            });
        }
        let furthest = self.furthest.as_mut().expect("set above");
        for e in expected {
            furthest.found.insert((found.clone(), e));
        }
    }

    fn expect_first(&mut self, h: &Hedge, pos: usize, l: &Lookahead, end_ok: bool) {
        let mut expected: Vec<String> = l.first.iter().map(|d| d.to_string()).collect();
        if end_ok {
            expected.push(END.to_owned());
        }
        if expected.is_empty() {
            expected.push("nothing".to_owned());
        }
        self.record(h, pos, expected, None);
    }

    fn failures(&self) -> Vec<Failure> {
        let Some(f) = &self.furthest else {
            return Vec::new();
        };
        let mut grouped: Vec<(String, Vec<String>)> = Vec::new();
        for (found, expected) in &f.found {
            match grouped.last_mut() {
                Some((last, list)) if last == found => list.push(expected.clone()),
                _ => grouped.push((found.clone(), vec![expected.clone()])),
            }
        }
        grouped
            .into_iter()
            .map(|(found, expected)| Failure {
                path: f.path.clone(),
                expected: expected.join(" or "),
                found,
            })
            .collect()
    }

    fn matches(&mut self, r: &Reg, h: &Hedge, s: usize, e: usize) -> bool {
        match r {
            Reg::Epsilon | Reg::Attribute { .. } => {
                if s != e {
                    self.record(h, s, [END.to_owned()], None);
                }
                s == e
            }
            Reg::Text(v) => self.single(
                h,
                s,
                e,
                |n| n.as_text() == Some(v),
                || format!("text {v:?}"),
            ),
            Reg::TextSlot(_) => {
                self.single(h, s, e, |n| n.as_text().is_some(), || "text".to_owned())
            }
            Reg::Include(_) => self.single(
                h,
                s,
                e,
                |n| n.as_element().is_some(),
                || "any element".to_owned(),
            ),
            Reg::Element { .. } | Reg::Or(..) | Reg::Then(..) | Reg::Star { .. } => {
                let key: Key = (r as *const Reg, h as *const Hedge, s, e);
                if let Some(Memo::Done(v)) = self.memo.get(&key) {
                    return *v;
                }
                let v = match r {
                    Reg::Element {
                        name,
                        attributes,
                        content,
                    } => {
                        if s == e {
                            self.record(h, s, [format!("element <{name}>")], None);
                            false
                        } else if e - s > 1 {
                            if self.matches(r, h, s, s + 1) {
                                self.record(h, s + 1, [END.to_owned()], None);
                            }
                            false
                        } else {
                            self.element(name, attributes, content, h, s)
                        }
                    }
                    Reg::Or(a, b) => self.matches(a, h, s, e) || self.matches(b, h, s, e),
                    Reg::Then(head, tail) => self.then(head, tail, h, s, e),
                    Reg::Star { body, .. } => self.star(r, body, h, s, e),
                    _ => unreachable!(),
                };
                self.memo.insert(key, Memo::Done(v));
                self.log.push(key);
                v
            }
            Reg::Macro(m) => {
                let body = self
                    .analysis
                    .macros()
                    .get(m)
                    .expect("macros resolved before matching");
                let key: Key = (body as *const Reg, h as *const Hedge, s, e);
                match self.memo.get_mut(&key) {
                    Some(Memo::Done(v)) => return *v,
                    Some(Memo::Pending { read }) => {
                        *read = true;
                        return false;
                    }
                    None => {}
                }
                self.memo.insert(key, Memo::Pending { read: false });
                let mark = self.log.len();
                let v = self.matches(body, h, s, e);
                let read = matches!(self.memo.get(&key), Some(Memo::Pending { read: true }));
                if v && read {
                    // Negative results below this point may rest on the
                    // assumption that this judgment was false.
                    let tainted: Vec<Key> = self.log.drain(mark..).collect();
                    for k in tainted {
                        match self.memo.get(&k) {
                            Some(Memo::Done(false)) => {
                                self.memo.remove(&k);
                            }
                            _ => self.log.push(k),
                        }
                    }
                }
                self.memo.insert(key, Memo::Done(v));
                self.log.push(key);
                v
            }
        }
    }

    fn single(
        &mut self,
        h: &Hedge,
        s: usize,
        e: usize,
        admits: impl Fn(&Node) -> bool,
        expected: impl Fn() -> String,
    ) -> bool {
        match h.get(s) {
            Some(node) if s < e && admits(node) => {
                if e - s == 1 {
                    return true;
                }
                self.record(h, s + 1, [END.to_owned()], None);
                false
            }
            _ => {
                let found = if s == e { Some(END.to_owned()) } else { None };
                self.record(h, s, [expected()], found);
                false
            }
        }
    }

    fn element(
        &mut self,
        name: &str,
        attributes: &[(String, String)],
        content: &Reg,
        h: &Hedge,
        s: usize,
    ) -> bool {
        let el: &Element = match &h[s] {
            Node::Element(el) if el.name == name => el,
            _ => {
                self.record(h, s, [format!("element <{name}>")], None);
                return false;
            }
        };
        for (k, v) in attributes {
            match el.attribute(k) {
                Some(actual) if actual == v => {}
                Some(actual) => {
                    let found = format!("element <{name}> with {k}={actual:?}");
                    self.record(h, s, [format!("attribute {k}={v:?}")], Some(found));
                    return false;
                }
                None => {
                    let found = format!("element <{name}> without attribute {k}");
                    self.record(h, s, [format!("attribute {k}={v:?}")], Some(found));
                    return false;
                }
            }
        }
        let (slots, rest) = content.split_attribute_prefix();
        for (k, _) in slots {
            if el.attribute(k).is_none() {
                let found = format!("element <{name}> without attribute {k}");
                self.record(h, s, [format!("attribute {k}")], Some(found));
                return false;
            }
        }
        self.ancestors.push((s, name.to_owned()));
        let v = self.matches(rest, &el.children, 0, el.children.len());
        self.ancestors.pop();
        v
    }

    fn then(&mut self, head: &Reg, tail: &Reg, h: &Hedge, s: usize, e: usize) -> bool {
        let lh = self.lookahead(head);
        let lt = self.lookahead(tail);
        let head_can_start = s < e && first_set_admits(&lh.first, &h[s]);
        if s < e && !head_can_start {
            self.expect_first(h, s, &lh, false);
        }
        for k in s..=e {
            if k == s && !lh.nullable {
                continue;
            }
            if k > s && !head_can_start {
                break;
            }
            let tail_ok = if k < e {
                first_set_admits(&lt.first, &h[k])
            } else {
                lt.nullable
            };
            if !tail_ok {
                self.expect_first(h, k, &lt, lt.nullable);
                continue;
            }
            if self.matches(head, h, s, k) && self.matches(tail, h, k, e) {
                return true;
            }
        }
        false
    }

    fn star(&mut self, star: &Reg, body: &Reg, h: &Hedge, s: usize, e: usize) -> bool {
        if s == e {
            return true;
        }
        let lb = self.lookahead(body);
        if !first_set_admits(&lb.first, &h[s]) {
            self.expect_first(h, s, &lb, true);
            return false;
        }
        for k in s + 1..=e {
            if k < e && !first_set_admits(&lb.first, &h[k]) {
                self.expect_first(h, k, &lb, true);
                continue;
            }
            if self.matches(body, h, s, k) && self.matches(star, h, k, e) {
                return true;
            }
        }
        false
    }
}
