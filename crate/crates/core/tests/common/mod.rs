//! Generators shared by the integration suites: exhaustive enumerators of
//! small schemas and documents, seeded random generators, and proptest
//! strategies.

#![allow(dead_code)]

pub mod golden;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xtl::reg::{FirstSet, NodeDescriptor};
use xtl::{Element, Hedge, MacroTable, Node, Reg};

pub const NAMES: [&str; 2] = ["a", "b"];
pub const TEXTS: [&str; 2] = ["", "t"];
pub const MACRO: &str = "m";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub struct Schema {
    pub entry: Reg,
    pub macros: MacroTable,
}

impl Schema {
    pub fn plain(entry: Reg) -> Schema {
        Schema {
            entry,
            macros: MacroTable::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.entry.size() + self.macros.iter().map(|(_, b)| b.size()).sum::<usize>()
    }
}

/// Canonical terms of one size, split by head constructor.
#[derive(Default)]
struct Level {
    leaf: Vec<Reg>,
    elem: Vec<Reg>,
    star: Vec<Reg>,
    chain: Vec<Reg>,
    or: Vec<Reg>,
}

impl Level {
    fn non_or(&self) -> impl Iterator<Item = &Reg> {
        self.leaf
            .iter()
            .chain(&self.elem)
            .chain(&self.star)
            .chain(&self.chain)
    }

    /// Terms allowed as a chain item: anything but `Then` and `Epsilon`.
    fn items(&self) -> impl Iterator<Item = &Reg> {
        self.leaf
            .iter()
            .filter(|r| **r != Reg::Epsilon)
            .chain(&self.elem)
            .chain(&self.star)
            .chain(&self.or)
    }

    fn all(&self) -> impl Iterator<Item = &Reg> {
        self.non_or().chain(&self.or)
    }
}

/// Every canonical term up to a constructor count, over element names
/// {a,b}, texts {"","t"}, slot query "q" and optionally a call of macro "m".
pub struct SchemaSpace {
    levels: Vec<Level>,
}

impl SchemaSpace {
    pub fn new(max_size: usize, with_macro: bool) -> SchemaSpace {
        let mut levels: Vec<Level> = vec![Level::default()];
        for n in 1..=max_size {
            let mut level = Level::default();
            if n == 1 {
                level.leaf = vec![
                    Reg::Epsilon,
                    Reg::text(""),
                    Reg::text("t"),
                    Reg::text_slot("q"),
                    Reg::include("q"),
                ];
                if with_macro {
                    level.leaf.push(Reg::call(MACRO));
                }
            } else {
                let below = &levels[n - 1];
                for name in NAMES {
                    for content in below.all() {
                        level.elem.push(Reg::element(name, content.clone()));
                    }
                }
                for body in below.all() {
                    if !matches!(body, Reg::Epsilon | Reg::Star { .. }) {
                        level.star.push(Reg::star(body.clone()));
                    }
                }
                for i in 1..n - 1 {
                    let rest_size = n - 1 - i;
                    for item in levels[i].items() {
                        for rest in levels[rest_size].chain.iter().chain(
                            levels[rest_size]
                                .leaf
                                .iter()
                                .filter(|r| **r == Reg::Epsilon),
                        ) {
                            level.chain.push(Reg::then(item.clone(), rest.clone()));
                        }
                    }
                    for alt in levels[i].non_or() {
                        for rest in levels[rest_size].all() {
                            let mut tail = rest;
                            let mut duplicate = false;
                            loop {
                                match tail {
                                    Reg::Or(a, b) => {
                                        duplicate |= **a == *alt;
                                        tail = b;
                                    }
                                    last => {
                                        duplicate |= *last == *alt;
                                        break;
                                    }
                                }
                            }
                            if !duplicate {
                                level.or.push(Reg::or(alt.clone(), rest.clone()));
                            }
                        }
                    }
                }
            }
            levels.push(level);
        }
        SchemaSpace { levels }
    }

    pub fn of_size(&self, n: usize) -> Vec<&Reg> {
        self.levels.get(n).map_or(Vec::new(), |l| l.all().collect())
    }

    pub fn count(&self, n: usize) -> usize {
        self.levels.get(n).map_or(0, |l| {
            l.leaf.len() + l.elem.len() + l.star.len() + l.chain.len() + l.or.len()
        })
    }
}

/// The exhaustive schema population: canonical entries of up to `max_total`
/// constructors with no macros, plus entries calling macro "m" paired with
/// every canonical body for "m" (which may call itself) such that entry and
/// body together stay within `max_total`. Ordered by total size.
pub struct Population {
    plain: SchemaSpace,
    with_macro: SchemaSpace,
    max_total: usize,
}

impl Population {
    pub fn new(max_total: usize) -> Population {
        Population {
            plain: SchemaSpace::new(max_total, false),
            with_macro: SchemaSpace::new(max_total, true),
            max_total,
        }
    }

    fn calling(&self, n: usize) -> impl Iterator<Item = &Reg> {
        self.with_macro
            .of_size(n)
            .into_iter()
            .filter(|r| r.macro_calls().contains(MACRO))
    }

    pub fn len_of_total(&self, total: usize) -> usize {
        let mut count = self.plain.count(total);
        for entry_size in 1..total {
            count += self.calling(entry_size).count() * self.with_macro.count(total - entry_size);
        }
        count
    }

    pub fn len(&self) -> usize {
        (1..=self.max_total).map(|t| self.len_of_total(t)).sum()
    }

    /// Members of exactly `total` constructors.
    pub fn of_total(&self, total: usize) -> impl Iterator<Item = Schema> + '_ {
        let plain = self
            .plain
            .of_size(total)
            .into_iter()
            .cloned()
            .map(Schema::plain);
        let calling = (1..total).flat_map(move |entry_size| {
            self.calling(entry_size).flat_map(move |entry| {
                self.with_macro
                    .of_size(total - entry_size)
                    .into_iter()
                    .map(move |body| {
                        let mut macros = MacroTable::new();
                        macros.define(MACRO, body.clone()).expect("fresh table");
                        Schema {
                            entry: entry.clone(),
                            macros,
                        }
                    })
            })
        });
        plain.chain(calling)
    }

    pub fn iter(&self) -> impl Iterator<Item = Schema> + '_ {
        (1..=self.max_total).flat_map(move |t| self.of_total(t))
    }
}

/// Every hedge with at most `max_nodes` nodes and depth at most
/// `max_depth`, over element names `names` (no attributes) and texts
/// `texts`, including adjacent and empty texts. Ordered by node count.
pub fn documents(max_nodes: usize, max_depth: usize, names: &[&str], texts: &[&str]) -> Vec<Hedge> {
    let mut out = Vec::new();
    for n in 0..=max_nodes {
        out.extend(
            sequences(n, max_depth, names, texts)
                .into_iter()
                .map(Hedge::from),
        );
    }
    out
}

fn sequences(n: usize, depth: usize, names: &[&str], texts: &[&str]) -> Vec<Vec<Node>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    if depth == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for first in 1..=n {
        let heads = trees(first, depth, names, texts);
        if heads.is_empty() {
            continue;
        }
        let tails = sequences(n - first, depth, names, texts);
        for head in &heads {
            for tail in &tails {
                let mut seq = vec![head.clone()];
                seq.extend(tail.iter().cloned());
                out.push(seq);
            }
        }
    }
    out
}

fn trees(n: usize, depth: usize, names: &[&str], texts: &[&str]) -> Vec<Node> {
    let mut out = Vec::new();
    if n == 1 {
        out.extend(texts.iter().map(|t| Node::text(*t)));
    }
    for children in sequences(n - 1, depth - 1, names, texts) {
        for name in names {
            out.push(Node::Element(
                Element::new(*name).with_children(children.clone()),
            ));
        }
    }
    out
}

/// Whether some node is admitted by both descriptors.
pub fn descriptors_overlap(a: &NodeDescriptor, b: &NodeDescriptor) -> bool {
    use NodeDescriptor::*;
    match (a, b) {
        (Element(x), Element(y)) => x == y,
        (AnyElement, Element(_) | AnyElement) | (Element(_), AnyElement) => true,
        (AnyText, AnyText | LiteralText(_)) | (LiteralText(_), AnyText) => true,
        (LiteralText(x), LiteralText(y)) => x == y,
        _ => false,
    }
}

pub fn first_sets_disjoint(a: &FirstSet, b: &FirstSet) -> bool {
    a.iter()
        .all(|x| b.iter().all(|y| !descriptors_overlap(x, y)))
}

/// A random, usually non-canonical term. Attribute slots appear only at the
/// start of element content, with distinct names.
pub fn arbitrary_reg(rng: &mut impl Rng, budget: usize) -> Reg {
    if budget <= 1 {
        return random_leaf(rng);
    }
    match rng.gen_range(0..8) {
        0 | 1 => {
            let split = rng.gen_range(1..budget);
            Reg::then(
                arbitrary_reg(rng, split),
                arbitrary_reg(rng, budget - split),
            )
        }
        2 => {
            let split = rng.gen_range(1..budget);
            Reg::or(
                arbitrary_reg(rng, split),
                arbitrary_reg(rng, budget - split),
            )
        }
        3 => Reg::Star {
            body: Box::new(arbitrary_reg(rng, budget - 1)),
            selector: if rng.gen_bool(0.5) {
                Some("q".into())
            } else {
                None
            },
        },
        4 | 5 => {
            let mut attributes = Vec::new();
            if rng.gen_bool(0.3) {
                attributes.push(("x".to_owned(), "1".to_owned()));
            }
            let mut content = arbitrary_reg(rng, budget - 1);
            let slots = rng.gen_range(0..3);
            for i in 0..slots {
                content = Reg::then(Reg::attribute(["k", "j"][i], "@k"), content);
            }
            Reg::Element {
                name: NAMES.choose(rng).unwrap().to_string(),
                attributes,
                content: Box::new(content),
            }
        }
        _ => random_leaf(rng),
    }
}

fn random_leaf(rng: &mut impl Rng) -> Reg {
    match rng.gen_range(0..6) {
        0 => Reg::Epsilon,
        1 => Reg::text(*TEXTS.choose(rng).unwrap()),
        2 => Reg::text_slot("q"),
        3 => Reg::include("q"),
        4 => Reg::element(*NAMES.choose(rng).unwrap(), Reg::Epsilon),
        _ => Reg::call(MACRO),
    }
}

/// A random hedge of any shape: adjacent, empty and whitespace texts allowed.
pub fn random_hedge(rng: &mut impl Rng, max_nodes: usize) -> Hedge {
    let mut budget = rng.gen_range(0..=max_nodes);
    random_nodes(rng, &mut budget, 4, false).into()
}

/// A random document that survives an XML round trip: one root, no
/// adjacent, empty or whitespace-only texts, and attribute values and texts
/// that need escaping.
pub fn random_document(rng: &mut impl Rng, max_nodes: usize) -> Hedge {
    let mut budget = rng.gen_range(0..max_nodes.max(1));
    let root = random_element(rng, &mut budget, 5, true);
    vec![Node::Element(root)].into()
}

const DOC_TEXTS: [&str; 6] = ["t", "a & b", "<x>", " padded ", "quote \" and '", "é ü"];
const DOC_NAMES: [&str; 4] = ["a", "b", "ns:c", "d-e.f"];

fn random_nodes(rng: &mut impl Rng, budget: &mut usize, depth: usize, xml_safe: bool) -> Vec<Node> {
    let mut out: Vec<Node> = Vec::new();
    while *budget > 0 && rng.gen_bool(0.7) {
        let text_ok = !xml_safe || !matches!(out.last(), Some(Node::Text(_)));
        if depth == 0 || (text_ok && rng.gen_bool(0.3)) {
            if !text_ok {
                break;
            }
            *budget -= 1;
            let text = if xml_safe {
                DOC_TEXTS.choose(rng).unwrap().to_string()
            } else {
                ["", " ", "t", "a & b", "\n"]
                    .choose(rng)
                    .unwrap()
                    .to_string()
            };
            out.push(Node::Text(text));
        } else {
            out.push(Node::Element(random_element(rng, budget, depth, xml_safe)));
        }
    }
    out
}

fn random_element(rng: &mut impl Rng, budget: &mut usize, depth: usize, xml_safe: bool) -> Element {
    *budget = budget.saturating_sub(1);
    let mut e = Element::new(*DOC_NAMES.choose(rng).unwrap());
    for attr in ["k", "id", "v"] {
        if rng.gen_bool(0.25) {
            e.attributes
                .push((attr.to_owned(), DOC_TEXTS.choose(rng).unwrap().to_string()));
        }
    }
    e.children = random_nodes(rng, budget, depth.saturating_sub(1), xml_safe).into();
    e
}

/// A template and a repository drawn from the class where re-expansion is
/// well defined: queries relative to an iteration use names (`v`, `w`, `c`,
/// `zz`, `@k`, `text()`) that never occur directly under the repository
/// root `r`, which has no attributes and no text, so slots staged inside an
/// iteration select nothing again when re-read at the top level.
#[derive(Debug, Clone)]
pub struct TemplateCase {
    pub entry: Reg,
    pub macros: MacroTable,
    pub repo: Hedge,
}

#[derive(Clone, Copy, PartialEq)]
enum Scope {
    Top,
    Iteration,
}

struct TemplateGen<'r, R: Rng> {
    rng: &'r mut R,
    has_macro: bool,
}

const TOP_TEXT: [&str; 7] = [
    "/r/i/v",
    "/r/i[2]/v",
    "/r/j/@k",
    "/r/i/text()",
    "/r/missing",
    "i/@k",
    "/r/i[9]/v",
];
const TOP_NODES: [&str; 5] = ["/r/i", "/r/j", "/r/i/w", "/r/none", "j"];
const ITER_TEXT: [&str; 6] = ["v", "@k", "text()", "w/v", "c/v", "zz"];
const ITER_NODES: [&str; 4] = ["w", "c", "zz", "w[2]"];

impl<R: Rng> TemplateGen<'_, R> {
    fn query(&mut self, scope: Scope, nodes: bool) -> String {
        let (top, iter): (&[&str], &[&str]) = if nodes {
            (&TOP_NODES, &ITER_NODES)
        } else {
            (&TOP_TEXT, &ITER_TEXT)
        };
        if scope == Scope::Top {
            return top.choose(self.rng).unwrap().to_string();
        }
        // Relative top-level queries would select something once staged and
        // re-read outside the iteration.
        let absolute: Vec<&str> = top.iter().copied().filter(|q| q.starts_with('/')).collect();
        let pool = if self.rng.gen_bool(0.7) {
            iter
        } else {
            &absolute[..]
        };
        pool.choose(self.rng).unwrap().to_string()
    }

    fn items(&mut self, scope: Scope, depth: usize) -> Vec<Reg> {
        let n = self.rng.gen_range(0..=3);
        (0..n).map(|_| self.item(scope, depth)).collect()
    }

    fn item(&mut self, scope: Scope, depth: usize) -> Reg {
        let choice = if depth == 0 {
            self.rng.gen_range(0..3)
        } else {
            self.rng.gen_range(0..9)
        };
        match choice {
            0 => Reg::text(*["x", "y", ""].choose(self.rng).unwrap()),
            1 => Reg::text_slot(self.query(scope, false)),
            2 => Reg::include(self.query(scope, true)),
            3 | 4 => self.element(scope, depth - 1),
            5 | 6 => {
                let selector = self.query(scope, true);
                let body = self.items(Scope::Iteration, depth - 1);
                Reg::for_each(Reg::chain(body), selector)
            }
            7 => {
                let a = self.alternative(scope, depth - 1);
                let b = self.alternative(scope, depth - 1);
                Reg::or(a, b)
            }
            _ if self.has_macro => Reg::call("m"),
            _ => self.element(scope, depth - 1),
        }
    }

    fn alternative(&mut self, scope: Scope, depth: usize) -> Reg {
        if self.rng.gen_bool(0.3) {
            Reg::chain(self.items(scope, depth))
        } else {
            self.item(scope, depth)
        }
    }

    fn element(&mut self, scope: Scope, depth: usize) -> Reg {
        let name = *["p", "q", "s"].choose(self.rng).unwrap();
        let mut attributes = Vec::new();
        if self.rng.gen_bool(0.3) {
            attributes.push(("n".to_owned(), "1".to_owned()));
        }
        let mut items = Vec::new();
        if self.rng.gen_bool(0.3) {
            items.push(Reg::attribute("k2", self.query(scope, false)));
        }
        items.extend(self.items(scope, depth));
        Reg::element_with(name, attributes, Reg::chain(items))
    }
}

pub fn template_case(rng: &mut impl Rng) -> TemplateCase {
    let has_macro = rng.gen_bool(0.3);
    let mut gen = TemplateGen { rng, has_macro };
    let mut macros = MacroTable::new();
    if has_macro {
        // Recursion only through iteration over nested `c`, which is finite.
        let mut body = vec![];
        if gen.rng.gen_bool(0.5) {
            body.push(Reg::attribute("k2", "@k"));
        }
        body.push(Reg::text_slot(*["v", "@k", "zz"].choose(gen.rng).unwrap()));
        if gen.rng.gen_bool(0.6) {
            body.push(Reg::for_each(Reg::chain([Reg::call("m")]), "c"));
        }
        macros
            .define("m", Reg::chain([Reg::element("mm", Reg::chain(body))]))
            .unwrap();
    }
    let root_items = {
        let mut items = Vec::new();
        if gen.rng.gen_bool(0.2) {
            items.push(Reg::attribute("k2", gen.query(Scope::Top, false)));
        }
        items.extend(gen.items(Scope::Top, 3));
        items
    };
    let entry = Reg::element("out", Reg::chain(root_items));
    TemplateCase {
        entry,
        macros,
        repo: random_repository(rng),
    }
}

pub fn random_repository(rng: &mut impl Rng) -> Hedge {
    let mut items = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        items.push(Node::Element(repo_item(rng, "i", 2)));
    }
    for _ in 0..rng.gen_range(0..=2) {
        items.push(Node::Element(repo_item(rng, "j", 2)));
    }
    items.shuffle(rng);
    vec![Node::Element(Element::new("r").with_children(items))].into()
}

fn repo_item(rng: &mut impl Rng, name: &str, depth: usize) -> Element {
    let mut e = Element::new(name);
    if rng.gen_bool(0.6) {
        e.attributes
            .push(("k".into(), ["1", "2", ""].choose(rng).unwrap().to_string()));
    }
    if rng.gen_bool(0.3) {
        e.children.push(Node::text("t"));
    }
    if rng.gen_bool(0.7) {
        e.children.push(Node::Element(
            Element::new("v").with_child(Node::text(*["1", "2", ""].choose(rng).unwrap())),
        ));
    }
    for _ in 0..rng.gen_range(0..=2) {
        e.children.push(Node::Element(
            Element::new("w").with_child(Element::new("v").with_child(Node::text("wv"))),
        ));
    }
    if depth > 0 {
        for _ in 0..rng.gen_range(0..=2) {
            e.children
                .push(Node::Element(repo_item(rng, "c", depth - 1)));
        }
    }
    e
}

pub fn reg_strategy() -> impl Strategy<Value = Reg> {
    (any::<u64>(), 1usize..14).prop_map(|(seed, budget)| arbitrary_reg(&mut rng(seed), budget))
}

pub fn hedge_strategy() -> impl Strategy<Value = Hedge> {
    (any::<u64>(), 0usize..12).prop_map(|(seed, max)| random_hedge(&mut rng(seed), max))
}

pub fn document_strategy() -> impl Strategy<Value = Hedge> {
    (any::<u64>(), 1usize..16).prop_map(|(seed, max)| random_document(&mut rng(seed), max))
}

pub fn template_strategy() -> impl Strategy<Value = TemplateCase> {
    any::<u64>().prop_map(|seed| template_case(&mut rng(seed)))
}
