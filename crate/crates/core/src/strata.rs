//! Equivalence orbits of decorations and the boundary stratification.
//!
//! Two decorations are equivalent when one is reachable from the other by a
//! sequence of global conjugations and braid moves. The equivalence classes
//! of decorations of stable trees index the irreducible boundary strata;
//! edge contraction of decorations induces the containment poset, and full
//! contraction to the one-vertex tree identifies connected components.
//!
//! The canonical form of a class is the lexicographically minimal encoding
//! over its orbit of conjugation-normalized decorations; class ids are short
//! stable hashes of that encoding.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use serde::Serialize;

use crate::decoration::{enumerate_decorations, Decoration, Direction};
use crate::perm::{all_perms, Perm};
use crate::portrait::Portrait;
use crate::tree::{enumerate_stable_trees, MarkedTree, Split};
use crate::{stable_hash, Error, Result};

/// One stratum: an equivalence class of decorations.
#[derive(Clone, Debug)]
pub struct HurwitzClass {
    /// Short stable hash of the canonical encoding.
    pub id: String,
    /// The canonical encoding itself: the minimal encoding over the orbit.
    pub encoding: String,
    pub tree: MarkedTree,
    /// Edge count of the tree; the stratum has dimension `|B| - 3 - codim`.
    pub codim: usize,
    /// The decoration realizing the canonical encoding.
    pub representative: Decoration,
    /// Number of conjugation-normalized decorations in the orbit.
    pub orbit_size: usize,
    /// Class id of the one-vertex class reached by contracting every edge.
    pub component: String,
}

impl HurwitzClass {
    pub fn dim(&self, portrait: &Portrait) -> usize {
        portrait.num_target_marks() - 3 - self.codim
    }
}

/// A covering relation of the stratification poset: contracting `split` in
/// the child class yields the parent class (codimension drops by one).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetEdge {
    pub child: String,
    pub parent: String,
    pub split: Split,
}

/// Per-tree decoration counts, kept for cross-checking orbit sizes.
#[derive(Clone, Debug)]
pub struct TreeCount {
    pub tree: MarkedTree,
    /// Decorations of the tree.
    pub decorations: usize,
    /// Conjugation-normalized decorations of the tree.
    pub normalized: usize,
}

/// The complete boundary stratification of a portrait.
#[derive(Debug)]
pub struct Stratification {
    portrait: Portrait,
    max_codim: usize,
    classes: Vec<HurwitzClass>,
    poset: Vec<PosetEdge>,
    components: Vec<String>,
    counts: Vec<TreeCount>,
    by_id: HashMap<String, usize>,
    by_encoding: HashMap<String, usize>,
    by_normalized: HashMap<String, usize>,
}

/// Options for [`stratify`].
#[derive(Clone, Debug)]
pub struct StratifyOptions {
    /// Largest edge count to enumerate; `None` computes every stratum.
    pub max_codim: Option<usize>,
    /// Worker count; the output is identical for every width.
    pub jobs: usize,
    /// When set, scrambles the internal processing order; the output must
    /// not change. Exists to exercise determinism.
    pub scramble: Option<u64>,
}

impl Default for StratifyOptions {
    fn default() -> Self {
        StratifyOptions {
            max_codim: None,
            jobs: 1,
            scramble: None,
        }
    }
}

/// The conjugation-normalized form: the global conjugate with the
/// lexicographically minimal encoding, over all permutations of the degree.
pub fn conjugation_normalize(portrait: &Portrait, decoration: &Decoration) -> Result<Decoration> {
    let taus = all_perms(portrait.degree());
    normalize_with(portrait, decoration, &taus)
}

fn normalize_with(
    portrait: &Portrait,
    decoration: &Decoration,
    taus: &[Perm],
) -> Result<Decoration> {
    Ok(decoration.min_conjugate(portrait, taus))
}

/// Breadth-first closure of the normalized decoration under braid moves at
/// every half-edge in both directions, keyed by encoding.
pub fn orbit(portrait: &Portrait, seed: &Decoration) -> Result<BTreeMap<String, Decoration>> {
    let taus = all_perms(portrait.degree());
    orbit_with(portrait, seed, &taus)
}

fn orbit_with(
    portrait: &Portrait,
    seed: &Decoration,
    taus: &[Perm],
) -> Result<BTreeMap<String, Decoration>> {
    let start = normalize_with(portrait, seed, taus)?;
    let mut seen = BTreeMap::new();
    seen.insert(start.encode(portrait), start.clone());
    let mut queue = vec![start];
    let halves = seed.tree().half_edges();
    while let Some(current) = queue.pop() {
        for &half in &halves {
            for direction in [Direction::Anticlockwise, Direction::Clockwise] {
                let moved = current.braid_move(portrait, half, direction)?;
                let normalized = normalize_with(portrait, &moved, taus)?;
                if let std::collections::btree_map::Entry::Vacant(slot) =
                    seen.entry(normalized.encode(portrait))
                {
                    slot.insert(normalized.clone());
                    queue.push(normalized);
                }
            }
        }
    }
    Ok(seen)
}

/// The canonical form of a decoration's class: minimal encoding over its
/// orbit. Constant on classes, distinct across classes.
pub fn canonical_form(portrait: &Portrait, decoration: &Decoration) -> Result<String> {
    let orbit = orbit(portrait, decoration)?;
    Ok(orbit
        .keys()
        .next()
        .expect("orbits contain their seed")
        .clone())
}

struct TreeResult {
    tree: MarkedTree,
    decorations: usize,
    /// (canonical encoding, representative, orbit size), in encoding order.
    classes: Vec<(String, Decoration, usize)>,
    /// Normalized decoration encoding -> canonical class encoding.
    membership: HashMap<String, String>,
}

fn tree_classes(
    portrait: &Portrait,
    tree: &MarkedTree,
    scramble: Option<u64>,
) -> Result<TreeResult> {
    let taus = all_perms(portrait.degree());
    let decorations = enumerate_decorations(portrait, tree)?;
    let decoration_count = decorations.len();
    let mut normalized: BTreeMap<String, Decoration> = BTreeMap::new();
    for d in &decorations {
        let n = normalize_with(portrait, d, &taus)?;
        normalized.insert(n.encode(portrait), n);
    }
    let mut order: Vec<String> = normalized.keys().cloned().collect();
    if let Some(seed) = scramble {
        shuffle(&mut order, seed);
    }
    let mut membership: HashMap<String, String> = HashMap::new();
    let mut classes: Vec<(String, Decoration, usize)> = Vec::new();
    for key in order {
        if membership.contains_key(&key) {
            continue;
        }
        let orbit = orbit_with(portrait, &normalized[&key], &taus)?;
        for member in orbit.keys() {
            if !normalized.contains_key(member) {
                return Err(Error::Defect(format!(
                    "orbit member {member} escaped the enumerated decoration set"
                )));
            }
        }
        let (encoding, representative) = orbit.iter().next().expect("orbits are nonempty");
        for member in orbit.keys() {
            membership.insert(member.clone(), encoding.clone());
        }
        classes.push((encoding.clone(), representative.clone(), orbit.len()));
    }
    // The scramble must not leak into the output order.
    classes.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(TreeResult {
        tree: tree.clone(),
        decorations: decoration_count,
        classes,
        membership,
    })
}

/// Computes the full stratification: every class per stable tree up to the
/// codimension bound, the contraction poset, and connected components.
///
/// The output is schedule-independent: classes are keyed and sorted by
/// canonical encodings, so worker count and processing order do not affect
/// it. An empty class list reports an empty space.
pub fn stratify(portrait: &Portrait, options: &StratifyOptions) -> Result<Stratification> {
    if !portrait.is_valid() {
        return Err(Error::InvalidInput(
            "cannot stratify an invalid portrait".into(),
        ));
    }
    let num_marks = portrait.num_target_marks();
    let max_codim = options
        .max_codim
        .unwrap_or(num_marks - 3)
        .min(num_marks - 3);
    let mut trees: Vec<MarkedTree> = enumerate_stable_trees(num_marks)?
        .into_iter()
        .filter(|t| t.num_edges() <= max_codim)
        .collect();
    if let Some(seed) = options.scramble {
        shuffle(&mut trees, seed ^ 0x9e3779b97f4a7c15);
    }
    let mut results = run_tree_jobs(portrait, &trees, options)?;
    // Reassemble in canonical tree order regardless of processing order.
    results.sort_by(|a, b| {
        (a.tree.num_edges(), a.tree.splits()).cmp(&(b.tree.num_edges(), b.tree.splits()))
    });

    let mut classes: Vec<HurwitzClass> = Vec::new();
    let mut counts = Vec::new();
    for result in &results {
        let mut normalized_total = 0usize;
        for (encoding, representative, orbit_size) in &result.classes {
            normalized_total += orbit_size;
            classes.push(HurwitzClass {
                id: stable_hash(encoding.as_bytes()),
                encoding: encoding.clone(),
                tree: result.tree.clone(),
                codim: result.tree.num_edges(),
                representative: representative.clone(),
                orbit_size: *orbit_size,
                component: String::new(),
            });
        }
        counts.push(TreeCount {
            tree: result.tree.clone(),
            decorations: result.decorations,
            normalized: normalized_total,
        });
    }
    // Distinct encodings must get distinct short ids.
    {
        let mut seen: HashMap<&str, &str> = HashMap::new();
        for class in &classes {
            if let Some(other) = seen.insert(&class.id, &class.encoding) {
                if other != class.encoding {
                    return Err(Error::Defect(format!(
                        "class id collision between encodings {other} and {}",
                        class.encoding
                    )));
                }
            }
        }
    }
    classes.sort_by(|a, b| (a.codim, &a.id).cmp(&(b.codim, &b.id)));
    let by_encoding: HashMap<String, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.encoding.clone(), i))
        .collect();
    let mut by_normalized: HashMap<String, usize> = HashMap::new();
    for result in &results {
        for (key, class_encoding) in &result.membership {
            by_normalized.insert(key.clone(), by_encoding[class_encoding]);
        }
    }

    let taus = all_perms(portrait.degree());
    // Poset edges: contract each class representative along each edge.
    let mut poset = Vec::new();
    for class in &classes {
        for &split in class.tree.splits() {
            let contracted = class.representative.contract(portrait, split)?;
            let normalized = normalize_with(portrait, &contracted, &taus)?;
            let parent_index =
                *by_normalized
                    .get(&normalized.encode(portrait))
                    .ok_or_else(|| {
                        Error::Defect(
                            "contracted decoration missing from the stratification".into(),
                        )
                    })?;
            poset.push(PosetEdge {
                child: class.id.clone(),
                parent: classes[parent_index].id.clone(),
                split,
            });
        }
    }
    poset.sort_by(|a, b| (&a.child, &a.parent, a.split).cmp(&(&b.child, &b.parent, b.split)));

    // Components: contract every edge, in canonical order, down to the
    // one-vertex tree.
    let mut component_of: Vec<String> = Vec::with_capacity(classes.len());
    for class in &classes {
        let mut current = class.representative.clone();
        while let Some(&split) = current.tree().splits().first() {
            current = current.contract(portrait, split)?;
        }
        let normalized = normalize_with(portrait, &current, &taus)?;
        let index = *by_normalized
            .get(&normalized.encode(portrait))
            .ok_or_else(|| {
                Error::Defect("full contraction missing from the stratification".into())
            })?;
        component_of.push(classes[index].id.clone());
    }
    for (class, component) in classes.iter_mut().zip(component_of) {
        class.component = component;
    }
    let mut components: Vec<String> = classes
        .iter()
        .filter(|c| c.codim == 0)
        .map(|c| c.id.clone())
        .collect();
    components.sort();

    let by_id: HashMap<String, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.clone(), i))
        .collect();
    Ok(Stratification {
        portrait: portrait.clone(),
        max_codim,
        classes,
        poset,
        components,
        counts,
        by_id,
        by_encoding,
        by_normalized,
    })
}

fn run_tree_jobs(
    portrait: &Portrait,
    trees: &[MarkedTree],
    options: &StratifyOptions,
) -> Result<Vec<TreeResult>> {
    let jobs = options.jobs.max(1);
    if jobs == 1 {
        return trees
            .iter()
            .map(|t| tree_classes(portrait, t, options.scramble))
            .collect();
    }
    let next = Mutex::new(0usize);
    let slots: Vec<Mutex<Option<Result<TreeResult>>>> =
        trees.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let index = {
                    let mut guard = next.lock().expect("worker queue poisoned");
                    let index = *guard;
                    *guard += 1;
                    index
                };
                if index >= trees.len() {
                    break;
                }
                let result = tree_classes(portrait, &trees[index], options.scramble);
                *slots[index].lock().expect("result slot poisoned") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result slot poisoned")
                .expect("every tree was processed")
        })
        .collect()
}

fn shuffle<T>(items: &mut [T], seed: u64) {
    // xorshift64*; only used to scramble processing order.
    let mut state = seed | 1;
    let mut next = || {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        state.wrapping_mul(0x2545f4914f6cdd1d)
    };
    for i in (1..items.len()).rev() {
        let j = (next() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

impl Stratification {
    pub fn portrait(&self) -> &Portrait {
        &self.portrait
    }

    pub fn max_codim(&self) -> usize {
        self.max_codim
    }

    /// All classes, sorted by (codim, id).
    pub fn classes(&self) -> &[HurwitzClass] {
        &self.classes
    }

    pub fn poset(&self) -> &[PosetEdge] {
        &self.poset
    }

    /// Ids of the one-vertex classes, one per connected component.
    pub fn components(&self) -> &[String] {
        &self.components
    }

    pub fn counts(&self) -> &[TreeCount] {
        &self.counts
    }

    pub fn is_empty_space(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_by_id(&self, id: &str) -> Result<&HurwitzClass> {
        self.by_id
            .get(id)
            .map(|&i| &self.classes[i])
            .ok_or_else(|| Error::UnknownClass(id.to_string()))
    }

    pub fn class_by_encoding(&self, encoding: &str) -> Option<&HurwitzClass> {
        self.by_encoding.get(encoding).map(|&i| &self.classes[i])
    }

    /// The class containing a decoration, resolved through its normalized
    /// form without a fresh orbit computation.
    pub fn class_of(&self, decoration: &Decoration) -> Result<&HurwitzClass> {
        let normalized = conjugation_normalize(&self.portrait, decoration)?;
        let key = normalized.encode(&self.portrait);
        match self.by_normalized.get(&key) {
            Some(&i) => Ok(&self.classes[i]),
            None => Err(Error::UnknownClass(key)),
        }
    }

    /// The one-vertex class id reached from a class by contracting all edges.
    pub fn component_of(&self, class_id: &str) -> Result<&str> {
        Ok(self.class_by_id(class_id)?.component.as_str())
    }

    pub fn classes_by_codim(&self, codim: usize) -> impl Iterator<Item = &HurwitzClass> {
        self.classes.iter().filter(move |c| c.codim == codim)
    }

    /// The stratification report.
    pub fn report(&self) -> StratificationReport {
        let marks = self.portrait.target_marks();
        StratificationReport {
            portrait_hash: self.portrait.hash(),
            classes: self
                .classes
                .iter()
                .map(|c| ClassReport {
                    id: c.id.clone(),
                    tree: c.tree.to_json(marks),
                    codim: c.codim,
                    dim: c.dim(&self.portrait),
                    component: c.component.clone(),
                    orbit_size: c.orbit_size,
                    representative: c.encoding.clone(),
                })
                .collect(),
            poset: self
                .poset
                .iter()
                .map(|e| {
                    (
                        e.child.clone(),
                        e.parent.clone(),
                        e.split
                            .members()
                            .iter()
                            .map(|&m| marks[m].clone())
                            .collect(),
                    )
                })
                .collect(),
            components: self.components.clone(),
        }
    }

    /// Serialized report; byte-identical across runs and worker counts.
    pub fn report_json(&self) -> String {
        serde_json::to_string_pretty(&self.report()).expect("report serialization cannot fail")
    }

    /// DOT export of the poset Hasse diagram, one rank per codimension.
    pub fn poset_dot(&self) -> String {
        let mut out = String::from("digraph poset {\n  rankdir=BT;\n  node [shape=box];\n");
        for codim in 0..=self.max_codim {
            let ids: Vec<String> = self
                .classes_by_codim(codim)
                .map(|c| format!("\"{}\"", c.id))
                .collect();
            if !ids.is_empty() {
                out.push_str(&format!("  {{ rank=same; {} }}\n", ids.join("; ")));
            }
        }
        for edge in &self.poset {
            out.push_str(&format!("  \"{}\" -> \"{}\";\n", edge.child, edge.parent));
        }
        out.push_str("}\n");
        out
    }
}

/// JSON stratification report.
#[derive(Serialize)]
pub struct StratificationReport {
    pub portrait_hash: String,
    pub classes: Vec<ClassReport>,
    pub poset: Vec<(String, String, Vec<String>)>,
    pub components: Vec<String>,
}

#[derive(Serialize)]
pub struct ClassReport {
    pub id: String,
    pub tree: serde_json::Value,
    pub codim: usize,
    pub dim: usize,
    pub component: String,
    pub orbit_size: usize,
    pub representative: String,
}
