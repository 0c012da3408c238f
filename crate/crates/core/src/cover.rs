//! Combinatorial admissible covers induced by strata.
//!
//! From a class representative we build the source graph: one vertex per
//! (tree vertex, orbit of the incident permutations), weighted by the local
//! Riemann-Hurwitz equation; half-edges are cycles of the half-edge
//! permutations (unlabeled leg cycles excluded), paired across tree edges by
//! equal support, with labeled cycles becoming legs. The cover maps this
//! graph onto the tree with the cycle lengths as expansion factors.
//!
//! Local-genus or harmonicity failures cannot occur for valid decorations;
//! they surface as `Error::Defect` rather than being silently swallowed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::decoration::Decoration;
use crate::perm::{orbits, Cycle};
use crate::portrait::Portrait;
use crate::strata::HurwitzClass;
use crate::tree::{HalfEdge, MarkedTree, Split};
use crate::{Error, Result};

/// A vertex of the source graph: a tree vertex together with an orbit of
/// the permutations incident to it, weighted by local Riemann-Hurwitz.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceVertex {
    pub tree_vertex: usize,
    /// Sorted 0-based points of the orbit.
    pub orbit: Vec<usize>,
    pub weight: usize,
}

/// A half-edge of the source graph: a cycle of the permutation on a tree
/// half-edge, attached to the source vertex whose orbit contains it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceHalf {
    pub vertex: usize,
    pub tree_half: HalfEdge,
    pub cycle: Cycle,
}

/// An edge of the source graph: two support-equal cycles on the two ends of
/// a tree edge. The expansion factor is the cycle length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceEdge {
    pub ends: [SourceHalf; 2],
    pub expansion: usize,
}

impl SourceEdge {
    pub fn split(&self) -> Split {
        match self.ends[0].tree_half {
            HalfEdge::End { split, .. } => split,
            HalfEdge::Leg(_) => unreachable!("edges sit over tree edges"),
        }
    }
}

/// A leg of the source graph: a labeled cycle of a leg permutation. The
/// expansion factor is the local degree of the source mark.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceLeg {
    pub vertex: usize,
    pub source_mark: usize,
    pub tree_leg: HalfEdge,
    pub cycle: Cycle,
    pub expansion: usize,
}

/// The marked, vertex-weighted source graph of a class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceGraph {
    pub vertices: Vec<SourceVertex>,
    pub edges: Vec<SourceEdge>,
    pub legs: Vec<SourceLeg>,
}

impl SourceGraph {
    pub fn valence(&self, vertex: usize) -> usize {
        let edge_ends = self
            .edges
            .iter()
            .flat_map(|e| e.ends.iter())
            .filter(|end| end.vertex == vertex)
            .count();
        let legs = self.legs.iter().filter(|l| l.vertex == vertex).count();
        edge_ends + legs
    }

    /// First Betti number; the graph is connected for valid decorations.
    pub fn betti(&self) -> usize {
        self.edges.len() + self.connected_components() - self.vertices.len()
    }

    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        for edge in &self.edges {
            let a = find(&mut parent, edge.ends[0].vertex);
            let b = find(&mut parent, edge.ends[1].vertex);
            parent[a] = b;
        }
        (0..self.vertices.len())
            .filter(|&v| find(&mut parent, v) == v)
            .count()
    }

    pub fn total_weight(&self) -> usize {
        self.vertices.iter().map(|v| v.weight).sum()
    }
}

/// A stable marked weighted graph, with the paths identifying each of its
/// edges and legs with the source-graph edges absorbed into them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableGraph {
    pub vertices: Vec<StableVertex>,
    pub edges: Vec<StableEdge>,
    pub legs: Vec<StableLeg>,
    /// Source-graph edges removed with contracted pendant subtrees, hence
    /// absent from every path.
    pub dropped_edges: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableVertex {
    pub weight: usize,
    /// Index of the originating source-graph vertex.
    pub origin: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableEdge {
    pub ends: [usize; 2],
    /// Source-graph edge indices absorbed into this edge, in path order.
    pub path: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableLeg {
    pub vertex: usize,
    pub source_mark: usize,
    /// Source-graph edge indices absorbed into this leg.
    pub path: Vec<usize>,
}

impl StableGraph {
    pub fn valence(&self, vertex: usize) -> usize {
        let edge_ends = self
            .edges
            .iter()
            .flat_map(|e| e.ends.iter())
            .filter(|&&v| v == vertex)
            .count();
        let legs = self.legs.iter().filter(|l| l.vertex == vertex).count();
        edge_ends + legs
    }

    pub fn betti(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        for edge in &self.edges {
            let a = find(&mut parent, edge.ends[0]);
            let b = find(&mut parent, edge.ends[1]);
            parent[a] = b;
        }
        let components = (0..self.vertices.len())
            .filter(|&v| find(&mut parent, v) == v)
            .count();
        self.edges.len() + components - self.vertices.len()
    }

    pub fn genus(&self) -> usize {
        self.betti() + self.vertices.iter().map(|v| v.weight).sum::<usize>()
    }

    pub fn is_stable(&self) -> bool {
        (0..self.vertices.len()).all(|v| self.vertices[v].weight > 0 || self.valence(v) >= 3)
    }

    /// Contracts an edge: a loop is removed and its vertex weight bumped,
    /// otherwise the endpoints merge with weights added. Returns the new
    /// graph and, per old edge index, its new index (the contracted edge
    /// maps to `None`).
    pub fn contract_edge(&self, edge: usize) -> (StableGraph, Vec<Option<usize>>) {
        let target = &self.edges[edge];
        let [u, v] = target.ends;
        let mut vertices = self.vertices.clone();
        let mut remap: Vec<usize> = (0..vertices.len()).collect();
        if u == v {
            vertices[u].weight += 1;
        } else {
            let (keep, gone) = (u.min(v), u.max(v));
            vertices[keep].weight += vertices[gone].weight;
            vertices.remove(gone);
            for (old, slot) in remap.iter_mut().enumerate() {
                *slot = match old {
                    o if o == gone => keep,
                    o if o > gone => o - 1,
                    o => o,
                };
            }
        }
        let mut edges = Vec::new();
        let mut edge_map = vec![None; self.edges.len()];
        for (i, e) in self.edges.iter().enumerate() {
            if i == edge {
                continue;
            }
            edge_map[i] = Some(edges.len());
            edges.push(StableEdge {
                ends: [remap[e.ends[0]], remap[e.ends[1]]],
                path: e.path.clone(),
            });
        }
        let legs = self
            .legs
            .iter()
            .map(|l| StableLeg {
                vertex: remap[l.vertex],
                source_mark: l.source_mark,
                path: l.path.clone(),
            })
            .collect();
        let graph = StableGraph {
            vertices,
            edges,
            legs,
            dropped_edges: self.dropped_edges.clone(),
        };
        (graph, edge_map)
    }

    /// Canonical encoding of the isomorphism class (weights, multigraph
    /// shape, labeled legs), by refinement plus minimization over
    /// class-respecting vertex orderings.
    pub fn canonical_key(&self) -> String {
        let (key, _) = self.canonical_key_and_automorphisms();
        key
    }

    /// The canonical key together with all vertex bijections onto the
    /// canonical ordering; their pairwise compositions are the automorphism
    /// group of the graph.
    pub fn canonical_key_and_automorphisms(&self) -> (String, Vec<Vec<usize>>) {
        let classes = refine_vertex_classes(self);
        let mut best: Option<(String, Vec<Vec<usize>>)> = None;
        for_each_class_ordering(&classes, self.vertices.len(), &mut |order| {
            // order[v] = new index of old vertex v.
            let key = self.encode_under(order);
            match &mut best {
                Some((current, witnesses)) => {
                    if key < *current {
                        *current = key;
                        *witnesses = vec![order.to_vec()];
                    } else if key == *current {
                        witnesses.push(order.to_vec());
                    }
                }
                None => best = Some((key, vec![order.to_vec()])),
            }
        });
        best.expect("graphs are nonempty")
    }

    fn encode_under(&self, order: &[usize]) -> String {
        let mut out = String::new();
        let mut inverse = vec![0usize; order.len()];
        for (old, &new) in order.iter().enumerate() {
            inverse[new] = old;
        }
        out.push_str("v:");
        for &old in &inverse {
            let _ = write!(out, "{},", self.vertices[old].weight);
        }
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|e| {
                let a = order[e.ends[0]];
                let b = order[e.ends[1]];
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        out.push_str("e:");
        for (a, b) in edges {
            let _ = write!(out, "{a}-{b},");
        }
        let mut legs: Vec<(usize, usize)> = self
            .legs
            .iter()
            .map(|l| (l.source_mark, order[l.vertex]))
            .collect();
        legs.sort_unstable();
        out.push_str("l:");
        for (mark, vertex) in legs {
            let _ = write!(out, "a{mark}@{vertex},");
        }
        out
    }

    /// DOT export with weights and source-mark labels.
    pub fn to_dot(&self, portrait: &Portrait) -> String {
        let mut out = String::from("graph stable {\n  node [shape=circle];\n");
        for (v, vertex) in self.vertices.iter().enumerate() {
            let label = if vertex.weight > 0 {
                format!("{}", vertex.weight)
            } else {
                String::new()
            };
            let _ = writeln!(out, "  s{v} [label=\"{label}\"];");
        }
        for edge in &self.edges {
            let _ = writeln!(out, "  s{} -- s{};", edge.ends[0], edge.ends[1]);
        }
        for leg in &self.legs {
            let name = &portrait.source_marks()[leg.source_mark];
            let _ = writeln!(
                out,
                "  s{} -- leg_{} [label=\"{name}\"];\n  leg_{} [shape=none, label=\"\"];",
                leg.vertex, leg.source_mark, leg.source_mark
            );
        }
        out.push_str("}\n");
        out
    }
}

/// Vertex classes invariant under isomorphism: weight, valence, sorted leg
/// labels, refined by neighbor classes until stable.
fn refine_vertex_classes(graph: &StableGraph) -> Vec<usize> {
    let n = graph.vertices.len();
    let initial: Vec<(usize, usize, Vec<usize>)> = (0..n)
        .map(|v| {
            let mut legs: Vec<usize> = graph
                .legs
                .iter()
                .filter(|l| l.vertex == v)
                .map(|l| l.source_mark)
                .collect();
            legs.sort_unstable();
            (graph.vertices[v].weight, graph.valence(v), legs)
        })
        .collect();
    let mut classes = rank_by_key(&initial);
    loop {
        let refined: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut neighbors: Vec<usize> = graph
                    .edges
                    .iter()
                    .flat_map(|e| {
                        let mut out = Vec::new();
                        if e.ends[0] == v {
                            out.push(classes[e.ends[1]]);
                        }
                        if e.ends[1] == v {
                            out.push(classes[e.ends[0]]);
                        }
                        out
                    })
                    .collect();
                neighbors.sort_unstable();
                (classes[v], neighbors)
            })
            .collect();
        let next = rank_by_key(&refined);
        if next == classes {
            return classes;
        }
        classes = next;
    }
}

fn rank_by_key<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

/// Enumerates all vertex orderings that list class-0 vertices first, then
/// class-1, and so on, permuting freely within classes.
fn for_each_class_ordering(classes: &[usize], n: usize, emit: &mut impl FnMut(&[usize])) {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &c) in classes.iter().enumerate() {
        by_class.entry(c).or_default().push(v);
    }
    let groups: Vec<Vec<usize>> = by_class.into_values().collect();
    // Flattened slot list: slot k holds group slots in group order, so a
    // permutation within each group is a choice of member per slot.
    let mut order = vec![0usize; n];
    let mut used = vec![false; n];
    fn rec(
        groups: &[Vec<usize>],
        group: usize,
        slot: usize,
        offset: usize,
        used: &mut Vec<bool>,
        order: &mut Vec<usize>,
        emit: &mut impl FnMut(&[usize]),
    ) {
        if group == groups.len() {
            emit(order);
            return;
        }
        let members = &groups[group];
        if slot == members.len() {
            rec(
                groups,
                group + 1,
                0,
                offset + members.len(),
                used,
                order,
                emit,
            );
            return;
        }
        for &v in members {
            if !used[v] {
                used[v] = true;
                order[v] = offset + slot;
                rec(groups, group, slot + 1, offset, used, order, emit);
                used[v] = false;
            }
        }
    }
    rec(&groups, 0, 0, 0, &mut used, &mut order, emit);
}

/// A combinatorial admissible cover: the source graph over its target tree.
/// The vertex and half-edge maps are carried by the source graph itself.
#[derive(Clone, Debug)]
pub struct CombCover {
    pub target: MarkedTree,
    pub source: SourceGraph,
}

impl CombCover {
    /// Least common multiple of the expansion factors over a target edge.
    pub fn expansion_lcm(&self, split: Split) -> Result<u64> {
        if !self.target.has_split(split) {
            return Err(Error::InvalidInput(format!(
                "split {} is not an edge of the target tree",
                split.key()
            )));
        }
        Ok(self
            .source
            .edges
            .iter()
            .filter(|e| e.split() == split)
            .fold(1u64, |acc, e| lcm(acc, e.expansion as u64)))
    }

    /// Expansion factors over every target edge, in split order.
    pub fn expansion_lcms(&self) -> Vec<(Split, u64)> {
        self.target
            .splits()
            .iter()
            .map(|&s| (s, self.expansion_lcm(s).expect("own split")))
            .collect()
    }

    /// Checks that for each source vertex and each incident tree half-edge,
    /// the cycle lengths over it sum to the orbit size.
    pub fn check_harmonicity(&self, decoration: &Decoration) -> Result<()> {
        let incidence = self.target.incidence();
        for (v, vertex) in self.source.vertices.iter().enumerate() {
            for &half in &incidence.vertices[vertex.tree_vertex] {
                let total: usize = decoration
                    .mon_of(half)
                    .cycles()
                    .iter()
                    .filter(|c| vertex.orbit.contains(&c.min_point()))
                    .map(Cycle::len)
                    .sum();
                if total != vertex.orbit.len() {
                    return Err(Error::Defect(format!(
                        "harmonicity fails at source vertex {v} over {}",
                        half.key()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Isomorphism-invariant key of the cover: the target tree (rigid, so
    /// the isomorphism is the identity there) plus the canonical form of
    /// the fibered source graph under refinement and minimization over
    /// class-respecting vertex orderings.
    pub fn canonical_key(&self) -> String {
        let n = self.source.vertices.len();
        // Invariants preserved by cover isomorphisms: the tree vertex, the
        // weight, and the multiset of incident (tree half-edge, expansion,
        // leg label) items. Orbits are labels on {1..d} and excluded.
        let initial: Vec<(usize, usize, Vec<String>)> = (0..n)
            .map(|v| {
                let mut items: Vec<String> = Vec::new();
                for edge in &self.source.edges {
                    for end in &edge.ends {
                        if end.vertex == v {
                            items.push(format!("{}x{}", end.tree_half.key(), edge.expansion));
                        }
                    }
                }
                for leg in &self.source.legs {
                    if leg.vertex == v {
                        items.push(format!(
                            "{}a{}x{}",
                            leg.tree_leg.key(),
                            leg.source_mark,
                            leg.expansion
                        ));
                    }
                }
                items.sort();
                (
                    self.source.vertices[v].tree_vertex,
                    self.source.vertices[v].weight,
                    items,
                )
            })
            .collect();
        let mut classes = rank_by_key(&initial);
        loop {
            let refined: Vec<(usize, Vec<usize>)> = (0..n)
                .map(|v| {
                    let mut neighbors: Vec<usize> = self
                        .source
                        .edges
                        .iter()
                        .flat_map(|e| {
                            let mut out = Vec::new();
                            if e.ends[0].vertex == v {
                                out.push(classes[e.ends[1].vertex]);
                            }
                            if e.ends[1].vertex == v {
                                out.push(classes[e.ends[0].vertex]);
                            }
                            out
                        })
                        .collect();
                    neighbors.sort_unstable();
                    (classes[v], neighbors)
                })
                .collect();
            let next = rank_by_key(&refined);
            if next == classes {
                break;
            }
            classes = next;
        }
        let mut best: Option<String> = None;
        for_each_class_ordering(&classes, n, &mut |order| {
            let mut out = String::new();
            let mut inverse = vec![0usize; n];
            for (old, &new) in order.iter().enumerate() {
                inverse[new] = old;
            }
            out.push_str("v:");
            for &old in &inverse {
                let _ = write!(
                    out,
                    "{}w{},",
                    self.source.vertices[old].tree_vertex, self.source.vertices[old].weight
                );
            }
            let mut edges: Vec<String> = self
                .source
                .edges
                .iter()
                .map(|e| {
                    let a = order[e.ends[0].vertex];
                    let b = order[e.ends[1].vertex];
                    format!(
                        "{}-{}:{}x{}",
                        a.min(b),
                        a.max(b),
                        e.split().key(),
                        e.expansion
                    )
                })
                .collect();
            edges.sort();
            out.push_str("e:");
            out.push_str(&edges.join(","));
            let mut legs: Vec<String> = self
                .source
                .legs
                .iter()
                .map(|l| {
                    format!(
                        "a{}@{}:{}x{}",
                        l.source_mark,
                        order[l.vertex],
                        l.tree_leg.key(),
                        l.expansion
                    )
                })
                .collect();
            legs.sort();
            out.push_str(";l:");
            out.push_str(&legs.join(","));
            if best.as_ref().map(|b| out < *b).unwrap_or(true) {
                best = Some(out);
            }
        });
        format!("{};g:{}", self.target.key(), best.expect("nonempty"))
    }

    /// Cover isomorphism: the identity on the target tree and a label-,
    /// weight- and expansion-preserving isomorphism of source graphs
    /// commuting with the maps.
    pub fn is_isomorphic(&self, other: &CombCover) -> bool {
        self.target == other.target && self.canonical_key() == other.canonical_key()
    }

    /// DOT export as a two-layer diagram: source above target, dashed map
    /// edges, expansion factors as edge labels.
    pub fn to_dot(&self, portrait: &Portrait) -> String {
        let mut out = String::from("graph cover {\n");
        out.push_str("  subgraph cluster_source {\n    label=\"source\";\n");
        for (v, vertex) in self.source.vertices.iter().enumerate() {
            let _ = writeln!(
                out,
                "    g{v} [shape=circle, label=\"{}\"];",
                if vertex.weight > 0 {
                    vertex.weight.to_string()
                } else {
                    String::new()
                }
            );
        }
        for edge in &self.source.edges {
            let _ = writeln!(
                out,
                "    g{} -- g{} [label=\"{}\"];",
                edge.ends[0].vertex, edge.ends[1].vertex, edge.expansion
            );
        }
        for leg in &self.source.legs {
            let name = &portrait.source_marks()[leg.source_mark];
            let _ = writeln!(
                out,
                "    g{} -- gleg_{} [label=\"{name} x{}\"];\n    gleg_{} [shape=none, label=\"\"];",
                leg.vertex, leg.source_mark, leg.expansion, leg.source_mark
            );
        }
        out.push_str("  }\n  subgraph cluster_target {\n    label=\"target\";\n");
        let incidence = self.target.incidence();
        for v in 0..incidence.num_vertices() {
            let _ = writeln!(out, "    t{v} [shape=circle, label=\"\"];");
        }
        for &split in self.target.splits() {
            let a = incidence.vertex_of(HalfEdge::End {
                split,
                toward_split: true,
            });
            let b = incidence.vertex_of(HalfEdge::End {
                split,
                toward_split: false,
            });
            let _ = writeln!(out, "    t{a} -- t{b};");
        }
        for (b, name) in portrait.target_marks().iter().enumerate() {
            let v = incidence.vertex_of(HalfEdge::Leg(b));
            let _ = writeln!(
                out,
                "    t{v} -- tleg_{b} [label=\"{name}\"];\n    tleg_{b} [shape=none, label=\"\"];"
            );
        }
        out.push_str("  }\n");
        for (v, vertex) in self.source.vertices.iter().enumerate() {
            let _ = writeln!(out, "  g{v} -- t{} [style=dashed];", vertex.tree_vertex);
        }
        out.push_str("}\n");
        out
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    let g = {
        let (mut a, mut b) = (a, b);
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a.max(1)
    };
    a / g * b
}

/// Builds the source graph of a class representative; every invariant is
/// checked before returning.
pub fn source_graph(portrait: &Portrait, class: &HurwitzClass) -> Result<SourceGraph> {
    source_graph_of(portrait, &class.representative)
}

/// Builds the source graph of a decoration.
pub fn source_graph_of(portrait: &Portrait, decoration: &Decoration) -> Result<SourceGraph> {
    let degree = portrait.degree();
    let tree = decoration.tree();
    let incidence = tree.incidence();
    let mut vertices: Vec<SourceVertex> = Vec::new();
    for (tree_vertex, halves) in incidence.vertices.iter().enumerate() {
        let generators: Vec<_> = halves
            .iter()
            .map(|&h| decoration.mon_of(h).clone())
            .collect();
        for orbit in orbits(degree, &generators) {
            // Local Riemann-Hurwitz: sum over cycles c inside the orbit of
            // (len(c) - 1), minus 2g, equals 2|O| - 2.
            let ramification: usize = halves
                .iter()
                .flat_map(|&h| decoration.mon_of(h).cycles())
                .filter(|c| orbit.contains(&c.min_point()))
                .map(|c| c.len() - 1)
                .sum();
            let twice = ramification as i64 - (2 * orbit.len() as i64 - 2);
            if twice < 0 || twice % 2 != 0 {
                return Err(Error::Defect(format!(
                    "local genus at tree vertex {tree_vertex}, orbit {orbit:?} is {twice}/2"
                )));
            }
            vertices.push(SourceVertex {
                tree_vertex,
                orbit,
                weight: (twice / 2) as usize,
            });
        }
    }
    let vertex_of = |tree_vertex: usize, point: usize| -> usize {
        vertices
            .iter()
            .position(|v| v.tree_vertex == tree_vertex && v.orbit.contains(&point))
            .expect("orbits cover the points")
    };
    let mut edges = Vec::new();
    for &split in tree.splits() {
        let outer = HalfEdge::End {
            split,
            toward_split: true,
        };
        let inner = HalfEdge::End {
            split,
            toward_split: false,
        };
        let outer_vertex = incidence.vertex_of(outer);
        let inner_vertex = incidence.vertex_of(inner);
        for cycle in decoration.mon_of(outer).cycles() {
            // The inverse permutation has a support-equal cycle.
            let partner_cycle = decoration.mon_of(inner).cycle_of(cycle.min_point());
            if partner_cycle.support().len() != cycle.support().len() {
                return Err(Error::Defect(format!(
                    "cycle pairing broke over edge {}",
                    split.key()
                )));
            }
            edges.push(SourceEdge {
                expansion: cycle.len(),
                ends: [
                    SourceHalf {
                        vertex: vertex_of(outer_vertex, cycle.min_point()),
                        tree_half: outer,
                        cycle: cycle.clone(),
                    },
                    SourceHalf {
                        vertex: vertex_of(inner_vertex, partner_cycle.min_point()),
                        tree_half: inner,
                        cycle: partner_cycle,
                    },
                ],
            });
        }
    }
    let mut legs = Vec::new();
    for a in 0..portrait.num_source_marks() {
        let (tree_leg, cycle) = decoration.cyc_of(portrait, a);
        let leg_vertex = incidence.vertex_of(tree_leg);
        legs.push(SourceLeg {
            vertex: vertex_of(leg_vertex, cycle.min_point()),
            source_mark: a,
            tree_leg,
            expansion: cycle.len(),
            cycle,
        });
    }
    let graph = SourceGraph {
        vertices,
        edges,
        legs,
    };
    if graph.connected_components() != 1 {
        return Err(Error::Defect(
            "source graph of a transitive decoration is disconnected".into(),
        ));
    }
    if graph.betti() + graph.total_weight() != portrait.genus() {
        return Err(Error::Defect(format!(
            "genus identity fails: b1 {} + weights {} != portrait genus {}",
            graph.betti(),
            graph.total_weight(),
            portrait.genus()
        )));
    }
    Ok(graph)
}

/// The combinatorial admissible cover induced by a class.
pub fn comb_cover(portrait: &Portrait, class: &HurwitzClass) -> Result<CombCover> {
    let source = source_graph(portrait, class)?;
    let cover = CombCover {
        target: class.tree.clone(),
        source,
    };
    cover.check_harmonicity(&class.representative)?;
    // Expansion factors over each tree edge form a partition of the degree.
    for &split in cover.target.splits() {
        let total: usize = cover
            .source
            .edges
            .iter()
            .filter(|e| e.split() == split)
            .map(|e| e.expansion)
            .sum();
        if total != portrait.degree() {
            return Err(Error::Defect(format!(
                "expansions over {} sum to {total}, not the degree",
                split.key()
            )));
        }
    }
    Ok(cover)
}

/// Stabilization: weight-zero valence-one vertices are contracted into
/// their neighbor (their edge is dropped), and weight-zero valence-two
/// vertices are absorbed, concatenating paths. Genus and markings are
/// preserved; the result is stable.
pub fn stabilize(graph: &SourceGraph) -> Result<StableGraph> {
    let mut vertices: Vec<Option<StableVertex>> = (0..graph.vertices.len())
        .map(|v| {
            Some(StableVertex {
                weight: graph.vertices[v].weight,
                origin: v,
            })
        })
        .collect();
    let mut edges: Vec<Option<StableEdge>> = graph
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            Some(StableEdge {
                ends: [e.ends[0].vertex, e.ends[1].vertex],
                path: vec![i],
            })
        })
        .collect();
    let mut legs: Vec<StableLeg> = graph
        .legs
        .iter()
        .map(|l| StableLeg {
            vertex: l.vertex,
            source_mark: l.source_mark,
            path: Vec::new(),
        })
        .collect();
    let mut dropped: Vec<usize> = Vec::new();

    loop {
        let incident = |v: usize, edges: &[Option<StableEdge>], legs: &[StableLeg]| {
            let mut edge_slots: Vec<usize> = Vec::new();
            for (i, e) in edges.iter().enumerate() {
                if let Some(e) = e {
                    for &end in &e.ends {
                        if end == v {
                            edge_slots.push(i);
                        }
                    }
                }
            }
            let leg_slots: Vec<usize> = legs
                .iter()
                .enumerate()
                .filter(|(_, l)| l.vertex == v)
                .map(|(i, _)| i)
                .collect();
            (edge_slots, leg_slots)
        };
        let unstable = (0..vertices.len()).find(|&v| {
            vertices[v]
                .as_ref()
                .map(|vertex| {
                    if vertex.weight > 0 {
                        return false;
                    }
                    let (edge_slots, leg_slots) = incident(v, &edges, &legs);
                    edge_slots.len() + leg_slots.len() < 3
                })
                .unwrap_or(false)
        });
        let Some(v) = unstable else { break };
        let (edge_slots, leg_slots) = incident(v, &edges, &legs);
        match (edge_slots.len(), leg_slots.len()) {
            (1, 0) => {
                // Pendant vertex: contract it into its neighbor.
                let e = edge_slots[0];
                let removed = edges[e].take().expect("live edge");
                dropped.extend(removed.path);
                vertices[v] = None;
            }
            (2, 0) => {
                // Absorb into a single edge joining the far endpoints.
                let (e1, e2) = (edge_slots[0], edge_slots[1]);
                if e1 == e2 {
                    return Err(Error::Defect(
                        "weight-zero vertex carrying only a loop".into(),
                    ));
                }
                let first = edges[e1].take().expect("live edge");
                let second = edges[e2].take().expect("live edge");
                let far1 = if first.ends[0] == v {
                    first.ends[1]
                } else {
                    first.ends[0]
                };
                let far2 = if second.ends[0] == v {
                    second.ends[1]
                } else {
                    second.ends[0]
                };
                // Orient the path through v: first's edges then second's.
                let mut path = first.path.clone();
                if first.ends[1] != v {
                    path.reverse();
                }
                let mut tail = second.path.clone();
                if second.ends[0] != v {
                    tail.reverse();
                }
                path.extend(tail);
                edges.push(Some(StableEdge {
                    ends: [far1, far2],
                    path,
                }));
                vertices[v] = None;
            }
            (1, 1) => {
                // Absorb into the leg: it moves to the far endpoint.
                let e = edge_slots[0];
                let removed = edges[e].take().expect("live edge");
                let far = if removed.ends[0] == v {
                    removed.ends[1]
                } else {
                    removed.ends[0]
                };
                let leg = &mut legs[leg_slots[0]];
                leg.vertex = far;
                let mut path = removed.path;
                if removed.ends[0] == v {
                    // Keep leg paths ordered outward from the leg's vertex.
                    path.reverse();
                }
                leg.path.extend(path);
                vertices[v] = None;
            }
            (0, _) | (2, _) | (_, _) => {
                return Err(Error::Defect(format!(
                    "unreachable unstable configuration at source vertex {v}"
                )));
            }
        }
    }

    // Compact the survivors.
    let mut vertex_map = vec![usize::MAX; vertices.len()];
    let mut out_vertices = Vec::new();
    for (v, vertex) in vertices.iter().enumerate() {
        if let Some(vertex) = vertex {
            vertex_map[v] = out_vertices.len();
            out_vertices.push(vertex.clone());
        }
    }
    let mut out_edges: Vec<StableEdge> = edges
        .into_iter()
        .flatten()
        .map(|e| StableEdge {
            ends: [vertex_map[e.ends[0]], vertex_map[e.ends[1]]],
            path: e.path,
        })
        .collect();
    out_edges.sort_by(|a, b| {
        let ka = (
            a.ends[0].min(a.ends[1]),
            a.ends[0].max(a.ends[1]),
            a.path.clone(),
        );
        let kb = (
            b.ends[0].min(b.ends[1]),
            b.ends[0].max(b.ends[1]),
            b.path.clone(),
        );
        ka.cmp(&kb)
    });
    for leg in &mut legs {
        leg.vertex = vertex_map[leg.vertex];
    }
    dropped.sort_unstable();
    let stable = StableGraph {
        vertices: out_vertices,
        edges: out_edges,
        legs,
        dropped_edges: dropped,
    };
    if !stable.is_stable() {
        return Err(Error::Defect(
            "stabilization left an unstable vertex".into(),
        ));
    }
    let original_genus = graph.betti() + graph.total_weight();
    if stable.genus() != original_genus {
        return Err(Error::Defect(format!(
            "stabilization changed the genus from {original_genus} to {}",
            stable.genus()
        )));
    }
    Ok(stable)
}

/// The target stratum of a class: its tree.
pub fn target_stratum(class: &HurwitzClass) -> &MarkedTree {
    &class.tree
}

/// The source stratum of a class: the stabilized source graph.
pub fn source_stratum(portrait: &Portrait, class: &HurwitzClass) -> Result<StableGraph> {
    stabilize(&source_graph(portrait, class)?)
}
