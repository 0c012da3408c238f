//! Marked stable trees, stored as compatible families of splits.
//!
//! A tree with legs labeled by the ordered mark set `B` is rigid, so a split
//! set is a canonical, automorphism-free encoding: each edge is the
//! bipartition of `B` it induces, stored as the part that does not contain
//! the first mark. The vertex/half-edge incidence structure is reconstructed
//! on demand.

use std::cmp::Ordering;
use std::fmt;

use crate::{Error, Result};

/// Max number of marks a split bitmask can hold.
const MAX_MARKS: usize = 30;

/// One edge of a marked tree: the side of its bipartition of the marks that
/// does not contain mark 0, as a bitmask over mark indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Split(u32);

impl Split {
    pub fn from_members(members: &[usize]) -> Split {
        let mut mask = 0u32;
        for &m in members {
            assert!(m > 0 && m < MAX_MARKS, "split members exclude mark 0");
            mask |= 1 << m;
        }
        Split(mask)
    }

    pub fn members(self) -> Vec<usize> {
        (0..MAX_MARKS).filter(|&m| self.contains(m)).collect()
    }

    pub fn contains(self, mark: usize) -> bool {
        self.0 >> mark & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Split) -> bool {
        self.0 & other.0 == self.0
    }

    pub fn is_disjoint_from(self, other: Split) -> bool {
        self.0 & other.0 == 0
    }

    /// Two splits of one tree are nested or disjoint.
    pub fn is_compatible_with(self, other: Split) -> bool {
        self.is_subset_of(other) || other.is_subset_of(self) || self.is_disjoint_from(other)
    }

    /// Encoding used in canonical byte strings: members dot-joined.
    pub fn key(self) -> String {
        let members: Vec<String> = self.members().iter().map(usize::to_string).collect();
        members.join(".")
    }
}

impl Ord for Split {
    /// Lexicographic on the sorted member list.
    fn cmp(&self, other: &Self) -> Ordering {
        self.members().cmp(&other.members())
    }
}

impl PartialOrd for Split {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Split{{{}}}", self.key())
    }
}

/// A half-edge of a marked tree, named stably: legs by their mark, edge ends
/// by their split and the side they point toward.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HalfEdge {
    Leg(usize),
    End {
        split: Split,
        /// `true` when the half-edge points toward the split side (the part
        /// without mark 0), `false` when it points toward the complement.
        toward_split: bool,
    },
}

impl fmt::Debug for HalfEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

impl HalfEdge {
    pub fn partner(self) -> Option<HalfEdge> {
        match self {
            HalfEdge::Leg(_) => None,
            HalfEdge::End {
                split,
                toward_split,
            } => Some(HalfEdge::End {
                split,
                toward_split: !toward_split,
            }),
        }
    }

    pub fn is_leg(self) -> bool {
        matches!(self, HalfEdge::Leg(_))
    }

    /// Encoding used in canonical byte strings.
    pub fn key(self) -> String {
        match self {
            HalfEdge::Leg(mark) => format!("l{mark}"),
            HalfEdge::End {
                split,
                toward_split,
            } => format!("e{}{}", split.key(), if toward_split { "+" } else { "-" }),
        }
    }
}

/// A stable tree with legs labeled by marks `0..num_marks`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkedTree {
    num_marks: usize,
    splits: Vec<Split>,
}

impl MarkedTree {
    /// Builds a tree from its split set, checking sizes, pairwise
    /// compatibility and stability of the reconstructed incidence structure.
    pub fn new(num_marks: usize, mut splits: Vec<Split>) -> Result<MarkedTree> {
        if num_marks < 3 {
            return Err(Error::InvalidInput(format!(
                "a marked stable tree needs at least 3 marks, got {num_marks}"
            )));
        }
        if num_marks > MAX_MARKS {
            return Err(Error::InvalidInput(format!(
                "at most {MAX_MARKS} marks are supported"
            )));
        }
        splits.sort();
        splits.dedup();
        for s in &splits {
            if s.contains(0) {
                return Err(Error::InvalidInput(
                    "splits are stored as the side not containing the first mark".into(),
                ));
            }
            if s.members().iter().any(|&m| m >= num_marks) {
                return Err(Error::InvalidInput("split member out of range".into()));
            }
            if s.len() < 2 || s.len() + 2 > num_marks {
                return Err(Error::InvalidInput(format!(
                    "split {} must have between 2 and {} members",
                    s.key(),
                    num_marks - 2
                )));
            }
        }
        for (i, s) in splits.iter().enumerate() {
            for t in &splits[i + 1..] {
                if !s.is_compatible_with(*t) {
                    return Err(Error::InvalidInput(format!(
                        "splits {} and {} are incompatible",
                        s.key(),
                        t.key()
                    )));
                }
            }
        }
        let tree = MarkedTree { num_marks, splits };
        let incidence = tree.incidence();
        if let Some(v) = incidence.vertices.iter().find(|v| v.len() < 3) {
            return Err(Error::Defect(format!(
                "reconstructed vertex {v:?} has valence below 3"
            )));
        }
        Ok(tree)
    }

    pub fn one_vertex(num_marks: usize) -> Result<MarkedTree> {
        MarkedTree::new(num_marks, Vec::new())
    }

    pub fn num_marks(&self) -> usize {
        self.num_marks
    }

    /// Splits in canonical order, one per edge.
    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn num_edges(&self) -> usize {
        self.splits.len()
    }

    pub fn has_split(&self, split: Split) -> bool {
        self.splits.contains(&split)
    }

    /// All half-edges in canonical order: legs by mark, then edge ends.
    pub fn half_edges(&self) -> Vec<HalfEdge> {
        let mut out: Vec<HalfEdge> = (0..self.num_marks).map(HalfEdge::Leg).collect();
        for &split in &self.splits {
            out.push(HalfEdge::End {
                split,
                toward_split: false,
            });
            out.push(HalfEdge::End {
                split,
                toward_split: true,
            });
        }
        out.sort();
        out
    }

    /// Removes the given edge; the result is again stable.
    pub fn contract(&self, split: Split) -> Result<MarkedTree> {
        if !self.has_split(split) {
            return Err(Error::InvalidInput(format!(
                "split {} is not an edge of the tree",
                split.key()
            )));
        }
        let splits = self
            .splits
            .iter()
            .copied()
            .filter(|&s| s != split)
            .collect();
        MarkedTree::new(self.num_marks, splits)
    }

    /// Reconstructs the vertex/half-edge incidence structure.
    ///
    /// Vertices are listed root-first (the region of mark 0), then one per
    /// split in canonical split order; every vertex holds its sorted set of
    /// incident half-edges.
    pub fn incidence(&self) -> Incidence {
        // Parent of split S: the smallest split strictly containing S.
        let parent: Vec<Option<usize>> = self
            .splits
            .iter()
            .map(|&s| {
                self.splits
                    .iter()
                    .enumerate()
                    .filter(|(_, &t)| s != t && s.is_subset_of(t))
                    .min_by_key(|(_, &t)| t.len())
                    .map(|(i, _)| i)
            })
            .collect();
        let mut vertices: Vec<Vec<HalfEdge>> = vec![Vec::new(); self.splits.len() + 1];
        // Edge ends: the vertex inside S points toward the complement, the
        // parent vertex points into S.
        for (i, &split) in self.splits.iter().enumerate() {
            vertices[i + 1].push(HalfEdge::End {
                split,
                toward_split: false,
            });
            let parent_vertex = match parent[i] {
                Some(p) => p + 1,
                None => 0,
            };
            vertices[parent_vertex].push(HalfEdge::End {
                split,
                toward_split: true,
            });
        }
        // Legs: each mark sits at the vertex of the smallest split containing
        // it, or at the root if none does.
        for mark in 0..self.num_marks {
            let owner = self
                .splits
                .iter()
                .enumerate()
                .filter(|(_, s)| s.contains(mark))
                .min_by_key(|(_, s)| s.len())
                .map(|(i, _)| i + 1)
                .unwrap_or(0);
            vertices[owner].push(HalfEdge::Leg(mark));
        }
        for v in &mut vertices {
            v.sort();
        }
        Incidence { vertices }
    }

    /// JSON export with canonical ordering.
    pub fn to_json(&self, marks: &[String]) -> serde_json::Value {
        serde_json::json!({
            "marks": marks,
            "splits": self
                .splits
                .iter()
                .map(|s| s.members().iter().map(|&m| marks[m].clone()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    /// DOT export: legs as arrow-tipped edges labeled by mark name, vertices
    /// as unlabeled circles.
    pub fn to_dot(&self, marks: &[String]) -> String {
        let incidence = self.incidence();
        let mut out = String::from("graph tree {\n  node [shape=circle, label=\"\"];\n");
        for (v, halves) in incidence.vertices.iter().enumerate() {
            out.push_str(&format!("  v{v};\n"));
            for h in halves {
                if let HalfEdge::Leg(mark) = h {
                    out.push_str(&format!(
                        "  v{v} -- leg_{m} [label=\"{label}\", dir=forward];\n  leg_{m} [shape=none, label=\"\"];\n",
                        m = mark,
                        label = marks[*mark],
                    ));
                }
            }
        }
        for &split in &self.splits {
            let a = incidence.vertex_of(HalfEdge::End {
                split,
                toward_split: true,
            });
            let b = incidence.vertex_of(HalfEdge::End {
                split,
                toward_split: false,
            });
            out.push_str(&format!("  v{a} -- v{b};\n"));
        }
        out.push_str("}\n");
        out
    }

    /// Canonical encoding of the split set.
    pub fn key(&self) -> String {
        let splits: Vec<String> = self.splits.iter().map(|s| s.key()).collect();
        format!("t{}:{}", self.num_marks, splits.join("|"))
    }
}

impl fmt::Debug for MarkedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MarkedTree({})", self.key())
    }
}

/// Reconstructed incidence structure of a marked tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incidence {
    /// Sorted half-edge sets, one per vertex; root region first, then one
    /// vertex per split in canonical order.
    pub vertices: Vec<Vec<HalfEdge>>,
}

impl Incidence {
    pub fn vertex_of(&self, half: HalfEdge) -> usize {
        self.vertices
            .iter()
            .position(|v| v.contains(&half))
            .expect("half-edge belongs to the tree")
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
}

/// Every stable tree on the given marks, each exactly once, sorted by
/// (edge count, lexicographic split encoding).
///
/// Trees with labeled legs are rigid, so isomorphism is equality of split
/// sets and plain enumeration of compatible split families is exhaustive.
pub fn enumerate_stable_trees(num_marks: usize) -> Result<Vec<MarkedTree>> {
    if num_marks < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 marks, got {num_marks}"
        )));
    }
    let candidates = candidate_splits(num_marks);
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    extend_families(num_marks, &candidates, 0, &mut chosen, &mut out)?;
    out.sort_by(|a, b| (a.num_edges(), a.splits()).cmp(&(b.num_edges(), b.splits())));
    Ok(out)
}

fn candidate_splits(num_marks: usize) -> Vec<Split> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << (num_marks - 1)) {
        let split = Split(mask << 1);
        if split.len() >= 2 && split.len() + 2 <= num_marks {
            out.push(split);
        }
    }
    out.sort();
    out
}

fn extend_families(
    num_marks: usize,
    candidates: &[Split],
    from: usize,
    chosen: &mut Vec<Split>,
    out: &mut Vec<MarkedTree>,
) -> Result<()> {
    out.push(MarkedTree::new(num_marks, chosen.clone())?);
    for i in from..candidates.len() {
        if chosen.iter().all(|s| s.is_compatible_with(candidates[i])) {
            chosen.push(candidates[i]);
            extend_families(num_marks, candidates, i + 1, chosen, out)?;
            chosen.pop();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(members: &[usize]) -> Split {
        Split::from_members(members)
    }

    #[test]
    fn three_marks_give_one_tree() {
        let trees = enumerate_stable_trees(3).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].num_edges(), 0);
    }

    #[test]
    fn four_marks_give_four_trees() {
        let trees = enumerate_stable_trees(4).unwrap();
        assert_eq!(trees.len(), 4);
        assert_eq!(trees.iter().filter(|t| t.num_edges() == 0).count(), 1);
        assert_eq!(trees.iter().filter(|t| t.num_edges() == 1).count(), 3);
    }

    #[test]
    fn five_marks_give_26_trees() {
        // Independent oracle: filter all subsets of the candidate split set
        // for pairwise compatibility.
        let candidates = candidate_splits(5);
        let mut count = 0usize;
        for subset in 0u32..(1 << candidates.len()) {
            let family: Vec<Split> = candidates
                .iter()
                .enumerate()
                .filter(|(i, _)| subset >> i & 1 == 1)
                .map(|(_, &s)| s)
                .collect();
            let compatible = family
                .iter()
                .enumerate()
                .all(|(i, s)| family[i + 1..].iter().all(|t| s.is_compatible_with(*t)));
            if compatible {
                count += 1;
            }
        }
        assert_eq!(count, 26);

        let trees = enumerate_stable_trees(5).unwrap();
        assert_eq!(trees.len(), 26);
        assert_eq!(trees.iter().filter(|t| t.num_edges() == 1).count(), 10);
        assert_eq!(trees.iter().filter(|t| t.num_edges() == 2).count(), 15);
    }

    #[test]
    fn counts_match_closed_forms() {
        // One-edge trees: bipartitions with both sides of size at least two.
        // Maximal trees are trivalent and counted by (2n-5)!!.
        for (n, one_edge, trivalent) in [(4, 3, 3), (5, 10, 15), (6, 25, 105)] {
            let trees = enumerate_stable_trees(n).unwrap();
            assert_eq!(
                trees.iter().filter(|t| t.num_edges() == 1).count(),
                one_edge
            );
            assert_eq!(
                trees.iter().filter(|t| t.num_edges() == n - 3).count(),
                trivalent
            );
        }
    }

    #[test]
    fn enumeration_is_contraction_closed() {
        let trees = enumerate_stable_trees(5).unwrap();
        for tree in &trees {
            for &s in tree.splits() {
                let contracted = tree.contract(s).unwrap();
                assert!(trees.contains(&contracted));
            }
        }
    }

    #[test]
    fn contract_examples() {
        let tree = MarkedTree::new(4, vec![split(&[2, 3])]).unwrap();
        assert_eq!(
            tree.contract(split(&[2, 3])).unwrap(),
            MarkedTree::one_vertex(4).unwrap()
        );
        // Caterpillar {b1,b2}|{b3}|{b4,b5}: splits {3,4} and {2,3,4}.
        let caterpillar = MarkedTree::new(5, vec![split(&[3, 4]), split(&[2, 3, 4])]).unwrap();
        for &s in caterpillar.splits() {
            let contracted = caterpillar.contract(s).unwrap();
            assert_eq!(contracted.num_edges(), 1);
        }
        assert!(caterpillar.contract(split(&[1, 2])).is_err());
    }

    #[test]
    fn incidence_of_one_vertex_tree() {
        let tree = MarkedTree::one_vertex(4).unwrap();
        let inc = tree.incidence();
        assert_eq!(inc.vertices.len(), 1);
        assert_eq!(
            inc.vertices[0],
            vec![
                HalfEdge::Leg(0),
                HalfEdge::Leg(1),
                HalfEdge::Leg(2),
                HalfEdge::Leg(3)
            ]
        );
    }

    #[test]
    fn incidence_of_two_vertex_tree() {
        let s = split(&[2, 3]);
        let tree = MarkedTree::new(4, vec![s]).unwrap();
        let inc = tree.incidence();
        assert_eq!(inc.vertices.len(), 2);
        // Root holds marks 0, 1 and the end pointing into the split.
        assert_eq!(
            inc.vertices[0],
            vec![
                HalfEdge::Leg(0),
                HalfEdge::Leg(1),
                HalfEdge::End {
                    split: s,
                    toward_split: true
                }
            ]
        );
        assert_eq!(
            inc.vertices[1],
            vec![
                HalfEdge::Leg(2),
                HalfEdge::Leg(3),
                HalfEdge::End {
                    split: s,
                    toward_split: false
                }
            ]
        );
    }

    #[test]
    fn caterpillar_has_three_trivalent_vertices() {
        let caterpillar = MarkedTree::new(5, vec![split(&[3, 4]), split(&[2, 3, 4])]).unwrap();
        let inc = caterpillar.incidence();
        let mut valences: Vec<usize> = inc.vertices.iter().map(Vec::len).collect();
        valences.sort_unstable();
        assert_eq!(valences, vec![3, 3, 3]);
    }

    #[test]
    fn incidence_round_trips_through_splits() {
        for tree in enumerate_stable_trees(6).unwrap() {
            let inc = tree.incidence();
            // Each split appears at exactly two vertices, once per side.
            let mut splits: Vec<Split> = Vec::new();
            for v in &inc.vertices {
                for h in v {
                    if let HalfEdge::End {
                        split,
                        toward_split,
                    } = h
                    {
                        if *toward_split {
                            splits.push(*split);
                        }
                    }
                }
            }
            splits.sort();
            assert_eq!(splits, tree.splits());
            let rebuilt = MarkedTree::new(tree.num_marks(), splits).unwrap();
            assert_eq!(rebuilt.incidence(), inc);
        }
    }

    #[test]
    fn split_order_is_lexicographic_on_members() {
        let a = split(&[1, 4]);
        let b = split(&[2, 3]);
        assert!(a < b);
        assert!(split(&[1, 2]) < split(&[1, 2, 3]));
        assert!(split(&[1, 2, 3]) < split(&[1, 3]));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(enumerate_stable_trees(2).is_err());
        assert!(MarkedTree::new(4, vec![Split(0b0011)]).is_err()); // contains mark 0
        assert!(MarkedTree::new(4, vec![Split(0b0110), Split(0b1100)]).is_err());
        // incompatible
        assert!(MarkedTree::new(4, vec![Split(0b0010)]).is_err()); // too small
    }

    #[test]
    fn dot_export_mentions_all_marks() {
        let marks: Vec<String> = ["b1", "b2", "b3", "b4"].map(String::from).to_vec();
        let tree = MarkedTree::new(4, vec![split(&[2, 3])]).unwrap();
        let dot = tree.to_dot(&marks);
        for m in &marks {
            assert!(dot.contains(m.as_str()));
        }
        assert!(dot.contains("v0 -- v1"));
    }
}
