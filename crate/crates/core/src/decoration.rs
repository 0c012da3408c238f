//! Decorated trees: a marked stable tree with a cyclic order of half-edges
//! at each vertex (`ord`), a permutation per half-edge (`mon`), and an
//! injection of source marks into cycles of the leg permutations (`cyc`).
//!
//! A decoration is valid when the cyclic product of the permutations around
//! every vertex is the identity, partner half-edges carry inverse
//! permutations, leg permutations have the prescribed cycle types, the
//! labeled cycles have the prescribed lengths, and the leg permutations
//! generate a transitive group.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::perm::{is_transitive, perms_with_cycle_type, Cycle, Perm};
use crate::portrait::Portrait;
use crate::tree::{HalfEdge, Incidence, MarkedTree, Split};
use crate::{Error, Result};

/// Direction of a braid move.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Clockwise,
    Anticlockwise,
}

impl Direction {
    pub fn opposite(self) -> Direction {
        match self {
            Direction::Clockwise => Direction::Anticlockwise,
            Direction::Anticlockwise => Direction::Clockwise,
        }
    }
}

/// A violated decoration condition, with the witnessing vertex, edge or mark.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Condition (i): the cyclic product at a vertex is not the identity.
    CyclicProduct { vertex: usize },
    /// Condition (ii): the two half-edges of an edge are not inverses.
    EdgeInverses { split: Split },
    /// Condition (iii): a leg permutation has the wrong cycle type.
    LegCycleType { target_mark: usize },
    /// Condition (iv): a labeled cycle has the wrong length.
    LabeledCycleLength { source_mark: usize },
    /// Condition (v): the leg permutations do not generate a transitive group.
    LegsNotTransitive,
    /// The cycle labeling is not injective.
    LabelCollision { first: usize, second: usize },
}

/// A decoration of a marked stable tree.
///
/// Stored canonically: `ord` cycles are aligned with the incidence vertex
/// order and rotated to start at their minimal half-edge; `mon` is aligned
/// with the canonical half-edge order; `cyc` holds, per source mark, the
/// minimal point of the labeled cycle of the corresponding leg permutation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decoration {
    tree: MarkedTree,
    ord: Vec<Vec<HalfEdge>>,
    mon: Vec<Perm>,
    cyc: Vec<usize>,
}

impl Decoration {
    /// Assembles a decoration from its parts, canonicalizing the storage.
    ///
    /// `ord_cycles` may list the vertex cycles in any order and rotation;
    /// `mon` must assign a permutation to every half-edge. Only structural
    /// coherence is enforced here; the decoration conditions are checked by
    /// [`Decoration::check_conditions`].
    pub fn new(
        portrait: &Portrait,
        tree: MarkedTree,
        ord_cycles: Vec<Vec<HalfEdge>>,
        mon: BTreeMap<HalfEdge, Perm>,
        cyc: Vec<usize>,
    ) -> Result<Decoration> {
        if tree.num_marks() != portrait.num_target_marks() {
            return Err(Error::InvalidInput(
                "tree marks do not match the portrait's target marks".into(),
            ));
        }
        let halves = tree.half_edges();
        let incidence = tree.incidence();
        if mon.len() != halves.len() || !halves.iter().all(|h| mon.contains_key(h)) {
            return Err(Error::InvalidInput(
                "mon must assign a permutation to every half-edge".into(),
            ));
        }
        let degree = portrait.degree();
        if mon.values().any(|p| p.degree() != degree) {
            return Err(Error::InvalidInput(
                "mon values must have the portrait degree".into(),
            ));
        }
        if cyc.len() != portrait.num_source_marks() {
            return Err(Error::InvalidInput(
                "cyc must label a cycle for every source mark".into(),
            ));
        }
        if cyc.iter().any(|&p| p >= degree) {
            return Err(Error::InvalidInput("cyc point out of range".into()));
        }
        if ord_cycles.len() != incidence.vertices.len() {
            return Err(Error::InvalidInput(
                "ord must have one cycle per vertex".into(),
            ));
        }
        let mut ord = Vec::with_capacity(incidence.vertices.len());
        for vertex in &incidence.vertices {
            let cycle = ord_cycles
                .iter()
                .find(|c| {
                    let mut sorted = (*c).clone();
                    sorted.sort();
                    sorted == *vertex
                })
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "no ord cycle matches the half-edges of vertex {vertex:?}"
                    ))
                })?;
            ord.push(rotate_to_min(cycle.clone()));
        }
        let mon_vec: Vec<Perm> = halves.iter().map(|h| mon[h].clone()).collect();
        let mut decoration = Decoration {
            tree,
            ord,
            mon: mon_vec,
            cyc,
        };
        // Pin each label to the minimal point of its cycle.
        for a in 0..decoration.cyc.len() {
            let leg = HalfEdge::Leg(portrait.phi(a));
            let cycle = decoration.mon_of(leg).cycle_of(decoration.cyc[a]);
            decoration.cyc[a] = cycle.min_point();
        }
        Ok(decoration)
    }

    pub fn tree(&self) -> &MarkedTree {
        &self.tree
    }

    /// The vertex cycles of `ord`, aligned with the incidence vertex order.
    pub fn ord_cycles(&self) -> &[Vec<HalfEdge>] {
        &self.ord
    }

    fn half_index(&self, half: HalfEdge) -> usize {
        self.tree
            .half_edges()
            .binary_search(&half)
            .expect("half-edge belongs to the tree")
    }

    pub fn mon_of(&self, half: HalfEdge) -> &Perm {
        &self.mon[self.half_index(half)]
    }

    /// The labeled cycle of a source mark: the leg it sits on and the cycle
    /// of that leg's permutation.
    pub fn cyc_of(&self, portrait: &Portrait, source_mark: usize) -> (HalfEdge, Cycle) {
        let leg = HalfEdge::Leg(portrait.phi(source_mark));
        (leg, self.mon_of(leg).cycle_of(self.cyc[source_mark]))
    }

    /// Stored label points, one per source mark.
    pub fn cyc_points(&self) -> &[usize] {
        &self.cyc
    }

    /// The next half-edge anticlockwise around the vertex of `half`.
    pub fn ord_next(&self, half: HalfEdge) -> HalfEdge {
        let cycle = self
            .ord
            .iter()
            .find(|c| c.contains(&half))
            .expect("half-edge belongs to the tree");
        let at = cycle.iter().position(|&h| h == half).expect("found above");
        cycle[(at + 1) % cycle.len()]
    }

    /// The next half-edge clockwise around the vertex of `half`.
    pub fn ord_prev(&self, half: HalfEdge) -> HalfEdge {
        let cycle = self
            .ord
            .iter()
            .find(|c| c.contains(&half))
            .expect("half-edge belongs to the tree");
        let at = cycle.iter().position(|&h| h == half).expect("found above");
        cycle[(at + cycle.len() - 1) % cycle.len()]
    }

    /// Checks conditions (i)-(v) and injectivity of the labeling; an empty
    /// report means the decoration is valid.
    pub fn check_conditions(&self, portrait: &Portrait) -> Vec<Violation> {
        let mut report = Vec::new();
        let degree = portrait.degree();
        // (i) cyclic products.
        for (vertex, cycle) in self.ord.iter().enumerate() {
            let mut product = Perm::identity(degree);
            for &h in cycle {
                product = self
                    .mon_of(h)
                    .compose(&product)
                    .expect("degrees agree by construction");
            }
            if !product.is_identity() {
                report.push(Violation::CyclicProduct { vertex });
            }
        }
        // (ii) partner half-edges carry inverse permutations.
        for &split in self.tree.splits() {
            let outer = self.mon_of(HalfEdge::End {
                split,
                toward_split: true,
            });
            let inner = self.mon_of(HalfEdge::End {
                split,
                toward_split: false,
            });
            if outer
                .compose(inner)
                .map(|p| !p.is_identity())
                .unwrap_or(true)
            {
                report.push(Violation::EdgeInverses { split });
            }
        }
        // (iii) leg cycle types match the branch profiles.
        for b in 0..portrait.num_target_marks() {
            if &self.mon_of(HalfEdge::Leg(b)).cycle_type() != portrait.branch_profile(b) {
                report.push(Violation::LegCycleType { target_mark: b });
            }
        }
        // (iv) labeled cycles have the prescribed lengths.
        for a in 0..portrait.num_source_marks() {
            let (_, cycle) = self.cyc_of(portrait, a);
            if cycle.len() != portrait.ram(a) {
                report.push(Violation::LabeledCycleLength { source_mark: a });
            }
        }
        // (v) leg permutations generate a transitive group.
        let legs: Vec<Perm> = (0..portrait.num_target_marks())
            .map(|b| self.mon_of(HalfEdge::Leg(b)).clone())
            .collect();
        if !is_transitive(degree, &legs).expect("degrees agree by construction") {
            report.push(Violation::LegsNotTransitive);
        }
        // Injectivity of cyc: marks over the same leg label distinct cycles.
        for a in 0..portrait.num_source_marks() {
            for a2 in a + 1..portrait.num_source_marks() {
                if portrait.phi(a) == portrait.phi(a2) && self.cyc[a] == self.cyc[a2] {
                    report.push(Violation::LabelCollision {
                        first: a,
                        second: a2,
                    });
                }
            }
        }
        report
    }

    /// Contracts the edge, splicing the two vertex cycles: writing the
    /// cycles as `(h h1 .. hk)` and `(h' h1' .. hl')` with the edge ends
    /// first, the merged cycle is `(h1 .. hk h1' .. hl')`. The permutations
    /// and labels restrict unchanged.
    pub fn contract(&self, portrait: &Portrait, split: Split) -> Result<Decoration> {
        if !self.tree.has_split(split) {
            return Err(Error::InvalidInput(format!(
                "split {} is not an edge of the tree",
                split.key()
            )));
        }
        let contracted = self.tree.contract(split)?;
        let outer = HalfEdge::End {
            split,
            toward_split: true,
        };
        let inner = HalfEdge::End {
            split,
            toward_split: false,
        };
        let mut merged = Vec::new();
        let mut cycles = Vec::new();
        for cycle in &self.ord {
            if cycle.contains(&outer) {
                let rotated = rotate_to(cycle.clone(), outer);
                merged.extend_from_slice(&rotated[1..]);
            } else if cycle.contains(&inner) {
                let rotated = rotate_to(cycle.clone(), inner);
                merged.extend_from_slice(&rotated[1..]);
            } else {
                cycles.push(cycle.clone());
            }
        }
        cycles.push(merged);
        let mon: BTreeMap<HalfEdge, Perm> = contracted
            .half_edges()
            .into_iter()
            .map(|h| (h, self.mon_of(h).clone()))
            .collect();
        let result = Decoration::new(portrait, contracted, cycles, mon, self.cyc.clone())?;
        debug_assert!(
            result.check_conditions(portrait).is_empty()
                || !self.check_conditions(portrait).is_empty(),
            "contraction preserves the decoration conditions"
        );
        Ok(result)
    }

    /// Global conjugation by `tau`: `ord` is unchanged, every permutation is
    /// conjugated and every label relabeled through `tau`.
    pub fn global_conjugate(&self, portrait: &Portrait, tau: &Perm) -> Result<Decoration> {
        if tau.degree() != portrait.degree() {
            return Err(Error::DegreeMismatch {
                left: tau.degree(),
                right: portrait.degree(),
            });
        }
        let mut out = self.clone();
        for (a, point) in out.cyc.iter_mut().enumerate() {
            let (_, cycle) = self.cyc_of(portrait, a);
            *point = cycle.relabel(tau).min_point();
        }
        for p in &mut out.mon {
            *p = p.conjugate(tau)?;
        }
        Ok(out)
    }

    /// Braid move at `half`: shifts `half` one step through its neighbor
    /// `next` in the cyclic order, conjugating everything on the component
    /// of the tree minus `base(half)` that contains `half` — by `mon(next)`
    /// anticlockwise, by the inverse of `mon(next)` clockwise. For a leg the
    /// component is the leg itself; for an edge end it is the whole subtree
    /// across the edge, including both ends of that edge.
    pub fn braid_move(
        &self,
        portrait: &Portrait,
        half: HalfEdge,
        direction: Direction,
    ) -> Result<Decoration> {
        let halves = self.tree.half_edges();
        if !halves.contains(&half) {
            return Err(Error::InvalidInput(format!(
                "{} is not a half-edge of the tree",
                half.key()
            )));
        }
        let next = match direction {
            Direction::Anticlockwise => self.ord_next(half),
            Direction::Clockwise => self.ord_prev(half),
        };
        let conjugator = match direction {
            Direction::Anticlockwise => self.mon_of(next).clone(),
            Direction::Clockwise => self.mon_of(next).inverse(),
        };
        let component = component_halves(&self.tree, half);
        let mut out = self.clone();
        // Swap the positions of `half` and `next` in their vertex cycle.
        for cycle in &mut out.ord {
            if cycle.contains(&half) {
                let i = cycle.iter().position(|&h| h == half).expect("present");
                let j = cycle.iter().position(|&h| h == next).expect("same vertex");
                cycle.swap(i, j);
                *cycle = rotate_to_min(cycle.clone());
            }
        }
        for a in 0..out.cyc.len() {
            if component.contains(&HalfEdge::Leg(portrait.phi(a))) {
                let (_, cycle) = self.cyc_of(portrait, a);
                out.cyc[a] = cycle.relabel(&conjugator).min_point();
            }
        }
        for (at, h) in halves.iter().enumerate() {
            if component.contains(h) {
                out.mon[at] = out.mon[at].conjugate(&conjugator)?;
            }
        }
        Ok(out)
    }

    /// The global conjugate minimizing the `(mon, cyc)` vectors over the
    /// given conjugators. The tree and `ord` are untouched by conjugation,
    /// so only the changing parts are built and compared.
    pub(crate) fn min_conjugate(&self, portrait: &Portrait, taus: &[Perm]) -> Decoration {
        let label_cycles: Vec<Cycle> = (0..self.cyc.len())
            .map(|a| self.cyc_of(portrait, a).1)
            .collect();
        let mut best_mon = self.mon.clone();
        let mut best_cyc = self.cyc.clone();
        for tau in taus {
            let mon: Vec<Perm> = self
                .mon
                .iter()
                .map(|p| p.conjugate(tau).expect("equal degrees"))
                .collect();
            let cyc: Vec<usize> = label_cycles
                .iter()
                .map(|c| c.relabel(tau).min_point())
                .collect();
            if (&mon, &cyc) < (&best_mon, &best_cyc) {
                best_mon = mon;
                best_cyc = cyc;
            }
        }
        Decoration {
            tree: self.tree.clone(),
            ord: self.ord.clone(),
            mon: best_mon,
            cyc: best_cyc,
        }
    }

    /// Deterministic total encoding; equal decorations have equal encodings.
    ///
    /// Splits come sorted from the tree; `ord` is serialized vertex by
    /// vertex with each cycle rotated to its minimal half-edge; `mon` values
    /// are one-line images (1-based) in half-edge order; `cyc` lists
    /// `(leg, min point)` in source-mark order.
    pub fn encode(&self, portrait: &Portrait) -> String {
        let mut out = String::with_capacity(128);
        out.push_str(&self.tree.key());
        out.push_str(";o:");
        for cycle in &self.ord {
            out.push('(');
            for (k, h) in cycle.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                out.push_str(&h.key());
            }
            out.push(')');
        }
        out.push_str(";m:");
        for (k, p) in self.mon.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let images: Vec<String> = p.images().iter().map(|&i| (i + 1).to_string()).collect();
            out.push_str(&images.join("."));
        }
        out.push_str(";c:");
        for (a, &point) in self.cyc.iter().enumerate() {
            if a > 0 {
                out.push(',');
            }
            out.push_str(&format!("l{}~{}", portrait.phi(a), point + 1));
        }
        out
    }

    /// DOT export mirroring the usual diagrams: vertices as circles,
    /// half-edge permutations as edge and leg annotations in cycle notation,
    /// labels shown on their leg.
    pub fn to_dot(&self, portrait: &Portrait) -> String {
        let incidence = self.tree.incidence();
        let marks = portrait.target_marks();
        let mut labels_by_leg: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for a in 0..portrait.num_source_marks() {
            let (_, cycle) = self.cyc_of(portrait, a);
            labels_by_leg
                .entry(portrait.phi(a))
                .or_default()
                .push(format!("{}:{}", portrait.source_marks()[a], cycle));
        }
        let mut out = String::from("graph decoration {\n  node [shape=circle, label=\"\"];\n");
        for (v, halves) in incidence.vertices.iter().enumerate() {
            out.push_str(&format!("  v{v};\n"));
            for h in halves {
                if let HalfEdge::Leg(mark) = h {
                    let mut label = format!("{} {}", marks[*mark], self.mon_of(*h));
                    if let Some(tags) = labels_by_leg.get(mark) {
                        label.push_str(&format!(" [{}]", tags.join(", ")));
                    }
                    out.push_str(&format!(
                        "  v{v} -- leg_{mark} [label=\"{label}\", dir=forward];\n  leg_{mark} [shape=none, label=\"\"];\n"
                    ));
                }
            }
        }
        for &split in self.tree.splits() {
            let outer = HalfEdge::End {
                split,
                toward_split: true,
            };
            let a = incidence.vertex_of(outer);
            let b = incidence.vertex_of(outer.partner().expect("edge end"));
            out.push_str(&format!(
                "  v{a} -- v{b} [label=\"{}\"];\n",
                self.mon_of(outer)
            ));
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Debug for Decoration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Decoration[{}", self.tree.key())?;
        write!(f, ";o:")?;
        for cycle in &self.ord {
            write!(f, "(")?;
            for (k, h) in cycle.iter().enumerate() {
                if k > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", h.key())?;
            }
            write!(f, ")")?;
        }
        write!(f, "]")
    }
}

fn rotate_to_min(cycle: Vec<HalfEdge>) -> Vec<HalfEdge> {
    let min = *cycle.iter().min().expect("cycles are nonempty");
    rotate_to(cycle, min)
}

fn rotate_to(mut cycle: Vec<HalfEdge>, first: HalfEdge) -> Vec<HalfEdge> {
    let at = cycle
        .iter()
        .position(|&h| h == first)
        .expect("half-edge in cycle");
    cycle.rotate_left(at);
    cycle
}

/// The half-edges of the component of `tree` minus `base(half)` containing
/// `half`, including `half` itself. Both ends of an edge always travel
/// together.
pub fn component_halves(tree: &MarkedTree, half: HalfEdge) -> BTreeSet<HalfEdge> {
    let mut out = BTreeSet::new();
    match half {
        HalfEdge::Leg(_) => {
            out.insert(half);
        }
        HalfEdge::End {
            split,
            toward_split: true,
        } => {
            // Everything inside the split.
            for mark in split.members() {
                out.insert(HalfEdge::Leg(mark));
            }
            for &other in tree.splits() {
                if other.is_subset_of(split) {
                    out.insert(HalfEdge::End {
                        split: other,
                        toward_split: false,
                    });
                    out.insert(HalfEdge::End {
                        split: other,
                        toward_split: true,
                    });
                }
            }
            out.insert(half);
        }
        HalfEdge::End {
            split,
            toward_split: false,
        } => {
            // Everything outside the split's subtree.
            for mark in 0..tree.num_marks() {
                if !split.contains(mark) {
                    out.insert(HalfEdge::Leg(mark));
                }
            }
            for &other in tree.splits() {
                if other == split || !other.is_subset_of(split) {
                    out.insert(HalfEdge::End {
                        split: other,
                        toward_split: false,
                    });
                    out.insert(HalfEdge::End {
                        split: other,
                        toward_split: true,
                    });
                }
            }
        }
    }
    out
}

/// Enumerates exactly the set of decorations of `tree` for the portrait,
/// each once.
///
/// Cyclic orders and leg permutations with the prescribed cycle types are
/// enumerated outright; edge permutations are propagated inward leaf-first
/// (at a vertex with one unknown half-edge the cyclic product determines it,
/// and partners transport across edges); the cyclic product is then verified
/// at every vertex and the leg permutations are checked for transitivity.
/// An empty result is a valid outcome: the space may be empty.
pub fn enumerate_decorations(portrait: &Portrait, tree: &MarkedTree) -> Result<Vec<Decoration>> {
    if tree.num_marks() != portrait.num_target_marks() {
        return Err(Error::InvalidInput(
            "tree marks do not match the portrait's target marks".into(),
        ));
    }
    let degree = portrait.degree();
    let incidence = tree.incidence();
    let leg_candidates: Vec<Vec<Perm>> = (0..portrait.num_target_marks())
        .map(|b| perms_with_cycle_type(degree, portrait.branch_profile(b)))
        .collect();
    if leg_candidates.iter().any(Vec::is_empty) {
        return Ok(Vec::new());
    }
    let ord_options: Vec<Vec<Vec<HalfEdge>>> = incidence
        .vertices
        .iter()
        .map(|halves| cyclic_orders(halves))
        .collect();

    let mut out = Vec::new();
    let mut ord_choice = vec![0usize; ord_options.len()];
    loop {
        let ord: Vec<Vec<HalfEdge>> = ord_choice
            .iter()
            .enumerate()
            .map(|(v, &k)| ord_options[v][k].clone())
            .collect();
        enumerate_for_ord(portrait, tree, &incidence, &ord, &leg_candidates, &mut out)?;
        if !advance(&mut ord_choice, |i| ord_options[i].len()) {
            break;
        }
    }
    Ok(out)
}

fn enumerate_for_ord(
    portrait: &Portrait,
    tree: &MarkedTree,
    incidence: &Incidence,
    ord: &[Vec<HalfEdge>],
    leg_candidates: &[Vec<Perm>],
    out: &mut Vec<Decoration>,
) -> Result<()> {
    let degree = portrait.degree();
    let mut leg_choice = vec![0usize; leg_candidates.len()];
    loop {
        let legs: Vec<&Perm> = leg_choice
            .iter()
            .enumerate()
            .map(|(b, &k)| &leg_candidates[b][k])
            .collect();
        if let Some(mon) = propagate_edges(degree, tree, incidence, ord, &legs) {
            let owned: Vec<Perm> = legs.iter().map(|&p| p.clone()).collect();
            if is_transitive(degree, &owned)? {
                for cyc in label_assignments(portrait, &legs) {
                    let decoration =
                        Decoration::new(portrait, tree.clone(), ord.to_vec(), mon.clone(), cyc)?;
                    debug_assert!(decoration.check_conditions(portrait).is_empty());
                    out.push(decoration);
                }
            }
        }
        if !advance(&mut leg_choice, |i| leg_candidates[i].len()) {
            break;
        }
    }
    Ok(())
}

/// Solves for the edge permutations given the leg permutations and `ord`.
///
/// Returns the full `mon` map, or `None` when the cyclic product condition
/// cannot be satisfied.
fn propagate_edges(
    degree: usize,
    tree: &MarkedTree,
    incidence: &Incidence,
    ord: &[Vec<HalfEdge>],
    legs: &[&Perm],
) -> Option<BTreeMap<HalfEdge, Perm>> {
    let mut mon: BTreeMap<HalfEdge, Perm> = BTreeMap::new();
    for (b, p) in legs.iter().enumerate() {
        mon.insert(HalfEdge::Leg(b), (*p).clone());
    }
    let mut unknown: Vec<usize> = incidence
        .vertices
        .iter()
        .map(|halves| halves.iter().filter(|h| !h.is_leg()).count())
        .collect();
    let mut queue: VecDeque<usize> = (0..unknown.len()).filter(|&v| unknown[v] == 1).collect();
    while let Some(vertex) = queue.pop_front() {
        if unknown[vertex] != 1 {
            continue;
        }
        let cycle = &ord[vertex];
        let at = cycle
            .iter()
            .position(|h| !mon.contains_key(h))
            .expect("exactly one unknown");
        // With the cycle (h1 .. hk) and the unknown at position j, the
        // cyclic product forces
        // mon(hj) = (mon(hk)..mon(h(j+1)))^-1 . (mon(h(j-1))..mon(h1))^-1.
        let mut before = Perm::identity(degree);
        for h in &cycle[..at] {
            before = mon[h].compose(&before).expect("equal degrees");
        }
        let mut after = Perm::identity(degree);
        for h in &cycle[at + 1..] {
            after = mon[h].compose(&after).expect("equal degrees");
        }
        let solved = after
            .inverse()
            .compose(&before.inverse())
            .expect("equal degrees");
        let half = cycle[at];
        let partner = half.partner().expect("legs are known");
        mon.insert(partner, solved.inverse());
        mon.insert(half, solved);
        unknown[vertex] = 0;
        let other = incidence.vertex_of(partner);
        unknown[other] -= 1;
        if unknown[other] == 1 {
            queue.push_back(other);
        }
    }
    if mon.len() != tree.half_edges().len() {
        return None;
    }
    // Verify the cyclic product at every vertex; solved vertices hold by
    // construction but the last vertex of each peel is a genuine constraint.
    for cycle in ord {
        let mut product = Perm::identity(degree);
        for h in cycle {
            product = mon[h].compose(&product).expect("equal degrees");
        }
        if !product.is_identity() {
            return None;
        }
    }
    Some(mon)
}

/// All injective label assignments consistent with the local degrees:
/// for each target mark, an injection of its fiber into the cycles of the
/// leg permutation with the prescribed lengths.
fn label_assignments(portrait: &Portrait, legs: &[&Perm]) -> Vec<Vec<usize>> {
    let mut assignments = vec![vec![0usize; portrait.num_source_marks()]];
    for (b, leg) in legs.iter().enumerate() {
        let fiber = portrait.fiber(b);
        if fiber.is_empty() {
            continue;
        }
        let cycles = leg.cycles();
        let mut extended = Vec::new();
        for assignment in &assignments {
            let mut partial = vec![(assignment.clone(), Vec::<usize>::new())];
            for &a in &fiber {
                let mut next = Vec::new();
                for (current, used) in &partial {
                    for cycle in &cycles {
                        if cycle.len() == portrait.ram(a) && !used.contains(&cycle.min_point()) {
                            let mut cur = current.clone();
                            cur[a] = cycle.min_point();
                            let mut used = used.clone();
                            used.push(cycle.min_point());
                            next.push((cur, used));
                        }
                    }
                }
                partial = next;
            }
            extended.extend(partial.into_iter().map(|(c, _)| c));
        }
        assignments = extended;
    }
    assignments
}

/// All cyclic orders of a vertex's half-edges: the minimal half-edge is
/// pinned first and the rest permuted, giving (k-1)! orders.
fn cyclic_orders(halves: &[HalfEdge]) -> Vec<Vec<HalfEdge>> {
    let first = halves[0];
    let rest: Vec<HalfEdge> = halves[1..].to_vec();
    let mut out = Vec::new();
    permute(&rest, &mut Vec::new(), &mut |perm| {
        let mut cycle = vec![first];
        cycle.extend_from_slice(perm);
        out.push(cycle);
    });
    out
}

fn permute(rest: &[HalfEdge], chosen: &mut Vec<HalfEdge>, emit: &mut impl FnMut(&[HalfEdge])) {
    if chosen.len() == rest.len() {
        emit(chosen);
        return;
    }
    for &h in rest {
        if !chosen.contains(&h) {
            chosen.push(h);
            permute(rest, chosen, emit);
            chosen.pop();
        }
    }
}

fn advance(choice: &mut [usize], len_of: impl Fn(usize) -> usize) -> bool {
    for (i, slot) in choice.iter_mut().enumerate() {
        *slot += 1;
        if *slot < len_of(i) {
            return true;
        }
        *slot = 0;
    }
    false
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::portrait::fixtures;

    fn perm(d: usize, cycles: &[&[usize]]) -> Perm {
        Perm::from_cycles(d, cycles).unwrap()
    }

    fn split(members: &[usize]) -> Split {
        Split::from_members(members)
    }

    /// The two-vertex fixture decoration of the degree-3 portrait:
    /// ord = (h b1 b2)(h' b3 b4), mon(b1..b4) = (1 2), (2 3), (1 2), (1 3),
    /// mon(h) = (1 2 3), mon(h') = (1 3 2), labels (2) in mon(b4),
    /// (1 2) in mon(b1), (2 3) in mon(b2), (3) in mon(b3).
    pub(crate) fn two_vertex_fixture() -> (Portrait, Decoration) {
        let portrait = fixtures::degree3();
        let s = split(&[2, 3]);
        let tree = MarkedTree::new(4, vec![s]).unwrap();
        let outer = HalfEdge::End {
            split: s,
            toward_split: true,
        };
        let inner = HalfEdge::End {
            split: s,
            toward_split: false,
        };
        let ord = vec![
            vec![outer, HalfEdge::Leg(0), HalfEdge::Leg(1)],
            vec![inner, HalfEdge::Leg(2), HalfEdge::Leg(3)],
        ];
        let mon = BTreeMap::from([
            (HalfEdge::Leg(0), perm(3, &[&[1, 2]])),
            (HalfEdge::Leg(1), perm(3, &[&[2, 3]])),
            (HalfEdge::Leg(2), perm(3, &[&[1, 2]])),
            (HalfEdge::Leg(3), perm(3, &[&[1, 3]])),
            (outer, perm(3, &[&[1, 2, 3]])),
            (inner, perm(3, &[&[1, 3, 2]])),
        ]);
        // Labels as 0-based points: a1 -> (2) in mon(b4), a2 -> (1 2) in
        // mon(b1), a3 -> (2 3) in mon(b2), a4 -> (3) in mon(b3).
        let cyc = vec![1, 0, 1, 2];
        let decoration = Decoration::new(&portrait, tree, ord, mon, cyc).unwrap();
        (portrait, decoration)
    }

    #[test]
    fn fixture_decoration_is_valid() {
        let (portrait, decoration) = two_vertex_fixture();
        assert_eq!(decoration.check_conditions(&portrait), vec![]);
    }

    #[test]
    fn broken_edge_permutation_is_reported() {
        let (portrait, decoration) = two_vertex_fixture();
        let s = split(&[2, 3]);
        let inner = HalfEdge::End {
            split: s,
            toward_split: false,
        };
        let mut broken = decoration.clone();
        let at = broken.half_index(inner);
        broken.mon[at] = perm(3, &[&[1, 2, 3]]);
        let report = broken.check_conditions(&portrait);
        assert!(report.contains(&Violation::CyclicProduct { vertex: 1 }));
        assert!(report.contains(&Violation::EdgeInverses { split: s }));
        assert_eq!(report.len(), 2);
    }

    #[test]
    fn degree1_decorations_are_trivially_valid() {
        let portrait = fixtures::degree1(4);
        for tree in crate::tree::enumerate_stable_trees(4).unwrap() {
            let decorations = enumerate_decorations(&portrait, &tree).unwrap();
            assert!(!decorations.is_empty());
            for d in &decorations {
                assert_eq!(d.check_conditions(&portrait), vec![]);
            }
        }
    }

    #[test]
    fn degree1_one_vertex_tree_has_six_decorations() {
        let portrait = fixtures::degree1(4);
        let tree = MarkedTree::one_vertex(4).unwrap();
        assert_eq!(enumerate_decorations(&portrait, &tree).unwrap().len(), 6);
    }

    #[test]
    fn degree3_one_vertex_count_matches_direct_tuple_enumeration() {
        let portrait = fixtures::degree3();
        let tree = MarkedTree::one_vertex(4).unwrap();
        let decorations = enumerate_decorations(&portrait, &tree).unwrap();
        assert!(!decorations.is_empty());
        for d in &decorations {
            assert_eq!(d.check_conditions(&portrait), vec![]);
        }
        // Independent cross-check: (|B|-1)! cyclic orders times the number
        // of transitive tuples with identity product and prescribed types,
        // times the number of injective labelings (1 here).
        let mut tuples = 0usize;
        let transpositions = perms_with_cycle_type(3, &crate::perm::Partition::new(vec![2, 1]));
        for s1 in &transpositions {
            for s2 in &transpositions {
                for s3 in &transpositions {
                    for s4 in &transpositions {
                        let product = s4
                            .compose(&s3.compose(&s2.compose(s1).unwrap()).unwrap())
                            .unwrap();
                        let tuple = vec![s1.clone(), s2.clone(), s3.clone(), s4.clone()];
                        if product.is_identity() && is_transitive(3, &tuple).unwrap() {
                            tuples += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(tuples, 24);
        assert_eq!(decorations.len(), 6 * tuples);
    }

    #[test]
    fn propagation_solves_the_forced_edge_permutation() {
        let (portrait, _) = two_vertex_fixture();
        let s = split(&[2, 3]);
        let tree = MarkedTree::new(4, vec![s]).unwrap();
        let outer = HalfEdge::End {
            split: s,
            toward_split: true,
        };
        let decorations = enumerate_decorations(&portrait, &tree).unwrap();
        // Every decoration with ord-cycle (h b1 b2), mon(b1) = (1 2) and
        // mon(b2) = (2 3) is forced to mon(h) = (1 2 3).
        let mut seen = 0usize;
        for d in &decorations {
            let left_cycle = &d.ord_cycles()[0];
            let expected_order = vec![HalfEdge::Leg(0), HalfEdge::Leg(1), outer];
            if *left_cycle == expected_order
                && d.mon_of(HalfEdge::Leg(0)) == &perm(3, &[&[1, 2]])
                && d.mon_of(HalfEdge::Leg(1)) == &perm(3, &[&[2, 3]])
            {
                assert_eq!(d.mon_of(outer), &perm(3, &[&[1, 2, 3]]));
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn solved_edges_match_brute_force() {
        // The propagation formula agrees with scanning all of S_d for the
        // unique permutation closing the vertex product.
        let portrait = fixtures::degree3();
        let s = split(&[2, 3]);
        let tree = MarkedTree::new(4, vec![s]).unwrap();
        let outer = HalfEdge::End {
            split: s,
            toward_split: true,
        };
        for d in enumerate_decorations(&portrait, &tree).unwrap() {
            let cycle = d.ord_cycles().iter().find(|c| c.contains(&outer)).unwrap();
            let solutions: Vec<Perm> = crate::perm::all_perms(3)
                .into_iter()
                .filter(|candidate| {
                    let mut product = Perm::identity(3);
                    for &h in cycle.iter() {
                        let p = if h == outer {
                            candidate.clone()
                        } else {
                            d.mon_of(h).clone()
                        };
                        product = p.compose(&product).unwrap();
                    }
                    product.is_identity()
                })
                .collect();
            assert_eq!(solutions, vec![d.mon_of(outer).clone()]);
        }
    }

    #[test]
    fn encode_is_injective_on_enumeration() {
        let portrait = fixtures::degree3();
        for tree in crate::tree::enumerate_stable_trees(4).unwrap() {
            let decorations = enumerate_decorations(&portrait, &tree).unwrap();
            let encodings: BTreeSet<String> =
                decorations.iter().map(|d| d.encode(&portrait)).collect();
            assert_eq!(encodings.len(), decorations.len());
        }
    }

    #[test]
    fn contraction_splices_the_vertex_cycles() {
        let (portrait, decoration) = two_vertex_fixture();
        let contracted = decoration.contract(&portrait, split(&[2, 3])).unwrap();
        assert_eq!(contracted.tree(), &MarkedTree::one_vertex(4).unwrap());
        assert_eq!(
            contracted.ord_cycles(),
            &[vec![
                HalfEdge::Leg(0),
                HalfEdge::Leg(1),
                HalfEdge::Leg(2),
                HalfEdge::Leg(3)
            ]]
        );
        for b in 0..4 {
            assert_eq!(
                contracted.mon_of(HalfEdge::Leg(b)),
                decoration.mon_of(HalfEdge::Leg(b))
            );
        }
        assert_eq!(contracted.cyc_points(), decoration.cyc_points());
        assert_eq!(contracted.check_conditions(&portrait), vec![]);
    }

    #[test]
    fn contractions_commute_on_disjoint_edges() {
        // A caterpillar decoration of a 5-mark degree-1 portrait, contracted
        // twice in either order, gives the identical decoration.
        let portrait = fixtures::degree1(5);
        let tree = MarkedTree::new(5, vec![split(&[3, 4]), split(&[2, 3, 4])]).unwrap();
        for d in enumerate_decorations(&portrait, &tree).unwrap() {
            let e1 = split(&[3, 4]);
            let e2 = split(&[2, 3, 4]);
            let ab = d
                .contract(&portrait, e1)
                .unwrap()
                .contract(&portrait, e2)
                .unwrap();
            let ba = d
                .contract(&portrait, e2)
                .unwrap()
                .contract(&portrait, e1)
                .unwrap();
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn global_conjugation_matches_hand_computation() {
        let (portrait, decoration) = two_vertex_fixture();
        let tau = perm(3, &[&[1, 2, 3]]);
        let conjugated = decoration.global_conjugate(&portrait, &tau).unwrap();
        assert_eq!(conjugated.check_conditions(&portrait), vec![]);
        assert_eq!(conjugated.ord_cycles(), decoration.ord_cycles());
        assert_eq!(conjugated.mon_of(HalfEdge::Leg(0)), &perm(3, &[&[2, 3]]));
        assert_eq!(conjugated.mon_of(HalfEdge::Leg(1)), &perm(3, &[&[1, 3]]));
        assert_eq!(conjugated.mon_of(HalfEdge::Leg(2)), &perm(3, &[&[2, 3]]));
        assert_eq!(conjugated.mon_of(HalfEdge::Leg(3)), &perm(3, &[&[1, 2]]));
        let s = split(&[2, 3]);
        assert_eq!(
            conjugated.mon_of(HalfEdge::End {
                split: s,
                toward_split: true
            }),
            &perm(3, &[&[1, 2, 3]])
        );
        // Labels follow: (2) -> (3), (1 2) -> (2 3), (2 3) -> (1 3), (3) -> (1).
        assert_eq!(conjugated.cyc_points(), &[2, 1, 0, 0]);
    }

    #[test]
    fn global_conjugation_by_identity_and_inverse() {
        let (portrait, decoration) = two_vertex_fixture();
        let id = Perm::identity(3);
        assert_eq!(
            decoration.global_conjugate(&portrait, &id).unwrap(),
            decoration
        );
        for tau in crate::perm::all_perms(3) {
            let round_trip = decoration
                .global_conjugate(&portrait, &tau)
                .unwrap()
                .global_conjugate(&portrait, &tau.inverse())
                .unwrap();
            assert_eq!(round_trip, decoration);
        }
    }

    #[test]
    fn braid_move_at_leg_matches_hand_computation() {
        // Anticlockwise at b3 through b4: mon(b3) = (1 2) is conjugated by
        // mon(b4) = (1 3)(2) into (2 3), and the label (3) moves to (1).
        let (portrait, decoration) = two_vertex_fixture();
        let moved = decoration
            .braid_move(&portrait, HalfEdge::Leg(2), Direction::Anticlockwise)
            .unwrap();
        assert_eq!(moved.check_conditions(&portrait), vec![]);
        assert_eq!(moved.mon_of(HalfEdge::Leg(2)), &perm(3, &[&[2, 3]]));
        assert_eq!(
            moved.mon_of(HalfEdge::Leg(3)),
            decoration.mon_of(HalfEdge::Leg(3))
        );
        assert_eq!(moved.cyc_points()[3], 0);
        assert_eq!(moved.cyc_points()[..3], decoration.cyc_points()[..3]);
        // The cyclic order at the right vertex swapped b3 and b4.
        let s = split(&[2, 3]);
        let inner = HalfEdge::End {
            split: s,
            toward_split: false,
        };
        assert_eq!(
            moved.ord_cycles()[1],
            vec![HalfEdge::Leg(2), inner, HalfEdge::Leg(3)]
        );
    }

    #[test]
    fn braid_move_round_trips() {
        let (portrait, decoration) = two_vertex_fixture();
        for h in decoration.tree().half_edges() {
            for direction in [Direction::Anticlockwise, Direction::Clockwise] {
                let there = decoration.braid_move(&portrait, h, direction).unwrap();
                let back = there
                    .braid_move(&portrait, h, direction.opposite())
                    .unwrap();
                assert_eq!(back, decoration, "round trip at {} failed", h.key());
            }
        }
    }

    #[test]
    fn braid_moves_preserve_validity() {
        let portrait = fixtures::degree3();
        let tree = MarkedTree::one_vertex(4).unwrap();
        for d in enumerate_decorations(&portrait, &tree).unwrap() {
            for h in tree.half_edges() {
                for direction in [Direction::Anticlockwise, Direction::Clockwise] {
                    let moved = d.braid_move(&portrait, h, direction).unwrap();
                    assert_eq!(moved.check_conditions(&portrait), vec![]);
                }
            }
        }
    }

    #[test]
    fn dehn_twist_relation_at_trivalent_vertex() {
        // At a trivalent vertex, valence - 1 = 2 successive anticlockwise
        // moves at h restore ord and conjugate the moved component by the
        // composite of the two conjugators, which the vertex relation forces
        // to be the inverse of mon(h).
        let (portrait, decoration) = two_vertex_fixture();
        let s = split(&[2, 3]);
        let outer = HalfEdge::End {
            split: s,
            toward_split: true,
        };
        for &h in &[HalfEdge::Leg(2), outer] {
            let tau1 = decoration.mon_of(decoration.ord_next(h)).clone();
            let once = decoration
                .braid_move(&portrait, h, Direction::Anticlockwise)
                .unwrap();
            let tau2 = once.mon_of(once.ord_next(h)).clone();
            let twice = once
                .braid_move(&portrait, h, Direction::Anticlockwise)
                .unwrap();
            assert_eq!(twice.ord_cycles(), decoration.ord_cycles());
            let composite = tau2.compose(&tau1).unwrap();
            assert_eq!(composite, decoration.mon_of(h).inverse());
            // Conjugating the component by the composite directly agrees.
            let component = component_halves(decoration.tree(), h);
            let mut expected = decoration.clone();
            for half in &component {
                let at = expected.half_index(*half);
                expected.mon[at] = expected.mon[at].conjugate(&composite).unwrap();
            }
            for a in 0..4 {
                if component.contains(&HalfEdge::Leg(portrait.phi(a))) {
                    let (_, cycle) = decoration.cyc_of(&portrait, a);
                    expected.cyc[a] = cycle.relabel(&composite).min_point();
                }
            }
            assert_eq!(twice, expected);
        }
    }

    #[test]
    fn component_of_edge_end_contains_both_ends() {
        let tree = MarkedTree::new(5, vec![split(&[3, 4]), split(&[2, 3, 4])]).unwrap();
        let big = split(&[2, 3, 4]);
        let small = split(&[3, 4]);
        let inward = component_halves(
            &tree,
            HalfEdge::End {
                split: big,
                toward_split: true,
            },
        );
        assert!(inward.contains(&HalfEdge::Leg(2)));
        assert!(inward.contains(&HalfEdge::Leg(3)));
        assert!(inward.contains(&HalfEdge::End {
            split: big,
            toward_split: false
        }));
        assert!(inward.contains(&HalfEdge::End {
            split: small,
            toward_split: true
        }));
        assert!(!inward.contains(&HalfEdge::Leg(0)));
        let outward = component_halves(
            &tree,
            HalfEdge::End {
                split: small,
                toward_split: false,
            },
        );
        assert!(outward.contains(&HalfEdge::Leg(0)));
        assert!(outward.contains(&HalfEdge::Leg(2)));
        assert!(outward.contains(&HalfEdge::End {
            split: small,
            toward_split: true
        }));
        assert!(!outward.contains(&HalfEdge::Leg(3)));
        assert!(!outward.contains(&HalfEdge::Leg(4)));
    }

    #[test]
    fn braid_moves_commute_with_global_conjugation() {
        let (portrait, decoration) = two_vertex_fixture();
        for tau in crate::perm::all_perms(3) {
            for h in decoration.tree().half_edges() {
                for direction in [Direction::Anticlockwise, Direction::Clockwise] {
                    let a = decoration
                        .global_conjugate(&portrait, &tau)
                        .unwrap()
                        .braid_move(&portrait, h, direction)
                        .unwrap();
                    let b = decoration
                        .braid_move(&portrait, h, direction)
                        .unwrap()
                        .global_conjugate(&portrait, &tau)
                        .unwrap();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn encodings_separate_conjugate_decorations() {
        let (portrait, decoration) = two_vertex_fixture();
        let conjugated = decoration
            .global_conjugate(&portrait, &perm(3, &[&[1, 2, 3]]))
            .unwrap();
        assert_ne!(decoration.encode(&portrait), conjugated.encode(&portrait));
    }

    #[test]
    fn braid_move_rejects_foreign_half_edge() {
        let (portrait, decoration) = two_vertex_fixture();
        let foreign = HalfEdge::End {
            split: split(&[1, 2]),
            toward_split: true,
        };
        assert!(decoration
            .braid_move(&portrait, foreign, Direction::Anticlockwise)
            .is_err());
    }

    #[test]
    fn dot_export_shows_permutations_and_labels() {
        let (portrait, decoration) = two_vertex_fixture();
        let dot = decoration.to_dot(&portrait);
        assert!(dot.contains("(1 2 3)"));
        assert!(dot.contains("a2:(1 2)"));
        assert!(dot.contains("b1"));
    }
}
