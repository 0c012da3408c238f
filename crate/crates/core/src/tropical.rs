//! The tropical side: extended cone complexes and the tropical maps.
//!
//! Every stratum class spans an extended orthant with one coordinate per
//! tree edge; cones glue along faces as prescribed by edge contraction. A
//! point of a cone maps to a metric tree (the tropical target: edge lengths
//! `L(e) * x_e`) and to a metric stable graph (the tropical source: lengths
//! pulled back through the cover by `c_e * m_G(e) = m_T(e)` and pushed
//! through the stabilization path map). Forgetting the class and keeping
//! only its cover coarsens the complex; the target map factors through that
//! coarsening.

use std::collections::{BTreeMap, HashMap};

use serde_json::json;

use crate::cover::{comb_cover, stabilize, CombCover, StableGraph};
use crate::portrait::Portrait;
use crate::ratext::{ExtRat, Rat};
use crate::strata::Stratification;
use crate::tree::{MarkedTree, Split};
use crate::{stable_hash, Error, Result};

/// An extended orthant of a cone complex.
#[derive(Clone, Debug)]
pub struct Cone {
    pub id: String,
    pub dim: usize,
    /// Coordinate labels, one per edge of the indexing object.
    pub coords: Vec<String>,
    /// One face per coordinate: the gluing with that coordinate pinned to 0.
    pub faces: Vec<Face>,
}

/// A face map: pinning `zeroed` to 0 lands in `target`, with the remaining
/// coordinates (in order, skipping `zeroed`) placed at `coord_map`.
#[derive(Clone, Debug)]
pub struct Face {
    pub zeroed: usize,
    pub target: String,
    pub coord_map: Vec<usize>,
}

/// An extended cone complex with face gluings.
#[derive(Clone, Debug, Default)]
pub struct ConeComplex {
    cones: Vec<Cone>,
    index: HashMap<String, usize>,
}

impl ConeComplex {
    fn from_cones(cones: Vec<Cone>) -> ConeComplex {
        let index = cones
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();
        ConeComplex { cones, index }
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn cone(&self, id: &str) -> Result<&Cone> {
        self.index
            .get(id)
            .map(|&i| &self.cones[i])
            .ok_or_else(|| Error::UnknownClass(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Checks that pinning two coordinates lands in the same cone in either
    /// order.
    pub fn faces_commute(&self) -> bool {
        self.cones.iter().all(|cone| {
            (0..cone.dim).all(|i| {
                (0..cone.dim).all(|j| {
                    if i == j {
                        return true;
                    }
                    let via_i = self.face_then_face(cone, i, j);
                    let via_j = self.face_then_face(cone, j, i);
                    via_i == via_j
                })
            })
        })
    }

    fn face_then_face(&self, cone: &Cone, first: usize, second: usize) -> Option<String> {
        let face = &cone.faces[first];
        let next = self.cone(&face.target).ok()?;
        // Position of `second` among the surviving coordinates.
        let survivor_position = (0..cone.dim)
            .filter(|&k| k != first)
            .position(|k| k == second)?;
        let landed = face.coord_map[survivor_position];
        Some(next.faces[landed].target.clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "cones": self
                .cones
                .iter()
                .map(|c| {
                    json!({
                        "id": c.id,
                        "dim": c.dim,
                        "coords": c.coords,
                        "faces": c
                            .faces
                            .iter()
                            .map(|f| json!({
                                "zeroed": f.zeroed,
                                "target": f.target,
                                "coord_map": f.coord_map,
                            }))
                            .collect::<Vec<_>>(),
                    })
                })
                .collect::<Vec<_>>(),
        })
    }
}

/// A point of an extended cone: the cone id plus one extended nonnegative
/// rational per coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConePoint {
    pub cone: String,
    pub coords: Vec<ExtRat>,
}

/// A metric tree: a point of the target tropical moduli space. Legs carry
/// length infinity implicitly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricTree {
    pub tree: MarkedTree,
    /// Edge lengths aligned with the tree's splits.
    pub lengths: Vec<ExtRat>,
}

impl MetricTree {
    /// Contracts all zero-length edges.
    pub fn normalized(&self) -> MetricTree {
        let mut tree = self.tree.clone();
        let mut lengths: Vec<(Split, ExtRat)> = tree
            .splits()
            .iter()
            .copied()
            .zip(self.lengths.iter().copied())
            .collect();
        while let Some(at) = lengths.iter().position(|(_, l)| l.is_zero()) {
            let (split, _) = lengths.remove(at);
            tree = tree.contract(split).expect("own split");
        }
        MetricTree {
            tree,
            lengths: lengths.into_iter().map(|(_, l)| l).collect(),
        }
    }

    pub fn to_json(&self, marks: &[String]) -> serde_json::Value {
        json!({
            "tree": self.tree.to_json(marks),
            "lengths": self
                .tree
                .splits()
                .iter()
                .zip(&self.lengths)
                .map(|(s, l)| {
                    json!([s.members().iter().map(|&m| marks[m].clone()).collect::<Vec<_>>(),
                           l.to_string()])
                })
                .collect::<Vec<_>>(),
            "legs": "inf",
        })
    }
}

/// A metric stable graph: a point of the source tropical moduli space,
/// presented by the canonical graph key and the lexicographically minimal
/// length vector over the graph's automorphisms. Legs carry infinity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricStableGraph {
    pub key: String,
    pub graph: StableGraph,
    /// Lengths in canonical edge order, minimized over automorphisms.
    pub lengths: Vec<ExtRat>,
}

impl MetricStableGraph {
    pub fn new(graph: StableGraph, lengths_by_edge: &[ExtRat]) -> MetricStableGraph {
        let (key, lengths) = canonical_metric(&graph, lengths_by_edge);
        MetricStableGraph {
            key,
            graph,
            lengths,
        }
    }

    pub fn genus(&self) -> usize {
        self.graph.genus()
    }

    /// Contracts all zero-length edges, merging weights, and re-canonicalizes.
    pub fn normalized(&self) -> MetricStableGraph {
        let mut graph = self.graph.clone();
        // Recover per-physical-edge lengths from the canonical presentation.
        let mut lengths = physical_lengths(&graph, &self.lengths);
        while let Some(at) = lengths.iter().position(|l| l.is_zero()) {
            let (contracted, edge_map) = graph.contract_edge(at);
            let mut next = vec![ExtRat::zero(); contracted.edges.len()];
            for (old, slot) in edge_map.iter().enumerate() {
                if let Some(&new) = slot.as_ref() {
                    next[new] = lengths[old];
                }
            }
            graph = contracted;
            lengths = next;
        }
        MetricStableGraph::new(graph, &lengths)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "graph": self.key,
            "vertices": self.graph.vertices.iter().map(|v| v.weight).collect::<Vec<_>>(),
            "lengths": self.lengths.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "legs": "inf",
        })
    }
}

/// Lengths per physical edge realizing the canonical presentation.
fn physical_lengths(graph: &StableGraph, canonical: &[ExtRat]) -> Vec<ExtRat> {
    let (_, witnesses) = graph.canonical_key_and_automorphisms();
    let order = &witnesses[0];
    let mut tagged: Vec<(usize, usize, usize)> = graph
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let a = order[e.ends[0]];
            let b = order[e.ends[1]];
            (a.min(b), a.max(b), i)
        })
        .collect();
    tagged.sort_unstable();
    let mut out = vec![ExtRat::zero(); graph.edges.len()];
    for (slot, (_, _, physical)) in tagged.into_iter().enumerate() {
        out[physical] = canonical[slot];
    }
    out
}

/// The canonical metric presentation: the graph's canonical key plus the
/// minimal length vector over all orderings achieving it. Within a bundle
/// of parallel edges, lengths are sorted ascending.
fn canonical_metric(graph: &StableGraph, lengths: &[ExtRat]) -> (String, Vec<ExtRat>) {
    let (key, witnesses) = graph.canonical_key_and_automorphisms();
    let mut best: Option<Vec<ExtRat>> = None;
    for order in &witnesses {
        let mut tagged: Vec<(usize, usize, ExtRat)> = graph
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let a = order[e.ends[0]];
                let b = order[e.ends[1]];
                (a.min(b), a.max(b), lengths[i])
            })
            .collect();
        tagged.sort();
        let candidate: Vec<ExtRat> = tagged.into_iter().map(|(_, _, l)| l).collect();
        if best.as_ref().map(|b| candidate < *b).unwrap_or(true) {
            best = Some(candidate);
        }
    }
    (key, best.unwrap_or_default())
}

struct ClassData {
    tree: MarkedTree,
    cover: CombCover,
    stable: StableGraph,
    /// lcm of the expansion factors over each tree edge, in split order.
    lvec: Vec<u64>,
}

/// The tropical Hurwitz complex of a stratification, with everything needed
/// to evaluate the tropical maps.
pub struct TropicalHurwitz {
    portrait: Portrait,
    complex: ConeComplex,
    classes: BTreeMap<String, ClassData>,
}

impl TropicalHurwitz {
    pub fn new(stratification: &Stratification) -> Result<TropicalHurwitz> {
        let portrait = stratification.portrait().clone();
        let complex = build_hurwitz_complex(stratification);
        let mut classes = BTreeMap::new();
        for class in stratification.classes() {
            let cover = comb_cover(&portrait, class)?;
            let stable = stabilize(&cover.source)?;
            let lvec = cover.expansion_lcms().into_iter().map(|(_, l)| l).collect();
            classes.insert(
                class.id.clone(),
                ClassData {
                    tree: class.tree.clone(),
                    cover,
                    stable,
                    lvec,
                },
            );
        }
        Ok(TropicalHurwitz {
            portrait,
            complex,
            classes,
        })
    }

    pub fn complex(&self) -> &ConeComplex {
        &self.complex
    }

    pub fn portrait(&self) -> &Portrait {
        &self.portrait
    }

    pub fn cover_of(&self, class_id: &str) -> Result<&CombCover> {
        self.class_data(class_id).map(|d| &d.cover)
    }

    pub fn stable_of(&self, class_id: &str) -> Result<&StableGraph> {
        self.class_data(class_id).map(|d| &d.stable)
    }

    pub fn lvec_of(&self, class_id: &str) -> Result<&[u64]> {
        self.class_data(class_id).map(|d| d.lvec.as_slice())
    }

    fn class_data(&self, class_id: &str) -> Result<&ClassData> {
        self.classes
            .get(class_id)
            .ok_or_else(|| Error::UnknownClass(class_id.to_string()))
    }

    fn check_point(&self, point: &ConePoint) -> Result<&ClassData> {
        let data = self.class_data(&point.cone)?;
        if point.coords.len() != data.tree.num_edges() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates but the cone has dimension {}",
                point.coords.len(),
                data.tree.num_edges()
            )));
        }
        Ok(data)
    }

    /// Contracts zero coordinates through face maps until the support is
    /// strictly positive (finite positive or infinite); idempotent.
    pub fn normalize_point(&self, point: &ConePoint) -> Result<ConePoint> {
        self.check_point(point)?;
        let mut current = point.clone();
        loop {
            let cone = self.complex.cone(&current.cone)?;
            let Some(at) = current.coords.iter().position(ExtRat::is_zero) else {
                return Ok(current);
            };
            let face = &cone.faces[at];
            let target = self.complex.cone(&face.target)?;
            let mut coords = vec![ExtRat::zero(); target.dim];
            for (pos, (_, &value)) in current
                .coords
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != at)
                .enumerate()
            {
                coords[face.coord_map[pos]] = value;
            }
            current = ConePoint {
                cone: face.target.clone(),
                coords,
            };
        }
    }

    /// The tropical target map: the metric tree with edge lengths
    /// `L(e) * x_e`; legs are infinite.
    pub fn trop_target(&self, point: &ConePoint) -> Result<MetricTree> {
        let data = self.check_point(point)?;
        let lengths = point
            .coords
            .iter()
            .zip(&data.lvec)
            .map(|(x, &l)| x.mul_int(l))
            .collect();
        Ok(MetricTree {
            tree: data.tree.clone(),
            lengths,
        })
    }

    /// The tropical source map: each source-graph edge over the tree edge
    /// `e` gets length `L(e) * x_e / c`, stable edges sum their paths, and
    /// the result is presented canonically; legs are infinite.
    pub fn trop_source(&self, point: &ConePoint) -> Result<MetricStableGraph> {
        let data = self.check_point(point)?;
        let splits = data.tree.splits();
        let source_lengths: Vec<ExtRat> = data
            .cover
            .source
            .edges
            .iter()
            .map(|edge| {
                let at = splits
                    .iter()
                    .position(|&s| s == edge.split())
                    .expect("edge sits over a tree edge");
                point.coords[at]
                    .mul_int(data.lvec[at])
                    .div_int(edge.expansion as u64)
            })
            .collect();
        let stable_lengths: Vec<ExtRat> = data
            .stable
            .edges
            .iter()
            .map(|edge| {
                edge.path
                    .iter()
                    .fold(ExtRat::zero(), |acc, &i| acc.add(&source_lengths[i]))
            })
            .collect();
        Ok(MetricStableGraph::new(data.stable.clone(), &stable_lengths))
    }

    /// The coordinate map into a cone: `x_e = y_e / L(e)`, so that the
    /// tropical target returns exactly `y`.
    pub fn trop_pi_f(&self, class_id: &str, edge_lengths: &[Rat]) -> Result<ConePoint> {
        let data = self.class_data(class_id)?;
        if edge_lengths.len() != data.tree.num_edges() {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates, got {}",
                data.tree.num_edges(),
                edge_lengths.len()
            )));
        }
        let coords = edge_lengths
            .iter()
            .zip(&data.lvec)
            .map(|(y, &l)| ExtRat::Finite(*y).div_int(l))
            .collect();
        Ok(ConePoint {
            cone: class_id.to_string(),
            coords,
        })
    }

    /// Forgets classes to their covers: cones of the coarser complex are
    /// cover-isomorphism classes, the map is the identity on coordinates,
    /// finite-to-one and surjective. Face maps must agree across a fiber;
    /// disagreement is a defect.
    pub fn forget_to_cmr(
        &self,
        stratification: &Stratification,
    ) -> Result<(ConeComplex, BTreeMap<String, String>)> {
        let mut fiber: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut cover_keys: BTreeMap<String, String> = BTreeMap::new();
        for class in stratification.classes() {
            let key = self.class_data(&class.id)?.cover.canonical_key();
            let cmr_id = format!("c{}", stable_hash(key.as_bytes()));
            fiber
                .entry(cmr_id.clone())
                .or_default()
                .push(class.id.clone());
            cover_keys.insert(class.id.clone(), cmr_id);
        }
        let mut contract_to: HashMap<(String, Split), String> = HashMap::new();
        for edge in stratification.poset() {
            contract_to.insert((edge.child.clone(), edge.split), edge.parent.clone());
        }
        let mut cones = Vec::new();
        for (cmr_id, members) in &fiber {
            let first = self.class_data(&members[0])?;
            let splits = first.tree.splits().to_vec();
            // Every member must induce the same face structure.
            let mut faces = Vec::new();
            for (at, &split) in splits.iter().enumerate() {
                let mut target: Option<String> = None;
                for member in members {
                    let parent = contract_to
                        .get(&(member.clone(), split))
                        .ok_or_else(|| Error::Defect("poset is missing a contraction".into()))?;
                    let parent_cmr = cover_keys
                        .get(parent)
                        .ok_or_else(|| Error::Defect("fiber misses a parent class".into()))?;
                    match &target {
                        Some(t) if t != parent_cmr => {
                            return Err(Error::Defect(format!(
                                "cover contraction is not well defined on {cmr_id}"
                            )));
                        }
                        _ => target = Some(parent_cmr.clone()),
                    }
                }
                let remaining: Vec<Split> =
                    splits.iter().copied().filter(|&s| s != split).collect();
                faces.push(Face {
                    zeroed: at,
                    target: target.expect("members are nonempty"),
                    coord_map: (0..remaining.len()).collect(),
                });
            }
            cones.push(Cone {
                id: cmr_id.clone(),
                dim: splits.len(),
                coords: splits.iter().map(|s| s.key()).collect(),
                faces,
            });
        }
        Ok((ConeComplex::from_cones(cones), cover_keys))
    }

    /// Hurwitz complex JSON: cones with dimensions, face incidence and
    /// L-vectors.
    pub fn to_json(&self) -> serde_json::Value {
        let mut value = self.complex.to_json();
        let cones = value["cones"].as_array_mut().expect("cones array");
        for cone in cones {
            let id = cone["id"].as_str().expect("id").to_string();
            let lvec = self.classes[&id].lvec.clone();
            cone["lvec"] = json!(lvec);
        }
        value
    }
}

/// One extended orthant per class, with faces given by the contraction
/// poset: the contracted edge's coordinate is pinned to zero and the rest
/// are matched by split.
pub fn build_hurwitz_complex(stratification: &Stratification) -> ConeComplex {
    let mut contract_to: HashMap<(String, Split), String> = HashMap::new();
    for edge in stratification.poset() {
        contract_to.insert((edge.child.clone(), edge.split), edge.parent.clone());
    }
    let cones = stratification
        .classes()
        .iter()
        .map(|class| {
            let splits = class.tree.splits().to_vec();
            let faces = splits
                .iter()
                .enumerate()
                .map(|(at, &split)| {
                    let target = contract_to[&(class.id.clone(), split)].clone();
                    // Contraction removes one split; the others keep their
                    // relative order.
                    Face {
                        zeroed: at,
                        target,
                        coord_map: (0..splits.len() - 1).collect(),
                    }
                })
                .collect();
            Cone {
                id: class.id.clone(),
                dim: class.codim,
                coords: splits.iter().map(|s| s.key()).collect(),
                faces,
            }
        })
        .collect();
    ConeComplex::from_cones(cones)
}

/// The target moduli cone complex over the trees reachable from the
/// stratification, glued by edge contraction.
pub fn build_target_complex(stratification: &Stratification) -> ConeComplex {
    let mut trees: BTreeMap<String, MarkedTree> = BTreeMap::new();
    let mut queue: Vec<MarkedTree> = stratification
        .classes()
        .iter()
        .map(|c| c.tree.clone())
        .collect();
    while let Some(tree) = queue.pop() {
        if trees.contains_key(&tree.key()) {
            continue;
        }
        for &split in tree.splits() {
            queue.push(tree.contract(split).expect("own split"));
        }
        trees.insert(tree.key(), tree);
    }
    let cones = trees
        .values()
        .map(|tree| {
            let splits = tree.splits().to_vec();
            let faces = splits
                .iter()
                .enumerate()
                .map(|(at, &split)| Face {
                    zeroed: at,
                    target: tree.contract(split).expect("own split").key(),
                    coord_map: (0..splits.len() - 1).collect(),
                })
                .collect();
            Cone {
                id: tree.key(),
                dim: splits.len(),
                coords: splits.iter().map(|s| s.key()).collect(),
                faces,
            }
        })
        .collect();
    ConeComplex::from_cones(cones)
}

/// The source moduli cone complex over the stable graphs reachable from the
/// stratification, glued by edge contraction. Cones are indexed by the
/// canonical keys of the graphs; coordinates follow the canonical edge
/// order of a representative.
pub fn build_source_complex(tropical: &TropicalHurwitz) -> ConeComplex {
    let mut graphs: BTreeMap<String, StableGraph> = BTreeMap::new();
    let mut queue: Vec<StableGraph> = tropical
        .classes
        .values()
        .map(|d| d.stable.clone())
        .collect();
    while let Some(graph) = queue.pop() {
        let key = graph.canonical_key();
        if graphs.contains_key(&key) {
            continue;
        }
        for edge in 0..graph.edges.len() {
            queue.push(graph.contract_edge(edge).0);
        }
        graphs.insert(key, graph);
    }
    let cones = graphs
        .iter()
        .map(|(key, graph)| {
            let canonical_order = canonical_edge_order(graph);
            let faces = (0..graph.edges.len())
                .map(|slot| {
                    let physical = canonical_order[slot];
                    let (contracted, edge_map) = graph.contract_edge(physical);
                    let target_key = contracted.canonical_key();
                    let target_order = canonical_edge_order(&contracted);
                    let position_of = |physical_new: usize| {
                        target_order
                            .iter()
                            .position(|&p| p == physical_new)
                            .expect("surviving edge is ordered")
                    };
                    let coord_map = (0..graph.edges.len())
                        .filter(|&other| other != slot)
                        .map(|other| {
                            let surviving = edge_map[canonical_order[other]]
                                .expect("only the contracted edge is dropped");
                            position_of(surviving)
                        })
                        .collect();
                    Face {
                        zeroed: slot,
                        target: target_key,
                        coord_map,
                    }
                })
                .collect();
            Cone {
                id: key.clone(),
                dim: graph.edges.len(),
                coords: (0..graph.edges.len()).map(|i| format!("e{i}")).collect(),
                faces,
            }
        })
        .collect();
    ConeComplex::from_cones(cones)
}

/// Physical edge indices in canonical order, under the first canonical
/// vertex ordering; parallel edges are tied by physical index.
fn canonical_edge_order(graph: &StableGraph) -> Vec<usize> {
    let (_, witnesses) = graph.canonical_key_and_automorphisms();
    let order = &witnesses[0];
    let mut tagged: Vec<(usize, usize, usize)> = graph
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let a = order[e.ends[0]];
            let b = order[e.ends[1]];
            (a.min(b), a.max(b), i)
        })
        .collect();
    tagged.sort_unstable();
    tagged.into_iter().map(|(_, _, i)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portrait::fixtures;
    use crate::strata::{stratify, StratifyOptions};

    fn setup(portrait: &Portrait) -> (Stratification, TropicalHurwitz) {
        let s = stratify(portrait, &StratifyOptions::default()).unwrap();
        let t = TropicalHurwitz::new(&s).unwrap();
        (s, t)
    }

    fn boundary_point(s: &Stratification, value: ExtRat) -> ConePoint {
        let class = s.classes_by_codim(1).next().unwrap();
        ConePoint {
            cone: class.id.clone(),
            coords: vec![value],
        }
    }

    #[test]
    fn degree3_complex_has_an_apex_and_six_rays() {
        let portrait = fixtures::degree3();
        let (s, t) = setup(&portrait);
        assert_eq!(t.complex().cones().len(), 7);
        assert_eq!(t.complex().cones().iter().filter(|c| c.dim == 0).count(), 1);
        assert_eq!(t.complex().cones().iter().filter(|c| c.dim == 1).count(), 6);
        let apex = s.components()[0].clone();
        for cone in t.complex().cones().iter().filter(|c| c.dim == 1) {
            assert_eq!(cone.faces[0].target, apex);
        }
    }

    #[test]
    fn degree1_complex_is_the_target_fan() {
        let portrait = fixtures::degree1(4);
        let (_, t) = setup(&portrait);
        assert_eq!(t.complex().cones().len(), 4);
        assert_eq!(t.complex().cones().iter().filter(|c| c.dim == 1).count(), 3);
    }

    #[test]
    fn normalize_point_contracts_zeros() {
        let portrait = fixtures::degree3();
        let (s, t) = setup(&portrait);
        let apex_id = s.components()[0].clone();
        let zero = boundary_point(&s, ExtRat::zero());
        let normalized = t.normalize_point(&zero).unwrap();
        assert_eq!(normalized.cone, apex_id);
        assert!(normalized.coords.is_empty());
        // Idempotent; interior points are fixed.
        let interior = boundary_point(&s, ExtRat::integer(2));
        assert_eq!(t.normalize_point(&interior).unwrap(), interior);
        assert_eq!(t.normalize_point(&normalized).unwrap(), normalized);
    }

    #[test]
    fn two_step_normalization_reaches_the_apex() {
        let portrait = fixtures::degree1(5);
        let (s, t) = setup(&portrait);
        let deep = s.classes_by_codim(2).next().unwrap();
        let point = ConePoint {
            cone: deep.id.clone(),
            coords: vec![ExtRat::zero(), ExtRat::integer(3)],
        };
        let normalized = t.normalize_point(&point).unwrap();
        let cone = t.complex().cone(&normalized.cone).unwrap();
        assert_eq!(cone.dim, 1);
        assert_eq!(normalized.coords, vec![ExtRat::integer(3)]);
        let apex = t
            .normalize_point(&ConePoint {
                cone: deep.id.clone(),
                coords: vec![ExtRat::zero(), ExtRat::zero()],
            })
            .unwrap();
        assert_eq!(t.complex().cone(&apex.cone).unwrap().dim, 0);
    }

    #[test]
    fn trop_target_scales_by_the_expansion_lcm() {
        let portrait = fixtures::degree3();
        let (s, t) = setup(&portrait);
        let point = boundary_point(&s, ExtRat::integer(1));
        let target = t.trop_target(&point).unwrap();
        assert_eq!(target.lengths, vec![ExtRat::integer(3)]);
        // Degree-1: the map is the identity on coordinates.
        let p1 = fixtures::degree1(4);
        let (s1, t1) = setup(&p1);
        let point1 = boundary_point(&s1, ExtRat::integer(5));
        assert_eq!(
            t1.trop_target(&point1).unwrap().lengths,
            vec![ExtRat::integer(5)]
        );
    }

    #[test]
    fn trop_source_divides_by_the_expansion() {
        let portrait = fixtures::degree3();
        let (s, t) = setup(&portrait);
        let point = boundary_point(&s, ExtRat::integer(1));
        let source = t.trop_source(&point).unwrap();
        // One edge of expansion 3 under L = 3: length 3/3 = 1.
        assert_eq!(source.lengths, vec![ExtRat::integer(1)]);
        assert_eq!(source.genus(), 0);
        // The apex maps to the zero metric.
        let apex = t
            .normalize_point(&boundary_point(&s, ExtRat::zero()))
            .unwrap();
        let apex_source = t.trop_source(&apex).unwrap();
        assert!(apex_source.lengths.is_empty());
    }

    #[test]
    fn trop_pi_f_round_trips_through_trop_target() {
        let portrait = fixtures::degree3();
        let (s, t) = setup(&portrait);
        let class = s.classes_by_codim(1).next().unwrap();
        let y = vec![Rat::integer(3)];
        let point = t.trop_pi_f(&class.id, &y).unwrap();
        assert_eq!(point.coords, vec![ExtRat::integer(1)]);
        let recovered = t.trop_target(&point).unwrap();
        assert_eq!(recovered.lengths, vec![ExtRat::integer(3)]);
        // y = 0 lands at the apex after normalization.
        let zero = t.trop_pi_f(&class.id, &[Rat::zero()]).unwrap();
        let normalized = t.normalize_point(&zero).unwrap();
        assert_eq!(t.complex().cone(&normalized.cone).unwrap().dim, 0);
        // Arity is checked.
        assert!(t.trop_pi_f(&class.id, &[]).is_err());
    }

    #[test]
    fn face_maps_commute() {
        for portrait in [fixtures::degree1(5), fixtures::degree3()] {
            let (_, t) = setup(&portrait);
            assert!(t.complex().faces_commute());
        }
    }

    #[test]
    fn target_and_source_commute_with_normalization() {
        let portrait = fixtures::degree1(5);
        let (s, t) = setup(&portrait);
        for class in s.classes_by_codim(2) {
            let point = ConePoint {
                cone: class.id.clone(),
                coords: vec![ExtRat::zero(), ExtRat::integer(4)],
            };
            let normalized = t.normalize_point(&point).unwrap();
            let direct = t.trop_target(&point).unwrap().normalized();
            let via = t.trop_target(&normalized).unwrap().normalized();
            assert_eq!(direct, via);
            let direct_source = t.trop_source(&point).unwrap().normalized();
            let via_source = t.trop_source(&normalized).unwrap().normalized();
            assert_eq!(direct_source.key, via_source.key);
            assert_eq!(direct_source.lengths, via_source.lengths);
        }
    }

    #[test]
    fn forget_to_cmr_merges_isomorphic_covers() {
        let portrait = fixtures::degree4();
        let (s, t) = setup(&portrait);
        let (cmr, map) = t.forget_to_cmr(&s).unwrap();
        // Surjective with fibers summing to the class count.
        assert!(cmr.cones().len() < s.classes().len());
        assert_eq!(map.len(), s.classes().len());
        for cone in cmr.cones() {
            let fiber = map.values().filter(|&v| v == &cone.id).count();
            assert!(fiber >= 1);
        }
        // The two one-vertex classes have distinct covers here, but some
        // boundary cones are shared across components.
        let mut shared_across_components = false;
        for cone in cmr.cones() {
            let members: Vec<_> = map
                .iter()
                .filter(|(_, v)| *v == &cone.id)
                .map(|(k, _)| s.class_by_id(k).unwrap())
                .collect();
            let mut components: Vec<_> = members.iter().map(|c| c.component.clone()).collect();
            components.sort();
            components.dedup();
            if components.len() > 1 {
                shared_across_components = true;
            }
        }
        assert!(shared_across_components);
    }

    #[test]
    fn trop_target_factors_through_the_cover() {
        // Classes with the same CMR cone have equal L-vectors, so the
        // target map depends only on the image cone and the coordinates.
        let portrait = fixtures::degree4();
        let (s, t) = setup(&portrait);
        let (_, map) = t.forget_to_cmr(&s).unwrap();
        let classes: Vec<_> = s.classes_by_codim(1).collect();
        let mut compared = 0usize;
        for (i, c1) in classes.iter().enumerate() {
            for c2 in &classes[i + 1..] {
                if map[&c1.id] != map[&c2.id] {
                    continue;
                }
                compared += 1;
                let p1 = ConePoint {
                    cone: c1.id.clone(),
                    coords: vec![ExtRat::Finite(Rat::new(5, 2).unwrap())],
                };
                let p2 = ConePoint {
                    cone: c2.id.clone(),
                    coords: vec![ExtRat::Finite(Rat::new(5, 2).unwrap())],
                };
                let t1 = t.trop_target(&p1).unwrap();
                let t2 = t.trop_target(&p2).unwrap();
                assert_eq!(t1.tree, t2.tree);
                assert_eq!(t1.lengths, t2.lengths);
            }
        }
        assert!(compared > 0);
    }

    #[test]
    fn integral_structure_of_the_maps() {
        let portrait = fixtures::degree3();
        let (s, t) = setup(&portrait);
        for class in s.classes_by_codim(1) {
            let point = ConePoint {
                cone: class.id.clone(),
                coords: vec![ExtRat::integer(2)],
            };
            let target = t.trop_target(&point).unwrap();
            for l in &target.lengths {
                assert_eq!(l.as_finite().unwrap().denom(), 1);
            }
            let source = t.trop_source(&point).unwrap();
            let cover = t.cover_of(&class.id).unwrap();
            let max_expansion = cover
                .source
                .edges
                .iter()
                .map(|e| e.expansion as i128)
                .max()
                .unwrap_or(1);
            for l in &source.lengths {
                let den = l.as_finite().unwrap().denom();
                assert!(den <= max_expansion);
                assert!(cover
                    .source
                    .edges
                    .iter()
                    .any(|e| (e.expansion as i128) % den == 0));
            }
        }
    }

    #[test]
    fn infinite_coordinates_flow_through() {
        let portrait = fixtures::degree3();
        let (s, t) = setup(&portrait);
        let point = boundary_point(&s, ExtRat::Infinity);
        assert_eq!(t.normalize_point(&point).unwrap(), point);
        assert_eq!(
            t.trop_target(&point).unwrap().lengths,
            vec![ExtRat::Infinity]
        );
        assert_eq!(
            t.trop_source(&point).unwrap().lengths,
            vec![ExtRat::Infinity]
        );
    }

    #[test]
    fn target_complex_closure_and_faces() {
        let portrait = fixtures::degree1(5);
        let (s, _) = setup(&portrait);
        let complex = build_target_complex(&s);
        assert_eq!(complex.cones().len(), 26);
        assert!(complex.faces_commute());
    }

    #[test]
    fn source_complex_covers_all_class_graphs() {
        let portrait = fixtures::degree2_genus1();
        let (s, t) = setup(&portrait);
        let complex = build_source_complex(&t);
        for class in s.classes() {
            let key = t.stable_of(&class.id).unwrap().canonical_key();
            assert!(complex.contains(&key));
        }
        for cone in complex.cones() {
            for face in &cone.faces {
                assert!(complex.contains(&face.target));
            }
        }
    }

    #[test]
    fn hurwitz_complex_json_carries_lvectors() {
        let portrait = fixtures::degree3();
        let (_, t) = setup(&portrait);
        let value = t.to_json();
        let cones = value["cones"].as_array().unwrap();
        assert_eq!(cones.len(), 7);
        assert!(cones.iter().any(|c| c["lvec"] == json!([3])));
    }
}
