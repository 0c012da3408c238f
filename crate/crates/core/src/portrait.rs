//! Branching portraits: the full branching specification of a Hurwitz space.
//!
//! A portrait fixes the source genus, the degree, ordered target and source
//! mark sets, the map of marks, branch profiles over the target marks and
//! local degrees at the source marks. Mark labels are opaque strings with a
//! fixed total order (input order); every downstream canonical form uses
//! that order.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::perm::Partition;
use crate::{stable_hash, Error, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct Portrait {
    genus: usize,
    degree: usize,
    target_marks: Vec<String>,
    source_marks: Vec<String>,
    /// Map of source marks: index into `target_marks` per source mark.
    phi: Vec<usize>,
    /// Branch profile per target mark.
    branch_profiles: Vec<Partition>,
    /// Local degree per source mark.
    ram: Vec<usize>,
}

/// One violated portrait invariant, naming the offending mark where there is
/// one. Violations are report entries, not failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PortraitViolation {
    TooFewTargetMarks { count: usize },
    SourceNotHyperbolic { genus: usize, source_marks: usize },
    ProfileNotPartitionOfDegree { mark: String, sum: usize },
    RiemannHurwitz { detail: String },
    GenusMismatch { declared: usize, derived: usize },
    RamificationNotSubMultiset { mark: String },
    ZeroRamification { mark: String },
}

impl PortraitViolation {
    /// Stable kebab-case code for report entries.
    pub fn code(&self) -> &'static str {
        match self {
            PortraitViolation::TooFewTargetMarks { .. } => "target-marks",
            PortraitViolation::SourceNotHyperbolic { .. } => "source-stability",
            PortraitViolation::ProfileNotPartitionOfDegree { .. } => "profile-degree",
            PortraitViolation::RiemannHurwitz { .. } => "riemann-hurwitz",
            PortraitViolation::GenusMismatch { .. } => "genus-mismatch",
            PortraitViolation::RamificationNotSubMultiset { .. } => "sub-multiset",
            PortraitViolation::ZeroRamification { .. } => "zero-ramification",
        }
    }
}

impl fmt::Display for PortraitViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortraitViolation::TooFewTargetMarks { count } => {
                write!(f, "target-marks: need at least 3 target marks, got {count}")
            }
            PortraitViolation::SourceNotHyperbolic {
                genus,
                source_marks,
            } => write!(
                f,
                "source-stability: 2 - 2g - |A| must be negative (g = {genus}, |A| = {source_marks})"
            ),
            PortraitViolation::ProfileNotPartitionOfDegree { mark, sum } => write!(
                f,
                "profile-degree: branch profile of {mark} sums to {sum}, not the degree"
            ),
            PortraitViolation::RiemannHurwitz { detail } => {
                write!(f, "riemann-hurwitz: {detail}")
            }
            PortraitViolation::GenusMismatch { declared, derived } => write!(
                f,
                "genus-mismatch: declared genus {declared} but the branch profiles give {derived}"
            ),
            PortraitViolation::RamificationNotSubMultiset { mark } => write!(
                f,
                "sub-multiset: local degrees over {mark} are not a sub-multiset of its branch profile"
            ),
            PortraitViolation::ZeroRamification { mark } => write!(
                f,
                "zero-ramification: source mark {mark} has local degree 0; cycles have length at least 1"
            ),
        }
    }
}

impl Portrait {
    /// Builds a portrait from its raw data. Rejects structural defects
    /// (duplicate names, out-of-range indices); the mathematical invariants
    /// are checked separately by [`Portrait::validate`].
    pub fn new(
        genus: usize,
        degree: usize,
        target_marks: Vec<String>,
        source_marks: Vec<String>,
        phi: Vec<usize>,
        branch_profiles: Vec<Partition>,
        ram: Vec<usize>,
    ) -> Result<Portrait> {
        if degree == 0 {
            return Err(Error::InvalidInput("degree must be positive".into()));
        }
        for marks in [&target_marks, &source_marks] {
            let mut sorted = marks.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != marks.len() {
                return Err(Error::InvalidInput("duplicate mark name".into()));
            }
        }
        if phi.len() != source_marks.len() || ram.len() != source_marks.len() {
            return Err(Error::InvalidInput(
                "phi and ram must be defined on every source mark".into(),
            ));
        }
        if branch_profiles.len() != target_marks.len() {
            return Err(Error::InvalidInput(
                "every target mark needs a branch profile".into(),
            ));
        }
        if let Some(&bad) = phi.iter().find(|&&b| b >= target_marks.len()) {
            return Err(Error::InvalidInput(format!("phi index {bad} out of range")));
        }
        Ok(Portrait {
            genus,
            degree,
            target_marks,
            source_marks,
            phi,
            branch_profiles,
            ram,
        })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn target_marks(&self) -> &[String] {
        &self.target_marks
    }

    pub fn source_marks(&self) -> &[String] {
        &self.source_marks
    }

    pub fn num_target_marks(&self) -> usize {
        self.target_marks.len()
    }

    pub fn num_source_marks(&self) -> usize {
        self.source_marks.len()
    }

    /// Target-mark index a source mark maps to.
    pub fn phi(&self, source_mark: usize) -> usize {
        self.phi[source_mark]
    }

    pub fn branch_profile(&self, target_mark: usize) -> &Partition {
        &self.branch_profiles[target_mark]
    }

    /// Local degree at a source mark.
    pub fn ram(&self, source_mark: usize) -> usize {
        self.ram[source_mark]
    }

    /// Source marks mapping to the given target mark, in source order.
    pub fn fiber(&self, target_mark: usize) -> Vec<usize> {
        (0..self.phi.len())
            .filter(|&a| self.phi[a] == target_mark)
            .collect()
    }

    /// Checks every portrait invariant; an empty report means valid.
    pub fn validate(&self) -> Vec<PortraitViolation> {
        let mut report = Vec::new();
        if self.target_marks.len() < 3 {
            report.push(PortraitViolation::TooFewTargetMarks {
                count: self.target_marks.len(),
            });
        }
        if 2 >= 2 * self.genus + self.source_marks.len() {
            report.push(PortraitViolation::SourceNotHyperbolic {
                genus: self.genus,
                source_marks: self.source_marks.len(),
            });
        }
        let mut profiles_ok = true;
        for (b, profile) in self.branch_profiles.iter().enumerate() {
            if profile.sum() != self.degree {
                profiles_ok = false;
                report.push(PortraitViolation::ProfileNotPartitionOfDegree {
                    mark: self.target_marks[b].clone(),
                    sum: profile.sum(),
                });
            }
        }
        if profiles_ok {
            match derived_genus(self.degree, &self.branch_profiles) {
                Ok(derived) if derived == self.genus => {}
                Ok(derived) => report.push(PortraitViolation::GenusMismatch {
                    declared: self.genus,
                    derived,
                }),
                Err(detail) => report.push(PortraitViolation::RiemannHurwitz { detail }),
            }
        }
        for (a, &r) in self.ram.iter().enumerate() {
            if r == 0 {
                report.push(PortraitViolation::ZeroRamification {
                    mark: self.source_marks[a].clone(),
                });
            }
        }
        for b in 0..self.target_marks.len() {
            let fiber_rams: Vec<usize> = self
                .fiber(b)
                .iter()
                .map(|&a| self.ram[a])
                .filter(|&r| r > 0)
                .collect();
            if fiber_rams.is_empty() {
                continue;
            }
            if !Partition::new(fiber_rams).is_submultiset_of(&self.branch_profiles[b]) {
                report.push(PortraitViolation::RamificationNotSubMultiset {
                    mark: self.target_marks[b].clone(),
                });
            }
        }
        report
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Canonical serialization: keys sorted, arrays in declared mark order.
    pub fn to_canonical_json(&self) -> String {
        let file = PortraitFile {
            branch_profiles: self
                .target_marks
                .iter()
                .zip(&self.branch_profiles)
                .map(|(mark, profile)| (mark.clone(), profile.parts().to_vec()))
                .collect(),
            degree: self.degree,
            genus: Some(self.genus),
            source_marks: self
                .source_marks
                .iter()
                .enumerate()
                .map(|(a, name)| SourceMarkFile {
                    maps_to: self.target_marks[self.phi[a]].clone(),
                    name: name.clone(),
                    ram: self.ram[a],
                })
                .collect(),
            target_marks: self.target_marks.clone(),
        };
        serde_json::to_string(&file).expect("portrait serialization cannot fail")
    }

    /// Stable hash of the canonical serialization.
    pub fn hash(&self) -> String {
        stable_hash(self.to_canonical_json().as_bytes())
    }

    /// Parses the portrait file format. The genus is derived from the branch
    /// profiles when absent and cross-checked when present; unknown fields
    /// are rejected by the deserializer.
    pub fn from_json(json: &str) -> Result<Portrait> {
        let file: PortraitFile = serde_json::from_str(json)
            .map_err(|e| Error::InvalidInput(format!("portrait parse error: {e}")))?;
        let mut branch_profiles = Vec::new();
        for mark in &file.target_marks {
            let parts = file.branch_profiles.get(mark).ok_or_else(|| {
                Error::InvalidInput(format!("missing branch profile for target mark {mark}"))
            })?;
            if parts.contains(&0) {
                return Err(Error::InvalidInput(format!(
                    "branch profile of {mark} contains a zero part"
                )));
            }
            branch_profiles.push(Partition::new(parts.clone()));
        }
        for mark in file.branch_profiles.keys() {
            if !file.target_marks.contains(mark) {
                return Err(Error::InvalidInput(format!(
                    "branch profile for unknown target mark {mark}"
                )));
            }
        }
        let genus = match file.genus {
            Some(g) => g,
            None => derived_genus(file.degree, &branch_profiles).map_err(Error::InvalidInput)?,
        };
        let mut source_marks = Vec::new();
        let mut phi = Vec::new();
        let mut ram = Vec::new();
        for entry in &file.source_marks {
            let b = file
                .target_marks
                .iter()
                .position(|m| *m == entry.maps_to)
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "source mark {} maps to unknown target mark {}",
                        entry.name, entry.maps_to
                    ))
                })?;
            source_marks.push(entry.name.clone());
            phi.push(b);
            ram.push(entry.ram);
        }
        Portrait::new(
            genus,
            file.degree,
            file.target_marks,
            source_marks,
            phi,
            branch_profiles,
            ram,
        )
    }
}

impl fmt::Debug for Portrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Portrait(g={}, d={}, |B|={}, |A|={})",
            self.genus,
            self.degree,
            self.target_marks.len(),
            self.source_marks.len()
        )
    }
}

/// The portrait file format. Field order matches sorted key order so the
/// canonical serialization is bit-exact.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PortraitFile {
    branch_profiles: BTreeMap<String, Vec<usize>>,
    degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    genus: Option<usize>,
    source_marks: Vec<SourceMarkFile>,
    target_marks: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceMarkFile {
    maps_to: String,
    name: String,
    ram: usize,
}

/// The unique genus solving the Riemann-Hurwitz equation
/// `sum_b (d - len(br(b))) - 2g = 2d - 2`, or a failure naming the computed
/// value when it is negative or non-integral.
pub fn derived_genus(
    degree: usize,
    branch_profiles: &[Partition],
) -> std::result::Result<usize, String> {
    let total: i64 = branch_profiles
        .iter()
        .map(|p| degree as i64 - p.len() as i64)
        .sum();
    let twice = total - (2 * degree as i64 - 2);
    if twice % 2 != 0 {
        return Err(format!(
            "the Riemann-Hurwitz equation gives genus {twice}/2, which is not an integer"
        ));
    }
    if twice < 0 {
        return Err(format!(
            "the Riemann-Hurwitz equation gives genus {}, which is negative",
            twice / 2
        ));
    }
    Ok((twice / 2) as usize)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Degree-3 portrait: four target marks, all with branch profile (2,1);
    /// a2, a3 ramified over b1, b2 and a1, a4 unramified over b4, b3.
    pub fn degree3() -> Portrait {
        Portrait::new(
            0,
            3,
            vec!["b1".into(), "b2".into(), "b3".into(), "b4".into()],
            vec!["a1".into(), "a2".into(), "a3".into(), "a4".into()],
            vec![3, 0, 1, 2],
            vec![Partition::new(vec![2, 1]); 4],
            vec![1, 2, 2, 1],
        )
        .unwrap()
    }

    /// Degree-4 portrait: three simple critical points and one of local
    /// degree 4, with an unramified source mark over each simple one.
    pub fn degree4() -> Portrait {
        Portrait::new(
            0,
            4,
            vec!["b1".into(), "b2".into(), "b3".into(), "b4".into()],
            vec!["a1".into(), "a2".into(), "a3".into()],
            vec![0, 1, 2],
            vec![
                Partition::new(vec![2, 1, 1]),
                Partition::new(vec![2, 1, 1]),
                Partition::new(vec![2, 1, 1]),
                Partition::new(vec![4]),
            ],
            vec![1, 1, 1],
        )
        .unwrap()
    }

    /// Degree-1 identity covers with `n` marks on both sides.
    pub fn degree1(n: usize) -> Portrait {
        Portrait::new(
            0,
            1,
            (1..=n).map(|i| format!("b{i}")).collect(),
            (1..=n).map(|i| format!("a{i}")).collect(),
            (0..n).collect(),
            vec![Partition::new(vec![1]); n],
            vec![1; n],
        )
        .unwrap()
    }

    /// Degree-2 genus-1 portrait: four simple branch points, one marked
    /// ramification point.
    pub fn degree2_genus1() -> Portrait {
        Portrait::new(
            1,
            2,
            vec!["b1".into(), "b2".into(), "b3".into(), "b4".into()],
            vec!["a1".into()],
            vec![0],
            vec![Partition::new(vec![2]); 4],
            vec![2],
        )
        .unwrap()
    }

    /// A valid portrait whose space is empty: the product of two
    /// double-transpositions lies in the Klein four-group, so no leg tuple
    /// with profiles (2,2), (2,2), (3,1) multiplies to the identity.
    pub fn empty_space() -> Portrait {
        Portrait::new(
            0,
            4,
            vec!["b1".into(), "b2".into(), "b3".into()],
            vec!["a1".into(), "a2".into(), "a3".into()],
            vec![0, 1, 2],
            vec![
                Partition::new(vec![2, 2]),
                Partition::new(vec![2, 2]),
                Partition::new(vec![3, 1]),
            ],
            vec![2, 2, 1],
        )
        .unwrap()
    }

    /// Degree-2 genus-2 portrait: six simple branch points, two marked
    /// ramification points.
    pub fn degree2_genus2() -> Portrait {
        Portrait::new(
            2,
            2,
            (1..=6).map(|i| format!("b{i}")).collect(),
            vec!["a1".into(), "a2".into()],
            vec![0, 1],
            vec![Partition::new(vec![2]); 6],
            vec![2, 2],
        )
        .unwrap()
    }
}
