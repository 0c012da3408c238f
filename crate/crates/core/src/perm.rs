//! Exact permutation arithmetic on `{1..d}`, disjoint cycles and partitions.
//!
//! Points are 1-based in all user-facing notation (cycle notation, encodings)
//! to match the standard conventions for branched covers; internally the
//! images are stored 0-based. Composition is right-factor-first throughout:
//! `compose(p, q)` applies `q` and then `p`.

use std::fmt;

use crate::{Error, Result};

/// A permutation of `{1..d}`, stored as the 0-based image vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    images: Vec<usize>,
}

impl Perm {
    pub fn identity(degree: usize) -> Perm {
        Perm {
            images: (0..degree).collect(),
        }
    }

    /// Builds a permutation from its 0-based image vector, validating that it
    /// is a bijection.
    pub fn from_images(images: Vec<usize>) -> Result<Perm> {
        let d = images.len();
        let mut seen = vec![false; d];
        for &i in &images {
            if i >= d || seen[i] {
                return Err(Error::InvalidInput(format!(
                    "images {images:?} are not a bijection of 0..{d}"
                )));
            }
            seen[i] = true;
        }
        Ok(Perm { images })
    }

    /// Builds a permutation of `{1..d}` from disjoint cycles in 1-based
    /// notation, e.g. `from_cycles(3, &[&[1, 2]])` is the transposition
    /// `(1 2)` in `S_3`. Omitted points are fixed.
    pub fn from_cycles(degree: usize, cycles: &[&[usize]]) -> Result<Perm> {
        let mut images: Vec<usize> = (0..degree).collect();
        let mut moved = vec![false; degree];
        for cycle in cycles {
            for (k, &pt) in cycle.iter().enumerate() {
                if pt == 0 || pt > degree {
                    return Err(Error::InvalidInput(format!(
                        "point {pt} out of range 1..={degree}"
                    )));
                }
                if moved[pt - 1] {
                    return Err(Error::InvalidInput(format!(
                        "point {pt} appears in two cycles"
                    )));
                }
                moved[pt - 1] = true;
                let next = cycle[(k + 1) % cycle.len()];
                images[pt - 1] = next - 1;
            }
        }
        Perm::from_images(images)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// Image of a 0-based point.
    pub fn apply(&self, point: usize) -> usize {
        self.images[point]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn inverse(&self) -> Perm {
        let mut images = vec![0; self.degree()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j] = i;
        }
        Perm { images }
    }

    /// Composition with the right factor applied first: the result maps `i`
    /// to `self(other(i))`.
    pub fn compose(&self, other: &Perm) -> Result<Perm> {
        if self.degree() != other.degree() {
            return Err(Error::DegreeMismatch {
                left: self.degree(),
                right: other.degree(),
            });
        }
        Ok(Perm {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        })
    }

    /// Returns `tau . self . tau^{-1}`; preserves the cycle type.
    pub fn conjugate(&self, tau: &Perm) -> Result<Perm> {
        if self.degree() != tau.degree() {
            return Err(Error::DegreeMismatch {
                left: self.degree(),
                right: tau.degree(),
            });
        }
        let mut images = vec![0; self.degree()];
        for (i, &j) in self.images.iter().enumerate() {
            images[tau.images[i]] = tau.images[j];
        }
        Ok(Perm { images })
    }

    /// Disjoint cycles covering `{1..d}`, including length-one cycles, sorted
    /// by minimal element.
    pub fn cycles(&self) -> Vec<Cycle> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut support = Vec::new();
            let mut point = start;
            while !seen[point] {
                seen[point] = true;
                support.push(point);
                point = self.images[point];
            }
            out.push(Cycle { support });
        }
        out
    }

    /// The cycle containing the 0-based point.
    pub fn cycle_of(&self, point: usize) -> Cycle {
        let mut support = vec![point];
        let mut next = self.images[point];
        while next != point {
            support.push(next);
            next = self.images[next];
        }
        Cycle::new(support)
    }

    /// Multiset of cycle lengths, as a partition of the degree.
    pub fn cycle_type(&self) -> Partition {
        Partition::new(self.cycles().iter().map(Cycle::len).collect())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Perm {
    /// Cycle notation with 1-based points, fixed points included.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "()");
        }
        for cycle in self.cycles() {
            write!(f, "{cycle}")?;
        }
        Ok(())
    }
}

/// A cyclically ordered subset of `{1..d}`, rotated to begin at its minimum.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cycle {
    support: Vec<usize>,
}

impl Cycle {
    /// Rotates the support so the minimal element comes first.
    pub fn new(mut support: Vec<usize>) -> Cycle {
        assert!(!support.is_empty(), "cycles are nonempty");
        let min_at = (0..support.len())
            .min_by_key(|&i| support[i])
            .expect("nonempty");
        support.rotate_left(min_at);
        Cycle { support }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// 0-based points in cyclic order, starting at the minimum.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn min_point(&self) -> usize {
        self.support[0]
    }

    pub fn contains(&self, point: usize) -> bool {
        self.support.contains(&point)
    }

    /// The image of this cycle under conjugation by `tau`, re-minimized.
    pub fn relabel(&self, tau: &Perm) -> Cycle {
        Cycle::new(self.support.iter().map(|&p| tau.apply(p)).collect())
    }
}

impl fmt::Debug for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, p) in self.support.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", p + 1)?;
        }
        write!(f, ")")
    }
}

/// A partition: a multiset of positive integers stored non-increasing.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(mut parts: Vec<usize>) -> Partition {
        assert!(parts.iter().all(|&p| p > 0), "parts are positive");
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn sum(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Multiset containment, tested by counted comparison.
    pub fn is_submultiset_of(&self, other: &Partition) -> bool {
        let mut remaining = other.parts.clone();
        for part in &self.parts {
            match remaining.iter().position(|r| r == part) {
                Some(at) => {
                    remaining.swap_remove(at);
                }
                None => return false,
            }
        }
        true
    }

    pub fn count_of(&self, part: usize) -> usize {
        self.parts.iter().filter(|&&p| p == part).count()
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, p) in self.parts.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Whether the group generated by `perms` acts transitively on `{1..degree}`,
/// decided by graph search over generator images.
///
/// With no generators the orbits are singletons, so the answer is `false`
/// unless `degree == 1`.
pub fn is_transitive(degree: usize, perms: &[Perm]) -> Result<bool> {
    for p in perms {
        if p.degree() != degree {
            return Err(Error::DegreeMismatch {
                left: degree,
                right: p.degree(),
            });
        }
    }
    if degree == 0 {
        return Ok(true);
    }
    Ok(orbits(degree, perms).len() == 1)
}

/// Orbits of `{0..degree-1}` under the group generated by `perms`, each orbit
/// sorted, the list sorted by minimal element.
pub fn orbits(degree: usize, perms: &[Perm]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; degree];
    let mut out = Vec::new();
    for start in 0..degree {
        if seen[start] {
            continue;
        }
        let mut orbit = vec![start];
        seen[start] = true;
        let mut frontier = vec![start];
        while let Some(point) = frontier.pop() {
            for p in perms {
                for next in [p.apply(point), p.inverse().apply(point)] {
                    if !seen[next] {
                        seen[next] = true;
                        orbit.push(next);
                        frontier.push(next);
                    }
                }
            }
        }
        orbit.sort_unstable();
        out.push(orbit);
    }
    out
}

/// All of `S_d` in lexicographic image order. Intended for small degrees.
pub fn all_perms(degree: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut images: Vec<usize> = (0..degree).collect();
    loop {
        out.push(Perm {
            images: images.clone(),
        });
        if !next_permutation(&mut images) {
            return out;
        }
    }
}

/// All permutations of `S_d` with the given cycle type.
pub fn perms_with_cycle_type(degree: usize, cycle_type: &Partition) -> Vec<Perm> {
    all_perms(degree)
        .into_iter()
        .filter(|p| &p.cycle_type() == cycle_type)
        .collect()
}

fn next_permutation(items: &mut [usize]) -> bool {
    if items.len() < 2 {
        return false;
    }
    let mut i = items.len() - 1;
    while i > 0 && items[i - 1] >= items[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = items.len() - 1;
    while items[j] <= items[i - 1] {
        j -= 1;
    }
    items.swap(i - 1, j);
    items[i..].reverse();
    true
}
