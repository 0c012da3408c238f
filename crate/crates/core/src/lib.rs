//! Combinatorics of boundary strata of Hurwitz spaces of maps to the
//! projective line.
//!
//! Given a branching portrait, this crate computes the complete boundary
//! stratification of the compactified Hurwitz space: strata as equivalence
//! classes of decorated trees, their contraction poset and connected
//! components, the induced combinatorial admissible covers, and the tropical
//! Hurwitz cone complex with its target and source maps.
//!
//! The pipeline is split into modules that build on each other:
//!
//! * [`perm`] — exact permutation, cycle and partition arithmetic;
//! * [`portrait`] — branching portraits, validation and serialization;
//! * [`tree`] — marked stable trees as compatible split families;
//! * [`decoration`] — decorated trees, braid moves and global conjugation;
//! * [`strata`] — equivalence orbits, canonical forms, the stratification;
//! * [`cover`] — source graphs, stabilization, combinatorial admissible covers;
//! * [`tropical`] — extended cone complexes and the tropical maps.

pub mod cover;
pub mod decoration;
pub mod perm;
pub mod portrait;
pub mod ratext;
pub mod strata;
pub mod tree;
pub mod tropical;

use thiserror::Error;

/// Errors surfaced by the library.
///
/// `Defect` marks internal-consistency failures that are unreachable for
/// valid inputs; hitting one means an implementation bug, so callers should
/// abort with the diagnostic rather than continue.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown class id: {0}")]
    UnknownClass(String),
    #[error("internal consistency defect: {0}")]
    Defect(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// FNV-1a over 128 bits, truncated to 16 hex characters.
///
/// Used for user-facing identifiers of canonical encodings (class ids,
/// cover ids, portrait hashes). Stable across platforms and runs.
pub fn stable_hash(bytes: &[u8]) -> String {
    const OFFSET: u128 = 0x6c62272e07bb014262b821756295c58d;
    const PRIME: u128 = 0x0000000001000000000000000000013b;
    let mut h = OFFSET;
    for &b in bytes {
        h ^= u128::from(b);
        h = h.wrapping_mul(PRIME);
    }
    format!("{:016x}", (h >> 64) as u64 ^ h as u64)
}
