//! Shared portrait fixtures for integration tests.

use hurwitz_strata::perm::Partition;
use hurwitz_strata::portrait::Portrait;

/// Degree-3 portrait: four target marks with branch profile (2,1); a2, a3
/// ramified over b1, b2; a1, a4 unramified over b4, b3.
#[allow(dead_code)]
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

/// Degree-4 portrait: three simple critical values and one of local degree
/// 4, an unramified source mark over each simple one.
#[allow(dead_code)]
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
#[allow(dead_code)]
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

/// Degree-2 genus-1: four simple branch points, one marked ramification
/// point.
#[allow(dead_code)]
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

/// Degree-2 genus-2: six simple branch points, two marked ramification
/// points. Large enough that its stratum counts are not tabulated anywhere;
/// used for the independent-count cross-checks.
#[allow(dead_code)]
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
