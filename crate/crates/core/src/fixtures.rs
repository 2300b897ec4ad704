//! Reference instances used throughout the tests and the fixture report.
//!
//! Indices are zero-based: alternative 1 is index 0.

use crate::pcm::IncompletePcm;

/// Seven alternatives, every present ratio equal to 2 or 1/2. Logarithmic
/// least squares ranks alternative 2 above alternative 1 although `a_12 = 2`.
pub fn reversal_example() -> IncompletePcm {
    IncompletePcm::from_pairs(
        7,
        &[
            (0, 1, 2.0),
            (0, 5, 2.0),
            (0, 6, 2.0),
            (1, 2, 2.0),
            (1, 3, 2.0),
            (2, 3, 2.0),
            (2, 4, 2.0),
            (3, 4, 2.0),
            (3, 5, 2.0),
            (4, 5, 2.0),
            (4, 6, 2.0),
        ],
    )
    .expect("fixture is valid")
}

/// Expected ordinal solution for [`reversal_example`]: every alternative among the first
/// five is preferred to all later ones, and 6 and 7 are left unrelated.
pub fn reversal_expected_order() -> Vec<Vec<bool>> {
    let mut x = vec![vec![false; 7]; 7];
    for (i, row) in x.iter_mut().enumerate().take(5) {
        for cell in row.iter_mut().skip(i + 1) {
            *cell = true;
        }
    }
    x
}

/// 5-cycle 1→2→3→4→5→1 with weights (2, 3, 2, 5, 7); two minimum edges.
pub fn ambiguous_cycle() -> IncompletePcm {
    IncompletePcm::from_pairs(5, &[(0, 1, 2.0), (1, 2, 3.0), (2, 3, 2.0), (3, 4, 5.0), (4, 0, 7.0)])
        .expect("fixture is valid")
}

/// Two ambiguous triangles 1→2→3→1 and 2→3→4→2 sharing edge 2→3.
pub fn shared_edge_cycles() -> IncompletePcm {
    IncompletePcm::from_pairs(4, &[(0, 1, 2.0), (1, 2, 3.0), (2, 0, 2.0), (2, 3, 2.0), (3, 1, 2.0)])
        .expect("fixture is valid")
}

/// 7-cycle with a tie `a_12 = 1` followed by weights 2..7.
pub fn tie_cycle() -> IncompletePcm {
    let mut pairs = vec![(0, 1, 1.0)];
    for k in 1..7 {
        pairs.push((k, (k + 1) % 7, (k + 1) as f64));
    }
    IncompletePcm::from_pairs(7, &pairs).expect("fixture is valid")
}

/// Single 7-cycle with two edges of weight 2 at positions `first < second`
/// (edge `k` runs from node `k` to node `k+1 mod 7`); the remaining edges get
/// 3, 4, 5, 6, 7 in increasing order of their source node.
pub fn ambiguous_seven_cycle(first: usize, second: usize) -> IncompletePcm {
    assert!(first < second && second < 7);
    let mut next = 3.0;
    let mut pairs = Vec::with_capacity(7);
    for k in 0..7 {
        let w = if k == first || k == second {
            2.0
        } else {
            let w = next;
            next += 1.0;
            w
        };
        pairs.push((k, (k + 1) % 7, w));
    }
    IncompletePcm::from_pairs(7, &pairs).expect("fixture is valid")
}
