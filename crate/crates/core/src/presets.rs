//! Reference models used throughout the tests and the verification suite.

use alloc::vec;

use crate::model::{BranchingModel, OffspringLaw};

fn two_type(mu: [f64; 2], first: OffspringLaw, second: OffspringLaw) -> BranchingModel {
    BranchingModel::new(mu.to_vec(), vec![first, second]).expect("preset is valid")
}

fn law2(entries: &[([u32; 2], f64)]) -> OffspringLaw {
    OffspringLaw::new(2, entries.iter().map(|(n, p)| (n.to_vec(), *p)).collect())
        .expect("preset law is valid")
}

/// Single type, no offspring, lifetime rate `mu`.
pub fn pure_death(mu: f64) -> BranchingModel {
    BranchingModel::new(vec![mu], vec![OffspringLaw::sterile(1)]).expect("preset is valid")
}

/// `h_1 = ½ + ½ z_2²`, `h_2 = ½ + ½ z_1²`, unit rates. Perron root 0.
pub fn critical() -> BranchingModel {
    two_type(
        [1.0, 1.0],
        law2(&[([0, 0], 0.5), ([0, 2], 0.5)]),
        law2(&[([0, 0], 0.5), ([2, 0], 0.5)]),
    )
}

/// Two-type alternating model with unit rates and switching probability ½.
/// Perron root −½.
pub fn symmetric_subcritical() -> BranchingModel {
    alternating(1.0, 1.0, 0.5, 0.5)
}

/// Type 1 becomes type 2 with probability `p12` (else dies) and vice versa.
pub fn alternating(mu1: f64, mu2: f64, p12: f64, p21: f64) -> BranchingModel {
    two_type(
        [mu1, mu2],
        law2(&[([0, 0], 1.0 - p12), ([0, 1], p12)]),
        law2(&[([0, 0], 1.0 - p21), ([1, 0], p21)]),
    )
}

/// `h_1 = z_2²`, `h_2 = z_1²`, unit rates. Perron root 1.
pub fn doubling() -> BranchingModel {
    two_type(
        [1.0, 1.0],
        law2(&[([0, 2], 1.0)]),
        law2(&[([2, 0], 1.0)]),
    )
}

/// `h_1 = ¼ + ¾ z_2²`, `h_2 = ¼ + ¾ z_1²`, unit rates. Perron root ½.
pub fn supercritical() -> BranchingModel {
    two_type(
        [1.0, 1.0],
        law2(&[([0, 0], 0.25), ([0, 2], 0.75)]),
        law2(&[([0, 0], 0.25), ([2, 0], 0.75)]),
    )
}

/// `μ = (1, 2)`, type 1 always becomes type 2, type 2 always dies.
/// Reducible; its exact means `E N_1 = e^{-t}`, `E N_2 = e^{-t} - e^{-2t}`
/// pin down the orientation of the mean matrix.
pub fn asymmetric() -> BranchingModel {
    alternating(1.0, 2.0, 1.0, 0.0)
}

/// `h_1 = z_2`, `h_2 = z_1`: one particle forever, no variance.
pub fn deterministic_cycle() -> BranchingModel {
    two_type(
        [1.0, 1.0],
        law2(&[([0, 1], 1.0)]),
        law2(&[([1, 0], 1.0)]),
    )
}
