//! Branching mechanism: exponential lifetimes and finite-support offspring laws.
//!
//! Types are indexed from 0. A type-`i` particle lives an exponential time
//! with rate `mu[i]` and is then replaced by a random offspring vector drawn
//! from its [`OffspringLaw`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const SUM_TOLERANCE: f64 = 1e-12;

/// Finite-support distribution of the offspring vector of one type.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    counts: Vec<Vec<u32>>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl OffspringLaw {
    pub fn new(k: usize, entries: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidModel("offspring law has empty support".into()));
        }
        let mut counts = Vec::with_capacity(entries.len());
        let mut probs = Vec::with_capacity(entries.len());
        for (n, p) in entries {
            if n.len() != k {
                return Err(Error::InvalidModel(format!(
                    "count vector {n:?} has length {} (expected {k})",
                    n.len()
                )));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidModel(format!("probability {p} outside [0, 1]")));
            }
            if counts.contains(&n) {
                return Err(Error::InvalidModel(format!("duplicate count vector {n:?}")));
            }
            counts.push(n);
            probs.push(p);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "probabilities sum to {total} instead of 1"
            )));
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { counts, probs, cdf })
    }

    /// The law that never reproduces.
    pub fn sterile(k: usize) -> Self {
        Self::new(k, vec![(vec![0; k], 1.0)]).expect("sterile law is valid")
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.counts.iter().map(Vec::as_slice).zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// True when the only outcome with positive probability is no offspring.
    pub fn is_sterile(&self) -> bool {
        self.entries()
            .all(|(n, p)| p == 0.0 || n.iter().all(|&c| c == 0))
    }

    /// Probability generating function `Σ_n p(n) Π_j z_j^{n_j}`.
    pub fn pgf(&self, z: &[f64]) -> f64 {
        self.entries()
            .map(|(n, p)| {
                p * n
                    .iter()
                    .zip(z)
                    .map(|(&c, &zj)| zj.powi(c as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// `1 − h(1 − g)`, accurate when every `g_j` is small.
    pub fn pgf_complement(&self, g: &[f64]) -> f64 {
        self.entries()
            .map(|(n, p)| {
                let log: f64 = n
                    .iter()
                    .zip(g)
                    .filter(|(&c, _)| c > 0)
                    .map(|(&c, &gj)| c as f64 * (-gj).ln_1p())
                    .sum();
                -p * log.exp_m1()
            })
            .sum()
    }

    /// Inverse-cdf draw; returns the index of the selected entry.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[u32] {
        &self.counts[self.sample_index(rng)]
    }
}

/// First and second factorial moments of the offspring laws.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringMoments {
    /// `m[(i, j)] = E[Y_j^{(i)}]`.
    pub mean: Matrix,
    k: usize,
    second: Vec<f64>,
}

impl OffspringMoments {
    /// `∂²h_i / ∂z_l ∂z_n` at `z = 1`.
    pub fn second(&self, i: usize, l: usize, n: usize) -> f64 {
        self.second[(i * self.k + l) * self.k + n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchingModel {
    mu: Vec<f64>,
    laws: Vec<OffspringLaw>,
}

impl BranchingModel {
    pub fn new(mu: Vec<f64>, laws: Vec<OffspringLaw>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidModel("at least one type is required".into()));
        }
        if laws.len() != mu.len() {
            return Err(Error::InvalidModel(format!(
                "{} offspring laws for {} types",
                laws.len(),
                mu.len()
            )));
        }
        if let Some(bad) = mu.iter().find(|&&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidModel(format!("lifetime rate {bad} must be positive")));
        }
        let k = mu.len();
        for law in &laws {
            if law.counts.iter().any(|n| n.len() != k) {
                return Err(Error::InvalidModel("offspring vector length mismatch".into()));
            }
        }
        Ok(Self { mu, laws })
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn law(&self, i: usize) -> &OffspringLaw {
        &self.laws[i]
    }

    pub fn laws(&self) -> &[OffspringLaw] {
        &self.laws
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.k() {
            Err(Error::TypeIndex {
                index: i,
                k: self.k(),
            })
        } else {
            Ok(())
        }
    }

    /// Generating function `h_i(z)` of the offspring law of type `i`.
    pub fn h_eval(&self, i: usize, z: &[f64]) -> Result<f64> {
        self.check_index(i)?;
        if z.len() != self.k() {
            return Err(Error::InvalidArgument(format!(
                "z has length {} (expected {})",
                z.len(),
                self.k()
            )));
        }
        if z.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::OutsideUnitCube(format!("{z:?}")));
        }
        Ok(self.laws[i].pgf(z))
    }

    /// `1 − h_i(1 − g)` for every type, without range checks.
    pub(crate) fn h_complement_all(&self, g: &[f64], out: &mut [f64]) {
        for (o, law) in out.iter_mut().zip(&self.laws) {
            *o = law.pgf_complement(g);
        }
    }

    pub fn offspring_moments(&self) -> OffspringMoments {
        let k = self.k();
        let mut mean = Matrix::zeros(k);
        let mut second = vec![0.0; k * k * k];
        for (i, law) in self.laws.iter().enumerate() {
            for (n, p) in law.entries() {
                for l in 0..k {
                    let nl = n[l] as f64;
                    mean[(i, l)] += p * nl;
                    for m in 0..k {
                        let nm = n[m] as f64;
                        let fac = if l == m { nl * (nl - 1.0) } else { nl * nm };
                        second[(i * k + l) * k + m] += p * fac;
                    }
                }
            }
        }
        OffspringMoments { mean, k, second }
    }

    /// Draws the offspring vector of a dying type-`i` particle.
    pub fn sample_offspring<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<&[u32]> {
        self.check_index(i)?;
        Ok(self.laws[i].sample(rng))
    }

    /// True when no type ever reproduces.
    pub fn is_pure_death(&self) -> bool {
        self.laws.iter().all(OffspringLaw::is_sterile)
    }
}
