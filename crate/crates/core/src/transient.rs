//! Finite-time mean of type-1 particles in the two-type alternating model.
//!
//! A type-1 particle becomes type 2 with probability `p12` at death (else
//! it dies out), and a type-2 particle becomes type 1 with probability
//! `p21`. The expected number of returns to type 1 after time zero is
//! described by the renewal-type kernel `Ψ`, whose transform is
//! `Ψ̂(x) = 1 / (1 − p12 p21 μ1 μ2 / ((μ1 + x)(μ2 + x)))`.

use alloc::format;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::arrivals::ArrivalProcess;
use crate::error::{Error, Result};
use crate::model::BranchingModel;
use crate::presets;
use crate::quad::{integrate, integrate_with, QuadTolerance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTypeParams {
    pub mu1: f64,
    pub mu2: f64,
    pub p12: f64,
    pub p21: f64,
}

impl TwoTypeParams {
    pub fn new(mu1: f64, mu2: f64, p12: f64, p21: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu2 > 0.0 && mu1.is_finite() && mu2.is_finite()) {
            return Err(Error::InvalidModel(format!("rates must be positive ({mu1}, {mu2})")));
        }
        if !((0.0..=1.0).contains(&p12) && (0.0..=1.0).contains(&p21)) {
            return Err(Error::InvalidModel(format!(
                "switching probabilities must lie in [0, 1] ({p12}, {p21})"
            )));
        }
        if !(p12 * p21 < 1.0) {
            return Err(Error::InvalidModel("p12 p21 must be below 1".into()));
        }
        Ok(Self { mu1, mu2, p12, p21 })
    }

    /// The corresponding [`BranchingModel`].
    pub fn model(&self) -> BranchingModel {
        presets::alternating(self.mu1, self.mu2, self.p12, self.p21)
    }

    /// `μ1 μ2 p12 p21`.
    fn q(&self) -> f64 {
        self.mu1 * self.mu2 * self.p12 * self.p21
    }
}

/// Roots `ζ1 > ζ2` of `(μ1 + ζ)(μ2 + ζ) = μ1 μ2 p12 p21`, both negative.
pub fn zeta_roots(p: &TwoTypeParams) -> (f64, f64) {
    let sum = p.mu1 + p.mu2;
    let disc = ((p.mu1 - p.mu2).powi(2) + 4.0 * p.q()).sqrt();
    let zeta2 = -0.5 * (sum + disc);
    // Product form avoids cancellation in −sum + disc.
    let zeta1 = p.mu1 * p.mu2 * (1.0 - p.p12 * p.p21) / zeta2;
    (zeta1, zeta2)
}

/// `Ψ(ds) = δ₀(ds) + q (e^{ζ1 s} − e^{ζ2 s}) / (ζ1 − ζ2) ds` on `s ≥ 0`,
/// with `q = μ1 μ2 p12 p21`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiKernel {
    pub params: TwoTypeParams,
    pub zeta1: f64,
    pub zeta2: f64,
    q: f64,
}

pub fn psi_kernel(params: &TwoTypeParams) -> PsiKernel {
    let (zeta1, zeta2) = zeta_roots(params);
    PsiKernel {
        params: *params,
        zeta1,
        zeta2,
        q: params.q(),
    }
}

impl PsiKernel {
    pub fn atom(&self) -> f64 {
        1.0
    }

    /// Density of the absolutely continuous part.
    pub fn density(&self, s: f64) -> f64 {
        if self.q == 0.0 || s < 0.0 {
            return 0.0;
        }
        self.q * ((self.zeta1 * s).exp() - (self.zeta2 * s).exp()) / (self.zeta1 - self.zeta2)
    }

    /// `Ψ([0, s])`, atom included.
    pub fn cdf(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        if self.q == 0.0 {
            return 1.0;
        }
        let (z1, z2) = (self.zeta1, self.zeta2);
        1.0 + self.q * ((z1 * s).exp_m1() / z1 - (z2 * s).exp_m1() / z2) / (z1 - z2)
    }

    pub fn total_mass(&self) -> f64 {
        1.0 + self.q / (self.zeta1 * self.zeta2)
    }

    /// `Ψ̂(x)` in product form.
    pub fn lt_closed(&self, x: f64) -> f64 {
        let p = &self.params;
        1.0 / (1.0 - p.p12 * p.p21 * p.mu1 * p.mu2 / ((p.mu1 + x) * (p.mu2 + x)))
    }

    /// `Ψ̂(x)` by quadrature of the density; the atom is added exactly.
    pub fn lt_numeric(&self, x: f64) -> Result<f64> {
        if self.q == 0.0 {
            return Ok(1.0);
        }
        let decay = x - self.zeta1;
        let horizon = 40.0 / decay;
        let body = integrate(
            |s| (-x * s).exp() * self.density(s),
            0.0,
            horizon,
            QuadTolerance {
                abs: 1e-13,
                rel: 1e-13,
                max_intervals: 4000,
            },
        )?;
        Ok(self.atom() + body)
    }

    /// `h(τ) = ∫_{[0, τ]} e^{−μ1(τ − v)} Ψ(dv)`: mean number of type-1
    /// particles at age `τ` of a subtree started by one type-1 particle.
    pub fn occupancy(&self, tau: f64) -> f64 {
        let mu1 = self.params.mu1;
        let base = (-mu1 * tau).exp();
        if self.q == 0.0 {
            return base;
        }
        let (z1, z2) = (self.zeta1, self.zeta2);
        let part = |z: f64| ((z * tau).exp() - base) / (z + mu1);
        base + self.q * (part(z1) - part(z2)) / (z1 - z2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransientVariant {
    /// The published double-integral formula, evaluated as written.
    PaperLiteral,
    /// `∫₀ᵗ h(t − y) dm(y)` with the occupancy `h` of one immigrant.
    #[default]
    RenewalConsistent,
}

fn tolerance() -> QuadTolerance {
    QuadTolerance {
        abs: 1e-10,
        rel: 1e-12,
        max_intervals: 4000,
    }
}

/// `E[N_1(t)]` for immigration with renewal mean `m`.
pub fn transient_mean_n1(
    params: &TwoTypeParams,
    process: &ArrivalProcess,
    t: f64,
    variant: TransientVariant,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let kernel = psi_kernel(params);
    match variant {
        TransientVariant::RenewalConsistent => integrate(
            |y| kernel.occupancy(t - y) * process.renewal_density(y),
            0.0,
            t,
            tolerance(),
        ),
        TransientVariant::PaperLiteral => {
            let mu1 = params.mu1;
            let first = integrate_with(
                |y| {
                    let tau = t - y;
                    let inner = integrate(
                        |z| (kernel.cdf(tau) - kernel.cdf(tau - z)) * mu1 * (-mu1 * z).exp(),
                        0.0,
                        tau,
                        tolerance(),
                    )?;
                    Ok(inner * process.renewal_density(y))
                },
                0.0,
                t,
                tolerance(),
            )?;
            let continuous = integrate(
                |s| process.renewal_mean(t - s) * kernel.density(s),
                0.0,
                t,
                tolerance(),
            )?;
            let second = process.renewal_mean(t) * kernel.atom() + continuous;
            Ok(params.p12 * first + (1.0 - params.p12) * second)
        }
    }
}
