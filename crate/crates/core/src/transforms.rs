//! Laplace transforms of the type counts, `E[exp(<s, N(t)>)]` for `s ≤ 0`.
//!
//! The transform without immigration comes from the backward equation for
//! the generating functions: `F_i(τ) = E_i[exp(<s, N°(τ)>)]` solves
//! `dF_i/dτ = μ_i (h_i(F) − F_i)` with `F_i(0) = e^{s_i}`. The solver works
//! with `G = 1 − F`, which keeps full relative accuracy when `s` is close
//! to zero. Transforms with immigration integrate `G_0` against the arrival
//! stream.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::arrivals::{ArrivalProcess, GppParams, Intensity};
use crate::error::{Error, Result};
use crate::model::BranchingModel;
use crate::ode::{self, OdeTolerance};
use crate::quad::{integrate_with, QuadTolerance};
use crate::spectral::{matrix_exp, MeanMatrix};
use crate::stats::MeanSe;

/// Absolute tolerance of every transform quadrature.
pub const LT_QUAD_TOLERANCE: f64 = 1e-8;

fn quad_tolerance() -> QuadTolerance {
    QuadTolerance {
        abs: LT_QUAD_TOLERANCE,
        rel: 1e-12,
        max_intervals: 4000,
    }
}

pub(crate) fn check_s(model: &BranchingModel, s: &[f64]) -> Result<()> {
    if s.len() != model.k() {
        return Err(Error::InvalidArgument(format!(
            "s has {} entries for {} types",
            s.len(),
            model.k()
        )));
    }
    if s.iter().any(|&x| !(x <= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "transform argument must be nonpositive: {s:?}"
        )));
    }
    Ok(())
}

/// `dG_i/dτ = μ_i (1 − h_i(1 − G) − G_i)`.
fn backward_rhs<'a>(model: &'a BranchingModel) -> impl FnMut(f64, &[f64], &mut [f64]) + 'a {
    let mut clipped = vec![0.0; model.k()];
    let mut h = vec![0.0; model.k()];
    move |_, g, dg| {
        for (c, &x) in clipped.iter_mut().zip(g) {
            *c = x.clamp(0.0, 1.0);
        }
        model.h_complement_all(&clipped, &mut h);
        for i in 0..g.len() {
            dg[i] = model.mu()[i] * (h[i] - g[i]);
        }
    }
}

/// `G(0) = 1 − e^{s}`.
fn initial_complement(s: &[f64]) -> Vec<f64> {
    s.iter().map(|x| -x.exp_m1()).collect()
}

/// Default solver tolerance with the absolute floor scaled to `G(0)`, so
/// tiny arguments keep their relative accuracy.
fn scaled_tolerance(g0: &[f64]) -> OdeTolerance {
    let base = OdeTolerance::default();
    let scale = g0.iter().fold(0.0f64, |m, x| m.max(*x));
    OdeTolerance {
        atol: (base.atol * scale.min(1.0)).max(f64::MIN_POSITIVE),
        ..base
    }
}

/// Solution of the backward equation for one `s`, evaluable at any
/// `τ ∈ [0, horizon]`.
///
/// Accepted solver steps are kept as checkpoints; a value between two
/// checkpoints is obtained by integrating again from the earlier one, so
/// every evaluation carries the full solver accuracy. States are stored as
/// complements `G = 1 − F`.
pub struct PhiPath<'a> {
    model: &'a BranchingModel,
    tol: OdeTolerance,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl<'a> PhiPath<'a> {
    pub fn new(model: &'a BranchingModel, s: &[f64], horizon: f64) -> Result<Self> {
        check_s(model, s)?;
        let tol = scaled_tolerance(&initial_complement(s));
        Self::with_tolerance(model, s, horizon, tol)
    }

    /// As [`PhiPath::new`] with an explicit solver tolerance, applied to `G`.
    pub fn with_tolerance(
        model: &'a BranchingModel,
        s: &[f64],
        horizon: f64,
        tol: OdeTolerance,
    ) -> Result<Self> {
        check_s(model, s)?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {horizon}")));
        }
        let y0 = initial_complement(s);
        let mut times = vec![0.0];
        let mut states = vec![y0.clone()];
        ode::integrate(backward_rhs(model), 0.0, &y0, horizon, tol, |t, y| {
            times.push(t);
            states.push(y.to_vec());
        })?;
        Ok(Self {
            model,
            tol,
            times,
            states,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// `(F_0(τ), …, F_{k−1}(τ))`.
    pub fn state(&self, tau: f64) -> Result<Vec<f64>> {
        Ok(self.complement(tau)?.into_iter().map(|g| 1.0 - g).collect())
    }

    /// `(1 − F_0(τ), …, 1 − F_{k−1}(τ))`.
    pub fn complement(&self, tau: f64) -> Result<Vec<f64>> {
        if !(tau >= 0.0 && tau <= self.horizon()) {
            return Err(Error::InvalidArgument(format!(
                "τ = {tau} outside [0, {}]",
                self.horizon()
            )));
        }
        let i = self.times.partition_point(|&x| x <= tau) - 1;
        let y = if self.times[i] == tau {
            self.states[i].clone()
        } else {
            ode::integrate(
                backward_rhs(self.model),
                self.times[i],
                &self.states[i],
                tau,
                self.tol,
                |_, _| {},
            )?
        };
        Ok(y.into_iter().map(|x| x.clamp(0.0, 1.0)).collect())
    }

    /// `φ°_τ(s)` for a single type-0 ancestor.
    pub fn value(&self, tau: f64) -> Result<f64> {
        Ok(1.0 - self.value_complement(tau)?)
    }

    /// `1 − φ°_τ(s)`.
    pub fn value_complement(&self, tau: f64) -> Result<f64> {
        Ok(self.complement(tau)?[0])
    }
}

/// `E[exp(<s, N°(t)>)]` from one type-0 ancestor.
pub fn phi_o(model: &BranchingModel, s: &[f64], t: f64) -> Result<f64> {
    check_s(model, s)?;
    let y0 = initial_complement(s);
    let y = ode::integrate(backward_rhs(model), 0.0, &y0, t, scaled_tolerance(&y0), |_, _| {})?;
    Ok(1.0 - y[0].clamp(0.0, 1.0))
}

/// Variable of integration in the Poisson-immigration exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhppForm {
    /// `∫₀ᵗ [φ°_x(s) − 1] λ(t − x) dx`, integrating over the subtree age.
    Age,
    /// `∫₀ᵗ [φ°_{t−y}(s) − 1] λ(y) dy`, integrating over the arrival time.
    ArrivalTime,
}

/// Transform of `N(t)` under Poisson immigration with intensity `λ`.
pub fn lt_nhpp(model: &BranchingModel, intensity: &Intensity, s: &[f64], t: f64) -> Result<f64> {
    lt_nhpp_form(model, intensity, s, t, NhppForm::Age)
}

pub fn lt_nhpp_form(
    model: &BranchingModel,
    intensity: &Intensity,
    s: &[f64],
    t: f64,
    form: NhppForm,
) -> Result<f64> {
    if s.iter().all(|&x| x == 0.0) {
        check_s(model, s)?;
        return Ok(1.0);
    }
    let path = PhiPath::new(model, s, t)?;
    let exponent = match form {
        NhppForm::Age => integrate_with(
            |x| Ok(-path.value_complement(x)? * intensity.rate(t - x)),
            0.0,
            t,
            quad_tolerance(),
        )?,
        NhppForm::ArrivalTime => integrate_with(
            |y| Ok(-path.value_complement(t - y)? * intensity.rate(y)),
            0.0,
            t,
            quad_tolerance(),
        )?,
    };
    Ok(exponent.exp())
}

/// Transform of `N(t)` under Polya immigration:
/// `{1 + ∫₀ᵗ [1 − φ°_{t−y}(s)] aλ e^{aλy} dy}^{−b/a}`.
pub fn lt_gpp(model: &BranchingModel, params: &GppParams, s: &[f64], t: f64) -> Result<f64> {
    check_s(model, s)?;
    if s.iter().all(|&x| x == 0.0) {
        return Ok(1.0);
    }
    let path = PhiPath::new(model, s, t)?;
    let g = params.growth();
    let integral = integrate_with(
        |y| Ok(path.value_complement(t - y)? * g * (g * y).exp()),
        0.0,
        t,
        quad_tolerance(),
    )?;
    Ok((1.0 + integral).powf(-params.shape()))
}

/// The same transform written as a compound negative binomial: the number
/// of immigrants has generating function `P_t`, and each immigrant arrives
/// at an independent time with density `aλ e^{aλy} / (e^{aλt} − 1)` on
/// `[0, t]`, contributing a subtree with transform `f̃_t(s)`.
pub fn lt_gpp_compound(
    model: &BranchingModel,
    params: &GppParams,
    s: &[f64],
    t: f64,
) -> Result<f64> {
    check_s(model, s)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let path = PhiPath::new(model, s, t)?;
    let g = params.growth();
    let norm = (g * t).exp_m1();
    // Complement of f̃, so that small |s| keeps its relative accuracy.
    let g_tilde = integrate_with(
        |y| Ok(path.value_complement(t - y)? * g * (g * y).exp() / norm),
        0.0,
        t,
        quad_tolerance(),
    )?;
    Ok(negative_binomial_pgf_complement(params, t, g_tilde))
}

/// `P_t(1 − w)`, i.e. [`negative_binomial_pgf`] at `z = 1 − w`.
pub fn negative_binomial_pgf_complement(params: &GppParams, t: f64, w: f64) -> f64 {
    (1.0 + (params.growth() * t).exp_m1() * w).powf(-params.shape())
}

/// Generating function of the Polya count `S(t)` at `z ∈ [0, 1]`.
pub fn negative_binomial_pgf(params: &GppParams, t: f64, z: f64) -> f64 {
    let p = (-params.growth() * t).exp();
    (p / (1.0 - (1.0 - p) * z)).powf(params.shape())
}

/// Sample mean and standard error of `exp(<s, X>)`.
pub fn empirical_lt<I, X>(samples: I, s: &[f64]) -> Result<(f64, f64)>
where
    I: IntoIterator<Item = X>,
    X: AsRef<[f64]>,
{
    if s.iter().any(|&x| !(x <= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "transform argument must be nonpositive: {s:?}"
        )));
    }
    let mut acc = MeanSe::new();
    for x in samples {
        let x = x.as_ref();
        if x.len() != s.len() {
            return Err(Error::InvalidArgument(format!(
                "sample has {} entries, s has {}",
                x.len(),
                s.len()
            )));
        }
        let inner: f64 = x.iter().zip(s).map(|(a, b)| a * b).sum();
        acc.push(inner.exp());
    }
    acc.estimate()
}

/// `E[N(t)] = ∫₀ᵗ exp(A(t − y)) n₀ dm(y)` by quadrature, one component at
/// a time.
pub fn mean_with_immigration(a: &MeanMatrix, process: &ArrivalProcess, t: f64) -> Result<Vec<f64>> {
    let k = a.dim();
    let mut n0 = vec![0.0; k];
    n0[0] = 1.0;
    (0..k)
        .map(|j| {
            integrate_with(
                |y| Ok(matrix_exp(a.matrix(), t - y).mul_vec(&n0)[j] * process.renewal_density(y)),
                0.0,
                t,
                QuadTolerance {
                    abs: 1e-10,
                    rel: 1e-12,
                    max_intervals: 4000,
                },
            )
        })
        .collect()
}
