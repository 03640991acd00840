//! Large-time limits of the renormalized type counts.
//!
//! Each regime is summarized by a [`LimitDescriptor`]: a normalization
//! `g(t)`, a direction in `ℝ₊^k` and the law of the scalar factor along it.
//! Limits without a closed-form law are exposed through their Laplace
//! transforms or through samplers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use rand::Rng;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::arrivals::{ArrivalProcess, GppParams, Intensity, NhppSource, ArrivalSource};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::BranchingModel;
use crate::quad::{integrate, integrate_with, QuadTolerance};
use crate::special::lower_gamma;
use crate::spectral::{classify, critical_constants, resolvent_direction, MeanMatrix, PerronData, Regime};
use crate::transforms::{check_s, PhiPath};

/// Tail mass of `∫ e^{−ρz} λ(z) dz` left out by the compound Poisson sampler.
pub const CAMPBELL_TAIL: f64 = 1e-6;

/// Truncation error allowed in the `ν` transform exponent.
pub const NU_TAIL: f64 = 1e-10;

/// Renormalizing function `g(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// `g(t) = 1`.
    Identity,
    /// `g(t) = t`.
    Linear,
    /// `g(t) = e^{rate·t}`.
    Exp { rate: f64 },
    /// `g(t) = t e^{rate·t}`.
    TimesExp { rate: f64 },
}

impl Normalization {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Identity => 1.0,
            Self::Linear => t,
            Self::Exp { rate } => (rate * t).exp(),
            Self::TimesExp { rate } => t * (rate * t).exp(),
        }
    }

    /// `1 / g(t)`, computed without overflowing the exponential first.
    pub fn inverse(&self, t: f64) -> f64 {
        match *self {
            Self::Identity => 1.0,
            Self::Linear => 1.0 / t,
            Self::Exp { rate } => (-rate * t).exp(),
            Self::TimesExp { rate } => (-rate * t).exp() / t,
        }
    }
}

/// Law of the scalar factor multiplying the limit direction.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarLaw {
    Gamma { shape: f64, rate: f64 },
    /// Degenerate at `value` (convergence in probability).
    PointMass { value: f64 },
    /// `∫ e^{−ρz} dY_z` for a compound Poisson `Y` with jumps `W`.
    CompoundPoissonIntegral,
    /// A subordinator with exponent `ψ` run for an independent `Γ(shape, 1)` time.
    SubordinatedLevy { shape: f64 },
    /// Known only through its Laplace transform; see [`nu_lt`].
    GeneralNu,
}

impl ScalarLaw {
    pub fn mean(&self) -> Option<f64> {
        match *self {
            Self::Gamma { shape, rate } => Some(shape / rate),
            Self::PointMass { value } => Some(value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitDescriptor {
    pub normalization: Normalization,
    pub direction: Vec<f64>,
    pub law: ScalarLaw,
}

impl LimitDescriptor {
    fn new(normalization: Normalization, direction: Vec<f64>, law: ScalarLaw) -> Result<Self> {
        if direction.iter().any(|&x| !(x >= 0.0)) || direction.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidArgument(format!(
                "limit direction must be nonnegative and nonzero: {direction:?}"
            )));
        }
        if let ScalarLaw::Gamma { shape, rate } = law {
            if !(shape > 0.0 && rate > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "gamma law needs positive parameters (shape {shape}, rate {rate})"
                )));
            }
        }
        Ok(Self {
            normalization,
            direction,
            law,
        })
    }

    /// Mean of the limit vector when the scalar law has a closed-form mean.
    pub fn mean(&self) -> Option<Vec<f64>> {
        let m = self.law.mean()?;
        Some(self.direction.iter().map(|d| d * m).collect())
    }
}

fn normalized_v(perron: &PerronData) -> Vec<f64> {
    perron.v.clone()
}

/// Limit under Poisson or Polya immigration, selected from the Perron root
/// and the growth exponent of the arrival stream.
///
/// Poisson immigration with `λ(t) ~ λ∞ e^{δt}`:
///
/// | case | `g(t)` | direction | law |
/// |---|---|---|---|
/// | `e^{−ρt}λ` integrable | `e^{ρt}` | `v` | compound Poisson integral |
/// | `ρ < δ`, `δ > 0` | `e^{δt}` | `λ∞(δI − A)⁻¹n₀` | point mass |
/// | `ρ = δ > 0` | `t e^{δt}` | `λ∞ v₁ u` | point mass |
/// | `ρ < 0 = δ` | `1` | `λ∞(−A)⁻¹n₀` (the mean) | `ν` |
/// | `ρ = 0 = δ` | `t` | `v ⊗ μ⁻¹` | `Γ(λ∞β, c)` |
///
/// Polya immigration is delegated to [`gpp_limits`].
pub fn limit_descriptor(
    model: &BranchingModel,
    a: &MeanMatrix,
    perron: &PerronData,
    process: &ArrivalProcess,
    e_w: f64,
) -> Result<LimitDescriptor> {
    let intensity = match process {
        ArrivalProcess::Gpp(params) => return gpp_limits(a, perron, params, e_w),
        ArrivalProcess::Nhpp(intensity) => intensity,
    };
    let asym = intensity.asymptotics();
    let (lambda_inf, delta) = (asym.scale, asym.exponent);
    let rho = perron.rho;
    let (regime, ord) = classify(rho, delta);

    if lambda_inf == 0.0 || ord == Ordering::Greater {
        return LimitDescriptor::new(
            Normalization::Exp { rate: rho },
            normalized_v(perron),
            ScalarLaw::CompoundPoissonIntegral,
        );
    }
    match (regime, ord) {
        (_, Ordering::Less) if delta > 0.0 => {
            let dir = resolvent_direction(a, rho, delta, lambda_inf)?;
            LimitDescriptor::new(
                Normalization::Exp { rate: delta },
                dir,
                ScalarLaw::PointMass { value: 1.0 },
            )
        }
        (Regime::Supercritical, Ordering::Equal) => {
            let dir = perron.u.iter().map(|u| lambda_inf * perron.v[0] * u).collect();
            LimitDescriptor::new(
                Normalization::TimesExp { rate: delta },
                dir,
                ScalarLaw::PointMass { value: 1.0 },
            )
        }
        (Regime::Subcritical, Ordering::Less) if delta == 0.0 => {
            let dir = resolvent_direction(a, rho, 0.0, lambda_inf)?;
            LimitDescriptor::new(Normalization::Identity, dir, ScalarLaw::GeneralNu)
        }
        (Regime::Critical, Ordering::Equal) => critical_limit(model, perron, lambda_inf),
        _ => Err(Error::NoMatchingHypothesis(format!(
            "Poisson immigration with rho = {rho}, delta = {delta}"
        ))),
    }
}

/// `N(t)/t → Z · (v_1/μ_1, …, v_k/μ_k)` with `Z ~ Γ(λ∞β, c)` (shape, rate).
pub fn critical_limit(
    model: &BranchingModel,
    perron: &PerronData,
    lambda_inf: f64,
) -> Result<LimitDescriptor> {
    if !(lambda_inf > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "critical limit needs a positive Cesaro rate (got {lambda_inf})"
        )));
    }
    let c = critical_constants(model, perron)?;
    let dir = perron.v.iter().zip(model.mu()).map(|(v, mu)| v / mu).collect();
    LimitDescriptor::new(
        Normalization::Linear,
        dir,
        ScalarLaw::Gamma {
            shape: lambda_inf * c.beta,
            rate: c.c,
        },
    )
}

/// Limits under Polya immigration with growth `aλ`:
///
/// * `ρ < aλ`: `e^{−aλt}N(t) → Γ(b/a, 1) · γ`, `γ = aλ(aλI − A)⁻¹n₀`;
/// * `ρ = aλ`: `e^{−aλt}N(t)/t → Z v` with `Z` gamma of shape `b/a` and
///   scale `E[W] aλ`;
/// * `ρ > aλ`: `e^{−ρt}N(t) → Z_T v`, see [`LevyLimitSpec`].
pub fn gpp_limits(
    a: &MeanMatrix,
    perron: &PerronData,
    params: &GppParams,
    e_w: f64,
) -> Result<LimitDescriptor> {
    let g = params.growth();
    let shape = params.shape();
    match classify(perron.rho, g).1 {
        Ordering::Less => LimitDescriptor::new(
            Normalization::Exp { rate: g },
            resolvent_direction(a, perron.rho, g, g)?,
            ScalarLaw::Gamma { shape, rate: 1.0 },
        ),
        Ordering::Equal => {
            if !(e_w > 0.0) {
                return Err(Error::InvalidArgument(format!("E[W] = {e_w} must be positive")));
            }
            LimitDescriptor::new(
                Normalization::TimesExp { rate: g },
                normalized_v(perron),
                ScalarLaw::Gamma {
                    shape,
                    rate: 1.0 / (e_w * g),
                },
            )
        }
        Ordering::Greater => LimitDescriptor::new(
            Normalization::Exp { rate: perron.rho },
            normalized_v(perron),
            ScalarLaw::SubordinatedLevy { shape },
        ),
    }
}

/// Bound on `λ∞ ∫_T^∞ |φ°_y(s) − 1| dy` from `|φ°_y(s) − 1| ≤ ‖s‖∞ E|N°(y)|`
/// and `E|N°(y)| ≤ (u₁ / min u) e^{ρy}`.
fn nu_tail_bound(perron: &PerronData, lambda_inf: f64, s: &[f64], horizon: f64) -> f64 {
    let s_max = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let u_min = perron.u.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    lambda_inf * s_max * perron.u[0] / u_min * (perron.rho * horizon).exp() / perron.rho.abs()
}

/// Smallest truncation horizon whose tail bound is below [`NU_TAIL`].
pub fn nu_horizon(perron: &PerronData, lambda_inf: f64, s: &[f64]) -> f64 {
    let h0 = nu_tail_bound(perron, lambda_inf, s, 0.0);
    if h0 <= NU_TAIL {
        return 0.0;
    }
    (NU_TAIL / h0).ln() / perron.rho
}

/// Transform of the subcritical limit law `ν`:
/// `exp{λ∞ ∫₀^∞ [φ°_y(s) − 1] dy}`.
pub fn nu_lt(model: &BranchingModel, perron: &PerronData, lambda_inf: f64, s: &[f64]) -> Result<f64> {
    check_s(model, s)?;
    let horizon = nu_horizon(perron, lambda_inf, s);
    nu_lt_truncated(model, perron, lambda_inf, s, horizon)
}

/// [`nu_lt`] with the integral stopped at `horizon`.
pub fn nu_lt_truncated(
    model: &BranchingModel,
    perron: &PerronData,
    lambda_inf: f64,
    s: &[f64],
    horizon: f64,
) -> Result<f64> {
    if perron.regime != Regime::Subcritical {
        return Err(Error::Regime(format!(
            "the limit law nu needs a subcritical model (rho = {})",
            perron.rho
        )));
    }
    check_s(model, s)?;
    if horizon == 0.0 || lambda_inf == 0.0 {
        return Ok(1.0);
    }
    let path = PhiPath::new(model, s, horizon)?;
    let integral = integrate_with(
        |y| Ok(-path.value_complement(y)?),
        0.0,
        horizon,
        QuadTolerance {
            abs: 1e-10,
            rel: 1e-12,
            max_intervals: 4000,
        },
    )?;
    Ok((lambda_inf * integral).exp())
}

/// `∫_T^∞ e^{−ρz} λ(z) dz` for `T` beyond every table knot.
fn campbell_tail(intensity: &Intensity, rho: f64, horizon: f64) -> f64 {
    let asym = intensity.asymptotics();
    if asym.scale == 0.0 {
        return 0.0;
    }
    let r = rho - asym.exponent;
    if r <= 0.0 {
        return f64::INFINITY;
    }
    match intensity {
        Intensity::Table(_) => asym.scale * (-rho * horizon).exp() / rho,
        _ => asym.scale * (-r * horizon).exp() / r,
    }
}

/// Truncation time `T*` of the compound Poisson integral.
pub fn campbell_horizon(intensity: &Intensity, rho: f64) -> Result<f64> {
    let mut t = match intensity {
        Intensity::Table(table) => table.knots().last().map(|(t, _)| t).unwrap_or(0.0).max(1.0),
        _ => 1.0,
    };
    while campbell_tail(intensity, rho, t) >= CAMPBELL_TAIL {
        t *= 2.0;
        if t > 1e6 {
            return Err(Error::InvalidArgument(format!(
                "e^(-rho t) lambda(t) is not integrable for rho = {rho}"
            )));
        }
    }
    Ok(t)
}

/// `∫₀^∞ e^{−ρz} λ(z) dz`.
pub fn campbell_integral(intensity: &Intensity, rho: f64) -> Result<f64> {
    let horizon = campbell_horizon(intensity, rho)?;
    let body = integrate(
        |z| (-rho * z).exp() * intensity.rate(z),
        0.0,
        horizon,
        QuadTolerance {
            abs: 1e-12,
            rel: 1e-12,
            max_intervals: 4000,
        },
    )?;
    Ok(body + campbell_tail(intensity, rho, horizon))
}

/// Draws `Σ_i e^{−ρτ_i} W_i v` over Poisson arrivals `τ_i ≤ T*`, with `W_i`
/// supplied by `w`.
pub fn sample_nhpp_limit<R, F>(
    perron: &PerronData,
    intensity: &Intensity,
    mut w: F,
    rng: &mut R,
) -> Result<Vec<f64>>
where
    R: Rng,
    F: FnMut(&mut R) -> Result<f64>,
{
    let horizon = campbell_horizon(intensity, perron.rho)?;
    let mut taus = Vec::new();
    {
        let mut src = NhppSource::new(intensity.clone(), horizon, &mut *rng)?;
        while let Some(tau) = src.next_arrival()? {
            taus.push(tau);
        }
    }
    let mut total = 0.0;
    for tau in taus {
        total += (-perron.rho * tau).exp() * w(rng)?;
    }
    Ok(perron.v.iter().map(|v| v * total).collect())
}

/// Ingredients of the limit for Polya immigration when `ρ > aλ`.
///
/// The limit is `Z_T v` with `T ~ Γ(b/a, 1)` and `Z` a subordinator with
/// Lévy measure `Π(dz) = E[W^α 1{W ≥ z}] α z^{−α−1} dz`, `α = aλ/ρ`. The law
/// of `W` is represented by a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyLimitSpec {
    pub params: GppParams,
    pub rho: f64,
    pub v: Vec<f64>,
    w: Vec<f64>,
}

impl LevyLimitSpec {
    pub fn new(perron: &PerronData, params: GppParams, w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::EmptySample);
        }
        if classify(perron.rho, params.growth()).1 != Ordering::Greater {
            return Err(Error::Regime(format!(
                "Levy limit needs rho > a lambda (rho = {}, a lambda = {})",
                perron.rho,
                params.growth()
            )));
        }
        if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument("W sample must be finite and nonnegative".into()));
        }
        Ok(Self {
            params,
            rho: perron.rho,
            v: perron.v.clone(),
            w,
        })
    }

    /// `α = aλ/ρ ∈ (0, 1)`.
    pub fn alpha(&self) -> f64 {
        self.params.growth() / self.rho
    }

    pub fn w_sample(&self) -> &[f64] {
        &self.w
    }

    fn check_x(x: f64) -> Result<()> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidArgument(format!("psi needs x >= 0 (got {x})")));
        }
        Ok(())
    }

    /// `ψ(x)` from the Lévy measure. For one atom `w` of the `W` law,
    /// integration by parts gives
    /// `w^α ∫₀^w (1 − e^{−xz}) α z^{−α−1} dz = (xw)^α γ(1 − α, xw) − (1 − e^{−xw})`.
    pub fn psi_levy_measure(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        let alpha = self.alpha();
        let total: f64 = self
            .w
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| {
                let y = x * w;
                y.powf(alpha) * lower_gamma(1.0 - alpha, y) + (-y).exp_m1()
            })
            .sum();
        Ok(total / self.w.len() as f64)
    }

    /// `ψ(x) = ∫₀^∞ E[1 − exp(−x W e^{−ρy})] aλ e^{aλy} dy`, integrated
    /// numerically after the substitution `e^{−ρy} = q^{1/(1−α)}`, which
    /// leaves a bounded integrand on `(0, 1)`.
    pub fn psi_arrival_form(&self, x: f64) -> Result<f64> {
        Self::check_x(x)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        let alpha = self.alpha();
        let p = 1.0 / (1.0 - alpha);
        let n = self.w.len() as f64;
        let integral = integrate(
            |q| {
                let r = q.powf(p);
                let mean: f64 = self.w.iter().map(|&w| -(-x * w * r).exp_m1()).sum::<f64>() / n;
                mean * q.powf(-p)
            },
            0.0,
            1.0,
            QuadTolerance {
                abs: 0.0,
                rel: 1e-9,
                max_intervals: 2000,
            },
        )?;
        Ok(alpha * p * integral)
    }

    /// Limit transform `{1 + ψ(−<s, v>)}^{−b/a}` of `e^{−ρt}N(t)`.
    pub fn limit_lt(&self, s: &[f64]) -> Result<f64> {
        let x = -dot(s, &self.v);
        let psi = self.psi_levy_measure(x)?;
        Ok(gamma_subordinated_lt(|_| psi, self.params.shape(), x))
    }
}

/// `ψ(x)` computed both ways: `(Lévy-measure form, arrival-time form)`.
pub fn gpp_superc_exponent(spec: &LevyLimitSpec, x: f64) -> Result<(f64, f64)> {
    Ok((spec.psi_levy_measure(x)?, spec.psi_arrival_form(x)?))
}

/// Transform `{1 + ψ(x)}^{−ζ}` of a subordinator with exponent `ψ` evaluated
/// at an independent `Γ(ζ, 1)` time.
pub fn gamma_subordinated_lt<P: FnOnce(f64) -> f64>(psi: P, zeta: f64, x: f64) -> f64 {
    (1.0 + psi(x)).powf(-zeta)
}

/// Expected limit vector `E[W] v ∫₀^∞ e^{−ρz} λ(z) dz` of the compound
/// Poisson integral.
pub fn campbell_mean(perron: &PerronData, intensity: &Intensity, e_w: f64) -> Result<Vec<f64>> {
    let m = campbell_integral(intensity, perron.rho)? * e_w;
    Ok(perron.v.iter().map(|v| v * m).collect())
}

/// All-zero vector of length `k`.
pub fn zero_limit(k: usize) -> Vec<f64> {
    vec![0.0; k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::rng::replicate_stream;
    use crate::spectral::perron;

    fn setup(model: &BranchingModel) -> (MeanMatrix, PerronData) {
        let a = MeanMatrix::build(model).unwrap();
        let p = perron(&a).unwrap();
        (a, p)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn table_directions() {
        let crit = presets::critical();
        let (a, p) = setup(&crit);
        let nhpp = |i: Intensity| ArrivalProcess::Nhpp(i);

        let d = limit_descriptor(&crit, &a, &p, &nhpp(Intensity::exponential(1.0, 1.0).unwrap()), 0.0)
            .unwrap();
        assert!(close(&d.direction, &[2.0 / 3.0, 1.0 / 3.0], 1e-14));
        assert_eq!(d.normalization, Normalization::Exp { rate: 1.0 });

        let d = limit_descriptor(&crit, &a, &p, &nhpp(Intensity::constant(1.0).unwrap()), 0.0).unwrap();
        assert!(close(&d.direction, &[1.0, 1.0], 1e-12));
        assert_eq!(d.law, ScalarLaw::Gamma { shape: 2.0, rate: 4.0 });

        let sup = presets::supercritical();
        let (a, p) = setup(&sup);
        let d = limit_descriptor(&sup, &a, &p, &nhpp(Intensity::exponential(2.0, 0.5).unwrap()), 0.5)
            .unwrap();
        assert_eq!(d.normalization, Normalization::TimesExp { rate: 0.5 });
        assert!(close(&d.direction, &[1.0, 1.0], 1e-12));
        let d = limit_descriptor(&sup, &a, &p, &nhpp(Intensity::exponential(1.0, -1.0).unwrap()), 0.5)
            .unwrap();
        assert_eq!(d.law, ScalarLaw::CompoundPoissonIntegral);
        assert!(close(&d.direction, &p.v, 0.0));

        let gpp = |a, b, l| ArrivalProcess::Gpp(GppParams::new(a, b, l).unwrap());
        let d = limit_descriptor(&sup, &a, &p, &gpp(0.5, 0.5, 1.0), 0.5).unwrap();
        assert!(close(&d.direction, &p.v, 0.0));
        assert_eq!(d.normalization, Normalization::TimesExp { rate: 0.5 });
        let d = limit_descriptor(&sup, &a, &p, &gpp(0.25, 0.25, 1.0), 0.5).unwrap();
        assert_eq!(d.law, ScalarLaw::SubordinatedLevy { shape: 1.0 });
        let d = limit_descriptor(&sup, &a, &p, &gpp(1.0, 1.0, 1.0), 0.5).unwrap();
        assert_eq!(d.law, ScalarLaw::Gamma { shape: 1.0, rate: 1.0 });
    }

    #[test]
    fn subcritical_constant_rate_is_nu() {
        let m = presets::symmetric_subcritical();
        let (a, p) = setup(&m);
        let d = limit_descriptor(&m, &a, &p, &ArrivalProcess::Nhpp(Intensity::constant(1.0).unwrap()), 0.0)
            .unwrap();
        assert_eq!(d.law, ScalarLaw::GeneralNu);
        assert_eq!(d.normalization, Normalization::Identity);
        // (−A)⁻¹ n₀ for A = [[−1, ½], [½, −1]].
        assert!(close(&d.direction, &[4.0 / 3.0, 2.0 / 3.0], 1e-14));
    }

    #[test]
    fn pure_death_gpp_limit() {
        let m = presets::pure_death(1.0);
        let (a, p) = setup(&m);
        let d = gpp_limits(&a, &p, &GppParams::new(1.0, 1.0, 1.0).unwrap(), 0.0).unwrap();
        assert!(close(&d.direction, &[0.5], 1e-15));
        assert_eq!(d.mean().unwrap(), vec![0.5]);
    }

    #[test]
    fn critical_limit_scales_with_rate() {
        let m = presets::critical();
        let (_, p) = setup(&m);
        let one = critical_limit(&m, &p, 1.0).unwrap();
        let two = critical_limit(&m, &p, 2.0).unwrap();
        assert_eq!(one.law.mean(), Some(0.5));
        match (one.law, two.law) {
            (ScalarLaw::Gamma { shape: s1, rate: r1 }, ScalarLaw::Gamma { shape: s2, rate: r2 }) => {
                assert!((s2 - 2.0 * s1).abs() < 1e-12);
                assert_eq!(r1, r2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nu_for_pure_death_is_poisson() {
        let m = presets::pure_death(1.0);
        let (_, p) = setup(&m);
        let v = nu_lt(&m, &p, 1.0, &[-1.0]).unwrap();
        let want = ((-1.0f64).exp() - 1.0).exp();
        assert!((v - want).abs() < 1e-8, "{v} vs {want}");
        assert_eq!(nu_lt(&m, &p, 1.0, &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn nu_truncation_is_stable() {
        let m = presets::symmetric_subcritical();
        let (_, p) = setup(&m);
        let s = [-0.8, -0.3];
        let h = nu_horizon(&p, 1.0, &s);
        let a = nu_lt_truncated(&m, &p, 1.0, &s, h).unwrap();
        let b = nu_lt_truncated(&m, &p, 1.0, &s, 2.0 * h).unwrap();
        assert!((a - b).abs() < 1e-6);
        assert!(nu_lt(&presets::critical(), &setup(&presets::critical()).1, 1.0, &s).is_err());
    }

    #[test]
    fn campbell_integral_by_hand() {
        let i = Intensity::exponential(1.0, -1.0).unwrap();
        assert!((campbell_integral(&i, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        let table = Intensity::table(vec![(0.0, 1.0), (2.0, 1.0), (2.5, 0.0)]).unwrap();
        let want = 2.0 + 0.25;
        assert!((campbell_integral(&table, 0.0).unwrap() - want).abs() < 1e-10);
        assert!(campbell_horizon(&Intensity::constant(1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn zero_intensity_gives_zero_limit() {
        let m = presets::supercritical();
        let (_, p) = setup(&m);
        let mut rng = replicate_stream(1, 0);
        let x = sample_nhpp_limit(&p, &Intensity::constant(0.0).unwrap(), |_| Ok(1.0), &mut rng)
            .unwrap();
        assert_eq!(x, zero_limit(2));
    }

    #[test]
    fn psi_forms_agree_on_a_fixed_sample() {
        let m = presets::supercritical();
        let (_, p) = setup(&m);
        let w: Vec<f64> = (0..200).map(|i| if i % 3 == 0 { 0.0 } else { 0.01 * i as f64 }).collect();
        let spec = LevyLimitSpec::new(&p, GppParams::new(0.25, 0.25, 1.0).unwrap(), w).unwrap();
        for &x in &[0.1, 1.0, 10.0] {
            let (i, ii) = gpp_superc_exponent(&spec, x).unwrap();
            assert!(((i - ii) / i).abs() < 1e-7, "x={x}: {i} vs {ii}");
        }
        assert_eq!(spec.psi_levy_measure(0.0).unwrap(), 0.0);
        assert_eq!(spec.limit_lt(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn levy_spec_preconditions() {
        let m = presets::supercritical();
        let (_, p) = setup(&m);
        let g = GppParams::new(0.5, 0.5, 1.0).unwrap();
        assert!(LevyLimitSpec::new(&p, g, vec![1.0]).is_err());
        let g = GppParams::new(0.25, 0.25, 1.0).unwrap();
        assert!(matches!(LevyLimitSpec::new(&p, g, vec![]), Err(Error::EmptySample)));
    }

    #[test]
    fn gamma_subordination_identities() {
        for &z in &[0.5, 1.0, 3.5] {
            assert_eq!(gamma_subordinated_lt(|x| x, z, 0.0), 1.0);
        }
        assert!((gamma_subordinated_lt(|x| x, 1.0, 3.0) - 0.25).abs() < 1e-15);
        assert!((gamma_subordinated_lt(|x| x, 2.0, 1.0) - 0.25).abs() < 1e-15);
    }
}
