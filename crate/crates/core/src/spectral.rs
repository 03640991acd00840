//! Mean matrix, Perron decomposition and the constants derived from it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::model::BranchingModel;

/// Relative tolerance used when comparing the Perron root with zero or with
/// an arrival growth exponent.
pub const CLASSIFY_TOLERANCE: f64 = 1e-12;

/// Entries of `exp(A)` at or below this value count as zero in the
/// regularity check.
const REGULARITY_FLOOR: f64 = 1e-14;

/// Generator-like matrix `A` with `E[N°(t)] = exp(At) n₀`.
///
/// Entry `(i, j)` is `μ_j (m_{ji} − 1[i = j])`: column `j` collects the mean
/// rate at which a type-`j` particle changes the type counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMatrix {
    a: Matrix,
}

impl MeanMatrix {
    /// Builds `A` and checks that it is regular.
    pub fn build(model: &BranchingModel) -> Result<Self> {
        let m = Self::build_unchecked(model);
        m.check_regular()?;
        Ok(m)
    }

    /// Builds `A` without the regularity check. Useful for reducible models
    /// whose mean dynamics are still of interest.
    pub fn build_unchecked(model: &BranchingModel) -> Self {
        let k = model.k();
        let moments = model.offspring_moments();
        let mu = model.mu();
        let mut a = Matrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                let delta = if i == j { 1.0 } else { 0.0 };
                a[(i, j)] = mu[j] * (moments.mean[(j, i)] - delta);
            }
        }
        Self { a }
    }

    pub fn from_matrix(a: Matrix) -> Self {
        Self { a }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Irreducible off-diagonal pattern and a strictly positive `exp(A)`.
    pub fn check_regular(&self) -> Result<()> {
        let k = self.dim();
        for i in 0..k {
            for j in 0..k {
                if i != j && self.a[(i, j)] < 0.0 {
                    return Err(Error::NotRegular(format!(
                        "negative off-diagonal entry a[{i}][{j}] = {}",
                        self.a[(i, j)]
                    )));
                }
            }
        }
        if !strongly_connected(&self.a) {
            return Err(Error::NotRegular("reducible type graph".into()));
        }
        let e = matrix_exp(&self.a, 1.0);
        for i in 0..k {
            for j in 0..k {
                if !(e[(i, j)] > REGULARITY_FLOOR) {
                    return Err(Error::NotRegular(format!(
                        "exp(A)[{i}][{j}] = {:e}",
                        e[(i, j)]
                    )));
                }
            }
        }
        Ok(())
    }

    /// `exp(At) n` for a count vector `n`.
    pub fn propagate(&self, t: f64, n: &[f64]) -> Vec<f64> {
        matrix_exp(&self.a, t).mul_vec(n)
    }
}

fn strongly_connected(a: &Matrix) -> bool {
    let k = a.dim();
    let reach = |forward: bool| {
        let mut seen = vec![false; k];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..k {
                let w = if forward { a[(i, j)] } else { a[(j, i)] };
                if i != j && w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn of(rho: f64) -> Self {
        if rho.abs() <= CLASSIFY_TOLERANCE {
            Regime::Critical
        } else if rho < 0.0 {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronData {
    pub rho: f64,
    /// Right eigenvector, `<u, 1> = 1`.
    pub u: Vec<f64>,
    /// Left eigenvector, `<u, v> = 1`.
    pub v: Vec<f64>,
    pub regime: Regime,
}

impl PerronData {
    /// `‖Au − ρu‖∞` and `‖A'v − ρv‖∞`.
    pub fn residuals(&self, a: &MeanMatrix) -> (f64, f64) {
        let au = a.matrix().mul_vec(&self.u);
        let va = a.matrix().vec_mul(&self.v);
        let ru = au.iter().zip(&self.u).map(|(x, y)| x - self.rho * y);
        let rv = va.iter().zip(&self.v).map(|(x, y)| x - self.rho * y);
        (
            ru.fold(0.0, |m, r| m.max(r.abs())),
            rv.fold(0.0, |m, r| m.max(r.abs())),
        )
    }
}

/// Dominant eigenpair of `A` via repeated squaring of `A + cI`.
pub fn perron(a: &MeanMatrix) -> Result<PerronData> {
    let k = a.dim();
    let shift = (0..k).map(|i| a.matrix()[(i, i)].abs()).fold(0.0, f64::max) + 1.0;
    let b = a.matrix().shifted(shift);

    // B^(2^m) / scale converges to a multiple of u v'.
    let mut p = normalized(&b).0;
    for _ in 0..64 {
        p = normalized(&p.matmul(&p)).0;
    }
    let col = (0..k)
        .max_by(|&x, &y| column_norm(&p, x).total_cmp(&column_norm(&p, y)))
        .unwrap_or(0);
    let row = (0..k)
        .max_by(|&x, &y| row_norm(&p, x).total_cmp(&row_norm(&p, y)))
        .unwrap_or(0);
    let mut u = p.column(col);
    let mut v = p.row(row).to_vec();
    for _ in 0..8 {
        u = normalize_sum(&b.mul_vec(&u));
        v = normalize_sum(&b.vec_mul(&v));
    }
    if u[0] < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    if v[0] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let bu = b.mul_vec(&u);
    let lead = dot(&v, &bu) / dot(&v, &u);
    let rho = lead - shift;

    if u.iter().chain(&v).any(|&x| !(x > 0.0)) {
        return Err(Error::NotRegular(format!(
            "Perron vectors are not strictly positive: u = {u:?}, v = {v:?}"
        )));
    }

    // Second largest modulus from the deflated matrix.
    let uv = dot(&u, &v);
    let mut deflated = b.clone();
    for i in 0..k {
        for j in 0..k {
            deflated[(i, j)] -= lead * u[i] * v[j] / uv;
        }
    }
    let second = spectral_radius(&deflated);
    if second >= lead * (1.0 - 1e-9) {
        return Err(Error::NotSimple {
            first: lead,
            second,
        });
    }

    let su: f64 = u.iter().sum();
    u.iter_mut().for_each(|x| *x /= su);
    let uv = dot(&u, &v);
    v.iter_mut().for_each(|x| *x /= uv);

    Ok(PerronData {
        rho,
        regime: Regime::of(rho),
        u,
        v,
    })
}

fn normalized(m: &Matrix) -> (Matrix, f64) {
    let s = m.max_abs();
    if s == 0.0 {
        (m.clone(), 0.0)
    } else {
        (m.scaled(1.0 / s), s)
    }
}

fn column_norm(m: &Matrix, j: usize) -> f64 {
    (0..m.dim()).map(|i| m[(i, j)].abs()).sum()
}

fn row_norm(m: &Matrix, i: usize) -> f64 {
    m.row(i).iter().map(|x| x.abs()).sum()
}

fn normalize_sum(x: &[f64]) -> Vec<f64> {
    let s: f64 = x.iter().sum();
    x.iter().map(|v| v / s).collect()
}

/// Gelfand estimate `‖M^N‖^{1/N}` with `N = 2^60`.
fn spectral_radius(m: &Matrix) -> f64 {
    let (mut p, s0) = normalized(m);
    if s0 == 0.0 {
        return 0.0;
    }
    let mut log_norm = s0.ln();
    let mut power = 1.0f64;
    for _ in 0..60 {
        let (q, s) = normalized(&p.matmul(&p));
        if s == 0.0 {
            return 0.0;
        }
        log_norm = 2.0 * log_norm + s.ln();
        power *= 2.0;
        p = q;
    }
    (log_norm / power).exp()
}

/// Sign regime of `rho` and its position relative to an arrival exponent `xi`.
pub fn classify(rho: f64, xi: f64) -> (Regime, Ordering) {
    let scale = 1.0f64.max(rho.abs()).max(xi.abs());
    let ord = if (rho - xi).abs() <= CLASSIFY_TOLERANCE * scale {
        Ordering::Equal
    } else if rho < xi {
        Ordering::Less
    } else {
        Ordering::Greater
    };
    (Regime::of(rho), ord)
}

/// Constants of the critical limit law: `Q`, shape factor `β` and rate `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalConstants {
    pub q: f64,
    pub beta: f64,
    pub c: f64,
}

pub fn critical_constants(model: &BranchingModel, perron: &PerronData) -> Result<CriticalConstants> {
    if perron.regime != Regime::Critical {
        return Err(Error::Regime(format!(
            "critical constants need rho = 0 (rho = {})",
            perron.rho
        )));
    }
    let k = model.k();
    let moments = model.offspring_moments();
    let (u, v) = (&perron.u, &perron.v);
    let mut q = 0.0;
    #[allow(clippy::needless_range_loop)]
    for i in 0..k {
        for l in 0..k {
            for n in 0..k {
                q += moments.second(i, l, n) * u[l] * u[n] * v[i];
            }
        }
    }
    q *= 0.5;
    if q <= 1e-12 {
        return Err(Error::DegenerateBranching(q));
    }
    let weighted: f64 = (0..k).map(|l| u[l] * v[l] / model.mu()[l]).sum();
    Ok(CriticalConstants {
        q,
        beta: weighted * u[0] / q,
        c: weighted * weighted / q,
    })
}

/// `exp(At)` by scaling and squaring with a diagonal (6, 6) Padé approximant.
pub fn matrix_exp(a: &Matrix, t: f64) -> Matrix {
    const Q: usize = 6;
    let n = a.dim();
    let x = a.scaled(t);
    let norm = x.norm_inf();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = x.scaled(0.5f64.powi(squarings));

    let mut c = 1.0;
    let mut num = Matrix::identity(n);
    let mut den = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    for j in 1..=Q {
        c *= (Q - j + 1) as f64 / (j * (2 * Q - j + 1)) as f64;
        power = power.matmul(&x);
        num = num.add(&power.scaled(c));
        let sign = if j % 2 == 0 { c } else { -c };
        den = den.add(&power.scaled(sign));
    }
    let mut e = den
        .lu()
        .expect("Padé denominator is nonsingular for ‖X‖ ≤ ½")
        .solve_matrix(&num);
    for _ in 0..squarings {
        e = e.matmul(&e);
    }
    e
}

/// `scale · (ξI − A)⁻¹ n₀` with `n₀ = (1, 0, …, 0)`.
pub fn resolvent_direction(a: &MeanMatrix, rho: f64, xi: f64, scale: f64) -> Result<Vec<f64>> {
    let tol = CLASSIFY_TOLERANCE * 1.0f64.max(rho.abs()).max(xi.abs());
    if !(xi - rho > tol) {
        return Err(Error::SingularResolvent { xi, rho });
    }
    let k = a.dim();
    let m = a.matrix().scaled(-1.0).shifted(xi);
    let mut n0 = vec![0.0; k];
    n0[0] = 1.0;
    let x = m.solve(&n0)?;
    Ok(x.into_iter().map(|v| v * scale).collect())
}

/// Worst Perron residual and normalization defect, used by diagnostics.
pub fn perron_defects(a: &MeanMatrix, p: &PerronData) -> (f64, f64) {
    let (ru, rv) = p.residuals(a);
    let sum_u: f64 = p.u.iter().sum();
    let uv = dot(&p.u, &p.v);
    (ru.max(rv), (sum_u - 1.0).abs().max((uv - 1.0).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mean_matrices_by_hand() {
        let sym = MeanMatrix::build(&presets::symmetric_subcritical()).unwrap();
        assert_eq!(sym.matrix(), &Matrix::from_rows(&[&[-1.0, 0.5], &[0.5, -1.0]]));
        let pd = MeanMatrix::build(&presets::pure_death(1.0)).unwrap();
        assert_eq!(pd.matrix(), &Matrix::from_rows(&[&[-1.0]]));
        let crit = MeanMatrix::build(&presets::critical()).unwrap();
        assert_eq!(crit.matrix(), &Matrix::from_rows(&[&[-1.0, 1.0], &[1.0, -1.0]]));
    }

    #[test]
    fn asymmetric_orientation() {
        let a = MeanMatrix::build_unchecked(&presets::asymmetric());
        assert_eq!(a.matrix(), &Matrix::from_rows(&[&[-1.0, 0.0], &[1.0, -2.0]]));
        assert!(matches!(a.check_regular(), Err(Error::NotRegular(_))));
        for &t in &[0.3, 1.0, 2.5] {
            let m = a.propagate(t, &[1.0, 0.0]);
            assert!(close(m[0], (-t).exp(), 1e-13));
            assert!(close(m[1], (-t).exp() - (-2.0 * t).exp(), 1e-13));
        }
    }

    #[test]
    fn perron_by_hand() {
        let cases = [
            (presets::symmetric_subcritical(), -0.5),
            (presets::critical(), 0.0),
            (presets::doubling(), 1.0),
            (presets::supercritical(), 0.5),
        ];
        for (model, rho) in cases {
            let a = MeanMatrix::build(&model).unwrap();
            let p = perron(&a).unwrap();
            assert!(close(p.rho, rho, 1e-12), "rho {} vs {rho}", p.rho);
            assert!(close(p.u[0], 0.5, 1e-12) && close(p.u[1], 0.5, 1e-12));
            assert!(close(p.v[0], 1.0, 1e-12) && close(p.v[1], 1.0, 1e-12));
            let (res, norm) = perron_defects(&a, &p);
            assert!(res <= 1e-10 && norm <= 1e-12);
        }
    }

    #[test]
    fn perron_on_asymmetric_irreducible_matrix() {
        let a = MeanMatrix::from_matrix(Matrix::from_rows(&[
            &[-2.0, 0.7, 0.1],
            &[1.5, -1.0, 0.4],
            &[0.2, 0.9, -3.0],
        ]));
        a.check_regular().unwrap();
        let p = perron(&a).unwrap();
        let (res, norm) = perron_defects(&a, &p);
        assert!(res <= 1e-10, "residual {res}");
        assert!(norm <= 1e-12);
        assert!(p.u.iter().chain(&p.v).all(|&x| x > 0.0));
    }

    #[test]
    fn reducible_block_is_rejected() {
        let a = MeanMatrix::from_matrix(Matrix::from_rows(&[&[-1.0, 0.0], &[0.0, -1.0]]));
        assert!(a.check_regular().is_err());
        assert!(perron(&a).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(classify(-0.5, 0.0), (Regime::Subcritical, Ordering::Less));
        assert_eq!(classify(0.0, 0.0), (Regime::Critical, Ordering::Equal));
        assert_eq!(classify(1.0, 1.0), (Regime::Supercritical, Ordering::Equal));
        assert_eq!(classify(0.5, 0.25), (Regime::Supercritical, Ordering::Greater));
    }

    #[test]
    fn critical_constants_by_hand() {
        let model = presets::critical();
        let p = perron(&MeanMatrix::build(&model).unwrap()).unwrap();
        let c = critical_constants(&model, &p).unwrap();
        assert!(close(c.q, 0.25, 1e-12));
        assert!(close(c.beta, 2.0, 1e-12));
        assert!(close(c.c, 4.0, 1e-12));
        assert!(close(c.beta / c.c, 0.5, 1e-12));
    }

    #[test]
    fn deterministic_cycle_is_degenerate() {
        let model = presets::deterministic_cycle();
        let p = perron(&MeanMatrix::build(&model).unwrap()).unwrap();
        assert!(matches!(
            critical_constants(&model, &p),
            Err(Error::DegenerateBranching(_))
        ));
    }

    #[test]
    fn critical_constants_need_critical_regime() {
        let model = presets::supercritical();
        let p = perron(&MeanMatrix::build(&model).unwrap()).unwrap();
        assert!(matches!(critical_constants(&model, &p), Err(Error::Regime(_))));
    }

    #[test]
    fn matrix_exp_by_hand() {
        let a = MeanMatrix::build(&presets::symmetric_subcritical()).unwrap();
        assert_eq!(matrix_exp(a.matrix(), 0.0), Matrix::identity(2));
        for &t in &[0.1, 1.0, 7.5] {
            let e = matrix_exp(a.matrix(), t);
            let p = 0.5 * ((-t / 2.0).exp() + (-1.5 * t).exp());
            let m = 0.5 * ((-t / 2.0).exp() - (-1.5 * t).exp());
            for (got, want) in [(e[(0, 0)], p), (e[(0, 1)], m), (e[(1, 0)], m), (e[(1, 1)], p)] {
                assert!(((got - want) / want).abs() < 1e-12, "t={t}: {got} vs {want}");
            }
        }
        let pd = Matrix::from_rows(&[&[-1.0]]);
        assert!((matrix_exp(&pd, 2.0)[(0, 0)] - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn matrix_exp_matches_taylor_series() {
        let a = Matrix::from_rows(&[&[-0.3, 0.2, 0.0], &[0.1, -0.5, 0.4], &[0.25, 0.0, -0.1]]);
        let mut taylor = Matrix::identity(3);
        let mut term = Matrix::identity(3);
        for j in 1..40 {
            term = term.matmul(&a).scaled(1.0 / j as f64);
            taylor = taylor.add(&term);
        }
        let e = matrix_exp(&a, 1.0);
        assert!(e.sub(&taylor).max_abs() < 1e-14);
    }

    #[test]
    fn resolvent_by_hand() {
        let pd = MeanMatrix::build(&presets::pure_death(1.0)).unwrap();
        let r = resolvent_direction(&pd, -1.0, 1.0, 1.0).unwrap();
        assert!(close(r[0], 0.5, 1e-15));

        let crit = MeanMatrix::build(&presets::critical()).unwrap();
        let r = resolvent_direction(&crit, 0.0, 1.0, 1.0).unwrap();
        assert!(close(r[0], 2.0 / 3.0, 1e-15) && close(r[1], 1.0 / 3.0, 1e-15));
        assert!(matches!(
            resolvent_direction(&crit, 0.0, 0.0, 1.0),
            Err(Error::SingularResolvent { .. })
        ));
    }
}
