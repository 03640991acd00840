//! Immigration streams: nonhomogeneous Poisson and generalized Polya arrivals.
//!
//! Samplers are exposed as [`ArrivalSource`]s that produce arrival times
//! lazily in increasing order, so the simulator never has to hold a full
//! arrival sequence in memory.

use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::rng::{exp_variate, uniform};
use crate::special::ln_gamma;

/// Default cap on the number of arrivals per path.
pub const DEFAULT_ARRIVAL_CAP: u64 = 10_000_000;

/// Piecewise-linear intensity through `(t, λ)` knots, starting at `t = 0`
/// and held constant after the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    times: Vec<f64>,
    rates: Vec<f64>,
    cumulative: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidArgument("intensity table is empty".into()));
        }
        if knots[0].0 != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "intensity table must start at t = 0 (starts at {})",
                knots[0].0
            )));
        }
        let mut times = Vec::with_capacity(knots.len());
        let mut rates = Vec::with_capacity(knots.len());
        for (t, r) in knots {
            if !(r >= 0.0 && r.is_finite() && t.is_finite()) {
                return Err(Error::InvalidArgument(format!("bad intensity knot ({t}, {r})")));
            }
            if let Some(&last) = times.last() {
                if t <= last {
                    return Err(Error::InvalidArgument(format!(
                        "intensity table times must increase ({last} then {t})"
                    )));
                }
            }
            times.push(t);
            rates.push(r);
        }
        let mut cumulative = Vec::with_capacity(times.len());
        cumulative.push(0.0);
        for i in 1..times.len() {
            let area = 0.5 * (rates[i] + rates[i - 1]) * (times[i] - times[i - 1]);
            cumulative.push(cumulative[i - 1] + area);
        }
        Ok(Self {
            times,
            rates,
            cumulative,
        })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.rates.iter().copied())
    }

    fn segment(&self, t: f64) -> usize {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        let i = self.segment(t);
        if i + 1 >= self.times.len() {
            return self.rates[self.rates.len() - 1];
        }
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        self.rates[i] + w * (self.rates[i + 1] - self.rates[i])
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let dt = t - self.times[i];
        0.5 * (self.rates[i] + self.rate(t)) * dt + self.cumulative[i]
    }

    pub fn max_on(&self, horizon: f64) -> f64 {
        let mut m = self.rate(horizon);
        for (t, r) in self.knots() {
            if t <= horizon {
                m = m.max(r);
            }
        }
        m
    }

    pub fn last_rate(&self) -> f64 {
        self.rates[self.rates.len() - 1]
    }
}

/// Deterministic intensity of a nonhomogeneous Poisson process.
#[derive(Debug, Clone, PartialEq)]
pub enum Intensity {
    /// `λ(t) = rate`.
    Constant { rate: f64 },
    /// `λ(t) = scale · e^{exponent · t}`.
    Exponential { scale: f64, exponent: f64 },
    Table(PiecewiseLinear),
}

/// Large-time behaviour `λ(t) ~ scale · e^{exponent · t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotics {
    pub scale: f64,
    pub exponent: f64,
}

impl Intensity {
    pub fn constant(rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("intensity rate {rate}")));
        }
        Ok(Self::Constant { rate })
    }

    pub fn exponential(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite() && exponent.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "exponential intensity {scale} e^({exponent} t)"
            )));
        }
        Ok(Self::Exponential { scale, exponent })
    }

    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        PiecewiseLinear::new(knots).map(Self::Table)
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Self::Constant { rate } => *rate,
            Self::Exponential { scale, exponent } => scale * (exponent * t).exp(),
            Self::Table(table) => table.rate(t),
        }
    }

    /// `Λ(t) = ∫₀ᵗ λ`.
    pub fn cumulative(&self, t: f64) -> f64 {
        match self {
            Self::Constant { rate } => rate * t,
            Self::Exponential { scale, exponent } => {
                if *exponent == 0.0 {
                    scale * t
                } else {
                    scale * (exponent * t).exp_m1() / exponent
                }
            }
            Self::Table(table) => table.cumulative(t),
        }
    }

    /// Closed-form `Λ⁻¹(y)` where one exists.
    pub fn inverse_cumulative(&self, y: f64) -> Option<f64> {
        match self {
            Self::Constant { rate } if *rate > 0.0 => Some(y / rate),
            Self::Exponential { scale, exponent } if *scale > 0.0 => {
                if *exponent == 0.0 {
                    return Some(y / scale);
                }
                let arg = exponent * y / scale;
                if arg <= -1.0 {
                    None
                } else {
                    Some(arg.ln_1p() / exponent)
                }
            }
            _ => None,
        }
    }

    pub fn sup_on(&self, horizon: f64) -> f64 {
        match self {
            Self::Constant { rate } => *rate,
            Self::Exponential { .. } => self.rate(0.0).max(self.rate(horizon)),
            Self::Table(table) => table.max_on(horizon),
        }
    }

    pub fn asymptotics(&self) -> Asymptotics {
        match self {
            Self::Constant { rate } => Asymptotics {
                scale: *rate,
                exponent: 0.0,
            },
            Self::Exponential { scale, exponent } => Asymptotics {
                scale: *scale,
                exponent: *exponent,
            },
            Self::Table(table) => Asymptotics {
                scale: table.last_rate(),
                exponent: 0.0,
            },
        }
    }

    /// True when `λ` vanishes identically from some time on.
    pub fn has_compact_support(&self) -> bool {
        self.asymptotics().scale == 0.0
    }
}

/// Parameters of a generalized Polya process with constant base rate:
/// stochastic intensity `(a S(t−) + b) λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GppParams {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
}

impl GppParams {
    pub fn new(a: f64, b: f64, lambda: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && lambda > 0.0) || !(a * b * lambda).is_finite() {
            return Err(Error::InvalidArgument(format!(
                "GPP parameters must be positive (a = {a}, b = {b}, lambda = {lambda})"
            )));
        }
        Ok(Self { a, b, lambda })
    }

    /// Growth exponent `aλ` of the expected intensity.
    pub fn growth(&self) -> f64 {
        self.a * self.lambda
    }

    /// Negative binomial shape `b/a`.
    pub fn shape(&self) -> f64 {
        self.b / self.a
    }

    /// `E[λ(t)] = bλ e^{aλt}`.
    pub fn expected_intensity(&self, t: f64) -> f64 {
        self.b * self.lambda * (self.growth() * t).exp()
    }

    pub fn renewal_mean(&self, t: f64) -> f64 {
        self.renewal_mean_at(self.lambda * t)
    }

    /// `(b/a)(e^{aΛ} − 1)` for a cumulative base intensity `Λ`.
    pub fn renewal_mean_at(&self, cumulative_base: f64) -> f64 {
        self.shape() * (self.a * cumulative_base).exp_m1()
    }

    pub fn marginal_pmf(&self, t: f64, n: u64) -> f64 {
        self.marginal_pmf_at(self.lambda * t, n)
    }

    /// Negative binomial `P(S = n)` for a cumulative base intensity `Λ`,
    /// evaluated in log space.
    pub fn marginal_pmf_at(&self, cumulative_base: f64, n: u64) -> f64 {
        let r = self.shape();
        let x = self.a * cumulative_base;
        if x <= 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let nf = n as f64;
        let success = if n == 0 { 0.0 } else { nf * (-(-x).exp_m1()).ln() };
        let log_p = ln_gamma(r + nf) - ln_gamma(r) - ln_gamma(nf + 1.0) + success - r * x;
        log_p.exp()
    }

    /// The same process written as a mixed Poisson process: given
    /// `Θ ~ Γ(b/a, 1)`, arrivals are Poisson with intensity `Θ aλ e^{aλt}`.
    pub fn mixture(&self) -> PoissonMixture {
        PoissonMixture {
            mixing_shape: Some(self.shape()),
            base: Intensity::Exponential {
                scale: self.growth(),
                exponent: self.growth(),
            },
        }
    }
}

/// Poisson arrivals with intensity `Θ · base(t)`, where `Θ ~ Γ(shape, 1)`
/// when `mixing_shape` is set and `Θ = 1` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonMixture {
    pub mixing_shape: Option<f64>,
    pub base: Intensity,
}

impl PoissonMixture {
    pub fn draw_mixing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.mixing_shape {
            None => 1.0,
            Some(shape) => {
                let g = rand_distr::Gamma::new(shape, 1.0).expect("positive shape");
                rng.sample(g)
            }
        }
    }
}

/// Either immigration model, for formulas that only need the renewal mean.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalProcess {
    Nhpp(Intensity),
    Gpp(GppParams),
}

impl ArrivalProcess {
    /// Expected number of arrivals `m(t)` in `[0, t]`.
    pub fn renewal_mean(&self, t: f64) -> f64 {
        match self {
            Self::Nhpp(i) => i.cumulative(t),
            Self::Gpp(g) => g.renewal_mean(t),
        }
    }

    /// `dm/dt`.
    pub fn renewal_density(&self, t: f64) -> f64 {
        match self {
            Self::Nhpp(i) => i.rate(t),
            Self::Gpp(g) => g.expected_intensity(t),
        }
    }

    pub fn mixture(&self) -> PoissonMixture {
        match self {
            Self::Nhpp(i) => PoissonMixture {
                mixing_shape: None,
                base: i.clone(),
            },
            Self::Gpp(g) => g.mixture(),
        }
    }
}

/// Expected number of arrivals in `[0, t]`.
pub fn renewal_mean(process: &ArrivalProcess, t: f64) -> f64 {
    process.renewal_mean(t)
}

/// `P(S(t) = n)` for a constant-base GPP.
pub fn gpp_marginal_pmf(params: &GppParams, t: f64, n: u64) -> f64 {
    params.marginal_pmf(t, n)
}

/// Lazily generated, nondecreasing arrival times.
pub trait ArrivalSource {
    fn next_arrival(&mut self) -> Result<Option<f64>>;
}

/// Sorted arrival times within `[0, horizon]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArrivalSequence {
    times: Vec<f64>,
}

impl ArrivalSequence {
    pub fn new(mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        Self { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of arrivals at or before `t`.
    pub fn count_until(&self, t: f64) -> usize {
        self.times.partition_point(|&x| x <= t)
    }

    pub fn source(&self) -> SequenceSource<'_> {
        SequenceSource {
            times: &self.times,
            next: 0,
        }
    }

    pub fn collect_from<S: ArrivalSource>(source: &mut S) -> Result<Self> {
        let mut times = Vec::new();
        while let Some(t) = source.next_arrival()? {
            times.push(t);
        }
        Ok(Self { times })
    }
}

pub struct SequenceSource<'a> {
    times: &'a [f64],
    next: usize,
}

impl ArrivalSource for SequenceSource<'_> {
    fn next_arrival(&mut self) -> Result<Option<f64>> {
        let t = self.times.get(self.next).copied();
        self.next += 1;
        Ok(t)
    }
}

/// No immigration.
pub struct NoArrivals;

impl ArrivalSource for NoArrivals {
    fn next_arrival(&mut self) -> Result<Option<f64>> {
        Ok(None)
    }
}

enum NhppMethod {
    /// Unit-rate clock mapped through `Λ⁻¹`.
    Inversion { clock: f64, limit: f64 },
    /// Candidates at the envelope rate, accepted with probability `λ/envelope`.
    Thinning { t: f64, envelope: f64 },
    Empty,
}

/// NHPP on `[0, horizon]`, by inversion for closed-form `Λ⁻¹`, by thinning
/// otherwise.
pub struct NhppSource<R> {
    intensity: Intensity,
    horizon: f64,
    rng: R,
    method: NhppMethod,
    cap: u64,
    emitted: u64,
}

impl<R: Rng> NhppSource<R> {
    pub fn new(intensity: Intensity, horizon: f64, rng: R) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {horizon}")));
        }
        let limit = intensity.cumulative(horizon);
        if !limit.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "intensity is not integrable on [0, {horizon}]"
            )));
        }
        let method = if horizon == 0.0 || limit == 0.0 {
            NhppMethod::Empty
        } else if intensity.inverse_cumulative(0.0).is_some() {
            NhppMethod::Inversion { clock: 0.0, limit }
        } else {
            NhppMethod::Thinning {
                t: 0.0,
                envelope: intensity.sup_on(horizon),
            }
        };
        Ok(Self {
            intensity,
            horizon,
            rng,
            method,
            cap: DEFAULT_ARRIVAL_CAP,
            emitted: 0,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }
}

impl<R: Rng> ArrivalSource for NhppSource<R> {
    fn next_arrival(&mut self) -> Result<Option<f64>> {
        let next = match &mut self.method {
            NhppMethod::Empty => None,
            NhppMethod::Inversion { clock, limit } => {
                *clock += exp_variate(&mut self.rng, 1.0);
                if *clock > *limit {
                    None
                } else {
                    self.intensity
                        .inverse_cumulative(*clock)
                        .map(|t| t.min(self.horizon))
                }
            }
            NhppMethod::Thinning { t, envelope } => loop {
                *t += exp_variate(&mut self.rng, *envelope);
                if *t > self.horizon {
                    break None;
                }
                if uniform(&mut self.rng) * *envelope < self.intensity.rate(*t) {
                    break Some(*t);
                }
            },
        };
        if next.is_none() {
            self.method = NhppMethod::Empty;
            return Ok(None);
        }
        self.emitted += 1;
        if self.emitted > self.cap {
            return Err(Error::Capacity {
                what: "arrivals",
                count: self.emitted,
                cap: self.cap,
            });
        }
        Ok(next)
    }
}

/// GPP on `[0, horizon]` by sequential conditional sampling: after `n`
/// arrivals the next gap is exponential with rate `(an + b)λ`.
pub struct GppSource<R> {
    params: GppParams,
    horizon: f64,
    rng: R,
    t: f64,
    count: u64,
    cap: u64,
    done: bool,
}

impl<R: Rng> GppSource<R> {
    pub fn new(params: GppParams, horizon: f64, rng: R) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {horizon}")));
        }
        Ok(Self {
            params,
            horizon,
            rng,
            t: 0.0,
            count: 0,
            cap: DEFAULT_ARRIVAL_CAP,
            done: horizon == 0.0,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }
}

impl<R: Rng> ArrivalSource for GppSource<R> {
    fn next_arrival(&mut self) -> Result<Option<f64>> {
        if self.done {
            return Ok(None);
        }
        let p = &self.params;
        let rate = (p.a * self.count as f64 + p.b) * p.lambda;
        self.t += exp_variate(&mut self.rng, rate);
        if self.t > self.horizon {
            self.done = true;
            return Ok(None);
        }
        if self.count >= self.cap {
            return Err(Error::Capacity {
                what: "arrivals",
                count: self.count + 1,
                cap: self.cap,
            });
        }
        self.count += 1;
        Ok(Some(self.t))
    }
}

pub fn nhpp_sample<R: Rng>(intensity: &Intensity, horizon: f64, rng: R) -> Result<ArrivalSequence> {
    ArrivalSequence::collect_from(&mut NhppSource::new(intensity.clone(), horizon, rng)?)
}

pub fn gpp_sample<R: Rng>(
    params: &GppParams,
    horizon: f64,
    cap: u64,
    rng: R,
) -> Result<ArrivalSequence> {
    ArrivalSequence::collect_from(&mut GppSource::new(*params, horizon, rng)?.with_cap(cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_stream;
    use alloc::vec;

    #[test]
    fn cumulative_intensities() {
        let c = Intensity::constant(2.0).unwrap();
        assert_eq!(c.cumulative(1.5), 3.0);
        let e = Intensity::exponential(1.0, 1.0).unwrap();
        assert!((e.cumulative(1.0) - (1f64.exp() - 1.0)).abs() < 1e-15);
        let y = e.cumulative(0.7);
        assert!((e.inverse_cumulative(y).unwrap() - 0.7).abs() < 1e-14);
        let d = Intensity::exponential(1.0, -1.0).unwrap();
        assert!((d.cumulative(50.0) - 1.0).abs() < 1e-15);
        assert!(d.inverse_cumulative(1.5).is_none());
        let t = Intensity::table(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)]).unwrap();
        assert!((t.cumulative(0.5) - 0.25).abs() < 1e-15);
        assert!((t.cumulative(2.0) - 3.0).abs() < 1e-15);
        assert!((t.cumulative(4.0) - 7.0).abs() < 1e-15);
        assert_eq!(t.rate(10.0), 2.0);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Intensity::table(vec![]).is_err());
        assert!(Intensity::table(vec![(0.5, 1.0)]).is_err());
        assert!(Intensity::table(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(Intensity::table(vec![(0.0, -1.0)]).is_err());
        assert!(Intensity::constant(-1.0).is_err());
        assert!(GppParams::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_horizon_is_empty() {
        let c = Intensity::constant(5.0).unwrap();
        assert!(nhpp_sample(&c, 0.0, replicate_stream(1, 0)).unwrap().is_empty());
        let g = GppParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(gpp_sample(&g, 0.0, 10, replicate_stream(1, 0)).unwrap().is_empty());
    }

    #[test]
    fn samples_are_sorted_and_within_horizon() {
        let tables = [
            Intensity::constant(3.0).unwrap(),
            Intensity::exponential(1.0, 1.0).unwrap(),
            Intensity::table(vec![(0.0, 1.0), (0.5, 4.0), (2.0, 0.5)]).unwrap(),
        ];
        for (i, intensity) in tables.iter().enumerate() {
            let s = nhpp_sample(intensity, 2.0, replicate_stream(9, i as u64)).unwrap();
            assert!(s.times().windows(2).all(|w| w[0] <= w[1]));
            assert!(s.times().iter().all(|&t| (0.0..=2.0).contains(&t)));
        }
    }

    #[test]
    fn gpp_cap_is_enforced() {
        let g = GppParams::new(1.0, 1.0, 1.0).unwrap();
        let err = gpp_sample(&g, 20.0, 100, replicate_stream(3, 0)).unwrap_err();
        assert!(matches!(err, Error::Capacity { cap: 100, .. }));
    }

    #[test]
    fn geometric_marginal_by_hand() {
        let g = GppParams::new(1.0, 1.0, 1.0).unwrap();
        let t = core::f64::consts::LN_2;
        assert!((g.marginal_pmf(t, 0) - 0.5).abs() < 1e-14);
        assert!((g.marginal_pmf(t, 1) - 0.25).abs() < 1e-14);
        assert_eq!(g.marginal_pmf(0.0, 0), 1.0);
        assert_eq!(g.marginal_pmf(0.0, 3), 0.0);
    }

    #[test]
    fn marginal_pmf_normalizes_and_matches_renewal_mean() {
        let g = GppParams::new(0.5, 2.0, 1.3).unwrap();
        for &t in &[0.2, 1.0, 2.5] {
            // Tail of a negative binomial decays like p^n; stop far past 1e-16.
            let mut mass = 0.0;
            let mut mean = 0.0;
            for n in 0..4000u64 {
                let p = g.marginal_pmf(t, n);
                mass += p;
                mean += n as f64 * p;
            }
            assert!(mass > 1.0 - 1e-10 && mass < 1.0 + 1e-10, "mass {mass}");
            assert!((mean - g.renewal_mean(t)).abs() < 1e-8 * g.renewal_mean(t).max(1.0));
        }
    }

    #[test]
    fn renewal_means_by_hand() {
        let g = ArrivalProcess::Gpp(GppParams::new(1.0, 2.0, 1.0).unwrap());
        assert!((renewal_mean(&g, 1.0) - 2.0 * (1f64.exp() - 1.0)).abs() < 1e-14);
        assert_eq!(renewal_mean(&g, 0.0), 0.0);
        let c = ArrivalProcess::Nhpp(Intensity::constant(3.0).unwrap());
        assert_eq!(renewal_mean(&c, 2.0), 6.0);
        assert_eq!(renewal_mean(&c, 0.0), 0.0);
    }
}
