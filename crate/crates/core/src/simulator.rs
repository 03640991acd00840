//! Event-driven simulation of the type-count process.
//!
//! Lifetimes are exponential, so the vector of type counts is itself a
//! Markov chain: with counts `N` the next death happens after an
//! `Exp(Σ_j N_j μ_j)` time and hits type `j` with probability
//! `N_j μ_j / Σ`. Immigrants enter as type-0 particles.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::arrivals::{ArrivalSource, Intensity, NoArrivals, PoissonMixture};
use crate::error::{Error, Result};
use crate::model::BranchingModel;
use crate::quad::{integrate, QuadTolerance};
use crate::rng::{exp_variate, uniform};
use crate::spectral::{PerronData, Regime};

/// Default cap on the total population of one path.
pub const DEFAULT_MAX_POPULATION: u64 = 10_000_000;

/// Increasing, nonnegative observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidArgument("empty time grid".into()));
        }
        if times[0] < 0.0 || !times.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad time grid {times:?}")));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(format!(
                "time grid must increase: {times:?}"
            )));
        }
        Ok(Self(times))
    }

    pub fn single(t: f64) -> Result<Self> {
        Self::new(vec![t])
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

/// Type counts of one path at each grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    k: usize,
    counts: Vec<u64>,
    pub replicate: u64,
    pub seed: u64,
}

impl Trajectory {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Counts at the `g`-th grid time.
    pub fn at(&self, g: usize) -> &[u64] {
        &self.counts[g * self.k..(g + 1) * self.k]
    }

    pub fn last(&self) -> &[u64] {
        self.at(self.times.len() - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[u64])> {
        self.times.iter().copied().zip(self.counts.chunks(self.k))
    }

    /// Tags the path with its seed provenance.
    pub fn with_provenance(mut self, seed: u64, replicate: u64) -> Self {
        self.seed = seed;
        self.replicate = replicate;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimLimits {
    pub max_population: u64,
}

impl Default for SimLimits {
    fn default() -> Self {
        Self {
            max_population: DEFAULT_MAX_POPULATION,
        }
    }
}

struct EventLoop<'a> {
    model: &'a BranchingModel,
    limits: SimLimits,
    counts: Vec<u64>,
    population: u64,
}

impl EventLoop<'_> {
    fn total_rate(&self) -> f64 {
        self.counts
            .iter()
            .zip(self.model.mu())
            .map(|(&n, &mu)| n as f64 * mu)
            .sum()
    }

    fn add(&mut self, j: usize, n: u64) -> Result<()> {
        self.counts[j] += n;
        self.population += n;
        if self.population > self.limits.max_population {
            return Err(Error::Capacity {
                what: "particles",
                count: self.population,
                cap: self.limits.max_population,
            });
        }
        Ok(())
    }

    fn branch<R: Rng + ?Sized>(&mut self, total: f64, rng: &mut R) -> Result<()> {
        let target = uniform(rng) * total;
        let mut acc = 0.0;
        let mut j = self.counts.len() - 1;
        for (i, (&n, &mu)) in self.counts.iter().zip(self.model.mu()).enumerate() {
            acc += n as f64 * mu;
            if target < acc {
                j = i;
                break;
            }
        }
        // Guard against rounding picking an empty type.
        while self.counts[j] == 0 {
            j -= 1;
        }
        self.counts[j] -= 1;
        self.population -= 1;
        let offspring = self.model.law(j).sample(rng);
        for (l, &c) in offspring.iter().enumerate() {
            if c > 0 {
                self.add(l, c as u64)?;
            }
        }
        Ok(())
    }

    /// Runs from `t0` and adds the state at every grid time `≥ t0` into `out`.
    fn run<A, R>(
        &mut self,
        t0: f64,
        grid: &[f64],
        out: &mut [u64],
        arrivals: &mut A,
        rng: &mut R,
    ) -> Result<()>
    where
        A: ArrivalSource + ?Sized,
        R: Rng + ?Sized,
    {
        let k = self.counts.len();
        let mut g = grid.partition_point(|&x| x < t0);
        let mut t = t0;
        let mut next_arrival = arrivals.next_arrival()?;
        while g < grid.len() {
            let total = self.total_rate();
            let t_event = if total > 0.0 {
                t + exp_variate(rng, total)
            } else {
                f64::INFINITY
            };
            let immigrate = matches!(next_arrival, Some(a) if a <= t_event);
            let t_next = if immigrate {
                next_arrival.unwrap_or(f64::INFINITY)
            } else {
                t_event
            };
            while g < grid.len() && grid[g] < t_next {
                for (o, &c) in out[g * k..(g + 1) * k].iter_mut().zip(&self.counts) {
                    *o += c;
                }
                g += 1;
            }
            if g == grid.len() {
                break;
            }
            t = t_next;
            if immigrate {
                self.add(0, 1)?;
                next_arrival = arrivals.next_arrival()?;
            } else {
                self.branch(total, rng)?;
            }
        }
        Ok(())
    }
}

fn check_init(model: &BranchingModel, init: &[u64]) -> Result<()> {
    if init.len() != model.k() {
        return Err(Error::InvalidArgument(format!(
            "initial state has {} entries for {} types",
            init.len(),
            model.k()
        )));
    }
    Ok(())
}

fn trajectory(grid: &Grid, k: usize, counts: Vec<u64>) -> Trajectory {
    Trajectory {
        times: grid.times().to_vec(),
        k,
        counts,
        replicate: 0,
        seed: 0,
    }
}

/// Path of the process without immigration started from `init`.
pub fn simulate_no<R: Rng + ?Sized>(
    model: &BranchingModel,
    grid: &Grid,
    init: &[u64],
    limits: SimLimits,
    rng: &mut R,
) -> Result<Trajectory> {
    simulate_with_immigration_from(model, grid, init, &mut NoArrivals, limits, rng)
}

/// Path of the process with immigration, started empty. Each arrival adds
/// one type-0 particle.
pub fn simulate_with_immigration<A, R>(
    model: &BranchingModel,
    grid: &Grid,
    arrivals: &mut A,
    limits: SimLimits,
    rng: &mut R,
) -> Result<Trajectory>
where
    A: ArrivalSource + ?Sized,
    R: Rng + ?Sized,
{
    let init = vec![0; model.k()];
    simulate_with_immigration_from(model, grid, &init, arrivals, limits, rng)
}

pub fn simulate_with_immigration_from<A, R>(
    model: &BranchingModel,
    grid: &Grid,
    init: &[u64],
    arrivals: &mut A,
    limits: SimLimits,
    rng: &mut R,
) -> Result<Trajectory>
where
    A: ArrivalSource + ?Sized,
    R: Rng + ?Sized,
{
    check_init(model, init)?;
    let k = model.k();
    let mut out = vec![0; grid.len() * k];
    let mut lp = EventLoop {
        model,
        limits,
        counts: init.to_vec(),
        population: 0,
    };
    lp.population = init.iter().sum();
    lp.run(0.0, grid.times(), &mut out, arrivals, rng)?;
    Ok(trajectory(grid, k, out))
}

/// Same law as [`simulate_with_immigration`], built literally as a sum of
/// independent subtrees, one per immigrant.
pub fn simulate_superposed<A, R>(
    model: &BranchingModel,
    grid: &Grid,
    arrivals: &mut A,
    limits: SimLimits,
    rng: &mut R,
) -> Result<Trajectory>
where
    A: ArrivalSource + ?Sized,
    R: Rng + ?Sized,
{
    let k = model.k();
    let mut out = vec![0; grid.len() * k];
    while let Some(tau) = arrivals.next_arrival()? {
        if tau > grid.horizon() {
            break;
        }
        let mut init = vec![0; k];
        init[0] = 1;
        let mut lp = EventLoop {
            model,
            limits,
            counts: init,
            population: 1,
        };
        lp.run(tau, grid.times(), &mut out, &mut NoArrivals, rng)?;
    }
    Ok(trajectory(grid, k, out))
}

/// Proxy draw of the martingale limit: `<u, N°(t_big)> e^{−ρ t_big}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WSample {
    pub value: f64,
    pub t_big: f64,
}

/// First time with `e^{−ρt} ≤ 10⁻³`.
pub fn default_w_horizon(rho: f64) -> f64 {
    (1000.0f64).ln() / rho
}

/// Draws one W proxy from a single type-0 ancestor.
pub fn sample_w<R: Rng + ?Sized>(
    model: &BranchingModel,
    perron: &PerronData,
    t_big: f64,
    limits: SimLimits,
    rng: &mut R,
) -> Result<WSample> {
    if perron.regime != Regime::Supercritical {
        return Err(Error::Regime(format!(
            "W samples need a supercritical model (rho = {})",
            perron.rho
        )));
    }
    let mut init = vec![0; model.k()];
    init[0] = 1;
    let path = simulate_no(model, &Grid::single(t_big)?, &init, limits, rng)?;
    Ok(WSample {
        value: martingale_value(perron, path.last(), t_big),
        t_big,
    })
}

/// `<u, n> e^{−ρt}`.
pub fn martingale_value(perron: &PerronData, counts: &[u64], t: f64) -> f64 {
    let inner: f64 = counts
        .iter()
        .zip(&perron.u)
        .map(|(&n, &u)| n as f64 * u)
        .sum();
    inner * (-perron.rho * t).exp()
}

/// `∫₀ᵗ base(y) e^{−μ(t−y)} dy`.
fn surviving_mean(base: &Intensity, mu: f64, t: f64) -> Result<f64> {
    match base {
        Intensity::Constant { rate } => Ok(rate * (-(-mu * t).exp_m1()) / mu),
        Intensity::Exponential { scale, exponent } => {
            let r = exponent + mu;
            let grow = if r == 0.0 { t } else { (r * t).exp_m1() / r };
            Ok(scale * (-mu * t).exp() * grow)
        }
        Intensity::Table(_) => integrate(
            |y| base.rate(y) * (-mu * (t - y)).exp(),
            0.0,
            t,
            QuadTolerance::relative(1e-10),
        ),
    }
}

/// Exact draw of `N(t)` for a single-type pure-death model fed by a mixed
/// Poisson stream, without simulating individual events.
///
/// Immigrants never branch, so given the mixing variable `Θ` the survivors
/// at `t` form a thinned Poisson process and their number is Poisson.
pub fn leap_pure_death<R: Rng + ?Sized>(
    model: &BranchingModel,
    stream: &PoissonMixture,
    t: f64,
    rng: &mut R,
) -> Result<u64> {
    if model.k() != 1 || !model.is_pure_death() {
        return Err(Error::InvalidModel(
            "leap sampling needs a single-type pure-death model".into(),
        ));
    }
    let mean = stream.draw_mixing(rng) * surviving_mean(&stream.base, model.mu()[0], t)?;
    if !(mean > 0.0) {
        return Ok(0);
    }
    let poisson = Poisson::new(mean)
        .map_err(|e| Error::InvalidArgument(format!("Poisson mean {mean}: {e}")))?;
    Ok(poisson.sample(rng) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrivals::{ArrivalSequence, GppParams, NhppSource};
    use crate::presets;
    use crate::rng::{lane_stream, replicate_stream, Lane};
    use crate::spectral::{perron, MeanMatrix};

    #[test]
    fn grid_validation() {
        assert!(Grid::new(vec![]).is_err());
        assert!(Grid::new(vec![1.0, 1.0]).is_err());
        assert!(Grid::new(vec![-1.0]).is_err());
        assert!(Grid::new(vec![0.0, 0.5]).is_ok());
    }

    #[test]
    fn time_zero_returns_init() {
        let model = presets::critical();
        let grid = Grid::new(vec![0.0, 1.0]).unwrap();
        let mut rng = replicate_stream(1, 0);
        let p = simulate_no(&model, &grid, &[3, 2], SimLimits::default(), &mut rng).unwrap();
        assert_eq!(p.at(0), &[3, 2]);
    }

    #[test]
    fn pure_death_is_nonincreasing() {
        let model = presets::pure_death(1.0);
        let grid = Grid::new((0..20).map(|i| i as f64 * 0.2).collect()).unwrap();
        let mut rng = replicate_stream(2, 0);
        let p = simulate_no(&model, &grid, &[50], SimLimits::default(), &mut rng).unwrap();
        let counts: Vec<u64> = p.iter().map(|(_, c)| c[0]).collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn no_arrivals_means_empty_path() {
        let model = presets::critical();
        let grid = Grid::new(vec![0.5, 1.0]).unwrap();
        let mut rng = replicate_stream(3, 0);
        let empty = ArrivalSequence::default();
        let p = simulate_with_immigration(
            &model,
            &grid,
            &mut empty.source(),
            SimLimits::default(),
            &mut rng,
        )
        .unwrap();
        assert!(p.iter().all(|(_, c)| c.iter().all(|&n| n == 0)));
    }

    #[test]
    fn population_cap_is_enforced() {
        let model = presets::doubling();
        let grid = Grid::single(30.0).unwrap();
        let mut rng = replicate_stream(4, 0);
        let err = simulate_no(
            &model,
            &grid,
            &[1, 0],
            SimLimits { max_population: 1000 },
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Capacity { cap: 1000, .. }));
    }

    #[test]
    fn identical_seeds_give_identical_paths() {
        let model = presets::supercritical();
        let grid = Grid::new(vec![1.0, 2.0, 3.0]).unwrap();
        let run = || {
            let arrivals = Intensity::constant(2.0).unwrap();
            let mut src = NhppSource::new(arrivals, 3.0, lane_stream(5, 7, Lane::Arrivals)).unwrap();
            let mut rng = lane_stream(5, 7, Lane::Branching);
            simulate_with_immigration(&model, &grid, &mut src, SimLimits::default(), &mut rng)
                .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn w_needs_supercritical_model() {
        let model = presets::critical();
        let p = perron(&MeanMatrix::build(&model).unwrap()).unwrap();
        let mut rng = replicate_stream(6, 0);
        assert!(matches!(
            sample_w(&model, &p, 5.0, SimLimits::default(), &mut rng),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn doubling_w_is_positive() {
        let model = presets::doubling();
        let p = perron(&MeanMatrix::build(&model).unwrap()).unwrap();
        for r in 0..50 {
            let mut rng = replicate_stream(7, r);
            let w = sample_w(&model, &p, 4.0, SimLimits::default(), &mut rng).unwrap();
            assert!(w.value > 0.0);
        }
    }

    #[test]
    fn leap_rejects_branching_models() {
        let mix = GppParams::new(1.0, 1.0, 1.0).unwrap().mixture();
        let mut rng = replicate_stream(8, 0);
        assert!(leap_pure_death(&presets::critical(), &mix, 1.0, &mut rng).is_err());
    }

    #[test]
    fn surviving_mean_by_hand() {
        let c = Intensity::constant(2.0).unwrap();
        let m = surviving_mean(&c, 1.0, 1.0).unwrap();
        assert!((m - 2.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let e = Intensity::exponential(1.0, 1.0).unwrap();
        let m = surviving_mean(&e, 1.0, 2.0).unwrap();
        let want = (-2.0f64).exp() * ((4.0f64).exp() - 1.0) / 2.0;
        assert!((m - want).abs() < 1e-13);
        let table = Intensity::table(vec![(0.0, 2.0), (5.0, 2.0)]).unwrap();
        let m = surviving_mean(&table, 1.0, 1.0).unwrap();
        assert!((m - 2.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-10);
    }
}
