//! Monte Carlo checks of the samplers against exact means and transforms.
//! Seeds are fixed; bands are five standard errors.

use branchim_core::arrivals::{ArrivalProcess, ArrivalSequence, GppParams, GppSource, Intensity, NhppSource};
use branchim_core::presets;
use branchim_core::rng::{lane_stream, replicate_stream, Lane};
use branchim_core::simulator::{
    leap_pure_death, martingale_value, simulate_no, simulate_superposed, simulate_with_immigration, Grid,
    SimLimits,
};
use branchim_core::spectral::{perron, MeanMatrix};
use branchim_core::stats::MeanSe;
use branchim_core::transforms::{empirical_lt, lt_nhpp, mean_with_immigration};

const SEED: u64 = 0x5eed;

fn within(est: &MeanSe, want: f64) -> bool {
    (est.mean() - want).abs() <= 5.0 * est.se().max(1e-12)
}

#[test]
fn asymmetric_means_are_exact() {
    let model = presets::asymmetric();
    let grid = Grid::new(vec![0.3, 0.7, 1.5]).unwrap();
    let mut acc = [MeanSe::new(); 6];
    for rep in 0..20_000 {
        let mut rng = replicate_stream(SEED, rep);
        let path = simulate_no(&model, &grid, &[1, 0], SimLimits::default(), &mut rng).unwrap();
        for g in 0..3 {
            acc[2 * g].push(path.at(g)[0] as f64);
            acc[2 * g + 1].push(path.at(g)[1] as f64);
        }
    }
    for (g, &t) in grid.times().iter().enumerate() {
        let e1 = (-t).exp();
        let e2 = (-t).exp() - (-2.0 * t).exp();
        assert!(within(&acc[2 * g], e1), "N1 at {t}: {} vs {e1}", acc[2 * g].mean());
        assert!(within(&acc[2 * g + 1], e2), "N2 at {t}: {} vs {e2}", acc[2 * g + 1].mean());
    }
}

#[test]
fn supercritical_martingale_has_constant_mean() {
    let model = presets::supercritical();
    let p = perron(&MeanMatrix::build(&model).unwrap()).unwrap();
    let grid = Grid::new(vec![1.0, 3.0]).unwrap();
    let mut acc = [MeanSe::new(), MeanSe::new()];
    for rep in 0..10_000 {
        let mut rng = replicate_stream(SEED + 1, rep);
        let path = simulate_no(&model, &grid, &[1, 0], SimLimits::default(), &mut rng).unwrap();
        for (g, &t) in grid.times().iter().enumerate() {
            acc[g].push(martingale_value(&p, path.at(g), t));
        }
    }
    for a in &acc {
        assert!(within(a, p.u[0]), "{} vs {}", a.mean(), p.u[0]);
    }
}

#[test]
fn nhpp_counts_have_poisson_moments() {
    let cases = [
        Intensity::constant(3.0).unwrap(),
        Intensity::exponential(1.0, 0.4).unwrap(),
        Intensity::table(vec![(0.0, 0.5), (1.0, 4.0), (1.5, 1.0)]).unwrap(),
    ];
    for (c, intensity) in cases.into_iter().enumerate() {
        let (lo, hi) = (0.5, 2.0);
        let want = intensity.cumulative(hi) - intensity.cumulative(lo);
        let mut acc = MeanSe::new();
        for rep in 0..20_000 {
            let rng = lane_stream(SEED + 10 + c as u64, rep, Lane::Arrivals);
            let mut src = NhppSource::new(intensity.clone(), hi, rng).unwrap();
            let seq = ArrivalSequence::collect_from(&mut src).unwrap();
            assert!(seq.times().windows(2).all(|w| w[0] <= w[1]));
            acc.push((seq.count_until(hi) - seq.count_until(lo)) as f64);
        }
        assert!(within(&acc, want), "case {c}: {} vs {want}", acc.mean());
        assert!((acc.variance() / want - 1.0).abs() < 0.05, "case {c}: var {}", acc.variance());
    }
}

#[test]
fn gpp_counts_are_negative_binomial() {
    let g = GppParams::new(0.5, 1.5, 1.0).unwrap();
    let t = 1.2;
    let mean = g.renewal_mean(t);
    let var = mean + mean * mean / g.shape();
    let mut acc = MeanSe::new();
    for rep in 0..20_000 {
        let rng = lane_stream(SEED + 20, rep, Lane::Arrivals);
        let mut src = GppSource::new(g, t, rng).unwrap();
        acc.push(ArrivalSequence::collect_from(&mut src).unwrap().len() as f64);
    }
    assert!(within(&acc, mean), "{} vs {mean}", acc.mean());
    assert!((acc.variance() / var - 1.0).abs() < 0.05, "{} vs {var}", acc.variance());
}

#[test]
fn aggregate_and_superposed_paths_share_the_mean() {
    let model = presets::critical();
    let intensity = Intensity::constant(1.5).unwrap();
    let t = 2.0;
    let grid = Grid::single(t).unwrap();
    let exact = mean_with_immigration(
        &MeanMatrix::build(&model).unwrap(),
        &ArrivalProcess::Nhpp(intensity.clone()),
        t,
    )
    .unwrap();
    let mut agg = MeanSe::new();
    let mut sup = MeanSe::new();
    for rep in 0..10_000 {
        let arrivals = lane_stream(SEED + 30, rep, Lane::Arrivals);
        let mut rng = replicate_stream(SEED + 30, rep);
        let mut src = NhppSource::new(intensity.clone(), t, arrivals).unwrap();
        let a = simulate_with_immigration(&model, &grid, &mut src, SimLimits::default(), &mut rng).unwrap();
        agg.push(a.last()[0] as f64);

        let arrivals = lane_stream(SEED + 31, rep, Lane::Arrivals);
        let mut rng = replicate_stream(SEED + 31, rep);
        let mut src = NhppSource::new(intensity.clone(), t, arrivals).unwrap();
        let s = simulate_superposed(&model, &grid, &mut src, SimLimits::default(), &mut rng).unwrap();
        sup.push(s.last()[0] as f64);
    }
    assert!(within(&agg, exact[0]), "aggregate {} vs {}", agg.mean(), exact[0]);
    assert!(within(&sup, exact[0]), "superposed {} vs {}", sup.mean(), exact[0]);
}

#[test]
fn paths_are_reproducible() {
    let model = presets::supercritical();
    let grid = Grid::new(vec![0.5, 1.0, 2.0]).unwrap();
    let run = |rep| {
        let mut rng = replicate_stream(SEED, rep);
        simulate_no(&model, &grid, &[2, 1], SimLimits::default(), &mut rng).unwrap()
    };
    assert_eq!(run(7).at(2), run(7).at(2));
    assert_eq!(run(7).iter().count(), 3);
}

#[test]
fn leap_sampler_matches_mm_infinity() {
    let model = presets::pure_death(1.0);
    let stream = ArrivalProcess::Nhpp(Intensity::constant(2.0).unwrap()).mixture();
    let mut acc = MeanSe::new();
    for rep in 0..20_000 {
        let mut rng = replicate_stream(SEED + 40, rep);
        acc.push(leap_pure_death(&model, &stream, 1.0, &mut rng).unwrap() as f64);
    }
    let want = 2.0 * (1.0 - (-1.0f64).exp());
    assert!(within(&acc, want), "{} vs {want}", acc.mean());
    assert!((acc.variance() / want - 1.0).abs() < 0.05);
}

#[test]
fn empirical_transform_matches_the_ode() {
    let model = presets::symmetric_subcritical();
    let intensity = Intensity::constant(1.0).unwrap();
    let t = 1.5;
    let s = [-0.4, -0.9];
    let grid = Grid::single(t).unwrap();
    let mut samples = Vec::new();
    for rep in 0..20_000 {
        let arrivals = lane_stream(SEED + 50, rep, Lane::Arrivals);
        let mut rng = replicate_stream(SEED + 50, rep);
        let mut src = NhppSource::new(intensity.clone(), t, arrivals).unwrap();
        let path = simulate_with_immigration(&model, &grid, &mut src, SimLimits::default(), &mut rng).unwrap();
        samples.push(path.last().iter().map(|&n| n as f64).collect::<Vec<_>>());
    }
    let (mean, se) = empirical_lt(samples.iter(), &s).unwrap();
    let want = lt_nhpp(&model, &intensity, &s, t).unwrap();
    assert!((mean - want).abs() <= 5.0 * se, "{mean} vs {want}");
}
