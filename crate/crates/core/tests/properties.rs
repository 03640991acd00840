use branchim_core::arrivals::{ArrivalProcess, GppParams, Intensity};
use branchim_core::limits::{gamma_subordinated_lt, LevyLimitSpec};
use branchim_core::linalg::Matrix;
use branchim_core::model::{BranchingModel, OffspringLaw};
use branchim_core::presets;
use branchim_core::spectral::{matrix_exp, perron, perron_defects, resolvent_direction, MeanMatrix};
use branchim_core::transforms::{lt_gpp, lt_nhpp, phi_o};
use branchim_core::transient::{psi_kernel, zeta_roots, TwoTypeParams};
use proptest::prelude::*;

/// Random two-type model with up to four support points per law.
fn arb_model() -> impl Strategy<Value = BranchingModel> {
    let law = prop::collection::vec(((0u32..3, 0u32..3), 0.05f64..1.0), 1..5).prop_map(|pts| {
        let mut seen = Vec::new();
        for ((a, b), w) in pts {
            if !seen.iter().any(|(n, _): &(Vec<u32>, f64)| n == &vec![a, b]) {
                seen.push((vec![a, b], w));
            }
        }
        let total: f64 = seen.iter().map(|(_, w)| w).sum();
        let mut entries: Vec<_> = seen.into_iter().map(|(n, w)| (n, w / total)).collect();
        let drift: f64 = 1.0 - entries.iter().map(|(_, p)| p).sum::<f64>();
        entries[0].1 += drift;
        OffspringLaw::new(2, entries).unwrap()
    });
    (0.2f64..3.0, 0.2f64..3.0, law.clone(), law)
        .prop_map(|(m1, m2, l1, l2)| BranchingModel::new(vec![m1, m2], vec![l1, l2]).unwrap())
}

/// Irreducible generator-like matrix with strictly positive off-diagonals.
fn arb_matrix(k: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(0.05f64..2.0, k * k).prop_map(move |xs| {
        let mut m = Matrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = if i == j { -3.0 * xs[i * k + j] } else { xs[i * k + j] };
            }
        }
        m
    })
}

fn arb_two_type() -> impl Strategy<Value = TwoTypeParams> {
    (0.1f64..5.0, 0.1f64..5.0, 0.0f64..=1.0, 0.0f64..0.99)
        .prop_map(|(m1, m2, a, b)| TwoTypeParams::new(m1, m2, a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generating_functions_are_one_at_one(model in arb_model()) {
        for i in 0..2 {
            prop_assert!((model.h_eval(i, &[1.0, 1.0]).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn mean_matches_finite_difference(model in arb_model()) {
        let m = model.offspring_moments();
        let h = 1e-5;
        for i in 0..2 {
            for j in 0..2 {
                let mut up = [1.0, 1.0];
                let mut down = [1.0, 1.0];
                up[j] += h;
                down[j] -= h;
                // The generating function is a polynomial, so evaluating it
                // just outside the unit cube is harmless.
                let fd = (model.law(i).pgf(&up) - model.law(i).pgf(&down)) / (2.0 * h);
                prop_assert!((fd - m.mean[(i, j)]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn second_moment_tensor_is_symmetric(model in arb_model()) {
        let m = model.offspring_moments();
        for i in 0..2 {
            prop_assert_eq!(m.second(i, 0, 1), m.second(i, 1, 0));
        }
    }

    #[test]
    fn perron_identities(a in arb_matrix(3)) {
        let a = MeanMatrix::from_matrix(a);
        let p = perron(&a).unwrap();
        let (res, norm) = perron_defects(&a, &p);
        prop_assert!(res <= 1e-10 && norm <= 1e-12);
        prop_assert!(p.u.iter().chain(&p.v).all(|&x| x > 0.0));
        for &t in &[0.5, 2.0, 5.0] {
            let eu = matrix_exp(a.matrix(), t).mul_vec(&p.u);
            for (x, u) in eu.iter().zip(&p.u) {
                prop_assert!((x * (-p.rho * t).exp() - u).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn resolvent_solves_its_system(a in arb_matrix(3), gap in 0.1f64..3.0) {
        let a = MeanMatrix::from_matrix(a);
        let p = perron(&a).unwrap();
        let xi = p.rho + gap;
        let x = resolvent_direction(&a, p.rho, xi, 1.0).unwrap();
        let back = a.matrix().scaled(-1.0).shifted(xi).mul_vec(&x);
        prop_assert!((back[0] - 1.0).abs() <= 1e-10);
        prop_assert!(back[1].abs() <= 1e-10 && back[2].abs() <= 1e-10);
    }

    #[test]
    fn zeta_vieta(params in arb_two_type()) {
        let (z1, z2) = zeta_roots(&params);
        prop_assert!(z2 <= z1 && z1 < 0.0);
        let scale = params.mu1 + params.mu2;
        prop_assert!((z1 + z2 + scale).abs() <= 1e-12 * scale);
        let prod = params.mu1 * params.mu2 * (1.0 - params.p12 * params.p21);
        prop_assert!((z1 * z2 - prod).abs() <= 1e-12 * prod.max(1.0));
    }

    #[test]
    fn kernel_mass_and_transform(params in arb_two_type()) {
        let k = psi_kernel(&params);
        let want = 1.0 / (1.0 - params.p12 * params.p21);
        prop_assert!((k.total_mass() - want).abs() <= 1e-10 * want);
        for &x in &[0.1, 1.0, 10.0] {
            prop_assert!((k.lt_numeric(x).unwrap() - k.lt_closed(x)).abs() <= 1e-8);
        }
    }

    #[test]
    fn occupancy_is_the_matrix_exponential(params in arb_two_type(), tau in 0.0f64..6.0) {
        let a = MeanMatrix::build_unchecked(&params.model());
        let e = matrix_exp(a.matrix(), tau)[(0, 0)];
        prop_assert!((psi_kernel(&params).occupancy(tau) - e).abs() <= 1e-6);
    }

    #[test]
    fn renewal_means_are_monotone(a in 0.05f64..2.0, b in 0.05f64..3.0, lambda in 0.1f64..2.0) {
        let processes = [
            ArrivalProcess::Gpp(GppParams::new(a, b, lambda).unwrap()),
            ArrivalProcess::Nhpp(Intensity::exponential(lambda, a - 1.0).unwrap()),
            ArrivalProcess::Nhpp(Intensity::table(vec![(0.0, b), (1.0, 0.0), (2.0, a)]).unwrap()),
        ];
        for p in &processes {
            prop_assert_eq!(p.renewal_mean(0.0), 0.0);
            let mut last = 0.0;
            for i in 1..40 {
                let m = p.renewal_mean(i as f64 * 0.1);
                prop_assert!(m >= last);
                last = m;
            }
        }
    }

    #[test]
    fn gpp_pmf_mean_matches_renewal_mean(a in 0.2f64..2.0, b in 0.2f64..3.0, t in 0.05f64..1.5) {
        let g = GppParams::new(a, b, 1.0).unwrap();
        let mut mass = 0.0;
        let mut mean = 0.0;
        for n in 0..20_000u64 {
            let p = g.marginal_pmf(t, n);
            mass += p;
            mean += n as f64 * p;
            if n as f64 > 10.0 * g.renewal_mean(t) + 200.0 && p < 1e-300 {
                break;
            }
        }
        prop_assert!(mass >= 1.0 - 1e-10);
        prop_assert!((mean - g.renewal_mean(t)).abs() <= 1e-8 * g.renewal_mean(t).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transforms_are_monotone_in_s(s1 in -3.0f64..0.0, s2 in -3.0f64..0.0, shrink in 0.1f64..1.0) {
        let model = presets::supercritical();
        let intensity = Intensity::exponential(1.0, -0.5).unwrap();
        let gpp = GppParams::new(0.5, 1.0, 1.0).unwrap();
        let outer = [s1, s2];
        let inner = [s1 * shrink, s2];
        let pairs = [
            (phi_o(&model, &outer, 1.5).unwrap(), phi_o(&model, &inner, 1.5).unwrap()),
            (lt_nhpp(&model, &intensity, &outer, 1.5).unwrap(), lt_nhpp(&model, &intensity, &inner, 1.5).unwrap()),
            (lt_gpp(&model, &gpp, &outer, 1.5).unwrap(), lt_gpp(&model, &gpp, &inner, 1.5).unwrap()),
        ];
        for (far, near) in pairs {
            prop_assert!(far > 0.0 && near <= 1.0);
            prop_assert!(far <= near + 1e-12);
        }
    }

    #[test]
    fn psi_is_a_bernstein_exponent(ws in prop::collection::vec(0.0f64..4.0, 1..60)) {
        let model = presets::supercritical();
        let p = perron(&MeanMatrix::build(&model).unwrap()).unwrap();
        let spec = LevyLimitSpec::new(&p, GppParams::new(0.25, 0.25, 1.0).unwrap(), ws).unwrap();
        let xs: Vec<f64> = (0..12).map(|i| 0.25 * i as f64).collect();
        let psi: Vec<f64> = xs.iter().map(|&x| spec.psi_levy_measure(x).unwrap()).collect();
        prop_assert_eq!(psi[0], 0.0);
        for w in psi.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        for w in psi.windows(3) {
            prop_assert!(w[0] + w[2] <= 2.0 * w[1] + 1e-10);
        }
        prop_assert_eq!(gamma_subordinated_lt(|x| spec.psi_levy_measure(x).unwrap(), 1.5, 0.0), 1.0);
    }
}
