use std::f64::consts::PI;

use proptest::prelude::*;

use emhd_cascade::assembly::BubbleAtlas;
use emhd_cascade::cascade_ode::{integrate_cascade, ratio_monotonicity, root_residual, solve_root, IntegrationOptions};
use emhd_cascade::diagnostics::{predicted_holder_exponent, selfsim_feasibility};
use emhd_cascade::direct_solver::{integrate, DirectOptions};
use emhd_cascade::profile::make_seed_profile;
use emhd_cascade::singular_integral::{hilbert_derivative_at, hilbert_periodic};
use emhd_cascade::{CascadeParams, CascadeState, Grid, ModelParams, Parity, SampledField, SpectralState};

fn modes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..24)
}

fn band_limited(g: Grid, coef: &[(f64, f64)], mean: f64) -> SampledField {
    SampledField::from_fn(g, vec![], Parity::None, |x| {
        mean + coef
            .iter()
            .enumerate()
            .map(|(j, (a, b))| {
                let k = (j + 1) as f64;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum::<f64>()
    })
    .unwrap()
}

fn cascade(amp: f64, n: usize, delta: f64) -> CascadeParams {
    CascadeParams {
        amp,
        r: 0.05,
        n,
        delta,
        b: 1.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hilbert_is_an_anti_involution_up_to_the_mean(coef in modes(), mean in -2.0..2.0f64) {
        let g = Grid::new(0.0, 2.0 * PI, 256).unwrap();
        let f = band_limited(g, &coef, mean);
        let hh = hilbert_periodic(&hilbert_periodic(&f).unwrap()).unwrap();
        let scale = f.max_abs().max(1.0);
        for i in 0..256 {
            prop_assert!((hh.values[i] + f.values[i] - mean).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn hilbert_swaps_parity(coef in modes()) {
        let g = Grid::symmetric(PI, 256).unwrap();
        let even: Vec<(f64, f64)> = coef.iter().map(|(a, _)| (*a, 0.0)).collect();
        let odd: Vec<(f64, f64)> = coef.iter().map(|(_, b)| (0.0, *b)).collect();
        for (data, sign) in [(even, -1.0), (odd, 1.0)] {
            let h = hilbert_periodic(&band_limited(g, &data, 0.0)).unwrap();
            for i in 1..256 {
                let j = g.mirror(i).unwrap();
                prop_assert!((h.values[j] - sign * h.values[i]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn far_field_derivatives_obey_the_kernel_bound(r in 0.02..0.12f64, x in 2.0..6.0f64, left in any::<bool>()) {
        let seed = make_seed_profile(r, 512).unwrap();
        let f = &seed.field;
        let l1: f64 = f.values.iter().map(|v| v.abs()).sum::<f64>() * f.grid.spacing();
        let x = if left { -x } else { x };
        let mut fact = 1.0;
        for order in 0..=5usize {
            if order > 0 {
                fact *= order as f64;
            }
            let v = hilbert_derivative_at(f, x, order).unwrap();
            let bound = fact / PI * l1 / (x.abs() - 1.0 - 2.0 * r).powi(order as i32 + 1);
            prop_assert!(v.abs() <= bound * (1.0 + 1e-9), "order {order}: {v} > {bound}");
        }
    }

    #[test]
    fn cascade_is_triangular_and_positive(amp in 1.1..3.0f64, n in 2usize..8, extra in 1usize..4, delta in 0.2..2.0f64) {
        let small = cascade(amp, n, delta);
        let big = cascade(amp, n + extra, delta);
        let run = |p: &CascadeParams| {
            integrate_cascade(CascadeState::initial(p, vec![delta; p.n + 1]), p, -1.0, IntegrationOptions::default()).unwrap()
        };
        let (a, b) = (run(&small), run(&big));
        for s in a.states.iter().chain(&b.states) {
            prop_assert!(s.x.iter().all(|v| *v > 0.0));
        }
        let (xa, xb) = (&a.last().x, &b.last().x);
        for k in 0..=n {
            prop_assert!((xa[k] / xb[k] - 1.0).abs() <= 1e-8, "bubble {k}: {} vs {}", xa[k], xb[k]);
        }
    }

    #[test]
    fn ratios_are_monotone_for_nonnegative_couplings(amp in 1.1..4.0f64, couplings in prop::collection::vec(0.0..2.0f64, 6)) {
        let p = cascade(amp, 5, 1.0);
        let traj = integrate_cascade(CascadeState::initial(&p, couplings), &p, -1.0, IntegrationOptions::default()).unwrap();
        prop_assert!(ratio_monotonicity(&traj).pass);
    }

    #[test]
    fn backward_then_forward_returns_to_the_start(amp in 1.1..3.0f64, n in 1usize..10, t in 0.1..2.0f64) {
        let p = cascade(amp, n, 1.0);
        let back = integrate_cascade(CascadeState::initial(&p, vec![1.0; n + 1]), &p, -t, IntegrationOptions::default()).unwrap();
        let fwd = integrate_cascade(back.last().clone(), &p, 0.0, IntegrationOptions::default()).unwrap();
        for (k, x) in fwd.last().x.iter().enumerate() {
            prop_assert!((x / amp.powi(k as i32) - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn root_lies_strictly_inside_its_bounds(amp in 1.01..20.0f64) {
        let a = solve_root(amp).unwrap();
        prop_assert!(root_residual(amp, a) <= 1e-12 * amp);
        prop_assert!(amp.ln() < a && a < 2.0 * (amp - 1.0));
    }

    #[test]
    fn predicted_holder_exponent_is_in_range(amp in 1.05..4.0f64, r in 0.005..0.12f64) {
        prop_assume!(amp * r.sqrt() < 1.0);
        let s = predicted_holder_exponent(amp, r).unwrap();
        prop_assert!(s > 0.0 && s <= 0.5);
    }

    #[test]
    fn self_similar_ansatz_is_never_feasible(cs in prop::collection::vec(-0.4999..50.0f64, 1..20)) {
        for row in selfsim_feasibility(&cs, &ModelParams::default()).unwrap() {
            prop_assert!(!row.feasible && row.cl_inv_sq < 0.0);
        }
    }

    #[test]
    fn assembled_field_is_odd(amp in 1.2..3.0f64, r in 0.03..0.1f64, n in 1usize..5, xs in prop::collection::vec(0.0..1.3f64, 8)) {
        prop_assume!(amp * r.sqrt() < 1.0);
        let p = ModelParams { amp, r, n, ..ModelParams::default() };
        let atlas = BubbleAtlas::initial(&p, &make_seed_profile(r, 512).unwrap()).unwrap();
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        for m in [0usize, 3] {
            let (a, b) = (atlas.evaluate(&xs, m).unwrap(), atlas.evaluate(&neg, m).unwrap());
            let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((v - sign * u).abs() <= 1e-8 * u.abs().max(1.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn direct_solver_conserves_mean_and_oddness(coef in prop::collection::vec(-0.3..0.3f64, 1..6), mean in -1.0..1.0f64) {
        let g = Grid::symmetric(PI, 128).unwrap();
        let odd: Vec<(f64, f64)> = coef.iter().map(|b| (0.0, *b)).collect();
        for (data, m) in [(odd, 0.0), (coef.iter().map(|a| (*a, 0.0)).collect::<Vec<_>>(), mean)] {
            let f = band_limited(g, &data, m);
            let st = SpectralState::new(&f, 0.0, Default::default()).unwrap();
            let run = integrate(&st, &ModelParams::default(), 0.05, &DirectOptions::default()).unwrap();
            prop_assert!(run.mean_drift <= 1e-12 * (1.0 + m.abs()));
            if m == 0.0 {
                let v = run.last().values();
                for i in 1..128 {
                    prop_assert!((v[g.mirror(i).unwrap()] + v[i]).abs() <= 1e-8);
                }
            }
        }
    }
}
