use std::sync::{Arc, OnceLock};

use choquard_core::exponents::{classify, tau_closed_form, tau_sequence, tau_step};
use choquard_core::green::{FarBoundary, GreenOperator};
use choquard_core::grid::fit_power_law;
use choquard_core::riesz::build_kernel;
use choquard_core::{
    make_grid, AngularKernel, OriginModel, ProblemParams, RadialFunction, RadialGrid, TailModel, Verdict,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ProblemParams> {
    (prop::sample::select(vec![3u32, 4, 5, 10]), 0.01f64..0.99, 0.01f64..4.0, 0.01f64..0.99).prop_map(
        |(dim, a, p, q)| ProblemParams::new(dim, a * dim as f64, p, q).expect("inside the domain"),
    )
}

/// Log-Gaussian bumps `(amplitude, centre in ln r, width)`.
fn bumps() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.1f64..2.0, -2.0f64..2.0, 0.3f64..1.5), 1..4)
}

fn sample(grid: &Arc<RadialGrid>, bumps: &[(f64, f64, f64)]) -> Vec<f64> {
    grid.log_nodes
        .iter()
        .map(|&t| bumps.iter().map(|(a, m, s)| a * (-((t - m) / s).powi(2)).exp()).sum())
        .collect()
}

fn profile(grid: &Arc<RadialGrid>, values: Vec<f64>) -> RadialFunction {
    let origin = OriginModel {
        coefficient: values[0],
        exponent: 0.0,
    };
    RadialFunction::with_models(grid.clone(), values, origin, TailModel::Zero)
}

fn small_grid() -> Arc<RadialGrid> {
    static GRID: OnceLock<Arc<RadialGrid>> = OnceLock::new();
    GRID.get_or_init(|| Arc::new(make_grid(1e-3, 1e2, 512, 3).unwrap())).clone()
}

fn kernel() -> &'static AngularKernel {
    static KERNEL: OnceLock<AngularKernel> = OnceLock::new();
    KERNEL.get_or_init(|| build_kernel(3, 1.0, Arc::new(make_grid(1e-3, 1e3, 769, 3).unwrap())).unwrap())
}

fn literal_region(p: &ProblemParams) -> Verdict {
    let (n, a, p, q) = (p.dim as f64, p.alpha, p.p, p.q);
    let weighted = (1.0 - a / n) * p + q;
    let lower = weighted >= 1.0 || p + q >= 1.0 + a / (n - 2.0);
    let upper = p + q >= (n + a) / (n - 2.0) || p >= n / (n - 2.0);
    if !lower {
        Verdict::Nonexistence
    } else if upper {
        Verdict::RemovableOnly
    } else {
        Verdict::ExistenceWithDirac
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_matches_recursion(pr in params(), j in 0usize..=50) {
        let mut tau = tau_closed_form(&pr, 0);
        for _ in 0..j {
            tau = tau_step(&pr, tau);
        }
        prop_assume!(tau.is_finite());
        let closed = tau_closed_form(&pr, j);
        prop_assert!((closed - tau).abs() <= 1e-10 * (1.0 + tau.abs()), "{closed} vs {tau}");
    }

    #[test]
    fn bootstrap_is_increasing_while_below_threshold(pr in params()) {
        let seq = tau_sequence(&pr, 64).unwrap();
        if tau_step(&pr, seq.tau0) > seq.tau0 {
            for w in seq.taus.windows(2) {
                prop_assert!(w[1] > w[0] || !w[1].is_finite(), "{:?}", seq.taus);
            }
        }
    }

    #[test]
    fn classifier_matches_literal_inequalities(pr in params()) {
        let region = classify(&pr).unwrap();
        prop_assume!(region.margins.min_abs() > 1e-9);
        prop_assert_eq!(region.verdict, literal_region(&pr));
    }

    #[test]
    fn power_law_fit_is_exact(m in -6.0f64..6.0, a in 0.01f64..100.0) {
        let g = small_grid();
        let f = RadialFunction::from_fn(g.clone(), |r| a * r.powf(m));
        let fit = fit_power_law(&f, (1e-2, 1e1)).unwrap();
        prop_assert!((fit.exponent - m).abs() < 1e-9);
        prop_assert!((fit.prefactor - a).abs() < 1e-9 * a);
    }

    #[test]
    fn integration_is_linear(f in bumps(), h in bumps(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = small_grid();
        let (vf, vh) = (sample(&g, &f), sample(&g, &h));
        let sum: Vec<f64> = vf.iter().zip(&vh).map(|(x, y)| a * x + b * y).collect();
        let (i_f, i_h) = (profile(&g, vf).integrate().unwrap(), profile(&g, vh).integrate().unwrap());
        let i_s = profile(&g, sum).integrate().unwrap();
        let scale = (a * i_f).abs() + (b * i_h).abs();
        prop_assert!((i_s - a * i_f - b * i_h).abs() <= 1e-12 * scale.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn green_operator_is_linear_positive_and_monotone(f in bumps(), h in bumps(), a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let g = small_grid();
        let op = GreenOperator::new(g.clone()).unwrap();
        let bc = FarBoundary::Rate(g.r_max + 1.0);
        let (vf, vh) = (sample(&g, &f), sample(&g, &h));
        let uf = op.apply_with(&profile(&g, vf.clone()), bc).unwrap();
        let uh = op.apply_with(&profile(&g, vh.clone()), bc).unwrap();
        prop_assert!(uf.values.iter().all(|v| *v >= 0.0));
        let sum: Vec<f64> = vf.iter().zip(&vh).map(|(x, y)| a * x + b * y).collect();
        let us = op.apply_with(&profile(&g, sum), bc).unwrap();
        for i in 0..g.len() {
            let expect = a * uf.values[i] + b * uh.values[i];
            prop_assert!((us.values[i] - expect).abs() <= 1e-12 * expect.abs().max(1e-300));
        }
        let bigger: Vec<f64> = vf.iter().zip(&vh).map(|(x, y)| x + y).collect();
        let ub = op.apply_with(&profile(&g, bigger), bc).unwrap();
        prop_assert!(ub.values.iter().zip(&uf.values).all(|(x, y)| x >= y));
    }

    #[test]
    fn riesz_potential_is_linear(f in bumps(), h in bumps(), a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let k = kernel();
        let g = k.grid().clone();
        let (vf, vh) = (sample(&g, &f), sample(&g, &h));
        let i_f = k.apply(&profile(&g, vf.clone())).unwrap();
        let i_h = k.apply(&profile(&g, vh.clone())).unwrap();
        prop_assert!(i_f.values.iter().all(|v| *v >= 0.0));
        let sum: Vec<f64> = vf.iter().zip(&vh).map(|(x, y)| a * x + b * y).collect();
        let i_s = k.apply(&profile(&g, sum)).unwrap();
        for i in 0..g.len() {
            let expect = a * i_f.values[i] + b * i_h.values[i];
            prop_assert!((i_s.values[i] - expect).abs() <= 1e-12 * expect.abs().max(1e-300));
        }
    }

    #[test]
    fn riesz_potential_scales(shift in -40i64..=40, width in 0.5f64..1.5) {
        let k = kernel();
        let g = k.grid().clone();
        let lambda = (shift as f64 * g.log_step).exp();
        let base = |r: f64| (-(r.ln() / width).powi(2)).exp();
        let i_f = k.apply(&RadialFunction::from_fn(g.clone(), base)).unwrap();
        let i_l = k.apply(&RadialFunction::from_fn(g.clone(), |r| base(r / lambda))).unwrap();
        let len = g.len() as i64;
        let lo = 2 * shift.abs() + 32;
        for i in lo..len - lo {
            let expect = lambda.powf(k.alpha) * i_f.values[(i - shift) as usize];
            let got = i_l.values[i as usize];
            prop_assert!((got - expect).abs() <= 1e-4 * expect, "node {i}: {got} vs {expect}");
        }
    }
}
