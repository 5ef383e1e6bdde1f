//! Seeded invariant suites, one per module, runnable outside the test
//! harness. Outcomes carry no timings so reruns with one seed print the
//! same bytes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    linear_comparison_decay, lower_bound_check, verify, verify_decay, young_inequality_check, Tolerances,
};
use crate::exponents::{
    c_n, classify, tau_closed_form, tau_sequence, ProblemParams, TauLimit, Verdict,
};
use crate::green::{fundamental_solution, FarBoundary, GreenOperator};
use crate::grid::{make_grid, OriginModel, RadialFunction, RadialGrid, TailModel};
use crate::riesz::{build_kernel, AngularKernel};
use crate::solver::{iterate, iterate_from, IterateOptions, SolveVerdict, Workspace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Exponents,
    Green,
    Riesz,
    Solver,
    Analysis,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 5] = [
        Suite::Exponents,
        Suite::Green,
        Suite::Riesz,
        Suite::Solver,
        Suite::Analysis,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Exponents => "exponents",
            Suite::Green => "green",
            Suite::Riesz => "riesz",
            Suite::Solver => "solver",
            Suite::Analysis => "analysis",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponents" => Ok(Suite::Exponents),
            "green" => Ok(Suite::Green),
            "riesz" => Ok(Suite::Riesz),
            "solver" => Ok(Suite::Solver),
            "analysis" => Ok(Suite::Analysis),
            "all" => Ok(Suite::All),
            other => Err(Error::Configuration(format!(
                "unknown suite `{other}`; expected exponents, green, riesz, solver, analysis or all"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyOutcome {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}/{}: {}", self.suite, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub outcomes: Vec<PropertyOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

struct Recorder {
    suite: Suite,
    outcomes: Vec<PropertyOutcome>,
}

impl Recorder {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            outcomes: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.outcomes.push(PropertyOutcome {
            suite: self.suite,
            name: name.to_string(),
            passed,
            detail,
        });
    }

    /// Records an error as a failure of `name`.
    fn guard<T>(&mut self, name: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(x) => Some(x),
            Err(e) => {
                self.check(name, false, format!("error: {e}"));
                None
            }
        }
    }
}

/// Runs `suite` (every module for [`Suite::All`]) from `seed`.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<SuiteReport> {
    let suites: Vec<Suite> = match suite {
        Suite::All => Suite::MODULES.to_vec(),
        s => vec![s],
    };
    suites
        .into_iter()
        .map(|s| {
            // each module draws from its own stream so suites are independent
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let mut rec = Recorder::new(s);
            match s {
                Suite::Exponents => exponents_suite(&mut rec, &mut rng),
                Suite::Green => green_suite(&mut rec, &mut rng),
                Suite::Riesz => riesz_suite(&mut rec, &mut rng),
                Suite::Solver => solver_suite(&mut rec, &mut rng),
                Suite::Analysis => analysis_suite(&mut rec, &mut rng),
                Suite::All => unreachable!(),
            }
            SuiteReport {
                suite: s,
                seed,
                outcomes: rec.outcomes,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// exponents

/// Region read directly off the theorem inequalities, without margins.
pub fn literal_verdict(dim: u32, alpha: f64, p: f64, q: f64) -> Verdict {
    let n = dim as f64;
    let nonexistence = (1.0 - alpha / n) * p + q < 1.0 && p + q < 1.0 + alpha / (n - 2.0);
    let cond_12 = (1.0 - alpha / n) * p + q >= 1.0 || p + q >= 1.0 + alpha / (n - 2.0);
    let large = p + q >= (n + alpha) / (n - 2.0) || p >= n / (n - 2.0);
    let existence = p < n / (n - 2.0) && q > 0.0 && q < 1.0 && cond_12 && p + q < (n + alpha) / (n - 2.0);
    if nonexistence {
        Verdict::Nonexistence
    } else if cond_12 && large {
        Verdict::RemovableOnly
    } else if existence {
        Verdict::ExistenceWithDirac
    } else {
        Verdict::Outside
    }
}

pub fn random_params<R: Rng>(rng: &mut R) -> ProblemParams {
    let dim = [3u32, 4, 5, 10][rng.random_range(0..4)];
    let alpha = rng.random_range(0.01..dim as f64 - 0.01);
    let p = rng.random_range(0.01..4.0);
    let q = rng.random_range(0.01..0.99);
    ProblemParams::new(dim, alpha, p, q).expect("sampled inside the domain")
}

fn exponents_suite(rec: &mut Recorder, rng: &mut ChaCha8Rng) {
    let mut checked = 0;
    let mut mismatches = 0;
    let mut overlaps = 0;
    while checked < 10_000 {
        let pr = random_params(rng);
        let Some(v) = rec.guard("classifier_oracle", classify(&pr)) else { return };
        if v.margins.min_abs() <= 1e-9 {
            continue;
        }
        checked += 1;
        if v.verdict != literal_verdict(pr.dim, pr.alpha, pr.p, pr.q) {
            mismatches += 1;
        }
        if v.condition_flags.nonexist_q && v.condition_flags.existence_hypotheses {
            overlaps += 1;
        }
    }
    rec.check(
        "classifier_oracle",
        mismatches == 0,
        format!("{mismatches} mismatches in {checked} samples"),
    );
    rec.check(
        "partition_disjoint",
        overlaps == 0,
        format!("{overlaps} samples in both Nonexistence and ExistenceWithDirac"),
    );

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let pr = random_params(rng);
        let Some(seq) = rec.guard("closed_form", tau_sequence(&pr, 50)) else { return };
        for (j, t) in seq.taus.iter().enumerate() {
            worst = worst.max((t - tau_closed_form(&pr, j)).abs() / (1.0 + t.abs()));
        }
    }
    rec.check("closed_form", worst <= 1e-10, format!("worst scaled gap {worst:.3e}"));

    let (mut samples, mut bad_mono, mut bad_limit) = (0, 0, 0);
    while samples < 1000 {
        let pr = random_params(rng);
        let Ok(v) = classify(&pr) else { continue };
        if !v.condition_flags.nonexist_q {
            continue;
        }
        samples += 1;
        let Ok(seq) = tau_sequence(&pr, 64) else { continue };
        if seq.taus.windows(2).any(|w| w[1] <= w[0]) {
            bad_mono += 1;
        }
        let rho = pr.ratio();
        if rho < 0.9 {
            let taus: Vec<f64> = (0..=5).map(|j| tau_closed_form(&pr, j)).collect();
            if let TauLimit::Finite(lim) = seq.limit {
                let e0 = (taus[0] - lim).abs();
                let e5 = (taus[5] - lim).abs();
                if e0 > 0.0 && ((e5 / e0) - rho.powi(5)).abs() > 1e-6 * (1.0 + e0) / e0 {
                    bad_limit += 1;
                }
            }
        }
    }
    rec.check(
        "tau_increasing",
        bad_mono == 0,
        format!("{bad_mono} non-increasing sequences in {samples}"),
    );
    rec.check(
        "tau_limit_geometric",
        bad_limit == 0,
        format!("{bad_limit} sequences off the geometric rate in {samples}"),
    );

    let pr = ProblemParams::new(10, 0.5, 0.05, 0.9).unwrap();
    if let Some(seq) = rec.guard("bootstrap_example", tau_sequence(&pr, 64)) {
        let expected = [-95.0, -42.5, -16.25, -3.125];
        let ok = seq.j0 == Some(3)
            && seq.taus.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12)
            && seq.divergence_criterion(&pr).is_some_and(|c| (c - 0.34375).abs() < 1e-12);
        rec.check(
            "bootstrap_example",
            ok,
            format!("taus {:?}, j0 {:?}", seq.taus, seq.j0),
        );
    }
}

// ---------------------------------------------------------------------------
// green

/// Random positive combination of log-Gaussian bumps with an exact
/// constant origin model and a zero tail, so that sums are model-linear.
pub fn random_bumps<R: Rng>(rng: &mut R, grid: &Arc<RadialGrid>) -> RadialFunction {
    let count = rng.random_range(1..4);
    let bumps: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.random_range(0.1..2.0),
                rng.random_range(-2.0f64..2.0),
                rng.random_range(0.3..1.5),
            )
        })
        .collect();
    let values: Vec<f64> = grid
        .log_nodes
        .iter()
        .map(|&t| bumps.iter().map(|(a, m, s)| a * (-((t - m) / s).powi(2)).exp()).sum())
        .collect();
    let origin = OriginModel {
        coefficient: values[0],
        exponent: 0.0,
    };
    RadialFunction::with_models(grid.clone(), values, origin, TailModel::Zero)
}

fn with_same_models(f: &RadialFunction, values: Vec<f64>) -> RadialFunction {
    let origin = OriginModel {
        coefficient: values[0],
        exponent: 0.0,
    };
    RadialFunction::with_models(f.grid.clone(), values, origin, TailModel::Zero)
}

fn green_suite(rec: &mut Recorder, rng: &mut ChaCha8Rng) {
    let Some(grid) = rec.guard("setup", make_grid(1e-4, 1e2, 2048, 3)) else { return };
    let grid = Arc::new(grid);
    let Some(op) = rec.guard("setup", GreenOperator::new(grid.clone())) else { return };
    let bc = FarBoundary::Rate(grid.r_max + 1.0);

    let (mut neg, mut lin, mut mono): (usize, f64, usize) = (0, 0.0, 0);
    for _ in 0..20 {
        let f = random_bumps(rng, &grid);
        let g = random_bumps(rng, &grid);
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (Ok(uf), Ok(ug)) = (op.apply_with(&f, bc), op.apply_with(&g, bc)) else {
            rec.check("positivity", false, "solve failed".into());
            return;
        };
        neg += uf.values.iter().filter(|v| **v < 0.0).count();
        let sum = with_same_models(&f, f.values.iter().zip(&g.values).map(|(x, y)| a * x + b * y).collect());
        if let Ok(us) = op.apply_with(&sum, bc) {
            for i in 0..grid.len() {
                let scale = (a * uf.values[i]).abs() + (b * ug.values[i]).abs();
                if scale > 0.0 {
                    lin = lin.max((us.values[i] - a * uf.values[i] - b * ug.values[i]).abs() / scale);
                }
            }
        }
        let bigger = with_same_models(&f, f.values.iter().zip(&g.values).map(|(x, y)| x + y).collect());
        if let Ok(ub) = op.apply_with(&bigger, bc) {
            mono += ub.values.iter().zip(&uf.values).filter(|(x, y)| x < y).count();
        }
    }
    rec.check("positivity", neg == 0, format!("{neg} negative nodes over 20 draws"));
    rec.check("linearity", lin <= 1e-12, format!("worst relative defect {lin:.3e}"));
    rec.check("monotonicity", mono == 0, format!("{mono} order violations over 20 draws"));

    let f = RadialFunction::from_fn(grid.clone(), |r| (-r * r).exp());
    if let Some(u) = rec.guard("residual", op.apply(&f)) {
        let res = op.residual_operator(&u.values);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 1..grid.len() - 1 {
            num += grid.weights[i] * (res[i] - f.values[i]).powi(2);
            den += grid.weights[i] * f.values[i].powi(2);
        }
        let rel = (num / den).sqrt();
        rec.check("residual", rel < 1e-6, format!("relative L2 residual {rel:.3e}"));
    }

    let one = RadialFunction::from_fn(grid.clone(), |_| 1.0);
    if let Some(u) = rec.guard("constant_fixed", op.apply(&one)) {
        let worst = grid
            .window_indices(10.0 * grid.r_min, grid.r_max / 10.0)
            .map(|i| (u.values[i] - 1.0).abs())
            .fold(0.0, f64::max);
        rec.check("constant_fixed", worst < 1e-6, format!("interior sup error {worst:.3e}"));
    }

    if let Some(fs) = rec.guard("yukawa", fundamental_solution(3, grid.clone())) {
        let worst = grid
            .window_indices(10.0 * grid.r_min, grid.r_max / 10.0)
            .map(|i| {
                let r = grid.nodes[i];
                let exact = (-r).exp() / (4.0 * std::f64::consts::PI * r);
                (fs.profile.values[i] - exact).abs() / exact
            })
            .fold(0.0, f64::max);
        rec.check("yukawa", worst < 1e-6, format!("worst relative error {worst:.3e}"));
        let rel = (fs.origin_fit.prefactor - c_n(3)).abs() / c_n(3);
        rec.check("origin_coefficient", rel < 5e-3, format!("relative error {rel:.3e}"));
    }
}

// ---------------------------------------------------------------------------
// riesz

fn riesz_suite(rec: &mut Recorder, rng: &mut ChaCha8Rng) {
    let Some(grid) = rec.guard("setup", make_grid(1e-3, 1e3, 2049, 3)) else { return };
    let grid = Arc::new(grid);
    let Some(kernel) = rec.guard("setup", build_kernel(3, 1.0, grid.clone())) else { return };
    riesz_properties(rec, rng, &kernel);
}

fn riesz_properties(rec: &mut Recorder, rng: &mut ChaCha8Rng, kernel: &AngularKernel) {
    let grid = kernel.grid().clone();
    let alpha = kernel.alpha;
    let n = grid.n();

    let (mut neg, mut lin): (usize, f64) = (0, 0.0);
    for _ in 0..10 {
        let f = random_bumps(rng, &grid);
        let g = random_bumps(rng, &grid);
        let (a, b) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        let (Ok(i_f), Ok(i_g)) = (kernel.apply(&f), kernel.apply(&g)) else {
            rec.check("linearity_positivity", false, "apply failed".into());
            return;
        };
        neg += i_f.values.iter().filter(|v| **v < 0.0).count();
        let sum = with_same_models(&f, f.values.iter().zip(&g.values).map(|(x, y)| a * x + b * y).collect());
        if let Ok(i_s) = kernel.apply(&sum) {
            for i in 0..grid.len() {
                let expect = a * i_f.values[i] + b * i_g.values[i];
                if expect > 0.0 {
                    lin = lin.max((i_s.values[i] - expect).abs() / expect);
                }
            }
        }
    }
    rec.check(
        "linearity_positivity",
        neg == 0 && lin <= 1e-12,
        format!("{neg} negative nodes, worst relative defect {lin:.3e}"),
    );

    // scaling by a whole number of grid steps keeps r/λ on the nodes
    let shift: i64 = rng.random_range(-80..=80);
    let lambda = (shift as f64 * grid.log_step).exp();
    let base = |r: f64| (-(r.ln()).powi(2) / 2.0).exp();
    let f = RadialFunction::from_fn(grid.clone(), base);
    let f_l = RadialFunction::from_fn(grid.clone(), |r| base(r / lambda));
    if let (Ok(i_f), Ok(i_l)) = (kernel.apply(&f), kernel.apply(&f_l)) {
        let len = grid.len() as i64;
        let lo = 2 * shift.abs() + 32;
        let worst = (lo..len - lo)
            .map(|i| {
                let j = (i - shift) as usize;
                let expect = lambda.powf(alpha) * i_f.values[j];
                (i_l.values[i as usize] - expect).abs() / expect
            })
            .fold(0.0, f64::max);
        rec.check(
            "scaling_law",
            worst < 1e-4,
            format!("λ = e^({shift}h), worst relative defect {worst:.3e}"),
        );
    }

    let abar = rng.random_range(alpha + 0.2..n - 0.2);
    let f = RadialFunction::from_fn(grid.clone(), |r| r.powf(-abar).min(1.0));
    if let Some(i_f) = rec.guard("vanishing_at_infinity", kernel.apply(&f)) {
        let far = i_f.values[grid.len() - 1];
        let quarter = i_f.values[grid.nearest_index(grid.r_max / 4.0)];
        rec.check(
            "vanishing_at_infinity",
            far < quarter,
            format!("ᾱ = {abar:.4}: I(r_max) = {far:.4e}, I(r_max/4) = {quarter:.4e}"),
        );
    }

    if let Some(ind) = rec.guard("sandwich", RadialFunction::indicator(grid.clone(), 1.0)) {
        let mass = ind.integrate().unwrap_or(f64::NAN);
        if let Some(i_b) = rec.guard("sandwich", kernel.apply(&ind)) {
            let mut bad = 0;
            for i in grid.window_indices(2.0, grid.r_max) {
                let r = grid.nodes[i];
                let lo = (r + 1.0).powf(alpha - n) * mass;
                let hi = (r - 1.0).powf(alpha - n) * mass;
                let v = i_b.values[i];
                if v < lo * (1.0 - 1e-6) || v > hi * (1.0 + 1e-6) {
                    bad += 1;
                }
            }
            rec.check("sandwich", bad == 0, format!("{bad} nodes outside the two-sided bound"));
            if let Ok(at0) = kernel.evaluate_at(&ind, 0.0) {
                // ∫_{B₁} |y|^{α-N} dy = |S^{N-1}|/α
                let target = crate::exponents::sphere_area(grid.dim) / alpha;
                let rel = (at0 - target).abs() / target;
                rec.check("ball_at_origin", rel < 1e-3, format!("I(0) = {at0:.8}, relative error {rel:.3e}"));
            }
        }
    }

    let f = RadialFunction::from_fn(grid.clone(), |r| (1.0 + r).powi(-5));
    if let Some(rep) = rec.guard("asymptotic_slope", kernel.asymptotic_check(&f, 5.0)) {
        rec.check(
            "asymptotic_slope",
            rep.fitted_error_slope <= rep.slope_bound + 0.1,
            format!("slope {:.4} against bound {:.4}", rep.fitted_error_slope, rep.slope_bound),
        );
    }
}

// ---------------------------------------------------------------------------
// solver

fn solver_case(rec: &mut Recorder, n: usize) -> Option<Workspace> {
    let params = ProblemParams::new(3, 2.0, 2.0, 0.5).unwrap();
    let grid = rec.guard("setup", make_grid(1e-4, 1e2, n, 3))?;
    rec.guard("setup", Workspace::new(params, Arc::new(grid)))
}

fn solver_suite(rec: &mut Recorder, rng: &mut ChaCha8Rng) {
    let Some(ws) = solver_case(rec, 2048) else { return };
    let opts = IterateOptions::default();
    let k = 10f64.powf(rng.random_range(-3.0..-2.0));
    let Some(run) = rec.guard("monotone_capped", iterate(&ws, k, &opts)) else { return };
    rec.check(
        "monotone_capped",
        run.verdict == SolveVerdict::Converged && run.all_monotone() && run.all_capped() == Some(true),
        format!(
            "k = {k:.6e}: {} after {} steps, capped {:?}",
            run.verdict,
            run.iterations,
            run.all_capped()
        ),
    );
    let fp = run.fixed_point_residual.unwrap_or(f64::INFINITY);
    rec.check("fixed_point", fp < 10.0 * opts.tol, format!("residual {fp:.3e}"));

    // restart strictly between kΓ₀ and u_k
    let theta = rng.random_range(0.1..0.9);
    let dirac = ws.gamma0.scaled(k);
    let start_values: Vec<f64> = run
        .u
        .values
        .iter()
        .zip(&dirac.values)
        .map(|(u, d)| d + theta * (u - d))
        .collect();
    let start = RadialFunction::with_models(ws.grid.clone(), start_values, run.u.origin, run.u.tail);
    if let Some(again) = rec.guard("minimality", iterate_from(&ws, k, start, &opts)) {
        let gap = again
            .u
            .values
            .iter()
            .zip(&run.u.values)
            .map(|(a, b)| (a - b).abs() / b)
            .fold(0.0, f64::max);
        rec.check(
            "minimality",
            again.verdict == SolveVerdict::Converged && gap < 10.0 * opts.tol,
            format!("θ = {theta:.4}: sup relative gap {gap:.3e}"),
        );
    }

    let one = ws.gamma0.scaled(k);
    let two = ws.gamma0.scaled(2.0 * k);
    let exact = one.values.iter().zip(&two.values).all(|(a, b)| *b == 2.0 * a);
    rec.check("dirac_doubling", exact, "2kΓ₀ = 2·(kΓ₀) bitwise".into());

    let Some(b0) = rec.guard("lower_bound_refinement", lower_bound_check(&run.u, &run.params)) else { return };
    let Some(fine) = solver_case(rec, 4096) else { return };
    if let Some(run2) = rec.guard("lower_bound_refinement", iterate(&fine, k, &opts)) {
        if let Some(b1) = rec.guard("lower_bound_refinement", lower_bound_check(&run2.u, &run2.params)) {
            let change = (b1 - b0).abs() / b0;
            rec.check(
                "lower_bound_refinement",
                b0 > 0.0 && b1 > 0.0 && change <= 0.2,
                format!("b₀ = {b0:.6e} (n=2048), {b1:.6e} (n=4096)"),
            );
        }
    }
}

// ---------------------------------------------------------------------------
// analysis

fn analysis_suite(rec: &mut Recorder, rng: &mut ChaCha8Rng) {
    let tol = Tolerances::default();
    let Some(grid) = rec.guard("setup", make_grid(1e-4, 1e2, 2048, 3)) else { return };
    let grid = Arc::new(grid);

    let m = rng.random_range(1.0..6.0);
    let a = rng.random_range(0.1..10.0);
    let params = ProblemParams::new(3, 2.0, 2.0, 0.5).unwrap();
    let u = RadialFunction::from_fn(grid.clone(), |r| a * r.powf(-m));
    if let Some(d) = rec.guard("exact_power_tail", verify_decay(&u, &params, &tol)) {
        let ok = (d.exponent - m).abs() < 1e-9 && (d.outer_exponent - m).abs() < 1e-9 && d.residual < 1e-12;
        rec.check(
            "exact_power_tail",
            ok,
            format!("m = {m:.6}: fitted {:.12}, residual {:.3e}", d.exponent, d.residual),
        );
    }

    let t0 = -2.0;
    let u = RadialFunction::from_fn(grid.clone(), |r| r.powf(t0) + r.powf(t0 - 1.0));
    if let Some(b0) = rec.guard("lower_bound_examples", lower_bound_check(&u, &params)) {
        rec.check(
            "lower_bound_examples",
            (b0 - 1.0).abs() <= 1.0 / grid.r_max * 1.01,
            format!("b₀ = {b0:.8} for r^τ₀ + r^(τ₀-1)"),
        );
    }

    for (nu, sigma, mu) in [(1.0, 2.0, 1.0), (3.0, 4.0, 1.0), (1.0, 2.5, 0.5)] {
        let name = "linear_comparison";
        if let Some(c) = rec.guard(name, linear_comparison_decay(mu, nu, sigma, grid.clone())) {
            let e = c.relative_error.unwrap_or(f64::INFINITY);
            rec.check(
                name,
                e < 0.02,
                format!("(ν, σ, μ) = ({nu}, {sigma}, {mu}): limit {:.6} vs {:.6}", c.limit, c.target),
            );
        }
    }

    let Some(ws) = rec.guard("setup", Workspace::new(params, grid.clone())) else { return };
    let k = 10f64.powf(rng.random_range(-3.0..-2.0));
    let Some(run) = rec.guard("young_inequality", iterate(&ws, k, &IterateOptions::default())) else { return };
    let Some(pot) = rec.guard("young_inequality", ws.kernel.apply(&run.u.powf(params.p))) else { return };
    let worst = young_inequality_check(&pot, &run.u, params.q);
    rec.check(
        "young_inequality",
        worst <= tol.young_slack,
        format!("k = {k:.6e}: largest relative excess {worst:.3e}"),
    );

    let first = verify(&run.u, &run.params, ws.gamma0.c_n, Some(&pot), &tol);
    let second = verify(&run.u, &run.params, ws.gamma0.c_n, Some(&pot), &tol);
    match (first, second) {
        (Ok(x), Ok(y)) => {
            let same = crate::io::to_json_string(&x).ok() == crate::io::to_json_string(&y).ok();
            rec.check("report_determinism", same, "two reports serialize identically".into());
        }
        _ => rec.check("report_determinism", false, "report failed".into()),
    }

    // the sandwich needs a far field beyond the Yukawa layer
    let far = make_grid(1e-4, 1e4, 4096, 3).map(Arc::new);
    let Some(far) = rec.guard("decay_sandwich", far) else { return };
    let Some(ws) = rec.guard("decay_sandwich", Workspace::new(params, far)) else { return };
    let k = rng.random_range(0.5..1.0);
    if let Some(run) = rec.guard("decay_sandwich", iterate(&ws, k, &IterateOptions::default())) {
        if let Some(d) = rec.guard("decay_sandwich", verify_decay(&run.u, &run.params, &tol)) {
            let agree = (d.prefactor - d.inner_prefactor).abs() / d.prefactor;
            let ok = run.verdict == SolveVerdict::Converged
                && d.liminf_estimate <= d.prefactor
                && d.prefactor <= d.limsup_estimate
                && agree <= tol.window_agreement;
            rec.check(
                "decay_sandwich",
                ok,
                format!(
                    "k = {k:.4}, r_max = 1e4: {:.6e} ≤ {:.6e} ≤ {:.6e}, windows differ by {agree:.3e}",
                    d.liminf_estimate, d.prefactor, d.limsup_estimate
                ),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_oracle_on_named_points() {
        assert_eq!(literal_verdict(3, 1.0, 0.2, 0.5), Verdict::Nonexistence);
        assert_eq!(literal_verdict(3, 1.0, 3.5, 0.9), Verdict::RemovableOnly);
        assert_eq!(literal_verdict(3, 2.0, 2.0, 0.5), Verdict::ExistenceWithDirac);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::MODULES.iter().chain([Suite::All].iter()) {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), *s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn exponents_suite_passes_and_repeats() {
        let a = run_suite(Suite::Exponents, 42);
        let b = run_suite(Suite::Exponents, 42);
        assert!(a[0].passed(), "{:?}", a[0].failures().collect::<Vec<_>>());
        assert_eq!(a, b);
    }
}
