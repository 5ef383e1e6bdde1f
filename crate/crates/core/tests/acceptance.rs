//! Acceptance gate: runs the nine acceptance criteria in order and prints one
//! PASS/FAIL line for each. The process fails when a criterion outside
//! [`KNOWN_RED`] fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use choquard_core::analysis::{
    linear_comparison_decay, lower_bound_check, verify, verify_origin, verify_decay, Tolerances,
};
use choquard_core::exponents::{
    classify, phase_diagram, tau_closed_form, tau_sequence, DEFAULT_MAX_J,
};
use choquard_core::green::{fundamental_solution, GreenOperator};
use choquard_core::grid::{DEFAULT_NODES, DEFAULT_R_MAX, DEFAULT_R_MIN};
use choquard_core::io::write_phase_csv;
use choquard_core::riesz::build_kernel;
use choquard_core::solver::{estimate_kstar, iterate, nonexistence_probe, KStarBracket};
use choquard_core::{
    make_grid, IterateOptions, ProblemParams, RadialFunction, RadialGrid, SolveResult, SolveVerdict,
    Verdict, Workspace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail at the stated tolerances with the default grid.
const KNOWN_RED: &[u8] = &[6];

struct Outcome {
    id: u8,
    title: &'static str,
    passed: bool,
    detail: Vec<String>,
    elapsed: Duration,
    budget: Duration,
}

/// Collects the sub-checks of one criterion.
/// Entries without a verdict are informational.
struct Checks(Vec<(Option<bool>, String)>);

impl Checks {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.0.push((Some(ok), detail));
    }

    fn note(&mut self, detail: String) {
        self.0.push((None, detail));
    }
}

fn run(id: u8, title: &'static str, budget_s: u64, body: impl FnOnce(&mut Checks)) -> Outcome {
    let start = Instant::now();
    let mut checks = Checks::new();
    body(&mut checks);
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_s);
    checks.check(
        elapsed < budget,
        format!("runtime {:.2} s (budget {budget_s} s)", elapsed.as_secs_f64()),
    );
    Outcome {
        id,
        title,
        passed: checks.0.iter().all(|(ok, _)| *ok != Some(false)),
        detail: checks
            .0
            .into_iter()
            .map(|(ok, d)| {
                let tag = match ok {
                    Some(true) => "ok",
                    Some(false) => "FAIL",
                    None => "info",
                };
                format!("[{tag}] {d}")
            })
            .collect(),
        elapsed,
        budget,
    }
}

fn grid(r_min: f64, r_max: f64, n: usize, dim: u32) -> Arc<RadialGrid> {
    Arc::new(make_grid(r_min, r_max, n, dim).expect("valid grid"))
}

fn default_grid(n: usize, dim: u32) -> Arc<RadialGrid> {
    grid(DEFAULT_R_MIN, DEFAULT_R_MAX, n, dim)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// The region inequalities read literally, with no margins or tolerances.
fn literal_region(dim: u32, alpha: f64, p: f64, q: f64) -> Verdict {
    let n = dim as f64;
    let weighted = (1.0 - alpha / n) * p + q;
    let nonexistence = weighted < 1.0 && p + q < 1.0 + alpha / (n - 2.0);
    let lower = weighted >= 1.0 || p + q >= 1.0 + alpha / (n - 2.0);
    let upper = p + q >= (n + alpha) / (n - 2.0) || p >= n / (n - 2.0);
    if nonexistence {
        Verdict::Nonexistence
    } else if lower && upper {
        Verdict::RemovableOnly
    } else if lower && p < n / (n - 2.0) && p + q < (n + alpha) / (n - 2.0) {
        Verdict::ExistenceWithDirac
    } else {
        Verdict::Outside
    }
}

fn classifier_oracle(c: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut tested, mut agree) = (0usize, 0usize);
    while tested < 10_000 {
        let dim = [3u32, 4, 5, 10][rng.random_range(0..4)];
        let alpha = rng.random_range(0.01..dim as f64 - 0.01);
        let p = rng.random_range(0.01..4.0);
        let q = rng.random_range(0.01..0.99);
        let params = ProblemParams::new(dim, alpha, p, q).unwrap();
        let region = classify(&params).unwrap();
        if region.margins.min_abs() <= 1e-9 {
            continue;
        }
        tested += 1;
        agree += usize::from(region.verdict == literal_region(dim, alpha, p, q));
    }
    c.check(agree == tested, format!("{agree}/{tested} samples agree with the literal inequalities"));
}

fn tau_bootstrap(c: &mut Checks) {
    let params = ProblemParams::new(10, 0.5, 0.05, 0.9).unwrap();
    let seq = tau_sequence(&params, DEFAULT_MAX_J).unwrap();
    let expected = [-95.0, -42.5, -16.25, -3.125];
    let taus_ok = seq.taus.len() == 4 && seq.taus.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12);
    c.check(taus_ok, format!("τ = {:?}", seq.taus));
    c.check(seq.j0 == Some(3), format!("j₀ = {:?}", seq.j0));
    let crit = seq.divergence_criterion(&params);
    c.check(
        crit.is_some_and(|v| (v - 0.34375).abs() < 1e-12 && v >= 0.0),
        format!("α + τ₃p = {crit:?}"),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dim = [3u32, 4, 5, 10][rng.random_range(0..4)];
        let params = ProblemParams::new(
            dim,
            rng.random_range(0.01..dim as f64 - 0.01),
            rng.random_range(0.01..4.0),
            rng.random_range(0.01..0.99),
        )
        .unwrap();
        let n = dim as f64;
        let (a, p, q) = (params.alpha, params.p, params.q);
        let mut tau = -((n - a) / (1.0 - q)).max(n - 2.0);
        for j in 0..=50 {
            if !tau.is_finite() {
                break;
            }
            let closed = tau_closed_form(&params, j);
            worst = worst.max((closed - tau).abs() / (1.0 + tau.abs()));
            tau = a / (1.0 - q) + p / (1.0 - q) * tau;
        }
    }
    c.check(worst <= 1e-10, format!("closed form against recursion: worst scaled error {worst:.3e}"));
}

fn green_operator(c: &mut Checks) {
    let g = default_grid(DEFAULT_NODES, 3);
    let op = GreenOperator::new(g.clone()).unwrap();
    let one = RadialFunction::from_fn(g.clone(), |_| 1.0);
    let u = op.apply(&one).unwrap();
    let interior = g.window_indices(10.0 * g.r_min, g.r_max / 10.0);
    let worst = interior.clone().map(|i| (u.values[i] - 1.0).abs()).fold(0.0, f64::max);
    c.check(worst < 1e-6, format!("𝔾[1] = 1: interior sup error {worst:.3e}"));

    let fs = fundamental_solution(3, g.clone()).unwrap();
    let worst = interior
        .map(|i| {
            let r = g.nodes[i];
            rel(fs.profile.values[i], (-r).exp() / (4.0 * PI * r))
        })
        .fold(0.0, f64::max);
    c.check(worst < 1e-6, format!("Γ₀ against e^(-r)/(4πr): worst relative error {worst:.3e}"));
    let e = rel(fs.origin_fit.prefactor, 1.0 / (4.0 * PI));
    c.check(
        e < 5e-3,
        format!("fitted c₃ = {:.8} against 1/(4π), error {e:.3e}", fs.origin_fit.prefactor),
    );
}

fn riesz_potential(c: &mut Checks) {
    let g = grid(1e-3, 1e3, 2049, 3);
    let kernel = build_kernel(3, 1.0, g.clone()).unwrap();
    let ball = RadialFunction::indicator(g.clone(), 1.0).unwrap();
    let at0 = kernel.evaluate_at(&ball, 0.0).unwrap();
    let e = rel(at0, 4.0 * PI);
    c.check(e < 1e-3, format!("I₁[1_B₁](0) = {at0:.8} against 4π, error {e:.3e}"));
    let at10 = kernel.evaluate_at(&ball, 10.0).unwrap();
    let e = rel(at10, 4.0 * PI / 3.0 * 1e-2);
    c.check(e < 1e-2, format!("I₁[1_B₁](10) = {at10:.8e} against (4π/3)·10⁻², error {e:.3e}"));

    let f = RadialFunction::from_fn(g.clone(), |r| (1.0 + r).powi(-5));
    let rep = kernel.asymptotic_check(&f, 5.0).unwrap();
    let bound = -(2.0 + 2.0 / 3.0) + 0.1;
    c.check(
        rep.fitted_error_slope <= bound,
        format!("far-field error slope {:.4} against {bound:.4}", rep.fitted_error_slope),
    );

    // dilation by e^{40h} maps nodes onto nodes
    let shift = 40usize;
    let lambda = (shift as f64 * g.log_step).exp();
    let base = |r: f64| (-(r.ln()).powi(2) / 2.0).exp();
    let i_f = kernel.apply(&RadialFunction::from_fn(g.clone(), base)).unwrap();
    let i_l = kernel.apply(&RadialFunction::from_fn(g.clone(), |r| base(r / lambda))).unwrap();
    let worst = (2 * shift + 32..g.len() - 2 * shift - 32)
        .map(|i| rel(i_l.values[i], lambda * i_f.values[i - shift]))
        .fold(0.0, f64::max);
    c.check(worst < 1e-4, format!("I[f(·/λ)](r) = λ I[f](r/λ): worst relative defect {worst:.3e}"));
}

fn linear_comparison(c: &mut Checks) {
    let g = default_grid(DEFAULT_NODES, 3);
    for (nu, sigma, mu) in [(1.0, 2.0, 1.0), (3.0, 4.0, 1.0), (1.0, 2.5, 0.5)] {
        let fit = linear_comparison_decay(mu, nu, sigma, g.clone()).unwrap();
        let e = rel(fit.limit, nu / mu);
        c.check(
            e < 0.02,
            format!("(ν, σ, μ) = ({nu}, {sigma}, {mu}): limit {:.6} against ν/μ, error {e:.3e}", fit.limit),
        );
    }
}

struct MinimalSolution {
    bracket: KStarBracket,
    run: SolveResult,
    c_n: f64,
    potential: RadialFunction,
}

fn minimal_solution(n: usize, k: Option<f64>) -> MinimalSolution {
    let params = ProblemParams::new(3, 2.0, 2.0, 0.5).unwrap();
    let ws = Workspace::new(params, default_grid(n, 3)).unwrap();
    let opts = IterateOptions::default();
    let bracket = estimate_kstar(&ws, &opts).unwrap();
    let run = iterate(&ws, k.unwrap_or(bracket.k_lo), &opts).unwrap();
    let potential = ws.kernel.apply(&run.u.powf(params.p)).unwrap();
    MinimalSolution {
        bracket,
        run,
        c_n: ws.gamma0.c_n,
        potential,
    }
}

fn minimal_solution_laws(c: &mut Checks, sol: &MinimalSolution) {
    let run = &sol.run;
    let tol = Tolerances::default();
    c.check(
        run.verdict == SolveVerdict::Converged,
        format!("k_lo = {:.6} from bracket [{:.6}, {:.6}]: {}", run.k, sol.bracket.k_lo, sol.bracket.k_hi, run.verdict),
    );
    c.check(run.all_monotone(), format!("monotone over {} iterations (slack 1e-12)", run.iterations));
    match run.all_capped() {
        Some(ok) => c.check(ok, "iterates stay below w_k".into()),
        None => c.check(
            false,
            format!(
                "iterates stay below w_k: no supersolution ({})",
                run.supersolution_note.as_deref().unwrap_or("not built")
            ),
        ),
    }
    let fp = run.fixed_point_residual.unwrap_or(f64::INFINITY);
    let limit = 10.0 * IterateOptions::default().tol;
    c.check(fp < limit, format!("fixed-point residual {fp:.3e} < {limit:.0e}"));

    let params = run.params.with_k(run.k).unwrap();
    let report = verify(&run.u, &params, sol.c_n, Some(&sol.potential), &tol).unwrap();
    let o = &report.origin_fit;
    let e = o.relative_error.unwrap_or(f64::INFINITY);
    c.check(
        e < 0.02,
        format!("u r^(N-2) → c₃k: coefficient {:.6e} against {:.6e}, error {e:.3e}", o.coefficient, o.target_coefficient),
    );
    match &report.decay_fit {
        Some(d) => {
            let e = rel(d.exponent, 2.0);
            c.check(
                e < 0.05,
                format!(
                    "tail exponent {:.4} on [{:.3}, {:.1}] against 2, error {e:.3e} (outer half {:.4})",
                    d.exponent, d.window.0, d.window.1, d.outer_exponent
                ),
            );
            match (d.l1_prediction.relative_error, &d.l1_prediction.note) {
                (Some(e), _) => c.check(e < 0.1, format!("prefactor against ‖u‖₁⁴: error {e:.3e}")),
                (None, note) => c.check(
                    false,
                    format!("prefactor against ‖u‖₁⁴: {}", note.as_deref().unwrap_or("unavailable")),
                ),
            }
            if let Some(e) = d.pnorm_prediction.relative_error {
                c.note(format!("prefactor {:.6e} against ‖u²‖₁², error {e:.3e}", d.prefactor));
            }
        }
        None => c.check(false, format!("decay fit: {}", report.decay_note.as_deref().unwrap_or("missing"))),
    }
    let b0 = lower_bound_check(&run.u, &params).unwrap_or(0.0);
    c.check(b0 > 0.0, format!("lower-bound certificate b₀ = {b0:.6e}"));
}

fn profile_quantities(sol: &MinimalSolution, params: &ProblemParams) -> [(&'static str, Option<f64>); 4] {
    let u = &sol.run.u;
    let decay = verify_decay(u, params, &Tolerances::default()).ok();
    [
        ("origin coefficient", verify_origin(u, params, sol.c_n).ok().map(|o| o.coefficient)),
        ("tail exponent", decay.as_ref().map(|d| d.exponent)),
        ("tail prefactor", decay.as_ref().map(|d| d.prefactor)),
        ("lower-bound b₀", lower_bound_check(u, params).ok()),
    ]
}

fn refinement(c: &mut Checks, coarse: &MinimalSolution) {
    let fine = minimal_solution(2 * DEFAULT_NODES, Some(coarse.run.k));
    c.check(
        fine.run.verdict == SolveVerdict::Converged,
        format!("n = {}: {} at k = {:.6}", 2 * DEFAULT_NODES, fine.run.verdict, coarse.run.k),
    );
    let g = coarse.run.u.grid.clone();
    let worst = g
        .window_indices(10.0 * g.r_min, g.r_max / 2.0)
        .map(|i| rel(fine.run.u.eval(g.nodes[i]), coarse.run.u.values[i]))
        .fold(0.0, f64::max);
    c.check(worst < 0.01, format!("profile sup relative change {worst:.3e}"));

    let params = coarse.run.params.with_k(coarse.run.k).unwrap();
    let (before, after) = (profile_quantities(coarse, &params), profile_quantities(&fine, &params));
    for ((name, a), (_, b)) in before.into_iter().zip(after) {
        match (a, b) {
            (Some(a), Some(b)) => {
                let e = rel(b, a);
                c.check(e < 0.01, format!("{name}: {a:.6e} → {b:.6e}, change {e:.3e}"));
            }
            _ => c.check(false, format!("{name}: unavailable")),
        }
    }
    let lo = fine.bracket.k_lo / coarse.bracket.k_lo;
    let hi = fine.bracket.k_hi / coarse.bracket.k_hi;
    let within = |x: f64| (0.5..=2.0).contains(&x);
    c.check(
        within(lo) && within(hi),
        format!(
            "k* bracket [{:.4}, {:.4}] → [{:.4}, {:.4}]",
            coarse.bracket.k_lo, coarse.bracket.k_hi, fine.bracket.k_lo, fine.bracket.k_hi
        ),
    );
}

fn nonexistence_probes(c: &mut Checks) {
    for (dim, alpha, p, q) in [(3u32, 1.0, 0.2, 0.5), (10, 0.5, 0.05, 0.9)] {
        let params = ProblemParams::new(dim, alpha, p, q).unwrap();
        let report = nonexistence_probe(&params, default_grid(DEFAULT_NODES, dim), &IterateOptions::default()).unwrap();
        let stopped = matches!(
            report.iteration_verdict,
            SolveVerdict::DivergedRiesz | SolveVerdict::MaxIterations
        );
        c.check(
            report.certified && stopped,
            format!(
                "({dim}, {alpha}, {p}, {q}): criterion {:?}, certified {}, iteration {} after {}",
                report.criterion, report.certified, report.iteration_verdict, report.iterations
            ),
        );
    }
}

fn phase_reproduction(c: &mut Checks) {
    for alpha in [1.0, 2.0] {
        let rows = phase_diagram(3, alpha, (0.0, 4.0), (0.0, 1.0), 200, 100).unwrap();
        let mismatches = rows
            .iter()
            .filter(|r| r.verdict != literal_region(3, alpha, r.p, r.q))
            .count();
        c.check(
            mismatches == 0 && rows.len() == 20_000,
            format!("α = {alpha}: {mismatches} of {} rows differ from the literal inequalities", rows.len()),
        );
        let render = || {
            let mut buf = Vec::new();
            write_phase_csv(&phase_diagram(3, alpha, (0.0, 4.0), (0.0, 1.0), 200, 100).unwrap(), &mut buf).unwrap();
            buf
        };
        c.check(render() == render(), format!("α = {alpha}: rerun is byte-identical"));
    }
}

fn main() -> ExitCode {
    let mut outcomes = vec![
        run(1, "classifier against literal inequalities", 1, classifier_oracle),
        run(2, "bootstrap exponents", 1, tau_bootstrap),
        run(3, "Green operator", 5, green_operator),
        run(4, "Riesz potential", 60, riesz_potential),
        run(5, "linear comparison limits", 10, linear_comparison),
    ];
    let mut coarse = None;
    outcomes.push(run(6, "minimal-solution laws", 180, |c| {
        let sol = minimal_solution(DEFAULT_NODES, None);
        minimal_solution_laws(c, &sol);
        coarse = Some(sol);
    }));
    outcomes.push(run(7, "grid-refinement stability", 600, |c| match &coarse {
        Some(sol) => refinement(c, sol),
        None => c.check(false, "no coarse solution".into()),
    }));
    outcomes.push(run(8, "nonexistence probes", 60, nonexistence_probes));
    outcomes.push(run(9, "phase-diagram reproduction", 5, phase_reproduction));

    println!();
    let mut unexpected = 0;
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {}: {} ({:.2} s of {} s)",
            o.id,
            o.title,
            o.elapsed.as_secs_f64(),
            o.budget.as_secs()
        );
        for d in &o.detail {
            println!("    {d}");
        }
        let known = KNOWN_RED.contains(&o.id);
        if !o.passed && !known {
            unexpected += 1;
        }
        if o.passed && known {
            println!("    note: listed as known red but passed");
        }
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("\n{passed}/{} criteria pass; known red: {KNOWN_RED:?}", outcomes.len());
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
