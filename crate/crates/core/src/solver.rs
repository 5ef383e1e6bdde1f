//! Supersolutions, the monotone iteration for the minimal singular solution,
//! the `k*` bracket and the nonexistence probe.
//!
//! The iteration is `v₀ = kΓ₀`, `v_n = 𝔾[I_α[v_{n-1}^p] v_{n-1}^q] + kΓ₀`.
//! The Dirac part is carried analytically through `Γ₀`, so the Green solve
//! only ever sees the regular right-hand side.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::exponents::{classify, predicted_decay, tau0, tau_sequence, ProblemParams, TauSequence, Verdict, DEFAULT_MAX_J};
use crate::green::{fundamental_solution, FarBoundary, FundamentalSolution, GreenOperator};
use crate::grid::{OriginModel, RadialFunction, RadialGrid, TailModel};
use crate::riesz::{build_kernel, AngularKernel};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;
pub const DEFAULT_SUPER_TOL: f64 = 1e-3;
pub const K_SEARCH_MIN: f64 = 1e-8;
pub const K_SEARCH_MAX: f64 = 1e4;
const A0_SEED: f64 = 1.0 / 1024.0;
const A0_LADDER: u32 = 20;

/// Operators shared by every solve on one `(params, grid)`.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub params: ProblemParams,
    pub grid: Arc<RadialGrid>,
    pub kernel: Arc<AngularKernel>,
    pub green: GreenOperator,
    pub gamma0: Arc<FundamentalSolution>,
}

impl Workspace {
    pub fn new(params: ProblemParams, grid: Arc<RadialGrid>) -> Result<Self> {
        params.validate()?;
        let kernel = build_kernel(params.dim, params.alpha, grid.clone())?;
        Self::with_kernel(params, Arc::new(kernel))
    }

    pub fn with_kernel(params: ProblemParams, kernel: Arc<AngularKernel>) -> Result<Self> {
        params.validate()?;
        if kernel.dim != params.dim || kernel.alpha.to_bits() != params.alpha.to_bits() {
            return Err(Error::Configuration("kernel built for different (N, α)".into()));
        }
        let grid = kernel.grid().clone();
        let green = GreenOperator::new(grid.clone())?;
        let gamma0 = Arc::new(fundamental_solution(params.dim, grid.clone())?);
        Ok(Self {
            params,
            grid,
            kernel,
            green,
            gamma0,
        })
    }

    /// The nonlinear term `I_α[v^p] v^q`.
    pub fn nonlinearity(&self, v: &RadialFunction) -> Result<RadialFunction> {
        let f = v.powf(self.params.p);
        let mut potential = self.kernel.apply(&f)?;
        anchor_origin(&mut potential, potential_origin_exponent(&f, self.params.alpha));
        Ok(potential.mul(&v.powf(self.params.q)))
    }
}

/// Origin exponent of `I_α[f]` for `f ~ r^σ` near 0: bounded when
/// `α + σ ≥ 0`, otherwise `r^{α+σ}`.
fn potential_origin_exponent(f: &RadialFunction, alpha: f64) -> f64 {
    if f.origin.coefficient > 0.0 {
        (alpha + f.origin.exponent).min(0.0)
    } else {
        0.0
    }
}

/// Replaces the origin model by `values[0] (r/r_min)^exponent`, which keeps
/// the model monotone in the data.
fn anchor_origin(f: &mut RadialFunction, exponent: f64) {
    let v0 = f.values[0];
    f.origin = if v0 > 0.0 {
        OriginModel {
            coefficient: v0 * f.grid.r_min.powf(-exponent),
            exponent,
        }
    } else {
        OriginModel::ZERO
    };
}

fn anchor_tail(f: &mut RadialFunction, exponent: f64) {
    let last = f.values[f.len() - 1];
    f.tail = if last > 0.0 {
        TailModel::PowerLaw {
            coefficient: last * f.grid.r_max.powf(exponent),
            exponent,
        }
    } else {
        TailModel::Zero
    };
}

fn require_existence(params: &ProblemParams) -> Result<()> {
    let region = classify(params)?;
    if region.verdict != Verdict::ExistenceWithDirac {
        return Err(Error::Region {
            expected: Verdict::ExistenceWithDirac.to_string(),
            actual: region.verdict.to_string(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// supersolution

/// `Δ(r^a e^{-b r²})`.
fn laplacian_gauss_power(a: f64, b: f64, dim: f64, r: f64) -> f64 {
    (a * (a + dim - 2.0) * r.powf(a - 2.0) - 2.0 * b * (2.0 * a + dim) * r.powf(a)
        + 4.0 * b * b * r.powf(a + 2.0))
        * (-b * r * r).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionShape {
    pub tau: f64,
    pub tau0: f64,
    pub r0: f64,
    pub a0: f64,
}

impl SupersolutionShape {
    /// `τ` at the midpoint of `(2-N, min{0, 2+α-(N-2)(p+q)})`, and `r₀`.
    pub fn exponents(params: &ProblemParams) -> Result<(f64, f64, f64)> {
        let n = params.n();
        let lo = 2.0 - n;
        let hi = (2.0 + params.alpha - (n - 2.0) * (params.p + params.q)).min(0.0);
        if hi <= lo {
            return Err(Error::Domain(format!("empty τ interval ({lo}, {hi})")));
        }
        let t0 = tau0(params)?;
        Ok((0.5 * (lo + hi), t0, 2.0 * (t0 * (t0 - 1.0)).sqrt()))
    }

    /// `φ(r) = (r^{2-N} + r^τ) e^{-r²/(2N)}`.
    pub fn phi(&self, dim: f64, r: f64) -> f64 {
        (r.powf(2.0 - dim) + r.powf(self.tau)) * (-r * r / (2.0 * dim)).exp()
    }

    /// `ϕ(r) = (r₀ + r)^{τ₀}`.
    pub fn varphi(&self, r: f64) -> f64 {
        (self.r0 + r).powf(self.tau0)
    }

    pub fn laplacian_phi(&self, dim: f64, r: f64) -> f64 {
        let b = 1.0 / (2.0 * dim);
        laplacian_gauss_power(2.0 - dim, b, dim, r) + laplacian_gauss_power(self.tau, b, dim, r)
    }

    pub fn laplacian_varphi(&self, dim: f64, r: f64) -> f64 {
        let t0 = self.tau0;
        let s = self.r0 + r;
        t0 * (t0 - 1.0) * s.powf(t0 - 2.0) + t0 * (dim - 1.0) / r * s.powf(t0 - 1.0)
    }

    /// `φ + a₀ϕ`, i.e. `w_k / k`.
    pub fn unit_profile(&self, dim: f64, r: f64) -> f64 {
        self.phi(dim, r) + self.a0 * self.varphi(r)
    }
}

#[derive(Debug, Clone)]
pub struct SupersolutionProfile {
    pub shape: SupersolutionShape,
    pub k: f64,
    pub profile: RadialFunction,
    /// Worst relative value of `(-Δw + w - I_α[w^p]w^q)/w` over the nodes.
    pub min_relative_slack: f64,
}

/// Largest violation of `Δφ + a₀Δϕ ≤ ½(φ + a₀ϕ)`, by finite differences on
/// interior nodes, relative to the right side. Returns `(violation, r)`.
fn differential_inequality_violation(
    shape: &SupersolutionShape,
    grid: &RadialGrid,
) -> (f64, f64) {
    let n = grid.n();
    let phi: Vec<f64> = grid.nodes.iter().map(|&r| shape.phi(n, r)).collect();
    let var: Vec<f64> = grid.nodes.iter().map(|&r| shape.varphi(r)).collect();
    let lp = grid.laplacian(&phi);
    let lv = grid.laplacian(&var);
    let mut worst = (f64::NEG_INFINITY, f64::NAN);
    for i in 1..grid.len() - 1 {
        let rhs = 0.5 * (phi[i] + shape.a0 * var[i]);
        let v = (lp[i] + shape.a0 * lv[i] - rhs) / rhs;
        if v > worst.0 {
            worst = (v, grid.nodes[i]);
        }
    }
    worst
}

/// Finds `a₀` on the ladder `a_seed · 2^j` satisfying the differential
/// inequality at every interior node.
pub fn find_a0(params: &ProblemParams, grid: &RadialGrid) -> Result<SupersolutionShape> {
    let (tau, t0, r0) = SupersolutionShape::exponents(params)?;
    let mut worst = (f64::INFINITY, f64::NAN);
    for j in 0..=A0_LADDER {
        let shape = SupersolutionShape {
            tau,
            tau0: t0,
            r0,
            a0: A0_SEED * 2f64.powi(j as i32),
        };
        let (v, r) = differential_inequality_violation(&shape, grid);
        if v <= 0.0 {
            return Ok(shape);
        }
        if v < worst.0 {
            worst = (v, r);
        }
    }
    Err(Error::Construction {
        reason: "no a₀ on the ladder satisfies the differential inequality".into(),
        r: worst.1,
        violation: worst.0,
    })
}

pub fn build_supersolution(ws: &Workspace, k: f64) -> Result<SupersolutionProfile> {
    build_supersolution_with(ws, k, DEFAULT_SUPER_TOL)
}

pub fn build_supersolution_with(ws: &Workspace, k: f64, tol_super: f64) -> Result<SupersolutionProfile> {
    require_existence(&ws.params)?;
    if !(k > 0.0) {
        return Err(Error::Domain(format!("need k > 0, got {k}")));
    }
    let shape = find_a0(&ws.params, &ws.grid)?;
    let n = ws.grid.n();
    let grid = ws.grid.clone();
    let values: Vec<f64> = grid.nodes.iter().map(|&r| k * shape.unit_profile(n, r)).collect();
    let mut w = RadialFunction::from_values(grid.clone(), values);
    anchor_origin(&mut w, 2.0 - n);
    anchor_tail(&mut w, -shape.tau0);
    let nonlinear = ws.nonlinearity(&w)?;
    let mut min_slack = f64::INFINITY;
    let mut worst_r = f64::NAN;
    for (i, &r) in grid.nodes.iter().enumerate() {
        let lap = k * (shape.laplacian_phi(n, r) + shape.a0 * shape.laplacian_varphi(n, r));
        let s = (-lap + w.values[i] - nonlinear.values[i]) / w.values[i];
        if s < min_slack {
            min_slack = s;
            worst_r = r;
        }
    }
    if min_slack < -tol_super {
        return Err(Error::KTooLarge {
            k,
            r: worst_r,
            violation: min_slack,
        });
    }
    Ok(SupersolutionProfile {
        shape,
        k,
        profile: w,
        min_relative_slack: min_slack,
    })
}

// ---------------------------------------------------------------------------
// iteration

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveVerdict {
    Converged,
    DivergedRiesz,
    MaxIterations,
}

impl SolveVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveVerdict::Converged => "Converged",
            SolveVerdict::DivergedRiesz => "DivergedRiesz",
            SolveVerdict::MaxIterations => "MaxIterations",
        }
    }
}

impl std::fmt::Display for SolveVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Far-field closure of the Green solve during the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FarRate {
    /// The predicted decay exponent of the minimal solution.
    Predicted,
    /// Taken from the tail model of each right-hand side.
    FromData,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub far_rate: FarRate,
    /// Reject parameters outside the existence region.
    pub check_region: bool,
    /// Build `w_k` and record the cap `v_n ≤ w_k` each step.
    pub track_cap: bool,
    pub monotone_slack: f64,
    pub stall_ratio: f64,
    pub stall_window: usize,
    /// `v / (k c_N (r^{2-N} + r^{τ₀}))` above this counts as blow-up.
    pub blowup_ratio: f64,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            far_rate: FarRate::Predicted,
            check_region: true,
            track_cap: true,
            monotone_slack: 1e-12,
            stall_ratio: 0.999,
            stall_window: 20,
            blowup_ratio: 1e12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    pub delta_sup: f64,
    pub monotone_ok: bool,
    /// `None` when no supersolution was certified for this `k`.
    pub capped_ok: Option<bool>,
    /// Most negative `(v_n - v_{n-1})/v_{n-1}` over the nodes.
    pub worst_decrease: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub params: ProblemParams,
    pub k: f64,
    pub u: RadialFunction,
    pub iterations: usize,
    pub final_delta: f64,
    pub diagnostics: Vec<IterationRecord>,
    pub verdict: SolveVerdict,
    /// Why the run stopped, for non-converged verdicts.
    pub reason: Option<String>,
    /// `sup |u - (𝔾[I_α[u^p]u^q] + kΓ₀)| / u` over the nodes.
    pub fixed_point_residual: Option<f64>,
    /// Normalized residual of the discrete equation for `u - kΓ₀`.
    pub pde_residual: Option<f64>,
    pub supersolution: Option<SupersolutionShape>,
    /// Why no supersolution was certified, when it was not.
    pub supersolution_note: Option<String>,
}

impl SolveResult {
    pub fn all_monotone(&self) -> bool {
        self.diagnostics.iter().all(|d| d.monotone_ok)
    }

    pub fn all_capped(&self) -> Option<bool> {
        self.diagnostics
            .iter()
            .map(|d| d.capped_ok)
            .collect::<Option<Vec<bool>>>()
            .map(|v| v.iter().all(|b| *b))
    }
}

fn far_boundary(ws: &Workspace, rate: FarRate) -> Result<FarBoundary> {
    Ok(match rate {
        FarRate::Predicted => FarBoundary::Rate(predicted_decay(&ws.params.with_k(0.0)?)?.exponent),
        FarRate::FromData => FarBoundary::Auto,
        FarRate::Fixed(r) => FarBoundary::Rate(r),
    })
}

/// One step `v ↦ 𝔾[I_α[v^p]v^q] + kΓ₀`.
pub fn picard_step(ws: &Workspace, v: &RadialFunction, k: f64, bc: FarBoundary) -> Result<RadialFunction> {
    let rhs = ws.nonlinearity(v)?;
    let w = ws.green.apply_with(&rhs, bc)?;
    let dirac = ws.gamma0.scaled(k);
    let values: Vec<f64> = w.values.iter().zip(&dirac.values).map(|(a, b)| a + b).collect();
    let mut next = RadialFunction::from_values(ws.grid.clone(), values);
    let n = ws.grid.n();
    if k > 0.0 {
        anchor_origin(&mut next, 2.0 - n);
    } else {
        next.origin = w.origin;
    }
    match bc {
        FarBoundary::Rate(rate) => anchor_tail(&mut next, rate),
        FarBoundary::Auto => next.tail = w.tail,
    }
    Ok(next)
}

pub fn iterate(ws: &Workspace, k: f64, opts: &IterateOptions) -> Result<SolveResult> {
    let start = ws.gamma0.scaled(k);
    iterate_from(ws, k, start, opts)
}

/// Runs the monotone iteration from an arbitrary starting profile.
pub fn iterate_from(
    ws: &Workspace,
    k: f64,
    start: RadialFunction,
    opts: &IterateOptions,
) -> Result<SolveResult> {
    if opts.check_region {
        require_existence(&ws.params)?;
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("need k ≥ 0, got {k}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("need tol > 0, got {}", opts.tol)));
    }
    let params = ws.params.with_k(k)?;
    let bc = far_boundary(ws, opts.far_rate)?;
    let n = ws.grid.n();
    let t0 = tau0(&params)?;
    let c_n = ws.gamma0.c_n;

    let (cap, supersolution, supersolution_note) = if opts.track_cap && k > 0.0 {
        match build_supersolution(ws, k) {
            Ok(s) => (Some(s.profile), Some(s.shape), None),
            Err(e) => (None, None, Some(e.to_string())),
        }
    } else {
        (None, None, None)
    };

    let mut v = start;
    let mut diagnostics = Vec::new();
    let mut prev_delta = f64::INFINITY;
    let mut stalled = 0usize;
    let mut verdict = SolveVerdict::MaxIterations;
    let mut reason = None;
    let mut final_delta = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=opts.max_iter {
        // tail drift: v^p must stay Riesz-integrable
        if let TailModel::PowerLaw { exponent, .. } = v.tail {
            if params.p * exponent <= params.alpha {
                verdict = SolveVerdict::DivergedRiesz;
                reason = Some(format!(
                    "tail exponent of v^p drifted to {} ≤ α = {}",
                    params.p * exponent,
                    params.alpha
                ));
                break;
            }
        }
        let next = match picard_step(ws, &v, k, bc) {
            Ok(x) => x,
            Err(Error::DivergentRiesz {
                violated,
                tail_exponent,
                ..
            }) => {
                verdict = SolveVerdict::DivergedRiesz;
                reason = Some(format!("{violated} (tail exponent {tail_exponent})"));
                break;
            }
            Err(e) => return Err(e),
        };
        iterations = it;

        if next.values.iter().any(|x| !x.is_finite()) {
            verdict = SolveVerdict::DivergedRiesz;
            reason = Some("non-finite iterate".into());
            break;
        }
        let mut delta: f64 = 0.0;
        let mut worst_decrease: f64 = 0.0;
        let mut blowup: f64 = 0.0;
        for (i, (&a, &b)) in next.values.iter().zip(&v.values).enumerate() {
            delta = delta.max((a - b).abs() / (f64::MIN_POSITIVE + a));
            if b > 0.0 {
                worst_decrease = worst_decrease.min((a - b) / b);
            }
            if k > 0.0 {
                let r = ws.grid.nodes[i];
                blowup = blowup.max(a / (k * c_n * (r.powf(2.0 - n) + r.powf(t0))));
            }
        }
        let monotone_ok = worst_decrease >= -opts.monotone_slack;
        let capped_ok = cap
            .as_ref()
            .map(|w| next.values.iter().zip(&w.values).all(|(a, b)| a <= b));
        diagnostics.push(IterationRecord {
            n: it,
            delta_sup: delta,
            monotone_ok,
            capped_ok,
            worst_decrease,
        });
        if !monotone_ok {
            return Err(Error::Consistency(format!(
                "iterate {it} decreased by relative {worst_decrease:e}"
            )));
        }
        v = next;
        final_delta = delta;
        if blowup > opts.blowup_ratio {
            verdict = SolveVerdict::DivergedRiesz;
            reason = Some(format!("iterate escaped the polynomial envelope (ratio {blowup:e})"));
            break;
        }
        if delta < opts.tol {
            verdict = SolveVerdict::Converged;
            break;
        }
        if delta / prev_delta > opts.stall_ratio {
            stalled += 1;
            if stalled >= opts.stall_window {
                verdict = SolveVerdict::MaxIterations;
                reason = Some(format!("stalled for {stalled} steps at delta {delta:e}"));
                break;
            }
        } else {
            stalled = 0;
        }
        prev_delta = delta;
    }
    if verdict == SolveVerdict::MaxIterations && reason.is_none() {
        reason = Some(format!("reached max_iter = {}", opts.max_iter));
    }

    let (fixed_point_residual, pde_residual) = if verdict == SolveVerdict::Converged {
        let (a, b) = residuals(ws, &v, k, bc)?;
        (Some(a), Some(b))
    } else {
        (None, None)
    };

    Ok(SolveResult {
        params,
        k,
        u: v,
        iterations,
        final_delta,
        diagnostics,
        verdict,
        reason,
        fixed_point_residual,
        pde_residual,
        supersolution,
        supersolution_note,
    })
}

/// Fixed-point residual and normalized discrete-equation residual of `u`.
fn residuals(ws: &Workspace, u: &RadialFunction, k: f64, bc: FarBoundary) -> Result<(f64, f64)> {
    let next = picard_step(ws, u, k, bc)?;
    let fixed = next
        .values
        .iter()
        .zip(&u.values)
        .map(|(a, b)| (a - b).abs() / (f64::MIN_POSITIVE + b))
        .fold(0.0, f64::max);

    // -Δw + w = F with w = u - kΓ₀, in the scaled rows of the Green system
    let rhs = ws.nonlinearity(u)?;
    let dirac = ws.gamma0.scaled(k);
    let w: Vec<f64> = u.values.iter().zip(&dirac.values).map(|(a, b)| a - b).collect();
    let (m, b) = ws.green.system(&rhs, bc)?;
    let mut pde: f64 = 0.0;
    for i in 1..w.len() - 1 {
        let terms = [m.lower[i] * w[i - 1], m.main[i] * w[i], m.upper[i] * w[i + 1]];
        let lhs: f64 = terms.iter().sum();
        let scale: f64 = terms.iter().map(|t| t.abs()).sum::<f64>() + b[i].abs();
        if scale > 0.0 {
            pde = pde.max((lhs - b[i]).abs() / scale);
        }
    }
    Ok((fixed, pde))
}

// ---------------------------------------------------------------------------
// k* bracket

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KStarBracket {
    pub k_lo: f64,
    pub k_hi: f64,
    /// No divergence was witnessed up to the search ceiling.
    pub open_above: bool,
    pub probes: Vec<(f64, SolveVerdict)>,
}

pub fn estimate_kstar(ws: &Workspace, opts: &IterateOptions) -> Result<KStarBracket> {
    require_existence(&ws.params)?;
    let probe_opts = IterateOptions {
        track_cap: false,
        ..*opts
    };
    let mut probes = Vec::new();
    let mut run = |k: f64| -> Result<bool> {
        let v = iterate(ws, k, &probe_opts)?.verdict;
        probes.push((k, v));
        Ok(v == SolveVerdict::Converged)
    };
    if !run(K_SEARCH_MIN)? {
        return Err(Error::Configuration(format!(
            "no convergence even at k = {K_SEARCH_MIN:e}; refine the grid or raise max_iter"
        )));
    }
    if run(K_SEARCH_MAX)? {
        return Ok(KStarBracket {
            k_lo: K_SEARCH_MAX,
            k_hi: f64::INFINITY,
            open_above: true,
            probes,
        });
    }
    let (mut lo, mut hi) = (K_SEARCH_MIN, K_SEARCH_MAX);
    while hi / lo > 1.5 {
        let mid = (lo * hi).sqrt();
        if run(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(KStarBracket {
        k_lo: lo,
        k_hi: hi,
        open_above: false,
        probes,
    })
}

// ---------------------------------------------------------------------------
// nonexistence probe

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub params: ProblemParams,
    pub tau: TauSequence,
    pub j0: Option<usize>,
    /// `α + τ_{j₀} p`.
    pub criterion: Option<f64>,
    pub certified: bool,
    pub k: f64,
    pub iteration_verdict: SolveVerdict,
    pub iterations: usize,
    pub iteration_reason: Option<String>,
}

/// Certifies the bootstrap divergence criterion and runs the iteration
/// defensively (without the region check) at `k` (`params.k`, or 1 if zero).
pub fn nonexistence_probe(
    params: &ProblemParams,
    grid: Arc<RadialGrid>,
    opts: &IterateOptions,
) -> Result<NonexistenceReport> {
    let region = classify(params)?;
    if region.verdict != Verdict::Nonexistence {
        return Err(Error::Region {
            expected: Verdict::Nonexistence.to_string(),
            actual: region.verdict.to_string(),
        });
    }
    let tau = tau_sequence(params, DEFAULT_MAX_J)?;
    let criterion = tau.divergence_criterion(params);
    let k = if params.k > 0.0 { params.k } else { 1.0 };
    let ws = Workspace::new(*params, grid)?;
    let run_opts = IterateOptions {
        check_region: false,
        track_cap: false,
        far_rate: FarRate::FromData,
        ..*opts
    };
    let result = iterate(&ws, k, &run_opts)?;
    Ok(NonexistenceReport {
        params: *params,
        j0: tau.j0,
        criterion,
        certified: criterion.is_some_and(|c| c >= 0.0),
        tau,
        k,
        iteration_verdict: result.verdict,
        iterations: result.iterations,
        iteration_reason: result.reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn params() -> ProblemParams {
        ProblemParams::new(3, 2.0, 2.0, 0.5).unwrap()
    }

    #[test]
    fn supersolution_exponents() {
        let (tau, t0, r0) = SupersolutionShape::exponents(&params()).unwrap();
        assert_eq!(tau, -0.5);
        assert_eq!(t0, -2.0);
        assert!((r0 - 2.0 * 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn analytic_laplacians_match_finite_differences() {
        let g = make_grid(1e-2, 1e1, 4096, 3).unwrap();
        let shape = SupersolutionShape {
            tau: -0.5,
            tau0: -2.0,
            r0: 2.0 * 6f64.sqrt(),
            a0: 1.0,
        };
        let v: Vec<f64> = g.nodes.iter().map(|&r| shape.phi(3.0, r)).collect();
        let fd = g.laplacian(&v);
        for i in (10..4000).step_by(97) {
            let r = g.nodes[i];
            let exact = shape.laplacian_phi(3.0, r);
            // Δϕ changes sign, so measure against the natural scale ϕ/r²
            let scale = exact.abs() + v[i] / (r * r);
            assert!((fd[i] - exact).abs() / scale < 1e-4, "r = {r}");
        }
    }

    #[test]
    fn probe_rejects_existence_region() {
        let g = Arc::new(make_grid(1e-3, 1e2, 128, 3).unwrap());
        let p = ProblemParams::new(3, 1.0, 1.5, 0.5).unwrap();
        let e = nonexistence_probe(&p, g, &IterateOptions::default());
        assert!(matches!(e, Err(Error::Region { .. })));
    }

    #[test]
    fn doubling_k_doubles_the_dirac_part() {
        let g = Arc::new(make_grid(1e-3, 1e2, 256, 3).unwrap());
        let ws = Workspace::new(params(), g).unwrap();
        let a = ws.gamma0.scaled(1e-3);
        let b = ws.gamma0.scaled(2e-3);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(2.0 * x, *y);
        }
    }
}
