//! Radial Riesz potentials `I_α[f](x) = ∫ f(y) |x-y|^{α-N} dy`.
//!
//! For radial `f` the potential reduces to `I(r) = ∫₀^∞ f(s) s^{N-1} κ(r,s) ds`
//! with the angular kernel `κ(r,s) = ∫_{S^{N-1}} |r e₁ - s ω|^{α-N} dσ(ω)`.
//! Homogeneity `κ(λr, λs) = λ^{α-N} κ(r,s)` turns the operator on a
//! log-uniform grid into a Toeplitz sum
//!
//! `I(r_i) = r_i^α Σ_j f_j M_{j-i}`,
//!
//! where `M_m` are moments of `D(τ) = e^{Nτ} κ(1, e^τ)` against the
//! piecewise-linear hat functions of the grid. The moments are tabulated once
//! per `(N, α, grid)`; the weak singularity of `D` at `τ = 0` is resolved
//! with tanh–sinh quadrature on the two panels touching it. Contributions of
//! `(0, r_min)` and `(r_max, ∞)` come from the endpoint models of `f`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exponents::sphere_area;
use crate::grid::{fit_power_law_data, RadialFunction, RadialGrid, TailModel};
use crate::quadrature::{gl10, gl16, gl20, push_singular_rule};
use crate::special::hyp2f1_coefficients;
use crate::{Error, Result};

const SERIES_TERMS: usize = 96;
/// `|τ|` beyond which `D` is summed from its hypergeometric series.
const SERIES_SWITCH: f64 = std::f64::consts::LN_2;
const ANGULAR_TOL: f64 = 1e-7;
const ANGULAR_MAX_NODES: usize = 4096;

/// The scalar ingredients of the angular kernel for one `(N, α)`.
#[derive(Debug, Clone)]
pub(crate) struct KernelShape {
    pub dim: u32,
    pub alpha: f64,
    /// `|S^{N-1}|`.
    pub omega: f64,
    /// `|S^{N-2}|`.
    pub omega_sub: f64,
    /// Coefficients of `₂F₁((N-α)/2, 1-α/2; N/2; z)`.
    pub coeffs: Vec<f64>,
}

impl KernelShape {
    pub fn new(dim: u32, alpha: f64) -> Result<Self> {
        let n = dim as f64;
        if dim < 3 {
            return Err(Error::Domain(format!("need N ≥ 3, got {dim}")));
        }
        if !(alpha > 0.0 && alpha < n) {
            return Err(Error::Domain(format!("need 0 < α < N, got α = {alpha}")));
        }
        Ok(Self {
            dim,
            alpha,
            omega: sphere_area(dim),
            omega_sub: sphere_area(dim - 1),
            coeffs: hyp2f1_coefficients((n - alpha) / 2.0, 1.0 - alpha / 2.0, n / 2.0, SERIES_TERMS),
        })
    }

    fn n(&self) -> f64 {
        self.dim as f64
    }

    /// `Σ_k c_k z^k e^{...}` style sums share this helper: returns
    /// `Σ c_k z^k g(k)`.
    fn series<G: Fn(usize) -> f64>(&self, z: f64, g: G) -> f64 {
        let mut sum = 0.0;
        let mut zk = 1.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            let term = c * zk * g(k);
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() && k > 2 {
                break;
            }
            zk *= z;
        }
        sum
    }

    /// `∫_{S^{N-1}} |e₁ - x ω|^{α-N} dσ` for `x` near 1, with
    /// `eps = |1 - x|` supplied separately to keep it accurate.
    fn angular(&self, x: f64, eps: f64) -> f64 {
        let n = self.n();
        let e = (self.alpha - n) / 2.0;
        let sx = 2.0 * x.sqrt();
        let g = |th: f64| {
            // log form: both factors over- or underflow near θ = 0 in high N
            let dist = eps.hypot(sx * (0.5 * th).sin());
            (2.0 * e * dist.ln() + (n - 2.0) * th.sin().ln()).exp()
        };
        let pi = std::f64::consts::PI;
        let delta = eps / x.sqrt();
        let mut total = 0.0;
        let mut start;
        if delta == 0.0 {
            // exact diagonal; only reached for α > 1
            let d0: f64 = 1e-6;
            total += x.powf(e) * d0.powf(self.alpha - 1.0) / (self.alpha - 1.0);
            start = d0;
        } else {
            start = 0.0;
        }
        let mut width = if delta == 0.0 { start } else { delta };
        let mut budget = ANGULAR_MAX_NODES;
        while start < pi {
            let end = (start + width).min(pi);
            total += adaptive_panel(&g, start, end, &mut budget);
            start = end;
            width *= 2.0;
        }
        self.omega_sub * total
    }

    /// `D(τ) = e^{Nτ} κ(1, e^τ)`.
    pub fn density(&self, tau: f64) -> f64 {
        let n = self.n();
        if tau >= SERIES_SWITCH {
            // κ(1,x) = ω x^{α-N} F(x^{-2}) for x > 1
            let z = (-2.0 * tau).exp();
            self.omega * (self.alpha * tau).exp() * self.series(z, |_| 1.0)
        } else if tau <= -SERIES_SWITCH {
            let z = (2.0 * tau).exp();
            self.omega * (n * tau).exp() * self.series(z, |_| 1.0)
        } else {
            let x = tau.exp();
            (n * tau).exp() * self.angular(x, tau.exp_m1().abs())
        }
    }

    /// `κ(r, s)`.
    pub fn kappa(&self, r: f64, s: f64) -> f64 {
        let e = self.alpha - self.n();
        if r == 0.0 {
            return self.omega * s.powf(e);
        }
        if s == 0.0 {
            return self.omega * r.powf(e);
        }
        if r == s && self.alpha <= 1.0 {
            return f64::INFINITY;
        }
        let tau = (s / r).ln();
        r.powf(e) * self.density(tau) * (-self.n() * tau).exp()
    }

    /// `∫_{-∞}^{b} e^{σ(τ-b)} D(τ) dτ` for `b ≤ 0`.
    fn origin_piece(&self, b: f64, sigma: f64) -> f64 {
        let n = self.n();
        let at = |edge: f64| {
            let z = (2.0 * edge).exp();
            self.omega
                * (n * edge).exp()
                * self.series(z, |k| 1.0 / (sigma + n + 2.0 * k as f64))
        };
        if b <= -SERIES_SWITCH {
            return at(b);
        }
        let rule = edge_rule(-SERIES_SWITCH, b);
        let near: f64 = rule
            .iter()
            .map(|&(t, w)| w * self.density(t) * (sigma * (t - b)).exp())
            .sum();
        near + at(-SERIES_SWITCH) * (sigma * (-SERIES_SWITCH - b)).exp()
    }

    /// `∫_a^∞ e^{-σ(τ-a)} D(τ) dτ` for `a ≥ 0`; needs `σ > α`.
    fn tail_piece(&self, a: f64, sigma: f64) -> f64 {
        let alpha = self.alpha;
        let at = |edge: f64| {
            let z = (-2.0 * edge).exp();
            self.omega
                * (alpha * edge).exp()
                * self.series(z, |k| 1.0 / (sigma - alpha + 2.0 * k as f64))
        };
        if a >= SERIES_SWITCH {
            return at(a);
        }
        let rule = edge_rule(a, SERIES_SWITCH);
        let near: f64 = rule
            .iter()
            .map(|&(t, w)| w * self.density(t) * (-sigma * (t - a)).exp())
            .sum();
        near + at(SERIES_SWITCH) * (-sigma * (SERIES_SWITCH - a)).exp()
    }
}

fn edge_rule(a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut rule = Vec::new();
    if b > a {
        push_singular_rule(a, b, 0.0, &mut rule);
    }
    rule
}

/// GL10 against GL20 on `[a, b]`, bisecting until they agree to
/// `ANGULAR_TOL` or the node budget runs out.
fn adaptive_panel<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, budget: &mut usize) -> f64 {
    let coarse = gl10().integrate(a, b, g);
    let fine = gl20().integrate(a, b, g);
    *budget = budget.saturating_sub(30);
    if (fine - coarse).abs() <= ANGULAR_TOL * fine.abs() || *budget < 60 {
        return fine;
    }
    let m = 0.5 * (a + b);
    adaptive_panel(g, a, m, budget) + adaptive_panel(g, m, b, budget)
}

/// Precomputed Riesz operator for one `(N, α, grid)`.
#[derive(Debug, Clone)]
pub struct AngularKernel {
    pub dim: u32,
    pub alpha: f64,
    /// `κ(r, r) < ∞`, i.e. `α > 1`.
    pub diagonal_integrable: bool,
    pub(crate) shape: KernelShape,
    pub(crate) grid: Arc<RadialGrid>,
    /// Rising-half hat moments, indexed by offset `m + n - 1`.
    pub(crate) minus: Vec<f64>,
    /// Falling-half hat moments, indexed by offset `m + n - 1`.
    pub(crate) plus: Vec<f64>,
    /// Per-node quadrature `(τ, w·D(τ))` on `[-ln 2, t_0 - t_i]`.
    pub(crate) origin_edge: Vec<Vec<(f64, f64)>>,
    /// Per-node quadrature `(τ, w·D(τ))` on `[t_{n-1} - t_i, ln 2]`.
    pub(crate) tail_edge: Vec<Vec<(f64, f64)>>,
}

pub fn build_kernel(dim: u32, alpha: f64, grid: Arc<RadialGrid>) -> Result<AngularKernel> {
    if grid.dim != dim {
        return Err(Error::Grid(format!("grid built for N = {}, not {dim}", grid.dim)));
    }
    let shape = KernelShape::new(dim, alpha)?;
    let n = grid.len();
    let h = grid.log_step;
    let off = n - 1;

    // panel m covers τ ∈ [m h, (m+1) h]
    let panels: Vec<(f64, f64)> = ((-(off as i64))..(off as i64))
        .into_par_iter()
        .map(|m| {
            let a = m as f64 * h;
            let b = a + h;
            let mut rule = Vec::new();
            if m == 0 || m == -1 {
                push_singular_rule(a, b, 0.0, &mut rule);
            } else {
                gl16().push_rule(a, b, &mut rule);
            }
            let mut falling = 0.0;
            let mut rising = 0.0;
            for (t, w) in rule {
                let d = w * shape.density(t);
                let s = (t - a) / h;
                falling += (1.0 - s) * d;
                rising += s * d;
            }
            (falling, rising)
        })
        .collect();
    let mut plus = vec![0.0; 2 * n - 1];
    let mut minus = vec![0.0; 2 * n - 1];
    for (idx, (falling, rising)) in panels.into_iter().enumerate() {
        // idx = m + off
        plus[idx] = falling;
        minus[idx + 1] = rising;
    }

    let weighted = |rule: Vec<(f64, f64)>| -> Vec<(f64, f64)> {
        rule.into_iter().map(|(t, w)| (t, w * shape.density(t))).collect()
    };
    let origin_edge: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let b = -(i as f64) * h;
            if b <= -SERIES_SWITCH {
                Vec::new()
            } else {
                weighted(edge_rule(-SERIES_SWITCH, b))
            }
        })
        .collect();
    let tail_edge: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = (off - i) as f64 * h;
            if a >= SERIES_SWITCH {
                Vec::new()
            } else {
                weighted(edge_rule(a, SERIES_SWITCH))
            }
        })
        .collect();

    Ok(AngularKernel {
        dim,
        alpha,
        diagonal_integrable: alpha > 1.0,
        shape,
        grid,
        minus,
        plus,
        origin_edge,
        tail_edge,
    })
}

/// Endpoint data of `f` in the overflow-free form used by the apply loop.
struct EndpointData {
    /// `c₀ r_min^{σ₀}` and `σ₀`.
    origin: Option<(f64, f64)>,
    /// `c_∞ r_max^{-σ_∞}` and `σ_∞`.
    tail: Option<(f64, f64)>,
}

fn endpoint_data(f: &RadialFunction, alpha: f64, dim: u32) -> Result<EndpointData> {
    let g = &f.grid;
    let origin = if f.origin.coefficient != 0.0 {
        let s = f.origin.exponent;
        if s <= -(dim as f64) {
            return Err(Error::DivergentIntegral {
                what: "density not locally integrable at the origin".into(),
                exponent: s,
            });
        }
        Some((f.origin.coefficient * g.r_min.powf(s), s))
    } else {
        None
    };
    let tail = match f.tail {
        TailModel::Zero => None,
        TailModel::PowerLaw {
            coefficient,
            exponent,
        } => {
            if coefficient == 0.0 {
                None
            } else if exponent <= alpha {
                return Err(Error::DivergentRiesz {
                    violated: "tail exponent must exceed alpha".into(),
                    tail_exponent: exponent,
                    alpha,
                });
            } else {
                Some((coefficient * g.r_max.powf(-exponent), exponent))
            }
        }
        TailModel::ExponentialLike { value, log_slope } => {
            // locally a power law with the same log slope
            let s = -log_slope;
            if s > alpha {
                Some((value, s))
            } else {
                return Err(Error::DivergentRiesz {
                    violated: "tail exponent must exceed alpha".into(),
                    tail_exponent: s,
                    alpha,
                });
            }
        }
    };
    Ok(EndpointData { origin, tail })
}

impl AngularKernel {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// `κ(r, s)` for arbitrary radii (not tied to the table).
    pub fn kappa(&self, r: f64, s: f64) -> f64 {
        self.shape.kappa(r, s)
    }

    fn check_grid(&self, f: &RadialFunction) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &f.grid) && *self.grid != *f.grid {
            return Err(Error::Grid("function and kernel live on different grids".into()));
        }
        Ok(())
    }

    /// `I_α[f]` at every node, with endpoint models for the output.
    pub fn apply(&self, f: &RadialFunction) -> Result<RadialFunction> {
        self.check_grid(f)?;
        let ends = endpoint_data(f, self.alpha, self.dim)?;
        let g = &self.grid;
        let n = g.len();
        let off = n - 1;
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let base = off - i;
                let mut acc = 0.0;
                for (j, fj) in f.values.iter().enumerate() {
                    if *fj == 0.0 {
                        continue;
                    }
                    let idx = base + j;
                    let mut m = 0.0;
                    if j > 0 {
                        m += self.minus[idx];
                    }
                    if j < off {
                        m += self.plus[idx];
                    }
                    acc += fj * m;
                }
                if let Some((v0, s0)) = ends.origin {
                    acc += v0 * self.origin_piece_cached(i, s0);
                }
                if let Some((vt, st)) = ends.tail {
                    acc += vt * self.tail_piece_cached(i, st);
                }
                g.nodes[i].powf(self.alpha) * acc
            })
            .collect();
        let mut out = RadialFunction::from_values(g.clone(), values);
        let slow = match f.tail {
            TailModel::PowerLaw { exponent, .. } if exponent < g.n() => exponent - self.alpha,
            _ => g.n() - self.alpha,
        };
        let last = out.values[n - 1];
        out.tail = if last > 0.0 {
            TailModel::PowerLaw {
                coefficient: last * g.r_max.powf(slow),
                exponent: slow,
            }
        } else {
            TailModel::Zero
        };
        Ok(out)
    }

    fn origin_piece_cached(&self, i: usize, sigma: f64) -> f64 {
        let h = self.grid.log_step;
        let b = -(i as f64) * h;
        let edge = &self.origin_edge[i];
        if edge.is_empty() {
            return self.shape.origin_piece(b, sigma);
        }
        let n = self.shape.n();
        let s0 = -SERIES_SWITCH;
        let near: f64 = edge.iter().map(|&(t, wd)| wd * (sigma * (t - b)).exp()).sum();
        let z = (2.0 * s0).exp();
        let far = self.shape.omega
            * (n * s0).exp()
            * self.shape.series(z, |k| 1.0 / (sigma + n + 2.0 * k as f64));
        near + far * (sigma * (s0 - b)).exp()
    }

    fn tail_piece_cached(&self, i: usize, sigma: f64) -> f64 {
        let h = self.grid.log_step;
        let a = (self.grid.len() - 1 - i) as f64 * h;
        let edge = &self.tail_edge[i];
        if edge.is_empty() {
            return self.shape.tail_piece(a, sigma);
        }
        let alpha = self.alpha;
        let s1 = SERIES_SWITCH;
        let near: f64 = edge.iter().map(|&(t, wd)| wd * (-sigma * (t - a)).exp()).sum();
        let z = (-2.0 * s1).exp();
        let far = self.shape.omega
            * (alpha * s1).exp()
            * self.shape.series(z, |k| 1.0 / (sigma - alpha + 2.0 * k as f64));
        near + far * (-sigma * (s1 - a)).exp()
    }

    /// `I_α[f](r)` at a single radius `r ∈ {0} ∪ [r_min, r_max]`, by direct
    /// quadrature rather than the table.
    pub fn evaluate_at(&self, f: &RadialFunction, r: f64) -> Result<f64> {
        self.check_grid(f)?;
        let ends = endpoint_data(f, self.alpha, self.dim)?;
        let g = &self.grid;
        let alpha = self.alpha;
        if r == 0.0 {
            // ω ∫ f(s) s^{α-1} ds with the hat-exact rule in ln s
            let (left, right) = crate::grid::hat_exp_moments(alpha, g.log_step);
            let n = g.len();
            let mut acc: f64 = f
                .values
                .iter()
                .zip(&g.nodes)
                .enumerate()
                .map(|(j, (v, s))| {
                    let mut w = 0.0;
                    if j > 0 {
                        w += left;
                    }
                    if j + 1 < n {
                        w += right;
                    }
                    v * s.powf(alpha) * w
                })
                .sum();
            if let Some((v0, s0)) = ends.origin {
                acc += v0 * g.r_min.powf(alpha) / (s0 + alpha);
            }
            if let Some((vt, st)) = ends.tail {
                acc += vt * g.r_max.powf(alpha) / (st - alpha);
            }
            return Ok(self.shape.omega * acc);
        }
        if r < g.r_min * (1.0 - 1e-12) || r > g.r_max * (1.0 + 1e-12) {
            return Err(Error::Grid(format!("radius {r} outside the grid")));
        }
        let lr = r.ln();
        let h = g.log_step;
        let shape = &self.shape;
        let interior: f64 = (0..g.len() - 1)
            .into_par_iter()
            .map(|j| {
                let (fa, fb) = (f.values[j], f.values[j + 1]);
                if fa == 0.0 && fb == 0.0 {
                    return 0.0;
                }
                let a = g.log_nodes[j] - lr;
                let b = g.log_nodes[j + 1] - lr;
                let mut rule = Vec::new();
                push_singular_rule(a, b, 0.0, &mut rule);
                rule.iter()
                    .map(|&(t, w)| {
                        let s = (t - a) / h;
                        w * (fa * (1.0 - s) + fb * s) * shape.density(t)
                    })
                    .sum::<f64>()
            })
            .sum();
        let mut acc = interior;
        if let Some((v0, s0)) = ends.origin {
            acc += v0 * shape.origin_piece(g.log_nodes[0] - lr, s0);
        }
        if let Some((vt, st)) = ends.tail {
            acc += vt * shape.tail_piece(g.log_nodes[g.len() - 1] - lr, st);
        }
        Ok(r.powf(alpha) * acc)
    }

    /// Compares `I_α[f]` with its far-field law `‖f‖₁ r^{α-N}` over the last
    /// 1.5 decades of the grid.
    pub fn asymptotic_check(&self, f: &RadialFunction, beta: f64) -> Result<RieszReport> {
        let n = self.dim as f64;
        if !(beta > n) {
            return Err(Error::Domain(format!("need β > N, got β = {beta}")));
        }
        let l1 = f.integrate()?;
        let potential = self.apply(f)?;
        let g = &self.grid;
        let lo = g.r_max / 10f64.powf(1.5);
        let mut rs = Vec::new();
        let mut errs = Vec::new();
        let mut samples = Vec::new();
        for i in g.window_indices(lo, g.r_max) {
            let r = g.nodes[i];
            let e = (potential.values[i] - l1 * r.powf(self.alpha - n)).abs();
            samples.push((r, e));
            if e > 0.0 {
                rs.push(r);
                errs.push(e);
            }
        }
        let fit = fit_power_law_data(&rs, &errs)?;
        let gamma = if beta.is_infinite() {
            1.0
        } else {
            (beta - n) / (1.0 + beta - n)
        };
        Ok(RieszReport {
            l1_norm: l1,
            gamma,
            error_samples: samples,
            fitted_error_slope: fit.exponent,
            slope_bound: -(n - self.alpha + gamma),
        })
    }
}

pub fn riesz_apply(f: &RadialFunction, kernel: &AngularKernel) -> Result<RadialFunction> {
    kernel.apply(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszReport {
    pub l1_norm: f64,
    pub gamma: f64,
    pub error_samples: Vec<(f64, f64)>,
    pub fitted_error_slope: f64,
    /// `-(N - α + γ)`.
    pub slope_bound: f64,
}
