//! Log-spaced radial grids on `(0, ∞)` and radial profiles sampled on them.
//!
//! Quadrature treats a profile as piecewise linear in `t = ln r` between
//! nodes and integrates it exactly against the volume density
//! `ω_{N-1} r^{N-1} dr = ω_{N-1} e^{Nt} dt`. The same hat-function
//! representation is used by the Riesz operator, so far-field limits of the
//! potential reproduce the quadrature mass exactly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::exponents::sphere_area;
use crate::{Error, Result};

/// Number of nodes at each end used to fit the endpoint models.
pub const MODEL_FIT_NODES: usize = 16;
/// Relative tolerance of the model-continuity invariant.
pub const MODEL_TOLERANCE: f64 = 0.05;

pub const DEFAULT_R_MIN: f64 = 1e-4;
pub const DEFAULT_R_MAX: f64 = 1e2;
pub const DEFAULT_NODES: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub dim: u32,
    pub nodes: Vec<f64>,
    /// `ln r` at each node.
    pub log_nodes: Vec<f64>,
    /// Volume weights: `Σ_j weights[j] f_j` integrates the piecewise-linear
    /// (in `ln r`) interpolant of `f` over `[r_min, r_max]`.
    pub weights: Vec<f64>,
    /// Uniform spacing in `ln r`.
    pub log_step: f64,
    /// `|S^{N-1}|`.
    pub omega: f64,
}

/// `(e^a - 1 - a)/a²`, the hat-function moment against `e^{a s}` on one
/// half panel of unit width.
pub(crate) fn hat_phi(a: f64) -> f64 {
    if a.abs() < 1e-2 {
        // Taylor series Σ a^k/(k+2)!
        let mut term = 0.5;
        let mut sum = 0.5;
        for k in 1..8 {
            term *= a / (k as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        (a.exp_m1() - a) / (a * a)
    }
}

/// `∫ hat(t) e^{γ t} dt` for a hat of half-width `h` centred at 0, split into
/// the rising (left) and falling (right) halves.
pub(crate) fn hat_exp_moments(gamma: f64, h: f64) -> (f64, f64) {
    let a = gamma * h;
    (h * hat_phi(-a), h * hat_phi(a))
}

pub fn make_grid(r_min: f64, r_max: f64, n: usize, dim: u32) -> Result<RadialGrid> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Error::Grid(format!(
            "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if n < 16 {
        return Err(Error::Grid(format!("need at least 16 nodes, got {n}")));
    }
    if dim < 3 {
        return Err(Error::Grid(format!("need N ≥ 3, got {dim}")));
    }
    let t0 = r_min.ln();
    let t1 = r_max.ln();
    let h = (t1 - t0) / (n - 1) as f64;
    let log_nodes: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { t1 } else { t0 + i as f64 * h })
        .collect();
    let mut nodes: Vec<f64> = log_nodes.iter().map(|t| t.exp()).collect();
    nodes[0] = r_min;
    nodes[n - 1] = r_max;
    let omega = sphere_area(dim);
    let (left, right) = hat_exp_moments(dim as f64, h);
    let weights = nodes
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let mut w = 0.0;
            if j > 0 {
                w += left;
            }
            if j + 1 < n {
                w += right;
            }
            omega * r.powi(dim as i32) * w
        })
        .collect();
    Ok(RadialGrid {
        r_min,
        r_max,
        dim,
        nodes,
        log_nodes,
        weights,
        log_step: h,
        omega,
    })
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    /// Constant ratio between consecutive nodes.
    pub fn ratio(&self) -> f64 {
        self.log_step.exp()
    }

    /// Index of the node closest to `r` in log distance.
    pub fn nearest_index(&self, r: f64) -> usize {
        let x = (r.ln() - self.log_nodes[0]) / self.log_step;
        (x.round().max(0.0) as usize).min(self.len() - 1)
    }

    /// Indices of nodes inside the closed window `[a, b]`.
    pub fn window_indices(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let lo = self.nodes.partition_point(|&r| r < a * (1.0 - 1e-12));
        let hi = self.nodes.partition_point(|&r| r <= b * (1.0 + 1e-12));
        lo..hi
    }

    /// Volume of the shell `a < |x| < b`.
    pub fn shell_volume(&self, a: f64, b: f64) -> f64 {
        self.omega * (b.powi(self.dim as i32) - a.powi(self.dim as i32)) / self.n()
    }

    /// Second-order finite-difference radial Laplacian
    /// `u'' + (N-1)/r u'` at interior nodes; endpoint entries are NaN.
    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        let n = self.len();
        let h = self.log_step;
        let nm2 = self.n() - 2.0;
        let mut out = vec![f64::NAN; n];
        for i in 1..n - 1 {
            let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
            let utt = (c - 2.0 * b + a) / (h * h);
            let ut = (c - a) / (2.0 * h);
            out[i] = (utt + nm2 * ut) / (self.nodes[i] * self.nodes[i]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginModel {
    pub coefficient: f64,
    pub exponent: f64,
}

impl OriginModel {
    pub const ZERO: OriginModel = OriginModel {
        coefficient: 0.0,
        exponent: 0.0,
    };

    pub fn eval(&self, r: f64) -> f64 {
        self.coefficient * r.powf(self.exponent)
    }
}

/// Behaviour beyond `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TailModel {
    /// `f(r) ≈ coefficient · r^{-exponent}`.
    PowerLaw { coefficient: f64, exponent: f64 },
    /// Faster than any power; `log_slope` is the local `d ln f / d ln r` at
    /// `r_max` (strongly negative).
    ExponentialLike { value: f64, log_slope: f64 },
    Zero,
}

/// Least-squares power-law fit `f ≈ prefactor · r^{exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS misfit in `ln f`.
    pub residual: f64,
    pub count: usize,
    pub window: (f64, f64),
}

/// Fits `ln f` against `ln r` by ordinary least squares.
pub fn fit_power_law_data(r: &[f64], f: &[f64]) -> Result<PowerLawFit> {
    if r.len() != f.len() {
        return Err(Error::Fit("length mismatch".into()));
    }
    if r.len() < 8 {
        return Err(Error::Fit(format!("need at least 8 nodes, got {}", r.len())));
    }
    if let Some(bad) = f.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Fit(format!("nonpositive or non-finite sample {bad}")));
    }
    let m = r.len() as f64;
    let xs: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = f.iter().map(|x| x.ln()).collect();
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
    }
    if sxx <= 0.0 {
        return Err(Error::Fit("degenerate window".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        residual: (rss / m).sqrt(),
        count: r.len(),
        window: (r[0], r[r.len() - 1]),
    })
}

/// A nonnegative radial profile sampled on a [`RadialGrid`] together with
/// power-law models for the truncated regions `(0, r_min)` and `(r_max, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub origin: OriginModel,
    pub tail: TailModel,
}

fn fit_origin(grid: &RadialGrid, values: &[f64]) -> OriginModel {
    let m = MODEL_FIT_NODES.min(values.len());
    let head = &values[..m];
    if head.iter().any(|v| *v <= 0.0) {
        return OriginModel::ZERO;
    }
    match fit_power_law_data(&grid.nodes[..m], head) {
        Ok(fit) => {
            // anchor the model on the first node for continuity
            let coefficient = values[0] / grid.r_min.powf(fit.exponent);
            OriginModel {
                coefficient,
                exponent: fit.exponent,
            }
        }
        Err(_) => OriginModel::ZERO,
    }
}

fn fit_tail(grid: &RadialGrid, values: &[f64]) -> TailModel {
    let n = values.len();
    let m = MODEL_FIT_NODES.min(n);
    let tail = &values[n - m..];
    if tail.iter().any(|v| *v <= 0.0) {
        return TailModel::Zero;
    }
    let r = &grid.nodes[n - m..];
    let (Ok(all), Ok(inner), Ok(outer)) = (
        fit_power_law_data(r, tail),
        fit_power_law_data(&r[..m / 2], &tail[..m / 2]).or_else(|_| fit_power_law_data(r, tail)),
        fit_power_law_data(&r[m / 2..], &tail[m / 2..]).or_else(|_| fit_power_law_data(r, tail)),
    ) else {
        return TailModel::Zero;
    };
    let last = values[n - 1];
    let bending = outer.exponent - inner.exponent;
    if all.exponent < -1.0 && bending < -0.02 * all.exponent.abs().max(1.0) {
        TailModel::ExponentialLike {
            value: last,
            log_slope: outer.exponent,
        }
    } else {
        let exponent = -all.exponent;
        TailModel::PowerLaw {
            coefficient: last * grid.r_max.powf(exponent),
            exponent,
        }
    }
}

impl RadialFunction {
    /// Samples `f` at the nodes and fits both endpoint models.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, f: F) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        Self::from_values(grid, values)
    }

    pub fn from_values(grid: Arc<RadialGrid>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len(), "values must match the grid");
        let origin = fit_origin(&grid, &values);
        let tail = fit_tail(&grid, &values);
        Self {
            grid,
            values,
            origin,
            tail,
        }
    }

    pub fn with_models(
        grid: Arc<RadialGrid>,
        values: Vec<f64>,
        origin: OriginModel,
        tail: TailModel,
    ) -> Self {
        assert_eq!(grid.len(), values.len(), "values must match the grid");
        Self {
            grid,
            values,
            origin,
            tail,
        }
    }

    /// The indicator of the closed ball of radius `radius`. The radius must
    /// coincide with a node; that node takes the value 1/2 so that the
    /// piecewise-linear interpolant has the exact mass to second order.
    pub fn indicator(grid: Arc<RadialGrid>, radius: f64) -> Result<Self> {
        let i = grid.nearest_index(radius);
        if ((grid.nodes[i] - radius) / radius).abs() > 1e-9 {
            return Err(Error::Grid(format!(
                "indicator radius {radius} is not a grid node (nearest {})",
                grid.nodes[i]
            )));
        }
        if i == 0 || i + 1 == grid.len() {
            return Err(Error::Grid("indicator radius must be an interior node".into()));
        }
        let values = (0..grid.len())
            .map(|j| match j.cmp(&i) {
                std::cmp::Ordering::Less => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Greater => 0.0,
            })
            .collect();
        Ok(Self {
            grid,
            values,
            origin: OriginModel {
                coefficient: 1.0,
                exponent: 0.0,
            },
            tail: TailModel::Zero,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }

    /// Re-fits both endpoint models from the current values.
    pub fn refit_models(&mut self) {
        self.origin = fit_origin(&self.grid, &self.values);
        self.tail = fit_tail(&self.grid, &self.values);
    }

    /// Value at an arbitrary radius: linear interpolation in `ln r` inside
    /// the grid, endpoint models outside.
    pub fn eval(&self, r: f64) -> f64 {
        let g = &self.grid;
        if r < g.r_min {
            return self.origin.eval(r);
        }
        if r > g.r_max {
            return match self.tail {
                TailModel::PowerLaw {
                    coefficient,
                    exponent,
                } => coefficient * r.powf(-exponent),
                TailModel::ExponentialLike { value, log_slope } => {
                    let lambda = -log_slope / g.r_max;
                    value * (-lambda * (r - g.r_max)).exp()
                }
                TailModel::Zero => 0.0,
            };
        }
        let x = (r.ln() - g.log_nodes[0]) / g.log_step;
        let i = (x.floor().max(0.0) as usize).min(g.len() - 2);
        let s = (x - i as f64).clamp(0.0, 1.0);
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }

    /// Nodewise power with endpoint models transformed exactly.
    pub fn powf(&self, e: f64) -> Self {
        let values = self.values.iter().map(|v| v.powf(e)).collect();
        let origin = if self.origin.coefficient > 0.0 {
            OriginModel {
                coefficient: self.origin.coefficient.powf(e),
                exponent: self.origin.exponent * e,
            }
        } else {
            OriginModel::ZERO
        };
        let tail = match self.tail {
            TailModel::PowerLaw {
                coefficient,
                exponent,
            } => TailModel::PowerLaw {
                coefficient: coefficient.powf(e),
                exponent: exponent * e,
            },
            TailModel::ExponentialLike { value, log_slope } => TailModel::ExponentialLike {
                value: value.powf(e),
                log_slope: log_slope * e,
            },
            TailModel::Zero => TailModel::Zero,
        };
        Self::with_models(self.grid.clone(), values, origin, tail)
    }

    /// Nodewise product with endpoint models multiplied exactly.
    pub fn mul(&self, other: &RadialFunction) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        let origin = OriginModel {
            coefficient: self.origin.coefficient * other.origin.coefficient,
            exponent: self.origin.exponent + other.origin.exponent,
        };
        let origin = if origin.coefficient > 0.0 {
            origin
        } else {
            OriginModel::ZERO
        };
        let log_slope_of = |t: &TailModel| match *t {
            TailModel::PowerLaw { exponent, .. } => Some(-exponent),
            TailModel::ExponentialLike { log_slope, .. } => Some(log_slope),
            TailModel::Zero => None,
        };
        let tail = match (self.tail, other.tail) {
            (TailModel::Zero, _) | (_, TailModel::Zero) => TailModel::Zero,
            (
                TailModel::PowerLaw {
                    coefficient: c1,
                    exponent: e1,
                },
                TailModel::PowerLaw {
                    coefficient: c2,
                    exponent: e2,
                },
            ) => TailModel::PowerLaw {
                coefficient: c1 * c2,
                exponent: e1 + e2,
            },
            (a, b) => TailModel::ExponentialLike {
                value: self.values[self.len() - 1] * other.values[other.len() - 1],
                log_slope: log_slope_of(&a).unwrap() + log_slope_of(&b).unwrap(),
            },
        };
        Self::with_models(self.grid.clone(), values, origin, tail)
    }

    /// `a·self + b·other` with refitted models.
    pub fn combine(&self, a: f64, other: &RadialFunction, b: f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::from_values(self.grid.clone(), values)
    }

    pub fn scale(&self, a: f64) -> Self {
        let values = self.values.iter().map(|v| a * v).collect();
        let origin = OriginModel {
            coefficient: self.origin.coefficient * a,
            exponent: self.origin.exponent,
        };
        let tail = match self.tail {
            TailModel::PowerLaw {
                coefficient,
                exponent,
            } => TailModel::PowerLaw {
                coefficient: coefficient * a,
                exponent,
            },
            TailModel::ExponentialLike { value, log_slope } => TailModel::ExponentialLike {
                value: value * a,
                log_slope,
            },
            TailModel::Zero => TailModel::Zero,
        };
        Self::with_models(self.grid.clone(), values, origin, tail)
    }

    /// Model continuity at the endpoints, relative to the node values.
    pub fn model_mismatch(&self) -> (f64, f64) {
        let g = &self.grid;
        let v0 = self.values[0];
        let origin = if v0 > 0.0 {
            (self.origin.eval(g.r_min) - v0).abs() / v0
        } else {
            0.0
        };
        let vn = self.values[self.len() - 1];
        let tail = match self.tail {
            TailModel::PowerLaw {
                coefficient,
                exponent,
            } if vn > 0.0 => (coefficient * g.r_max.powf(-exponent) - vn).abs() / vn,
            _ => 0.0,
        };
        (origin, tail)
    }

    fn origin_mass(&self) -> Result<f64> {
        let g = &self.grid;
        let OriginModel {
            coefficient,
            exponent,
        } = self.origin;
        if coefficient == 0.0 {
            return Ok(0.0);
        }
        let s = exponent + g.n();
        if s <= 0.0 {
            return Err(Error::DivergentIntegral {
                what: "origin model not integrable (need exponent > -N)".into(),
                exponent,
            });
        }
        Ok(g.omega * coefficient * g.r_min.powf(s) / s)
    }

    fn tail_mass(&self) -> Result<f64> {
        let g = &self.grid;
        match self.tail {
            TailModel::Zero => Ok(0.0),
            TailModel::PowerLaw {
                coefficient,
                exponent,
            } => {
                if coefficient == 0.0 {
                    return Ok(0.0);
                }
                if exponent <= g.n() {
                    return Err(Error::DivergentIntegral {
                        what: "tail model not integrable (need decay exponent > N)".into(),
                        exponent,
                    });
                }
                Ok(g.omega * coefficient * g.r_max.powf(g.n() - exponent) / (exponent - g.n()))
            }
            TailModel::ExponentialLike { value, log_slope } => {
                let lambda = -log_slope / g.r_max;
                Ok(g.omega * value * g.r_max.powf(g.n() - 1.0) / lambda)
            }
        }
    }

    /// `ω_{N-1} ∫₀^∞ f r^{N-1} dr`: grid quadrature plus closed-form model
    /// contributions on `(0, r_min)` and `(r_max, ∞)`.
    pub fn integrate(&self) -> Result<f64> {
        let interior: f64 = self
            .values
            .iter()
            .zip(&self.grid.weights)
            .map(|(v, w)| v * w)
            .sum();
        Ok(interior + self.origin_mass()? + self.tail_mass()?)
    }

    /// `∫_{B_radius} f`, with the panel straddling `radius` clipped.
    pub fn integrate_within(&self, radius: f64) -> Result<f64> {
        let g = &self.grid;
        if radius <= g.r_min {
            let OriginModel {
                coefficient,
                exponent,
            } = self.origin;
            if coefficient == 0.0 {
                return Ok(0.0);
            }
            let s = exponent + g.n();
            if s <= 0.0 {
                return Err(Error::DivergentIntegral {
                    what: "origin model not integrable".into(),
                    exponent,
                });
            }
            return Ok(g.omega * coefficient * radius.powf(s) / s);
        }
        if radius >= g.r_max {
            return Err(Error::Grid("radius beyond the grid".into()));
        }
        let mut total = self.origin_mass()?;
        let h = g.log_step;
        let nn = g.n();
        let tr = radius.ln();
        for i in 0..g.len() - 1 {
            let (ta, tb) = (g.log_nodes[i], g.log_nodes[i + 1]);
            if ta >= tr {
                break;
            }
            let hi = tb.min(tr);
            // f linear in t on the panel; integrate against ω e^{N t}
            let (fa, fb) = (self.values[i], self.values[i + 1]);
            let slope = (fb - fa) / h;
            let rule = crate::quadrature::gl16();
            total += g.omega
                * rule.integrate(ta, hi, |t| (fa + slope * (t - ta)) * (nn * t).exp());
        }
        Ok(total)
    }
}

pub fn fit_power_law(f: &RadialFunction, window: (f64, f64)) -> Result<PowerLawFit> {
    let g = &f.grid;
    if window.0 < g.r_min * (1.0 - 1e-12) || window.1 > g.r_max * (1.0 + 1e-12) {
        return Err(Error::Fit(format!(
            "window [{}, {}] outside the grid [{}, {}]",
            window.0, window.1, g.r_min, g.r_max
        )));
    }
    let idx = g.window_indices(window.0, window.1);
    fit_power_law_data(&g.nodes[idx.clone()], &f.values[idx])
}
