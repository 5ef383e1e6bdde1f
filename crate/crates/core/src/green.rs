//! The Yukawa fundamental solution `Γ₀` of `-Δ + 1` in `ℝ^N` and the Green
//! operator `𝔾 = (-Δ + 1)^{-1}` on radial data.
//!
//! `𝔾` is discretized in `t = ln r`, where the radial equation reads
//! `-u_tt - (N-2) u_t + r² u = r² f`. Central differences give a tridiagonal
//! M-matrix whenever the log step satisfies `h ≤ 2/(N-2)`, so the discrete
//! operator preserves positivity and order.

use std::sync::Arc;

use crate::exponents::c_n;
use crate::grid::{fit_power_law, OriginModel, PowerLawFit, RadialFunction, RadialGrid, TailModel};
use crate::special::bessel_k_scaled;
use crate::tridiag::Tridiagonal;
use crate::{Error, Result};

/// `Γ₀(r) = (2π)^{-N/2} r^{1-N/2} K_{N/2-1}(r)`.
pub fn yukawa(dim: u32, r: f64) -> f64 {
    let half = dim as f64 / 2.0;
    (2.0 * std::f64::consts::PI).powf(-half)
        * r.powf(1.0 - half)
        * bessel_k_scaled(half - 1.0, r)
        * (-r).exp()
}

#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub dim: u32,
    pub profile: RadialFunction,
    /// Normalization `1/((N-2)|S^{N-1}|)` of the `-Δ` fundamental solution.
    pub c_n: f64,
    /// Power-law fit of the profile over `[r_min, 10 r_min]`.
    pub origin_fit: PowerLawFit,
}

pub fn fundamental_solution(dim: u32, grid: Arc<RadialGrid>) -> Result<FundamentalSolution> {
    if dim < 3 {
        return Err(Error::Domain(format!("need N ≥ 3, got {dim}")));
    }
    if grid.dim != dim {
        return Err(Error::Grid(format!("grid built for N = {}, not {dim}", grid.dim)));
    }
    let n = dim as f64;
    let values: Vec<f64> = grid.nodes.iter().map(|&r| yukawa(dim, r)).collect();
    let origin = OriginModel {
        coefficient: values[0] * grid.r_min.powf(n - 2.0),
        exponent: 2.0 - n,
    };
    let tail = TailModel::ExponentialLike {
        value: values[values.len() - 1],
        log_slope: -(grid.r_max + (n - 1.0) / 2.0),
    };
    let profile = RadialFunction::with_models(grid.clone(), values, origin, tail);
    let origin_fit = fit_power_law(&profile, (grid.r_min, 10.0 * grid.r_min))?;
    Ok(FundamentalSolution {
        dim,
        profile,
        c_n: c_n(dim),
        origin_fit,
    })
}

impl FundamentalSolution {
    /// `k Γ₀`.
    pub fn scaled(&self, k: f64) -> RadialFunction {
        self.profile.scale(k)
    }

    pub fn eval(&self, r: f64) -> f64 {
        yukawa(self.dim, r)
    }
}

/// Closure at `r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarBoundary {
    /// Rate chosen from the right-hand side: its power-law tail exponent,
    /// or the Yukawa rate `r_max + (N-1)/2` for fast tails.
    Auto,
    /// `u_t = -rate · u` in `t = ln r`, i.e. `u ~ r^{-rate}`.
    Rate(f64),
}

#[derive(Debug, Clone)]
pub struct GreenOperator {
    grid: Arc<RadialGrid>,
}

/// Particular solution `P` of `-ΔP = c r^σ` near the origin and its log
/// derivative `P_t`.
fn origin_particular(model: OriginModel, dim: f64, r: f64) -> Result<(f64, f64)> {
    let OriginModel {
        coefficient: c,
        exponent: s,
    } = model;
    if c == 0.0 {
        return Ok((0.0, 0.0));
    }
    if s <= -dim {
        return Err(Error::DivergentIntegral {
            what: "right-hand side not locally integrable at the origin".into(),
            exponent: s,
        });
    }
    if (s + 2.0).abs() < 1e-9 {
        let p = -c * r.ln() / (dim - 2.0);
        return Ok((p, -c / (dim - 2.0)));
    }
    let p = -c * r.powf(s + 2.0) / ((s + 2.0) * (s + dim));
    Ok((p, (s + 2.0) * p))
}

impl GreenOperator {
    pub fn new(grid: Arc<RadialGrid>) -> Result<Self> {
        let bound = 2.0 / (grid.n() - 2.0);
        if grid.log_step > bound {
            return Err(Error::Grid(format!(
                "log step {} exceeds {bound}; the stencil would lose its maximum principle",
                grid.log_step
            )));
        }
        Ok(Self { grid })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    fn far_rate(&self, f: &RadialFunction, bc: FarBoundary) -> f64 {
        let g = &self.grid;
        match bc {
            FarBoundary::Rate(rate) => rate,
            FarBoundary::Auto => match f.tail {
                TailModel::PowerLaw { exponent, .. } => exponent.max(0.0),
                _ => g.r_max + (g.n() - 1.0) / 2.0,
            },
        }
    }

    /// Assembles the system matrix and right-hand side for `f`.
    pub fn system(&self, f: &RadialFunction, bc: FarBoundary) -> Result<(Tridiagonal, Vec<f64>)> {
        let g = &self.grid;
        let n = g.len();
        let h = g.log_step;
        let nm2 = g.n() - 2.0;
        let ih2 = 1.0 / (h * h);
        let mut lower = vec![-ih2 + nm2 / (2.0 * h); n];
        let mut upper = vec![-ih2 - nm2 / (2.0 * h); n];
        let mut main: Vec<f64> = g.nodes.iter().map(|r| 2.0 * ih2 + r * r).collect();
        let mut rhs: Vec<f64> = g
            .nodes
            .iter()
            .zip(&f.values)
            .map(|(r, v)| r * r * v)
            .collect();

        // regular solution near 0: u_t = β u + g with β = r²/N
        let r0 = g.r_min;
        let beta = r0 * r0 / g.n();
        let (p, pt) = origin_particular(f.origin, g.n(), r0)?;
        let gg = pt - beta * p;
        main[0] += 2.0 * beta / h - nm2 * beta;
        upper[0] = -2.0 * ih2;
        lower[0] = 0.0;
        rhs[0] += -2.0 * gg / h + nm2 * gg;

        let lambda = self.far_rate(f, bc);
        main[n - 1] += 2.0 * lambda / h + nm2 * lambda;
        lower[n - 1] = -2.0 * ih2;
        upper[n - 1] = 0.0;
        Ok((Tridiagonal { lower, main, upper }, rhs))
    }

    pub fn apply(&self, f: &RadialFunction) -> Result<RadialFunction> {
        self.apply_with(f, FarBoundary::Auto)
    }

    /// Solves `-Δu + u = f` on `[r_min, r_max]` with the regularity
    /// condition at `r_min` and the chosen far-field closure.
    pub fn apply_with(&self, f: &RadialFunction, bc: FarBoundary) -> Result<RadialFunction> {
        if f.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite right-hand side".into()));
        }
        let (m, rhs) = self.system(f, bc)?;
        let values = m.solve(&rhs)?;
        let mut u = RadialFunction::from_values(self.grid.clone(), values);
        if let FarBoundary::Rate(rate) = bc {
            if rate > 0.0 {
                let last = u.values[u.len() - 1];
                u.tail = if last > 0.0 {
                    TailModel::PowerLaw {
                        coefficient: last * self.grid.r_max.powf(rate),
                        exponent: rate,
                    }
                } else {
                    TailModel::Zero
                };
            }
        }
        Ok(u)
    }

    /// `-Δu + u` by the same stencil, at interior nodes (NaN at the ends).
    pub fn residual_operator(&self, u: &[f64]) -> Vec<f64> {
        let lap = self.grid.laplacian(u);
        lap.iter().zip(u).map(|(l, v)| -l + v).collect()
    }
}
