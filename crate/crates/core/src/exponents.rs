//! Exponent arithmetic: the bootstrap sequence of lower-bound decay
//! exponents, the region classification of `(N, α, p, q)` and the predicted
//! decay law of the minimal singular solution.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default half-width of the band around an inequality boundary inside which
/// a parameter point is reported as near-boundary.
pub const DEFAULT_BOUNDARY_EPS: f64 = 1e-9;

/// Default cap on the length of the bootstrap sequence.
pub const DEFAULT_MAX_J: usize = 64;

/// One instance of `-Δu + u = I_α[u^p] u^q + k δ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub dim: u32,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub k: f64,
}

impl ProblemParams {
    pub fn new(dim: u32, alpha: f64, p: f64, q: f64) -> Result<Self> {
        let params = Self {
            dim,
            alpha,
            p,
            q,
            k: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_k(mut self, k: f64) -> Result<Self> {
        self.k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim as f64;
        if self.dim < 3 {
            return Err(Error::Domain(format!("N = {} must be at least 3", self.dim)));
        }
        if !(self.alpha > 0.0 && self.alpha < n) {
            return Err(Error::Domain(format!(
                "alpha = {} must lie in (0, N) = (0, {})",
                self.alpha, self.dim
            )));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::Domain(format!("p = {} must be positive", self.p)));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Domain(format!("q = {} must lie in (0, 1)", self.q)));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::Domain(format!("k = {} must be nonnegative", self.k)));
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        self.dim as f64
    }

    /// `p / (1 - q)`, the contraction ratio of the bootstrap recursion.
    pub fn ratio(&self) -> f64 {
        self.p / (1.0 - self.q)
    }
}

/// Limit of the bootstrap sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum TauLimit {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSequence {
    pub tau0: f64,
    pub taus: Vec<f64>,
    /// First index with `τ_j ≥ -α/p`; `None` if not reached within the cap.
    pub j0: Option<usize>,
    pub threshold: f64,
    pub limit: TauLimit,
}

impl TauSequence {
    /// `α + τ_{j₀} p`; nonnegative values certify divergence of the Riesz
    /// integral of the bootstrap lower bound.
    pub fn divergence_criterion(&self, params: &ProblemParams) -> Option<f64> {
        self.j0.map(|j| params.alpha + self.taus[j] * params.p)
    }
}

/// `τ₀ = -max{(N-α)/(1-q), N-2}`.
pub fn tau0(params: &ProblemParams) -> Result<f64> {
    params.validate()?;
    Ok(tau0_unchecked(params))
}

pub(crate) fn tau0_unchecked(params: &ProblemParams) -> f64 {
    let n = params.n();
    -((n - params.alpha) / (1.0 - params.q)).max(n - 2.0)
}

/// One step of the bootstrap recursion `τ_j = α/(1-q) + p/(1-q) τ_{j-1}`.
pub fn tau_step(params: &ProblemParams, prev: f64) -> f64 {
    params.alpha / (1.0 - params.q) + params.ratio() * prev
}

/// `τ_j` from the geometric partial sum of the increments
/// `τ_j - τ_{j-1} = (p/(1-q))^{j-1} (τ₁ - τ₀)`.
pub fn tau_closed_form(params: &ProblemParams, j: usize) -> f64 {
    let t0 = tau0_unchecked(params);
    let d1 = tau_step(params, t0) - t0;
    let rho = params.ratio();
    let partial = if (rho - 1.0).abs() < 1e-12 {
        j as f64
    } else {
        // (ρ^j - 1)/(ρ - 1) without cancellation for ρ near 1
        (j as f64 * rho.ln()).exp_m1() / (rho - 1.0)
    };
    t0 + d1 * partial
}

pub fn tau_sequence(params: &ProblemParams, max_j: usize) -> Result<TauSequence> {
    params.validate()?;
    if max_j < 1 {
        return Err(Error::Domain("max_j must be at least 1".into()));
    }
    let t0 = tau0_unchecked(params);
    let threshold = -params.alpha / params.p;
    let mut taus = vec![t0];
    let mut j0 = if t0 >= threshold { Some(0) } else { None };
    while j0.is_none() && taus.len() <= max_j {
        let next = tau_step(params, *taus.last().unwrap());
        taus.push(next);
        if next >= threshold {
            j0 = Some(taus.len() - 1);
        }
    }
    let rho = params.ratio();
    let limit = if rho < 1.0 {
        TauLimit::Finite(params.alpha / (1.0 - params.p - params.q))
    } else {
        let d1 = tau_step(params, t0) - t0;
        if d1 > 0.0 {
            TauLimit::PlusInfinity
        } else if d1 < 0.0 {
            TauLimit::MinusInfinity
        } else {
            TauLimit::Finite(t0)
        }
    };
    Ok(TauSequence {
        tau0: t0,
        taus,
        j0,
        threshold,
        limit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Nonexistence,
    RemovableOnly,
    ExistenceWithDirac,
    Outside,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Nonexistence => "Nonexistence",
            Verdict::RemovableOnly => "RemovableOnly",
            Verdict::ExistenceWithDirac => "ExistenceWithDirac",
            Verdict::Outside => "Outside",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Truth values of the individual inequalities, each evaluated with its own
/// strictness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionFlags {
    /// `(1-α/N)p + q < 1` and `p + q < 1 + α/(N-2)`.
    pub nonexist_q: bool,
    /// `(1-α/N)p + q ≥ 1` or `p + q ≥ 1 + α/(N-2)`.
    pub cond_12: bool,
    /// `p + q ≥ (N+α)/(N-2)` or `p ≥ N/(N-2)`.
    pub cond_13: bool,
    /// `p + q < (N+α)/(N-2)` and `p < N/(N-2)`.
    pub cond_14: bool,
    /// `(1-α/N)p + q > 1` and `p + q < (N+α)/(N-2)`.
    pub regime_16: bool,
    /// `(1-α/N)p + q ≤ 1` and `1 + α/(N-2) ≤ p + q < (N+α)/(N-2)`.
    pub regime_19: bool,
    pub existence_hypotheses: bool,
}

/// Signed distances to the four boundary lines. Positive means the strict
/// "small exponent" side of the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// `1 - ((1-α/N)p + q)`
    pub weighted_sum: f64,
    /// `1 + α/(N-2) - (p + q)`
    pub sum_lower: f64,
    /// `(N+α)/(N-2) - (p + q)`
    pub sum_critical: f64,
    /// `N/(N-2) - p`
    pub p_critical: f64,
}

impl Margins {
    pub fn min_abs(&self) -> f64 {
        [
            self.weighted_sum,
            self.sum_lower,
            self.sum_critical,
            self.p_critical,
        ]
        .iter()
        .fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub verdict: Verdict,
    pub condition_flags: ConditionFlags,
    pub margins: Margins,
    /// Some margin is within the boundary band; the verdict uses the
    /// non-strict reading of each inequality regardless.
    pub boundary: bool,
}

pub fn margins(params: &ProblemParams) -> Margins {
    let n = params.n();
    let (a, p, q) = (params.alpha, params.p, params.q);
    Margins {
        weighted_sum: 1.0 - ((1.0 - a / n) * p + q),
        sum_lower: 1.0 + a / (n - 2.0) - (p + q),
        sum_critical: (n + a) / (n - 2.0) - (p + q),
        p_critical: n / (n - 2.0) - p,
    }
}

pub fn classify(params: &ProblemParams) -> Result<RegionVerdict> {
    classify_with(params, DEFAULT_BOUNDARY_EPS)
}

pub fn classify_with(params: &ProblemParams, boundary_eps: f64) -> Result<RegionVerdict> {
    params.validate()?;
    let m = margins(params);
    let q_ok = params.q > 0.0 && params.q < 1.0;

    let nonexist_q = m.weighted_sum > 0.0 && m.sum_lower > 0.0;
    let cond_12 = m.weighted_sum <= 0.0 || m.sum_lower <= 0.0;
    let cond_13 = m.sum_critical <= 0.0 || m.p_critical <= 0.0;
    let cond_14 = m.sum_critical > 0.0 && m.p_critical > 0.0;
    let regime_16 = m.weighted_sum < 0.0 && m.sum_critical > 0.0;
    let regime_19 = m.weighted_sum >= 0.0 && m.sum_lower <= 0.0 && m.sum_critical > 0.0;
    let existence_hypotheses = m.p_critical > 0.0 && q_ok && cond_12 && m.sum_critical > 0.0;

    let verdict = if nonexist_q {
        Verdict::Nonexistence
    } else if cond_12 && cond_13 {
        Verdict::RemovableOnly
    } else if existence_hypotheses {
        Verdict::ExistenceWithDirac
    } else {
        Verdict::Outside
    };

    Ok(RegionVerdict {
        verdict,
        condition_flags: ConditionFlags {
            nonexist_q,
            cond_12,
            cond_13,
            cond_14,
            regime_16,
            regime_19,
            existence_hypotheses,
        },
        margins: m,
        boundary: m.min_abs() < boundary_eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrefactorRule {
    /// `lim u r^{(N-α)/(1-q)} = ‖u‖₁^{p/(1-q)}`
    L1NormPower,
    /// `limsup u r^m ≤ k` and `liminf u r^m > 0`
    BoundedByK,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPrediction {
    /// Predicted power of `1/r` at infinity.
    pub exponent: f64,
    pub prefactor_rule: PrefactorRule,
    /// Power of `1/r` at the origin, `N - 2`.
    pub origin_exponent: f64,
    /// `c_N k`.
    pub origin_coefficient: f64,
    pub regime_16: bool,
    pub regime_19: bool,
}

/// Unit-sphere surface area `|S^{d-1}| = 2 π^{d/2} / Γ(d/2)`.
pub fn sphere_area(d: u32) -> f64 {
    let half = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / statrs::function::gamma::gamma(half)
}

/// Origin coefficient of the fundamental solution of `-Δ`:
/// `c_N = 1 / ((N-2) |S^{N-1}|)`.
pub fn c_n(dim: u32) -> f64 {
    1.0 / ((dim as f64 - 2.0) * sphere_area(dim))
}

pub fn predicted_decay(params: &ProblemParams) -> Result<DecayPrediction> {
    let region = classify(params)?;
    if region.verdict != Verdict::ExistenceWithDirac {
        return Err(Error::Region {
            expected: Verdict::ExistenceWithDirac.to_string(),
            actual: region.verdict.to_string(),
        });
    }
    let n = params.n();
    let slow = (n - params.alpha) / (1.0 - params.q);
    let flags = region.condition_flags;
    let (exponent, prefactor_rule) = if flags.regime_16 {
        (slow, PrefactorRule::L1NormPower)
    } else if flags.regime_19 {
        (slow.max(n - 2.0), PrefactorRule::BoundedByK)
    } else {
        // (1-α/N)p + q = 1 exactly: only the two-sided bound from τ₀ is known.
        (slow.max(n - 2.0), PrefactorRule::None)
    };
    Ok(DecayPrediction {
        exponent,
        prefactor_rule,
        origin_exponent: n - 2.0,
        origin_coefficient: c_n(params.dim) * params.k,
        regime_16: flags.regime_16,
        regime_19: flags.regime_19,
    })
}

/// One cell of a `(p, q)` phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub p: f64,
    pub q: f64,
    pub verdict: Verdict,
    pub regime: &'static str,
    pub boundary: bool,
    pub margins: Margins,
}

/// Classifies the cell centres of a `res_p × res_q` lattice over
/// `p_range × q_range`. Rows are ordered with `p` outermost.
pub fn phase_diagram(
    dim: u32,
    alpha: f64,
    p_range: (f64, f64),
    q_range: (f64, f64),
    res_p: usize,
    res_q: usize,
) -> Result<Vec<PhaseRow>> {
    if res_p == 0 || res_q == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    if !(p_range.0 >= 0.0 && p_range.1 > p_range.0) {
        return Err(Error::Domain(format!("bad p range {:?}", p_range)));
    }
    if !(q_range.0 >= 0.0 && q_range.1 > q_range.0 && q_range.1 <= 1.0) {
        return Err(Error::Domain(format!("bad q range {:?}", q_range)));
    }
    let mut rows = Vec::with_capacity(res_p * res_q);
    for i in 0..res_p {
        let p = p_range.0 + (p_range.1 - p_range.0) * (i as f64 + 0.5) / res_p as f64;
        for j in 0..res_q {
            let q = q_range.0 + (q_range.1 - q_range.0) * (j as f64 + 0.5) / res_q as f64;
            let params = ProblemParams::new(dim, alpha, p, q)?;
            let region = classify(&params)?;
            rows.push(PhaseRow {
                p,
                q,
                verdict: region.verdict,
                regime: regime_label(&region),
                boundary: region.boundary,
                margins: region.margins,
            });
        }
    }
    Ok(rows)
}

pub fn regime_label(region: &RegionVerdict) -> &'static str {
    let f = region.condition_flags;
    match region.verdict {
        Verdict::ExistenceWithDirac if f.regime_16 => "1.6",
        Verdict::ExistenceWithDirac if f.regime_19 => "1.9",
        Verdict::ExistenceWithDirac => "boundary",
        _ => "-",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: u32, alpha: f64, p: f64, q: f64) -> ProblemParams {
        ProblemParams::new(dim, alpha, p, q).unwrap()
    }

    #[test]
    fn tau0_examples() {
        assert_eq!(tau0(&params(3, 1.0, 1.0, 0.5)).unwrap(), -4.0);
        assert_eq!(tau0(&params(5, 4.0, 1.0, 0.5)).unwrap(), -3.0);
        assert!((tau0(&params(10, 0.5, 1.0, 0.9)).unwrap() + 95.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ProblemParams::new(2, 1.0, 1.0, 0.5).is_err());
        assert!(ProblemParams::new(3, 3.0, 1.0, 0.5).is_err());
        assert!(ProblemParams::new(3, 1.0, 0.0, 0.5).is_err());
        assert!(ProblemParams::new(3, 1.0, 1.0, 1.0).is_err());
        assert!(params(3, 1.0, 1.0, 0.5).with_k(-1.0).is_err());
        let bad = ProblemParams {
            dim: 3,
            alpha: 1.0,
            p: 1.0,
            q: 1.5,
            k: 0.0,
        };
        assert!(matches!(tau0(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn tau_sequence_high_dimension() {
        let seq = tau_sequence(&params(10, 0.5, 0.05, 0.9), DEFAULT_MAX_J).unwrap();
        let expected = [-95.0, -42.5, -16.25, -3.125];
        assert_eq!(seq.taus.len(), 4);
        for (a, b) in seq.taus.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(seq.j0, Some(3));
        assert!((seq.threshold + 10.0).abs() < 1e-12);
        let crit = seq.divergence_criterion(&params(10, 0.5, 0.05, 0.9)).unwrap();
        assert!((crit - 0.34375).abs() < 1e-12);
    }

    #[test]
    fn tau_sequence_equality_case() {
        let seq = tau_sequence(&params(3, 1.0, 0.5, 0.5), 64).unwrap();
        assert_eq!(seq.taus, vec![-4.0, -2.0]);
        assert_eq!(seq.threshold, -2.0);
        assert_eq!(seq.j0, Some(1));
    }

    #[test]
    fn tau_sequence_zeroth_step_crossing() {
        let seq = tau_sequence(&params(3, 1.0, 0.2, 0.5), 64).unwrap();
        assert_eq!(seq.tau0, -4.0);
        assert_eq!(seq.threshold, -5.0);
        assert_eq!(seq.j0, Some(0));
        assert_eq!(seq.taus, vec![-4.0]);
    }

    #[test]
    fn tau_sequence_cap_without_crossing() {
        // existence region: the sequence decreases and never crosses
        let seq = tau_sequence(&params(3, 2.0, 2.0, 0.5), 10).unwrap();
        assert_eq!(seq.j0, None);
        assert_eq!(seq.taus.len(), 11);
        assert_eq!(seq.limit, TauLimit::MinusInfinity);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(&params(3, 1.0, 0.2, 0.5)).unwrap().verdict,
            Verdict::Nonexistence
        );
        assert_eq!(
            classify(&params(3, 1.0, 3.5, 0.9)).unwrap().verdict,
            Verdict::RemovableOnly
        );
        let v = classify(&params(3, 1.0, 1.5, 0.5)).unwrap();
        assert_eq!(v.verdict, Verdict::ExistenceWithDirac);
        assert!(v.condition_flags.regime_16);
        // p + q = 2 sits on the (inactive) nonexistence line
        assert!(v.boundary);
    }

    #[test]
    fn boundary_points_are_flagged() {
        // (1 - 1/3) p + q = 1 with p = 0.75, q = 0.5
        let v = classify(&params(3, 1.0, 0.75, 0.5)).unwrap();
        assert!(v.boundary);
        // non-strict reading: the existence-side inequality holds, so not Nonexistence
        assert_eq!(v.verdict, Verdict::ExistenceWithDirac);
        assert!(!v.condition_flags.regime_16);
    }

    #[test]
    fn decay_examples() {
        let d = predicted_decay(&params(3, 1.0, 1.5, 0.5)).unwrap();
        assert_eq!(d.exponent, 4.0);
        assert_eq!(d.prefactor_rule, PrefactorRule::L1NormPower);
        let d = predicted_decay(&params(3, 2.0, 2.0, 0.5)).unwrap();
        assert_eq!(d.exponent, 2.0);
        assert_eq!(d.prefactor_rule, PrefactorRule::L1NormPower);
        let d = predicted_decay(&params(4, 2.0, 1.2, 0.6)).unwrap();
        assert!((d.exponent - 5.0).abs() < 1e-12);
        assert_eq!(d.prefactor_rule, PrefactorRule::L1NormPower);
        assert!(matches!(
            predicted_decay(&params(3, 1.0, 0.2, 0.5)),
            Err(Error::Region { .. })
        ));
    }

    #[test]
    fn c_n_three_dimensions() {
        assert!((c_n(3) - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn phase_diagram_row_count() {
        let rows = phase_diagram(3, 1.0, (0.0, 4.0), (0.0, 1.0), 200, 100).unwrap();
        assert_eq!(rows.len(), 20_000);
    }
}
