//! Machine-readable solve reports and their text rendering.

use std::fmt::Write as _;

use choquard_core::analysis::VerificationReport;
use choquard_core::solver::{IterationRecord, SolveResult, SupersolutionShape};
use choquard_core::SolveVerdict;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub config: RunConfig,
    pub k: f64,
    pub verdict: SolveVerdict,
    pub reason: Option<String>,
    pub iterations: usize,
    pub final_delta: f64,
    pub fixed_point_residual: Option<f64>,
    pub pde_residual: Option<f64>,
    pub all_monotone: bool,
    /// `None` when no supersolution was certified for this `k`.
    pub all_capped: Option<bool>,
    pub supersolution: Option<SupersolutionShape>,
    pub supersolution_note: Option<String>,
    pub verification: Option<VerificationReport>,
    pub verification_note: Option<String>,
    /// Profile CSV, relative to the output directory.
    pub profile: Option<String>,
    pub diagnostics: Vec<IterationRecord>,
}

impl SolveReport {
    pub fn new(config: &RunConfig, run: &SolveResult) -> Self {
        Self {
            config: config.clone(),
            k: run.k,
            verdict: run.verdict,
            reason: run.reason.clone(),
            iterations: run.iterations,
            final_delta: run.final_delta,
            fixed_point_residual: run.fixed_point_residual,
            pde_residual: run.pde_residual,
            all_monotone: run.all_monotone(),
            all_capped: run.all_capped(),
            supersolution: run.supersolution,
            supersolution_note: run.supersolution_note.clone(),
            verification: None,
            verification_note: None,
            profile: None,
            diagnostics: run.diagnostics.clone(),
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4e}"))
}

/// Short human-readable summary of a report.
pub fn render_text(r: &SolveReport) -> String {
    let p = &r.config.params;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "N={} alpha={} p={} q={} k={:.6e}: {} after {} iterations",
        p.dim, p.alpha, p.p, p.q, r.k, r.verdict, r.iterations
    );
    if let Some(reason) = &r.reason {
        let _ = writeln!(s, "  reason: {reason}");
    }
    let _ = writeln!(
        s,
        "  residuals: fixed point {}, equation {}; monotone {}, capped {}",
        opt(r.fixed_point_residual),
        opt(r.pde_residual),
        r.all_monotone,
        r.all_capped.map_or("n/a".to_string(), |b| b.to_string())
    );
    if let Some(note) = &r.supersolution_note {
        let _ = writeln!(s, "  supersolution: {note}");
    }
    let Some(v) = &r.verification else {
        if let Some(note) = &r.verification_note {
            let _ = writeln!(s, "  verification skipped: {note}");
        }
        return s;
    };
    let o = &v.origin_fit;
    if o.trivial {
        let _ = writeln!(s, "  origin: trivial profile (u ≡ 0)");
    } else if let Some(b) = o.bounded {
        let _ = writeln!(s, "  origin: bounded {b}, fitted exponent {:.4}", o.exponent);
    } else {
        let _ = writeln!(
            s,
            "  origin: exponent {:.5} (target {}), coefficient {:.6e} (target {:.6e}, error {})",
            o.exponent,
            o.target_exponent,
            o.coefficient,
            o.target_coefficient,
            opt(o.relative_error)
        );
    }
    if let Some(d) = &v.decay_fit {
        let _ = writeln!(
            s,
            "  decay on [{:.3}, {:.3}]: exponent {:.5} (predicted {}, outer half {:.5}), prefactor {:.6e}",
            d.window.0, d.window.1, d.exponent, d.predicted_exponent, d.outer_exponent, d.prefactor
        );
        for (label, pred) in [("‖u‖₁^{p/(1-q)}", &d.l1_prediction), ("‖u^p‖₁^{1/(1-q)}", &d.pnorm_prediction)] {
            match (pred.value, &pred.note) {
                (Some(val), _) => {
                    let _ = writeln!(s, "    {label} = {val:.6e} (error {})", opt(pred.relative_error));
                }
                (None, Some(note)) => {
                    let _ = writeln!(s, "    {label}: {note}");
                }
                (None, None) => {}
            }
        }
        if let Some(note) = &d.regime_note {
            let _ = writeln!(s, "    {note}");
        }
    } else if let Some(note) = &v.decay_note {
        let _ = writeln!(s, "  decay: {note}");
    }
    if let Some(b0) = v.lower_bound_b0 {
        let _ = writeln!(s, "  lower bound b0 = {b0:.6e}");
    }
    for (name, ok) in &v.pass_flags {
        let _ = writeln!(s, "  [{}] {name}", if *ok { "pass" } else { "FAIL" });
    }
    s
}
