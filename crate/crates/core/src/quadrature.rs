//! One-dimensional quadrature rules: Gauss–Legendre, tanh–sinh, and a
//! graded composite rule for integrands with a point singularity at or just
//! beyond an interval endpoint.

use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }

    /// Appends mapped `(x, w)` pairs for `[a, b]` to `out`.
    pub fn push_rule(&self, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        out.extend(
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| (c + h * x, w * h)),
        );
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gl8() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(8))
}

pub fn gl10() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(10))
}

pub fn gl16() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(16))
}

pub fn gl20() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(20))
}

/// Tanh–sinh offsets on `[0, 1]`: pairs `(d, w)` where `d` is the distance
/// from the nearer endpoint and `w` the weight of each of the two mirrored
/// nodes (the centre node is returned once with `d = 1/2`).
fn tanh_sinh_offsets() -> &'static [(f64, f64)] {
    static R: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    R.get_or_init(|| {
        let step = 1.0 / 32.0;
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let s = k as f64 * step;
            let y = std::f64::consts::FRAC_PI_2 * s.sinh();
            let e = (2.0 * y).exp();
            // d = (1 - tanh y)/2 computed without cancellation
            let d = 1.0 / (1.0 + e);
            let w = step * std::f64::consts::PI * s.cosh() * d * (1.0 - d);
            if d < 1e-40 || w < 1e-300 {
                break;
            }
            out.push((d, w));
            k += 1;
        }
        out
    })
}

/// Tanh–sinh rule mapped to `[a, b]`; endpoints are never sampled, and nodes
/// cluster doubly exponentially towards both of them. Node coordinates are
/// produced as `a + (b-a) d` / `b - (b-a) d` so that distances to the
/// endpoints stay accurate.
pub fn push_tanh_sinh(a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
    let len = b - a;
    for (k, &(d, w)) in tanh_sinh_offsets().iter().enumerate() {
        if k == 0 {
            out.push((a + 0.5 * len, w * len));
        } else {
            // nodes that round onto an endpoint are dropped
            let lo = a + len * d;
            let hi = b - len * d;
            if lo > a {
                out.push((lo, w * len));
            }
            if hi < b {
                out.push((hi, w * len));
            }
        }
    }
}

/// Builds a quadrature rule for `∫_a^b g(x) dx` where `g` may be singular at
/// `sing` (inside, at, or near the interval). Panels are graded
/// geometrically towards the singular point and endpoint-singular panels
/// use tanh–sinh.
pub fn push_singular_rule(a: f64, b: f64, sing: f64, out: &mut Vec<(f64, f64)>) {
    debug_assert!(b > a);
    if sing > a && sing < b {
        push_singular_rule(a, sing, sing, out);
        push_singular_rule(sing, b, sing, out);
        return;
    }
    if sing == a || sing == b {
        push_tanh_sinh(a, b, out);
        return;
    }
    let width = b - a;
    let (near, dir, dist) = if sing < a {
        (a, 1.0, a - sing)
    } else {
        (b, -1.0, sing - b)
    };
    if dist >= width {
        gl16().push_rule(a, b, out);
        return;
    }
    // panel k spans distances [dist 2^k, dist 2^{k+1}] from the singular point
    let mut inner = near;
    let mut span = dist;
    loop {
        let outer_raw = inner + dir * span;
        let done = (outer_raw - near).abs() >= width;
        let outer = if done { near + dir * width } else { outer_raw };
        let (lo, hi) = if dir > 0.0 {
            (inner, outer)
        } else {
            (outer, inner)
        };
        gl16().push_rule(lo, hi, out);
        if done {
            break;
        }
        inner = outer;
        span *= 2.0;
    }
}

pub fn integrate_rule<F: FnMut(f64) -> f64>(rule: &[(f64, f64)], mut f: F) -> f64 {
    rule.iter().map(|&(x, w)| w * f(x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let g = GaussLegendre::new(10);
        // degree 19 is integrated exactly
        let v = g.integrate(0.0, 2.0, |x| x.powi(19));
        assert!((v - 2f64.powi(20) / 20.0).abs() / v < 1e-13);
        let wsum: f64 = g.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        let mut rule = Vec::new();
        push_tanh_sinh(0.0, 1.0, &mut rule);
        let v = integrate_rule(&rule, |x| x.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        let v = integrate_rule(&rule, |x| x.ln());
        assert!((v + 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn graded_rule_near_singularity() {
        for sing in [-1e-6, 0.0, 0.3, 1.0, 1.0 + 1e-9] {
            let mut rule = Vec::new();
            push_singular_rule(0.0, 1.0, sing, &mut rule);
            let v = integrate_rule(&rule, |x| (x - sing).abs().powf(-0.5));
            let exact = if sing <= 0.0 {
                2.0 * ((1.0 - sing).sqrt() - (-sing).sqrt())
            } else if sing >= 1.0 {
                2.0 * (sing.sqrt() - (sing - 1.0).sqrt())
            } else {
                2.0 * (sing.sqrt() + (1.0 - sing).sqrt())
            };
            // a singularity away from 0 is only resolved to the
            // spacing of doubles near it
            let tol = if sing > 0.0 { 1e-7 } else { 1e-9 };
            assert!((v - exact).abs() / exact < tol, "sing {sing}: {v} vs {exact}");
        }
    }
}
