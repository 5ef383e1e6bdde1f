use crate::{Error, Result};

/// Tridiagonal system `lower[i] x[i-1] + main[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub main: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.main.len()
    }

    pub fn is_empty(&self) -> bool {
        self.main.is_empty()
    }

    /// True when off-diagonals are nonpositive and every row is weakly
    /// diagonally dominant with a positive diagonal, with at least one
    /// strictly dominant row. Such a matrix is a nonsingular M-matrix and its
    /// inverse is entrywise nonnegative.
    pub fn is_m_matrix(&self) -> bool {
        let n = self.len();
        let mut strict = false;
        for i in 0..n {
            let l = if i > 0 { self.lower[i] } else { 0.0 };
            let u = if i + 1 < n { self.upper[i] } else { 0.0 };
            if self.main[i] <= 0.0 || l > 0.0 || u > 0.0 {
                return false;
            }
            let off = l.abs() + u.abs();
            if self.main[i] < off {
                return false;
            }
            if self.main[i] > off {
                strict = true;
            }
        }
        strict
    }

    /// Applies the matrix to `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.main[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Thomas algorithm. Stable without pivoting for diagonally dominant
    /// systems.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Numerical("tridiagonal size mismatch".into()));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.main[0];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Numerical(format!("singular tridiagonal system at row 0 (pivot {pivot})")));
        }
        c[0] = self.upper[0] / pivot;
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.main[i] - self.lower[i] * c[i - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Numerical(format!(
                    "singular tridiagonal system at row {i} (pivot {pivot})"
                )));
            }
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / pivot;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let m = Tridiagonal {
            lower: vec![0.0, -1.0, -1.0, -1.0],
            main: vec![2.0, 2.0, 2.0, 2.0],
            upper: vec![-1.0, -1.0, -1.0, 0.0],
        };
        let x_true = vec![1.0, 2.0, 3.0, 4.0];
        let rhs = m.apply(&x_true);
        let x = m.solve(&rhs).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(m.is_m_matrix());
    }

    #[test]
    fn singular_pivot_is_reported() {
        let m = Tridiagonal {
            lower: vec![0.0, 1.0],
            main: vec![1.0, 1.0],
            upper: vec![1.0, 0.0],
        };
        assert!(matches!(m.solve(&[1.0, 1.0]), Err(Error::Numerical(_))));
    }
}
