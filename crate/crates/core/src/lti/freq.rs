use nalgebra::{DMatrix, DVector, Hessenberg};
use num_complex::Complex64;

use super::ContinuousStateSpace;
use crate::error::{AncError, Result};

/// Repeated evaluation of a SISO frequency response.
///
/// `A` is reduced once to upper Hessenberg form `A = Q H Qᵀ`, after which
/// each `C (jωI − A)⁻¹ B + D` costs one Hessenberg solve.
#[derive(Debug, Clone)]
pub struct FrequencyEvaluator {
    h: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: f64,
}

impl FrequencyEvaluator {
    pub fn new(sys: &ContinuousStateSpace) -> Result<Self> {
        if !sys.is_siso() {
            return Err(AncError::Dimension("frequency evaluator needs a SISO model".into()));
        }
        let n = sys.state_dim();
        let (q, h) = if n == 0 {
            (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
        } else {
            Hessenberg::new(sys.a().clone()).unpack()
        };
        let b = q.transpose() * sys.b().column(0);
        let c = (sys.c() * &q).row(0).transpose();
        Ok(Self {
            h,
            b,
            c,
            d: sys.d()[(0, 0)],
        })
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        let n = self.h.nrows();
        if n == 0 {
            return Complex64::new(self.d, 0.0);
        }
        let s = Complex64::new(0.0, omega);
        let mut m: Vec<Complex64> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
                m.push(diag - self.h[(i, j)]);
            }
        }
        let mut rhs: Vec<Complex64> = self.b.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        for k in 0..n.saturating_sub(1) {
            if m[(k + 1) * n + k].norm() > m[k * n + k].norm() {
                for j in k..n {
                    m.swap(k * n + j, (k + 1) * n + j);
                }
                rhs.swap(k, k + 1);
            }
            let pivot = m[k * n + k];
            if pivot.norm() == 0.0 {
                continue;
            }
            let factor = m[(k + 1) * n + k] / pivot;
            for j in k..n {
                let v = m[k * n + j];
                m[(k + 1) * n + j] -= factor * v;
            }
            let r = rhs[k];
            rhs[k + 1] -= factor * r;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for j in i + 1..n {
                acc -= m[i * n + j] * x[j];
            }
            x[i] = acc / m[i * n + i];
        }
        x.iter()
            .zip(self.c.iter())
            .map(|(xi, ci)| xi * *ci)
            .sum::<Complex64>()
            + self.d
    }
}
