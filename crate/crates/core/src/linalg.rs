//! Dense complex LU factorization with a 1-norm condition estimate.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::CMatrix;

/// Partial-pivoting LU of a square complex matrix.
pub struct DenseLu {
    lu: PartialPivLu<Complex64>,
    dim: usize,
    norm1: f64,
}

impl DenseLu {
    pub fn factor(a: &CMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
        }
        let dim = a.nrows();
        let view = MatRef::from_column_major_slice(a.as_slice(), dim, dim);
        let norm1 = (0..dim)
            .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let lu = view.partial_piv_lu();
        let u = lu.U();
        for j in 0..dim {
            let pivot = u[(j, j)];
            if pivot.norm() == 0.0 || !pivot.re.is_finite() || !pivot.im.is_finite() {
                return Err(Error::Singular { column: j });
            }
        }
        Ok(DenseLu { lu, dim, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut rhs = Mat::from_fn(self.dim, 1, |i, _| b[i]);
        self.lu.solve_in_place(&mut rhs);
        rhs.col(0).iter().copied().collect()
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut rhs = Mat::from_fn(self.dim, 1, |i, _| b[i]);
        self.lu.solve_adjoint_in_place(&mut rhs);
        rhs.col(0).iter().copied().collect()
    }

    /// Estimate of `‖A‖₁ ‖A⁻¹‖₁` (Hager's method with Higham's refinements).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.dim;
        if n == 0 {
            return 0.0;
        }
        let norm1 = |v: &[Complex64]| v.iter().map(|z| z.norm()).sum::<f64>();
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for iteration in 0..5 {
            let y = self.solve(&x);
            let est = norm1(&y);
            if iteration > 0 && est <= estimate {
                break;
            }
            estimate = est;
            let sign: Vec<Complex64> = y
                .iter()
                .map(|z| if z.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { z / z.norm() })
                .collect();
            let z = self.solve_adjoint(&sign);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if iteration > 0 && (zmax <= ztx || j == last_j) {
                break;
            }
            last_j = j;
            x = vec![Complex64::new(0.0, 0.0); n];
            x[j] = Complex64::new(1.0, 0.0);
        }
        // Alternating test vector guards against the classic counterexamples.
        let alt: Vec<Complex64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                Complex64::new(s * (1.0 + t), 0.0)
            })
            .collect();
        let alt_est = 2.0 * norm1(&self.solve(&alt)) / (3.0 * n as f64);
        self.norm1 * estimate.max(alt_est)
    }
}

/// `A x` for a column-major dense matrix.
pub fn mat_vec(a: &CMatrix, x: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.nrows()];
    for (j, xj) in x.iter().enumerate() {
        if xj.norm() == 0.0 {
            continue;
        }
        for (o, aij) in out.iter_mut().zip(a.column(j).iter()) {
            *o += aij * xj;
        }
    }
    out
}

pub fn vec_inf_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
