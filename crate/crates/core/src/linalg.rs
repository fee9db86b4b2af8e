//! Dense LU with partial pivoting, sized for the `M×M` Newton matrices.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative pivot threshold: pivots below `PIVOT_TOL · ‖A‖∞` are singular.
pub const PIVOT_TOL: f64 = 1e-14;

/// `P·A = L·U`, with `L` (unit diagonal) and `U` packed into one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.cols(),
            });
        }
        let threshold = PIVOT_TOL * a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|r| (r, lu[(r, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot >= threshold) || pivot == 0.0 {
                return Err(Error::SingularMatrix { column: k, pivot });
            }
            if p != k {
                for c in 0..n {
                    let tmp = lu[(k, c)];
                    lu[(k, c)] = lu[(p, c)];
                    lu[(p, c)] = tmp;
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for r in k + 1..n {
                let l = lu[(r, k)] / d;
                lu[(r, k)] = l;
                if l != 0.0 {
                    for c in k + 1..n {
                        lu[(r, c)] -= l * lu[(k, c)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.perm.len();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.lu[(r, c)] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.lu[(r, c)] * x[c];
            }
            x[r] = s / self.lu[(r, r)];
        }
        Ok(x)
    }
}

/// Solves `A x = rhs`.
pub fn lu_solve(a: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve(rhs)
}
