//! Dense LU factorization of the augmented systems, with the residual and
//! condition diagnostics every solve reports.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::{factor, solve};
use faer::perm::PermRef;
use faer::{Mat, MatRef, Par};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Condition estimates above this are reported as [`Error::IllConditioned`].
pub const MAX_CONDITION: f64 = 1e12;

fn par_for(exec: Execution) -> Par {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return Par::rayon(0);
    }
    let _ = exec;
    Par::Seq
}

/// `PA = LU` with the original matrix kept for residuals and refinement.
pub struct DenseLu {
    a: Mat<f64>,
    lu: Mat<f64>,
    fwd: Vec<usize>,
    bwd: Vec<usize>,
    par: Par,
}

impl DenseLu {
    pub fn factor(a: Mat<f64>, exec: Execution) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() || n == 0 {
            return Err(Error::InvalidParameter("LU needs a non-empty square matrix".into()));
        }
        if a.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
        }
        let par = par_for(exec);
        let mut lu = a.clone();
        let mut fwd = vec![0usize; n];
        let mut bwd = vec![0usize; n];
        {
            let mut buf = MemBuffer::new(factor::lu_in_place_scratch::<usize, f64>(n, n, par, Default::default()));
            factor::lu_in_place(lu.as_mut(), &mut fwd, &mut bwd, par, MemStack::new(&mut buf), Default::default());
        }
        if (0..n).any(|i| lu[(i, i)] == 0.0) {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        Ok(Self { a, lu, fwd, bwd, par })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, f64> {
        self.a.as_ref()
    }

    fn perm(&self) -> PermRef<'_, usize> {
        PermRef::new_checked(&self.fwd, &self.bwd, self.dim())
    }

    fn solve_raw(&self, rhs: &mut Mat<f64>, transpose: bool) {
        let n = self.dim();
        let k = rhs.ncols();
        let req = if transpose {
            solve::solve_transpose_in_place_scratch::<usize, f64>(n, k, self.par)
        } else {
            solve::solve_in_place_scratch::<usize, f64>(n, k, self.par)
        };
        let mut buf = MemBuffer::new(req);
        let stack = MemStack::new(&mut buf);
        let lu = self.lu.as_ref();
        if transpose {
            solve::solve_transpose_in_place(lu, lu, self.perm(), rhs.as_mut(), self.par, stack);
        } else {
            solve::solve_in_place(lu, lu, self.perm(), rhs.as_mut(), self.par, stack);
        }
    }

    /// Solves for every column of `rhs`, with one step of iterative refinement.
    pub fn solve_columns(&self, rhs: &Mat<f64>) -> Mat<f64> {
        let mut x = rhs.clone();
        self.solve_raw(&mut x, false);
        let mut r = rhs - &self.a * &x;
        self.solve_raw(&mut r, false);
        x + r
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.solve_columns(&b);
        x.col_as_slice(0).to_vec()
    }

    /// Normwise backward error `‖Ax - b‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let xm = Mat::from_fn(x.len(), 1, |i, _| x[i]);
        let ax = &self.a * &xm;
        let r = (0..b.len()).map(|i| (ax[(i, 0)] - b[i]).abs()).fold(0.0, f64::max);
        let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let denom = self.norm_inf() * xn + bn;
        if denom == 0.0 {
            0.0
        } else {
            r / denom
        }
    }

    pub fn norm_1(&self) -> f64 {
        self.a.col_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        let mut rows = vec![0.0; n];
        for c in self.a.col_iter() {
            for (r, v) in rows.iter_mut().zip(c.iter()) {
                *r += v.abs();
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Hager–Higham estimate of `‖A‖₁ ‖A⁻¹‖₁`.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.dim();
        let col = |v: &[f64]| Mat::from_fn(n, 1, |i, _| v[i]);
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut y = col(&x);
            self.solve_raw(&mut y, false);
            let y = y.col_as_slice(0).to_vec();
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let mut z = col(&xi);
            self.solve_raw(&mut z, true);
            let z = z.col_as_slice(0);
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0f64), |(bj, bm), (i, v)| {
                if v.abs() > bm {
                    (i, v.abs())
                } else {
                    (bj, bm)
                }
            });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x.fill(0.0);
            x[j] = 1.0;
        }
        // Alternating test vector guards against the known failure cases of the power iteration.
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let mut y = col(&alt);
        self.solve_raw(&mut y, false);
        let alt_est = 2.0 * y.col_as_slice(0).iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        self.norm_1() * est.max(alt_est)
    }
}
