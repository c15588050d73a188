//! Single-layer quadrature on smooth closed curves sampled at `N` equispaced
//! parameters.
//!
//! Self-interaction uses Kress product quadrature for the periodic log
//! singularity. Targets closer than five local node spacings are handled by
//! global trigonometric upsampling: the kernel is sampled on an `F`-times
//! finer grid of the analytic curve and mapped back to the coarse nodes by the
//! transpose of the interpolation operator, so the row acts on the density's
//! trigonometric interpolant.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{kernel3, INV_2PI};
use crate::exec::Execution;
use crate::geometry::{AnalyticCurve, ParametricCurve, Point2};
use crate::quadrature::{kress_log_weights, kress_log_weights_at};

/// Targets within this many local node spacings are treated as near.
pub const NEAR_SPACINGS: f64 = 5.0;
/// Fine grid sizes used for matrix rows and for field evaluation.
pub const ROW_CAP: usize = 1 << 17;
pub const EVAL_CAP: usize = 1 << 20;
const MAX_LEVELS: usize = 21;

pub(crate) struct FineLevel {
    pub m: usize,
    pub z: Vec<Point2>,
    /// Arc-length weights `|z'| 2π/M`.
    pub w: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

pub(crate) struct SmoothSource<'a> {
    pub curve: &'a ParametricCurve,
    analytic: AnalyticCurve,
    n: usize,
    kress: Vec<f64>,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
    levels: Vec<OnceLock<FineLevel>>,
    exec: Execution,
}

impl<'a> SmoothSource<'a> {
    pub fn new(curve: &'a ParametricCurve, analytic: AnalyticCurve, exec: Execution) -> Self {
        let n = curve.len();
        let mut planner = FftPlanner::new();
        Self {
            curve,
            analytic,
            n,
            kress: kress_log_weights(n),
            fwd_n: planner.plan_fft_forward(n),
            inv_n: planner.plan_fft_inverse(n),
            levels: (0..MAX_LEVELS).map(|_| OnceLock::new()).collect(),
            exec,
        }
    }

    fn spacing(&self, k: usize) -> f64 {
        self.curve.speed[k] * 2.0 * PI / self.n as f64
    }

    /// Upsampling factor for a target, or `None` when plain quadrature suffices.
    pub fn near_factor(&self, x: Point2, cap: usize) -> Option<usize> {
        let (d, k) = self.curve.nearest_node(x);
        let h = self.spacing(k);
        if d >= NEAR_SPACINGS * h {
            return None;
        }
        // The nearest node overestimates the distance to the curve by at most h/2.
        let d_est = (d - 0.5 * h).max(0.25 * d).max(f64::MIN_POSITIVE);
        let want = ((6.0 * h / d_est).ceil() as usize).max(8).next_power_of_two();
        let lim = (cap / self.n).max(2);
        let max_f = 1usize << (usize::BITS - 1 - lim.leading_zeros());
        Some(want.min(max_f))
    }

    pub(crate) fn level(&self, f: usize) -> &FineLevel {
        let idx = f.trailing_zeros() as usize;
        self.levels[idx].get_or_init(|| {
            let m = f * self.n;
            let h = 2.0 * PI / m as f64;
            let pts = self.exec.map_range(m, |k| self.analytic.sample(k as f64 * h));
            let mut planner = FftPlanner::new();
            FineLevel {
                m,
                z: pts.iter().map(|p| p.z).collect(),
                w: pts.iter().map(|p| p.speed() * h).collect(),
                fwd: planner.plan_fft_forward(m),
                inv: planner.plan_fft_inverse(m),
            }
        })
    }

    /// `Iᵀ r` for a fine-grid row `r`, where `I` interpolates `N` coarse samples
    /// to the fine grid. The Nyquist mode is split evenly between `±N/2`.
    fn transpose_interp(&self, lvl: &FineLevel, mut r: Vec<Complex64>, out: &mut [f64]) {
        let (n, m) = (self.n, lvl.m);
        lvl.fwd.process(&mut r);
        let half = n / 2;
        let mut g: Vec<Complex64> = (0..n)
            .map(|j| {
                if j < half {
                    r[j]
                } else if j > half {
                    r[m - (n - j)]
                } else {
                    0.5 * (r[half] + r[m - half])
                }
            })
            .collect();
        self.inv_n.process(&mut g);
        let inv = 1.0 / n as f64;
        for (o, v) in out.iter_mut().zip(&g) {
            *o = v.re * inv;
        }
    }

    /// Trigonometric interpolant of `phi` on the fine grid.
    pub fn interpolate(&self, lvl: &FineLevel, phi: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, lvl.m);
        let mut c: Vec<Complex64> = phi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd_n.process(&mut c);
        let half = n / 2;
        let mut g = vec![Complex64::new(0.0, 0.0); m];
        g[..half].copy_from_slice(&c[..half]);
        for j in half + 1..n {
            g[m - (n - j)] = c[j];
        }
        g[half] = 0.5 * c[half];
        g[m - half] += 0.5 * c[half];
        lvl.inv.process(&mut g);
        let inv = 1.0 / n as f64;
        g.iter().map(|v| v.re * inv).collect()
    }

    /// Row of weights for a scalar kernel `k(y)` at an off-curve target:
    /// `Σ_j out_j φ_j ≈ ∫ k(y) φ(y) ds_y`.
    pub fn kernel_row(&self, x: Point2, kernel: impl Fn(Point2) -> f64, out: &mut [f64]) {
        match self.near_factor(x, ROW_CAP) {
            None => {
                for ((o, z), w) in out.iter_mut().zip(&self.curve.nodes).zip(&self.curve.weights) {
                    *o = kernel(*z) * w;
                }
            }
            Some(f) => {
                let lvl = self.level(f);
                let r: Vec<Complex64> = lvl.z.iter().zip(&lvl.w).map(|(z, w)| Complex64::new(kernel(*z) * w, 0.0)).collect();
                self.transpose_interp(lvl, r, out);
            }
        }
    }

    /// Kress row for the single layer at node `i`.
    pub fn self_row(&self, i: usize, out: &mut [f64]) {
        let n = self.n;
        let h = 2.0 * PI / n as f64;
        let zi = self.curve.nodes[i];
        let ti = self.curve.params[i];
        for j in 0..n {
            let l2 = if j == i {
                self.curve.speed[i].ln()
            } else {
                let d = ti - self.curve.params[j];
                (zi - self.curve.nodes[j]).norm().ln() - 0.5 * (4.0 * (0.5 * d).sin().powi(2)).ln()
            };
            let r = self.kress[(i + n - j) % n];
            out[j] = INV_2PI * (0.5 * r + h * l2) * self.curve.speed[j];
        }
    }

    /// Kress row for the single layer at the curve point with parameter `s`.
    pub fn on_curve_row(&self, s: f64, out: &mut [f64]) {
        let n = self.n;
        let h = 2.0 * PI / n as f64;
        let r = kress_log_weights_at(n, s);
        let p = self.analytic.sample(s);
        for j in 0..n {
            let d = s - self.curve.params[j];
            let sin2 = 4.0 * (0.5 * d).sin().powi(2);
            let l2 = if sin2 < 1e-28 {
                p.speed().ln()
            } else {
                (p.z - self.curve.nodes[j]).norm().ln() - 0.5 * sin2.ln()
            };
            out[j] = INV_2PI * (0.5 * r[j] + h * l2) * self.curve.speed[j];
        }
    }

    pub fn point_at(&self, s: f64) -> Point2 {
        self.analytic.sample(s).z
    }

    /// Adjoint double-layer row at node `i`; the diagonal is the limit `κ/(4π)`.
    pub fn kstar_self_row(&self, i: usize, out: &mut [f64]) {
        let zi = self.curve.nodes[i];
        let ni = self.curve.normal[i];
        for (j, o) in out.iter_mut().enumerate() {
            *o = if j == i {
                self.curve.curvature[i] * 0.5 * INV_2PI * self.curve.weights[i]
            } else {
                let d = zi - self.curve.nodes[j];
                INV_2PI * d.dot(ni) / d.norm2() * self.curve.weights[j]
            };
        }
    }

    /// `(S φ, ∂x S φ, ∂y S φ)` at an off-curve point; `fine` caches interpolated densities.
    pub fn eval(&self, x: Point2, phi: &[f64], fine: &[OnceLock<Vec<f64>>]) -> [f64; 3] {
        let mut acc = [0.0; 3];
        match self.near_factor(x, EVAL_CAP) {
            None => {
                for ((z, w), p) in self.curve.nodes.iter().zip(&self.curve.weights).zip(phi) {
                    let k = kernel3(x, *z);
                    let s = w * p;
                    for c in 0..3 {
                        acc[c] += k[c] * s;
                    }
                }
            }
            Some(f) => {
                let lvl = self.level(f);
                let fphi = fine[f.trailing_zeros() as usize].get_or_init(|| self.interpolate(lvl, phi));
                for ((z, w), p) in lvl.z.iter().zip(&lvl.w).zip(fphi) {
                    let k = kernel3(x, *z);
                    let s = w * p;
                    for c in 0..3 {
                        acc[c] += k[c] * s;
                    }
                }
            }
        }
        acc
    }

    pub fn fine_cache() -> Vec<OnceLock<Vec<f64>>> {
        (0..MAX_LEVELS).map(|_| OnceLock::new()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_disk, InclusionPair, Shape};

    fn src(c: &ParametricCurve) -> SmoothSource<'_> {
        SmoothSource::new(c, *c.analytic().unwrap(), Execution::Sequential)
    }

    #[test]
    fn transpose_interpolation_is_adjoint() {
        let c = make_disk(Point2::ORIGIN, 1.0, 32).unwrap();
        let s = src(&c);
        let lvl = s.level(8);
        let phi: Vec<f64> = (0..32).map(|k| ((k * 7 % 11) as f64).sin()).collect();
        let r: Vec<f64> = (0..lvl.m).map(|k| ((k * 13 % 17) as f64).cos()).collect();
        let fine = s.interpolate(lvl, &phi);
        let lhs: f64 = fine.iter().zip(&r).map(|(a, b)| a * b).sum();
        let mut it = vec![0.0; 32];
        s.transpose_interp(lvl, r.iter().map(|&v| Complex64::new(v, 0.0)).collect(), &mut it);
        let rhs: f64 = it.iter().zip(&phi).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        // Interpolation reproduces the coarse samples.
        for k in 0..32 {
            assert!((fine[8 * k] - phi[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_density_on_unit_circle() {
        let c = make_disk(Point2::ORIGIN, 1.0, 64).unwrap();
        let s = src(&c);
        let ones = vec![1.0; 64];
        let mut row = vec![0.0; 64];
        // Self rows: S[1] = ln|x| = 0 on the unit circle.
        for i in [0, 17, 40] {
            s.self_row(i, &mut row);
            assert!(row.iter().sum::<f64>().abs() < 1e-13);
        }
        s.on_curve_row(0.123, &mut row);
        assert!(row.iter().sum::<f64>().abs() < 1e-13);
        let cache = SmoothSource::fine_cache();
        let v = s.eval(Point2::new(2.0, 0.0), &ones, &cache);
        assert!((v[0] - 2f64.ln()).abs() < 1e-13);
        assert!((v[1] - 0.5).abs() < 1e-13 && v[2].abs() < 1e-13);
        assert!(s.eval(Point2::new(0.5, 0.0), &ones, &cache)[0].abs() < 1e-13);
        // A near point: 1e-3 outside the circle.
        let v = s.eval(Point2::new(0.0, 1.001), &ones, &cache);
        assert!((v[0] - 1.001f64.ln()).abs() < 1e-10);
        assert!((v[2] - 1.0 / 1.001).abs() < 1e-8);
        // K*[1] = 1/2 on the unit circle.
        s.kstar_self_row(5, &mut row);
        assert!((row.iter().sum::<f64>() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn near_rows_across_a_narrow_gap() {
        // Single layer of a smooth density on the left disk, evaluated at right-disk nodes.
        let l = Shape::Disk { center: Point2::new(-1.0, 0.0), radius: 1.0 };
        let r = Shape::Disk { center: Point2::new(1.0, 0.0), radius: 1.0 };
        let pair = InclusionPair::new(l, r, 0.01, 128).unwrap();
        let s = src(&pair.left);
        let phi: Vec<f64> = pair.left.nodes.iter().map(|p| 1.0 + p.x * p.y + p.x).collect();
        // Exact: density cos θ + sin θ cos θ... compare against a very fine plain sum.
        let fine = make_disk(Point2::new(-1.0, 0.0), 1.0, 1 << 16).unwrap();
        let fphi: Vec<f64> = fine.nodes.iter().map(|p| 1.0 + p.x * p.y + p.x).collect();
        let mut row = vec![0.0; 128];
        let x = pair.right().nodes[0];
        assert!(s.near_factor(x, ROW_CAP).is_some());
        s.kernel_row(x, |y| INV_2PI * (x - y).norm().ln(), &mut row);
        let approx: f64 = row.iter().zip(&phi).map(|(a, b)| a * b).sum();
        let exact: f64 = fine.nodes.iter().zip(&fine.weights).zip(&fphi).map(|((y, w), p)| INV_2PI * (x - *y).norm().ln() * w * p).sum();
        assert!((approx - exact).abs() < 1e-10, "{approx} {exact}");
    }
}
