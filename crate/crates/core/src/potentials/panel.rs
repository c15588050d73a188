//! Single-layer quadrature on chains of Gauss–Legendre panels.
//!
//! On its own panel a target uses log product weights plus a Gauss rule for
//! the smooth remainder `ln(|x - z(s)| / |s - s_i|)`. A source panel whose
//! center lies within `NEAR_FACTOR` panel lengths of the target is integrated
//! by adaptive bisection, with the density carried by the panel's
//! interpolating polynomial. Everything else uses the plain Gauss rule.

use super::{kernel3, INV_2PI};
use crate::geometry::{CurvePoint, Panel, ParametricCurve, Point2};
use crate::quadrature::{legendre_transform, log_product_weights, GaussLegendre};

pub const NEAR_FACTOR: f64 = 1.2;
const MAX_BISECTIONS: u32 = 52;

pub(crate) struct PanelSource<'a> {
    pub curve: &'a ParametricCurve,
    panels: &'a [Panel],
    p: usize,
    rule: GaussLegendre,
    transform: Vec<Vec<f64>>,
    bary: Vec<f64>,
    centers: Vec<Point2>,
    lengths: Vec<f64>,
}

impl<'a> PanelSource<'a> {
    pub fn new(curve: &'a ParametricCurve, panels: &'a [Panel], order: usize) -> Self {
        let rule = GaussLegendre::new(order);
        let transform = legendre_transform(&rule);
        let bary = (0..order)
            .map(|k| {
                let prod: f64 = (0..order).filter(|&j| j != k).map(|j| rule.nodes[k] - rule.nodes[j]).product();
                1.0 / prod
            })
            .collect();
        let centers = panels.iter().map(|p| p.eval(0.0).z).collect();
        let lengths = (0..panels.len()).map(|q| curve.weights[q * order..(q + 1) * order].iter().sum()).collect();
        Self { curve, panels, p: order, rule, transform, bary, centers, lengths }
    }

    pub fn n_panels(&self) -> usize {
        self.panels.len()
    }

    /// Panel index and local coordinate of a curve parameter `q + (s + 1)/2`.
    pub fn locate(&self, param: f64) -> (usize, f64) {
        let q = (param.floor() as usize).min(self.panels.len() - 1);
        (q, 2.0 * (param - q as f64) - 1.0)
    }

    pub fn point_at(&self, param: f64) -> Point2 {
        let (q, s) = self.locate(param);
        self.panels[q].eval(s).z
    }

    fn is_near(&self, x: Point2, q: usize) -> bool {
        (x - self.centers[q]).norm() < NEAR_FACTOR * self.lengths[q]
    }

    /// Lagrange basis of the Gauss nodes at `s` (barycentric form).
    fn basis(&self, s: f64, out: &mut [f64]) {
        let mut total = 0.0;
        for (k, o) in out.iter_mut().enumerate() {
            let d = s - self.rule.nodes[k];
            if d == 0.0 {
                out.fill(0.0);
                out[k] = 1.0;
                return;
            }
            *o = self.bary[k] / d;
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }

    /// Adds `∫_panel k(z(s)) L_k(s) |z'(s)| ds` to `out[k]` by adaptive bisection.
    fn adaptive<const K: usize>(&self, q: usize, x: Point2, kernel: &impl Fn(&CurvePoint) -> [f64; K], out: &mut [[f64; K]]) {
        let panel = &self.panels[q];
        let mut basis = vec![0.0; self.p];
        let mut stack = vec![(-1.0f64, 1.0f64, 0u32)];
        while let Some((a, b, depth)) = stack.pop() {
            let za = panel.eval(a).z;
            let zb = panel.eval(b).z;
            let zm = panel.eval(0.5 * (a + b)).z;
            let len = (zb - zm).norm() + (zm - za).norm();
            if (x - zm).norm() <= len && depth < MAX_BISECTIONS {
                let mid = 0.5 * (a + b);
                stack.push((a, mid, depth + 1));
                stack.push((mid, b, depth + 1));
                continue;
            }
            for (s, w) in self.rule.on_interval(a, b) {
                let cp = panel.eval(s);
                let val = kernel(&cp);
                let ws = w * cp.speed();
                self.basis(s, &mut basis);
                for (o, l) in out.iter_mut().zip(&basis) {
                    for c in 0..K {
                        o[c] += val[c] * ws * l;
                    }
                }
            }
        }
    }

    /// Row over all panels for a kernel of the source point, skipping panel `skip`.
    fn kernel_row_except<const K: usize>(
        &self,
        x: Point2,
        skip: Option<usize>,
        kernel: &impl Fn(&CurvePoint) -> [f64; K],
        plain: &impl Fn(usize) -> [f64; K],
        out: &mut [[f64; K]],
    ) {
        let p = self.p;
        for q in 0..self.panels.len() {
            if Some(q) == skip {
                continue;
            }
            let block = &mut out[q * p..(q + 1) * p];
            if self.is_near(x, q) {
                block.iter_mut().for_each(|o| *o = [0.0; K]);
                self.adaptive(q, x, kernel, block);
            } else {
                for (k, o) in block.iter_mut().enumerate() {
                    let v = plain(q * p + k);
                    let w = self.curve.weights[q * p + k];
                    for c in 0..K {
                        o[c] = v[c] * w;
                    }
                }
            }
        }
    }

    /// Single-layer weights at the curve parameter `param`, which may be a node.
    pub fn on_curve_row(&self, param: f64, out: &mut [f64]) {
        let (q, s) = self.locate(param);
        self.row_at(q, s, out);
    }

    /// Single-layer weights at local coordinate `s` of panel `q`.
    fn row_at(&self, q: usize, s: f64, out: &mut [f64]) {
        let x = self.panels[q].eval(s).z;
        let mut buf = vec![[0.0]; out.len()];
        let kernel = |cp: &CurvePoint| [INV_2PI * (x - cp.z).norm().ln()];
        let nodes = &self.curve.nodes;
        let plain = |j: usize| [INV_2PI * (x - nodes[j]).norm().ln()];
        self.kernel_row_except(x, Some(q), &kernel, &plain, &mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b[0];
        }
        let v = log_product_weights(&self.transform, s);
        let p = self.p;
        for k in 0..p {
            let j = q * p + k;
            let sk = self.rule.nodes[k];
            let speed = self.curve.speed[j];
            // Within roundoff of a node the remainder takes its limit ln|z'|.
            let rem = if (sk - s).abs() < 1e-13 { speed.ln() } else { ((x - nodes[j]).norm() / (sk - s).abs()).ln() };
            out[j] = INV_2PI * (v[k] + self.rule.weights[k] * rem) * speed;
        }
    }

    pub fn self_row(&self, i: usize, out: &mut [f64]) {
        self.row_at(i / self.p, self.rule.nodes[i % self.p], out);
    }

    /// Row for a scalar kernel at a target off this curve.
    pub fn kernel_row(&self, x: Point2, kernel: impl Fn(Point2) -> f64, out: &mut [f64]) {
        let mut buf = vec![[0.0]; out.len()];
        let nodes = &self.curve.nodes;
        self.kernel_row_except(x, None, &|cp: &CurvePoint| [kernel(cp.z)], &|j: usize| [kernel(nodes[j])], &mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b[0];
        }
    }

    /// Adjoint double-layer row at node `i`. The own panel uses the plain
    /// rule since the kernel is smooth there, with diagonal `κ/(4π)`.
    pub fn kstar_self_row(&self, i: usize, out: &mut [f64]) {
        let x = self.curve.nodes[i];
        let n = self.curve.normal[i];
        let q = i / self.p;
        let nodes = &self.curve.nodes;
        let k = |y: Point2| {
            let d = x - y;
            INV_2PI * d.dot(n) / d.norm2()
        };
        let mut buf = vec![[0.0]; out.len()];
        self.kernel_row_except(x, Some(q), &|cp: &CurvePoint| [k(cp.z)], &|j: usize| [k(nodes[j])], &mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b[0];
        }
        for j in q * self.p..(q + 1) * self.p {
            out[j] = if j == i {
                self.curve.curvature[i] * 0.5 * INV_2PI * self.curve.weights[i]
            } else {
                k(nodes[j]) * self.curve.weights[j]
            };
        }
    }

    /// `(S φ, ∂x S φ, ∂y S φ)` at an off-curve point.
    pub fn eval(&self, x: Point2, phi: &[f64]) -> [f64; 3] {
        let nodes = &self.curve.nodes;
        let mut acc = [0.0; 3];
        let p = self.p;
        let mut block = vec![[0.0; 3]; p];
        for q in 0..self.panels.len() {
            if self.is_near(x, q) {
                block.iter_mut().for_each(|o| *o = [0.0; 3]);
                self.adaptive(q, x, &|cp: &CurvePoint| kernel3(x, cp.z), &mut block);
                for (b, f) in block.iter().zip(&phi[q * p..(q + 1) * p]) {
                    for c in 0..3 {
                        acc[c] += b[c] * f;
                    }
                }
            } else {
                for j in q * p..(q + 1) * p {
                    let k = kernel3(x, nodes[j]);
                    let s = self.curve.weights[j] * phi[j];
                    for c in 0..3 {
                        acc[c] += k[c] * s;
                    }
                }
            }
        }
        acc
    }
}
