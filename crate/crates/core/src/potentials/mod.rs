//! Single-layer potentials `S[φ](x) = ∫ G(x, y) φ(y) ds_y` with
//! `G(x, y) = ln|x - y| / 2π`, their dense Nyström matrices, off-boundary
//! evaluation and boundary fluxes.
//!
//! Exterior jump relation used throughout, with `n` the outward normal of the
//! inclusion: `∂_n S[φ]|₊ = φ/2 + K*[φ]`, where
//! `K*[φ](x) = ∫ (x - y)·n_x / (2π |x - y|²) φ(y) ds_y`.

mod background;
mod panel;
mod smooth;

use std::sync::{Arc, OnceLock};

use faer::Mat;
use serde::Serialize;

pub use background::{HarmonicBackground, HarmonicTerm, MAX_DEGREE};
pub(crate) use panel::PanelSource;
pub(crate) use smooth::SmoothSource;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{CurveKind, ParametricCurve, Point2};
use crate::quadrature::{legendre_transform, log_product_weights, GaussLegendre};

pub(crate) const INV_2PI: f64 = 0.5 / std::f64::consts::PI;

/// `(G, ∂x G, ∂y G)` with derivatives taken at the target `x`.
#[inline]
pub(crate) fn kernel3(x: Point2, y: Point2) -> [f64; 3] {
    let d = x - y;
    let r2 = d.norm2();
    let s = INV_2PI / r2;
    [0.5 * INV_2PI * r2.ln(), s * d.x, s * d.y]
}

/// Quadrature data of one curve: the plain weights plus the correction for
/// the logarithmic self-interaction.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub params: Vec<f64>,
    pub weights: Vec<f64>,
    pub singular_correction: SingularCorrection,
}

#[derive(Debug, Clone)]
pub enum SingularCorrection {
    /// Kress weights indexed by `(i - j) mod N`; the matrix `R_{(i-j) mod N}`
    /// is circulant and symmetric.
    Circulant(Vec<f64>),
    /// Product weights `V[i][k]` for `∫_{-1}^{1} ln|s - s_i| g(s) ds` on one
    /// Gauss panel of the given order.
    Panel(Vec<Vec<f64>>),
}

impl QuadratureRule {
    pub fn new(curve: &ParametricCurve) -> Self {
        let singular_correction = match &curve.kind {
            CurveKind::Smooth(_) => SingularCorrection::Circulant(crate::quadrature::kress_log_weights(curve.len())),
            CurveKind::Panels { order, .. } => {
                let rule = GaussLegendre::new(*order);
                let t = legendre_transform(&rule);
                SingularCorrection::Panel(rule.nodes.iter().map(|&s| log_product_weights(&t, s)).collect())
            }
        };
        Self { params: curve.params.clone(), weights: curve.weights.clone(), singular_correction }
    }

    /// Correction weight between nodes `i` and `j` of the same panel or curve.
    pub fn correction(&self, i: usize, j: usize) -> Option<f64> {
        match &self.singular_correction {
            SingularCorrection::Circulant(r) => {
                let n = r.len();
                Some(r[(i + n - j) % n])
            }
            SingularCorrection::Panel(v) => {
                let p = v.len();
                (i / p == j / p).then(|| v[i % p][j % p])
            }
        }
    }
}

/// Quadrature engine for one source curve.
pub(crate) enum CurveOperator<'a> {
    Smooth(SmoothSource<'a>),
    Panels(PanelSource<'a>),
}

impl<'a> CurveOperator<'a> {
    pub fn new(curve: &'a ParametricCurve, exec: Execution) -> Self {
        match &curve.kind {
            CurveKind::Smooth(a) => CurveOperator::Smooth(SmoothSource::new(curve, *a, exec)),
            CurveKind::Panels { panels, order } => CurveOperator::Panels(PanelSource::new(curve, panels, *order)),
        }
    }

    pub fn curve(&self) -> &'a ParametricCurve {
        match self {
            CurveOperator::Smooth(s) => s.curve,
            CurveOperator::Panels(p) => p.curve,
        }
    }

    pub fn len(&self) -> usize {
        self.curve().len()
    }

    /// Single-layer row at own node `i`.
    pub fn self_row(&self, i: usize, out: &mut [f64]) {
        match self {
            CurveOperator::Smooth(s) => s.self_row(i, out),
            CurveOperator::Panels(p) => p.self_row(i, out),
        }
    }

    /// Single-layer row at an off-node point of this curve given by its parameter.
    pub fn on_curve_row(&self, param: f64, out: &mut [f64]) {
        match self {
            CurveOperator::Smooth(s) => s.on_curve_row(param, out),
            CurveOperator::Panels(p) => p.on_curve_row(param, out),
        }
    }

    pub fn point_at(&self, param: f64) -> Point2 {
        match self {
            CurveOperator::Smooth(s) => s.point_at(param),
            CurveOperator::Panels(p) => p.point_at(param),
        }
    }

    /// Parameters halfway between consecutive nodes (smooth curves) or at
    /// panel midpoints and quarter points (panel curves).
    pub fn midpoint_params(&self) -> Vec<f64> {
        match self {
            CurveOperator::Smooth(s) => {
                let n = s.curve.len();
                let h = 2.0 * std::f64::consts::PI / n as f64;
                (0..n).map(|k| (k as f64 + 0.5) * h).collect()
            }
            CurveOperator::Panels(p) => (0..p.n_panels())
                .flat_map(|q| [0.27, 0.5, 0.73].map(|f| q as f64 + f))
                .collect(),
        }
    }

    pub fn slp_row(&self, x: Point2, out: &mut [f64]) {
        let k = |y: Point2| INV_2PI * (x - y).norm().ln();
        match self {
            CurveOperator::Smooth(s) => s.kernel_row(x, k, out),
            CurveOperator::Panels(p) => p.kernel_row(x, k, out),
        }
    }

    /// `n·∇_x G` row at an off-curve target.
    pub fn grad_row(&self, x: Point2, normal: Point2, out: &mut [f64]) {
        let k = |y: Point2| {
            let d = x - y;
            INV_2PI * d.dot(normal) / d.norm2()
        };
        match self {
            CurveOperator::Smooth(s) => s.kernel_row(x, k, out),
            CurveOperator::Panels(p) => p.kernel_row(x, k, out),
        }
    }

    pub fn kstar_self_row(&self, i: usize, out: &mut [f64]) {
        match self {
            CurveOperator::Smooth(s) => s.kstar_self_row(i, out),
            CurveOperator::Panels(p) => p.kstar_self_row(i, out),
        }
    }
}

/// Node offsets of each curve in the global unknown vector, plus the total.
pub(crate) fn offsets(ops: &[CurveOperator<'_>]) -> (Vec<usize>, usize) {
    let mut off = Vec::with_capacity(ops.len());
    let mut total = 0;
    for op in ops {
        off.push(total);
        total += op.len();
    }
    (off, total)
}

/// Full single-layer row (all curves) at node `i` of curve `c`.
pub(crate) fn slp_global_row(ops: &[CurveOperator<'_>], c: usize, i: usize, out: &mut [f64]) {
    let (off, _) = offsets(ops);
    let x = ops[c].curve().nodes[i];
    for (k, op) in ops.iter().enumerate() {
        let block = &mut out[off[k]..off[k] + op.len()];
        if k == c {
            op.self_row(i, block);
        } else {
            op.slp_row(x, block);
        }
    }
}

/// Full single-layer row at the on-curve parameter `param` of curve `c`.
pub(crate) fn slp_global_row_at(ops: &[CurveOperator<'_>], c: usize, param: f64, out: &mut [f64]) -> Point2 {
    let (off, _) = offsets(ops);
    let x = ops[c].point_at(param);
    for (k, op) in ops.iter().enumerate() {
        let block = &mut out[off[k]..off[k] + op.len()];
        if k == c {
            op.on_curve_row(param, block);
        } else {
            op.slp_row(x, block);
        }
    }
    x
}

/// Full adjoint double-layer row at node `i` of curve `c`.
pub(crate) fn kstar_global_row(ops: &[CurveOperator<'_>], c: usize, i: usize, out: &mut [f64]) {
    let (off, _) = offsets(ops);
    let curve = ops[c].curve();
    let (x, n) = (curve.nodes[i], curve.normal[i]);
    for (k, op) in ops.iter().enumerate() {
        let block = &mut out[off[k]..off[k] + op.len()];
        if k == c {
            op.kstar_self_row(i, block);
        } else {
            op.grad_row(x, n, block);
        }
    }
}

/// Errors unless the curves are pairwise disjoint (no node of one inside another).
pub(crate) fn check_disjoint(curves: &[&ParametricCurve]) -> Result<()> {
    for (a, ca) in curves.iter().enumerate() {
        for (b, cb) in curves.iter().enumerate() {
            if a == b {
                continue;
            }
            let (lo, hi) = bbox(cb);
            for p in &ca.nodes {
                if p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y && cb.contains(*p) {
                    return Err(Error::Configuration(format!("curves {a} and {b} intersect")));
                }
            }
        }
    }
    Ok(())
}

fn bbox(c: &ParametricCurve) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &c.nodes {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// Dense matrix of the single-layer operator on the union of the curves:
/// entry `(i, j)` maps the density at global node `j` to the potential at
/// global node `i`.
pub fn slp_operator(curves: &[&ParametricCurve], exec: Execution) -> Result<Mat<f64>> {
    check_disjoint(curves)?;
    let ops: Vec<CurveOperator<'_>> = curves.iter().map(|c| CurveOperator::new(c, exec)).collect();
    let (off, n) = offsets(&ops);
    let mut buf = vec![0.0; n * n];
    exec.for_each_chunk(&mut buf, n, |row, out| {
        let c = off.iter().rposition(|&o| o <= row).unwrap_or(0);
        slp_global_row(&ops, c, row - off[c], out);
    });
    Ok(Mat::from_fn(n, n, |i, j| buf[i * n + j]))
}

/// Per-curve density samples `φ_j(t_k)` together with the curves they live on.
#[derive(Debug, Clone)]
pub struct BoundaryDensity {
    pub curves: Vec<Arc<ParametricCurve>>,
    pub values: Vec<Vec<f64>>,
}

impl BoundaryDensity {
    pub fn new(curves: Vec<Arc<ParametricCurve>>, values: Vec<Vec<f64>>) -> Result<Self> {
        if curves.len() != values.len() || curves.iter().zip(&values).any(|(c, v)| c.len() != v.len()) {
            return Err(Error::InvalidParameter("density layout does not match the curves".into()));
        }
        Ok(Self { curves, values })
    }

    pub fn zero(curves: Vec<Arc<ParametricCurve>>) -> Self {
        let values = curves.iter().map(|c| vec![0.0; c.len()]).collect();
        Self { curves, values }
    }

    /// Total charge `∫ φ_j ds` of each curve.
    pub fn charges(&self) -> Vec<f64> {
        self.curves
            .iter()
            .zip(&self.values)
            .map(|(c, v)| c.weights.iter().zip(v).map(|(w, p)| w * p).sum())
            .collect()
    }

    pub fn total_len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub(crate) fn operators(&self, exec: Execution) -> Vec<CurveOperator<'_>> {
        self.curves.iter().map(|c| CurveOperator::new(c, exec)).collect()
    }

    pub(crate) fn flat(&self) -> Vec<f64> {
        self.values.concat()
    }
}

/// Evaluates `S[φ]` and its gradient off the boundary, caching upsampled
/// densities across points.
pub struct FieldEvaluator<'a> {
    density: &'a BoundaryDensity,
    ops: Vec<CurveOperator<'a>>,
    fine: Vec<Vec<OnceLock<Vec<f64>>>>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(density: &'a BoundaryDensity, exec: Execution) -> Self {
        let ops = density.operators(exec);
        let fine = ops.iter().map(|_| SmoothSource::fine_cache()).collect();
        Self { density, ops, fine }
    }

    /// Errors if `x` is inside an inclusion or on a boundary node.
    pub fn check_exterior(&self, x: Point2) -> Result<()> {
        for c in &self.density.curves {
            let (d, _) = c.nearest_node(x);
            if d < 1e-14 || c.contains(x) {
                return Err(Error::Domain { x: x.x, y: x.y });
            }
        }
        Ok(())
    }

    /// `(S[φ](x), ∇S[φ](x))`.
    pub fn layer(&self, x: Point2) -> Result<(f64, Point2)> {
        self.check_exterior(x)?;
        let mut acc = [0.0; 3];
        for ((op, phi), fine) in self.ops.iter().zip(&self.density.values).zip(&self.fine) {
            let v = match op {
                CurveOperator::Smooth(s) => s.eval(x, phi, fine),
                CurveOperator::Panels(p) => p.eval(x, phi),
            };
            for c in 0..3 {
                acc[c] += v[c];
            }
        }
        Ok((acc[0], Point2::new(acc[1], acc[2])))
    }

    /// `(u, ∇u)` with `u = h + S[φ]`.
    pub fn field(&self, h: &HarmonicBackground, x: Point2) -> Result<(f64, Point2)> {
        let (v, g) = self.layer(x)?;
        Ok((v + h.value(x), g + h.gradient(x)))
    }
}

/// `(value, gradient)` of `u = h + S[φ]` at each point.
pub fn eval_field(
    density: &BoundaryDensity,
    background: &HarmonicBackground,
    points: &[Point2],
    exec: Execution,
) -> Result<Vec<(f64, Point2)>> {
    let ev = FieldEvaluator::new(density, exec);
    exec.map(points, |p| ev.field(background, *p)).into_iter().collect()
}

/// Pointwise flux `∂_ν u` along the normal pointing into the inclusion,
/// and its integral over the curve.
#[derive(Debug, Clone, Serialize)]
pub struct FluxResult {
    pub values: Vec<f64>,
    pub integral: f64,
}

pub fn boundary_flux(
    density: &BoundaryDensity,
    background: &HarmonicBackground,
    curve_index: usize,
    exec: Execution,
) -> Result<FluxResult> {
    if curve_index >= density.curves.len() {
        return Err(Error::InvalidParameter(format!(
            "curve index {curve_index} out of range for {} curves",
            density.curves.len()
        )));
    }
    let ops = density.operators(exec);
    let phi = density.flat();
    let curve = &density.curves[curve_index];
    let own = &density.values[curve_index];
    let values = exec.map_range(curve.len(), |i| {
        let mut row = vec![0.0; phi.len()];
        kstar_global_row(&ops, curve_index, i, &mut row);
        let kphi: f64 = row.iter().zip(&phi).map(|(a, b)| a * b).sum();
        let dn_h = background.normal_derivative(curve.nodes[i], curve.normal[i]);
        -(0.5 * own[i] + kphi + dn_h)
    });
    let integral = values.iter().zip(&curve.weights).map(|(v, w)| v * w).sum();
    Ok(FluxResult { values, integral })
}

/// `|u(x) - mean of u over the circle of radius r around x|`, with the
/// circle mean taken by the trapezoid rule on `samples` points.
pub fn mean_value_defect(ev: &FieldEvaluator<'_>, h: &HarmonicBackground, x: Point2, r: f64, samples: usize) -> Result<f64> {
    let center = ev.field(h, x)?.0;
    let mut mean = 0.0;
    for k in 0..samples {
        let t = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        mean += ev.field(h, x + Point2::new(t.cos(), t.sin()) * r)?.0;
    }
    Ok((mean / samples as f64 - center).abs())
}
