use std::f64::consts::PI;

use super::dumbbell::Panel;
use super::shape::{BoundaryShape, Shape, Side};
use super::{CurvePoint, Point2};
use crate::error::{invalid, Result};

/// Node-clustering reparameterization `t(psi) = (1-mu) psi + mu M(psi)` with
/// `M(psi) = 2 atan(K tan(psi/2))`, a circle automorphism concentrating
/// nodes in a window of width `~2/K` around `psi = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamMap {
    pub mu: f64,
    pub k: f64,
}

impl ParamMap {
    pub const IDENTITY: ParamMap = ParamMap { mu: 0.0, k: 1.0 };

    pub fn clustered(k: f64) -> Self {
        if k <= 1.0 {
            Self::IDENTITY
        } else {
            ParamMap { mu: 0.5, k }
        }
    }

    pub fn is_identity(&self) -> bool {
        self.mu == 0.0 || self.k == 1.0
    }

    /// `(t, dt/dpsi, d²t/dpsi²)` for `psi ∈ [-π, π]`.
    pub fn forward(&self, psi: f64) -> (f64, f64, f64) {
        if self.is_identity() {
            return (psi, 1.0, 0.0);
        }
        let k = self.k;
        let (sh, ch) = (0.5 * psi).sin_cos();
        let m = 2.0 * (k * sh).atan2(ch);
        let d = ch * ch + k * k * sh * sh;
        let dd = 0.5 * (k * k - 1.0) * psi.sin();
        let dm = k / d;
        let ddm = -k * dd / (d * d);
        let mu = self.mu;
        ((1.0 - mu) * psi + mu * m, (1.0 - mu) + mu * dm, mu * ddm)
    }

    /// `(psi, dpsi/dt, d²psi/dt²)` for `t ∈ [-π, π]`.
    pub fn inverse(&self, t: f64) -> (f64, f64, f64) {
        if self.is_identity() {
            return (t, 1.0, 0.0);
        }
        let (mut lo, mut hi) = (-PI, PI);
        // Start from the inverse of the pure Möbius part, which is exact at the ends.
        let mut psi = 2.0 * (0.5 * t).sin().atan2(self.k * (0.5 * t).cos());
        psi = 0.5 * (psi + t);
        for _ in 0..100 {
            let (f, df, _) = self.forward(psi);
            let r = f - t;
            if r > 0.0 {
                hi = hi.min(psi);
            } else {
                lo = lo.max(psi);
            }
            let mut next = psi - r / df;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - psi).abs() <= 1e-16 * (1.0 + psi.abs()) {
                psi = next;
                break;
            }
            psi = next;
        }
        let (_, dt, ddt) = self.forward(psi);
        (psi, 1.0 / dt, -ddt / dt.powi(3))
    }
}

/// Reduces an angle to `(-π, π]`.
pub(crate) fn wrap_pi(t: f64) -> f64 {
    let mut r = t.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Closed analytic curve reparameterized by a clustering map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticCurve {
    pub boundary: BoundaryShape,
    pub theta0: f64,
    pub map: ParamMap,
}

impl AnalyticCurve {
    /// Derivatives are with respect to the computational parameter `t`.
    pub fn sample(&self, t: f64) -> CurvePoint {
        let (psi, dpsi, ddpsi) = self.map.inverse(wrap_pi(t));
        let p = self.boundary.eval(self.theta0 + psi);
        CurvePoint {
            z: p.z,
            dz: p.dz * dpsi,
            ddz: p.ddz * (dpsi * dpsi) + p.dz * ddpsi,
        }
    }

    pub fn translated(mut self, shift: Point2) -> Self {
        self.boundary = self.boundary.translated(shift);
        self
    }
}

/// How a [`ParametricCurve`] is discretized.
#[derive(Debug, Clone)]
pub enum CurveKind {
    /// Equispaced nodes in a periodic parameter; trapezoid/product quadrature.
    Smooth(AnalyticCurve),
    /// Gauss–Legendre panels of the given order, nodes stored panel by panel.
    Panels { panels: Vec<Panel>, order: usize },
}

/// Sampled closed boundary with per-node differential data and quadrature
/// weights (`weights[k]` is the arc-length weight of node `k`).
#[derive(Debug, Clone)]
pub struct ParametricCurve {
    pub params: Vec<f64>,
    pub nodes: Vec<Point2>,
    pub tangent: Vec<Point2>,
    pub normal: Vec<Point2>,
    pub curvature: Vec<f64>,
    pub speed: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: CurveKind,
}

impl ParametricCurve {
    pub fn from_analytic(analytic: AnalyticCurve, n_nodes: usize) -> Result<Self> {
        if n_nodes < 16 || !n_nodes.is_multiple_of(2) {
            return invalid(format!("node count must be even and at least 16, got {n_nodes}"));
        }
        let h = 2.0 * PI / n_nodes as f64;
        let params: Vec<f64> = (0..n_nodes).map(|k| k as f64 * h).collect();
        let samples: Vec<CurvePoint> = params.iter().map(|&t| analytic.sample(t)).collect();
        let mut c = Self::from_samples(params, &samples, CurveKind::Smooth(analytic));
        for (w, s) in c.weights.iter_mut().zip(&c.speed) {
            *w = h * s;
        }
        c.check()?;
        Ok(c)
    }

    pub(crate) fn from_samples(params: Vec<f64>, samples: &[CurvePoint], kind: CurveKind) -> Self {
        let n = samples.len();
        Self {
            params,
            nodes: samples.iter().map(|p| p.z).collect(),
            tangent: samples.iter().map(|p| p.tangent()).collect(),
            normal: samples.iter().map(|p| p.normal()).collect(),
            curvature: samples.iter().map(|p| p.curvature()).collect(),
            speed: samples.iter().map(|p| p.speed()).collect(),
            weights: vec![0.0; n],
            kind,
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.speed.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return invalid("curve parameterization has a vanishing or non-finite speed");
        }
        if self.nodes.iter().any(|p| !p.is_finite()) {
            return invalid("curve has non-finite nodes");
        }
        if self.signed_area() <= 0.0 {
            return invalid("curve must be counter-clockwise");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn analytic(&self) -> Option<&AnalyticCurve> {
        match &self.kind {
            CurveKind::Smooth(a) => Some(a),
            CurveKind::Panels { .. } => None,
        }
    }

    pub fn panels(&self) -> Option<&[Panel]> {
        match &self.kind {
            CurveKind::Smooth(_) => None,
            CurveKind::Panels { panels, .. } => Some(panels),
        }
    }

    /// Perimeter by quadrature.
    pub fn length(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Enclosed area `½∮ x·n ds` by quadrature; positive for counter-clockwise curves.
    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .nodes
            .iter()
            .zip(&self.normal)
            .zip(&self.weights)
            .map(|((p, n), w)| p.dot(*n) * w)
            .sum::<f64>()
    }

    /// Winding number of the node polygon around `p`.
    pub fn winding_number(&self, p: Point2) -> i64 {
        let n = self.nodes.len();
        let mut total = 0.0;
        for k in 0..n {
            let a = self.nodes[k] - p;
            let b = self.nodes[(k + 1) % n] - p;
            total += a.cross(b).atan2(a.dot(b));
        }
        (total / (2.0 * PI)).round() as i64
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.winding_number(p) != 0
    }

    /// Distance from `p` to the nearest node and that node's index.
    pub fn nearest_node(&self, p: Point2) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (k, q) in self.nodes.iter().enumerate() {
            let d = (*q - p).norm2();
            if d < best.0 {
                best = (d, k);
            }
        }
        (best.0.sqrt(), best.1)
    }

    /// Rigid translation; quadrature data is unchanged.
    pub fn translated(&self, shift: Point2) -> Self {
        let mut c = self.clone();
        for p in c.nodes.iter_mut() {
            *p += shift;
        }
        c.kind = match &self.kind {
            CurveKind::Smooth(a) => CurveKind::Smooth(a.translated(shift)),
            CurveKind::Panels { panels, order } => CurveKind::Panels {
                panels: panels.iter().map(|p| p.translated(shift)).collect(),
                order: *order,
            },
        };
        c
    }
}

/// Circle of the given center and radius with equispaced nodes, node 0 at
/// angle 0.
pub fn make_disk(center: Point2, radius: f64, n_nodes: usize) -> Result<ParametricCurve> {
    let shape = Shape::Disk { center, radius };
    let boundary = BoundaryShape::new(shape, Side::Left)?;
    ParametricCurve::from_analytic(AnalyticCurve { boundary, theta0: 0.0, map: ParamMap::IDENTITY }, n_nodes)
}

/// Closed convex curve whose boundary near the origin is
/// `x = ∓coeff·y^(2m) + O(y^(4m))`, node 0 at the contact point.
pub fn make_model_contact_curve(
    side: Side,
    m: u32,
    coeff: f64,
    extent: f64,
    n_nodes: usize,
) -> Result<ParametricCurve> {
    let boundary = BoundaryShape::new(Shape::Model { m, coeff, extent }, side)?;
    ParametricCurve::from_analytic(AnalyticCurve { boundary, theta0: 0.0, map: ParamMap::IDENTITY }, n_nodes)
}
