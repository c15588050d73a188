//! Boundary of `D1 ∪ D2 ∪ [-rho, rho]²` for a touching pair, discretized by
//! Gauss–Legendre panels.
//!
//! Panel sizes are limited by `h_max`, by a fraction of the local channel
//! width between the two inclusions, and by a growth ratio of two between
//! neighbours. The panel touching each corner is split dyadically
//! `depth` times. On the left arc, panel breakpoints are placed where the
//! arc leaves `[-2 rho, 2 rho]²`, so fluxes over the outer part are
//! integrated without splitting a panel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::curve::{CurveKind, ParametricCurve};
use super::pair::InclusionPair;
use super::shape::BoundaryShape;
use super::{bisect, CurvePoint, Point2};
use crate::error::{invalid, Error, Result};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CornerMode {
    #[default]
    Exact,
    Fillet,
}

/// Part of the dumbbell boundary a panel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    LeftArc,
    RightArc,
    Segment,
    Fillet,
}

/// Geometry carrying a panel; each variant has its own parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PanelGeom {
    /// Shape parameter of the inclusion boundary.
    Shape(BoundaryShape),
    /// `a + tau (b - a)`, `tau ∈ [0, 1]`.
    Segment { a: Point2, b: Point2 },
    /// Polar angle around `center`.
    Arc { center: Point2, radius: f64 },
}

impl PanelGeom {
    pub fn eval(&self, tau: f64) -> CurvePoint {
        match *self {
            PanelGeom::Shape(s) => s.eval(tau),
            PanelGeom::Segment { a, b } => CurvePoint { z: a + (b - a) * tau, dz: b - a, ddz: Point2::ORIGIN },
            PanelGeom::Arc { center, radius } => {
                let (s, c) = tau.sin_cos();
                CurvePoint {
                    z: center + Point2::new(c, s) * radius,
                    dz: Point2::new(-s, c) * radius,
                    ddz: Point2::new(-c, -s) * radius,
                }
            }
        }
    }

    fn translated(self, shift: Point2) -> Self {
        match self {
            PanelGeom::Shape(s) => PanelGeom::Shape(s.translated(shift)),
            PanelGeom::Segment { a, b } => PanelGeom::Segment { a: a + shift, b: b + shift },
            PanelGeom::Arc { center, radius } => PanelGeom::Arc { center: center + shift, radius },
        }
    }
}

/// One Gauss panel: the image of `[-1, 1]` under `s ↦ geom(mid + half·s)`.
/// `a > b` is allowed and reverses the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub geom: PanelGeom,
    pub a: f64,
    pub b: f64,
    /// Grading level: 0 for regular panels, `d` for the panel `2^-d` of the
    /// way into a corner subdivision.
    pub depth: u32,
    pub piece: Piece,
}

impl Panel {
    /// Position and derivatives with respect to the local variable `s ∈ [-1, 1]`.
    pub fn eval(&self, s: f64) -> CurvePoint {
        let half = 0.5 * (self.b - self.a);
        let p = self.geom.eval(0.5 * (self.a + self.b) + half * s);
        CurvePoint { z: p.z, dz: p.dz * half, ddz: p.ddz * (half * half) }
    }

    pub fn translated(&self, shift: Point2) -> Self {
        Panel { geom: self.geom.translated(shift), ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumbbellOptions {
    pub mode: CornerMode,
    /// Gauss nodes per panel.
    pub order: usize,
    /// Dyadic refinement levels at each corner.
    pub depth: u32,
    /// Largest panel arc length; `None` picks a quarter of the smaller graph extent.
    pub h_max: Option<f64>,
    /// Panels on the inclusion arcs are at most this fraction of the local channel width.
    pub gap_factor: f64,
}

impl Default for DumbbellOptions {
    fn default() -> Self {
        Self { mode: CornerMode::Exact, order: 16, depth: 5, h_max: None, gap_factor: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct DumbbellCurve {
    pub curve: ParametricCurve,
    pub rho: f64,
    /// Corners of the exact neck, ordered top-left, bottom-left, bottom-right, top-right.
    pub corner_points: [Point2; 4],
    pub fillet_radius: f64,
    pub options: DumbbellOptions,
}

impl DumbbellCurve {
    pub fn panels(&self) -> &[Panel] {
        self.curve.panels().expect("dumbbell curves are panel curves")
    }

    pub fn order(&self) -> usize {
        self.options.order
    }

    /// Length of the exact neck segments `x2(rho) - x1(rho)`.
    pub fn segment_length(&self) -> f64 {
        self.corner_points[3].x - self.corner_points[0].x
    }
}

pub fn build_dumbbell(pair: &InclusionPair, rho: f64, mode: CornerMode, n_per_panel: usize) -> Result<DumbbellCurve> {
    build_dumbbell_with(pair, rho, &DumbbellOptions { mode, order: n_per_panel, ..Default::default() })
}

struct Corner {
    shape: BoundaryShape,
    /// Local contact parameter of the exact corner.
    psi: f64,
    /// Direction of increasing `psi` that moves away from the corner along the arc.
    dir: f64,
    line_y: f64,
    /// `+1` when the exterior lies above the neck segment.
    side: f64,
}

impl Corner {
    fn point(&self) -> Point2 {
        self.shape.eval_local(self.psi).z
    }

    /// Fillet of radius `r` tangent to the line and the arc: returns
    /// (local parameter of the arc tangency, center, line tangency).
    fn fillet(&self, r: f64) -> Result<(f64, Point2, Point2)> {
        let target = self.line_y + self.side * r;
        let g = |psi: f64| {
            let p = self.shape.eval_local(psi);
            p.z.y + r * p.normal().y - target
        };
        let (lo, hi) = if self.dir > 0.0 { (self.psi, self.psi + 1.0) } else { (self.psi - 1.0, self.psi) };
        let psi = bisect(lo, hi, g).ok_or_else(|| Error::Configuration("fillet does not fit at neck corner".into()))?;
        let p = self.shape.eval_local(psi);
        let center = p.z + p.normal() * r;
        Ok((psi, center, Point2::new(center.x, self.line_y)))
    }
}

/// Piece of boundary before panelization.
struct Span {
    geom: PanelGeom,
    t0: f64,
    t1: f64,
    piece: Piece,
    corner_start: bool,
    corner_end: bool,
    forced: Vec<f64>,
}

pub fn build_dumbbell_with(pair: &InclusionPair, rho: f64, opts: &DumbbellOptions) -> Result<DumbbellCurve> {
    if pair.eps != 0.0 {
        return Err(Error::Configuration("dumbbell requires a touching pair (eps = 0)".into()));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return invalid(format!("rho must be positive, got {rho}"));
    }
    if rho >= pair.rho_max() {
        return invalid(format!("rho = {rho} exceeds the graph neighbourhood bound {}", pair.rho_max()));
    }
    if opts.order < 2 {
        return invalid("panels need at least two nodes");
    }
    let left = pair.left_shape;
    let right = pair.right_shape;
    for (p, c) in [
        (Point2::new(-rho, rho), &pair.left),
        (Point2::new(-rho, -rho), &pair.left),
        (Point2::new(rho, rho), pair.right()),
        (Point2::new(rho, -rho), pair.right()),
    ] {
        if !c.contains(p) {
            return Err(Error::Configuration(format!("neck corner ({}, {}) lies outside its inclusion", p.x, p.y)));
        }
    }
    let height = |s: &BoundaryShape, y: f64| {
        s.local_param_at_height(y).ok_or_else(|| Error::Configuration(format!("no boundary point at height {y}")))
    };
    let corners = [
        Corner { shape: left, psi: height(&left, rho)?, dir: 1.0, line_y: rho, side: 1.0 },
        Corner { shape: left, psi: height(&left, -rho)?, dir: -1.0, line_y: -rho, side: -1.0 },
        Corner { shape: right, psi: height(&right, -rho)?, dir: 1.0, line_y: -rho, side: -1.0 },
        Corner { shape: right, psi: height(&right, rho)?, dir: -1.0, line_y: rho, side: 1.0 },
    ];
    let corner_points = [corners[0].point(), corners[1].point(), corners[2].point(), corners[3].point()];
    let seg_len = corner_points[3].x - corner_points[0].x;
    if !(seg_len > 1e-10) {
        return invalid(format!("neck segment of length {seg_len:e} is below resolution"));
    }
    let extent = pair.left_shape.graph_extent().min(pair.right_shape.graph_extent());
    let h_max = opts.h_max.unwrap_or(0.25 * extent);

    // Doubled-square exits on the left arc, in local parameters.
    let exit = |from: f64, dir: f64| -> Option<f64> {
        let f = |psi: f64| {
            let z = left.eval_local(psi).z;
            z.x.abs().max(z.y.abs()) - 2.0 * rho
        };
        let steps = 400;
        let mut prev = from;
        for k in 1..=steps {
            let psi = from + dir * PI * k as f64 / steps as f64;
            if f(psi) > 0.0 {
                return bisect(prev.min(psi), prev.max(psi), f);
            }
            prev = psi;
        }
        None
    };
    let exit_top = exit(corners[0].psi, 1.0);
    let exit_bot = exit(corners[1].psi, -1.0);

    let th_l = left.contact_param();
    let th_r = right.contact_param();
    let mut spans = Vec::new();
    let fillet_radius;
    match opts.mode {
        CornerMode::Exact => {
            fillet_radius = 0.0;
            let mut forced = Vec::new();
            if let Some(e) = exit_top {
                forced.push(th_l + e);
            }
            if let Some(e) = exit_bot {
                forced.push(th_l + e + 2.0 * PI);
            }
            spans.push(Span {
                geom: PanelGeom::Shape(left),
                t0: th_l + corners[0].psi,
                t1: th_l + corners[1].psi + 2.0 * PI,
                piece: Piece::LeftArc,
                corner_start: true,
                corner_end: true,
                forced,
            });
            spans.push(segment(corner_points[1], corner_points[2]));
            spans.push(Span {
                geom: PanelGeom::Shape(right),
                t0: th_r + corners[2].psi,
                t1: th_r + corners[3].psi + 2.0 * PI,
                piece: Piece::RightArc,
                corner_start: true,
                corner_end: true,
                forced: Vec::new(),
            });
            spans.push(segment(corner_points[3], corner_points[0]));
        }
        CornerMode::Fillet => {
            let r = (rho / 8.0).min(seg_len / 4.0);
            fillet_radius = r;
            let f: Vec<(f64, Point2, Point2)> = corners.iter().map(|c| c.fillet(r)).collect::<Result<_>>()?;
            let mut forced = Vec::new();
            if let Some(e) = exit_top {
                forced.push(th_l + e);
            }
            if let Some(e) = exit_bot {
                forced.push(th_l + e + 2.0 * PI);
            }
            spans.push(Span {
                geom: PanelGeom::Shape(left),
                t0: th_l + f[0].0,
                t1: th_l + f[1].0 + 2.0 * PI,
                piece: Piece::LeftArc,
                corner_start: true,
                corner_end: true,
                forced,
            });
            spans.push(fillet_span(&corners[1], f[1], r, true));
            spans.push(segment(f[1].2, f[2].2));
            spans.push(fillet_span(&corners[2], f[2], r, false));
            spans.push(Span {
                geom: PanelGeom::Shape(right),
                t0: th_r + f[2].0,
                t1: th_r + f[3].0 + 2.0 * PI,
                piece: Piece::RightArc,
                corner_start: true,
                corner_end: true,
                forced: Vec::new(),
            });
            spans.push(fillet_span(&corners[3], f[3], r, true));
            spans.push(segment(f[3].2, f[0].2));
            spans.push(fillet_span(&corners[0], f[0], r, false));
        }
    }

    let contact = super::pair::contact_data(pair)?;
    let channel = |z: Point2| -> f64 {
        if z.y.abs() < 0.95 * extent && z.x.abs() < 0.5 * extent {
            contact.gap(z.y).unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        }
    };
    let h_corner = (opts.gap_factor * seg_len).min(h_max).min(0.5 * seg_len);

    let mut panels = Vec::new();
    for span in &spans {
        let size = |t: f64| -> f64 {
            let z = span.geom.eval(t).z;
            match span.piece {
                Piece::LeftArc | Piece::RightArc => (opts.gap_factor * channel(z)).min(h_max),
                _ => h_max,
            }
        };
        let speed = |t: f64| span.geom.eval(t).dz.norm();
        let breaks = if matches!(span.piece, Piece::Fillet) {
            let len = (span.t1 - span.t0).abs() * speed(span.t0);
            let n = ((len / h_corner).ceil() as usize).max(1);
            (0..=n).map(|k| span.t0 + (span.t1 - span.t0) * k as f64 / n as f64).collect()
        } else {
            let mid = 0.5 * (span.t0 + span.t1);
            let first = march(span.t0, mid, &span.forced, &size, &speed, h_corner, h_max);
            let mut second = march(span.t1, mid, &span.forced, &size, &speed, h_corner, h_max);
            second.reverse();
            let mut b = first;
            b.extend_from_slice(&second[1..]);
            b
        };
        let n = breaks.len() - 1;
        for k in 0..n {
            let (a, b) = (breaks[k], breaks[k + 1]);
            let graded_start = k == 0 && span.corner_start;
            let graded_end = k == n - 1 && span.corner_end;
            let mut pts = vec![a, b];
            if graded_start && opts.depth > 0 {
                pts = dyadic(a, b, opts.depth);
            } else if graded_end && opts.depth > 0 {
                pts = dyadic(b, a, opts.depth);
                pts.reverse();
            }
            let m = pts.len() - 1;
            for j in 0..m {
                let depth = if graded_start && opts.depth > 0 {
                    (opts.depth as usize - j.min(opts.depth as usize)) as u32
                } else if graded_end && opts.depth > 0 {
                    j.min(opts.depth as usize) as u32
                } else {
                    0
                };
                panels.push(Panel { geom: span.geom, a: pts[j], b: pts[j + 1], depth, piece: span.piece });
            }
        }
    }

    let rule = GaussLegendre::new(opts.order);
    let mut params = Vec::new();
    let mut samples = Vec::new();
    let mut weights = Vec::new();
    for (pi, panel) in panels.iter().enumerate() {
        for (s, w) in rule.nodes.iter().zip(&rule.weights) {
            let p = panel.eval(*s);
            params.push(pi as f64 + 0.5 * (s + 1.0));
            weights.push(w * p.speed());
            samples.push(p);
        }
    }
    let mut curve = ParametricCurve::from_samples(params, &samples, CurveKind::Panels { panels, order: opts.order });
    curve.weights = weights;
    curve.check()?;
    Ok(DumbbellCurve { curve, rho, corner_points, fillet_radius, options: *opts })
}

fn segment(a: Point2, b: Point2) -> Span {
    Span {
        geom: PanelGeom::Segment { a, b },
        t0: 0.0,
        t1: 1.0,
        piece: Piece::Segment,
        corner_start: true,
        corner_end: true,
        forced: Vec::new(),
    }
}

/// Fillet arc between the arc tangency and the line tangency; `from_arc`
/// says which end comes first along the boundary.
fn fillet_span(corner: &Corner, f: (f64, Point2, Point2), r: f64, from_arc: bool) -> Span {
    let (psi, center, on_line) = f;
    let on_arc = corner.shape.eval_local(psi).z;
    let (p0, p1) = if from_arc { (on_arc, on_line) } else { (on_line, on_arc) };
    let a0 = (p0.y - center.y).atan2(p0.x - center.x);
    let a1 = (p1.y - center.y).atan2(p1.x - center.x);
    let mut d = a1 - a0;
    while d > PI {
        d -= 2.0 * PI;
    }
    while d < -PI {
        d += 2.0 * PI;
    }
    Span {
        geom: PanelGeom::Arc { center, radius: r },
        t0: a0,
        t1: a0 + d,
        piece: Piece::Fillet,
        corner_start: false,
        corner_end: false,
        forced: Vec::new(),
    }
}

/// Breakpoints from `t0` toward `t1` (either direction) honouring the size
/// function, a growth ratio of two and forced breakpoints.
fn march(
    t0: f64,
    t1: f64,
    forced: &[f64],
    size: &dyn Fn(f64) -> f64,
    speed: &dyn Fn(f64) -> f64,
    h_start: f64,
    h_max: f64,
) -> Vec<f64> {
    let dir = (t1 - t0).signum();
    let mut pts = vec![t0];
    let mut t = t0;
    let mut h_prev = 0.5 * h_start;
    while (t1 - t) * dir > 0.0 {
        let h = size(t).min(2.0 * h_prev).min(h_max);
        let dt = h / speed(t);
        let mut next = t + dir * dt;
        if (t1 - next) * dir < 0.5 * dt {
            next = t1;
        }
        for &f in forced {
            if (f - t) * dir > 1e-14 && (next - f) * dir > 0.0 {
                next = f;
            }
        }
        h_prev = (next - t).abs() * speed(0.5 * (t + next));
        t = next;
        pts.push(t);
    }
    pts
}

/// `[a, ..., b]` refined geometrically toward `a`: `depth` extra breakpoints at
/// `a + (b - a) 2^-j`.
fn dyadic(a: f64, b: f64, depth: u32) -> Vec<f64> {
    let mut pts = vec![a];
    for j in (1..=depth).rev() {
        pts.push(a + (b - a) * 0.5f64.powi(j as i32));
    }
    pts.push(b);
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::quadrature::GaussLegendre;

    fn touching_disks() -> InclusionPair {
        InclusionPair::new(
            Shape::Disk { center: Point2::new(-1.0, 0.0), radius: 1.0 },
            Shape::Disk { center: Point2::new(1.0, 0.0), radius: 1.0 },
            0.0,
            64,
        )
        .unwrap()
    }

    fn expected_area(pair: &InclusionPair, rho: f64) -> f64 {
        let cd = crate::geometry::contact_data(pair).unwrap();
        let g = GaussLegendre::new(40);
        let neck: f64 = g.on_interval(-rho, rho).map(|(y, w)| w * cd.gap(y).unwrap()).sum();
        pair.left_shape.area() + pair.right_shape.area() + neck
    }

    #[test]
    fn corner_points_of_unit_disks() {
        let pair = touching_disks();
        let db = build_dumbbell(&pair, 0.25, CornerMode::Exact, 16).unwrap();
        let x1 = -1.0 + (1.0f64 - 0.0625).sqrt();
        assert!((db.corner_points[0] - Point2::new(x1, 0.25)).norm() < 1e-14);
        assert!((db.corner_points[2] - Point2::new(-x1, -0.25)).norm() < 1e-14);
        assert!((x1 + 0.0318).abs() < 1e-4);
        assert_eq!(db.curve.winding_number(Point2::new(0.0, 0.0)), 1);
        assert_eq!(db.curve.winding_number(Point2::new(-1.0, 0.5)), 1);
        assert_eq!(db.curve.winding_number(Point2::new(0.0, 0.5)), 0);
    }

    #[test]
    fn dumbbell_area_by_shoelace() {
        let pair = touching_disks();
        for &rho in &[0.05, 0.2, 0.4] {
            let db = build_dumbbell(&pair, rho, CornerMode::Exact, 16).unwrap();
            let want = expected_area(&pair, rho);
            assert!((db.curve.signed_area() - want).abs() < 1e-8, "rho={rho}");
            let f = build_dumbbell(&pair, rho, CornerMode::Fillet, 16).unwrap();
            assert!(f.fillet_radius > 0.0);
            assert!((f.curve.signed_area() - want).abs() < rho * rho);
            assert!(f.curve.signed_area() > want);
        }
    }

    #[test]
    fn panels_are_graded_and_continuous() {
        let pair = touching_disks();
        let db = build_dumbbell(&pair, 0.1, CornerMode::Exact, 16).unwrap();
        let panels = db.panels();
        let n = panels.len();
        for k in 0..n {
            let end = panels[k].eval(1.0).z;
            let start = panels[(k + 1) % n].eval(-1.0).z;
            assert!((end - start).norm() < 1e-13, "gap after panel {k}");
        }
        assert!(panels.iter().any(|p| p.depth == 5));
        // Doubled-square exits are panel breakpoints.
        let on_exit = panels
            .iter()
            .filter(|p| p.piece == Piece::LeftArc)
            .map(|p| p.eval(1.0).z)
            .filter(|z| (z.y.abs() - 0.2).abs() < 1e-13)
            .count();
        assert_eq!(on_exit, 2);
    }

    #[test]
    fn invalid_configurations() {
        let pair = touching_disks();
        assert!(build_dumbbell(&pair, 0.6, CornerMode::Exact, 16).is_err());
        assert!(build_dumbbell(&pair, -0.1, CornerMode::Exact, 16).is_err());
        assert!(build_dumbbell(&pair, 1e-7, CornerMode::Exact, 16).is_err());
        let gapped = pair.with_eps(0.1).unwrap();
        assert!(build_dumbbell(&gapped, 0.1, CornerMode::Exact, 16).is_err());
    }
}
