//! Inclusion boundaries, near-touching pairs and the neck-truncated dumbbell.
//!
//! Conventions used throughout the crate:
//! * the left inclusion touches the origin from `x < 0`, the right one from
//!   `x > 0`; the right curve of a pair is translated by `(eps, 0)`;
//! * every closed curve is traversed counter-clockwise, normals point out of
//!   the enclosed region;
//! * smooth curves carry their analytic parameterization so that quadrature
//!   can be refined without interpolating geometry.

mod curve;
mod dumbbell;
mod pair;
mod shape;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use curve::{make_disk, make_model_contact_curve, CurveKind, ParamMap, ParametricCurve};
pub(crate) use curve::AnalyticCurve;
pub use dumbbell::{build_dumbbell, build_dumbbell_with, CornerMode, DumbbellCurve, DumbbellOptions, Panel, PanelGeom, Piece};
pub use pair::{contact_data, osculating_disks, ContactData, InclusionPair};
pub use shape::{model_profile, BoundaryShape, Shape, Side};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Rotation by -90 degrees: the outward normal of a counter-clockwise tangent.
    pub fn rot_cw(self) -> Point2 {
        Point2::new(self.y, -self.x)
    }

    pub fn unit(self) -> Point2 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, o: Point2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Position and first two parameter derivatives of a curve.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub z: Point2,
    pub dz: Point2,
    pub ddz: Point2,
}

impl CurvePoint {
    pub fn speed(&self) -> f64 {
        self.dz.norm()
    }

    pub fn tangent(&self) -> Point2 {
        self.dz.unit()
    }

    pub fn normal(&self) -> Point2 {
        self.dz.rot_cw().unit()
    }

    /// Signed curvature, positive on convex arcs of a counter-clockwise curve.
    pub fn curvature(&self) -> f64 {
        self.dz.cross(self.ddz) / self.dz.norm().powi(3)
    }

    pub fn translated(mut self, shift: Point2) -> Self {
        self.z += shift;
        self
    }
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub(crate) fn bisect(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}
