use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{bisect, CurvePoint, Point2};
use crate::error::{invalid, Result};

/// Which side of the contact point an inclusion occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// `-1` for the left inclusion, `+1` for the right one.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// Analytic inclusion shapes, as written in JSON configs.
///
/// `Model` is the closed convex curve `|x + R|/R = sqrt(1 - (y/extent)^(2m))`
/// with `R = 2 coeff extent^(2m)`, whose contact profile is
/// `x = -coeff y^(2m) + O(y^(4m))`. `Ellipse` has semi-axis `a` along the
/// contact normal and `b` across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Disk { center: Point2, radius: f64 },
    Model { m: u32, coeff: f64, extent: f64 },
    Ellipse { a: f64, b: f64 },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Shape::Disk { center, radius } => {
                if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
                    return invalid(format!("disk radius must be positive, got {radius}"));
                }
            }
            Shape::Model { m, coeff, extent } => {
                if m == 0 {
                    return invalid("contact order m must be at least 1");
                }
                if !(coeff > 0.0 && coeff.is_finite()) {
                    return invalid(format!("model coefficient must be positive, got {coeff}"));
                }
                if !(extent > 0.0 && extent.is_finite()) {
                    return invalid(format!("model extent must be positive, got {extent}"));
                }
            }
            Shape::Ellipse { a, b } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return invalid(format!("ellipse semi-axes must be positive, got ({a}, {b})"));
                }
            }
        }
        Ok(())
    }
}

/// Near-contact profile of the model curve: `x(y) = ∓coeff·y^(2m)` (minus on the left).
pub fn model_profile(side: Side, m: u32, coeff: f64, y: f64) -> f64 {
    side.sign() * coeff * y.powi(2 * m as i32)
}

/// A shape placed on one side of the contact point, plus a translation.
///
/// The shape parameter `theta` runs counter-clockwise over `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryShape {
    pub shape: Shape,
    pub side: Side,
    pub shift: Point2,
}

impl BoundaryShape {
    pub fn new(shape: Shape, side: Side) -> Result<Self> {
        shape.validate()?;
        Ok(Self { shape, side, shift: Point2::ORIGIN })
    }

    pub fn translated(mut self, shift: Point2) -> Self {
        self.shift += shift;
        self
    }

    /// Shape parameter of the point closest to the contact side.
    pub fn contact_param(&self) -> f64 {
        match self.shape {
            Shape::Disk { center, .. } => {
                if center.norm() == 0.0 {
                    0.0
                } else {
                    (-center.y).atan2(-center.x)
                }
            }
            _ => 0.0,
        }
    }

    pub fn eval(&self, theta: f64) -> CurvePoint {
        let p = match self.shape {
            Shape::Disk { center, radius } => {
                let (s, c) = theta.sin_cos();
                CurvePoint {
                    z: center + Point2::new(c, s) * radius,
                    dz: Point2::new(-s, c) * radius,
                    ddz: Point2::new(-c, -s) * radius,
                }
            }
            Shape::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                self.oriented(CurvePoint {
                    z: Point2::new(-a + a * c, b * s),
                    dz: Point2::new(-a * s, b * c),
                    ddz: Point2::new(-a * c, -b * s),
                })
            }
            Shape::Model { m, coeff, extent } => {
                self.oriented(model_left(m, coeff, extent, theta))
            }
        };
        p.translated(self.shift)
    }

    /// Right-hand shapes are the point reflection of the left-hand ones,
    /// which keeps the counter-clockwise orientation.
    fn oriented(&self, p: CurvePoint) -> CurvePoint {
        match self.side {
            Side::Left => p,
            Side::Right => CurvePoint { z: -p.z, dz: -p.dz, ddz: -p.ddz },
        }
    }

    /// Curvature at the contact point.
    pub fn contact_curvature(&self) -> f64 {
        match self.shape {
            Shape::Disk { radius, .. } => 1.0 / radius,
            Shape::Ellipse { a, b } => a / (b * b),
            Shape::Model { m, coeff, .. } => {
                if m == 1 {
                    2.0 * coeff
                } else {
                    0.0
                }
            }
        }
    }

    pub fn contact_order(&self) -> u32 {
        match self.shape {
            Shape::Model { m, .. } => m,
            _ => 1,
        }
    }

    /// Leading coefficient `c` of the contact profile `|x| ≈ c·y^(2m)`.
    pub fn contact_coeff(&self) -> f64 {
        match self.shape {
            Shape::Model { coeff, .. } => coeff,
            _ => 0.5 * self.contact_curvature(),
        }
    }

    /// Half-height of the region where the boundary near the contact is a graph over `y`.
    pub fn graph_extent(&self) -> f64 {
        match self.shape {
            Shape::Disk { radius, .. } => radius,
            Shape::Ellipse { b, .. } => b,
            Shape::Model { extent, .. } => extent,
        }
    }

    /// Local contact parameter: `theta = contact_param() + psi`.
    pub fn eval_local(&self, psi: f64) -> CurvePoint {
        self.eval(self.contact_param() + psi)
    }

    /// Local parameter in `[-π/2, π/2]` of the contact-side point at height `y`.
    pub fn local_param_at_height(&self, y: f64) -> Option<f64> {
        let y0 = self.shift.y;
        bisect(-FRAC_PI_2, FRAC_PI_2, |psi| self.eval_local(psi).z.y - y0 - y)
    }

    /// Abscissa of the contact-side branch at height `y` (before translation
    /// in `y`, after translation in `x`).
    pub fn profile_x(&self, y: f64) -> Option<f64> {
        if y.abs() >= self.graph_extent() {
            return None;
        }
        self.local_param_at_height(y).map(|psi| self.eval_local(psi).z.x)
    }

    /// Enclosed area via the spectrally accurate trapezoid rule.
    pub fn area(&self) -> f64 {
        let n = 4096;
        let mut acc = 0.0;
        for k in 0..n {
            let p = self.eval(2.0 * PI * k as f64 / n as f64);
            acc += p.z.cross(p.dz);
        }
        0.5 * acc * 2.0 * PI / n as f64
    }
}

fn model_left(m: u32, coeff: f64, extent: f64, phi: f64) -> CurvePoint {
    let r = 2.0 * coeff * extent.powi(2 * m as i32);
    let b = extent;
    let (s, c) = phi.sin_cos();
    let u = s * s;
    let du = (2.0 * phi).sin();
    let ddu = 2.0 * (2.0 * phi).cos();
    // P(u) = 1 + u + ... + u^(m-1), so cos(phi)^2 P(u) = 1 - u^m.
    let mut p = 0.0;
    let mut dp = 0.0;
    let mut ddp = 0.0;
    for k in 0..m as i32 {
        p += u.powi(k);
        if k >= 1 {
            dp += k as f64 * u.powi(k - 1);
        }
        if k >= 2 {
            ddp += (k * (k - 1)) as f64 * u.powi(k - 2);
        }
    }
    let sq = p.sqrt();
    let dsq = dp * du / (2.0 * sq);
    let ddsq = (ddp * du * du + dp * ddu) / (2.0 * sq) - (dp * du).powi(2) / (4.0 * sq.powi(3));
    CurvePoint {
        z: Point2::new(-r + r * c * sq, b * s),
        dz: Point2::new(r * (-s * sq + c * dsq), b * c),
        ddz: Point2::new(r * (-c * sq - 2.0 * s * dsq + c * ddsq), -b * s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_diff(shape: &BoundaryShape, t: f64) -> (Point2, Point2) {
        let h = 1e-5;
        let zp = shape.eval(t + h).z;
        let zm = shape.eval(t - h).z;
        let z0 = shape.eval(t).z;
        ((zp - zm) * (0.5 / h), (zp + zm - z0 * 2.0) * (1.0 / (h * h)))
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let shapes = [
            Shape::Model { m: 1, coeff: 0.5, extent: 1.0 },
            Shape::Model { m: 3, coeff: 0.7, extent: 1.3 },
            Shape::Ellipse { a: 2.0, b: 1.2 },
            Shape::Disk { center: Point2::new(1.5, 0.0), radius: 1.5 },
        ];
        for shape in shapes {
            for side in [Side::Left, Side::Right] {
                let b = BoundaryShape::new(shape, side).unwrap();
                for &t in &[0.1, 1.0, 2.5, 4.0, 5.9] {
                    let p = b.eval(t);
                    let (d1, d2) = finite_diff(&b, t);
                    assert!((p.dz - d1).norm() < 1e-8, "{shape:?} dz at {t}");
                    assert!((p.ddz - d2).norm() < 1e-4, "{shape:?} ddz at {t}");
                }
            }
        }
    }

    #[test]
    fn model_m1_is_the_osculating_disk() {
        let b = BoundaryShape::new(Shape::Model { m: 1, coeff: 0.5, extent: 1.0 }, Side::Left).unwrap();
        for &t in &[0.0, 0.7, 3.0] {
            let z = b.eval(t).z;
            assert!(((z - Point2::new(-1.0, 0.0)).norm() - 1.0).abs() < 1e-14);
        }
        assert!((b.eval(0.0).curvature() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn contact_profile_of_model_curve() {
        for m in 1..=3u32 {
            let b = BoundaryShape::new(Shape::Model { m, coeff: 0.8, extent: 1.0 }, Side::Right).unwrap();
            let y = 0.05;
            let x = b.profile_x(y).unwrap();
            let model = model_profile(Side::Right, m, 0.8, y);
            // Difference is the next term of sqrt(1 - s), of order y^(4m).
            assert!((x - model).abs() <= 2.0 * y.powi(4 * m as i32), "m={m}: {x} vs {model}");
        }
        assert!((model_profile(Side::Left, 1, 0.5, 0.1) + 0.005).abs() < 1e-15);
    }

    #[test]
    fn ellipse_contact_radius() {
        let b = BoundaryShape::new(Shape::Ellipse { a: 1.0, b: 2.0 }, Side::Left).unwrap();
        assert!((1.0 / b.contact_curvature() - 4.0).abs() < 1e-15);
        assert!((b.eval(0.0).curvature() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(Shape::Model { m: 0, coeff: 1.0, extent: 1.0 }.validate().is_err());
        assert!(Shape::Model { m: 1, coeff: 0.0, extent: 1.0 }.validate().is_err());
        assert!(Shape::Disk { center: Point2::ORIGIN, radius: -1.0 }.validate().is_err());
    }

    #[test]
    fn shape_json_forms() {
        let d: Shape = serde_json::from_str(r#"{"shape":"disk","center":[-1,0],"radius":1}"#).unwrap();
        assert_eq!(d, Shape::Disk { center: Point2::new(-1.0, 0.0), radius: 1.0 });
        let m: Shape = serde_json::from_str(r#"{"shape":"model","m":1,"coeff":0.5,"extent":1.0}"#).unwrap();
        assert_eq!(m, Shape::Model { m: 1, coeff: 0.5, extent: 1.0 });
        let e: Shape = serde_json::from_str(r#"{"shape":"ellipse","a":1,"b":2}"#).unwrap();
        assert_eq!(e, Shape::Ellipse { a: 1.0, b: 2.0 });
    }
}
