use super::curve::{AnalyticCurve, ParamMap, ParametricCurve};
use super::shape::{BoundaryShape, Shape, Side};
use super::Point2;
use crate::disk_analytics::Disk;
use crate::error::{invalid, Error, Result};

/// Two inclusions touching the origin from either side, the right one
/// translated by `(eps, 0)`.
///
/// For `eps > 0` both curves use a clustering map whose window matches the
/// width over which the gap stays within a small multiple of `eps`.
#[derive(Debug, Clone)]
pub struct InclusionPair {
    pub left: ParametricCurve,
    pub right_base: ParametricCurve,
    pub eps: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub contact_order_m: u32,
    pub left_shape: BoundaryShape,
    pub right_shape: BoundaryShape,
    right: ParametricCurve,
}

impl InclusionPair {
    pub fn new(left: Shape, right: Shape, eps: f64, n_nodes: usize) -> Result<Self> {
        Self::with_clustering(left, right, eps, n_nodes, true)
    }

    pub fn with_clustering(left: Shape, right: Shape, eps: f64, n_nodes: usize, cluster: bool) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return invalid(format!("gap must be a finite non-negative number, got {eps}"));
        }
        let left_shape = BoundaryShape::new(left, Side::Left)?;
        let right_shape = BoundaryShape::new(right, Side::Right)?;
        check_contact(&left_shape)?;
        check_contact(&right_shape)?;

        let m = left_shape.contact_order().min(right_shape.contact_order());
        let coeff_sum: f64 = [left_shape, right_shape]
            .iter()
            .filter(|s| s.contact_order() == m)
            .map(|s| s.contact_coeff())
            .sum();
        let window = (eps / coeff_sum).powf(1.0 / (2 * m) as f64);
        let map_for = |s: &BoundaryShape| {
            if !cluster || eps == 0.0 {
                return ParamMap::IDENTITY;
            }
            let speed = s.eval_local(0.0).speed();
            ParamMap::clustered(2.0 * speed / window)
        };
        let left_curve = ParametricCurve::from_analytic(
            AnalyticCurve { boundary: left_shape, theta0: left_shape.contact_param(), map: map_for(&left_shape) },
            n_nodes,
        )?;
        let right_base = ParametricCurve::from_analytic(
            AnalyticCurve { boundary: right_shape, theta0: right_shape.contact_param(), map: map_for(&right_shape) },
            n_nodes,
        )?;
        let right_curve = right_base.translated(Point2::new(eps, 0.0));
        Ok(Self {
            kappa1: left_shape.contact_curvature(),
            kappa2: right_shape.contact_curvature(),
            contact_order_m: m,
            left: left_curve,
            right_base,
            right: right_curve,
            eps,
            left_shape,
            right_shape,
        })
    }

    /// Same shapes and resolution at a different gap.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.left_shape.shape, self.right_shape.shape, eps, self.left.len())
    }

    /// The translated right curve `right_base + (eps, 0)`.
    pub fn right(&self) -> &ParametricCurve {
        &self.right
    }

    pub fn curves(&self) -> [&ParametricCurve; 2] {
        [&self.left, &self.right]
    }

    pub fn right_shape_translated(&self) -> BoundaryShape {
        self.right_shape.translated(Point2::new(self.eps, 0.0))
    }

    /// Largest admissible neck half-width: half the smaller graph extent.
    pub fn rho_max(&self) -> f64 {
        0.5 * self.left_shape.graph_extent().min(self.right_shape.graph_extent())
    }
}

fn check_contact(s: &BoundaryShape) -> Result<()> {
    let p = s.eval_local(0.0);
    let scale = 1.0 + s.graph_extent();
    let expected_normal = Point2::new(-s.side.sign(), 0.0);
    if p.z.norm() > 1e-12 * scale || p.normal().dot(expected_normal) < 1.0 - 1e-12 {
        return Err(Error::Configuration(format!(
            "{:?} inclusion must touch the origin with normal along the x-axis",
            s.side
        )));
    }
    Ok(())
}

/// Contact metadata of a pair and its local gap function.
#[derive(Debug, Clone)]
pub struct ContactData {
    pub kappa1: f64,
    pub kappa2: f64,
    pub m: u32,
    pub eps: f64,
    left: BoundaryShape,
    right: BoundaryShape,
}

impl ContactData {
    /// `x2(y) + eps - x1(y)` on the graph neighbourhood, `None` outside it.
    pub fn gap(&self, y: f64) -> Option<f64> {
        let x1 = self.left.profile_x(y)?;
        let x2 = self.right.profile_x(y)?;
        Some(x2 + self.eps - x1)
    }

    /// Leading-order gap `eps + (c1 + c2) y^(2m)`.
    pub fn gap_leading(&self, y: f64) -> f64 {
        let mut g = self.eps;
        for s in [&self.left, &self.right] {
            if s.contact_order() == self.m {
                g += s.contact_coeff() * y.powi(2 * self.m as i32);
            }
        }
        g
    }

    pub fn graph_extent(&self) -> f64 {
        self.left.graph_extent().min(self.right.graph_extent())
    }
}

pub fn contact_data(pair: &InclusionPair) -> Result<ContactData> {
    let data = ContactData {
        kappa1: pair.kappa1,
        kappa2: pair.kappa2,
        m: pair.contact_order_m,
        eps: pair.eps,
        left: pair.left_shape,
        right: pair.right_shape,
    };
    let ext = 0.95 * data.graph_extent();
    for k in 0..=64 {
        let y = -ext + 2.0 * ext * k as f64 / 64.0;
        if let Some(g) = data.gap(y) {
            if g < -1e-12 {
                return Err(Error::Configuration(format!("inclusions overlap: gap {g:e} at y = {y}")));
            }
        }
    }
    Ok(data)
}

/// Disks osculating the two inclusions at their contact points.
pub fn osculating_disks(pair: &InclusionPair) -> Result<(Disk, Disk)> {
    if pair.contact_order_m != 1 || pair.kappa1 <= 0.0 || pair.kappa2 <= 0.0 {
        return Err(Error::Unsupported(format!(
            "no osculating disk: contact order 2m = {} has zero curvature",
            2 * pair.contact_order_m
        )));
    }
    let r1 = 1.0 / pair.kappa1;
    let r2 = 1.0 / pair.kappa2;
    Ok((
        Disk::new(Point2::new(-r1, 0.0), r1)?,
        Disk::new(Point2::new(pair.eps + r2, 0.0), r2)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disks() -> (Shape, Shape) {
        (
            Shape::Disk { center: Point2::new(-1.0, 0.0), radius: 1.0 },
            Shape::Disk { center: Point2::new(1.0, 0.0), radius: 1.0 },
        )
    }

    #[test]
    fn unit_disk_contact() {
        let (l, r) = unit_disks();
        let pair = InclusionPair::new(l, r, 0.01, 64).unwrap();
        let cd = contact_data(&pair).unwrap();
        assert_eq!((cd.kappa1, cd.kappa2, cd.m), (1.0, 1.0, 1));
        let g = cd.gap(0.1).unwrap();
        assert!((g - 0.02).abs() < 1e-4);
        // Circle arcs: exact gap is eps + 2(1 - sqrt(1 - y²)).
        assert!((g - (0.01 + 2.0 * (1.0 - (1.0f64 - 0.01).sqrt()))).abs() < 1e-14);
        assert!((cd.gap(0.0).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn model_m2_contact() {
        let l = Shape::Model { m: 2, coeff: 1.0, extent: 1.0 };
        let pair = InclusionPair::new(l, l, 0.01, 128).unwrap();
        let cd = contact_data(&pair).unwrap();
        assert_eq!(cd.m, 2);
        assert_eq!((cd.kappa1, cd.kappa2), (0.0, 0.0));
        assert!(pair.left.curvature[0].abs() < 1e-10);
        assert!(osculating_disks(&pair).is_err());
    }

    #[test]
    fn osculating_disks_of_shapes() {
        let (l, r) = unit_disks();
        let pair = InclusionPair::new(l, r, 0.05, 64).unwrap();
        let (b1, b2) = osculating_disks(&pair).unwrap();
        assert_eq!(b1, Disk::new(Point2::new(-1.0, 0.0), 1.0).unwrap());
        assert_eq!(b2, Disk::new(Point2::new(1.05, 0.0), 1.0).unwrap());
        let e = Shape::Ellipse { a: 1.0, b: 2.0 };
        let pair = InclusionPair::new(e, e, 0.05, 64).unwrap();
        let (b1, _) = osculating_disks(&pair).unwrap();
        assert!((b1.radius - 4.0).abs() < 1e-14);
    }

    #[test]
    fn translation_consistency() {
        let (l, r) = unit_disks();
        for &eps in &[0.0, 1e-3, 0.37] {
            let pair = InclusionPair::new(l, r, eps, 64).unwrap();
            let gap0 = pair.right().nodes[0].x - pair.left.nodes[0].x;
            assert!((gap0 - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_is_resolution_independent() {
        let e = Shape::Ellipse { a: 2.0, b: 1.5 };
        let a = InclusionPair::new(e, e, 0.01, 128).unwrap();
        let b = InclusionPair::new(e, e, 0.01, 256).unwrap();
        assert!((a.left.curvature[0] - b.left.curvature[0]).abs() < 1e-8);
        assert!((a.right().curvature[0] - b.right().curvature[0]).abs() < 1e-8);
    }

    #[test]
    fn misplaced_disks_are_rejected() {
        let l = Shape::Disk { center: Point2::new(-2.0, 0.0), radius: 1.0 };
        let (_, r) = unit_disks();
        assert!(InclusionPair::new(l, r, 0.1, 64).is_err());
        assert!(InclusionPair::new(r, r, 0.1, 64).is_err());
        assert!(InclusionPair::new(unit_disks().0, r, -0.1, 64).is_err());
    }
}
