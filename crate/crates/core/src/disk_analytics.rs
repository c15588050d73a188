//! Closed-form machinery for circular inclusions: reflections, the poles of
//! the explicit singular function, Möbius normalizations of the neck, and an
//! image-dipole series used as an independent oracle for the solver.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::Point2;
use crate::potentials::HarmonicBackground;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disk {
    pub center: Point2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return invalid(format!("disk radius must be positive, got {radius}"));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, z: Point2) -> bool {
        (z - self.center).norm() < self.radius
    }
}

fn c(p: Point2) -> Complex64 {
    Complex64::new(p.x, p.y)
}

fn p(z: Complex64) -> Point2 {
    Point2::new(z.re, z.im)
}

/// Inversion in the circle `∂d`: `c + r²(z - c)/|z - c|²`.
pub fn reflect_circle(z: Point2, d: &Disk) -> Result<Point2> {
    let v = z - d.center;
    let n2 = v.norm2();
    if n2 == 0.0 {
        return Err(Error::Domain { x: z.x, y: z.y });
    }
    Ok(d.center + v * (d.radius * d.radius / n2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointPair {
    pub p1: Point2,
    pub p2: Point2,
    /// `max(|R1(p2) - p1|, |R2(p1) - p2|)`.
    pub residual: f64,
    pub iterations: usize,
}

fn residual(d1: &Disk, d2: &Disk, p1: Point2, p2: Point2) -> Result<f64> {
    Ok((reflect_circle(p2, d1)? - p1).norm().max((reflect_circle(p1, d2)? - p2).norm()))
}

fn check_disjoint(d1: &Disk, d2: &Disk) -> Result<f64> {
    let dist = d1.center.dist(d2.center);
    let gap = dist - d1.radius - d2.radius;
    if gap < -1e-14 * (d1.radius + d2.radius) {
        return Err(Error::Configuration("disks intersect; mixed reflections do not contract".into()));
    }
    Ok(gap)
}

/// Fixed points of the mixed reflections `R1 R2` (in `d1`) and `R2 R1` (in `d2`),
/// by iterating `R1 R2`. The first iterate from `d2`'s center is `d1`'s center.
pub fn mixed_fixed_points(d1: &Disk, d2: &Disk) -> Result<FixedPointPair> {
    check_disjoint(d1, d2)?;
    let scale = d1.radius + d2.radius;
    let mut z = d1.center;
    let max_iter = 200_000_000usize;
    let mut iterations = 0;
    for it in 1..=max_iter {
        let next = reflect_circle(reflect_circle(z, d2)?, d1)?;
        let step = (next - z).norm();
        z = next;
        iterations = it;
        if step <= 1e-15 * scale {
            break;
        }
    }
    let p2 = reflect_circle(z, d2)?;
    let r = residual(d1, d2, z, p2)?;
    Ok(FixedPointPair { p1: z, p2, residual: r, iterations })
}

/// Closed form for the same points: the limit points `x0 ± sqrt(P)` of the
/// coaxial pencil, measured along the line of centers from `d1`'s center.
pub fn limit_points(d1: &Disk, d2: &Disk) -> Result<FixedPointPair> {
    check_disjoint(d1, d2)?;
    let l = d1.center.dist(d2.center);
    let u = (d2.center - d1.center) * (1.0 / l);
    let (r1, r2) = (d1.radius, d2.radius);
    let x0 = (l * l + r1 * r1 - r2 * r2) / (2.0 * l);
    // P = x0² - r1², written to avoid cancellation when the disks nearly touch.
    let g = l - r1 - r2;
    let power = g.max(0.0) * (g + 2.0 * r1) * (g + 2.0 * r2) * (g + 2.0 * r1 + 2.0 * r2) / (4.0 * l * l);
    let s = power.sqrt();
    let p1 = d1.center + u * (x0 - s);
    let p2 = d1.center + u * (x0 + s);
    let r = residual(d1, d2, p1, p2).unwrap_or(0.0);
    Ok(FixedPointPair { p1, p2, residual: r, iterations: 0 })
}

/// `q(x) = (ln|x - p1| - ln|x - p2|)/2π` and its gradient.
pub fn q_explicit(z: Point2, fp: &FixedPointPair) -> Result<(f64, Point2)> {
    let a = z - fp.p1;
    let b = z - fp.p2;
    let (na, nb) = (a.norm2(), b.norm2());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain { x: z.x, y: z.y });
    }
    let value = 0.5 * (na.ln() - nb.ln()) / TWO_PI;
    let grad = (a * (1.0 / na) - b * (1.0 / nb)) * (1.0 / TWO_PI);
    Ok((value, grad))
}

/// Leading term `2 r1 r2/(r1 + r2) (n·∇h)(0,0)` with `n = (1, 0)`.
pub fn alpha_disk_asymptotic(r1: f64, r2: f64, h: &HarmonicBackground) -> f64 {
    2.0 * r1 * r2 / (r1 + r2) * h.gradient(Point2::ORIGIN).x
}

/// `(sqrt(k1 + k2)/(sqrt2 π sqrt eps), alpha0 sqrt(k1 + k2)/(sqrt2 π))`.
pub fn blowup_reference(kappa1: f64, kappa2: f64, alpha0: f64, eps: f64) -> (f64, f64) {
    let s = (kappa1 + kappa2).sqrt() / (2f64.sqrt() * std::f64::consts::PI);
    (s / eps.sqrt(), alpha0 * s)
}

/// Disk automorphism `(w - alpha)/(1 - conj(alpha) w)`.
pub fn mobius_apply(alpha: Point2, w: Point2) -> Point2 {
    let (a, w) = (c(alpha), c(w));
    p((w - a) / (Complex64::new(1.0, 0.0) - a.conj() * w))
}

/// The automorphism of the unit disk that makes `B_rho(c)` concentric with
/// the unit circle: returns `alpha` and the image radius.
pub fn mobius_concentric(center: Point2, rho: f64) -> Result<(Point2, f64)> {
    if !(rho > 0.0) || center.norm() + rho >= 1.0 {
        return invalid("disk must lie strictly inside the unit disk");
    }
    let c2 = center.norm2();
    if c2 == 0.0 {
        return Ok((Point2::ORIGIN, rho));
    }
    let s = c2 - rho * rho + 1.0;
    // Rationalized root of the quadratic, stable when the disk nears the unit circle.
    let disc = ((s - 2.0 * c2.sqrt()) * (s + 2.0 * c2.sqrt())).max(0.0).sqrt();
    let alpha = center * ((s - disc) / (2.0 * c2));
    let edge = center + center * (rho / c2.sqrt());
    let rho_star = mobius_apply(alpha, edge).norm();
    Ok((alpha, rho_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeckAsymptotics {
    pub eps: f64,
    /// Center and radius of the image of `b1` under `1/(z - (1 + eps))`.
    pub b3_center: f64,
    pub b3_radius: f64,
    /// Real Möbius parameter and image radius from [`mobius_concentric`].
    pub alpha: f64,
    pub rho5: f64,
    /// Touching-limit center of the image disk and the resulting constants.
    pub c3: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `(1 - rho5)/sqrt(eps)`, to be compared with `gamma`.
    pub gamma_measured: f64,
    /// `(alpha + 1)/sqrt(eps)`, to be compared with `beta`.
    pub beta_measured: f64,
}

/// Neck normalization for a disk `b1 = B_r1((-r1, 0))` facing the unit disk
/// centered at `(1 + eps, 0)`. The map `1/(z - (1 + eps))` sends the exterior
/// of the unit disk to the unit disk and `b1` to a disk internally near the
/// point `-1`; the concentric normalization then has `alpha ≈ -1 + beta sqrt(eps)`
/// and `rho5 ≈ 1 - gamma sqrt(eps)` with `gamma = 2/beta`.
pub fn mobius_neck_asymptotics(b1: &Disk, eps: f64) -> Result<NeckAsymptotics> {
    let r1 = b1.radius;
    if (b1.center - Point2::new(-r1, 0.0)).norm() > 1e-12 * r1 {
        return Err(Error::Configuration("b1 must touch the origin from the left".into()));
    }
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    let pole = 1.0 + eps;
    let wa = 1.0 / (-2.0 * r1 - pole);
    let wb = 1.0 / (-pole);
    let b3_center = 0.5 * (wa + wb);
    let b3_radius = 0.5 * (wa - wb).abs();
    let (alpha, rho5) = mobius_concentric(Point2::new(b3_center, 0.0), b3_radius)?;
    let c3 = 0.5 * (-1.0 / (2.0 * r1 + 1.0) - 1.0);
    let beta = (2.0 * (c3 + 1.0) / c3.abs()).sqrt();
    let gamma = 2.0 / beta;
    let se = eps.sqrt();
    Ok(NeckAsymptotics {
        eps,
        b3_center,
        b3_radius,
        alpha: alpha.x,
        rho5,
        c3,
        beta,
        gamma,
        gamma_measured: (1.0 - rho5) / se,
        beta_measured: (alpha.x + 1.0) / se,
    })
}

/// Field of two perfectly conducting, charge-free disks in a uniform
/// background, as an image-dipole series.
#[derive(Debug, Clone)]
pub struct ImageSeries {
    pub d1: Disk,
    pub d2: Disk,
    /// Background `Re(b z) + c0`.
    pub b: Complex64,
    pub c0: f64,
    /// `(moment, position)`: each contributes `Re(moment/(z - position))`.
    pub dipoles: Vec<(Complex64, Complex64)>,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ImageSeries {
    pub fn eval(&self, z: Point2) -> (f64, Point2) {
        let zc = c(z);
        let mut f = self.b * zc;
        let mut df = self.b;
        for &(a, pos) in &self.dipoles {
            let inv = Complex64::new(1.0, 0.0) / (zc - pos);
            f += a * inv;
            df -= a * inv * inv;
        }
        (f.re + self.c0, Point2::new(df.re, -df.im))
    }

    /// Largest deviation of the boundary values from `lambda_j` on `n` samples per circle.
    pub fn boundary_residual(&self, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for (d, lam) in [(&self.d1, self.lambda1), (&self.d2, self.lambda2)] {
            for k in 0..n {
                let t = TWO_PI * k as f64 / n as f64;
                let z = d.center + Point2::new(t.cos(), t.sin()) * d.radius;
                worst = worst.max((self.eval(z).0 - lam).abs());
            }
        }
        worst
    }
}

/// Builds the image series; `n_terms = None` adds reflections until the
/// newest moments fall below `1e-18` relative to the background.
pub fn image_series_oracle(d1: &Disk, d2: &Disk, h: &HarmonicBackground, n_terms: Option<usize>) -> Result<ImageSeries> {
    check_disjoint(d1, d2)?;
    if h.degree() > 1 {
        return Err(Error::Unsupported("image series oracle needs a uniform background".into()));
    }
    let b = h.complex_coeff(1);
    let c0 = h.complex_coeff(0).re;
    let disks = [d1, d2];
    let mut dipoles = Vec::new();
    // Active chains: (moment, position, index of the disk that holds it).
    let mut front: Vec<(Complex64, Complex64, usize)> = Vec::new();
    for (j, d) in disks.iter().enumerate() {
        let a = -b.conj() * (d.radius * d.radius);
        front.push((a, c(d.center), j));
    }
    let scale = b.norm().max(f64::MIN_POSITIVE);
    let limit = n_terms.unwrap_or(10_000_000);
    while !front.is_empty() && dipoles.len() < limit {
        let mut next = Vec::with_capacity(2);
        for &(a, pos, j) in &front {
            dipoles.push((a, pos));
            let k = 1 - j;
            let dk = disks[k];
            let ck = c(dk.center);
            let r2 = dk.radius * dk.radius;
            let rel = (pos - ck).conj();
            let a_img = a.conj() * r2 / (rel * rel);
            let pos_img = ck + r2 / rel;
            if a_img.norm() > 1e-18 * scale * r2 || n_terms.is_some() {
                next.push((a_img, pos_img, k));
            }
        }
        front = next;
    }
    let mut s = ImageSeries { d1: *d1, d2: *d2, b, c0, dipoles, lambda1: 0.0, lambda2: 0.0 };
    // Boundary values at the far points of each circle.
    s.lambda1 = s.eval(d1.center - Point2::new(d1.radius, 0.0)).0;
    s.lambda2 = s.eval(d2.center + Point2::new(d2.radius, 0.0)).0;
    Ok(s)
}
