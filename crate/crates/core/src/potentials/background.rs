use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::Point2;

/// Highest supported polynomial degree.
pub const MAX_DEGREE: u32 = 4;

/// One term `re·Re(z^n) + im·Im(z^n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub n: u32,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Harmonic polynomial `h(x, y) = Σ re·Re(z^n) + im·Im(z^n)`, `z = x + iy`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HarmonicBackground {
    pub coeffs: Vec<HarmonicTerm>,
}

impl HarmonicBackground {
    pub fn new(coeffs: Vec<HarmonicTerm>) -> Result<Self> {
        let h = Self { coeffs };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.coeffs {
            if t.n > MAX_DEGREE {
                return invalid(format!("background degree {} exceeds {MAX_DEGREE}", t.n));
            }
            if !(t.re.is_finite() && t.im.is_finite()) {
                return invalid("background coefficients must be finite");
            }
        }
        Ok(())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `h = x`.
    pub fn x() -> Self {
        Self::term(1, 1.0, 0.0)
    }

    /// `h = y`.
    pub fn y() -> Self {
        Self::term(1, 0.0, 1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::term(0, c, 0.0)
    }

    pub fn term(n: u32, re: f64, im: f64) -> Self {
        assert!(n <= MAX_DEGREE);
        Self { coeffs: vec![HarmonicTerm { n, re, im }] }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.extend_from_slice(&other.coeffs);
        Self { coeffs }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|t| HarmonicTerm { n: t.n, re: s * t.re, im: s * t.im }).collect() }
    }

    /// Combined complex coefficient `c_n` with `h = Re Σ c_n z^n`.
    pub fn complex_coeff(&self, n: u32) -> Complex64 {
        self.coeffs.iter().filter(|t| t.n == n).map(|t| Complex64::new(t.re, -t.im)).sum()
    }

    /// Largest `n` with a non-zero coefficient; 0 for constants and zero.
    pub fn degree(&self) -> u32 {
        (0..=MAX_DEGREE).rev().find(|&n| self.complex_coeff(n).norm() != 0.0).unwrap_or(0)
    }

    fn series(&self, p: Point2) -> (Complex64, Complex64) {
        let z = Complex64::new(p.x, p.y);
        let mut f = Complex64::new(0.0, 0.0);
        let mut df = Complex64::new(0.0, 0.0);
        let mut zn = Complex64::new(1.0, 0.0);
        let mut zn1 = Complex64::new(0.0, 0.0);
        for n in 0..=MAX_DEGREE {
            let c = self.complex_coeff(n);
            f += c * zn;
            df += c * zn1 * n as f64;
            zn1 = zn;
            zn *= z;
        }
        (f, df)
    }

    pub fn value(&self, p: Point2) -> f64 {
        self.series(p).0.re
    }

    pub fn gradient(&self, p: Point2) -> Point2 {
        let df = self.series(p).1;
        Point2::new(df.re, -df.im)
    }

    pub fn normal_derivative(&self, p: Point2, normal: Point2) -> f64 {
        self.gradient(p).dot(normal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_and_gradients() {
        let p = Point2::new(3.0, 4.0);
        assert_eq!(HarmonicBackground::x().value(p), 3.0);
        assert_eq!(HarmonicBackground::x().gradient(p), Point2::new(1.0, 0.0));
        assert_eq!(HarmonicBackground::y().value(p), 4.0);
        // Re z² = x² - y², Im z³ = 3x²y - y³.
        let h = HarmonicBackground::term(2, 1.0, 0.0).plus(&HarmonicBackground::term(3, 0.0, 2.0));
        let (x, y) = (p.x, p.y);
        assert!((h.value(p) - (x * x - y * y + 2.0 * (3.0 * x * x * y - y * y * y))).abs() < 1e-12);
        let g = h.gradient(p);
        assert!((g.x - (2.0 * x + 12.0 * x * y)).abs() < 1e-12);
        assert!((g.y - (-2.0 * y + 2.0 * (3.0 * x * x - 3.0 * y * y))).abs() < 1e-12);
        assert_eq!(h.degree(), 3);
        assert_eq!(HarmonicBackground::constant(2.0).degree(), 0);
    }

    #[test]
    fn harmonic_by_finite_differences() {
        let h = HarmonicBackground::new(vec![
            HarmonicTerm { n: 4, re: 0.3, im: -1.1 },
            HarmonicTerm { n: 2, re: 0.0, im: 0.7 },
        ])
        .unwrap();
        let p = Point2::new(0.4, -0.9);
        // Truncation error of the 5-point stencil is d²/12 (u_xxxx + u_yyyy) ~ 1e-6 here,
        // against O(1) for a non-harmonic quartic.
        let d = 1e-3;
        let lap = (h.value(p + Point2::new(d, 0.0))
            + h.value(p - Point2::new(d, 0.0))
            + h.value(p + Point2::new(0.0, d))
            + h.value(p - Point2::new(0.0, d))
            - 4.0 * h.value(p))
            / (d * d);
        assert!(lap.abs() < 1e-4, "{lap}");
        assert!(HarmonicBackground::new(vec![HarmonicTerm { n: 5, re: 1.0, im: 0.0 }]).is_err());
    }

    #[test]
    fn json_form() {
        let h: HarmonicBackground = serde_json::from_str(r#"{"coeffs":[{"n":1,"re":1.0}]}"#).unwrap();
        assert_eq!(h, HarmonicBackground::x());
    }
}
