//! Gauss–Legendre rules, Legendre-series interpolation on a panel, and
//! product-integration weights for the logarithmic kernel.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes in increasing order.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = if (1.0 - x * x).abs() < 1e-300 {
        let s = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// `P_0(x) .. P_{n-1}(x)` written into `out`.
pub fn legendre_values(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n > 1 {
        out[1] = x;
    }
    for k in 2..n {
        out[k] = ((2 * k - 1) as f64 * x * out[k - 1] - (k - 1) as f64 * out[k - 2]) / k as f64;
    }
}

/// `∫_{-1}^{1} P_k(t) ln|t - x| dt` for `k < n`, `x ∈ (-1, 1)`.
///
/// Uses `(2k+1) I_k = 2 (Q_{k+1} - Q_{k-1})` with Ferrers functions of the
/// second kind on the cut.
pub fn legendre_log_moments(x: f64, n: usize) -> Vec<f64> {
    assert!(x > -1.0 && x < 1.0, "log moments need an interior point");
    let mut q = vec![0.0; n + 1];
    q[0] = 0.5 * ((1.0 + x) / (1.0 - x)).ln();
    if n >= 1 {
        q[1] = x * q[0] - 1.0;
    }
    for k in 1..n {
        q[k + 1] = ((2 * k + 1) as f64 * x * q[k] - k as f64 * q[k - 1]) / (k + 1) as f64;
    }
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    out[0] = (1.0 - x) * (1.0 - x).ln() + (1.0 + x) * (1.0 + x).ln() - 2.0;
    for k in 1..n {
        out[k] = 2.0 * (q[k + 1] - q[k - 1]) / (2 * k + 1) as f64;
    }
    out
}

/// Maps nodal values on the Gauss nodes to Legendre coefficients:
/// `c_n = Σ_k T[n][k] f_k`.
pub fn legendre_transform(rule: &GaussLegendre) -> Vec<Vec<f64>> {
    let p = rule.len();
    let mut t = vec![vec![0.0; p]; p];
    let mut vals = vec![0.0; p];
    for (k, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        legendre_values(x, &mut vals);
        for n in 0..p {
            t[n][k] = 0.5 * (2 * n + 1) as f64 * w * vals[n];
        }
    }
    t
}

/// Values of the Lagrange basis of the Gauss nodes at `s`.
pub fn lagrange_basis(transform: &[Vec<f64>], s: f64, out: &mut [f64]) {
    let p = out.len();
    let mut vals = vec![0.0; p];
    legendre_values(s, &mut vals);
    out.fill(0.0);
    for (n, row) in transform.iter().enumerate() {
        let pn = vals[n];
        for (o, &t) in out.iter_mut().zip(row) {
            *o += pn * t;
        }
    }
}

/// Weights `v_k` with `Σ_k v_k g(s_k) ≈ ∫_{-1}^{1} ln|s - s_i| g(s) ds` for
/// smooth `g`, exact when `g` is a polynomial of degree `< p`.
pub fn log_product_weights(transform: &[Vec<f64>], s_i: f64) -> Vec<f64> {
    let p = transform.len();
    let moments = legendre_log_moments(s_i, p);
    let mut v = vec![0.0; p];
    for (n, row) in transform.iter().enumerate() {
        for (vk, &t) in v.iter_mut().zip(row) {
            *vk += moments[n] * t;
        }
    }
    v
}

/// Kress weights for `∫_0^{2π} ln(4 sin²((s-t)/2)) f(t) dt` on `2n`
/// equispaced nodes, as a function of the index offset `(i - j) mod 2n`.
pub fn kress_log_weights(n_nodes: usize) -> Vec<f64> {
    kress_log_weights_at(n_nodes, 0.0)
}

/// Kress weights for an arbitrary target parameter `s`, indexed by node.
///
/// `R_j(s) = -(2π/n) Σ_{m<n} cos(m(s - t_j))/m - (π/n²) cos(n(s - t_j))`; the
/// cosine sum is one FFT of length `2n`.
pub fn kress_log_weights_at(n_nodes: usize, s: f64) -> Vec<f64> {
    assert!(n_nodes.is_multiple_of(2) && n_nodes >= 2);
    let n = n_nodes / 2;
    let nf = n as f64;
    let mut a: Vec<Complex64> = (0..n_nodes)
        .map(|m| {
            if m >= 1 && m < n {
                Complex64::from_polar(1.0 / m as f64, m as f64 * s)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(n_nodes).process(&mut a);
    a.iter()
        .enumerate()
        .map(|(j, v)| {
            let d = s - PI * j as f64 / nf;
            -2.0 * PI / nf * v.re - PI / (nf * nf) * (nf * d).cos()
        })
        .collect()
}
