//! Floating-potential boundary-value problems.
//!
//! Every problem is written as `u = h + S[φ]` and discretized into the square
//! augmented system
//!
//! ```text
//! [ S   -E ] [φ]   [-h]
//! [ Wᵀ   0 ] [λ] = [ c]
//! ```
//!
//! where `E` maps each curve's potential `λ_j` onto its nodes and `Wᵀφ = c`
//! fixes each curve's total charge `∫φ_j ds`. The reported flux into inclusion
//! `j` is `-∫φ_j ds`, so `u` uses `c = 0` and the singular function `q` (flux
//! `-1` into the left inclusion, `+1` into the right) uses `c = (1, -1)`.

mod dumbbell;
mod pair;

use serde::Serialize;

pub use dumbbell::{alpha_rho, solve_dumbbell, solve_dumbbell_with, DumbbellSolution};
pub use pair::{
    concentration_factor, eval_residual_field, solve_pair, solve_pair_with, solve_singular, solve_singular_with,
    PairProblem, PairSolution, PairSystem, MIN_EPS,
};

use crate::potentials::{offsets, slp_global_row_at, CurveOperator};

/// Quality measures attached to every solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Largest `|u - λ_j|` at points between the collocation nodes.
    pub colloc_residual: f64,
    /// Largest `|u - λ_j|` at the collocation nodes.
    pub node_residual: f64,
    /// Largest deviation of a total charge from its prescribed value.
    pub charge_residual: f64,
    /// Normwise backward error of the linear solve.
    pub solve_residual: f64,
    /// 1-norm condition estimate of the augmented matrix.
    pub condition_estimate: f64,
}

/// Stride so that at most `cap` midpoints per curve are checked.
const MAX_RESIDUAL_POINTS: usize = 1024;

/// Largest `|h + S[φ] - λ_c|` over off-node boundary points, for several
/// densities at once. `cases[k] = (flat density, λ per curve, background)`.
pub(crate) fn midpoint_residuals(
    ops: &[CurveOperator<'_>],
    cases: &[(&[f64], &[f64], &crate::potentials::HarmonicBackground)],
    exec: crate::exec::Execution,
) -> Vec<f64> {
    let (_, total) = offsets(ops);
    let mut targets = Vec::new();
    for (c, op) in ops.iter().enumerate() {
        let params = op.midpoint_params();
        let stride = params.len().div_ceil(MAX_RESIDUAL_POINTS).max(1);
        targets.extend(params.into_iter().step_by(stride).map(|p| (c, p)));
    }
    let per_point = exec.map(&targets, |&(c, param)| {
        let mut row = vec![0.0; total];
        let x = slp_global_row_at(ops, c, param, &mut row);
        cases
            .iter()
            .map(|(phi, lambda, h)| {
                let s: f64 = row.iter().zip(phi.iter()).map(|(a, b)| a * b).sum();
                (s + h.value(x) - lambda[c]).abs()
            })
            .collect::<Vec<f64>>()
    });
    (0..cases.len()).map(|k| per_point.iter().map(|v| v[k]).fold(0.0, f64::max)).collect()
}

/// Stress concentration summary for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub eps: f64,
    pub alpha_eps_potential: f64,
    pub alpha_eps_flux: f64,
    /// `(rho, alpha_rho)` pairs, largest `rho` first.
    pub alpha_rho_ladder: Vec<(f64, f64)>,
    pub alpha0_estimate: Option<f64>,
    /// `|alpha_rho - alpha_{rho/2}|` at the smallest ladder step.
    pub alpha0_error: Option<f64>,
    pub fits: Vec<crate::experiments::RateFit>,
    pub u_diagnostics: Diagnostics,
    pub q_diagnostics: Diagnostics,
}
