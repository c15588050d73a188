use std::sync::Arc;

use faer::Mat;
use serde::Serialize;

use super::{midpoint_residuals, Diagnostics};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{DumbbellCurve, InclusionPair, Piece, Point2};
use crate::linalg::{DenseLu, MAX_CONDITION};
use crate::potentials::{kstar_global_row, slp_global_row, BoundaryDensity, CurveOperator, HarmonicBackground};

/// Off-node residuals above this (relative to the background scale on the
/// curve) signal unresolved corners.
pub const CORNER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct DumbbellSolution {
    #[serde(skip)]
    pub density: BoundaryDensity,
    pub lambda_rho: f64,
    pub rho: f64,
    pub background: HarmonicBackground,
    pub diagnostics: Diagnostics,
    pub n_nodes: usize,
    pub n_panels: usize,
}

pub fn solve_dumbbell(db: &DumbbellCurve, h: &HarmonicBackground) -> Result<DumbbellSolution> {
    solve_dumbbell_with(db, h, Execution::default())
}

/// `u = h + S[φ] = λ` on the dumbbell boundary with `∫φ ds = 0`.
pub fn solve_dumbbell_with(db: &DumbbellCurve, h: &HarmonicBackground, exec: Execution) -> Result<DumbbellSolution> {
    h.validate()?;
    let curve = Arc::new(db.curve.clone());
    let ops = vec![CurveOperator::new(&curve, exec)];
    let m = curve.len();
    let n = m + 1;
    let mut buf = vec![0.0; n * n];
    exec.for_each_chunk(&mut buf, n, |row, out| {
        if row < m {
            slp_global_row(&ops, 0, row, &mut out[..m]);
            out[m] = -1.0;
        } else {
            out[..m].copy_from_slice(&curve.weights);
        }
    });
    let a = Mat::from_fn(n, n, |i, j| buf[i * n + j]);
    drop(buf);
    let lu = DenseLu::factor(a, exec)?;
    let condition = lu.condition_estimate();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned(condition));
    }
    let mut b: Vec<f64> = curve.nodes.iter().map(|p| -h.value(*p)).collect();
    b.push(0.0);
    let x = lu.solve(&b);
    let ax = {
        let xm = Mat::from_fn(n, 1, |i, _| x[i]);
        lu.matrix() * &xm
    };
    let lambda = x[m];
    let phi = x[..m].to_vec();
    let colloc = midpoint_residuals(&ops, &[(&phi[..], &[lambda][..], h)], exec)[0];
    let scale = curve.nodes.iter().map(|p| h.value(*p).abs()).fold(0.0, f64::max).max(1e-300);
    if colloc > CORNER_TOLERANCE * scale.max(1.0) {
        return Err(Error::Resolution(format!(
            "dumbbell residual {colloc:.3e} between nodes exceeds {CORNER_TOLERANCE:e}; refine the corner grading"
        )));
    }
    let density = BoundaryDensity::new(vec![curve.clone()], vec![phi])?;
    let charge_residual = density.charges()[0].abs();
    drop(ops);
    Ok(DumbbellSolution {
        lambda_rho: lambda,
        rho: db.rho,
        background: h.clone(),
        diagnostics: Diagnostics {
            colloc_residual: colloc,
            node_residual: (0..m).map(|i| (ax[(i, 0)] - b[i]).abs()).fold(0.0, f64::max),
            charge_residual,
            solve_residual: lu.relative_residual(&x, &b),
            condition_estimate: condition,
        },
        n_nodes: m,
        n_panels: db.panels().len(),
        density,
    })
}

/// Flux of `u_rho` into the left inclusion over the part of its boundary
/// outside `[-2 rho, 2 rho]²`.
pub fn alpha_rho(sol: &DumbbellSolution, pair: &InclusionPair, rho: f64, exec: Execution) -> Result<f64> {
    if pair.eps != 0.0 {
        return Err(Error::Configuration("alpha_rho needs the touching pair".into()));
    }
    if rho != sol.rho {
        return Err(Error::InvalidParameter(format!("solution was computed for rho = {}, not {rho}", sol.rho)));
    }
    let curve = &sol.density.curves[0];
    let panels = curve.panels().ok_or_else(|| Error::InvalidParameter("not a dumbbell solution".into()))?;
    let order = curve.len() / panels.len();
    let outside = |p: Point2| p.x.abs().max(p.y.abs()) > 2.0 * rho;
    let nodes: Vec<usize> = panels
        .iter()
        .enumerate()
        .filter(|(_, p)| p.piece == Piece::LeftArc && outside(p.eval(0.0).z))
        .flat_map(|(q, _)| q * order..(q + 1) * order)
        .collect();
    if nodes.is_empty() {
        return Err(Error::Configuration(format!("the doubled square of rho = {rho} covers the whole left boundary")));
    }
    let ops = sol.density.operators(exec);
    let phi = &sol.density.values[0];
    let h = &sol.background;
    let flux = exec.map(&nodes, |&i| {
        let mut row = vec![0.0; phi.len()];
        kstar_global_row(&ops, 0, i, &mut row);
        let kphi: f64 = row.iter().zip(phi).map(|(a, b)| a * b).sum();
        -(0.5 * phi[i] + kphi + h.normal_derivative(curve.nodes[i], curve.normal[i])) * curve.weights[i]
    });
    Ok(flux.iter().sum())
}
