use std::sync::Arc;

use faer::Mat;
use serde::Serialize;

use super::{midpoint_residuals, Diagnostics};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{InclusionPair, ParametricCurve, Point2};
use crate::linalg::{DenseLu, MAX_CONDITION};
use crate::potentials::{
    boundary_flux, check_disjoint, slp_global_row, BoundaryDensity, CurveOperator, FieldEvaluator, FluxResult,
    HarmonicBackground,
};

/// Smallest gap accepted by the pair solvers.
pub const MIN_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairProblem {
    /// `u = h + S[φ]` with zero flux into both inclusions.
    Harmonic,
    /// Zero background, fluxes `(-1, +1)`.
    Singular,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairSolution {
    #[serde(skip)]
    pub density: BoundaryDensity,
    pub lambda1: f64,
    pub lambda2: f64,
    pub problem: PairProblem,
    /// Zero for the singular problem.
    pub background: HarmonicBackground,
    pub eps: f64,
    pub diagnostics: Diagnostics,
}

impl PairSolution {
    pub fn evaluator(&self, exec: Execution) -> FieldEvaluator<'_> {
        FieldEvaluator::new(&self.density, exec)
    }

    /// `(u, ∇u)` at exterior points.
    pub fn field(&self, points: &[Point2], exec: Execution) -> Result<Vec<(f64, Point2)>> {
        let ev = self.evaluator(exec);
        exec.map(points, |p| ev.field(&self.background, *p)).into_iter().collect()
    }

    /// Flux `∂_ν u` into inclusion `j` (0 = left, 1 = right).
    pub fn flux(&self, j: usize, exec: Execution) -> Result<FluxResult> {
        boundary_flux(&self.density, &self.background, j, exec)
    }

    pub fn lambdas(&self) -> [f64; 2] {
        [self.lambda1, self.lambda2]
    }

    pub fn curves(&self) -> [&ParametricCurve; 2] {
        [&self.density.curves[0], &self.density.curves[1]]
    }
}

/// One factorization of the augmented pair matrix, shared by all right-hand sides.
pub struct PairSystem {
    curves: [Arc<ParametricCurve>; 2],
    eps: f64,
    lu: DenseLu,
    condition: f64,
    exec: Execution,
}

impl PairSystem {
    pub fn new(pair: &InclusionPair, exec: Execution) -> Result<Self> {
        if pair.eps == 0.0 {
            return Err(Error::Configuration("touching pair: use the dumbbell solver for eps = 0".into()));
        }
        if pair.eps < MIN_EPS {
            return Err(Error::Unsupported(format!(
                "eps = {:e} is below the supported minimum {MIN_EPS:e}; dense Nyström accuracy is lost there",
                pair.eps
            )));
        }
        let across = pair.left.nodes.iter().filter(|p| p.y.abs() <= pair.eps.sqrt()).count();
        if across < 8 {
            return Err(Error::Resolution(format!(
                "only {across} nodes within |y| <= sqrt(eps) on the left inclusion; at least 8 are needed"
            )));
        }
        let curves = [Arc::new(pair.left.clone()), Arc::new(pair.right().clone())];
        check_disjoint(&[&curves[0], &curves[1]])?;
        let ops: Vec<CurveOperator<'_>> = curves.iter().map(|c| CurveOperator::new(c, exec)).collect();
        let (n1, n2) = (curves[0].len(), curves[1].len());
        let n = n1 + n2 + 2;
        let mut buf = vec![0.0; n * n];
        exec.for_each_chunk(&mut buf, n, |row, out| {
            if row < n1 {
                slp_global_row(&ops, 0, row, &mut out[..n1 + n2]);
                out[n1 + n2] = -1.0;
            } else if row < n1 + n2 {
                slp_global_row(&ops, 1, row - n1, &mut out[..n1 + n2]);
                out[n1 + n2 + 1] = -1.0;
            } else if row == n1 + n2 {
                out[..n1].copy_from_slice(&curves[0].weights);
            } else {
                out[n1..n1 + n2].copy_from_slice(&curves[1].weights);
            }
        });
        drop(ops);
        let a = Mat::from_fn(n, n, |i, j| buf[i * n + j]);
        drop(buf);
        let lu = DenseLu::factor(a, exec)?;
        let condition = lu.condition_estimate();
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned(condition));
        }
        Ok(Self { curves, eps: pair.eps, lu, condition, exec })
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    fn rhs(&self, h: &HarmonicBackground, charges: [f64; 2]) -> Vec<f64> {
        let mut b: Vec<f64> = self.curves.iter().flat_map(|c| c.nodes.iter().map(|p| -h.value(*p))).collect();
        b.extend_from_slice(&charges);
        b
    }

    fn solve_cases(&self, cases: &[(PairProblem, HarmonicBackground)]) -> Result<Vec<PairSolution>> {
        let (n1, n2) = (self.curves[0].len(), self.curves[1].len());
        let n = n1 + n2 + 2;
        let rhs: Vec<Vec<f64>> = cases
            .iter()
            .map(|(p, h)| match p {
                PairProblem::Harmonic => self.rhs(h, [0.0, 0.0]),
                PairProblem::Singular => self.rhs(h, [1.0, -1.0]),
            })
            .collect();
        let b = Mat::from_fn(n, rhs.len(), |i, k| rhs[k][i]);
        let x = self.lu.solve_columns(&b);
        let a = self.lu.matrix();
        let ax = a * &x;
        let ops: Vec<CurveOperator<'_>> = self.curves.iter().map(|c| CurveOperator::new(c, self.exec)).collect();
        let sols: Vec<Vec<f64>> = (0..rhs.len()).map(|k| x.col_as_slice(k).to_vec()).collect();
        let lambdas: Vec<[f64; 2]> = sols.iter().map(|s| [s[n1 + n2], s[n1 + n2 + 1]]).collect();
        let mid_cases: Vec<(&[f64], &[f64], &HarmonicBackground)> = sols
            .iter()
            .zip(&lambdas)
            .zip(cases)
            .map(|((s, l), (_, h))| (&s[..n1 + n2], &l[..], h))
            .collect();
        let colloc = midpoint_residuals(&ops, &mid_cases, self.exec);
        let mut out = Vec::with_capacity(cases.len());
        for (k, (problem, h)) in cases.iter().enumerate() {
            let s = &sols[k];
            let node_residual = (0..n1 + n2).map(|i| (ax[(i, k)] - rhs[k][i]).abs()).fold(0.0, f64::max);
            let density = BoundaryDensity::new(
                self.curves.to_vec(),
                vec![s[..n1].to_vec(), s[n1..n1 + n2].to_vec()],
            )?;
            let target = match problem {
                PairProblem::Harmonic => [0.0, 0.0],
                PairProblem::Singular => [1.0, -1.0],
            };
            let charges = density.charges();
            let charge_residual = charges.iter().zip(target).map(|(c, t)| (c - t).abs()).fold(0.0, f64::max);
            out.push(PairSolution {
                density,
                lambda1: lambdas[k][0],
                lambda2: lambdas[k][1],
                problem: *problem,
                background: h.clone(),
                eps: self.eps,
                diagnostics: Diagnostics {
                    colloc_residual: colloc[k],
                    node_residual,
                    charge_residual,
                    solve_residual: self.lu.relative_residual(s, &rhs[k]),
                    condition_estimate: self.condition,
                },
            });
        }
        Ok(out)
    }

    pub fn solve_harmonic(&self, h: &HarmonicBackground) -> Result<PairSolution> {
        h.validate()?;
        Ok(self.solve_cases(&[(PairProblem::Harmonic, h.clone())])?.remove(0))
    }

    pub fn solve_singular(&self) -> Result<PairSolution> {
        Ok(self.solve_cases(&[(PairProblem::Singular, HarmonicBackground::zero())])?.remove(0))
    }

    /// `u` for each background followed by `q`, from one factorization.
    pub fn solve_all(&self, backgrounds: &[HarmonicBackground]) -> Result<(Vec<PairSolution>, PairSolution)> {
        for h in backgrounds {
            h.validate()?;
        }
        let mut cases: Vec<(PairProblem, HarmonicBackground)> =
            backgrounds.iter().map(|h| (PairProblem::Harmonic, h.clone())).collect();
        cases.push((PairProblem::Singular, HarmonicBackground::zero()));
        let mut sols = self.solve_cases(&cases)?;
        let q = sols.pop().expect("singular case present");
        Ok((sols, q))
    }
}

pub fn solve_pair(pair: &InclusionPair, h: &HarmonicBackground) -> Result<PairSolution> {
    solve_pair_with(pair, h, Execution::default())
}

pub fn solve_pair_with(pair: &InclusionPair, h: &HarmonicBackground, exec: Execution) -> Result<PairSolution> {
    PairSystem::new(pair, exec)?.solve_harmonic(h)
}

pub fn solve_singular(pair: &InclusionPair) -> Result<PairSolution> {
    solve_singular_with(pair, Execution::default())
}

pub fn solve_singular_with(pair: &InclusionPair, exec: Execution) -> Result<PairSolution> {
    PairSystem::new(pair, exec)?.solve_singular()
}

fn same_configuration(u: &PairSolution, q: &PairSolution) -> bool {
    u.eps == q.eps
        && u.density.curves.iter().zip(&q.density.curves).all(|(a, b)| Arc::ptr_eq(a, b) || a.nodes == b.nodes)
}

/// `(alpha_potential, alpha_flux)`: the ratio of potential jumps, and the
/// flux of `r = u - alpha q` into the left inclusion, `∫∂_ν u + alpha`.
pub fn concentration_factor(u: &PairSolution, q: &PairSolution, exec: Execution) -> Result<(f64, f64)> {
    if u.problem != PairProblem::Harmonic || q.problem != PairProblem::Singular {
        return Err(Error::InvalidParameter("expected a harmonic solution and a singular solution".into()));
    }
    if !same_configuration(u, q) {
        return Err(Error::InvalidParameter("solutions belong to different configurations".into()));
    }
    let dq = q.lambda2 - q.lambda1;
    if !(dq.abs() > 1e-300) {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let alpha = (u.lambda2 - u.lambda1) / dq;
    let flux_u = u.flux(0, exec)?.integral;
    Ok((alpha, flux_u + alpha))
}

/// `∇r = ∇u - alpha ∇q` at exterior points.
pub fn eval_residual_field(
    u: &PairSolution,
    q: &PairSolution,
    alpha: f64,
    points: &[Point2],
    exec: Execution,
) -> Result<Vec<Point2>> {
    if !same_configuration(u, q) {
        return Err(Error::InvalidParameter("solutions belong to different configurations".into()));
    }
    let eu = u.evaluator(exec);
    let eq = q.evaluator(exec);
    exec.map(points, |p| {
        let gu = eu.field(&u.background, *p)?.1;
        if alpha == 0.0 {
            return Ok(gu);
        }
        let gq = eq.field(&q.background, *p)?.1;
        Ok(gu - gq * alpha)
    })
    .into_iter()
    .collect()
}
