use serde::Serialize;

use super::config::SweepConfig;
use super::csv::{render, Cell};
use super::fit::{rate_fit, RateFit, RateModel};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{build_dumbbell_with, InclusionPair, Point2};
use crate::solver::{alpha_rho, concentration_factor, solve_dumbbell_with, ConcentrationReport, PairSystem};

pub const EPS_HEADER: [&str; 12] = [
    "eps",
    "N",
    "alpha_pot",
    "alpha_flux",
    "lambda1",
    "lambda2",
    "grad_mid_x",
    "grad_mid_y",
    "sqrt_eps_grad_mid",
    "qnorm_sampled",
    "colloc_residual",
    "charge_residual",
];

pub const RHO_HEADER: [&str; 7] = ["rho", "N", "alpha_rho", "lambda_rho", "ladder_diff", "colloc_residual", "charge_residual"];

/// Relative accuracy below which ladder differences are indistinguishable from roundoff.
const ROUNDOFF_FLOOR: f64 = 256.0 * f64::EPSILON;

/// Points per sampling line for the gradient-maximum proxy.
const Q_SAMPLES: usize = 33;

#[derive(Debug, Clone, Serialize)]
pub struct EpsRow {
    pub eps: f64,
    pub n: usize,
    pub alpha_pot: f64,
    pub alpha_flux: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub grad_mid: Point2,
    pub sqrt_eps_grad_mid: f64,
    pub qnorm_sampled: f64,
    pub colloc_residual: f64,
    pub charge_residual: f64,
    /// Failure message for a flagged row; its numbers are NaN.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EpsRow {
    fn failed(eps: f64, n: usize, e: &Error) -> Self {
        let nan = f64::NAN;
        Self {
            eps,
            n,
            alpha_pot: nan,
            alpha_flux: nan,
            lambda1: nan,
            lambda2: nan,
            grad_mid: Point2::new(nan, nan),
            sqrt_eps_grad_mid: nan,
            qnorm_sampled: nan,
            colloc_residual: nan,
            charge_residual: nan,
            error: Some(e.to_string()),
        }
    }

    fn cells(&self) -> Vec<Cell> {
        use Cell::*;
        vec![
            Float(self.eps),
            Int(self.n),
            Float(self.alpha_pot),
            Float(self.alpha_flux),
            Float(self.lambda1),
            Float(self.lambda2),
            Float(self.grad_mid.x),
            Float(self.grad_mid.y),
            Float(self.sqrt_eps_grad_mid),
            Float(self.qnorm_sampled),
            Float(self.colloc_residual),
            Float(self.charge_residual),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsSweep {
    pub rows: Vec<EpsRow>,
    /// Power fit of `qnorm_sampled` against `eps`.
    pub qnorm_fit: Option<RateFit>,
    /// Power fit of `|grad u(mid)|` against `eps`.
    pub grad_fit: Option<RateFit>,
    /// Non-monotone ladders and failed rows, for human review.
    pub flags: Vec<String>,
}

impl EpsSweep {
    pub fn to_csv(&self) -> String {
        render(&EPS_HEADER, &self.rows.iter().map(EpsRow::cells).collect::<Vec<_>>())
    }

    pub fn converged(&self) -> impl Iterator<Item = &EpsRow> {
        self.rows.iter().filter(|r| r.error.is_none())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoRow {
    pub rho: f64,
    pub n: usize,
    pub alpha_rho: f64,
    pub lambda_rho: f64,
    /// `|alpha_rho - alpha|` at the previous (larger) converged `rho`.
    pub ladder_diff: f64,
    pub colloc_residual: f64,
    pub charge_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RhoRow {
    fn cells(&self) -> Vec<Cell> {
        use Cell::*;
        vec![
            Float(self.rho),
            Int(self.n),
            Float(self.alpha_rho),
            Float(self.lambda_rho),
            Float(self.ladder_diff),
            Float(self.colloc_residual),
            Float(self.charge_residual),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoSweep {
    pub rows: Vec<RhoRow>,
    /// `alpha_rho` at the smallest converged `rho`.
    pub alpha0_estimate: Option<f64>,
    /// Remaining truncation error of the estimate under the exponential model,
    /// or the last ladder difference when that model does not apply.
    pub alpha0_error: Option<f64>,
    pub exp_fit: Option<RateFit>,
    pub power_fit: Option<RateFit>,
    pub flags: Vec<String>,
}

impl RhoSweep {
    pub fn to_csv(&self) -> String {
        render(&RHO_HEADER, &self.rows.iter().map(RhoRow::cells).collect::<Vec<_>>())
    }

    /// `(larger rho, |alpha_rho - alpha_next|)` for consecutive converged rows.
    pub fn ladder(&self) -> Vec<(f64, f64)> {
        let ok: Vec<&RhoRow> = self.rows.iter().filter(|r| r.error.is_none()).collect();
        ok.windows(2).map(|w| (w[0].rho, (w[1].alpha_rho - w[0].alpha_rho).abs())).collect()
    }
}

/// Drops the point with the largest abscissa unless that would leave fewer
/// than three points.
pub(crate) fn fit_points(mut pts: Vec<(f64, f64)>, include_largest: bool) -> Vec<(f64, f64)> {
    if !include_largest && pts.len() > 3 {
        let k = (0..pts.len()).max_by(|&a, &b| pts[a].0.total_cmp(&pts[b].0)).expect("non-empty");
        pts.remove(k);
    }
    pts
}

fn flag_monotone(flags: &mut Vec<String>, name: &str, values: &[f64]) {
    let inc = values.windows(2).all(|w| w[1] >= w[0]);
    let dec = values.windows(2).all(|w| w[1] <= w[0]);
    if values.len() > 2 && !inc && !dec {
        flags.push(format!("{name} is not monotone along the ladder: {values:?}"));
    }
}

/// Largest `|grad q|` over the gap segment `{(x, 0): 0 < x < eps}` and the
/// midline between the two curves.
fn sample_qnorm(q: &crate::solver::PairSolution, pair: &InclusionPair, exec: Execution) -> Result<f64> {
    let eps = pair.eps;
    let mut pts: Vec<Point2> = (0..Q_SAMPLES).map(|k| Point2::new(eps * (k as f64 + 0.5) / Q_SAMPLES as f64, 0.0)).collect();
    let right = pair.right_shape_translated();
    let delta = 0.25 * pair.rho_max();
    for k in 1..=Q_SAMPLES {
        let y = delta * k as f64 / Q_SAMPLES as f64;
        for y in [y, -y] {
            if let (Some(x1), Some(x2)) = (pair.left_shape.profile_x(y), right.profile_x(y)) {
                pts.push(Point2::new(0.5 * (x1 + x2), y));
            }
        }
    }
    let f = q.field(&pts, exec)?;
    Ok(f.iter().map(|(_, g)| g.norm()).fold(0.0, f64::max))
}

fn eps_row(cfg: &SweepConfig, eps: f64, exec: Execution) -> Result<EpsRow> {
    let pair = cfg.pair(eps)?;
    let sys = PairSystem::new(&pair, exec)?;
    let (mut us, q) = sys.solve_all(std::slice::from_ref(&cfg.background))?;
    let u = us.remove(0);
    let (alpha_pot, alpha_flux) = concentration_factor(&u, &q, exec)?;
    let right = pair.right_shape_translated();
    let mid_x = match (pair.left_shape.profile_x(0.0), right.profile_x(0.0)) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        _ => 0.5 * eps,
    };
    let grad_mid = u.field(&[Point2::new(mid_x, 0.0)], exec)?[0].1;
    let qnorm_sampled = sample_qnorm(&q, &pair, exec)?;
    Ok(EpsRow {
        eps,
        n: pair.left.len(),
        alpha_pot,
        alpha_flux,
        lambda1: u.lambda1,
        lambda2: u.lambda2,
        grad_mid,
        sqrt_eps_grad_mid: eps.sqrt() * grad_mid.norm(),
        qnorm_sampled,
        colloc_residual: u.diagnostics.colloc_residual.max(q.diagnostics.colloc_residual),
        charge_residual: u.diagnostics.charge_residual.max(q.diagnostics.charge_residual),
        error: None,
    })
}

/// Solves `u` and `q` at every `eps` of the config, in config order. A failed
/// point is reported as a flagged row and the sweep continues.
///
/// Points run one after another; each solve is itself data-parallel, which
/// keeps peak memory at one dense system.
pub fn sweep_epsilon(cfg: &SweepConfig, exec: Execution) -> Result<EpsSweep> {
    cfg.validate()?;
    let n = cfg.discretization.nodes;
    let rows: Vec<EpsRow> = cfg
        .eps_list()?
        .iter()
        .map(|&eps| eps_row(cfg, eps, exec).unwrap_or_else(|e| EpsRow::failed(eps, n, &e)))
        .collect();
    let mut flags: Vec<String> = rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("eps = {:e} failed: {e}", r.eps)))
        .collect();
    let ok: Vec<&EpsRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    flag_monotone(&mut flags, "alpha_pot", &ok.iter().map(|r| r.alpha_pot).collect::<Vec<_>>());
    flag_monotone(&mut flags, "sqrt_eps_grad_mid", &ok.iter().map(|r| r.sqrt_eps_grad_mid).collect::<Vec<_>>());
    let scaled_q: Vec<f64> = ok.iter().map(|r| r.eps.sqrt() * r.qnorm_sampled).collect();
    flag_monotone(&mut flags, "sqrt(eps) qnorm_sampled", &scaled_q);
    let fit = |value: &dyn Fn(&EpsRow) -> f64| {
        let pts = fit_points(ok.iter().map(|r| (r.eps, value(r))).collect(), cfg.fit_include_largest);
        rate_fit(&pts, RateModel::Power).ok()
    };
    let qnorm_fit = fit(&|r| r.qnorm_sampled);
    let grad_fit = fit(&|r| r.grad_mid.norm());
    Ok(EpsSweep { rows, qnorm_fit, grad_fit, flags })
}

/// Power fit of `|alpha_eps - alpha0|` against `eps |ln eps|`.
pub fn alpha_rate_fit(sweep: &EpsSweep, alpha0: f64, include_largest: bool) -> Result<RateFit> {
    let pts = sweep
        .converged()
        .map(|r| (r.eps * r.eps.ln().abs(), (r.alpha_pot - alpha0).abs()))
        .collect();
    rate_fit(&fit_points(pts, include_largest), RateModel::Power)
}

fn rho_row(cfg: &SweepConfig, touching: &InclusionPair, rho: f64, exec: Execution) -> Result<RhoRow> {
    let db = build_dumbbell_with(touching, rho, &cfg.dumbbell_options())?;
    let sol = solve_dumbbell_with(&db, &cfg.background, exec)?;
    let alpha = alpha_rho(&sol, touching, rho, exec)?;
    Ok(RhoRow {
        rho,
        n: sol.n_nodes,
        alpha_rho: alpha,
        lambda_rho: sol.lambda_rho,
        ladder_diff: f64::NAN,
        colloc_residual: sol.diagnostics.colloc_residual,
        charge_residual: sol.diagnostics.charge_residual,
        error: None,
    })
}

/// Remaining error `Σ_k c exp(-A 2^k/rho)` of `alpha_rho` under a fitted
/// exponential model, summed until the terms stop mattering.
fn exponential_tail(fit: &RateFit, rho: f64) -> f64 {
    let mut total = 0.0;
    let mut r = rho;
    for _ in 0..64 {
        let term = fit.predict(r);
        total += term;
        if term <= 1e-3 * total || term == 0.0 {
            break;
        }
        r *= 0.5;
    }
    total
}

/// Solves the dumbbell problem along the `rho` ladder of the config.
pub fn sweep_rho(cfg: &SweepConfig, exec: Execution) -> Result<RhoSweep> {
    cfg.validate()?;
    let touching = cfg.pair(0.0)?;
    let list = cfg.rho_list()?;
    if list[0] >= touching.rho_max() {
        return Err(Error::InvalidParameter(format!(
            "rho = {} is outside (0, {}) for this geometry",
            list[0],
            touching.rho_max()
        )));
    }
    let mut rows: Vec<RhoRow> = list
        .iter()
        .map(|&rho| {
            rho_row(cfg, &touching, rho, exec).unwrap_or_else(|e| RhoRow {
                rho,
                n: 0,
                alpha_rho: f64::NAN,
                lambda_rho: f64::NAN,
                ladder_diff: f64::NAN,
                colloc_residual: f64::NAN,
                charge_residual: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let mut prev: Option<f64> = None;
    for row in rows.iter_mut().filter(|r| r.error.is_none()) {
        if let Some(p) = prev {
            row.ladder_diff = (row.alpha_rho - p).abs();
        }
        prev = Some(row.alpha_rho);
    }
    let mut flags: Vec<String> = rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("rho = {} failed: {e}", r.rho)))
        .collect();
    let mut sweep = RhoSweep { rows, alpha0_estimate: None, alpha0_error: None, exp_fit: None, power_fit: None, flags: vec![] };
    let ladder = sweep.ladder();
    flag_monotone(&mut flags, "ladder_diff", &ladder.iter().map(|p| p.1).collect::<Vec<_>>());
    let pts = fit_points(ladder.clone(), cfg.fit_include_largest);
    sweep.exp_fit = rate_fit(&pts, RateModel::ExpReciprocal).ok();
    sweep.power_fit = rate_fit(&pts, RateModel::Power).ok();
    if let Some(last) = sweep.rows.iter().rev().find(|r| r.error.is_none()) {
        sweep.alpha0_estimate = Some(last.alpha_rho);
        sweep.alpha0_error = match (&sweep.exp_fit, ladder.last()) {
            (Some(f), _) if f.exponent > 0.0 => Some(exponential_tail(f, last.rho).max(ROUNDOFF_FLOOR * last.alpha_rho.abs())),
            (_, Some(&(_, d))) => Some(d),
            _ => None,
        };
    }
    sweep.flags = flags;
    Ok(sweep)
}

/// `alpha_eps` by both estimators at one gap, plus the touching-limit ladder
/// when the config carries a `rho_list`.
pub fn concentration_report(cfg: &SweepConfig, eps: f64, exec: Execution) -> Result<ConcentrationReport> {
    cfg.validate()?;
    let pair = cfg.pair(eps)?;
    let sys = PairSystem::new(&pair, exec)?;
    let (mut us, q) = sys.solve_all(std::slice::from_ref(&cfg.background))?;
    let u = us.remove(0);
    let (alpha_pot, alpha_flux) = concentration_factor(&u, &q, exec)?;
    let mut report = ConcentrationReport {
        eps,
        alpha_eps_potential: alpha_pot,
        alpha_eps_flux: alpha_flux,
        alpha_rho_ladder: vec![],
        alpha0_estimate: None,
        alpha0_error: None,
        fits: vec![],
        u_diagnostics: u.diagnostics,
        q_diagnostics: q.diagnostics,
    };
    if cfg.params.rho_list.is_some() {
        let rs = sweep_rho(cfg, exec)?;
        report.alpha_rho_ladder = rs.rows.iter().filter(|r| r.error.is_none()).map(|r| (r.rho, r.alpha_rho)).collect();
        report.alpha0_estimate = rs.alpha0_estimate;
        report.alpha0_error = rs.alpha0_error;
        report.fits = rs.exp_fit.into_iter().chain(rs.power_fit).collect();
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::HarmonicBackground;

    #[test]
    fn fit_points_drop_the_largest_abscissa() {
        let pts = vec![(0.1, 1.0), (0.4, 2.0), (0.2, 3.0), (0.05, 4.0)];
        let kept = fit_points(pts.clone(), false);
        assert_eq!(kept, vec![(0.1, 1.0), (0.2, 3.0), (0.05, 4.0)]);
        assert_eq!(fit_points(pts.clone(), true), pts);
        assert_eq!(fit_points(pts[..3].to_vec(), false).len(), 3);
    }

    #[test]
    fn small_eps_sweep_with_symmetric_background() {
        let mut cfg = SweepConfig::unit_disks(HarmonicBackground::y());
        cfg.discretization.nodes = 256;
        cfg.params.eps_list = Some(vec![0.2, 0.1, 0.05]);
        let s = sweep_epsilon(&cfg, Execution::Sequential).unwrap();
        assert_eq!(s.rows.len(), 3);
        for r in &s.rows {
            assert!(r.error.is_none());
            assert!(r.alpha_pot.abs() < 1e-7 && r.alpha_flux.abs() < 1e-7, "{r:?}");
            // |grad q| still blows up like eps^(-1/2) whatever the background.
            assert!(r.qnorm_sampled * r.eps.sqrt() > 0.25);
        }
        let csv = s.to_csv();
        assert!(csv.starts_with(&(EPS_HEADER.join(",") + "\n")));
        assert_eq!(csv.lines().count(), 4);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn failed_points_are_flagged_not_fatal() {
        let mut cfg = SweepConfig::unit_disks(HarmonicBackground::x());
        cfg.params.rho_list = Some(vec![0.3, 1e-13]);
        let s = sweep_rho(&cfg, Execution::Sequential).unwrap();
        assert!(s.rows[0].error.is_none(), "{:?}", s.rows[0]);
        assert!(s.rows[1].error.is_some());
        assert!(s.rows[1].alpha_rho.is_nan());
        assert_eq!(s.flags.len(), 1);
        assert_eq!(s.alpha0_estimate, Some(s.rows[0].alpha_rho));
        assert!(s.to_csv().lines().nth(2).unwrap().contains("nan"));
    }

    #[test]
    fn exponential_tail_sums_the_geometric_ladder() {
        let f = RateFit { model: RateModel::ExpReciprocal, c: 1.0, exponent: 1.0, residual: 0.0, max_residual: 0.0, log_range: 1.0, points: 3 };
        let t = exponential_tail(&f, 1.0);
        let want = (-1.0f64).exp() + (-2.0f64).exp() + (-4.0f64).exp() + (-8.0f64).exp();
        assert!((t - want).abs() < 1e-3 * want);
    }
}
