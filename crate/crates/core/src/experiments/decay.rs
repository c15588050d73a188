use serde::Serialize;

use super::config::SweepConfig;
use super::csv::{render, Cell};
use super::fit::{rate_fit, RateFit, RateModel};
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::geometry::Point2;
use crate::solver::{concentration_factor, eval_residual_field, PairSystem};

pub const DECAY_HEADER: [&str; 4] = ["y", "x_mid", "grad_r", "inv_scale"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayOptions {
    pub y_min: f64,
    /// Upper end of the profile; `None` uses 90% of the contact graph neighbourhood.
    pub y_max: Option<f64>,
    pub points: usize,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self { y_min: 0.0, y_max: None, points: 41 }
    }
}

/// `|grad r|` below this fraction of `|grad u| + |alpha grad q|` is cancellation
/// noise; such points are reported but left out of the fit.
pub const NOISE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub y: f64,
    /// Midpoint between the two curves at height `y`.
    pub x_mid: f64,
    pub grad_r: f64,
    /// `1/(sqrt(eps) + |y|)`.
    pub inv_scale: f64,
    /// Whether `grad_r` lies above the cancellation floor and enters the fit.
    pub resolved: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    pub eps: f64,
    pub alpha: f64,
    pub rows: Vec<DecayRow>,
    /// `|grad r| ≈ c exp(-A/(sqrt(eps) + |y|))`.
    pub fit: RateFit,
}

impl DecayProfile {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<Cell>> = self
            .rows
            .iter()
            .map(|r| vec![Cell::Float(r.y), Cell::Float(r.x_mid), Cell::Float(r.grad_r), Cell::Float(r.inv_scale)])
            .collect();
        render(&DECAY_HEADER, &rows)
    }
}

/// `|grad r_eps|` along the midline of the gap, where `r_eps = u_eps - alpha_eps q_eps`,
/// with a fit of `ln|grad r|` against `-1/(sqrt(eps) + |y|)`.
pub fn decay_profile(cfg: &SweepConfig, eps: f64, opts: &DecayOptions, exec: Execution) -> Result<DecayProfile> {
    cfg.validate()?;
    if opts.points < 3 {
        return invalid("a decay profile needs at least 3 points");
    }
    let pair = cfg.pair(eps)?;
    let extent = 2.0 * pair.rho_max();
    let y_max = opts.y_max.unwrap_or(0.9 * extent);
    if !(opts.y_min >= 0.0 && y_max > opts.y_min && y_max < extent) {
        return invalid(format!("profile range [{}, {y_max}] is not inside the contact neighbourhood", opts.y_min));
    }
    let sys = PairSystem::new(&pair, exec)?;
    let (mut us, q) = sys.solve_all(std::slice::from_ref(&cfg.background))?;
    let u = us.remove(0);
    let (alpha, _) = concentration_factor(&u, &q, exec)?;
    let right = pair.right_shape_translated();
    let mut pts = Vec::with_capacity(opts.points);
    for k in 0..opts.points {
        let y = opts.y_min + (y_max - opts.y_min) * k as f64 / (opts.points - 1) as f64;
        let (Some(x1), Some(x2)) = (pair.left_shape.profile_x(y), right.profile_x(y)) else {
            return invalid(format!("no midline at height {y}"));
        };
        pts.push(Point2::new(0.5 * (x1 + x2), y));
    }
    let gu = u.field(&pts, exec)?;
    let gq = q.field(&pts, exec)?;
    let grads = eval_residual_field(&u, &q, alpha, &pts, exec)?;
    let se = eps.sqrt();
    let rows: Vec<DecayRow> = pts
        .iter()
        .zip(&grads)
        .zip(gu.iter().zip(&gq))
        .map(|((p, g), (a, b))| {
            let scale = a.1.norm() + alpha.abs() * b.1.norm();
            DecayRow {
                y: p.y,
                x_mid: p.x,
                grad_r: g.norm(),
                inv_scale: 1.0 / (se + p.y.abs()),
                resolved: g.norm() > NOISE_FLOOR * scale,
            }
        })
        .collect();
    let fit_pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.resolved).map(|r| (se + r.y.abs(), r.grad_r)).collect();
    let fit = rate_fit(&fit_pts, RateModel::ExpReciprocal)?;
    Ok(DecayProfile { eps, alpha, rows, fit })
}
