//! Config-driven sweeps over the gap `eps` and the neck half-width `rho`,
//! decay profiles of the regular part, rate fits and verification suites.
//!
//! Sweeps return typed rows in config order; `to_csv` renders them with the
//! fixed headers below. Failed points become flagged rows of NaNs instead of
//! aborting the sweep.

mod config;
mod csv;
mod decay;
mod fit;
mod sweep;
mod verify;

pub use config::{Discretization, GeometryConfig, ParamLists, SweepConfig, SweepMode, MAX_NODES, MIN_NODES};
pub use csv::{format_sci, render, Cell};
pub use decay::{decay_profile, DecayOptions, DecayProfile, DecayRow, DECAY_HEADER};
pub use fit::{rate_fit, RateFit, RateModel};
pub use sweep::{
    alpha_rate_fit, concentration_report, sweep_epsilon, sweep_rho, EpsRow, EpsSweep, RhoRow, RhoSweep, EPS_HEADER,
    RHO_HEADER,
};
pub use verify::{
    exterior_probe_points, invariant_check, verify, Check, Suite, VerifyReport, CHARGE_TOL, COLLOC_TOL, SOLVE_TOL,
};
