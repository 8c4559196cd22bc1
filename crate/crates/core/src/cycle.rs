//! Planar limit cycle: origin stability, the Poincaré map on `{x2 = 0, 0.1 < x1 < 1}`,
//! Floquet multipliers, fast-layer hyperbolicity and slow-manifold residuals.

use crate::eigen::{eigenvalues, EigenError};
use crate::error::ModelError;
use crate::field::mean_diff_eval;
use crate::integrate::{integrate, integrate_with_events, Direction, EventSpec, IntegrationError, IntegratorConfig};
use crate::params::ModelParams;
use crate::reduction::{fast_jacobian, planar_jacobian, slow_manifold};
use crate::simulate::{MeanDiffSystem, PlanarSystem};
use crate::state::{MeanDiffState, PlanarState};
use nalgebra::DMatrix;
use thiserror::Error;

pub const SECTION: (f64, f64) = (0.1, 1.0);
/// Sampling interval of [`slow_manifold_error`] when the config sets none.
pub const SLOW_MANIFOLD_DT: f64 = 0.01;

#[derive(Debug, Error)]
pub enum CycleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("section coordinate {0} outside (0.1, 1)")]
    OffSection(f64),
    #[error("orbit from p = {p} did not return to the section within t = {t_max}")]
    NoReturn { p: f64, t_max: f64 },
    #[error("no limit cycle: {0}")]
    NoCycle(String),
    #[error("fixed-point iteration did not converge after {0} steps")]
    NoConvergence(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginClass {
    StableFocus,
    UnstableFocus,
    StableNode,
    UnstableNode,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginStability {
    pub jacobian: [[f64; 2]; 2],
    pub trace: f64,
    pub det: f64,
    pub class: OriginClass,
}

/// Linearization of the planar dynamics at the origin.
pub fn origin_stability(sigma: f64, eta: f64) -> OriginStability {
    let j = planar_jacobian(PlanarState { x1: 0.0, x2: 0.0 }, sigma, eta);
    let trace = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let class = if det < 0.0 {
        OriginClass::Saddle
    } else if det == 0.0 || trace == 0.0 {
        OriginClass::Degenerate
    } else {
        match (trace > 0.0, trace * trace < 4.0 * det) {
            (true, true) => OriginClass::UnstableFocus,
            (false, true) => OriginClass::StableFocus,
            (true, false) => OriginClass::UnstableNode,
            (false, false) => OriginClass::StableNode,
        }
    };
    OriginStability { jacobian: j, trace, det, class }
}

/// Smallest `sigma` for which the origin of the planar dynamics is unstable.
pub fn instability_threshold(eta: f64) -> f64 {
    48.0 * eta * eta / (1.0 + 4.0 * eta * eta).powf(1.5)
}

/// Eigenvalues of the fast layer at `(x, h_y(x))` with `eps_v = 0`.
pub fn layer_eigenvalues(x: PlanarState, params: &ModelParams) -> Result<[f64; 2], CycleError> {
    let j = fast_jacobian(x, slow_manifold(x, params.sigma), 0.0, params);
    let m = DMatrix::from_row_slice(2, 2, &[j[0][0], j[0][1], j[1][0], j[1][1]]);
    let s = eigenvalues(&m)?;
    let mut out = [s.eigenvalues[0].re, s.eigenvalues[1].re];
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
}

impl Default for PoincareSettings {
    fn default() -> Self {
        PoincareSettings {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            t_max: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareRecord {
    pub p_in: f64,
    pub p_out: f64,
    pub transit_time: f64,
    /// Integral of the planar divergence along the transit.
    pub divergence_integral: f64,
    /// Largest `|x1|` reached along the transit.
    pub max_abs_x1: f64,
}

/// Follows the planar flow from `(p, 0)` to its next upward crossing of `x2 = 0`.
pub fn poincare_map(p: f64, sigma: f64, eta: f64) -> Result<PoincareRecord, CycleError> {
    poincare_map_with(p, sigma, eta, &PoincareSettings::default())
}

pub fn poincare_map_with(p: f64, sigma: f64, eta: f64, settings: &PoincareSettings) -> Result<PoincareRecord, CycleError> {
    if !(p > SECTION.0 && p < SECTION.1) {
        return Err(CycleError::OffSection(p));
    }
    let sys = PlanarSystem {
        sigma,
        eta,
        with_divergence: true,
    };
    let cfg = IntegratorConfig {
        rel_tol: settings.rel_tol,
        abs_tol: settings.abs_tol,
        max_step: 0.05,
        t_end: settings.t_max,
        ..Default::default()
    };
    // Departure is upward (x2' > 0 at (p, 0) for p > 0), so the return is the next upward crossing.
    let ev = [EventSpec::new("section", Direction::Rising, |y: &[f64]| y[1]).terminal(1)];
    let traj = integrate_with_events(&sys, &[p, 0.0, 0.0], &cfg, &ev)?;
    let max_abs_x1 = traj.iter().map(|(_, y)| y[0].abs()).fold(0.0, f64::max);
    let hit = traj.events.first().ok_or(CycleError::NoReturn { p, t_max: settings.t_max })?;
    Ok(PoincareRecord {
        p_in: p,
        p_out: hit.state[0],
        transit_time: hit.t,
        divergence_integral: hit.state[2],
        max_abs_x1,
    })
}

/// Central difference `(g(p + h) - g(p - h)) / 2h`.
pub fn central_difference<E>(g: impl Fn(f64) -> Result<f64, E>, p: f64, h: f64) -> Result<f64, E> {
    Ok((g(p + h)? - g(p - h)?) / (2.0 * h))
}

pub fn poincare_derivative(p: f64, sigma: f64, eta: f64, h: f64) -> Result<f64, CycleError> {
    if !(p - h > SECTION.0 && p + h < SECTION.1) {
        return Err(CycleError::OffSection(if p - h <= SECTION.0 { p - h } else { p + h }));
    }
    central_difference(|x| poincare_map(x, sigma, eta).map(|r| r.p_out), p, h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetReport {
    /// Nontrivial multiplier from the slope of the Poincaré map.
    pub rho2: f64,
    pub dp_value: f64,
    /// Step used for the slope.
    pub dp_step: f64,
    pub fixed_point: f64,
    pub fixed_point_defect: f64,
    pub period: f64,
    /// `ln(rho1 rho2) = integral of the divergence over one period`, with `rho1 = 1`.
    pub log_rho2_from_trace: f64,
    pub max_abs_x1: f64,
    pub iterations: usize,
}

/// Damped fixed-point iteration `p <- p + (P(p) - p) / 2` from `p = 0.9`, accepting
/// `P(p)` early when it maps to itself.
pub fn find_limit_cycle(sigma: f64, eta: f64) -> Result<FloquetReport, CycleError> {
    if sigma.is_nan() || sigma <= instability_threshold(eta) {
        return Err(CycleError::NoCycle(format!(
            "origin is stable: sigma = {sigma} <= {}",
            instability_threshold(eta)
        )));
    }
    let mut p = 0.9;
    let mut iterations = 0;
    let rec = loop {
        if iterations >= 100 {
            return Err(CycleError::NoConvergence(iterations));
        }
        iterations += 1;
        let rec = match poincare_map(p, sigma, eta) {
            Ok(r) => r,
            Err(CycleError::OffSection(_)) | Err(CycleError::NoReturn { .. }) => {
                return Err(CycleError::NoCycle(format!("orbit from p = {p} does not come back to the section")))
            }
            Err(e) => return Err(e),
        };
        if !(rec.p_out > SECTION.0 && rec.p_out < SECTION.1) {
            return Err(CycleError::NoCycle(format!("return value {} left the section", rec.p_out)));
        }
        if (rec.p_out - p).abs() < 1e-10 {
            break rec;
        }
        // With DP close to zero the undamped image is usually already fixed.
        if let Ok(next) = poincare_map(rec.p_out, sigma, eta) {
            if (next.p_out - rec.p_out).abs() < 1e-10 {
                break next;
            }
        }
        p += 0.5 * (rec.p_out - p);
    };
    let fixed_point = rec.p_out;
    let defect = (poincare_map(fixed_point, sigma, eta)?.p_out - fixed_point).abs();
    let h = 1e-4f64.min(0.5 * (SECTION.1 - fixed_point)).min(0.5 * (fixed_point - SECTION.0));
    let dp = poincare_derivative(fixed_point, sigma, eta, h)?;
    let orbit = poincare_map(fixed_point, sigma, eta)?;
    Ok(FloquetReport {
        rho2: dp.abs(),
        dp_value: dp,
        dp_step: h,
        fixed_point,
        fixed_point_defect: defect,
        period: orbit.transit_time,
        log_rho2_from_trace: orbit.divergence_integral,
        max_abs_x1: orbit.max_abs_x1,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlowManifoldError {
    pub times: Vec<f64>,
    /// `y1(t) - h_{y,1}(x(t))`.
    pub residual: Vec<f64>,
    pub jump_mask: Vec<bool>,
    /// `|d(dm)/dt|` at each sample.
    pub dm_rate: Vec<f64>,
}

impl SlowManifoldError {
    pub fn median_off_jump(&self) -> Option<f64> {
        let mut v: Vec<f64> = self
            .residual
            .iter()
            .zip(&self.jump_mask)
            .filter(|(_, j)| !**j)
            .map(|(r, _)| r.abs())
            .collect();
        median(&mut v)
    }

    /// Fraction of samples after `t_from` with `|residual| > threshold` lying within
    /// `window` of a jump sample.
    pub fn spike_colocation(&self, threshold: f64, window: f64, t_from: f64) -> Option<f64> {
        let jumps: Vec<f64> = self.times.iter().zip(&self.jump_mask).filter(|(_, j)| **j).map(|(t, _)| *t).collect();
        let spikes: Vec<f64> = self
            .times
            .iter()
            .zip(&self.residual)
            .filter(|(t, r)| **t >= t_from && r.abs() > threshold)
            .map(|(t, _)| *t)
            .collect();
        if spikes.is_empty() {
            return None;
        }
        let near = spikes
            .iter()
            .filter(|&&t| {
                let i = jumps.partition_point(|&s| s < t);
                let before = i.checked_sub(1).map(|k| t - jumps[k]);
                let after = jumps.get(i).map(|s| s - t);
                before.into_iter().chain(after).any(|d| d <= window)
            })
            .count();
        Some(near as f64 / spikes.len() as f64)
    }
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Runs the six-dimensional system from the standard initial state and compares
/// the fast variable `y1 = (1 - 2 bar_m) / eps_v` with the slow manifold.
/// Samples where `|d(dm)/dt|` exceeds ten times its median are marked as jumps.
pub fn slow_manifold_error(params: &ModelParams, config: &IntegratorConfig) -> Result<SlowManifoldError, CycleError> {
    params.require_unit_separation()?;
    let sys = MeanDiffSystem::new(params)?;
    // Adaptive steps crowd into the jumps; a uniform grid keeps the median time-weighted.
    let config = IntegratorConfig {
        output_dt: Some(config.output_dt.unwrap_or(SLOW_MANIFOLD_DT)),
        ..config.clone()
    };
    let traj = integrate(&sys, &MeanDiffState::standard_initial().to_array(), &config)?;
    let rates = params.rates();
    let mut out = SlowManifoldError {
        times: traj.times.clone(),
        residual: Vec::with_capacity(traj.len()),
        jump_mask: Vec::with_capacity(traj.len()),
        dm_rate: Vec::with_capacity(traj.len()),
    };
    for (_, z) in traj.iter() {
        let x = PlanarState { x1: z[0], x2: z[2] };
        let y1 = (1.0 - 2.0 * z[3]) / params.eps_v;
        out.residual.push(y1 - slow_manifold(x, params.sigma).y1);
        out.dm_rate.push(mean_diff_eval(z, rates)?[2].abs());
    }
    let threshold = 10.0 * median(&mut out.dm_rate.clone()).unwrap_or(0.0);
    out.jump_mask = out.dm_rate.iter().map(|&r| r > threshold).collect();
    Ok(out)
}
