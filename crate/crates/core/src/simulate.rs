//! The model's vector fields wrapped as integrable systems.

use crate::error::ModelError;
use crate::field::{full_field, mean_diff_eval, nav_value, restricted_eval};
use crate::integrate::{integrate, IntegrationError, IntegratorConfig, OdeSystem, Relaxation, Trajectory};
use crate::params::{ModelParams, Rates};
use crate::reduction::planar_field;
use crate::regime::{classify_regime, ClassifyError, RegimeReport};
use crate::state::{FullState, MeanDiffState, PlanarState};
use thiserror::Error;

/// Slack allowed on the state-space bounds before integration halts.
pub const INVARIANT_SLACK: f64 = 1e-6;

/// Six-dimensional mean-difference system; `(dv, bar_v)` relax toward `(dphi, bar_phi)`.
pub struct MeanDiffSystem {
    rates: Rates,
}

impl MeanDiffSystem {
    pub fn new(params: &ModelParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(MeanDiffSystem { rates: params.rates() })
    }
}

impl OdeSystem for MeanDiffSystem {
    fn dim(&self) -> usize {
        6
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<(), ModelError> {
        dy.copy_from_slice(&mean_diff_eval(y, self.rates)?);
        Ok(())
    }

    fn check(&self, y: &[f64]) -> Result<(), String> {
        MeanDiffState::from_slice(y)
            .check_bounds(self.rates.c, INVARIANT_SLACK)
            .map_err(|e| e.to_string())
    }

    fn relaxation(&self) -> Option<Relaxation> {
        Some(Relaxation {
            indices: vec![4, 5],
            rate: 1.0 / self.rates.eps_lambda,
        })
    }

    fn relaxation_targets(&self, y: &[f64], out: &mut [f64]) {
        out[0] = y[0];
        out[1] = y[1];
    }
}

/// Four-dimensional restricted system at a given `eps_v`.
pub struct RestrictedSystem {
    rates: Rates,
}

impl RestrictedSystem {
    pub fn new(params: &ModelParams, eps_v: f64) -> Result<Self, ModelError> {
        params.validate()?;
        if eps_v.is_nan() || eps_v <= 0.0 {
            return Err(ModelError::InvalidParam {
                name: "eps_v",
                reason: format!("must be > 0, got {eps_v}"),
            });
        }
        let mut rates = params.rates();
        rates.eps_v = eps_v;
        Ok(RestrictedSystem { rates })
    }
}

impl OdeSystem for RestrictedSystem {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<(), ModelError> {
        dy.copy_from_slice(&restricted_eval(y, self.rates)?);
        Ok(())
    }

    fn check(&self, y: &[f64]) -> Result<(), String> {
        let z = MeanDiffState::from_slice(&[y[0], y[1], y[2], y[3], y[0], y[1]]);
        z.check_bounds(self.rates.c, INVARIANT_SLACK).map_err(|e| e.to_string())
    }
}

/// Original coordinates packed as `[x.., m_1.., m_U, v..]`.
pub struct FullSystem<'p> {
    params: &'p ModelParams,
    d: usize,
    n: usize,
}

impl<'p> FullSystem<'p> {
    pub fn new(params: &'p ModelParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(FullSystem {
            params,
            d: params.dim(),
            n: params.n_tasks(),
        })
    }
}

impl OdeSystem for FullSystem<'_> {
    fn dim(&self) -> usize {
        self.d + 2 * self.n + 1
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<(), ModelError> {
        let s = FullState::from_slice(y, self.d, self.n)?;
        let f = full_field(&s, self.params)?;
        dy.copy_from_slice(&f.to_vec());
        Ok(())
    }

    fn check(&self, y: &[f64]) -> Result<(), String> {
        let m = &y[self.d..self.d + self.n + 1];
        let total: f64 = m.iter().sum();
        if (total - 1.0).abs() > INVARIANT_SLACK || m.iter().any(|&v| v < -INVARIANT_SLACK) {
            return Err(format!("motivation left the simplex: {m:?}"));
        }
        Ok(())
    }

    fn relaxation(&self) -> Option<Relaxation> {
        Some(Relaxation {
            indices: (self.d + self.n + 1..self.dim()).collect(),
            rate: 1.0 / self.params.eps_lambda,
        })
    }

    fn relaxation_targets(&self, y: &[f64], out: &mut [f64]) {
        let x = &y[..self.d];
        for (o, g) in out.iter_mut().zip(&self.params.goals) {
            *o = nav_value(x, g);
        }
    }
}

/// Planar slow-manifold dynamics, optionally carrying the running integral of the divergence.
pub struct PlanarSystem {
    pub sigma: f64,
    pub eta: f64,
    pub with_divergence: bool,
}

impl OdeSystem for PlanarSystem {
    fn dim(&self) -> usize {
        if self.with_divergence {
            3
        } else {
            2
        }
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<(), ModelError> {
        let x = PlanarState { x1: y[0], x2: y[1] };
        let f = planar_field(x, self.sigma, self.eta);
        dy[0] = f.x1;
        dy[1] = f.x2;
        if self.with_divergence {
            dy[2] = crate::reduction::planar_divergence(x, self.sigma, self.eta);
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// Integrates the six-dimensional system from `z0`.
pub fn simulate_mean_diff(
    params: &ModelParams,
    z0: &MeanDiffState,
    config: &IntegratorConfig,
) -> Result<Trajectory, SimulationError> {
    let sys = MeanDiffSystem::new(params)?;
    Ok(integrate(&sys, &z0.to_array(), config)?)
}

/// Simulates from `z0` and classifies the long-run behaviour of `dphi`.
pub fn simulate_and_classify(
    params: &ModelParams,
    z0: &MeanDiffState,
    config: &IntegratorConfig,
    transient_fraction: f64,
) -> Result<(Trajectory, RegimeReport), SimulationError> {
    let traj = simulate_mean_diff(params, z0, config)?;
    let report = classify_regime(&traj, 0, transient_fraction)?;
    Ok((traj, report))
}
