//! The symmetric deadlock equilibrium and Jacobians around it.

use crate::error::ModelError;
use crate::field::{mean_diff_eval, restricted_eval};
use crate::params::ModelParams;
use crate::state::{MeanDiffState, ReducedState};
use nalgebra::{Complex, DMatrix};

/// `-2(1 + sigma eps) m^2 - (4 eps^2 + 1) m + 1`; zero at the deadlock motivation.
pub fn deadlock_quadratic(m: f64, eps_v: f64, sigma: f64) -> f64 {
    -2.0 * (1.0 + sigma * eps_v) * m * m - (4.0 * eps_v * eps_v + 1.0) * m + 1.0
}

/// Positive root of [`deadlock_quadratic`], in rationalized form to avoid cancellation.
pub fn deadlock_mbar(eps_v: f64, sigma: f64) -> f64 {
    let b = 4.0 * eps_v * eps_v + 1.0;
    let disc = b * b + 8.0 * (1.0 + sigma * eps_v);
    2.0 / (b + disc.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeadlockEquilibrium {
    pub full_z: MeanDiffState,
    pub reduced_z: ReducedState,
    pub bar_m_d: f64,
}

impl DeadlockEquilibrium {
    /// Equilibrium for unit goal separation.
    pub fn new(eps_v: f64, sigma: f64) -> Self {
        let m = deadlock_mbar(eps_v, sigma);
        let full_z = MeanDiffState {
            d_phi: 0.0,
            bar_phi: 0.5,
            d_m: 0.0,
            bar_m: m,
            d_v: 0.0,
            bar_v: 0.5,
        };
        DeadlockEquilibrium {
            full_z,
            reduced_z: full_z.reduced(),
            bar_m_d: m,
        }
    }

    pub fn residual(&self, eps_v: f64, sigma: f64) -> f64 {
        deadlock_quadratic(self.bar_m_d, eps_v, sigma)
    }
}

/// Nonzero entries of the reduced Jacobian at the deadlock equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedJacobianEntries {
    pub j11: f64,
    pub j13: f64,
    pub j22: f64,
    pub j31: f64,
    pub j33: f64,
    pub j42: f64,
    pub j44: f64,
}

impl ReducedJacobianEntries {
    pub fn new(eps_v: f64, sigma: f64, eta: f64) -> Self {
        let m = deadlock_mbar(eps_v, sigma);
        let e = eps_v;
        let s = 1.0 + 4.0 * eta * eta;
        let coupling = 4.0 * e * m + (1.0 - 2.0 * m) * (1.0 + m) / e;
        ReducedJacobianEntries {
            j11: -16.0 * eta * eta * m / s.powf(1.5),
            j13: -2.0 / s.sqrt(),
            j22: -8.0 * m / s.sqrt(),
            j31: coupling,
            j33: -2.0 * e + (1.0 - 2.0 * m) / (2.0 * e),
            j42: coupling,
            j44: -2.0 * e - 2.0 * sigma * m - (1.0 + 4.0 * m) / (2.0 * e),
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(4, 4);
        j[(0, 0)] = self.j11;
        j[(0, 2)] = self.j13;
        j[(1, 1)] = self.j22;
        j[(2, 0)] = self.j31;
        j[(2, 2)] = self.j33;
        j[(3, 1)] = self.j42;
        j[(3, 3)] = self.j44;
        j
    }

    /// Roots of `(l - j22)(l - j44)(l^2 - (j11 + j33) l + j11 j33 - j13 j31)`.
    pub fn factored_roots(&self) -> [Complex<f64>; 4] {
        let tr = self.j11 + self.j33;
        let det = self.j11 * self.j33 - self.j13 * self.j31;
        let disc = tr * tr - 4.0 * det;
        let (r1, r2) = if disc >= 0.0 {
            let s = disc.sqrt();
            (Complex::new(0.5 * (tr + s), 0.0), Complex::new(0.5 * (tr - s), 0.0))
        } else {
            let s = (-disc).sqrt();
            (Complex::new(0.5 * tr, 0.5 * s), Complex::new(0.5 * tr, -0.5 * s))
        };
        [Complex::new(self.j22, 0.0), Complex::new(self.j44, 0.0), r1, r2]
    }
}

/// Analytic Jacobian of the restricted field at the deadlock equilibrium.
pub fn jacobian_reduced_analytic(eps_v: f64, params: &ModelParams) -> Result<DMatrix<f64>, ModelError> {
    params.validate()?;
    params.require_unit_separation()?;
    Ok(ReducedJacobianEntries::new(eps_v, params.sigma, params.eta).matrix())
}

/// Central-difference Jacobian. `step` defaults to `1e-6 * max(1, |point|)`; if a
/// perturbed state is inadmissible the step is reduced tenfold once.
pub fn jacobian_fd<F>(field: F, point: &[f64], step: Option<f64>) -> Result<DMatrix<f64>, ModelError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ModelError>,
{
    let norm = point.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h0 = step.unwrap_or(1e-6 * norm.max(1.0));
    match fd_with_step(&field, point, h0) {
        Ok(j) => Ok(j),
        Err(_) => fd_with_step(&field, point, 0.1 * h0),
    }
}

fn fd_with_step<F>(field: &F, point: &[f64], h: f64) -> Result<DMatrix<f64>, ModelError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ModelError>,
{
    let n = point.len();
    let mut p = point.to_vec();
    let mut jac: Option<DMatrix<f64>> = None;
    for k in 0..n {
        p[k] = point[k] + h;
        let fp = field(&p)?;
        p[k] = point[k] - h;
        let fm = field(&p)?;
        p[k] = point[k];
        let j = jac.get_or_insert_with(|| DMatrix::zeros(fp.len(), n));
        for i in 0..fp.len() {
            j[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac.unwrap_or_else(|| DMatrix::zeros(0, 0)))
}

/// Finite-difference Jacobian of the restricted field at its deadlock equilibrium.
pub fn reduced_jacobian_fd(eps_v: f64, params: &ModelParams) -> Result<DMatrix<f64>, ModelError> {
    params.require_unit_separation()?;
    let eq = DeadlockEquilibrium::new(eps_v, params.sigma);
    let mut r = params.rates();
    r.eps_v = eps_v;
    jacobian_fd(|z| restricted_eval(z, r).map(|f| f.to_vec()), &eq.reduced_z.to_array(), None)
}

/// Finite-difference Jacobian of the six-dimensional field at the deadlock equilibrium.
pub fn mean_diff_jacobian_fd(params: &ModelParams) -> Result<DMatrix<f64>, ModelError> {
    params.validate()?;
    params.require_unit_separation()?;
    let eq = DeadlockEquilibrium::new(params.eps_v, params.sigma);
    let r = params.rates();
    jacobian_fd(|z| mean_diff_eval(z, r).map(|f| f.to_vec()), &eq.full_z.to_array(), None)
}

/// Largest entrywise discrepancy between two Jacobians: relative for entries above
/// `1e-8 |J|`, and measured against `|J|` for entries that are numerically zero.
pub fn jacobian_discrepancy(analytic: &DMatrix<f64>, approx: &DMatrix<f64>) -> f64 {
    let scale = analytic.norm();
    analytic
        .iter()
        .zip(approx.iter())
        .map(|(a, b)| {
            if a.abs() > 1e-8 * scale {
                (a - b).abs() / a.abs()
            } else {
                (a - b).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}
