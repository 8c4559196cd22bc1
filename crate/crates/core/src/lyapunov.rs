//! First Lyapunov coefficient at a Hopf point from finite-difference
//! second- and third-order derivative tensors.

use crate::eigen::{eigenvalues, EigenError};
use crate::error::ModelError;
use crate::field::restricted_eval;
use crate::hopf::{epsilon_v0_sigma, HopfError};
use crate::linearize::{DeadlockEquilibrium, ReducedJacobianEntries};
use crate::params::ModelParams;
use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

pub const SECOND_ORDER_STEP: f64 = 1e-4;
pub const THIRD_ORDER_STEP: f64 = 1e-3;
/// Largest |Re lambda| accepted for the critical pair.
pub const CRITICAL_TOLERANCE: f64 = 1e-6;

type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Hopf(#[from] HopfError),
    #[error("no eigenvalue pair on the imaginary axis: closest has real part {0:e}")]
    NotCritical(f64),
    #[error("singular linear solve in the {0} term")]
    Singular(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    pub ell1: f64,
    pub omega0: f64,
    /// `<p, C(q, q, conj q)>`.
    pub t1: C64,
    /// `-2 <p, B(q, J^-1 B(q, conj q))>`.
    pub t2: C64,
    /// `<p, B(conj q, (2 i w - J)^-1 B(q, q))>`.
    pub t3: C64,
    pub q: Vec<C64>,
    pub p: Vec<C64>,
    /// `|J q - i w q|` and `|J^T p + i w p|`.
    pub defects: (f64, f64),
}

/// How the right eigenvector's scale and phase are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// Set this component to 1.
    Component(usize),
    /// Make the largest component real and positive with unit norm.
    Largest,
}

/// `<a, b> = sum conj(a_i) b_i`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Symmetric derivative tensors of a field at a point.
pub struct Derivatives {
    n: usize,
    hess: Vec<f64>,
    third: Vec<f64>,
}

impl Derivatives {
    pub fn new<F>(field: &F, point: &[f64]) -> Result<Self, ModelError>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, ModelError>,
    {
        let n = point.len();
        let mut hess = vec![0.0; n * n * n];
        let mut third = vec![0.0; n * n * n * n];
        let mut p = point.to_vec();
        let h = SECOND_ORDER_STEP;
        for j in 0..n {
            for k in j..n {
                let mut acc = vec![0.0; n];
                for (sj, sk) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    p.copy_from_slice(point);
                    p[j] += sj * h;
                    p[k] += sk * h;
                    let f = field(&p)?;
                    for i in 0..n {
                        acc[i] += sj * sk * f[i];
                    }
                }
                for i in 0..n {
                    let v = acc[i] / (4.0 * h * h);
                    hess[(i * n + j) * n + k] = v;
                    hess[(i * n + k) * n + j] = v;
                }
            }
        }
        let h = THIRD_ORDER_STEP;
        for j in 0..n {
            for k in j..n {
                for l in k..n {
                    let mut acc = vec![0.0; n];
                    for mask in 0..8u8 {
                        let s = |bit: u8| if mask & bit != 0 { -1.0 } else { 1.0 };
                        let (sj, sk, sl) = (s(1), s(2), s(4));
                        p.copy_from_slice(point);
                        p[j] += sj * h;
                        p[k] += sk * h;
                        p[l] += sl * h;
                        let f = field(&p)?;
                        for i in 0..n {
                            acc[i] += sj * sk * sl * f[i];
                        }
                    }
                    for i in 0..n {
                        let v = acc[i] / (8.0 * h * h * h);
                        for (a, b, c) in [(j, k, l), (j, l, k), (k, j, l), (k, l, j), (l, j, k), (l, k, j)] {
                            third[((i * n + a) * n + b) * n + c] = v;
                        }
                    }
                }
            }
        }
        Ok(Derivatives { n, hess, third })
    }

    pub fn b(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut s = C64::new(0.0, 0.0);
                for j in 0..n {
                    for k in 0..n {
                        s += self.hess[(i * n + j) * n + k] * x[j] * y[k];
                    }
                }
                s
            })
            .collect()
    }

    pub fn c(&self, x: &[C64], y: &[C64], z: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut s = C64::new(0.0, 0.0);
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            s += self.third[((i * n + j) * n + k) * n + l] * x[j] * y[k] * z[l];
                        }
                    }
                }
                s
            })
            .collect()
    }
}

fn null_vector(m: DMatrix<C64>) -> Vec<C64> {
    let n = m.ncols();
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let k = (0..n)
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .unwrap_or(0);
    (0..n).map(|i| v_t[(k, i)].conj()).collect()
}

fn solve(m: DMatrix<C64>, rhs: &[C64], what: &'static str) -> Result<Vec<C64>, LyapunovError> {
    m.lu()
        .solve(&DVector::from_column_slice(rhs))
        .map(|v| v.iter().copied().collect())
        .ok_or(LyapunovError::Singular(what))
}

fn matvec(m: &DMatrix<C64>, v: &[C64]) -> Vec<C64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|k| m[(i, k)] * v[k]).sum()).collect()
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// First Lyapunov coefficient of `field` at the equilibrium `point` with Jacobian `jac`.
pub fn lyapunov_coefficient<F>(
    field: F,
    point: &[f64],
    jac: &DMatrix<f64>,
    gauge: Gauge,
) -> Result<LyapunovReport, LyapunovError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ModelError>,
{
    let n = point.len();
    let spectrum = eigenvalues(jac)?;
    let lambda = spectrum
        .eigenvalues
        .iter()
        .filter(|z| z.im > 0.0)
        .min_by(|a, b| a.re.abs().total_cmp(&b.re.abs()))
        .copied()
        .ok_or(LyapunovError::NotCritical(f64::INFINITY))?;
    if lambda.re.abs() > CRITICAL_TOLERANCE {
        return Err(LyapunovError::NotCritical(lambda.re));
    }
    let omega = lambda.im;
    let i_omega = C64::new(0.0, omega);
    let jc: DMatrix<C64> = jac.map(|v| C64::new(v, 0.0));
    let eye = DMatrix::<C64>::identity(n, n);

    let mut q = null_vector(&jc - &eye * i_omega);
    let pivot = match gauge {
        Gauge::Component(k) if k < n && q[k].norm() > 1e-8 * norm(&q) => q[k],
        _ => {
            let k = (0..n).max_by(|&a, &b| q[a].norm().total_cmp(&q[b].norm())).unwrap_or(0);
            q[k] * (norm(&q) / q[k].norm())
        }
    };
    q.iter_mut().for_each(|z| *z /= pivot);
    let mut p = null_vector(jc.transpose() + &eye * i_omega);
    let s = inner(&p, &q);
    p.iter_mut().for_each(|z| *z /= s.conj());

    let jq = matvec(&jc, &q);
    let jtp = matvec(&jc.transpose(), &p);
    let d1: Vec<C64> = jq.iter().zip(&q).map(|(a, b)| a - i_omega * b).collect();
    let d2: Vec<C64> = jtp.iter().zip(&p).map(|(a, b)| a + i_omega * b).collect();

    let tensors = Derivatives::new(&field, point)?;
    let qb: Vec<C64> = q.iter().map(|z| z.conj()).collect();
    let t1 = inner(&p, &tensors.c(&q, &q, &qb));
    let a = solve(jc.clone(), &tensors.b(&q, &qb), "second")?;
    let t2 = -2.0 * inner(&p, &tensors.b(&q, &a));
    let two_i_omega = C64::new(0.0, 2.0 * omega);
    let b = solve(&eye * two_i_omega - &jc, &tensors.b(&q, &q), "third")?;
    let t3 = inner(&p, &tensors.b(&qb, &b));
    Ok(LyapunovReport {
        ell1: (t1.re + t2.re + t3.re) / (2.0 * omega),
        omega0: omega,
        t1,
        t2,
        t3,
        q,
        p,
        defects: (norm(&d1), norm(&d2)),
    })
}

/// Lyapunov coefficient of the restricted dynamics at its deadlock equilibrium, using
/// the analytic Jacobian and the gauge `q_3 = 1`.
pub fn first_lyapunov_coefficient(eps_v: f64, eta: f64, params: &ModelParams) -> Result<LyapunovReport, LyapunovError> {
    params.validate()?;
    params.require_unit_separation()?;
    let mut r = params.rates();
    r.eps_v = eps_v;
    r.eta = eta;
    let eq = DeadlockEquilibrium::new(eps_v, params.sigma);
    let jac = ReducedJacobianEntries::new(eps_v, params.sigma, eta).matrix();
    lyapunov_coefficient(
        |z| restricted_eval(z, r).map(|f| f.to_vec()),
        &eq.reduced_z.to_array(),
        &jac,
        Gauge::Component(2),
    )
}

/// [`first_lyapunov_coefficient`] at the critical `eps_v` for `eta`.
pub fn lyapunov_at_critical(eta: f64, params: &ModelParams) -> Result<(f64, LyapunovReport), LyapunovError> {
    let crit = epsilon_v0_sigma(eta, params.sigma)?;
    let rep = first_lyapunov_coefficient(crit.eps_v_critical, eta, params)?;
    Ok((crit.eps_v_critical, rep))
}
