//! Locating the Hopf bifurcation of the deadlock equilibrium and sweeping the
//! oscillation amplitude across it.

use crate::eigen::{eigenvalues, EigenError, Spectrum};
use crate::error::ModelError;
use crate::field::mean_diff_eval;
use crate::integrate::{integrate, IntegratorConfig};
use crate::linearize::{deadlock_quadratic, jacobian_fd, DeadlockEquilibrium, ReducedJacobianEntries};
use crate::params::ModelParams;
use crate::regime::{classify_regime, Regime};
use crate::simulate::{RestrictedSystem, SimulationError};
use crate::state::MeanDiffState;
use thiserror::Error;

pub const DEFAULT_SIGMA: f64 = 4.0;
pub const BRACKET_6D: (f64, f64) = (0.01, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopfMethod {
    AnalyticEta0,
    RootG1,
    Bisection6d,
}

impl HopfMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            HopfMethod::AnalyticEta0 => "analytic-eta0",
            HopfMethod::RootG1 => "root-g1",
            HopfMethod::Bisection6d => "bisection-6d",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfReport {
    pub eps_v_critical: f64,
    pub omega0: f64,
    pub eta_used: f64,
    pub method: HopfMethod,
    /// `|g1|` at the root for the reduced methods, `|Re lambda|` for the 6-d bisection.
    pub residual: f64,
    /// The other root of `g1 = 0` beyond `eps_v = 1/2`, where `bar_m` would be negative.
    pub larger_root: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HopfError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("no sign change of the leading real part on [{lo}, {hi}]")]
    NotFound { lo: f64, hi: f64 },
    #[error("root continuation lost its bracket: {0}")]
    Domain(String),
    #[error("stability changes through a real eigenvalue at eps_v = {0}")]
    NotHopf(f64),
}

/// Motivation level at which the reduced Jacobian has zero trace.
pub fn trace_zero_mbar(eps_v: f64, eta: f64) -> f64 {
    let s = 1.0 + 4.0 * eta * eta;
    (1.0 - 4.0 * eps_v * eps_v) / (2.0 + 32.0 * eta * eta * eps_v / s.powf(1.5))
}

/// Zero exactly when the deadlock motivation makes the reduced trace vanish.
/// At `eta = 0`, `sigma = 4` this is `2 eps - (1 - 4 eps^2)^2`.
pub fn g1(eps_v: f64, eta: f64, sigma: f64) -> f64 {
    deadlock_quadratic(trace_zero_mbar(eps_v, eta), eps_v, sigma) / (2.0 * eps_v)
}

pub fn g1_slope(eps_v: f64, eta: f64, sigma: f64) -> f64 {
    let h = 1e-6;
    (g1(eps_v + h, eta, sigma) - g1(eps_v - h, eta, sigma)) / (2.0 * h)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

fn first_sign_change(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> Option<(f64, f64)> {
    let mut a = lo;
    let mut fa = f(a);
    for k in 1..=samples {
        let b = lo + (hi - lo) * k as f64 / samples as f64;
        let fb = f(b);
        if (fa < 0.0) != (fb < 0.0) {
            return Some((a, b));
        }
        a = b;
        fa = fb;
    }
    None
}

fn omega_at(eps_v: f64, sigma: f64, eta: f64) -> Result<f64, HopfError> {
    let j = ReducedJacobianEntries::new(eps_v, sigma, eta);
    let det = j.j11 * j.j33 - j.j13 * j.j31;
    if det <= 0.0 {
        return Err(HopfError::NotHopf(eps_v));
    }
    Ok(det.sqrt())
}

/// Critical `eps_v` of the reduced system for `sigma = 4`.
pub fn epsilon_v0(eta: f64) -> Result<HopfReport, HopfError> {
    epsilon_v0_sigma(eta, DEFAULT_SIGMA)
}

/// Smaller root of `g1` on `(0, 1/2]`: by bisection at `eta = 0`, then continued to `eta`.
pub fn epsilon_v0_sigma(eta: f64, sigma: f64) -> Result<HopfReport, HopfError> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(ModelError::InvalidParam {
            name: "eta",
            reason: format!("must be >= 0, got {eta}"),
        }
        .into());
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ModelError::InvalidParam {
            name: "sigma",
            reason: format!("must be > 0, got {sigma}"),
        }
        .into());
    }
    let f0 = |e: f64| g1(e, 0.0, sigma);
    let (lo, hi) = first_sign_change(&f0, 1e-6, 0.5, 2000).ok_or(HopfError::NotFound { lo: 1e-6, hi: 0.5 })?;
    let root0 = bisect(f0, lo, hi);
    let larger_root = first_sign_change(&f0, 0.5, 4.0, 4000).map(|(a, b)| bisect(f0, a, b));

    let (root, method) = if eta == 0.0 {
        (root0, HopfMethod::AnalyticEta0)
    } else {
        let f = |e: f64| g1(e, eta, sigma);
        let (a, b) = ((root0 - 0.05).max(1e-6), root0 + 0.05);
        if (f(a) < 0.0) == (f(b) < 0.0) {
            return Err(HopfError::Domain(format!("g1 keeps one sign on [{a}, {b}] at eta = {eta}")));
        }
        (bisect(f, a, b), HopfMethod::RootG1)
    };
    Ok(HopfReport {
        eps_v_critical: root,
        omega0: omega_at(root, sigma, eta)?,
        eta_used: eta,
        method,
        residual: g1(root, eta, sigma).abs(),
        larger_root,
    })
}

/// Spectrum of the six-dimensional linearization at the deadlock equilibrium.
pub fn deadlock_spectrum_6d(eps_v: f64, eps_lambda: f64, params: &ModelParams) -> Result<Spectrum, HopfError> {
    params.validate()?;
    params.require_unit_separation()?;
    let mut r = params.rates();
    r.eps_v = eps_v;
    r.eps_lambda = eps_lambda;
    let eq = DeadlockEquilibrium::new(eps_v, params.sigma);
    let j = jacobian_fd(|z| mean_diff_eval(z, r).map(|f| f.to_vec()), &eq.full_z.to_array(), None)?;
    Ok(eigenvalues(&j)?)
}

/// Bisects on `eps_v` over the default bracket for the sign of the leading real part.
pub fn hopf_point_6d(eps_lambda: f64, params: &ModelParams) -> Result<HopfReport, HopfError> {
    hopf_point_6d_in(eps_lambda, params, BRACKET_6D.0, BRACKET_6D.1)
}

pub fn hopf_point_6d_in(eps_lambda: f64, params: &ModelParams, lo: f64, hi: f64) -> Result<HopfReport, HopfError> {
    let abscissa = |e: f64| deadlock_spectrum_6d(e, eps_lambda, params).map(|s| s.abscissa());
    let (mut a, mut b) = (lo, hi);
    let fa = abscissa(a)?;
    let fb = abscissa(b)?;
    if !(fa > 0.0 && fb < 0.0) {
        return Err(HopfError::NotFound { lo, hi });
    }
    let mut best = (f64::INFINITY, a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = abscissa(mid)?;
        if fm.abs() < best.0 {
            best = (fm.abs(), mid);
        }
        if fm.abs() < 1e-12 {
            break;
        }
        if fm > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let root = best.1;
    let spectrum = deadlock_spectrum_6d(root, eps_lambda, params)?;
    let pair = spectrum.leading_pair().ok_or(HopfError::NotHopf(root))?;
    if (pair.re - spectrum.abscissa()).abs() > 1e-9 * (1.0 + pair.norm()) {
        return Err(HopfError::NotHopf(root));
    }
    Ok(HopfReport {
        eps_v_critical: root,
        omega0: pair.im,
        eta_used: params.eta,
        method: HopfMethod::Bisection6d,
        residual: pair.re.abs(),
        larger_root: None,
    })
}

/// Maps [`hopf_point_6d`] over an ascending grid, warm-starting each bracket
/// from the previous root. Failures are kept in place as gaps.
pub fn hopf_curve(eps_lambda_grid: &[f64], params: &ModelParams) -> Vec<Result<HopfReport, HopfError>> {
    let mut out = Vec::with_capacity(eps_lambda_grid.len());
    let mut previous: Option<f64> = None;
    for &el in eps_lambda_grid {
        let warm = previous.and_then(|r| hopf_point_6d_in(el, params, (0.5 * r).max(BRACKET_6D.0), 2.0 * r).ok());
        let res = match warm {
            Some(rep) => Ok(rep),
            None => hopf_point_6d(el, params),
        };
        if let Ok(rep) = &res {
            previous = Some(rep.eps_v_critical);
        }
        out.push(res);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramPoint {
    pub eps_v: f64,
    /// Peak-to-peak of `dphi` over the final half-window.
    pub amplitude: f64,
    pub regime: Regime,
    pub period: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BifurcationDiagram {
    pub points: Vec<DiagramPoint>,
    /// Grid values whose simulation failed, with the reason.
    pub gaps: Vec<(f64, String)>,
}

/// Starting point of the restricted runs: the standard initial state without its values.
pub fn restricted_initial() -> [f64; 4] {
    MeanDiffState::standard_initial().reduced().to_array()
}

/// Simulates the restricted dynamics at `eps_v` and measures the `dphi` amplitude.
pub fn bifurcation_point(
    eps_v: f64,
    params: &ModelParams,
    config: &IntegratorConfig,
    transient_fraction: f64,
) -> Result<DiagramPoint, SimulationError> {
    let sys = RestrictedSystem::new(params, eps_v)?;
    let traj = integrate(&sys, &restricted_initial(), config)?;
    let rep = classify_regime(&traj, 0, transient_fraction)?;
    Ok(DiagramPoint {
        eps_v,
        amplitude: rep.amplitude,
        regime: rep.regime,
        period: rep.period_estimate,
    })
}

pub fn bifurcation_diagram(
    eps_v_grid: &[f64],
    params: &ModelParams,
    config: &IntegratorConfig,
    transient_fraction: f64,
) -> BifurcationDiagram {
    let mut d = BifurcationDiagram::default();
    for &e in eps_v_grid {
        match bifurcation_point(e, params, config, transient_fraction) {
            Ok(p) => d.points.push(p),
            Err(err) => d.gaps.push((e, err.to_string())),
        }
    }
    d
}

/// Coefficient of determination of `amplitude^2` regressed on `eps_crit - eps_v`
/// over the `k` oscillating points closest below `eps_crit`.
pub fn branch_shape_r2(points: &[DiagramPoint], eps_crit: f64, k: usize) -> Option<f64> {
    let mut below: Vec<&DiagramPoint> = points
        .iter()
        .filter(|p| p.eps_v < eps_crit && p.regime != Regime::Deadlock)
        .collect();
    below.sort_by(|a, b| b.eps_v.total_cmp(&a.eps_v));
    below.truncate(k);
    if below.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = below.iter().map(|p| eps_crit - p.eps_v).collect();
    let ys: Vec<f64> = below.iter().map(|p| p.amplitude * p.amplitude).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy * sxy / (sxx * syy))
}
