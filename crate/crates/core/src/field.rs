//! Vector fields of the motivation model in original and mean-difference coordinates.

use crate::error::ModelError;
use crate::params::{dist, ModelParams, Rates};
use crate::state::{FullState, MeanDiffState, ReducedState};

/// `y / sqrt(y^2 + eta^2)`.
pub fn saturate(y: f64, eta: f64) -> f64 {
    y / y.hypot(eta)
}

/// Regularized magnitude `sqrt(y^2 + eta^2)`.
pub fn abs_eta(y: f64, eta: f64) -> f64 {
    y.hypot(eta)
}

/// Euclidean navigation function.
pub fn nav_value(x: &[f64], goal: &[f64]) -> f64 {
    dist(x, goal)
}

/// Scaled value `v_i / eps_v`, floored at `eta`. Negative values are an error.
fn scaled_value(v: f64, index: usize, eps_v: f64, eta: f64) -> Result<f64, ModelError> {
    if v < 0.0 {
        return Err(ModelError::NegativeValue { index, value: v });
    }
    Ok((v / eps_v).max(eta))
}

fn motivation_rate(m_i: f64, m_u: f64, others: f64, vt: f64, sigma: f64) -> f64 {
    vt * m_u - m_i * (1.0 / vt - vt * m_u + sigma * others)
}

/// Time derivative of `(x, m, v)` for any number of tasks in any dimension.
pub fn full_field(state: &FullState, params: &ModelParams) -> Result<FullState, ModelError> {
    let n = params.n_tasks();
    let d = params.dim();
    if state.x.len() != d || state.m.len() != n + 1 || state.v.len() != n {
        return Err(ModelError::Dimension(format!(
            "state (|x|={}, |m|={}, |v|={}) does not fit {n} tasks in R^{d}",
            state.x.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    let m_u = state.undecided();
    let mut dx = vec![0.0; d];
    let mut dm = vec![0.0; n + 1];
    let mut dv = vec![0.0; n];
    for (i, goal) in params.goals.iter().enumerate() {
        let phi = nav_value(&state.x, goal);
        let scale = state.m[i] / abs_eta(phi, params.eta);
        for k in 0..d {
            dx[k] -= scale * (state.x[k] - goal[k]);
        }
        let vt = scaled_value(state.v[i], i, params.eps_v, params.eta)?;
        let others = 1.0 - state.m[i] - m_u;
        dm[i] = motivation_rate(state.m[i], m_u, others, vt, params.sigma);
        dm[n] -= dm[i];
        dv[i] = (phi - state.v[i]) / params.eps_lambda;
    }
    Ok(FullState { x: dx, m: dm, v: dv })
}

/// Number of task values sitting on the `eta` floor of the scaled value.
pub fn value_floor_hits(v: &[f64], eps_v: f64, eta: f64) -> usize {
    v.iter().filter(|&&vi| vi >= 0.0 && vi / eps_v <= eta).count()
}

pub(crate) fn mean_diff_eval(z: &[f64], r: Rates) -> Result<[f64; 6], ModelError> {
    let [d_phi, bar_phi, d_m, bar_m, d_v, bar_v] = [z[0], z[1], z[2], z[3], z[4], z[5]];
    let gap = 4.0 * bar_phi * bar_phi - d_phi * d_phi;
    if gap.is_nan() || gap <= r.eta * r.eta {
        return Err(ModelError::Inadmissible(format!(
            "4 bar_phi^2 - dphi^2 = {gap:e} (dphi = {d_phi}, bar_phi = {bar_phi})"
        )));
    }
    if bar_phi <= 0.0 {
        return Err(ModelError::Inadmissible(format!("bar_phi = {bar_phi} is not positive")));
    }
    let v_gap = 2.0 * bar_v - d_v.abs();
    if v_gap.is_nan() || v_gap < 0.0 {
        return Err(ModelError::Inadmissible(format!(
            "2 bar_v - |dv| = {v_gap:e} (dv = {d_v}, bar_v = {bar_v})"
        )));
    }
    let phi1 = bar_phi + 0.5 * d_phi;
    let phi2 = bar_phi - 0.5 * d_phi;
    let m1 = bar_m + 0.5 * d_m;
    let m2 = bar_m - 0.5 * d_m;
    let m_u = 1.0 - 2.0 * bar_m;
    let c2 = r.c * r.c;

    // Pull of each goal along the other distance; from the law of cosines
    // (x - x1*) . (x - x2*) = (phi1^2 + phi2^2 - c^2) / 2.
    let a1 = m1 / (2.0 * phi2 * abs_eta(phi1, r.eta));
    let a2 = m2 / (2.0 * phi1 * abs_eta(phi2, r.eta));
    let f_dphi = (d_phi * d_phi - c2) * (a1 - a2);
    let f_bphi = -0.5 * (4.0 * bar_phi * bar_phi - c2) * (a1 + a2);

    let vt1 = scaled_value(bar_v + 0.5 * d_v, 0, r.eps_v, r.eta)?;
    let vt2 = scaled_value(bar_v - 0.5 * d_v, 1, r.eps_v, r.eta)?;
    let dm1 = motivation_rate(m1, m_u, m2, vt1, r.sigma);
    let dm2 = motivation_rate(m2, m_u, m1, vt2, r.sigma);

    Ok([
        f_dphi,
        f_bphi,
        dm1 - dm2,
        0.5 * (dm1 + dm2),
        -(d_v - d_phi) / r.eps_lambda,
        -(bar_v - bar_phi) / r.eps_lambda,
    ])
}

/// Two-task field in mean-difference coordinates.
pub fn mean_diff_field(z: &MeanDiffState, params: &ModelParams) -> Result<MeanDiffState, ModelError> {
    let f = mean_diff_eval(&z.to_array(), params.rates())?;
    Ok(MeanDiffState::from_slice(&f))
}

pub(crate) fn restricted_eval(z_r: &[f64], r: Rates) -> Result<[f64; 4], ModelError> {
    let z = [z_r[0], z_r[1], z_r[2], z_r[3], z_r[0], z_r[1]];
    let f = mean_diff_eval(&z, r)?;
    Ok([f[0], f[1], f[2], f[3]])
}

/// Dynamics once values track distances exactly (`eps_lambda -> 0`), at the given `eps_v`.
pub fn restricted_field(z_r: &ReducedState, eps_v: f64, params: &ModelParams) -> Result<ReducedState, ModelError> {
    let mut r = params.rates();
    r.eps_v = eps_v;
    let f = restricted_eval(&z_r.to_array(), r)?;
    Ok(ReducedState::from_slice(&f))
}
