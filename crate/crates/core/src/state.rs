//! State spaces and the coordinate maps between them.

use crate::error::ModelError;
use crate::params::{dist, ModelParams};

/// Agent position, motivations `(m_1, .., m_N, m_U)` and task values.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl FullState {
    /// Packs as `[x.., m.., v..]` for the integrator.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.x.len() + self.m.len() + self.v.len());
        out.extend_from_slice(&self.x);
        out.extend_from_slice(&self.m);
        out.extend_from_slice(&self.v);
        out
    }

    pub fn from_slice(y: &[f64], d: usize, n: usize) -> Result<Self, ModelError> {
        if y.len() != d + 2 * n + 1 {
            return Err(ModelError::Dimension(format!(
                "packed state has length {}, expected {}",
                y.len(),
                d + 2 * n + 1
            )));
        }
        Ok(FullState {
            x: y[..d].to_vec(),
            m: y[d..d + n + 1].to_vec(),
            v: y[d + n + 1..].to_vec(),
        })
    }

    pub fn undecided(&self) -> f64 {
        *self.m.last().unwrap_or(&0.0)
    }
}

/// Mean and difference coordinates `(dphi, bar_phi, dm, bar_m, dv, bar_v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanDiffState {
    pub d_phi: f64,
    pub bar_phi: f64,
    pub d_m: f64,
    pub bar_m: f64,
    pub d_v: f64,
    pub bar_v: f64,
}

impl MeanDiffState {
    pub fn to_array(self) -> [f64; 6] {
        [self.d_phi, self.bar_phi, self.d_m, self.bar_m, self.d_v, self.bar_v]
    }

    pub fn from_slice(z: &[f64]) -> Self {
        MeanDiffState {
            d_phi: z[0],
            bar_phi: z[1],
            d_m: z[2],
            bar_m: z[3],
            d_v: z[4],
            bar_v: z[5],
        }
    }

    /// The starting point used by every regime simulation: agent at the origin,
    /// `m = (0, 1/2, 1/2)`, `v = (0.1, 0.1)`, with unit goal separation.
    pub fn standard_initial() -> Self {
        MeanDiffState {
            d_phi: 0.0,
            bar_phi: 0.5f64.sqrt(),
            d_m: -0.5,
            bar_m: 0.25,
            d_v: 0.0,
            bar_v: 0.1,
        }
    }

    /// Embedding of the reduced state with values slaved to distances.
    pub fn from_reduced(r: ReducedState) -> Self {
        MeanDiffState {
            d_phi: r.d_phi,
            bar_phi: r.bar_phi,
            d_m: r.d_m,
            bar_m: r.bar_m,
            d_v: r.d_phi,
            bar_v: r.bar_phi,
        }
    }

    pub fn reduced(self) -> ReducedState {
        ReducedState {
            d_phi: self.d_phi,
            bar_phi: self.bar_phi,
            d_m: self.d_m,
            bar_m: self.bar_m,
        }
    }

    /// Checks the image-of-the-state-space bounds with slack `tol`.
    pub fn check_bounds(&self, c: f64, tol: f64) -> Result<(), ModelError> {
        if self.d_phi.abs() > c + tol || self.bar_phi < c / 2.0 - tol {
            return Err(ModelError::Inadmissible(format!(
                "distances out of range: dphi = {}, bar_phi = {}",
                self.d_phi, self.bar_phi
            )));
        }
        if self.d_m.abs() > 2.0 * self.bar_m + tol || 2.0 * self.bar_m > 1.0 + tol {
            return Err(ModelError::Inadmissible(format!(
                "motivation off the simplex: dm = {}, bar_m = {}",
                self.d_m, self.bar_m
            )));
        }
        Ok(())
    }
}

/// `(dphi, bar_phi, dm, bar_m)`: the state once values track distances exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub d_phi: f64,
    pub bar_phi: f64,
    pub d_m: f64,
    pub bar_m: f64,
}

impl ReducedState {
    pub fn to_array(self) -> [f64; 4] {
        [self.d_phi, self.bar_phi, self.d_m, self.bar_m]
    }

    pub fn from_slice(z: &[f64]) -> Self {
        ReducedState {
            d_phi: z[0],
            bar_phi: z[1],
            d_m: z[2],
            bar_m: z[3],
        }
    }
}

/// Slow variables `(dphi, dm)` of the fast/slow form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarState {
    pub x1: f64,
    pub x2: f64,
}

/// Fast variables `((1 - 2 bar_m) / eps_v, dv)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastState {
    pub y1: f64,
    pub y2: f64,
}

pub fn xi_to_z(state: &FullState, params: &ModelParams) -> Result<MeanDiffState, ModelError> {
    params.require_two_task()?;
    if state.x.len() != 2 || state.m.len() != 3 || state.v.len() != 2 {
        return Err(ModelError::Dimension("two-task state needs x in R^2, 3 motivations, 2 values".into()));
    }
    let phi1 = dist(&state.x, &params.goals[0]);
    let phi2 = dist(&state.x, &params.goals[1]);
    Ok(MeanDiffState {
        d_phi: phi1 - phi2,
        bar_phi: 0.5 * (phi1 + phi2),
        d_m: state.m[0] - state.m[1],
        bar_m: 0.5 * (state.m[0] + state.m[1]),
        d_v: state.v[0] - state.v[1],
        bar_v: 0.5 * (state.v[0] + state.v[1]),
    })
}

/// Inverse of [`xi_to_z`]. The position is one of the two intersections of the
/// circles about the goals; `half_plane_sign = +1` picks the side of the goal
/// segment containing the origin.
pub fn z_to_xi(z: &MeanDiffState, params: &ModelParams, half_plane_sign: f64) -> Result<FullState, ModelError> {
    params.require_two_task()?;
    let c = params.c;
    let phi1 = z.bar_phi + 0.5 * z.d_phi;
    let phi2 = z.bar_phi - 0.5 * z.d_phi;
    let slack = 1e-12 * c;
    if phi1 < -slack || phi2 < -slack || (phi1 - phi2).abs() > c + slack || phi1 + phi2 < c - slack {
        return Err(ModelError::Geometry { phi1, phi2, c });
    }
    let g1 = &params.goals[0];
    let g2 = &params.goals[1];
    let u = [(g2[0] - g1[0]) / c, (g2[1] - g1[1]) / c];
    let n = [-u[1], u[0]];
    let a = (phi1 * phi1 - phi2 * phi2 + c * c) / (2.0 * c);
    let h = (phi1 * phi1 - a * a).max(0.0).sqrt() * half_plane_sign.signum();
    let x = vec![g1[0] + a * u[0] + h * n[0], g1[1] + a * u[1] + h * n[1]];
    let m1 = z.bar_m + 0.5 * z.d_m;
    let m2 = z.bar_m - 0.5 * z.d_m;
    Ok(FullState {
        x,
        m: vec![m1, m2, 1.0 - m1 - m2],
        v: vec![z.bar_v + 0.5 * z.d_v, z.bar_v - 0.5 * z.d_v],
    })
}
