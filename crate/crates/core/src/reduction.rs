//! Fast/slow form of the two-task system (unit goal separation, mean distance and
//! mean value pinned at 1/2) and the planar dynamics on its slow manifold.

use crate::error::ModelError;
use crate::params::ModelParams;
use crate::state::{FastState, PlanarState};

fn r_plus(x1: f64, eta: f64) -> f64 {
    (1.0 + x1).hypot(2.0 * eta)
}

fn r_minus(x1: f64, eta: f64) -> f64 {
    (1.0 - x1).hypot(2.0 * eta)
}

/// Returns `(f_x, g_y)`: the slow field in time `t` and the fast field in time `t / eps_v`.
///
/// `eps_v = 0` gives the layer problem; the value ratio terms vanish there.
pub fn fast_slow_fields(
    x: PlanarState,
    y: FastState,
    eps_v: f64,
    params: &ModelParams,
) -> Result<(PlanarState, FastState), ModelError> {
    params.validate()?;
    params.require_unit_separation()?;
    if eps_v.is_nan() || eps_v < 0.0 {
        return Err(ModelError::param("eps_v", format!("must be >= 0, got {eps_v}")));
    }
    let (x1, x2, y1, y2) = (x.x1, x.x2, y.y1, y.y2);
    let sigma = params.sigma;
    let eta = params.eta;
    let m1 = 1.0 - eps_v * y1 + x2;
    let m2 = 1.0 - eps_v * y1 - x2;
    let v1 = 1.0 + y2;
    let v2 = 1.0 - y2;
    let abandon = |a: f64, b: f64| if eps_v == 0.0 { 0.0 } else { eps_v * (a + b) };

    let f1 = m2 * (1.0 - x1) / r_minus(x1, eta) - m1 * (1.0 + x1) / r_plus(x1, eta);
    let f2 = -abandon(m1 / v1, -m2 / v2) + 0.5 * x2 * y1 + 0.5 * y2 * y1 * (3.0 - eps_v * y1);
    let g1 = abandon(m1 / v1, m2 / v2) - 0.5 * y1 * (v1 * (1.0 + 0.5 * m1) + v2 * (1.0 + 0.5 * m2))
        + 0.5 * sigma * m1 * m2;
    let g2 = -(y2 - x1) / params.ell;
    Ok((PlanarState { x1: f1, x2: f2 }, FastState { y1: g1, y2: g2 }))
}

/// `d g_y / d y`, row-major.
pub fn fast_jacobian(x: PlanarState, y: FastState, eps_v: f64, params: &ModelParams) -> [[f64; 2]; 2] {
    let (x2, y1, y2) = (x.x2, y.y1, y.y2);
    let e = eps_v;
    let m1 = 1.0 - e * y1 + x2;
    let m2 = 1.0 - e * y1 - x2;
    let v1 = 1.0 + y2;
    let v2 = 1.0 - y2;
    let (ratio_y1, ratio_y2) = if e == 0.0 {
        (0.0, 0.0)
    } else {
        (-e * e * (1.0 / v1 + 1.0 / v2), e * (m2 / (v2 * v2) - m1 / (v1 * v1)))
    };
    let g11 = ratio_y1 - 0.5 * (v1 * (1.0 + 0.5 * m1) + v2 * (1.0 + 0.5 * m2)) + 0.25 * e * y1 * (v1 + v2)
        - 0.5 * params.sigma * e * (m1 + m2);
    let g12 = ratio_y2 - 0.5 * y1 * x2;
    [[g11, g12], [0.0, -1.0 / params.ell]]
}

/// Zero set of the fast field at `eps_v = 0`.
pub fn slow_manifold(x: PlanarState, sigma: f64) -> FastState {
    FastState {
        y1: sigma * (1.0 - x.x2 * x.x2) / (3.0 + x.x1 * x.x2),
        y2: x.x1,
    }
}

/// Planar dynamics on the slow manifold.
pub fn planar_field(x: PlanarState, sigma: f64, eta: f64) -> PlanarState {
    let (x1, x2) = (x.x1, x.x2);
    let rp = r_plus(x1, eta);
    let rm = r_minus(x1, eta);
    PlanarState {
        x1: (1.0 - x2) * (1.0 - x1) / rm - (1.0 + x2) * (1.0 + x1) / rp,
        x2: 0.5 * sigma * (1.0 - x2 * x2) * (x2 + 3.0 * x1) / (3.0 + x1 * x2),
    }
}

/// Jacobian of [`planar_field`], row-major.
pub fn planar_jacobian(x: PlanarState, sigma: f64, eta: f64) -> [[f64; 2]; 2] {
    let (x1, x2) = (x.x1, x.x2);
    let rp = r_plus(x1, eta);
    let rm = r_minus(x1, eta);
    let e2 = 4.0 * eta * eta;
    let d = 3.0 + x1 * x2;
    let n = (1.0 - x2 * x2) * (x2 + 3.0 * x1);
    let dn_dx2 = -2.0 * x2 * (x2 + 3.0 * x1) + (1.0 - x2 * x2);
    let dn_dx1 = 3.0 * (1.0 - x2 * x2);
    [
        [
            -e2 * (1.0 - x2) / (rm * rm * rm) - e2 * (1.0 + x2) / (rp * rp * rp),
            -(1.0 - x1) / rm - (1.0 + x1) / rp,
        ],
        [
            0.5 * sigma * (dn_dx1 * d - n * x2) / (d * d),
            0.5 * sigma * (dn_dx2 * d - n * x1) / (d * d),
        ],
    ]
}

/// Trace of [`planar_jacobian`]; integrated along a closed orbit it gives the
/// log of the product of Floquet multipliers.
pub fn planar_divergence(x: PlanarState, sigma: f64, eta: f64) -> f64 {
    let j = planar_jacobian(x, sigma, eta);
    j[0][0] + j[1][1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(ell: f64) -> ModelParams {
        let mut p = ModelParams::two_task(4.0, 1e-3, 1e-3 * ell).unwrap();
        p.ell = ell;
        p
    }

    fn grid(n: usize) -> impl Iterator<Item = PlanarState> {
        (0..n).flat_map(move |i| {
            (0..n).map(move |j| PlanarState {
                x1: -1.0 + 2.0 * i as f64 / (n - 1) as f64,
                x2: -1.0 + 2.0 * j as f64 / (n - 1) as f64,
            })
        })
    }

    #[test]
    fn slow_manifold_examples() {
        let h = slow_manifold(PlanarState { x1: 0.0, x2: 0.0 }, 4.0);
        assert!((h.y1 - 4.0 / 3.0).abs() < 1e-15 && h.y2 == 0.0);
        let h = slow_manifold(PlanarState { x1: 0.5, x2: -0.5 }, 4.0);
        assert!((h.y1 - 4.0 * 0.75 / 2.75).abs() < 1e-15 && h.y2 == 0.5);
        for x1 in [-1.0, -0.3, 0.7, 1.0] {
            for x2 in [-1.0, 1.0] {
                assert_eq!(slow_manifold(PlanarState { x1, x2 }, 4.0).y1, 0.0);
            }
        }
    }

    #[test]
    fn slow_manifold_zeroes_fast_field() {
        let p = params(1.0);
        for x in grid(21) {
            let (_, g) = fast_slow_fields(x, slow_manifold(x, p.sigma), 0.0, &p).unwrap();
            assert!(g.y1.abs() < 1e-14 && g.y2.abs() < 1e-14, "{x:?}: {g:?}");
        }
    }

    #[test]
    fn slow_field_on_manifold_is_planar_field() {
        let p = params(0.5);
        for x in grid(11) {
            let (f, _) = fast_slow_fields(x, slow_manifold(x, p.sigma), 0.0, &p).unwrap();
            let q = planar_field(x, p.sigma, p.eta);
            assert!((f.x1 - q.x1).abs() < 1e-14 && (f.x2 - q.x2).abs() < 1e-14);
        }
    }

    #[test]
    fn value_row_decays_at_rate_one_over_ell() {
        let p = params(0.37);
        let x = PlanarState { x1: 0.2, x2: -0.6 };
        let y = FastState { y1: 0.9, y2: 0.1 };
        let j = fast_jacobian(x, y, 0.01, &p);
        assert!((j[1][1] + 1.0 / 0.37).abs() < 1e-15);
    }

    #[test]
    fn fast_jacobian_matches_finite_differences() {
        let p = params(0.8);
        let x = PlanarState { x1: 0.3, x2: -0.4 };
        let y = FastState { y1: 1.1, y2: 0.2 };
        for eps in [0.0, 0.05] {
            let j = fast_jacobian(x, y, eps, &p);
            let h = 1e-6;
            let g = |y1: f64, y2: f64| fast_slow_fields(x, FastState { y1, y2 }, eps, &p).unwrap().1;
            let d1 = (g(y.y1 + h, y.y2).y1 - g(y.y1 - h, y.y2).y1) / (2.0 * h);
            let d2 = (g(y.y1, y.y2 + h).y1 - g(y.y1, y.y2 - h).y1) / (2.0 * h);
            assert!((j[0][0] - d1).abs() < 1e-8, "{} vs {d1}", j[0][0]);
            assert!((j[0][1] - d2).abs() < 1e-8, "{} vs {d2}", j[0][1]);
        }
    }

    #[test]
    fn planar_origin_is_equilibrium() {
        let f = planar_field(PlanarState { x1: 0.0, x2: 0.0 }, 4.0, 1e-6);
        assert_eq!((f.x1, f.x2), (0.0, 0.0));
        let p = params(1.0);
        let x = PlanarState { x1: 0.0, x2: 0.0 };
        let (f, _) = fast_slow_fields(x, slow_manifold(x, 4.0), 0.0, &p).unwrap();
        assert_eq!((f.x1, f.x2), (0.0, 0.0));
    }

    #[test]
    fn committed_corners_are_equilibria() {
        for (x1, x2) in [(1.0, -1.0), (-1.0, 1.0)] {
            let f = planar_field(PlanarState { x1, x2 }, 4.0, 1e-6);
            assert!(f.x1.abs() < 1e-12 && f.x2.abs() < 1e-12);
        }
        // At the other two corners the agent sits at one goal while committed to
        // the other, so it starts moving inward.
        let f = planar_field(PlanarState { x1: 1.0, x2: 1.0 }, 4.0, 1e-6);
        assert!((f.x1 + 2.0 / (1.0f64 + 1e-12).sqrt()).abs() < 1e-12);
        let f = planar_field(PlanarState { x1: -1.0, x2: -1.0 }, 4.0, 1e-6);
        assert!(f.x1 > 1.9);
    }

    #[test]
    fn planar_jacobian_matches_finite_differences() {
        let (sigma, eta) = (4.0, 1e-2);
        for x in grid(7).filter(|x| x.x1.abs() < 1.0) {
            let j = planar_jacobian(x, sigma, eta);
            let h = 1e-6;
            let f = |a: f64, b: f64| planar_field(PlanarState { x1: a, x2: b }, sigma, eta);
            let c1 = [f(x.x1 + h, x.x2), f(x.x1 - h, x.x2)];
            let c2 = [f(x.x1, x.x2 + h), f(x.x1, x.x2 - h)];
            let fd = [
                [(c1[0].x1 - c1[1].x1) / (2.0 * h), (c2[0].x1 - c2[1].x1) / (2.0 * h)],
                [(c1[0].x2 - c1[1].x2) / (2.0 * h), (c2[0].x2 - c2[1].x2) / (2.0 * h)],
            ];
            for r in 0..2 {
                for c in 0..2 {
                    assert!((j[r][c] - fd[r][c]).abs() < 1e-7, "{x:?} [{r}][{c}]");
                }
            }
        }
    }

    #[test]
    fn planar_field_points_inward_on_boundary() {
        let (sigma, eta) = (4.0, 1e-6);
        for k in 0..100 {
            let s = -1.0 + 2.0 * k as f64 / 99.0;
            let left = planar_field(PlanarState { x1: -1.0, x2: s }, sigma, eta);
            let right = planar_field(PlanarState { x1: 1.0, x2: s }, sigma, eta);
            let bottom = planar_field(PlanarState { x1: s, x2: -1.0 }, sigma, eta);
            let top = planar_field(PlanarState { x1: s, x2: 1.0 }, sigma, eta);
            assert!(left.x1 >= 0.0 && right.x1 <= 0.0);
            assert!(bottom.x2 >= 0.0 && top.x2 <= 0.0);
        }
    }
}
