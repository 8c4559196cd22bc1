use motivdyn::field::{full_field, mean_diff_field, restricted_field};
use motivdyn::state::{xi_to_z, z_to_xi, FullState, MeanDiffState, ReducedState};
use motivdyn::ModelParams;
use proptest::prelude::*;

fn params() -> ModelParams {
    ModelParams::two_task(4.0, 0.5, 0.25).unwrap()
}

fn full_state() -> impl Strategy<Value = FullState> {
    (
        -0.8..0.9f64,
        -0.8..0.9f64,
        0.0..1.0f64,
        0.0..1.0f64,
        0.05..1.5f64,
        0.05..1.5f64,
    )
        .prop_filter("stay off the goals", |(x, y, ..)| {
            let l = std::f64::consts::FRAC_1_SQRT_2;
            let d1 = ((x - l).powi(2) + y * y).sqrt();
            let d2 = (x * x + (y - l).powi(2)).sqrt();
            d1 > 0.05 && d2 > 0.05
        })
        .prop_map(|(x, y, a, b, v1, v2)| {
            // Uniform on the simplex by sorting two uniforms.
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            FullState {
                x: vec![x, y],
                m: vec![lo, hi - lo, 1.0 - hi],
                v: vec![v1, v2],
            }
        })
}

fn packed_z(xi: &FullState, p: &ModelParams) -> Vec<f64> {
    xi_to_z(xi, p).unwrap().to_array().to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // d/dt xi_to_z(xi(t)) computed by central differences along the full field.
    #[test]
    fn mean_diff_field_is_the_pushforward(xi in full_state()) {
        let p = params();
        let f = full_field(&xi, &p).unwrap();
        let h = 1e-6;
        let shift = |s: f64| FullState {
            x: xi.x.iter().zip(&f.x).map(|(a, b)| a + s * b).collect(),
            m: xi.m.iter().zip(&f.m).map(|(a, b)| a + s * b).collect(),
            v: xi.v.iter().zip(&f.v).map(|(a, b)| a + s * b).collect(),
        };
        let zp = packed_z(&shift(h), &p);
        let zm = packed_z(&shift(-h), &p);
        let z = xi_to_z(&xi, &p).unwrap();
        let fz = mean_diff_field(&z, &p).unwrap().to_array();
        for k in 0..6 {
            let fd = (zp[k] - zm[k]) / (2.0 * h);
            let scale = fz[k].abs().max(1.0);
            prop_assert!((fd - fz[k]).abs() < 1e-6 * scale, "component {k}: fd {fd} field {}", fz[k]);
        }
    }

    #[test]
    fn coordinate_round_trip(xi in full_state()) {
        let p = params();
        // The goals sit on x + y = 1/sqrt(2); the origin is on the positive side.
        let sign = if xi.x[0] + xi.x[1] < std::f64::consts::FRAC_1_SQRT_2 { 1.0 } else { -1.0 };
        let z = xi_to_z(&xi, &p).unwrap();
        let back = z_to_xi(&z, &p, sign).unwrap();
        for (a, b) in xi.x.iter().chain(&xi.m).chain(&xi.v).zip(back.x.iter().chain(&back.m).chain(&back.v)) {
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let again = xi_to_z(&back, &p).unwrap();
        for (a, b) in z.to_array().iter().zip(again.to_array()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_bounds_hold(xi in full_state()) {
        let z = xi_to_z(&xi, &params()).unwrap();
        prop_assert!(z.d_phi.abs() <= 1.0 + 1e-12);
        prop_assert!(z.bar_phi >= 0.5 - 1e-12);
    }

    #[test]
    fn restriction_is_exact(d_phi in -0.9..0.9f64, bar_phi in 0.55..1.5f64, d_m in -0.5..0.5f64, bar_m in 0.3..0.45f64, eps_v in 0.05..1.5f64) {
        prop_assume!(4.0 * bar_phi * bar_phi - d_phi * d_phi > 1e-3);
        let p = ModelParams::two_task(4.0, eps_v, 0.3).unwrap();
        let zr = ReducedState { d_phi, bar_phi, d_m, bar_m };
        let r = restricted_field(&zr, eps_v, &p).unwrap().to_array();
        let full = mean_diff_field(&MeanDiffState::from_reduced(zr), &p).unwrap().to_array();
        prop_assert_eq!(&r[..], &full[..4]);
    }
}

#[test]
fn infeasible_distances_are_rejected() {
    let p = params();
    let z = MeanDiffState { d_phi: 0.0, bar_phi: 0.4, d_m: 0.0, bar_m: 0.3, d_v: 0.0, bar_v: 0.4 };
    assert!(z_to_xi(&z, &p, 1.0).is_err());
}
