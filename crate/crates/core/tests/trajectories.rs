use motivdyn::integrate::{integrate, IntegratorConfig};
use motivdyn::regime::Regime;
use motivdyn::simulate::{simulate_and_classify, simulate_mean_diff, FullSystem};
use motivdyn::state::{xi_to_z, FullState, MeanDiffState};
use motivdyn::ModelParams;
use proptest::prelude::*;

const REGIMES: [(f64, f64, f64, Regime); 3] = [
    (1.5, 0.75, 100.0, Regime::Deadlock),
    (0.8, 0.4, 60.0, Regime::DampedOscillation),
    (0.5, 0.25, 400.0, Regime::LimitCycle),
];

#[test]
fn pinned_regimes_classify() {
    for (eps_v, eps_lambda, t_end, want) in REGIMES {
        let p = ModelParams::two_task(4.0, eps_v, eps_lambda).unwrap();
        let cfg = IntegratorConfig { t_end, ..Default::default() };
        let (_, rep) = simulate_and_classify(&p, &MeanDiffState::standard_initial(), &cfg, 0.5).unwrap();
        assert_eq!(rep.regime, want, "({eps_v}, {eps_lambda}): {rep:?}");
    }
}

#[test]
fn geometric_bounds_and_monitor_along_runs() {
    for (eps_v, eps_lambda, t_end, _) in REGIMES {
        let p = ModelParams::two_task(4.0, eps_v, eps_lambda).unwrap();
        let cfg = IntegratorConfig { t_end: t_end.min(60.0), ..Default::default() };
        let tr = simulate_mean_diff(&p, &MeanDiffState::standard_initial(), &cfg).unwrap();
        let mut last_v = f64::INFINITY;
        for (_, z) in tr.iter() {
            assert!(z[1] >= 0.5 - 1e-9 && z[0].abs() <= 1.0 + 1e-9);
            let v = 0.5 * (z[1] - 0.5).powi(2);
            assert!(v <= last_v + 1e-9);
            last_v = v;
        }
    }
}

#[test]
fn halving_tolerances_moves_the_endpoint_little() {
    let p = ModelParams::two_task(4.0, 0.8, 0.4).unwrap();
    let z0 = MeanDiffState::standard_initial();
    let run = |rel_tol: f64, abs_tol: f64| {
        let cfg = IntegratorConfig { t_end: 20.0, rel_tol, abs_tol, ..Default::default() };
        simulate_mean_diff(&p, &z0, &cfg).unwrap().last_state().to_vec()
    };
    let a = run(1e-8, 1e-10);
    let b = run(5e-9, 5e-11);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 10.0 * 1e-8 * x.abs().max(1.0), "{x} vs {y}");
    }
}

fn simplex_state(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-1.0..1.0f64, 2),
        prop::collection::vec(0.01..1.0f64, n + 1),
        prop::collection::vec(0.1..1.0f64, n),
    )
        .prop_map(|(x, w, v)| {
            let s: f64 = w.iter().sum();
            (x, w.iter().map(|a| a / s).collect(), v)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn full_model_stays_on_the_simplex((x, m, v) in simplex_state(3), eps_v in 0.2..1.5f64) {
        let p = ModelParams {
            sigma: 4.0,
            eps_v,
            eps_lambda: 0.5 * eps_v,
            eta: 1e-6,
            c: 1.0,
            ell: 0.5,
            goals: vec![vec![1.0, 0.0], vec![-0.5, 0.8], vec![-0.5, -0.8]],
        };
        let sys = FullSystem::new(&p).unwrap();
        let y0 = FullState { x, m, v }.to_vec();
        let tr = integrate(&sys, &y0, &IntegratorConfig { t_end: 10.0, ..Default::default() }).unwrap();
        for (_, y) in tr.iter() {
            let m = &y[2..6];
            prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(m.iter().all(|&a| a > -1e-9));
        }
    }

    #[test]
    fn two_task_runs_agree_in_both_coordinates(a in 0.0..0.9f64, v in 0.1..0.9f64) {
        let p = ModelParams::two_task(4.0, 0.8, 0.4).unwrap();
        let xi = FullState { x: vec![0.0, 0.0], m: vec![a * 0.5, 0.5 - a * 0.5, 0.5], v: vec![v, v] };
        let cfg = IntegratorConfig { t_end: 5.0, rel_tol: 1e-10, abs_tol: 1e-12, ..Default::default() };
        let full = integrate(&FullSystem::new(&p).unwrap(), &xi.to_vec(), &cfg).unwrap();
        let z0 = xi_to_z(&xi, &p).unwrap();
        let md = simulate_mean_diff(&p, &z0, &cfg).unwrap();
        let end = FullState::from_slice(full.last_state(), 2, 2).unwrap();
        let z_end = xi_to_z(&end, &p).unwrap().to_array();
        for (x, y) in z_end.iter().zip(md.last_state()) {
            prop_assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }
}
