//! One PASS/FAIL line per acceptance criterion, with measured values and timings.
//! Every criterion is evaluated before the test asserts, so a failure never hides the rest.

use motivdyn::cycle::{find_limit_cycle, layer_eigenvalues, poincare_map, slow_manifold_error};
use motivdyn::field::{full_field, mean_diff_field};
use motivdyn::hopf::{epsilon_v0, g1_slope, hopf_point_6d};
use motivdyn::integrate::{integrate, IntegratorConfig, Trajectory};
use motivdyn::linearize::{deadlock_mbar, jacobian_discrepancy, jacobian_reduced_analytic, reduced_jacobian_fd, DeadlockEquilibrium};
use motivdyn::lyapunov::lyapunov_at_critical;
use motivdyn::reduction::{fast_slow_fields, slow_manifold};
use motivdyn::simulate::{simulate_mean_diff, FullSystem};
use motivdyn::state::{xi_to_z, z_to_xi, FullState, MeanDiffState};
use motivdyn::{ModelParams, PlanarState};
use motivdyn_cli::{default_reproduction_suite, execute, RunConfig};
use std::time::{Duration, Instant};

struct Report {
    lines: Vec<String>,
    failed: Vec<usize>,
}

impl Report {
    fn record(&mut self, n: usize, pass: bool, elapsed: Duration, limit: Option<Duration>, detail: String) {
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let ok = pass && in_time;
        let time = match limit {
            Some(l) => format!("{elapsed:.2?} (limit {l:?}{})", if in_time { "" } else { ", exceeded" }),
            None => format!("{elapsed:.2?}"),
        };
        let line = format!("{} criterion {n}: {detail}; {time}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push(line);
        if !ok {
            self.failed.push(n);
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

/// Best of several runs, for criteria whose limits are far below scheduler noise.
fn timed_min<T>(runs: usize, f: impl Fn() -> T) -> (T, Duration) {
    let (mut v, mut best) = timed(&f);
    for _ in 1..runs {
        let (w, d) = timed(&f);
        if d < best {
            best = d;
            v = w;
        }
    }
    (v, best)
}

fn critical_value(r: &mut Report) {
    let (res, dt) = timed_min(5, || epsilon_v0(0.0));
    let (pass, detail) = match res {
        Ok(rep) => {
            let e = rep.eps_v_critical;
            let resid = ((1.0 - 4.0 * e * e).powi(2) - 2.0 * e).abs();
            // The smaller root: the quartic has no root in (0, e).
            let smaller = (1..1000).all(|k| {
                let x = e * k as f64 / 1000.0;
                (1.0 - 4.0 * x * x).powi(2) - 2.0 * x > 0.0
            });
            (
                (e - 0.262).abs() <= 1e-3 && resid < 1e-12 && smaller,
                format!("eps_v0(0) = {e:.9}, quartic residual {resid:.2e}, smaller root {smaller}"),
            )
        }
        Err(e) => (false, format!("error: {e}")),
    };
    r.record(1, pass, dt, Some(Duration::from_millis(1)), detail);
}

fn transversality(r: &mut Report) {
    let (slope, dt) = timed_min(5, || epsilon_v0(0.0).map(|rep| g1_slope(rep.eps_v_critical, 0.0, 4.0)));
    let (pass, detail) = match slope {
        Ok(s) => ((s - 5.04).abs() <= 0.05, format!("dg1/deps_v = {s:.6} (target 5.04 +/- 0.05)")),
        Err(e) => (false, format!("error: {e}")),
    };
    r.record(2, pass, dt, Some(Duration::from_millis(1)), detail);
}

fn hopf_limit(r: &mut Report) {
    let p = ModelParams::two_task(4.0, 0.5, 0.25).unwrap();
    let (res, dt) = timed(|| hopf_point_6d(1e-4, &p).and_then(|h| Ok((h, epsilon_v0(0.0)?))));
    let (pass, detail) = match res {
        Ok((h, red)) => {
            let d = (h.eps_v_critical - red.eps_v_critical).abs();
            (d < 0.01, format!("6-d critical {:.6} at eps_lambda = 1e-4 vs {:.6}, |diff| = {d:.2e}", h.eps_v_critical, red.eps_v_critical))
        }
        Err(e) => (false, format!("error: {e}")),
    };
    r.record(3, pass, dt, Some(Duration::from_secs(60)), detail);
}

fn regime_taxonomy(r: &mut Report) {
    let suite = default_reproduction_suite();
    let want = ["deadlock", "damped-oscillation", "limit-cycle", "limit-cycle"];
    let (tables, dt) = timed(|| suite[..4].iter().map(execute).collect::<Vec<_>>());
    let mut pass = true;
    let mut parts = Vec::new();
    for ((cfg, t), w) in suite.iter().zip(&tables).zip(want) {
        match t {
            Ok(t) => {
                let got = t.summary["regime"].as_str().unwrap_or("?");
                pass &= got == w;
                parts.push(format!("({}, {}) -> {got}", cfg.eps_v, cfg.eps_lambda));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("({}, {}) error: {e}", cfg.eps_v, cfg.eps_lambda));
            }
        }
    }
    if let Ok(t) = &tables[3] {
        let f = |k: &str| t.summary[k].as_float().unwrap_or(f64::NAN);
        let ptp = f("d_m_peak_to_peak");
        let means = [f("mean_bar_m"), f("mean_bar_v"), f("mean_bar_phi")];
        let ptp_ok = ptp > 1.8;
        let means_ok = means.iter().all(|m| (m - 0.5).abs() < 0.02);
        pass &= ptp_ok && means_ok;
        parts.push(format!(
            "relaxation d_m peak-to-peak {ptp:.4} (> 1.8: {ptp_ok}), trailing means bar_m {:.4} bar_v {:.4} bar_phi {:.4} (within 0.02 of 0.5: {means_ok})",
            means[0], means[1], means[2]
        ));
    }
    r.record(4, pass, dt, Some(Duration::from_secs(120)), parts.join("; "));
}

fn parameter_sets(n: usize) -> Vec<(f64, f64, f64)> {
    let mut s: u64 = 0x2545f4914f6cdd1d;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..n)
        .map(|_| (10f64.powf(-2.0 + 2.5 * next()), 0.5 + 9.5 * next(), 10f64.powf(-3.0 + 3.0 * next())))
        .collect()
}

fn deadlock(r: &mut Report) {
    let (res, dt) = timed(|| {
        let mut worst: f64 = 0.0;
        for (eps_v, sigma, eps_lambda) in parameter_sets(50) {
            let p = ModelParams::two_task(sigma, eps_v, eps_lambda).unwrap();
            let z = DeadlockEquilibrium::new(eps_v, sigma).full_z;
            let f = mean_diff_field(&z, &p).unwrap().to_array();
            worst = worst.max(f.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        let limit = (0.5 - deadlock_mbar(1e-8, 4.0)).abs();
        (worst, limit)
    });
    let (worst, limit) = res;
    r.record(
        5,
        worst < 1e-10 && limit < 1e-6,
        dt,
        None,
        format!("max |f_z(z_d)| over 50 sets = {worst:.2e}; |bar_m_d(1e-8) - 1/2| = {limit:.2e}"),
    );
}

fn jacobian_check(r: &mut Report) {
    let p = ModelParams::two_task(4.0, 0.5, 0.25).unwrap();
    let (errs, dt) = timed(|| {
        [0.1, 0.262, 0.5, 1.0]
            .map(|e| jacobian_discrepancy(&jacobian_reduced_analytic(e, &p).unwrap(), &reduced_jacobian_fd(e, &p).unwrap()))
    });
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    r.record(6, worst < 1e-5, dt, None, format!(
            "entrywise discrepancy at eps_v = 0.1, 0.262, 0.5, 1.0: {}",
            errs.map(|e| format!("{e:.2e}")).join(", ")
        ));
}

fn lyapunov(r: &mut Report) {
    let p = ModelParams::two_task(4.0, 0.5, 0.25).unwrap();
    let (res, dt) = timed(|| lyapunov_at_critical(1e-6, &p));
    let (pass, detail) = match res {
        Ok((e, rep)) => {
            let want = -1.0 / (2.0 - 4.0 * e * e);
            let d = (rep.t1.re - want).abs();
            (rep.ell1 < 0.0 && d < 1e-3, format!("l1 = {:.6} at eps_v = {e:.6}; Re T1 = {:.6} vs {want:.6} (diff {d:.1e})", rep.ell1, rep.t1.re))
        }
        Err(e) => (false, format!("error: {e}")),
    };
    r.record(7, pass, dt, Some(Duration::from_secs(1)), detail);
}

fn planar_cycle(r: &mut Report) {
    let (res, dt) = timed(|| -> Result<_, motivdyn::cycle::CycleError> {
        let f = find_limit_cycle(4.0, 1e-6)?;
        let outs = [0.5, 0.7, 0.9].map(|p| poincare_map(p, 4.0, 1e-6).map(|x| x.p_out));
        let outs: Vec<f64> = outs.into_iter().collect::<Result<_, _>>()?;
        Ok((f, outs))
    });
    let (pass, detail) = match res {
        Ok((f, outs)) => {
            let spread = outs.iter().cloned().fold(f64::MIN, f64::max) - outs.iter().cloned().fold(f64::MAX, f64::min);
            let ok = f.fixed_point > 0.45 && f.fixed_point < 1.0 && spread < 1e-5 && f.dp_value.abs() < 1e-5;
            (ok, format!("p* = {:.9}, P(0.5, 0.7, 0.9) spread {spread:.1e}, DP(p*) = {:.2e}", f.fixed_point, f.dp_value))
        }
        Err(e) => (false, format!("error: {e}")),
    };
    r.record(8, pass, dt, Some(Duration::from_secs(30)), detail);
}

fn grid21() -> impl Iterator<Item = PlanarState> {
    (0..21).flat_map(|i| (0..21).map(move |j| PlanarState { x1: -1.0 + 0.1 * i as f64, x2: -1.0 + 0.1 * j as f64 }))
}

fn slow_manifold_quality(r: &mut Report) {
    let p = ModelParams::two_task(4.0, 1e-3, 1e-3).unwrap();
    let (res, dt) = timed(|| {
        let g_max = grid21()
            .map(|x| {
                let (_, g) = fast_slow_fields(x, slow_manifold(x, p.sigma), 0.0, &p).unwrap();
                g.y1.abs().max(g.y2.abs())
            })
            .fold(0.0, f64::max);
        let cfg = IntegratorConfig { t_end: 40.0, ..Default::default() };
        (g_max, slow_manifold_error(&p, &cfg))
    });
    let (pass, detail) = match res {
        (g_max, Ok(s)) => {
            let median = s.median_off_jump().unwrap_or(f64::NAN);
            let coloc = s.spike_colocation(0.1, 0.02, 1.0).unwrap_or(0.0);
            (
                g_max <= 1e-14 && median < 0.1 && coloc >= 0.9,
                format!("max |g_y(x, h_y(x), 0)| = {g_max:.1e}; off-jump median |residual| = {median:.2e}; spikes next to jumps {:.0}%", 100.0 * coloc),
            )
        }
        (_, Err(e)) => (false, format!("error: {e}")),
    };
    r.record(9, pass, dt, Some(Duration::from_secs(60)), detail);
}

fn layer(r: &mut Report) {
    let p = ModelParams::two_task(4.0, 1e-3, 2e-3).unwrap();
    let (res, dt) = timed(|| {
        let mut worst: f64 = 0.0;
        let mut most: f64 = f64::MIN;
        for x in grid21() {
            let ev = layer_eigenvalues(x, &p).unwrap();
            let mut want = [-1.0 / p.ell, -(3.0 + x.x1 * x.x2) / 2.0];
            want.sort_by(f64::total_cmp);
            worst = worst.max((ev[0] - want[0]).abs()).max((ev[1] - want[1]).abs());
            most = most.max(ev[1]);
        }
        (worst, most)
    });
    let (worst, most) = res;
    r.record(10, worst < 1e-10 && most < 0.0, dt, Some(Duration::from_secs(1)), format!("max deviation {worst:.1e}, largest eigenvalue {most:.3}"));
}

fn pinned_trajectories() -> Vec<(RunConfig, Trajectory)> {
    default_reproduction_suite()
        .into_iter()
        .take(4)
        .map(|cfg| {
            let tr = simulate_mean_diff(&cfg.params().unwrap(), &cfg.initial_state(), &cfg.integrator().unwrap()).unwrap();
            (cfg, tr)
        })
        .collect()
}

fn invariants(r: &mut Report) {
    let (checks, dt) = timed(|| {
        let mut out: Vec<(String, bool)> = Vec::new();
        let runs = pinned_trajectories();

        let mut bounds = true;
        let mut monotone = true;
        for (_, tr) in &runs {
            let mut last = f64::INFINITY;
            for (_, z) in tr.iter() {
                bounds &= z[1] >= 0.5 - 1e-9 && z[0].abs() <= 1.0 + 1e-9;
                let v = 0.5 * (z[1] - 0.5).powi(2);
                monotone &= v <= last + 1e-9;
                last = v;
            }
        }
        out.push(("bar_phi >= 1/2 and |d_phi| <= 1".into(), bounds));
        out.push(("V = (bar_phi - 1/2)^2 / 2 non-increasing".into(), monotone));

        let mut simplex = true;
        for (cfg, _) in &runs {
            let p = cfg.params().unwrap();
            let xi0 = z_to_xi(&cfg.initial_state(), &p, 1.0).unwrap();
            let tr = integrate(&FullSystem::new(&p).unwrap(), &xi0.to_vec(), &cfg.integrator().unwrap()).unwrap();
            for (_, y) in tr.iter() {
                let m = &y[2..5];
                simplex &= (m.iter().sum::<f64>() - 1.0).abs() < 1e-9 && m.iter().all(|&a| a > -1e-9);
            }
        }
        out.push(("simplex preserved in original coordinates".into(), simplex));

        // Round trip and pushforward on states sampled from the pinned runs.
        let mut round: f64 = 0.0;
        let mut push: f64 = 0.0;
        for (cfg, tr) in &runs {
            let p = cfg.params().unwrap();
            let step = (tr.len() / 50).max(1);
            for (_, y) in tr.iter().step_by(step) {
                let z = MeanDiffState::from_slice(y);
                let Ok(xi) = z_to_xi(&z, &p, 1.0) else { continue };
                let back = xi_to_z(&xi, &p).unwrap().to_array();
                // Distances within the integration tolerance of the goal segment are
                // clipped onto it by the inverse, so compare only the feasible interior.
                if 4.0 * z.bar_phi * z.bar_phi - z.d_phi * z.d_phi > 1e-6 && z.bar_phi + 0.5 * z.d_phi.abs() > 0.5 + 1e-6 {
                    let d = back.iter().zip(z.to_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    round = round.max(d);
                }
                if z.bar_phi - 0.5 * z.d_phi.abs() > 1e-3 {
                    push = push.max(pushforward_error(&xi, &p));
                }
            }
        }
        out.push((format!("round trip max error {round:.1e}"), round < 1e-12));
        out.push((format!("pushforward max relative error {push:.1e}"), push < 1e-6));
        out
    });
    let pass = checks.iter().all(|(_, ok)| *ok);
    let detail = checks.iter().map(|(n, ok)| format!("{n}: {}", if *ok { "ok" } else { "violated" })).collect::<Vec<_>>().join("; ");
    r.record(11, pass, dt, None, detail);
}

fn pushforward_error(xi: &FullState, p: &ModelParams) -> f64 {
    let f = full_field(xi, p).unwrap();
    let h = 1e-7;
    let shift = |s: f64| FullState {
        x: xi.x.iter().zip(&f.x).map(|(a, b)| a + s * b).collect(),
        m: xi.m.iter().zip(&f.m).map(|(a, b)| a + s * b).collect(),
        v: xi.v.iter().zip(&f.v).map(|(a, b)| a + s * b).collect(),
    };
    let (Ok(zp), Ok(zm)) = (xi_to_z(&shift(h), p), xi_to_z(&shift(-h), p)) else {
        return f64::INFINITY;
    };
    let fz = mean_diff_field(&xi_to_z(xi, p).unwrap(), p).unwrap().to_array();
    let (zp, zm) = (zp.to_array(), zm.to_array());
    (0..6)
        .map(|k| ((zp[k] - zm[k]) / (2.0 * h) - fz[k]).abs() / fz[k].abs().max(1.0))
        .fold(0.0, f64::max)
}

#[test]
fn acceptance() {
    let mut r = Report { lines: Vec::new(), failed: Vec::new() };
    critical_value(&mut r);
    transversality(&mut r);
    hopf_limit(&mut r);
    regime_taxonomy(&mut r);
    deadlock(&mut r);
    jacobian_check(&mut r);
    lyapunov(&mut r);
    planar_cycle(&mut r);
    slow_manifold_quality(&mut r);
    layer(&mut r);
    invariants(&mut r);
    assert!(r.failed.is_empty(), "failed criteria: {:?}\n{}", r.failed, r.lines.join("\n"));
}
