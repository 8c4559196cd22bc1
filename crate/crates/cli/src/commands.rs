//! Each command computes a [`Table`] in memory; nothing touches the filesystem here.

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use motivdyn::cycle::{find_limit_cycle, origin_stability, poincare_derivative, poincare_map, slow_manifold_error};
use motivdyn::hopf::{bifurcation_point, branch_shape_r2, epsilon_v0_sigma, hopf_point_6d};
use motivdyn::lyapunov::lyapunov_at_critical;
use motivdyn::regime::Regime;
use motivdyn::simulate::simulate_and_classify;
use motivdyn::ModelParams;
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&f64> for Cell {
    fn from(v: &f64) -> Self {
        Cell::Num(*v)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
    /// Scalar results echoed into the manifest.
    pub summary: BTreeMap<String, toml::Value>,
}

impl Table {
    fn new(command: Command) -> Self {
        Table {
            columns: columns(command),
            rows: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    fn note(&mut self, key: &str, value: impl Into<toml::Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    fn note_num(&mut self, key: &str, v: f64) {
        // TOML has nan/inf literals, so non-finite values survive the round trip.
        self.note(key, v);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }
}

/// Frozen column schema of each command's results table.
pub fn columns(command: Command) -> &'static [&'static str] {
    match command {
        Command::Simulate => &["t", "d_phi", "bar_phi", "d_m", "bar_m", "d_v", "bar_v"],
        Command::HopfCurve => &["eps_lambda", "eps_v_critical", "omega0", "residual", "status"],
        Command::BifurcationDiagram => &["eps_v", "amplitude_ptp", "amplitude_radius", "period", "regime"],
        Command::Lyapunov => &[
            "eta",
            "eps_v_critical",
            "omega0",
            "ell1",
            "re_t1",
            "re_t2",
            "re_t3",
            "re_t1_closed_form",
            "q_defect",
            "p_defect",
        ],
        Command::Poincare => &["p_in", "p_out", "transit_time", "divergence_integral", "dp"],
        Command::SlowManifoldError => &["t", "residual", "abs_residual", "jump", "dm_rate"],
        Command::Regimes => &["eps_v", "eps_lambda", "amplitude", "earlier_amplitude", "period", "regime"],
    }
}

/// One line per column, for `--help` and the docs.
pub fn column_help(command: Command) -> &'static str {
    match command {
        Command::Simulate => {
            "t: time; d_phi, bar_phi: difference and mean of the goal distances; \
             d_m, bar_m: difference and mean of the task motivations; d_v, bar_v: same for the values"
        }
        Command::HopfCurve => {
            "eps_lambda: grid value; eps_v_critical: where the deadlock loses stability; \
             omega0: frequency of the crossing pair; residual: |Re lambda| at the root; status: ok or the failure"
        }
        Command::BifurcationDiagram => {
            "eps_v: grid value; amplitude_ptp: peak-to-peak of d_phi after the transient; \
             amplitude_radius: half of it; period: mean crossing period (nan if none); regime"
        }
        Command::Lyapunov => {
            "eta: grid value; eps_v_critical, omega0: Hopf point; ell1: first Lyapunov coefficient; \
             re_t1..re_t3: real parts of its three terms; re_t1_closed_form: -1/(2 - 4 eps_v^2); \
             q_defect, p_defect: eigenvector residuals"
        }
        Command::Poincare => {
            "p_in: start on the section x2 = 0; p_out: next upward crossing; transit_time; \
             divergence_integral: integral of the planar divergence over the transit; dp: slope of the map (nan near the ends)"
        }
        Command::SlowManifoldError => {
            "t: time; residual: y1 - h1(x); abs_residual; jump: 1 where |d(dm)/dt| exceeds ten times its median; \
             dm_rate: |d(dm)/dt|"
        }
        Command::Regimes => {
            "eps_v: grid value; eps_lambda: ell * eps_v; amplitude, earlier_amplitude: d_phi peak-to-peak \
             in the last and second-to-last quarter; period (nan if none); regime"
        }
    }
}

fn opt(v: Option<f64>) -> Cell {
    Cell::Num(v.unwrap_or(f64::NAN))
}

fn regime_cell(r: Regime) -> Cell {
    Cell::Text(r.as_str().to_string())
}

pub fn execute(config: &RunConfig) -> Result<Table, CliError> {
    config.validate()?;
    let params = config.params()?;
    match config.command {
        Command::Simulate => simulate(config, &params),
        Command::HopfCurve => hopf_curve(config, &params),
        Command::BifurcationDiagram => bifurcation(config, &params),
        Command::Lyapunov => lyapunov(config, &params),
        Command::Poincare => poincare(config),
        Command::SlowManifoldError => slow_manifold(config, &params),
        Command::Regimes => regimes(config),
    }
}

fn simulate(config: &RunConfig, params: &ModelParams) -> Result<Table, CliError> {
    let (traj, rep) = simulate_and_classify(params, &config.initial_state(), &config.integrator()?, config.transient_fraction)
        .map_err(CliError::numerical)?;
    let mut t = Table::new(Command::Simulate);
    for (time, z) in traj.iter() {
        let mut row = vec![Cell::Num(time)];
        row.extend(z.iter().map(|&v| Cell::Num(v)));
        t.rows.push(row);
    }
    let t_from = config.t_end * config.transient_fraction;
    t.note("regime", rep.regime.as_str());
    t.note_num("amplitude", rep.amplitude);
    t.note_num("earlier_amplitude", rep.earlier_amplitude);
    t.note_num("period", rep.period_estimate.unwrap_or(f64::NAN));
    t.note("low_confidence", rep.low_confidence);
    t.note_num("trailing_from", t_from);
    t.note_num("d_m_peak_to_peak", traj.peak_to_peak(2, t_from, config.t_end).unwrap_or(f64::NAN));
    for (name, k) in [("mean_bar_phi", 1), ("mean_bar_m", 3), ("mean_bar_v", 5)] {
        t.note_num(name, traj.time_average(k, t_from).unwrap_or(f64::NAN));
    }
    t.note("accepted_steps", traj.accepted_steps as i64);
    Ok(t)
}

fn hopf_curve(config: &RunConfig, params: &ModelParams) -> Result<Table, CliError> {
    let grid = config.grid_or_default();
    let results: Vec<_> = grid.par_iter().map(|&el| hopf_point_6d(el, params)).collect();
    let mut t = Table::new(Command::HopfCurve);
    let mut found = 0i64;
    for (el, r) in grid.iter().zip(results) {
        match r {
            Ok(rep) => {
                found += 1;
                t.rows.push(vec![el.into(), rep.eps_v_critical.into(), rep.omega0.into(), rep.residual.into(), "ok".into()]);
            }
            Err(e) => t.rows.push(vec![el.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), Cell::Text(e.to_string())]),
        }
    }
    t.note("points_found", found);
    let analytic = epsilon_v0_sigma(config.eta, config.sigma).map_err(CliError::numerical)?;
    t.note_num("eps_v_critical_reduced", analytic.eps_v_critical);
    Ok(t)
}

fn bifurcation(config: &RunConfig, params: &ModelParams) -> Result<Table, CliError> {
    let grid = config.grid_or_default();
    let integ = config.integrator()?;
    let results: Vec<_> = grid
        .par_iter()
        .map(|&e| bifurcation_point(e, params, &integ, config.transient_fraction))
        .collect();
    let mut t = Table::new(Command::BifurcationDiagram);
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    for (e, r) in grid.iter().zip(results) {
        match r {
            Ok(p) => {
                t.rows.push(vec![e.into(), p.amplitude.into(), (0.5 * p.amplitude).into(), opt(p.period), regime_cell(p.regime)]);
                points.push(p);
            }
            Err(err) => {
                t.rows.push(vec![e.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), "failed".into()]);
                gaps.push(toml::Value::String(format!("{e}: {err}")));
            }
        }
    }
    let crit = epsilon_v0_sigma(config.eta, config.sigma).map_err(CliError::numerical)?.eps_v_critical;
    t.note_num("eps_v_critical", crit);
    t.note_num("branch_r2", branch_shape_r2(&points, crit, 5).unwrap_or(f64::NAN));
    t.note("gaps", toml::Value::Array(gaps));
    Ok(t)
}

fn lyapunov(config: &RunConfig, params: &ModelParams) -> Result<Table, CliError> {
    let grid = config.grid_or_default();
    let results: Vec<_> = grid.par_iter().map(|&eta| lyapunov_at_critical(eta, params)).collect();
    let mut t = Table::new(Command::Lyapunov);
    for (eta, r) in grid.iter().zip(results) {
        let (crit, rep) = r.map_err(|e| CliError::Numerical(format!("eta = {eta}: {e}")))?;
        t.rows.push(vec![
            eta.into(),
            crit.into(),
            rep.omega0.into(),
            rep.ell1.into(),
            rep.t1.re.into(),
            rep.t2.re.into(),
            rep.t3.re.into(),
            (-1.0 / (2.0 - 4.0 * crit * crit)).into(),
            rep.defects.0.into(),
            rep.defects.1.into(),
        ]);
    }
    Ok(t)
}

fn poincare(config: &RunConfig) -> Result<Table, CliError> {
    let grid = config.grid_or_default();
    let (sigma, eta, h) = (config.sigma, config.eta, config.fd_step);
    let results: Vec<_> = grid
        .par_iter()
        .map(|&p| poincare_map(p, sigma, eta).map(|r| (r, poincare_derivative(p, sigma, eta, h).ok())))
        .collect();
    let mut t = Table::new(Command::Poincare);
    for (p, r) in grid.iter().zip(results) {
        let (rec, dp) = r.map_err(|e| CliError::Numerical(format!("p = {p}: {e}")))?;
        t.rows.push(vec![rec.p_in.into(), rec.p_out.into(), rec.transit_time.into(), rec.divergence_integral.into(), opt(dp)]);
    }
    let origin = origin_stability(sigma, eta);
    t.note("origin", format!("{:?}", origin.class));
    t.note_num("origin_trace", origin.trace);
    match find_limit_cycle(sigma, eta) {
        Ok(f) => {
            t.note_num("fixed_point", f.fixed_point);
            t.note_num("fixed_point_defect", f.fixed_point_defect);
            t.note_num("rho2", f.rho2);
            t.note_num("dp_at_fixed_point", f.dp_value);
            t.note_num("dp_step", f.dp_step);
            t.note_num("period", f.period);
            t.note_num("log_rho2_from_divergence", f.log_rho2_from_trace);
            t.note_num("max_abs_x1", f.max_abs_x1);
        }
        Err(e) => t.note("limit_cycle", e.to_string()),
    }
    Ok(t)
}

fn slow_manifold(config: &RunConfig, params: &ModelParams) -> Result<Table, CliError> {
    let integ = config.integrator()?;
    let r = slow_manifold_error(params, &integ).map_err(CliError::numerical)?;
    let mut t = Table::new(Command::SlowManifoldError);
    for k in 0..r.times.len() {
        t.rows.push(vec![
            r.times[k].into(),
            r.residual[k].into(),
            r.residual[k].abs().into(),
            (if r.jump_mask[k] { 1.0 } else { 0.0 }).into(),
            r.dm_rate[k].into(),
        ]);
    }
    let dt = integ.output_dt.unwrap_or(motivdyn::cycle::SLOW_MANIFOLD_DT);
    t.note_num("median_off_jump", r.median_off_jump().unwrap_or(f64::NAN));
    t.note_num("spike_colocation", r.spike_colocation(0.1, 2.0 * dt, 1.0).unwrap_or(f64::NAN));
    t.note("jump_samples", r.jump_mask.iter().filter(|j| **j).count() as i64);
    Ok(t)
}

fn regimes(config: &RunConfig) -> Result<Table, CliError> {
    let grid = config.grid_or_default();
    let integ = config.integrator()?;
    let results: Vec<_> = grid
        .par_iter()
        .map(|&eps_v| {
            let el = config.ell * eps_v;
            let p = ModelParams::two_task_with(config.sigma, eps_v, el, config.eta, config.c)
                .map_err(|e| CliError::Config(e.to_string()))?;
            simulate_and_classify(&p, &config.initial_state(), &integ, config.transient_fraction)
                .map(|(_, rep)| (el, rep))
                .map_err(|e| CliError::Numerical(format!("eps_v = {eps_v}: {e}")))
        })
        .collect();
    let mut t = Table::new(Command::Regimes);
    for (eps_v, r) in grid.iter().zip(results) {
        let (el, rep) = r?;
        t.rows.push(vec![
            eps_v.into(),
            el.into(),
            rep.amplitude.into(),
            rep.earlier_amplitude.into(),
            opt(rep.period_estimate),
            regime_cell(rep.regime),
        ]);
    }
    Ok(t)
}
