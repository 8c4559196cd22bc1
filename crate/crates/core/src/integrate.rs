//! Dormand–Prince 5(4) with dense output, event location and an optional
//! exact-exponential substep for linear relaxation components.

use crate::error::ModelError;
use thiserror::Error;

/// An autonomous ODE `y' = f(y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<(), ModelError>;

    /// Checked after every accepted step; an `Err` halts integration.
    fn check(&self, _y: &[f64]) -> Result<(), String> {
        Ok(())
    }

    /// Components obeying `y_k' = rate * (target_k(y) - y_k)`, advanced exactly in stiff mode.
    fn relaxation(&self) -> Option<Relaxation> {
        None
    }

    /// Writes `target_k(y)` for each relaxation index, in order.
    fn relaxation_targets(&self, _y: &[f64], _out: &mut [f64]) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub indices: Vec<usize>,
    pub rate: f64,
}

/// Wraps a closure as an [`OdeSystem`].
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), ModelError>,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnSystem { dim, f }
    }
}

impl<F> OdeSystem for FnSystem<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), ModelError>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<(), ModelError> {
        (self.f)(y, dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_end: f64,
    pub stiff_mode: bool,
    /// Emit states on this uniform grid instead of at every accepted step.
    pub output_dt: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 1.0,
            t_end: 1.0,
            stiff_mode: false,
            output_dt: None,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrationError> {
        let checks = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("t_end", self.t_end),
        ];
        for (name, v) in checks {
            if v.is_nan() || v <= 0.0 {
                return Err(IntegrationError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if let Some(dt) = self.output_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(IntegrationError::Config(format!("output_dt must be > 0, got {dt}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64, state: Vec<f64> },
    #[error("vector field failed at t = {t}: {source}")]
    Field {
        t: f64,
        state: Vec<f64>,
        #[source]
        source: ModelError,
    },
    #[error("invariant violated at t = {t}: {message}")]
    Invariant { t: f64, state: Vec<f64>, message: String },
    #[error("step budget of {steps} exhausted at t = {t}")]
    MaxSteps { t: f64, steps: usize },
}

impl IntegrationError {
    /// Last valid state before the failure, when one is known.
    pub fn last_state(&self) -> Option<(f64, &[f64])> {
        match self {
            IntegrationError::StepUnderflow { t, state }
            | IntegrationError::Field { t, state, .. }
            | IntegrationError::Invariant { t, state, .. } => Some((*t, state)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

pub type EventFn<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;

/// A scalar function of the state whose sign changes are located.
pub struct EventSpec<'a> {
    pub label: String,
    pub func: EventFn<'a>,
    pub direction: Direction,
    /// Stop integration once this many crossings have been recorded.
    pub terminal_after: Option<usize>,
}

impl<'a> EventSpec<'a> {
    pub fn new(label: impl Into<String>, direction: Direction, func: impl Fn(&[f64]) -> f64 + 'a) -> Self {
        EventSpec {
            label: label.into(),
            func: Box::new(func),
            direction,
            terminal_after: None,
        }
    }

    pub fn terminal(mut self, count: usize) -> Self {
        self.terminal_after = Some(count);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub state: Vec<f64>,
    pub label: String,
    pub rising: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Row-major: state `i` occupies `states[i * dim .. (i + 1) * dim]`.
    pub states: Vec<f64>,
    pub events: Vec<Event>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.states[i * self.dim + k]).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.times.iter().copied().zip(self.states.chunks_exact(self.dim.max(1)))
    }

    /// Trapezoidal time average of component `k` over `[t_from, t_end]`.
    pub fn time_average(&self, k: usize, t_from: f64) -> Option<f64> {
        let mut area = 0.0;
        let mut span = 0.0;
        for i in 1..self.len() {
            let (t0, t1) = (self.times[i - 1], self.times[i]);
            if t0 < t_from {
                continue;
            }
            let dt = t1 - t0;
            area += 0.5 * dt * (self.states[(i - 1) * self.dim + k] + self.states[i * self.dim + k]);
            span += dt;
        }
        (span > 0.0).then(|| area / span)
    }

    /// Peak-to-peak of component `k` over samples with `t_from <= t <= t_to`.
    pub fn peak_to_peak(&self, k: usize, t_from: f64, t_to: f64) -> Option<f64> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (t, y) in self.iter() {
            if t >= t_from && t <= t_to {
                lo = lo.min(y[k]);
                hi = hi.max(y[k]);
            }
        }
        (hi >= lo).then_some(hi - lo)
    }

    fn push(&mut self, t: f64, y: &[f64]) {
        self.times.push(t);
        self.states.extend_from_slice(y);
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension of one accepted step.
struct Dense<'s, S: OdeSystem + ?Sized> {
    sys: &'s S,
    relax: Option<&'s Relaxation>,
    h: f64,
    r: [Vec<f64>; 5],
    y_start_relax: Vec<f64>,
    targets: Vec<f64>,
}

impl<S: OdeSystem + ?Sized> Dense<'_, S> {
    fn eval(&mut self, theta: f64, out: &mut [f64]) {
        let s = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.r[0][i]
                + theta * (self.r[1][i] + s * (self.r[2][i] + theta * (self.r[3][i] + s * self.r[4][i])));
        }
        if let Some(rx) = self.relax {
            self.sys.relaxation_targets(out, &mut self.targets);
            let decay = (-rx.rate * theta * self.h).exp();
            for (j, &k) in rx.indices.iter().enumerate() {
                out[k] = self.targets[j] + (self.y_start_relax[j] - self.targets[j]) * decay;
            }
        }
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], cfg: &IntegratorConfig, skip: &[usize]) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..err.len() {
        if skip.contains(&i) {
            continue;
        }
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        (acc / count as f64).sqrt()
    }
}

pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    initial: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    integrate_with_events(sys, initial, config, &[])
}

pub fn integrate_with_events<S: OdeSystem + ?Sized>(
    sys: &S,
    initial: &[f64],
    config: &IntegratorConfig,
    events: &[EventSpec<'_>],
) -> Result<Trajectory, IntegrationError> {
    config.validate()?;
    let n = sys.dim();
    if initial.len() != n {
        return Err(IntegrationError::Config(format!(
            "initial state has length {}, system dimension is {n}",
            initial.len()
        )));
    }
    let relaxation = if config.stiff_mode { sys.relaxation() } else { None };
    let relax = relaxation.as_ref();
    let skip: Vec<usize> = relax.map(|r| r.indices.clone()).unwrap_or_default();

    let rhs = |y: &[f64], dy: &mut [f64], t: f64| -> Result<(), IntegrationError> {
        sys.rhs(y, dy).map_err(|source| IntegrationError::Field {
            t,
            state: y.to_vec(),
            source,
        })?;
        for &k in &skip {
            dy[k] = 0.0;
        }
        Ok(())
    };

    let mut traj = Trajectory {
        dim: n,
        ..Default::default()
    };
    let mut y = initial.to_vec();
    sys.check(&y).map_err(|message| IntegrationError::Invariant {
        t: 0.0,
        state: y.clone(),
        message,
    })?;
    traj.push(0.0, &y);

    let mut k1 = vec![0.0; n];
    rhs(&y, &mut k1, 0.0)?;
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut buf = vec![0.0; n];
    let mut n_relax = 0;
    if let Some(rx) = relax {
        n_relax = rx.indices.len();
    }
    let mut targets = vec![0.0; n_relax];

    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.func)(&y)).collect();
    let mut counts = vec![0usize; events.len()];
    let mut next_out = 1usize;

    let mut t = 0.0;
    let mut h = initial_step(&y, &k1, config);
    let mut steps = 0usize;
    let mut last_rejected = false;

    while t < config.t_end {
        if steps >= config.max_steps {
            return Err(IntegrationError::MaxSteps { t, steps });
        }
        h = h.min(config.max_step);
        let remaining = config.t_end - t;
        if h >= remaining || remaining - h < 1e-12 * h {
            h = remaining;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(IntegrationError::StepUnderflow { t, state: y.clone() });
        }

        let step = (|| -> Result<(), IntegrationError> {
            for i in 0..n {
                stage[i] = y[i] + h * A21 * k1[i];
            }
            rhs(&stage, &mut k2, t + C2 * h)?;
            for i in 0..n {
                stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            rhs(&stage, &mut k3, t + C3 * h)?;
            for i in 0..n {
                stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            rhs(&stage, &mut k4, t + C4 * h)?;
            for i in 0..n {
                stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            rhs(&stage, &mut k5, t + C5 * h)?;
            for i in 0..n {
                stage[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            rhs(&stage, &mut k6, t + h)?;
            for i in 0..n {
                y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            rhs(&y_new, &mut k7, t + h)?;
            Ok(())
        })();

        if let Err(e) = step {
            // A stage left the admissible region: retry with a smaller step.
            if matches!(e, IntegrationError::Field { .. }) && h > 1e-14 * t.abs().max(1.0) * 4.0 {
                h *= 0.25;
                traj.rejected_steps += 1;
                last_rejected = true;
                continue;
            }
            return Err(match e {
                IntegrationError::Field { source, .. } => IntegrationError::Field {
                    t,
                    state: y.clone(),
                    source,
                },
                other => other,
            });
        }

        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &y_new, config, &skip);
        if !en.is_finite() || en > 1.0 {
            let fac = if en.is_finite() { (0.9 * en.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= fac;
            traj.rejected_steps += 1;
            last_rejected = true;
            continue;
        }

        let mut dense = Dense {
            sys,
            relax,
            h,
            r: [
                y.clone(),
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
            ],
            y_start_relax: relax.map(|rx| rx.indices.iter().map(|&k| y[k]).collect()).unwrap_or_default(),
            targets: vec![0.0; n_relax],
        };
        for i in 0..n {
            let dy = y_new[i] - y[i];
            let bspl = h * k1[i] - dy;
            dense.r[1][i] = dy;
            dense.r[2][i] = bspl;
            dense.r[3][i] = dy - h * k7[i] - bspl;
            dense.r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }

        if let Some(rx) = relax {
            sys.relaxation_targets(&y_new, &mut targets);
            let decay = (-rx.rate * h).exp();
            for (j, &k) in rx.indices.iter().enumerate() {
                y_new[k] = targets[j] + (y[k] - targets[j]) * decay;
            }
        }

        let t_new = if h == remaining { config.t_end } else { t + h };
        steps += 1;
        traj.accepted_steps += 1;

        // Events, located by bisection on the dense output.
        let mut stop_at: Option<(f64, Vec<f64>)> = None;
        for (e, spec) in events.iter().enumerate() {
            let g_new = (spec.func)(&y_new);
            let g_old = g_prev[e];
            g_prev[e] = g_new;
            let rising = g_old < 0.0 && g_new >= 0.0;
            let falling = g_old > 0.0 && g_new <= 0.0;
            let wanted = match spec.direction {
                Direction::Rising => rising,
                Direction::Falling => falling,
                Direction::Either => rising || falling,
            };
            if !wanted {
                continue;
            }
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            while (hi - lo) * h > 1e-12 {
                let mid = 0.5 * (lo + hi);
                dense.eval(mid, &mut buf);
                let g = (spec.func)(&buf);
                if (g < 0.0) == (g_old < 0.0) && g != 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            dense.eval(hi, &mut buf);
            let te = t + hi * h;
            traj.events.push(Event {
                t: te,
                state: buf.clone(),
                label: spec.label.clone(),
                rising,
            });
            counts[e] += 1;
            if spec.terminal_after.is_some_and(|limit| counts[e] >= limit)
                && stop_at.as_ref().is_none_or(|(ts, _)| te < *ts)
            {
                stop_at = Some((te, buf.clone()));
            }
        }
        if let Some((te, _)) = &stop_at {
            traj.events.retain(|ev| ev.t <= *te);
        }
        let horizon = stop_at.as_ref().map_or(t_new, |(te, _)| *te);

        if let Some(dt) = config.output_dt {
            loop {
                let to = next_out as f64 * dt;
                if to > horizon + 1e-12 * dt || to > config.t_end + 1e-12 * dt {
                    break;
                }
                let theta = ((to - t) / h).clamp(0.0, 1.0);
                if theta >= 1.0 && stop_at.is_none() {
                    buf.copy_from_slice(&y_new);
                } else {
                    dense.eval(theta, &mut buf);
                }
                traj.push(to.min(config.t_end), &buf);
                next_out += 1;
            }
            if stop_at.is_none() && t_new >= config.t_end && traj.times.last().is_some_and(|&tl| tl < config.t_end - 1e-12 * dt) {
                traj.push(config.t_end, &y_new);
            }
        } else if stop_at.is_none() {
            traj.push(t_new, &y_new);
        }

        if let Some((te, ys)) = stop_at {
            if traj.times.last().is_none_or(|&tl| tl < te) {
                traj.push(te, &ys);
            }
            return Ok(traj);
        }

        sys.check(&y_new).map_err(|message| IntegrationError::Invariant {
            t: t_new,
            state: y_new.clone(),
            message,
        })?;

        y.copy_from_slice(&y_new);
        t = t_new;
        if relax.is_some() {
            rhs(&y, &mut k1, t)?;
        } else {
            k1.copy_from_slice(&k7);
        }

        let mut fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h *= fac;
    }
    Ok(traj)
}

fn initial_step(y: &[f64], f: &[f64], cfg: &IntegratorConfig) -> f64 {
    let sc: Vec<f64> = y.iter().map(|v| cfg.abs_tol + cfg.rel_tol * v.abs()).collect();
    let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let d1 = (f.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(cfg.max_step).min(cfg.t_end)
}
