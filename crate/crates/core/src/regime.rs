//! Long-run behaviour of a simulated trajectory from the amplitude of one component.

use crate::integrate::Trajectory;
use std::fmt;
use thiserror::Error;

pub const DEADLOCK_AMPLITUDE: f64 = 1e-4;
pub const CYCLE_AGREEMENT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Deadlock,
    DampedOscillation,
    LimitCycle,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Deadlock => "deadlock",
            Regime::DampedOscillation => "damped-oscillation",
            Regime::LimitCycle => "limit-cycle",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Peak-to-peak over the last half-window.
    pub amplitude: f64,
    /// Peak-to-peak over the earlier half-window.
    pub earlier_amplitude: f64,
    pub period_estimate: Option<f64>,
    /// The trailing window holds fewer than five estimated periods.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("trajectory has {0} samples; at least 10 are needed")]
    TooShort(usize),
    #[error("transient fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("component {component} out of range for dimension {dim}")]
    BadComponent { component: usize, dim: usize },
    #[error("a half-window after the transient holds no samples")]
    EmptyWindow,
}

/// Discards the leading `transient_fraction` of the time span, then compares the
/// peak-to-peak amplitude of `component` over two successive half-windows.
pub fn classify_regime(
    traj: &Trajectory,
    component: usize,
    transient_fraction: f64,
) -> Result<RegimeReport, ClassifyError> {
    if traj.len() < 10 {
        return Err(ClassifyError::TooShort(traj.len()));
    }
    if !(transient_fraction > 0.0 && transient_fraction < 1.0) {
        return Err(ClassifyError::BadFraction(transient_fraction));
    }
    if component >= traj.dim {
        return Err(ClassifyError::BadComponent { component, dim: traj.dim });
    }
    let t0 = traj.times[0];
    let t1 = *traj.times.last().unwrap();
    let start = t0 + transient_fraction * (t1 - t0);
    let mid = 0.5 * (start + t1);
    let a1 = traj.peak_to_peak(component, start, mid).ok_or(ClassifyError::EmptyWindow)?;
    let a2 = traj.peak_to_peak(component, mid, t1).ok_or(ClassifyError::EmptyWindow)?;

    let regime = if a1 < DEADLOCK_AMPLITUDE && a2 < DEADLOCK_AMPLITUDE {
        Regime::Deadlock
    } else if (a1 - a2).abs() <= CYCLE_AGREEMENT * a1.max(a2) {
        Regime::LimitCycle
    } else {
        Regime::DampedOscillation
    };
    let period_estimate = match regime {
        Regime::Deadlock => None,
        _ => estimate_period(traj, component, start),
    };
    let low_confidence = period_estimate.is_none_or(|p| (t1 - start) < 5.0 * p);
    Ok(RegimeReport {
        regime,
        amplitude: a2,
        earlier_amplitude: a1,
        period_estimate,
        low_confidence: regime != Regime::Deadlock && low_confidence,
    })
}

/// Mean spacing of upward crossings of the window midline.
fn estimate_period(traj: &Trajectory, k: usize, start: f64) -> Option<f64> {
    let samples: Vec<(f64, f64)> = traj.iter().filter(|(t, _)| *t >= start).map(|(t, y)| (t, y[k])).collect();
    let lo = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let level = 0.5 * (lo + hi);
    let crossings: Vec<f64> = samples
        .windows(2)
        .filter(|w| w[0].1 < level && w[1].1 >= level)
        .map(|w| {
            let (t0, y0) = w[0];
            let (t1, y1) = w[1];
            t0 + (level - y0) / (y1 - y0) * (t1 - t0)
        })
        .collect();
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}
