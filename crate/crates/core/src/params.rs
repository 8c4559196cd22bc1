use crate::error::ModelError;

/// Free parameters of the motivation model.
///
/// `goals` holds one point per task; the two-task constructors place them at
/// `(l, 0)` and `(0, l)` with `sqrt(2) * l = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Stop-signal (cross-inhibition) gain.
    pub sigma: f64,
    /// Inverse value gain, `1 / v*`.
    pub eps_v: f64,
    /// Inverse value-tracking rate, `1 / lambda`.
    pub eps_lambda: f64,
    /// Saturation constant.
    pub eta: f64,
    /// Distance between the two goals.
    pub c: f64,
    /// Ratio `eps_lambda / eps_v` used by the fast/slow form.
    pub ell: f64,
    pub goals: Vec<Vec<f64>>,
}

pub const DEFAULT_ETA: f64 = 1e-6;

impl ModelParams {
    /// Two tasks in the plane with unit goal separation and `ell = eps_lambda / eps_v`.
    pub fn two_task(sigma: f64, eps_v: f64, eps_lambda: f64) -> Result<Self, ModelError> {
        Self::two_task_with(sigma, eps_v, eps_lambda, DEFAULT_ETA, 1.0)
    }

    pub fn two_task_with(
        sigma: f64,
        eps_v: f64,
        eps_lambda: f64,
        eta: f64,
        c: f64,
    ) -> Result<Self, ModelError> {
        let l = c / 2f64.sqrt();
        let p = ModelParams {
            sigma,
            eps_v,
            eps_lambda,
            eta,
            c,
            ell: eps_lambda / eps_v,
            goals: vec![vec![l, 0.0], vec![0.0, l]],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn n_tasks(&self) -> usize {
        self.goals.len()
    }

    /// Spatial dimension of the workspace.
    pub fn dim(&self) -> usize {
        self.goals.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("sigma", self.sigma),
            ("eps_v", self.eps_v),
            ("eps_lambda", self.eps_lambda),
            ("eta", self.eta),
            ("c", self.c),
            ("ell", self.ell),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::param(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if self.goals.is_empty() {
            return Err(ModelError::param("goals", "at least one goal is required"));
        }
        let d = self.dim();
        if d == 0 || self.goals.iter().any(|g| g.len() != d || g.iter().any(|v| !v.is_finite())) {
            return Err(ModelError::param("goals", "goals must be finite points of one common dimension"));
        }
        Ok(())
    }

    /// Checks the two-task planar layout with goal separation `c`.
    pub fn require_two_task(&self) -> Result<(), ModelError> {
        self.validate()?;
        if self.n_tasks() != 2 {
            return Err(ModelError::TaskCount { expected: 2, got: self.n_tasks() });
        }
        if self.dim() != 2 {
            return Err(ModelError::Dimension(format!("two-task coordinates need d = 2, got {}", self.dim())));
        }
        let sep = dist(&self.goals[0], &self.goals[1]);
        if (sep - self.c).abs() > 1e-12 * self.c.max(1.0) {
            return Err(ModelError::param("goals", format!("goal separation {sep} differs from c = {}", self.c)));
        }
        Ok(())
    }

    /// The analysis formulas are written for `c = 1`.
    pub fn require_unit_separation(&self) -> Result<(), ModelError> {
        if (self.c - 1.0).abs() > 1e-12 {
            return Err(ModelError::param("c", format!("analysis assumes c = 1, got {}", self.c)));
        }
        Ok(())
    }

    pub(crate) fn rates(&self) -> Rates {
        Rates {
            sigma: self.sigma,
            eps_v: self.eps_v,
            eps_lambda: self.eps_lambda,
            eta: self.eta,
            c: self.c,
        }
    }
}

/// Scalar parameters of the two-task field, cheap to copy into hot loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rates {
    pub sigma: f64,
    pub eps_v: f64,
    pub eps_lambda: f64,
    pub eta: f64,
    pub c: f64,
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
