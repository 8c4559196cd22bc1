use crate::error::CliError;
use motivdyn::integrate::IntegratorConfig;
use motivdyn::{MeanDiffState, ModelParams};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    HopfCurve,
    BifurcationDiagram,
    Lyapunov,
    Poincare,
    SlowManifoldError,
    Regimes,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::HopfCurve,
        Command::BifurcationDiagram,
        Command::Lyapunov,
        Command::Poincare,
        Command::SlowManifoldError,
        Command::Regimes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::HopfCurve => "hopf-curve",
            Command::BifurcationDiagram => "bifurcation-diagram",
            Command::Lyapunov => "lyapunov",
            Command::Poincare => "poincare",
            Command::SlowManifoldError => "slow-manifold-error",
            Command::Regimes => "regimes",
        }
    }

    /// What the optional `grid` key ranges over.
    pub fn grid_meaning(self) -> Option<&'static str> {
        match self {
            Command::HopfCurve => Some("eps_lambda values"),
            Command::BifurcationDiagram | Command::Regimes => Some("eps_v values"),
            Command::Lyapunov => Some("eta values"),
            Command::Poincare => Some("section points p in (0.1, 1)"),
            Command::Simulate | Command::SlowManifoldError => None,
        }
    }
}

/// One run, read from a flat TOML file whose model keys mirror [`ModelParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "defaults::sigma")]
    pub sigma: f64,
    #[serde(default = "defaults::eps_v")]
    pub eps_v: f64,
    #[serde(default = "defaults::eps_lambda")]
    pub eps_lambda: f64,
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default = "defaults::c")]
    pub c: f64,
    /// `eps_lambda / eps_v` for the regimes sweep.
    #[serde(default = "defaults::ell")]
    pub ell: f64,
    #[serde(default = "defaults::rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "defaults::abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "defaults::max_step")]
    pub max_step: f64,
    #[serde(default = "defaults::t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub stiff_mode: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dt: Option<f64>,
    #[serde(default = "defaults::transient_fraction")]
    pub transient_fraction: f64,
    /// Step of the return-map difference quotient.
    #[serde(default = "defaults::fd_step")]
    pub fd_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Initial `(dphi, bar_phi, dm, bar_m, dv, bar_v)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_state: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
}

mod defaults {
    pub fn sigma() -> f64 {
        4.0
    }
    pub fn eps_v() -> f64 {
        0.5
    }
    pub fn eps_lambda() -> f64 {
        0.25
    }
    pub fn eta() -> f64 {
        motivdyn::params::DEFAULT_ETA
    }
    pub fn c() -> f64 {
        1.0
    }
    pub fn ell() -> f64 {
        0.5
    }
    pub fn rel_tol() -> f64 {
        1e-8
    }
    pub fn abs_tol() -> f64 {
        1e-10
    }
    pub fn max_step() -> f64 {
        1.0
    }
    pub fn t_end() -> f64 {
        100.0
    }
    pub fn transient_fraction() -> f64 {
        0.5
    }
    pub fn fd_step() -> f64 {
        1e-4
    }
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            sigma: defaults::sigma(),
            eps_v: defaults::eps_v(),
            eps_lambda: defaults::eps_lambda(),
            eta: defaults::eta(),
            c: defaults::c(),
            ell: defaults::ell(),
            rel_tol: defaults::rel_tol(),
            abs_tol: defaults::abs_tol(),
            max_step: defaults::max_step(),
            t_end: defaults::t_end(),
            stiff_mode: false,
            output_dt: None,
            transient_fraction: defaults::transient_fraction(),
            fd_step: defaults::fd_step(),
            output_path: None,
            seed_state: None,
            grid: None,
        }
    }

    /// Parses a config file. `command` comes from the command line; the file may
    /// omit it, but must not name a different one.
    pub fn parse(text: &str, command: Option<Command>) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        if let Some(cmd) = command {
            let given = cmd.as_str().to_string();
            match table.get("command") {
                Some(toml::Value::String(s)) if *s != given => {
                    return Err(CliError::Config(format!("config is for `{s}`, not `{given}`")));
                }
                _ => {
                    table.insert("command".into(), toml::Value::String(given));
                }
            }
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are TOML-representable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        self.integrator()?;
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(CliError::Config(format!("ell must be > 0, got {}", self.ell)));
        }
        if !(self.transient_fraction > 0.0 && self.transient_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "transient_fraction must lie in (0, 1), got {}",
                self.transient_fraction
            )));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(CliError::Config(format!("fd_step must be > 0, got {}", self.fd_step)));
        }
        if let Some(s) = &self.seed_state {
            if s.len() != 6 || s.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config("seed_state needs six finite values (dphi, bar_phi, dm, bar_m, dv, bar_v)".into()));
            }
        }
        if let Some(g) = &self.grid {
            if self.command.grid_meaning().is_none() {
                return Err(CliError::Config(format!("`{}` takes no grid", self.command.as_str())));
            }
            if g.is_empty() || g.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config("grid must be a non-empty list of finite values".into()));
            }
        }
        if self.command == Command::SlowManifoldError && (self.eps_v > 1e-2 || self.eps_lambda > 1e-2) {
            return Err(CliError::Config(
                "slow-manifold-error needs eps_v and eps_lambda <= 1e-2".into(),
            ));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::two_task_with(self.sigma, self.eps_v, self.eps_lambda, self.eta, self.c)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let cfg = IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            t_end: self.t_end,
            stiff_mode: self.stiff_mode,
            output_dt: self.output_dt,
            ..Default::default()
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn initial_state(&self) -> MeanDiffState {
        self.seed_state
            .as_deref()
            .map(MeanDiffState::from_slice)
            .unwrap_or_else(MeanDiffState::standard_initial)
    }

    pub fn grid_or_default(&self) -> Vec<f64> {
        if let Some(g) = &self.grid {
            return g.clone();
        }
        match self.command {
            Command::HopfCurve => (0..=40).map(|k| 10f64.powf(-4.0 + 0.1 * k as f64)).collect(),
            Command::BifurcationDiagram => (1..=40).map(|k| 0.01 * k as f64).collect(),
            Command::Lyapunov => vec![self.eta],
            Command::Poincare => (0..45).map(|k| 0.11 + 0.02 * k as f64).collect(),
            Command::Regimes => vec![1.5, 0.8, 0.5],
            Command::Simulate | Command::SlowManifoldError => Vec::new(),
        }
    }
}

/// The pinned runs: four simulations across the regimes, the Hopf curve, the
/// bifurcation diagram, the slow-manifold residual run and the return-map scan.
pub fn default_reproduction_suite() -> Vec<RunConfig> {
    let sim = |eps_v: f64, eps_lambda: f64, t_end: f64, name: &str| RunConfig {
        eps_v,
        eps_lambda,
        t_end,
        output_path: Some(name.into()),
        ..RunConfig::new(Command::Simulate)
    };
    vec![
        sim(1.5, 0.75, 100.0, "deadlock.tsv"),
        sim(0.8, 0.4, 60.0, "damped.tsv"),
        sim(0.5, 0.25, 400.0, "limit_cycle.tsv"),
        RunConfig {
            stiff_mode: true,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            ..sim(1e-3, 1e-6, 40.0, "relaxation.tsv")
        },
        RunConfig {
            output_path: Some("hopf_curve.tsv".into()),
            ..RunConfig::new(Command::HopfCurve)
        },
        RunConfig {
            t_end: 400.0,
            output_path: Some("bifurcation.tsv".into()),
            ..RunConfig::new(Command::BifurcationDiagram)
        },
        RunConfig {
            eps_v: 1e-3,
            eps_lambda: 1e-3,
            t_end: 40.0,
            output_dt: Some(motivdyn::cycle::SLOW_MANIFOLD_DT),
            output_path: Some("slow_manifold.tsv".into()),
            ..RunConfig::new(Command::SlowManifoldError)
        },
        RunConfig {
            output_path: Some("poincare.tsv".into()),
            ..RunConfig::new(Command::Poincare)
        },
    ]
}
