use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::ModelSpec;
use crate::montecarlo::MCConfig;
use crate::payoff::{self, PayoffSpec};
use crate::pde::GridResolution;

/// Where the reference value of a sweep point comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Closed form of the full problem.
    Oracle,
    /// Plain Monte Carlo price.
    Mc,
    /// Coupled estimate of `u − u^ξ` on shared draws.
    McCoupled,
}

/// How sub-problems are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Pde,
    /// Exact sub-solutions; cosine and geometric payoffs only.
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionSpec {
    /// Leading directions kept at full diffusion (`r`).
    pub retained: usize,
    /// Number of tail directions per sub-problem (`m`).
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelChoice {
    Preset(String),
    Inline(ModelSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PayoffChoice {
    Preset(String),
    Inline(PayoffSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelChoice,
    pub payoff: PayoffChoice,
    /// Overrides the payoff's strike.
    #[serde(default)]
    pub strike: Option<f64>,
    pub expansion: ExpansionSpec,
    pub gamma_list: Vec<f64>,
    pub reference: ReferenceKind,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default)]
    pub pde: GridResolution,
    #[serde(default = "default_mc")]
    pub mc: MCConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Points with a larger `λ₂` are left out of the power-law fit.
    #[serde(default)]
    pub lambda2_max: Option<f64>,
    #[serde(default)]
    pub execution: Execution,
}

fn default_mc() -> MCConfig {
    MCConfig::new(1_000_000, 20_240_601)
}

pub const MODEL_PRESETS: &[&str] = &["equi10", "equi5", "equi10-unit"];

/// Equicorrelated models with `σ = 0.2`, `T = 1`, `r_f = 0`. The
/// correlation level is set per sweep point.
pub fn model_preset(name: &str) -> Result<ModelSpec> {
    match name {
        "equi10" => Ok(ModelSpec::equicorrelated(10, 0.2, 0.5, 100.0, 1.0)),
        "equi5" => Ok(ModelSpec::equicorrelated(5, 0.2, 0.5, 100.0, 1.0)),
        "equi10-unit" => Ok(ModelSpec::equicorrelated(10, 0.2, 0.5, 1.0, 1.0)),
        other => Err(Error::Config(format!(
            "unknown model preset '{other}' (known: {})",
            MODEL_PRESETS.join(", ")
        ))),
    }
}

pub const EXPERIMENT_PRESETS: &[&str] = &["fig2-desk", "fig3-desk", "fig4-desk"];

/// Correlation levels giving `σ²(1 − γ) = 0.024, 0.020, …, 0.004`.
pub const DESK_GAMMAS: [f64; 6] = [0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Desk-scale experiment presets: coarse grids (`J = 200, M = 12` in 2D,
/// `J = 100, M = 12` in 3D) and at most a few million paths.
pub fn experiment_preset(name: &str) -> Result<ExperimentConfig> {
    let base = ExperimentConfig {
        model: ModelChoice::Preset("equi10".into()),
        payoff: PayoffChoice::Preset("arith-omega1".into()),
        strike: None,
        expansion: ExpansionSpec { retained: 1, order: 1 },
        gamma_list: DESK_GAMMAS.to_vec(),
        reference: ReferenceKind::McCoupled,
        solver: SolverKind::Pde,
        pde: GridResolution::new(200, 12),
        mc: MCConfig::new(1_000_000, 20_240_601).antithetic(true),
        output: None,
        lambda2_max: None,
        execution: Execution::Parallel,
    };
    match name {
        "fig2-desk" => Ok(base),
        "fig3-desk" => Ok(ExperimentConfig {
            model: ModelChoice::Preset("equi5".into()),
            payoff: PayoffChoice::Preset("arith5-omega1".into()),
            expansion: ExpansionSpec { retained: 1, order: 2 },
            pde: GridResolution::new(100, 12),
            ..base
        }),
        "fig4-desk" => Ok(ExperimentConfig {
            payoff: PayoffChoice::Preset("geo-kink-omega1".into()),
            strike: Some(1.0),
            reference: ReferenceKind::Oracle,
            solver: SolverKind::ClosedForm,
            ..base
        }),
        other => Err(Error::Config(format!(
            "unknown experiment preset '{other}' (known: {})",
            EXPERIMENT_PRESETS.join(", ")
        ))),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| e.context(path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn resolve_model(&self) -> Result<ModelSpec> {
        match &self.model {
            ModelChoice::Preset(name) => model_preset(name),
            ModelChoice::Inline(m) => Ok(m.clone()),
        }
    }

    pub fn resolve_payoff(&self) -> Result<PayoffSpec> {
        let p = match &self.payoff {
            PayoffChoice::Preset(name) => payoff::preset(name)?,
            PayoffChoice::Inline(p) => p.clone(),
        };
        Ok(match self.strike {
            Some(k) => p.with_strike(k),
            None => p,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_list.is_empty() {
            return Err(Error::validation("gamma_list must not be empty"));
        }
        if let Some(g) = self.gamma_list.iter().find(|g| !(**g > -1.0 && **g < 1.0)) {
            return Err(Error::validation(format!("gamma {g} outside (-1, 1)")));
        }
        let model = self.resolve_model()?;
        model.validate()?;
        let n = model.n_assets;
        self.resolve_payoff()?.validate(n)?;
        let ExpansionSpec { retained, order } = self.expansion;
        if retained + order > n || retained == 0 && order == 0 {
            return Err(Error::validation(format!(
                "expansion (r = {retained}, m = {order}) does not fit N = {n}"
            )));
        }
        if self.reference != ReferenceKind::Oracle {
            self.mc.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in EXPERIMENT_PRESETS {
            experiment_preset(name).unwrap().validate().unwrap();
        }
        assert!(experiment_preset("fig9").is_err());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let cfg = experiment_preset("fig3-desk").unwrap();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let text = r#"{
            "model": {"n_assets": 2, "sigma": [0.2, 0.3], "correlation": 0.1,
                      "horizon": 1.0, "spot": [1.0, 1.0]},
            "payoff": {"kind": "geometric_basket_call", "weights": [0.5, 0.5], "strike": 1.0},
            "expansion": {"retained": 1, "order": 1},
            "gamma_list": [0.2],
            "reference": "oracle"
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.solver, SolverKind::Pde);
        assert_eq!(cfg.pde, GridResolution::new(200, 12));
        assert_eq!(cfg.resolve_model().unwrap().sigma, vec![0.2, 0.3]);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = experiment_preset("fig2-desk").unwrap();
        cfg.gamma_list = vec![];
        assert!(cfg.validate().is_err());
        cfg.gamma_list = vec![1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = experiment_preset("fig2-desk").unwrap();
        cfg.expansion.order = 10;
        assert!(cfg.validate().is_err());
        assert!(matches!(ExperimentConfig::from_json("{"), Err(Error::Config(_))));
    }
}
