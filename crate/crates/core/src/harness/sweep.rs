use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ReferenceKind, SolverKind};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::expansion::{
    bound_first_order, bound_second_order, combine_with, general_plan, ExpansionPlan, IndexSet, MixedNormTable,
};
use crate::model::{build_covariance, spectrum, CoordinateMap, ModelSpec, Spectrum};
use crate::montecarlo::{estimate_price, estimate_truncation_error, MCConfig, MCEstimate, PricingProblem};
use crate::oracle::{cosine_solution, geometric_subsolution};
use crate::payoff::{boundary_cutoff, PayoffKind, PayoffSpec};
use crate::pde::{solve_subproblem, GridResolution, SubProblem};

/// One sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub gamma: f64,
    /// Second covariance eigenvalue (`σ²(1 − γ)` for equicorrelation).
    pub lambda2: f64,
    pub expansion: f64,
    pub reference: f64,
    pub abs_error: f64,
    /// Standard error of the reference; zero for closed forms.
    pub stderr: f64,
    pub bound: Option<f64>,
}

/// A priced model: spectrum, principal-coordinate payoff and anchor.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub model: ModelSpec,
    pub spectrum: Spectrum,
    pub payoff: PayoffSpec,
    pub problem: PricingProblem,
    pub cutoff: Option<f64>,
}

impl Prepared {
    pub fn new(model: &ModelSpec, payoff: &PayoffSpec) -> Result<Self> {
        model.validate()?;
        payoff.validate(model.n_assets)?;
        let spectrum = spectrum(&build_covariance(model)?)?;
        let problem = PricingProblem::with_spectrum(model, &spectrum, payoff)?;
        Ok(Prepared {
            model: model.clone(),
            cutoff: boundary_cutoff(payoff, &model.spot),
            spectrum,
            payoff: payoff.clone(),
            problem,
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.problem.lambdas
    }

    pub fn anchor(&self) -> &[f64] {
        &self.problem.anchor
    }

    pub fn coordinate_map(&self) -> CoordinateMap {
        CoordinateMap::new(&self.model, &self.spectrum)
    }

    /// `u^ν` at the anchor.
    pub fn subsolution(&self, subset: &IndexSet, solver: SolverKind, res: &GridResolution, exec: Execution) -> Result<f64> {
        let t = self.model.horizon;
        match solver {
            SolverKind::ClosedForm => match self.payoff.kind {
                PayoffKind::CosineProduct => Ok(cosine_solution(self.anchor(), t, self.lambdas(), subset)),
                PayoffKind::GeometricBasketCall | PayoffKind::DigitalGeometricCall => {
                    let a = self.problem.initial.geometric_direction().expect("geometric payoff");
                    geometric_subsolution(self.payoff.kind, a, self.anchor(), self.lambdas(), subset, t, self.payoff.strike)
                }
                other => Err(Error::validation(format!("no closed-form sub-solutions for {other:?}"))),
            },
            SolverKind::Pde => {
                let g = |z: &[f64]| self.problem.initial.eval(z);
                match SubProblem::new(subset, self.lambdas(), self.anchor(), t, res, &g, self.cutoff)? {
                    Some(p) => solve_subproblem(&p, exec),
                    None => Ok(g(self.anchor())),
                }
            }
        }
    }

    /// `u^ξ = Σ w u^ν`, sub-problems evaluated concurrently.
    pub fn expansion_value(&self, plan: &ExpansionPlan, solver: SolverKind, res: &GridResolution, exec: Execution) -> Result<f64> {
        let values = exec.map_slice(plan.terms(), |term| {
            self.subsolution(&term.subset, solver, res, exec)
                .map_err(|e| e.context(format!("sub-problem {}", term.subset)))
        });
        let mut it = values.into_iter();
        combine_with(plan, |_| it.next().expect("one value per term"))
    }

    /// Closed form of the full problem.
    pub fn oracle_value(&self) -> Result<f64> {
        let full = IndexSet::full(self.model.n_assets);
        self.subsolution(&full, SolverKind::ClosedForm, &GridResolution::default(), Execution::Sequential)
            .map_err(|e| e.context("oracle reference"))
    }

    /// Sharpness bound, available for the cosine payoff (all mixed norms 1).
    pub fn bound(&self, plan: &ExpansionPlan) -> Option<f64> {
        if self.payoff.kind != PayoffKind::CosineProduct {
            return None;
        }
        let n = plan.dim();
        let r = plan.retained();
        let norms = MixedNormTable::cosine(n, r);
        let t = self.model.horizon;
        match plan.order() {
            1 => bound_first_order(t, self.lambdas(), r, &norms).ok(),
            2 => bound_second_order(t, self.lambdas(), r, &norms).ok(),
            _ => None,
        }
    }

    pub fn mc_price(&self, cfg: &MCConfig, exec: Execution) -> Result<MCEstimate> {
        estimate_price(&self.problem, cfg, exec)
    }

    pub fn mc_truncation_error(&self, plan: &ExpansionPlan, cfg: &MCConfig, exec: Execution) -> Result<MCEstimate> {
        estimate_truncation_error(&self.problem, plan, cfg, exec)
    }
}

/// Evaluates one correlation level.
pub fn run_point(cfg: &ExperimentConfig, gamma: f64) -> Result<ConvergenceRecord> {
    let model = cfg.resolve_model()?.with_gamma(gamma);
    let payoff = cfg.resolve_payoff()?;
    let prep = Prepared::new(&model, &payoff)?;
    let plan = general_plan(cfg.expansion.retained, cfg.expansion.order, model.n_assets)?;
    let exec = cfg.execution;
    let expansion = prep.expansion_value(&plan, cfg.solver, &cfg.pde, exec)?;
    let (reference, abs_error, stderr) = match cfg.reference {
        ReferenceKind::Oracle => {
            let v = prep.oracle_value()?;
            (v, (expansion - v).abs(), 0.0)
        }
        ReferenceKind::Mc => {
            let e = prep.mc_price(&cfg.mc, exec)?;
            (e.mean, (expansion - e.mean).abs(), e.stderr)
        }
        ReferenceKind::McCoupled => {
            let e = prep.mc_truncation_error(&plan, &cfg.mc, exec)?;
            (expansion + e.mean, e.mean.abs(), e.stderr)
        }
    };
    let cov_eigs = prep.spectrum.covariance_eigenvalues();
    let record = ConvergenceRecord {
        gamma,
        lambda2: cov_eigs.get(1).copied().unwrap_or(0.0),
        expansion,
        reference,
        abs_error,
        stderr,
        bound: prep.bound(&plan),
    };
    debug!("{record:?}");
    Ok(record)
}

/// One record per correlation level, in input order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRecord>> {
    cfg.validate()?;
    cfg.gamma_list
        .iter()
        .map(|&g| {
            let rec = run_point(cfg, g).map_err(|e| e.context(format!("gamma = {g}")))?;
            info!(
                "gamma={g} lambda2={:.6} expansion={:.8} reference={:.8} abs_error={:.3e} stderr={:.1e}",
                rec.lambda2, rec.expansion, rec.reference, rec.abs_error, rec.stderr
            );
            Ok(rec)
        })
        .collect()
}
