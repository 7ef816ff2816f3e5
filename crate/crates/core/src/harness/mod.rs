//! Experiment runner: correlation sweeps, power-law fits and CSV output.

pub mod config;
pub mod fit;
pub mod output;
pub mod sweep;

pub use config::{
    experiment_preset, model_preset, ExpansionSpec, ExperimentConfig, ModelChoice, PayoffChoice, ReferenceKind,
    SolverKind, DESK_GAMMAS, EXPERIMENT_PRESETS,
};
pub use fit::{fit_points, fit_power_law, PowerLawFit};
pub use output::{emit_csv, read_csv};
pub use sweep::{run_point, run_sweep, ConvergenceRecord, Prepared};

/// Records kept for fitting under an optional `λ₂` ceiling.
pub fn fit_subset(records: &[ConvergenceRecord], lambda2_max: Option<f64>) -> Vec<ConvergenceRecord> {
    records
        .iter()
        .filter(|r| lambda2_max.is_none_or(|m| r.lambda2 <= m))
        .cloned()
        .collect()
}
