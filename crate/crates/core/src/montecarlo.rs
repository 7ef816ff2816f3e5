//! Exact-sampling Monte Carlo in principal coordinates and coupled difference
//! estimators.
//!
//! The terminal state is `z_T = z* + √(2λT) ζ` with `ζ` standard normal, so
//! `E[g(z_T)]` is the solution of the heat problem at the anchor. Coupled
//! estimators evaluate several eigenvalue vectors on the same `ζ`.
//!
//! Samples are drawn in fixed-size batches. Batch `b` of stream `s` uses a
//! ChaCha8 generator keyed by `(seed, s)` on stream `b`, and batch statistics
//! are merged in batch order, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::expansion::{ExpansionPlan, IndexSet};
use crate::model::{build_covariance, spectrum, CoordinateMap, ModelSpec, Spectrum};
use crate::payoff::{InitialCondition, PayoffSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub n_samples: u64,
    pub seed: u64,
    #[serde(default = "default_batch")]
    pub batch: u64,
    /// Average each draw with its reflection (all of `ζ` for prices and
    /// truncation errors, the `α` coordinates for `Û_α`).
    #[serde(default)]
    pub antithetic: bool,
}

fn default_batch() -> u64 {
    1 << 14
}

impl MCConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        MCConfig {
            n_samples,
            seed,
            batch: default_batch(),
            antithetic: false,
        }
    }

    pub fn antithetic(self, on: bool) -> Self {
        MCConfig { antithetic: on, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::validation("Monte Carlo needs at least two samples"));
        }
        if self.batch == 0 {
            return Err(Error::validation("batch size must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_used: u64,
    /// Single-observation sample variance.
    pub sample_variance: f64,
}

/// Single-pass mean and variance (Welford), mergeable (Chan et al.).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn estimate(&self) -> MCEstimate {
        let var = self.variance();
        MCEstimate {
            mean: self.mean,
            stderr: (var / self.n.max(1) as f64).sqrt(),
            n_used: self.n,
            sample_variance: var,
        }
    }
}

/// `z_T = z* + √(2λT) ζ`.
pub fn sample_terminal_z(lambdas: &[f64], anchor: &[f64], horizon: f64, zeta: &[f64]) -> Result<Vec<f64>> {
    if lambdas.iter().any(|&l| l < 0.0) {
        return Err(Error::validation("diffusion coefficients must be non-negative"));
    }
    if anchor.len() != lambdas.len() || zeta.len() != lambdas.len() {
        return Err(Error::validation("dimension mismatch in terminal sampling"));
    }
    let mut z = vec![0.0; lambdas.len()];
    let scales: Vec<f64> = lambdas.iter().map(|l| (2.0 * l * horizon).sqrt()).collect();
    terminal_into(&scales, anchor, zeta, &mut z);
    Ok(z)
}

fn terminal_into(scales: &[f64], anchor: &[f64], zeta: &[f64], out: &mut [f64]) {
    for k in 0..out.len() {
        out[k] = anchor[k] + scales[k] * zeta[k];
    }
}

/// Everything needed to sample `g(z_T)`.
#[derive(Clone, Debug)]
pub struct PricingProblem {
    pub lambdas: Vec<f64>,
    pub anchor: Vec<f64>,
    pub horizon: f64,
    pub initial: InitialCondition,
}

impl PricingProblem {
    pub fn new(model: &ModelSpec, payoff: &PayoffSpec) -> Result<Self> {
        model.validate()?;
        let spec = spectrum(&build_covariance(model)?)?;
        Self::with_spectrum(model, &spec, payoff)
    }

    pub fn with_spectrum(model: &ModelSpec, spec: &Spectrum, payoff: &PayoffSpec) -> Result<Self> {
        let map = CoordinateMap::new(model, spec);
        Ok(PricingProblem {
            lambdas: spec.lambdas.clone(),
            anchor: map.anchor(&model.spot),
            horizon: model.horizon,
            initial: InitialCondition::new(payoff, &map)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    fn scales(&self, lambdas: &[f64]) -> Vec<f64> {
        lambdas.iter().map(|l| (2.0 * l.max(0.0) * self.horizon).sqrt()).collect()
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn batch_rng(seed: u64, stream: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(stream)));
    rng.set_stream(batch);
    rng
}

const STREAM_PRICE: u64 = 1;
const STREAM_TRUNCATION: u64 = 2;

fn alpha_stream(alpha: &IndexSet) -> u64 {
    alpha
        .iter()
        .fold(0x100u64, |h, k| splitmix(h ^ (k as u64 + 1)))
}

/// Sign patterns averaged per observation.
enum Reflection<'a> {
    Negate,
    Coordinates(&'a [usize]),
}

/// Streams `n_samples` observations of `f(ζ)`, reflected per `refl`.
fn simulate<F>(dim: usize, cfg: &MCConfig, stream: u64, refl: Reflection<'_>, exec: Execution, f: F) -> Result<MCEstimate>
where
    F: Fn(&[f64], &mut Vec<f64>) -> f64 + Sync,
{
    cfg.validate()?;
    let n_batches = cfg.n_samples.div_ceil(cfg.batch);
    let batches = exec.map_range(n_batches as usize, |b| {
        let b = b as u64;
        let len = cfg.batch.min(cfg.n_samples - b * cfg.batch);
        let mut rng = batch_rng(cfg.seed, stream, b);
        let mut zeta = vec![0.0; dim];
        let mut flipped = vec![0.0; dim];
        let mut scratch = Vec::with_capacity(dim);
        let mut stats = RunningStats::default();
        for _ in 0..len {
            for v in zeta.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let x = if !cfg.antithetic {
                f(&zeta, &mut scratch)
            } else {
                match refl {
                    Reflection::Negate => {
                        flipped.iter_mut().zip(&zeta).for_each(|(o, v)| *o = -v);
                        0.5 * (f(&zeta, &mut scratch) + f(&flipped, &mut scratch))
                    }
                    Reflection::Coordinates(coords) => {
                        let patterns = 1usize << coords.len();
                        let mut acc = 0.0;
                        for mask in 0..patterns {
                            flipped.copy_from_slice(&zeta);
                            for (bit, &k) in coords.iter().enumerate() {
                                if mask >> bit & 1 == 1 {
                                    flipped[k] = -flipped[k];
                                }
                            }
                            acc += f(&flipped, &mut scratch);
                        }
                        acc / patterns as f64
                    }
                }
            };
            stats.push(x);
        }
        stats
    });
    let mut total = RunningStats::default();
    for s in &batches {
        total.merge(s);
    }
    let est = total.estimate();
    if !est.mean.is_finite() || !est.stderr.is_finite() {
        return Err(Error::numerical("Monte Carlo estimate is not finite"));
    }
    Ok(est)
}

fn eval_at(problem: &PricingProblem, scales: &[f64], zeta: &[f64], z: &mut Vec<f64>) -> f64 {
    z.resize(zeta.len(), 0.0);
    terminal_into(scales, &problem.anchor, zeta, z);
    problem.initial.eval(z)
}

/// `E[g(z_T)]` at the full eigenvalue vector.
pub fn estimate_price(problem: &PricingProblem, cfg: &MCConfig, exec: Execution) -> Result<MCEstimate> {
    let scales = problem.scales(&problem.lambdas);
    simulate(problem.dim(), cfg, STREAM_PRICE, Reflection::Negate, exec, |zeta, z| {
        eval_at(problem, &scales, zeta, z)
    })
}

fn check_alpha(problem: &PricingProblem, retained: usize, alpha: &IndexSet) -> Result<()> {
    if alpha.bound() > problem.dim() {
        return Err(Error::validation("α has indices beyond the problem dimension"));
    }
    if alpha.iter().any(|k| k < retained) {
        return Err(Error::validation(format!(
            "α = {alpha} touches a retained direction (first {retained} are anchored at their full value)"
        )));
    }
    Ok(())
}

/// Per-subset diffusion scales: retained directions at full `λ`, tail
/// directions in `active` at full `λ`, the rest frozen.
fn masked_scales(problem: &PricingProblem, keep: impl Fn(usize) -> bool) -> Vec<f64> {
    let lambdas: Vec<f64> = problem
        .lambdas
        .iter()
        .enumerate()
        .map(|(k, &l)| if keep(k) { l } else { 0.0 })
        .collect();
    problem.scales(&lambdas)
}

fn beta_scales(problem: &PricingProblem, retained: usize, alpha: &IndexSet) -> Vec<(f64, Vec<f64>)> {
    let idx = alpha.indices();
    (0..1usize << idx.len())
        .map(|mask| {
            let missing = idx.len() - mask.count_ones() as usize;
            let sign = if missing.is_multiple_of(2) { 1.0 } else { -1.0 };
            let scales = masked_scales(problem, |k| {
                k < retained || idx.iter().position(|&i| i == k).is_some_and(|p| mask >> p & 1 == 1)
            });
            (sign, scales)
        })
        .collect()
}

/// One path of `Σ_{β≤α} (−1)^{|α−β|} g(z_T(λ⁰ + δλ·β; ζ))`, where `λ⁰`
/// keeps the first `retained` eigenvalues and zeroes the rest.
pub fn coupled_alpha_sample(problem: &PricingProblem, retained: usize, alpha: &IndexSet, zeta: &[f64]) -> Result<f64> {
    check_alpha(problem, retained, alpha)?;
    let mut z = Vec::new();
    Ok(beta_scales(problem, retained, alpha)
        .iter()
        .map(|(s, sc)| s * eval_at(problem, sc, zeta, &mut z))
        .sum())
}

/// `Û_α`: the `α`-th mixed difference of `u` in the tail eigenvalues, with
/// all `β ≤ α` evaluated on shared draws and an independent stream per `α`.
pub fn estimate_alpha_difference(
    problem: &PricingProblem,
    retained: usize,
    alpha: &IndexSet,
    cfg: &MCConfig,
    exec: Execution,
) -> Result<MCEstimate> {
    check_alpha(problem, retained, alpha)?;
    let terms = beta_scales(problem, retained, alpha);
    simulate(
        problem.dim(),
        cfg,
        alpha_stream(alpha),
        Reflection::Coordinates(alpha.indices()),
        exec,
        |zeta, z| terms.iter().map(|(s, sc)| s * eval_at(problem, sc, zeta, z)).sum(),
    )
}

fn plan_scales(problem: &PricingProblem, plan: &ExpansionPlan) -> Result<Vec<(f64, Vec<f64>)>> {
    if plan.dim() != problem.dim() {
        return Err(Error::validation(format!(
            "plan is for {} dimensions, problem has {}",
            plan.dim(),
            problem.dim()
        )));
    }
    Ok(plan
        .terms()
        .iter()
        .map(|t| (t.weight as f64, masked_scales(problem, |k| t.subset.contains(k))))
        .collect())
}

/// One path of `g(z_T(λ; ζ)) − Σ w g(z_T(λ·mask(ν); ζ))`.
pub fn truncation_error_sample(problem: &PricingProblem, plan: &ExpansionPlan, zeta: &[f64]) -> Result<f64> {
    let terms = plan_scales(problem, plan)?;
    let full = problem.scales(&problem.lambdas);
    let mut z = Vec::new();
    let approx: f64 = terms.iter().map(|(w, sc)| w * eval_at(problem, sc, zeta, &mut z)).sum();
    Ok(eval_at(problem, &full, zeta, &mut z) - approx)
}

/// `u − u^ξ` estimated on shared draws.
pub fn estimate_truncation_error(
    problem: &PricingProblem,
    plan: &ExpansionPlan,
    cfg: &MCConfig,
    exec: Execution,
) -> Result<MCEstimate> {
    let terms = plan_scales(problem, plan)?;
    let full = problem.scales(&problem.lambdas);
    simulate(problem.dim(), cfg, STREAM_TRUNCATION, Reflection::Negate, exec, |zeta, z| {
        let approx: f64 = terms.iter().map(|(w, sc)| w * eval_at(problem, sc, zeta, z)).sum();
        eval_at(problem, &full, zeta, z) - approx
    })
}
