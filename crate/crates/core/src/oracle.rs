//! Closed-form reference solutions.
//!
//! All prices are undiscounted expectations `E[h(S_T)]`, matching the heat
//! problem solved by the expansion; multiply by
//! [`ModelSpec::discount_factor`] for a present value.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::expansion::IndexSet;
use crate::model::{build_covariance, ModelSpec};
use crate::payoff::PayoffKind;

/// Standard normal cdf, `½ erfc(−x/√2)`, with the musl `erfc` (about one
/// ulp).
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `u^ν(z, t) = exp(−t Σ_{k∈ν} λ_k) Π_k cos z_k`.
pub fn cosine_solution(z: &[f64], t: f64, lambdas: &[f64], subset: &IndexSet) -> f64 {
    let decay: f64 = subset.iter().map(|k| lambdas[k]).sum();
    (-t * decay).exp() * z.iter().map(|v| v.cos()).product::<f64>()
}

/// `E[(e^X − K)⁺]` for `X ~ N(m, v)`.
pub fn lognormal_call(m: f64, v: f64, strike: f64) -> f64 {
    if strike <= 0.0 {
        return (m + 0.5 * v).exp() - strike;
    }
    if v <= 0.0 {
        return (m.exp() - strike).max(0.0);
    }
    let s = v.sqrt();
    let d1 = (m - strike.ln() + v) / s;
    let d2 = d1 - s;
    (m + 0.5 * v).exp() * norm_cdf(d1) - strike * norm_cdf(d2)
}

/// `P(X ≥ log K)` for `X ~ N(m, v)`.
pub fn lognormal_digital(m: f64, v: f64, strike: f64) -> f64 {
    if v <= 0.0 {
        return if m >= strike.ln() { 1.0 } else { 0.0 };
    }
    norm_cdf((m - strike.ln()) / v.sqrt())
}

/// Mean and variance of the terminal log-basket `Σ ωᵢ log S_{i,T}`.
pub fn log_basket_moments(model: &ModelSpec, weights: &[f64]) -> Result<(f64, f64)> {
    model.validate()?;
    if weights.len() != model.n_assets {
        return Err(Error::validation("weight vector length does not match the model"));
    }
    let mu = model.drift();
    let t = model.horizon;
    let mean: f64 = weights
        .iter()
        .zip(model.spot.iter().zip(&mu))
        .map(|(w, (s, m))| w * (s.ln() + m * t))
        .sum();
    let cov = build_covariance(model)?;
    let n = weights.len();
    let mut var = 0.0;
    for i in 0..n {
        for j in 0..n {
            var += weights[i] * cov[(i, j)] * weights[j];
        }
    }
    Ok((mean, (var * t).max(0.0)))
}

/// Geometric basket call `E[(Π S_{i,T}^{ωᵢ} − K)⁺]`.
pub fn geometric_call_price(model: &ModelSpec, weights: &[f64], strike: f64) -> Result<f64> {
    if !(strike > 0.0) {
        return Err(Error::validation("strike must be positive"));
    }
    let (m, v) = log_basket_moments(model, weights)?;
    Ok(lognormal_call(m, v, strike))
}

/// Digital geometric basket call `P(Π S_{i,T}^{ωᵢ} ≥ K)`.
pub fn digital_geometric_price(model: &ModelSpec, weights: &[f64], strike: f64) -> Result<f64> {
    if !(strike > 0.0) {
        return Err(Error::validation("strike must be positive"));
    }
    let (m, v) = log_basket_moments(model, weights)?;
    Ok(lognormal_digital(m, v, strike))
}

/// Sub-solution `u^ν(z*, t)` for a payoff depending on `z` only through
/// `aᵀz`: the log-basket is normal with mean `aᵀz*` and variance
/// `Σ_{k∈ν} 2λ_k t a_k²`.
pub fn geometric_subsolution(
    kind: PayoffKind,
    a: &[f64],
    anchor: &[f64],
    lambdas: &[f64],
    subset: &IndexSet,
    t: f64,
    strike: f64,
) -> Result<f64> {
    let m: f64 = a.iter().zip(anchor).map(|(x, y)| x * y).sum();
    let v: f64 = subset.iter().map(|k| 2.0 * lambdas[k] * t * a[k] * a[k]).sum();
    match kind {
        PayoffKind::GeometricBasketCall => Ok(lognormal_call(m, v, strike)),
        PayoffKind::DigitalGeometricCall => Ok(lognormal_digital(m, v, strike)),
        other => Err(Error::validation(format!("{other:?} is not a geometric payoff"))),
    }
}

/// Payoff families of the two-asset examples: `h = 1{s₁^μ₁ s₂^μ₂ ≥ K}` or
/// `h = (s₁^μ₁ s₂^μ₂ − K)⁺`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AppendixPayoff {
    Digital,
    Call,
}

/// `∂u/∂λ₂` for the two-asset heat problem `u_t = λ₁u_{z₁z₁} + λ₂u_{z₂z₂}`.
///
/// Case 1 (`μ = (1, 1)`): the data depend on `z₁` only.
/// Case 2 (`μ = (1, −1)`): the data depend on `z₂` only.
/// Case 3 (`μ = (2, 0)`): the data depend on `z₁ + z₂`.
pub fn appendix_lambda2_derivative(
    payoff: AppendixPayoff,
    case: u8,
    z: [f64; 2],
    t: f64,
    lambdas: [f64; 2],
    strike: f64,
) -> Result<f64> {
    if !(t > 0.0) || !(strike > 0.0) {
        return Err(Error::validation("need t > 0 and a positive strike"));
    }
    let [l1, l2] = lambdas;
    let lk = strike.ln();
    match (payoff, case) {
        (_, 1) => Ok(0.0),
        (AppendixPayoff::Digital, 2) => {
            positive(l2, "λ₂")?;
            let x = z[1] - lk;
            let s = (2.0 * l2 * t).sqrt();
            Ok(-x / (2.0 * (2.0 * t).sqrt() * l2.powf(1.5)) * norm_pdf(x / s))
        }
        (AppendixPayoff::Digital, 3) => {
            positive(l1 + l2, "λ₁ + λ₂")?;
            let x = z[0] + z[1] - lk;
            let l = l1 + l2;
            let s = (2.0 * l * t).sqrt();
            Ok(-x / (2.0 * (2.0 * t).sqrt() * l.powf(1.5)) * norm_pdf(x / s))
        }
        (AppendixPayoff::Call, 2) => {
            positive(l2, "λ₂")?;
            let s = (2.0 * l2 * t).sqrt();
            let d1 = (z[1] - lk + 2.0 * l2 * t) / s;
            Ok(t * (z[1] + l2 * t).exp() * (norm_cdf(d1) + norm_pdf(d1) / s))
        }
        (AppendixPayoff::Call, 3) => Err(Error::validation(
            "no closed form is provided for the call in case 3",
        )),
        (_, c) => Err(Error::validation(format!("unknown case {c}"))),
    }
}

fn positive(v: f64, name: &str) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must be positive")))
    }
}
