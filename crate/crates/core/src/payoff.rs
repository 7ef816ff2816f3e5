//! Payoffs in asset space and their pullback `g(z) = h(exp(Qz))` to
//! principal coordinates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CoordinateMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    ArithmeticBasketCall,
    GeometricBasketCall,
    DigitalGeometricCall,
    /// `Π cos z_k`, defined directly in principal coordinates.
    CosineProduct,
    /// Supplied as a closure through [`InitialCondition::custom`].
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default)]
    pub strike: f64,
}

impl PayoffSpec {
    pub fn arithmetic(weights: Vec<f64>, strike: f64) -> Self {
        PayoffSpec {
            kind: PayoffKind::ArithmeticBasketCall,
            weights,
            strike,
        }
    }

    pub fn geometric(weights: Vec<f64>, strike: f64) -> Self {
        PayoffSpec {
            kind: PayoffKind::GeometricBasketCall,
            weights,
            strike,
        }
    }

    pub fn digital(weights: Vec<f64>, strike: f64) -> Self {
        PayoffSpec {
            kind: PayoffKind::DigitalGeometricCall,
            weights,
            strike,
        }
    }

    pub fn cosine() -> Self {
        PayoffSpec {
            kind: PayoffKind::CosineProduct,
            weights: Vec::new(),
            strike: 0.0,
        }
    }

    pub fn with_strike(&self, strike: f64) -> Self {
        PayoffSpec {
            strike,
            ..self.clone()
        }
    }

    pub fn is_basket(&self) -> bool {
        matches!(
            self.kind,
            PayoffKind::ArithmeticBasketCall | PayoffKind::GeometricBasketCall | PayoffKind::DigitalGeometricCall
        )
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.is_basket() {
            if self.weights.len() != n {
                return Err(Error::validation(format!(
                    "payoff has {} weights for {n} assets",
                    self.weights.len()
                )));
            }
            if self.weights.iter().any(|w| !w.is_finite()) || !self.strike.is_finite() {
                return Err(Error::validation("payoff weights and strike must be finite"));
            }
        }
        if self.kind == PayoffKind::DigitalGeometricCall && !(self.strike > 0.0) {
            return Err(Error::validation("digital strike must be positive"));
        }
        Ok(())
    }
}

/// `h(s)`. For [`PayoffKind::CosineProduct`] the argument is read as `z`.
pub fn payoff_value(p: &PayoffSpec, s: &[f64]) -> Result<f64> {
    p.validate(s.len())?;
    match p.kind {
        PayoffKind::ArithmeticBasketCall => {
            let basket: f64 = p.weights.iter().zip(s).map(|(w, x)| w * x).sum();
            Ok((basket - p.strike).max(0.0))
        }
        PayoffKind::GeometricBasketCall | PayoffKind::DigitalGeometricCall => {
            if let Some(bad) = s.iter().find(|&&x| !(x > 0.0)) {
                return Err(Error::validation(format!("non-positive asset price {bad}")));
            }
            let log_basket: f64 = p.weights.iter().zip(s).map(|(w, x)| w * x.ln()).sum();
            Ok(geometric_value(p.kind, log_basket, p.strike))
        }
        PayoffKind::CosineProduct => Ok(s.iter().map(|z| z.cos()).product()),
        PayoffKind::Custom => Err(Error::validation(
            "custom payoffs have no closed form; build an InitialCondition from a closure",
        )),
    }
}

fn geometric_value(kind: PayoffKind, log_basket: f64, strike: f64) -> f64 {
    if kind == PayoffKind::DigitalGeometricCall {
        if log_basket >= strike.ln() {
            1.0
        } else {
            0.0
        }
    } else {
        (log_basket.exp() - strike).max(0.0)
    }
}

/// Size of the claim, used to scale the boundary cutoff of unbounded
/// payoffs.
pub fn notional(p: &PayoffSpec, spot: &[f64]) -> f64 {
    match p.kind {
        PayoffKind::ArithmeticBasketCall => {
            let basket: f64 = p.weights.iter().zip(spot).map(|(w, s)| w.abs() * s).sum();
            basket.max(p.strike.abs())
        }
        PayoffKind::GeometricBasketCall => {
            let lb: f64 = p.weights.iter().zip(spot).map(|(w, s)| w * s.ln()).sum();
            lb.exp().max(p.strike.abs())
        }
        _ => 1.0,
    }
}

/// Boundary clamp `C = 10 · notional` for unbounded payoffs.
pub fn boundary_cutoff(p: &PayoffSpec, spot: &[f64]) -> Option<f64> {
    match p.kind {
        PayoffKind::ArithmeticBasketCall | PayoffKind::GeometricBasketCall => Some(10.0 * notional(p, spot)),
        _ => None,
    }
}

type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kernel {
    Cosine,
    Arithmetic {
        /// `Q` row-major.
        q: Vec<f64>,
        weights: Vec<f64>,
        strike: f64,
    },
    /// Payoff depends on `z` only through `aᵀz` with `a = Qᵀω`.
    Geometric { kind: PayoffKind, a: Vec<f64>, strike: f64 },
    Custom(CustomFn),
}

/// `g(z)` for a payoff and coordinate map.
#[derive(Clone)]
pub struct InitialCondition {
    dim: usize,
    kernel: Kernel,
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &self.kernel {
            Kernel::Cosine => "cosine",
            Kernel::Arithmetic { .. } => "arithmetic",
            Kernel::Geometric { .. } => "geometric",
            Kernel::Custom(_) => "custom",
        };
        f.debug_struct("InitialCondition")
            .field("dim", &self.dim)
            .field("kernel", &name)
            .finish()
    }
}

impl InitialCondition {
    pub fn new(p: &PayoffSpec, map: &CoordinateMap) -> Result<Self> {
        let n = map.dim();
        p.validate(n)?;
        let kernel = match p.kind {
            PayoffKind::CosineProduct => Kernel::Cosine,
            PayoffKind::ArithmeticBasketCall => Kernel::Arithmetic {
                q: (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| map.q[(i, j)])
                    .collect(),
                weights: p.weights.clone(),
                strike: p.strike,
            },
            PayoffKind::GeometricBasketCall | PayoffKind::DigitalGeometricCall => Kernel::Geometric {
                kind: p.kind,
                a: direction(map, &p.weights),
                strike: p.strike,
            },
            PayoffKind::Custom => {
                return Err(Error::validation(
                    "custom payoffs need a closure; use InitialCondition::custom",
                ))
            }
        };
        Ok(InitialCondition { dim: n, kernel })
    }

    pub fn custom<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        InitialCondition {
            dim,
            kernel: Kernel::Custom(Arc::new(f)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim);
        match &self.kernel {
            Kernel::Cosine => z.iter().map(|v| v.cos()).product(),
            Kernel::Arithmetic { q, weights, strike } => {
                let n = self.dim;
                let mut basket = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    let row = &q[i * n..(i + 1) * n];
                    let x: f64 = row.iter().zip(z).map(|(a, b)| a * b).sum();
                    basket += w * x.exp();
                }
                (basket - strike).max(0.0)
            }
            Kernel::Geometric { kind, a, strike } => {
                let lb: f64 = a.iter().zip(z).map(|(a, b)| a * b).sum();
                geometric_value(*kind, lb, *strike)
            }
            Kernel::Custom(f) => f(z),
        }
    }

    /// Loading `a = Qᵀω` of a geometric payoff, if this is one.
    pub fn geometric_direction(&self) -> Option<&[f64]> {
        match &self.kernel {
            Kernel::Geometric { a, .. } => Some(a),
            _ => None,
        }
    }
}

/// `Qᵀω`: the log-basket as a linear functional of `z`.
pub fn direction(map: &CoordinateMap, weights: &[f64]) -> Vec<f64> {
    let n = map.dim();
    (0..n)
        .map(|k| (0..n).map(|i| map.q[(i, k)] * weights[i]).sum())
        .collect()
}

pub const ARITH_OMEGA1: [f64; 10] = [0.1; 10];
pub const ARITH_OMEGA2: [f64; 10] = [
    4.0 / 30.0,
    4.0 / 30.0,
    4.0 / 30.0,
    4.0 / 30.0,
    4.0 / 30.0,
    2.0 / 30.0,
    2.0 / 30.0,
    2.0 / 30.0,
    2.0 / 30.0,
    2.0 / 30.0,
];
pub const ARITH_OMEGA3: [f64; 10] = [0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, -0.25, -0.25, -0.25];
pub const SECOND_ORDER_OMEGA1: [f64; 5] = [1.0, -1.0, 1.0, -1.0, 1.0];
pub const SECOND_ORDER_OMEGA2: [f64; 5] = [1.5, 1.5, -0.5, -0.5, -1.0];
/// Tail eigenvectors of the ten-asset equicorrelation covariance, as
/// printed to four decimals.
pub const KINK_OMEGA1: [f64; 10] = [
    -0.1160, 0.0929, -0.6527, -0.1121, 0.6986, 0.2091, -0.0438, -0.0758, 0.0000, 0.000,
];
pub const KINK_OMEGA2: [f64; 10] = [
    0.1130, -0.0607, -0.1708, -0.2057, 0.8971, -0.2467, -0.1831, -0.1085, -0.0345, -0.0001,
];

pub const PRESET_NAMES: &[&str] = &[
    "arith-omega1",
    "arith-omega2",
    "arith-omega3",
    "arith5-omega1",
    "arith5-omega2",
    "geo-kink-omega1",
    "geo-kink-omega2",
    "geo-aligned",
    "digital-kink-omega1",
    "cosine",
];

/// Named payoffs. Strikes follow the experiments they come from; override
/// with [`PayoffSpec::with_strike`].
pub fn preset(name: &str) -> Result<PayoffSpec> {
    let p = match name {
        "arith-omega1" => PayoffSpec::arithmetic(ARITH_OMEGA1.to_vec(), 100.0),
        "arith-omega2" => PayoffSpec::arithmetic(ARITH_OMEGA2.to_vec(), 100.0),
        "arith-omega3" => PayoffSpec::arithmetic(ARITH_OMEGA3.to_vec(), 100.0),
        "arith5-omega1" => PayoffSpec::arithmetic(SECOND_ORDER_OMEGA1.to_vec(), 100.0),
        "arith5-omega2" => PayoffSpec::arithmetic(SECOND_ORDER_OMEGA2.to_vec(), 100.0),
        "geo-kink-omega1" => PayoffSpec::geometric(KINK_OMEGA1.to_vec(), 1.0),
        "geo-kink-omega2" => PayoffSpec::geometric(KINK_OMEGA2.to_vec(), 1.0),
        // leading eigenvector of any equicorrelation matrix
        "geo-aligned" => PayoffSpec::geometric(vec![1.0 / 10f64.sqrt(); 10], 1.0),
        "digital-kink-omega1" => PayoffSpec::digital(KINK_OMEGA1.to_vec(), 1.0),
        "cosine" => PayoffSpec::cosine(),
        other => {
            return Err(Error::Config(format!(
                "unknown payoff preset '{other}' (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}
