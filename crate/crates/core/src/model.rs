//! Multi-asset lognormal market and its principal-axis coordinates.
//!
//! Log-prices `x = log S` diffuse with covariance `Σ t` and drift
//! `μ = r_f − σ²/2`. Writing `½Σ = Q Λ Qᵀ` and `z = Qᵀ(x + μt)` turns the
//! pricing problem into the heat equation `∂u/∂t = Σ λ_k ∂²u/∂z_k²`, so the
//! diffusion coefficients `λ_k` are the eigenvalues of `½Σ`. Tables of
//! correlation sweeps are usually quoted in eigenvalues of `Σ` itself; those
//! are `2λ_k` and are exposed separately by
//! [`Spectrum::covariance_eigenvalues`] and [`equicorrelation_spectrum`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Correlation structure: a single equicorrelation level or a full matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Correlation {
    Equi(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_assets: usize,
    pub sigma: Vec<f64>,
    pub correlation: Correlation,
    #[serde(default)]
    pub risk_free: f64,
    pub horizon: f64,
    pub spot: Vec<f64>,
}

impl ModelSpec {
    /// Identical volatilities, equicorrelation `gamma`, flat spot.
    pub fn equicorrelated(n: usize, sigma: f64, gamma: f64, spot: f64, horizon: f64) -> Self {
        ModelSpec {
            n_assets: n,
            sigma: vec![sigma; n],
            correlation: Correlation::Equi(gamma),
            risk_free: 0.0,
            horizon,
            spot: vec![spot; n],
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        ModelSpec {
            correlation: Correlation::Equi(gamma),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_assets;
        if n == 0 {
            return Err(Error::validation("n_assets must be positive"));
        }
        if self.sigma.len() != n || self.spot.len() != n {
            return Err(Error::validation(format!(
                "expected {n} volatilities and spots, got {} and {}",
                self.sigma.len(),
                self.spot.len()
            )));
        }
        if self.sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::validation("volatilities must be positive"));
        }
        if self.spot.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::validation("spot prices must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::validation("horizon must be positive"));
        }
        if !self.risk_free.is_finite() {
            return Err(Error::validation("risk-free rate must be finite"));
        }
        Ok(())
    }

    /// The correlation matrix, checked for symmetry, unit diagonal and PSD.
    pub fn correlation_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.n_assets;
        let rho = match &self.correlation {
            Correlation::Equi(g) => {
                if !(*g > -1.0 && *g < 1.0) {
                    return Err(Error::validation(format!(
                        "equicorrelation {g} outside (-1, 1)"
                    )));
                }
                DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { *g })
            }
            Correlation::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::validation(format!(
                        "correlation matrix must be {n}x{n}"
                    )));
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
        };
        for i in 0..n {
            if (rho[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::validation("correlation diagonal must be 1"));
            }
            for j in 0..i {
                if (rho[(i, j)] - rho[(j, i)]).abs() > 1e-12 {
                    return Err(Error::validation("correlation matrix is not symmetric"));
                }
            }
        }
        let min_eig = SymmetricEigen::new(rho.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-12 {
            return Err(Error::validation(format!(
                "correlation matrix is not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(rho)
    }

    /// Per-asset log drift `r_f − σᵢ²/2`.
    pub fn drift(&self) -> Vec<f64> {
        self.sigma
            .iter()
            .map(|s| self.risk_free - 0.5 * s * s)
            .collect()
    }

    pub fn discount_factor(&self) -> f64 {
        (-self.risk_free * self.horizon).exp()
    }
}

/// `Σᵢⱼ = σᵢσⱼρᵢⱼ`.
pub fn build_covariance(spec: &ModelSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let rho = spec.correlation_matrix()?;
    let s = &spec.sigma;
    Ok(DMatrix::from_fn(spec.n_assets, spec.n_assets, |i, j| {
        s[i] * s[j] * rho[(i, j)]
    }))
}

/// Eigenpairs of `½Σ`, sorted by decreasing eigenvalue.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Columns are the orthonormal eigenvectors.
    pub q: DMatrix<f64>,
    /// Heat-equation diffusion coefficients, descending and non-negative.
    pub lambdas: Vec<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Eigenvalues of `Σ` (twice the diffusion coefficients).
    pub fn covariance_eigenvalues(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| 2.0 * l).collect()
    }

    /// Reassembles `Q diag(λ) Qᵀ`, i.e. `½Σ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.lambdas));
        &self.q * d * self.q.transpose()
    }
}

const NEG_EIGEN_CLAMP: f64 = 1e-12;

/// Eigen-decomposes `½Σ`.
///
/// Eigenvalue clusters (ties) get a canonical basis: the standard basis
/// vectors are projected onto the cluster's eigenspace and orthonormalised in
/// order. For an equicorrelation matrix this makes the tail basis independent
/// of the correlation level. Each eigenvector's largest-magnitude entry is
/// made positive.
pub fn spectrum(covariance: &DMatrix<f64>) -> Result<Spectrum> {
    let n = covariance.nrows();
    if n == 0 || covariance.ncols() != n {
        return Err(Error::validation("covariance must be a non-empty square matrix"));
    }
    let scale = covariance.amax().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::validation("covariance matrix is not symmetric"));
            }
        }
    }
    let half = covariance * 0.5;
    let eig = SymmetricEigen::new(half);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut lambdas = Vec::with_capacity(n);
    for &k in &order {
        let l = eig.eigenvalues[k];
        if l < -NEG_EIGEN_CLAMP {
            return Err(Error::validation(format!(
                "covariance is not positive semidefinite (eigenvalue {l:e})"
            )));
        }
        lambdas.push(l.max(0.0));
    }
    let mut q = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);

    let tie_tol = 1e-10 * lambdas[0].abs().max(1e-300);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (lambdas[start] - lambdas[end]).abs() <= tie_tol {
            end += 1;
        }
        if end - start > 1 {
            canonicalise_cluster(&mut q, start, end);
            // exact ties after canonicalisation
            let mean = lambdas[start..end].iter().sum::<f64>() / (end - start) as f64;
            lambdas[start..end].iter_mut().for_each(|l| *l = mean);
        }
        start = end;
    }

    for j in 0..n {
        let mut col = q.column_mut(j);
        let mut best = 0;
        for i in 1..n {
            if col[i].abs() > col[best].abs() + 1e-14 {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(Spectrum { q, lambdas })
}

fn canonicalise_cluster(q: &mut DMatrix<f64>, start: usize, end: usize) {
    let n = q.nrows();
    let basis = q.columns(start, end - start).into_owned();
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(end - start);
    for i in 0..n {
        if chosen.len() == end - start {
            break;
        }
        // projection of e_i onto span(basis)
        let coeffs = basis.row(i).transpose();
        let mut v = &basis * coeffs;
        for c in &chosen {
            let d = c.dot(&v);
            v -= c * d;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            chosen.push(v / norm);
        }
    }
    debug_assert_eq!(chosen.len(), end - start);
    for (k, v) in chosen.into_iter().enumerate() {
        q.set_column(start + k, &v);
    }
}

/// Closed-form eigenvalues of the equicorrelation covariance
/// `σ²(γE + (1−γ)I)`: `(σ²((N−1)γ+1), σ²(1−γ))`.
///
/// These are eigenvalues of `Σ`, matching the values quoted in correlation
/// sweep tables; the diffusion coefficients are half of them.
pub fn equicorrelation_spectrum(sigma: f64, gamma: f64, n: usize) -> Result<(f64, f64)> {
    if !(gamma > -1.0 && gamma < 1.0) {
        return Err(Error::validation(format!("equicorrelation {gamma} outside (-1, 1)")));
    }
    if n == 0 {
        return Err(Error::validation("dimension must be positive"));
    }
    let s2 = sigma * sigma;
    Ok((s2 * ((n as f64 - 1.0) * gamma + 1.0), s2 * (1.0 - gamma)))
}

/// Map between log-price coordinates `x` and principal coordinates `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateMap {
    pub q: DMatrix<f64>,
    pub mu: Vec<f64>,
    pub horizon: f64,
}

impl CoordinateMap {
    pub fn new(spec: &ModelSpec, spectrum: &Spectrum) -> Self {
        CoordinateMap {
            q: spectrum.q.clone(),
            mu: spec.drift(),
            horizon: spec.horizon,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `z = Qᵀ(x + μt)`.
    pub fn to_principal(&self, x: &[f64], t: f64) -> Vec<f64> {
        let shifted = DVector::from_iterator(
            x.len(),
            x.iter().zip(&self.mu).map(|(xi, mi)| xi + mi * t),
        );
        (self.q.transpose() * shifted).iter().cloned().collect()
    }

    /// `x = Qz − μt`.
    pub fn from_principal(&self, z: &[f64], t: f64) -> Vec<f64> {
        let qz = &self.q * DVector::from_column_slice(z);
        qz.iter().zip(&self.mu).map(|(v, m)| v - m * t).collect()
    }

    /// The pricing point `z* = Qᵀ(log S₀ + μT)`.
    pub fn anchor(&self, spot: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = spot.iter().map(|s| s.ln()).collect();
        self.to_principal(&x, self.horizon)
    }
}
