use crate::error::{Error, Result};

/// Tridiagonal matrix in band storage. `lower[i]` multiplies `x[i]` in row
/// `i + 1`; `upper[i]` multiplies `x[i + 1]` in row `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::validation(format!(
                "inconsistent tridiagonal bands: {} / {} / {}",
                lower.len(),
                n,
                upper.len()
            )));
        }
        Ok(Tridiagonal { lower, diag, upper })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// LU factorisation without pivoting (Thomas algorithm).
    pub fn factor(&self) -> Result<TridiagonalLu> {
        let n = self.len();
        let mut pivot = Vec::with_capacity(n);
        let mut mult = Vec::with_capacity(n.saturating_sub(1));
        let mut p = self.diag[0];
        check_pivot(p, 0, self.diag[0])?;
        pivot.push(p);
        for i in 1..n {
            let l = self.lower[i - 1] / p;
            p = self.diag[i] - l * self.upper[i - 1];
            check_pivot(p, i, self.diag[i].abs() + (l * self.upper[i - 1]).abs())?;
            mult.push(l);
            pivot.push(p);
        }
        Ok(TridiagonalLu {
            mult,
            inv_pivot: pivot.iter().map(|p| 1.0 / p).collect(),
            upper: self.upper.clone(),
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

fn check_pivot(p: f64, row: usize, scale: f64) -> Result<()> {
    if !p.is_finite() || p.abs() <= f64::EPSILON * scale.abs().max(f64::MIN_POSITIVE) || p == 0.0 {
        return Err(Error::numerical(format!("zero pivot in tridiagonal row {row}")));
    }
    Ok(())
}

/// Reusable factorisation of a [`Tridiagonal`].
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalLu {
    mult: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagonalLu {
    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        for i in 1..n {
            x[i] -= self.mult[i - 1] * x[i - 1];
        }
        x[n - 1] *= self.inv_pivot[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.upper[i] * x[i + 1]) * self.inv_pivot[i];
        }
    }

    /// Solves every system stored column-wise in a row-major `n × width`
    /// block: entry `(i, col)` of the right-hand side lives at
    /// `block[i * width + col]`. All columns share this matrix.
    pub fn solve_rows_in_place(&self, block: &mut [f64], width: usize) {
        let n = self.len();
        debug_assert_eq!(block.len(), n * width);
        for i in 1..n {
            let l = self.mult[i - 1];
            let (prev, cur) = block[(i - 1) * width..(i + 1) * width].split_at_mut(width);
            cur.iter_mut().zip(prev.iter()).for_each(|(c, p)| *c -= l * p);
        }
        let ip = self.inv_pivot[n - 1];
        block[(n - 1) * width..].iter_mut().for_each(|c| *c *= ip);
        for i in (0..n - 1).rev() {
            let (u, ip) = (self.upper[i], self.inv_pivot[i]);
            let (cur, next) = block[i * width..(i + 2) * width].split_at_mut(width);
            cur.iter_mut()
                .zip(next.iter())
                .for_each(|(c, x)| *c = (*c - u * x) * ip);
        }
    }
}

/// Solves a tridiagonal system with the Thomas algorithm.
pub fn thomas_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != diag.len() {
        return Err(Error::validation("right-hand side length does not match the matrix"));
    }
    let lu = Tridiagonal::new(lower.to_vec(), diag.to_vec(), upper.to_vec())?.factor()?;
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    #[test]
    fn known_solution() {
        let x = thomas_solve(&[1.0, 1.0], &[2.0, 2.0, 2.0], &[1.0, 1.0], &[3.0, 4.0, 3.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_returns_rhs() {
        let rhs = [0.3, -1.0, 7.5, 2.0];
        let x = thomas_solve(&[0.0; 3], &[1.0; 4], &[0.0; 3], &rhs).unwrap();
        assert_eq!(x, rhs);
    }

    #[test]
    fn zero_pivot_is_an_error() {
        assert!(matches!(
            thomas_solve(&[1.0], &[0.0, 1.0], &[1.0], &[1.0, 1.0]),
            Err(Error::Numerical(_))
        ));
        // singular after elimination: [[1,1],[1,1]]
        assert!(thomas_solve(&[1.0], &[1.0, 1.0], &[1.0], &[1.0, 1.0]).is_err());
        assert!(thomas_solve(&[1.0], &[1.0, 1.0], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn matches_dense_solver() {
        let n = 50;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let lower: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|_| 2.5 + rng.random_range(0.0..1.0)).collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let dense = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i == j + 1 {
                lower[j]
            } else if j == i + 1 {
                upper[i]
            } else {
                0.0
            }
        });
        let want = dense.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        let got = thomas_solve(&lower, &diag, &upper, &rhs).unwrap();
        let err = got.iter().zip(want.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "max diff {err}");
    }

    #[test]
    fn blocked_solve_matches_single() {
        let m = Tridiagonal::new(vec![-1.0; 5], vec![3.0; 6], vec![-0.5; 5]).unwrap();
        let lu = m.factor().unwrap();
        let width = 3;
        let mut block: Vec<f64> = (0..18).map(|k| (k as f64 * 0.37).sin()).collect();
        let mut cols: Vec<Vec<f64>> = (0..width)
            .map(|c| (0..6).map(|i| block[i * width + c]).collect())
            .collect();
        lu.solve_rows_in_place(&mut block, width);
        for (c, col) in cols.iter_mut().enumerate() {
            lu.solve_in_place(col);
            for i in 0..6 {
                assert!((col[i] - block[i * width + c]).abs() < 1e-15);
            }
            for (i, b) in m.mul_vec(col).iter().enumerate() {
                assert!((b - (((i * width + c) as f64) * 0.37).sin()).abs() < 1e-13);
            }
        }
    }
}
