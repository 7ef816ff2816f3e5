use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default half-width of the well-resolved region, in heat-kernel standard
/// deviations.
pub const DEFAULT_KAPPA: f64 = 5.0;

/// Arctan map `y = arctan(b z + c)/π + 1/2` sending ℝ onto (0, 1), with a
/// uniform mesh of `j_points` intervals in `y`.
///
/// `c = −b·anchor`, so the anchor maps to `y = 1/2`, which is the middle node
/// because `j_points` is even.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StretchedAxis {
    pub b: f64,
    pub c: f64,
    pub j_points: usize,
    pub anchor: f64,
}

impl StretchedAxis {
    pub fn new(b: f64, anchor: f64, j_points: usize) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::validation(format!("stretching scale b = {b} must be positive")));
        }
        if j_points < 2 || !j_points.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "interval count J = {j_points} must be even and at least 2"
            )));
        }
        Ok(StretchedAxis {
            b,
            c: -b * anchor,
            j_points,
            anchor,
        })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.j_points as f64
    }

    pub fn anchor_node(&self) -> usize {
        self.j_points / 2
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.j_points as f64
    }

    pub fn y_of_z(&self, z: f64) -> f64 {
        (self.b * z + self.c).atan() / PI + 0.5
    }

    pub fn z_of_y(&self, y: f64) -> f64 {
        ((PI * (y - 0.5)).tan() - self.c) / self.b
    }

    /// Pre-image of each node. The two boundary nodes map to ±∞; they get
    /// the finite pre-image of a point a quarter cell inside instead.
    pub fn node_preimages(&self) -> Vec<f64> {
        let j = self.j_points;
        let h = self.spacing();
        (0..=j)
            .map(|i| match i {
                0 => self.z_of_y(0.25 * h),
                i if i == j => self.z_of_y(1.0 - 0.25 * h),
                // exact anchor at the mid node
                i if i == j / 2 => self.anchor,
                i => self.z_of_y(self.node(i)),
            })
            .collect()
    }

    /// Factors `(a_yy, a_y)` with `∂²/∂z² = a_yy ∂²/∂y² + a_y ∂/∂y`:
    /// `a_yy = (dy/dz)²`, `a_y = d²y/dz²`.
    pub fn coefficients(&self, y: f64) -> Result<(f64, f64)> {
        if !(y > 0.0 && y < 1.0) {
            return Err(Error::validation(format!("y = {y} outside (0, 1)")));
        }
        Ok(self.coefficients_unchecked(y))
    }

    pub(crate) fn coefficients_unchecked(&self, y: f64) -> (f64, f64) {
        let (s, c) = (PI * (y - 0.5)).sin_cos();
        let dydz = self.b / PI * c * c;
        let d2ydz2 = -2.0 * self.b * self.b / PI * c * c * c * s;
        (dydz * dydz, d2ydz2)
    }

    pub fn dydz(&self, y: f64) -> f64 {
        let c = (PI * (y - 0.5)).cos();
        self.b / PI * c * c
    }
}

/// Axis resolving `±κ` heat-kernel standard deviations `√(2λT)` around the
/// anchor: `b = 1/(κ√(2λT))`.
pub fn choose_axis(lambda: f64, horizon: f64, anchor: f64, kappa: f64, j_points: usize) -> Result<StretchedAxis> {
    if !(lambda > 0.0) {
        return Err(Error::validation(format!("diffusion coefficient {lambda} must be positive")));
    }
    if !(horizon > 0.0) || !(kappa > 0.0) {
        return Err(Error::validation("horizon and kappa must be positive"));
    }
    StretchedAxis::new(1.0 / (kappa * (2.0 * lambda * horizon).sqrt()), anchor, j_points)
}
