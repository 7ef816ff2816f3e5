//! Low-dimensional heat-equation solves on arctan-stretched grids.
//!
//! Each sub-problem `∂u/∂t = Σ_{k∈ν} λ_k ∂²u/∂z_k²` is solved for `|ν| ≤ 3`
//! on a uniform mesh in the stretched coordinates `y_k ∈ [0, 1]`:
//! Crank–Nicolson in 1D, Peaceman–Rachford ADI in 2D and Brian's ADI in 3D.
//! Every implicit stage is a set of tridiagonal solves sharing one matrix per
//! direction, factorised once per solve.
//!
//! The transformed operator degenerates at `y ∈ {0, 1}`, so no boundary
//! conditions are imposed: boundary rows of the operator are zero and
//! boundary values keep their initial data. For unbounded payoffs those
//! boundary values are clamped to `[−C, C]`.

mod stretch;
mod tridiag;

pub use stretch::{choose_axis, StretchedAxis, DEFAULT_KAPPA};
pub use tridiag::{thomas_solve, Tridiagonal, TridiagonalLu};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::expansion::IndexSet;

/// Discrete `λ ∂²/∂z²` along one stretched axis: row `i` reads
/// `lo[i]·u[i−1] + mid[i]·u[i] + hi[i]·u[i+1]`; boundary rows are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisOperator {
    lo: Vec<f64>,
    mid: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisOperator {
    pub fn new(axis: &StretchedAxis, lambda: f64) -> Self {
        let j = axis.j_points;
        let h = axis.spacing();
        let mut lo = vec![0.0; j + 1];
        let mut mid = vec![0.0; j + 1];
        let mut hi = vec![0.0; j + 1];
        for i in 1..j {
            let (ayy, ay) = axis.coefficients_unchecked(axis.node(i));
            let diff = ayy / (h * h);
            let conv = ay / (2.0 * h);
            lo[i] = lambda * (diff - conv);
            hi[i] = lambda * (diff + conv);
            mid[i] = -(lo[i] + hi[i]);
        }
        AxisOperator { lo, mid, hi }
    }

    pub fn len(&self) -> usize {
        self.mid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mid.is_empty()
    }

    /// `I − θA`.
    pub fn implicit(&self, theta: f64) -> Tridiagonal {
        let n = self.len();
        Tridiagonal {
            lower: (1..n).map(|i| -theta * self.lo[i]).collect(),
            diag: self.mid.iter().map(|m| 1.0 - theta * m).collect(),
            upper: (0..n - 1).map(|i| -theta * self.hi[i]).collect(),
        }
    }

    /// `dst[i] += scale · (A src)[i]` over a row-major block whose rows are
    /// the nodes of this axis and whose columns (of length `width`) are
    /// independent lines.
    fn add_product_rows(&self, scale: f64, src: &[f64], dst: &mut [f64], width: usize) {
        let n = self.len();
        for i in 1..n - 1 {
            let (a, b, c) = (scale * self.lo[i], scale * self.mid[i], scale * self.hi[i]);
            let prev = &src[(i - 1) * width..i * width];
            let cur = &src[i * width..(i + 1) * width];
            let next = &src[(i + 1) * width..(i + 2) * width];
            let out = &mut dst[i * width..(i + 1) * width];
            for col in 0..width {
                out[col] += a * prev[col] + b * cur[col] + c * next[col];
            }
        }
    }
}

/// Values on the tensor grid, row-major with the last axis contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    shape: Vec<usize>,
    data: Vec<f64>,
}

const MIN_TASK_LEN: usize = 4096;

impl Grid {
    pub fn zeros(shape: &[usize]) -> Self {
        Grid {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    /// Chunk length used for parallel sweeps along `axis`: a whole number of
    /// blocks, each block holding every line along `axis` for one outer index.
    fn task_len(&self, axis: usize) -> (usize, usize) {
        let stride = self.stride(axis);
        let block = self.shape[axis] * stride;
        let group = (MIN_TASK_LEN / block).max(1);
        (block, block * group)
    }
}

/// `dst += scale · A_axis src`.
fn add_axis_product(exec: Execution, op: &AxisOperator, axis: usize, scale: f64, src: &Grid, dst: &mut Grid) {
    let stride = src.stride(axis);
    let (block, task) = src.task_len(axis);
    exec.for_each_zip_chunk_mut(&src.data, &mut dst.data, task, |s, d| {
        for (sb, db) in s.chunks(block).zip(d.chunks_mut(block)) {
            op.add_product_rows(scale, sb, db, stride);
        }
    });
}

fn solve_axis(exec: Execution, lu: &TridiagonalLu, axis: usize, grid: &mut Grid) {
    let stride = grid.stride(axis);
    let (block, task) = grid.task_len(axis);
    exec.for_each_chunk_mut(&mut grid.data, task, |_, chunk| {
        for b in chunk.chunks_mut(block) {
            lu.solve_rows_in_place(b, stride);
        }
    });
}

/// Mesh and time-step counts shared by all sub-problems of an expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResolution {
    /// Intervals per direction (even).
    pub j_points: usize,
    /// Time steps.
    pub m_steps: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

impl GridResolution {
    pub fn new(j_points: usize, m_steps: usize) -> Self {
        GridResolution {
            j_points,
            m_steps,
            kappa: DEFAULT_KAPPA,
        }
    }
}

impl Default for GridResolution {
    /// Desk-scale defaults.
    fn default() -> Self {
        GridResolution::new(200, 12)
    }
}

/// One sub-problem `u^ν`, evaluated at the anchor.
///
/// `initial` is the full `N`-dimensional initial condition; it is sampled on
/// the `ν`-plane through `anchor`, i.e. coordinates outside `ν` are frozen at
/// their anchor values.
pub struct SubProblem<'a> {
    pub subset: IndexSet,
    pub lambdas: Vec<f64>,
    pub axes: Vec<StretchedAxis>,
    pub anchor: Vec<f64>,
    pub horizon: f64,
    pub m_steps: usize,
    pub initial: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    /// Clamp applied to boundary-node data.
    pub cutoff: Option<f64>,
}

impl<'a> SubProblem<'a> {
    /// Builds the sub-problem for `subset` with axes chosen by
    /// [`choose_axis`]. Directions with zero diffusion are dropped; `None`
    /// means nothing diffuses and `u^ν(anchor) = g(anchor)`.
    pub fn new(
        subset: &IndexSet,
        lambdas: &[f64],
        anchor: &[f64],
        horizon: f64,
        res: &GridResolution,
        initial: &'a (dyn Fn(&[f64]) -> f64 + Sync),
        cutoff: Option<f64>,
    ) -> Result<Option<Self>> {
        let scale = lambdas.iter().cloned().fold(0.0, f64::max);
        let active: Vec<usize> = subset
            .iter()
            .filter(|&k| lambdas[k] > 1e-14 * scale)
            .collect();
        if active.is_empty() {
            return Ok(None);
        }
        let axes = active
            .iter()
            .map(|&k| choose_axis(lambdas[k], horizon, anchor[k], res.kappa, res.j_points))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(SubProblem {
            lambdas: active.iter().map(|&k| lambdas[k]).collect(),
            subset: IndexSet::new(active)?,
            axes,
            anchor: anchor.to_vec(),
            horizon,
            m_steps: res.m_steps,
            initial,
            cutoff,
        }))
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    fn validate(&self) -> Result<()> {
        let d = self.subset.len();
        if d > 3 {
            return Err(Error::UnsupportedDimension(d));
        }
        if d == 0 || self.lambdas.len() != d || self.axes.len() != d {
            return Err(Error::validation(
                "sub-problem needs one diffusion coefficient and axis per direction",
            ));
        }
        if self.subset.bound() > self.anchor.len() {
            return Err(Error::validation("anchor is shorter than the index set"));
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::validation("diffusion coefficients must be positive"));
        }
        if self.m_steps == 0 || !(self.horizon > 0.0) {
            return Err(Error::validation("need at least one time step and a positive horizon"));
        }
        Ok(())
    }
}

/// Solution grid of a sub-problem at the horizon.
#[derive(Clone, Debug)]
pub struct SolvedGrid {
    pub grid: Grid,
    pub axes: Vec<StretchedAxis>,
    pub initial_min: f64,
    pub initial_max: f64,
}

impl SolvedGrid {
    pub fn anchor_value(&self) -> f64 {
        let idx: Vec<usize> = self.axes.iter().map(|a| a.anchor_node()).collect();
        self.grid.get(&idx)
    }
}

/// `u^ν(anchor, T)`.
pub fn solve_subproblem(p: &SubProblem<'_>, exec: Execution) -> Result<f64> {
    solve_grid(p, exec).map(|s| s.anchor_value())
}

/// Full solution grid at the horizon.
pub fn solve_grid(p: &SubProblem<'_>, exec: Execution) -> Result<SolvedGrid> {
    p.validate()?;
    let d = p.dim();
    let mut u = initial_grid(p, exec)?;
    let (initial_min, initial_max) = u
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    let dt = p.horizon / p.m_steps as f64;
    let theta = 0.5 * dt;
    let ops: Vec<AxisOperator> = p
        .axes
        .iter()
        .zip(&p.lambdas)
        .map(|(ax, &l)| AxisOperator::new(ax, l))
        .collect();
    let lus = ops
        .iter()
        .map(|op| op.implicit(theta).factor())
        .collect::<Result<Vec<_>>>()?;

    let mut s1 = u.clone();
    let mut s2 = u.clone();
    let mut s3 = u.clone();
    for _ in 0..p.m_steps {
        match d {
            1 => {
                // Crank–Nicolson
                s1.data.copy_from_slice(&u.data);
                add_axis_product(exec, &ops[0], 0, theta, &u, &mut s1);
                solve_axis(exec, &lus[0], 0, &mut s1);
                std::mem::swap(&mut u, &mut s1);
            }
            2 => {
                // Peaceman–Rachford
                s1.data.copy_from_slice(&u.data);
                add_axis_product(exec, &ops[1], 1, theta, &u, &mut s1);
                solve_axis(exec, &lus[0], 0, &mut s1);
                s2.data.copy_from_slice(&s1.data);
                add_axis_product(exec, &ops[0], 0, theta, &s1, &mut s2);
                solve_axis(exec, &lus[1], 1, &mut s2);
                std::mem::swap(&mut u, &mut s2);
            }
            3 => {
                // Brian: three half-step stages, then extrapolate to the full step
                s1.data.copy_from_slice(&u.data);
                add_axis_product(exec, &ops[1], 1, theta, &u, &mut s1);
                add_axis_product(exec, &ops[2], 2, theta, &u, &mut s1);
                solve_axis(exec, &lus[0], 0, &mut s1);
                s2.data.copy_from_slice(&s1.data);
                add_axis_product(exec, &ops[1], 1, -theta, &u, &mut s2);
                solve_axis(exec, &lus[1], 1, &mut s2);
                s3.data.copy_from_slice(&s2.data);
                add_axis_product(exec, &ops[2], 2, -theta, &u, &mut s3);
                solve_axis(exec, &lus[2], 2, &mut s3);
                u.data
                    .iter_mut()
                    .zip(&s3.data)
                    .for_each(|(un, half)| *un = 2.0 * half - *un);
            }
            _ => unreachable!("dimension checked in validate"),
        }
    }
    if u.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(format!(
            "non-finite values in the solution of sub-problem {}",
            p.subset
        )));
    }
    Ok(SolvedGrid {
        grid: u,
        axes: p.axes.clone(),
        initial_min,
        initial_max,
    })
}

fn initial_grid(p: &SubProblem<'_>, exec: Execution) -> Result<Grid> {
    let shape: Vec<usize> = p.axes.iter().map(|a| a.j_points + 1).collect();
    let nodes: Vec<Vec<f64>> = p.axes.iter().map(|a| a.node_preimages()).collect();
    let mut grid = Grid::zeros(&shape);
    let last = *shape.last().unwrap();
    let subset = p.subset.indices();
    exec.for_each_chunk_mut(&mut grid.data, last, |line, out| {
        let mut z = p.anchor.clone();
        let mut idx = vec![0usize; shape.len()];
        let mut rem = line;
        for a in (0..shape.len() - 1).rev() {
            idx[a] = rem % shape[a];
            rem /= shape[a];
        }
        for (a, &k) in subset.iter().enumerate().take(shape.len() - 1) {
            z[k] = nodes[a][idx[a]];
        }
        let outer_boundary = idx[..shape.len() - 1]
            .iter()
            .zip(&shape)
            .any(|(&i, &n)| i == 0 || i == n - 1);
        let klast = subset[shape.len() - 1];
        for (i, v) in out.iter_mut().enumerate() {
            z[klast] = nodes[shape.len() - 1][i];
            let mut g = (p.initial)(&z);
            if let Some(c) = p.cutoff {
                if outer_boundary || i == 0 || i == last - 1 {
                    g = if g.is_nan() { 0.0 } else { g.clamp(-c, c) };
                }
            }
            *v = g;
        }
    });
    if let Some(bad) = grid.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::numerical(format!(
            "initial condition is not finite at grid point {bad} of sub-problem {}",
            p.subset
        )));
    }
    Ok(grid)
}
