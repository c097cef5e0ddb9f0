//! Gaussian RBF kernel, Gram matrices and jittered positive-definite solves.
//!
//! The kernel is unit-peak, `κ(x, y) = exp(-‖x - y‖² / 2h²)`, so every
//! feature map has RKHS norm one.

use nalgebra::{Cholesky, DMatrix};

use crate::exec::Execution;
use crate::{Error, Point, Result};

/// Relative diagonal jitter levels tried, in order, after a plain
/// factorization fails. Each is scaled by `trace(G) / M`.
pub const JITTER_LEVELS: [f64; 3] = [1e-12, 1e-10, 1e-8];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    bandwidth: f64,
    dim: usize,
}

impl Kernel {
    pub fn new(bandwidth: f64, dim: usize) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Kernel { bandwidth, dim })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `exp(-‖x - y‖² / 2h²)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        (-sq / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, kernel expects {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite point {x:?}")));
        }
        Ok(())
    }

    fn check_points(&self, points: &[Point]) -> Result<()> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty dictionary".into()));
        }
        points.iter().try_for_each(|p| self.check_point(p))
    }

    pub fn gram(&self, points: &[Point]) -> Result<GramMatrix> {
        self.gram_with(points, Execution::Sequential)
    }

    /// Gram matrix with rows assembled under `exec`.
    pub fn gram_with(&self, points: &[Point], exec: Execution) -> Result<GramMatrix> {
        self.check_points(points)?;
        Ok(GramMatrix(self.gram_unchecked(points, exec)))
    }

    pub(crate) fn gram_unchecked(&self, points: &[Point], exec: Execution) -> DMatrix<f64> {
        let m = points.len();
        // upper triangle only; each unordered pair is evaluated once
        let rows = exec.map_indices(m, |s| {
            ((s + 1)..m)
                .map(|u| self.eval_unchecked(&points[s], &points[u]))
                .collect::<Vec<_>>()
        });
        let mut out = DMatrix::identity(m, m);
        for (s, row) in rows.iter().enumerate() {
            for (offset, &v) in row.iter().enumerate() {
                let u = s + 1 + offset;
                out[(s, u)] = v;
                out[(u, s)] = v;
            }
        }
        out
    }

    /// `M × L` matrix of `κ(d_s, e_u)`.
    pub fn cross_gram(&self, rows: &[Point], cols: &[Point]) -> Result<DMatrix<f64>> {
        self.check_points(rows)?;
        self.check_points(cols)?;
        Ok(self.cross_gram_unchecked(rows, cols))
    }

    pub(crate) fn cross_gram_unchecked(&self, rows: &[Point], cols: &[Point]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |s, u| {
            self.eval_unchecked(&rows[s], &cols[u])
        })
    }
}

/// Symmetric kernel matrix over one dictionary; diagonal entries are 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl std::ops::Index<(usize, usize)> for GramMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Solution of `(G + λI) X = B` together with the jitter `λ` that was needed.
#[derive(Debug, Clone)]
pub struct PdSolution {
    pub solution: DMatrix<f64>,
    pub jitter: f64,
}

/// Cholesky factor of `G + λI` for the smallest `λ` in the escalation ladder
/// that factorizes.
pub struct PdFactor {
    chol: Cholesky<f64, nalgebra::Dyn>,
    pub jitter: f64,
}

impl PdFactor {
    pub fn new(g: &DMatrix<f64>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, expected square",
                g.nrows(),
                g.ncols()
            )));
        }
        let m = g.nrows();
        if m == 0 {
            return Err(Error::InvalidArgument("empty system".into()));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        let scale = g.trace() / m as f64;
        let mut jitter = 0.0;
        if let Some(chol) = Cholesky::new(g.clone()) {
            return Ok(PdFactor { chol, jitter });
        }
        for level in JITTER_LEVELS {
            jitter = level * scale;
            let mut shifted = g.clone();
            for i in 0..m {
                shifted[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(shifted) {
                return Ok(PdFactor { chol, jitter });
            }
        }
        Err(Error::SingularSystem { jitter })
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let rhs = nalgebra::DVector::from_column_slice(b);
        self.chol.solve(&rhs).as_slice().to_vec()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// Diagonal of `(G + λI)⁻¹`, as column sums of squares of `L⁻¹`.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let m = self.chol.l_dirty().nrows();
        let mut linv = DMatrix::<f64>::identity(m, m);
        self.chol.l_dirty().solve_lower_triangular_mut(&mut linv);
        (0..m)
            .map(|j| (j..m).map(|i| linv[(i, j)] * linv[(i, j)]).sum())
            .collect()
    }
}

/// Solves `(G + λI) X = B` by Cholesky with escalating jitter.
pub fn pd_solve(g: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<PdSolution> {
    if b.nrows() != g.nrows() {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has {} rows, system has {}",
            b.nrows(),
            g.nrows()
        )));
    }
    let factor = PdFactor::new(g)?;
    Ok(PdSolution {
        solution: factor.solve(b),
        jitter: factor.jitter,
    })
}
