//! Sample moments: centering, the spectral factorization of the sample
//! covariance, and the response- and residual-weighted second moments.

use nalgebra::{DMatrix, DVector};

use crate::error::{PieError, Result};
use crate::matrix::{gemm, SymmetricMatrix};

/// Raw covariates (one row per observation) and the response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 || p < 1 {
            return Err(PieError::TooSmall { rows: n, cols: p });
        }
        if y.len() != n {
            return Err(PieError::DimensionMismatch {
                what: "response",
                expected: n,
                got: y.len(),
            });
        }
        // Row-major scan so the first reported cell is the first one a reader
        // of the file would hit.
        for row in 0..n {
            for col in 0..p {
                if !x[(row, col)].is_finite() {
                    return Err(PieError::NonFiniteCovariate { row, col });
                }
            }
            if !y[row].is_finite() {
                return Err(PieError::NonFiniteResponse { row });
            }
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        Self::new(self.x.clone(), y)
    }

    /// Rows in the given order (duplicates allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(rows.iter());
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        Self::new(x, y)
    }
}

/// Centered design plus the eigen-decomposition `Sigma = U diag(d) U^T` of
/// the sample covariance (divisor `n`).
#[derive(Debug, Clone)]
pub struct CenteredStats {
    n: usize,
    xbar: DVector<f64>,
    ybar: f64,
    xc: DMatrix<f64>,
    u: DMatrix<f64>,
    d: DVector<f64>,
}

/// Centers the data and factors the sample covariance through an economy
/// SVD of the centered design, so the `p x p` Gram matrix is never formed.
pub fn center(dataset: &Dataset) -> CenteredStats {
    let x = dataset.x();
    let (n, p) = x.shape();
    let nf = n as f64;
    let xbar = DVector::from_iterator(p, x.column_iter().map(|c| c.sum() / nf));
    let ybar = dataset.y().sum() / nf;
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-xbar[j]);
    }
    for (j, col) in xc.column_iter().enumerate() {
        if col.iter().all(|v| *v == 0.0) {
            log::warn!("covariate column {} has zero variance", j + 1);
        }
    }

    // Xc^T = W S V^T, so Sigma = Xc^T Xc / n = W (S^2 / n) W^T.
    let svd = xc.transpose().svd(true, false);
    let w = svd.u.expect("left singular vectors were requested");
    let s = svd.singular_values;
    let m = s.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let d = DVector::from_iterator(m, order.iter().map(|&k| s[k] * s[k] / nf));
    let u = w.select_columns(order.iter());

    CenteredStats {
        n,
        xbar,
        ybar,
        xc,
        u,
        d,
    }
}

impl CenteredStats {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.xc.ncols()
    }

    /// Rank bound `min(n, p)` of the factorization.
    pub fn m(&self) -> usize {
        self.d.len()
    }

    pub fn xbar(&self) -> &DVector<f64> {
        &self.xbar
    }

    pub fn ybar(&self) -> f64 {
        self.ybar
    }

    pub fn centered_design(&self) -> &DMatrix<f64> {
        &self.xc
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.d
    }

    /// `Sigma` rebuilt from the factorization.
    pub fn sigma_from_factors(&self) -> SymmetricMatrix {
        let scaled = &self.u * DMatrix::from_diagonal(&self.d);
        SymmetricMatrix::symmetrize(scaled * self.u.transpose())
    }

    /// `Sigma = Xc^T Xc / n` formed directly.
    pub fn sigma(&self) -> SymmetricMatrix {
        let p = self.p();
        let mut g = DMatrix::zeros(p, p);
        gemm(1.0 / self.n as f64, &self.xc, true, &self.xc, false, 0.0, &mut g);
        SymmetricMatrix::symmetrize(g)
    }

    fn check_len(&self, what: &'static str, len: usize, expected: usize) -> Result<()> {
        if len != expected {
            return Err(PieError::DimensionMismatch {
                what,
                expected,
                got: len,
            });
        }
        Ok(())
    }

    /// `n^-1 sum_i w_i (x_i - xbar)(x_i - xbar)^T`, symmetrized.
    pub(crate) fn weighted_second_moment(&self, weights: &DVector<f64>) -> SymmetricMatrix {
        let p = self.p();
        let mut scaled = self.xc.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= weights[i];
        }
        let mut out = DMatrix::zeros(p, p);
        gemm(1.0 / self.n as f64, &self.xc, true, &scaled, false, 0.0, &mut out);
        SymmetricMatrix::symmetrize(out)
    }
}

/// Response-weighted moment `n^-1 sum (Y_i - Ybar)(x_i - xbar)(x_i - xbar)^T`.
pub fn lambda_y(stats: &CenteredStats, y: &DVector<f64>) -> Result<SymmetricMatrix> {
    stats.check_len("response", y.len(), stats.n)?;
    let ybar = y.sum() / stats.n as f64;
    let w = y.add_scalar(-ybar);
    Ok(stats.weighted_second_moment(&w))
}

/// `r_i = (Y_i - Ybar) - (x_i - xbar)^T beta`.
pub fn residuals(stats: &CenteredStats, y: &DVector<f64>, beta: &DVector<f64>) -> Result<DVector<f64>> {
    stats.check_len("response", y.len(), stats.n)?;
    stats.check_len("beta", beta.len(), stats.p())?;
    let ybar = y.sum() / stats.n as f64;
    let mut r = y.add_scalar(-ybar);
    r.gemv(-1.0, &stats.xc, beta, 1.0);
    Ok(r)
}

/// Residual-weighted moment `n^-1 sum r_i (x_i - xbar)(x_i - xbar)^T`.
pub fn lambda_r(stats: &CenteredStats, y: &DVector<f64>, beta: &DVector<f64>) -> Result<SymmetricMatrix> {
    let r = residuals(stats, y, beta)?;
    Ok(stats.weighted_second_moment(&r))
}
