//! Accuracy metrics, the known-support oracle, the all-pairs LASSO baseline
//! and a small-dimension proximal-gradient solver used as an independent
//! reference for the ADMM.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{PieError, Result};
use crate::main_effects::{lambda_max, log_grid, CdOptions, CoordinateDescent};
use crate::matrix::SymmetricMatrix;
use crate::moments::Dataset;
use crate::tuning::{bic, bic_select, refit_ls, LeastSquaresRefit, PieOptions, QuadraticModel};

/// Largest `p` accepted by [`all_pairs_lasso`] and [`fit_all_pairs`].
pub const ALL_PAIRS_LIMIT: usize = 300;
/// Largest `p` accepted by [`brute_force_pie`].
pub const BRUTE_FORCE_LIMIT: usize = 6;

/// True main effects and interaction matrix of a data-generating model.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub beta: DVector<f64>,
    pub omega: SymmetricMatrix,
}

impl Truth {
    pub fn main_support(&self) -> Vec<usize> {
        (0..self.beta.len()).filter(|&k| self.beta[k] != 0.0).collect()
    }

    /// Main effects that are nonzero once the model is recentered at an
    /// arbitrary point: the true main effects plus every covariate that
    /// appears in a true interaction.
    pub fn centered_main_support(&self) -> Vec<usize> {
        let p = self.beta.len();
        (0..p)
            .filter(|&k| self.beta[k] != 0.0 || (0..p).any(|l| self.omega.get(k, l) != 0.0))
            .collect()
    }

    pub fn interaction_support(&self) -> Vec<(usize, usize)> {
        self.omega.lower_support()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    /// Percentage of true lower-triangle nonzeros that are also estimated.
    pub rate: f64,
    /// `||est - truth||_F`.
    pub loss: f64,
    /// Lower-triangle nonzeros of the estimate.
    pub size: usize,
    pub time_seconds: f64,
}

impl MetricReport {
    pub fn compute(est: &SymmetricMatrix, truth: &SymmetricMatrix, time_seconds: f64) -> Result<Self> {
        Ok(Self {
            rate: support_rate(est, truth)?,
            loss: frobenius_loss(est, truth)?,
            size: support_size(est),
            time_seconds,
        })
    }
}

fn check_same_dim(est: &SymmetricMatrix, truth: &SymmetricMatrix) -> Result<()> {
    if est.dim() != truth.dim() {
        return Err(PieError::DimensionMismatch {
            what: "estimate",
            expected: truth.dim(),
            got: est.dim(),
        });
    }
    Ok(())
}

pub fn support_rate(est: &SymmetricMatrix, truth: &SymmetricMatrix) -> Result<f64> {
    check_same_dim(est, truth)?;
    let support = truth.lower_support();
    if support.is_empty() {
        return Err(PieError::EmptyTruth);
    }
    let hit = support.iter().filter(|&&(k, l)| est.get(k, l) != 0.0).count();
    Ok(100.0 * hit as f64 / support.len() as f64)
}

pub fn frobenius_loss(est: &SymmetricMatrix, truth: &SymmetricMatrix) -> Result<f64> {
    check_same_dim(est, truth)?;
    Ok((est.as_matrix() - truth.as_matrix()).norm())
}

pub fn support_size(est: &SymmetricMatrix) -> usize {
    est.lower_nonzero_count()
}

/// Least-squares refit on the true supports, scored against the truth.
///
/// The refit is centered at the sample mean, where `x^T Omega x` also
/// contributes the linear term `2 xbar^T Omega x`; the main-effect columns
/// therefore cover [`Truth::centered_main_support`].
pub fn oracle_fit(dataset: &Dataset, truth: &Truth) -> Result<(MetricReport, QuadraticModel)> {
    let start = std::time::Instant::now();
    let refit = refit_ls(dataset, &truth.interaction_support(), &truth.centered_main_support())?;
    let model = refit.to_model(&column_means(dataset.x()));
    let elapsed = start.elapsed().as_secs_f64();
    Ok((MetricReport::compute(&model.omega, &truth.omega, elapsed)?, model))
}

fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()))
}

/// A column of the expanded design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Main(usize),
    /// Product `(x_k - xbar_k)(x_l - xbar_l)` with `l <= k`.
    Pair(usize, usize),
}

/// Centered main effects followed by the centered distinct products in
/// row-major lower-triangle order.
pub fn expanded_design(dataset: &Dataset) -> Result<(DMatrix<f64>, Vec<Feature>)> {
    let p = dataset.p();
    if p > ALL_PAIRS_LIMIT {
        return Err(PieError::TooLarge {
            what: "all-pairs design",
            p,
            limit: ALL_PAIRS_LIMIT,
        });
    }
    let n = dataset.n();
    let x = dataset.x();
    let xbar = column_means(x);
    let xc = DMatrix::from_fn(n, p, |i, k| x[(i, k)] - xbar[k]);
    let mut features: Vec<Feature> = (0..p).map(Feature::Main).collect();
    for k in 0..p {
        for l in 0..=k {
            features.push(Feature::Pair(k, l));
        }
    }
    let mut z = DMatrix::zeros(n, features.len());
    for (j, f) in features.iter().enumerate() {
        let mut col = z.column_mut(j);
        match *f {
            Feature::Main(k) => col.copy_from(&xc.column(k)),
            Feature::Pair(k, l) => {
                col.copy_from(&xc.column(k).component_mul(&xc.column(l)));
                let m = col.mean();
                col.add_scalar_mut(-m);
            }
        }
    }
    Ok((z, features))
}

fn fold(coef: &DVector<f64>, features: &[Feature], p: usize) -> (DVector<f64>, SymmetricMatrix) {
    let mut beta = DVector::zeros(p);
    let mut b = SymmetricMatrix::zeros(p);
    for (j, f) in features.iter().enumerate() {
        let c = coef[j];
        match *f {
            Feature::Main(k) => beta[k] = c,
            Feature::Pair(k, l) if k == l => b.set(k, k, c),
            Feature::Pair(k, l) => b.set(k, l, 0.5 * c),
        }
    }
    (beta, b)
}

fn cd_options() -> CdOptions {
    CdOptions {
        kkt_tol: 1e-8,
        ..CdOptions::default()
    }
}

/// LASSO over all main effects and distinct pairwise products at one
/// `lambda`. Off-diagonal product coefficients are halved when folded into
/// the symmetric matrix.
pub fn all_pairs_lasso(dataset: &Dataset, lambda: f64) -> Result<(DVector<f64>, SymmetricMatrix)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(PieError::InvalidParameter {
            name: "lambda",
            reason: format!("must be nonnegative and finite, got {lambda}"),
        });
    }
    let (z, features) = expanded_design(dataset)?;
    let y = dataset.y();
    let yc = y.add_scalar(-y.mean());
    let mut cd = CoordinateDescent::with_form(&z, &yc, false);
    let res = cd.solve(lambda, &cd_options());
    Ok(fold(&res.beta, &features, dataset.p()))
}

/// Selected main effects and lower-triangle pairs.
pub type PairSupport = (Vec<usize>, Vec<(usize, usize)>);

#[derive(Debug, Clone)]
pub struct AllPairsFit {
    pub model: QuadraticModel,
    pub lambdas: Vec<f64>,
    /// LASSO coefficients folded per lambda: main effects and interactions.
    pub supports: Vec<PairSupport>,
    /// `+inf` where the refit is inadmissible or the path was cut short.
    pub bic: Vec<f64>,
    pub chosen_index: usize,
    /// Folded LASSO estimate at the chosen lambda, before the refit.
    pub lasso_beta: DVector<f64>,
    pub lasso_omega: SymmetricMatrix,
}

/// All-pairs LASSO path tuned by the same BIC least-squares refit as the
/// interaction estimators, with the same grid settings and refit cap. The
/// path stops once the refit would exceed the cap.
pub fn fit_all_pairs(dataset: &Dataset, opts: &PieOptions) -> Result<AllPairsFit> {
    opts.validate()?;
    let (z, features) = expanded_design(dataset)?;
    let (n, p) = (dataset.n(), dataset.p());
    let max_df = opts.max_df(n);
    let y = dataset.y();
    let yc = y.add_scalar(-y.mean());
    let top = lambda_max(&z, &yc);
    let lambdas = if top == 0.0 {
        vec![0.0]
    } else {
        log_grid(top, opts.grid_points, opts.grid_ratio)
    };
    let mut cd = CoordinateDescent::with_form(&z, &yc, false);
    let opts = cd_options();
    let mut supports = Vec::with_capacity(lambdas.len());
    let mut refits: Vec<Option<LeastSquaresRefit>> = Vec::with_capacity(lambdas.len());
    let mut saturated = false;
    let mut folded = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        if saturated {
            supports.push((Vec::new(), Vec::new()));
            refits.push(None);
            folded.push(None);
            continue;
        }
        let res = cd.solve(lambda, &opts);
        let (beta, b) = fold(&res.beta, &features, p);
        let main: Vec<usize> = (0..p).filter(|&k| beta[k] != 0.0).collect();
        let pairs = b.lower_support();
        let df = 1 + main.len() + pairs.len();
        let refit = if df > max_df {
            saturated = true;
            None
        } else {
            match refit_ls(dataset, &pairs, &main) {
                Ok(r) => Some(r),
                Err(PieError::InadmissibleRefit { .. }) => None,
                Err(e) => return Err(e),
            }
        };
        supports.push((main, pairs));
        refits.push(refit);
        folded.push(Some((beta, b)));
    }
    let candidates: Vec<Option<(f64, usize)>> = refits.iter().map(|r| r.as_ref().map(|r| (r.rss, r.df))).collect();
    let chosen_index = bic_select(&candidates, n)?;
    let bic_values = candidates
        .iter()
        .map(|c| c.map_or(f64::INFINITY, |(rss, df)| bic(rss, n, df)))
        .collect();
    let model = refits[chosen_index]
        .as_ref()
        .expect("BIC only selects admissible refits")
        .to_model(&column_means(dataset.x()));
    let (lasso_beta, lasso_omega) = folded.swap_remove(chosen_index).expect("chosen point was solved");
    Ok(AllPairsFit {
        model,
        lambdas,
        supports,
        bic: bic_values,
        chosen_index,
        lasso_beta,
        lasso_omega,
    })
}

/// Objective `tr(B^T S B S) - tr(B L) + lambda ||B||_1` evaluated through
/// the vectorized form with an explicit Kronecker product.
pub fn vec_objective(sigma: &SymmetricMatrix, lambda_hat: &SymmetricMatrix, b: &SymmetricMatrix, lambda: f64) -> f64 {
    let h = sigma.as_matrix().kronecker(sigma.as_matrix());
    let v = DVector::from_column_slice(b.as_matrix().as_slice());
    let l = DVector::from_column_slice(lambda_hat.as_matrix().as_slice());
    v.dot(&(&h * &v)) - l.dot(&v) + lambda * v.lp_norm(1)
}

/// Proximal-gradient (FISTA with adaptive restart) solution of the
/// vectorized problem `1/2 v^T (2 S (x) S) v - vec(L)^T v + lambda ||v||_1`.
pub fn brute_force_pie(sigma: &SymmetricMatrix, lambda_hat: &SymmetricMatrix, lambda: f64) -> Result<SymmetricMatrix> {
    let p = sigma.dim();
    if p > BRUTE_FORCE_LIMIT {
        return Err(PieError::TooLarge {
            what: "brute-force solver",
            p,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if lambda_hat.dim() != p {
        return Err(PieError::DimensionMismatch {
            what: "moment matrix",
            expected: p,
            got: lambda_hat.dim(),
        });
    }
    let h = 2.0 * sigma.as_matrix().kronecker(sigma.as_matrix());
    let c = DVector::from_column_slice(lambda_hat.as_matrix().as_slice());
    let lip = h.clone().symmetric_eigenvalues().amax();
    let q = p * p;
    if lip == 0.0 {
        return Ok(SymmetricMatrix::zeros(p));
    }
    let step = 1.0 / lip;
    let objective = |v: &DVector<f64>| 0.5 * v.dot(&(&h * v)) - c.dot(v) + lambda * v.lp_norm(1);
    let prox = |w: &DVector<f64>| w.map(|a| (a.abs() - step * lambda).max(0.0) * a.signum());

    let mut v = DVector::zeros(q);
    let mut w = v.clone();
    let mut t = 1.0_f64;
    let mut f_prev = objective(&v);
    let mut stall = 0;
    for _ in 0..2_000_000 {
        let grad = &h * &w - &c;
        let next = prox(&(&w - step * grad));
        let f = objective(&next);
        if f > f_prev {
            // restart momentum
            w.copy_from(&v);
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        w = &next + ((t - 1.0) / t_next) * (&next - &v);
        let moved = (&next - &v).amax();
        v = next;
        t = t_next;
        if f_prev - f <= 1e-10 * 1e-6 * (1.0 + f.abs()) && moved <= 1e-13 {
            stall += 1;
            if stall >= 10 {
                break;
            }
        } else {
            stall = 0;
        }
        f_prev = f;
    }
    let b = DMatrix::from_column_slice(p, p, v.as_slice());
    Ok(SymmetricMatrix::symmetrize(b))
}
