//! Lambda paths, least-squares refits on the selected support, BIC
//! selection, and the end-to-end response- and residual-based pipelines.
//!
//! The penalized fit only picks the support. Coefficients come from an
//! ordinary least-squares refit on centered covariates and their products,
//! and lambda is chosen by `n log(rss / n) + log(n) df` over that refit.

use nalgebra::{DMatrix, DVector};

use crate::admm::{solve_pie_warm, AdmmState, InteractionFit, SolverOptions};
use crate::error::{PieError, Result};
use crate::main_effects::{log_grid, select_lasso, zero_fit, MainEffectsFit};
use crate::matrix::SymmetricMatrix;
use crate::moments::{center, lambda_r, lambda_y, CenteredStats, Dataset};

/// Columns whose component orthogonal to the earlier columns is smaller
/// than this fraction of their norm count as linearly dependent.
const RANK_TOLERANCE: f64 = 1e-8;

/// `E(Y | x) = alpha + (x - mu)^T beta + (x - mu)^T omega (x - mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub alpha: f64,
    pub beta: DVector<f64>,
    pub omega: SymmetricMatrix,
    pub mu: DVector<f64>,
}

impl QuadraticModel {
    pub fn zero(p: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: DVector::zeros(p),
            omega: SymmetricMatrix::zeros(p),
            mu: DVector::zeros(p),
        }
    }

    pub fn predict(&self, x: &DVector<f64>) -> f64 {
        let c = x - &self.mu;
        self.alpha + c.dot(&self.beta) + c.dot(&(self.omega.as_matrix() * &c))
    }

    /// Main-effect indices with nonzero coefficient.
    pub fn main_support(&self) -> Vec<usize> {
        (0..self.beta.len()).filter(|&k| self.beta[k] != 0.0).collect()
    }
}

/// Ordinary least squares on intercept, centered main effects and centered
/// covariate products.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresRefit {
    pub intercept: f64,
    /// `(k, coefficient)` for each main-effect column.
    pub main: Vec<(usize, f64)>,
    /// `((k, l), coefficient)` with `l <= k` for each product column
    /// `(x_k - xbar_k)(x_l - xbar_l)`.
    pub interactions: Vec<((usize, usize), f64)>,
    pub rss: f64,
    /// Number of design columns, intercept included.
    pub df: usize,
}

impl LeastSquaresRefit {
    /// Maps product coefficients onto a symmetric matrix: a diagonal
    /// coefficient is `Omega_kk`, an off-diagonal one is `2 Omega_kl`.
    pub fn to_model(&self, xbar: &DVector<f64>) -> QuadraticModel {
        let p = xbar.len();
        let mut beta = DVector::zeros(p);
        for &(k, c) in &self.main {
            beta[k] = c;
        }
        let mut omega = SymmetricMatrix::zeros(p);
        for &((k, l), c) in &self.interactions {
            omega.set(k, l, if k == l { c } else { 0.5 * c });
        }
        QuadraticModel {
            alpha: self.intercept,
            beta,
            omega,
            mu: xbar.clone(),
        }
    }
}

/// Fits the refit design for the given supports.
///
/// Fails with [`PieError::InadmissibleRefit`] when the column count reaches
/// `n` or the columns are (numerically) linearly dependent.
pub fn refit_ls(dataset: &Dataset, support: &[(usize, usize)], main_support: &[usize]) -> Result<LeastSquaresRefit> {
    let (n, p) = (dataset.n(), dataset.p());
    let df = 1 + main_support.len() + support.len();
    if df >= n {
        return Err(PieError::InadmissibleRefit { df, n });
    }
    for &k in main_support {
        if k >= p {
            return Err(PieError::InvalidParameter {
                name: "main_support",
                reason: format!("index {k} out of range for p = {p}"),
            });
        }
    }
    for &(k, l) in support {
        if k >= p || l > k {
            return Err(PieError::InvalidParameter {
                name: "support",
                reason: format!("pair ({k}, {l}) must satisfy l <= k < p"),
            });
        }
    }
    let x = dataset.x();
    let nf = n as f64;
    let means: Vec<f64> = x.column_iter().map(|c| c.sum() / nf).collect();
    let xc = |i: usize, k: usize| x[(i, k)] - means[k];

    let mut design = DMatrix::zeros(n, df);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        for (c, &k) in main_support.iter().enumerate() {
            design[(i, 1 + c)] = xc(i, k);
        }
        for (c, &(k, l)) in support.iter().enumerate() {
            design[(i, 1 + main_support.len() + c)] = xc(i, k) * xc(i, l);
        }
    }
    let norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    let y = dataset.y();

    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..df {
        if norms[j] == 0.0 || r[(j, j)].abs() <= RANK_TOLERANCE * norms[j] {
            return Err(PieError::InadmissibleRefit { df, n });
        }
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let coef = r
        .solve_upper_triangular(&qty.rows(0, df).into_owned())
        .ok_or(PieError::InadmissibleRefit { df, n })?;
    let resid = y - &design * &coef;
    let rss = resid.norm_squared();

    Ok(LeastSquaresRefit {
        intercept: coef[0],
        main: main_support
            .iter()
            .enumerate()
            .map(|(c, &k)| (k, coef[1 + c]))
            .collect(),
        interactions: support
            .iter()
            .enumerate()
            .map(|(c, &kl)| (kl, coef[1 + main_support.len() + c]))
            .collect(),
        rss,
        df,
    })
}

pub fn bic(rss: f64, n: usize, df: usize) -> f64 {
    let nf = n as f64;
    nf * (rss / nf).ln() + nf.ln() * df as f64
}

/// Index minimizing BIC over the admissible entries (`Some((rss, df))`).
/// Candidates are ordered by decreasing lambda; ties keep the larger lambda.
pub fn bic_select(candidates: &[Option<(f64, usize)>], n: usize) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        if let Some((rss, df)) = c {
            let v = bic(*rss, n, *df);
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i).ok_or(PieError::NoAdmissibleLambda)
}

/// Log-spaced grid from `||Lambda||_inf` down to `ratio` times that.
///
/// A zero moment matrix yields the single grid point `0`.
pub fn lambda_grid(lambda_hat: &SymmetricMatrix, n_points: usize, ratio: f64) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(PieError::InvalidParameter {
            name: "grid_points",
            reason: format!("need at least 2, got {n_points}"),
        });
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(PieError::InvalidParameter {
            name: "grid_ratio",
            reason: format!("must lie in (0, 1), got {ratio}"),
        });
    }
    let top = lambda_hat.max_abs();
    if top == 0.0 {
        log::warn!("moment matrix is identically zero; using the single grid point 0");
        return Ok(vec![0.0]);
    }
    Ok(log_grid(top, n_points, ratio))
}

#[derive(Debug, Clone)]
pub struct PathResult {
    /// Strictly decreasing.
    pub lambdas: Vec<f64>,
    pub fits: Vec<InteractionFit>,
    /// `None` where the refit was inadmissible.
    pub refits: Vec<Option<LeastSquaresRefit>>,
    /// `+inf` where inadmissible.
    pub bic: Vec<f64>,
    /// `NaN` where inadmissible.
    pub refit_rss: Vec<f64>,
    pub df: Vec<usize>,
    /// Main-effect columns included in every refit on this path.
    pub main_support: Vec<usize>,
    pub chosen_index: usize,
}

impl PathResult {
    pub fn chosen_fit(&self) -> &InteractionFit {
        &self.fits[self.chosen_index]
    }

    pub fn chosen_lambda(&self) -> f64 {
        self.lambdas[self.chosen_index]
    }

    pub fn admissible(&self, i: usize) -> bool {
        self.refits[i].is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MainEffectsSource {
    /// Cross-validated LASSO.
    Lasso,
    /// All main effects fixed at zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PieOptions {
    pub solver: SolverOptions,
    pub grid_points: usize,
    pub grid_ratio: f64,
    /// Fit this single lambda instead of a grid.
    pub lambda: Option<f64>,
    /// Cross-validation folds for the main-effect LASSO.
    pub folds: usize,
    pub seed: u64,
    /// Include LASSO-selected main effects in the response-based refit.
    pub refit_main: bool,
    /// How the residual-based pipeline estimates main effects.
    pub main_effects: MainEffectsSource,
    /// Refits with more than this fraction of `n` columns are excluded from
    /// BIC selection.
    pub max_df_fraction: f64,
}

impl Default for PieOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            grid_points: 50,
            grid_ratio: 0.01,
            lambda: None,
            folds: 10,
            seed: 0,
            refit_main: false,
            main_effects: MainEffectsSource::Lasso,
            max_df_fraction: 0.5,
        }
    }
}

impl PieOptions {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.max_df_fraction > 0.0 && self.max_df_fraction <= 1.0) {
            return Err(PieError::InvalidParameter {
                name: "max_df_fraction",
                reason: format!("must lie in (0, 1], got {}", self.max_df_fraction),
            });
        }
        Ok(())
    }

    /// Largest admissible refit column count for `n` observations.
    pub fn max_df(&self, n: usize) -> usize {
        ((self.max_df_fraction * n as f64).floor() as usize).min(n.saturating_sub(1))
    }
}

#[derive(Debug, Clone)]
pub struct PieFit {
    pub model: QuadraticModel,
    pub path: PathResult,
    /// First-stage main-effect fit, when one was run.
    pub main_effects: Option<MainEffectsFit>,
}

/// Solves along the grid with warm starts, refits each support and picks
/// lambda by BIC.
pub fn fit_path(
    dataset: &Dataset,
    stats: &CenteredStats,
    lambda_hat: &SymmetricMatrix,
    main_support: &[usize],
    opts: &PieOptions,
) -> Result<PathResult> {
    opts.validate()?;
    let lambdas = match opts.lambda {
        Some(l) if l >= 0.0 && l.is_finite() => vec![l],
        Some(l) => {
            return Err(PieError::InvalidParameter {
                name: "lambda",
                reason: format!("must be nonnegative and finite, got {l}"),
            })
        }
        None => lambda_grid(lambda_hat, opts.grid_points, opts.grid_ratio)?,
    };
    let p = stats.p();
    let n = dataset.n();
    let max_df = opts.max_df(n);
    let mut state = AdmmState::zeros(p);
    let mut fits = Vec::with_capacity(lambdas.len());
    let mut refits = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let fit = solve_pie_warm(stats, lambda_hat, lambda, &opts.solver, &mut state)?;
        let support = fit.omega.lower_support();
        let refit = if 1 + main_support.len() + support.len() > max_df {
            None
        } else {
            match refit_ls(dataset, &support, main_support) {
                Ok(r) => Some(r),
                Err(PieError::InadmissibleRefit { .. }) => None,
                Err(e) => return Err(e),
            }
        };
        fits.push(fit);
        refits.push(refit);
    }
    let candidates: Vec<Option<(f64, usize)>> = refits.iter().map(|r| r.as_ref().map(|r| (r.rss, r.df))).collect();
    let chosen_index = bic_select(&candidates, n)?;
    let bic_values = candidates
        .iter()
        .map(|c| c.map_or(f64::INFINITY, |(rss, df)| bic(rss, n, df)))
        .collect();
    let refit_rss = candidates.iter().map(|c| c.map_or(f64::NAN, |(rss, _)| rss)).collect();
    let df = fits
        .iter()
        .map(|f| 1 + main_support.len() + f.omega.lower_nonzero_count())
        .collect();
    Ok(PathResult {
        lambdas,
        fits,
        refits,
        bic: bic_values,
        refit_rss,
        df,
        main_support: main_support.to_vec(),
        chosen_index,
    })
}

fn finish(dataset: &Dataset, stats: &CenteredStats, path: PathResult, main_effects: Option<MainEffectsFit>) -> PieFit {
    let model = path.refits[path.chosen_index]
        .as_ref()
        .expect("BIC only selects admissible refits")
        .to_model(stats.xbar());
    debug_assert_eq!(model.omega.lower_support(), path.chosen_fit().omega.lower_support());
    let _ = dataset;
    PieFit {
        model,
        path,
        main_effects,
    }
}

/// Response-based estimator: `Lambda = Lambda_y`.
pub fn fit_piey(dataset: &Dataset, opts: &PieOptions) -> Result<PieFit> {
    let stats = center(dataset);
    let lambda_hat = lambda_y(&stats, dataset.y())?;
    let main = if opts.refit_main {
        Some(select_lasso(&stats, dataset.y(), opts.folds, opts.seed)?)
    } else {
        None
    };
    let main_support = main.as_ref().map(|m| m.support.clone()).unwrap_or_default();
    let path = fit_path(dataset, &stats, &lambda_hat, &main_support, opts)?;
    Ok(finish(dataset, &stats, path, main))
}

/// Residual-based estimator: `Lambda = Lambda_r` with residuals from the
/// first-stage main-effect fit; the refit includes its selected columns.
pub fn fit_pier(dataset: &Dataset, opts: &PieOptions) -> Result<PieFit> {
    let stats = center(dataset);
    let main = match opts.main_effects {
        MainEffectsSource::Lasso => select_lasso(&stats, dataset.y(), opts.folds, opts.seed)?,
        MainEffectsSource::Zero => zero_fit(&stats, dataset.y()),
    };
    let lambda_hat = lambda_r(&stats, dataset.y(), &main.beta)?;
    let path = fit_path(dataset, &stats, &lambda_hat, &main.support, opts)?;
    Ok(finish(dataset, &stats, path, Some(main)))
}
