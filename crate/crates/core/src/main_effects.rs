//! LASSO for the main-effect vector, by cyclic coordinate descent with
//! warm-started lambda paths and k-fold cross-validation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PieError, Result};
use crate::matrix::gemm;
use crate::moments::CenteredStats;

/// Above this many columns the solver keeps a residual vector instead of
/// the `q x q` Gram matrix.
pub const COVARIANCE_FORM_LIMIT: usize = 5000;

pub const DEFAULT_PATH_POINTS: usize = 50;
pub const DEFAULT_PATH_RATIO: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct MainEffectsFit {
    pub beta: DVector<f64>,
    /// Intercept on the raw covariate scale, `Ybar - xbar^T beta`.
    pub intercept: f64,
    pub lambda: f64,
    /// Indices with `beta[k] != 0`, ascending.
    pub support: Vec<usize>,
    pub converged: bool,
    pub kkt_residual: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct CdOptions {
    /// Stop once the KKT residual is at most `kkt_tol * max(lambda, 1)`.
    pub kkt_tol: f64,
    pub max_sweeps: usize,
    /// Record the objective after every sweep (for diagnostics and tests).
    pub record_objective: bool,
}

impl Default for CdOptions {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-10,
            max_sweeps: 100_000,
            record_objective: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CdResult {
    pub beta: DVector<f64>,
    pub lambda: f64,
    pub converged: bool,
    pub kkt_residual: f64,
    pub sweeps: usize,
    pub objective_trace: Vec<f64>,
}

/// Cross-validated prediction error along a lambda path.
#[derive(Debug, Clone, Serialize)]
pub struct CvCurve {
    pub lambdas: Vec<f64>,
    /// Mean squared prediction error over all held-out observations.
    pub errors: Vec<f64>,
    pub chosen_index: usize,
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// `(2n)^-1 ||y - X b||^2 + lambda ||b||_1` for centered `x`, `y`.
pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let r = y - x * beta;
    r.norm_squared() / (2.0 * x.nrows() as f64) + lambda * beta.lp_norm(1)
}

/// `max_j |x_j^T y| / n`: the smallest lambda whose solution is zero.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| (c.dot(y) / n).abs()).fold(0.0, f64::max)
}

/// Log-spaced descending grid from `top` to `ratio * top`.
pub fn log_grid(top: f64, n_points: usize, ratio: f64) -> Vec<f64> {
    if n_points == 1 {
        return vec![top];
    }
    let (a, b) = (top.ln(), (ratio * top).ln());
    (0..n_points)
        .map(|i| {
            if i == 0 {
                top
            } else if i == n_points - 1 {
                ratio * top
            } else {
                (a + (b - a) * i as f64 / (n_points - 1) as f64).exp()
            }
        })
        .collect()
}

fn kkt_from_gradient(g: &DVector<f64>, beta: &DVector<f64>, scale: &[f64], lambda: f64) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..beta.len() {
        if scale[j] == 0.0 {
            continue;
        }
        let v = if beta[j] > 0.0 {
            (g[j] - lambda).abs()
        } else if beta[j] < 0.0 {
            (g[j] + lambda).abs()
        } else {
            (g[j].abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

enum Form {
    /// `g = c - G b` with `G = X^T X / n`, `c = X^T y / n`.
    Covariance { gram: DMatrix<f64>, xty: DVector<f64> },
    /// `r = y - X b`.
    Residual { residual: DVector<f64> },
}

/// Coordinate-descent LASSO on a centered design.
pub struct CoordinateDescent<'a> {
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    col_sq: Vec<f64>,
    form: Form,
    beta: DVector<f64>,
    grad: DVector<f64>,
}

impl<'a> CoordinateDescent<'a> {
    /// Picks the covariance form when `x` has fewer than
    /// [`COVARIANCE_FORM_LIMIT`] columns.
    pub fn new(x: &'a DMatrix<f64>, y: &'a DVector<f64>) -> Self {
        let use_cov = x.ncols() < COVARIANCE_FORM_LIMIT;
        Self::with_form(x, y, use_cov)
    }

    pub fn with_form(x: &'a DMatrix<f64>, y: &'a DVector<f64>, covariance: bool) -> Self {
        let (n, q) = x.shape();
        let nf = n as f64;
        let col_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared() / nf).collect();
        let xty = x.tr_mul(y) / nf;
        let form = if covariance {
            let mut gram = DMatrix::zeros(q, q);
            gemm(1.0 / nf, x, true, x, false, 0.0, &mut gram);
            Form::Covariance { gram, xty: xty.clone() }
        } else {
            Form::Residual { residual: y.clone() }
        };
        Self {
            x,
            y,
            col_sq,
            form,
            beta: DVector::zeros(q),
            grad: xty,
        }
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    /// Replaces the current iterate (warm start).
    pub fn set_beta(&mut self, beta: &DVector<f64>) {
        self.beta.copy_from(beta);
        let nf = self.x.nrows() as f64;
        match &mut self.form {
            Form::Covariance { gram, xty } => {
                self.grad.copy_from(xty);
                self.grad.gemv(-1.0, gram, beta, 1.0);
            }
            Form::Residual { residual } => {
                residual.copy_from(self.y);
                residual.gemv(-1.0, self.x, beta, 1.0);
                self.grad = self.x.tr_mul(residual) / nf;
            }
        }
    }

    fn update(&mut self, j: usize, lambda: f64) -> f64 {
        let a = self.col_sq[j];
        if a == 0.0 {
            return 0.0;
        }
        let nf = self.x.nrows() as f64;
        let old = self.beta[j];
        let gj = match &self.form {
            Form::Covariance { .. } => self.grad[j],
            Form::Residual { residual } => self.x.column(j).dot(residual) / nf,
        };
        let new = soft(gj + a * old, lambda) / a;
        let delta = new - old;
        if delta != 0.0 {
            self.beta[j] = new;
            match &mut self.form {
                Form::Covariance { gram, .. } => {
                    self.grad.axpy(-delta, &gram.column(j), 1.0);
                }
                Form::Residual { residual } => {
                    residual.axpy(-delta, &self.x.column(j), 1.0);
                }
            }
        }
        (delta * a).abs()
    }

    fn refresh_gradient(&mut self) {
        if let Form::Residual { residual } = &self.form {
            self.grad = self.x.tr_mul(residual) / self.x.nrows() as f64;
        }
    }

    pub fn kkt_residual(&mut self, lambda: f64) -> f64 {
        self.refresh_gradient();
        kkt_from_gradient(&self.grad, &self.beta, &self.col_sq, lambda)
    }

    pub fn objective(&self, lambda: f64) -> f64 {
        lasso_objective(self.x, self.y, &self.beta, lambda)
    }

    /// Runs sweeps from the current iterate until the KKT tolerance holds.
    pub fn solve(&mut self, lambda: f64, opts: &CdOptions) -> CdResult {
        let q = self.beta.len();
        let tol = opts.kkt_tol * lambda.max(1.0);
        let mut sweeps = 0;
        let mut trace = Vec::new();
        if opts.record_objective {
            trace.push(self.objective(lambda));
        }
        let mut converged = false;
        let mut kkt = self.kkt_residual(lambda);
        if kkt <= tol {
            converged = true;
        }
        while !converged && sweeps < opts.max_sweeps {
            // full pass to pick up new coordinates
            let mut change = 0.0_f64;
            for j in 0..q {
                change = change.max(self.update(j, lambda));
            }
            sweeps += 1;
            if opts.record_objective {
                trace.push(self.objective(lambda));
            }
            // then cycle on the active set only
            while change > 0.1 * tol && sweeps < opts.max_sweeps {
                change = 0.0;
                for j in 0..q {
                    if self.beta[j] != 0.0 {
                        change = change.max(self.update(j, lambda));
                    }
                }
                sweeps += 1;
                if opts.record_objective {
                    trace.push(self.objective(lambda));
                }
            }
            kkt = self.kkt_residual(lambda);
            converged = kkt <= tol;
        }
        if !converged {
            log::warn!(
                "coordinate descent stopped after {sweeps} sweeps with KKT residual {kkt:.3e} at lambda {lambda:.4e}"
            );
        }
        CdResult {
            beta: self.beta.clone(),
            lambda,
            converged,
            kkt_residual: kkt,
            sweeps,
            objective_trace: trace,
        }
    }

    /// Warm-started solves along a descending grid.
    pub fn path(&mut self, lambdas: &[f64], opts: &CdOptions) -> Vec<CdResult> {
        lambdas.iter().map(|&l| self.solve(l, opts)).collect()
    }
}

fn centered_response(stats: &CenteredStats, y: &DVector<f64>) -> Result<DVector<f64>> {
    if y.len() != stats.n() {
        return Err(PieError::DimensionMismatch {
            what: "response",
            expected: stats.n(),
            got: y.len(),
        });
    }
    let ybar = y.mean();
    Ok(y.add_scalar(-ybar))
}

fn into_fit(stats: &CenteredStats, y: &DVector<f64>, res: CdResult) -> MainEffectsFit {
    let support: Vec<usize> = (0..res.beta.len()).filter(|&k| res.beta[k] != 0.0).collect();
    let intercept = y.mean() - stats.xbar().dot(&res.beta);
    MainEffectsFit {
        beta: res.beta,
        intercept,
        lambda: res.lambda,
        support,
        converged: res.converged,
        kkt_residual: res.kkt_residual,
        sweeps: res.sweeps,
    }
}

/// LASSO at a single `lambda` from a cold start.
pub fn fit_lasso(stats: &CenteredStats, y: &DVector<f64>, lambda: f64) -> Result<MainEffectsFit> {
    fit_lasso_with(stats, y, lambda, &CdOptions::default())
}

pub fn fit_lasso_with(
    stats: &CenteredStats,
    y: &DVector<f64>,
    lambda: f64,
    opts: &CdOptions,
) -> Result<MainEffectsFit> {
    if !(lambda >= 0.0) {
        return Err(PieError::InvalidParameter {
            name: "lambda",
            reason: format!("must be nonnegative, got {lambda}"),
        });
    }
    let yc = centered_response(stats, y)?;
    let mut cd = CoordinateDescent::new(stats.centered_design(), &yc);
    let res = cd.solve(lambda, opts);
    Ok(into_fit(stats, y, res))
}

fn path_options() -> CdOptions {
    CdOptions {
        kkt_tol: 1e-8,
        ..CdOptions::default()
    }
}

/// K-fold cross-validation error along the default lambda path.
///
/// Folds come from a seeded shuffle; observation `perm[i]` goes to fold
/// `i % folds`. Each fold is re-centered on its own training rows.
pub fn cross_validate(stats: &CenteredStats, y: &DVector<f64>, folds: usize, seed: u64) -> Result<CvCurve> {
    let n = stats.n();
    if folds < 2 {
        return Err(PieError::InvalidParameter {
            name: "folds",
            reason: format!("need at least 2, got {folds}"),
        });
    }
    if n < folds {
        return Err(PieError::InvalidParameter {
            name: "folds",
            reason: format!("{folds} folds requested for {n} observations"),
        });
    }
    let yc = centered_response(stats, y)?;
    let xc = stats.centered_design();
    let top = lambda_max(xc, &yc);
    if top == 0.0 {
        return Ok(CvCurve {
            lambdas: vec![0.0],
            errors: vec![yc.norm_squared() / n as f64],
            chosen_index: 0,
        });
    }
    let lambdas = log_grid(top, DEFAULT_PATH_POINTS, DEFAULT_PATH_RATIO);

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; n];
    for (i, &obs) in perm.iter().enumerate() {
        fold_of[obs] = i % folds;
    }

    let opts = path_options();
    let per_fold: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
            let mut xt = xc.select_rows(train.iter());
            let mut yt = DVector::from_iterator(train.len(), train.iter().map(|&i| yc[i]));
            let nt = train.len() as f64;
            let means: Vec<f64> = xt.column_iter().map(|c| c.sum() / nt).collect();
            for (j, mut col) in xt.column_iter_mut().enumerate() {
                col.add_scalar_mut(-means[j]);
            }
            let ymean = yt.mean();
            yt.add_scalar_mut(-ymean);
            let mut cd = CoordinateDescent::new(&xt, &yt);
            cd.path(&lambdas, &opts)
                .iter()
                .map(|res| {
                    test.iter()
                        .map(|&i| {
                            let mut pred = ymean;
                            for j in 0..xc.ncols() {
                                if res.beta[j] != 0.0 {
                                    pred += (xc[(i, j)] - means[j]) * res.beta[j];
                                }
                            }
                            (yc[i] - pred).powi(2)
                        })
                        .sum::<f64>()
                })
                .collect()
        })
        .collect();

    let errors: Vec<f64> = (0..lambdas.len())
        .map(|k| per_fold.iter().map(|f| f[k]).sum::<f64>() / n as f64)
        .collect();
    let mut chosen_index = 0;
    for k in 1..errors.len() {
        if errors[k] < errors[chosen_index] {
            chosen_index = k;
        }
    }
    Ok(CvCurve {
        lambdas,
        errors,
        chosen_index,
    })
}

/// Cross-validated LASSO: picks lambda by k-fold CV, then refits on all rows
/// with a warm-started path down to the chosen value.
pub fn select_lasso(stats: &CenteredStats, y: &DVector<f64>, folds: usize, seed: u64) -> Result<MainEffectsFit> {
    let curve = cross_validate(stats, y, folds, seed)?;
    let yc = centered_response(stats, y)?;
    let mut cd = CoordinateDescent::new(stats.centered_design(), &yc);
    let opts = path_options();
    let mut last = None;
    for &l in &curve.lambdas[..=curve.chosen_index] {
        last = Some(cd.solve(l, &opts));
    }
    let res = last.expect("grid is never empty");
    Ok(into_fit(stats, y, res))
}

/// A fit with every coefficient at zero (used when main effects are
/// switched off).
pub fn zero_fit(stats: &CenteredStats, y: &DVector<f64>) -> MainEffectsFit {
    MainEffectsFit {
        beta: DVector::zeros(stats.p()),
        intercept: y.mean(),
        lambda: f64::INFINITY,
        support: Vec::new(),
        converged: true,
        kkt_residual: 0.0,
        sweeps: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{center, Dataset};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_dataset(n: usize, p: usize, seed: u64, beta: &[f64], noise: f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut y = DVector::from_fn(n, |_, _| noise * rng.sample::<f64, _>(StandardNormal));
        for (j, b) in beta.iter().enumerate() {
            y.axpy(*b, &x.column(j), 1.0);
        }
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn large_lambda_gives_zero() {
        let ds = gaussian_dataset(40, 5, 1, &[1.0, -2.0], 0.5);
        let st = center(&ds);
        let yc = ds.y().add_scalar(-ds.y().mean());
        let top = lambda_max(st.centered_design(), &yc);
        let fit = fit_lasso(&st, ds.y(), top).unwrap();
        assert!(fit.beta.iter().all(|b| *b == 0.0));
        assert!(fit.support.is_empty());
        let fit = fit_lasso(&st, ds.y(), 10.0 * top).unwrap();
        assert!(fit.support.is_empty());
    }

    #[test]
    fn zero_lambda_is_ordinary_least_squares() {
        let ds = gaussian_dataset(60, 4, 2, &[1.0, -0.5, 0.0, 2.0], 0.3);
        let st = center(&ds);
        let fit = fit_lasso(&st, ds.y(), 0.0).unwrap();
        let xc = st.centered_design();
        let yc = ds.y().add_scalar(-ds.y().mean());
        let ols = (xc.transpose() * xc).lu().solve(&(xc.transpose() * &yc)).unwrap();
        assert!((fit.beta - ols).amax() <= 1e-8);
        assert!(fit.converged);
    }

    #[test]
    fn kkt_residual_within_contract() {
        for form in [true, false] {
            let ds = gaussian_dataset(50, 8, 3, &[1.0, 0.0, -1.0, 0.5], 1.0);
            let st = center(&ds);
            let yc = ds.y().add_scalar(-ds.y().mean());
            let mut cd = CoordinateDescent::with_form(st.centered_design(), &yc, form);
            let res = cd.solve(0.1, &CdOptions::default());
            assert!(res.converged);
            assert!(res.kkt_residual <= 1e-6 * 1.0);
        }
    }

    #[test]
    fn both_forms_agree() {
        let ds = gaussian_dataset(30, 6, 9, &[2.0, 0.0, -1.0], 0.5);
        let st = center(&ds);
        let yc = ds.y().add_scalar(-ds.y().mean());
        let a = CoordinateDescent::with_form(st.centered_design(), &yc, true).solve(0.05, &CdOptions::default());
        let b = CoordinateDescent::with_form(st.centered_design(), &yc, false).solve(0.05, &CdOptions::default());
        assert!((a.beta - b.beta).amax() < 1e-9);
    }

    // Grid search over a box followed by golden-section coordinate refinement;
    // shares nothing with the coordinate-descent code path.
    fn grid_refined_minimizer(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let f = |b0: f64, b1: f64| lasso_objective(x, y, &DVector::from_vec(vec![b0, b1]), lambda);
        let (mut best, mut bv) = ((0.0, 0.0), f(0.0, 0.0));
        let steps = 400;
        for i in 0..=steps {
            for j in 0..=steps {
                let b0 = -5.0 + 10.0 * i as f64 / steps as f64;
                let b1 = -5.0 + 10.0 * j as f64 / steps as f64;
                let v = f(b0, b1);
                if v < bv {
                    bv = v;
                    best = (b0, b1);
                }
            }
        }
        let mut h = 10.0 / steps as f64;
        let (mut b0, mut b1) = best;
        // pattern search with shrinking step, including exact-zero probes
        while h > 1e-12 {
            let mut improved = false;
            for (c0, c1) in [
                (b0 + h, b1),
                (b0 - h, b1),
                (b0, b1 + h),
                (b0, b1 - h),
                (0.0, b1),
                (b0, 0.0),
            ] {
                let v = f(c0, c1);
                if v < bv {
                    bv = v;
                    b0 = c0;
                    b1 = c1;
                    improved = true;
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        DVector::from_vec(vec![b0, b1])
    }

    #[test]
    fn two_dimensional_matches_grid_oracle() {
        for (seed, lambda) in [(4u64, 0.2), (5, 0.6), (6, 0.05)] {
            let ds = gaussian_dataset(25, 2, seed, &[1.5, -0.7], 0.8);
            let st = center(&ds);
            let fit = fit_lasso(&st, ds.y(), lambda).unwrap();
            let yc = ds.y().add_scalar(-ds.y().mean());
            let oracle = grid_refined_minimizer(st.centered_design(), &yc, lambda);
            assert!((fit.beta - oracle).amax() <= 1e-5, "seed {seed}");
        }
    }

    #[test]
    fn objective_nonincreasing_across_sweeps() {
        let ds = gaussian_dataset(40, 10, 7, &[1.0, 1.0, 1.0, -1.0], 1.0);
        let st = center(&ds);
        let yc = ds.y().add_scalar(-ds.y().mean());
        for form in [true, false] {
            let mut cd = CoordinateDescent::with_form(st.centered_design(), &yc, form);
            let opts = CdOptions {
                record_objective: true,
                ..CdOptions::default()
            };
            let res = cd.solve(0.05, &opts);
            assert!(res.objective_trace.len() > 2);
            for w in res.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
            }
        }
    }

    #[test]
    fn warm_path_matches_cold_starts() {
        let ds = gaussian_dataset(80, 20, 8, &[1.0, 0.5, 0.0, -0.8], 1.0);
        let st = center(&ds);
        let yc = ds.y().add_scalar(-ds.y().mean());
        let xc = st.centered_design();
        let grid = log_grid(lambda_max(xc, &yc), DEFAULT_PATH_POINTS, DEFAULT_PATH_RATIO);
        let mut cd = CoordinateDescent::new(xc, &yc);
        let path = cd.path(&grid, &CdOptions::default());
        for &k in &[5usize, 25, 49] {
            let cold = fit_lasso(&st, ds.y(), grid[k]).unwrap();
            let warm_obj = lasso_objective(xc, &yc, &path[k].beta, grid[k]);
            let cold_obj = lasso_objective(xc, &yc, &cold.beta, grid[k]);
            assert!((warm_obj - cold_obj).abs() <= 1e-8, "k={k}");
        }
    }

    #[test]
    fn leave_one_out_matches_direct_computation() {
        let ds = gaussian_dataset(10, 2, 10, &[1.0, -1.0], 0.5);
        let st = center(&ds);
        let curve = cross_validate(&st, ds.y(), 10, 99).unwrap();
        for (k, &lambda) in curve.lambdas.iter().enumerate() {
            let mut sse = 0.0;
            for i in 0..10 {
                let rows: Vec<usize> = (0..10).filter(|&r| r != i).collect();
                let sub = ds.select_rows(&rows).unwrap();
                let sst = center(&sub);
                let fit = fit_lasso(&sst, sub.y(), lambda).unwrap();
                let xi = ds.x().row(i).transpose();
                let pred = fit.intercept + xi.dot(&fit.beta);
                sse += (ds.y()[i] - pred).powi(2);
            }
            assert!((curve.errors[k] - sse / 10.0).abs() <= 1e-7, "lambda index {k}");
        }
    }

    #[test]
    fn strong_single_signal_is_selected() {
        let ds = gaussian_dataset(100, 20, 12, &[3.0], 0.5);
        let st = center(&ds);
        let fit = select_lasso(&st, ds.y(), 10, 1).unwrap();
        assert!(fit.support.contains(&0));
    }

    #[test]
    fn pure_noise_selects_small_supports() {
        let mut small = 0;
        let runs = 20;
        for seed in 0..runs {
            let ds = gaussian_dataset(200, 50, 1000 + seed, &[], 1.0);
            let st = center(&ds);
            let fit = select_lasso(&st, ds.y(), 10, seed).unwrap();
            if fit.support.len() <= 10 {
                small += 1;
            }
        }
        assert!(small as f64 >= 0.9 * runs as f64, "{small} of {runs}");
    }

    #[test]
    fn cv_is_deterministic_and_validates_folds() {
        let ds = gaussian_dataset(30, 5, 13, &[1.0], 1.0);
        let st = center(&ds);
        let a = select_lasso(&st, ds.y(), 5, 7).unwrap();
        let b = select_lasso(&st, ds.y(), 5, 7).unwrap();
        assert_eq!(a, b);
        assert!(select_lasso(&st, ds.y(), 31, 7).is_err());
        assert!(select_lasso(&st, ds.y(), 1, 7).is_err());
    }

    #[test]
    fn negative_lambda_is_rejected() {
        let ds = gaussian_dataset(10, 2, 1, &[1.0], 1.0);
        let st = center(&ds);
        assert!(fit_lasso(&st, ds.y(), -1.0).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(4.0, 3, 0.25);
        assert_eq!(g[0], 4.0);
        assert!((g[1] - 2.0).abs() < 1e-15);
        assert_eq!(g[2], 1.0);
    }
}
