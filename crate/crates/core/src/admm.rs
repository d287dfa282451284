//! ADMM for
//!
//! ```text
//! min_B  tr(B^T S B S) - tr(B Lambda) + lambda * ||B||_1
//! ```
//!
//! with `S` the sample covariance. The smooth part is split from the penalty
//! through `Psi = B`; the B update is a Sylvester-type equation
//! `2 S B S + rho B = Lambda^k` solved in closed form from the eigenpairs of
//! `S`, so each iteration costs `O(min(n, p) p^2)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{PieError, Result};
use crate::matrix::{gemm, is_exactly_symmetric, symmetrize_in_place, SymmetricMatrix};
use crate::moments::CenteredStats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Augmented-Lagrangian step size.
    pub rho: f64,
    /// Relative tolerance on the primal and dual residuals.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rho: 1.0,
            tol: 1e-4,
            max_iter: 1000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(PieError::InvalidParameter {
                name: "rho",
                reason: format!("must be positive and finite, got {}", self.rho),
            });
        }
        if !(self.tol > 0.0) {
            return Err(PieError::InvalidParameter {
                name: "tol",
                reason: format!("must be positive, got {}", self.tol),
            });
        }
        if self.max_iter == 0 {
            return Err(PieError::InvalidParameter {
                name: "max_iter",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct InteractionFit {
    /// Final thresholded iterate `Psi`; exactly sparse and symmetric.
    pub omega: SymmetricMatrix,
    pub lambda: f64,
    pub iterations: usize,
    /// `||B^k - Psi^k||_F` per iteration.
    pub primal_residuals: Vec<f64>,
    /// `rho ||Psi^k - Psi^{k-1}||_F` per iteration.
    pub dual_residuals: Vec<f64>,
    pub converged: bool,
    pub kkt_residual: f64,
}

/// Iterates carried between solves on a lambda path.
#[derive(Debug, Clone)]
pub struct AdmmState {
    b: DMatrix<f64>,
    psi: DMatrix<f64>,
    dual: DMatrix<f64>,
}

impl AdmmState {
    pub fn zeros(p: usize) -> Self {
        Self {
            b: DMatrix::zeros(p, p),
            psi: DMatrix::zeros(p, p),
            dual: DMatrix::zeros(p, p),
        }
    }

    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }
}

fn soft(a: f64, t: f64) -> f64 {
    if a > t {
        a - t
    } else if a < -t {
        a + t
    } else {
        0.0
    }
}

/// Entrywise `sign(a) * max(|a| - t, 0)`.
pub fn soft_threshold(a: &SymmetricMatrix, t: f64) -> SymmetricMatrix {
    a.map(|v| soft(v, t))
}

/// Closed-form solver for `2 S B S + rho B = Lambda^k`, with scratch space
/// reused across iterations.
pub struct BStepSolver<'a> {
    u: &'a DMatrix<f64>,
    rho: f64,
    /// `D_kl = 2 d_k d_l / (2 d_k d_l + rho)`, `m x m`.
    weights: DMatrix<f64>,
    lu: DMatrix<f64>,
    core: DMatrix<f64>,
    back: DMatrix<f64>,
}

impl<'a> BStepSolver<'a> {
    pub fn new(stats: &'a CenteredStats, rho: f64) -> Self {
        let u = stats.eigenvectors();
        let d = stats.eigenvalues();
        let (p, m) = u.shape();
        let weights = DMatrix::from_fn(m, m, |k, l| {
            let t = 2.0 * d[k] * d[l];
            t / (t + rho)
        });
        Self {
            u,
            rho,
            weights,
            lu: DMatrix::zeros(p, m),
            core: DMatrix::zeros(m, m),
            back: DMatrix::zeros(p, m),
        }
    }

    /// `out = rho^-1 Lambda^k - rho^-1 U {D o (U^T Lambda^k U)} U^T`.
    pub fn solve_into(&mut self, lambda_k: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        gemm(1.0, lambda_k, false, self.u, false, 0.0, &mut self.lu);
        gemm(1.0, self.u, true, &self.lu, false, 0.0, &mut self.core);
        self.core.component_mul_assign(&self.weights);
        gemm(1.0, self.u, false, &self.core, false, 0.0, &mut self.back);
        out.copy_from(lambda_k);
        gemm(-1.0, &self.back, false, self.u, true, 1.0, out);
        *out /= self.rho;
        // The exact solution is symmetric; this only removes roundoff.
        symmetrize_in_place(out);
    }
}

/// One B update: the solution of `2 S B S + rho B = Lambda^k`.
pub fn b_step(lambda_k: &SymmetricMatrix, stats: &CenteredStats, rho: f64) -> SymmetricMatrix {
    let p = lambda_k.dim();
    let mut solver = BStepSolver::new(stats, rho);
    let mut out = DMatrix::zeros(p, p);
    solver.solve_into(lambda_k.as_matrix(), &mut out);
    SymmetricMatrix::from_exact_unchecked(out)
}

/// `S B S` computed through the eigenpairs of `S`.
pub fn sandwich(b: &DMatrix<f64>, stats: &CenteredStats) -> DMatrix<f64> {
    let u = stats.eigenvectors();
    let d = stats.eigenvalues();
    let (p, m) = u.shape();
    let mut bu = DMatrix::zeros(p, m);
    gemm(1.0, b, false, u, false, 0.0, &mut bu);
    let mut core = DMatrix::zeros(m, m);
    gemm(1.0, u, true, &bu, false, 0.0, &mut core);
    for l in 0..m {
        for k in 0..m {
            core[(k, l)] *= d[k] * d[l];
        }
    }
    let mut back = DMatrix::zeros(p, m);
    gemm(1.0, u, false, &core, false, 0.0, &mut back);
    let mut out = DMatrix::zeros(p, p);
    gemm(1.0, &back, false, u, true, 0.0, &mut out);
    out
}

/// `tr(B^T S B S) - tr(B Lambda) + lambda ||B||_1` for symmetric `B`.
pub fn pie_objective(b: &SymmetricMatrix, stats: &CenteredStats, lambda_hat: &SymmetricMatrix, lambda: f64) -> f64 {
    let u = stats.eigenvectors();
    let d = stats.eigenvalues();
    let (p, m) = u.shape();
    let mut bu = DMatrix::zeros(p, m);
    gemm(1.0, b.as_matrix(), false, u, false, 0.0, &mut bu);
    let mut core = DMatrix::zeros(m, m);
    gemm(1.0, u, true, &bu, false, 0.0, &mut core);
    let mut quad = 0.0;
    for l in 0..m {
        for k in 0..m {
            quad += d[k] * d[l] * core[(k, l)] * core[(k, l)];
        }
    }
    let linear = b.as_matrix().dot(lambda_hat.as_matrix());
    let l1: f64 = b.as_matrix().iter().map(|v| v.abs()).sum();
    quad - linear + lambda * l1
}

/// Worst violation of the subgradient optimality conditions at `b`.
///
/// With `G = 2 S B S - Lambda`: `|G + lambda sign(B)|` on the support and
/// `max(0, |G| - lambda)` off it.
pub fn kkt_residual(b: &SymmetricMatrix, stats: &CenteredStats, lambda_hat: &SymmetricMatrix, lambda: f64) -> f64 {
    let g = sandwich(b.as_matrix(), stats) * 2.0 - lambda_hat.as_matrix();
    let bm = b.as_matrix();
    let mut worst = 0.0_f64;
    for (bv, gv) in bm.iter().zip(g.iter()) {
        let v = if *bv > 0.0 {
            (gv + lambda).abs()
        } else if *bv < 0.0 {
            (gv - lambda).abs()
        } else {
            (gv.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

fn check_inputs(stats: &CenteredStats, lambda_hat: &SymmetricMatrix, lambda: f64, opts: &SolverOptions) -> Result<()> {
    opts.validate()?;
    if !(lambda >= 0.0) {
        return Err(PieError::InvalidParameter {
            name: "lambda",
            reason: format!("must be nonnegative, got {lambda}"),
        });
    }
    if lambda_hat.dim() != stats.p() {
        return Err(PieError::DimensionMismatch {
            what: "moment matrix",
            expected: stats.p(),
            got: lambda_hat.dim(),
        });
    }
    Ok(())
}

/// Cold-start solve from `B = Psi = L = 0`.
pub fn solve_pie(
    stats: &CenteredStats,
    lambda_hat: &SymmetricMatrix,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<InteractionFit> {
    let mut state = AdmmState::zeros(stats.p());
    solve_pie_warm(stats, lambda_hat, lambda, opts, &mut state)
}

/// Solve starting from (and updating) `state`.
pub fn solve_pie_warm(
    stats: &CenteredStats,
    lambda_hat: &SymmetricMatrix,
    lambda: f64,
    opts: &SolverOptions,
    state: &mut AdmmState,
) -> Result<InteractionFit> {
    check_inputs(stats, lambda_hat, lambda, opts)?;
    let p = stats.p();
    if state.b.nrows() != p {
        return Err(PieError::DimensionMismatch {
            what: "warm-start state",
            expected: p,
            got: state.b.nrows(),
        });
    }

    // The origin satisfies the subgradient condition; no iterations needed.
    if lambda >= lambda_hat.max_abs() {
        *state = AdmmState::zeros(p);
        return Ok(InteractionFit {
            omega: SymmetricMatrix::zeros(p),
            lambda,
            iterations: 0,
            primal_residuals: Vec::new(),
            dual_residuals: Vec::new(),
            converged: true,
            kkt_residual: 0.0,
        });
    }

    let rho = opts.rho;
    let threshold = lambda / rho;
    let target = lambda_hat.as_matrix();
    let mut solver = BStepSolver::new(stats, rho);
    let mut lambda_k = DMatrix::zeros(p, p);
    let mut psi_prev = state.psi.clone();
    let mut primal = Vec::new();
    let mut dual_res = Vec::new();
    let mut converged = false;

    for _ in 0..opts.max_iter {
        // Lambda^k = Lambda - L^k + rho Psi^k
        lambda_k.copy_from(target);
        lambda_k.zip_zip_apply(&state.dual, &state.psi, |lk, l, psi| *lk += rho * psi - l);
        solver.solve_into(&lambda_k, &mut state.b);

        psi_prev.copy_from(&state.psi);
        let inv_rho = 1.0 / rho;
        state.psi.zip_zip_apply(&state.b, &state.dual, |psi, b, l| {
            *psi = soft(b + inv_rho * l, threshold)
        });

        let mut r2 = 0.0;
        let mut s2 = 0.0;
        let mut psi2 = 0.0;
        for ((l, b), (psi, prev)) in state
            .dual
            .iter_mut()
            .zip(state.b.iter())
            .zip(state.psi.iter().zip(psi_prev.iter()))
        {
            let gap = b - psi;
            *l += rho * gap;
            r2 += gap * gap;
            let step = psi - prev;
            s2 += step * step;
            psi2 += psi * psi;
        }
        debug_assert!(is_exactly_symmetric(&state.psi));
        debug_assert!(is_exactly_symmetric(&state.dual));

        let r = r2.sqrt();
        let s = rho * s2.sqrt();
        primal.push(r);
        dual_res.push(s);
        if r.max(s) <= opts.tol * psi2.sqrt().max(1.0) {
            converged = true;
            break;
        }
    }

    let omega = SymmetricMatrix::from_exact_unchecked(state.psi.clone());
    let kkt = kkt_residual(&omega, stats, lambda_hat, lambda);
    if !converged {
        log::warn!(
            "ADMM hit max_iter={} at lambda {lambda:.4e}; last primal residual {:.3e}",
            opts.max_iter,
            primal.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(InteractionFit {
        omega,
        lambda,
        iterations: primal.len(),
        primal_residuals: primal,
        dual_residuals: dual_res,
        converged,
        kkt_residual: kkt,
    })
}

/// Unpenalized minimizer `S^+ Lambda S^+ / 2` from the eigenpairs (pseudo-
/// inverse on the zero eigenspace).
pub fn unpenalized_solution(stats: &CenteredStats, lambda_hat: &SymmetricMatrix) -> SymmetricMatrix {
    let u = stats.eigenvectors();
    let d = stats.eigenvalues();
    let dmax = d.max();
    let inv = DVector::from_iterator(d.len(), d.iter().map(|v| if *v > 1e-12 * dmax { 1.0 / v } else { 0.0 }));
    let core = u.transpose() * lambda_hat.as_matrix() * u;
    let scaled = DMatrix::from_fn(d.len(), d.len(), |k, l| 0.5 * inv[k] * inv[l] * core[(k, l)]);
    SymmetricMatrix::symmetrize(u * scaled * u.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{center, lambda_y, Dataset};
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn sym(rows: &[&[f64]]) -> SymmetricMatrix {
        let p = rows.len();
        SymmetricMatrix::try_from_exact(DMatrix::from_fn(p, p, |i, j| rows[i][j])).unwrap()
    }

    /// Stats whose sample covariance is exactly the identity: rows are
    /// `+-sqrt(p) e_k`, so `Xc^T Xc / n = I` with n = 2p.
    fn identity_stats(p: usize) -> CenteredStats {
        let n = 2 * p;
        let s = (p as f64).sqrt();
        let x = DMatrix::from_fn(n, p, |i, j| {
            if i / 2 == j {
                if i % 2 == 0 {
                    s
                } else {
                    -s
                }
            } else {
                0.0
            }
        });
        center(&Dataset::new(x, DVector::zeros(n)).unwrap())
    }

    fn random_instance(n: usize, p: usize, seed: u64) -> (Dataset, CenteredStats, SymmetricMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |i, _| {
            x[(i, 0)] * x[(i, p - 1)] + 0.5 * x[(i, 1)].powi(2) + rng.sample::<f64, _>(StandardNormal)
        });
        let ds = Dataset::new(x, y).unwrap();
        let st = center(&ds);
        let l = lambda_y(&st, ds.y()).unwrap();
        (ds, st, l)
    }

    #[test]
    fn soft_threshold_examples() {
        let a = sym(&[&[3.0, -2.0], &[-2.0, 0.0]]);
        assert_eq!(soft_threshold(&a, 1.0), sym(&[&[2.0, -1.0], &[-1.0, 0.0]]));
        assert_eq!(soft_threshold(&a, 0.0), a);
        assert_eq!(soft_threshold(&a, 3.0).max_abs(), 0.0);
        assert_eq!(soft_threshold(&a, 7.5).max_abs(), 0.0);
    }

    #[test]
    fn b_step_identity_covariance() {
        let st = identity_stats(2);
        assert!((st.sigma().as_matrix() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
        let lk = sym(&[&[4.0, 2.0], &[2.0, 0.0]]);
        let b = b_step(&lk, &st, 2.0);
        let expect = dmatrix![1.0, 0.5; 0.5, 0.0];
        assert!((b.as_matrix() - expect).amax() < 1e-12);
    }

    #[test]
    fn b_step_solves_the_linear_equation() {
        let (_, st, _) = random_instance(20, 3, 1);
        let sigma = st.sigma();
        let s = sigma.as_matrix();
        let lk = sym(&[&[1.0, -0.3, 0.2], &[-0.3, 2.0, 0.7], &[0.2, 0.7, -1.0]]);
        for rho in [0.1, 1.0, 5.0] {
            let b = b_step(&lk, &st, rho);
            // direct substitution
            let resid = 2.0 * s * b.as_matrix() * s + rho * b.as_matrix() - lk.as_matrix();
            assert!(resid.amax() <= 1e-10, "rho {rho}");
        }
    }

    #[test]
    fn b_step_matches_kronecker_system_when_rank_deficient() {
        let (_, st, _) = random_instance(3, 6, 2);
        let p = 6;
        let s = st.sigma().into_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lk = SymmetricMatrix::symmetrize(DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0)));
        let rho = 0.7;
        let b = b_step(&lk, &st, rho);
        // (2 S kron S + rho I) vec(B) = vec(Lk), column-major vec
        let q = p * p;
        let kron = DMatrix::from_fn(q, q, |r, c| {
            let (i, j) = (r % p, r / p);
            let (k, l) = (c % p, c / p);
            2.0 * s[(i, k)] * s[(j, l)] + if r == c { rho } else { 0.0 }
        });
        let rhs = DVector::from_column_slice(lk.as_matrix().as_slice());
        let vec_b = kron.lu().solve(&rhs).unwrap();
        let dense = DMatrix::from_column_slice(p, p, vec_b.as_slice());
        assert!((b.as_matrix() - dense).amax() <= 1e-8);
    }

    #[test]
    fn large_lambda_gives_zero_omega() {
        let (_, st, l) = random_instance(30, 4, 4);
        let fit = solve_pie(&st, &l, l.max_abs(), &SolverOptions::default()).unwrap();
        assert_eq!(fit.omega.max_abs(), 0.0);
        assert!(fit.converged);
        assert_eq!(kkt_residual(&fit.omega, &st, &l, l.max_abs()), 0.0);
    }

    #[test]
    fn separable_identity_case() {
        let st = identity_stats(2);
        let lh = sym(&[&[4.0, 1.0], &[1.0, 4.0]]);
        let opts = SolverOptions {
            tol: 1e-12,
            max_iter: 10_000,
            ..SolverOptions::default()
        };
        let fit = solve_pie(&st, &lh, 2.0, &opts).unwrap();
        assert!(fit.converged);
        let expect = dmatrix![1.0, 0.0; 0.0, 1.0];
        assert!((fit.omega.as_matrix() - expect).amax() < 1e-9);
        assert_eq!(fit.omega.get(0, 1), 0.0);

        let exact = SymmetricMatrix::identity(2);
        assert!(kkt_residual(&exact, &st, &lh, 2.0) <= 1e-12);
    }

    #[test]
    fn kkt_certificate_on_converged_fit() {
        let (_, st, l) = random_instance(60, 8, 5);
        let lambda = 0.2 * l.max_abs();
        let fit = solve_pie(&st, &l, lambda, &SolverOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.kkt_residual <= 1e-3 * lambda.max(l.max_abs()));
    }

    #[test]
    fn scaling_covariance() {
        let (_, st, l) = random_instance(40, 4, 6);
        let opts = SolverOptions {
            tol: 1e-13,
            max_iter: 20_000,
            ..SolverOptions::default()
        };
        let lambda = 0.15 * l.max_abs();
        let base = solve_pie(&st, &l, lambda, &opts).unwrap();
        for c in [0.5, 3.0] {
            let fit = solve_pie(&st, &l.scale(c), c * lambda, &opts).unwrap();
            let diff = fit.omega.as_matrix() - base.omega.as_matrix() * c;
            assert!(diff.amax() <= 1e-10 * c.max(1.0), "c={c} diff={}", diff.amax());
        }
    }

    #[test]
    fn fixed_point_is_rho_independent() {
        let (_, st, l) = random_instance(50, 5, 7);
        let lambda = 0.1 * l.max_abs();
        let fits: Vec<_> = [0.3, 1.0, 4.0]
            .iter()
            .map(|&rho| {
                solve_pie(
                    &st,
                    &l,
                    lambda,
                    &SolverOptions {
                        rho,
                        tol: 1e-12,
                        max_iter: 50_000,
                    },
                )
                .unwrap()
            })
            .collect();
        for f in &fits[1..] {
            assert!((f.omega.as_matrix() - fits[0].omega.as_matrix()).amax() <= 1e-6);
        }
    }

    #[test]
    fn warm_start_reaches_same_objective() {
        let (_, st, l) = random_instance(50, 6, 8);
        let opts = SolverOptions::default();
        let mut state = AdmmState::zeros(6);
        for frac in [0.5, 0.3, 0.1] {
            let lambda = frac * l.max_abs();
            let warm = solve_pie_warm(&st, &l, lambda, &opts, &mut state).unwrap();
            let cold = solve_pie(&st, &l, lambda, &opts).unwrap();
            let ow = pie_objective(&warm.omega, &st, &l, lambda);
            let oc = pie_objective(&cold.omega, &st, &l, lambda);
            assert!((ow - oc).abs() <= 1e-6 * (1.0 + oc.abs()), "frac {frac}: {ow} vs {oc}");
        }
    }

    #[test]
    fn objective_matches_trace_formula() {
        let (_, st, l) = random_instance(15, 4, 9);
        let b = soft_threshold(&l, 0.1 * l.max_abs());
        let s = st.sigma().into_matrix();
        let bm = b.as_matrix();
        let direct = (bm.transpose() * &s * bm * &s).trace() - (bm * l.as_matrix()).trace()
            + 0.3 * bm.iter().map(|v| v.abs()).sum::<f64>();
        let fast = pie_objective(&b, &st, &l, 0.3);
        assert!((direct - fast).abs() <= 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn invalid_options_are_rejected() {
        let (_, st, l) = random_instance(10, 3, 10);
        for opts in [
            SolverOptions {
                rho: 0.0,
                ..Default::default()
            },
            SolverOptions {
                tol: 0.0,
                ..Default::default()
            },
            SolverOptions {
                max_iter: 0,
                ..Default::default()
            },
        ] {
            assert!(solve_pie(&st, &l, 0.1, &opts).is_err());
        }
        assert!(solve_pie(&st, &l, -1.0, &SolverOptions::default()).is_err());
    }

    #[test]
    fn max_iter_exhaustion_is_flagged() {
        let (_, st, l) = random_instance(30, 5, 11);
        let opts = SolverOptions {
            max_iter: 3,
            tol: 1e-12,
            ..Default::default()
        };
        let fit = solve_pie(&st, &l, 0.05 * l.max_abs(), &opts).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 3);
        assert_eq!(fit.primal_residuals.len(), 3);
    }
}
