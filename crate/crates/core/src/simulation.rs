//! Data-generating processes, the Monte Carlo replication harness and the
//! noise-augmentation protocol for real covariates.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal, StudentT, Uniform};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PieError, Result};
use crate::evaluation::{fit_all_pairs, oracle_fit, MetricReport, Truth};
use crate::matrix::SymmetricMatrix;
use crate::moments::Dataset;
use crate::tuning::{fit_pier, fit_piey, PieFit, PieOptions};

const COVARIATE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const INDEX_STREAM: u64 = 2;

/// Noise columns of each kind appended by [`noise_augment`].
pub const NOISE_BLOCK: usize = 50;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    GaussianAr,
    FactorUniform,
    FactorT5,
    FactorLaplace,
    GaussianIdentity,
}

impl LawKind {
    pub const ALL: [LawKind; 5] = [
        LawKind::GaussianAr,
        LawKind::FactorUniform,
        LawKind::FactorT5,
        LawKind::FactorLaplace,
        LawKind::GaussianIdentity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LawKind::GaussianAr => "gaussian_ar",
            LawKind::FactorUniform => "factor_uniform",
            LawKind::FactorT5 => "factor_t5",
            LawKind::FactorLaplace => "factor_laplace",
            LawKind::GaussianIdentity => "gaussian_identity",
        }
    }

    /// Fourth moment of the unit-variance innovation.
    pub fn kurtosis(self) -> f64 {
        match self {
            LawKind::GaussianAr | LawKind::GaussianIdentity => 3.0,
            LawKind::FactorUniform => 1.8,
            LawKind::FactorT5 => 9.0,
            LawKind::FactorLaplace => 6.0,
        }
    }

    /// One draw with mean 0 and variance 1.
    pub fn innovation<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            LawKind::GaussianAr | LawKind::GaussianIdentity => rng.sample(StandardNormal),
            LawKind::FactorUniform => {
                let h = 3.0_f64.sqrt();
                rng.sample(Uniform::new_inclusive(-h, h).expect("valid bounds"))
            }
            LawKind::FactorT5 => {
                let t: f64 = rng.sample(StudentT::new(5.0).expect("valid dof"));
                t * (3.0_f64 / 5.0).sqrt()
            }
            LawKind::FactorLaplace => {
                let e: f64 = rng.sample(Exp1);
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * e / std::f64::consts::SQRT_2
            }
        }
    }
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LawKind {
    type Err = PieError;

    fn from_str(s: &str) -> Result<Self> {
        LawKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PieError::InvalidParameter {
                name: "law",
                reason: format!(
                    "unknown law '{s}'; valid: {}",
                    LawKind::ALL.map(|k| k.name()).join(", ")
                ),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovariateLaw {
    pub kind: LawKind,
    /// `a` in `Sigma_kl = a^|k - l|`; ignored for the identity law.
    pub ar_coefficient: f64,
}

impl CovariateLaw {
    pub fn new(kind: LawKind) -> Self {
        let a = if kind == LawKind::GaussianIdentity { 0.0 } else { 0.5 };
        Self {
            kind,
            ar_coefficient: a,
        }
    }

    pub fn kurtosis(&self) -> f64 {
        self.kind.kurtosis()
    }

    /// Population covariance.
    pub fn sigma(&self, p: usize) -> SymmetricMatrix {
        let a = self.effective_ar();
        SymmetricMatrix::from_lower_fn(p, |k, l| a.powi((k - l) as i32))
    }

    fn effective_ar(&self) -> f64 {
        if self.kind == LawKind::GaussianIdentity {
            0.0
        } else {
            self.ar_coefficient
        }
    }
}

impl Default for CovariateLaw {
    fn default() -> Self {
        Self::new(LawKind::GaussianAr)
    }
}

/// Applies the lower-triangular square root of the AR covariance to each
/// row of i.i.d. innovations in place: `x_1 = z_1`,
/// `x_k = a x_{k-1} + sqrt(1 - a^2) z_k`.
pub fn ar_transform(z: &mut DMatrix<f64>, a: f64) {
    let c = (1.0 - a * a).sqrt();
    for k in 1..z.ncols() {
        for i in 0..z.nrows() {
            z[(i, k)] = a * z[(i, k - 1)] + c * z[(i, k)];
        }
    }
}

pub fn gen_innovations(kind: LawKind, n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_for(seed, COVARIATE_STREAM);
    let mut z = DMatrix::zeros(n, p);
    for i in 0..n {
        for k in 0..p {
            z[(i, k)] = kind.innovation(&mut rng);
        }
    }
    z
}

/// `n x p` draws of `x = Sigma^{1/2} z` with a lower-triangular root.
pub fn gen_covariates(law: &CovariateLaw, n: usize, p: usize, seed: u64) -> Result<DMatrix<f64>> {
    let a = law.effective_ar();
    if !(a.abs() < 1.0) {
        return Err(PieError::InvalidParameter {
            name: "ar_coefficient",
            reason: format!("must lie in (-1, 1), got {a}"),
        });
    }
    let mut z = gen_innovations(law.kind, n, p, seed);
    if a != 0.0 {
        ar_transform(&mut z, a);
    }
    Ok(z)
}

/// One additive term of a regression formula: a main effect (one index) or
/// a product of two covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub vars: Vec<usize>,
}

impl Term {
    fn main(coef: f64, k: usize) -> Self {
        Self { coef, vars: vec![k] }
    }

    fn product(coef: f64, k: usize, l: usize) -> Self {
        Self { coef, vars: vec![k, l] }
    }

    pub fn eval(&self, x: impl Fn(usize) -> f64) -> f64 {
        self.vars.iter().fold(self.coef, |acc, &k| acc * x(k))
    }
}

/// Reads off `beta` and `Omega` from a formula by matching
/// `x^T beta + x^T Omega x`: a product `c x_k x_l` contributes `c / 2` to
/// both `Omega_kl` and `Omega_lk`, a square `c x_k^2` contributes `c`.
pub fn truth_from_terms(terms: &[Term], p: usize) -> Truth {
    let mut beta = DVector::zeros(p);
    let mut omega = SymmetricMatrix::zeros(p);
    for t in terms {
        match t.vars[..] {
            [k] => beta[k] += t.coef,
            [k, l] if k == l => omega.add_to(k, k, t.coef),
            [k, l] => omega.add_to(k, l, 0.5 * t.coef),
            _ => unreachable!("terms have one or two factors"),
        }
    }
    Truth { beta, omega }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    M1,
    M2,
    M3,
    M4,
    /// `d^{-1/2}` times `d` main effects on top of the pure interaction part.
    Robustness {
        d: usize,
    },
}

const MODEL_NAMES: &str = "m1, m2, m3, m4, robustness:<d>";

impl ModelKind {
    /// Smallest `p` the formula can be evaluated at.
    pub fn min_p(&self) -> usize {
        match self {
            ModelKind::Robustness { d } => 10 + d.saturating_sub(3),
            _ => 10,
        }
    }

    /// Formula terms with 0-based indices. The robustness model draws its
    /// extra main effects from `seed`.
    pub fn terms(&self, p: usize, seed: u64) -> Result<Vec<Term>> {
        if p < self.min_p() {
            return Err(PieError::InvalidParameter {
                name: "p",
                reason: format!("model {self} needs p >= {}, got {p}", self.min_p()),
            });
        }
        let interactions = [
            Term::product(2.0, 0, 5),
            Term::product(1.0, 5, 5),
            Term::product(2.0, 5, 9),
        ];
        let mains: Vec<Term> = match *self {
            ModelKind::M1 => vec![Term::main(1.0, 0), Term::main(1.0, 5), Term::main(1.0, 9)],
            ModelKind::M2 => vec![Term::main(1.0, 5)],
            ModelKind::M3 => vec![Term::main(1.0, 0), Term::main(1.0, 1)],
            ModelKind::M4 => Vec::new(),
            ModelKind::Robustness { d } => {
                if d < 3 {
                    return Err(PieError::InvalidParameter {
                        name: "d",
                        reason: format!("robustness model needs d >= 3, got {d}"),
                    });
                }
                let c = 1.0 / (d as f64).sqrt();
                let mut rng = rng_for(seed, INDEX_STREAM);
                let mut idx = vec![0, 5, 9];
                idx.extend(sample(&mut rng, p - 10, d - 3).into_iter().map(|i| i + 10));
                idx.into_iter().map(|k| Term::main(c, k)).collect()
            }
        };
        Ok(mains.into_iter().chain(interactions).collect())
    }

    pub fn truth(&self, p: usize, seed: u64) -> Result<Truth> {
        Ok(truth_from_terms(&self.terms(p, seed)?, p))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::M1 => f.write_str("m1"),
            ModelKind::M2 => f.write_str("m2"),
            ModelKind::M3 => f.write_str("m3"),
            ModelKind::M4 => f.write_str("m4"),
            ModelKind::Robustness { d } => write!(f, "robustness:{d}"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = PieError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || PieError::InvalidParameter {
            name: "model",
            reason: format!("unknown model '{s}'; valid: {MODEL_NAMES}"),
        };
        match s {
            "m1" => Ok(ModelKind::M1),
            "m2" => Ok(ModelKind::M2),
            "m3" => Ok(ModelKind::M3),
            "m4" => Ok(ModelKind::M4),
            _ => {
                let d = s.strip_prefix("robustness:").ok_or_else(bad)?;
                let d: usize = d.parse().map_err(|_| bad())?;
                Ok(ModelKind::Robustness { d })
            }
        }
    }
}

impl Serialize for ModelKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Evaluates the formula row by row and adds `noise_sd * N(0, 1)` noise.
pub fn gen_response(terms: &[Term], x: &DMatrix<f64>, seed: u64, noise_sd: f64) -> DVector<f64> {
    let mut rng = rng_for(seed, NOISE_STREAM);
    DVector::from_fn(x.nrows(), |i, _| {
        let signal: f64 = terms.iter().map(|t| t.eval(|k| x[(i, k)])).sum();
        let eps: f64 = rng.sample(StandardNormal);
        signal + noise_sd * eps
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Piey,
    Pier,
    AllPairs,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Piey, Method::Pier, Method::AllPairs, Method::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::Piey => "piey",
            Method::Pier => "pier",
            Method::AllPairs => "all_pairs",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PieError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| PieError::InvalidParameter {
                name: "method",
                reason: format!("unknown method '{s}'; valid: piey, pier, all_pairs, oracle"),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSpec {
    pub model: ModelKind,
    pub n: usize,
    pub p: usize,
    pub law: CovariateLaw,
    pub replications: usize,
    pub base_seed: u64,
    pub noise_sd: f64,
}

impl SimulationSpec {
    pub fn new(model: ModelKind, n: usize, p: usize, replications: usize, base_seed: u64) -> Self {
        Self {
            model,
            n,
            p,
            law: CovariateLaw::default(),
            replications,
            base_seed,
            noise_sd: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(PieError::InvalidParameter {
                name: "replications",
                reason: "must be at least 1".into(),
            });
        }
        if self.n < 2 {
            return Err(PieError::TooSmall {
                rows: self.n,
                cols: self.p,
            });
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(PieError::InvalidParameter {
                name: "noise_sd",
                reason: format!("must be nonnegative and finite, got {}", self.noise_sd),
            });
        }
        if self.p < self.model.min_p() {
            return Err(PieError::InvalidParameter {
                name: "p",
                reason: format!("model {} needs p >= {}, got {}", self.model, self.model.min_p(), self.p),
            });
        }
        Ok(())
    }

    pub fn replication_seed(&self, r: usize) -> u64 {
        self.base_seed.wrapping_add(r as u64)
    }

    /// Data and truth for replication `r`.
    pub fn generate(&self, r: usize) -> Result<(Dataset, Truth)> {
        let seed = self.replication_seed(r);
        let terms = self.model.terms(self.p, seed)?;
        let x = gen_covariates(&self.law, self.n, self.p, seed)?;
        let y = gen_response(&terms, &x, seed, self.noise_sd);
        Ok((Dataset::new(x, y)?, truth_from_terms(&terms, self.p)))
    }
}

/// One method on one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRun {
    pub metrics: MetricReport,
    pub chosen_lambda: Option<f64>,
    /// Largest `kkt_residual / max(lambda, ||Lambda||_inf)` over the
    /// converged fits of the interaction path.
    pub max_relative_kkt: Option<f64>,
    /// Path fits that hit the iteration limit.
    pub unconverged_fits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Mean and sample standard deviation (`n - 1` divisor; 0 for one value).
    pub fn of(values: &[f64]) -> Self {
        let k = values.len();
        if k == 0 {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let sd = if k < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub completed: usize,
    /// `(replication, reason)` for each failed run.
    pub missing: Vec<(usize, String)>,
    pub rate: MeanSd,
    pub loss: MeanSd,
    pub size: MeanSd,
    pub time_seconds: MeanSd,
    /// Per replication, `None` where the run failed.
    pub runs: Vec<Option<MethodRun>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub spec: SimulationSpec,
    pub methods: Vec<MethodSummary>,
}

impl ReplicationSummary {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }
}

fn path_diagnostics(fit: &PieFit) -> (Option<f64>, usize) {
    let path = &fit.path;
    let scale = path.lambdas.first().copied().unwrap_or(0.0);
    let mut worst: Option<f64> = None;
    let mut unconverged = 0;
    for f in &path.fits {
        if !f.converged {
            unconverged += 1;
            continue;
        }
        let denom = f.lambda.max(scale);
        let r = if denom > 0.0 {
            f.kkt_residual / denom
        } else {
            f.kkt_residual
        };
        worst = Some(worst.map_or(r, |w: f64| w.max(r)));
    }
    (worst, unconverged)
}

pub fn run_method(method: Method, dataset: &Dataset, truth: &Truth, opts: &PieOptions) -> Result<MethodRun> {
    let start = Instant::now();
    match method {
        Method::Piey | Method::Pier => {
            let fit = if method == Method::Piey {
                fit_piey(dataset, opts)?
            } else {
                fit_pier(dataset, opts)?
            };
            let elapsed = start.elapsed().as_secs_f64();
            let (max_relative_kkt, unconverged_fits) = path_diagnostics(&fit);
            Ok(MethodRun {
                metrics: MetricReport::compute(&fit.model.omega, &truth.omega, elapsed)?,
                chosen_lambda: Some(fit.path.chosen_lambda()),
                max_relative_kkt,
                unconverged_fits,
            })
        }
        Method::AllPairs => {
            let fit = fit_all_pairs(dataset, opts)?;
            let elapsed = start.elapsed().as_secs_f64();
            Ok(MethodRun {
                metrics: MetricReport::compute(&fit.model.omega, &truth.omega, elapsed)?,
                chosen_lambda: Some(fit.lambdas[fit.chosen_index]),
                max_relative_kkt: None,
                unconverged_fits: 0,
            })
        }
        Method::Oracle => {
            let (mut metrics, _) = oracle_fit(dataset, truth)?;
            metrics.time_seconds = start.elapsed().as_secs_f64();
            Ok(MethodRun {
                metrics,
                chosen_lambda: None,
                max_relative_kkt: None,
                unconverged_fits: 0,
            })
        }
    }
}

/// Runs every method on each replication (seed `base_seed + r`) in
/// parallel and aggregates in replication order.
pub fn run_replications(spec: &SimulationSpec, methods: &[Method], opts: &PieOptions) -> Result<ReplicationSummary> {
    spec.validate()?;
    if methods.is_empty() {
        return Err(PieError::InvalidParameter {
            name: "methods",
            reason: "at least one method is required".into(),
        });
    }
    let per_rep: Vec<Vec<std::result::Result<MethodRun, String>>> = (0..spec.replications)
        .into_par_iter()
        .map(|r| match spec.generate(r) {
            Ok((ds, truth)) => methods
                .iter()
                .map(|&m| run_method(m, &ds, &truth, opts).map_err(|e| e.to_string()))
                .collect(),
            Err(e) => methods
                .iter()
                .map(|_| Err(format!("data generation failed: {e}")))
                .collect(),
        })
        .collect();

    let summaries = methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let mut runs = Vec::with_capacity(spec.replications);
            let mut missing = Vec::new();
            for (r, rep) in per_rep.iter().enumerate() {
                match &rep[j] {
                    Ok(run) => runs.push(Some(run.clone())),
                    Err(reason) => {
                        log::warn!("{method} failed on replication {r}: {reason}");
                        missing.push((r, reason.clone()));
                        runs.push(None);
                    }
                }
            }
            let done: Vec<&MethodRun> = runs.iter().flatten().collect();
            let stat =
                |f: fn(&MetricReport) -> f64| MeanSd::of(&done.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
            MethodSummary {
                method,
                completed: done.len(),
                missing,
                rate: stat(|m| m.rate),
                loss: stat(|m| m.loss),
                size: stat(|m| m.size as f64),
                time_seconds: stat(|m| m.time_seconds),
                runs,
            }
        })
        .collect();
    Ok(ReplicationSummary {
        spec: spec.clone(),
        methods: summaries,
    })
}

/// Rescales each covariate column to mean 0 and variance 1 (divisor `n`).
/// Constant columns are only centered.
pub fn standardize(dataset: &Dataset) -> Result<Dataset> {
    let mut x = dataset.x().clone();
    let n = x.nrows() as f64;
    for mut col in x.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
        let sd = (col.norm_squared() / n).sqrt();
        if sd > 0.0 {
            col /= sd;
        } else {
            log::warn!("constant covariate column left unscaled");
        }
    }
    Dataset::new(x, dataset.y().clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Experiment {
    /// Noise columns only.
    NoiseOnly,
    /// Noise columns plus two planted interactions among them.
    PlantedPairs,
}

impl Experiment {
    pub fn from_number(k: u32) -> Result<Self> {
        match k {
            1 => Ok(Experiment::NoiseOnly),
            2 => Ok(Experiment::PlantedPairs),
            _ => Err(PieError::InvalidParameter {
                name: "experiment",
                reason: format!("must be 1 or 2, got {k}"),
            }),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Experiment::NoiseOnly => 1,
            Experiment::PlantedPairs => 2,
        }
    }
}

/// Planted pairs (0-based, `l <= k`) for an input with `p0` columns: the
/// first two standard-normal columns and the last standard-normal column
/// with the first uniform one.
pub fn planted_pairs(p0: usize) -> [(usize, usize); 2] {
    [(p0 + 1, p0), (p0 + NOISE_BLOCK, p0 + NOISE_BLOCK - 1)]
}

/// Appends 50 `N(0, 1)` and 50 `U[-sqrt 3, sqrt 3]` columns; the second
/// experiment also adds `0.5 x_a x_b` for each planted pair to the response.
/// Returns the augmented data and its planted support.
pub fn noise_augment(dataset: &Dataset, seed: u64, experiment: Experiment) -> Result<(Dataset, Vec<(usize, usize)>)> {
    let (n, p0) = (dataset.n(), dataset.p());
    let mut rng = rng_for(seed, COVARIATE_STREAM);
    let mut x = dataset.x().clone().resize_horizontally(p0 + 2 * NOISE_BLOCK, 0.0);
    for k in 0..NOISE_BLOCK {
        for i in 0..n {
            x[(i, p0 + k)] = LawKind::GaussianIdentity.innovation(&mut rng);
        }
    }
    for k in 0..NOISE_BLOCK {
        for i in 0..n {
            x[(i, p0 + NOISE_BLOCK + k)] = LawKind::FactorUniform.innovation(&mut rng);
        }
    }
    add_planted(dataset, x, experiment)
}

fn add_planted(dataset: &Dataset, x: DMatrix<f64>, experiment: Experiment) -> Result<(Dataset, Vec<(usize, usize)>)> {
    let p0 = dataset.p();
    let mut y = dataset.y().clone();
    let planted = match experiment {
        Experiment::NoiseOnly => Vec::new(),
        Experiment::PlantedPairs => {
            let pairs = planted_pairs(p0);
            for i in 0..y.len() {
                for &(k, l) in &pairs {
                    y[i] += 0.5 * x[(i, k)] * x[(i, l)];
                }
            }
            pairs.to_vec()
        }
    };
    Ok((Dataset::new(x, y)?, planted))
}

/// Entry `(k, l)` counts the estimates with a nonzero at `(k, l)`.
pub fn frequency_matrix<'a>(fits: impl IntoIterator<Item = &'a SymmetricMatrix>, p: usize) -> DMatrix<u32> {
    let mut freq = DMatrix::zeros(p, p);
    for omega in fits {
        assert_eq!(omega.dim(), p, "estimate dimension differs from p");
        for (k, l) in omega.lower_support() {
            freq[(k, l)] += 1;
            if k != l {
                freq[(l, k)] += 1;
            }
        }
    }
    freq
}

/// Off-diagonal pairs `(k, l)`, `l < k`, by decreasing count; ties in
/// row-major order.
pub fn top_pairs(freq: &DMatrix<u32>, count: usize) -> Vec<((usize, usize), u32)> {
    let p = freq.nrows();
    let mut pairs: Vec<((usize, usize), u32)> = (0..p)
        .flat_map(|k| (0..k).map(move |l| (k, l)))
        .map(|(k, l)| ((k, l), freq[(k, l)]))
        .filter(|&(_, c)| c > 0)
        .collect();
    pairs.sort_by_key(|p| std::cmp::Reverse(p.1));
    pairs.truncate(count);
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub subsamples: usize,
    pub subsample_size: usize,
    pub seed: u64,
    pub method: Method,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Over the augmented columns.
    pub frequency: DMatrix<u32>,
    pub planted: Vec<(usize, usize)>,
    pub completed: usize,
    pub missing: Vec<(usize, String)>,
}

/// Standardizes, augments once with noise, then fits on random subsamples
/// drawn without replacement and counts the selected interactions.
pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig, opts: &PieOptions) -> Result<ExperimentResult> {
    if !matches!(config.method, Method::Piey | Method::Pier) {
        return Err(PieError::InvalidParameter {
            name: "method",
            reason: format!("experiments support piey and pier, got {}", config.method),
        });
    }
    if config.subsamples == 0 {
        return Err(PieError::InvalidParameter {
            name: "subsamples",
            reason: "must be at least 1".into(),
        });
    }
    let n = dataset.n();
    if config.subsample_size < 2 || config.subsample_size > n {
        return Err(PieError::InvalidParameter {
            name: "subsample_size",
            reason: format!("must lie in [2, {n}], got {}", config.subsample_size),
        });
    }
    let std = standardize(dataset)?;
    let (augmented, planted) = noise_augment(&std, config.seed, config.experiment)?;
    let p = augmented.p();
    let outcomes: Vec<std::result::Result<SymmetricMatrix, String>> = (0..config.subsamples)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_for(config.seed.wrapping_add(s as u64), INDEX_STREAM);
            let rows = sample(&mut rng, n, config.subsample_size).into_vec();
            let sub = augmented.select_rows(&rows).map_err(|e| e.to_string())?;
            let fit = match config.method {
                Method::Pier => fit_pier(&sub, opts),
                _ => fit_piey(&sub, opts),
            };
            fit.map(|f| f.model.omega).map_err(|e| e.to_string())
        })
        .collect();
    let mut fits = Vec::new();
    let mut missing = Vec::new();
    for (s, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(m) => fits.push(m),
            Err(reason) => missing.push((s, reason)),
        }
    }
    Ok(ExperimentResult {
        frequency: frequency_matrix(&fits, p),
        planted,
        completed: fits.len(),
        missing,
    })
}
