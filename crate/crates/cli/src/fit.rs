use nalgebra::DVector;
use pie_core::evaluation::fit_all_pairs;
use pie_core::main_effects::MainEffectsFit;
use pie_core::tuning::PathResult;
use pie_core::{fit_pier, fit_piey, PieOptions, QuadraticModel, SymmetricMatrix};
use serde::Serialize;

use crate::input::read_csv;
use crate::output::{emit, to_csv, to_json, SCHEMA_VERSION};
use crate::{CliError, FitArgs, FitMethod, Format};

#[derive(Debug, Serialize)]
pub struct Triple {
    pub k: usize,
    pub l: usize,
    pub name_k: String,
    pub name_l: String,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct Coef {
    pub index: usize,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Serialize)]
struct PathRow {
    lambda: f64,
    support_size: usize,
    df: usize,
    admissible: bool,
    rss: Option<f64>,
    bic: Option<f64>,
    iterations: Option<usize>,
    converged: Option<bool>,
    kkt_residual: Option<f64>,
}

#[derive(Debug, Serialize)]
struct History {
    primal: Vec<f64>,
    dual: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct MainEffectsInfo {
    lambda: f64,
    converged: bool,
    coefficients: Vec<Coef>,
}

#[derive(Debug, Serialize)]
struct Settings {
    rho: f64,
    tol: f64,
    max_iter: usize,
    lambda: Option<f64>,
    grid_points: usize,
    grid_ratio: f64,
    folds: usize,
    refit_main: bool,
    max_df_fraction: f64,
    seed: u64,
}

impl From<&PieOptions> for Settings {
    fn from(o: &PieOptions) -> Self {
        Self {
            rho: o.solver.rho,
            tol: o.solver.tol,
            max_iter: o.solver.max_iter,
            lambda: o.lambda,
            grid_points: o.grid_points,
            grid_ratio: o.grid_ratio,
            folds: o.folds,
            refit_main: o.refit_main,
            max_df_fraction: o.max_df_fraction,
            seed: o.seed,
        }
    }
}

#[derive(Debug, Serialize)]
struct FitReport {
    schema_version: u32,
    command: &'static str,
    method: &'static str,
    input: String,
    response: String,
    n: usize,
    p: usize,
    /// False when the selected fit stopped at the iteration limit.
    converged: bool,
    partial: bool,
    settings: Settings,
    chosen_index: usize,
    chosen_lambda: f64,
    /// Nonzeros of the penalized estimate at the chosen lambda, `l <= k`.
    support: Vec<Triple>,
    /// Least-squares refit on that support: intercept, main effects and
    /// interaction matrix entries, centered at `mu`.
    alpha: f64,
    beta_support: Vec<Coef>,
    interactions: Vec<Triple>,
    mu: Vec<f64>,
    path: Vec<PathRow>,
    residual_history: Option<History>,
    main_effects: Option<MainEffectsInfo>,
}

#[derive(Debug, Serialize)]
struct CsvRow {
    k: usize,
    l: usize,
    name_k: String,
    name_l: String,
    value: f64,
    refit_value: f64,
}

pub fn triples(m: &SymmetricMatrix, names: &[String]) -> Vec<Triple> {
    m.lower_support()
        .into_iter()
        .map(|(k, l)| Triple {
            k: k + 1,
            l: l + 1,
            name_k: names[k].clone(),
            name_l: names[l].clone(),
            value: m.get(k, l),
        })
        .collect()
}

fn coefs(beta: &DVector<f64>, names: &[String]) -> Vec<Coef> {
    (0..beta.len())
        .filter(|&k| beta[k] != 0.0)
        .map(|k| Coef {
            index: k + 1,
            name: names[k].clone(),
            value: beta[k],
        })
        .collect()
}

fn pie_path_rows(path: &PathResult) -> Vec<PathRow> {
    (0..path.lambdas.len())
        .map(|i| {
            let f = &path.fits[i];
            let r = path.refits[i].as_ref();
            PathRow {
                lambda: path.lambdas[i],
                support_size: f.omega.lower_nonzero_count(),
                df: path.df[i],
                admissible: r.is_some(),
                rss: r.map(|r| r.rss),
                bic: r.map(|_| path.bic[i]),
                iterations: Some(f.iterations),
                converged: Some(f.converged),
                kkt_residual: Some(f.kkt_residual),
            }
        })
        .collect()
}

fn main_info(m: &MainEffectsFit, names: &[String]) -> MainEffectsInfo {
    MainEffectsInfo {
        lambda: m.lambda,
        converged: m.converged,
        coefficients: coefs(&m.beta, names),
    }
}

struct Outcome {
    converged: bool,
    chosen_index: usize,
    chosen_lambda: f64,
    estimate: SymmetricMatrix,
    model: QuadraticModel,
    path: Vec<PathRow>,
    history: Option<History>,
    main: Option<MainEffectsInfo>,
}

fn fit_pie(args: &FitArgs, table: &crate::input::Table, opts: &PieOptions) -> Result<Outcome, CliError> {
    let fit = if args.method == FitMethod::Piey {
        fit_piey(&table.dataset, opts)?
    } else {
        fit_pier(&table.dataset, opts)?
    };
    let chosen = fit.path.chosen_fit();
    Ok(Outcome {
        converged: chosen.converged,
        chosen_index: fit.path.chosen_index,
        chosen_lambda: fit.path.chosen_lambda(),
        estimate: chosen.omega.clone(),
        history: Some(History {
            primal: chosen.primal_residuals.clone(),
            dual: chosen.dual_residuals.clone(),
        }),
        path: pie_path_rows(&fit.path),
        main: fit.main_effects.as_ref().map(|m| main_info(m, &table.names)),
        model: fit.model,
    })
}

fn fit_pairs(table: &crate::input::Table, opts: &PieOptions) -> Result<Outcome, CliError> {
    if opts.lambda.is_some() {
        return Err(CliError::Input(
            "--lambda is not supported with --method all-pairs".into(),
        ));
    }
    let fit = fit_all_pairs(&table.dataset, opts)?;
    let path = (0..fit.lambdas.len())
        .map(|i| {
            let (main, pairs) = &fit.supports[i];
            let admissible = fit.bic[i].is_finite();
            PathRow {
                lambda: fit.lambdas[i],
                support_size: pairs.len(),
                df: 1 + main.len() + pairs.len(),
                admissible,
                rss: None,
                bic: admissible.then_some(fit.bic[i]),
                iterations: None,
                converged: None,
                kkt_residual: None,
            }
        })
        .collect();
    Ok(Outcome {
        converged: true,
        chosen_index: fit.chosen_index,
        chosen_lambda: fit.lambdas[fit.chosen_index],
        estimate: fit.lasso_omega.clone(),
        model: fit.model,
        path,
        history: None,
        main: None,
    })
}

/// Returns whether the selected fit converged.
pub fn run(args: &FitArgs) -> Result<bool, CliError> {
    let table = read_csv(&args.input, &args.response)?;
    let opts = args.tuning.options();
    let out = match args.method {
        FitMethod::Piey | FitMethod::Pier => fit_pie(args, &table, &opts)?,
        FitMethod::AllPairs => fit_pairs(&table, &opts)?,
    };
    if !out.converged {
        log::warn!("the selected fit reached the iteration limit; the report is partial");
    }
    let names = &table.names;
    let content = match args.format {
        Format::Json => to_json(&FitReport {
            schema_version: SCHEMA_VERSION,
            command: "fit",
            method: match args.method {
                FitMethod::Piey => "piey",
                FitMethod::Pier => "pier",
                FitMethod::AllPairs => "all_pairs",
            },
            input: args.input.display().to_string(),
            response: args.response.clone(),
            n: table.dataset.n(),
            p: table.dataset.p(),
            converged: out.converged,
            partial: !out.converged,
            settings: Settings::from(&opts),
            chosen_index: out.chosen_index,
            chosen_lambda: out.chosen_lambda,
            support: triples(&out.estimate, names),
            alpha: out.model.alpha,
            beta_support: coefs(&out.model.beta, names),
            interactions: triples(&out.model.omega, names),
            mu: out.model.mu.iter().copied().collect(),
            path: out.path,
            residual_history: out.history,
            main_effects: out.main,
        }),
        Format::Csv => {
            let rows: Vec<CsvRow> = out
                .estimate
                .lower_support()
                .into_iter()
                .map(|(k, l)| CsvRow {
                    k: k + 1,
                    l: l + 1,
                    name_k: names[k].clone(),
                    name_l: names[l].clone(),
                    value: out.estimate.get(k, l),
                    refit_value: out.model.omega.get(k, l),
                })
                .collect();
            to_csv(&rows)
        }
    };
    emit(args.out.as_deref(), &content)?;
    Ok(out.converged)
}
