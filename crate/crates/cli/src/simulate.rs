use pie_core::simulation::{run_replications, CovariateLaw, MeanSd, SimulationSpec};
use serde::Serialize;

use crate::output::{emit, to_csv, to_json, SCHEMA_VERSION};
use crate::{CliError, Format, SimulateArgs};

#[derive(Debug, Serialize)]
struct RunRow {
    replication: usize,
    seed: u64,
    rate: f64,
    loss: f64,
    size: usize,
    chosen_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_seconds: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Missing {
    replication: usize,
    reason: String,
}

#[derive(Debug, Serialize)]
struct MethodBlock {
    method: String,
    completed: usize,
    missing: Vec<Missing>,
    rate: MeanSd,
    loss: MeanSd,
    size: MeanSd,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_seconds: Option<MeanSd>,
    runs: Vec<RunRow>,
}

#[derive(Debug, Serialize)]
struct SimulationReport {
    schema_version: u32,
    command: &'static str,
    spec: SimulationSpec,
    methods: Vec<MethodBlock>,
}

#[derive(Debug, Serialize)]
struct CsvRow {
    method: String,
    statistic: &'static str,
    mean: f64,
    sd: f64,
    completed: usize,
    replications: usize,
}

pub fn run(args: &SimulateArgs) -> Result<bool, CliError> {
    let spec = SimulationSpec {
        model: args.model,
        n: args.n,
        p: args.p,
        law: CovariateLaw {
            kind: args.law,
            ar_coefficient: args.ar,
        },
        replications: args.reps,
        base_seed: args.tuning.seed,
        noise_sd: args.noise_sd,
    };
    let opts = args.tuning.options();
    opts.validate()?;
    let summary = run_replications(&spec, &args.methods, &opts)?;

    let content = match args.format {
        Format::Json => {
            let methods = summary
                .methods
                .iter()
                .map(|m| MethodBlock {
                    method: m.method.to_string(),
                    completed: m.completed,
                    missing: m
                        .missing
                        .iter()
                        .map(|(r, reason)| Missing {
                            replication: *r,
                            reason: reason.clone(),
                        })
                        .collect(),
                    rate: m.rate,
                    loss: m.loss,
                    size: m.size,
                    time_seconds: args.timing.then_some(m.time_seconds),
                    runs: m
                        .runs
                        .iter()
                        .enumerate()
                        .filter_map(|(r, run)| {
                            run.as_ref().map(|run| RunRow {
                                replication: r,
                                seed: spec.replication_seed(r),
                                rate: run.metrics.rate,
                                loss: run.metrics.loss,
                                size: run.metrics.size,
                                chosen_lambda: run.chosen_lambda,
                                time_seconds: args.timing.then_some(run.metrics.time_seconds),
                            })
                        })
                        .collect(),
                })
                .collect();
            to_json(&SimulationReport {
                schema_version: SCHEMA_VERSION,
                command: "simulate",
                spec: spec.clone(),
                methods,
            })
        }
        Format::Csv => {
            let mut rows = Vec::new();
            for m in &summary.methods {
                let mut stats = vec![("rate", m.rate), ("loss", m.loss), ("size", m.size)];
                if args.timing {
                    stats.push(("time", m.time_seconds));
                }
                for (statistic, s) in stats {
                    rows.push(CsvRow {
                        method: m.method.to_string(),
                        statistic,
                        mean: s.mean,
                        sd: s.sd,
                        completed: m.completed,
                        replications: spec.replications,
                    });
                }
            }
            to_csv(&rows)
        }
    };
    emit(args.out.as_deref(), &content)?;
    Ok(true)
}
