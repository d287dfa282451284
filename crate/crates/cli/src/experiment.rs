use pie_core::simulation::{run_experiment, top_pairs, Experiment, ExperimentConfig, Method, NOISE_BLOCK};
use serde::Serialize;

use crate::input::read_csv;
use crate::output::{emit, to_json, Pair, SCHEMA_VERSION};
use crate::{CliError, ExperimentArgs, FitMethod};

#[derive(Debug, Serialize)]
struct Ranked {
    #[serde(flatten)]
    pair: Pair,
    count: u32,
}

#[derive(Debug, Serialize)]
struct ExperimentReport {
    schema_version: u32,
    command: &'static str,
    experiment: u32,
    method: String,
    input: String,
    response: String,
    subsamples: usize,
    subsample_size: usize,
    seed: u64,
    completed: usize,
    missing: Vec<(usize, String)>,
    frequency_file: String,
    planted: Vec<Pair>,
    top_pairs: Vec<Ranked>,
}

pub fn run(args: &ExperimentArgs) -> Result<bool, CliError> {
    let experiment = Experiment::from_number(args.experiment)?;
    let method = match args.method {
        FitMethod::Piey => Method::Piey,
        FitMethod::Pier => Method::Pier,
        FitMethod::AllPairs => {
            return Err(CliError::Input("experiments support --method piey or pier".into()));
        }
    };
    let table = read_csv(&args.input, &args.response)?;
    let config = ExperimentConfig {
        experiment,
        subsamples: args.subsamples,
        subsample_size: args.subsample_size,
        seed: args.tuning.seed,
        method,
    };
    let opts = args.tuning.options();
    let result = run_experiment(&table.dataset, &config, &opts)?;

    let mut names = table.names.clone();
    names.extend((1..=NOISE_BLOCK).map(|i| format!("noise_normal_{i}")));
    names.extend((1..=NOISE_BLOCK).map(|i| format!("noise_uniform_{i}")));

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Input(format!("cannot format frequency table: {e}"));
    w.write_record(&names).map_err(csv_err)?;
    for row in result.frequency.row_iter() {
        w.write_record(row.iter().map(|c| c.to_string())).map_err(csv_err)?;
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output");
    emit(Some(&args.out), &body)?;

    let sidecar = args.out.with_extension("json");
    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        command: "experiment",
        experiment: experiment.number(),
        method: method.to_string(),
        input: args.input.display().to_string(),
        response: args.response.clone(),
        subsamples: args.subsamples,
        subsample_size: args.subsample_size,
        seed: args.tuning.seed,
        completed: result.completed,
        missing: result.missing.clone(),
        frequency_file: args.out.display().to_string(),
        planted: result.planted.iter().map(|&(k, l)| Pair::new(k, l, &names)).collect(),
        top_pairs: top_pairs(&result.frequency, 10)
            .into_iter()
            .map(|((k, l), count)| Ranked {
                pair: Pair::new(k, l, &names),
                count,
            })
            .collect(),
    };
    emit(Some(&sidecar), &to_json(&report))?;
    Ok(true)
}
