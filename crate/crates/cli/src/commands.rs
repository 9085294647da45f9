use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use ratio_sparse::datagen::{gen_instance, MatrixSpec, SignalSpec};
use ratio_sparse::harness::{
    relative_error, run_experiment, snr_db, write_outputs, ExperimentPlan, SEED_ENV,
};
use ratio_sparse::solver::{initializers, solvers, SolveContext};
use ratio_sparse::theory::{sweep, write_sweep_csv, TheoryGrid};
use ratio_sparse::{DlpaConfig, ProblemInstance, RatioParams, SolveResult};

use crate::{BenchArgs, DatagenArgs, SolveArgs, TheoryArgs};

const NOT_CONVERGED: u8 = 2;

#[derive(Serialize)]
struct SolveReport<'a> {
    instance: &'a str,
    solver: &'a str,
    p: f64,
    q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snr_db: Option<f64>,
    #[serde(flatten)]
    result: &'a SolveResult,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} {}", path.display()))
}

fn write_or_print(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn solve(args: &SolveArgs) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => read_json::<DlpaConfig>(path, "solver config")?,
        None => DlpaConfig::default(),
    };
    if let Some(beta) = args.beta {
        config.beta_prox = beta;
    }
    if let Some(k) = args.outer_max {
        config.outer_max = k;
    }
    config.validate()?;
    let params = RatioParams::new(args.p, args.q)?;
    let solver = solvers().get(&args.solver)?;
    let init = initializers().get(&args.init)?;

    let instance = ProblemInstance::load(&args.instance)?;
    let ctx = SolveContext::new(&instance)?;
    let x0 = init.initial_point(&ctx, &config)?;
    let result = solver.solve(&ctx, params, &config, Some(&x0))?;

    let (rel_error, snr) = match instance.ground_truth() {
        Some(truth) => (
            Some(relative_error(&result.x_hat, truth.as_slice())),
            Some(snr_db(&result.x_hat, truth.as_slice())?),
        ),
        None => (None, None),
    };
    log::info!(
        "{}: alpha {:.6} after {} outer iterations ({:?})",
        instance.id(),
        result.alpha_final,
        result.iterations,
        result.stop_reason
    );
    let report = SolveReport {
        instance: instance.id(),
        solver: solver.name(),
        p: args.p,
        q: args.q,
        rel_error,
        snr_db: snr,
        result: &result,
    };
    let mut text = serde_json::to_vec_pretty(&report)?;
    text.push(b'\n');
    write_or_print(args.out.as_deref(), &text)?;
    Ok(if result.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(NOT_CONVERGED)
    })
}

pub fn bench(args: &BenchArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.plan)
        .with_context(|| format!("reading plan {}", args.plan.display()))?;
    let mut plan = ExperimentPlan::from_json(&text)
        .with_context(|| format!("invalid plan {}", args.plan.display()))?;
    plan.apply_seed_override()?;
    let workers = usize::try_from(args.workers).context("worker count")?;
    let result = run_experiment(&plan, workers)?;
    write_outputs(&args.out, &result)?;

    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "{:>6} {:>6} {:>5} {:>6} {:>8} {:>8} {:>8} {:>9}",
        "p", "q", "k", "trials", "success", "model", "algo", "snr_db"
    )?;
    for c in &result.cells {
        writeln!(
            stdout,
            "{:>6} {:>6} {:>5} {:>6} {:>8.3} {:>8.3} {:>8.3} {:>9.2}",
            c.p,
            c.q,
            c.k,
            c.trials,
            c.success_rate,
            c.model_failure_rate,
            c.algorithm_failure_rate,
            c.mean_snr_db
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn theory(args: &TheoryArgs) -> Result<ExitCode> {
    let grid: TheoryGrid = read_json(&args.grid, "theory grid")?;
    let rows = sweep(&grid)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    write_or_print(args.out.as_deref(), &buf)?;
    Ok(ExitCode::SUCCESS)
}

/// Inline JSON when the argument starts with `{`, otherwise a file path.
fn spec_value(arg: &str, what: &str) -> Result<serde_json::Value> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading {what} spec {arg}"))?
    };
    serde_json::from_str(&text).with_context(|| format!("parsing {what} spec"))
}

fn seed_override(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => match v.trim().parse() {
            Ok(seed) => Ok(Some(seed)),
            Err(_) => bail!("{SEED_ENV} must be an unsigned integer, got `{v}`"),
        },
        Err(_) => Ok(None),
    }
}

pub fn datagen(args: &DatagenArgs) -> Result<ExitCode> {
    let mut mspec: MatrixSpec = serde_json::from_value(spec_value(&args.matrix, "matrix")?)
        .context("invalid matrix spec")?;
    let mut signal = spec_value(&args.signal, "signal")?;
    if let Some(obj) = signal.as_object_mut() {
        obj.entry("n").or_insert(mspec.n.into());
    }
    let mut sspec: SignalSpec = serde_json::from_value(signal).context("invalid signal spec")?;
    if let Some(seed) = seed_override(args.seed)? {
        mspec.seed = seed;
        sspec.seed = seed;
    }
    let instance = gen_instance(&mspec, &sspec)?;
    instance.save(&args.out)?;
    log::info!("wrote {} to {}", instance.id(), args.out.display());
    Ok(ExitCode::SUCCESS)
}
