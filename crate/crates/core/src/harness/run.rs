use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_outcome, relative_error, snr_db, ExperimentPlan, Outcome, TrialRecord};
use crate::datagen::{derive_seed, gen_instance, MatrixSpec, SignalSpec};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::norms::RatioParams;
use crate::solver::{initializers, solvers, Initializer, RecoverySolver, SolveContext, StopReason};

/// Seed of trial `trial` at sparsity `k`, shared by every (p, q).
pub fn trial_seed(base_seed: u64, k: usize, trial: usize) -> u64 {
    derive_seed(base_seed, &[k as u64, trial as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub p: f64,
    pub q: f64,
    pub k: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub model_failure_rate: f64,
    pub algorithm_failure_rate: f64,
    /// Mean over all trials, capped values included.
    pub mean_snr_db: f64,
    /// Mean over successful trials; `None` without successes.
    pub mean_snr_db_success: Option<f64>,
}

/// Rates for one (p, q), averaged over the sparsity grid with equal weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub p: f64,
    pub q: f64,
    pub success_rate: f64,
    pub model_failure_rate: f64,
    pub algorithm_failure_rate: f64,
    pub mean_snr_db: f64,
    pub mean_snr_db_success: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub base_seed: u64,
    /// Ordered by (p, q) position in the plan, then k, then trial.
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellAggregate>,
    pub heatmap: Vec<HeatmapCell>,
}

fn trial_instance(plan: &ExperimentPlan, k: usize, seed: u64) -> Result<ProblemInstance> {
    let matrix = MatrixSpec {
        seed,
        ..plan.matrix.clone()
    };
    let signal = SignalSpec {
        n: plan.matrix.n,
        k,
        mag_low: plan.signal.mag_low,
        mag_high: plan.signal.mag_high,
        min_separation: plan.signal.min_separation,
        seed,
    };
    gen_instance(&matrix, &signal)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".into()
    }
}

struct Unit {
    ki: usize,
    k: usize,
    trial: usize,
}

struct Strategies {
    solver: Box<dyn RecoverySolver>,
    initializer: Box<dyn Initializer>,
}

fn run_unit(
    plan: &ExperimentPlan,
    params: &[RatioParams],
    strategies: &Strategies,
    unit: &Unit,
) -> Result<Vec<(usize, TrialRecord)>> {
    let seed = trial_seed(plan.base_seed, unit.k, unit.trial);
    let instance = trial_instance(plan, unit.k, seed)?;
    let truth = instance
        .ground_truth()
        .ok_or_else(|| Error::Internal("generated instance without ground truth".into()))?
        .clone();
    let feas_tol = instance.feasibility_tolerance(plan.feas_rel_tol);
    let ctx = SolveContext::new(&instance)?;

    let mut config = plan.solver_config.clone();
    config.time_limit_secs = Some(
        config
            .time_limit_secs
            .map_or(plan.trial_time_limit_secs, |t| {
                t.min(plan.trial_time_limit_secs)
            }),
    );

    // one initial point per instance, shared by every (p, q)
    let init = catch_unwind(AssertUnwindSafe(|| {
        strategies.initializer.initial_point(&ctx, &config)
    }));
    let (x0, init_note) = match init {
        Ok(Ok(x)) => (Some(x), None),
        Ok(Err(e)) => (None, Some(format!("initializer failed: {e}"))),
        Err(p) => (
            None,
            Some(format!("initializer panicked: {}", panic_message(p))),
        ),
    };

    let mut out = Vec::with_capacity(params.len());
    for (pi, &pr) in params.iter().enumerate() {
        let start = Instant::now();
        let solved = catch_unwind(AssertUnwindSafe(|| {
            strategies.solver.solve(&ctx, pr, &config, x0.as_ref())
        }));
        let wall_ms = if plan.record_wall_time {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        let failure = |note: String| TrialRecord {
            p: pr.p(),
            q: pr.q(),
            k: unit.k,
            trial: unit.trial,
            seed,
            outcome: Outcome::AlgorithmFailure,
            // no estimate is scored as the zero estimate
            rel_error: 1.0,
            snr_db: 0.0,
            alpha_final: f64::NAN,
            outer_iters: 0,
            wall_ms,
            diagnostic: Some(note),
        };
        let record = match solved {
            Ok(Ok(res)) => {
                let mut outcome =
                    classify_outcome(&res.x_hat, &instance, pr, plan.success_tol, feas_tol)?;
                let mut diagnostic = init_note.clone();
                if res.stop_reason == StopReason::TimeLimit {
                    outcome = Outcome::AlgorithmFailure;
                    diagnostic = Some("time limit reached".into());
                }
                TrialRecord {
                    p: pr.p(),
                    q: pr.q(),
                    k: unit.k,
                    trial: unit.trial,
                    seed,
                    outcome,
                    rel_error: relative_error(&res.x_hat, truth.as_slice()),
                    snr_db: snr_db(&res.x_hat, truth.as_slice())?,
                    alpha_final: res.alpha_final,
                    outer_iters: res.iterations,
                    wall_ms,
                    diagnostic,
                }
            }
            Ok(Err(e)) => failure(format!("solver error: {e}")),
            Err(p) => failure(format!("solver panicked: {}", panic_message(p))),
        };
        if let Some(d) = &record.diagnostic {
            log::warn!(
                "p={} q={} k={} trial={}: {d}",
                pr.p(),
                pr.q(),
                unit.k,
                unit.trial
            );
        }
        out.push((pi, record));
    }
    Ok(out)
}

/// Runs every trial of `plan` on `workers` threads. Records and aggregates
/// do not depend on the worker count.
pub fn run_experiment(plan: &ExperimentPlan, workers: usize) -> Result<ExperimentResult> {
    plan.validate()?;
    if workers == 0 {
        return Err(Error::InvalidParameter("workers must be at least 1".into()));
    }
    let params = plan.params()?;
    let strategies = Strategies {
        solver: solvers().get(&plan.solver)?,
        initializer: initializers().get(&plan.initializer)?,
    };
    let units: Vec<Unit> = plan
        .sparsity_grid
        .iter()
        .enumerate()
        .flat_map(|(ki, &k)| (0..plan.trials_per_cell).map(move |trial| Unit { ki, k, trial }))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<(usize, TrialRecord)>>> = pool.install(|| {
        units
            .par_iter()
            .map(|u| run_unit(plan, &params, &strategies, u))
            .collect()
    });

    let mut keyed = Vec::with_capacity(units.len() * params.len());
    for (unit, res) in units.iter().zip(results) {
        for (pi, rec) in res? {
            keyed.push(((pi, unit.ki, unit.trial), rec));
        }
    }
    keyed.sort_by_key(|(key, _)| *key);
    let records: Vec<TrialRecord> = keyed.into_iter().map(|(_, r)| r).collect();
    let cells = aggregate(&records);
    let heatmap = heatmap(&cells);
    Ok(ExperimentResult {
        name: plan.name.clone(),
        base_seed: plan.base_seed,
        records,
        cells,
        heatmap,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per-cell rates from records ordered by cell, in first-seen cell order.
pub fn aggregate(records: &[TrialRecord]) -> Vec<CellAggregate> {
    let mut cells: Vec<CellAggregate> = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let r0 = &records[start];
        let end = start
            + records[start..]
                .iter()
                .take_while(|r| r.p == r0.p && r.q == r0.q && r.k == r0.k)
                .count();
        let group = &records[start..end];
        let n = group.len();
        let count = |o: Outcome| group.iter().filter(|r| r.outcome == o).count();
        let s = count(Outcome::Success);
        let mf = count(Outcome::ModelFailure);
        let af = n - s - mf;
        cells.push(CellAggregate {
            p: r0.p,
            q: r0.q,
            k: r0.k,
            trials: n,
            success_rate: s as f64 / n as f64,
            model_failure_rate: mf as f64 / n as f64,
            algorithm_failure_rate: af as f64 / n as f64,
            mean_snr_db: mean(group.iter().map(|r| r.snr_db)).unwrap_or(f64::NAN),
            mean_snr_db_success: mean(
                group
                    .iter()
                    .filter(|r| r.outcome == Outcome::Success)
                    .map(|r| r.snr_db),
            ),
        });
        start = end;
    }
    cells
}

/// Averages the per-k cells of each (p, q) with equal weight per k.
pub fn heatmap(cells: &[CellAggregate]) -> Vec<HeatmapCell> {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for c in cells {
        if !keys.contains(&(c.p, c.q)) {
            keys.push((c.p, c.q));
        }
    }
    keys.into_iter()
        .map(|(p, q)| {
            let group: Vec<&CellAggregate> =
                cells.iter().filter(|c| c.p == p && c.q == q).collect();
            let avg =
                |f: fn(&CellAggregate) -> f64| mean(group.iter().map(|c| f(c))).unwrap_or(f64::NAN);
            HeatmapCell {
                p,
                q,
                success_rate: avg(|c| c.success_rate),
                model_failure_rate: avg(|c| c.model_failure_rate),
                algorithm_failure_rate: avg(|c| c.algorithm_failure_rate),
                mean_snr_db: avg(|c| c.mean_snr_db),
                mean_snr_db_success: mean(group.iter().filter_map(|c| c.mean_snr_db_success)),
            }
        })
        .collect()
}
