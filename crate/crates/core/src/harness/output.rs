use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use super::run::{CellAggregate, ExperimentResult, HeatmapCell};
use super::{Outcome, TrialRecord};
use crate::error::{Error, Result};
use crate::instance::fmt_f64;

pub const TRIAL_FILE: &str = "trials.csv";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const HEATMAP_FILE: &str = "heatmap.csv";

pub const TRIAL_HEADER: [&str; 11] = [
    "p",
    "q",
    "k",
    "trial",
    "seed",
    "outcome",
    "rel_error",
    "snr_db",
    "alpha_final",
    "outer_iters",
    "wall_ms",
];

pub const HEATMAP_HEADER: [&str; 7] = [
    "p",
    "q",
    "success_rate",
    "model_failure_rate",
    "algorithm_failure_rate",
    "mean_snr_db",
    "mean_snr_db_success",
];

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_trial_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_HEADER)?;
    for r in records {
        w.write_record([
            fmt_f64(r.p),
            fmt_f64(r.q),
            r.k.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.outcome.as_str().to_string(),
            fmt_f64(r.rel_error),
            fmt_f64(r.snr_db),
            fmt_f64(r.alpha_final),
            r.outer_iters.to_string(),
            fmt_f64(r.wall_ms),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trial csv>", e))?;
    Ok(())
}

/// Parses a file written by [`write_trial_csv`]. Diagnostics are not stored
/// in the CSV and come back as `None`.
pub fn read_trial_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != TRIAL_HEADER {
        return Err(Error::format(
            "<trial csv>",
            format!("unexpected header {header:?}"),
        ));
    }
    let bad = |what: &str, v: &str| Error::format("<trial csv>", format!("bad {what} `{v}`"));
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let f = |i: usize| {
            row[i]
                .parse::<f64>()
                .map_err(|_| bad(TRIAL_HEADER[i], &row[i]))
        };
        let u = |i: usize| {
            row[i]
                .parse::<usize>()
                .map_err(|_| bad(TRIAL_HEADER[i], &row[i]))
        };
        out.push(TrialRecord {
            p: f(0)?,
            q: f(1)?,
            k: u(2)?,
            trial: u(3)?,
            seed: row[4].parse().map_err(|_| bad("seed", &row[4]))?,
            outcome: Outcome::parse(&row[5]).ok_or_else(|| bad("outcome", &row[5]))?,
            rel_error: f(6)?,
            snr_db: f(7)?,
            alpha_final: f(8)?,
            outer_iters: u(9)?,
            wall_ms: f(10)?,
            diagnostic: None,
        });
    }
    Ok(out)
}

fn cell_key(c: &CellAggregate) -> String {
    format!("p={}|q={}|k={}", c.p, c.q, c.k)
}

/// Aggregates keyed by `p=..|q=..|k=..`, plus the heatmap rows.
pub fn write_aggregate_json<W: Write>(result: &ExperimentResult, out: W) -> Result<()> {
    let mut cells = Map::new();
    for c in &result.cells {
        cells.insert(cell_key(c), serde_json::to_value(c)?);
    }
    let doc = json!({
        "name": result.name,
        "base_seed": result.base_seed,
        "cells": Value::Object(cells),
        "heatmap": serde_json::to_value(&result.heatmap)?,
    });
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out).map_err(|e| Error::io("<aggregate json>", e))?;
    Ok(())
}

pub fn write_heatmap_csv<W: Write>(cells: &[HeatmapCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEATMAP_HEADER)?;
    for c in cells {
        w.write_record([
            fmt_f64(c.p),
            fmt_f64(c.q),
            fmt_f64(c.success_rate),
            fmt_f64(c.model_failure_rate),
            fmt_f64(c.algorithm_failure_rate),
            fmt_f64(c.mean_snr_db),
            opt_f(c.mean_snr_db_success),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<heatmap csv>", e))?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Writes the trial CSV, aggregate JSON and heatmap CSV into `dir`.
pub fn write_outputs(dir: &Path, result: &ExperimentResult) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(TRIAL_FILE);
    let mut w = create(&path)?;
    write_trial_csv(&result.records, &mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(AGGREGATE_FILE);
    let mut w = create(&path)?;
    write_aggregate_json(result, &mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(HEATMAP_FILE);
    let mut w = create(&path)?;
    write_heatmap_csv(&result.heatmap, &mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}
