use std::io::Write;

use serde::{Deserialize, Serialize};

use super::bounds::bound_report;
use super::{worst_case_beta, TheoryInput};
use crate::error::{Error, Result};
use crate::instance::fmt_f64;
use crate::norms::RatioParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaName {
    /// `k^{1/p - 1/q}`, the largest ratio of a k-sparse vector.
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Value(f64),
    Named(BetaName),
}

impl BetaSpec {
    fn resolve(self, params: RatioParams, k: usize) -> f64 {
        match self {
            BetaSpec::Value(v) => v,
            BetaSpec::Named(BetaName::WorstCase) => worst_case_beta(params, k),
        }
    }
}

/// Cartesian parameter grid for [`sweep`].
///
/// `delta_2k` fixes the RIC used by the error bounds; alternatively
/// `delta_2k_fraction` sets it per point to that fraction of the smaller of the
/// two thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryGrid {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub k: Vec<usize>,
    #[serde(default = "default_t")]
    pub t: Vec<usize>,
    #[serde(default = "default_beta")]
    pub beta: Vec<BetaSpec>,
    #[serde(default)]
    pub delta_2k: Option<f64>,
    #[serde(default)]
    pub delta_2k_fraction: Option<f64>,
    #[serde(default)]
    pub delta_k: Option<f64>,
    #[serde(default)]
    pub delta_kt: Option<f64>,
    #[serde(default)]
    pub theta_kt: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_t() -> Vec<usize> {
    vec![1]
}

fn default_beta() -> Vec<BetaSpec> {
    vec![BetaSpec::Named(BetaName::WorstCase)]
}

fn default_epsilon() -> f64 {
    1.0
}

impl TheoryGrid {
    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty()
            || self.q.is_empty()
            || self.k.is_empty()
            || self.t.is_empty()
            || self.beta.is_empty()
        {
            return Err(Error::InvalidParameter(
                "every grid axis needs at least one value".into(),
            ));
        }
        if self.delta_2k.is_some() && self.delta_2k_fraction.is_some() {
            return Err(Error::InvalidParameter(
                "delta_2k and delta_2k_fraction are mutually exclusive".into(),
            ));
        }
        if let Some(f) = self.delta_2k_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "delta_2k_fraction must lie in (0, 1), got {f}"
                )));
            }
        }
        for &p in &self.p {
            for &q in &self.q {
                RatioParams::new(p, q)?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.p.len() * self.q.len() * self.k.len() * self.t.len() * self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One CSV row of a sweep. Applicability flags are `None` when the inputs for
/// that guarantee were not supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub p: f64,
    pub q: f64,
    pub k: usize,
    pub t: usize,
    pub beta: f64,
    pub delta_2k: Option<f64>,
    pub z0: f64,
    pub psi: f64,
    pub t1: f64,
    pub t2: f64,
    pub delta_new: f64,
    pub delta_zhu: f64,
    pub b_o: Option<f64>,
    pub b_z: Option<f64>,
    pub new_applicable: Option<bool>,
    pub zhu_applicable: Option<bool>,
    pub t6_applicable: Option<bool>,
    pub t6rip_applicable: Option<bool>,
}

pub fn sweep(grid: &TheoryGrid) -> Result<Vec<TheoryRow>> {
    grid.validate()?;
    let mut rows = Vec::with_capacity(grid.len());
    for &p in &grid.p {
        for &q in &grid.q {
            let params = RatioParams::new(p, q)?;
            for &k in &grid.k {
                for &t in &grid.t {
                    for &b in &grid.beta {
                        let mut input = TheoryInput::new(params, k, b.resolve(params, k))?
                            .with_t(t)
                            .with_epsilon(grid.epsilon);
                        input.delta_k = grid.delta_k;
                        input.delta_kt = grid.delta_kt;
                        input.theta_kt = grid.theta_kt;
                        input.delta_2k = grid.delta_2k;
                        if let Some(f) = grid.delta_2k_fraction {
                            let r = bound_report(&input)?;
                            input.delta_2k = Some(f * r.delta_new.min(r.delta_zhu));
                        }
                        input.validate()?;
                        let r = bound_report(&input)?;
                        rows.push(TheoryRow {
                            p,
                            q,
                            k,
                            t,
                            beta: input.beta,
                            delta_2k: input.delta_2k,
                            z0: r.z0,
                            psi: r.psi,
                            t1: r.t1,
                            t2: r.t2,
                            delta_new: r.delta_new,
                            delta_zhu: r.delta_zhu,
                            b_o: r.b_o,
                            b_z: r.b_z,
                            new_applicable: input.delta_2k.map(|d| d < r.delta_new),
                            zhu_applicable: input.delta_2k.map(|d| d < r.delta_zhu),
                            t6_applicable: r.t6.map(|c| c.applicable()),
                            t6rip_applicable: r.t6rip.map(|c| c.applicable()),
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 18] = [
    "p",
    "q",
    "k",
    "t",
    "beta",
    "z0",
    "psi",
    "T1",
    "T2",
    "delta_new",
    "delta_zhu",
    "b_o",
    "b_z",
    "delta_2k",
    "new_applicable",
    "zhu_applicable",
    "t6_applicable",
    "t6rip_applicable",
];

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn opt_b(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(rows: &[TheoryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.p),
            fmt_f64(r.q),
            r.k.to_string(),
            r.t.to_string(),
            fmt_f64(r.beta),
            fmt_f64(r.z0),
            fmt_f64(r.psi),
            fmt_f64(r.t1),
            fmt_f64(r.t2),
            fmt_f64(r.delta_new),
            fmt_f64(r.delta_zhu),
            opt_f(r.b_o),
            opt_f(r.b_z),
            opt_f(r.delta_2k),
            opt_b(r.new_applicable),
            opt_b(r.zhu_applicable),
            opt_b(r.t6_applicable),
            opt_b(r.t6rip_applicable),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<theory csv>", e))?;
    Ok(())
}
