//! Deterministic output formatting: summary JSON, CSV tables, and the
//! 6-significant-digit float policy shared by every writer.

use crate::engine::{AggregateSummary, RunResult};
use crate::scenario::Scenario;
use serde_json::{json, Value};

/// Rounds to 6 significant digits (the precision every report emits).
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// Canonical float string: scientific notation, 6 significant digits.
pub fn fmt6(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        (if x > 0.0 { "inf" } else { "-inf" }).to_string()
    } else {
        format!("{x:.5e}")
    }
}

fn num6(x: f64) -> Value {
    if x.is_finite() {
        json!(sig6(x))
    } else {
        Value::Null
    }
}

/// The run summary as pretty JSON: the fully resolved scenario (defaults
/// included) plus aggregate and per-seed results. Keys are emitted sorted,
/// so equal inputs produce byte-equal documents.
pub fn summary_json(s: &Scenario, summary: &AggregateSummary) -> String {
    let per_seed: Vec<Value> = summary
        .per_seed
        .iter()
        .map(|p| {
            json!({
                "seed": p.seed,
                "mean_throughput_bps": num6(p.mean_throughput_bps),
                "jain": num6(p.jain),
                "sourced_bytes": p.sourced_bytes,
                "sunk_bytes": p.sunk_bytes,
                "dropped_bytes": p.dropped_bytes,
            })
        })
        .collect();
    let doc = json!({
        "scenario": serde_json::to_value(s).expect("scenario serializes"),
        "n_seeds": summary.n_seeds,
        "mean_throughput_bps": num6(summary.mean_throughput_bps),
        "jain_mean": num6(summary.jain_mean),
        "jain_std": num6(summary.jain_std),
        "drop_fraction": num6(summary.drop_fraction),
        "per_seed": per_seed,
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("summary serializes");
    out.push('\n');
    out
}

/// Per-UE measured throughput, one row per (seed, UE).
pub fn per_ue_csv(runs: &[RunResult]) -> String {
    let mut out = String::from("seed,ue_id,mean_bps\n");
    for r in runs {
        for (i, &m) in r.per_ue_mean_bps.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", r.seed, i, fmt6(m)));
        }
    }
    out
}

/// Empirical CDF as (value, cumulative fraction) rows.
pub fn cdf_csv(cdf: &[(f64, f64)]) -> String {
    let mut out = String::from("value_bps,cdf\n");
    for &(v, f) in cdf {
        out.push_str(&format!("{},{}\n", fmt6(v), fmt6(f)));
    }
    out
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub mean_throughput_bps: f64,
    pub jain_mean: f64,
    pub jain_std: f64,
    pub drop_fraction: f64,
}

impl SweepRow {
    pub fn from_summary(value: impl Into<String>, summary: &AggregateSummary) -> Self {
        Self {
            value: value.into(),
            mean_throughput_bps: summary.mean_throughput_bps,
            jain_mean: summary.jain_mean,
            jain_std: summary.jain_std,
            drop_fraction: summary.drop_fraction,
        }
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("value,mean_throughput_bps,jain_mean,jain_std,drop_fraction\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.value,
            fmt6(r.mean_throughput_bps),
            fmt6(r.jain_mean),
            fmt6(r.jain_std),
            fmt6(r.drop_fraction)
        ));
    }
    out
}
