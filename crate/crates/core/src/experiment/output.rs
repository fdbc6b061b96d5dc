//! CSV and plot-script writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::xtr::XtrMetrics;

use super::attack::AttackReport;
use super::sweep::SweepRow;
use super::ExperimentError;

pub const SWEEP_CSV_HEADER: &str = "n_nodes,attacker_fraction,w,d,size_bytes,seed,fp_rate,fn_rate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    /// The CSV plus a matplotlib script plotting FP rate against sketch size.
    PlotScript,
}

/// Rows in the given order, one per line, header first.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n_nodes, r.attacker_fraction, r.w, r.d, r.size_bytes, r.seed, r.fp_rate, r.fn_rate
        );
    }
    out
}

/// Plots mean FP rate over seeds against sketch size in KB (1 KB = 1000
/// bytes), one series per network size and attacker fraction.
pub fn plot_script(csv_name: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
import csv
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
src = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "{csv_name}")
dst = sys.argv[2] if len(sys.argv) > 2 else os.path.join(here, "fp_vs_size.png")

acc = defaultdict(lambda: defaultdict(list))
with open(src, newline="") as f:
    for row in csv.DictReader(f):
        series = (int(row["n_nodes"]), float(row["attacker_fraction"]))
        acc[series][int(row["size_bytes"]) / 1000.0].append(float(row["fp_rate"]))

fig, ax = plt.subplots(figsize=(7, 4.5))
for (n, frac), points in sorted(acc.items()):
    xs = sorted(points)
    ys = [sum(points[x]) / len(points[x]) for x in xs]
    ax.plot(xs, ys, marker=".", label=f"{{n}} nodes, {{frac:.0%}} attackers")
ax.set_xlabel("sketch size (KB)")
ax.set_ylabel("false positive rate")
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(dst, dpi=150)
print(dst)
"#
    )
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|e| ExperimentError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))
}

/// Writes `sweep.csv` (and `plot_sweep.py` for [`OutputFormat::PlotScript`])
/// into `out_dir`. Returns the written paths.
pub fn emit_sweep(rows: &[SweepRow], format: OutputFormat, out_dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::InvalidConfig("sweep produced no rows".into()));
    }
    ensure_dir(out_dir)?;
    let csv = out_dir.join("sweep.csv");
    write_file(&csv, &sweep_csv(rows))?;
    let mut written = vec![csv];
    if format == OutputFormat::PlotScript {
        let script = out_dir.join("plot_sweep.py");
        write_file(&script, &plot_script("sweep.csv"))?;
        written.push(script);
    }
    Ok(written)
}

pub fn attack_runs_csv(report: &AttackReport) -> String {
    let mut out = format!("scenario,seed,defense,config_hash,{}\n", XtrMetrics::csv_header());
    for r in &report.runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.scenario,
            r.seed,
            if r.defense { "on" } else { "off" },
            r.config_hash,
            r.metrics.csv_fields()
        );
    }
    out
}

pub fn attack_summary_csv(report: &AttackReport) -> String {
    let mut out = String::from(
        "scenario,seed,victim_admission_off,victim_admission_on,overflow_events_off,overflow_events_on,\
         legit_hit_rate_off,legit_hit_rate_on,max_source_admissions_on\n",
    );
    for s in &report.summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.scenario,
            s.seed,
            s.victim_admission_off,
            s.victim_admission_on,
            s.overflow_events_off,
            s.overflow_events_on,
            s.legit_hit_rate_off,
            s.legit_hit_rate_on,
            s.max_source_admissions_on
        );
    }
    out
}

/// Writes `<scenario>_runs.csv` and `<scenario>_summary.csv` into `out_dir`.
pub fn write_attack_report(report: &AttackReport, out_dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    ensure_dir(out_dir)?;
    let runs = out_dir.join(format!("{}_runs.csv", report.scenario));
    let summary = out_dir.join(format!("{}_summary.csv", report.scenario));
    write_file(&runs, &attack_runs_csv(report))?;
    write_file(&summary, &attack_summary_csv(report))?;
    Ok(vec![runs, summary])
}
