//! CSV and plot-data writers. Numbers use 9 significant digits and never
//! depend on locale, so repeated runs produce identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ehcrn_core::experiments::{ArmStats, SweepResult};
use ehcrn_core::multi_slot::IterationLog;

/// Shortest of fixed or scientific notation with 9 significant digits and
/// trailing zeros removed, like C's `%.9g`.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const SWEEP_COLUMNS: [&str; 12] = [
    "axis",
    "value",
    "series_axis",
    "series_value",
    "su_bits_coop",
    "su_bits_nocoop",
    "transfer_total",
    "transfer_per_slot",
    "infeasible_coop",
    "infeasible_nocoop",
    "feasible",
    "trials",
];

/// One sweep together with the second parameter value it ran at, if any.
pub struct SeriesRun<'a> {
    pub series: Option<(&'a str, f64)>,
    pub result: &'a SweepResult,
}

fn sweep_fields(run: &SeriesRun<'_>) -> Vec<Vec<String>> {
    let opt = |s: Option<ArmStats>, f: fn(&ArmStats) -> String| s.as_ref().map(f).unwrap_or_default();
    run.result
        .rows
        .iter()
        .map(|row| {
            let transfer = row.coop.or(row.no_coop);
            vec![
                run.result.axis.name().to_string(),
                fmt_sig(row.value),
                run.series.map(|(n, _)| n.to_string()).unwrap_or_default(),
                run.series.map(|(_, v)| fmt_sig(v)).unwrap_or_default(),
                opt(row.coop, |s| fmt_sig(s.mean_su_bits)),
                opt(row.no_coop, |s| fmt_sig(s.mean_su_bits)),
                opt(transfer, |s| fmt_sig(s.mean_transfer_total)),
                opt(transfer, |s| fmt_sig(s.mean_transfer_per_slot)),
                opt(row.coop, |s| s.infeasible.to_string()),
                opt(row.no_coop, |s| s.infeasible.to_string()),
                row.feasible.to_string(),
                row.trials.to_string(),
            ]
        })
        .collect()
}

pub fn write_sweep_csv(path: &Path, runs: &[SeriesRun<'_>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(SWEEP_COLUMNS)?;
    for run in runs {
        for rec in sweep_fields(run) {
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated companion for plotting tools: `#` header, one block
/// per series separated by blank lines, missing values as `?`.
pub fn write_sweep_dat(path: &Path, runs: &[SeriesRun<'_>]) -> Result<()> {
    // The axis names go in the header and block comments, not in columns.
    let keep = |i: usize| i != 0 && i != 2;
    let header: Vec<&str> = SWEEP_COLUMNS.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, c)| *c).collect();
    let mut out = format!("# {}\n", header.join(" "));
    for (k, run) in runs.iter().enumerate() {
        if k > 0 {
            out.push_str("\n\n");
        }
        if let Some((name, v)) = run.series {
            out.push_str(&format!("# {name} = {}\n", fmt_sig(v)));
        }
        for rec in sweep_fields(run) {
            let cols: Vec<&str> = rec
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, s)| if s.is_empty() { "?" } else { s.as_str() })
                .collect();
            out.push_str(&cols.join(" "));
            out.push('\n');
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn dat_path(csv: &Path) -> PathBuf {
    csv.with_extension("dat")
}

pub fn write_iteration_log(path: &Path, log: &IterationLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["iter", "delta_norm", "lagrangian", "pu_slack", "worst_violation"])?;
    for r in &log.records {
        w.write_record([
            r.iter.to_string(),
            fmt_sig(r.delta_norm),
            fmt_sig(r.lagrangian),
            fmt_sig(r.pu_slack),
            fmt_sig(r.worst_violation),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Single header plus rows, for the solve commands.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn print_line(out: &mut impl Write, key: &str, value: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{key:<14} {value}")?;
    Ok(())
}
