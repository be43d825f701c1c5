//! Command-line front end: `solve-single`, `solve-multi`, `sweep` and
//! `oracle-check`, each driven by a TOML run configuration.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 infeasible
//! instance, 3 oracle violation.

pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ehcrn_core::experiments::{sample_trace, trial_rng, EnergySpec, SweepAxis};
use ehcrn_core::multi_slot::per_slot_su_bits;
use ehcrn_core::single_slot::achieved_pu_bits;
use ehcrn_core::{
    grid_search_n1, grid_search_n2, independent_constraint_check, run_sweep, single_slot_feasible,
    solve_multi_slot, solve_single_slot, GridSpec, Mode, Policy, SlotData, SweepConfig, SweepResult,
    SystemParams, Trace, DEFAULT_TOL,
};
use rand::Rng;

use config::RunConfig;
use output::{fmt_sig, print_line, SeriesRun};

#[derive(Debug, Parser)]
#[command(name = "ehcrn", version, about = "Energy-cooperative underlay cognitive radio policies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured trial or instance count.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Overrides the configured CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact single-slot policy.
    SolveSingle(Common),
    /// Subgradient policy over the configured slots.
    SolveMulti {
        #[command(flatten)]
        common: Common,
        /// Iteration log CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Monte-Carlo sweep of one parameter.
    Sweep(Common),
    /// Compare solvers against the grid oracle on random instances.
    OracleCheck(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Usage = 1,
    Infeasible = 2,
    OracleViolation = 3,
}

/// Runs a parsed command, writing the report to `out` and diagnostics to
/// `err`.
pub fn run(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> Exit {
    let result = match cli.command {
        Command::SolveSingle(c) => solve_single(&c, out),
        Command::SolveMulti { common, log } => solve_multi(&common, log, out),
        Command::Sweep(c) => sweep(&c, out),
        Command::OracleCheck(c) => oracle_check(&c, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            Exit::Usage
        }
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(path) = &common.out {
        config.output.csv = Some(path.clone());
    }
    Ok(config)
}

fn solve_single(common: &Common, out: &mut impl Write) -> Result<Exit> {
    let config = load(common)?;
    let trace = config.trace()?;
    if trace.len() != 1 {
        bail!("solve-single needs exactly one [[slots]] table, found {}", trace.len());
    }
    let params = config.params(1)?;
    let slot = trace.slots[0];
    let sol = solve_single_slot(&params, &slot)?;
    let zeta = sol.zeta.map(fmt_sig).unwrap_or_else(|| "undefined".into());
    let pu = achieved_pu_bits(&params, &slot, &sol);
    print_line(out, "mode", format!("{:?}", sol.mode))?;
    print_line(out, "p_p", fmt_sig(sol.p_p))?;
    print_line(out, "p_s", fmt_sig(sol.p_s))?;
    print_line(out, "delta_sp", fmt_sig(sol.delta_sp))?;
    print_line(out, "zeta", &zeta)?;
    print_line(out, "su_bits", fmt_sig(sol.su_bits))?;
    print_line(out, "pu_bits", fmt_sig(pu))?;
    if let Some(path) = &config.output.csv {
        let row = vec![
            format!("{:?}", sol.mode),
            fmt_sig(sol.p_p),
            fmt_sig(sol.p_s),
            fmt_sig(sol.delta_sp),
            zeta,
            fmt_sig(sol.su_bits),
            fmt_sig(pu),
        ];
        output::write_rows(path, &["mode", "p_p", "p_s", "delta_sp", "zeta", "su_bits", "pu_bits"], &[row])?;
    }
    Ok(if sol.mode == Mode::Infeasible { Exit::Infeasible } else { Exit::Ok })
}

fn solve_multi(common: &Common, log: Option<PathBuf>, out: &mut impl Write) -> Result<Exit> {
    let config = load(common)?;
    let trace = config.trace()?;
    let params = config.params(trace.len())?;
    let report = solve_multi_slot(&params, &trace, &config.solver)?;
    let p = &report.policy;
    let su = per_slot_su_bits(&params, &trace, p);
    writeln!(out, "{:>4} {:>14} {:>14} {:>14} {:>14}", "slot", "p_p", "p_s", "delta_sp", "su_bits")?;
    for i in 0..trace.len() {
        writeln!(
            out,
            "{:>4} {:>14} {:>14} {:>14} {:>14}",
            i + 1,
            fmt_sig(p.p_p[i]),
            fmt_sig(p.p_s[i]),
            fmt_sig(p.delta_sp[i]),
            fmt_sig(su[i])
        )?;
    }
    print_line(out, "su_bits", fmt_sig(report.su_bits))?;
    print_line(out, "pu_bits", fmt_sig(report.pu_bits))?;
    print_line(out, "b_p", fmt_sig(params.b_p))?;
    print_line(out, "feasible", report.feasibility.is_feasible())?;
    print_line(out, "converged", report.raw.converged)?;
    print_line(out, "iterations", report.raw.iterations)?;
    if let Some(path) = &config.output.csv {
        let rows: Vec<Vec<String>> = (0..trace.len())
            .map(|i| {
                vec![
                    (i + 1).to_string(),
                    fmt_sig(p.p_p[i]),
                    fmt_sig(p.p_s[i]),
                    fmt_sig(p.delta_sp[i]),
                    fmt_sig(su[i]),
                ]
            })
            .collect();
        output::write_rows(path, &["slot", "p_p", "p_s", "delta_sp", "su_bits"], &rows)?;
    }
    if let Some(path) = log.as_ref().or(config.output.log.as_ref()) {
        output::write_iteration_log(path, &report.raw.log)?;
    }
    Ok(if report.feasibility.is_feasible() { Exit::Ok } else { Exit::Infeasible })
}

/// Sweep configurations, one per series value (or a single one).
pub fn sweep_configs(config: &RunConfig, seed: Option<u64>, trials: Option<usize>) -> Result<Vec<(Option<f64>, SweepConfig)>> {
    let section = config.sweep.as_ref().context("missing [sweep] section")?;
    let energy = config.energy.as_ref().context("missing [energy] section")?.spec()?;
    let gains = config.channel.as_ref().context("missing [channel] section")?.gain_spec()?;
    let n_slots = match (&section.n_slots, &energy) {
        (Some(n), _) => *n,
        (None, EnergySpec::Fixed { e_p, .. }) => e_p.len(),
        (None, EnergySpec::Uniform { .. }) => 1,
    };
    let base = SweepConfig {
        axis: section.axis,
        grid: section.grid.clone(),
        params: config.params(n_slots)?,
        gains,
        energy,
        trials: trials.unwrap_or(section.trials),
        seed: seed.unwrap_or(section.seed),
        cooperation: section.cooperation,
        solver: config.solver.clone(),
    };
    base.validate()?;
    let Some(axis) = section.series_axis else {
        if !section.series.is_empty() {
            bail!("[sweep] series values given without series_axis");
        }
        return Ok(vec![(None, base)]);
    };
    if section.series.is_empty() {
        bail!("[sweep] series_axis given without series values");
    }
    if axis == section.axis {
        bail!("[sweep] series_axis must differ from axis");
    }
    section
        .series
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            match axis {
                SweepAxis::Bp => c.params.b_p = v,
                SweepAxis::Alpha => c.params.alpha = v,
                SweepAxis::Ep | SweepAxis::Es => match &mut c.energy {
                    EnergySpec::Fixed { e_p, e_s } => {
                        let target = if axis == SweepAxis::Ep { e_p } else { e_s };
                        target.iter_mut().for_each(|e| *e = v);
                    }
                    EnergySpec::Uniform { .. } => bail!("energy series need fixed [energy] vectors"),
                },
            }
            c.validate()?;
            Ok((Some(v), c))
        })
        .collect()
}

fn sweep(common: &Common, out: &mut impl Write) -> Result<Exit> {
    let config = load(common)?;
    let runs = sweep_configs(&config, common.seed, common.trials)?;
    let series_name = config.sweep.as_ref().and_then(|s| s.series_axis).map(|a| a.name());
    let results: Vec<(Option<f64>, SweepResult)> =
        runs.iter().map(|(v, c)| Ok((*v, run_sweep(c)?))).collect::<Result<_>>()?;
    let series: Vec<SeriesRun<'_>> = results
        .iter()
        .map(|(v, r)| SeriesRun { series: series_name.zip(*v), result: r })
        .collect();

    for s in &series {
        if let Some((name, v)) = s.series {
            writeln!(out, "# {name} = {}", fmt_sig(v))?;
        }
        writeln!(out, "{:>10} {:>14} {:>14} {:>14} {:>9}", s.result.axis.name(), "su_coop", "su_nocoop", "transfer", "feasible")?;
        for row in &s.result.rows {
            let cell = |x: Option<f64>| x.map(fmt_sig).unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "{:>10} {:>14} {:>14} {:>14} {:>9}",
                fmt_sig(row.value),
                cell(row.coop.map(|a| a.mean_su_bits)),
                cell(row.no_coop.map(|a| a.mean_su_bits)),
                cell(row.coop.or(row.no_coop).map(|a| a.mean_transfer_total)),
                format!("{}/{}", row.feasible, row.trials)
            )?;
        }
    }
    if let Some(path) = &config.output.csv {
        output::write_sweep_csv(path, &series)?;
        output::write_sweep_dat(&output::dat_path(path), &series)?;
    }
    Ok(Exit::Ok)
}

/// One random oracle instance drawn from the configuration.
pub fn oracle_instance(config: &RunConfig, n_slots: usize, seed: u64, draw: u64) -> Result<(SystemParams, Trace)> {
    let oracle = config.oracle.as_ref().context("missing [oracle] section")?;
    let energy = config.energy.as_ref().context("missing [energy] section")?.spec()?;
    let gains = config.channel.as_ref().context("missing [channel] section")?.gain_spec()?;
    let mut rng = trial_rng(seed, draw);
    let trace = sample_trace(&gains, &energy, n_slots, &mut rng)?;
    let mut params = config.params(n_slots)?;
    if let Some([lo, hi]) = oracle.b_p_range {
        params.b_p = rng.random_range(lo..=hi);
    }
    if let Some([lo, hi]) = oracle.alpha_range {
        params.alpha = rng.random_range(lo..=hi);
    }
    params.validate()?;
    Ok((params, trace))
}

fn oracle_check(common: &Common, out: &mut impl Write, err: &mut impl Write) -> Result<Exit> {
    let config = load(common)?;
    let oracle = config.oracle.clone().context("missing [oracle] section")?;
    let n = oracle.n_slots;
    if !(1..=2).contains(&n) {
        bail!("oracle supports N ≤ 2, got n_slots = {n}");
    }
    let instances = common.trials.unwrap_or(oracle.instances);
    let seed = common.seed.unwrap_or(oracle.seed);
    let grid = GridSpec::new(oracle.points_per_axis)?;

    let mut rows = Vec::new();
    let mut violations = 0;
    let mut max_gap: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    let mut draw = 0u64;
    let max_draws = 1000 * instances as u64 + 1000;
    while rows.len() < instances {
        if draw >= max_draws {
            bail!("only {} of {instances} feasible instances in {max_draws} draws", rows.len());
        }
        let (params, trace) = oracle_instance(&config, n, seed, draw)?;
        draw += 1;
        let (solver_bits, policy, check_trace, grid_out) = if n == 1 {
            let slot = trace.slots[0];
            if !single_slot_feasible(&params, &slot) {
                continue;
            }
            let sol = solve_single_slot(&params, &slot)?;
            let (e_p, e_s) = slot.effective_budgets(params.e_max);
            let clipped = Trace::single(SlotData { e_p, e_s, ..slot });
            let policy = Policy { p_p: vec![sol.p_p], p_s: vec![sol.p_s], delta_sp: vec![sol.delta_sp] };
            (sol.su_bits, policy, clipped, grid_search_n1(&params, &slot, grid)?)
        } else {
            let g = grid_search_n2(&params, &trace, grid)?;
            if g.strict.is_none() {
                continue;
            }
            let report = solve_multi_slot(&params, &trace, &config.solver)?;
            (report.su_bits, report.policy, trace.clone(), g)
        };
        let Some((_, strict)) = grid_out.strict else {
            continue;
        };
        let relaxed = grid_out.relaxed.as_ref().map(|r| r.1).unwrap_or(strict);
        let bound = grid_out.error_bound;
        let check = independent_constraint_check(&params, &check_trace, &policy, 1e-6)?;
        let ratio = if strict > 0.0 { solver_bits / strict } else { 1.0 };
        let mut problems = Vec::new();
        if !check.is_feasible() {
            problems.push(format!("solver policy fails the constraint check: {check:?}"));
        }
        if solver_bits > relaxed + bound + DEFAULT_TOL {
            problems.push("solver exceeds the oracle incumbent by more than the grid bound".to_string());
        }
        if n == 1 && solver_bits < strict - DEFAULT_TOL {
            problems.push("exact solver is beaten by a feasible grid point".to_string());
        }
        if n == 1 && solver_bits < relaxed - bound {
            problems.push("exact solver is below the relaxed incumbent minus the grid bound".to_string());
        }
        if n == 2 && ratio < oracle.min_ratio {
            problems.push(format!("subgradient/oracle ratio {ratio} below {}", oracle.min_ratio));
        }
        let scale = strict.max(solver_bits);
        if scale > 0.0 {
            max_gap = max_gap.max((solver_bits - strict).abs() / scale);
        }
        min_ratio = min_ratio.min(ratio);
        if !problems.is_empty() {
            violations += 1;
            writeln!(err, "violation on draw {}: {}", draw - 1, problems.join("; "))?;
            writeln!(err, "  params {params:?}")?;
            writeln!(err, "  trace {:?}", trace.slots)?;
            writeln!(err, "  policy {policy:?}")?;
        }
        rows.push(vec![
            (rows.len() + 1).to_string(),
            fmt_sig(solver_bits),
            fmt_sig(strict),
            fmt_sig(relaxed),
            fmt_sig(bound),
            fmt_sig(ratio),
            problems.is_empty().to_string(),
        ]);
    }
    print_line(out, "instances", instances)?;
    print_line(out, "max_rel_gap", fmt_sig(max_gap))?;
    print_line(out, "min_ratio", fmt_sig(min_ratio))?;
    print_line(out, "violations", violations)?;
    if let Some(path) = &config.output.csv {
        output::write_rows(
            path,
            &["instance", "solver_bits", "grid_strict", "grid_relaxed", "error_bound", "ratio", "ok"],
            &rows,
        )?;
    }
    Ok(if violations == 0 { Exit::Ok } else { Exit::OracleViolation })
}
