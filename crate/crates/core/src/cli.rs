//! Command-line driver: runs one job described by a [`RunConfig`] and writes
//! CSV and JSON artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_register_state, Mode, RunConfig};
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::krotov::{
    evaluate_with_loss, fidelity, nonlocal_phase, optimize, propagate_register, IterationRecord,
};
use crate::metrics::{motional_leakage, population_dynamics, pulse_spectrum, RegisterBasis, SpectrumOptions};
use crate::noise::noise_budget_report;
use crate::propagator::Propagator;
use crate::state::{channel_label, TwoAtomState, N_CHANNELS};
use crate::system::{ControlField, DecayMode, Field, Hamiltonian, SystemParameters};
use crate::units::rad_per_ns_to_mhz;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "RYDGATE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "rydgate", version, about = "Optimal control of a two-atom Rydberg phase gate")]
pub struct Cli {
    /// JSON configuration file; defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the mode given in the configuration.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Only report errors.
    #[arg(long)]
    pub quiet: bool,
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_) => 2,
        Error::Numeric { .. } | Error::UndefinedPhase { .. } | Error::Io(_) => 3,
        Error::Monotonicity { .. } => 4,
    }
}

/// Parse, run and map the outcome to an exit status.
pub fn main_with(cli: Cli) -> i32 {
    let mut config = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(mode) = cli.mode {
        config.mode = mode;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    match run(&config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Run the job described by `config`, writing into `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.output_dir)?;
    match config.mode {
        Mode::NoiseBudget => {
            let report = noise_budget_report(&config.noise)?;
            write_json(&config.output_dir.join("noise_budget.json"), &report)
        }
        Mode::Optimize => run_optimize(config, config.numerics.gate_time_ns, &config.output_dir).map(|_| ()),
        Mode::Propagate => run_propagate(config),
        Mode::EvaluateLoss => run_evaluate_loss(config),
        Mode::SweepT => run_sweep(config),
    }
}

/// Format a number for CSV: scientific notation for non-zero `|x| < 1e-3`.
pub fn fmt_num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt_num)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn write_fields(path: &Path, fields: &ControlField, params: &SystemParameters) -> Result<()> {
    let wr = fields.rabi(Field::Red, params.omega_r0);
    let wb = fields.rabi(Field::Blue, params.omega_b0);
    let rows = (0..=fields.n_t).map(|n| {
        vec![
            fields.time(n),
            fields.eps_r[n],
            fields.eps_b[n],
            rad_per_ns_to_mhz(wr[n]),
            rad_per_ns_to_mhz(wb[n]),
        ]
    });
    write_csv(
        path,
        &strings(&["t_ns", "eps_R", "eps_B", "Omega_R_MHz", "Omega_B_MHz"]),
        rows,
    )
}

/// Read controls from a CSV whose first three columns are `t_ns,eps_R,eps_B`.
pub fn read_fields(path: &Path) -> Result<ControlField> {
    let bad = |msg: String| Error::Config(format!("fields file {}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut t = Vec::new();
    let mut r = Vec::new();
    let mut b = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let value = |j: usize| -> Result<f64> {
            record
                .get(j)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(format!("bad value in row {}", i + 1)))
        };
        t.push(value(0)?);
        r.push(value(1)?);
        b.push(value(2)?);
    }
    let duration = *t.last().ok_or_else(|| bad("no rows".into()))?;
    ControlField::from_samples(duration, r, b)
}

fn write_convergence(path: &Path, records: &[IterationRecord]) -> Result<()> {
    write_csv(
        path,
        &strings(&["iteration", "J", "F", "constraint_avg"]),
        records
            .iter()
            .map(|r| vec![r.iteration as f64, r.j, r.fidelity, r.constraint_avg]),
    )
}

fn write_populations(path: &Path, traj: &crate::propagator::Trajectory) -> Result<()> {
    let pops = population_dynamics(traj);
    let mut header = vec!["t_ns".to_string()];
    header.extend((0..N_CHANNELS).map(|c| format!("p{}", channel_label(c))));
    let rows = pops.times.iter().zip(&pops.values).map(|(t, p)| {
        let mut row = vec![*t];
        row.extend_from_slice(p);
        row
    });
    write_csv(path, &header, rows)
}

fn write_spectrum(path: &Path, fields: &ControlField, params: &SystemParameters, raw: bool) -> Result<()> {
    let opts = if raw {
        SpectrumOptions::raw()
    } else {
        SpectrumOptions::default()
    };
    let s = pulse_spectrum(fields, params, opts);
    let rows = (0..s.freq_mhz.len()).map(|k| vec![s.freq_mhz[k], s.amp_r[k], s.amp_b[k]]);
    write_csv(path, &strings(&["f_MHz", "amp_R", "amp_B"]), rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct RunResult {
    pub gate_time_ns: f64,
    pub gate_error: f64,
    pub gate_error_with_loss: Option<f64>,
    pub nonlocal_phase: Option<f64>,
    pub motional_leakage: f64,
    pub motional_leakage_per_state: [f64; 4],
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
}

fn initial_fields(config: &RunConfig, duration: f64) -> Result<ControlField> {
    match &config.numerics.fields_file {
        Some(path) => read_fields(path),
        None => config.numerics.guess.field(duration, config.steps_for(duration)),
    }
}

fn trajectory_for(
    config: &RunConfig,
    fields: &ControlField,
    params: &SystemParameters,
    grid: &SpatialGrid,
    mode: DecayMode,
) -> Result<crate::propagator::Trajectory> {
    let (index, _, _) = parse_register_state(&config.numerics.initial_state).map_err(Error::Config)?;
    let basis = RegisterBasis::trap_ground(params, grid)?;
    let prop = Propagator::new(Hamiltonian::new(params, grid, mode)?, fields.dt)?;
    prop.propagate(&basis.states[index], fields, config.numerics.stride)
}

fn summarize(
    config: &RunConfig,
    fields: &ControlField,
    params: &SystemParameters,
    grid: &SpatialGrid,
    states: &[TwoAtomState],
    basis: &RegisterBasis,
) -> Result<(f64, Option<f64>, Option<f64>, crate::metrics::Leakage)> {
    let target = config.target();
    let error = 1.0 - fidelity(states, &target, basis)?;
    let phase = nonlocal_phase(states, basis).ok();
    let leakage = motional_leakage(states, basis)?;
    let with_loss = if config.numerics.evaluate_loss {
        Some(evaluate_with_loss(fields, params, grid, params.gamma_i, params.gamma_r, &target)?)
    } else {
        None
    };
    Ok((error, with_loss, phase, leakage))
}

fn run_optimize(config: &RunConfig, duration: f64, out: &Path) -> Result<RunResult> {
    let start = Instant::now();
    fs::create_dir_all(out)?;
    let params = config.system_parameters()?;
    let grid = config.grid()?;
    let initial = initial_fields(config, duration)?;
    let opt = config.optimization_config(initial.n_t);
    let result = optimize(initial, opt, &params, &grid)?;
    write_convergence(&out.join("convergence.csv"), &result.records)?;
    write_fields(&out.join("fields.csv"), &result.fields, &params)?;
    let traj = trajectory_for(config, &result.fields, &params, &grid, DecayMode::Hermitian)?;
    write_populations(&out.join("populations.csv"), &traj)?;
    write_spectrum(&out.join("spectrum.csv"), &result.fields, &params, config.numerics.raw_spectrum)?;
    let basis = RegisterBasis::trap_ground(&params, &grid)?;
    let (gate_error, with_loss, phase, leakage) =
        summarize(config, &result.fields, &params, &grid, &result.final_states, &basis)?;
    let summary = RunResult {
        gate_time_ns: duration,
        gate_error,
        gate_error_with_loss: with_loss,
        nonlocal_phase: phase,
        motional_leakage: leakage.total,
        motional_leakage_per_state: leakage.per_state,
        iterations: result.records.len() - 1,
        converged: result.converged,
        wall_time: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join("result.json"), &summary)?;
    log::info!("T = {duration} ns: gate error {gate_error:.4e}");
    Ok(summary)
}

fn run_propagate(config: &RunConfig) -> Result<()> {
    let start = Instant::now();
    let out = &config.output_dir;
    let params = config.system_parameters()?;
    let grid = config.grid()?;
    let duration = config.numerics.gate_time_ns;
    let fields = initial_fields(config, duration)?;
    let traj = trajectory_for(config, &fields, &params, &grid, DecayMode::Hermitian)?;
    write_populations(&out.join("populations.csv"), &traj)?;
    write_fields(&out.join("fields.csv"), &fields, &params)?;
    write_spectrum(&out.join("spectrum.csv"), &fields, &params, config.numerics.raw_spectrum)?;
    let (basis, states) = propagate_register(&fields, &params, &grid, DecayMode::Hermitian)?;
    let (gate_error, with_loss, phase, leakage) = summarize(config, &fields, &params, &grid, &states, &basis)?;
    write_json(
        &out.join("result.json"),
        &RunResult {
            gate_time_ns: fields.duration,
            gate_error,
            gate_error_with_loss: with_loss,
            nonlocal_phase: phase,
            motional_leakage: leakage.total,
            motional_leakage_per_state: leakage.per_state,
            iterations: 0,
            converged: false,
            wall_time: start.elapsed().as_secs_f64(),
        },
    )
}

fn run_evaluate_loss(config: &RunConfig) -> Result<()> {
    let mut c = config.clone();
    c.numerics.evaluate_loss = true;
    run_propagate(&c)
}

#[derive(Serialize)]
struct TableRow {
    t_ns: f64,
    error_no_loss: f64,
    error_with_loss: f64,
}

fn run_sweep(config: &RunConfig) -> Result<()> {
    let mut c = config.clone();
    c.numerics.evaluate_loss = true;
    let rows: Vec<Result<TableRow>> = c
        .numerics
        .sweep_t_ns
        .par_iter()
        .map(|&t| {
            let dir = c.output_dir.join(format!("T_{t}ns"));
            let r = run_optimize(&c, t, &dir)?;
            Ok(TableRow {
                t_ns: t,
                error_no_loss: r.gate_error,
                error_with_loss: r.gate_error_with_loss.unwrap_or(f64::NAN),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    write_csv(
        &c.output_dir.join("table.csv"),
        &strings(&["T_ns", "error_no_loss", "error_with_loss"]),
        rows.iter().map(|r| vec![r.t_ns, r.error_no_loss, r.error_with_loss]),
    )
}

/// Configure the global thread pool from [`THREADS_ENV`], if set.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}
