//! Subcommand bodies. Each returns the files it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sgdlab::experiments::{
    band_rows, exit_row_analytic, exit_row_rrw, exit_row_sgd, himmelblau_path, ExitRow, WellNoise,
};
use sgdlab::montecarlo::{
    exit_side_frequencies, fraction_in_band, run_batch, sticking_experiment, trace_run, BatchResult,
    Counters, ExitFrequencies, Proportion, ScenarioEcho, StickingExperiment,
};
use sgdlab::noise::{NoiseModel, Regime};
use sgdlab::stats::derive_seed;
use sgdlab::timescales::membership_report;

use crate::config::{self, BandConfig, Config};
use crate::{Cli, CliError, Command};

type Out = Result<Vec<PathBuf>, CliError>;

/// Loads the configuration, applies overrides and runs the subcommand on
/// the requested worker pool.
pub fn execute(cli: &Cli) -> Out {
    let mut cfg = match &cli.common.config {
        Some(path) => config::load(path).map_err(CliError::Config)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    apply_runs(&mut cfg, cli.command, cli.common.runs);
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    fs::create_dir_all(&cli.common.out)?;
    let out = cli.common.out.as_path();
    let command = cli.command;
    sgdlab::par::with_workers(cli.common.workers, || dispatch(command, &cfg, out))?
}

fn apply_runs(cfg: &mut Config, command: Command, runs: Option<u64>) {
    let Some(n) = runs else { return };
    match command {
        Command::Run | Command::Trajectory => {
            if let Some(s) = cfg.scenario.as_mut() {
                s.runs = n;
            }
        }
        Command::Table1 => cfg.table1.get_or_insert_with(BandConfig::table1).runs = n,
        Command::Table2 => cfg.table2.get_or_insert_with(BandConfig::table2).runs = n,
        Command::Table3 => cfg.table3.get_or_insert_with(Default::default).runs = n,
        Command::Escape => cfg.escape.get_or_insert_with(Default::default).runs = n,
        Command::Sticking => cfg.sticking.get_or_insert_with(Default::default).runs = n,
        Command::Timescale | Command::Himmelblau => {}
    }
}

fn dispatch(command: Command, cfg: &Config, out: &Path) -> Out {
    match command {
        Command::Run => run(cfg, out),
        Command::Trajectory => trajectory(cfg, out),
        Command::Table1 => {
            let b = cfg.table1.clone().unwrap_or_else(BandConfig::table1);
            band_table(&b, cfg.seed, &out.join("table1.csv"), false)
        }
        Command::Table2 => {
            let b = cfg.table2.clone().unwrap_or_else(BandConfig::table2);
            band_table(&b, cfg.seed, &out.join("table2.csv"), true)
        }
        Command::Table3 => table3(cfg, out),
        Command::Escape => escape(cfg, out),
        Command::Sticking => sticking(cfg, out),
        Command::Timescale => timescale(cfg, out),
        Command::Himmelblau => himmelblau(cfg, out),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Out {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(vec![path.to_path_buf()])
}

/// Writes a header-only file when there are no rows, so the schema is
/// visible either way.
fn write_csv_with_header<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Out {
    if rows.is_empty() {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(header)?;
        w.flush()?;
        return Ok(vec![path.to_path_buf()]);
    }
    write_csv(path, rows)
}

fn scenario_section(cfg: &Config) -> Result<&config::ScenarioConfig, CliError> {
    cfg.scenario.as_ref().ok_or_else(|| CliError::config("missing [scenario] section"))
}

#[derive(Serialize)]
pub struct RunRow {
    pub index: u64,
    pub seed: u64,
    pub x0: f64,
    pub final_x: f64,
    pub steps: u64,
    pub status: &'static str,
    pub exit_step: Option<u64>,
    pub exit_side: Option<&'static str>,
    pub crossings: u64,
    pub transitions: u64,
}

pub const RUN_HEADER: [&str; 10] = [
    "index", "seed", "x0", "final_x", "steps", "status", "exit_step", "exit_side", "crossings",
    "transitions",
];

#[derive(Serialize)]
struct RunSummary<'a> {
    config: &'a ScenarioEcho,
    counters: Counters,
    #[serde(skip_serializing_if = "Option::is_none")]
    band: Option<Proportion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exits: Option<ExitFrequencies>,
    mean_transitions: f64,
    wall_clock_secs: f64,
    version: &'a str,
}

fn run_rows(b: &BatchResult) -> Vec<RunRow> {
    b.runs
        .iter()
        .map(|d| RunRow {
            index: d.index,
            seed: d.seed,
            x0: d.x0,
            final_x: d.final_x,
            steps: d.steps,
            status: d.status.name(),
            exit_step: d.exit.map(|e| e.step),
            exit_side: d.exit.map(|e| match e.side {
                sgdlab::sgd::Side::Left => "left",
                sgdlab::sgd::Side::Right => "right",
            }),
            crossings: d.crossings,
            transitions: d.transitions,
        })
        .collect()
}

fn run(cfg: &Config, out: &Path) -> Out {
    let sc = scenario_section(cfg)?;
    let b = run_batch(&sc.scenario(cfg.seed)?)?;
    let mut written = write_csv_with_header(&out.join("runs.csv"), &RUN_HEADER, &run_rows(&b))?;
    let band = sc.band.map(|[lo, hi]| fraction_in_band(&b, (lo, hi))).transpose()?;
    let exits = if sc.stop.interval().is_some() { exit_side_frequencies(&b).ok() } else { None };
    let total: u64 = b.runs.iter().map(|d| d.transitions).sum();
    let summary = RunSummary {
        config: &b.config,
        counters: b.counters,
        band,
        exits,
        mean_transitions: total as f64 / b.runs.len() as f64,
        wall_clock_secs: b.wall_clock_secs,
        version: &b.version,
    };
    let path = out.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, json + "\n")?;
    written.push(path);
    Ok(written)
}

#[derive(Serialize)]
pub struct TrajectoryRow {
    pub step: u64,
    pub x: f64,
}

fn trajectory(cfg: &Config, out: &Path) -> Out {
    let sc = scenario_section(cfg)?;
    let t = trace_run(&sc.scenario(cfg.seed)?, 0, sc.record_stride)?;
    let rows: Vec<TrajectoryRow> =
        t.path.unwrap_or_default().into_iter().map(|(step, x)| TrajectoryRow { step, x }).collect();
    write_csv(&out.join("trajectory.csv"), &rows)
}

#[derive(Serialize)]
pub struct Table1Row {
    pub noise: &'static str,
    pub epsilon: f64,
    pub n_eps: u64,
    pub fraction: f64,
    pub ci_halfwidth: f64,
    pub runs: u64,
}

#[derive(Serialize)]
pub struct Table2Row {
    pub noise: &'static str,
    pub epsilon: f64,
    pub n_eps: u64,
    pub multiple: f64,
    pub steps: u64,
    pub fraction: f64,
    pub ci_halfwidth: f64,
    pub runs: u64,
}

pub const TABLE1_HEADER: [&str; 6] = ["noise", "epsilon", "n_eps", "fraction", "ci_halfwidth", "runs"];
pub const TABLE2_HEADER: [&str; 8] =
    ["noise", "epsilon", "n_eps", "multiple", "steps", "fraction", "ci_halfwidth", "runs"];

fn band_table(b: &BandConfig, seed: u64, path: &Path, with_steps: bool) -> Out {
    let mut rows = Vec::new();
    for (k, (noise, eps)) in
        [(WellNoise::Stable, &b.stable_epsilons), (WellNoise::Gaussian, &b.gaussian_epsilons)]
            .into_iter()
            .enumerate()
    {
        if eps.is_empty() {
            continue;
        }
        for r in band_rows(noise, eps, b.multiple, b.runs, derive_seed(seed, k as u64))? {
            rows.push((r, noise.time_scale().n_eps(r.epsilon)?));
        }
    }
    if with_steps {
        let rows: Vec<Table2Row> = rows
            .iter()
            .map(|(r, n)| Table2Row {
                noise: r.noise.name(),
                epsilon: r.epsilon,
                n_eps: *n,
                multiple: b.multiple,
                steps: r.steps,
                fraction: r.fraction.fraction,
                ci_halfwidth: r.fraction.halfwidth(),
                runs: r.fraction.trials,
            })
            .collect();
        write_csv_with_header(path, &TABLE2_HEADER, &rows)
    } else {
        let rows: Vec<Table1Row> = rows
            .iter()
            .map(|(r, n)| Table1Row {
                noise: r.noise.name(),
                epsilon: r.epsilon,
                n_eps: *n,
                fraction: r.fraction.fraction,
                ci_halfwidth: r.fraction.halfwidth(),
                runs: r.fraction.trials,
            })
            .collect();
        write_csv_with_header(path, &TABLE1_HEADER, &rows)
    }
}

#[derive(Serialize)]
pub struct ExitCsvRow {
    pub beta: f64,
    pub mu_up: f64,
    pub mu_down: f64,
    pub sim_left: Option<f64>,
    pub est_left: f64,
    pub sim_right: Option<f64>,
    pub est_right: f64,
}

pub const EXIT_HEADER: [&str; 7] =
    ["beta", "mu_up", "mu_down", "sim_left", "est_left", "sim_right", "est_right"];

impl From<&ExitRow> for ExitCsvRow {
    fn from(r: &ExitRow) -> Self {
        let sim = |v: f64| if v.is_nan() { None } else { Some(v) };
        Self {
            beta: r.beta,
            mu_up: r.mu_up,
            mu_down: r.mu_down,
            sim_left: sim(r.sim_left),
            est_left: r.est_left,
            sim_right: sim(r.sim_right),
            est_right: r.est_right,
        }
    }
}

fn table3(cfg: &Config, out: &Path) -> Out {
    let t = cfg.table3.clone().unwrap_or_default();
    let setup = t.setup();
    let rows = t
        .betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let r = if t.simulate {
                exit_row_sgd(&setup, beta, t.runs, derive_seed(cfg.seed, i as u64))?
            } else {
                exit_row_analytic(&setup, beta)?
            };
            Ok(ExitCsvRow::from(&r))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_csv_with_header(&out.join("table3.csv"), &EXIT_HEADER, &rows)
}

fn escape(cfg: &Config, out: &Path) -> Out {
    let e = cfg.escape.clone().unwrap_or_default();
    let setup = sgdlab::experiments::ExitSetup { alpha: e.alpha, c_l: e.c_l, c_r: e.c_r, ..Default::default() };
    let rows = e
        .betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let r = exit_row_rrw(&setup, beta, e.runs, e.max_steps, derive_seed(cfg.seed, i as u64))?;
            Ok(ExitCsvRow::from(&r))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_csv_with_header(&out.join("escape.csv"), &EXIT_HEADER, &rows)
}

#[derive(Serialize)]
pub struct StickingCsvRow {
    pub regime: String,
    pub k: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub horizon: u64,
    pub containment: f64,
    pub ci_halfwidth: f64,
    pub runs: u64,
}

pub const STICKING_HEADER: [&str; 8] =
    ["regime", "k", "epsilon", "delta", "horizon", "containment", "ci_halfwidth", "runs"];

/// Noise used for the containment runs under each regime.
pub fn sticking_noise(regime: Regime, alpha: f64) -> sgdlab::Result<NoiseModel> {
    match regime {
        Regime::H1 => NoiseModel::log_corrected_pareto(alpha),
        Regime::H2 => NoiseModel::gaussian(1.0),
    }
}

fn sticking(cfg: &Config, out: &Path) -> Out {
    let s = cfg.sticking.clone().unwrap_or_default();
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for &k in &s.ks {
        for &regime in &s.regimes {
            let mut e = StickingExperiment::new(
                k,
                sticking_noise(regime, s.alpha)?,
                s.epsilons.clone(),
                s.runs,
                derive_seed(cfg.seed, cell),
            );
            e.t = s.t;
            cell += 1;
            let report = sticking_experiment(&e)?;
            rows.extend(report.rows.iter().map(|r| StickingCsvRow {
                regime: regime.to_string(),
                k,
                epsilon: r.epsilon,
                delta: r.delta,
                horizon: r.horizon,
                containment: r.contained.fraction,
                ci_halfwidth: r.contained.halfwidth(),
                runs: r.contained.trials,
            }));
        }
    }
    write_csv_with_header(&out.join("sticking.csv"), &STICKING_HEADER, &rows)
}

#[derive(Serialize)]
pub struct TimescaleRow {
    pub epsilon: f64,
    pub n_eps: u64,
    pub eps_times_n: f64,
    pub tail_times_n: f64,
    pub eps_sq_times_n: f64,
}

fn timescale(cfg: &Config, out: &Path) -> Out {
    let t = cfg.timescale.clone().unwrap_or_default();
    let report = membership_report(&t.time_scale, &t.noise.build()?, &t.epsilons)?;
    let rows: Vec<TimescaleRow> = report
        .rows
        .iter()
        .map(|r| TimescaleRow {
            epsilon: r.epsilon,
            n_eps: r.n_eps,
            eps_times_n: r.eps_n,
            tail_times_n: r.tail_n,
            eps_sq_times_n: r.eps2_n,
        })
        .collect();
    if !report.in_class() {
        eprintln!("note: n_eps does not show the {} class trends on this grid", report.regime);
    }
    write_csv(&out.join("timescale.csv"), &rows)
}

#[derive(Serialize)]
pub struct PlaneRow {
    pub step: u64,
    pub x: f64,
    pub y: f64,
}

/// `himmelblau_eps1e-3.csv` and so on.
pub fn himmelblau_file(epsilon: f64) -> String {
    format!("himmelblau_eps{epsilon:e}.csv")
}

fn himmelblau(cfg: &Config, out: &Path) -> Out {
    let h = cfg.himmelblau.clone().unwrap_or_default();
    let start = (h.start[0], h.start[1]);
    let mut written = Vec::new();
    for (i, &eps) in h.epsilons.iter().enumerate() {
        let stats = himmelblau_path(eps, start, h.steps, h.stride, h.alpha, derive_seed(cfg.seed, i as u64))?;
        if stats.path.aborted {
            eprintln!("note: epsilon {eps:e} path overflowed after {} steps", stats.path.steps_taken);
        }
        let rows: Vec<PlaneRow> =
            stats.path.path.iter().map(|&(step, x, y)| PlaneRow { step, x, y }).collect();
        written.extend(write_csv(&out.join(himmelblau_file(eps)), &rows)?);
    }
    Ok(written)
}
