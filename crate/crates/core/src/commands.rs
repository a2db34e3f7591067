//! Batch commands: each reads a [`RunConfig`], writes its data files plus a
//! normalised config echo into the output directory, and returns a short
//! text summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{
    coupling_experiment, decay_experiment, delta0, invariant_moments, kappa_interval, Condition, EnergyParams,
};
use crate::config::RunConfig;
use crate::dynamics::Growth;
use crate::error::Result;
use crate::noise::{sample_path, Band};
use crate::solver::{picard_iterate, simulate, simulate_with, SimulateOptions};

pub const ECHO_FILE: &str = "config.echo.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Stability,
    Decay,
    Couple,
    Moments,
    Picard,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Simulate,
        Command::Stability,
        Command::Decay,
        Command::Couple,
        Command::Moments,
        Command::Picard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Stability => "stability",
            Command::Decay => "decay",
            Command::Couple => "couple",
            Command::Moments => "moments",
            Command::Picard => "picard",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(config: &RunConfig) -> Result<Self> {
        let dir = config.output.directory.clone();
        fs::create_dir_all(&dir)?;
        let mut w = Self { dir, files: Vec::new() };
        w.text(ECHO_FILE, &config.echo())?;
        Ok(w)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }

    fn bytes(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self, summary: String) -> CommandOutput {
        CommandOutput {
            files: self.files,
            summary,
        }
    }
}

pub fn run(command: Command, config: &RunConfig) -> Result<CommandOutput> {
    match command {
        Command::Simulate => cmd_simulate(config),
        Command::Stability => cmd_stability(config),
        Command::Decay => cmd_decay(config),
        Command::Couple => cmd_couple(config),
        Command::Moments => cmd_moments(config),
        Command::Picard => cmd_picard(config),
    }
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    model: String,
    epsilon: f64,
    seed: u64,
    stream_id: u64,
    theta_bar: f64,
    theta_under: f64,
    theta_p: Option<f64>,
    truncation_budget: f64,
    small_rate: f64,
    jumps_small: usize,
    jumps_big: usize,
    ignored_events: usize,
    delta: f64,
    initial_energy: f64,
    final_energy: f64,
    projection_loss: Option<f64>,
}

pub fn cmd_simulate(config: &RunConfig) -> Result<CommandOutput> {
    let domain = config.spectral_domain()?;
    let model = config.model()?;
    let coeff = config.coefficients();
    let initial = config.initial_x()?;
    let path = sample_path(
        &model,
        config.solver.horizon,
        config.noise.seed,
        config.experiment.stream_id,
    )?;
    let options = SimulateOptions {
        quadratic_ledger: false,
        diagnostics: true,
    };
    let traj = simulate_with(&initial, &path, &config.solver, &coeff, &model, &domain, options)?;
    let delta = delta0(config.solver.kappa, domain.lambda1());
    let rows = traj.rows(delta, &domain);

    let mut w = Writer::new(config)?;
    w.text("trajectory.csv", &traj.to_csv(delta, &domain))?;
    w.text("noise_path.csv", &path.to_csv())?;
    if config.output.binary {
        let mut buf = Vec::new();
        traj.write_binary(&mut buf)?;
        w.bytes("trajectory.bin", &buf)?;
    }
    let summary = SimulateSummary {
        model: model.describe(),
        epsilon: model.small_cutoff(),
        seed: config.noise.seed,
        stream_id: config.experiment.stream_id,
        theta_bar: model.theta_bar()?,
        theta_under: model.theta_under()?,
        theta_p: match coeff.growth {
            Growth::H2Prime(p) => Some(model.theta_p(p)?),
            Growth::H2 => None,
        },
        truncation_budget: traj.truncation_budget,
        small_rate: model.small_rate()?,
        jumps_small: traj.events_applied[0],
        jumps_big: traj.events_applied[1],
        ignored_events: traj.ignored_events,
        delta,
        initial_energy: rows[0].energy,
        final_energy: rows.last().map_or(f64::NAN, |r| r.energy),
        projection_loss: traj.projection_loss,
    };
    w.json("summary.json", &summary)?;
    let text = format!(
        "simulated T = {} with {} small and {} big jumps; E(0) = {}, E(T) = {}; truncation budget {}\n",
        config.solver.horizon,
        summary.jumps_small,
        summary.jumps_big,
        summary.initial_energy,
        summary.final_energy,
        summary.truncation_budget
    );
    Ok(w.finish(text))
}

#[derive(Debug, Serialize)]
struct StabilityReport {
    lambda1: f64,
    kappa: f64,
    growth: String,
    theta_bar: f64,
    theta_under: f64,
    theta_p: Option<f64>,
    ell_a: f64,
    ell_b: f64,
    delta0: f64,
    delta: f64,
    lambda_rate: f64,
    conditions: Vec<Condition>,
    feasible: bool,
    kappa_interval: Option<[f64; 2]>,
    truncation_budget: f64,
}

fn growth_name(g: Growth) -> String {
    match g {
        Growth::H2 => "H2".into(),
        Growth::H2Prime(p) => format!("H2'(p={p})"),
    }
}

pub fn cmd_stability(config: &RunConfig) -> Result<CommandOutput> {
    let domain = config.spectral_domain()?;
    let model = config.model()?;
    let params = config.params()?;
    let theta_p = match params.growth {
        Growth::H2Prime(p) => Some(model.theta_p(p)?),
        Growth::H2 => None,
    };
    let interval = kappa_interval(
        domain.lambda1(),
        params.theta_bar,
        params.ell_a,
        params.theta_under_or_p,
        params.ell_b,
    );
    let report = StabilityReport {
        lambda1: params.lambda1,
        kappa: params.kappa,
        growth: growth_name(params.growth),
        theta_bar: params.theta_bar,
        theta_under: model.theta_under()?,
        theta_p,
        ell_a: params.ell_a,
        ell_b: params.ell_b,
        delta0: params.delta0,
        delta: params.delta,
        lambda_rate: params.lambda_rate,
        conditions: params.conditions.clone(),
        feasible: params.feasible,
        kappa_interval: interval.map(|(a, b)| [a, b]),
        truncation_budget: model.truncation_budget()?,
    };
    let mut w = Writer::new(config)?;
    w.json("stability.json", &report)?;
    let mut text = String::new();
    let _ = writeln!(text, "delta0 = {}", report.delta0);
    for c in &report.conditions {
        let _ = writeln!(
            text,
            "{:<8} {}: {} < {} ({}, margin {})",
            c.name,
            c.description,
            c.lhs,
            c.rhs,
            if c.holds { "holds" } else { "VIOLATED" },
            c.margin
        );
    }
    match interval {
        Some((a, b)) => {
            let _ = writeln!(text, "admissible kappa interval: ({a}, {b})");
        }
        None => {
            let _ = writeln!(text, "admissible kappa interval: empty");
        }
    }
    let _ = writeln!(text, "delta = {}", report.delta);
    let _ = writeln!(text, "lambda = {}", report.lambda_rate);
    let _ = writeln!(text, "feasible = {}", report.feasible);
    Ok(w.finish(text))
}

fn series_csv(header: &str, times: &[f64], cols: &[&[f64]], envelope: Option<&Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for (j, t) in times.iter().enumerate() {
        let _ = write!(out, "{t}");
        for c in cols {
            let _ = write!(out, ",{}", c[j]);
        }
        match envelope {
            Some(e) => {
                let _ = writeln!(out, ",{}", e[j]);
            }
            None => out.push_str(",\n"),
        }
    }
    out
}

#[derive(Serialize)]
struct WithParams<'a, T: Serialize> {
    params: &'a EnergyParams,
    report: &'a T,
}

pub fn cmd_decay(config: &RunConfig) -> Result<CommandOutput> {
    let domain = config.spectral_domain()?;
    let model = config.model()?;
    let coeff = config.coefficients();
    let params = config.params()?;
    let report = decay_experiment(
        &config.initial_x()?,
        &config.settings(),
        &config.solver,
        &coeff,
        &model,
        &domain,
        &params,
    )?;
    let mut w = Writer::new(config)?;
    w.json(
        "decay.json",
        &WithParams {
            params: &params,
            report: &report,
        },
    )?;
    w.text(
        "decay.csv",
        &series_csv(
            "t,mean_energy,stderr,envelope",
            &report.times,
            &[&report.mean_energy, &report.stderr],
            report.envelope.as_ref(),
        ),
    )?;
    let text = match report.bound_violations {
        Some(v) => format!(
            "decay: {} paths, lambda = {}, fitted rate {}, bound violations {v}\n",
            report.n_paths,
            report.lambda_rate,
            report.fitted_rate.map_or("n/a".into(), |f| f.rate.to_string())
        ),
        None => format!(
            "decay: stability conditions violated ({}); no bound checked\n",
            params.violations().join(", ")
        ),
    };
    Ok(w.finish(text))
}

pub fn cmd_couple(config: &RunConfig) -> Result<CommandOutput> {
    let domain = config.spectral_domain()?;
    let model = config.model()?;
    let coeff = config.coefficients();
    let params = config.params()?;
    let report = coupling_experiment(
        &config.initial_x()?,
        &config.initial_y()?,
        &config.settings(),
        &config.solver,
        &coeff,
        &model,
        &domain,
        &params,
    )?;
    let mut w = Writer::new(config)?;
    w.json(
        "coupling.json",
        &WithParams {
            params: &params,
            report: &report,
        },
    )?;
    w.text(
        "coupling.csv",
        &series_csv(
            "t,mean_diff_energy,stderr,envelope",
            &report.times,
            &[&report.mean_diff_energy, &report.stderr],
            report.envelope.as_ref(),
        ),
    )?;
    let text = format!(
        "couple: {} paths, max |X - Y| = {}, fitted rate {}, contraction pass {:?}\n",
        report.n_paths,
        report.max_abs_difference,
        report.fitted_rate.map_or("n/a".into(), |f| f.rate.to_string()),
        report.contraction_pass
    );
    Ok(w.finish(text))
}

pub fn cmd_moments(config: &RunConfig) -> Result<CommandOutput> {
    let domain = config.spectral_domain()?;
    let model = config.model()?;
    let coeff = config.coefficients();
    let params = config.params()?;
    let burn_in = config.experiment.burn_in.unwrap_or(5.0 / params.lambda_rate);
    let window = config.experiment.window.unwrap_or(config.solver.horizon);
    let table = invariant_moments(
        &config.initial_x()?,
        &config.initial_y()?,
        burn_in,
        window,
        &config.settings(),
        &config.solver,
        &coeff,
        &model,
        &domain,
        &params,
    )?;
    let mut w = Writer::new(config)?;
    w.json(
        "moments.json",
        &WithParams {
            params: &params,
            report: &table,
        },
    )?;
    let mut csv = String::from("moment,mean_x,stderr_x,mean_y,stderr_y,agree,agree_with_budget\n");
    for r in &table.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.name, r.x.mean, r.x.stderr, r.y.mean, r.y.stderr, r.agree, r.agree_with_budget
        );
    }
    w.text("moments.csv", &csv)?;
    let text = format!(
        "moments: burn-in {burn_in}, window {window}, agree {}, agree with transient budget {}\n",
        table.agree, table.agree_with_budget
    );
    Ok(w.finish(text))
}

#[derive(Debug, Serialize)]
struct PicardSummary {
    iterations: usize,
    distances: Vec<f64>,
    /// Sup over record times of the `VxH` distance from the last iterate to
    /// the direct solution on the same path.
    distance_to_direct: f64,
    small_jumps: usize,
    big_jumps_dropped: usize,
}

pub fn cmd_picard(config: &RunConfig) -> Result<CommandOutput> {
    let domain = config.spectral_domain()?;
    let model = config.model()?;
    let coeff = config.coefficients();
    let initial = config.initial_x()?;
    let full = sample_path(
        &model,
        config.solver.horizon,
        config.noise.seed,
        config.experiment.stream_id,
    )?;
    let path = full.small_only();
    let result = picard_iterate(
        &initial,
        &path,
        &config.solver,
        &coeff,
        &model,
        &domain,
        config.experiment.iterations,
    )?;
    let direct = simulate(&initial, &path, &config.solver, &coeff, &model, &domain)?;
    let distance_to_direct = result
        .last()
        .states
        .iter()
        .zip(&direct.states)
        .map(|(a, b)| a.vh_distance(b, &domain))
        .fold(0.0, f64::max);
    let summary = PicardSummary {
        iterations: config.experiment.iterations,
        distances: result.distances.clone(),
        distance_to_direct,
        small_jumps: path.count(Band::Small),
        big_jumps_dropped: full.count(Band::Big),
    };
    let delta = delta0(config.solver.kappa, domain.lambda1());
    let mut w = Writer::new(config)?;
    w.json("picard.json", &summary)?;
    let mut csv = String::from("n,d_n\n");
    for (n, d) in summary.distances.iter().enumerate() {
        let _ = writeln!(csv, "{n},{d}");
    }
    w.text("picard_distances.csv", &csv)?;
    w.text("picard_final.csv", &result.last().to_csv(delta, &domain))?;
    let text = format!(
        "picard: {} iterations, last d_n = {}, distance to direct solution {}\n",
        summary.iterations,
        summary.distances.last().copied().unwrap_or(0.0),
        distance_to_direct
    );
    Ok(w.finish(text))
}

/// Reads `config.echo.toml` back from an output directory.
pub fn read_echo(dir: &Path) -> Result<RunConfig> {
    RunConfig::from_path(&dir.join(ECHO_FILE))
}
