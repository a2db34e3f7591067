//! Monte Carlo ensembles: energy decay, shared-noise coupling and long-run
//! moment estimates.

use serde::{Deserialize, Serialize};

use super::stats::{fit_log_linear, mean_stderr, LogLinearFit, MeanStderr};
use super::{energy, EnergyParams};
use crate::dynamics::CoefficientPair;
use crate::ensemble::{map_paths, screen_blowups, Execution};
use crate::error::{Error, Result};
use crate::noise::{sample_path, LevyModel};
use crate::solver::{simulate, simulate_with, SimulateOptions, SolverConfig, Trajectory};
use crate::spectral::{GalerkinState, SpectralDomain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub n_paths: usize,
    pub seed: u64,
    /// Path `i` uses noise stream `first_stream + i`.
    pub first_stream: u64,
    /// Monte Carlo tolerance in standard errors.
    pub sigma: f64,
    /// Relative allowance on the energy envelope.
    pub discretization_allowance: f64,
    /// Relative allowance on fitted contraction rates.
    pub rate_allowance: f64,
    /// Rate-fit window as fractions of the horizon.
    pub fit_window: [f64; 2],
    pub execution: Execution,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self {
            n_paths: 1000,
            seed: 0,
            first_stream: 0,
            sigma: 3.0,
            discretization_allowance: 0.02,
            rate_allowance: 0.1,
            fit_window: [0.2, 1.0],
            execution: Execution::Parallel,
        }
    }
}

impl EnsembleSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be at least 1"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::invalid("sigma", "must be non-negative"));
        }
        if !(self.discretization_allowance >= 0.0 && self.rate_allowance >= 0.0) {
            return Err(Error::invalid("allowance", "must be non-negative"));
        }
        let [a, b] = self.fit_window;
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::invalid("fit_window", "need 0 <= start < end <= 1"));
        }
        Ok(())
    }

    fn window(&self, horizon: f64) -> (f64, f64) {
        (self.fit_window[0] * horizon, self.fit_window[1] * horizon)
    }
}

/// Simulates every path of the ensemble, screening blow-ups.
pub fn run_ensemble(
    initial: &GalerkinState,
    settings: &EnsembleSettings,
    config: &SolverConfig,
    coeff: &CoefficientPair,
    model: &LevyModel,
    domain: &SpectralDomain,
    options: SimulateOptions,
) -> Result<(Vec<Trajectory>, usize)> {
    settings.validate()?;
    let results = map_paths(settings.execution, settings.n_paths, |i| {
        let path = sample_path(model, config.horizon, settings.seed, settings.first_stream + i as u64)?;
        simulate_with(initial, &path, config, coeff, model, domain, options)
    });
    let s = screen_blowups(results)?;
    Ok((s.kept, s.blowups))
}

fn column_stats(series: &[Vec<f64>], n_times: usize) -> Vec<MeanStderr> {
    (0..n_times)
        .map(|j| {
            let col: Vec<f64> = series.iter().map(|s| s[j]).collect();
            mean_stderr(&col)
        })
        .collect()
}

/// Counts record times where the mean exceeds the envelope by more than
/// the Monte Carlo tolerance.
fn envelope_violations(stats: &[MeanStderr], envelope: &[f64], settings: &EnsembleSettings) -> usize {
    stats
        .iter()
        .zip(envelope)
        .filter(|(s, &e)| s.mean - settings.sigma * s.stderr > e * (1.0 + settings.discretization_allowance))
        .count()
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub mean_energy: Vec<f64>,
    pub stderr: Vec<f64>,
    pub initial_energy: f64,
    pub lambda_rate: f64,
    pub feasible: bool,
    /// `E(0) e^{-lambda t}`; absent when the parameters are infeasible.
    pub envelope: Option<Vec<f64>>,
    pub fitted_rate: Option<LogLinearFit>,
    pub bound_violations: Option<usize>,
    pub n_paths: usize,
    pub blowups: usize,
    pub truncation_budget: f64,
    pub pass: Option<bool>,
}

pub fn decay_experiment(
    initial: &GalerkinState,
    settings: &EnsembleSettings,
    config: &SolverConfig,
    coeff: &CoefficientPair,
    model: &LevyModel,
    domain: &SpectralDomain,
    params: &EnergyParams,
) -> Result<EnergyReport> {
    check_params(params, config)?;
    let (trajs, blowups) = run_ensemble(
        initial,
        settings,
        config,
        coeff,
        model,
        domain,
        SimulateOptions::default(),
    )?;
    let delta = params.delta;
    let series: Vec<Vec<f64>> = trajs
        .iter()
        .map(|t| t.states.iter().map(|s| energy(s, delta, domain)).collect())
        .collect();
    let times = trajs[0].times.clone();
    let stats = column_stats(&series, times.len());
    let e0 = energy(initial, delta, domain);
    let (lo, hi) = settings.window(config.horizon);
    let mean: Vec<f64> = stats.iter().map(|s| s.mean).collect();
    let fitted_rate = fit_log_linear(&times, &mean, lo, hi, settings.sigma);
    let envelope = params.feasible.then(|| {
        times
            .iter()
            .map(|t| e0 * (-params.lambda_rate * t).exp())
            .collect::<Vec<_>>()
    });
    let bound_violations = envelope.as_ref().map(|e| envelope_violations(&stats, e, settings));
    Ok(EnergyReport {
        mean_energy: mean,
        stderr: stats.iter().map(|s| s.stderr).collect(),
        times,
        initial_energy: e0,
        lambda_rate: params.lambda_rate,
        feasible: params.feasible,
        envelope,
        fitted_rate,
        pass: bound_violations.map(|v| v == 0),
        bound_violations,
        n_paths: settings.n_paths,
        blowups,
        truncation_budget: trajs[0].truncation_budget,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub times: Vec<f64>,
    pub mean_diff_energy: Vec<f64>,
    pub stderr: Vec<f64>,
    pub initial_diff_energy: f64,
    pub lambda_rate: f64,
    pub feasible: bool,
    pub envelope: Option<Vec<f64>>,
    pub fitted_rate: Option<LogLinearFit>,
    pub bound_violations: Option<usize>,
    /// Largest coefficient of `X_t - Y_t` over all paths and record times.
    pub max_abs_difference: f64,
    pub n_paths: usize,
    pub blowups: usize,
    pub contraction_pass: Option<bool>,
}

pub fn coupling_experiment(
    initial_x: &GalerkinState,
    initial_y: &GalerkinState,
    settings: &EnsembleSettings,
    config: &SolverConfig,
    coeff: &CoefficientPair,
    model: &LevyModel,
    domain: &SpectralDomain,
    params: &EnergyParams,
) -> Result<CouplingReport> {
    check_params(params, config)?;
    settings.validate()?;
    let results = map_paths(settings.execution, settings.n_paths, |i| {
        let path = sample_path(model, config.horizon, settings.seed, settings.first_stream + i as u64)?;
        let x = simulate(initial_x, &path, config, coeff, model, domain)?;
        let y = simulate(initial_y, &path, config, coeff, model, domain)?;
        Ok((x, y))
    });
    let screened = screen_blowups(results)?;
    let delta = params.delta;
    let mut max_abs_difference: f64 = 0.0;
    let series: Vec<Vec<f64>> = screened
        .kept
        .iter()
        .map(|(x, y)| {
            x.states
                .iter()
                .zip(&y.states)
                .map(|(a, b)| {
                    let d = a.difference(b);
                    for c in d.u.iter().chain(&d.v) {
                        max_abs_difference = max_abs_difference.max(c.abs());
                    }
                    energy(&d, delta, domain)
                })
                .collect()
        })
        .collect();
    let times = screened.kept[0].0.times.clone();
    let stats = column_stats(&series, times.len());
    let e0 = energy(&initial_x.difference(initial_y), delta, domain);
    let mean: Vec<f64> = stats.iter().map(|s| s.mean).collect();
    let (lo, hi) = settings.window(config.horizon);
    let fitted_rate = fit_log_linear(&times, &mean, lo, hi, settings.sigma);
    let envelope = params.feasible.then(|| {
        times
            .iter()
            .map(|t| e0 * (-params.lambda_rate * t).exp())
            .collect::<Vec<_>>()
    });
    let bound_violations = envelope.as_ref().map(|e| envelope_violations(&stats, e, settings));
    let contraction_pass = bound_violations.map(|v| {
        let rate_ok = if max_abs_difference == 0.0 {
            true
        } else {
            fitted_rate.is_some_and(|f| f.ci_low >= params.lambda_rate * (1.0 - settings.rate_allowance))
        };
        v == 0 && rate_ok
    });
    Ok(CouplingReport {
        mean_diff_energy: mean,
        stderr: stats.iter().map(|s| s.stderr).collect(),
        times,
        initial_diff_energy: e0,
        lambda_rate: params.lambda_rate,
        feasible: params.feasible,
        envelope,
        fitted_rate,
        bound_violations,
        max_abs_difference,
        n_paths: settings.n_paths,
        blowups: screened.blowups,
        contraction_pass,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Bound on the remaining transient contribution to the mean.
    pub transient_budget: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub name: &'static str,
    pub x: MomentEstimate,
    pub y: MomentEstimate,
    pub difference: f64,
    pub combined_stderr: f64,
    /// `|x - y| <= sigma * combined_stderr`.
    pub agree: bool,
    /// `|x - y| <= sigma * combined_stderr + budget_x + budget_y`.
    pub agree_with_budget: bool,
    /// Both estimates below the stationary bound plus their transient budget
    /// and Monte Carlo tolerance.
    pub below_stationary_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentTable {
    pub burn_in: f64,
    pub window: f64,
    pub n_paths: usize,
    pub blowups: usize,
    /// Upper bound on the stationary mean of `E^delta`; coefficients vanish
    /// at zero, so nothing feeds energy into the rest state.
    pub stationary_energy_bound: f64,
    pub rows: Vec<MomentRow>,
    pub agree: bool,
    pub agree_with_budget: bool,
}

const MOMENT_NAMES: [&str; 4] = ["norm_u_sq", "abs_v_sq", "energy", "abs_u_sq"];

/// Time averages over `[burn_in, burn_in + window]` of `||u||^2`, `|v|^2`,
/// `E^delta` and `|u|^2` from two initial states, each with its own
/// independent ensemble.
#[allow(clippy::too_many_arguments)]
pub fn invariant_moments(
    initial_x: &GalerkinState,
    initial_y: &GalerkinState,
    burn_in: f64,
    window: f64,
    settings: &EnsembleSettings,
    config: &SolverConfig,
    coeff: &CoefficientPair,
    model: &LevyModel,
    domain: &SpectralDomain,
    params: &EnergyParams,
) -> Result<MomentTable> {
    if !params.feasible {
        return Err(Error::Precondition(format!(
            "stability conditions violated: {}",
            params.violations().join(", ")
        )));
    }
    if !(burn_in > 0.0 && window > 0.0) {
        return Err(Error::invalid("burn_in", "burn-in and window must be positive"));
    }
    settings.validate()?;
    let warm = SolverConfig::new(config.dt_max, burn_in, config.kappa, burn_in)?;
    let avg = SolverConfig::new(config.dt_max, window, config.kappa, window)?;
    let delta = params.delta;

    let estimate = |initial: &GalerkinState, offset: u64| -> Result<(Vec<[f64; 4]>, usize)> {
        let results = map_paths(settings.execution, settings.n_paths, |i| {
            let stream = settings.first_stream + offset + i as u64;
            let path = sample_path(model, burn_in + window, settings.seed, stream)?;
            let (head, tail) = path.split_at(burn_in);
            let t1 = simulate(initial, &head, &warm, coeff, model, domain)?;
            let t2 = simulate_with(
                t1.final_state(),
                &tail,
                &avg,
                coeff,
                model,
                domain,
                SimulateOptions::with_ledger(),
            )?;
            let l = t2
                .ledger
                .as_ref()
                .and_then(|l| l.last().copied())
                .expect("ledger requested");
            let e = delta * delta * l.uu + 2.0 * delta * l.uv + l.vv + l.auu;
            Ok([l.auu / window, l.vv / window, e / window, l.uu / window])
        });
        let s = screen_blowups(results)?;
        Ok((s.kept, s.blowups))
    };
    let (xs, bx) = estimate(initial_x, 0)?;
    let (ys, by) = estimate(initial_y, settings.n_paths as u64)?;

    let lam = params.lambda_rate;
    let transient = |e0: f64| e0 * (-lam * burn_in).exp() * (1.0 - (-lam * window).exp()) / (lam * window);
    let scales = [
        1.0,
        2.0 * (1.0f64).max(delta * delta / params.lambda1),
        1.0,
        1.0 / params.lambda1,
    ];
    let bx_e = transient(energy(initial_x, delta, domain));
    let by_e = transient(energy(initial_y, delta, domain));
    let stationary = 0.0;

    let rows: Vec<MomentRow> = (0..4)
        .map(|k| {
            let sx = mean_stderr(&xs.iter().map(|r| r[k]).collect::<Vec<_>>());
            let sy = mean_stderr(&ys.iter().map(|r| r[k]).collect::<Vec<_>>());
            let x = MomentEstimate {
                mean: sx.mean,
                stderr: sx.stderr,
                transient_budget: scales[k] * bx_e,
            };
            let y = MomentEstimate {
                mean: sy.mean,
                stderr: sy.stderr,
                transient_budget: scales[k] * by_e,
            };
            let difference = x.mean - y.mean;
            let combined = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
            let tol = settings.sigma * combined;
            let below =
                |m: &MomentEstimate| m.mean <= scales[k] * stationary + m.transient_budget + settings.sigma * m.stderr;
            MomentRow {
                name: MOMENT_NAMES[k],
                difference,
                combined_stderr: combined,
                agree: difference.abs() <= tol,
                agree_with_budget: difference.abs() <= tol + x.transient_budget + y.transient_budget,
                below_stationary_bound: below(&x) && below(&y),
                x,
                y,
            }
        })
        .collect();
    Ok(MomentTable {
        burn_in,
        window,
        n_paths: settings.n_paths,
        blowups: bx + by,
        stationary_energy_bound: stationary,
        agree: rows.iter().all(|r| r.agree),
        agree_with_budget: rows.iter().all(|r| r.agree_with_budget),
        rows,
    })
}

fn check_params(params: &EnergyParams, config: &SolverConfig) -> Result<()> {
    if (params.kappa - config.kappa).abs() > 1e-12 * config.kappa {
        return Err(Error::invalid(
            "kappa",
            format!(
                "parameters built for kappa = {} but solver uses {}",
                params.kappa, config.kappa
            ),
        ));
    }
    Ok(())
}
