//! Reconstruction of the martingale part of `E^delta` along simulated paths.
//!
//! `M_t = E(X_t) - E(X_0) - D_t - K_t - C_t` where `D_t` integrates the
//! continuous drift along the linear flow, `K_t` sums the energy change of
//! the compensator kicks, and `C_t` is the compensator of the jump energy
//! increments. All three are assembled from the trajectory's quadratic
//! ledger. `C_t` is exact when both coefficients are linear; otherwise it is
//! replaced by an upper bound, and the reconstructed quantity only has
//! non-positive mean.

use serde::Serialize;

use super::stats::mean_stderr;
use super::{energy, EnergyParams};
use crate::dynamics::{BigCoefficient, CoefficientPair, Growth, SmallCoefficient};
use crate::error::{Error, Result};
use crate::noise::{Compensator, LevyModel};
use crate::solver::{LedgerEntry, Trajectory};
use crate::spectral::SpectralDomain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleOptions {
    pub checkpoints: usize,
    pub sigma: f64,
    /// Leave out the jump compensator; only useful to show the diagnostic
    /// detects the resulting bias.
    pub omit_compensator: bool,
}

impl Default for MartingaleOptions {
    fn default() -> Self {
        Self {
            checkpoints: 10,
            sigma: 3.0,
            omit_compensator: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleReport {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Two-sided test when the compensator is exact, one-sided otherwise.
    pub exact: bool,
    pub n_paths: usize,
    pub pass: bool,
}

/// Compensator of the jump energy increments as a linear form in the ledger
/// integrals `(uu, u_rho, rho_rho)`.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatorForm {
    uu: f64,
    u_rho: f64,
    rho_rho: f64,
    exact: bool,
}

impl CompensatorForm {
    fn build(coeff: &CoefficientPair, model: &LevyModel, params: &EnergyParams) -> Result<Self> {
        let eps = model.small_cutoff();
        let mut f = CompensatorForm {
            exact: true,
            ..Default::default()
        };
        if model.small_rate()? > 0.0 {
            let m2 = model.small_second_moment()?;
            match coeff.a {
                SmallCoefficient::LinearSigma(c) => {
                    f.uu += c * c * m2;
                    f.u_rho += 2.0 * c * model.signed_first_moment(eps, 1.0)?;
                }
                _ => {
                    let ell_a = coeff.ell_a()?;
                    f.exact = false;
                    f.uu += ell_a * m2;
                    if !Compensator::build(model, coeff)?.is_zero() {
                        let m1 = model.band_moment(1.0, eps, 1.0)?;
                        f.uu += ell_a.sqrt() * m1;
                        f.rho_rho += ell_a.sqrt() * m1;
                    }
                }
            }
        }
        let theta = model.theta_under()?;
        if theta > 0.0 {
            match (&coeff.b, &coeff.a) {
                (BigCoefficient::BoundedLipschitz(c), _) => {
                    f.uu += theta * c * c;
                    f.u_rho += 2.0 * theta * c;
                }
                (BigCoefficient::SameAsA, SmallCoefficient::LinearSigma(c)) => {
                    f.uu += c * c * model.band_moment(2.0, 1.0, f64::INFINITY)?;
                    f.u_rho += 2.0 * c * model.signed_first_moment(1.0, f64::INFINITY)?;
                }
                _ => {
                    f.exact = false;
                    let weight = match params.growth {
                        Growth::H2 => theta,
                        Growth::H2Prime(p) => model.theta_p(p)?,
                    };
                    f.uu += 2.0 * coeff.ell_b()? * weight;
                    f.rho_rho += theta;
                }
            }
        }
        Ok(f)
    }
}

fn reconstruct(e0: f64, e: f64, l: &LedgerEntry, params: &EnergyParams, comp: &CompensatorForm, omit: bool) -> f64 {
    let d = params.delta;
    let k = params.kappa;
    let u_rho = d * l.uu + l.uv;
    let rho_rho = d * d * l.uu + 2.0 * d * l.uv + l.vv;
    let drift = 2.0 * (d * (k - d) * u_rho - (k - d) * rho_rho - d * l.auu);
    let kicks = 2.0 * d * l.drift_ug + 2.0 * l.drift_vg + l.drift_gg;
    let c = if omit {
        0.0
    } else {
        comp.uu * l.uu + comp.u_rho * u_rho + comp.rho_rho * rho_rho
    };
    e - e0 - drift - kicks - c
}

/// Record indices of `n` evenly spread checkpoints after `t = 0`.
fn checkpoint_indices(n_records: usize, n: usize) -> Vec<usize> {
    let last = n_records - 1;
    let mut idx: Vec<usize> = (1..=n)
        .map(|j| ((j * last) as f64 / n as f64).round() as usize)
        .filter(|&i| i > 0)
        .collect();
    idx.dedup();
    idx
}

pub fn martingale_diagnostic(
    trajectories: &[Trajectory],
    params: &EnergyParams,
    coeff: &CoefficientPair,
    model: &LevyModel,
    domain: &SpectralDomain,
    options: MartingaleOptions,
) -> Result<MartingaleReport> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::Precondition("no trajectories".into()))?;
    if trajectories.iter().any(|t| t.ledger.is_none()) {
        return Err(Error::DiagnosticUnavailable(
            "trajectories were recorded without the quadratic ledger".into(),
        ));
    }
    if first.times.len() < 2 || options.checkpoints == 0 {
        return Err(Error::Precondition("need at least one checkpoint after t = 0".into()));
    }
    let comp = CompensatorForm::build(coeff, model, params)?;
    let idx = checkpoint_indices(first.times.len(), options.checkpoints);
    let delta = params.delta;

    let mut mean = Vec::with_capacity(idx.len());
    let mut stderr = Vec::with_capacity(idx.len());
    let mut pass = true;
    let e0_scale = trajectories
        .iter()
        .map(|t| energy(&t.states[0], delta, domain))
        .fold(0.0, f64::max);
    for &j in &idx {
        let samples: Vec<f64> = trajectories
            .iter()
            .map(|t| {
                let ledger = t.ledger.as_ref().expect("checked above");
                let e0 = energy(&t.states[0], delta, domain);
                let e = energy(&t.states[j], delta, domain);
                reconstruct(e0, e, &ledger[j], params, &comp, options.omit_compensator)
            })
            .collect();
        let s = mean_stderr(&samples);
        // rounding floor for noise-free runs, where both sides vanish
        let tol = options.sigma * s.stderr + 1e-10 * (1.0 + e0_scale);
        let ok = if comp.exact { s.mean.abs() <= tol } else { s.mean <= tol };
        pass &= ok;
        mean.push(s.mean);
        stderr.push(s.stderr);
    }
    Ok(MartingaleReport {
        times: idx.iter().map(|&j| first.times[j]).collect(),
        mean,
        stderr,
        exact: comp.exact,
        n_paths: trajectories.len(),
        pass,
    })
}
