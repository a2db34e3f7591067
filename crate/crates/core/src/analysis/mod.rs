//! The shifted energy `E^delta(u, v) = |delta u + v|^2 + ||u||^2`, the
//! stability parameters built on it, and ensemble experiments checking the
//! resulting decay, contraction and martingale claims.

mod experiments;
mod martingale;
mod stats;

use serde::Serialize;

use crate::dynamics::{CoefficientPair, Growth};
use crate::error::{check_len, Error, Result};
use crate::noise::LevyModel;
use crate::spectral::{GalerkinState, SpectralDomain};

pub use experiments::{
    coupling_experiment, decay_experiment, invariant_moments, run_ensemble, CouplingReport, EnergyReport,
    EnsembleSettings, MomentEstimate, MomentRow, MomentTable,
};
pub use martingale::{martingale_diagnostic, MartingaleOptions, MartingaleReport};
pub use stats::{fit_log_linear, mean_stderr, LogLinearFit, MeanStderr};

pub fn energy(state: &GalerkinState, delta: f64, domain: &SpectralDomain) -> f64 {
    let lambdas = domain.eigenvalues();
    state
        .u
        .iter()
        .zip(&state.v)
        .zip(lambdas)
        .map(|((u, v), l)| (delta * u + v).powi(2) + l * u * u)
        .sum()
}

/// `delta_0 = min(lambda_1 / (2 kappa), kappa / 4)`.
pub fn delta0(kappa: f64, lambda1: f64) -> f64 {
    (lambda1 / (2.0 * kappa)).min(kappa / 4.0)
}

/// One inequality of the stability region, `lhs < rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub description: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

impl Condition {
    fn strict(name: &'static str, description: String, lhs: f64, rhs: f64) -> Self {
        Self {
            name,
            description,
            lhs,
            rhs,
            margin: rhs - lhs,
            holds: lhs < rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyParams {
    pub delta: f64,
    pub delta0: f64,
    pub lambda_rate: f64,
    pub kappa: f64,
    pub theta_bar: f64,
    /// `theta_under` for `Growth::H2`, `theta_p` for `Growth::H2Prime`.
    pub theta_under_or_p: f64,
    pub ell_a: f64,
    pub ell_b: f64,
    pub lambda1: f64,
    pub growth: Growth,
    pub conditions: Vec<Condition>,
    pub feasible: bool,
}

impl EnergyParams {
    /// Parameters from raw constants, choosing `delta = delta_0`.
    pub fn from_constants(
        kappa: f64,
        lambda1: f64,
        theta_bar: f64,
        ell_a: f64,
        theta_tail: f64,
        ell_b: f64,
        growth: Growth,
    ) -> Self {
        let d0 = delta0(kappa, lambda1);
        let noise = (theta_bar * ell_a + 2.0 * theta_tail * ell_b) / lambda1;
        let conditions = vec![
            Condition::strict(
                "noise",
                "(theta_bar ell_a + 2 theta ell_b) / lambda1 < delta0".into(),
                noise,
                d0,
            ),
            Condition::strict("damping", "theta < kappa".into(), theta_tail, kappa),
        ];
        let delta = d0;
        let lambda_rate = (delta - noise).min(kappa - theta_tail);
        let feasible = conditions.iter().all(|c| c.holds) && lambda_rate > 0.0;
        Self {
            delta,
            delta0: d0,
            lambda_rate,
            kappa,
            theta_bar,
            theta_under_or_p: theta_tail,
            ell_a,
            ell_b,
            lambda1,
            growth,
            conditions,
            feasible,
        }
    }

    /// Names of the violated conditions.
    pub fn violations(&self) -> Vec<&'static str> {
        self.conditions.iter().filter(|c| !c.holds).map(|c| c.name).collect()
    }
}

pub fn compute_params(
    kappa: f64,
    model: &LevyModel,
    coeff: &CoefficientPair,
    domain: &SpectralDomain,
    growth: Growth,
) -> Result<EnergyParams> {
    if growth != coeff.growth {
        return Err(Error::invalid(
            "growth",
            format!("{growth:?} requested but the coefficients declare {:?}", coeff.growth),
        ));
    }
    if !(kappa > 0.0) {
        return Err(Error::invalid(
            "kappa",
            format!("damping must be positive, got {kappa}"),
        ));
    }
    let theta_tail = match growth {
        Growth::H2 => model.theta_under()?,
        Growth::H2Prime(p) => model.theta_p(p)?,
    };
    Ok(EnergyParams::from_constants(
        kappa,
        domain.lambda1(),
        model.theta_bar()?,
        coeff.ell_a()?,
        theta_tail,
        coeff.ell_b()?,
        growth,
    ))
}

/// Admissible damping interval `(theta v sqrt(2 lambda1), lambda1^2 /
/// (2 theta_bar ell_a + 4 theta ell_b))`, `None` when empty.
pub fn kappa_interval(lambda1: f64, theta_bar: f64, ell_a: f64, theta_tail: f64, ell_b: f64) -> Option<(f64, f64)> {
    let lo = theta_tail.max((2.0 * lambda1).sqrt());
    let den = 2.0 * theta_bar * ell_a + 4.0 * theta_tail * ell_b;
    let hi = if den > 0.0 {
        lambda1 * lambda1 / den
    } else {
        f64::INFINITY
    };
    (lo < hi).then_some((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// `delta (kappa - delta) <u, rho> - (kappa - delta) |rho|^2 - delta ||u||^2
///  <= -(delta / 2) ||u||^2 - (kappa / 2) |rho|^2` for `0 < delta <= delta_0`.
pub fn dissipation_inequality_check(
    u: &[f64],
    rho: &[f64],
    delta: f64,
    kappa: f64,
    domain: &SpectralDomain,
) -> Result<DissipationCheck> {
    check_len(domain.modes(), u.len())?;
    check_len(domain.modes(), rho.len())?;
    let d0 = delta0(kappa, domain.lambda1());
    if !(delta > 0.0 && delta <= d0) {
        return Err(Error::Precondition(format!(
            "delta = {delta} must lie in (0, delta0 = {d0}]"
        )));
    }
    let u_rho: f64 = u.iter().zip(rho).map(|(a, b)| a * b).sum();
    let rho_sq: f64 = rho.iter().map(|x| x * x).sum();
    let v_sq = domain.v_norm_sq(u);
    let lhs = delta * (kappa - delta) * u_rho - (kappa - delta) * rho_sq - delta * v_sq;
    let rhs = -0.5 * delta * v_sq - 0.5 * kappa * rho_sq;
    let scale = delta * kappa * (v_sq + rho_sq);
    Ok(DissipationCheck {
        lhs,
        rhs,
        slack: rhs - lhs,
        holds: lhs <= rhs + 1e-12 * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn energy_examples() {
        let d = SpectralDomain::new(PI, 3).unwrap();
        assert_eq!(energy(&GalerkinState::zeros(3), 0.25, &d), 0.0);
        let s = GalerkinState::from_leading_modes(3, &[1.0], &[-0.25]).unwrap();
        assert!((energy(&s, 0.25, &d) - 1.0).abs() < 1e-15);
        let s = GalerkinState::from_leading_modes(3, &[], &[1.0]).unwrap();
        assert_eq!(energy(&s, 0.25, &d), 1.0);
    }

    #[test]
    fn worked_example() {
        let p = EnergyParams::from_constants(2.0, 1.0, 0.5, 0.1, 0.2, 0.1, Growth::H2);
        assert_eq!(p.delta0, 0.25);
        assert_eq!(p.delta, 0.25);
        assert!((p.lambda_rate - 0.16).abs() < 1e-15);
        assert!(p.feasible);
    }

    #[test]
    fn weak_damping_is_infeasible() {
        let p = EnergyParams::from_constants(0.1, 1.0, 0.0, 0.0, 0.2, 0.0, Growth::H2);
        assert!(!p.feasible);
        assert_eq!(p.violations(), vec!["damping"]);
    }

    #[test]
    fn interval_probe() {
        let (lo, hi) = kappa_interval(1.0, 0.5, 0.01, 0.2, 0.01).unwrap();
        assert!((lo - 2f64.sqrt()).abs() < 1e-15);
        assert!((hi - 1.0 / 0.018).abs() < 1e-12);
        assert!(kappa_interval(1.0, 5.0, 1.0, 0.2, 1.0).is_none());
    }

    #[test]
    fn dissipation_example() {
        let d = SpectralDomain::new(PI, 2).unwrap();
        let c = dissipation_inequality_check(&[0.0, 0.0], &[1.0, 0.0], 0.25, 2.0, &d).unwrap();
        assert_eq!((c.lhs, c.rhs, c.slack), (-1.75, -1.0, 0.75));
        let z = dissipation_inequality_check(&[0.0; 2], &[0.0; 2], 0.25, 2.0, &d).unwrap();
        assert!(z.holds && z.slack == 0.0);
        assert!(dissipation_inequality_check(&[0.0; 2], &[0.0; 2], 0.3, 2.0, &d).is_err());
    }
}
