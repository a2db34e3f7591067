//! Exact flow of `u' = v, v' = -kappa v - lambda_k u`, mode by mode.

use crate::error::{Error, Result};
use crate::spectral::{GalerkinState, SpectralDomain};

/// Beyond this `beta t` the overdamped branch switches from `cosh`/`sinh` to
/// separated exponentials.
const HYPERBOLIC_LIMIT: f64 = 20.0;
const CRITICAL_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingRegime {
    Underdamped,
    Critical,
    Overdamped,
}

pub fn regime(kappa: f64, lambda: f64) -> DampingRegime {
    let disc = 0.25 * kappa * kappa - lambda;
    if disc.abs() <= CRITICAL_TOLERANCE * lambda.max(0.25 * kappa * kappa) {
        DampingRegime::Critical
    } else if disc < 0.0 {
        DampingRegime::Underdamped
    } else {
        DampingRegime::Overdamped
    }
}

/// `exp(t [[0, 1], [-lambda, -kappa]])` as `[p11, p12, p21, p22]`.
pub fn mode_matrix(kappa: f64, lambda: f64, t: f64) -> [f64; 4] {
    let g = 0.5 * kappa;
    match regime(kappa, lambda) {
        DampingRegime::Underdamped => {
            let w = (lambda - g * g).sqrt();
            let e = (-g * t).exp();
            let c = (w * t).cos();
            let s = (w * t).sin() / w;
            if g == 0.0 {
                return undamped_matrix(c, s, lambda);
            }
            [e * (c + g * s), e * s, -lambda * e * s, e * (c - g * s)]
        }
        DampingRegime::Critical => {
            let e = (-g * t).exp();
            [e * (1.0 + g * t), e * t, -lambda * e * t, e * (1.0 - g * t)]
        }
        DampingRegime::Overdamped => {
            let b = (g * g - lambda).sqrt();
            let (ec, es) = if b * t < HYPERBOLIC_LIMIT {
                let e = (-g * t).exp();
                (e * (b * t).cosh(), e * (b * t).sinh() / b)
            } else {
                // b - g = -lambda / (g + b) without cancellation
                let slow = (-lambda / (g + b) * t).exp();
                let fast = (-(g + b) * t).exp();
                (0.5 * (slow + fast), 0.5 * (slow - fast) / b)
            };
            [ec + g * es, es, -lambda * es, ec - g * es]
        }
    }
}

/// Undamped step with `p21 = -lambda p12` and `p12` solved from
/// `c^2 + lambda p12^2 = 1` in extended precision, so the step conserves
/// `lambda u^2 + v^2` to working precision; otherwise the rounding bias
/// compounds over long runs.
fn undamped_matrix(c: f64, s: f64, lambda: f64) -> [f64; 4] {
    let cc = c * c;
    let cc_lo = c.mul_add(c, -cc);
    let one_minus = (1.0 - cc) - cc_lo;
    let p12 = (one_minus.max(0.0) / lambda).sqrt().copysign(s);
    [c, p12, -lambda * p12, c]
}

/// Per-mode propagators for one step length.
#[derive(Debug, Clone)]
pub(crate) struct Propagator {
    pub(crate) dt: f64,
    coeffs: Vec<[f64; 4]>,
}

impl Propagator {
    pub(crate) fn new(kappa: f64, eigenvalues: &[f64], dt: f64) -> Self {
        Self {
            dt,
            coeffs: eigenvalues.iter().map(|&l| mode_matrix(kappa, l, dt)).collect(),
        }
    }

    #[inline]
    pub(crate) fn apply(&self, u: &mut [f64], v: &mut [f64]) {
        for ((p, u), v) in self.coeffs.iter().zip(u.iter_mut()).zip(v.iter_mut()) {
            let (a, b) = (*u, *v);
            *u = p[0] * a + p[1] * b;
            *v = p[2] * a + p[3] * b;
        }
    }
}

/// Exact linear flow over `dt` with damping `kappa > 0`.
pub fn linear_flow(state: &GalerkinState, dt: f64, kappa: f64, domain: &SpectralDomain) -> Result<GalerkinState> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(
            "kappa",
            format!("damping must be positive, got {kappa}"),
        ));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("step must be positive, got {dt}")));
    }
    crate::error::check_len(domain.modes(), state.u.len())?;
    crate::error::check_len(domain.modes(), state.v.len())?;
    let mut next = state.clone();
    Propagator::new(kappa, domain.eigenvalues(), dt).apply(&mut next.u, &mut next.v);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn critical_example() {
        let p = mode_matrix(2.0, 1.0, 1.0);
        let u = p[0] - p[1];
        let v = p[2] - p[3];
        assert!((u - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v + (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(regime(2.0, 1.0), DampingRegime::Critical);
    }

    #[test]
    fn zero_state_stays_zero() {
        let d = SpectralDomain::new(PI, 5).unwrap();
        let s = GalerkinState::zeros(5);
        assert_eq!(linear_flow(&s, 0.3, 1.0, &d).unwrap(), s);
    }

    #[test]
    fn rejects_nonpositive_damping() {
        let d = SpectralDomain::new(PI, 2).unwrap();
        let s = GalerkinState::zeros(2);
        assert!(linear_flow(&s, 0.1, 0.0, &d).is_err());
        assert!(linear_flow(&s, 0.0, 1.0, &d).is_err());
    }

    #[test]
    fn undamped_energy_is_conserved() {
        let lambdas = [1.0, 4.0, 9.0, 37.5];
        let p = Propagator::new(0.0, &lambdas, 0.01);
        let mut u = vec![1.0, -0.5, 0.25, 0.1];
        let mut v = vec![0.0, 1.0, -2.0, 0.3];
        let energy =
            |u: &[f64], v: &[f64]| -> Vec<f64> { (0..4).map(|k| lambdas[k] * u[k] * u[k] + v[k] * v[k]).collect() };
        let e0 = energy(&u, &v);
        for _ in 0..1_000_000 {
            p.apply(&mut u, &mut v);
        }
        for (a, b) in energy(&u, &v).iter().zip(&e0) {
            assert!(((a - b) / b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn semigroup_property() {
        for &(k, l) in &[(0.5, 3.0), (2.0, 1.0), (5.0, 1.0), (300.0, 1.0)] {
            let a = mode_matrix(k, l, 0.7);
            let b = mode_matrix(k, l, 1.1);
            let c = mode_matrix(k, l, 1.8);
            let ab = [
                b[0] * a[0] + b[1] * a[2],
                b[0] * a[1] + b[1] * a[3],
                b[2] * a[0] + b[3] * a[2],
                b[2] * a[1] + b[3] * a[3],
            ];
            for i in 0..4 {
                assert!(
                    (ab[i] - c[i]).abs() <= 1e-12 * c[i].abs().max(1e-300) + 1e-300,
                    "{k} {l} {i}"
                );
            }
        }
    }

    #[test]
    fn overdamped_branches_agree_at_switch() {
        let (k, l) = (10.0, 1.0);
        let b = (25.0f64 - 1.0).sqrt();
        let t = HYPERBOLIC_LIMIT / b;
        let lo = mode_matrix(k, l, t * (1.0 - 1e-12));
        let hi = mode_matrix(k, l, t * (1.0 + 1e-12));
        for i in 0..4 {
            assert!((lo[i] - hi[i]).abs() <= 1e-9 * lo[i].abs());
        }
    }
}
