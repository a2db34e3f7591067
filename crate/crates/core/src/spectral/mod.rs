//! Dirichlet eigenbasis on an interval, Galerkin states and the fractional
//! norm machinery.
//!
//! On `D = (0, L)` the Dirichlet Laplacian `A = -d^2/dxi^2` has eigenpairs
//! `lambda_k = (k pi / L)^2`, `e_k(xi) = sqrt(2/L) sin(k pi xi / L)`. The
//! eigenfunctions are never stored: pointwise evaluation goes through the
//! sine transform in [`transform`].

mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use transform::SineTransform;
pub use transform::{TransformKind, FAST_TRANSFORM_THRESHOLD};

/// Truncated spectral discretisation of `H = L^2(0, L)`.
///
/// Immutable after construction and cheap to clone (transform tables are
/// shared).
#[derive(Debug, Clone)]
pub struct SpectralDomain {
    length: f64,
    modes: usize,
    grid_points: usize,
    eigenvalues: Vec<f64>,
    transform: SineTransform,
}

impl SpectralDomain {
    /// Domain with the default `M = 2K` collocation grid.
    pub fn new(length: f64, modes: usize) -> Result<Self> {
        Self::with_grid(length, modes, 2 * modes)
    }

    pub fn with_grid(length: f64, modes: usize, grid_points: usize) -> Result<Self> {
        Self::with_transform(length, modes, grid_points, TransformKind::Auto)
    }

    pub fn with_transform(length: f64, modes: usize, grid_points: usize, kind: TransformKind) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("length", format!("must be positive, got {length}")));
        }
        if modes == 0 {
            return Err(Error::invalid("modes", "must be at least 1"));
        }
        if grid_points < 2 * modes {
            return Err(Error::invalid(
                "grid_points",
                format!("must be >= 2 * modes = {}, got {grid_points}", 2 * modes),
            ));
        }
        let scale = std::f64::consts::PI / length;
        let eigenvalues = (1..=modes).map(|k| (k as f64 * scale).powi(2)).collect();
        Ok(Self {
            length,
            modes,
            grid_points,
            eigenvalues,
            transform: SineTransform::build(kind, modes, grid_points),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Smallest eigenvalue `lambda_1 = (pi / L)^2`.
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn uses_fast_transform(&self) -> bool {
        self.transform.is_fast()
    }

    /// Interior collocation points `xi_j = j L / (M + 1)`.
    pub fn grid(&self) -> Vec<f64> {
        let h = self.quadrature_weight();
        (1..=self.grid_points).map(|j| j as f64 * h).collect()
    }

    /// Grid spacing `L / (M + 1)`, the weight of the discrete inner product
    /// under which the sampled eigenfunctions are orthonormal.
    pub fn quadrature_weight(&self) -> f64 {
        self.length / (self.grid_points + 1) as f64
    }

    /// `[sum_k lambda_k^s c_k^2]^{1/2}`. `s = 0` is the `H` norm `|.|`,
    /// `s = 1` the `V` norm `||.||`.
    pub fn fractional_norm(&self, coeffs: &[f64], s: f64) -> Result<f64> {
        check_len(self.modes, coeffs.len())?;
        Ok(self.fractional_norm_sq_unchecked(coeffs, s).sqrt())
    }

    pub(crate) fn fractional_norm_sq_unchecked(&self, coeffs: &[f64], s: f64) -> f64 {
        if s == 0.0 {
            return coeffs.iter().map(|c| c * c).sum();
        }
        if s == 1.0 {
            return self.v_norm_sq(coeffs);
        }
        self.eigenvalues
            .iter()
            .zip(coeffs)
            .map(|(l, c)| l.powf(s) * c * c)
            .sum()
    }

    /// `||u||^2 = sum_k lambda_k u_k^2`.
    #[inline]
    pub fn v_norm_sq(&self, coeffs: &[f64]) -> f64 {
        self.eigenvalues.iter().zip(coeffs).map(|(l, c)| l * c * c).sum()
    }

    /// Checks `|u|_alpha <= lambda_1^{(alpha - beta)/2} |u|_beta`.
    pub fn poincare_check(&self, coeffs: &[f64], alpha: f64, beta: f64) -> Result<bool> {
        check_len(self.modes, coeffs.len())?;
        if alpha > beta {
            return Err(Error::Precondition(format!(
                "Poincare inequality needs alpha <= beta (alpha = {alpha}, beta = {beta})"
            )));
        }
        let lhs = self.fractional_norm_sq_unchecked(coeffs, alpha);
        let rhs = self.lambda1().powf(alpha - beta) * self.fractional_norm_sq_unchecked(coeffs, beta);
        Ok(lhs <= rhs * (1.0 + 1e-12) + f64::MIN_POSITIVE)
    }

    /// Field values `sum_k c_k e_k(xi_j)` on the collocation grid.
    pub fn to_physical(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.modes, coeffs.len())?;
        let mut out = vec![0.0; self.grid_points];
        self.to_physical_into(coeffs, &mut out);
        Ok(out)
    }

    /// First `K` coefficients `h sum_j f_j e_k(xi_j)`.
    pub fn from_physical(&self, field: &[f64]) -> Result<Vec<f64>> {
        check_len(self.grid_points, field.len())?;
        let mut out = vec![0.0; self.modes];
        self.from_physical_into(field, &mut out);
        Ok(out)
    }

    pub(crate) fn to_physical_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let scale = (2.0 / self.length).sqrt();
        self.transform.synthesize(coeffs, scale, out);
    }

    pub(crate) fn from_physical_into(&self, field: &[f64], out: &mut [f64]) {
        let scale = self.quadrature_weight() * (2.0 / self.length).sqrt();
        self.transform.analyze(field, scale, out);
    }

    /// Discrete `L^2` energy of `field` that the `K`-mode projection
    /// `coeffs` does not capture.
    pub fn projection_loss(&self, field: &[f64], coeffs: &[f64]) -> f64 {
        let total: f64 = self.quadrature_weight() * field.iter().map(|f| f * f).sum::<f64>();
        let kept: f64 = coeffs.iter().map(|c| c * c).sum();
        (total - kept).max(0.0)
    }
}

/// Galerkin coefficients `(u, v)` of a point of `V x H`, `v` standing for
/// `du/dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl GalerkinState {
    pub fn zeros(modes: usize) -> Self {
        Self {
            u: vec![0.0; modes],
            v: vec![0.0; modes],
        }
    }

    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_len(u.len(), v.len())?;
        Ok(Self { u, v })
    }

    /// Pads (or rejects) leading-mode coefficient lists to exactly `modes`.
    pub fn from_leading_modes(modes: usize, u: &[f64], v: &[f64]) -> Result<Self> {
        if u.len() > modes || v.len() > modes {
            return Err(Error::Dimension {
                expected: modes,
                actual: u.len().max(v.len()),
            });
        }
        let mut state = Self::zeros(modes);
        state.u[..u.len()].copy_from_slice(u);
        state.v[..v.len()].copy_from_slice(v);
        Ok(state)
    }

    pub fn modes(&self) -> usize {
        self.u.len()
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| *x == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// `||u||^2 + |v|^2`.
    pub fn vh_norm_sq(&self, domain: &SpectralDomain) -> f64 {
        domain.v_norm_sq(&self.u) + self.v.iter().map(|x| x * x).sum::<f64>()
    }

    /// `|X - Y|_{V x H}`.
    pub fn vh_distance(&self, other: &Self, domain: &SpectralDomain) -> f64 {
        let du: f64 = domain
            .eigenvalues()
            .iter()
            .zip(self.u.iter().zip(&other.u))
            .map(|(l, (a, b))| l * (a - b) * (a - b))
            .sum();
        let dv: f64 = self.v.iter().zip(&other.v).map(|(a, b)| (a - b) * (a - b)).sum();
        (du + dv).sqrt()
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a - b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn sum(&self, other: &Self) -> Self {
        Self {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            u: self.u.iter().map(|a| c * a).collect(),
            v: self.v.iter().map(|a| c * a).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit(k: usize, modes: usize) -> Vec<f64> {
        let mut c = vec![0.0; modes];
        c[k] = 1.0;
        c
    }

    #[test]
    fn ground_mode_v_norm_is_one_on_pi() {
        let d = SpectralDomain::new(PI, 4).unwrap();
        assert_relative_eq!(d.fractional_norm(&unit(0, 4), 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(d.fractional_norm(&[0.0; 4], 0.7).unwrap(), 0.0);
    }

    #[test]
    fn two_mode_v_norm() {
        let d = SpectralDomain::new(PI, 2).unwrap();
        assert_relative_eq!(
            d.fractional_norm(&[1.0, 1.0], 1.0).unwrap(),
            5f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn norm_rejects_wrong_length() {
        let d = SpectralDomain::new(PI, 3).unwrap();
        assert!(matches!(
            d.fractional_norm(&[1.0], 1.0),
            Err(Error::Dimension { expected: 3, actual: 1 })
        ));
    }

    #[test]
    fn eigenvalues_scale_as_k_squared() {
        let l = 2.7;
        let d = SpectralDomain::new(l, 40).unwrap();
        for (k, lam) in d.eigenvalues().iter().enumerate() {
            let kk = (k + 1) as f64;
            assert_relative_eq!(lam * (l / PI).powi(2), kk * kk, max_relative = 1e-14);
        }
        assert!(d.eigenvalues().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn grid_must_oversample() {
        assert!(SpectralDomain::with_grid(PI, 8, 15).is_err());
        assert!(SpectralDomain::with_grid(PI, 8, 16).is_ok());
        assert!(SpectralDomain::new(0.0, 8).is_err());
        assert!(SpectralDomain::new(PI, 0).is_err());
    }

    #[test]
    fn poincare_equality_on_ground_mode() {
        let d = SpectralDomain::new(PI, 5).unwrap();
        assert!(d.poincare_check(&unit(0, 5), 0.0, 1.0).unwrap());
        assert!(d.poincare_check(&[0.0; 5], 0.0, 2.0).unwrap());
        assert!(matches!(
            d.poincare_check(&unit(0, 5), 1.0, 0.0),
            Err(Error::Precondition(_))
        ));
        // Equality holds with L != pi too.
        let d = SpectralDomain::new(1.3, 5).unwrap();
        let h = d.fractional_norm(&unit(0, 5), 0.0).unwrap();
        let v = d.fractional_norm(&unit(0, 5), 1.0).unwrap();
        assert_relative_eq!(h, d.lambda1().powf(-0.5) * v, max_relative = 1e-14);
    }

    #[test]
    fn ground_mode_samples() {
        let d = SpectralDomain::with_grid(PI, 2, 4).unwrap();
        let f = d.to_physical(&[1.0, 0.0]).unwrap();
        for (j, fj) in f.iter().enumerate() {
            let xi = (j + 1) as f64 * PI / 5.0;
            assert_relative_eq!(*fj, (2.0 / PI).sqrt() * xi.sin(), epsilon = 1e-15);
        }
        assert!(d.to_physical(&[0.0, 0.0]).unwrap().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn projection_of_ground_mode_samples() {
        let d = SpectralDomain::new(PI, 6).unwrap();
        let samples: Vec<f64> = d.grid().iter().map(|x| (2.0 / PI).sqrt() * x.sin()).collect();
        let c = d.from_physical(&samples).unwrap();
        assert_relative_eq!(c[0], 1.0, epsilon = 1e-12);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-12));
        assert!(d.from_physical(&[0.0; 12]).unwrap().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn mode_above_truncation_is_invisible() {
        let k = 7;
        let d = SpectralDomain::with_grid(PI, k, 2 * k + 2).unwrap();
        let samples: Vec<f64> = d
            .grid()
            .iter()
            .map(|x| (2.0 / PI).sqrt() * ((k + 1) as f64 * x).sin())
            .collect();
        let c = d.from_physical(&samples).unwrap();
        assert!(c.iter().all(|x| x.abs() < 1e-10), "{c:?}");
    }

    #[test]
    fn direct_and_fast_transforms_agree() {
        let k = 37;
        let direct = SpectralDomain::with_transform(2.0, k, 80, TransformKind::Direct).unwrap();
        let fast = SpectralDomain::with_transform(2.0, k, 80, TransformKind::Fast).unwrap();
        assert!(fast.uses_fast_transform() && !direct.uses_fast_transform());
        let c: Vec<f64> = (0..k).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let fd = direct.to_physical(&c).unwrap();
        let ff = fast.to_physical(&c).unwrap();
        for (a, b) in fd.iter().zip(&ff) {
            assert!((a - b).abs() < 1e-10);
        }
        let cd = direct.from_physical(&fd).unwrap();
        let cf = fast.from_physical(&fd).unwrap();
        for (a, b) in cd.iter().zip(&cf) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn auto_switches_to_fft_for_large_bases() {
        assert!(!SpectralDomain::new(PI, FAST_TRANSFORM_THRESHOLD - 1)
            .unwrap()
            .uses_fast_transform());
        assert!(SpectralDomain::new(PI, FAST_TRANSFORM_THRESHOLD)
            .unwrap()
            .uses_fast_transform());
    }

    #[test]
    fn state_vh_distance() {
        let d = SpectralDomain::new(PI, 2).unwrap();
        let a = GalerkinState::new(vec![1.0, 0.0], vec![0.0, 2.0]).unwrap();
        let b = GalerkinState::zeros(2);
        assert_relative_eq!(a.vh_distance(&b, &d), 5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(a.vh_norm_sq(&d), 5.0, epsilon = 1e-15);
        assert!(GalerkinState::new(vec![1.0], vec![]).is_err());
        assert!(GalerkinState::from_leading_modes(2, &[1.0, 2.0, 3.0], &[]).is_err());
    }
}
