//! Jump coefficients `a(x, z)` (small band) and `b(x, z)` (big band), and
//! their action on Galerkin states.
//!
//! Coefficients act pointwise in space, so a kick is evaluated
//! pseudospectrally: synthesise `u` on the grid, apply the coefficient,
//! project back onto the first `K` modes. Forms that are linear in `x` skip
//! the round trip, since the projection is exact for them.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::noise::{mark_norm, Band};
use crate::spectral::{GalerkinState, SpectralDomain};

/// A user-defined pointwise coefficient.
pub trait PointwiseCoefficient: Send + Sync + fmt::Debug {
    fn eval(&self, x: f64, z: &[f64]) -> f64;

    /// Declared Lipschitz constant (`ell_a` or `ell_b`), if known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// `a(x, -z) = -a(x, z)`; lets symmetric measures skip the compensator.
    fn odd_in_z(&self) -> bool {
        false
    }
}

/// Small-jump coefficient `a`.
#[derive(Debug, Clone)]
pub enum SmallCoefficient {
    /// `a(x, z) = c x z`.
    LinearSigma(f64),
    /// `a(x, z) = c sin(x) z`.
    SinSigma(f64),
    Custom(Arc<dyn PointwiseCoefficient>),
}

/// Big-jump coefficient `b`.
#[derive(Debug, Clone)]
pub enum BigCoefficient {
    SameAsA,
    /// `b(x, z) = c x`, independent of `z`.
    BoundedLipschitz(f64),
    Custom(Arc<dyn PointwiseCoefficient>),
}

/// Growth hypothesis on `b`: a `z`-free Lipschitz bound, or one weighted by
/// `|z|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Growth {
    H2,
    H2Prime(u32),
}

#[derive(Debug, Clone)]
pub struct CoefficientPair {
    pub a: SmallCoefficient,
    pub b: BigCoefficient,
    /// Declared `ell_a`; `None` uses the form's natural constant.
    pub ell_a: Option<f64>,
    pub ell_b: Option<f64>,
    pub growth: Growth,
}

impl CoefficientPair {
    pub fn new(a: SmallCoefficient, b: BigCoefficient, growth: Growth) -> Self {
        Self {
            a,
            b,
            ell_a: None,
            ell_b: None,
            growth,
        }
    }

    /// `a(x, z) = c_a x z`, `b(x, z) = c_b x` with `Growth::H2`.
    pub fn linear(c_a: f64, c_b: f64) -> Self {
        Self::new(
            SmallCoefficient::LinearSigma(c_a),
            BigCoefficient::BoundedLipschitz(c_b),
            Growth::H2,
        )
    }

    pub fn with_constants(mut self, ell_a: Option<f64>, ell_b: Option<f64>) -> Self {
        self.ell_a = ell_a;
        self.ell_b = ell_b;
        self
    }

    #[inline]
    pub fn eval_a(&self, x: f64, z: &[f64]) -> f64 {
        match &self.a {
            SmallCoefficient::LinearSigma(c) => c * x * z[0],
            SmallCoefficient::SinSigma(c) => c * x.sin() * z[0],
            SmallCoefficient::Custom(f) => f.eval(x, z),
        }
    }

    #[inline]
    pub fn eval_b(&self, x: f64, z: &[f64]) -> f64 {
        match &self.b {
            BigCoefficient::SameAsA => self.eval_a(x, z),
            BigCoefficient::BoundedLipschitz(c) => c * x,
            BigCoefficient::Custom(f) => f.eval(x, z),
        }
    }

    pub fn eval(&self, band: Band, x: f64, z: &[f64]) -> f64 {
        match band {
            Band::Small => self.eval_a(x, z),
            Band::Big => self.eval_b(x, z),
        }
    }

    /// Whether built-in forms need scalar marks.
    pub fn requires_scalar_marks(&self) -> bool {
        let a_scalar = !matches!(self.a, SmallCoefficient::Custom(_));
        let b_scalar = matches!(self.b, BigCoefficient::SameAsA) && a_scalar;
        a_scalar || b_scalar
    }

    /// `ell_a`: declared, or `c^2` for the built-in `sigma(x) z` forms.
    pub fn ell_a(&self) -> Result<f64> {
        if let Some(l) = self.ell_a {
            return Ok(l);
        }
        match &self.a {
            SmallCoefficient::LinearSigma(c) | SmallCoefficient::SinSigma(c) => Ok(c * c),
            SmallCoefficient::Custom(f) => f
                .lipschitz()
                .ok_or_else(|| Error::Unauditable("custom `a` declares no Lipschitz constant".into())),
        }
    }

    /// `ell_b`: declared, or the natural constant of the form under the
    /// configured growth hypothesis.
    pub fn ell_b(&self) -> Result<f64> {
        if let Some(l) = self.ell_b {
            return Ok(l);
        }
        match (&self.b, self.growth) {
            (BigCoefficient::BoundedLipschitz(c), _) => Ok(c * c),
            (BigCoefficient::SameAsA, Growth::H2Prime(_)) => match &self.a {
                SmallCoefficient::Custom(_) => Err(Error::Unauditable(
                    "`b = a` with custom `a` needs a declared ell_b".into(),
                )),
                _ => self.ell_a(),
            },
            (BigCoefficient::SameAsA, Growth::H2) => Err(Error::Unauditable(
                "b(x, z) = sigma(x) z has no z-free Lipschitz bound; use growth H2'".into(),
            )),
            (BigCoefficient::Custom(f), _) => f
                .lipschitz()
                .ok_or_else(|| Error::Unauditable("custom `b` declares no Lipschitz constant".into())),
        }
    }

    /// `Some(c)` when `a(x, z) = c x z`.
    pub(crate) fn small_linear_factor(&self) -> Option<f64> {
        match self.a {
            SmallCoefficient::LinearSigma(c) => Some(c),
            _ => None,
        }
    }

    /// `Some(f)` when `b(x, z) = f x` for this mark.
    pub(crate) fn big_linear_factor(&self, z: &[f64]) -> Option<f64> {
        match (&self.b, &self.a) {
            (BigCoefficient::BoundedLipschitz(c), _) => Some(*c),
            (BigCoefficient::SameAsA, SmallCoefficient::LinearSigma(c)) => Some(c * z[0]),
            _ => None,
        }
    }

    /// `b(0, z) = 0` and `a(0, z) = 0` hold for built-in forms by
    /// construction.
    pub fn is_linear(&self) -> bool {
        self.small_linear_factor().is_some()
            && matches!(
                (&self.b, &self.a),
                (BigCoefficient::BoundedLipschitz(_), _) | (BigCoefficient::SameAsA, SmallCoefficient::LinearSigma(_))
            )
    }
}

/// Scratch buffers for pseudospectral kicks.
#[derive(Debug, Clone)]
pub(crate) struct KickWorkspace {
    field: Vec<f64>,
}

impl KickWorkspace {
    pub(crate) fn new(domain: &SpectralDomain) -> Self {
        Self {
            field: vec![0.0; domain.grid_points()],
        }
    }

    /// Writes `P_K[coef(u(.), z)]` into `out`; returns the discarded tail
    /// energy when `diagnostics` is set.
    pub(crate) fn kick(
        &mut self,
        coeff: &CoefficientPair,
        domain: &SpectralDomain,
        u: &[f64],
        z: &[f64],
        band: Band,
        out: &mut [f64],
        diagnostics: bool,
    ) -> f64 {
        let linear = match band {
            Band::Small => coeff.small_linear_factor().map(|c| c * z[0]),
            Band::Big => coeff.big_linear_factor(z),
        };
        if let Some(f) = linear {
            for (o, x) in out.iter_mut().zip(u) {
                *o = f * x;
            }
            return 0.0;
        }
        domain.to_physical_into(u, &mut self.field);
        for x in self.field.iter_mut() {
            *x = coeff.eval(band, *x, z);
        }
        domain.from_physical_into(&self.field, out);
        if diagnostics {
            domain.projection_loss(&self.field, out)
        } else {
            0.0
        }
    }
}

pub(crate) fn check_band(z: &[f64], band: Band) -> Result<()> {
    let r = mark_norm(z);
    if band.admits(r) {
        Ok(())
    } else {
        Err(Error::BandMismatch(format!(
            "|z| = {r} cannot be a {} jump",
            band.as_str()
        )))
    }
}

/// Post-jump state: `u` unchanged, `v + P_K[a(u, z)]` (small band, without
/// compensator) or `v + P_K[b(u, z)]` (big band).
pub fn apply_jump(
    state: &GalerkinState,
    mark: &[f64],
    band: Band,
    coeff: &CoefficientPair,
    domain: &SpectralDomain,
) -> Result<GalerkinState> {
    Ok(apply_jump_with_diagnostics(state, mark, band, coeff, domain)?.0)
}

/// As [`apply_jump`], also returning the `H`-energy of the coefficient field
/// lost to re-truncation.
pub fn apply_jump_with_diagnostics(
    state: &GalerkinState,
    mark: &[f64],
    band: Band,
    coeff: &CoefficientPair,
    domain: &SpectralDomain,
) -> Result<(GalerkinState, f64)> {
    check_len(domain.modes(), state.u.len())?;
    check_len(domain.modes(), state.v.len())?;
    check_band(mark, band)?;
    let mut ws = KickWorkspace::new(domain);
    let mut kick = vec![0.0; domain.modes()];
    let loss = ws.kick(coeff, domain, &state.u, mark, band, &mut kick, true);
    let mut next = state.clone();
    for (v, k) in next.v.iter_mut().zip(&kick) {
        *v += k;
    }
    Ok((next, loss))
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditResult {
    pub hypothesis: &'static str,
    pub constant: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzAudit {
    pub samples: usize,
    pub a: AuditResult,
    pub b: AuditResult,
    pub pass: bool,
}

const AUDIT_TOLERANCE: f64 = 1e-12;

/// Samples `(x, y, z)` triples and reports the largest observed ratio
/// `|f(x,z) - f(y,z)|^2 / bound` for each hypothesis inequality.
///
/// Small marks are drawn from `[-1, 1]`, big marks from `1 < |z| <= 10`,
/// field values from `[-5, 5]`.
pub fn lipschitz_audit(coeff: &CoefficientPair, samples: usize, seed: u64) -> Result<LipschitzAudit> {
    if samples == 0 {
        return Err(Error::Precondition("audit needs at least one sample".into()));
    }
    let ell_a = coeff.ell_a()?;
    let ell_b = coeff.ell_b()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_a: f64 = 0.0;
    let mut max_b: f64 = 0.0;
    for _ in 0..samples {
        let x = rng.random_range(-5.0..5.0);
        let y = rng.random_range(-5.0..5.0);
        let zs = [rng.random_range(-1.0..=1.0)];
        let mag: f64 = rng.random_range(1.0..10.0);
        let zb = [if rng.random::<bool>() { mag } else { -mag }];
        let dx2 = (x - y) * (x - y);

        let lhs = (coeff.eval_a(x, &zs) - coeff.eval_a(y, &zs)).powi(2);
        let rhs = ell_a * dx2 * zs[0] * zs[0];
        max_a = max_a.max(ratio(lhs, rhs));

        let lhs = (coeff.eval_b(x, &zb) - coeff.eval_b(y, &zb)).powi(2);
        let weight = match coeff.growth {
            Growth::H2 => 1.0,
            Growth::H2Prime(p) => zb[0].abs().powi(p as i32),
        };
        max_b = max_b.max(ratio(lhs, ell_b * dx2 * weight));
    }
    let a = AuditResult {
        hypothesis: "H1",
        constant: ell_a,
        max_ratio: max_a,
        pass: max_a <= 1.0 + AUDIT_TOLERANCE,
    };
    let b = AuditResult {
        hypothesis: match coeff.growth {
            Growth::H2 => "H2",
            Growth::H2Prime(_) => "H2'",
        },
        constant: ell_b,
        max_ratio: max_b,
        pass: max_b <= 1.0 + AUDIT_TOLERANCE,
    };
    let pass = a.pass && b.pass;
    Ok(LipschitzAudit { samples, a, b, pass })
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}
