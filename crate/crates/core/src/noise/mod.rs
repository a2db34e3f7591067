//! Levy driving noise: measure descriptions, the moment constants
//! `theta_bar`, `theta_under`, `theta_p`, and big/small jump sampling.
//!
//! Jumps are split at `|z| = 1`. Marks with `|z| > 1` ("big") arrive at the
//! finite rate `theta_under`; marks with `eps < |z| <= 1` ("small") are
//! simulated as a compound Poisson process whose compensator is applied as a
//! drift; marks below `eps` are dropped and their `L^2` weight is reported as
//! the truncation budget.

mod compensator;
mod gamma;
mod path;
mod rng;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use smallvec::SmallVec;

use crate::error::{Error, Result};
pub use compensator::{small_jump_compensator, Compensator};
pub use path::{sample_path, Band, JumpEvent, NoisePath};

/// A point of the mark space `Z = R^m`.
pub type Mark = SmallVec<[f64; 2]>;

pub fn mark_norm(z: &[f64]) -> f64 {
    if z.len() == 1 {
        z[0].abs()
    } else {
        z.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

const DEFAULT_CUTOFF: f64 = 0.1;
const MAX_REJECTIONS: usize = 10_000_000;

/// User-supplied mark law for compound Poisson noise, the only route to
/// vector-valued marks.
pub trait MarkSampler: Send + Sync + fmt::Debug {
    fn dimension(&self) -> usize;

    fn sample(&self, rng: &mut dyn RngCore) -> Mark;

    /// `E[|Z|^p ; lo < |Z| <= hi]`. `None` when the law cannot report it.
    fn band_moment(&self, _p: f64, _lo: f64, _hi: f64) -> Option<f64> {
        None
    }

    /// `E[Z ; lo < |Z| <= hi]` for scalar marks.
    fn signed_first_moment(&self, _lo: f64, _hi: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum MarkLaw {
    Point(Mark),
    /// Scalar marks uniform on `[lo, hi]`.
    Uniform {
        lo: f64,
        hi: f64,
    },
    Custom(Arc<dyn MarkSampler>),
}

#[derive(Debug, Clone)]
pub enum MeasureKind {
    /// `pi(dz) = density dz` on `[lo, hi]` (mirrored onto `[-hi, -lo]` when
    /// the model is symmetric).
    UniformBand { lo: f64, hi: f64, density: f64 },
    /// `pi(dz) = c z^{-1-alpha} e^{-eta z} dz` on `z > 0` (mirrored when
    /// symmetric).
    TemperedStable { c: f64, alpha: f64, eta: f64 },
    /// Finite measure `rate * P(Z in dz)`.
    CompoundPoissonOnly { rate: f64, marks: MarkLaw },
}

#[derive(Debug, Clone)]
pub struct LevyModel {
    kind: MeasureKind,
    mark_dimension: usize,
    small_cutoff: f64,
    symmetric: bool,
}

impl LevyModel {
    pub fn new(kind: MeasureKind, small_cutoff: f64, symmetric: bool) -> Result<Self> {
        let mark_dimension = match &kind {
            MeasureKind::CompoundPoissonOnly {
                marks: MarkLaw::Point(z),
                ..
            } => z.len(),
            MeasureKind::CompoundPoissonOnly {
                marks: MarkLaw::Custom(s),
                ..
            } => s.dimension(),
            _ => 1,
        };
        let model = Self {
            kind,
            mark_dimension,
            small_cutoff,
            symmetric,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn uniform_band(lo: f64, hi: f64, density: f64, symmetric: bool) -> Result<Self> {
        Self::new(MeasureKind::UniformBand { lo, hi, density }, DEFAULT_CUTOFF, symmetric)
    }

    pub fn tempered_stable(c: f64, alpha: f64, eta: f64, symmetric: bool) -> Result<Self> {
        Self::new(MeasureKind::TemperedStable { c, alpha, eta }, DEFAULT_CUTOFF, symmetric)
    }

    pub fn compound_poisson(rate: f64, marks: MarkLaw, symmetric: bool) -> Result<Self> {
        Self::new(
            MeasureKind::CompoundPoissonOnly { rate, marks },
            DEFAULT_CUTOFF,
            symmetric,
        )
    }

    /// A model with no jumps at all.
    pub fn silent() -> Self {
        Self::new(
            MeasureKind::CompoundPoissonOnly {
                rate: 0.0,
                marks: MarkLaw::Point(smallvec::smallvec![2.0]),
            },
            1.0,
            false,
        )
        .expect("silent model is valid")
    }

    pub fn with_cutoff(mut self, small_cutoff: f64) -> Result<Self> {
        self.small_cutoff = small_cutoff;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite, got {x}")))
            }
        };
        if !(self.small_cutoff > 0.0 && self.small_cutoff <= 1.0) {
            return Err(Error::invalid(
                "epsilon",
                format!("small-jump cutoff must lie in (0, 1], got {}", self.small_cutoff),
            ));
        }
        match &self.kind {
            MeasureKind::UniformBand { lo, hi, density } => {
                finite("lo", *lo)?;
                finite("hi", *hi)?;
                finite("density", *density)?;
                if *lo < 0.0 || lo >= hi {
                    return Err(Error::invalid("lo", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
                }
                if *density < 0.0 {
                    return Err(Error::invalid("density", "must be non-negative"));
                }
            }
            MeasureKind::TemperedStable { c, alpha, eta } => {
                finite("c", *c)?;
                if *c < 0.0 {
                    return Err(Error::invalid("c", "must be non-negative"));
                }
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(Error::invalid("alpha", format!("must lie in (0, 2), got {alpha}")));
                }
                if !(eta.is_finite() && *eta > 0.0) {
                    return Err(Error::invalid("eta", format!("must be positive, got {eta}")));
                }
            }
            MeasureKind::CompoundPoissonOnly { rate, marks } => {
                finite("rate", *rate)?;
                if *rate < 0.0 {
                    return Err(Error::invalid("rate", "must be non-negative"));
                }
                match marks {
                    MarkLaw::Point(z) => {
                        if z.is_empty() || !z.iter().all(|x| x.is_finite()) {
                            return Err(Error::invalid("mark", "point mark must be a finite vector"));
                        }
                        if mark_norm(z) == 0.0 {
                            return Err(Error::invalid("mark", "the Levy measure may not charge z = 0"));
                        }
                    }
                    MarkLaw::Uniform { lo, hi } => {
                        finite("mark.lo", *lo)?;
                        finite("mark.hi", *hi)?;
                        if lo >= hi {
                            return Err(Error::invalid("mark.lo", "need lo < hi"));
                        }
                    }
                    MarkLaw::Custom(s) => {
                        if s.dimension() == 0 {
                            return Err(Error::invalid("mark", "mark dimension must be positive"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn mark_dimension(&self) -> usize {
        self.mark_dimension
    }

    pub fn small_cutoff(&self) -> f64 {
        self.small_cutoff
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn mirror_factor(&self) -> f64 {
        match self.kind {
            MeasureKind::CompoundPoissonOnly { .. } => 1.0,
            _ if self.symmetric => 2.0,
            _ => 1.0,
        }
    }

    /// `int_{lo < |z| <= hi} |z|^p pi(dz)`; `hi` may be infinite.
    pub fn band_moment(&self, p: f64, lo: f64, hi: f64) -> Result<f64> {
        let raw = match &self.kind {
            MeasureKind::UniformBand {
                lo: s_lo,
                hi: s_hi,
                density,
            } => density * power_integral(p, s_lo.max(lo), s_hi.min(hi)),
            MeasureKind::TemperedStable { c, alpha, eta } => {
                let g = gamma::gamma_integral(p - alpha, eta * lo, eta * hi).ok_or_else(|| {
                    Error::Divergent(format!(
                        "tempered-stable measure has infinite |z|^{p} mass near the origin"
                    ))
                })?;
                c * eta.powf(alpha - p) * g
            }
            MeasureKind::CompoundPoissonOnly { rate, marks } => {
                let m = match marks {
                    MarkLaw::Point(z) => {
                        let r = mark_norm(z);
                        if r > lo && r <= hi {
                            r.powf(p)
                        } else {
                            0.0
                        }
                    }
                    MarkLaw::Uniform { lo: a, hi: b } => {
                        let pos = power_integral(p, a.max(lo), b.min(hi));
                        let neg = power_integral(p, (-b).max(lo), (-a).min(hi));
                        (pos + neg) / (b - a)
                    }
                    MarkLaw::Custom(s) => s.band_moment(p, lo, hi).ok_or_else(|| {
                        Error::NotImplemented(format!("custom mark law reports no |z|^{p} band moment"))
                    })?,
                };
                rate * m
            }
        };
        let value = self.mirror_factor() * raw;
        if !value.is_finite() {
            return Err(Error::Divergent(format!(
                "|z|^{p} moment over ({lo}, {hi}] is not finite"
            )));
        }
        Ok(value)
    }

    /// `int_{lo < |z| <= hi} z pi(dz)` (scalar marks).
    pub fn signed_first_moment(&self, lo: f64, hi: f64) -> Result<f64> {
        if self.mark_dimension != 1 {
            return Err(Error::NotImplemented(
                "signed moments are defined for scalar marks only".into(),
            ));
        }
        if self.symmetric {
            return Ok(0.0);
        }
        match &self.kind {
            MeasureKind::UniformBand { .. } | MeasureKind::TemperedStable { .. } => self.band_moment(1.0, lo, hi),
            MeasureKind::CompoundPoissonOnly { rate, marks } => {
                let m = match marks {
                    MarkLaw::Point(z) => {
                        let r = z[0].abs();
                        if r > lo && r <= hi {
                            z[0]
                        } else {
                            0.0
                        }
                    }
                    MarkLaw::Uniform { lo: a, hi: b } => {
                        let pos = power_integral(1.0, a.max(lo), b.min(hi));
                        let neg = power_integral(1.0, (-b).max(lo), (-a).min(hi));
                        (pos - neg) / (b - a)
                    }
                    MarkLaw::Custom(s) => s
                        .signed_first_moment(lo, hi)
                        .ok_or_else(|| Error::NotImplemented("custom mark law reports no signed moment".into()))?,
                };
                Ok(rate * m)
            }
        }
    }

    /// `theta_bar = int_{|z| <= 1} |z|^2 pi(dz)`.
    pub fn theta_bar(&self) -> Result<f64> {
        self.band_moment(2.0, 0.0, 1.0)
    }

    /// `theta_under = pi(|z| > 1)`, the big-jump intensity.
    pub fn theta_under(&self) -> Result<f64> {
        self.band_moment(0.0, 1.0, f64::INFINITY)
    }

    /// `theta_p = int_{|z| > 1} |z|^p pi(dz)`, `p >= 2`.
    pub fn theta_p(&self, p: u32) -> Result<f64> {
        if p < 2 {
            return Err(Error::Precondition(format!("theta_p needs p >= 2, got {p}")));
        }
        self.band_moment(p as f64, 1.0, f64::INFINITY)
    }

    /// Intensity of the simulated small band `eps < |z| <= 1`.
    pub fn small_rate(&self) -> Result<f64> {
        self.band_moment(0.0, self.small_cutoff, 1.0)
    }

    /// `int_{eps < |z| <= 1} |z|^2 pi(dz)`.
    pub fn small_second_moment(&self) -> Result<f64> {
        self.band_moment(2.0, self.small_cutoff, 1.0)
    }

    /// `theta_bar_eps = int_{|z| <= eps} |z|^2 pi(dz)`, the `L^2` weight of
    /// the dropped jumps.
    pub fn truncation_budget(&self) -> Result<f64> {
        self.truncation_budget_at(self.small_cutoff)
    }

    pub fn truncation_budget_at(&self, eps: f64) -> Result<f64> {
        self.band_moment(2.0, 0.0, eps)
    }

    /// Samples a mark with `lo < |z| <= hi` from the normalised restriction
    /// of the Levy measure.
    pub(crate) fn sample_band_mark<R: Rng>(&self, rng: &mut R, lo: f64, hi: f64) -> Result<Mark> {
        let mut mark: Mark = match &self.kind {
            MeasureKind::UniformBand { lo: s_lo, hi: s_hi, .. } => {
                let a = s_lo.max(lo);
                let b = s_hi.min(hi);
                let u: f64 = rng.random();
                let mut z = a + (b - a) * (1.0 - u);
                if z <= lo {
                    z = b;
                }
                smallvec::smallvec![z]
            }
            MeasureKind::TemperedStable { alpha, eta, .. } => {
                smallvec::smallvec![sample_tempered(rng, *alpha, *eta, lo, hi)?]
            }
            MeasureKind::CompoundPoissonOnly { marks, .. } => {
                let mut attempts = 0;
                loop {
                    let z: Mark = match marks {
                        MarkLaw::Point(z) => z.clone(),
                        MarkLaw::Uniform { lo: a, hi: b } => {
                            let u: f64 = rng.random();
                            smallvec::smallvec![a + (b - a) * u]
                        }
                        MarkLaw::Custom(s) => s.sample(rng),
                    };
                    let r = mark_norm(&z);
                    if r > lo && r <= hi {
                        break z;
                    }
                    attempts += 1;
                    if attempts >= MAX_REJECTIONS {
                        return Err(Error::Sampling(format!(
                            "no mark in band ({lo}, {hi}] after {MAX_REJECTIONS} draws"
                        )));
                    }
                }
            }
        };
        if self.symmetric && rng.random::<bool>() {
            mark.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(mark)
    }

    /// One-line description used in file headers.
    pub fn describe(&self) -> String {
        let kind = match &self.kind {
            MeasureKind::UniformBand { lo, hi, density } => {
                format!("uniform_band(lo={lo}, hi={hi}, density={density})")
            }
            MeasureKind::TemperedStable { c, alpha, eta } => {
                format!("tempered_stable(c={c}, alpha={alpha}, eta={eta})")
            }
            MeasureKind::CompoundPoissonOnly { rate, marks } => {
                let m = match marks {
                    MarkLaw::Point(z) => format!("point({z:?})"),
                    MarkLaw::Uniform { lo, hi } => format!("uniform({lo}, {hi})"),
                    MarkLaw::Custom(s) => format!("custom({s:?})"),
                };
                format!("compound_poisson(rate={rate}, marks={m})")
            }
        };
        format!("{kind}, symmetric={}", self.symmetric)
    }
}

/// `int_a^b z^p dz` for `0 <= a`, zero when `b <= a`.
fn power_integral(p: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if p == -1.0 {
        return (b / a).ln();
    }
    let q = p + 1.0;
    (b.powf(q) - a.powf(q)) / q
}

/// Magnitude with density proportional to `z^{-1-alpha} e^{-eta z}` on
/// `(lo, hi]`, by rejection from a Pareto or shifted-exponential proposal.
fn sample_tempered<R: Rng + ?Sized>(rng: &mut R, alpha: f64, eta: f64, lo: f64, hi: f64) -> Result<f64> {
    let exp_proposal = hi.is_infinite() && eta * lo >= 1.0;
    for _ in 0..MAX_REJECTIONS {
        let u: f64 = 1.0 - rng.random::<f64>();
        let w: f64 = rng.random();
        if exp_proposal {
            let z = lo - u.ln() / eta;
            if w <= (z / lo).powf(-1.0 - alpha) {
                return Ok(z);
            }
        } else {
            let z = if hi.is_infinite() {
                lo * u.powf(-1.0 / alpha)
            } else {
                let a = lo.powf(-alpha);
                let b = hi.powf(-alpha);
                (b + u * (a - b)).powf(-1.0 / alpha)
            };
            if z > lo && z <= hi && w <= (-eta * (z - lo)).exp() {
                return Ok(z);
            }
        }
    }
    Err(Error::Sampling(format!(
        "tempered-stable rejection sampler stalled on ({lo}, {hi}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_band_outside_unit_ball_has_no_small_mass() {
        let m = LevyModel::uniform_band(1.0, 2.0, 1.0, false).unwrap();
        assert_eq!(m.theta_bar().unwrap(), 0.0);
        assert_relative_eq!(m.theta_under().unwrap(), 1.0);
        assert_relative_eq!(m.theta_p(2).unwrap(), 7.0 / 3.0, max_relative = 1e-15);
        let s = LevyModel::uniform_band(1.0, 2.0, 1.0, true).unwrap();
        assert_relative_eq!(s.theta_under().unwrap(), 2.0);
    }

    #[test]
    fn symmetric_inner_band_theta_bar() {
        let m = LevyModel::uniform_band(0.5, 1.0, 1.0, true).unwrap();
        assert_relative_eq!(m.theta_bar().unwrap(), 7.0 / 12.0, max_relative = 1e-15);
        assert_eq!(m.theta_p(4).unwrap(), 0.0);
        assert_eq!(m.signed_first_moment(0.1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn compound_poisson_rates() {
        let m = LevyModel::compound_poisson(3.0, MarkLaw::Uniform { lo: 1.5, hi: 2.5 }, false).unwrap();
        assert_relative_eq!(m.theta_under().unwrap(), 3.0);
        assert_eq!(m.theta_bar().unwrap(), 0.0);
        let z = LevyModel::compound_poisson(0.0, MarkLaw::Point(smallvec::smallvec![0.5]), false)
            .unwrap()
            .with_cutoff(1.0)
            .unwrap();
        assert_eq!(z.small_rate().unwrap(), 0.0);
        assert_eq!(z.theta_under().unwrap(), 0.0);
    }

    #[test]
    fn uniform_marks_straddling_zero() {
        let m = LevyModel::compound_poisson(2.0, MarkLaw::Uniform { lo: -1.0, hi: 3.0 }, false).unwrap();
        // P(|Z| <= 1) = 2/4, P(|Z| > 1) = 2/4
        assert_relative_eq!(m.theta_under().unwrap(), 1.0, max_relative = 1e-15);
        // E[Z; 0.5 < |Z| <= 1] = (int_{0.5}^1 z - int_{0.5}^1 z) / 4 = 0
        assert!(m.signed_first_moment(0.5, 1.0).unwrap().abs() < 1e-15);
        assert_relative_eq!(
            m.signed_first_moment(1.0, f64::INFINITY).unwrap(),
            2.0 * 4.0 / 4.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn tempered_stable_is_infinite_activity() {
        let m = LevyModel::tempered_stable(1.0, 0.5, 1.0, false).unwrap();
        assert!(matches!(m.band_moment(0.0, 0.0, 0.1), Err(Error::Divergent(_))));
        assert!(m.theta_bar().unwrap() > 0.0);
        assert!(m.theta_p(4).unwrap().is_finite());
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(LevyModel::uniform_band(2.0, 1.0, 1.0, false).is_err());
        assert!(LevyModel::tempered_stable(1.0, 2.0, 1.0, false).is_err());
        assert!(LevyModel::tempered_stable(1.0, 0.5, 0.0, false).is_err());
        assert!(LevyModel::compound_poisson(1.0, MarkLaw::Point(smallvec::smallvec![0.0]), false).is_err());
        assert!(LevyModel::uniform_band(0.0, 1.0, 1.0, false)
            .unwrap()
            .with_cutoff(0.0)
            .is_err());
        assert!(LevyModel::uniform_band(0.0, 1.0, 1.0, false)
            .unwrap()
            .with_cutoff(1.5)
            .is_err());
    }

    #[test]
    fn theta_p_requires_p_at_least_two() {
        let m = LevyModel::uniform_band(1.0, 2.0, 1.0, false).unwrap();
        assert!(m.theta_p(1).is_err());
    }

    #[test]
    fn truncation_budget_monotone_in_cutoff() {
        let m = LevyModel::tempered_stable(1.0, 1.5, 0.7, true).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=60 {
            let eps = 10f64.powf(-i as f64 / 10.0);
            let b = m.truncation_budget_at(eps).unwrap();
            assert!(b < prev && b >= 0.0);
            prev = b;
        }
        assert!(prev < 1e-2);
    }
}
