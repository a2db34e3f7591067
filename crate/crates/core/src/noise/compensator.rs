//! The compensating drift of the simulated small band,
//! `-int_{eps < |z| <= 1} a(x, z) pi(dz)`, evaluated pointwise.

use super::{LevyModel, MarkLaw, MeasureKind};
use crate::dynamics::{CoefficientPair, SmallCoefficient};
use crate::error::{Error, Result};
use crate::spectral::SpectralDomain;

const GAUSS_NODES: usize = 48;
const GEOMETRIC_PANELS: usize = 24;

/// Compensator drift as a function of the displacement field.
#[derive(Debug, Clone)]
pub enum Compensator {
    Zero,
    /// Drift `k * x`, exact in Galerkin coordinates.
    Linear(f64),
    /// Drift `-c sin(x) m1` with `m1 = int z pi(dz)` over the band.
    Sine {
        c: f64,
        m1: f64,
    },
    /// Drift `-sum_i w_i a(x, z_i)` from a quadrature of the measure.
    Quadrature {
        nodes: Vec<(f64, f64)>,
    },
}

impl Compensator {
    pub fn build(model: &LevyModel, coeff: &CoefficientPair) -> Result<Self> {
        let eps = model.small_cutoff();
        if model.small_rate()? == 0.0 {
            return Ok(Compensator::Zero);
        }
        let odd = match &coeff.a {
            SmallCoefficient::Custom(f) => f.odd_in_z(),
            _ => true,
        };
        if model.is_symmetric() && odd {
            return Ok(Compensator::Zero);
        }
        match &coeff.a {
            SmallCoefficient::LinearSigma(c) => {
                let m1 = model.signed_first_moment(eps, 1.0)?;
                Ok(if m1 == 0.0 {
                    Compensator::Zero
                } else {
                    Compensator::Linear(-c * m1)
                })
            }
            SmallCoefficient::SinSigma(c) => {
                let m1 = model.signed_first_moment(eps, 1.0)?;
                Ok(if m1 == 0.0 {
                    Compensator::Zero
                } else {
                    Compensator::Sine { c: *c, m1 }
                })
            }
            SmallCoefficient::Custom(_) => Ok(Compensator::Quadrature {
                nodes: band_quadrature(model, eps, 1.0)?,
            }),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Compensator::Zero)
    }

    #[inline]
    pub fn eval(&self, coeff: &CoefficientPair, x: f64) -> f64 {
        match self {
            Compensator::Zero => 0.0,
            Compensator::Linear(k) => k * x,
            Compensator::Sine { c, m1 } => -c * x.sin() * m1,
            Compensator::Quadrature { nodes } => -nodes.iter().map(|&(z, w)| w * coeff.eval_a(x, &[z])).sum::<f64>(),
        }
    }

    /// Galerkin drift `P_K[comp(u)]` written into `out`; `field` is grid
    /// scratch space.
    pub(crate) fn galerkin_drift(
        &self,
        coeff: &CoefficientPair,
        domain: &SpectralDomain,
        u: &[f64],
        field: &mut [f64],
        out: &mut [f64],
    ) {
        match self {
            Compensator::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Compensator::Linear(k) => {
                for (o, x) in out.iter_mut().zip(u) {
                    *o = k * x;
                }
            }
            _ => {
                domain.to_physical_into(u, field);
                for x in field.iter_mut() {
                    *x = self.eval(coeff, *x);
                }
                domain.from_physical_into(field, out);
            }
        }
    }
}

/// Pointwise compensator drift on a physical field.
pub fn small_jump_compensator(model: &LevyModel, coeff: &CoefficientPair, u_field: &[f64]) -> Result<Vec<f64>> {
    let comp = Compensator::build(model, coeff)?;
    Ok(u_field.iter().map(|&x| comp.eval(coeff, x)).collect())
}

/// Signed nodes and weights with `sum w f(z) ~ int_{lo<|z|<=hi} f(z) pi(dz)`
/// for scalar marks.
fn band_quadrature(model: &LevyModel, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    let (x, w) = gauss_legendre(GAUSS_NODES);
    let mirror = |nodes: Vec<(f64, f64)>| -> Vec<(f64, f64)> {
        if model.is_symmetric() {
            nodes.iter().flat_map(|&(z, w)| [(z, w), (-z, w)]).collect()
        } else {
            nodes
        }
    };
    let mapped = |a: f64, b: f64, density: &dyn Fn(f64) -> f64| -> Vec<(f64, f64)> {
        x.iter()
            .zip(&w)
            .map(|(xi, wi)| {
                let z = 0.5 * (b - a) * xi + 0.5 * (a + b);
                (z, 0.5 * (b - a) * wi * density(z))
            })
            .collect()
    };
    match model.kind() {
        MeasureKind::UniformBand {
            lo: s_lo,
            hi: s_hi,
            density,
        } => {
            let a = s_lo.max(lo);
            let b = s_hi.min(hi);
            if b <= a {
                return Ok(Vec::new());
            }
            let d = *density;
            Ok(mirror(mapped(a, b, &|_| d)))
        }
        MeasureKind::TemperedStable { c, alpha, eta } => {
            let (c, alpha, eta) = (*c, *alpha, *eta);
            let density = move |z: f64| c * z.powf(-1.0 - alpha) * (-eta * z).exp();
            let ratio = (hi / lo).powf(1.0 / GEOMETRIC_PANELS as f64);
            let mut nodes = Vec::with_capacity(GAUSS_NODES * GEOMETRIC_PANELS);
            let mut a = lo;
            for i in 0..GEOMETRIC_PANELS {
                let b = if i + 1 == GEOMETRIC_PANELS { hi } else { a * ratio };
                nodes.extend(mapped(a, b, &density));
                a = b;
            }
            Ok(mirror(nodes))
        }
        MeasureKind::CompoundPoissonOnly { rate, marks } => match marks {
            MarkLaw::Point(z) if z.len() == 1 => {
                let r = z[0].abs();
                let v = if r > lo && r <= hi {
                    vec![(z[0], *rate)]
                } else {
                    Vec::new()
                };
                Ok(v)
            }
            MarkLaw::Uniform { lo: a, hi: b } => {
                let d = rate / (b - a);
                let mut nodes = Vec::new();
                for (p, q) in [(a.max(lo), b.min(hi)), (a.max(-hi), b.min(-lo))] {
                    if q > p {
                        nodes.extend(mapped(p, q, &|_| d));
                    }
                }
                Ok(nodes)
            }
            _ => Err(Error::NotImplemented(
                "compensator quadrature needs a scalar mark law with known density".into(),
            )),
        },
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}
