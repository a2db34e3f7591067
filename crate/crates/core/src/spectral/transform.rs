//! Discrete sine transform pair between Galerkin coefficients and the
//! interior collocation grid `xi_j = j L / (M + 1)`, `j = 1..=M`.
//!
//! Both directions are a type-I DST. Small problems use a precomputed
//! `M x K` table; large ones embed the DST-I into a complex FFT of length
//! `2 (M + 1)`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Mode count from which [`TransformKind::Auto`] switches to the FFT path.
pub const FAST_TRANSFORM_THRESHOLD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransformKind {
    #[default]
    Auto,
    Direct,
    Fast,
}

#[derive(Clone)]
pub(crate) enum SineTransform {
    /// Row-major `table[j * K + k] = sin(pi (k+1) (j+1) / (M+1))`.
    Direct {
        table: Arc<Vec<f64>>,
    },
    Fast {
        fft: Arc<dyn Fft<f64>>,
    },
}

impl fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SineTransform::Direct { .. } => f.write_str("Direct"),
            SineTransform::Fast { .. } => f.write_str("Fast"),
        }
    }
}

impl SineTransform {
    pub(crate) fn build(kind: TransformKind, modes: usize, grid_points: usize) -> Self {
        let fast = match kind {
            TransformKind::Auto => modes >= FAST_TRANSFORM_THRESHOLD,
            TransformKind::Direct => false,
            TransformKind::Fast => true,
        };
        if fast {
            let fft = FftPlanner::new().plan_fft_forward(2 * (grid_points + 1));
            SineTransform::Fast { fft }
        } else {
            let denom = (grid_points + 1) as f64;
            let mut table = Vec::with_capacity(grid_points * modes);
            for j in 1..=grid_points {
                for k in 1..=modes {
                    table.push((std::f64::consts::PI * (k * j) as f64 / denom).sin());
                }
            }
            SineTransform::Direct { table: Arc::new(table) }
        }
    }

    pub(crate) fn is_fast(&self) -> bool {
        matches!(self, SineTransform::Fast { .. })
    }

    /// `out[j] = scale * sum_k coeffs[k] sin(pi (k+1)(j+1)/(M+1))`, `out.len() == M`.
    pub(crate) fn synthesize(&self, coeffs: &[f64], scale: f64, out: &mut [f64]) {
        let modes = coeffs.len();
        match self {
            SineTransform::Direct { table } => {
                for (j, o) in out.iter_mut().enumerate() {
                    let row = &table[j * modes..(j + 1) * modes];
                    let s: f64 = row.iter().zip(coeffs).map(|(a, b)| a * b).sum();
                    *o = scale * s;
                }
            }
            SineTransform::Fast { fft } => {
                let sums = dst1_fft(fft.as_ref(), coeffs, out.len());
                for (o, s) in out.iter_mut().zip(sums) {
                    *o = scale * s;
                }
            }
        }
    }

    /// `out[k] = scale * sum_j field[j] sin(pi (k+1)(j+1)/(M+1))`, `out.len() == K`.
    pub(crate) fn analyze(&self, field: &[f64], scale: f64, out: &mut [f64]) {
        let modes = out.len();
        match self {
            SineTransform::Direct { table } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (j, &f) in field.iter().enumerate() {
                    let row = &table[j * modes..(j + 1) * modes];
                    for (o, t) in out.iter_mut().zip(row) {
                        *o += f * t;
                    }
                }
                out.iter_mut().for_each(|o| *o *= scale);
            }
            SineTransform::Fast { fft } => {
                let sums = dst1_fft(fft.as_ref(), field, field.len());
                for (o, s) in out.iter_mut().zip(sums) {
                    *o = scale * s;
                }
            }
        }
    }
}

/// Unnormalised DST-I of `input` zero-padded to length `n`:
/// `S_k = sum_j x_j sin(pi k j / (n+1))` for `k = 1..=n`.
fn dst1_fft(fft: &dyn Fft<f64>, input: &[f64], n: usize) -> Vec<f64> {
    let len = 2 * (n + 1);
    debug_assert_eq!(fft.len(), len);
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (j, &x) in input.iter().enumerate().take(n) {
        buf[j + 1].re = x;
        buf[len - j - 1].re = -x;
    }
    fft.process(&mut buf);
    buf[1..=n].iter().map(|y| -0.5 * y.im).collect()
}
