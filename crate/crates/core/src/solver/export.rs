//! Trajectory output: a summary CSV and a raw little-endian coefficient dump.

use std::fmt::Write as _;
use std::io::{Read, Write};

use super::Trajectory;
use crate::analysis::energy;
use crate::error::{Error, Result};
use crate::spectral::{GalerkinState, SpectralDomain};

pub const CSV_HEADER: &str = "t,norm_u,abs_v,abs_rho,energy,jump_count_small,jump_count_big";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm_u: f64,
    pub abs_v: f64,
    pub abs_rho: f64,
    pub energy: f64,
    pub jumps_small: usize,
    pub jumps_big: usize,
}

impl Trajectory {
    pub fn rows(&self, delta: f64, domain: &SpectralDomain) -> Vec<TrajectoryRow> {
        self.times
            .iter()
            .zip(&self.states)
            .zip(&self.jump_counts)
            .map(|((&t, s), c)| {
                let rho: f64 = s.u.iter().zip(&s.v).map(|(u, v)| (delta * u + v).powi(2)).sum();
                TrajectoryRow {
                    t,
                    norm_u: domain.v_norm_sq(&s.u).sqrt(),
                    abs_v: s.v.iter().map(|x| x * x).sum::<f64>().sqrt(),
                    abs_rho: rho.sqrt(),
                    energy: energy(s, delta, domain),
                    jumps_small: c[0],
                    jumps_big: c[1],
                }
            })
            .collect()
    }

    pub fn to_csv(&self, delta: f64, domain: &SpectralDomain) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in self.rows(delta, domain) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t, r.norm_u, r.abs_v, r.abs_rho, r.energy, r.jumps_small, r.jumps_big
            );
        }
        out
    }

    /// Header `K`, sample count (`u64`), then per sample `t, u[..K], v[..K]`
    /// as `f64`, all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let k = self.states.first().map_or(0, |s| s.modes());
        w.write_all(&(k as u64).to_le_bytes())?;
        w.write_all(&(self.states.len() as u64).to_le_bytes())?;
        for (t, s) in self.times.iter().zip(&self.states) {
            w.write_all(&t.to_le_bytes())?;
            for x in s.u.iter().chain(&s.v) {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Inverse of [`Trajectory::write_binary`].
pub fn read_binary<R: Read>(mut r: R) -> Result<(Vec<f64>, Vec<GalerkinState>)> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut word)
            .map_err(|e| Error::Parse(format!("truncated coefficient dump: {e}")))?;
        Ok(word)
    };
    let k = u64::from_le_bytes(next(&mut r)?) as usize;
    let n = u64::from_le_bytes(next(&mut r)?) as usize;
    let mut times = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    for _ in 0..n {
        times.push(f64::from_le_bytes(next(&mut r)?));
        let mut vals = Vec::with_capacity(2 * k);
        for _ in 0..2 * k {
            vals.push(f64::from_le_bytes(next(&mut r)?));
        }
        let v = vals.split_off(k);
        states.push(GalerkinState { u: vals, v });
    }
    Ok((times, states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::CoefficientPair;
    use crate::noise::{LevyModel, NoisePath};
    use crate::solver::{simulate, SolverConfig};

    fn run() -> (Trajectory, SpectralDomain) {
        let d = SpectralDomain::new(std::f64::consts::PI, 3).unwrap();
        let cfg = SolverConfig::new(0.1, 1.0, 2.0, 0.25).unwrap();
        let s0 = GalerkinState::new(vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.0]).unwrap();
        let t = simulate(
            &s0,
            &NoisePath::empty(1.0),
            &cfg,
            &CoefficientPair::linear(0.1, 0.1),
            &LevyModel::silent(),
            &d,
        )
        .unwrap();
        (t, d)
    }

    #[test]
    fn binary_round_trip() {
        let (t, _) = run();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 5 * 8 * 7);
        let (times, states) = read_binary(&buf[..]).unwrap();
        assert_eq!(times, t.times);
        assert_eq!(states, t.states);
        assert!(read_binary(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn csv_shape() {
        let (t, d) = run();
        let csv = t.to_csv(0.25, &d);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[5].ends_with(",0,0"));
    }
}
