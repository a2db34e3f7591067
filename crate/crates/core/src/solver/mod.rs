//! Time integration: exact exponential flow between nodes of an
//! event-adapted grid, jump kicks at event times, and the compensator drift
//! by first-order splitting.

mod export;
mod grid;
mod picard;
mod propagator;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_band, CoefficientPair, KickWorkspace};
use crate::error::{check_len, Error, Result};
use crate::noise::{Band, Compensator, LevyModel, NoisePath};
use crate::spectral::{GalerkinState, SpectralDomain};

pub use export::{read_binary, TrajectoryRow};
pub use grid::{GridNode, TimeGrid};
pub use picard::{picard_iterate, PicardResult};
use propagator::Propagator;
pub use propagator::{linear_flow, mode_matrix, regime, DampingRegime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt_max: f64,
    pub horizon: f64,
    pub kappa: f64,
    pub record_every: f64,
}

impl SolverConfig {
    pub fn new(dt_max: f64, horizon: f64, kappa: f64, record_every: f64) -> Result<Self> {
        let c = Self {
            dt_max,
            horizon,
            kappa,
            record_every,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive and finite, got {x}")))
            }
        };
        positive("kappa", self.kappa)?;
        positive("dt_max", self.dt_max)?;
        positive("horizon", self.horizon)?;
        positive("record_every", self.record_every)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulateOptions {
    /// Accumulate exact time integrals of the quadratic forms along the flow.
    pub quadratic_ledger: bool,
    /// Track projection loss of pseudospectral kicks.
    pub diagnostics: bool,
}

impl SimulateOptions {
    pub fn with_ledger() -> Self {
        Self {
            quadratic_ledger: true,
            diagnostics: false,
        }
    }
}

/// Cumulative time integrals up to a record time.
///
/// `uu`, `auu`, `uv`, `vv` integrate `|u|^2`, `||u||^2`, `<u, v>`, `|v|^2`
/// along the linear flow. The `drift_*` fields sum `<u, g>`, `<v, g>` and
/// `|g|^2` over the compensator kicks `v -> v + g`, with `v` taken before the
/// kick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub uu: f64,
    pub auu: f64,
    pub uv: f64,
    pub vv: f64,
    pub drift_ug: f64,
    pub drift_vg: f64,
    pub drift_gg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GalerkinState>,
    /// Cumulative `[small, big]` jump counts at each record time.
    pub jump_counts: Vec<[usize; 2]>,
    pub events_applied: [usize; 2],
    pub ignored_events: usize,
    /// `theta_bar_eps` of the model that drove the path.
    pub truncation_budget: f64,
    pub ledger: Option<Vec<LedgerEntry>>,
    /// Total `H`-energy lost to re-truncation of pseudospectral kicks.
    pub projection_loss: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &GalerkinState {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

/// Right and left limits at every grid node, kept for iteration.
#[derive(Debug, Clone)]
pub(crate) struct NodeStates {
    pub(crate) left: Vec<GalerkinState>,
    pub(crate) right: Vec<GalerkinState>,
}

/// Where kick and drift amplitudes read the displacement from.
pub(crate) enum KickSource<'a> {
    Current,
    Frozen(&'a [GalerkinState]),
}

pub(crate) struct Engine<'a> {
    pub(crate) config: &'a SolverConfig,
    pub(crate) coeff: &'a CoefficientPair,
    pub(crate) model: &'a LevyModel,
    pub(crate) domain: &'a SpectralDomain,
    pub(crate) compensator: Compensator,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        config: &'a SolverConfig,
        coeff: &'a CoefficientPair,
        model: &'a LevyModel,
        domain: &'a SpectralDomain,
    ) -> Result<Self> {
        config.validate()?;
        if coeff.requires_scalar_marks() && model.mark_dimension() != 1 {
            return Err(Error::invalid(
                "coefficients",
                "built-in coefficient forms need scalar marks",
            ));
        }
        Ok(Self {
            config,
            coeff,
            model,
            domain,
            compensator: Compensator::build(model, coeff)?,
        })
    }

    pub(crate) fn check_inputs(&self, initial: &GalerkinState, path: &NoisePath) -> Result<()> {
        check_len(self.domain.modes(), initial.u.len())?;
        check_len(self.domain.modes(), initial.v.len())?;
        if !initial.is_finite() {
            return Err(Error::invalid("initial", "initial state is not finite"));
        }
        if path.horizon < self.config.horizon * (1.0 - 1e-12) {
            return Err(Error::Precondition(format!(
                "noise path horizon {} is shorter than the solver horizon {}",
                path.horizon, self.config.horizon
            )));
        }
        for e in &path.events {
            check_band(&e.mark, e.band)?;
        }
        Ok(())
    }

    /// Runs the grid. With `keep_nodes`, also returns both one-sided limits
    /// at every node.
    pub(crate) fn run(
        &self,
        initial: &GalerkinState,
        path: &NoisePath,
        grid: &TimeGrid,
        source: KickSource<'_>,
        options: SimulateOptions,
        keep_nodes: bool,
    ) -> Result<(Trajectory, Option<NodeStates>)> {
        let k = self.domain.modes();
        let kappa = self.config.kappa;
        let lambdas = self.domain.eigenvalues();
        let cached = Propagator::new(kappa, lambdas, self.config.dt_max);
        let mut ws = KickWorkspace::new(self.domain);
        let mut field = vec![0.0; self.domain.grid_points()];
        let mut kick = vec![0.0; k];

        let n_rec = grid.record_times.len();
        let mut traj = Trajectory {
            times: grid.record_times.clone(),
            states: Vec::with_capacity(n_rec),
            jump_counts: Vec::with_capacity(n_rec),
            events_applied: [0, 0],
            ignored_events: grid.ignored_events,
            truncation_budget: self.model.truncation_budget()?,
            ledger: options.quadratic_ledger.then(|| Vec::with_capacity(n_rec)),
            projection_loss: options.diagnostics.then_some(0.0),
        };
        if grid.ignored_events > 0 {
            warn!(
                "{} noise events beyond the horizon {} were ignored",
                grid.ignored_events, self.config.horizon
            );
        }
        let mut nodes = keep_nodes.then(|| NodeStates {
            left: Vec::with_capacity(grid.nodes.len()),
            right: Vec::with_capacity(grid.nodes.len()),
        });
        let mut ledger = LedgerEntry::default();
        let mut state = initial.clone();
        let mut prev_u = vec![0.0; k];
        let mut prev_v = vec![0.0; k];

        for (i, node) in grid.nodes.iter().enumerate() {
            if i > 0 {
                let h = node.time - grid.nodes[i - 1].time;
                debug_assert!(h > 0.0);
                if options.quadratic_ledger {
                    prev_u.copy_from_slice(&state.u);
                    prev_v.copy_from_slice(&state.v);
                }
                if (h - cached.dt).abs() <= 1e-12 * cached.dt {
                    cached.apply(&mut state.u, &mut state.v);
                } else {
                    Propagator::new(kappa, lambdas, h).apply(&mut state.u, &mut state.v);
                }
                if options.quadratic_ledger {
                    accumulate_flow(&mut ledger, kappa, lambdas, &prev_u, &prev_v, &state.u, &state.v);
                }
            }
            if let Some(n) = nodes.as_mut() {
                n.left.push(state.clone());
            }
            let amp_u: &[f64] = match source {
                KickSource::Current => &state.u,
                KickSource::Frozen(states) => &states[i].u,
            };
            let amp_u = amp_u.to_vec();
            for &e in &node.events {
                let ev = &path.events[e];
                let loss = ws.kick(
                    self.coeff,
                    self.domain,
                    &amp_u,
                    &ev.mark,
                    ev.band,
                    &mut kick,
                    options.diagnostics,
                );
                if let Some(total) = traj.projection_loss.as_mut() {
                    *total += loss;
                }
                for (v, g) in state.v.iter_mut().zip(&kick) {
                    *v += g;
                }
                traj.events_applied[band_index(ev.band)] += 1;
            }
            if !state.is_finite() {
                return Err(Error::BlowUp { time: node.time });
            }
            if let Some(n) = nodes.as_mut() {
                n.right.push(state.clone());
            }
            if node.record.is_some() {
                traj.states.push(state.clone());
                traj.jump_counts.push(traj.events_applied);
                if let Some(l) = traj.ledger.as_mut() {
                    l.push(ledger);
                }
            }
            if let Some(next) = grid.nodes.get(i + 1) {
                if !self.compensator.is_zero() {
                    let h = next.time - node.time;
                    self.compensator
                        .galerkin_drift(self.coeff, self.domain, &amp_u, &mut field, &mut kick);
                    let mut ug = 0.0;
                    let mut vg = 0.0;
                    let mut gg = 0.0;
                    for ((kj, u), v) in kick.iter().zip(&state.u).zip(state.v.iter_mut()) {
                        let g = h * kj;
                        ug += u * g;
                        vg += *v * g;
                        gg += g * g;
                        *v += g;
                    }
                    ledger.drift_ug += ug;
                    ledger.drift_vg += vg;
                    ledger.drift_gg += gg;
                }
            }
        }
        debug_assert_eq!(traj.states.len(), n_rec);
        Ok((traj, nodes))
    }
}

fn band_index(b: Band) -> usize {
    match b {
        Band::Small => 0,
        Band::Big => 1,
    }
}

/// Exact integrals over one linear-flow segment from the energy identities
/// of each mode.
fn accumulate_flow(l: &mut LedgerEntry, kappa: f64, lambdas: &[f64], u0: &[f64], v0: &[f64], u1: &[f64], v1: &[f64]) {
    for j in 0..lambdas.len() {
        let lam = lambdas[j];
        let d_uu = u1[j] * u1[j] - u0[j] * u0[j];
        let d_uv = u1[j] * v1[j] - u0[j] * v0[j];
        let d_e = lam * d_uu + v1[j] * v1[j] - v0[j] * v0[j];
        let iuv = 0.5 * d_uu;
        let ivv = -d_e / (2.0 * kappa);
        let iauu = ivv - kappa * iuv - d_uv;
        l.uv += iuv;
        l.vv += ivv;
        l.auu += iauu;
        l.uu += iauu / lam;
    }
}

/// Solves on the event-adapted grid of `path`.
pub fn simulate(
    initial: &GalerkinState,
    path: &NoisePath,
    config: &SolverConfig,
    coeff: &CoefficientPair,
    model: &LevyModel,
    domain: &SpectralDomain,
) -> Result<Trajectory> {
    simulate_with(initial, path, config, coeff, model, domain, SimulateOptions::default())
}

pub fn simulate_with(
    initial: &GalerkinState,
    path: &NoisePath,
    config: &SolverConfig,
    coeff: &CoefficientPair,
    model: &LevyModel,
    domain: &SpectralDomain,
    options: SimulateOptions,
) -> Result<Trajectory> {
    let engine = Engine::new(config, coeff, model, domain)?;
    engine.check_inputs(initial, path)?;
    let grid = TimeGrid::build(config.horizon, config.dt_max, config.record_every, path);
    Ok(engine.run(initial, path, &grid, KickSource::Current, options, false)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::JumpEvent;
    use smallvec::smallvec;
    use std::f64::consts::PI;

    fn setup() -> (SpectralDomain, SolverConfig, CoefficientPair) {
        (
            SpectralDomain::new(PI, 4).unwrap(),
            SolverConfig::new(0.1, 2.0, 0.8, 0.5).unwrap(),
            CoefficientPair::linear(0.5, 0.7),
        )
    }

    #[test]
    fn ledger_matches_fine_quadrature() {
        let (d, _, c) = setup();
        let cfg = SolverConfig::new(0.5, 2.0, 0.8, 2.0).unwrap();
        let s0 = GalerkinState::new(vec![1.0, -0.3, 0.2, 0.05], vec![0.0, 0.4, -0.1, 0.0]).unwrap();
        let t = simulate_with(
            &s0,
            &NoisePath::empty(2.0),
            &cfg,
            &c,
            &LevyModel::silent(),
            &d,
            SimulateOptions::with_ledger(),
        )
        .unwrap();
        let l = t.ledger.unwrap()[1];
        let n = 200_000;
        let h = 2.0 / n as f64;
        let p = Propagator::new(0.8, d.eigenvalues(), h);
        let (mut u, mut v) = (s0.u.clone(), s0.v.clone());
        let mut acc = [0.0; 4];
        let f = |u: &[f64], v: &[f64]| {
            let uu: f64 = u.iter().map(|x| x * x).sum();
            let auu: f64 = u.iter().zip(d.eigenvalues()).map(|(x, l)| l * x * x).sum();
            let uv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            let vv: f64 = v.iter().map(|x| x * x).sum();
            [uu, auu, uv, vv]
        };
        let mut prev = f(&u, &v);
        for _ in 0..n {
            p.apply(&mut u, &mut v);
            let cur = f(&u, &v);
            for i in 0..4 {
                acc[i] += 0.5 * h * (prev[i] + cur[i]);
            }
            prev = cur;
        }
        for (got, want) in [l.uu, l.auu, l.uv, l.vv].iter().zip(acc) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn big_jump_composition() {
        let (d, cfg, c) = setup();
        let s0 = GalerkinState::new(vec![1.0, 0.5, 0.0, -0.2], vec![0.0; 4]).unwrap();
        let mut path = NoisePath::empty(2.0);
        path.events.push(JumpEvent {
            time: 0.73,
            mark: smallvec![3.0],
            band: Band::Big,
        });
        let t = simulate(&s0, &path, &cfg, &c, &LevyModel::silent(), &d).unwrap();
        let mut s = linear_flow(&s0, 0.73, 0.8, &d).unwrap();
        for j in 0..4 {
            s.v[j] += 0.7 * s.u[j];
        }
        let s = linear_flow(&s, 2.0 - 0.73, 0.8, &d).unwrap();
        assert!(t.final_state().vh_distance(&s, &d) < 1e-10);
        assert_eq!(t.events_applied, [0, 1]);
        assert_eq!(t.jump_counts[1], [0, 0]);
        assert_eq!(t.jump_counts[2], [0, 1]);
    }

    #[test]
    fn short_path_is_rejected() {
        let (d, cfg, c) = setup();
        let r = simulate(
            &GalerkinState::zeros(4),
            &NoisePath::empty(1.0),
            &cfg,
            &c,
            &LevyModel::silent(),
            &d,
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn blow_up_reports_time() {
        let (d, cfg, _) = setup();
        let c = CoefficientPair::linear(0.5, f64::INFINITY);
        let mut path = NoisePath::empty(2.0);
        path.events.push(JumpEvent {
            time: 1.25,
            mark: smallvec![3.0],
            band: Band::Big,
        });
        let s0 = GalerkinState::from_leading_modes(4, &[1.0], &[]).unwrap();
        match simulate(&s0, &path, &cfg, &c, &LevyModel::silent(), &d) {
            Err(Error::BlowUp { time }) => assert_eq!(time, 1.25),
            other => panic!("{other:?}"),
        }
    }
}
