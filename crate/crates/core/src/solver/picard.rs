//! Picard iteration for the small-jump system: each iterate solves the
//! linear problem whose jump and drift amplitudes are read from the
//! previous iterate.

use serde::Serialize;

use super::{Engine, KickSource, NodeStates, SimulateOptions, SolverConfig, TimeGrid, Trajectory};
use crate::dynamics::CoefficientPair;
use crate::error::{Error, Result};
use crate::noise::{Band, LevyModel, NoisePath};
use crate::spectral::{GalerkinState, SpectralDomain};

#[derive(Debug, Clone, Serialize)]
pub struct PicardResult {
    /// `X^0, X^1, ..., X^n`, sampled at the record times.
    pub iterates: Vec<Trajectory>,
    /// `d_n = sup_t |X^{n+1}(t) - X^n(t)|_{VxH}` over grid nodes, both
    /// one-sided limits included.
    pub distances: Vec<f64>,
}

impl PicardResult {
    pub fn last(&self) -> &Trajectory {
        self.iterates.last().expect("at least X^0")
    }
}

pub fn picard_iterate(
    initial: &GalerkinState,
    path: &NoisePath,
    config: &SolverConfig,
    coeff: &CoefficientPair,
    model: &LevyModel,
    domain: &SpectralDomain,
    n_iters: usize,
) -> Result<PicardResult> {
    if path.count(Band::Big) > 0 {
        return Err(Error::Precondition(
            "Picard iteration covers the small-jump system only; the path has big jumps".into(),
        ));
    }
    let engine = Engine::new(config, coeff, model, domain)?;
    engine.check_inputs(initial, path)?;
    let grid = TimeGrid::build(config.horizon, config.dt_max, config.record_every, path);

    let constant = vec![initial.clone(); grid.nodes.len()];
    let mut prev = NodeStates {
        left: constant.clone(),
        right: constant,
    };
    let n_rec = grid.record_times.len();
    let mut iterates = vec![Trajectory {
        times: grid.record_times.clone(),
        states: vec![initial.clone(); n_rec],
        jump_counts: vec![[0, 0]; n_rec],
        events_applied: [0, 0],
        ignored_events: grid.ignored_events,
        truncation_budget: model.truncation_budget()?,
        ledger: None,
        projection_loss: None,
    }];
    let mut distances = Vec::with_capacity(n_iters);
    for _ in 0..n_iters {
        let (traj, nodes) = engine.run(
            initial,
            path,
            &grid,
            KickSource::Frozen(&prev.right),
            SimulateOptions::default(),
            true,
        )?;
        let nodes = nodes.expect("node states requested");
        let d = nodes
            .left
            .iter()
            .zip(&prev.left)
            .chain(nodes.right.iter().zip(&prev.right))
            .map(|(a, b)| a.vh_distance(b, domain))
            .fold(0.0, f64::max);
        distances.push(d);
        iterates.push(traj);
        prev = nodes;
    }
    Ok(PicardResult { iterates, distances })
}
