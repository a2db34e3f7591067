//! Event-adapted time grid: the uniform `dt_max` lattice, record times and
//! jump times merged into one sorted node list.

use crate::noise::NoisePath;

#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub time: f64,
    /// Indices into the path's event list, applied at this node.
    pub events: Vec<usize>,
    /// Index of the record time this node samples.
    pub record: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TimeGrid {
    pub nodes: Vec<GridNode>,
    pub record_times: Vec<f64>,
    /// Events beyond the horizon that were left out.
    pub ignored_events: usize,
}

pub(crate) fn record_times(horizon: f64, record_every: f64) -> Vec<f64> {
    let n = (horizon / record_every * (1.0 + 1e-12)).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|j| j as f64 * record_every).collect();
    if let Some(last) = times.last_mut() {
        if *last > horizon {
            *last = horizon;
        }
    }
    times
}

impl TimeGrid {
    pub fn build(horizon: f64, dt_max: f64, record_every: f64, path: &NoisePath) -> Self {
        let record_times = record_times(horizon, record_every);
        // (time, kind, index): kind 0 = lattice, 1 = record, 2 = event
        let mut points: Vec<(f64, u8, usize)> = Vec::new();
        let steps = (horizon / dt_max * (1.0 - 1e-12)).ceil() as usize;
        for k in 0..steps {
            points.push((k as f64 * dt_max, 0, 0));
        }
        points.push((horizon, 0, 0));
        for (j, &t) in record_times.iter().enumerate() {
            points.push((t, 1, j));
        }
        let mut ignored_events = 0;
        for (i, e) in path.events.iter().enumerate() {
            if e.time <= horizon {
                points.push((e.time, 2, i));
            } else {
                ignored_events += 1;
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut nodes: Vec<GridNode> = Vec::with_capacity(points.len());
        for (t, kind, idx) in points {
            if nodes.last().is_none_or(|n| n.time != t) {
                nodes.push(GridNode {
                    time: t,
                    events: Vec::new(),
                    record: None,
                });
            }
            let node = nodes.last_mut().expect("node pushed above");
            match kind {
                1 => node.record = Some(idx),
                2 => node.events.push(idx),
                _ => {}
            }
        }
        Self {
            nodes,
            record_times,
            ignored_events,
        }
    }

    /// Largest step between consecutive nodes.
    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1].time - w[0].time).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Band, JumpEvent};
    use smallvec::smallvec;

    fn path(times: &[f64], horizon: f64) -> NoisePath {
        let mut p = NoisePath::empty(horizon);
        p.events = times
            .iter()
            .map(|&t| JumpEvent {
                time: t,
                mark: smallvec![2.0],
                band: Band::Big,
            })
            .collect();
        p
    }

    #[test]
    fn events_become_nodes() {
        let g = TimeGrid::build(1.0, 0.25, 0.5, &path(&[0.1, 0.5, 0.9], 1.0));
        let times: Vec<f64> = g.nodes.iter().map(|n| n.time).collect();
        assert_eq!(times, vec![0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]);
        assert_eq!(g.nodes[3].events, vec![1]);
        assert_eq!(g.nodes[3].record, Some(1));
        assert_eq!(g.record_times, vec![0.0, 0.5, 1.0]);
        assert!(g.max_step() <= 0.25 + 1e-15);
    }

    #[test]
    fn out_of_horizon_events_are_dropped() {
        let g = TimeGrid::build(1.0, 0.5, 1.0, &path(&[0.3, 1.5], 2.0));
        assert_eq!(g.ignored_events, 1);
        assert_eq!(g.nodes.iter().map(|n| n.events.len()).sum::<usize>(), 1);
    }

    #[test]
    fn horizon_not_on_lattice() {
        let g = TimeGrid::build(1.05, 0.1, 0.5, &path(&[], 1.05));
        assert_eq!(g.nodes.last().unwrap().time, 1.05);
        assert!(g.max_step() <= 0.1 + 1e-12);
        assert_eq!(g.record_times, vec![0.0, 0.5, 1.0]);
    }
}
