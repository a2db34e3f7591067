use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::band_stream;
use super::{mark_norm, LevyModel, Mark};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    /// `eps < |z| <= 1`, driven through the compensated measure.
    Small,
    /// `|z| > 1`.
    Big,
}

impl Band {
    pub fn as_str(self) -> &'static str {
        match self {
            Band::Small => "small",
            Band::Big => "big",
        }
    }

    /// Whether a mark of norm `r` may carry this label.
    pub fn admits(self, r: f64) -> bool {
        match self {
            Band::Small => r > 0.0 && r <= 1.0,
            Band::Big => r > 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: Mark,
    pub band: Band,
}

/// A realisation of the jump point process on `(0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub horizon: f64,
    pub events: Vec<JumpEvent>,
    pub seed: u64,
    pub stream_id: u64,
    pub small_cutoff: f64,
    pub mark_dimension: usize,
    pub model: String,
}

/// Draws big and small jumps as independent marked Poisson processes, each
/// from its own counter-based stream, and merges them in time order.
pub fn sample_path(model: &LevyModel, horizon: f64, seed: u64, stream_id: u64) -> Result<NoisePath> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
    }
    let small = sample_band(model, Band::Small, model.small_rate()?, horizon, seed, stream_id)?;
    let big = sample_band(model, Band::Big, model.theta_under()?, horizon, seed, stream_id)?;
    Ok(NoisePath {
        horizon,
        events: merge(small, big),
        seed,
        stream_id,
        small_cutoff: model.small_cutoff(),
        mark_dimension: model.mark_dimension(),
        model: model.describe(),
    })
}

fn sample_band(
    model: &LevyModel,
    band: Band,
    rate: f64,
    horizon: f64,
    seed: u64,
    stream_id: u64,
) -> Result<Vec<JumpEvent>> {
    if rate <= 0.0 {
        return Ok(Vec::new());
    }
    let (lo, hi) = match band {
        Band::Small => (model.small_cutoff(), 1.0),
        Band::Big => (1.0, f64::INFINITY),
    };
    let mut rng = band_stream(seed, stream_id, band);
    let mut events = Vec::with_capacity((rate * horizon * 1.2) as usize + 4);
    let mut t = 0.0;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        t -= u.ln() / rate;
        if t > horizon {
            break;
        }
        let mark = model.sample_band_mark(&mut rng, lo, hi)?;
        events.push(JumpEvent { time: t, mark, band });
    }
    Ok(events)
}

fn merge(a: Vec<JumpEvent>, b: Vec<JumpEvent>) -> Vec<JumpEvent> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut a = a.into_iter().peekable();
    let mut b = b.into_iter().peekable();
    loop {
        let take_a = match (a.peek(), b.peek()) {
            (Some(x), Some(y)) => x.time <= y.time,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        out.push(if take_a { a.next() } else { b.next() }.unwrap());
    }
    out
}

impl NoisePath {
    /// A path without events.
    pub fn empty(horizon: f64) -> Self {
        Self {
            horizon,
            events: Vec::new(),
            seed: 0,
            stream_id: 0,
            small_cutoff: 1.0,
            mark_dimension: 1,
            model: "none".into(),
        }
    }

    pub fn count(&self, band: Band) -> usize {
        self.events.iter().filter(|e| e.band == band).count()
    }

    /// The same path with big jumps removed.
    pub fn small_only(&self) -> Self {
        Self {
            events: self.events.iter().filter(|e| e.band == Band::Small).cloned().collect(),
            ..self.clone()
        }
    }

    /// Splits into `(0, t]` and `(t, horizon]`, the latter shifted to start
    /// at zero.
    pub fn split_at(&self, t: f64) -> (Self, Self) {
        let (head, tail): (Vec<_>, Vec<_>) = self.events.iter().cloned().partition(|e| e.time <= t);
        let tail = tail.into_iter().map(|e| JumpEvent { time: e.time - t, ..e }).collect();
        (
            Self {
                horizon: t,
                events: head,
                ..self.clone()
            },
            Self {
                horizon: self.horizon - t,
                events: tail,
                ..self.clone()
            },
        )
    }

    /// Time order, horizon and band labels.
    pub fn check(&self) -> Result<()> {
        let mut last = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            if !(e.time > last || (i == 0 && e.time > 0.0)) || e.time > self.horizon {
                return Err(Error::Parse(format!(
                    "event {i} at t = {} breaks strict ordering in (0, {}]",
                    e.time, self.horizon
                )));
            }
            if e.mark.len() != self.mark_dimension {
                return Err(Error::Parse(format!("event {i} has mark of wrong dimension")));
            }
            if !e.band.admits(mark_norm(&e.mark)) {
                return Err(Error::BandMismatch(format!(
                    "event {i}: |z| = {} labelled {}",
                    mark_norm(&e.mark),
                    e.band.as_str()
                )));
            }
            last = e.time;
        }
        Ok(())
    }

    /// CSV with a commented header recording the generating parameters and
    /// one `time,mark,band` row per event. Vector marks are `;`-joined.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# levywave noise path").unwrap();
        writeln!(s, "# model = {}", self.model).unwrap();
        writeln!(s, "# epsilon = {}", self.small_cutoff).unwrap();
        writeln!(s, "# seed = {}", self.seed).unwrap();
        writeln!(s, "# stream_id = {}", self.stream_id).unwrap();
        writeln!(s, "# horizon = {}", self.horizon).unwrap();
        writeln!(s, "# mark_dimension = {}", self.mark_dimension).unwrap();
        writeln!(s, "time,mark,band").unwrap();
        for e in &self.events {
            let mark: Vec<String> = e.mark.iter().map(|x| x.to_string()).collect();
            writeln!(s, "{},{},{}", e.time, mark.join(";"), e.band.as_str()).unwrap();
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut path = NoisePath::empty(0.0);
        let mut header_seen = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim_end();
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((key, value)) = meta.split_once('=') {
                    let value = value.trim();
                    match key.trim() {
                        "model" => path.model = value.to_string(),
                        "epsilon" => path.small_cutoff = value.parse().map_err(|_| bad("epsilon"))?,
                        "seed" => path.seed = value.parse().map_err(|_| bad("seed"))?,
                        "stream_id" => path.stream_id = value.parse().map_err(|_| bad("stream_id"))?,
                        "horizon" => path.horizon = value.parse().map_err(|_| bad("horizon"))?,
                        "mark_dimension" => path.mark_dimension = value.parse().map_err(|_| bad("mark_dimension"))?,
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if !header_seen {
                if line != "time,mark,band" {
                    return Err(bad("expected `time,mark,band` header"));
                }
                header_seen = true;
                continue;
            }
            let mut cols = line.split(',');
            let (Some(t), Some(m), Some(b), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
                return Err(bad("expected three columns"));
            };
            let time: f64 = t.parse().map_err(|_| bad("time"))?;
            let mark = m
                .split(';')
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<Mark, _>>()
                .map_err(|_| bad("mark"))?;
            let band = match b {
                "small" => Band::Small,
                "big" => Band::Big,
                _ => return Err(bad("band must be `small` or `big`")),
            };
            path.events.push(JumpEvent { time, mark, band });
        }
        if !header_seen {
            return Err(Error::Parse("missing column header".into()));
        }
        path.check()?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::MarkLaw;

    #[test]
    fn zero_intensity_gives_empty_path() {
        let m = LevyModel::compound_poisson(0.0, MarkLaw::Point(smallvec::smallvec![0.5]), false)
            .unwrap()
            .with_cutoff(1.0)
            .unwrap();
        let p = sample_path(&m, 10.0, 1, 2).unwrap();
        assert!(p.events.is_empty());
    }

    #[test]
    fn paths_are_deterministic_and_ordered() {
        let m = LevyModel::tempered_stable(1.0, 0.8, 1.0, true).unwrap();
        let a = sample_path(&m, 50.0, 9, 3).unwrap();
        let b = sample_path(&m, 50.0, 9, 3).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(!a.events.is_empty());
        a.check().unwrap();
        let c = sample_path(&m, 50.0, 9, 4).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn bands_respect_cutoffs() {
        let m = LevyModel::uniform_band(0.0, 3.0, 2.0, true)
            .unwrap()
            .with_cutoff(0.3)
            .unwrap();
        let p = sample_path(&m, 20.0, 5, 0).unwrap();
        for e in &p.events {
            let r = e.mark[0].abs();
            match e.band {
                Band::Small => assert!(r > 0.3 && r <= 1.0),
                Band::Big => assert!(r > 1.0 && r <= 3.0),
            }
        }
        assert!(p.count(Band::Small) > 0 && p.count(Band::Big) > 0);
    }

    #[test]
    fn csv_round_trip() {
        let m = LevyModel::uniform_band(0.2, 1.7, 1.3, false).unwrap();
        let p = sample_path(&m, 10.0, 77, 11).unwrap();
        let back = NoisePath::read_csv(p.to_csv().as_bytes()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn csv_rejects_mislabelled_band() {
        let text = "# horizon = 1\n# mark_dimension = 1\ntime,mark,band\n0.5,0.3,big\n";
        assert!(matches!(
            NoisePath::read_csv(text.as_bytes()),
            Err(Error::BandMismatch(_))
        ));
        let text = "# horizon = 1\ntime,mark,band\n0.5,0.3,small\n0.4,0.3,small\n";
        assert!(NoisePath::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn split_preserves_events() {
        let m = LevyModel::uniform_band(0.0, 2.0, 1.0, true).unwrap();
        let p = sample_path(&m, 10.0, 1, 1).unwrap();
        let (a, b) = p.split_at(4.0);
        assert_eq!(a.events.len() + b.events.len(), p.events.len());
        assert!(a.events.iter().all(|e| e.time <= 4.0));
        assert!(b.events.iter().all(|e| e.time > 0.0 && e.time <= 6.0));
        assert_eq!(b.horizon, 6.0);
    }
}
