//! Run configuration: a TOML document with `domain`, `noise`,
//! `coefficients`, `solver`, `experiment` and `output` tables.
//!
//! Parsing collects every problem, each prefixed by its dotted path, before
//! reporting. The normalised echo written next to outputs parses back to an
//! identical configuration.

use std::path::PathBuf;

use serde::Serialize;
use toml::{Table, Value};

use crate::analysis::{compute_params, EnergyParams, EnsembleSettings};
use crate::dynamics::{BigCoefficient, CoefficientPair, Growth, SmallCoefficient};
use crate::ensemble::Execution;
use crate::error::{Error, Result};
use crate::noise::{LevyModel, MarkLaw, MeasureKind};
use crate::solver::SolverConfig;
use crate::spectral::{GalerkinState, SpectralDomain, TransformKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainSection {
    pub length: f64,
    pub modes: usize,
    pub grid_points: usize,
    pub transform: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSection {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marks: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mark: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mark_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mark_hi: Option<f64>,
    pub symmetric: bool,
    pub epsilon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSection {
    pub a: String,
    pub c_a: f64,
    pub b: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_b: Option<f64>,
    pub growth: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSection {
    pub n_paths: usize,
    pub first_stream: u64,
    pub stream_id: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    pub iterations: usize,
    pub sigma: f64,
    pub discretization_allowance: f64,
    pub rate_allowance: f64,
    pub fit_window: [f64; 2],
    pub execution: String,
    pub initial_u: Vec<f64>,
    pub initial_v: Vec<f64>,
    pub initial_y_u: Vec<f64>,
    pub initial_y_v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub noise: NoiseSection,
    pub coefficients: CoefficientSection,
    pub solver: SolverConfig,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

struct Walker {
    errors: Vec<String>,
}

impl Walker {
    fn err(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn table<'t>(&mut self, root: &'t Table, name: &str, required: bool) -> Option<&'t Table> {
        match root.get(name) {
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.err(name, "expected a table");
                None
            }
            None => {
                if required {
                    self.err(name, "missing section");
                }
                None
            }
        }
    }

    fn unknown(&mut self, t: Option<&Table>, sec: &str, known: &[&str]) {
        if let Some(t) = t {
            for k in t.keys() {
                if !known.contains(&k.as_str()) {
                    self.err(&format!("{sec}.{k}"), "unknown key");
                }
            }
        }
    }

    fn float(&mut self, t: Option<&Table>, sec: &str, key: &str) -> Option<f64> {
        match t?.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.err(&format!("{sec}.{key}"), "expected a number");
                None
            }
        }
    }

    fn int(&mut self, t: Option<&Table>, sec: &str, key: &str) -> Option<i64> {
        match t?.get(key)? {
            Value::Integer(i) => Some(*i),
            _ => {
                self.err(&format!("{sec}.{key}"), "expected an integer");
                None
            }
        }
    }

    fn count(&mut self, t: Option<&Table>, sec: &str, key: &str) -> Option<u64> {
        let i = self.int(t, sec, key)?;
        if i < 0 {
            self.err(&format!("{sec}.{key}"), "must be non-negative");
            return None;
        }
        Some(i as u64)
    }

    fn boolean(&mut self, t: Option<&Table>, sec: &str, key: &str) -> Option<bool> {
        match t?.get(key)? {
            Value::Boolean(b) => Some(*b),
            _ => {
                self.err(&format!("{sec}.{key}"), "expected true or false");
                None
            }
        }
    }

    fn string(&mut self, t: Option<&Table>, sec: &str, key: &str) -> Option<String> {
        match t?.get(key)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.err(&format!("{sec}.{key}"), "expected a string");
                None
            }
        }
    }

    fn floats(&mut self, t: Option<&Table>, sec: &str, key: &str) -> Option<Vec<f64>> {
        match t?.get(key)? {
            Value::Array(a) => {
                let mut out = Vec::with_capacity(a.len());
                for v in a {
                    match v {
                        Value::Float(x) => out.push(*x),
                        Value::Integer(i) => out.push(*i as f64),
                        _ => {
                            self.err(&format!("{sec}.{key}"), "expected an array of numbers");
                            return None;
                        }
                    }
                }
                Some(out)
            }
            _ => {
                self.err(&format!("{sec}.{key}"), "expected an array of numbers");
                None
            }
        }
    }

    fn require<T>(&mut self, v: Option<T>, t: Option<&Table>, path: &str) -> Option<T> {
        if v.is_none() && t.is_some() && !self.errors.iter().any(|e| e.starts_with(&format!("{path}:"))) {
            self.err(path, "missing");
        }
        v
    }

    fn positive(&mut self, path: &str, x: f64) {
        if !(x > 0.0 && x.is_finite()) {
            self.err(path, format!("must be positive and finite, got {x}"));
        }
    }
}

const DOMAIN_KEYS: &[&str] = &["length", "modes", "grid_points", "transform"];
const NOISE_KEYS: &[&str] = &[
    "kind",
    "lo",
    "hi",
    "density",
    "c",
    "alpha",
    "eta",
    "rate",
    "marks",
    "mark",
    "mark_lo",
    "mark_hi",
    "symmetric",
    "epsilon",
    "seed",
];
const COEFF_KEYS: &[&str] = &["a", "c_a", "b", "c_b", "ell_a", "ell_b", "growth", "p"];
const SOLVER_KEYS: &[&str] = &["kappa", "dt_max", "horizon", "record_every"];
const EXPERIMENT_KEYS: &[&str] = &[
    "n_paths",
    "first_stream",
    "stream_id",
    "burn_in",
    "window",
    "iterations",
    "sigma",
    "discretization_allowance",
    "rate_allowance",
    "fit_window",
    "execution",
    "initial_u",
    "initial_v",
    "initial_y_u",
    "initial_y_v",
];
const OUTPUT_KEYS: &[&str] = &["directory", "binary"];

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.message())]))?;
        let mut w = Walker { errors: Vec::new() };
        for k in root.keys() {
            if !["domain", "noise", "coefficients", "solver", "experiment", "output"].contains(&k.as_str()) {
                w.err(k, "unknown section");
            }
        }

        let t = w.table(&root, "domain", false);
        w.unknown(t, "domain", DOMAIN_KEYS);
        let length = w.float(t, "domain", "length").unwrap_or(std::f64::consts::PI);
        w.positive("domain.length", length);
        let modes = w.count(t, "domain", "modes").unwrap_or(16) as usize;
        if modes == 0 {
            w.err("domain.modes", "must be at least 1");
        }
        let grid_points = w.count(t, "domain", "grid_points").map_or(2 * modes, |g| g as usize);
        if grid_points < 2 * modes {
            w.err(
                "domain.grid_points",
                format!("must be at least 2 * modes = {}", 2 * modes),
            );
        }
        let transform = w.string(t, "domain", "transform").unwrap_or_else(|| "auto".into());
        if !["auto", "direct", "fast"].contains(&transform.as_str()) {
            w.err("domain.transform", "expected auto, direct or fast");
        }
        let domain = DomainSection {
            length,
            modes,
            grid_points,
            transform,
        };

        let t = w.table(&root, "noise", true);
        w.unknown(t, "noise", NOISE_KEYS);
        let kind = w.string(t, "noise", "kind");
        let kind = w.require(kind, t, "noise.kind").unwrap_or_default();
        let mut noise = NoiseSection {
            kind: kind.clone(),
            lo: w.float(t, "noise", "lo"),
            hi: w.float(t, "noise", "hi"),
            density: w.float(t, "noise", "density"),
            c: w.float(t, "noise", "c"),
            alpha: w.float(t, "noise", "alpha"),
            eta: w.float(t, "noise", "eta"),
            rate: w.float(t, "noise", "rate"),
            marks: w.string(t, "noise", "marks"),
            mark: w.floats(t, "noise", "mark"),
            mark_lo: w.float(t, "noise", "mark_lo"),
            mark_hi: w.float(t, "noise", "mark_hi"),
            symmetric: w.boolean(t, "noise", "symmetric").unwrap_or(false),
            epsilon: w.float(t, "noise", "epsilon").unwrap_or(0.1),
            seed: w.count(t, "noise", "seed").unwrap_or(0),
        };
        let fields: &[&str] = match kind.as_str() {
            "uniform_band" => &["lo", "hi", "density"],
            "tempered_stable" => &["c", "alpha", "eta"],
            "compound_poisson" => &["rate", "marks"],
            "" => &[],
            other => {
                w.err("noise.kind", format!("unknown kind `{other}`"));
                &[]
            }
        };
        let present = |n: &NoiseSection, f: &str| match f {
            "lo" => n.lo.is_some(),
            "hi" => n.hi.is_some(),
            "density" => n.density.is_some(),
            "c" => n.c.is_some(),
            "alpha" => n.alpha.is_some(),
            "eta" => n.eta.is_some(),
            "rate" => n.rate.is_some(),
            "marks" => n.marks.is_some(),
            "mark" => n.mark.is_some(),
            "mark_lo" => n.mark_lo.is_some(),
            "mark_hi" => n.mark_hi.is_some(),
            _ => false,
        };
        let mut allowed: Vec<&str> = fields.to_vec();
        if kind == "compound_poisson" {
            match noise.marks.as_deref() {
                Some("point") => allowed.push("mark"),
                Some("uniform") => allowed.extend(["mark_lo", "mark_hi"]),
                Some(other) => w.err("noise.marks", format!("expected point or uniform, got `{other}`")),
                None => {}
            }
        }
        if !kind.is_empty() {
            for f in &allowed {
                if !present(&noise, f) {
                    w.err(&format!("noise.{f}"), format!("required for kind `{kind}`"));
                }
            }
            for f in [
                "lo", "hi", "density", "c", "alpha", "eta", "rate", "marks", "mark", "mark_lo", "mark_hi",
            ] {
                if present(&noise, f) && !allowed.contains(&f) {
                    w.err(&format!("noise.{f}"), format!("not used by kind `{kind}`"));
                }
            }
        }
        if !kind.is_empty() && !w.errors.iter().any(|e| e.starts_with("noise")) {
            if let Err(e) = build_model(&noise) {
                w.err("noise", e);
            }
        }
        if noise.kind.is_empty() {
            noise.kind = kind;
        }

        let t = w.table(&root, "coefficients", false);
        w.unknown(t, "coefficients", COEFF_KEYS);
        let a = w
            .string(t, "coefficients", "a")
            .unwrap_or_else(|| "linear_sigma".into());
        if !["linear_sigma", "sin_sigma"].contains(&a.as_str()) {
            w.err("coefficients.a", "expected linear_sigma or sin_sigma");
        }
        let b = w
            .string(t, "coefficients", "b")
            .unwrap_or_else(|| "bounded_lipschitz".into());
        let c_b = w.float(t, "coefficients", "c_b");
        match b.as_str() {
            "bounded_lipschitz" if c_b.is_none() => w.err("coefficients.c_b", "required for bounded_lipschitz"),
            "same_as_a" if c_b.is_some() => w.err("coefficients.c_b", "not used when b = same_as_a"),
            "bounded_lipschitz" | "same_as_a" => {}
            _ => w.err("coefficients.b", "expected same_as_a or bounded_lipschitz"),
        }
        let growth = w.string(t, "coefficients", "growth").unwrap_or_else(|| "H2".into());
        let p = w.count(t, "coefficients", "p").map(|p| p as u32);
        match (growth.as_str(), p) {
            ("H2", Some(_)) => w.err("coefficients.p", "only used with growth = \"H2'\""),
            ("H2'", None) => w.err("coefficients.p", "required with growth = \"H2'\""),
            ("H2'", Some(p)) if p < 2 => w.err("coefficients.p", "must be at least 2"),
            ("H2", None) | ("H2'", Some(_)) => {}
            _ => w.err("coefficients.growth", "expected \"H2\" or \"H2'\""),
        }
        let coefficients = CoefficientSection {
            a,
            c_a: w.float(t, "coefficients", "c_a").unwrap_or(0.0),
            b,
            c_b,
            ell_a: w.float(t, "coefficients", "ell_a"),
            ell_b: w.float(t, "coefficients", "ell_b"),
            growth,
            p,
        };
        for (name, v) in [("ell_a", coefficients.ell_a), ("ell_b", coefficients.ell_b)] {
            if v.is_some_and(|x| !(x >= 0.0)) {
                w.err(&format!("coefficients.{name}"), "must be non-negative");
            }
        }
        if w.errors.iter().all(|e| !e.starts_with("coefficients")) {
            if let Err(e) = build_coefficients(&coefficients).ell_b() {
                w.err("coefficients.growth", e);
            }
        }

        let t = w.table(&root, "solver", true);
        w.unknown(t, "solver", SOLVER_KEYS);
        let kappa = w.float(t, "solver", "kappa");
        let kappa = w.require(kappa, t, "solver.kappa").unwrap_or(f64::NAN);
        let horizon = w.float(t, "solver", "horizon");
        let horizon = w.require(horizon, t, "solver.horizon").unwrap_or(f64::NAN);
        let solver = SolverConfig {
            kappa,
            horizon,
            dt_max: w.float(t, "solver", "dt_max").unwrap_or(0.05),
            record_every: w.float(t, "solver", "record_every").unwrap_or(0.5),
        };
        if t.is_some() {
            for (k, v) in [
                ("kappa", solver.kappa),
                ("horizon", solver.horizon),
                ("dt_max", solver.dt_max),
                ("record_every", solver.record_every),
            ] {
                if !v.is_nan() || !w.errors.iter().any(|e| e.starts_with(&format!("solver.{k}:"))) {
                    w.positive(&format!("solver.{k}"), v);
                }
            }
        }

        let t = w.table(&root, "experiment", false);
        w.unknown(t, "experiment", EXPERIMENT_KEYS);
        let d = EnsembleSettings::default();
        let experiment = ExperimentSection {
            n_paths: w.count(t, "experiment", "n_paths").map_or(d.n_paths, |n| n as usize),
            first_stream: w.count(t, "experiment", "first_stream").unwrap_or(0),
            stream_id: w.count(t, "experiment", "stream_id").unwrap_or(0),
            burn_in: w.float(t, "experiment", "burn_in"),
            window: w.float(t, "experiment", "window"),
            iterations: w.count(t, "experiment", "iterations").map_or(30, |n| n as usize),
            sigma: w.float(t, "experiment", "sigma").unwrap_or(d.sigma),
            discretization_allowance: w
                .float(t, "experiment", "discretization_allowance")
                .unwrap_or(d.discretization_allowance),
            rate_allowance: w.float(t, "experiment", "rate_allowance").unwrap_or(d.rate_allowance),
            fit_window: match w.floats(t, "experiment", "fit_window") {
                Some(v) if v.len() == 2 => [v[0], v[1]],
                Some(_) => {
                    w.err("experiment.fit_window", "expected two numbers");
                    d.fit_window
                }
                None => d.fit_window,
            },
            execution: w
                .string(t, "experiment", "execution")
                .unwrap_or_else(|| "parallel".into()),
            initial_u: w.floats(t, "experiment", "initial_u").unwrap_or_else(|| vec![1.0]),
            initial_v: w.floats(t, "experiment", "initial_v").unwrap_or_default(),
            initial_y_u: w.floats(t, "experiment", "initial_y_u").unwrap_or_default(),
            initial_y_v: w.floats(t, "experiment", "initial_y_v").unwrap_or_default(),
        };
        if experiment.n_paths == 0 {
            w.err("experiment.n_paths", "must be at least 1");
        }
        for (k, v) in [("burn_in", experiment.burn_in), ("window", experiment.window)] {
            if let Some(v) = v {
                w.positive(&format!("experiment.{k}"), v);
            }
        }
        if !(experiment.sigma >= 0.0) {
            w.err("experiment.sigma", "must be non-negative");
        }
        for (k, v) in [
            ("discretization_allowance", experiment.discretization_allowance),
            ("rate_allowance", experiment.rate_allowance),
        ] {
            if !(v >= 0.0) {
                w.err(&format!("experiment.{k}"), "must be non-negative");
            }
        }
        let [f0, f1] = experiment.fit_window;
        if !(0.0 <= f0 && f0 < f1 && f1 <= 1.0) {
            w.err("experiment.fit_window", "need 0 <= start < end <= 1");
        }
        if !["parallel", "sequential"].contains(&experiment.execution.as_str()) {
            w.err("experiment.execution", "expected parallel or sequential");
        }
        for (k, v) in [
            ("initial_u", &experiment.initial_u),
            ("initial_v", &experiment.initial_v),
            ("initial_y_u", &experiment.initial_y_u),
            ("initial_y_v", &experiment.initial_y_v),
        ] {
            if v.len() > modes {
                w.err(
                    &format!("experiment.{k}"),
                    format!("has {} entries but modes = {modes}", v.len()),
                );
            }
            if v.iter().any(|x| !x.is_finite()) {
                w.err(&format!("experiment.{k}"), "entries must be finite");
            }
        }

        let t = w.table(&root, "output", false);
        w.unknown(t, "output", OUTPUT_KEYS);
        let output = OutputSection {
            directory: w
                .string(t, "output", "directory")
                .map_or_else(|| PathBuf::from("out"), PathBuf::from),
            binary: w.boolean(t, "output", "binary").unwrap_or(false),
        };

        if !w.errors.is_empty() {
            return Err(Error::Config(w.errors));
        }
        Ok(Self {
            domain,
            noise,
            coefficients,
            solver,
            experiment,
            output,
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Normalised TOML with every default written out.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("configuration serialises to TOML")
    }

    pub fn spectral_domain(&self) -> Result<SpectralDomain> {
        let kind = match self.domain.transform.as_str() {
            "direct" => TransformKind::Direct,
            "fast" => TransformKind::Fast,
            _ => TransformKind::Auto,
        };
        SpectralDomain::with_transform(self.domain.length, self.domain.modes, self.domain.grid_points, kind)
    }

    pub fn model(&self) -> Result<LevyModel> {
        build_model(&self.noise)
    }

    pub fn coefficients(&self) -> CoefficientPair {
        build_coefficients(&self.coefficients)
    }

    pub fn growth(&self) -> Growth {
        self.coefficients().growth
    }

    pub fn params(&self) -> Result<EnergyParams> {
        compute_params(
            self.solver.kappa,
            &self.model()?,
            &self.coefficients(),
            &self.spectral_domain()?,
            self.growth(),
        )
    }

    pub fn settings(&self) -> EnsembleSettings {
        let e = &self.experiment;
        EnsembleSettings {
            n_paths: e.n_paths,
            seed: self.noise.seed,
            first_stream: e.first_stream,
            sigma: e.sigma,
            discretization_allowance: e.discretization_allowance,
            rate_allowance: e.rate_allowance,
            fit_window: e.fit_window,
            execution: if e.execution == "sequential" {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
        }
    }

    pub fn initial_x(&self) -> Result<GalerkinState> {
        GalerkinState::from_leading_modes(
            self.domain.modes,
            &self.experiment.initial_u,
            &self.experiment.initial_v,
        )
    }

    pub fn initial_y(&self) -> Result<GalerkinState> {
        GalerkinState::from_leading_modes(
            self.domain.modes,
            &self.experiment.initial_y_u,
            &self.experiment.initial_y_v,
        )
    }
}

fn build_model(n: &NoiseSection) -> Result<LevyModel> {
    let kind = match n.kind.as_str() {
        "uniform_band" => MeasureKind::UniformBand {
            lo: n.lo.unwrap_or_default(),
            hi: n.hi.unwrap_or_default(),
            density: n.density.unwrap_or_default(),
        },
        "tempered_stable" => MeasureKind::TemperedStable {
            c: n.c.unwrap_or_default(),
            alpha: n.alpha.unwrap_or_default(),
            eta: n.eta.unwrap_or_default(),
        },
        "compound_poisson" => MeasureKind::CompoundPoissonOnly {
            rate: n.rate.unwrap_or_default(),
            marks: if n.marks.as_deref() == Some("uniform") {
                MarkLaw::Uniform {
                    lo: n.mark_lo.unwrap_or_default(),
                    hi: n.mark_hi.unwrap_or_default(),
                }
            } else {
                MarkLaw::Point(n.mark.clone().unwrap_or_default().into_iter().collect())
            },
        },
        other => return Err(Error::invalid("kind", format!("unknown noise kind `{other}`"))),
    };
    LevyModel::new(kind, n.epsilon, n.symmetric)
}

fn build_coefficients(c: &CoefficientSection) -> CoefficientPair {
    let a = if c.a == "sin_sigma" {
        SmallCoefficient::SinSigma(c.c_a)
    } else {
        SmallCoefficient::LinearSigma(c.c_a)
    };
    let b = if c.b == "same_as_a" {
        BigCoefficient::SameAsA
    } else {
        BigCoefficient::BoundedLipschitz(c.c_b.unwrap_or_default())
    };
    let growth = match c.p {
        Some(p) if c.growth == "H2'" => Growth::H2Prime(p),
        _ => Growth::H2,
    };
    CoefficientPair::new(a, b, growth).with_constants(c.ell_a, c.ell_b)
}
