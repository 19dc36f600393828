//! Experiment configuration files.
//!
//! Configs are TOML with flat sections. Every key is optional; the values
//! below are the defaults.
//!
//! ```toml
//! kind = "full_vs_heat"   # full_vs_heat | full_vs_detwave | split_audit
//!                         # | component_scaling | oracle_suite
//!
//! [basis]
//! length = 1.0
//! modes = 32
//!
//! [noise]
//! exponent = 4.0          # b_k = k^-exponent
//! # coefficients = [1.0, 0.0625]   # explicit b_k (missing modes are 0)
//!
//! [model]
//! nonlinearity = "cubic_default"  # or "zero"
//! # polynomial = [0.0, 1.0, 0.0, -1.0]   # c0 + c1 s + c2 s^2 + c3 s^3
//! alpha = 0.0
//! nu = [0.1, 0.01, 0.001, 0.0001]
//!
//! [initial]
//! u0 = [0.5, 0.25]        # mode coefficients, or "zero"
//! u1 = "well_prepared"    # -A u0 + f(u0); or "zero", or coefficients
//!
//! [time]
//! horizon = 1.0
//! steps = 2048
//! samples = 64            # output times i T / samples, i = 0..=samples
//! # output_times = [0.25, 0.5, 1.0]   # explicit, must lie on the step grid
//!
//! [ensemble]
//! replicas = 1
//! seed = 0
//! threads = 1
//!
//! [audit]                 # test function for split_audit
//! profile = [1.0, 0.5, 0.3333333333333333]
//! temporal = "cos"        # "cos" (g = cos t), "one" (g = 1), or polynomial coefficients
//! ```

use serde::{Deserialize, Serialize};

use crate::analysis::{Temporal, TestFunction};
use crate::dynamics::{drift, ModelParams, Sampling, ALPHA_ONE_MESSAGE};
use crate::error::{Error, Result};
use crate::noise::CovarianceSpectrum;
use crate::spectral::{Nonlinearity, SpectralBasis, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    FullVsHeat,
    FullVsDetwave,
    SplitAudit,
    ComponentScaling,
    OracleSuite,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::FullVsHeat => "full_vs_heat",
            ExperimentKind::FullVsDetwave => "full_vs_detwave",
            ExperimentKind::SplitAudit => "split_audit",
            ExperimentKind::ComponentScaling => "component_scaling",
            ExperimentKind::OracleSuite => "oracle_suite",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            ExperimentKind::FullVsHeat,
            ExperimentKind::FullVsDetwave,
            ExperimentKind::SplitAudit,
            ExperimentKind::ComponentScaling,
            ExperimentKind::OracleSuite,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

/// Covariance specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    PowerLaw(f64),
    Explicit(Vec<f64>),
}

/// Initial field specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Coefficients(Vec<f64>),
    Preset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TemporalSpec {
    Polynomial(Vec<f64>),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub length: f64,
    pub modes: usize,
    pub noise: NoiseSpec,
    pub nonlinearity: Nonlinearity,
    pub alpha: f64,
    pub nu: Vec<f64>,
    pub u0: FieldSpec,
    pub u1: FieldSpec,
    pub horizon: f64,
    pub steps: usize,
    /// Output grid steps (subset of `0..=steps`).
    pub output_steps: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
    pub threads: usize,
    pub audit_profile: Vec<f64>,
    pub audit_temporal: TemporalSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::FullVsHeat,
            length: 1.0,
            modes: 32,
            noise: NoiseSpec::PowerLaw(4.0),
            nonlinearity: Nonlinearity::CubicDefault,
            alpha: 0.0,
            nu: vec![1e-1, 1e-2, 1e-3, 1e-4],
            u0: FieldSpec::Coefficients(vec![0.5, 0.25]),
            u1: FieldSpec::Preset("well_prepared".into()),
            horizon: 1.0,
            steps: 2048,
            output_steps: (0..=2048).step_by(32).collect(),
            replicas: 1,
            seed: 0,
            threads: 1,
            audit_profile: vec![1.0, 0.5, 1.0 / 3.0],
            audit_temporal: TemporalSpec::Named("cos".into()),
        }
    }
}

const KNOWN: &[(&str, &[&str])] = &[
    ("basis", &["length", "modes"]),
    ("noise", &["exponent", "coefficients"]),
    ("model", &["nonlinearity", "polynomial", "alpha", "nu"]),
    ("initial", &["u0", "u1"]),
    ("time", &["horizon", "steps", "samples", "output_times"]),
    ("ensemble", &["replicas", "seed", "threads"]),
    ("audit", &["profile", "temporal"]),
];

struct Reader<'a> {
    root: &'a toml::Table,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn get(&self, section: &str, key: &str) -> Option<&'a toml::Value> {
        self.root.get(section)?.as_table()?.get(key)
    }

    fn float(&mut self, section: &str, key: &str, default: f64) -> f64 {
        match self.get(section, key) {
            None => default,
            Some(v) => match as_f64(v) {
                Some(x) => x,
                None => {
                    self.errors.push(format!("{section}.{key}: expected a number"));
                    default
                }
            },
        }
    }

    fn uint(&mut self, section: &str, key: &str, default: u64) -> u64 {
        match self.get(section, key) {
            None => default,
            Some(toml::Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(_) => {
                self.errors
                    .push(format!("{section}.{key}: expected a non-negative integer"));
                default
            }
        }
    }

    fn floats(&mut self, section: &str, key: &str) -> Option<Vec<f64>> {
        let v = self.get(section, key)?;
        match v.as_array().map(|a| a.iter().map(as_f64).collect::<Option<Vec<_>>>()) {
            Some(Some(xs)) => Some(xs),
            _ => {
                self.errors
                    .push(format!("{section}.{key}: expected an array of numbers"));
                None
            }
        }
    }

    fn field(&mut self, section: &str, key: &str, default: FieldSpec) -> FieldSpec {
        match self.get(section, key) {
            None => default,
            Some(toml::Value::String(s)) => FieldSpec::Preset(s.clone()),
            Some(_) => match self.floats(section, key) {
                Some(xs) => FieldSpec::Coefficients(xs),
                None => default,
            },
        }
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Parses and validates a config, reporting every violation found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let root: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config(format!("TOML syntax: {e}")))?;
    let mut r = Reader {
        root: &root,
        errors: Vec::new(),
    };
    for (key, value) in &root {
        if key == "kind" {
            continue;
        }
        match KNOWN.iter().find(|(s, _)| s == key) {
            None => r.errors.push(format!("{key}: unknown key")),
            Some((section, keys)) => match value.as_table() {
                None => r.errors.push(format!("{section}: expected a table")),
                Some(t) => {
                    for k in t.keys().filter(|k| !keys.contains(&k.as_str())) {
                        r.errors.push(format!("{section}.{k}: unknown key"));
                    }
                }
            },
        }
    }

    let d = ExperimentConfig::default();
    let kind = match root.get("kind") {
        None => d.kind,
        Some(toml::Value::String(s)) => ExperimentKind::parse(s).unwrap_or_else(|| {
            r.errors.push(format!("kind: unknown experiment kind {s:?}"));
            d.kind
        }),
        Some(_) => {
            r.errors.push("kind: expected a string".into());
            d.kind
        }
    };

    let length = r.float("basis", "length", d.length);
    let modes = r.uint("basis", "modes", d.modes as u64) as usize;

    let noise = match (r.get("noise", "exponent"), r.get("noise", "coefficients")) {
        (Some(_), Some(_)) => {
            r.errors
                .push("noise: give either exponent or coefficients, not both".into());
            d.noise.clone()
        }
        (_, Some(_)) => r
            .floats("noise", "coefficients")
            .map_or(d.noise.clone(), NoiseSpec::Explicit),
        _ => NoiseSpec::PowerLaw(r.float("noise", "exponent", 4.0)),
    };

    let nonlinearity = match (r.get("model", "nonlinearity"), r.get("model", "polynomial")) {
        (Some(_), Some(_)) => {
            r.errors
                .push("model: give either nonlinearity or polynomial, not both".into());
            d.nonlinearity
        }
        (Some(toml::Value::String(s)), None) => match s.as_str() {
            "cubic_default" => Nonlinearity::CubicDefault,
            "zero" => Nonlinearity::Zero,
            other => {
                r.errors.push(format!("model.nonlinearity: unknown tag {other:?}"));
                d.nonlinearity
            }
        },
        (Some(_), None) => {
            r.errors.push("model.nonlinearity: expected a string".into());
            d.nonlinearity
        }
        (None, Some(_)) => match r.floats("model", "polynomial") {
            Some(c) => Nonlinearity::polynomial(&c).unwrap_or_else(|e| {
                r.errors.push(format!("model.polynomial: {e}"));
                d.nonlinearity
            }),
            None => d.nonlinearity,
        },
        (None, None) => d.nonlinearity,
    };

    let alpha = r.float("model", "alpha", d.alpha);
    let nu = r.floats("model", "nu").unwrap_or(d.nu.clone());
    let u0 = r.field("initial", "u0", d.u0.clone());
    let u1 = r.field("initial", "u1", d.u1.clone());
    let horizon = r.float("time", "horizon", d.horizon);
    let steps = r.uint("time", "steps", d.steps as u64) as usize;
    let samples = r.uint("time", "samples", 64) as usize;
    let explicit_times = r.floats("time", "output_times");
    let replicas = r.uint("ensemble", "replicas", d.replicas as u64) as usize;
    let seed = r.uint("ensemble", "seed", d.seed);
    let threads = r.uint("ensemble", "threads", d.threads as u64) as usize;
    let audit_profile = r.floats("audit", "profile").unwrap_or(d.audit_profile.clone());
    let audit_temporal = match r.get("audit", "temporal") {
        None => d.audit_temporal.clone(),
        Some(toml::Value::String(s)) => TemporalSpec::Named(s.clone()),
        Some(_) => r
            .floats("audit", "temporal")
            .map_or(d.audit_temporal.clone(), TemporalSpec::Polynomial),
    };

    let mut errors = r.errors;
    let output_steps = if steps == 0 || !(horizon > 0.0) {
        Vec::new()
    } else if let Some(times) = explicit_times {
        if r.root.get("time").and_then(|t| t.get("samples")).is_some() {
            errors.push("time: give either samples or output_times, not both".into());
        }
        match Sampling::at_times(&times, horizon, steps) {
            Ok(s) => s.steps().to_vec(),
            Err(Error::Config(v)) => {
                errors.extend(v.into_iter().map(|m| format!("time.output_times: {m}")));
                Vec::new()
            }
            Err(e) => {
                errors.push(e.to_string());
                Vec::new()
            }
        }
    } else if samples == 0 || steps % samples != 0 {
        errors.push(format!(
            "time.samples: {samples} must be positive and divide steps = {steps}"
        ));
        Vec::new()
    } else {
        Sampling::every(steps / samples, steps).steps().to_vec()
    };

    let cfg = ExperimentConfig {
        kind,
        length,
        modes,
        noise,
        nonlinearity,
        alpha,
        nu,
        u0,
        u1,
        horizon,
        steps,
        output_steps,
        replicas,
        seed,
        threads,
        audit_profile,
        audit_temporal,
    };
    errors.extend(cfg.violations());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors))
    }
}

impl ExperimentConfig {
    /// Range checks that do not depend on how the config was built.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.length.is_finite() && self.length > 0.0) {
            v.push(format!("basis.length: must be positive, got {}", self.length));
        }
        if self.modes == 0 {
            v.push("basis.modes: must be at least 1".into());
        }
        match &self.noise {
            NoiseSpec::PowerLaw(p) if !p.is_finite() => v.push("noise.exponent: must be finite".into()),
            NoiseSpec::Explicit(b) => {
                if b.len() > self.modes {
                    v.push(format!(
                        "noise.coefficients: {} values for {} modes",
                        b.len(),
                        self.modes
                    ));
                }
                if b.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    v.push("noise.coefficients: must be finite and non-negative".into());
                }
            }
            _ => {}
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            v.push(format!("model.alpha: must be >= 0, got {}", self.alpha));
        }
        if self.alpha == 1.0 {
            v.push(format!("model.alpha: {ALPHA_ONE_MESSAGE}"));
        }
        match self.kind {
            ExperimentKind::FullVsHeat if self.alpha > 1.0 => v.push(format!(
                "model.alpha: full_vs_heat compares against the heat limit, which needs alpha < 1 (got {})",
                self.alpha
            )),
            ExperimentKind::FullVsDetwave if self.alpha < 1.0 => v.push(format!(
                "model.alpha: full_vs_detwave compares against the deterministic wave limit, which needs alpha > 1 (got {})",
                self.alpha
            )),
            _ => {}
        }
        if self.nu.is_empty() && self.kind != ExperimentKind::OracleSuite {
            v.push("model.nu: at least one value required".into());
        }
        for nu in &self.nu {
            if !(*nu > 0.0 && *nu <= 1.0) {
                v.push(format!("model.nu: {nu} outside (0, 1]"));
            }
        }
        for (name, spec) in [("initial.u0", &self.u0), ("initial.u1", &self.u1)] {
            match spec {
                FieldSpec::Coefficients(c) if c.len() > self.modes => v.push(format!(
                    "{name}: references mode {} but only {} modes retained",
                    c.len(),
                    self.modes
                )),
                FieldSpec::Coefficients(c) if c.iter().any(|x| !x.is_finite()) => {
                    v.push(format!("{name}: coefficients must be finite"))
                }
                FieldSpec::Preset(p) => {
                    let ok = match name {
                        "initial.u0" => p == "zero",
                        _ => p == "zero" || p == "well_prepared",
                    };
                    if !ok {
                        v.push(format!("{name}: unknown preset {p:?}"));
                    }
                }
                _ => {}
            }
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            v.push(format!("time.horizon: must be positive, got {}", self.horizon));
        }
        if self.steps == 0 {
            v.push("time.steps: must be at least 1".into());
        }
        if self.replicas == 0 {
            v.push("ensemble.replicas: must be at least 1".into());
        }
        if self.seed > i64::MAX as u64 {
            v.push(format!("ensemble.seed: {} exceeds the TOML integer range", self.seed));
        }
        if self.threads == 0 {
            v.push("ensemble.threads: must be at least 1".into());
        }
        if self.kind == ExperimentKind::SplitAudit && self.audit_profile.len() > self.modes {
            v.push(format!(
                "audit.profile: references mode {} but only {} modes retained",
                self.audit_profile.len(),
                self.modes
            ));
        }
        if let TemporalSpec::Named(n) = &self.audit_temporal {
            if n != "cos" && n != "one" {
                v.push(format!("audit.temporal: unknown name {n:?}"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn basis(&self) -> Result<SpectralBasis> {
        SpectralBasis::new(self.length, self.modes)
    }

    pub fn covariance(&self) -> Result<CovarianceSpectrum> {
        match &self.noise {
            NoiseSpec::PowerLaw(p) => CovarianceSpectrum::power_law(self.modes, *p),
            NoiseSpec::Explicit(b) => {
                let mut b = b.clone();
                b.resize(self.modes, 0.0);
                CovarianceSpectrum::new(b)
            }
        }
    }

    pub fn params(&self, nu: f64) -> Result<ModelParams> {
        ModelParams::new(
            nu,
            self.alpha,
            self.horizon,
            self.steps,
            self.basis()?,
            self.nonlinearity,
            self.covariance()?,
        )
    }

    pub fn sampling(&self) -> Sampling {
        Sampling::at_steps(self.output_steps.clone())
    }

    fn coefficients(&self, c: &[f64]) -> SpectralField {
        let mut f = SpectralField::zeros(self.modes);
        let n = c.len().min(self.modes);
        f.coeffs[..n].copy_from_slice(&c[..n]);
        f
    }

    pub fn initial_displacement(&self) -> SpectralField {
        match &self.u0 {
            FieldSpec::Coefficients(c) => self.coefficients(c),
            FieldSpec::Preset(_) => SpectralField::zeros(self.modes),
        }
    }

    /// Initial velocity; `well_prepared` starts on the slow manifold
    /// `u1 = -A u0 + f(u0)`, which removes the initial layer.
    pub fn initial_velocity(&self, params: &ModelParams) -> Result<SpectralField> {
        match &self.u1 {
            FieldSpec::Coefficients(c) => Ok(self.coefficients(c)),
            FieldSpec::Preset(p) if p == "well_prepared" => drift(params, &self.initial_displacement()),
            FieldSpec::Preset(_) => Ok(SpectralField::zeros(self.modes)),
        }
    }

    pub fn test_function(&self) -> TestFunction {
        let temporal = match &self.audit_temporal {
            TemporalSpec::Named(n) if n == "one" => Temporal::constant(1.0),
            TemporalSpec::Named(_) => Temporal::Trig {
                cos: 1.0,
                sin: 0.0,
                omega: 1.0,
            },
            TemporalSpec::Polynomial(c) => Temporal::Polynomial {
                coefficients: c.clone(),
            },
        };
        TestFunction::new(self.coefficients(&self.audit_profile), temporal)
    }

    /// Canonical TOML text that parses back to this config.
    pub fn to_toml(&self) -> String {
        use toml::{Table, Value};
        fn arr(xs: &[f64]) -> Value {
            Value::Array(xs.iter().map(|&x| Value::Float(x)).collect())
        }
        fn field(f: &FieldSpec) -> Value {
            match f {
                FieldSpec::Coefficients(c) => arr(c),
                FieldSpec::Preset(p) => Value::String(p.clone()),
            }
        }
        let mut root = Table::new();
        root.insert("kind".into(), Value::String(self.kind.name().into()));
        let mut basis = Table::new();
        basis.insert("length".into(), Value::Float(self.length));
        basis.insert("modes".into(), Value::Integer(self.modes as i64));
        let mut noise = Table::new();
        match &self.noise {
            NoiseSpec::PowerLaw(p) => noise.insert("exponent".into(), Value::Float(*p)),
            NoiseSpec::Explicit(b) => noise.insert("coefficients".into(), arr(b)),
        };
        let mut model = Table::new();
        match self.nonlinearity {
            Nonlinearity::CubicDefault => model.insert("nonlinearity".into(), Value::String("cubic_default".into())),
            Nonlinearity::Zero => model.insert("nonlinearity".into(), Value::String("zero".into())),
            Nonlinearity::CustomPolynomial { coefficients } => model.insert("polynomial".into(), arr(&coefficients)),
        };
        model.insert("alpha".into(), Value::Float(self.alpha));
        model.insert("nu".into(), arr(&self.nu));
        let mut initial = Table::new();
        initial.insert("u0".into(), field(&self.u0));
        initial.insert("u1".into(), field(&self.u1));
        let mut time = Table::new();
        time.insert("horizon".into(), Value::Float(self.horizon));
        time.insert("steps".into(), Value::Integer(self.steps as i64));
        let dt = self.horizon / self.steps as f64;
        let times: Vec<f64> = self
            .output_steps
            .iter()
            .map(|&j| if j == self.steps { self.horizon } else { j as f64 * dt })
            .collect();
        time.insert("output_times".into(), arr(&times));
        let mut ens = Table::new();
        ens.insert("replicas".into(), Value::Integer(self.replicas as i64));
        ens.insert("seed".into(), Value::Integer(self.seed as i64));
        ens.insert("threads".into(), Value::Integer(self.threads as i64));
        let mut audit = Table::new();
        audit.insert("profile".into(), arr(&self.audit_profile));
        audit.insert(
            "temporal".into(),
            match &self.audit_temporal {
                TemporalSpec::Named(n) => Value::String(n.clone()),
                TemporalSpec::Polynomial(c) => arr(c),
            },
        );
        for (name, t) in [
            ("basis", basis),
            ("noise", noise),
            ("model", model),
            ("initial", initial),
            ("time", time),
            ("ensemble", ens),
            ("audit", audit),
        ] {
            root.insert(name.into(), Value::Table(t));
        }
        toml::to_string(&root).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("kind = \"full_vs_heat\"\n").unwrap();
        assert_eq!(c.length, 1.0);
        assert_eq!(c.modes, 32);
        assert_eq!(c.noise, NoiseSpec::PowerLaw(4.0));
        assert_eq!(c.nonlinearity, Nonlinearity::CubicDefault);
        assert_eq!(c.horizon, 1.0);
        assert_eq!(c.steps, 2048);
        assert_eq!(c.output_steps.len(), 65);
        let q = c.covariance().unwrap();
        assert!((q.values()[1] - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_one_rejected_with_reason() {
        let err = parse_config("[model]\nalpha = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("deferred"), "{err}");
    }

    #[test]
    fn all_violations_reported_with_key_paths() {
        let text = "kind = \"nope\"\nbogus = 1\n[model]\nnu = [-0.1, 0.5]\nwhat = 2\n[basis]\nmodes = 2\n[initial]\nu0 = [1.0, 2.0, 3.0]\n";
        match parse_config(text) {
            Err(Error::Config(v)) => {
                let joined = v.join("\n");
                for needle in ["kind", "bogus", "model.what", "model.nu", "initial.u0"] {
                    assert!(joined.contains(needle), "missing {needle} in {joined}");
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_nu_rejected() {
        assert!(parse_config("[model]\nnu = [-1e-3]\n").is_err());
    }

    #[test]
    fn off_grid_output_time_rejected() {
        let err = parse_config("[time]\nsteps = 10\noutput_times = [0.15]\n").unwrap_err();
        assert!(err.to_string().contains("output_times"));
        let ok = parse_config("[time]\nsteps = 10\noutput_times = [0.2, 1.0]\n").unwrap();
        assert_eq!(ok.output_steps, vec![2, 10]);
    }

    #[test]
    fn echo_round_trips() {
        let text = "kind = \"split_audit\"\n[model]\npolynomial = [0.0, 2.0, 0.0, -1.0]\nalpha = 0.5\nnu = [0.1, 0.01, 0.001]\n[noise]\ncoefficients = [1.0, 0.5]\n[initial]\nu1 = [0.0, 1.0]\n[time]\nsteps = 128\nsamples = 8\n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn well_prepared_velocity() {
        let c = parse_config("[basis]\nmodes = 4\n[initial]\nu0 = [0.5]\n").unwrap();
        let p = c.params(0.1).unwrap();
        let u1 = c.initial_velocity(&p).unwrap();
        // <f(0.5 e1), e1> = 0.5 - 1.5 * 0.5^3
        let expected = -std::f64::consts::PI.powi(2) * 0.5 + 0.5 - 0.1875;
        assert!((u1.coeffs[0] - expected).abs() < 1e-10, "{}", u1.coeffs[0]);
    }
}
