//! Scenario files: one TOML document with an optional section per subcommand.
//!
//! Unknown keys anywhere are rejected. Type errors name the offending field by
//! its dotted path; semantic checks run afterwards and report every problem
//! found, not just the first.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sgdlab::experiments::{ExitSetup, WellNoise, TABLE3_BETAS};
use sgdlab::landscape::{Landscape, Preset, HIMMELBLAU_MAXIMUM};
use sgdlab::montecarlo::{Scenario, StartRule, StepBudget};
use sgdlab::noise::{NoiseSpec, Regime, SlowlyVarying};
use sgdlab::sgd::StopRule;
use sgdlab::timescales::TimeScaleSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

fn field(path: &str, message: impl fmt::Display) -> FieldError {
    FieldError { path: path.to_string(), message: message.to_string() }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Root seed shared by every section; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table1: Option<BandConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table2: Option<BandConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table3: Option<ExitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escape: Option<EscapeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sticking: Option<StickingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timescale: Option<TimescaleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub himmelblau: Option<HimmelblauConfig>,
}

/// A single batch, used by `run` and `trajectory`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub epsilon: f64,
    pub runs: u64,
    pub landscape: Preset,
    pub noise: NoiseSpec,
    pub steps: StepBudget,
    pub start: StartRule,
    #[serde(default = "fixed_steps")]
    pub stop: StopRule,
    /// Reports the fraction of final iterates in `(low, high)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
    /// Hysteresis band for counting inter-well transitions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<[f64; 2]>,
    #[serde(default)]
    pub track_crossings: bool,
    /// Path stride for `trajectory`.
    #[serde(default = "one_u64")]
    pub record_stride: u64,
}

fn fixed_steps() -> StopRule {
    StopRule::FixedSteps
}

fn one_u64() -> u64 {
    1
}

/// Double-well band experiment (`table1` and `table2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub stable_epsilons: Vec<f64>,
    pub gaussian_epsilons: Vec<f64>,
    /// Steps per run as a multiple of `n_ε`.
    pub multiple: f64,
    pub runs: u64,
}

impl BandConfig {
    pub fn table1() -> Self {
        Self {
            stable_epsilons: vec![0.1, 0.01, 0.001, 1e-4],
            gaussian_epsilons: vec![0.1, 0.01, 0.001],
            multiple: 1.0,
            runs: 1000,
        }
    }

    pub fn table2() -> Self {
        Self { stable_epsilons: vec![0.001], gaussian_epsilons: vec![], multiple: 10.0, runs: 1000 }
    }

    pub fn cells(&self) -> Vec<(WellNoise, f64)> {
        let stable = self.stable_epsilons.iter().map(|&e| (WellNoise::Stable, e));
        let gaussian = self.gaussian_epsilons.iter().map(|&e| (WellNoise::Gaussian, e));
        stable.chain(gaussian).collect()
    }
}

/// Sharp-maximum exit sweep simulated with SGD on the V-shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExitConfig {
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub c_l: f64,
    pub c_r: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub runs: u64,
    /// Safety cap on SGD steps per run.
    pub max_steps: u64,
    /// `false` fills only the analytic columns.
    pub simulate: bool,
}

impl Default for ExitConfig {
    fn default() -> Self {
        let s = ExitSetup::default();
        Self {
            alpha: s.alpha,
            betas: TABLE3_BETAS.to_vec(),
            c_l: s.c_l,
            c_r: s.c_r,
            epsilon: s.epsilon,
            delta: s.delta,
            runs: 100_000,
            max_steps: s.max_steps,
            simulate: true,
        }
    }
}

impl ExitConfig {
    pub fn setup(&self) -> ExitSetup {
        ExitSetup {
            alpha: self.alpha,
            c_l: self.c_l,
            c_r: self.c_r,
            epsilon: self.epsilon,
            delta: self.delta,
            max_steps: self.max_steps,
        }
    }
}

/// The same sweep with the runaway random walk's limit direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EscapeConfig {
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub c_l: f64,
    pub c_r: f64,
    pub runs: u64,
    /// Step budget per walk.
    pub max_steps: u64,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            betas: TABLE3_BETAS.to_vec(),
            c_l: 5.0,
            c_r: 1.0,
            runs: 100_000,
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StickingConfig {
    pub ks: Vec<u32>,
    pub regimes: Vec<Regime>,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Horizon multiplier.
    pub t: f64,
    pub runs: u64,
    /// Tail index of the log-corrected Pareto noise used under h1.
    pub alpha: f64,
}

impl Default for StickingConfig {
    fn default() -> Self {
        Self {
            ks: vec![1, 3],
            regimes: vec![Regime::H1, Regime::H2],
            epsilons: vec![1e-2, 1e-3, 1e-4],
            t: 1.0,
            runs: 200,
            alpha: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimescaleConfig {
    pub time_scale: TimeScaleSpec,
    pub noise: NoiseSpec,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
}

impl Default for TimescaleConfig {
    fn default() -> Self {
        Self {
            time_scale: TimeScaleSpec::h1(1.5, SlowlyVarying::LogPower { c: 1.0, p: -0.5 }),
            noise: NoiseSpec::ParetoSymmetric { alpha: 1.5, u0: 1.0 },
            epsilons: vec![0.1, 0.01, 0.001, 1e-4, 1e-5, 1e-6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HimmelblauConfig {
    pub epsilons: Vec<f64>,
    pub start: [f64; 2],
    pub steps: u64,
    pub stride: u64,
    /// Tail index of the Pareto noise radius (scale 1).
    pub alpha: f64,
}

impl Default for HimmelblauConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-3, 1e-4, 1e-5, 1e-6],
            start: [HIMMELBLAU_MAXIMUM.0, HIMMELBLAU_MAXIMUM.1],
            steps: 100_000,
            stride: 100,
            alpha: 1.2,
        }
    }
}

/// Parses a scenario document without semantic checks.
pub fn parse_str(text: &str) -> Result<Config, Vec<FieldError>> {
    let de = toml::Deserializer::parse(text).map_err(|e| vec![field("", e.message())])?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        vec![FieldError { path, message: e.into_inner().message().trim().to_string() }]
    })
}

/// Reads, parses and validates a scenario file.
pub fn load(path: &Path) -> Result<Config, Vec<FieldError>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![field("", format!("cannot read {}: {e}", path.display()))])?;
    let cfg = parse_str(&text)?;
    let errors = cfg.validate();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Serializes back to TOML.
pub fn emit(cfg: &Config) -> String {
    toml::to_string(cfg).expect("config is representable as TOML")
}

fn check(errors: &mut Vec<FieldError>, path: &str, r: sgdlab::Result<impl Sized>) {
    if let Err(e) = r {
        errors.push(field(path, e.message()));
    }
}

fn positive(errors: &mut Vec<FieldError>, path: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errors.push(field(path, format!("must be positive, got {v}")));
    }
}

fn step_size(errors: &mut Vec<FieldError>, path: &str, eps: &[f64]) {
    if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        errors.push(field(path, "every epsilon must lie in (0,1)"));
    }
}

fn decreasing(errors: &mut Vec<FieldError>, path: &str, eps: &[f64]) {
    step_size(errors, path, eps);
    if eps.is_empty() {
        errors.push(field(path, "needs at least one value"));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        errors.push(field(path, "must be strictly decreasing"));
    }
}

fn band(errors: &mut Vec<FieldError>, path: &str, b: Option<[f64; 2]>) {
    if let Some([lo, hi]) = b {
        if !(lo < hi) {
            errors.push(field(path, "needs low < high"));
        }
    }
}

fn nonzero(errors: &mut Vec<FieldError>, path: &str, n: u64) {
    if n == 0 {
        errors.push(field(path, "must be at least 1"));
    }
}

impl Config {
    /// Every semantic problem in the document.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut e = Vec::new();
        if let Some(s) = &self.scenario {
            s.validate_into(&mut e);
        }
        for (name, b) in [("table1", &self.table1), ("table2", &self.table2)] {
            if let Some(b) = b {
                step_size(&mut e, &format!("{name}.stable_epsilons"), &b.stable_epsilons);
                step_size(&mut e, &format!("{name}.gaussian_epsilons"), &b.gaussian_epsilons);
                positive(&mut e, &format!("{name}.multiple"), b.multiple);
                nonzero(&mut e, &format!("{name}.runs"), b.runs);
            }
        }
        if let Some(t) = &self.table3 {
            for (p, v) in [("alpha", t.alpha), ("c_l", t.c_l), ("c_r", t.c_r), ("delta", t.delta)] {
                positive(&mut e, &format!("table3.{p}"), v);
            }
            step_size(&mut e, "table3.epsilon", &[t.epsilon]);
            for (i, &b) in t.betas.iter().enumerate() {
                positive(&mut e, &format!("table3.betas[{i}]"), b);
            }
            nonzero(&mut e, "table3.runs", t.runs);
            nonzero(&mut e, "table3.max_steps", t.max_steps);
        }
        if let Some(t) = &self.escape {
            for (p, v) in [("alpha", t.alpha), ("c_l", t.c_l), ("c_r", t.c_r)] {
                positive(&mut e, &format!("escape.{p}"), v);
            }
            for (i, &b) in t.betas.iter().enumerate() {
                positive(&mut e, &format!("escape.betas[{i}]"), b);
            }
            nonzero(&mut e, "escape.runs", t.runs);
            nonzero(&mut e, "escape.max_steps", t.max_steps);
        }
        if let Some(s) = &self.sticking {
            if s.ks.iter().any(|&k| k < 1) {
                e.push(field("sticking.ks", "K must be at least 1"));
            }
            decreasing(&mut e, "sticking.epsilons", &s.epsilons);
            positive(&mut e, "sticking.t", s.t);
            nonzero(&mut e, "sticking.runs", s.runs);
            if !(s.alpha > 1.0 && s.alpha < 2.0) {
                e.push(field("sticking.alpha", format!("alpha must lie in (1,2), got {}", s.alpha)));
            }
        }
        if let Some(t) = &self.timescale {
            check(&mut e, "timescale.time_scale", t.time_scale.validate());
            check(&mut e, "timescale.noise", t.noise.build());
            decreasing(&mut e, "timescale.epsilons", &t.epsilons);
        }
        if let Some(h) = &self.himmelblau {
            for (i, &eps) in h.epsilons.iter().enumerate() {
                positive(&mut e, &format!("himmelblau.epsilons[{i}]"), eps);
            }
            nonzero(&mut e, "himmelblau.steps", h.steps);
            nonzero(&mut e, "himmelblau.stride", h.stride);
            positive(&mut e, "himmelblau.alpha", h.alpha);
        }
        e
    }
}

impl ScenarioConfig {
    fn validate_into(&self, e: &mut Vec<FieldError>) {
        positive(e, "scenario.epsilon", self.epsilon);
        nonzero(e, "scenario.runs", self.runs);
        nonzero(e, "scenario.record_stride", self.record_stride);
        check(e, "scenario.landscape", Landscape::from_preset(self.landscape));
        check(e, "scenario.noise", self.noise.build());
        check(e, "scenario.start", self.start.validate());
        check(e, "scenario.stop", self.stop.validate());
        if self.epsilon > 0.0 {
            check(e, "scenario.steps", self.steps.resolve(self.epsilon));
        }
        band(e, "scenario.band", self.band);
        band(e, "scenario.transitions", self.transitions);
    }

    /// Builds the batch; call only after validation.
    pub fn scenario(&self, seed: u64) -> sgdlab::Result<Scenario> {
        let mut s = Scenario::new(
            Landscape::from_preset(self.landscape)?,
            self.noise.build()?,
            self.epsilon,
            self.steps,
            self.start,
            self.runs,
            seed,
        );
        s.stop = self.stop;
        s.track_crossings = self.track_crossings;
        s.transitions = self.transitions.map(|[a, b]| (a, b));
        Ok(s)
    }
}
