//! Seeded batches of independent SGD runs and their aggregate statistics.
//!
//! Run `i` of a batch with root seed `s` draws everything (start point first,
//! then the noise) from a ChaCha8 stream seeded with
//! [`derive_seed`]`(s, i)`. Results are collected in index order, so a batch
//! is bit-identical for any number of workers.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::landscape::{KCriticalSpec, Landscape, Preset};
use crate::noise::{NoiseModel, NoiseSpec, Regime, SlowlyVarying};
use crate::sgd::{run_with_rng, Exit, RunStatus, SgdRun, Side, StopRule, TrajectorySummary};
use crate::stats::{derive_seed, wilson, Z95};
use crate::timescales::{default_o_eps, StickingSpec, TimeScaleSpec, DEFAULT_H2_L};

/// How many steps each run gets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepBudget {
    Literal {
        steps: u64,
    },
    /// `round(multiple * ⌊n_ε⌋)`
    NEps {
        time_scale: TimeScaleSpec,
        #[serde(default = "one")]
        multiple: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl StepBudget {
    pub fn resolve(&self, epsilon: f64) -> Result<u64> {
        match *self {
            StepBudget::Literal { steps } if steps >= 1 => Ok(steps),
            StepBudget::Literal { .. } => config("steps must be at least 1"),
            StepBudget::NEps { time_scale, multiple } => {
                if !(multiple > 0.0 && multiple.is_finite()) {
                    return config("n_eps multiple must be positive");
                }
                let n = time_scale.n_eps(epsilon)?;
                let steps = (multiple * n as f64).round();
                if steps < 1.0 {
                    return config("step budget resolves to zero steps");
                }
                Ok(steps as u64)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartRule {
    Point { x: f64 },
    Uniform { low: f64, high: f64 },
}

impl StartRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StartRule::Point { x } if !x.is_finite() => config("start point must be finite"),
            StartRule::Uniform { low, high } if !(low < high) => {
                config("uniform start requires low < high")
            }
            _ => Ok(()),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            StartRule::Point { x } => x,
            StartRule::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub landscape: Landscape,
    pub noise: NoiseModel,
    pub epsilon: f64,
    pub steps: StepBudget,
    pub start: StartRule,
    pub stop: StopRule,
    pub n_runs: u64,
    pub seed: u64,
    pub track_crossings: bool,
    /// Hysteresis band for counting inter-well transitions.
    pub transitions: Option<(f64, f64)>,
}

impl Scenario {
    pub fn new(
        landscape: Landscape,
        noise: NoiseModel,
        epsilon: f64,
        steps: StepBudget,
        start: StartRule,
        n_runs: u64,
        seed: u64,
    ) -> Self {
        Self {
            landscape,
            noise,
            epsilon,
            steps,
            start,
            stop: StopRule::FixedSteps,
            n_runs,
            seed,
            track_crossings: false,
            transitions: None,
        }
    }

    pub fn validate(&self) -> Result<u64> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return config("epsilon must be positive");
        }
        if self.n_runs == 0 {
            return config("runs must be at least 1");
        }
        self.start.validate()?;
        self.stop.validate()?;
        self.steps.resolve(self.epsilon)
    }

    /// The configuration of run `index`, with its start point drawn from `rng`.
    fn run_config<R: Rng + ?Sized>(&self, index: u64, steps: u64, rng: &mut R) -> SgdRun {
        let x0 = self.start.draw(rng);
        SgdRun {
            epsilon: self.epsilon,
            x0,
            max_steps: steps,
            seed: derive_seed(self.seed, index),
            record_stride: 0,
            track_crossings: self.track_crossings,
            transitions: self.transitions,
        }
    }

    pub fn echo(&self, steps: u64) -> ScenarioEcho {
        ScenarioEcho {
            landscape: self.landscape.preset(),
            noise: self.noise.spec(),
            epsilon: self.epsilon,
            steps,
            start: self.start,
            stop: self.stop,
            n_runs: self.n_runs,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub landscape: Preset,
    pub noise: NoiseSpec,
    pub epsilon: f64,
    pub steps: u64,
    pub start: StartRule,
    pub stop: StopRule,
    pub n_runs: u64,
    pub seed: u64,
}

/// What a batch keeps of each run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunDigest {
    pub index: u64,
    pub seed: u64,
    pub x0: f64,
    pub final_x: f64,
    pub steps: u64,
    pub status: RunStatus,
    pub exit: Option<Exit>,
    /// Zero-level crossings after the initial entry.
    pub crossings: u64,
    pub transitions: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub completed: u64,
    pub exited_left: u64,
    pub exited_right: u64,
    pub capped: u64,
    pub aborted: u64,
}

impl Counters {
    pub fn total(&self) -> u64 {
        self.completed + self.exited_left + self.exited_right + self.capped + self.aborted
    }

    fn add(&mut self, d: &RunDigest) {
        match (d.status, d.exit) {
            (RunStatus::Exited, Some(Exit { side: Side::Left, .. })) => self.exited_left += 1,
            (RunStatus::Exited, _) => self.exited_right += 1,
            (RunStatus::Completed, _) => self.completed += 1,
            (RunStatus::Capped, _) => self.capped += 1,
            (RunStatus::Aborted, _) => self.aborted += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub config: ScenarioEcho,
    pub runs: Vec<RunDigest>,
    pub counters: Counters,
    pub wall_clock_secs: f64,
    pub version: String,
}

/// Runs every replicate of `s` with the current worker pool.
pub fn run_batch(s: &Scenario) -> Result<BatchResult> {
    let steps = s.validate()?;
    let started = Instant::now();
    let digests = crate::par::map_indices(s.n_runs, |i| {
        let seed = derive_seed(s.seed, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = s.run_config(i, steps, &mut rng);
        let summary = run_with_rng(&cfg, &s.landscape, &s.noise, s.stop, &mut rng)
            .expect("scenario validated");
        RunDigest {
            index: i,
            seed,
            x0: cfg.x0,
            final_x: summary.final_x,
            steps: summary.steps_taken,
            status: summary.status,
            exit: summary.exit,
            crossings: summary.crossings.len().saturating_sub(1) as u64,
            transitions: summary.transitions,
        }
    });
    let mut counters = Counters::default();
    for d in &digests {
        counters.add(d);
    }
    Ok(BatchResult {
        config: s.echo(steps),
        runs: digests,
        counters,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        version: crate::VERSION.to_string(),
    })
}

/// Replays run `index` of `s` with its path recorded every `stride` steps.
pub fn trace_run(s: &Scenario, index: u64, stride: u64) -> Result<TrajectorySummary> {
    let steps = s.validate()?;
    if stride == 0 {
        return config("stride must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(s.seed, index));
    let mut cfg = s.run_config(index, steps, &mut rng);
    cfg.record_stride = stride;
    run_with_rng(&cfg, &s.landscape, &s.noise, s.stop, &mut rng)
}

/// Share of runs satisfying a predicate with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (c, h) = wilson(successes, trials, Z95);
        Self {
            successes,
            trials,
            fraction: successes as f64 / trials as f64,
            ci_low: (c - h).max(0.0),
            ci_high: (c + h).min(1.0),
        }
    }

    /// Half the Wilson interval width.
    pub fn halfwidth(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Fraction of final iterates inside the open band.
pub fn fraction_in_band(b: &BatchResult, band: (f64, f64)) -> Result<Proportion> {
    if !(band.0 < band.1) {
        return domain("band needs low < high");
    }
    if b.runs.is_empty() {
        return domain("empty batch");
    }
    let hits = b.runs.iter().filter(|d| d.final_x > band.0 && d.final_x < band.1).count();
    Ok(Proportion::new(hits as u64, b.runs.len() as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitFrequencies {
    pub left: f64,
    pub right: f64,
    /// Wilson 95% half-width of `left` (and `right`).
    pub ci_halfwidth: f64,
    pub exited: u64,
    pub not_exited: u64,
}

/// Exit-side frequencies among runs that left the monitored interval.
pub fn exit_side_frequencies(b: &BatchResult) -> Result<ExitFrequencies> {
    let left = b.counters.exited_left;
    let exited = left + b.counters.exited_right;
    if exited == 0 {
        return domain("no run exited the monitored interval");
    }
    let p = Proportion::new(left, exited);
    Ok(ExitFrequencies {
        left: p.fraction,
        right: b.counters.exited_right as f64 / exited as f64,
        ci_halfwidth: p.halfwidth(),
        exited,
        not_exited: b.runs.len() as u64 - exited,
    })
}

/// Containment experiment around a K-critical point at zero.
#[derive(Debug, Clone)]
pub struct StickingExperiment {
    pub k: u32,
    pub regime: Regime,
    pub noise: NoiseModel,
    pub epsilon_grid: Vec<f64>,
    /// Horizon multiplier `t`.
    pub t: f64,
    pub n_runs: u64,
    pub seed: u64,
    /// Coefficient `a` in `f = a x^{K+1}`; negative makes zero a maximum.
    pub lead_coeff: f64,
    pub slowly_varying: SlowlyVarying,
    /// Overrides `o_ε = 1/ln(1/ε)`.
    pub o_eps: Option<f64>,
}

impl StickingExperiment {
    /// Defaults: maximum with `a = -1`, `t = 1`, `L ≡ 1` under h1 and
    /// `L = 1/ln(e + u)` under h2.
    pub fn new(k: u32, noise: NoiseModel, epsilon_grid: Vec<f64>, n_runs: u64, seed: u64) -> Self {
        let regime = noise.regime();
        let slowly_varying = match regime {
            Regime::H1 => SlowlyVarying::ONE,
            Regime::H2 => DEFAULT_H2_L,
        };
        Self {
            k,
            regime,
            noise,
            epsilon_grid,
            t: 1.0,
            n_runs,
            seed,
            lead_coeff: -1.0,
            slowly_varying,
            o_eps: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickingRow {
    pub epsilon: f64,
    pub delta: f64,
    pub horizon: u64,
    pub steps: u64,
    pub contained: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickingReport {
    pub k: u32,
    pub regime: Regime,
    pub rows: Vec<StickingRow>,
}

impl StickingReport {
    /// Containment fractions are nondecreasing as ε shrinks, allowing each
    /// step to dip by at most `slack` times the previous row's half-width.
    pub fn nondecreasing(&self, slack: f64) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].contained.fraction + slack * w[0].contained.halfwidth() >= w[0].contained.fraction
        })
    }
}

/// For each ε: start uniformly within `δ(ε)/3` of the critical point and
/// record whether `sup_{n <= t h(ε)} |x_n| <= δ(ε)`.
pub fn sticking_experiment(e: &StickingExperiment) -> Result<StickingReport> {
    if !(e.t > 0.0) {
        return config("t must be positive");
    }
    let alpha = e.noise.alpha().unwrap_or(1.5);
    let spec = StickingSpec { regime: e.regime, k: e.k, alpha, slowly_varying: e.slowly_varying };
    let mut rows = Vec::with_capacity(e.epsilon_grid.len());
    for (j, &eps) in e.epsilon_grid.iter().enumerate() {
        let o = e.o_eps.unwrap_or_else(|| default_o_eps(eps));
        let delta = spec.radius(eps, o)?;
        let horizon = spec.horizon(eps, o)?;
        let steps = ((e.t * horizon as f64).ceil() as u64).max(1);
        let land = Landscape::k_critical(KCriticalSpec {
            k: e.k,
            c: 0.0,
            lead_coeff: e.lead_coeff,
            delta: (2.0 * delta).max(1.0),
        })?;
        let mut scenario = Scenario::new(
            land,
            e.noise.clone(),
            eps,
            StepBudget::Literal { steps },
            StartRule::Uniform { low: -delta / 3.0, high: delta / 3.0 },
            e.n_runs,
            derive_seed(e.seed, j as u64),
        );
        scenario.stop = StopRule::Either { low: -delta, high: delta };
        let batch = run_batch(&scenario)?;
        let contained = batch.runs.iter().filter(|d| d.status == RunStatus::Completed).count();
        rows.push(StickingRow {
            epsilon: eps,
            delta,
            horizon,
            steps,
            contained: Proportion::new(contained as u64, e.n_runs),
        });
    }
    Ok(StickingReport { k: e.k, regime: e.regime, rows })
}
