//! The published numerical experiments as library calls, with the published
//! reference values they are compared against.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::landscape::{Landscape, VShapeSpec, HIMMELBLAU_MINIMA};
use crate::montecarlo::{
    exit_side_frequencies, fraction_in_band, run_batch, Proportion, Scenario, StartRule,
    StepBudget,
};
use crate::noise::{NoiseModel, Regime};
use crate::rrw::{exit_probability_bounds, exponential_roots, limit_direction_frequencies, RrwSpec};
use crate::sgd::{run_himmelblau, IsotropicPareto, PlaneSummary, StopRule};
use crate::stats::derive_seed;
use crate::timescales::{PowerLaw, TimeScaleSpec};

/// Band around the right minimum of the double well.
pub const BAND: (f64, f64) = (0.75, 1.25);

/// `(ε, fraction)` rows of the published convergence table.
pub const PUBLISHED_TABLE1_STABLE: [(f64, f64); 5] =
    [(0.1, 0.36), (0.01, 0.701), (0.001, 0.775), (1e-4, 0.789), (1e-5, 0.835)];
pub const PUBLISHED_TABLE1_GAUSSIAN: [(f64, f64); 3] = [(0.1, 0.939), (0.01, 1.00), (0.001, 1.00)];
/// Fraction for α-stable noise at `ε = 10^-3` after ten times `n_ε` steps.
pub const PUBLISHED_TABLE2_STABLE: f64 = 0.508;

/// One row of the sharp-maximum exit table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedTable3Row {
    pub beta: f64,
    pub mu_r: f64,
    pub sim_left: f64,
    pub est_left: f64,
    pub sim_right: f64,
    pub est_right: f64,
}

const fn row(beta: f64, mu_r: f64, sl: f64, el: f64, sr: f64, er: f64) -> PublishedTable3Row {
    PublishedTable3Row { beta, mu_r, sim_left: sl, est_left: el, sim_right: sr, est_right: er }
}

pub const PUBLISHED_TABLE3: [PublishedTable3Row; 9] = [
    row(0.10, 0.0519, 0.4798, 0.4823, 0.5202, 0.5222),
    row(0.25, 0.1373, 0.4506, 0.4518, 0.5494, 0.5519),
    row(0.50, 0.3015, 0.3957, 0.3977, 0.6043, 0.6048),
    row(0.75, 0.4943, 0.3427, 0.3414, 0.6573, 0.6604),
    row(1.00, 0.7146, 0.2823, 0.2857, 0.7177, 0.7155),
    row(1.50, 1.2191, 0.1851, 0.1874, 0.8149, 0.8132),
    row(2.00, 1.7676, 0.1153, 0.1163, 0.8847, 0.8840),
    row(3.00, 2.8722, 0.0428, 0.0426, 0.9572, 0.9575),
    row(5.00, 4.9711, 0.0060, 0.0058, 0.9940, 0.9942),
];

/// Noise used by the double-well experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellNoise {
    /// Symmetric α-stable with α = 1.5
    Stable,
    /// Standard normal
    Gaussian,
}

impl WellNoise {
    pub fn model(self) -> NoiseModel {
        match self {
            WellNoise::Stable => NoiseModel::alpha_stable(1.5).expect("valid alpha"),
            WellNoise::Gaussian => NoiseModel::gaussian(1.0).expect("valid sigma"),
        }
    }

    /// The step-count law fitted to the published table.
    pub fn time_scale(self) -> TimeScaleSpec {
        let (regime, law) = match self {
            WellNoise::Stable => (Regime::H1, PowerLaw::STABLE_TABLE),
            WellNoise::Gaussian => (Regime::H2, PowerLaw::GAUSSIAN_TABLE),
        };
        TimeScaleSpec::power_law(regime, law.gamma, law.scale)
    }

    pub fn name(self) -> &'static str {
        match self {
            WellNoise::Stable => "alpha_stable",
            WellNoise::Gaussian => "gaussian",
        }
    }
}

/// Double well, uniform start in `(0, 1.9)`, `multiple · n_ε` steps.
pub fn double_well_scenario(
    noise: WellNoise,
    epsilon: f64,
    multiple: f64,
    n_runs: u64,
    seed: u64,
) -> Scenario {
    Scenario::new(
        Landscape::double_well(),
        noise.model(),
        epsilon,
        StepBudget::NEps { time_scale: noise.time_scale(), multiple },
        StartRule::Uniform { low: 0.0, high: 1.9 },
        n_runs,
        seed,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub noise: WellNoise,
    pub epsilon: f64,
    pub steps: u64,
    pub fraction: Proportion,
}

/// Fraction of final iterates in [`BAND`] for each ε. `multiple = 1` is the
/// convergence table, `multiple = 10` the over-running check.
pub fn band_rows(
    noise: WellNoise,
    epsilons: &[f64],
    multiple: f64,
    n_runs: u64,
    seed: u64,
) -> Result<Vec<BandRow>> {
    epsilons
        .iter()
        .enumerate()
        .map(|(j, &eps)| {
            let s = double_well_scenario(noise, eps, multiple, n_runs, derive_seed(seed, j as u64));
            let b = run_batch(&s)?;
            Ok(BandRow {
                noise,
                epsilon: eps,
                steps: b.config.steps,
                fraction: fraction_in_band(&b, BAND)?,
            })
        })
        .collect()
}

/// Parameters of the sharp-maximum exit experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitSetup {
    /// Right-jump rate of the double-exponential noise.
    pub alpha: f64,
    pub c_l: f64,
    pub c_r: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Safety cap on steps per run.
    pub max_steps: u64,
}

impl Default for ExitSetup {
    fn default() -> Self {
        Self { alpha: 1.0, c_l: 5.0, c_r: 1.0, epsilon: 0.01, delta: 1.0, max_steps: 1_000_000 }
    }
}

pub const TABLE3_BETAS: [f64; 9] = [0.10, 0.25, 0.50, 0.75, 1.00, 1.50, 2.00, 3.00, 5.00];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitRow {
    pub beta: f64,
    pub mu_up: f64,
    pub mu_down: f64,
    pub residual: f64,
    pub sim_left: f64,
    pub est_left: f64,
    pub sim_right: f64,
    pub est_right: f64,
    /// Wilson 95% half-width of the simulated frequencies.
    pub ci_halfwidth: f64,
    pub not_exited: u64,
}

struct Analytic {
    mu_up: f64,
    mu_down: f64,
    residual: f64,
    est_right: f64,
    est_left: f64,
}

fn analytic(setup: &ExitSetup, beta: f64) -> Result<Analytic> {
    let roots = exponential_roots(setup.alpha, beta, setup.c_l, setup.c_r)?;
    let (est_right, est_left) = exit_probability_bounds(roots.p_down, roots.p_up)?;
    Ok(Analytic {
        mu_up: roots.mu_up,
        mu_down: roots.mu_down,
        residual: roots.residual_down.abs().max(roots.residual_up.abs()),
        est_right,
        est_left,
    })
}

/// Analytic columns only; `sim_*` are NaN.
pub fn exit_row_analytic(setup: &ExitSetup, beta: f64) -> Result<ExitRow> {
    let a = analytic(setup, beta)?;
    Ok(ExitRow {
        beta,
        mu_up: a.mu_up,
        mu_down: a.mu_down,
        residual: a.residual,
        sim_left: f64::NAN,
        est_left: a.est_left,
        sim_right: f64::NAN,
        est_right: a.est_right,
        ci_halfwidth: f64::NAN,
        not_exited: 0,
    })
}

/// SGD started at the sharp maximum of the V-shape until it leaves
/// `[-δ, δ]`, against the analytic bounds.
pub fn exit_row_sgd(setup: &ExitSetup, beta: f64, n_runs: u64, seed: u64) -> Result<ExitRow> {
    let a = analytic(setup, beta)?;
    let land = Landscape::vshape(
        VShapeSpec { c_l: setup.c_l, c_r: setup.c_r, delta: setup.delta },
        setup.c_l.max(setup.c_r),
    )?;
    let mut s = Scenario::new(
        land,
        NoiseModel::double_exponential(setup.alpha, beta)?,
        setup.epsilon,
        StepBudget::Literal { steps: setup.max_steps },
        StartRule::Point { x: 0.0 },
        n_runs,
        seed,
    );
    s.stop = StopRule::ExitInterval { low: -setup.delta, high: setup.delta };
    let f = exit_side_frequencies(&run_batch(&s)?)?;
    Ok(ExitRow {
        beta,
        mu_up: a.mu_up,
        mu_down: a.mu_down,
        residual: a.residual,
        sim_left: f.left,
        est_left: a.est_left,
        sim_right: f.right,
        est_right: a.est_right,
        ci_halfwidth: f.ci_halfwidth,
        not_exited: f.not_exited,
    })
}

/// The runaway random walk's limit direction in place of SGD.
pub fn exit_row_rrw(
    setup: &ExitSetup,
    beta: f64,
    n_runs: u64,
    max_steps: u64,
    seed: u64,
) -> Result<ExitRow> {
    let a = analytic(setup, beta)?;
    let spec = RrwSpec::new(NoiseModel::double_exponential(setup.alpha, beta)?, setup.c_l, setup.c_r)?;
    let f = limit_direction_frequencies(&spec, n_runs, spec.default_escape_level(), max_steps, seed)?;
    let decided = f.plus + f.minus;
    if decided == 0 {
        return config("no walk reached the escape level; raise max_steps");
    }
    let p = Proportion::new(f.minus, decided);
    Ok(ExitRow {
        beta,
        mu_up: a.mu_up,
        mu_down: a.mu_down,
        residual: a.residual,
        sim_left: p.fraction,
        est_left: a.est_left,
        sim_right: f.plus as f64 / decided as f64,
        est_right: a.est_right,
        ci_halfwidth: p.halfwidth(),
        not_exited: f.undecided,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub noise: WellNoise,
    pub epsilon: f64,
    pub steps: u64,
    pub seeds: u64,
    /// Seeds with at least one inter-well transition.
    pub with_transition: u64,
    pub mean_transitions: f64,
}

impl TransitionReport {
    pub fn fraction(&self) -> f64 {
        self.with_transition as f64 / self.seeds as f64
    }
}

/// Inter-well transitions of the double well over `multiple · n_ε` steps,
/// counted with hysteresis band `(-0.5, 0.5)`.
pub fn well_transitions(
    noise: WellNoise,
    epsilon: f64,
    multiple: f64,
    seeds: u64,
    seed: u64,
) -> Result<TransitionReport> {
    let mut s = double_well_scenario(noise, epsilon, multiple, seeds, seed);
    s.transitions = Some((-0.5, 0.5));
    let b = run_batch(&s)?;
    let with_transition = b.runs.iter().filter(|d| d.transitions > 0).count() as u64;
    let total: u64 = b.runs.iter().map(|d| d.transitions).sum();
    Ok(TransitionReport {
        noise,
        epsilon,
        steps: b.config.steps,
        seeds,
        with_transition,
        mean_transitions: total as f64 / seeds as f64,
    })
}

/// Index of the nearest Himmelblau minimum.
pub fn himmelblau_basin(p: (f64, f64)) -> usize {
    let d2 = |m: &(f64, f64)| (p.0 - m.0).powi(2) + (p.1 - m.1).powi(2);
    (0..HIMMELBLAU_MINIMA.len())
        .min_by(|&a, &b| d2(&HIMMELBLAU_MINIMA[a]).total_cmp(&d2(&HIMMELBLAU_MINIMA[b])))
        .expect("four minima")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HimmelblauStats {
    pub path: PlaneSummary,
    /// Distinct basins visited along the recorded path.
    pub basins_visited: usize,
    pub max_distance_from_start: f64,
}

/// Noisy SGD on the Himmelblau surface with Pareto-radius isotropic noise.
pub fn himmelblau_path(
    epsilon: f64,
    start: (f64, f64),
    steps: u64,
    stride: u64,
    alpha: f64,
    seed: u64,
) -> Result<HimmelblauStats> {
    let noise = IsotropicPareto::new(alpha, 1.0)?;
    let path = run_himmelblau(epsilon, start, steps, seed, stride.max(1), Some(noise))?;
    let mut seen = [false; 4];
    let mut max_distance: f64 = 0.0;
    for &(_, x, y) in &path.path {
        seen[himmelblau_basin((x, y))] = true;
        max_distance = max_distance.max(((x - start.0).powi(2) + (y - start.1).powi(2)).sqrt());
    }
    Ok(HimmelblauStats {
        basins_visited: seen.iter().filter(|&&v| v).count(),
        max_distance_from_start: max_distance,
        path,
    })
}
