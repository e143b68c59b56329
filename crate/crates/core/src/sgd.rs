//! The SGD recursion `x_k = x_{k-1} - ε f'(x_{k-1}) + ε ξ_k` with stopping
//! rules, zero-level crossing times and optional strided path recording.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::landscape::{himmelblau_gradient, Landscape};
use crate::noise::NoiseModel;

/// Iterates beyond this magnitude abort the run.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// One SGD step.
#[inline]
pub fn step(x: f64, land: &Landscape, epsilon: f64, xi: f64) -> f64 {
    x - epsilon * land.derivative(x) + epsilon * xi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StopRule {
    /// Run the whole budget.
    FixedSteps,
    /// Stop at the first `n` with `x_n ∉ [low, high]`. The step budget is a
    /// safety cap; hitting it is reported as [`RunStatus::Capped`].
    ExitInterval { low: f64, high: f64 },
    /// Stop at whichever comes first: exit from `[low, high]` or the budget.
    Either { low: f64, high: f64 },
}

impl StopRule {
    pub fn interval(&self) -> Option<(f64, f64)> {
        match *self {
            StopRule::FixedSteps => None,
            StopRule::ExitInterval { low, high } | StopRule::Either { low, high } => {
                Some((low, high))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((low, high)) = self.interval() {
            if !(low < high) {
                return config("stop interval needs low < high");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdRun {
    pub epsilon: f64,
    pub x0: f64,
    pub max_steps: u64,
    pub seed: u64,
    /// 0 keeps no path; `k` keeps every k-th iterate.
    pub record_stride: u64,
    /// Track zero-level crossings.
    pub track_crossings: bool,
    /// Count hysteresis transitions between `x < low` and `x > high`.
    pub transitions: Option<(f64, f64)>,
}

impl SgdRun {
    pub fn new(epsilon: f64, x0: f64, max_steps: u64, seed: u64) -> Self {
        Self {
            epsilon,
            x0,
            max_steps,
            seed,
            record_stride: 0,
            track_crossings: false,
            transitions: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return config("epsilon must be positive");
        }
        if self.max_steps == 0 {
            return config("max_steps must be at least 1");
        }
        if !self.x0.is_finite() {
            return config("x0 must be finite");
        }
        if let Some((lo, hi)) = self.transitions {
            if !(lo < hi) {
                return config("transition band needs low < high");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    /// Budget exhausted under `FixedSteps` or `Either`.
    Completed,
    /// Left the monitored interval.
    Exited,
    /// Hit the safety cap under `ExitInterval` without exiting.
    Capped,
    /// Iterate overflowed.
    Aborted,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Exited => "exited",
            RunStatus::Capped => "capped",
            RunStatus::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exit {
    pub step: u64,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub final_x: f64,
    pub steps_taken: u64,
    pub status: RunStatus,
    pub exit: Option<Exit>,
    /// `(step, direction)`; `(0, Up)` when `x0 >= 0`, `(0, Down)` otherwise.
    pub crossings: Vec<(u64, Direction)>,
    pub transitions: u64,
    pub path: Option<Vec<(u64, f64)>>,
}

impl TrajectorySummary {
    /// Crossing times, starting with the initial entry at step 0.
    pub fn crossing_times(&self) -> &[(u64, Direction)] {
        &self.crossings
    }
}

/// Runs SGD with noise drawn from `noise` on a stream seeded by `cfg.seed`.
pub fn run(
    cfg: &SgdRun,
    land: &Landscape,
    noise: &NoiseModel,
    stop: StopRule,
) -> Result<TrajectorySummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    run_with_rng(cfg, land, noise, stop, &mut rng)
}

/// Like [`run`] but continues an existing random stream.
pub fn run_with_rng<R: Rng + ?Sized>(
    cfg: &SgdRun,
    land: &Landscape,
    noise: &NoiseModel,
    stop: StopRule,
    rng: &mut R,
) -> Result<TrajectorySummary> {
    run_with(cfg, land, stop, || noise.sample(rng))
}

/// Runs SGD with an arbitrary noise source.
pub fn run_with<F: FnMut() -> f64>(
    cfg: &SgdRun,
    land: &Landscape,
    stop: StopRule,
    mut noise: F,
) -> Result<TrajectorySummary> {
    cfg.validate()?;
    stop.validate()?;
    let eps = cfg.epsilon;
    let interval = stop.interval();
    let mut x = cfg.x0;
    let mut crossings = Vec::new();
    let mut above = x >= 0.0;
    if cfg.track_crossings {
        crossings.push((0, if above { Direction::Up } else { Direction::Down }));
    }
    let mut band_state = cfg.transitions.and_then(|(lo, hi)| band_side(x, lo, hi));
    let mut transitions = 0;
    let mut path = (cfg.record_stride > 0).then(|| {
        let cap = (cfg.max_steps / cfg.record_stride).min(1 << 20) as usize + 2;
        let mut v = Vec::with_capacity(cap);
        v.push((0, x));
        v
    });

    let mut status = match stop {
        StopRule::ExitInterval { .. } => RunStatus::Capped,
        _ => RunStatus::Completed,
    };
    let mut exit = None;
    let mut n = 0;
    while n < cfg.max_steps {
        let xi = noise();
        x = x - eps * land.derivative(x) + eps * xi;
        n += 1;
        if !(x.abs() <= OVERFLOW_LIMIT) {
            status = RunStatus::Aborted;
            break;
        }
        if cfg.track_crossings {
            let now_above = x >= 0.0;
            if now_above != above {
                crossings.push((n, if now_above { Direction::Up } else { Direction::Down }));
                above = now_above;
            }
        }
        if let Some((lo, hi)) = cfg.transitions {
            if let Some(side) = band_side(x, lo, hi) {
                if band_state.is_some_and(|s| s != side) {
                    transitions += 1;
                }
                band_state = Some(side);
            }
        }
        if let Some(p) = path.as_mut() {
            if n % cfg.record_stride == 0 {
                p.push((n, x));
            }
        }
        if let Some((lo, hi)) = interval {
            if x < lo || x > hi {
                exit = Some(Exit { step: n, side: if x < lo { Side::Left } else { Side::Right } });
                status = RunStatus::Exited;
                break;
            }
        }
    }
    if let Some(p) = path.as_mut() {
        if p.last().is_some_and(|&(s, _)| s != n) {
            p.push((n, x));
        }
    }
    Ok(TrajectorySummary {
        final_x: x,
        steps_taken: n,
        status,
        exit,
        crossings,
        transitions,
        path,
    })
}

fn band_side(x: f64, lo: f64, hi: f64) -> Option<Side> {
    if x < lo {
        Some(Side::Left)
    } else if x > hi {
        Some(Side::Right)
    } else {
        None
    }
}

/// Isotropic planar noise: uniform direction, Pareto radius with tail index
/// `alpha` and scale `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicPareto {
    pub alpha: f64,
    pub scale: f64,
}

impl IsotropicPareto {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && scale > 0.0) {
            return config("isotropic Pareto noise needs alpha > 0 and scale > 0");
        }
        Ok(Self { alpha, scale })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u: f64 = rng.sample(rand_distr::Open01);
        let radius = self.scale * u.powf(-1.0 / self.alpha);
        let angle = std::f64::consts::TAU * rng.random::<f64>();
        (radius * angle.cos(), radius * angle.sin())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSummary {
    pub final_point: (f64, f64),
    pub steps_taken: u64,
    pub aborted: bool,
    pub path: Vec<(u64, f64, f64)>,
}

/// SGD on the Himmelblau function. `noise = None` runs plain gradient descent.
pub fn run_himmelblau(
    epsilon: f64,
    start: (f64, f64),
    max_steps: u64,
    seed: u64,
    record_stride: u64,
    noise: Option<IsotropicPareto>,
) -> Result<PlaneSummary> {
    if !(epsilon > 0.0) {
        return config("epsilon must be positive");
    }
    if max_steps == 0 {
        return config("max_steps must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y) = start;
    let mut path = vec![(0, x, y)];
    let mut aborted = false;
    let mut n = 0;
    while n < max_steps {
        let (gx, gy) = himmelblau_gradient(x, y);
        let (nx, ny) = noise.map_or((0.0, 0.0), |m| m.sample(&mut rng));
        x += epsilon * (nx - gx);
        y += epsilon * (ny - gy);
        n += 1;
        if !(x.abs() <= OVERFLOW_LIMIT && y.abs() <= OVERFLOW_LIMIT) {
            aborted = true;
            break;
        }
        if record_stride > 0 && n % record_stride == 0 {
            path.push((n, x, y));
        }
    }
    if path.last().is_some_and(|&(s, _, _)| s != n) {
        path.push((n, x, y));
    }
    Ok(PlaneSummary { final_point: (x, y), steps_taken: n, aborted, path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::VShapeSpec;

    fn vshape(c_l: f64, c_r: f64) -> Landscape {
        Landscape::vshape(VShapeSpec { c_l, c_r, delta: 1.0 }, 1.0).unwrap()
    }

    #[test]
    fn single_step_contract() {
        let l = vshape(5.0, 1.0);
        assert!((step(0.0, &l, 0.01, 0.0) - 0.01).abs() < 1e-16);
        assert!((step(-0.5, &l, 0.1, 0.0) - (-0.5 - 0.5)).abs() < 1e-15);
        let d = step(0.3, &l, 0.01, 7.0) - step(0.3, &l, 0.01, 0.0);
        assert!((d - 0.07).abs() < 1e-15);
    }

    #[test]
    fn zero_budget_is_rejected() {
        let cfg = SgdRun::new(0.01, 0.0, 0, 1);
        let err = run(&cfg, &Landscape::double_well(), &NoiseModel::zero(), StopRule::FixedSteps);
        assert!(err.is_err());
        let cfg = SgdRun::new(0.0, 0.0, 10, 1);
        assert!(run(&cfg, &Landscape::double_well(), &NoiseModel::zero(), StopRule::FixedSteps)
            .is_err());
    }

    #[test]
    fn gradient_flow_reaches_minimum() {
        let l = Landscape::double_well();
        let s = run(&SgdRun::new(0.01, 0.5, 10_000, 0), &l, &NoiseModel::zero(), StopRule::FixedSteps)
            .unwrap();
        assert!((s.final_x - 1.0).abs() < 1e-3);
        let mut cfg = SgdRun::new(0.01, 1.9, 2000, 0);
        cfg.record_stride = 1;
        let s = run(&cfg, &l, &NoiseModel::zero(), StopRule::FixedSteps).unwrap();
        let path = s.path.unwrap();
        assert!(path.iter().all(|&(_, x)| x > 0.0 && x < 2.0));
        assert!((s.final_x - 1.0).abs() < 1e-3);
    }

    #[test]
    fn monotone_run_has_single_crossing_entry() {
        let l = vshape(5.0, 1.0);
        let mut cfg = SgdRun::new(0.01, 0.0, 500, 0);
        cfg.track_crossings = true;
        let s = run(&cfg, &l, &NoiseModel::zero(), StopRule::ExitInterval { low: -1.0, high: 1.0 })
            .unwrap();
        assert_eq!(s.crossings, vec![(0, Direction::Up)]);
        assert_eq!(s.exit.map(|e| e.side), Some(Side::Right));
        assert!(s.exit.unwrap().step >= 100);
    }

    #[test]
    fn landing_on_the_boundary_is_still_inside() {
        // 0 -> 0.5 -> 1.0 (= δ, inside) -> 1.5
        let l = vshape(5.0, 1.0);
        let s = run(
            &SgdRun::new(0.5, 0.0, 10, 0),
            &l,
            &NoiseModel::zero(),
            StopRule::ExitInterval { low: -1.0, high: 1.0 },
        )
        .unwrap();
        assert_eq!(s.exit, Some(Exit { step: 3, side: Side::Right }));
        assert_eq!(s.status, RunStatus::Exited);
    }

    #[test]
    fn forced_alternating_noise_alternates_crossings() {
        let l = vshape(1.0, 1.0);
        let mut cfg = SgdRun::new(0.01, 0.0, 40, 0);
        cfg.track_crossings = true;
        let mut k = 0;
        let s = run_with(&cfg, &l, StopRule::FixedSteps, || {
            k += 1;
            if k == 1 {
                -50.0
            } else if k % 2 == 0 {
                100.0
            } else {
                -100.0
            }
        })
        .unwrap();
        assert_eq!(s.crossings.len(), 41);
        for w in s.crossings.windows(2) {
            assert!(w[0].0 < w[1].0);
            assert_ne!(w[0].1, w[1].1);
        }
    }

    #[test]
    fn overflow_aborts() {
        let l = Landscape::double_well();
        let s = run_with(&SgdRun::new(1.0, 0.0, 10, 0), &l, StopRule::FixedSteps, || 1e308).unwrap();
        assert_eq!(s.status, RunStatus::Aborted);
        let s = run_with(&SgdRun::new(1.0, 0.0, 10, 0), &l, StopRule::FixedSteps, || f64::NAN)
            .unwrap();
        assert_eq!(s.status, RunStatus::Aborted);
    }

    #[test]
    fn run_is_deterministic() {
        let l = Landscape::double_well();
        let noise = NoiseModel::alpha_stable(1.5).unwrap();
        let mut cfg = SgdRun::new(0.01, 0.3, 5000, 77);
        cfg.record_stride = 10;
        cfg.track_crossings = true;
        let a = run(&cfg, &l, &noise, StopRule::FixedSteps).unwrap();
        let b = run(&cfg, &l, &noise, StopRule::FixedSteps).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn himmelblau_stationary_without_noise() {
        let s = run_himmelblau(1e-3, (3.0, 2.0), 1000, 0, 100, None).unwrap();
        assert_eq!(s.final_point, (3.0, 2.0));
        assert_eq!(s.path.len(), 11);
    }
}
