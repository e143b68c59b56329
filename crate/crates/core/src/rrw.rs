//! Runaway random walk: drift `+c_r` on `[0, ∞)` and `-c_l` below zero.
//!
//! Its limit direction is the small-step limit of the side on which SGD leaves
//! a sharp maximum. This module simulates the walk, estimates its crossing
//! probabilities, sums the telescoping exit series, and computes the closed
//! forms available for two-sided exponential noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::noise::NoiseModel;
use crate::stats::{derive_seed, wald_halfwidth, Z99};

#[derive(Debug, Clone)]
pub struct RrwSpec {
    pub noise: NoiseModel,
    pub c_l: f64,
    pub c_r: f64,
}

impl RrwSpec {
    pub fn new(noise: NoiseModel, c_l: f64, c_r: f64) -> Result<Self> {
        if !(c_l > 0.0 && c_r > 0.0) {
            return config("runaway walk needs c_l > 0 and c_r > 0");
        }
        Ok(Self { noise, c_l, c_r })
    }

    /// Default escape level `50 max(c_l, c_r, noise scale)`.
    pub fn default_escape_level(&self) -> f64 {
        50.0 * self.c_l.max(self.c_r).max(self.noise.scale())
    }
}

#[inline]
pub fn rrw_step(x: f64, xi: f64, spec: &RrwSpec) -> f64 {
    if x < 0.0 {
        x + xi - spec.c_l
    } else {
        x + xi + spec.c_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitDirection {
    PlusInf,
    MinusInf,
    Undecided,
}

/// Walk from `X_0 = 0` until `|X| > escape_level` or the budget runs out.
pub fn simulate_limit_direction<R: Rng + ?Sized>(
    spec: &RrwSpec,
    escape_level: f64,
    max_steps: u64,
    rng: &mut R,
) -> LimitDirection {
    walk(spec, escape_level, max_steps, rng).0
}

/// Returns the outcome and the number of zero crossings seen on the way.
fn walk<R: Rng + ?Sized>(
    spec: &RrwSpec,
    escape_level: f64,
    max_steps: u64,
    rng: &mut R,
) -> (LimitDirection, u32) {
    let mut x = 0.0;
    let mut above = true;
    let mut crossings = 0;
    for _ in 0..max_steps {
        x = rrw_step(x, spec.noise.sample(rng), spec);
        let now_above = x >= 0.0;
        if now_above != above {
            crossings += 1;
            above = now_above;
        }
        if x > escape_level {
            return (LimitDirection::PlusInf, crossings);
        }
        if x < -escape_level {
            return (LimitDirection::MinusInf, crossings);
        }
    }
    (LimitDirection::Undecided, crossings)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitFrequencies {
    pub runs: u64,
    pub plus: u64,
    pub minus: u64,
    pub undecided: u64,
}

impl LimitFrequencies {
    pub fn p_plus(&self) -> f64 {
        self.plus as f64 / self.runs as f64
    }

    pub fn p_minus(&self) -> f64 {
        self.minus as f64 / self.runs as f64
    }

    pub fn undecided_fraction(&self) -> f64 {
        self.undecided as f64 / self.runs as f64
    }

    /// 99% half-width for `p_plus`.
    pub fn ci_halfwidth(&self) -> f64 {
        wald_halfwidth(self.p_plus(), self.runs, Z99)
    }
}

/// Runs `n_runs` walks, run `i` seeded with `derive_seed(seed, i)`.
pub fn limit_direction_frequencies(
    spec: &RrwSpec,
    n_runs: u64,
    escape_level: f64,
    max_steps: u64,
    seed: u64,
) -> Result<LimitFrequencies> {
    if !(escape_level > 0.0) || max_steps == 0 || n_runs == 0 {
        return domain("need escape_level > 0, max_steps >= 1 and n_runs >= 1");
    }
    let outcomes = crate::par::map_indices(n_runs, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i));
        simulate_limit_direction(spec, escape_level, max_steps, &mut rng)
    });
    let mut f = LimitFrequencies { runs: n_runs, plus: 0, minus: 0, undecided: 0 };
    for o in outcomes {
        match o {
            LimitDirection::PlusInf => f.plus += 1,
            LimitDirection::MinusInf => f.minus += 1,
            LimitDirection::Undecided => f.undecided += 1,
        }
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingAnalysis {
    pub runs: u64,
    /// `P(τ_{2k}^↑ < ∞)`, `k = 0..=k_max`
    pub tau_up_prob: Vec<f64>,
    /// `P(τ_{2k+1}^↓ < ∞)`, `k = 0..=k_max`
    pub tau_down_prob: Vec<f64>,
    pub p_right: f64,
    pub p_left: f64,
    /// Single-crossing probabilities used for the truncation bound.
    pub p_down: f64,
    pub p_up: f64,
    pub truncation_bound: f64,
    /// 99% half-width of `p_right`.
    pub ci_halfwidth: f64,
    pub horizon: u64,
    pub undecided_fraction: f64,
    /// Undecided mass stayed above 1% even after doubling the horizon.
    pub horizon_warning: bool,
}

impl CrossingAnalysis {
    /// 99% half-width of any probability estimated from these runs.
    pub fn halfwidth(&self, p: f64) -> f64 {
        wald_halfwidth(p, self.runs, Z99)
    }

    /// `P(τ_j < ∞)` for crossing index `j` (even: up, odd: down).
    pub fn tau_prob(&self, j: usize) -> Option<f64> {
        if j.is_multiple_of(2) {
            self.tau_up_prob.get(j / 2).copied()
        } else {
            self.tau_down_prob.get(j / 2).copied()
        }
    }
}

/// Estimates `P(τ_j < ∞)` from the number of zero crossings each walk makes
/// before escaping, then sums the exit series truncated at `k_max`.
///
/// `horizon` is the per-walk step budget; while more than `10^-3` of the walks
/// are undecided it is doubled (up to 8 times). `single_crossing` supplies
/// analytic `(p_down, p_up)` for the truncation bound; otherwise they are
/// estimated from the walks.
pub fn crossing_probabilities(
    spec: &RrwSpec,
    n_runs: u64,
    k_max: usize,
    horizon: u64,
    escape_level: f64,
    seed: u64,
    single_crossing: Option<(f64, f64)>,
) -> Result<CrossingAnalysis> {
    if n_runs < 1000 {
        return domain("crossing_probabilities needs at least 1000 runs");
    }
    if k_max < 1 {
        return domain("k_max must be at least 1");
    }
    if horizon == 0 || !(escape_level > 0.0) {
        return domain("need horizon >= 1 and escape_level > 0");
    }
    let mut horizon = horizon;
    let mut results;
    let mut doublings = 0;
    loop {
        results = crate::par::map_indices(n_runs, |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i));
            walk(spec, escape_level, horizon, &mut rng)
        });
        let undecided = results.iter().filter(|r| r.0 == LimitDirection::Undecided).count();
        if (undecided as f64) < 1e-3 * n_runs as f64 || doublings == 8 {
            break;
        }
        horizon *= 2;
        doublings += 1;
    }
    let undecided = results.iter().filter(|r| r.0 == LimitDirection::Undecided).count() as u64;
    let n = n_runs as f64;
    let max_j = 2 * k_max + 2;
    let mut at_least = vec![0u64; max_j + 1];
    for &(_, c) in &results {
        for slot in at_least.iter_mut().take((c as usize).min(max_j) + 1) {
            *slot += 1;
        }
    }
    let prob = |j: usize| at_least[j] as f64 / n;
    let tau_up_prob: Vec<f64> = (0..=k_max).map(|k| prob(2 * k)).collect();
    let tau_down_prob: Vec<f64> = (0..=k_max).map(|k| prob(2 * k + 1)).collect();
    let mut p_right = 0.0;
    let mut p_left = 0.0;
    for k in 0..=k_max {
        p_right += prob(2 * k) - prob(2 * k + 1);
        p_left += prob(2 * k + 1) - prob(2 * k + 2);
    }
    let (p_down, p_up) = single_crossing.unwrap_or_else(|| {
        let p1 = prob(1);
        let p_up = if p1 > 0.0 { prob(2) / p1 } else { 0.0 };
        (p1, p_up)
    });
    let rho = p_down * p_up;
    let truncation_bound =
        if rho < 1.0 { rho.powi(k_max as i32 + 1) / (1.0 - rho) } else { f64::INFINITY };
    let undecided_fraction = undecided as f64 / n;
    Ok(CrossingAnalysis {
        runs: n_runs,
        tau_up_prob,
        tau_down_prob,
        p_right,
        p_left,
        p_down,
        p_up,
        truncation_bound,
        ci_halfwidth: wald_halfwidth(p_right, n_runs, Z99),
        horizon,
        undecided_fraction,
        horizon_warning: undecided_fraction > 0.01,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialRoots {
    /// `|λ|` of the negative root for the `+c_r` walk.
    pub mu_down: f64,
    /// Positive root for the `-c_l` walk.
    pub mu_up: f64,
    pub p_down: f64,
    pub p_up: f64,
    /// `|φ - 1|` at the two roots.
    pub residual_down: f64,
    pub residual_up: f64,
}

/// Moment generating function of the two-sided exponential law,
/// `r β/(λ + β) + q α/(α - λ)` on `(-β, α)`.
fn mgf(alpha: f64, beta: f64, q: f64, r: f64, lambda: f64) -> f64 {
    r * beta / (lambda + beta) + q * alpha / (alpha - lambda)
}

/// Cramér roots for two-sided exponential noise with right rate `alpha_rate`
/// and left rate `beta_rate`, and the resulting crossing probabilities
/// `p_down = 1 - μ↓/β`, `p_up = 1 - μ↑/α`.
pub fn exponential_roots(
    alpha_rate: f64,
    beta_rate: f64,
    c_l: f64,
    c_r: f64,
) -> Result<ExponentialRoots> {
    let noise = NoiseModel::double_exponential(alpha_rate, beta_rate)?;
    if !(c_l > 0.0 && c_r > 0.0) {
        return config("need c_l > 0 and c_r > 0");
    }
    let (q, r) = noise.weights().expect("double exponential weights");
    let (a, b) = (alpha_rate, beta_rate);
    // φ↓(-μ) for μ ∈ (0, β) and φ↑(μ) for μ ∈ (0, α)
    let phi_down = |mu: f64| (-mu * c_r).exp() * mgf(a, b, q, r, -mu);
    let phi_up = |mu: f64| (-mu * c_l).exp() * mgf(a, b, q, r, mu);
    let mu_down = nonzero_unit_root(&phi_down, b).map_err(|e| annotate(e, "mu_down", a, b))?;
    let mu_up = nonzero_unit_root(&phi_up, a).map_err(|e| annotate(e, "mu_up", a, b))?;
    let residual_down = (phi_down(mu_down) - 1.0).abs();
    let residual_up = (phi_up(mu_up) - 1.0).abs();
    Ok(ExponentialRoots {
        mu_down,
        mu_up,
        p_down: 1.0 - mu_down / b,
        p_up: 1.0 - mu_up / a,
        residual_down,
        residual_up,
    })
}

fn annotate(e: Error, which: &str, a: f64, b: f64) -> Error {
    Error::Numeric(format!("{which} (alpha = {a}, beta = {b}): {e}"))
}

/// Root of `phi(μ) = 1` in `(0, pole)` other than `μ = 0`.
///
/// `phi` equals 1 at zero, dips below 1 and diverges at the pole. The bracket
/// comes from a geometric scan outward from zero, then plain bisection runs
/// until the interval cannot shrink further in floating point.
fn nonzero_unit_root<F: Fn(f64) -> f64>(phi: &F, pole: f64) -> Result<f64> {
    let mut grid: Vec<f64> = (1..=60).rev().map(|j| pole * 0.5f64.powi(j)).collect();
    grid.extend((2..=60).map(|j| pole * (1.0 - 0.5f64.powi(j))));
    let mut below_seen = None;
    let mut bracket = None;
    for &mu in &grid {
        let g = phi(mu) - 1.0;
        if g < 0.0 {
            below_seen = Some(mu);
        } else if g > 0.0 {
            if let Some(lo) = below_seen {
                bracket = Some((lo, mu));
                break;
            }
        }
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(Error::Numeric(format!(
            "no sign change of phi - 1 found in (0, {pole}); dipped below 1: {}",
            below_seen.is_some()
        )));
    };
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) - 1.0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (glo, ghi) = ((phi(lo) - 1.0).abs(), (phi(hi) - 1.0).abs());
    Ok(if glo <= ghi { lo } else { hi })
}

/// Upper bounds on the limiting exit probabilities through the right and
/// left boundary: `1 - p↓ + p↓p↑/(1 - p↓p↑)` and `p↓/(1 - p↓p↑)`.
pub fn exit_probability_bounds(p_down: f64, p_up: f64) -> Result<(f64, f64)> {
    if !((0.0..=1.0).contains(&p_down) && (0.0..=1.0).contains(&p_up)) {
        return domain("p_down and p_up must be probabilities");
    }
    let rho = p_down * p_up;
    if rho >= 1.0 {
        return domain("p_down * p_up must be below 1");
    }
    Ok((1.0 - p_down + rho / (1.0 - rho), p_down / (1.0 - rho)))
}

/// Convenience: fresh stream for a single walk.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(c_l: f64, c_r: f64) -> RrwSpec {
        RrwSpec::new(NoiseModel::double_exponential(1.0, 1.0).unwrap(), c_l, c_r).unwrap()
    }

    #[test]
    fn step_branches() {
        let s = spec(5.0, 1.0);
        assert_eq!(rrw_step(0.0, 0.0, &s), 1.0);
        assert_eq!(rrw_step(-1.0, 0.0, &s), -6.0);
        let x1 = rrw_step(0.0, -2.0, &s);
        assert_eq!(x1, -1.0);
        assert!(x1 < 0.0);
        assert!(RrwSpec::new(NoiseModel::zero(), 0.0, 1.0).is_err());
    }

    #[test]
    fn table_rows_roots() {
        let r = exponential_roots(1.0, 0.10, 5.0, 1.0).unwrap();
        assert!((r.mu_down - 0.0519).abs() < 5e-5, "{r:?}");
        let r = exponential_roots(1.0, 5.0, 5.0, 1.0).unwrap();
        assert!((r.mu_down - 4.9711).abs() < 5e-5, "{r:?}");
        assert!(r.residual_down <= 1e-10 && r.residual_up <= 1e-10);
    }

    #[test]
    fn root_excludes_zero() {
        let r = exponential_roots(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(r.mu_down > 1e-3 && r.mu_up > 1e-3);
        // symmetric law and drifts give symmetric roots
        assert!((r.mu_down - r.mu_up).abs() < 1e-12);
    }

    #[test]
    fn bounds_examples() {
        let r = exponential_roots(1.0, 0.10, 5.0, 1.0).unwrap();
        let (right, left) = exit_probability_bounds(r.p_down, r.p_up).unwrap();
        assert!((right - 0.5222).abs() < 5e-5 && (left - 0.4823).abs() < 5e-5);
        let r = exponential_roots(1.0, 5.0, 5.0, 1.0).unwrap();
        let (right, left) = exit_probability_bounds(r.p_down, r.p_up).unwrap();
        assert!((right - 0.9942).abs() < 5e-5 && (left - 0.0058).abs() < 5e-5);
        let (right, left) = exit_probability_bounds(1e-12, 0.5).unwrap();
        assert!((right - 1.0).abs() < 1e-11 && left < 1e-11);
        assert!(exit_probability_bounds(1.0, 1.0).is_err());
    }

    #[test]
    fn single_step_budget_is_mostly_undecided() {
        let f = limit_direction_frequencies(&spec(1.0, 1.0), 2000, 50.0, 1, 3).unwrap();
        assert!(f.undecided_fraction() > 0.99);
    }

    #[test]
    fn tau_zero_is_certain_and_estimates_nest() {
        let s = spec(5.0, 1.0);
        let a = crossing_probabilities(&s, 4000, 4, 10_000, 250.0, 1, None).unwrap();
        assert_eq!(a.tau_up_prob[0], 1.0);
        let seq: Vec<f64> = (0..10).map(|j| a.tau_prob(j).unwrap()).collect();
        assert!(seq.windows(2).all(|w| w[1] <= w[0]), "{seq:?}");
        assert!(crossing_probabilities(&s, 10, 4, 10, 250.0, 1, None).is_err());
    }
}
