//! Step-count scales: the convergence horizon `n_ε` under either noise regime
//! and the sticking radius/horizon around a K-critical point.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::noise::{NoiseModel, Regime, SlowlyVarying};

/// `L(u) = 1 / ln(e + u)`, which is `o((ln ln u)^{-1/2})`.
pub const DEFAULT_H2_L: SlowlyVarying = SlowlyVarying::LogPower { c: 1.0, p: -1.0 };

/// Direct power law `n_ε = scale · ε^{-gamma}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLaw {
    pub gamma: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl PowerLaw {
    /// Gaussian column of the convergence table: `ε^{-1.9}`.
    pub const GAUSSIAN_TABLE: PowerLaw = PowerLaw { gamma: 1.9, scale: 1.0 };
    /// Stable column of the convergence table, fitted: `3 ε^{-1.4}`.
    pub const STABLE_TABLE: PowerLaw = PowerLaw { gamma: 1.4, scale: 3.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeScaleSpec {
    pub regime: Regime,
    /// Tail index; required for `h1` without an override.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default, rename = "l")]
    pub slowly_varying: SlowlyVarying,
    #[serde(default, rename = "override")]
    pub gamma_override: Option<PowerLaw>,
}

impl TimeScaleSpec {
    pub fn h1(alpha: f64, l: SlowlyVarying) -> Self {
        Self { regime: Regime::H1, alpha: Some(alpha), slowly_varying: l, gamma_override: None }
    }

    pub fn h2(l: SlowlyVarying) -> Self {
        Self { regime: Regime::H2, alpha: None, slowly_varying: l, gamma_override: None }
    }

    pub fn power_law(regime: Regime, gamma: f64, scale: f64) -> Self {
        Self {
            regime,
            alpha: None,
            slowly_varying: SlowlyVarying::ONE,
            gamma_override: Some(PowerLaw { gamma, scale }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.slowly_varying.validate()?;
        if let Some(p) = self.gamma_override {
            if !(p.gamma > 0.0 && p.scale > 0.0 && p.gamma.is_finite() && p.scale.is_finite()) {
                return config("power-law override needs gamma > 0 and scale > 0");
            }
            return Ok(());
        }
        if self.regime == Regime::H1 {
            match self.alpha {
                Some(a) if a > 1.0 && a < 2.0 => {}
                Some(a) => return config(format!("alpha must lie in (1,2), got {a}")),
                None => return config("h1 time scale needs alpha"),
            }
        }
        Ok(())
    }

    /// Unfloored `n_ε`.
    pub fn value(&self, epsilon: f64) -> Result<f64> {
        self.validate()?;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return domain(format!("epsilon must lie in (0,1), got {epsilon}"));
        }
        let inv = 1.0 / epsilon;
        let v = match (self.gamma_override, self.regime) {
            (Some(p), _) => p.scale * (-p.gamma * epsilon.ln()).exp(),
            (None, Regime::H1) => {
                let a = self.alpha.unwrap_or(1.5);
                (inv * self.slowly_varying.eval(inv)).powf(a)
            }
            (None, Regime::H2) => (inv * self.slowly_varying.eval(inv)).powi(2),
        };
        Ok(v)
    }

    /// `⌊n_ε⌋`, at least 1.
    pub fn n_eps(&self, epsilon: f64) -> Result<u64> {
        let v = self.value(epsilon)?;
        if !(v.is_finite() && v < u64::MAX as f64) {
            return domain(format!("n_eps overflows at epsilon = {epsilon}"));
        }
        Ok((v.floor() as u64).max(1))
    }
}

/// Free function form of [`TimeScaleSpec::n_eps`].
pub fn n_eps(spec: &TimeScaleSpec, epsilon: f64) -> Result<u64> {
    spec.n_eps(epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipRow {
    pub epsilon: f64,
    pub n_eps: u64,
    /// `ε n_ε`, must diverge
    pub eps_n: f64,
    /// `H(1/ε) n_ε`, must vanish under h1
    pub tail_n: f64,
    /// `ε² n_ε`, must vanish under h2
    pub eps2_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub regime: Regime,
    pub rows: Vec<MembershipRow>,
    pub eps_n_increasing: bool,
    pub upper_decreasing: bool,
}

impl MembershipReport {
    /// Both trends point the right way along the grid.
    pub fn in_class(&self) -> bool {
        self.eps_n_increasing && self.upper_decreasing
    }

    pub fn upper(&self, row: &MembershipRow) -> f64 {
        match self.regime {
            Regime::H1 => row.tail_n,
            Regime::H2 => row.eps2_n,
        }
    }
}

/// Evaluates the class diagnostics for `spec` along a strictly decreasing
/// `eps_grid`.
pub fn membership_report(
    spec: &TimeScaleSpec,
    noise: &NoiseModel,
    eps_grid: &[f64],
) -> Result<MembershipReport> {
    if eps_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return domain("eps_grid must be strictly decreasing");
    }
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let n = spec.n_eps(eps)?;
        let nf = n as f64;
        rows.push(MembershipRow {
            epsilon: eps,
            n_eps: n,
            eps_n: eps * nf,
            tail_n: noise.tail_h(1.0 / eps)? * nf,
            eps2_n: eps * eps * nf,
        });
    }
    let eps_n_increasing = rows.windows(2).all(|w| w[1].eps_n > w[0].eps_n);
    let upper = |r: &MembershipRow| match spec.regime {
        Regime::H1 => r.tail_n,
        Regime::H2 => r.eps2_n,
    };
    let upper_decreasing = rows.windows(2).all(|w| upper(&w[1]) < upper(&w[0]));
    Ok(MembershipReport { regime: spec.regime, rows, eps_n_increasing, upper_decreasing })
}

/// Default vanishing factor `o_ε = 1 / ln(1/ε)`.
pub fn default_o_eps(epsilon: f64) -> f64 {
    1.0 / (1.0 / epsilon).ln()
}

/// Parameters of a sticking computation around a K-critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickingSpec {
    pub regime: Regime,
    pub k: u32,
    /// Tail index, used under h1.
    pub alpha: f64,
    pub slowly_varying: SlowlyVarying,
}

impl StickingSpec {
    fn check(&self, epsilon: f64, o_eps: f64) -> Result<()> {
        if self.k < 1 {
            return domain("K must be at least 1");
        }
        if self.regime == Regime::H1 && !(self.alpha > 1.0 && self.alpha < 2.0) {
            return domain(format!("alpha must lie in (1,2), got {}", self.alpha));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return domain(format!("epsilon must lie in (0,1), got {epsilon}"));
        }
        if !(o_eps > 0.0 && o_eps <= 1.0) {
            return domain(format!("o_eps must lie in (0,1], got {o_eps}"));
        }
        self.slowly_varying.validate()
    }

    /// `δ(ε)`.
    pub fn radius(&self, epsilon: f64, o_eps: f64) -> Result<f64> {
        self.check(epsilon, o_eps)?;
        let k = self.k as f64;
        let l = &self.slowly_varying;
        Ok(match self.regime {
            Regime::H1 => {
                let d = k - 1.0 + self.alpha;
                let arg = o_eps * epsilon.powf(-k / d);
                epsilon.powf((self.alpha - 1.0) / d) * l.eval(arg).powf(-1.0 / d)
            }
            Regime::H2 => {
                let arg = epsilon.powf(-k / (k + 1.0));
                epsilon.powf(1.0 / (k + 1.0)) * l.eval(arg).powf(-2.0 / (k + 1.0))
            }
        })
    }

    /// Multiplier in front of `ε^{-1} δ^{-(K-1)}`: `o^α` under h1, `o` under h2.
    pub fn o_factor(&self, o_eps: f64) -> f64 {
        match self.regime {
            Regime::H1 => o_eps.powf(self.alpha),
            Regime::H2 => o_eps,
        }
    }

    /// Unfloored `h(ε)`.
    pub fn horizon_value(&self, epsilon: f64, o_eps: f64) -> Result<f64> {
        let delta = self.radius(epsilon, o_eps)?;
        Ok(self.o_factor(o_eps) / epsilon * delta.powi(-(self.k as i32 - 1)))
    }

    /// `⌊h(ε)⌋`, at least 1.
    pub fn horizon(&self, epsilon: f64, o_eps: f64) -> Result<u64> {
        let v = self.horizon_value(epsilon, o_eps)?;
        if !(v.is_finite() && v < u64::MAX as f64) {
            return domain("sticking horizon overflows");
        }
        Ok((v.floor() as u64).max(1))
    }
}

pub fn sticking_radius(
    regime: Regime,
    epsilon: f64,
    k: u32,
    alpha: f64,
    l: SlowlyVarying,
    o_eps: f64,
) -> Result<f64> {
    StickingSpec { regime, k, alpha, slowly_varying: l }.radius(epsilon, o_eps)
}

pub fn sticking_horizon(
    regime: Regime,
    epsilon: f64,
    k: u32,
    alpha: f64,
    l: SlowlyVarying,
    o_eps: f64,
) -> Result<u64> {
    StickingSpec { regime, k, alpha, slowly_varying: l }.horizon(epsilon, o_eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_eps_examples() {
        assert_eq!(TimeScaleSpec::h2(SlowlyVarying::ONE).n_eps(0.1).unwrap(), 100);
        let g = TimeScaleSpec::power_law(Regime::H2, 1.9, 1.0);
        assert_eq!(g.n_eps(0.01).unwrap(), 6309);
        assert_eq!(g.n_eps(0.1).unwrap(), 79);
        assert_eq!(g.n_eps(0.001).unwrap(), 501_187);
        // 3 * 10^{4.2} = 47546.8...
        let s = TimeScaleSpec::power_law(Regime::H1, 1.4, 3.0);
        assert_eq!(s.n_eps(0.001).unwrap(), 47_546);
        assert!(TimeScaleSpec::h2(SlowlyVarying::ONE).n_eps(1.0).is_err());
        assert!(TimeScaleSpec::h2(SlowlyVarying::ONE).n_eps(0.0).is_err());
    }

    #[test]
    fn n_eps_h1_formula() {
        let s = TimeScaleSpec::h1(1.5, SlowlyVarying::ONE);
        assert_eq!(s.n_eps(0.01).unwrap(), 1000);
        let bad = TimeScaleSpec { alpha: Some(2.5), ..s };
        assert!(bad.n_eps(0.01).is_err());
    }

    #[test]
    fn membership_flags() {
        let pareto = NoiseModel::pareto_symmetric(1.5, 1.0).unwrap();
        let grid = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
        let r = membership_report(&TimeScaleSpec::power_law(Regime::H1, 1.4, 1.0), &pareto, &grid)
            .unwrap();
        assert!(r.in_class());
        for row in &r.rows {
            let closed = row.epsilon.powf(0.1);
            assert!((row.tail_n / closed - 1.0).abs() < 0.05, "{row:?}");
        }
        let gauss = NoiseModel::gaussian(1.0).unwrap();
        let r = membership_report(&TimeScaleSpec::power_law(Regime::H2, 1.9, 1.0), &gauss, &grid)
            .unwrap();
        assert!(r.in_class());
        let r = membership_report(&TimeScaleSpec::power_law(Regime::H2, 2.1, 1.0), &gauss, &grid)
            .unwrap();
        assert!(!r.in_class());
        assert!(!r.upper_decreasing);
        assert!(membership_report(&TimeScaleSpec::h2(SlowlyVarying::ONE), &gauss, &[0.1, 0.2])
            .is_err());
    }

    #[test]
    fn sticking_examples() {
        let delta = sticking_radius(Regime::H1, 1e-4, 3, 1.5, SlowlyVarying::ONE, 0.5).unwrap();
        assert!((delta - 10f64.powf(-4.0 / 7.0)).abs() < 1e-12);
        assert!((delta - 0.2683).abs() < 1e-4);
        let delta = sticking_radius(Regime::H2, 1e-4, 1, 1.5, SlowlyVarying::ONE, 0.5).unwrap();
        assert!((delta - 0.01).abs() < 1e-14);
        let h = sticking_horizon(Regime::H2, 1e-3, 1, 1.5, SlowlyVarying::ONE, 0.5).unwrap();
        assert_eq!(h, (0.5f64 / 1e-3).floor() as u64);
        assert!((499..=500).contains(&h));
        assert!(sticking_radius(Regime::H1, 1e-3, 0, 1.5, SlowlyVarying::ONE, 0.5).is_err());
        assert!(sticking_radius(Regime::H1, 1e-3, 2, 2.5, SlowlyVarying::ONE, 0.5).is_err());
        assert!(sticking_radius(Regime::H1, 1e-3, 2, 1.5, SlowlyVarying::ONE, 0.0).is_err());
    }

    #[test]
    fn horizon_below_power_bound() {
        let eps = 1e-3;
        let o = default_o_eps(eps);
        let h = sticking_horizon(Regime::H1, eps, 3, 1.5, SlowlyVarying::ONE, o).unwrap();
        let gamma = 1.5 * 3.0 / 3.5;
        assert!(h >= 1);
        assert!((h as f64) < eps.powf(-gamma));
    }
}
