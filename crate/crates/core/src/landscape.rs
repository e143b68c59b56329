//! One-dimensional losses given by a right-continuous, piecewise closed-form
//! derivative, plus the 2-D Himmelblau gradient used by the plane demo.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Closed-form derivative on one piece.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Deriv {
    Const(f64),
    /// `slope * (x - root)`
    Linear { slope: f64, root: f64 },
    /// `4x(x^2 - 1)`
    DoubleWell,
    /// `(K+1) lead (x - c)^K`
    Power { k: u32, c: f64, lead: f64 },
}

impl Deriv {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            Deriv::Const(v) => v,
            Deriv::Linear { slope, root } => slope * (x - root),
            Deriv::DoubleWell => 4.0 * x * (x * x - 1.0),
            Deriv::Power { k, c, lead } => (k + 1) as f64 * lead * (x - c).powi(k as i32),
        }
    }

    /// Any antiderivative.
    fn antideriv(&self, x: f64) -> f64 {
        match *self {
            Deriv::Const(v) => v * x,
            Deriv::Linear { slope, root } => 0.5 * slope * (x - root) * (x - root),
            Deriv::DoubleWell => x * x * (x * x - 2.0),
            Deriv::Power { k, c, lead } => lead * (x - c).powi(k as i32 + 1),
        }
    }
}

/// Which constructor produced a landscape, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    DoubleWell,
    Vshape { c_l: f64, c_r: f64, delta: f64, outer_slope: f64 },
    KCritical { k: u32, c: f64, a: f64, delta: f64 },
    Himmelblau,
}

/// A loss on the real line described by its derivative.
///
/// `breaks[i]` is the left end (inclusive) of piece `i + 1`; piece 0 covers
/// `(-inf, breaks[0])`. Every piece is closed at its left end, which makes the
/// derivative right-continuous at every break.
#[derive(Debug, Clone)]
pub struct Landscape {
    preset: Preset,
    breaks: Vec<f64>,
    pieces: Vec<Deriv>,
    /// loss value at each break, anchored at `value(breaks[0]) = 0`
    values_at_breaks: Vec<f64>,
    minima: Vec<f64>,
    maxima: Vec<f64>,
    inflections: Vec<f64>,
    bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VShapeSpec {
    pub c_l: f64,
    pub c_r: f64,
    pub delta: f64,
}

impl VShapeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_l > 0.0 && self.c_r > 0.0 && self.delta > 0.0) {
            return config("vshape needs c_l > 0, c_r > 0 and delta > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCriticalSpec {
    pub k: u32,
    pub c: f64,
    pub lead_coeff: f64,
    pub delta: f64,
}

impl KCriticalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return config("k_critical needs K >= 1");
        }
        if self.k > 32 {
            return config("k_critical supports K <= 32");
        }
        if !(self.lead_coeff != 0.0 && self.lead_coeff.is_finite()) {
            return config("k_critical lead coefficient must be nonzero");
        }
        if !(self.delta > 0.0 && self.c.is_finite()) {
            return config("k_critical needs delta > 0 and finite c");
        }
        Ok(())
    }
}

impl Landscape {
    fn assemble(
        preset: Preset,
        breaks: Vec<f64>,
        pieces: Vec<Deriv>,
        minima: Vec<f64>,
        maxima: Vec<f64>,
        inflections: Vec<f64>,
        bound: f64,
    ) -> Self {
        debug_assert_eq!(pieces.len(), breaks.len() + 1);
        let mut values_at_breaks = Vec::with_capacity(breaks.len());
        for (i, &b) in breaks.iter().enumerate() {
            if i == 0 {
                values_at_breaks.push(0.0);
            } else {
                let piece = &pieces[i];
                let prev = breaks[i - 1];
                let v = values_at_breaks[i - 1] + piece.antideriv(b) - piece.antideriv(prev);
                values_at_breaks.push(v);
            }
        }
        Self { preset, breaks, pieces, values_at_breaks, minima, maxima, inflections, bound }
    }

    /// Cubic double well: `f'(x) = 4x(x^2 - 1)` on `[-2, 2]`, held constant at
    /// `±24` outside. Minima at `±1`, maximum at `0`.
    pub fn double_well() -> Self {
        Self::assemble(
            Preset::DoubleWell,
            vec![-2.0, 2.0],
            vec![Deriv::Const(-24.0), Deriv::DoubleWell, Deriv::Const(24.0)],
            vec![-1.0, 1.0],
            vec![0.0],
            vec![],
            24.0,
        )
    }

    /// Sharp maximum at zero with `f' = c_l` on `(-δ, 0)` and `-c_r` on
    /// `[0, δ)`. Outside `[-δ, δ]` the derivative returns linearly to zero at
    /// the flanking minima `∓(δ + 1)` and is `∓outer_slope` beyond them.
    pub fn vshape(spec: VShapeSpec, outer_slope: f64) -> Result<Self> {
        spec.validate()?;
        if !(outer_slope > 0.0) {
            return config("vshape outer_slope must be positive");
        }
        let VShapeSpec { c_l, c_r, delta } = spec;
        let m = delta + 1.0;
        Ok(Self::assemble(
            Preset::Vshape { c_l, c_r, delta, outer_slope },
            vec![-m, -delta, 0.0, delta, m],
            vec![
                Deriv::Const(-outer_slope),
                Deriv::Linear { slope: c_l, root: -m },
                Deriv::Const(c_l),
                Deriv::Const(-c_r),
                Deriv::Linear { slope: c_r, root: m },
                Deriv::Const(outer_slope),
            ],
            vec![-m, m],
            vec![0.0],
            vec![],
            c_l.max(c_r).max(outer_slope),
        ))
    }

    /// `f(x) = a (x - c)^{K+1}` on `[c - δ, c + δ]`.
    ///
    /// Outside that window: for a K-critical minimum the derivative is held at
    /// its boundary value; for a maximum it returns linearly to zero at flanking
    /// minima `c ± (δ + 1)` and then stays at the boundary magnitude; for even
    /// `K` (a stationary inflection) it is held at its boundary value and `c`
    /// is listed as an inflection point.
    pub fn k_critical(spec: KCriticalSpec) -> Result<Self> {
        spec.validate()?;
        let KCriticalSpec { k, c, lead_coeff: a, delta } = spec;
        let inner = Deriv::Power { k, c, lead: a };
        let g_left = inner.eval(c - delta);
        let g_right = inner.eval(c + delta);
        let bound = g_left.abs().max(g_right.abs());
        let preset = Preset::KCritical { k, c, a, delta };
        let odd = k % 2 == 1;
        let land = if odd && a < 0.0 {
            let m = delta + 1.0;
            Self::assemble(
                preset,
                vec![c - m, c - delta, c + delta, c + m],
                vec![
                    Deriv::Const(-g_left),
                    Deriv::Linear { slope: g_left, root: c - m },
                    inner,
                    Deriv::Linear { slope: -g_right, root: c + m },
                    Deriv::Const(-g_right),
                ],
                vec![c - m, c + m],
                vec![c],
                vec![],
                bound,
            )
        } else {
            let (minima, inflections) = if odd { (vec![c], vec![]) } else { (vec![], vec![c]) };
            Self::assemble(
                preset,
                vec![c - delta, c + delta],
                vec![Deriv::Const(g_left), inner, Deriv::Const(g_right)],
                minima,
                vec![],
                inflections,
                bound,
            )
        };
        Ok(land)
    }

    pub fn from_preset(preset: Preset) -> Result<Self> {
        match preset {
            Preset::DoubleWell => Ok(Self::double_well()),
            Preset::Vshape { c_l, c_r, delta, outer_slope } => {
                Self::vshape(VShapeSpec { c_l, c_r, delta }, outer_slope)
            }
            Preset::KCritical { k, c, a, delta } => {
                Self::k_critical(KCriticalSpec { k, c, lead_coeff: a, delta })
            }
            Preset::Himmelblau => config("himmelblau is a 2-D landscape; use the plane runner"),
        }
    }

    pub fn preset(&self) -> Preset {
        self.preset
    }

    fn piece_index(&self, x: f64) -> usize {
        self.breaks.partition_point(|&b| b <= x)
    }

    /// Right-continuous `f'(x)`.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].eval(x)
    }

    /// Loss value, continuous, anchored so that it is zero at the first break.
    pub fn value(&self, x: f64) -> f64 {
        let i = self.piece_index(x);
        let piece = &self.pieces[i];
        if i == 0 {
            let b = self.breaks[0];
            piece.antideriv(x) - piece.antideriv(b)
        } else {
            let b = self.breaks[i - 1];
            self.values_at_breaks[i - 1] + piece.antideriv(x) - piece.antideriv(b)
        }
    }

    pub fn minima(&self) -> &[f64] {
        &self.minima
    }

    pub fn maxima(&self) -> &[f64] {
        &self.maxima
    }

    pub fn inflections(&self) -> &[f64] {
        &self.inflections
    }

    /// Global bound on `|f'|`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Piece boundaries, in increasing order.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Minima and maxima merged in increasing order.
    pub fn extrema(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.minima.iter().chain(&self.maxima).copied().collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// Checks `M_0 < m_1 < M_1 < ... < m_d < M_d`.
    pub fn is_interleaved(&self) -> bool {
        if self.minima.is_empty() {
            return self.maxima.is_empty();
        }
        if self.maxima.len() + 1 != self.minima.len() {
            return false;
        }
        let mut seq = Vec::with_capacity(self.minima.len() * 2);
        for (i, &m) in self.minima.iter().enumerate() {
            seq.push(m);
            if let Some(&mx) = self.maxima.get(i) {
                seq.push(mx);
            }
        }
        seq.windows(2).all(|w| w[0] < w[1])
    }

    /// Basin index `r` with `x ∈ (M_{r-1}, M_r)`, zero-based.
    pub fn basin_of(&self, x: f64) -> usize {
        self.maxima.partition_point(|&m| m < x)
    }
}

/// Himmelblau function `(x^2 + y - 11)^2 + (x + y^2 - 7)^2`.
pub fn himmelblau(x: f64, y: f64) -> f64 {
    let a = x * x + y - 11.0;
    let b = x + y * y - 7.0;
    a * a + b * b
}

/// Exact gradient of [`himmelblau`].
pub fn himmelblau_gradient(x: f64, y: f64) -> (f64, f64) {
    let a = x * x + y - 11.0;
    let b = x + y * y - 7.0;
    (4.0 * x * a + 2.0 * b, 2.0 * a + 4.0 * y * b)
}

/// The four minima of the Himmelblau function.
pub const HIMMELBLAU_MINIMA: [(f64, f64); 4] = [
    (3.0, 2.0),
    (-2.805_118, 3.131_312),
    (-3.779_310, -3.283_186),
    (3.584_428, -1.848_126),
];

/// Local maximum of the Himmelblau function.
pub const HIMMELBLAU_MAXIMUM: (f64, f64) = (-0.270_845, -0.923_039);

#[cfg(test)]
mod tests {
    use super::*;

    fn vshape() -> Landscape {
        Landscape::vshape(VShapeSpec { c_l: 5.0, c_r: 1.0, delta: 1.0 }, 2.0).unwrap()
    }

    #[test]
    fn vshape_levels_and_right_continuity() {
        let l = vshape();
        assert_eq!(l.derivative(-0.5), 5.0);
        assert_eq!(l.derivative(0.0), -1.0);
        assert_eq!(l.derivative(0.5), -1.0);
        assert_eq!(l.extrema(), vec![-2.0, 0.0, 2.0]);
        assert!(l.is_interleaved());
        // continuous at ±δ, where no extremum sits
        assert!((l.derivative(-1.0 - 1e-12) - 5.0).abs() < 1e-10);
        assert!((l.derivative(1.0 - 1e-12) + 1.0).abs() < 1e-10);
        assert!(Landscape::vshape(VShapeSpec { c_l: 0.0, c_r: 1.0, delta: 1.0 }, 1.0).is_err());
    }

    #[test]
    fn double_well_shape() {
        let l = Landscape::double_well();
        assert_eq!(l.derivative(0.0), 0.0);
        assert_eq!(l.derivative(1.0), 0.0);
        assert_eq!(l.derivative(-1.0), 0.0);
        assert!(l.value(0.0) > l.value(1.0));
        assert!(l.value(0.0) > l.value(-1.0));
        assert!((l.value(1.0) - l.value(-1.0)).abs() < 1e-12);
        assert_eq!(l.derivative(5.0), 24.0);
        assert_eq!(l.derivative(-5.0), -24.0);
        assert_eq!(l.basin_of(-0.3), 0);
        assert_eq!(l.basin_of(0.0), 0);
        assert_eq!(l.basin_of(0.3), 1);
    }

    #[test]
    fn k_critical_derivative() {
        let l = Landscape::k_critical(KCriticalSpec { k: 3, c: 0.0, lead_coeff: 1.0, delta: 1.0 })
            .unwrap();
        assert!((l.derivative(0.1) - 0.004).abs() < 1e-15);
        assert_eq!(l.minima(), &[0.0]);
        let l = Landscape::k_critical(KCriticalSpec { k: 3, c: 0.5, lead_coeff: -1.0, delta: 1.0 })
            .unwrap();
        assert_eq!(l.maxima(), &[0.5]);
        assert_eq!(l.minima(), &[-1.5, 2.5]);
        assert!(l.is_interleaved());
        let l = Landscape::k_critical(KCriticalSpec { k: 2, c: 0.0, lead_coeff: 1.0, delta: 1.0 })
            .unwrap();
        assert_eq!(l.inflections(), &[0.0]);
        assert!(Landscape::k_critical(KCriticalSpec { k: 0, c: 0.0, lead_coeff: 1.0, delta: 1.0 })
            .is_err());
    }

    #[test]
    fn value_is_continuous_across_breaks() {
        for l in [
            Landscape::double_well(),
            vshape(),
            Landscape::k_critical(KCriticalSpec { k: 3, c: 0.0, lead_coeff: -2.0, delta: 0.7 })
                .unwrap(),
        ] {
            for &b in l.breaks() {
                let jump = (l.value(b) - l.value(b - 1e-9)).abs();
                assert!(jump < 1e-7, "{:?} jump {jump} at {b}", l.preset());
            }
        }
    }

    #[test]
    fn himmelblau_gradient_values() {
        assert_eq!(himmelblau_gradient(3.0, 2.0), (0.0, 0.0));
        assert_eq!(himmelblau_gradient(0.0, 0.0), (-14.0, -22.0));
    }

    #[test]
    fn himmelblau_gradient_matches_central_differences() {
        let (x, y) = (-0.27, -0.92);
        let h = 1e-5;
        let gx = (himmelblau(x + h, y) - himmelblau(x - h, y)) / (2.0 * h);
        let gy = (himmelblau(x, y + h) - himmelblau(x, y - h)) / (2.0 * h);
        let (ax, ay) = himmelblau_gradient(x, y);
        assert!(((gx - ax) / ax).abs() < 1e-6, "{gx} vs {ax}");
        assert!(((gy - ay) / ay).abs() < 1e-6, "{gy} vs {ay}");
    }
}
