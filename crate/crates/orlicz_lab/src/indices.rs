//! Matuszewska–Orlicz indices at zero and at infinity.
//!
//! Both regimes go through the dilation quantities
//! `D⁺(s) = sup_t F(st)/F(t)` and `D⁻(s) = inf_t F(st)/F(t)` on dyadic `s`.
//! `ln D⁺` is subadditive in `|ln s|`, so every finite `s` gives a one-sided
//! bound on the corresponding index; the point estimate is a fit of
//! `ln D = a·x + b·ln x + c` (`x = |ln s|`) over the last half of the range,
//! which absorbs slowly varying log factors.

use serde::{Deserialize, Serialize};

use crate::orlicz_core::{OrliczKind, OrliczSpec, Regime};
use crate::quad::least_squares;

const LN2: f64 = std::f64::consts::LN_2;
const LN10: f64 = std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub point: f64,
    pub rigorous_bound: f64,
    pub side: Side,
    pub decades_used: f64,
    pub fit_residual: f64,
    /// Largest of: the change between fits over all steps and over 3/4 of
    /// them, the fit residual, and the shift caused by the log column.
    pub uncertainty: f64,
    pub degenerate: bool,
}

/// Grid and range parameters for index estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    /// Dyadic steps `s = 2^{∓j}`, `j = 1..=steps`.
    pub steps: usize,
    /// Width of the `t` window in decades (`t ∈ [10^{-w}, 1]` at zero,
    /// `[1, 10^w]` at infinity).
    pub window_decades: f64,
    /// Grid points per factor of two in `t`.
    pub per_octave: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig { steps: 40, window_decades: 300.0, per_octave: 16 }
    }
}

/// `ln D⁺(s_j)` and `ln D⁻(s_j)` for `j = 1..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationQuantities {
    pub ln_s: Vec<f64>,
    pub ln_upper: Vec<f64>,
    pub ln_lower: Vec<f64>,
    pub degenerate: bool,
    /// Width of the `t` window actually used.
    pub window_decades: f64,
}

pub fn dilation_quantities(spec: &OrliczSpec, regime: Regime, cfg: IndexConfig) -> DilationQuantities {
    let h = LN2 / cfg.per_octave as f64;
    let sign = match regime {
        Regime::AtInfinity => 1.0,
        _ => -1.0,
    };
    let shift_max = cfg.steps * cfg.per_octave;
    // tabulated data is only trusted inside its grid, never in the power
    // extrapolation beyond it
    let mut window = cfg.window_decades;
    if let OrliczKind::Tabulated { grid, .. } = &spec.kind {
        let span = match regime {
            Regime::AtInfinity => grid[grid.len() - 1].log10(),
            _ => -grid[0].log10(),
        };
        window = window.min(span - shift_max as f64 * h / LN10).max(1.0);
    }
    let nt = (window * LN10 / h).round() as usize;
    let table: Vec<f64> = (0..=nt + shift_max).map(|k| spec.ln_value(sign * k as f64 * h)).collect();
    let degenerate = table.iter().any(|v| !v.is_finite());
    let mut ln_s = Vec::with_capacity(cfg.steps);
    let mut ln_upper = Vec::with_capacity(cfg.steps);
    let mut ln_lower = Vec::with_capacity(cfg.steps);
    for j in 1..=cfg.steps {
        let sh = j * cfg.per_octave;
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for k in 0..=nt {
            let r = table[k + sh] - table[k];
            if r.is_nan() {
                continue;
            }
            hi = hi.max(r);
            lo = lo.min(r);
        }
        ln_s.push(sign * j as f64 * LN2);
        ln_upper.push(hi);
        ln_lower.push(lo);
    }
    DilationQuantities { ln_s, ln_upper, ln_lower, degenerate, window_decades: window }
}

/// Fit `y ≈ a·x + b·ln x + c` over the last half of the first `m` points;
/// returns `(a, rms, a_plain)` where `a_plain` drops the log column.
fn slope_fit(x: &[f64], y: &[f64], m: usize) -> (f64, f64, f64) {
    let start = m / 2;
    let xs = &x[start..m];
    let ys = &y[start..m];
    let ones = vec![1.0; xs.len()];
    let logs: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let (coef, rms) = least_squares(&[xs.to_vec(), logs, ones.clone()], ys);
    let (plain, _) = least_squares(&[xs.to_vec(), ones], ys);
    (coef[0], rms, plain[0])
}

fn estimate(x: &[f64], y: &[f64], side: Side, degenerate: bool) -> IndexEstimate {
    if degenerate || y.iter().any(|v| !v.is_finite()) {
        return IndexEstimate {
            point: f64::INFINITY,
            rigorous_bound: f64::INFINITY,
            side,
            decades_used: 0.0,
            fit_residual: f64::INFINITY,
            uncertainty: f64::INFINITY,
            degenerate: true,
        };
    }
    let m = x.len();
    let (a_full, rms, a_plain) = slope_fit(x, y, m);
    let (a_part, _, _) = slope_fit(x, y, (3 * m) / 4);
    // one-sided bound from the deepest evaluated point
    let bound = y[m - 1] / x[m - 1];
    IndexEstimate {
        point: a_full,
        rigorous_bound: bound,
        side,
        decades_used: x[m - 1] / LN10,
        fit_residual: rms,
        // a log factor shows up as disagreement between the two fits; its
        // effect on the limit is not resolved by any finite range
        uncertainty: (a_full - a_part).abs().max(rms).max((a_full - a_plain).abs()),
        degenerate: false,
    }
}

/// `(α, β)` at zero. The bound on α is a lower bound, the bound on β an
/// upper bound; both are exact statements about the dilation quantities over
/// the configured `t` window, which is itself a truncation.
pub fn index_at_zero(psi: &OrliczSpec) -> (IndexEstimate, IndexEstimate) {
    index_at_zero_with(psi, IndexConfig::default())
}

pub fn index_at_zero_with(psi: &OrliczSpec, cfg: IndexConfig) -> (IndexEstimate, IndexEstimate) {
    let run = |c: IndexConfig| {
        let q = dilation_quantities(psi, Regime::AtZero, c);
        // x = -ln s > 0 and ψ(st)/ψ(t) ≈ s^index, so ln D = -index·x
        let x: Vec<f64> = q.ln_s.iter().map(|v| -v).collect();
        let up: Vec<f64> = q.ln_upper.iter().map(|v| -v).collect();
        let lo: Vec<f64> = q.ln_lower.iter().map(|v| -v).collect();
        let alpha = estimate(&x, &up, Side::Lower, q.degenerate);
        let beta = estimate(&x, &lo, Side::Upper, q.degenerate);
        (alpha, beta, q.window_decades)
    };
    window_checked(run, cfg)
}

/// Runs an estimate on the full `t` window and on half of it. A sup or inf
/// attained at the window edge drifts like `1/width`, so twice the drift is
/// folded into the uncertainty.
fn window_checked<F>(run: F, cfg: IndexConfig) -> (IndexEstimate, IndexEstimate)
where
    F: Fn(IndexConfig) -> (IndexEstimate, IndexEstimate, f64),
{
    let (mut a, mut b, w) = run(cfg);
    let (ah, bh, _) = run(IndexConfig { window_decades: w / 2.0, ..cfg });
    if !a.degenerate {
        a.uncertainty = a.uncertainty.max(2.0 * (a.point - ah.point).abs());
    }
    if !b.degenerate {
        b.uncertainty = b.uncertainty.max(2.0 * (b.point - bh.point).abs());
    }
    (a, b)
}

/// `(α, β)` at infinity. The bound on α is a lower bound, the bound on β an
/// upper bound.
pub fn index_at_infinity(m: &OrliczSpec) -> (IndexEstimate, IndexEstimate) {
    index_at_infinity_with(m, IndexConfig::default())
}

pub fn index_at_infinity_with(m: &OrliczSpec, cfg: IndexConfig) -> (IndexEstimate, IndexEstimate) {
    let run = |c: IndexConfig| {
        let q = dilation_quantities(m, Regime::AtInfinity, c);
        let alpha = estimate(&q.ln_s, &q.ln_lower, Side::Lower, q.degenerate);
        let beta = estimate(&q.ln_s, &q.ln_upper, Side::Upper, q.degenerate);
        (alpha, beta, q.window_decades)
    };
    window_checked(run, cfg)
}
