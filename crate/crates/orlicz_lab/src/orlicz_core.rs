//! Orlicz functions as first-class values.
//!
//! An [`OrliczSpec`] is a closed-form or tabulated nondecreasing function on
//! `[0, ∞)` vanishing at zero, carried together with a multiplicative scale
//! (chosen at construction so that `value(1) = 1`). All evaluation is done in
//! log coordinates internally, which keeps very small and very large
//! arguments usable without overflow.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::quad::{integrate_segments, QuadOptions};

const E: f64 = std::f64::consts::E;

/// Shape of an Orlicz function before scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OrliczKind {
    /// `u^p`.
    Power { p: f64 },
    /// `u^p ln^a(e/u)` on (0,1]; on [1,∞) `u^p (ln(e+u)/ln(e+1))^a`, the
    /// constant making the two branches meet at 1.
    PowerLog { p: f64, a: f64 },
    /// `low` on [0, knot]; beyond the knot `high`, rescaled to be continuous.
    Spliced { low: Box<OrliczSpec>, high: Box<OrliczSpec>, knot: f64 },
    /// Monotone interpolation in log-log coordinates through
    /// `(grid[i], values[i])`; outside the grid, power extrapolation with the
    /// given exponents (or a range error when absent).
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exp_zero: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exp_inf: Option<f64>,
    },
}

fn nan_scale() -> f64 {
    f64::NAN
}

/// An Orlicz function model: `value(u) = scale · raw(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrliczSpec {
    #[serde(flatten)]
    pub kind: OrliczKind,
    /// Multiplicative scale; absent in JSON means "normalize at load".
    #[serde(default = "nan_scale")]
    pub scale: f64,
    /// Set when the function is known to be convex.
    #[serde(default)]
    pub convex: bool,
}

/// Result of a Young conjugate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "lowercase")]
pub enum ConjugateValue {
    Finite(f64),
    /// The supremum is not attained inside the representable range.
    Divergent,
}

impl ConjugateValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            ConjugateValue::Finite(v) => Some(v),
            ConjugateValue::Divergent => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    AtZero,
    AtInfinity,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Estimate {
    /// sup of value(2u)/value(u) over the regime grid.
    pub constant: f64,
    pub argmax: f64,
    /// The running sup kept growing over the last three decades.
    pub unbounded: bool,
    pub decades: u32,
    pub points_per_decade: usize,
}

impl Delta2Estimate {
    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && !self.unbounded
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityCertificate {
    pub holds: bool,
    /// Grid sup of the defining ratio over the full window.
    pub constant: f64,
    /// Power-law growth rate of the sup as the window deepens (per unit of
    /// ln-depth, i.e. an exponent); logarithmic growth shows up as a small
    /// positive number.
    pub growth_exponent: f64,
    pub witness: (f64, f64),
    pub decades: u32,
}

/// Regularized function plus the doubling constant used in its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularized {
    pub spec: OrliczSpec,
    pub doubling_constant: f64,
}

/// Tolerance on the exponent growth rate below which a sup is considered
/// free of power-law growth.
pub const GROWTH_TOL: f64 = 0.05;

/// Cap on the doubling constant accepted by [`OrliczSpec::regularize`].
pub const DEFAULT_DELTA2_CAP: f64 = 1e4;

/// Monotone (Fritsch–Carlson limited) cubic Hermite interpolation of
/// `ln v` against `ln u` on the cell `[grid[j-1], grid[j]]`.
fn hermite_log_log(grid: &[f64], values: &[f64], j: usize, lu: f64) -> f64 {
    let n = grid.len();
    let x = |i: usize| grid[i].ln();
    let y = |i: usize| values[i].ln();
    let secant = |i: usize| (y(i + 1) - y(i)) / (x(i + 1) - x(i));
    let (x0, x1) = (x(j - 1), x(j));
    let (y0, y1) = (y(j - 1), y(j));
    let d = secant(j - 1);
    let node_slope = |i: usize| -> f64 {
        if i == 0 {
            secant(0)
        } else if i == n - 1 {
            secant(n - 2)
        } else {
            let (a, b) = (secant(i - 1), secant(i));
            if a * b <= 0.0 {
                0.0
            } else {
                0.5 * (a + b)
            }
        }
    };
    let (mut m0, mut m1) = (node_slope(j - 1), node_slope(j));
    if d == 0.0 {
        return y0;
    }
    let (al, be) = (m0 / d, m1 / d);
    let r = al * al + be * be;
    if r > 9.0 {
        let tau = 3.0 / r.sqrt();
        m0 *= tau;
        m1 *= tau;
    }
    let h = x1 - x0;
    let t = ((lu - x0) / h).clamp(0.0, 1.0);
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * m1
}

fn ln_log_e_plus(lu: f64) -> f64 {
    // ln(ln(e + u)) for u = exp(lu), safe for huge lu.
    let l = if lu > 30.0 { lu + (E * (-lu).exp()).ln_1p() } else { (E + lu.exp()).ln() };
    l.ln()
}

impl OrliczSpec {
    fn build(kind: OrliczKind, convex: bool) -> OrliczSpec {
        let mut s = OrliczSpec { kind, scale: 1.0, convex };
        s.scale = (-s.raw_ln(0.0)).exp();
        s
    }

    /// `u^p`, normalized.
    pub fn power(p: f64) -> OrliczSpec {
        OrliczSpec::build(OrliczKind::Power { p }, p >= 1.0)
    }

    /// `u^p ln^a(·)` with the two log branches, normalized.
    pub fn power_log(p: f64, a: f64) -> OrliczSpec {
        OrliczSpec::build(OrliczKind::PowerLog { p, a }, false)
    }

    pub fn spliced(low: OrliczSpec, high: OrliczSpec, knot: f64) -> Result<OrliczSpec> {
        if !(knot > 0.0 && knot.is_finite()) {
            return Err(LabError::InvalidInput(format!("splice knot must be positive, got {knot}")));
        }
        Ok(OrliczSpec::build(OrliczKind::Spliced { low: Box::new(low), high: Box::new(high), knot }, false))
    }

    /// Tabulated spec, validated and normalized.
    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>, exp_zero: Option<f64>, exp_inf: Option<f64>) -> Result<OrliczSpec> {
        let s = OrliczSpec { kind: OrliczKind::Tabulated { grid, values, exp_zero, exp_inf }, scale: 1.0, convex: false };
        s.validate_shape()?;
        let mut s = s;
        if s.try_eval(1.0).is_err() {
            return Err(LabError::InvalidInput("tabulated data must cover u = 1 for normalization".into()));
        }
        s.scale = (-s.raw_ln(0.0)).exp();
        Ok(s)
    }

    /// Tabulated spec kept at scale 1 (no normalization).
    pub fn tabulated_raw(grid: Vec<f64>, values: Vec<f64>, exp_zero: Option<f64>, exp_inf: Option<f64>) -> Result<OrliczSpec> {
        let s = OrliczSpec { kind: OrliczKind::Tabulated { grid, values, exp_zero, exp_inf }, scale: 1.0, convex: false };
        s.validate_shape()?;
        Ok(s)
    }

    /// Copy rescaled so that `value(1) = 1`.
    pub fn normalized(&self) -> OrliczSpec {
        let mut s = self.clone();
        s.scale = (-self.raw_ln(0.0)).exp();
        s
    }

    pub fn with_convex(mut self, convex: bool) -> OrliczSpec {
        self.convex = convex;
        self
    }

    fn validate_shape(&self) -> Result<()> {
        match &self.kind {
            OrliczKind::Power { p } => {
                if !(*p > 0.0 && p.is_finite()) {
                    return Err(LabError::InvalidInput(format!("power exponent must be positive, got {p}")));
                }
            }
            OrliczKind::PowerLog { p, a } => {
                if !(*p > 0.0 && p.is_finite() && a.is_finite()) {
                    return Err(LabError::InvalidInput(format!("bad power-log parameters p={p}, a={a}")));
                }
            }
            OrliczKind::Spliced { low, high, knot } => {
                if !(*knot > 0.0 && knot.is_finite()) {
                    return Err(LabError::InvalidInput(format!("splice knot must be positive, got {knot}")));
                }
                low.validate_shape()?;
                high.validate_shape()?;
            }
            OrliczKind::Tabulated { grid, values, exp_zero, exp_inf } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(LabError::InvalidInput("tabulated grid and values need equal length ≥ 2".into()));
                }
                for w in grid.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(LabError::Invariant(format!("tabulated grid not strictly increasing at {}", w[1])));
                    }
                }
                if grid[0] <= 0.0 {
                    return Err(LabError::InvalidInput("tabulated grid must be positive".into()));
                }
                for (i, w) in values.windows(2).enumerate() {
                    if w[1] < w[0] {
                        return Err(LabError::Invariant(format!(
                            "tabulated values decrease between u={} and u={}",
                            grid[i],
                            grid[i + 1]
                        )));
                    }
                }
                if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(LabError::InvalidInput("tabulated values must be positive and finite".into()));
                }
                for e in [exp_zero, exp_inf].into_iter().flatten() {
                    if !(*e > 0.0 && e.is_finite()) {
                        return Err(LabError::InvalidInput(format!("extrapolation exponent must be positive, got {e}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Full validation: shape checks plus the normalization invariant when
    /// the scale is set.
    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(LabError::InvalidInput(format!("scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }

    /// Parses a JSON spec; a missing `scale` means normalize at `u = 1`.
    pub fn from_json(text: &str) -> Result<OrliczSpec> {
        let mut s: OrliczSpec = serde_json::from_str(text)
            .map_err(|e| LabError::InvalidInput(format!("spec parse error at line {} column {}: {e}", e.line(), e.column())))?;
        s.fill_scales();
        s.validate()?;
        Ok(s)
    }

    fn fill_scales(&mut self) {
        if let OrliczKind::Spliced { low, high, .. } = &mut self.kind {
            low.fill_scales();
            high.fill_scales();
        }
        if self.scale.is_nan() {
            self.scale = 1.0;
            self.scale = (-self.raw_ln(0.0)).exp();
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Argument range where evaluation is defined (closed-form kinds: all of
    /// `[0, ∞)`).
    pub fn domain(&self) -> (f64, f64) {
        match &self.kind {
            OrliczKind::Tabulated { grid, exp_zero, exp_inf, .. } => (
                if exp_zero.is_some() { 0.0 } else { grid[0] },
                if exp_inf.is_some() { f64::INFINITY } else { grid[grid.len() - 1] },
            ),
            OrliczKind::Spliced { low, high, knot } => {
                let (l0, _) = low.domain();
                let (_, h1) = high.domain();
                let _ = knot;
                (l0, h1)
            }
            _ => (0.0, f64::INFINITY),
        }
    }

    /// Whether every nonnegative argument is evaluable.
    pub fn has_full_range(&self) -> bool {
        self.domain() == (0.0, f64::INFINITY)
    }

    pub fn require_full_range(&self) -> Result<()> {
        if self.has_full_range() {
            Ok(())
        } else {
            let (lo, hi) = self.domain();
            Err(LabError::Range { arg: f64::NAN, lo, hi })
        }
    }

    /// ln of the unscaled function at `u = exp(lu)`.
    fn raw_ln(&self, lu: f64) -> f64 {
        match &self.kind {
            OrliczKind::Power { p } => p * lu,
            OrliczKind::PowerLog { p, a } => {
                if lu <= 0.0 {
                    p * lu + a * (1.0 - lu).ln()
                } else {
                    p * lu + a * (ln_log_e_plus(lu) - ln_log_e_plus(0.0))
                }
            }
            OrliczKind::Spliced { low, high, knot } => {
                let lk = knot.ln();
                if lu <= lk {
                    low.ln_value(lu)
                } else {
                    high.ln_value(lu) + low.ln_value(lk) - high.ln_value(lk)
                }
            }
            OrliczKind::Tabulated { grid, values, exp_zero, exp_inf } => {
                let n = grid.len();
                let u = lu.exp();
                if u < grid[0] {
                    let e = exp_zero.unwrap_or(f64::NAN);
                    return values[0].ln() + e * (lu - grid[0].ln());
                }
                if u > grid[n - 1] {
                    let e = exp_inf.unwrap_or(f64::NAN);
                    return values[n - 1].ln() + e * (lu - grid[n - 1].ln());
                }
                let j = grid.partition_point(|g| *g <= u).clamp(1, n - 1);
                hermite_log_log(grid, values, j, lu)
            }
        }
    }

    /// ln value(exp(lu)).
    #[inline]
    pub fn ln_value(&self, lu: f64) -> f64 {
        if lu == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.scale.ln() + self.raw_ln(lu)
    }

    /// value(u); `u = 0` maps to 0. Out-of-range tabulated arguments yield
    /// NaN; use [`OrliczSpec::try_eval`] for a checked evaluation.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u.is_infinite() {
            return f64::INFINITY;
        }
        self.ln_value(u.ln()).exp()
    }

    pub fn try_eval(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(LabError::InvalidInput(format!("argument must be nonnegative, got {u}")));
        }
        let (lo, hi) = self.domain();
        if u > 0.0 && (u < lo || u > hi) {
            return Err(LabError::Range { arg: u, lo, hi });
        }
        Ok(self.eval(u))
    }

    /// ln of the inverse: returns ln u with value(u) = exp(lv).
    pub fn ln_inverse(&self, lv: f64) -> f64 {
        if lv == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let g = |lu: f64| self.ln_value(lu) - lv;
        let mut lo = -1.0;
        let mut hi = 1.0;
        let mut step = 1.0;
        while g(lo) > 0.0 {
            step *= 2.0;
            lo -= step;
            if lo < -1e6 {
                return f64::NEG_INFINITY;
            }
        }
        step = 1.0;
        while g(hi) < 0.0 {
            step *= 2.0;
            hi += step;
            if hi > 1e6 {
                return f64::INFINITY;
            }
        }
        let tol = 1e-15 * (1.0 + lo.abs().max(hi.abs()));
        crate::quad::bisect_increasing(g, lo, hi, tol).0
    }

    /// The inverse function: `u` with `|value(u) - v| ≤ 1e-10·max(1,v)`.
    pub fn inverse(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        self.ln_inverse(v.ln()).exp()
    }

    /// Local elasticity d ln value / d ln u at `u = exp(lu)`.
    pub fn elasticity(&self, lu: f64) -> f64 {
        let h = 1e-4;
        (self.ln_value(lu + h) - self.ln_value(lu - h)) / (2.0 * h)
    }

    /// Young conjugate `sup_t (u t − value(t))`.
    pub fn conjugate(&self, u: f64) -> ConjugateValue {
        legendre(&|t: f64| self.eval(t), u)
    }

    /// Conjugate of the conjugate, evaluated pointwise.
    pub fn biconjugate(&self, u: f64) -> ConjugateValue {
        let conj = |s: f64| match self.conjugate(s) {
            ConjugateValue::Finite(v) => v,
            ConjugateValue::Divergent => f64::INFINITY,
        };
        legendre(&conj, u)
    }

    /// sup of value(2u)/value(u) over a log grid of the regime.
    pub fn delta2_constant(&self, regime: Regime, decades: u32) -> Delta2Estimate {
        let (lo_dec, hi_dec): (i32, i32) = match regime {
            Regime::AtZero => (-(decades as i32), 0),
            Regime::AtInfinity => (0, decades as i32),
            Regime::Global => (-(decades as i32), decades as i32),
        };
        let (dlo, dhi) = self.domain();
        let lo_dec = if dlo > 0.0 { lo_dec.max(dlo.log10().ceil() as i32) } else { lo_dec };
        let hi_dec = if dhi.is_finite() { hi_dec.min((dhi / 2.0).log10().floor() as i32) } else { hi_dec };
        let hi_dec = hi_dec.max(lo_dec + 1);
        let ratio = |lu: f64| (self.ln_value(lu + std::f64::consts::LN_2) - self.ln_value(lu)).exp();
        let sweep = |n: usize| -> (f64, f64, Vec<f64>) {
            let span = (hi_dec - lo_dec).max(1) as usize;
            let total = span * n;
            // Windows are decades, or quarters of the range when it is shorter.
            let windows = span.max(4);
            let mut best = f64::NEG_INFINITY;
            let mut arg = 1.0;
            let mut per_decade = vec![f64::NEG_INFINITY; windows];
            for i in 0..=total {
                let x = lo_dec as f64 + i as f64 / n as f64;
                let lu = x * std::f64::consts::LN_10;
                let r = ratio(lu);
                let r = if r.is_nan() { f64::INFINITY } else { r };
                if r > best {
                    best = r;
                    arg = lu.exp();
                }
                let d = (i * windows / total).min(windows - 1);
                per_decade[d] = per_decade[d].max(r);
            }
            (best, arg, per_decade)
        };
        let mut n = 8;
        let (mut best, mut arg, mut per) = sweep(n);
        while n < 1024 {
            let (b2, a2, p2) = sweep(2 * n);
            n *= 2;
            let done = (b2 - best).abs() <= 1e-4 * b2.abs();
            best = b2;
            arg = a2;
            per = p2;
            if done {
                break;
            }
        }
        // Running sup read from the outer end inward toward the regime.
        let outward: Vec<f64> = match regime {
            Regime::AtZero => per.iter().rev().copied().collect(),
            _ => per.clone(),
        };
        let mut running = Vec::with_capacity(outward.len());
        let mut acc = f64::NEG_INFINITY;
        for v in &outward {
            acc = acc.max(*v);
            running.push(acc);
        }
        let k = running.len();
        let unbounded = !best.is_finite()
            || (k >= 4 && (k - 3..k).all(|i| running[i] > running[i - 1] * 1.01));
        Delta2Estimate {
            constant: best,
            argmax: arg,
            unbounded,
            decades: (hi_dec - lo_dec).max(0) as u32,
            points_per_decade: n,
        }
    }

    /// p-convexity certificate at zero: C = sup ψ(st)/(s^p ψ(t)) over
    /// (0,1]² (or, with `concave`, sup s^p ψ(t)/ψ(st)).
    pub fn p_convexity_check(&self, p: f64, concave: bool) -> ConvexityCertificate {
        let ratio = |ls: f64, lt: f64| {
            let r = self.ln_value(ls + lt) - p * ls - self.ln_value(lt);
            if concave {
                -r
            } else {
                r
            }
        };
        sup_growth(&ratio, 12)
    }

    /// Checks `value(u)/u` is nondecreasing on a log grid over `[lo, hi]`.
    pub fn quasi_convex_violation(&self, lo: f64, hi: f64, points: usize) -> Option<f64> {
        let (a, b) = (lo.ln(), hi.ln());
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=points {
            let lu = a + (b - a) * i as f64 / points as f64;
            let q = self.ln_value(lu) - lu;
            if q < prev - 1e-9 * (1.0 + prev.abs()) {
                return Some(lu.exp());
            }
            prev = prev.max(q);
        }
        None
    }

    /// Midpoint-convexity scan over all pairs of a log grid; returns the
    /// first violating pair.
    pub fn midpoint_convexity_violation(&self, lo: f64, hi: f64, points: usize, tol: f64) -> Option<(f64, f64)> {
        let grid: Vec<f64> = (0..points)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (points - 1) as f64).exp())
            .collect();
        for i in 0..points {
            for j in i + 1..points {
                let (a, b) = (grid[i], grid[j]);
                let mid = self.eval(0.5 * (a + b));
                let chord = 0.5 * (self.eval(a) + self.eval(b));
                if mid > chord * (1.0 + tol) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Regularization `t ↦ ∫_0^t value(u) du/u` with the default cap.
    pub fn regularize(&self) -> Result<OrliczSpec> {
        Ok(self.regularize_with(DEFAULT_DELTA2_CAP)?.spec)
    }

    /// Regularization with an explicit cap on the doubling constant. The
    /// result is not renormalized, so `K⁻¹·raw ≤ result ≤ raw` holds as is.
    pub fn regularize_with(&self, cap: f64) -> Result<Regularized> {
        if let OrliczKind::Power { p } = self.kind {
            let mut spec = OrliczSpec::power(p);
            spec.scale = self.scale / p;
            spec.convex = true;
            return Ok(Regularized { spec, doubling_constant: 2f64.powf(p) });
        }
        self.require_full_range()?;
        if let Some(u) = self.quasi_convex_violation(1e-12, 1e12, 2400) {
            return Err(LabError::Invariant(format!("value(u)/u decreases near u = {u:.6e}")));
        }
        let d2 = self.delta2_constant(Regime::Global, 12);
        if !d2.is_finite() || d2.constant > cap {
            return Err(LabError::NotRegularizable { constant: d2.constant, cap });
        }
        const LO: f64 = -40.0 * std::f64::consts::LN_10;
        const HI: f64 = 40.0 * std::f64::consts::LN_10;
        const PER_DECADE: usize = 64;
        let n = 80 * PER_DECADE;
        let mut nodes: Vec<f64> = (0..=n).map(|i| LO + (HI - LO) * i as f64 / n as f64).collect();
        for k in self.knots() {
            let lk = k.ln();
            if lk > LO && lk < HI {
                nodes.push(lk);
            }
        }
        nodes.sort_by(|a, b| a.total_cmp(b));
        nodes.dedup();
        let e0 = self.elasticity(LO);
        let mut acc = self.ln_value(LO).exp() / e0;
        let mut grid = Vec::with_capacity(nodes.len());
        let mut values = Vec::with_capacity(nodes.len());
        grid.push(LO.exp());
        values.push(acc);
        let integrand = |s: f64| self.ln_value(s).exp();
        let opts = QuadOptions { rel_tol: 1e-12, ..Default::default() };
        for w in nodes.windows(2) {
            acc += integrate_segments(&integrand, &[w[0], w[1]], opts).value;
            grid.push(w[1].exp());
            values.push(acc);
        }
        let m = grid.len();
        let exp_zero = (values[1].ln() - values[0].ln()) / (grid[1].ln() - grid[0].ln());
        let exp_inf = (values[m - 1].ln() - values[m - 2].ln()) / (grid[m - 1].ln() - grid[m - 2].ln());
        let mut spec = OrliczSpec::tabulated_raw(grid, values, Some(exp_zero), Some(exp_inf))?;
        spec.convex = true;
        Ok(Regularized { spec, doubling_constant: d2.constant })
    }

    /// Points where the closed form switches branch.
    pub fn knots(&self) -> Vec<f64> {
        match &self.kind {
            OrliczKind::PowerLog { .. } => vec![1.0],
            OrliczKind::Spliced { low, high, knot } => {
                let mut k = vec![*knot];
                k.extend(low.knots().into_iter().filter(|x| x < knot));
                k.extend(high.knots().into_iter().filter(|x| x > knot));
                k
            }
            _ => vec![],
        }
    }
}

/// Young–Legendre transform `sup_{t>0} (u t − f(t))` of a convex `f` with
/// `f(0) = 0`: a scan over `ln t ∈ [-200, 200]` followed by golden-section
/// refinement of the bracketing cell.
pub fn legendre(f: &dyn Fn(f64) -> f64, u: f64) -> ConjugateValue {
    const LO: f64 = -200.0;
    const HI: f64 = 200.0;
    const STEP: f64 = 0.25;
    let g = |lt: f64| {
        let t = lt.exp();
        let v = u * t - f(t);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let n = ((HI - LO) / STEP) as usize;
    let mut best = f64::NEG_INFINITY;
    let mut bi = 0;
    let mut prev = f64::NEG_INFINITY;
    let mut last_increasing = false;
    for i in 0..=n {
        let v = g(LO + STEP * i as f64);
        if v > best {
            best = v;
            bi = i;
        }
        last_increasing = v > prev;
        prev = v;
    }
    if bi == n && last_increasing {
        return ConjugateValue::Divergent;
    }
    if best <= 0.0 && bi == 0 {
        return ConjugateValue::Finite(best.max(0.0));
    }
    let mut a = LO + STEP * (bi.saturating_sub(1)) as f64;
    let mut b = LO + STEP * (bi + 1).min(n) as f64;
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..120 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d);
        }
    }
    ConjugateValue::Finite(best.max(gc).max(gd).max(0.0))
}

/// Grid sup over `(ls, lt) ∈ [-D ln10, 0]²` of `exp(lr(ls, lt))` with
/// refinement doubling, plus its growth rate as the window deepens.
pub(crate) fn sup_growth(lr: &dyn Fn(f64, f64) -> f64, decades: u32) -> ConvexityCertificate {
    let sup_over = |dec: f64, per: usize| -> (f64, (f64, f64)) {
        let m = (dec * per as f64).round() as usize;
        let mut best = f64::NEG_INFINITY;
        let mut wit = (1.0, 1.0);
        for i in 0..=m {
            let ls = -(i as f64) / per as f64 * std::f64::consts::LN_10;
            for j in 0..=m {
                let lt = -(j as f64) / per as f64 * std::f64::consts::LN_10;
                let r = lr(ls, lt);
                if r > best {
                    best = r;
                    wit = (ls.exp(), lt.exp());
                }
            }
        }
        (best, wit)
    };
    let converge = |dec: f64| -> (f64, (f64, f64)) {
        let mut per = 4;
        let (mut b, mut w) = sup_over(dec, per);
        while per < 64 {
            per *= 2;
            let (b2, w2) = sup_over(dec, per);
            let done = (b2 - b).abs() <= 1e-4;
            b = b2;
            w = w2;
            if done {
                break;
            }
        }
        (b, w)
    };
    let d = decades as f64;
    let (l_full, wit) = converge(d);
    let (l_three_q, _) = converge(0.75 * d);
    let growth = (l_full - l_three_q) / (0.25 * d * std::f64::consts::LN_10);
    ConvexityCertificate {
        holds: l_full.is_finite() && growth < GROWTH_TOL,
        constant: l_full.exp(),
        growth_exponent: growth,
        witness: wit,
        decades,
    }
}
