//! Distribution functions, nonincreasing rearrangements, dilations, dilation
//! functions and the disjoint sum `a ⊗̄ f` of scaled copies.
//!
//! Functions live on `(0, 1]` or on a half-line and are addressed by depth
//! `d = -ln t`; every evaluation returns `ln |x(e^{-d})|` (`-inf` where the
//! function vanishes). Signed data is reduced to `|x|` on ingestion.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::orlicz_core::OrliczSpec;
use crate::quad::DEFAULT_W_HI;

const LN10: f64 = std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    UnitInterval,
    HalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotone {
    Nonincreasing,
    General,
}

/// Exact descriptions that can be re-evaluated at any depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ClosedForm {
    /// `c` on `(0, 1]`.
    Constant { c: f64 },
    /// `c · t^{-r} · ln^b(e/t)` on `(0, 1]`.
    PowerLog { c: f64, r: f64, b: f64 },
    /// `levels[i]` on `(edges[i], edges[i+1]]`, with `edges[0] = 0`.
    Steps { edges: Vec<f64>, levels: Vec<f64> },
    /// `1/ψ^{-1}(t)` on `(0, 1]`.
    ReciprocalInverse { spec: OrliczSpec },
    /// The right-continuous rearrangement `s ↦ inf{τ : n(τ) ≤ s}`.
    FromDistribution { dist: DistributionFn },
    /// `t ↦ base(t/τ)`.
    Dilation { base: Box<ClosedForm>, tau: f64 },
    /// `factor · base`.
    Scaled { base: Box<ClosedForm>, factor: f64 },
}

impl ClosedForm {
    pub fn power_log(c: f64, r: f64, b: f64) -> ClosedForm {
        ClosedForm::PowerLog { c: c.abs(), r, b }
    }

    pub fn steps(edges: Vec<f64>, levels: Vec<f64>) -> Result<ClosedForm> {
        if edges.len() != levels.len() + 1 || edges.is_empty() || edges[0] != 0.0 {
            return Err(LabError::InvalidInput("steps need edges = [0, ...] with one more entry than levels".into()));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::InvalidInput("step edges must be strictly increasing".into()));
        }
        Ok(ClosedForm::Steps { edges, levels: levels.into_iter().map(f64::abs).collect() })
    }

    /// ln |x(e^{-d})|.
    pub fn ln_at_depth(&self, d: f64) -> f64 {
        match self {
            ClosedForm::Constant { c } => {
                if d >= 0.0 {
                    c.abs().ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            ClosedForm::PowerLog { c, r, b } => {
                if d >= 0.0 {
                    c.ln() + r * d + b * d.ln_1p()
                } else {
                    f64::NEG_INFINITY
                }
            }
            ClosedForm::Steps { edges, levels } => {
                let t = (-d).exp();
                if t <= 0.0 {
                    return levels.first().map_or(f64::NEG_INFINITY, |v| v.ln());
                }
                // cell i holds (edges[i], edges[i+1]]
                let i = edges.partition_point(|e| *e < t);
                if i == 0 || i > levels.len() {
                    f64::NEG_INFINITY
                } else {
                    levels[i - 1].ln()
                }
            }
            ClosedForm::ReciprocalInverse { spec } => {
                if d >= 0.0 {
                    -spec.ln_inverse(-d)
                } else {
                    f64::NEG_INFINITY
                }
            }
            ClosedForm::FromDistribution { dist } => dist.ln_rearrangement(d),
            ClosedForm::Dilation { base, tau } => base.ln_at_depth(d + tau.ln()),
            ClosedForm::Scaled { base, factor } => factor.abs().ln() + base.ln_at_depth(d),
        }
    }

    /// Right end of the support.
    pub fn support_end(&self) -> f64 {
        match self {
            ClosedForm::Steps { edges, .. } => edges[edges.len() - 1],
            ClosedForm::FromDistribution { dist } => dist.total,
            ClosedForm::Dilation { base, tau } => tau * base.support_end(),
            ClosedForm::Scaled { base, .. } => base.support_end(),
            _ => 1.0,
        }
    }

    /// Depths where the function has jumps or kinks.
    pub fn breaks(&self) -> Vec<f64> {
        match self {
            ClosedForm::Steps { edges, .. } => edges.iter().filter(|e| **e > 0.0).map(|e| -e.ln()).collect(),
            ClosedForm::FromDistribution { dist } => dist.jump_depths(200),
            ClosedForm::Dilation { base, tau } => base.breaks().into_iter().map(|b| b - tau.ln()).collect(),
            ClosedForm::Scaled { base, .. } => base.breaks(),
            _ => vec![0.0],
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        match self {
            ClosedForm::Constant { .. } => true,
            ClosedForm::PowerLog { r, b, .. } => *r >= 0.0 && r + b >= 0.0,
            ClosedForm::Steps { levels, .. } => levels.windows(2).all(|w| w[1] <= w[0]),
            ClosedForm::ReciprocalInverse { .. } | ClosedForm::FromDistribution { .. } => true,
            ClosedForm::Dilation { base, .. } | ClosedForm::Scaled { base, .. } => base.is_nonincreasing(),
        }
    }
}

/// Log-uniform grid parameters `t_j = t_max · exp(-j h)` down to `t_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub t_min: f64,
    pub per_decade: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { t_max: 1.0, t_min: 1e-12, per_decade: 16 }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let h = LN10 / self.per_decade as f64;
        let span = (self.t_max / self.t_min).ln();
        let j = (span / h).round() as usize;
        (0..=j).map(|i| self.t_max * (-(i as f64) * h).exp()).collect()
    }
}

/// A nonnegative function sampled on a log-uniform grid, optionally backed
/// by an exact closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledRealFunction {
    pub domain: Domain,
    /// Abscissae, strictly decreasing toward zero.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedForm>,
    pub monotone: Monotone,
}

impl SampledRealFunction {
    /// Samples a closed form on the given grid.
    pub fn from_closed_form(cf: ClosedForm, domain: Domain, grid: GridSpec) -> SampledRealFunction {
        let pts = grid.points();
        let monotone = if cf.is_nonincreasing() { Monotone::Nonincreasing } else { Monotone::General };
        let mut f = SampledRealFunction { domain, grid: pts, values: vec![], closed_form: Some(cf), monotone };
        f.values = f.grid.iter().map(|t| f.ln_at_depth(-t.ln()).exp()).collect();
        f
    }

    /// Closed form on the default unit-interval grid.
    pub fn unit(cf: ClosedForm) -> SampledRealFunction {
        SampledRealFunction::from_closed_form(cf, Domain::UnitInterval, GridSpec::default())
    }

    /// Grid data only; values are reduced to absolute values.
    pub fn from_samples(grid: Vec<f64>, values: Vec<f64>, domain: Domain) -> Result<SampledRealFunction> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err(LabError::InvalidInput("grid and values need equal length ≥ 2".into()));
        }
        if grid.windows(2).any(|w| !(w[1] < w[0])) || grid[grid.len() - 1] <= 0.0 {
            return Err(LabError::Invariant("abscissae must be positive and strictly decreasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidInput("values must be finite".into()));
        }
        let values: Vec<f64> = values.into_iter().map(f64::abs).collect();
        let monotone = if values.windows(2).all(|w| w[1] >= w[0]) { Monotone::Nonincreasing } else { Monotone::General };
        Ok(SampledRealFunction { domain, grid, values, closed_form: None, monotone })
    }

    pub fn t_min(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Deepest depth represented: effectively unbounded for closed forms.
    pub fn max_depth(&self) -> f64 {
        if self.closed_form.is_some() {
            DEFAULT_W_HI.exp()
        } else {
            -self.t_min().ln()
        }
    }

    /// Shallowest depth of the domain (`-ln` of the right end).
    pub fn min_depth(&self) -> f64 {
        let end = match (&self.closed_form, self.domain) {
            (Some(cf), Domain::UnitInterval) => cf.support_end().min(1.0),
            (Some(cf), Domain::HalfLine) => cf.support_end(),
            (None, Domain::UnitInterval) => self.grid[0].min(1.0),
            (None, Domain::HalfLine) => self.grid[0],
        };
        -end.ln()
    }

    pub fn breaks(&self) -> Vec<f64> {
        let mut b = match &self.closed_form {
            Some(cf) => cf.breaks(),
            None => vec![],
        };
        b.push(self.min_depth());
        b
    }

    /// ln |x(e^{-d})|.
    pub fn ln_at_depth(&self, d: f64) -> f64 {
        if self.domain == Domain::UnitInterval && d < 0.0 {
            return f64::NEG_INFINITY;
        }
        if let Some(cf) = &self.closed_form {
            return cf.ln_at_depth(d);
        }
        let t = (-d).exp();
        let n = self.grid.len();
        if t > self.grid[0] || t < self.grid[n - 1] {
            return f64::NEG_INFINITY;
        }
        // grid decreasing: find j with grid[j] >= t > grid[j+1]
        let j = self.grid.partition_point(|g| *g >= t).clamp(1, n - 1) - 1;
        let (v0, v1) = (self.values[j], self.values[j + 1]);
        if v0 > 0.0 && v1 > 0.0 {
            let (d0, d1) = (-self.grid[j].ln(), -self.grid[j + 1].ln());
            let w = ((d - d0) / (d1 - d0)).clamp(0.0, 1.0);
            v0.ln() + w * (v1.ln() - v0.ln())
        } else {
            let v = if (t - self.grid[j + 1]) < (self.grid[j] - t) { v1 } else { v0 };
            v.ln()
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::INFINITY;
        }
        self.ln_at_depth(-t.ln()).exp()
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.monotone == Monotone::Nonincreasing
    }

    /// `c · x`.
    pub fn scaled(&self, c: f64) -> SampledRealFunction {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v *= c.abs());
        if let Some(cf) = &self.closed_form {
            g.closed_form = Some(ClosedForm::Scaled { base: Box::new(cf.clone()), factor: c.abs() });
        }
        g
    }

    /// CSV with header `t,value`, rows in grid order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["t", "value"]).expect("in-memory csv");
        for (t, v) in self.grid.iter().zip(&self.values) {
            w.write_record([format!("{t:e}"), format!("{v:e}")]).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8")
    }

    pub fn from_csv(text: &str, domain: Domain) -> Result<SampledRealFunction> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut grid = vec![];
        let mut values = vec![];
        for rec in r.records() {
            let rec = rec.map_err(|e| LabError::InvalidInput(format!("csv: {e}")))?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| LabError::InvalidInput("csv row needs two columns".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| LabError::InvalidInput(format!("csv number: {e}")))
            };
            grid.push(parse(0)?);
            values.push(parse(1)?);
        }
        SampledRealFunction::from_samples(grid, values, domain)
    }
}

/// Nonincreasing right-continuous distribution function `n(τ) = m{|x| > τ}`
/// stored as a table in log coordinates. Consecutive nodes are joined
/// linearly in `(ln τ, ln n)`; repeated thresholds encode jumps, the last
/// of a run being the right-continuous value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFn {
    pub ln_tau: Vec<f64>,
    pub ln_measure: Vec<f64>,
    /// `n(0+)`, the measure of the support.
    pub total: f64,
}

impl DistributionFn {
    /// Exact distribution of a step function given `(level, width)` cells.
    pub fn from_cells(cells: &[(f64, f64)]) -> DistributionFn {
        let mut c: Vec<(f64, f64)> = cells.iter().filter(|(l, w)| *l > 0.0 && *w > 0.0).map(|(l, w)| (l.abs(), *w)).collect();
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = c.iter().map(|x| x.1).sum();
        let mut ln_tau = vec![];
        let mut ln_measure = vec![];
        let mut above = total;
        let mut i = 0;
        while i < c.len() {
            let level = c[i].0;
            let mut w = 0.0;
            while i < c.len() && c[i].0 == level {
                w += c[i].1;
                i += 1;
            }
            ln_tau.push(level.ln());
            ln_measure.push(above.ln());
            above = (above - w).max(0.0);
            if i == c.len() {
                above = 0.0;
            }
            ln_tau.push(level.ln());
            ln_measure.push(above.ln());
        }
        DistributionFn { ln_tau, ln_measure, total }
    }

    /// ln n(τ) at `ln τ = y`; with `left` the left limit `n(τ-)`.
    pub fn ln_n(&self, y: f64, left: bool) -> f64 {
        let k = self.ln_tau.len();
        let i = if left {
            self.ln_tau.partition_point(|v| *v < y)
        } else {
            self.ln_tau.partition_point(|v| *v <= y)
        };
        if i == 0 {
            return self.total.ln();
        }
        if i == k {
            return f64::NEG_INFINITY;
        }
        let (x0, x1) = (self.ln_tau[i - 1], self.ln_tau[i]);
        let (m0, m1) = (self.ln_measure[i - 1], self.ln_measure[i]);
        if x1 == x0 || m0 == f64::NEG_INFINITY {
            return m0;
        }
        if m1 == f64::NEG_INFINITY {
            // a continuous table never ends in a hard zero except through a jump
            return m0;
        }
        m0 + (y - x0) / (x1 - x0) * (m1 - m0)
    }

    /// n(τ).
    pub fn n(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            return self.total;
        }
        self.ln_n(tau.ln(), false).exp()
    }

    /// ln x*(s) at `s = e^{-d}`: `inf{τ : n(τ) ≤ s}`.
    pub fn ln_rearrangement(&self, d: f64) -> f64 {
        let ls = -d;
        if self.total <= 0.0 || ls >= self.total.ln() {
            return f64::NEG_INFINITY;
        }
        let k = self.ln_tau.len();
        let i = self.ln_measure.partition_point(|m| *m > ls);
        if i == k {
            return self.ln_tau[k - 1];
        }
        if i == 0 {
            return self.ln_tau[0];
        }
        let (x0, x1) = (self.ln_tau[i - 1], self.ln_tau[i]);
        let (m0, m1) = (self.ln_measure[i - 1], self.ln_measure[i]);
        if x1 == x0 || m1 == f64::NEG_INFINITY || m1 == m0 {
            return x1;
        }
        x0 + (ls - m0) / (m1 - m0) * (x1 - x0)
    }

    /// Depths `-ln n` where the rearrangement jumps (flat runs of `n`).
    pub fn jump_depths(&self, cap: usize) -> Vec<f64> {
        let mut out = vec![];
        for w in self.ln_measure.windows(2).zip(self.ln_tau.windows(2)) {
            let (m, x) = w;
            if m[0] == m[1] && x[1] > x[0] && m[0].is_finite() {
                out.push(-m[0]);
                if out.len() >= cap {
                    break;
                }
            }
        }
        out
    }

    /// Rows `(τ, n(τ))` with finite entries, for reports and CSV.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        self.ln_tau
            .iter()
            .zip(&self.ln_measure)
            .map(|(a, b)| (a.exp(), b.exp()))
            .filter(|(a, b)| a.is_finite() && b.is_finite() && *a > 0.0)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["tau", "measure"]).expect("in-memory csv");
        for (t, n) in self.rows() {
            w.write_record([format!("{t:e}"), format!("{n:e}")]).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8")
    }

    /// The rearrangement as a function on the half-line.
    pub fn rearrangement(&self) -> SampledRealFunction {
        let end = self.total.max(1.0);
        SampledRealFunction::from_closed_form(
            ClosedForm::FromDistribution { dist: self.clone() },
            Domain::HalfLine,
            GridSpec { t_max: end, ..GridSpec::default() },
        )
    }
}

/// Finite coefficient sequence `(a_1, …, a_m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoeffSeq(pub Vec<f64>);

impl CoeffSeq {
    pub fn ones(n: usize) -> CoeffSeq {
        CoeffSeq(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Distinct nonzero absolute values with multiplicities, ascending.
    pub fn groups(&self) -> Vec<(f64, usize)> {
        let mut v: Vec<f64> = self.0.iter().map(|a| a.abs()).filter(|a| *a > 0.0).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let mut out: Vec<(f64, usize)> = vec![];
        for a in v {
            match out.last_mut() {
                Some((b, c)) if *b == a => *c += 1,
                _ => out.push((a, 1)),
            }
        }
        out
    }

    pub fn l2(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> CoeffSeq {
        CoeffSeq(self.0.iter().map(|a| a * c).collect())
    }
}

/// Depth nodes for tabulating a closed form: the breaks plus a grid uniform
/// in `ln depth`.
fn depth_nodes(f: &SampledRealFunction) -> Vec<f64> {
    let d0 = f.min_depth();
    let dmax = f.max_depth();
    let mut nodes = vec![d0];
    if f.closed_form.is_some() {
        let step = 0.01;
        let mut w = -20.0f64;
        while w <= dmax.ln() + 1e-12 {
            let d = d0.max(0.0) + w.exp();
            nodes.push(d);
            w += step;
        }
        if d0 < 0.0 {
            // half-line part above t = 1: uniform in depth
            let m = 400;
            for i in 1..m {
                nodes.push(d0 * (1.0 - i as f64 / m as f64));
            }
            nodes.push(0.0);
        }
    } else {
        nodes.extend(f.grid.iter().map(|t| -t.ln()));
    }
    nodes.extend(f.breaks().into_iter().filter(|b| *b >= d0 && *b <= dmax));
    nodes.sort_by(|a, b| a.total_cmp(b));
    nodes.dedup();
    nodes
}

/// Distribution function `n_f(τ) = m{|f| > τ}`.
pub fn distribution(f: &SampledRealFunction) -> DistributionFn {
    if let Some(ClosedForm::Steps { edges, levels }) = &f.closed_form {
        let limit = if f.domain == Domain::UnitInterval { 1.0 } else { f64::INFINITY };
        let cells: Vec<(f64, f64)> = levels
            .iter()
            .enumerate()
            .map(|(i, l)| (*l, edges[i + 1].min(limit) - edges[i].min(limit)))
            .collect();
        return DistributionFn::from_cells(&cells);
    }
    if let Some(ClosedForm::Constant { c }) = &f.closed_form {
        return DistributionFn::from_cells(&[(*c, 1.0)]);
    }
    if f.is_nonincreasing() {
        return monotone_table(f);
    }
    // general: cell summation at the midpoints of a fine depth grid
    let nodes = if f.closed_form.is_some() {
        let d0 = f.min_depth();
        let mut v: Vec<f64> = (0..=200_000).map(|i| d0 + (60.0 - d0) * i as f64 / 200_000.0).collect();
        v.extend(f.breaks());
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup();
        v
    } else {
        f.grid.iter().map(|t| -t.ln()).collect()
    };
    let mut cells = Vec::with_capacity(nodes.len());
    for w in nodes.windows(2) {
        let (ta, tb) = ((-w[0]).exp(), (-w[1]).exp());
        let v = f.ln_at_depth(0.5 * (w[0] + w[1])).exp();
        cells.push((v, ta - tb));
    }
    DistributionFn::from_cells(&cells)
}

fn monotone_table(f: &SampledRealFunction) -> DistributionFn {
    let nodes = depth_nodes(f);
    let mut ln_tau = Vec::with_capacity(nodes.len());
    let mut ln_measure = Vec::with_capacity(nodes.len());
    let mut running = f64::NEG_INFINITY;
    let mut total = 0.0;
    for d in nodes {
        let v = f.ln_at_depth(d);
        if v == f64::NEG_INFINITY || v.is_nan() {
            continue;
        }
        if ln_tau.is_empty() {
            total = (-d).exp();
        }
        running = running.max(v);
        ln_tau.push(running);
        ln_measure.push(-d);
    }
    if ln_tau.is_empty() {
        return DistributionFn { ln_tau: vec![0.0], ln_measure: vec![f64::NEG_INFINITY], total: 0.0 };
    }
    // first node: n(τ_0) is the measure strictly above the minimum level
    DistributionFn { ln_tau, ln_measure, total }
}

/// Nonincreasing rearrangement `f*`, equimeasurable with `|f|`.
pub fn rearrangement(f: &SampledRealFunction) -> SampledRealFunction {
    if f.is_nonincreasing() {
        return f.clone();
    }
    let grid = GridSpec { t_max: f.grid[0], t_min: f.t_min(), per_decade: 16 };
    if let Some(ClosedForm::Steps { edges, levels }) = &f.closed_form {
        let mut cells: Vec<(f64, f64)> = levels.iter().enumerate().map(|(i, l)| (*l, edges[i + 1] - edges[i])).collect();
        cells.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut e = vec![0.0];
        let mut lv = vec![];
        for (l, w) in cells {
            e.push(e[e.len() - 1] + w);
            lv.push(l);
        }
        let cf = ClosedForm::Steps { edges: e, levels: lv };
        let mut g = SampledRealFunction::from_closed_form(cf, f.domain, grid);
        g.monotone = Monotone::Nonincreasing;
        return g;
    }
    let dist = distribution(f);
    let mut g = SampledRealFunction::from_closed_form(ClosedForm::FromDistribution { dist }, f.domain, grid);
    if f.closed_form.is_none() {
        // keep the representation grid-only so its truncation stays visible
        g.closed_form = None;
    }
    g.monotone = Monotone::Nonincreasing;
    g
}

/// `σ_τ f`: `f(t/τ)` restricted to `(0, min(1, τ))` on the unit interval,
/// unrestricted on the half-line.
pub fn dilate(f: &SampledRealFunction, tau: f64) -> Result<SampledRealFunction> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(LabError::InvalidInput(format!("dilation parameter must be positive, got {tau}")));
    }
    let grid = GridSpec { t_max: f.grid[0], t_min: f.t_min(), per_decade: 16 };
    match &f.closed_form {
        Some(cf) => {
            let mut g = SampledRealFunction::from_closed_form(
                ClosedForm::Dilation { base: Box::new(cf.clone()), tau },
                f.domain,
                grid,
            );
            g.monotone = f.monotone;
            Ok(g)
        }
        None => {
            let values: Vec<f64> = f.grid.iter().map(|t| f.ln_at_depth(-t.ln() + tau.ln()).exp()).collect();
            let mut g = f.clone();
            g.values = values;
            Ok(g)
        }
    }
}

/// Dilation function with the depth at which its inner sup was truncated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationFunction {
    pub function: SampledRealFunction,
    /// The inner sup runs over `s ∈ [truncation, 1]`.
    pub truncation: f64,
    pub step: f64,
}

/// `M_h(t) = sup_{0<s≤min(1,1/t)} h(st)/h(s)` for `t ∈ (0, 1]`, with the
/// inner sup over a depth grid refined until it settles to 1e-4.
pub fn dilation_function(h: &SampledRealFunction) -> Result<DilationFunction> {
    dilation_function_on(h, GridSpec::default())
}

pub fn dilation_function_on(h: &SampledRealFunction, grid: GridSpec) -> Result<DilationFunction> {
    let t_depths: Vec<f64> = grid.points().iter().map(|t| -t.ln()).collect();
    let s_max = -grid.t_min.ln();
    let closed = h.closed_form.is_some();
    let reach = if closed { s_max + t_depths[t_depths.len() - 1] } else { h.max_depth() };
    let base_step = LN10 / grid.per_decade as f64;
    let eval_level = |step: f64| -> Result<Vec<f64>> {
        let m = (reach / step).round() as usize;
        let mut table = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let v = h.ln_at_depth(k as f64 * step);
            if !v.is_finite() {
                return Err(LabError::InvalidInput(format!(
                    "h vanishes or is not finite at t = {:e}",
                    (-(k as f64) * step).exp()
                )));
            }
            table.push(v);
        }
        let s_count = ((s_max / step).round() as usize).min(m);
        let out = t_depths
            .iter()
            .map(|dt| {
                let shift = (dt / step).round() as usize;
                let mut best = f64::NEG_INFINITY;
                for j in 0..=s_count {
                    if j + shift > m {
                        break;
                    }
                    best = best.max(table[j + shift] - table[j]);
                }
                best
            })
            .collect();
        Ok(out)
    };
    let mut step = base_step;
    let mut cur = eval_level(step)?;
    for _ in 0..6 {
        let next = eval_level(step / 2.0)?;
        step /= 2.0;
        let settled = cur.iter().zip(&next).all(|(a, b)| (b - a).abs() <= 1e-4);
        cur = next;
        if settled {
            break;
        }
    }
    let values: Vec<f64> = cur.iter().map(|v| v.exp()).collect();
    let pts = grid.points();
    let mut f = SampledRealFunction::from_samples(pts, values, Domain::UnitInterval)?;
    f.monotone = if f.values.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)) { Monotone::Nonincreasing } else { Monotone::General };
    Ok(DilationFunction { function: f, truncation: grid.t_min, step })
}

/// Distribution of `a ⊗̄ f`, i.e. `Σ_k n_f(τ/|a_k|)` on the merged thresholds.
pub fn disjoint_sum(a: &CoeffSeq, f: &SampledRealFunction) -> DistributionFn {
    let base = distribution(f);
    disjoint_sum_of(a, &base)
}

/// As [`disjoint_sum`], from a precomputed base distribution.
pub fn disjoint_sum_of(a: &CoeffSeq, base: &DistributionFn) -> DistributionFn {
    let groups = a.groups();
    if groups.is_empty() || base.total <= 0.0 {
        return DistributionFn { ln_tau: vec![0.0], ln_measure: vec![f64::NEG_INFINITY], total: 0.0 };
    }
    let total: f64 = groups.iter().map(|(_, c)| *c as f64 * base.total).sum();
    if groups.len() == 1 {
        let (g, c) = groups[0];
        let (lg, lc) = (g.ln(), (c as f64).ln());
        return DistributionFn {
            ln_tau: base.ln_tau.iter().map(|y| y + lg).collect(),
            ln_measure: base.ln_measure.iter().map(|m| m + lc).collect(),
            total,
        };
    }
    let mut ys: Vec<f64> = groups.iter().flat_map(|(g, _)| base.ln_tau.iter().map(move |y| y + g.ln())).collect();
    ys.sort_by(|a, b| a.total_cmp(b));
    ys.dedup();
    let sum_at = |y: f64, left: bool| -> f64 {
        let mut s = 0.0;
        for (g, c) in &groups {
            s += *c as f64 * base.ln_n(y - g.ln(), left).exp();
        }
        s
    };
    let mut ln_tau = Vec::with_capacity(ys.len() + 16);
    let mut ln_measure = Vec::with_capacity(ys.len() + 16);
    for y in ys {
        let l = sum_at(y, true);
        let r = sum_at(y, false);
        if l > r * (1.0 + 1e-12) {
            ln_tau.push(y);
            ln_measure.push(l.ln());
        }
        ln_tau.push(y);
        ln_measure.push(r.ln());
    }
    DistributionFn { ln_tau, ln_measure, total }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steps(edges: &[f64], levels: &[f64]) -> SampledRealFunction {
        SampledRealFunction::unit(ClosedForm::steps(edges.to_vec(), levels.to_vec()).unwrap())
    }

    #[test]
    fn indicator_distribution() {
        let f = steps(&[0.0, 0.3, 1.0], &[2.0, 0.0]);
        let n = distribution(&f);
        assert!((n.n(1.0) - 0.3).abs() < 1e-12);
        assert!((n.n(1.999) - 0.3).abs() < 1e-12);
        assert_eq!(n.n(2.0), 0.0);
        assert_eq!(n.n(5.0), 0.0);
    }

    #[test]
    fn two_step_rearrangement() {
        let f = steps(&[0.0, 0.5, 0.75, 1.0], &[1.0, 3.0, 0.0]);
        let g = rearrangement(&f);
        assert!((g.eval(0.1) - 3.0).abs() < 1e-12);
        assert!((g.eval(0.25) - 3.0).abs() < 1e-12);
        assert!((g.eval(0.2501) - 1.0).abs() < 1e-12);
        assert!((g.eval(0.75) - 1.0).abs() < 1e-12);
        assert_eq!(g.eval(0.76), 0.0);
    }

    #[test]
    fn monotone_function_is_its_own_rearrangement() {
        let f = SampledRealFunction::unit(ClosedForm::power_log(1.0, 1.0 / 1.5, 0.3));
        let g = rearrangement(&f);
        for (a, b) in f.values.iter().zip(&g.values) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn distribution_of_reciprocal_inverse() {
        let psi = OrliczSpec::power_log(1.5, 0.45);
        let f = SampledRealFunction::unit(ClosedForm::ReciprocalInverse { spec: psi.clone() });
        let n = distribution(&f);
        for &tau in &[1.5, 10.0, 1e3, 1e6, 1e9] {
            let expect = psi.eval(1.0 / tau);
            assert!((n.n(tau) - expect).abs() <= 1e-4 * expect, "tau={tau}: {} vs {}", n.n(tau), expect);
        }
    }

    #[test]
    fn dilation_identity_and_power_scaling() {
        let f = SampledRealFunction::unit(ClosedForm::power_log(1.0, 0.5, 0.0));
        let g = dilate(&f, 1.0).unwrap();
        for t in [0.9, 0.1, 1e-5] {
            assert!((g.eval(t) - f.eval(t)).abs() < 1e-12 * f.eval(t));
        }
        let g = dilate(&f, 4.0).unwrap();
        assert!((g.eval(0.01) - 2.0 * f.eval(0.01)).abs() < 1e-12);
    }

    #[test]
    fn dilation_function_of_power() {
        let h = SampledRealFunction::unit(ClosedForm::power_log(1.0, 1.0 / 1.5, 0.0));
        let m = dilation_function(&h).unwrap();
        assert!((m.function.eval(1.0) - 1.0).abs() < 1e-12);
        for t in [0.5f64, 1e-3, 1e-8] {
            let expect = t.powf(-1.0 / 1.5);
            assert!((m.function.eval(t) - expect).abs() < 1e-8 * expect);
        }
    }

    #[test]
    fn dilation_function_rejects_vanishing_h() {
        let h = steps(&[0.0, 0.5, 1.0], &[1.0, 0.0]);
        assert!(dilation_function(&h).is_err());
    }

    #[test]
    fn disjoint_sum_examples() {
        let f = SampledRealFunction::unit(ClosedForm::Constant { c: 1.0 });
        let n = disjoint_sum(&CoeffSeq(vec![2.0, 1.0]), &f);
        assert!((n.n(0.5) - 2.0).abs() < 1e-12);
        assert!((n.n(1.0) - 1.0).abs() < 1e-12);
        assert!((n.n(1.5) - 1.0).abs() < 1e-12);
        assert_eq!(n.n(2.0), 0.0);
        let g = SampledRealFunction::unit(ClosedForm::power_log(1.0, 0.5, 0.2));
        let single = disjoint_sum(&CoeffSeq(vec![1.0]), &g);
        let base = distribution(&g);
        for tau in [1.5, 7.0, 1e4] {
            assert!((single.n(tau) - base.n(tau)).abs() < 1e-12);
        }
    }

    #[test]
    fn n_ones_is_equimeasurable_with_stretched_f() {
        let g = SampledRealFunction::unit(ClosedForm::power_log(1.0, 0.5, 0.2));
        let n = 8usize;
        let sum = disjoint_sum(&CoeffSeq::ones(n), &g);
        let stretched = SampledRealFunction::from_closed_form(
            ClosedForm::Dilation { base: Box::new(g.closed_form.clone().unwrap()), tau: n as f64 },
            Domain::HalfLine,
            GridSpec { t_max: n as f64, ..GridSpec::default() },
        );
        let direct = distribution(&stretched);
        for tau in [1.2, 3.0, 50.0, 1e5] {
            assert!((sum.n(tau) - direct.n(tau)).abs() <= 1e-5 * direct.n(tau), "tau={tau}");
        }
    }

    #[test]
    fn rearrangement_of_disjoint_sum_restricts_to_unit() {
        let f = SampledRealFunction::unit(ClosedForm::Constant { c: 1.0 });
        let n = disjoint_sum(&CoeffSeq(vec![3.0, 1.0, 1.0]), &f);
        let r = n.rearrangement();
        assert!((r.eval(0.5) - 3.0).abs() < 1e-12);
        assert!((r.eval(0.999) - 3.0).abs() < 1e-12);
        // right-continuous: the lower level starts at s = 1
        assert!((r.eval(1.0) - 1.0).abs() < 1e-12);
        assert!((r.eval(1.5) - 1.0).abs() < 1e-12);
        assert_eq!(r.eval(3.5), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let f = SampledRealFunction::unit(ClosedForm::power_log(2.0, 0.5, 0.0));
        let text = f.to_csv();
        assert!(text.starts_with("t,value\n"));
        let g = SampledRealFunction::from_csv(&text, Domain::UnitInterval).unwrap();
        assert_eq!(g.grid, f.grid);
        for (a, b) in g.values.iter().zip(&f.values) {
            assert!((a - b).abs() <= 1e-15 * a);
        }
    }

    #[test]
    fn samples_are_reduced_to_absolute_values() {
        let f = SampledRealFunction::from_samples(vec![1.0, 0.5, 0.25], vec![-1.0, 2.0, -3.0], Domain::UnitInterval).unwrap();
        assert_eq!(f.values, vec![1.0, 2.0, 3.0]);
        assert!(f.is_nonincreasing());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cells() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            prop::collection::vec((0.01f64..1.0, 0.0f64..10.0), 1..12).prop_map(|c| {
                let w: f64 = c.iter().map(|x| x.0).sum();
                let mut edges = vec![0.0];
                let mut levels = vec![];
                for (a, l) in c {
                    edges.push(edges[edges.len() - 1] + a / w);
                    levels.push(l);
                }
                let k = edges.len() - 1;
                edges[k] = 1.0;
                (edges, levels)
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn rearrangement_is_equimeasurable((edges, levels) in cells(), tau in 0.0f64..10.0) {
                let f = steps(&edges, &levels);
                let g = rearrangement(&f);
                prop_assert!(g.is_nonincreasing());
                let nf = distribution(&f).n(tau);
                let ng = distribution(&g).n(tau);
                prop_assert!((nf - ng).abs() < 1e-9);
                // direct count from the cells
                let direct: f64 = levels.iter().enumerate().filter(|(_, l)| **l > tau).map(|(i, _)| edges[i + 1] - edges[i]).sum();
                prop_assert!((nf - direct).abs() < 1e-9);
            }

            #[test]
            fn disjoint_sum_adds_distributions(a in prop::collection::vec(0.1f64..5.0, 1..6), tau in 0.05f64..20.0) {
                let f = SampledRealFunction::unit(ClosedForm::power_log(1.0, 0.5, 0.0));
                let base = distribution(&f);
                let n = disjoint_sum(&CoeffSeq(a.clone()), &f);
                let direct: f64 = a.iter().map(|ak| base.n(tau / ak)).sum();
                // the merged table is log-linear between merged nodes, the sum is not
                prop_assert!((n.n(tau) - direct).abs() <= 1e-5 * direct, "{} vs {}", n.n(tau), direct);
            }

            #[test]
            fn dilations_compose(r in 0.0f64..1.0, b in -1.0f64..1.0, s in 0.05f64..4.0, u in 0.05f64..4.0, t in 1e-6f64..1.0) {
                let f = SampledRealFunction::unit(ClosedForm::power_log(1.0, r, b.max(-r)));
                let one = dilate(&dilate(&f, s).unwrap(), u).unwrap();
                let two = dilate(&f, s * u).unwrap();
                let (x, y) = (one.eval(t), two.eval(t));
                prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300));
            }

            #[test]
            fn dilation_function_is_one_at_one(r in 0.05f64..1.0, b in 0.0f64..1.0) {
                let h = SampledRealFunction::unit(ClosedForm::power_log(1.0, r, b));
                let m = dilation_function_on(&h, GridSpec { t_min: 1e-4, per_decade: 8, ..GridSpec::default() }).unwrap();
                prop_assert!((m.function.eval(1.0) - 1.0).abs() < 1e-12);
            }
        }
    }
}
