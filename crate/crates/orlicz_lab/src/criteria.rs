//! Checkable conditions for strong embedding and equicontinuity of the span
//! of independent copies, and the verdict that combines them.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::indices::{index_at_infinity, index_at_zero, IndexEstimate};
use crate::measure_ops::{dilate, dilation_function_on, disjoint_sum_of, distribution, rearrangement, ClosedForm, CoeffSeq, Domain, GridSpec, SampledRealFunction};
use crate::norms::{closed_form_depth, l1_norm, luxemburg_norm, sequence_norm, tail_trend, Membership};
use crate::orlicz_core::{OrliczKind, OrliczSpec};
use crate::quad::{bisect_increasing, integrate_depth, QuadOptions, W_LO};
use crate::span_builder::{build_psi, distribution_match, Band, DistributionMatch, EquivalenceReport, EquivalenceVerdict};

const LN10: f64 = std::f64::consts::LN_10;
const LN2: f64 = std::f64::consts::LN_2;

/// Index gaps below this are not resolved: slowly varying factors move the
/// slope fits by about this much over the reachable range.
pub const INDEX_RESOLUTION: f64 = 0.02;

/// Growth of `ln C` per doubling of the window above which a
/// submultiplicativity constant is treated as unbounded.
pub const SUBMULT_GROWTH_TOL: f64 = 0.1;

/// Relative tolerance for pointwise checks on interpolated grids.
pub const GRID_TOL: f64 = 2e-3;

/// Dyadic levels used by the majorant; `2^131 < 1e40` keeps every level
/// inside the range tabulated by regularization.
pub const MAJORANT_LEVELS: i32 = 130;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tri {
    Yes,
    No,
    Inconclusive,
}

impl Tri {
    pub fn as_str(self) -> &'static str {
        match self {
            Tri::Yes => "yes",
            Tri::No => "no",
            Tri::Inconclusive => "inconclusive",
        }
    }
}

/// Reads a ratio report as the one-sided statement `lhs ≼ rhs`.
pub fn bounded_ratio(r: &EquivalenceReport) -> Tri {
    match r.verdict {
        EquivalenceVerdict::Equivalent | EquivalenceVerdict::LhsDominated => Tri::Yes,
        EquivalenceVerdict::RhsDominated => Tri::No,
        EquivalenceVerdict::Inconclusive => Tri::Inconclusive,
    }
}

fn dyadic_n(max_pow: u32) -> Vec<f64> {
    (0..=max_pow).map(|j| 2f64.powi(j as i32)).collect()
}

fn dilation_norms(spec: &OrliczSpec, f: &SampledRealFunction, n: &[f64]) -> Result<Vec<f64>> {
    n.iter()
        .map(|&k| {
            let r = luxemburg_norm(spec, &dilate(f, k)?);
            if r.is_finite() {
                Ok(r.value)
            } else {
                Err(LabError::NotInSpace(format!("σ_n f is not in the space for n = {k}")))
            }
        })
        .collect()
}

/// `‖σ_n f‖_{L_M}` against `‖σ_n f‖_{L¹}` for `n = 2^0..2^max_pow`; read it
/// with [`bounded_ratio`].
pub fn dilation_condition(m: &OrliczSpec, f: &SampledRealFunction, max_pow: u32, band: Band) -> Result<EquivalenceReport> {
    let n = dyadic_n(max_pow);
    let lhs = dilation_norms(m, f, &n)?;
    let rhs = n.iter().map(|&k| Ok(l1_norm(&dilate(f, k)?))).collect::<Result<Vec<f64>>>()?;
    Ok(EquivalenceReport::new("dilation norm vs L1", n, lhs, rhs, band))
}

/// Dyadic-weight majorant `N = M·w` of the Orlicz class of `f`, regularized
/// to `t ↦ ∫_0^t N(u) du/u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Majorant {
    pub spec: OrliczSpec,
    /// Level weights `w_k = min(k+1, (Σ_{j≥k} τ_j)^{-1/2})`, `k = 0..=MAJORANT_LEVELS`.
    pub weights: Vec<f64>,
    /// `τ_k = ∫_{|f| ∈ [2^k, 2^{k+1})} M(|f|)`; the last entry holds all
    /// higher levels.
    pub level_mass: Vec<f64>,
    /// `(N/M)(2^K) / (N/M)(2)`.
    pub ratio_growth: f64,
    /// `∫ N(|f|)` at two quadrature tolerances.
    pub integral: (f64, f64),
    pub integral_membership: Membership,
}

/// Depth at which the nondecreasing `ln f*(depth)` reaches `ly`.
fn level_depth(fs: &SampledRealFunction, ly: f64) -> f64 {
    let dmax = fs.max_depth();
    if fs.ln_at_depth(0.0) >= ly {
        return 0.0;
    }
    if fs.ln_at_depth(dmax) < ly {
        return dmax;
    }
    let (_, _, hi) = bisect_increasing(|w: f64| fs.ln_at_depth(w.exp()) - ly, W_LO, dmax.ln(), 1e-12);
    hi.exp()
}

pub fn vallee_poussin_majorant(m: &OrliczSpec, f: &SampledRealFunction) -> Result<Majorant> {
    let fs = rearrangement(f);
    let breaks = fs.breaks();
    let ln_g = |d: f64| m.ln_value(fs.ln_at_depth(d));
    if tail_trend(&ln_g, fs.max_depth(), &breaks) != Membership::InSpace {
        return Err(LabError::Precondition("∫M(|f|) is not finite".into()));
    }
    let opts = QuadOptions { rel_tol: 1e-10, ..QuadOptions::default() };
    let kmax = MAJORANT_LEVELS as usize;
    let depths: Vec<f64> = (0..=kmax + 1).map(|k| level_depth(&fs, k as f64 * LN2)).collect();
    let mut mass: Vec<f64> = (0..=kmax)
        .map(|k| integrate_depth(&ln_g, depths[k], depths[k + 1], &breaks, opts).value)
        .collect();
    mass[kmax] += integrate_depth(&ln_g, depths[kmax + 1], fs.max_depth(), &breaks, opts).value;
    let mut tail = vec![0.0; kmax + 1];
    let mut acc = 0.0;
    for k in (0..=kmax).rev() {
        acc += mass[k];
        tail[k] = acc;
    }
    let weights: Vec<f64> = tail.iter().enumerate().map(|(k, r)| ((k + 1) as f64).min(if *r > 0.0 { r.powf(-0.5) } else { f64::INFINITY })).collect();

    // regularized N(t) = ∫_0^t M(u) w(u) du/u: its derivative M·w/u is
    // nondecreasing, so it is convex. Jumps of w leave kinks that the log-log
    // interpolant overshoots, so w runs geometrically from w_{k-1} at 2^k to
    // w_k at 2^{k+1}; lagging by one level keeps w ≤ w_k on level k
    let lo = -40.0 * LN10;
    let top = (kmax + 1) as f64 * LN2;
    let weight = |lu: f64| {
        if lu < LN2 {
            return weights[0];
        }
        let x = lu / LN2 - 1.0;
        let k = (x.floor() as usize).min(kmax);
        if k >= kmax {
            return weights[kmax];
        }
        let th = x - k as f64;
        weights[k].powf(1.0 - th) * weights[k + 1].powf(th)
    };
    let mut nodes: Vec<f64> = (0..=40 * 64).map(|i| lo * (1.0 - i as f64 / (40.0 * 64.0))).collect();
    nodes.extend((1..=(kmax + 1) * 16).map(|i| i as f64 * LN2 / 16.0));
    nodes.extend(m.knots().iter().map(|k| k.ln()).filter(|l| *l > lo && *l < top));
    nodes.sort_by(|a, b| a.total_cmp(b));
    nodes.dedup();
    let integrand = |lu: f64| m.ln_value(lu).exp() * weight(lu);
    let exp_zero = m.elasticity(lo);
    let mut acc = integrand(lo) / exp_zero;
    let mut grid = vec![lo.exp()];
    let mut values = vec![acc];
    let qopts = QuadOptions { rel_tol: 1e-12, ..QuadOptions::default() };
    for w in nodes.windows(2) {
        acc += crate::quad::integrate_segments(&integrand, &[w[0], w[1]], qopts).value;
        grid.push(w[1].exp());
        values.push(acc);
    }
    let spec = OrliczSpec::tabulated_raw(grid, values, Some(exp_zero), Some(m.elasticity(top)))?.with_convex(true);

    let ratio = |lu: f64| (spec.ln_value(lu) - m.ln_value(lu)).exp();
    let ratio_growth = ratio(kmax as f64 * LN2) / ratio(LN2);
    let ln_n = |d: f64| spec.ln_value(fs.ln_at_depth(d));
    let coarse = integrate_depth(&ln_n, 0.0, fs.max_depth(), &breaks, QuadOptions { rel_tol: 1e-6, ..QuadOptions::default() }).value;
    let fine = integrate_depth(&ln_n, 0.0, fs.max_depth(), &breaks, opts).value;
    let integral_membership = tail_trend(&ln_n, fs.max_depth(), &breaks);
    Ok(Majorant { spec, weights, level_mass: mass, ratio_growth, integral: (coarse, fine), integral_membership })
}

impl Majorant {
    /// `∫N(|f|)` finite and stable under quadrature refinement.
    pub fn integral_finite(&self) -> bool {
        let (a, b) = self.integral;
        self.integral_membership == Membership::InSpace && a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-4 * b.abs().max(1e-300)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop2aReport {
    pub report: EquivalenceReport,
    pub holds: Tri,
    /// `N/M` grows over the evaluation range.
    pub precondition_ok: bool,
    pub ratio_growth: f64,
}

impl Prop2aReport {
    /// The condition holds with an admissible majorant, which suffices for
    /// equicontinuity.
    pub fn sufficient(&self) -> bool {
        self.holds == Tri::Yes && self.precondition_ok
    }
}

/// Growth factor of `N/M` between `u = 2` and `u = 2^MAJORANT_LEVELS`
/// required before `N/M → ∞` is accepted.
pub const MAJORANT_MIN_GROWTH: f64 = 2.0;

/// `‖σ_n f‖_{L_N}` against `‖σ_n f‖_{L_M}`.
pub fn prop2a_condition(m: &OrliczSpec, n_spec: &OrliczSpec, f: &SampledRealFunction, max_pow: u32, band: Band) -> Result<Prop2aReport> {
    let n = dyadic_n(max_pow);
    let lhs = dilation_norms(n_spec, f, &n)?;
    let rhs = dilation_norms(m, f, &n)?;
    let report = EquivalenceReport::new("dilation norm in N vs M", n, lhs, rhs, band);
    let ratio = |lu: f64| (n_spec.ln_value(lu) - m.ln_value(lu)).exp();
    let ratio_growth = ratio(MAJORANT_LEVELS as f64 * LN2) / ratio(LN2);
    Ok(Prop2aReport { holds: bounded_ratio(&report), report, precondition_ok: ratio_growth >= MAJORANT_MIN_GROWTH, ratio_growth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmultReport {
    pub holds: bool,
    /// Grid sup of `ψ(st)/(ψ(s)ψ(t))` over the full window.
    pub constant: f64,
    pub witness: (f64, f64),
    /// Increase of `ln C` from half the window to the full window.
    pub growth: f64,
    pub decades: f64,
}

fn submult_sup(psi: &OrliczSpec, decades: f64, per_decade: usize) -> (f64, (f64, f64)) {
    let h = LN10 / per_decade as f64;
    let n = (decades * per_decade as f64).round() as usize;
    let lv: Vec<f64> = (0..=n).map(|i| psi.ln_value(-(i as f64) * h)).collect();
    let mut best = f64::NEG_INFINITY;
    let mut arg = (1.0, 1.0);
    for i in 0..=n {
        for j in 0..=(n - i) {
            let r = lv[i + j] - lv[i] - lv[j];
            if r > best {
                best = r;
                arg = ((-(i as f64) * h).exp(), (-(j as f64) * h).exp());
            }
        }
    }
    (best, arg)
}

/// Sup of `ψ(st)/(ψ(s)ψ(t))` over `st ≥ 10^{-D}`, with the per-decade grid
/// doubled once and the window halved once to expose growth.
pub fn submultiplicative_check(psi: &OrliczSpec) -> SubmultReport {
    let psi = psi.normalized();
    let mut decades: f64 = 40.0;
    if let OrliczKind::Tabulated { grid, .. } = &psi.kind {
        decades = decades.min(-grid[0].log10());
    }
    let (c8, _) = submult_sup(&psi, decades, 8);
    let (c16, arg) = submult_sup(&psi, decades, 16);
    let (half, _) = submult_sup(&psi, decades / 2.0, 16);
    let c = c8.max(c16);
    let growth = c - half;
    SubmultReport { holds: c.is_finite() && growth <= SUBMULT_GROWTH_TOL, constant: c.exp(), witness: arg, growth, decades }
}

/// Samples of `ψ` on `(0, 1]` as a grid function, 16 points per decade.
fn psi_samples(psi: &OrliczSpec, decades: f64) -> Result<SampledRealFunction> {
    let grid = GridSpec { t_max: 1.0, t_min: 10f64.powf(-decades), per_decade: 16 }.points();
    let values = grid.iter().map(|t| psi.eval(*t)).collect();
    SampledRealFunction::from_samples(grid, values, Domain::UnitInterval)
}

const G_GRID: GridSpec = GridSpec { t_max: 1.0, t_min: 1e-12, per_decade: 16 };

/// `M_ψ(t) = sup_{0<s≤1} ψ(st)/ψ(s)` on `[1e-12, 1]`.
pub fn psi_dilation(psi: &OrliczSpec) -> Result<SampledRealFunction> {
    let psi = psi.normalized();
    let h = psi_samples(&psi, 30.0)?;
    Ok(dilation_function_on(&h, G_GRID)?.function)
}

/// Nonincreasing `g` with `n_g(τ) = min(M_ψ(1/τ), 1)`, i.e.
/// `g(M_ψ(u)) = 1/u`.
pub fn g_function(psi: &OrliczSpec) -> Result<SampledRealFunction> {
    let md = psi_dilation(psi)?;
    let mut ts = vec![];
    let mut gs = vec![];
    for (u, v) in md.grid.iter().zip(&md.values) {
        let t = v.min(1.0);
        if let Some(last) = ts.last() {
            if t >= *last {
                // plateau: keep the largest value reached
                let k = gs.len() - 1;
                gs[k] = 1.0 / u;
                continue;
            }
        }
        ts.push(t);
        gs.push(1.0 / u);
    }
    let mut g = SampledRealFunction::from_samples(ts, gs, Domain::UnitInterval)?;
    g.monotone = crate::measure_ops::Monotone::Nonincreasing;
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub case: usize,
    pub at: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorizationReport {
    pub vectors: usize,
    pub points: usize,
    pub tolerance: f64,
    /// Largest `lhs/rhs` seen.
    pub max_ratio: f64,
    pub violations: Vec<Violation>,
}

/// `(c⊗̄f)*·χ_(0,1) ≤ ‖c‖_{ℓ_ψ}·g` with `f = 1/ψ^{-1}`, on the grid of `g`.
pub fn majorization_check(psi: &OrliczSpec, vectors: &[CoeffSeq]) -> Result<MajorizationReport> {
    let psi = psi.normalized();
    let g = g_function(&psi)?;
    let f = SampledRealFunction::unit(ClosedForm::ReciprocalInverse { spec: psi.clone() });
    let base = distribution(&f);
    let mut report = MajorizationReport { vectors: vectors.len(), points: 0, tolerance: GRID_TOL, max_ratio: 0.0, violations: vec![] };
    for (i, c) in vectors.iter().enumerate() {
        let nrm = sequence_norm(&psi, c).value;
        if nrm == 0.0 {
            continue;
        }
        let sum = disjoint_sum_of(&c.scaled(1.0 / nrm), &base);
        for (t, gv) in g.grid.iter().zip(&g.values) {
            if *t >= 1.0 {
                continue;
            }
            let lhs = sum.ln_rearrangement(-t.ln()).exp();
            report.points += 1;
            let r = lhs / gv;
            report.max_ratio = report.max_ratio.max(r);
            if r > 1.0 + GRID_TOL {
                report.violations.push(Violation { case: i, at: *t, lhs, rhs: *gv });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionBound {
    pub holds: bool,
    pub points: usize,
    pub tolerance: f64,
    /// Smallest `n_h(τ)/min(M_ψ(1/τ), 1)` seen.
    pub min_ratio: f64,
    pub violations: Vec<Violation>,
}

/// `n_h(τ) ≥ min(M_ψ(1/τ), 1)` with `h` the dilation function of
/// `1/ψ^{-1}`, for `τ = 10^{j/8}` up to `10^{12}`.
pub fn lemma3dop_bound(psi: &OrliczSpec) -> Result<DistributionBound> {
    let psi = psi.normalized();
    let f = SampledRealFunction::unit(ClosedForm::ReciprocalInverse { spec: psi.clone() });
    let h = dilation_function_on(&f, G_GRID)?.function;
    let nh = distribution(&h);
    let md = psi_dilation(&psi)?;
    let hmax = h.values.iter().cloned().fold(0.0, f64::max);
    let mut out = DistributionBound { holds: true, points: 0, tolerance: GRID_TOL, min_ratio: f64::INFINITY, violations: vec![] };
    for j in 0..=96 {
        let tau = 10f64.powf(j as f64 / 8.0);
        if tau >= hmax {
            break;
        }
        let lhs = nh.n(tau);
        let rhs = md.eval(1.0 / tau).min(1.0);
        out.points += 1;
        let r = lhs / rhs;
        out.min_ratio = out.min_ratio.min(r);
        if r < 1.0 - GRID_TOL {
            out.holds = false;
            out.violations.push(Violation { case: 0, at: tau, lhs, rhs });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipProbe {
    pub in_lm: Tri,
    pub exponent: f64,
    pub lambdas: Vec<f64>,
    pub outcomes: Vec<Membership>,
    /// Deepest depth reached by the truncated integrals.
    pub depth: f64,
}

/// Is `t^{-1/β}` in `L_M`? Truncated integrals `∫_ε^1 M(t^{-1/β}/λ)` are
/// classified by their growth as `ε → 0`, for `λ = 10^{-3}..10^6`.
pub fn membership_probe(m: &OrliczSpec, beta: f64) -> MembershipProbe {
    let depth = closed_form_depth();
    let lambdas: Vec<f64> = (-3..=6).map(|k| 10f64.powi(k)).collect();
    let outcomes: Vec<Membership> = lambdas
        .iter()
        .map(|lam| {
            let ll = lam.ln();
            let ln_g = |d: f64| m.ln_value(d / beta - ll);
            let breaks: Vec<f64> = m.knots().iter().map(|k| beta * (k.ln() + ll)).filter(|d| *d > 0.0).collect();
            tail_trend(&ln_g, depth, &breaks)
        })
        .collect();
    let in_lm = if outcomes.contains(&Membership::InSpace) {
        Tri::Yes
    } else if outcomes.iter().all(|o| *o == Membership::NotInSpace) {
        Tri::No
    } else {
        Tri::Inconclusive
    };
    MembershipProbe { in_lm, exponent: beta, lambdas, outcomes, depth }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexGap {
    pub value: f64,
    pub uncertainty: f64,
    pub resolution: f64,
}

impl IndexGap {
    fn margin(&self) -> f64 {
        (2.0 * self.uncertainty).max(self.resolution)
    }

    pub fn decided(&self) -> Tri {
        if self.value > self.margin() {
            Tri::Yes
        } else if self.value < -self.margin() {
            Tri::No
        } else {
            Tri::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub dilation: EquivalenceReport,
    pub dilation_bounded: Tri,
    pub submultiplicative: SubmultReport,
    pub prop2a: Option<Prop2aReport>,
    pub distribution_match: Option<DistributionMatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaVerdict {
    pub strongly_embedded: Tri,
    pub equicontinuous: Tri,
    pub index_gap: IndexGap,
    pub membership: MembershipProbe,
    /// `t^{-1/β} ∉ L_M` was established, so the index gap decides both ways.
    pub full_equivalence: bool,
    pub hypotheses_hold: bool,
    pub alpha_m: IndexEstimate,
    pub beta_m: IndexEstimate,
    pub alpha_psi: IndexEstimate,
    pub beta_psi: IndexEstimate,
    /// Which implications produced the verdicts, in order of use.
    pub routes: Vec<String>,
    pub evidence: Evidence,
}

/// Probe `t^{-1/β}` at the ends of the uncertainty interval of `β`; for a
/// pure power the index is exact.
fn probe_at_index(m: &OrliczSpec, beta: &IndexEstimate) -> MembershipProbe {
    if let OrliczKind::Power { p } = m.kind {
        return membership_probe(m, p);
    }
    let spread = beta.uncertainty.max(1e-3);
    let lo = membership_probe(m, beta.point - spread);
    let hi = membership_probe(m, beta.point + spread);
    if lo.in_lm == hi.in_lm {
        hi
    } else {
        MembershipProbe { in_lm: Tri::Inconclusive, exponent: beta.point, ..hi }
    }
}

/// Assemble the strong-embedding and equicontinuity verdicts for the span of
/// independent copies of `f` in `L_M`.
pub fn strongly_embedded_verdict(m: &OrliczSpec, f: &SampledRealFunction) -> Result<CriteriaVerdict> {
    let band = Band::default();
    let psi = build_psi(m, f)?;
    let (alpha_m, beta_m) = index_at_infinity(m);
    let (alpha_psi, beta_psi) = index_at_zero(&psi);
    let mut routes = vec![];
    let hypotheses_hold = alpha_m.point > 1.0 + alpha_m.uncertainty && beta_m.point < 2.0 - beta_m.uncertainty && alpha_m.point <= beta_m.point + INDEX_RESOLUTION;
    if !hypotheses_hold {
        routes.push(format!("index hypothesis 1 < α ≤ β < 2 at infinity fails (α = {:.4}, β = {:.4})", alpha_m.point, beta_m.point));
    }
    let psi_regular = alpha_psi.point > 1.0 && beta_psi.point < 2.0;
    let index_gap = IndexGap {
        value: alpha_psi.point - beta_m.point,
        uncertainty: alpha_psi.uncertainty + beta_m.uncertainty,
        resolution: INDEX_RESOLUTION,
    };
    let membership = probe_at_index(m, &beta_m);
    let full_equivalence = membership.in_lm == Tri::No;

    let dilation = dilation_condition(m, f, 20, band)?;
    let dilation_bounded = bounded_ratio(&dilation);
    let submultiplicative = submultiplicative_check(&psi);
    let prop2a = vallee_poussin_majorant(m, f).and_then(|n| prop2a_condition(m, &n.spec, f, 20, band)).ok();
    let distribution_match = distribution_match(f, &psi, 10.0, band).ok();

    let gap = index_gap.decided();
    let mut strong = Tri::Inconclusive;
    let mut equi = Tri::Inconclusive;
    if hypotheses_hold {
        if gap == Tri::Yes {
            strong = Tri::Yes;
            equi = Tri::Yes;
            routes.push("index gap positive: equicontinuous, hence strongly embedded".into());
        } else if gap == Tri::No && full_equivalence {
            strong = Tri::No;
            equi = Tri::No;
            routes.push("index gap negative with t^(-1/β) outside L_M: neither property".into());
        }
        match dilation_bounded {
            Tri::Yes if strong != Tri::No => {
                strong = Tri::Yes;
                routes.push("dilation condition bounded: strongly embedded".into());
            }
            Tri::No if psi_regular && strong != Tri::Yes => {
                strong = Tri::No;
                routes.push("dilation condition fails with 1 < α_ψ ≤ β_ψ < 2: not strongly embedded".into());
            }
            Tri::Yes | Tri::No => {
                strong = Tri::Inconclusive;
                routes.push("index gap and dilation condition disagree".into());
            }
            Tri::Inconclusive => {}
        }
        if strong == Tri::No {
            equi = Tri::No;
        } else if equi == Tri::Inconclusive && strong == Tri::Yes && psi_regular {
            if submultiplicative.holds {
                equi = Tri::Yes;
                routes.push("strongly embedded with submultiplicative ψ: equicontinuous".into());
            } else if prop2a.as_ref().is_some_and(|p| p.sufficient()) {
                equi = Tri::Yes;
                routes.push("majorant condition holds: equicontinuous".into());
            }
        }
    }
    Ok(CriteriaVerdict {
        strongly_embedded: strong,
        equicontinuous: equi,
        index_gap,
        membership,
        full_equivalence,
        hypotheses_hold,
        alpha_m,
        beta_m,
        alpha_psi,
        beta_psi,
        routes,
        evidence: Evidence { dilation, dilation_bounded, submultiplicative, prop2a, distribution_match },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;

    #[test]
    fn indicator_dilations_are_trivial() {
        let f = SampledRealFunction::unit(ClosedForm::Constant { c: 1.0 });
        let r = dilation_condition(&OrliczSpec::power(1.5), &f, 6, Band::default()).unwrap();
        assert!(r.ratio_max / r.ratio_min < 1.0 + 1e-6);
        assert_eq!(bounded_ratio(&r), Tri::Yes);
    }

    #[test]
    fn membership_flips_at_the_exponent() {
        for p in [1.2, 1.5, 1.9] {
            let m = OrliczSpec::power(p);
            assert_eq!(membership_probe(&m, p).in_lm, Tri::No);
            assert_eq!(membership_probe(&m, p * 1.01).in_lm, Tri::Yes);
            assert_eq!(membership_probe(&m, p * 0.99).in_lm, Tri::No);
        }
        // ∫ ln^{-2}(e/t) dt/t converges
        assert_eq!(membership_probe(&presets::example2_m(1.5), 1.5).in_lm, Tri::Yes);
    }

    #[test]
    fn power_is_submultiplicative_with_unit_constant() {
        let r = submultiplicative_check(&OrliczSpec::power(1.5));
        assert!(r.holds && (r.constant - 1.0).abs() < 1e-9);
        // positive log power: L(st) ≤ L(s)L(t)
        assert!(submultiplicative_check(&OrliczSpec::power_log(1.5, 0.45)).holds);
        let bad = submultiplicative_check(&OrliczSpec::power_log(1.5, -1.0));
        assert!(!bad.holds, "{bad:?}");
        assert!(bad.witness.0 < 1e-3 && bad.witness.1 < 1e-3);
    }

    #[test]
    fn g_of_power_is_power() {
        let g = g_function(&OrliczSpec::power(1.5)).unwrap();
        for t in [0.5f64, 1e-3, 1e-9] {
            let want = t.powf(-1.0 / 1.5);
            assert!((g.eval(t) / want - 1.0).abs() < 1e-6, "{t}: {}", g.eval(t));
        }
        assert!(g.values.iter().all(|v| *v >= 1.0));
    }

    #[test]
    fn g_has_the_prescribed_distribution() {
        let psi = OrliczSpec::power_log(1.5, 0.45).normalized();
        let g = g_function(&psi).unwrap();
        let md = psi_dilation(&psi).unwrap();
        let n = distribution(&g);
        for tau in [1.5, 10.0, 1e3, 1e6] {
            let want = md.eval(1.0 / tau).min(1.0);
            assert!((n.n(tau) / want - 1.0).abs() < GRID_TOL, "{tau}: {} vs {want}", n.n(tau));
        }
    }

    #[test]
    fn lemma_bound_is_equality_for_powers() {
        let r = lemma3dop_bound(&OrliczSpec::power(1.5)).unwrap();
        assert!(r.holds && r.points > 50);
        assert!((r.min_ratio - 1.0).abs() < GRID_TOL, "{r:?}");
    }

    #[test]
    fn majorant_of_bounded_function() {
        let m = OrliczSpec::power(1.5);
        let f = SampledRealFunction::unit(ClosedForm::steps(vec![0.0, 0.25, 1.0], vec![8.0, 1.0]).unwrap());
        let n = vallee_poussin_majorant(&m, &f).unwrap();
        assert!(n.integral_finite());
        assert!(n.ratio_growth > 10.0, "{}", n.ratio_growth);
        assert!(n.weights[10] == 11.0);
        let v = n.spec.midpoint_convexity_violation(1e-6, 1e30, 3000, 1e-9);
        assert!(v.is_none(), "{v:?}");
        assert!(n.spec.delta2_constant(crate::orlicz_core::Regime::AtInfinity, 12).is_finite());
    }

    #[test]
    fn majorant_rejects_functions_outside_the_class() {
        let f = SampledRealFunction::unit(ClosedForm::power_log(1.0, 1.0 / 1.5, 0.0));
        assert!(matches!(vallee_poussin_majorant(&OrliczSpec::power(1.5), &f), Err(LabError::Precondition(_))));
    }

    #[test]
    fn identical_spaces_fail_the_majorant_precondition() {
        let (m, f) = presets::example2(1.5, 0.3);
        let r = prop2a_condition(&m, &m, &f, 4, Band::default()).unwrap();
        assert!(!r.precondition_ok && !r.sufficient());
        assert!(r.report.spread() < 1.0 + 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn majorization_for_powers(p in 1.1f64..1.9, seed in 0u64..1000) {
            let psi = OrliczSpec::power(p);
            let vs = crate::mc_sim::ball_directions(12, 3, seed);
            let r = majorization_check(&psi, &vs).unwrap();
            prop_assert!(r.violations.is_empty(), "{:?}", r.violations.first());
        }
    }
}
