//! The sequence function ψ generated by a function `f` in `L_M`, and the
//! norm equivalences relating `ℓ_ψ` to disjoint sums of copies of `f`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measure_ops::{dilate, distribution, CoeffSeq, SampledRealFunction};
use crate::norms::{l2_tail_of, luxemburg_head, luxemburg_norm, sequence_norm, tail_trend, Membership};
use crate::orlicz_core::{OrliczKind, OrliczSpec, DEFAULT_DELTA2_CAP};
use crate::quad::{integrate_depth, integrate_unit, linear_fit, QuadOptions};

const LN10: f64 = std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceVerdict {
    Equivalent,
    /// The ratio lhs/rhs decays: lhs ≼ rhs only.
    LhsDominated,
    /// The ratio lhs/rhs grows: rhs ≼ lhs only.
    RhsDominated,
    Inconclusive,
}

/// Acceptance thresholds for a two-sided comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub max_ratio: f64,
    pub max_slope: f64,
}

impl Default for Band {
    fn default() -> Self {
        Band { max_ratio: 10.0, max_slope: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub label: String,
    pub parameter: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Slope of `ln(lhs/rhs)` against `ln(parameter)`.
    pub trend_slope: f64,
    pub band: Band,
    pub verdict: EquivalenceVerdict,
}

impl EquivalenceReport {
    pub fn new(label: &str, parameter: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>, band: Band) -> EquivalenceReport {
        let ratios: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a / b).collect();
        let finite = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
        let ratio_min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio_max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let trend_slope = if finite && parameter.len() >= 2 {
            let x: Vec<f64> = parameter.iter().map(|p| p.ln()).collect();
            let y: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
            linear_fit(&x, &y).1
        } else {
            f64::NAN
        };
        let verdict = if !finite || trend_slope.is_nan() {
            EquivalenceVerdict::Inconclusive
        } else if ratio_max / ratio_min <= band.max_ratio && trend_slope.abs() <= band.max_slope {
            EquivalenceVerdict::Equivalent
        } else if trend_slope > band.max_slope {
            EquivalenceVerdict::RhsDominated
        } else if trend_slope < -band.max_slope {
            EquivalenceVerdict::LhsDominated
        } else {
            EquivalenceVerdict::Inconclusive
        };
        EquivalenceReport { label: label.to_string(), parameter, lhs, rhs, ratio_min, ratio_max, trend_slope, band, verdict }
    }

    pub fn spread(&self) -> f64 {
        self.ratio_max / self.ratio_min
    }

    /// Two CSV tables `(parameter, lhs)` and `(parameter, rhs)`.
    pub fn to_csv(&self) -> (String, String) {
        let side = |vals: &[f64], name: &str| {
            let mut w = csv::Writer::from_writer(vec![]);
            w.write_record(["parameter", name]).expect("in-memory csv");
            for (p, v) in self.parameter.iter().zip(vals) {
                w.write_record([format!("{p:e}"), format!("{v:e}")]).expect("in-memory csv");
            }
            String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8")
        };
        (side(&self.lhs, "lhs"), side(&self.rhs, "rhs"))
    }
}

/// `θ` glued from `u²` below 1 and `M` above, plus its regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub raw: OrliczSpec,
    /// `∫₀ᵘ θ(v)/v dv`, unnormalized so that `θ̃ ≤ θ ≤ K θ̃`.
    pub regularized: OrliczSpec,
    pub doubling_constant: f64,
    /// Set when the doubling constant could not be bounded.
    pub warning: Option<String>,
}

/// `u²` on `[0, 1]`, `M(u)` above.
pub fn theta_raw(m: &OrliczSpec) -> OrliczSpec {
    if let OrliczKind::Power { p } = m.kind {
        if p == 2.0 {
            return OrliczSpec::power(2.0);
        }
    }
    OrliczSpec::spliced(OrliczSpec::power(2.0), m.normalized(), 1.0).expect("unit knot")
}

pub fn build_theta(m: &OrliczSpec) -> Result<Theta> {
    let raw = theta_raw(m);
    match raw.regularize_with(DEFAULT_DELTA2_CAP) {
        Ok(r) => Ok(Theta { raw, regularized: r.spec.with_convex(true), doubling_constant: r.doubling_constant, warning: None }),
        Err(LabError::NotRegularizable { constant, cap }) => Ok(Theta {
            regularized: raw.clone(),
            raw,
            doubling_constant: constant,
            warning: Some(format!("doubling constant {constant:e} exceeds {cap:e}; θ left unregularized")),
        }),
        Err(e) => Err(e),
    }
}

/// Grid for the tabulated ψ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiGrid {
    pub u_min: f64,
    pub per_decade: usize,
}

impl Default for PsiGrid {
    fn default() -> Self {
        PsiGrid { u_min: 1e-30, per_decade: 16 }
    }
}

/// `∫₀¹ θ(u·|f(t)|) dt` at `u = exp(lu)`.
pub fn psi_integral(theta: &OrliczSpec, f: &SampledRealFunction, lu: f64) -> f64 {
    let mut breaks = f.breaks();
    // θ is glued at 1: find the depth where u·f crosses 1
    if f.is_nonincreasing() {
        let target = -lu;
        let mut lo = 0.0f64;
        let mut hi = f.max_depth();
        if f.ln_at_depth(lo) < target && f.ln_at_depth(hi) > target {
            for _ in 0..200 {
                let mid = if hi / lo.max(1e-300) > 4.0 { (lo.max(1e-300) * hi).sqrt() } else { 0.5 * (lo + hi) };
                if f.ln_at_depth(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-12 * hi {
                    break;
                }
            }
            breaks.push(hi);
        }
    }
    let ln_g = |d: f64| theta.ln_value(lu + f.ln_at_depth(d));
    integrate_unit(&ln_g, f.max_depth(), &breaks, QuadOptions { rel_tol: 1e-10, abs_tol: 1e-300, max_intervals: 4000 }).value
}

/// ψ(u) = ∫₀¹ θ(u|f|), tabulated on `[u_min, 1]` and normalized to ψ(1) = 1.
pub fn build_psi(m: &OrliczSpec, f: &SampledRealFunction) -> Result<OrliczSpec> {
    build_psi_on(m, f, PsiGrid::default())
}

pub fn build_psi_on(m: &OrliczSpec, f: &SampledRealFunction, grid: PsiGrid) -> Result<OrliczSpec> {
    let theta = theta_raw(m);
    let ln_g = |d: f64| theta.ln_value(f.ln_at_depth(d));
    if f.closed_form.is_some() && tail_trend(&ln_g, f.max_depth(), &f.breaks()) == Membership::NotInSpace {
        return Err(LabError::NotInSpace("∫θ(|f|) diverges: f is not in L_M".into()));
    }
    let decades = -grid.u_min.log10();
    let n = (decades * grid.per_decade as f64).round() as usize;
    let lus: Vec<f64> = (0..=n).map(|i| (i as f64 / n as f64 - 1.0) * decades * LN10).collect();
    let mut values = Vec::with_capacity(lus.len());
    for &lu in &lus {
        let v = psi_integral(&theta, f, lu);
        if !(v.is_finite() && v > 0.0) {
            return Err(LabError::NotInSpace(format!("ψ integral is {v} at u = {:e}", lu.exp())));
        }
        values.push(v);
    }
    // end exponents from the first and last decade
    let k = grid.per_decade;
    let slope = |a: usize, b: usize| (values[b].ln() - values[a].ln()) / (lus[b] - lus[a]);
    let exp_zero = slope(0, k);
    let exp_inf = slope(n - k, n);
    let u: Vec<f64> = lus.iter().map(|l| l.exp()).collect();
    let psi = OrliczSpec::tabulated(u, values, Some(exp_zero), Some(exp_inf))?;
    Ok(psi.with_convex(true))
}

/// `‖σ_n f‖_{L_M} + (n ∫_{1/n}^1 f²)^{1/2}`.
pub fn luxem2_rhs(m: &OrliczSpec, f: &SampledRealFunction, n: u64) -> Result<f64> {
    let head = luxemburg_norm(m, &dilate(f, n as f64)?);
    if !head.is_finite() {
        return Err(LabError::NotInSpace("σ_n f is not in L_M".into()));
    }
    Ok(head.value + luxem2_tail(f, n))
}

/// `(n ∫_{1/n}^1 f²)^{1/2}`.
pub fn luxem2_tail(f: &SampledRealFunction, n: u64) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let ln_g = |d: f64| 2.0 * f.ln_at_depth(d);
    let r = integrate_depth(&ln_g, 0.0, (n as f64).ln(), &f.breaks(), QuadOptions::default());
    (n as f64 * r.value).sqrt()
}

/// `1/ψ^{-1}(1/n)` against [`luxem2_rhs`] for `n = 2^0..2^max_pow`.
pub fn luxem2_report(m: &OrliczSpec, psi: &OrliczSpec, f: &SampledRealFunction, max_pow: u32, band: Band) -> Result<EquivalenceReport> {
    let mut par = vec![];
    let mut lhs = vec![];
    let mut rhs = vec![];
    for j in 0..=max_pow {
        let n = 1u64 << j;
        par.push(n as f64);
        lhs.push(crate::norms::fundamental_seq(psi, n));
        rhs.push(luxem2_rhs(m, f, n)?);
    }
    Ok(EquivalenceReport::new("fundamental function vs dilation sum", par, lhs, rhs, band))
}

/// `‖(a⊗̄f)*χ_[0,1]‖_{L_M} + ‖(a⊗̄f)*χ_[1,∞)‖_{L²}`.
pub fn luxem1_rhs(m: &OrliczSpec, f: &SampledRealFunction, a: &CoeffSeq) -> Result<f64> {
    let base = distribution(f);
    luxem1_rhs_of(m, &base, a)
}

pub fn luxem1_rhs_of(m: &OrliczSpec, base: &crate::measure_ops::DistributionFn, a: &CoeffSeq) -> Result<f64> {
    let sum = crate::measure_ops::disjoint_sum_of(a, base);
    let head = luxemburg_head(m, &sum);
    if !head.is_finite() {
        return Err(LabError::NotInSpace("(a⊗̄f)* is not in L_M on [0,1]".into()));
    }
    Ok(head.value + l2_tail_of(&sum)?)
}

/// `‖a‖_{ℓ_ψ}` against [`luxem1_rhs`] over a corpus; the parameter is the
/// number of nonzero coefficients.
pub fn luxem1_check(m: &OrliczSpec, psi: &OrliczSpec, f: &SampledRealFunction, corpus: &[CoeffSeq], band: Band) -> Result<EquivalenceReport> {
    let base = distribution(f);
    let mut par = vec![];
    let mut lhs = vec![];
    let mut rhs = vec![];
    for a in corpus {
        par.push(a.0.iter().filter(|v| **v != 0.0).count().max(1) as f64);
        lhs.push(sequence_norm(psi, a).value);
        rhs.push(luxem1_rhs_of(m, &base, a)?);
    }
    Ok(EquivalenceReport::new("sequence norm vs disjoint sum", par, lhs, rhs, band))
}

/// Result of comparing `n_f(τ)` with `ψ(1/τ)` above a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionMatch {
    pub report: EquivalenceReport,
    pub tau_window: (f64, f64),
    /// Which side was checked: the conclusion of the distribution lemma
    /// only, not its hypothesis.
    pub direction: String,
}

pub fn distribution_match(f: &SampledRealFunction, psi: &OrliczSpec, tau0: f64, band: Band) -> Result<DistributionMatch> {
    let top = tau0 * 1e3;
    let fmax = f.ln_at_depth(f.max_depth()).exp();
    if !(tau0 > 0.0) || top >= fmax {
        return Err(LabError::Range { arg: tau0, lo: 0.0, hi: fmax / 1e3 });
    }
    let n = distribution(f);
    let mut par = vec![];
    let mut lhs = vec![];
    let mut rhs = vec![];
    for i in 0..=30 {
        let tau = tau0 * 10f64.powf(i as f64 / 10.0);
        par.push(tau);
        lhs.push(n.n(tau));
        rhs.push(psi.eval(1.0 / tau));
    }
    Ok(DistributionMatch {
        report: EquivalenceReport::new("distribution vs ψ(1/τ)", par, lhs, rhs, band),
        tau_window: (tau0, top),
        direction: "distribution of f against ψ(1/τ); the strong-embedding hypothesis is not checked".into(),
    })
}

/// Coefficient corpus of geometric, sparse and flat profiles, deterministic.
pub fn default_corpus(size: usize) -> Vec<CoeffSeq> {
    let mut out = Vec::with_capacity(size);
    let mut i = 0usize;
    while out.len() < size {
        let len = 1usize << (i % 11);
        let a = match i % 3 {
            0 => CoeffSeq((0..len).map(|k| 0.8f64.powi(k as i32)).collect()),
            1 => CoeffSeq((0..len).map(|k| if k % 7 == 0 { 1.0 + (k % 5) as f64 } else { 0.0 }).collect()),
            _ => CoeffSeq((0..len).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect()),
        };
        out.push(a);
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_ops::ClosedForm;
    use crate::presets;

    #[test]
    fn theta_of_square_is_square() {
        let t = build_theta(&OrliczSpec::power(2.0)).unwrap();
        assert!(matches!(t.raw.kind, OrliczKind::Power { p } if p == 2.0));
        let n = t.regularized.normalized();
        for u in [1e-3, 0.5, 7.0] {
            assert!((n.eval(u) - u * u).abs() < 1e-9 * u * u);
        }
    }

    #[test]
    fn theta_of_power_closed_form() {
        // θ̃(t) = t²/2 below 1, 1/2 + (t^p − 1)/p above
        let p = 1.5;
        let t = build_theta(&OrliczSpec::power(p)).unwrap();
        for u in [0.01f64, 0.5, 1.0, 3.0, 1e4] {
            let expect = if u <= 1.0 { u * u / 2.0 } else { 0.5 + (u.powf(p) - 1.0) / p };
            let got = t.regularized.eval(u);
            assert!((got - expect).abs() <= 1e-6 * expect, "u={u}: {got} vs {expect}");
            let raw = t.raw.eval(u);
            assert!(got <= raw * (1.0 + 1e-9) && raw <= t.doubling_constant * got * (1.0 + 1e-9));
        }
        assert!(t.regularized.midpoint_convexity_violation(1e-6, 1e6, 2000, 1e-9).is_none());
    }

    #[test]
    fn psi_of_indicator_is_theta() {
        let m = OrliczSpec::power(1.5);
        let f = SampledRealFunction::unit(ClosedForm::Constant { c: 1.0 });
        let psi = build_psi(&m, &f).unwrap();
        for u in [1e-8, 1e-3, 0.3, 1.0] {
            assert!((psi.eval(u) - u * u).abs() < 1e-6 * u * u, "u={u}");
        }
    }

    #[test]
    fn psi_rejects_f_outside_lm() {
        let f = SampledRealFunction::unit(ClosedForm::power_log(1.0, 1.0 / 1.5, 0.0));
        assert!(build_psi(&OrliczSpec::power(1.5), &f).is_err());
    }

    #[test]
    fn psi_is_monotone_and_normalized() {
        let (m, f) = presets::example2(presets::EXAMPLE2_P, presets::EXAMPLE2_ALPHA);
        let psi = build_psi(&m, &f).unwrap();
        assert!((psi.eval(1.0) - 1.0).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 0..400 {
            let u = 10f64.powf(-12.0 + 12.0 * i as f64 / 399.0);
            let v = psi.eval(u);
            assert!(v > prev);
            // ψ(u)/u nondecreasing
            prev = v;
        }
        assert!(psi.quasi_convex_violation(1e-12, 1.0, 400).is_none());
    }

    #[test]
    fn luxem2_degenerate_and_square_cases() {
        let f = presets::l2_f();
        let m = OrliczSpec::power(2.0);
        let base = luxemburg_norm(&m, &f).value;
        assert!((luxem2_rhs(&m, &f, 1).unwrap() - base).abs() < 1e-9 * base);
        // for M = u², ‖σ_n f‖² = n ∫_0^{1/n} f² and the tail adds the rest
        for n in [4u64, 1024] {
            let r = luxem2_rhs(&m, &f, n).unwrap();
            let s = (n as f64).sqrt() * base;
            assert!(r >= s * (1.0 - 1e-6) && r <= s * 2f64.sqrt() * (1.0 + 1e-6), "n={n}");
        }
    }

    #[test]
    fn distribution_match_of_reciprocal_inverse() {
        let psi = OrliczSpec::power_log(1.5, 0.45);
        let f = SampledRealFunction::unit(ClosedForm::ReciprocalInverse { spec: psi.clone() });
        let r = distribution_match(&f, &psi, 10.0, Band::default()).unwrap();
        assert!(r.report.ratio_min > 1.0 - 1e-4 && r.report.ratio_max < 1.0 + 1e-4);
        let g = f.scaled(2.0);
        let r = distribution_match(&g, &psi, 10.0, Band::default()).unwrap();
        assert_eq!(r.report.verdict, EquivalenceVerdict::Equivalent);
    }

    #[test]
    fn luxem1_single_copy_and_homogeneity() {
        let (m, f) = presets::example2(presets::EXAMPLE2_P, presets::EXAMPLE2_ALPHA);
        let psi = build_psi(&m, &f).unwrap();
        let one = luxem1_check(&m, &psi, &f, &[CoeffSeq(vec![1.0])], Band::default()).unwrap();
        let five = luxem1_check(&m, &psi, &f, &[CoeffSeq(vec![5.0])], Band::default()).unwrap();
        assert!((five.lhs[0] - 5.0 * one.lhs[0]).abs() < 1e-9 * five.lhs[0]);
        assert!((five.rhs[0] - 5.0 * one.rhs[0]).abs() < 1e-6 * five.rhs[0]);
        assert!(one.ratio_max.is_finite() && one.ratio_min > 0.0);
    }
}
