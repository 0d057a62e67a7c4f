//! Luxemburg norms on `[0, 1]`, sequence norms, L^p norms, the L² tail of a
//! disjoint sum and fundamental functions.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measure_ops::{ClosedForm, CoeffSeq, DistributionFn, Domain, GridSpec, SampledRealFunction};
use crate::orlicz_core::OrliczSpec;
use crate::quad::{integrate_segments, integrate_unit, QuadOptions, DEFAULT_W_HI};

/// Tri-state membership outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    InSpace,
    NotInSpace,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    /// `|Φ(λ) − 1|` at the returned λ.
    pub residual: f64,
    pub bracket: (f64, f64),
    pub membership: Membership,
}

impl NormResult {
    fn zero() -> NormResult {
        NormResult { value: 0.0, residual: 0.0, bracket: (0.0, 0.0), membership: Membership::InSpace }
    }

    fn infinite(lo: f64) -> NormResult {
        NormResult { value: f64::INFINITY, residual: f64::INFINITY, bracket: (lo, f64::INFINITY), membership: Membership::NotInSpace }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Cap on λ relative to the L¹ lower bound before declaring divergence.
pub const LAMBDA_CAP: f64 = 1e6;

fn quad_opts() -> QuadOptions {
    QuadOptions { rel_tol: 1e-11, abs_tol: 1e-300, max_intervals: 4000 }
}

/// ∫₀¹ G over depths `[0, depth_max]`, `+inf` when the quadrature blows up.
fn unit_integral<F: Fn(f64) -> f64>(ln_g: &F, depth_max: f64, breaks: &[f64]) -> f64 {
    let r = integrate_unit(ln_g, depth_max, breaks, quad_opts());
    if r.value.is_finite() {
        r.value
    } else {
        f64::INFINITY
    }
}

/// Classifies `∫₀¹ G` by how the truncated integral grows as the truncation
/// depth is pushed from `e^{w-8}` through `e^{w-4}` to `e^w`.
pub fn tail_trend<F: Fn(f64) -> f64>(ln_g: &F, depth_max: f64, breaks: &[f64]) -> Membership {
    let w = depth_max.ln();
    if w < 12.0 {
        // grid-only data: nothing exists below the last sample
        return if unit_integral(ln_g, depth_max, breaks).is_finite() { Membership::InSpace } else { Membership::NotInSpace };
    }
    let a = unit_integral(ln_g, (w - 8.0).exp(), breaks);
    let b = unit_integral(ln_g, (w - 4.0).exp(), breaks);
    let c = unit_integral(ln_g, depth_max, breaks);
    if !c.is_finite() {
        return Membership::NotInSpace;
    }
    let (d1, d2) = (b - a, c - b);
    if d1 <= 1e-7 * c.max(1e-300) || d2 <= 1e-9 * c.max(1e-300) {
        return Membership::InSpace;
    }
    let ratio = d2 / d1;
    if ratio >= 0.5 {
        Membership::NotInSpace
    } else if ratio < 0.3 {
        Membership::InSpace
    } else {
        Membership::Inconclusive
    }
}

/// ∫₀¹ |x|.
pub fn l1_norm(x: &SampledRealFunction) -> f64 {
    unit_integral(&|d: f64| x.ln_at_depth(d), x.max_depth(), &x.breaks())
}

/// (∫₀¹ |x|^p)^{1/p}.
pub fn lp_norm(p: f64, x: &SampledRealFunction) -> f64 {
    unit_integral(&|d: f64| p * x.ln_at_depth(d), x.max_depth(), &x.breaks()).powf(1.0 / p)
}

/// Largest sampled value on `(0, 1]`, a proxy for the sup norm.
pub fn sup_proxy(x: &SampledRealFunction) -> f64 {
    x.grid
        .iter()
        .zip(&x.values)
        .filter(|(t, _)| **t <= 1.0)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max)
}

/// Modular `Φ(λ) = ∫₀¹ M(|x|/λ)` for `λ = exp(ln_lambda)`.
pub fn modular(m: &OrliczSpec, x: &SampledRealFunction, ln_lambda: f64) -> f64 {
    unit_integral(&|d: f64| m.ln_value(x.ln_at_depth(d) - ln_lambda), x.max_depth(), &x.breaks())
}

/// Luxemburg norm `inf{λ > 0 : ∫₀¹ M(|x|/λ) ≤ 1}`.
pub fn luxemburg_norm(m: &OrliczSpec, x: &SampledRealFunction) -> NormResult {
    let l1 = l1_norm(x);
    if l1 == 0.0 {
        return NormResult::zero();
    }
    if !l1.is_finite() {
        return NormResult::infinite(f64::INFINITY);
    }
    let phi = |ll: f64| modular(m, x, ll);
    let mut lo = l1.ln();
    let mut guard = 0;
    while phi(lo) <= 1.0 && guard < 200 {
        lo -= 1.0;
        guard += 1;
    }
    let cap = (l1 * LAMBDA_CAP).ln();
    let mut hi = lo + std::f64::consts::LN_2;
    while phi(hi) > 1.0 {
        if hi > cap {
            return NormResult::infinite(l1);
        }
        lo = hi;
        hi += std::f64::consts::LN_2;
    }
    let (_, blo, bhi) = crate::quad::root_increasing(|ll| 1.0 - phi(ll), lo, hi, 1e-12);
    let value = bhi.exp();
    let residual = (phi(bhi) - 1.0).abs();
    let membership = if x.closed_form.is_some() {
        let ln_g = |d: f64| m.ln_value(x.ln_at_depth(d) - bhi);
        tail_trend(&ln_g, x.max_depth(), &x.breaks())
    } else {
        Membership::InSpace
    };
    if membership == Membership::NotInSpace {
        return NormResult { value: f64::INFINITY, residual, bracket: (blo.exp(), f64::INFINITY), membership };
    }
    NormResult { value, residual, bracket: (blo.exp(), bhi.exp()), membership }
}

/// The rearrangement of a distribution restricted to `(0, 1]`, i.e.
/// `x*·χ_[0,1]` as a function on the unit interval.
pub fn head_of(dist: &DistributionFn) -> SampledRealFunction {
    SampledRealFunction::from_closed_form(
        ClosedForm::FromDistribution { dist: dist.clone() },
        Domain::UnitInterval,
        GridSpec::default(),
    )
}

/// `‖x*·χ_[0,1]‖_{L_M}` for the rearrangement described by `dist`.
pub fn luxemburg_head(m: &OrliczSpec, dist: &DistributionFn) -> NormResult {
    luxemburg_norm(m, &head_of(dist))
}

/// `inf{λ > 0 : Σ ψ(|a_k|/λ) ≤ 1}`.
pub fn sequence_norm(psi: &OrliczSpec, a: &CoeffSeq) -> NormResult {
    let groups = a.groups();
    if groups.is_empty() {
        return NormResult::zero();
    }
    let sum = |ll: f64| -> f64 { groups.iter().map(|(g, c)| *c as f64 * psi.ln_value(g.ln() - ll).exp()).sum() };
    let amax = groups[groups.len() - 1].0;
    let mut lo = amax.ln();
    while sum(lo) <= 1.0 {
        lo -= 1.0;
    }
    let mut hi = lo + std::f64::consts::LN_2;
    while sum(hi) > 1.0 {
        lo = hi;
        hi += std::f64::consts::LN_2;
    }
    let (_, blo, bhi) = crate::quad::bisect_increasing(|ll| 1.0 - sum(ll), lo, hi, 1e-13);
    NormResult {
        value: bhi.exp(),
        residual: (sum(bhi) - 1.0).abs(),
        bracket: (blo.exp(), bhi.exp()),
        membership: Membership::InSpace,
    }
}

/// `‖x*·χ_[1,∞)‖_{L²}` for the rearrangement described by `dist`.
pub fn l2_tail_of(dist: &DistributionFn) -> Result<f64> {
    if !dist.total.is_finite() {
        return Err(LabError::NotInSpace("the disjoint sum has infinite support".into()));
    }
    if dist.total <= 1.0 {
        return Ok(0.0);
    }
    let top = dist.total.ln();
    let mut pts = vec![0.0];
    pts.extend(dist.jump_depths(usize::MAX).into_iter().map(|d| -d).filter(|v| *v > 0.0 && *v < top));
    pts.push(top);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    // ∫_1^total x*(s)² ds with s = e^v
    let g = |v: f64| {
        let l = dist.ln_rearrangement(-v);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            (2.0 * l + v).exp()
        }
    };
    let r = integrate_segments(&g, &pts, QuadOptions { max_intervals: 20_000, ..QuadOptions::default() });
    if !r.value.is_finite() {
        return Err(LabError::NotInSpace("L² tail diverges".into()));
    }
    Ok(r.value.sqrt())
}

/// `‖(a ⊗̄ f)*·χ_[1,∞)‖_{L²}`.
pub fn l2_tail(a: &CoeffSeq, f: &SampledRealFunction) -> Result<f64> {
    l2_tail_of(&crate::measure_ops::disjoint_sum(a, f))
}

/// `φ_{L_M}(u) = 1/M^{-1}(1/u)`.
pub fn fundamental_lm(m: &OrliczSpec, u: f64) -> f64 {
    (-m.ln_inverse(-u.ln())).exp()
}

/// `φ_{ℓ_ψ}(n) = 1/ψ^{-1}(1/n)`.
pub fn fundamental_seq(psi: &OrliczSpec, n: u64) -> f64 {
    (-psi.ln_inverse(-(n as f64).ln())).exp()
}

/// Deepest depth used for closed-form integrands.
pub fn closed_form_depth() -> f64 {
    DEFAULT_W_HI.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_ops::{dilate, disjoint_sum, distribution, rearrangement};

    fn unit(cf: ClosedForm) -> SampledRealFunction {
        SampledRealFunction::unit(cf)
    }

    #[test]
    fn constant_has_norm_c() {
        for m in [OrliczSpec::power(1.5), OrliczSpec::power_log(1.5, -2.0), OrliczSpec::power(2.0)] {
            let r = luxemburg_norm(&m, &unit(ClosedForm::Constant { c: 3.5 }));
            assert!((r.value - 3.5).abs() < 1e-9, "{:?}", r);
            assert!(r.residual <= 1e-8);
        }
    }

    #[test]
    fn square_of_quarter_power() {
        let r = luxemburg_norm(&OrliczSpec::power(2.0), &unit(ClosedForm::power_log(1.0, 0.25, 0.0)));
        assert!((r.value - 2f64.sqrt()).abs() < 1e-9, "{:?}", r);
        assert_eq!(r.membership, Membership::InSpace);
    }

    #[test]
    fn half_power_is_not_in_l2() {
        let r = luxemburg_norm(&OrliczSpec::power(2.0), &unit(ClosedForm::power_log(1.0, 0.5, 0.0)));
        assert_eq!(r.membership, Membership::NotInSpace);
        assert!(!r.is_finite());
    }

    #[test]
    fn slow_example_matches_brute_force() {
        // f = t^{-1/p} ln^{-3/(2p)}(e/t) with M = Power(p)
        let p = 1.5;
        let f = unit(ClosedForm::power_log(1.0, 1.0 / p, -1.5 / p));
        let r = luxemburg_norm(&OrliczSpec::power(p), &f);
        assert_eq!(r.membership, Membership::InSpace);
        // ∫ f^p = ∫_0^∞ (1+d)^{-3/2} dd = 2 exactly, so the norm is 2^{1/p}.
        assert!((r.value - 2f64.powf(1.0 / p)).abs() < 1e-6 * r.value, "{:?}", r);
        // 10^7-cell midpoint rule on depths [0, 1e6] plus the exact tail.
        let cells = 10_000_000usize;
        let top = 1e6f64;
        let mut s = 0.0;
        let h = (top + 1.0).ln() / cells as f64;
        for i in 0..cells {
            // substitute 1+d = e^v
            let v = (i as f64 + 0.5) * h;
            s += (-0.5 * v).exp() * h;
        }
        s += 2.0 / (top + 1.0).sqrt();
        assert!((s.powf(1.0 / p) - r.value).abs() < 1e-4);
    }

    #[test]
    fn indicator_norm_is_fundamental_function() {
        let m = OrliczSpec::power_log(1.5, -2.0);
        for u in [0.5, 0.1, 1e-3] {
            let x = unit(ClosedForm::steps(vec![0.0, u, 1.0], vec![1.0, 0.0]).unwrap());
            let r = luxemburg_norm(&m, &x);
            assert!((r.value - fundamental_lm(&m, u)).abs() < 1e-6 * r.value, "u={u}");
        }
        assert!((fundamental_lm(&OrliczSpec::power(1.5), 0.2) - 0.2f64.powf(1.0 / 1.5)).abs() < 1e-12);
        assert!((fundamental_lm(&m, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequence_norm_cases() {
        let a = CoeffSeq(vec![3.0, -4.0, 12.0]);
        let r = sequence_norm(&OrliczSpec::power(2.0), &a);
        assert!((r.value - 13.0).abs() < 1e-9);
        let r = sequence_norm(&OrliczSpec::power_log(1.3, 0.7), &CoeffSeq(vec![0.0, -2.5]));
        assert!((r.value - 2.5).abs() < 1e-9);
        let psi = OrliczSpec::power_log(1.5, 0.45);
        for n in [1u64, 2, 7, 1000] {
            let r = sequence_norm(&psi, &CoeffSeq::ones(n as usize));
            assert!((r.value - fundamental_seq(&psi, n)).abs() < 1e-9 * r.value);
        }
        assert!((fundamental_seq(&OrliczSpec::power(2.0), 9) - 3.0).abs() < 1e-12);
        assert_eq!(sequence_norm(&psi, &CoeffSeq(vec![0.0, 0.0])).value, 0.0);
    }

    #[test]
    fn l2_tail_cases() {
        let f = unit(ClosedForm::power_log(1.0, 0.25, 0.3));
        assert_eq!(l2_tail(&CoeffSeq(vec![5.0]), &f).unwrap(), 0.0);
        // n ones: tail² = n ∫_{1/n}^1 f², computed directly in depth coordinates
        for n in [2usize, 16, 1000] {
            let tail = l2_tail(&CoeffSeq::ones(n), &f).unwrap();
            let direct = crate::quad::integrate_depth(&|d: f64| 2.0 * f.ln_at_depth(d), 0.0, (n as f64).ln(), &[], QuadOptions::default()).value;
            let expect = (n as f64 * direct).sqrt();
            assert!((tail - expect).abs() < 1e-5 * expect, "n={n}: {tail} vs {expect}");
        }
    }

    #[test]
    fn l2_tail_of_steps_matches_block_construction() {
        // f = 2 on (0, 0.3], 1 on (0.3, 1]; blocks a_k f on consecutive unit intervals
        let f = unit(ClosedForm::steps(vec![0.0, 0.3, 1.0], vec![2.0, 1.0]).unwrap());
        let a = [1.5f64, -0.5, 3.0, 0.25];
        // brute force: collect all values with widths, sort descending, integrate past s = 1
        let mut cells: Vec<(f64, f64)> = vec![];
        for ak in a {
            cells.push((2.0 * ak.abs(), 0.3));
            cells.push((ak.abs(), 0.7));
        }
        cells.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut s = 0.0f64;
        let mut acc = 0.0;
        for (v, w) in cells {
            let lo = s.max(1.0);
            let hi = s + w;
            if hi > lo {
                acc += v * v * (hi - lo);
            }
            s = hi;
        }
        let tail = l2_tail(&CoeffSeq(a.to_vec()), &f).unwrap();
        assert!((tail - acc.sqrt()).abs() < 1e-9, "{tail} vs {}", acc.sqrt());
    }

    #[test]
    fn head_norm_of_single_copy_is_norm_of_f() {
        let m = OrliczSpec::power(1.5);
        let f = unit(ClosedForm::power_log(1.0, 0.4, 0.2));
        let direct = luxemburg_norm(&m, &f).value;
        let head = luxemburg_head(&m, &distribution(&f)).value;
        assert!((direct - head).abs() < 1e-5 * direct);
        let two = luxemburg_head(&m, &disjoint_sum(&CoeffSeq(vec![2.0]), &f)).value;
        assert!((two - 2.0 * direct).abs() < 1e-5 * direct);
    }

    #[test]
    fn dilation_norm_bound() {
        let m = OrliczSpec::power_log(1.5, -2.0);
        let f = unit(ClosedForm::power_log(1.0, 0.5, 0.3));
        let base = luxemburg_norm(&m, &f).value;
        for tau in [0.25, 2.0, 64.0] {
            let g = dilate(&f, tau).unwrap();
            let v = luxemburg_norm(&m, &g).value;
            assert!(v <= f64::max(1.0, tau) * base * (1.0 + 1e-7), "tau={tau}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn steps_fn() -> impl Strategy<Value = SampledRealFunction> {
            prop::collection::vec((0.05f64..1.0, 0.0f64..5.0), 1..6).prop_map(|c| {
                let w: f64 = c.iter().map(|x| x.0).sum();
                let mut edges = vec![0.0];
                let mut levels = vec![];
                for (a, l) in c {
                    edges.push(edges[edges.len() - 1] + a / w);
                    levels.push(l);
                }
                let k = edges.len() - 1;
                edges[k] = 1.0;
                unit(ClosedForm::steps(edges, levels).unwrap())
            })
        }

        fn spec() -> impl Strategy<Value = OrliczSpec> {
            prop_oneof![
                (1.0f64..2.5).prop_map(OrliczSpec::power),
                (1.2f64..2.0, -0.5f64..0.5).prop_map(|(p, a)| OrliczSpec::power_log(p, a)),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn homogeneity(m in spec(), x in steps_fn(), c in 0.01f64..50.0) {
                let a = luxemburg_norm(&m, &x).value;
                let b = luxemburg_norm(&m, &x.scaled(c)).value;
                prop_assert!((b - c * a).abs() <= 1e-7 * c * a.max(1e-300));
            }

            #[test]
            fn triangle_and_lattice(
                p in 1.0f64..2.5,
                a in 0.0f64..0.5,
                use_log in any::<bool>(),
                cells in prop::collection::vec((0.05f64..1.0, 0.0f64..5.0, 0.0f64..5.0), 1..6),
            ) {
                // elasticity near u = 1 is p - a, so p ≥ 1.2 + a keeps it convex
                let m = if use_log { OrliczSpec::power_log(p.max(1.2) + a, a) } else { OrliczSpec::power(p) };
                prop_assume!(m.midpoint_convexity_violation(1e-3, 1e3, 120, 1e-9).is_none());
                // two step functions on a common partition, so their sum is exact
                let w: f64 = cells.iter().map(|c| c.0).sum();
                let mut edges = vec![0.0];
                for c in &cells {
                    edges.push(edges[edges.len() - 1] + c.0 / w);
                }
                let k = edges.len() - 1;
                edges[k] = 1.0;
                let xs: Vec<f64> = cells.iter().map(|c| c.1).collect();
                let ys: Vec<f64> = cells.iter().map(|c| c.2).collect();
                let sum: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| a + b).collect();
                let mk = |v: Vec<f64>| unit(ClosedForm::steps(edges.clone(), v).unwrap());
                let (nx, ny, ns) = (
                    luxemburg_norm(&m, &mk(xs)).value,
                    luxemburg_norm(&m, &mk(ys)).value,
                    luxemburg_norm(&m, &mk(sum)).value,
                );
                prop_assert!(ns <= (nx + ny) * (1.0 + 1e-6));
                // |x| ≤ |x + y| pointwise
                prop_assert!(nx <= ns * (1.0 + 1e-7));
            }

            #[test]
            fn symmetry_and_embedding(m in spec(), x in steps_fn()) {
                let a = luxemburg_norm(&m, &x).value;
                let b = luxemburg_norm(&m, &rearrangement(&x)).value;
                prop_assert!((a - b).abs() <= 1e-5 * a.max(1e-300));
                if m.convex {
                    prop_assert!(l1_norm(&x) <= a * (1.0 + 1e-7));
                }
                prop_assert!(a <= sup_proxy(&x) * (1.0 + 1e-7));
            }
        }
    }
}
