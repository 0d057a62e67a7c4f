//! The worked (M, f) pairs used by the CLI presets and the acceptance suite.

use crate::measure_ops::{ClosedForm, SampledRealFunction};
use crate::orlicz_core::OrliczSpec;

pub const EXAMPLE1_P: f64 = 1.5;
pub const EXAMPLE2_P: f64 = 1.5;
pub const EXAMPLE2_ALPHA: f64 = 0.3;

/// Knot of the Example 2 Orlicz function: below it a plain power, above it
/// `u^p ln^{-2}(e+u)`, which is only convex once its elasticity exceeds the
/// lower exponent.
pub const EXAMPLE2_KNOT_LN: f64 = 5.0;
pub const EXAMPLE2_LOW_EXPONENT: f64 = 1.1;

/// `L^p` with `f(t) = t^{-1/p} ln^{-3/(2p)}(e/t)`.
pub fn example1(p: f64) -> (OrliczSpec, SampledRealFunction) {
    (OrliczSpec::power(p), example1_f(p))
}

pub fn example1_f(p: f64) -> SampledRealFunction {
    SampledRealFunction::unit(ClosedForm::power_log(1.0, 1.0 / p, -1.5 / p))
}

/// Orlicz function equivalent to `u^p ln^{-2} u` at infinity.
pub fn example2_m(p: f64) -> OrliczSpec {
    OrliczSpec::spliced(
        OrliczSpec::power(EXAMPLE2_LOW_EXPONENT),
        OrliczSpec::power_log(p, -2.0),
        EXAMPLE2_KNOT_LN.exp(),
    )
    .expect("positive knot")
    .normalized()
    .with_convex(true)
}

/// `f(t) = t^{-1/p} ln^{α}(e/t)`.
pub fn example2_f(p: f64, alpha: f64) -> SampledRealFunction {
    SampledRealFunction::unit(ClosedForm::power_log(1.0, 1.0 / p, alpha))
}

pub fn example2(p: f64, alpha: f64) -> (OrliczSpec, SampledRealFunction) {
    (example2_m(p), example2_f(p, alpha))
}

/// Function for the L² checks: `t^{-1/2} ln^{-1}(e/t)` is square integrable
/// (barely), while the Example 2 function is not.
pub fn l2_f() -> SampledRealFunction {
    SampledRealFunction::unit(ClosedForm::power_log(1.0, 0.5, -1.0))
}

/// `|f_k| = 2^{k/2}` on a set of measure `2^{-k-1}`, `1` elsewhere.
pub fn counterexample_levels(k: usize) -> (f64, f64) {
    (2f64.powf(k as f64 / 2.0), 2f64.powi(-(k as i32) - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example2_m_is_convex_and_normalized() {
        let m = example2_m(EXAMPLE2_P);
        assert!((m.eval(1.0) - 1.0).abs() < 1e-12);
        assert!(m.midpoint_convexity_violation(1e-6, 1e12, 4000, 1e-9).is_none());
    }
}
