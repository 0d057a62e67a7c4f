//! Quadrature and root-finding kernels shared by the numerical modules.
//!
//! Integrals over (0,1] are computed in "depth" coordinates `u = -ln t`
//! followed by `w = ln u`, so that power×log singularities at zero and the
//! smooth end at one both become integrands decaying exponentially in `w`.
//! Callers supply the natural logarithm of the integrand, which keeps
//! functions like `t^{-1/p}` usable at depths where `t` itself underflows.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Lower end of the `w = ln(depth)` window; depths below `e^-40` contribute
/// a relative `e^-40` of the integrand at `t = 1`.
pub const W_LO: f64 = -40.0;

/// Default deepest depth for closed-form integrands (`t ≈ exp(-4e15)`).
pub const DEFAULT_W_HI: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { rel_tol: 1e-9, abs_tol: 1e-300, max_intervals: 2000 }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over the
/// segments delimited by `points` (sorted, at least two entries).
pub fn integrate_segments<F: Fn(f64) -> f64>(f: &F, points: &[f64], opts: QuadOptions) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Piece { a: w[0], b: w[1], value: v, error: e });
    }
    if !total.is_finite() {
        return QuadResult { value: total, error: f64::INFINITY, converged: false };
    }
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return QuadResult { value: total, error: err, converged: false };
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        if !total.is_finite() {
            return QuadResult { value: total, error: f64::INFINITY, converged: false };
        }
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    QuadResult { value, error, converged: true }
}

/// ∫_{t_lo}^{t_hi} G(t) dt where `t_lo = exp(-depth_hi)` and
/// `t_hi = exp(-depth_lo)`, with `ln_g(depth)` returning `ln G(exp(-depth))`
/// (or `-inf` where `G` vanishes). `breaks` are extra depths where `G` has
/// kinks or jumps.
pub fn integrate_depth<F: Fn(f64) -> f64>(
    ln_g: &F,
    depth_lo: f64,
    depth_hi: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> QuadResult {
    if depth_hi <= depth_lo {
        return QuadResult { value: 0.0, error: 0.0, converged: true };
    }
    let w_lo = if depth_lo <= 0.0 { W_LO } else { depth_lo.ln() };
    let w_hi = depth_hi.ln();
    let mut pts = vec![w_lo];
    let mut extra: Vec<f64> = breaks
        .iter()
        .filter(|&&d| d > depth_lo && d < depth_hi && d > 0.0)
        .map(|d| d.ln())
        .filter(|&w| w > w_lo && w < w_hi)
        .collect();
    extra.sort_by(|a, b| a.total_cmp(b));
    pts.extend(extra);
    pts.push(w_hi);
    let integrand = |w: f64| {
        let u = w.exp();
        let l = ln_g(u);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            (l - u + w).exp()
        }
    };
    integrate_segments(&integrand, &pts, opts)
}

/// ∫_0^1 G(t) dt in depth coordinates down to `depth_max`.
pub fn integrate_unit<F: Fn(f64) -> f64>(ln_g: &F, depth_max: f64, breaks: &[f64], opts: QuadOptions) -> QuadResult {
    integrate_depth(ln_g, 0.0, depth_max, breaks, opts)
}

/// Bisection for the root of a nondecreasing function `g` on `[lo, hi]`,
/// assuming `g(lo) <= 0 <= g(hi)`. Stops once the bracket is below `tol`.
pub fn bisect_increasing<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64, f64) {
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), lo, hi)
}

/// Root of a continuous nondecreasing `g` with `g(lo) < 0 <= g(hi)` by the
/// Illinois variant of regula falsi; same bracket contract as
/// [`bisect_increasing`].
pub fn root_increasing<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64, f64) {
    let (mut glo, mut ghi) = (g(lo), g(hi));
    if glo >= 0.0 {
        return (lo, lo, lo);
    }
    if ghi <= 0.0 {
        return (hi, hi, hi);
    }
    let mut side = 0i8;
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mut x = (lo * ghi - hi * glo) / (ghi - glo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let gx = g(x);
        if gx == 0.0 {
            return (x, x, x);
        }
        if gx < 0.0 {
            lo = x;
            glo = gx;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            ghi = gx;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    (0.5 * (lo + hi), lo, hi)
}

/// Ordinary least-squares fit `y ≈ c0 + c1·x`; returns `(c0, c1, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (icpt, slope, (rss / n).sqrt())
}

/// Least squares for a small dense system via normal equations (columns are
/// regressors); returns coefficients and rms residual.
pub fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let k = cols.len();
    let n = y.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = (0..n).map(|r| cols[i][r] * cols[j][r]).sum();
        }
        a[i][k] = (0..n).map(|r| cols[i][r] * y[r]).sum();
    }
    // Gaussian elimination with partial pivoting.
    for c in 0..k {
        let piv = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap_or(c);
        a.swap(c, piv);
        let d = a[c][c];
        if d.abs() < 1e-300 {
            continue;
        }
        for r in 0..k {
            if r != c {
                let m = a[r][c] / d;
                for j in c..=k {
                    a[r][j] -= m * a[c][j];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..k).map(|i| if a[i][i].abs() < 1e-300 { 0.0 } else { a[i][k] / a[i][i] }).collect();
    let rss: f64 = (0..n)
        .map(|r| {
            let fit: f64 = (0..k).map(|i| coef[i] * cols[i][r]).sum();
            (y[r] - fit).powi(2)
        })
        .sum();
    (coef, (rss / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_polynomial_exactly() {
        let r = integrate_segments(&|x: f64| x.powi(5) - 2.0 * x, &[0.0, 2.0], QuadOptions::default());
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn depth_integral_of_singular_power() {
        // ∫_0^1 t^{-1/2} dt = 2
        let r = integrate_unit(&|u: f64| 0.5 * u, 1e16, &[], QuadOptions::default());
        assert!((r.value - 2.0).abs() < 1e-9, "{:?}", r);
    }

    #[test]
    fn depth_integral_with_jump() {
        // 3 on (0, 0.25], 1 on (0.25, 1] → 0.75 + 0.75
        let lg = |u: f64| if u >= 4f64.ln() { 3f64.ln() } else { 0.0 };
        let r = integrate_unit(&lg, 1e16, &[4f64.ln()], QuadOptions::default());
        assert!((r.value - 1.5).abs() < 1e-10, "{:?}", r);
    }

    #[test]
    fn bisection_finds_sqrt2() {
        let (x, _, _) = bisect_increasing(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn least_squares_recovers_plane() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let lx: Vec<f64> = x.iter().map(|v| (v + 1.0).ln()).collect();
        let y: Vec<f64> = x.iter().zip(&lx).map(|(a, b)| 1.0 + 2.0 * a - 0.5 * b).collect();
        let (c, res) = least_squares(&[vec![1.0; 20], x.clone(), lx], &y);
        assert!((c[0] - 1.0).abs() < 1e-9 && (c[1] - 2.0).abs() < 1e-9 && (c[2] + 0.5).abs() < 1e-9);
        assert!(res < 1e-9);
    }

    #[test]
    fn illinois_matches_bisection() {
        let g = |x: f64| x.exp() - 3.0 + 0.1 * x;
        let (a, _, _) = bisect_increasing(g, -5.0, 5.0, 1e-13);
        let (b, lo, hi) = root_increasing(g, -5.0, 5.0, 1e-13);
        assert!((a - b).abs() < 1e-12 && lo <= b && b <= hi);
        assert!(g(lo) <= 0.0 && g(hi) >= 0.0);
    }
}
