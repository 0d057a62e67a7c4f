//! Monte Carlo simulation of independent symmetric copies of a function,
//! empirical Luxemburg norms of their linear combinations, and the sampled
//! equicontinuity modulus of the unit ball they span.
//!
//! Randomness: ChaCha8 with the copy index as stream and the path block as
//! word offset, so every `(copy, block)` cell is an independent, fixed
//! sub-stream and parallel runs reproduce serial ones bit for bit.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::measure_ops::{CoeffSeq, SampledRealFunction};
use crate::norms::sequence_norm;
use crate::orlicz_core::OrliczSpec;
use crate::span_builder::{luxem1_rhs_of, Band, EquivalenceReport};

pub const GENERATOR_ID: &str = "chacha8;stream=copy;offset=block*4096*2";
/// Paths per random sub-stream block.
pub const BLOCK: usize = 4096;
pub const BOOTSTRAP: usize = 100;
/// Samples above this empirical quantile are clamped.
pub const CLAMP_QUANTILE: f64 = 1.0 - 1e-8;

/// Stream ids reserved for non-copy randomness.
const STREAM_BOOTSTRAP: u64 = u64::MAX - 1;
const STREAM_BALL: u64 = u64::MAX - 2;

/// Runs `f` in a pool sized by `ORLICZ_LAB_THREADS` when set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("ORLICZ_LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// `|f_k| = value` on a set of measure `measure`, `rest` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoValued {
    pub value: f64,
    pub measure: f64,
    pub rest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CopySpec {
    /// `count` copies equimeasurable with the nonincreasing `base`.
    Identical { base: SampledRealFunction, count: usize, symmetrize: bool },
    /// Non-identically distributed two-valued copies.
    TwoValued { copies: Vec<TwoValued>, symmetrize: bool },
}

impl CopySpec {
    pub fn identical(base: SampledRealFunction, count: usize) -> CopySpec {
        CopySpec::Identical { base, count, symmetrize: true }
    }

    /// The two-valued sequence `|f_k| = 2^{k/2}` on measure `2^{-k-1}`.
    pub fn counterexample(count: usize) -> CopySpec {
        let copies = (1..=count)
            .map(|k| {
                let (value, measure) = crate::presets::counterexample_levels(k);
                TwoValued { value, measure, rest: 1.0 }
            })
            .collect();
        CopySpec::TwoValued { copies, symmetrize: true }
    }

    pub fn count(&self) -> usize {
        match self {
            CopySpec::Identical { count, .. } => *count,
            CopySpec::TwoValued { copies, .. } => copies.len(),
        }
    }

    fn symmetrize(&self) -> bool {
        match self {
            CopySpec::Identical { symmetrize, .. } | CopySpec::TwoValued { symmetrize, .. } => *symmetrize,
        }
    }

    /// `|f_k|` at the uniform draw `u ∈ (0, 1]`.
    fn magnitude(&self, k: usize, u: f64) -> f64 {
        match self {
            CopySpec::Identical { base, .. } => base.ln_at_depth(-u.ln()).exp(),
            CopySpec::TwoValued { copies, .. } => {
                let c = copies[k];
                if u <= c.measure {
                    c.value
                } else {
                    c.rest
                }
            }
        }
    }
}

/// `paths × copies` samples stored copy-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub paths: usize,
    pub copies: usize,
    pub data: Vec<f64>,
    pub seed: u64,
    pub generator: String,
}

impl SampleBatch {
    pub fn copy(&self, k: usize) -> &[f64] {
        &self.data[k * self.paths..(k + 1) * self.paths]
    }

    /// `Σ a_k f_k` on every path.
    pub fn combine(&self, a: &CoeffSeq) -> Result<Vec<f64>> {
        if a.len() > self.copies {
            return Err(LabError::InvalidInput(format!("{} coefficients for {} copies", a.len(), self.copies)));
        }
        let mut s = vec![0.0; self.paths];
        for (k, &ak) in a.0.iter().enumerate() {
            if ak == 0.0 {
                continue;
            }
            for (x, v) in s.iter_mut().zip(self.copy(k)) {
                *x += ak * v;
            }
        }
        Ok(s)
    }
}

fn uniform_and_sign(rng: &mut ChaCha8Rng) -> (f64, bool) {
    let x = rng.next_u64();
    let u = ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    (u, x & 1 == 1)
}

fn block_rng(seed: u64, stream: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(block as u128 * BLOCK as u128 * 2);
    rng
}

/// Draws `f_k(ω) = ε_k · f*(U_k)` for every copy and path.
pub fn sample_copies(spec: &CopySpec, paths: usize, seed: u64) -> Result<SampleBatch> {
    if paths == 0 {
        return Err(LabError::InvalidInput("at least one path is required".into()));
    }
    let k = spec.count();
    let sym = spec.symmetrize();
    let mut data = vec![0.0; paths * k];
    with_pool(|| {
        data.par_chunks_mut(paths).enumerate().for_each(|(copy, col)| {
            col.par_chunks_mut(BLOCK).enumerate().for_each(|(block, cell)| {
                let mut rng = block_rng(seed, copy as u64, block);
                for x in cell.iter_mut() {
                    let (u, neg) = uniform_and_sign(&mut rng);
                    let v = spec.magnitude(copy, u);
                    *x = if sym && neg { -v } else { v };
                }
            });
        });
    });
    Ok(SampleBatch { paths, copies: k, data, seed, generator: GENERATOR_ID.into() })
}

/// Kolmogorov–Smirnov distance between the empirical law of `|samples|` and
/// the distribution function `n`.
pub fn ks_distance(samples: &[f64], n: &crate::measure_ops::DistributionFn) -> f64 {
    let mut v: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let m = v.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        let target = n.n(*x);
        // empirical measure of {> x} is i/m, of {≥ x} is (i+1)/m
        d = d.max((target - i as f64 / m).abs()).max((target - (i + 1) as f64 / m).abs());
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNorm {
    pub value: f64,
    /// Bootstrap standard error (linearized at the point estimate).
    pub se: f64,
    pub paths: usize,
    pub clamp: f64,
    /// Share of the modular lost to clamping at the point estimate.
    pub tail_loss: f64,
}

fn solve_lambda(m: &OrliczSpec, xs: &[f64], weight: f64) -> f64 {
    let phi = |ll: f64| -> f64 { xs.iter().map(|x| m.ln_value(x.ln() - ll).exp()).sum::<f64>() * weight };
    let top = xs.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    let mut hi = top.ln();
    while phi(hi) > 1.0 {
        hi += 1.0;
    }
    let mut lo = hi - 1.0;
    while phi(lo) <= 1.0 {
        lo -= 1.0;
        if lo < hi - 200.0 {
            return 0.0;
        }
    }
    crate::quad::root_increasing(|ll| 1.0 - phi(ll), lo, hi, 1e-10).2.exp()
}

/// Luxemburg norm of the empirical law of `values` (absolute values taken).
pub fn empirical_norm_of(m: &OrliczSpec, values: &[f64], seed: u64) -> McNorm {
    let n = values.len();
    let mut xs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let mut sorted = xs.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let qi = ((CLAMP_QUANTILE * n as f64).ceil() as usize).clamp(1, n) - 1;
    let clamp = sorted[qi];
    let raw = xs.clone();
    xs.iter_mut().for_each(|x| *x = x.min(clamp));
    let w = 1.0 / n as f64;
    let lam = solve_lambda(m, &xs, w);
    if lam == 0.0 {
        return McNorm { value: 0.0, se: 0.0, paths: n, clamp, tail_loss: 0.0 };
    }
    let ll = lam.ln();
    let g: Vec<f64> = xs.iter().map(|x| m.ln_value(x.ln() - ll).exp()).collect();
    let full: f64 = raw.iter().map(|x| m.ln_value(x.ln() - ll).exp()).sum::<f64>() * w;
    let tail_loss = (full - 1.0).max(0.0) / full.max(1.0);
    // dΦ/d ln λ at the solution
    let h = 1e-4;
    let phi_h: f64 = xs.iter().map(|x| m.ln_value(x.ln() - ll - h).exp()).sum::<f64>() * w;
    let dphi = (phi_h - 1.0) / h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_BOOTSTRAP);
    let mut reps = Vec::with_capacity(BOOTSTRAP);
    for _ in 0..BOOTSTRAP {
        let mut s = 0.0;
        for _ in 0..n {
            s += g[rng.random_range(0..n)];
        }
        let phi_b = s * w;
        // one Newton step in ln λ from the full-sample solution
        reps.push(lam * ((1.0 - phi_b) / dphi).exp());
    }
    let mean = reps.iter().sum::<f64>() / BOOTSTRAP as f64;
    let var = reps.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (BOOTSTRAP - 1) as f64;
    McNorm { value: lam, se: var.sqrt(), paths: n, clamp, tail_loss }
}

/// `‖Σ a_k f_k‖_{L_M}` from the batch, with a bootstrap standard error.
pub fn empirical_luxemburg(m: &OrliczSpec, a: &CoeffSeq, batch: &SampleBatch) -> Result<McNorm> {
    let s = batch.combine(a)?;
    Ok(empirical_norm_of(m, &s, batch.seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsReport {
    pub report: EquivalenceReport,
    /// Bootstrap SE divided by the estimate, per profile.
    pub relative_se: Vec<f64>,
    pub seed: u64,
    pub paths: usize,
    pub generator: String,
}

/// Empirical `‖Σ a_k f_k‖_{L_M}` against the disjoint-sum expression for
/// every profile in the corpus.
pub fn js_check(m: &OrliczSpec, f: &SampledRealFunction, corpus: &[CoeffSeq], paths: usize, seed: u64, band: Band) -> Result<JsReport> {
    let k = corpus.iter().map(|a| a.len()).max().unwrap_or(1);
    let batch = sample_copies(&CopySpec::identical(f.clone(), k), paths, seed)?;
    let base = crate::measure_ops::distribution(f);
    let mut par = vec![];
    let mut lhs = vec![];
    let mut rhs = vec![];
    let mut rel = vec![];
    for a in corpus {
        let e = empirical_luxemburg(m, a, &batch)?;
        par.push(a.0.iter().filter(|v| **v != 0.0).count().max(1) as f64);
        rel.push(e.se / e.value);
        lhs.push(e.value);
        rhs.push(luxem1_rhs_of(m, &base, a)?);
    }
    Ok(JsReport {
        report: EquivalenceReport::new("empirical norm vs disjoint sum", par, lhs, rhs, band),
        relative_se: rel,
        seed,
        paths,
        generator: GENERATOR_ID.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    /// Always "sampled lower envelope": the sup over the ball is estimated
    /// from below.
    pub label: String,
    pub delta: Vec<f64>,
    pub modulus: Vec<f64>,
    pub ball_size: usize,
    pub paths: usize,
    pub seed: u64,
    pub generator: String,
}

impl ModulusCurve {
    /// Slope of `ln modulus` against `ln(1/δ)`; decay shows as a negative slope.
    pub fn trend_slope(&self) -> f64 {
        let x: Vec<f64> = self.delta.iter().map(|d| -d.ln()).collect();
        let y: Vec<f64> = self.modulus.iter().map(|m| m.ln()).collect();
        crate::quad::linear_fit(&x, &y).1
    }

    /// Same slope restricted to `δ ≤ delta_max`, away from the transient at
    /// large δ.
    pub fn tail_slope(&self, delta_max: f64) -> f64 {
        let (x, y): (Vec<f64>, Vec<f64>) =
            self.delta.iter().zip(&self.modulus).filter(|(d, _)| **d <= delta_max).map(|(d, m)| (-d.ln(), m.ln())).unzip();
        if x.len() < 2 {
            return f64::NAN;
        }
        crate::quad::linear_fit(&x, &y).1
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["delta", "modulus"]).expect("in-memory csv");
        for (d, m) in self.delta.iter().zip(&self.modulus) {
            w.write_record([format!("{d:e}"), format!("{m:e}")]).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8")
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Coefficient directions: coordinate vectors and random sparse vectors,
/// dense Gaussian vectors, and geometric profiles, `per_family` of each.
pub fn ball_directions(k: usize, per_family: usize, seed: u64) -> Vec<CoeffSeq> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_BALL);
    let mut out = Vec::with_capacity(3 * per_family);
    for i in 0..per_family {
        let mut a = vec![0.0; k];
        if i < k {
            a[k - 1 - i] = 1.0;
        } else {
            let nnz = rng.random_range(1..=3.min(k));
            for _ in 0..nnz {
                a[rng.random_range(0..k)] = normal(&mut rng);
            }
        }
        out.push(CoeffSeq(a));
    }
    for _ in 0..per_family {
        out.push(CoeffSeq((0..k).map(|_| normal(&mut rng)).collect()));
    }
    for _ in 0..per_family {
        let r: f64 = rng.random_range(0.3..0.95);
        let start = rng.random_range(0..k);
        let mut a = vec![0.0; k];
        for (j, v) in a.iter_mut().enumerate().skip(start) {
            *v = r.powi((j - start) as i32) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        out.push(CoeffSeq(a));
    }
    out
}

/// `‖x*·χ_[0,δ]‖_{L_M}` of the empirical law, with `sorted` descending.
fn head_norm(m: &OrliczSpec, sorted: &[f64], delta: f64) -> f64 {
    let n = sorted.len();
    let top = ((delta * n as f64).round() as usize).clamp(1, n);
    solve_lambda(m, &sorted[..top], 1.0 / n as f64)
}

/// Sampled modulus `δ ↦ max_x ‖x*·χ_[0,δ]‖_{L_M}` over unit vectors of
/// `ℓ_ψ` mapped to `x = Σ a_k f_k`.
pub fn equicontinuity_modulus(
    m: &OrliczSpec,
    psi: &OrliczSpec,
    spec: &CopySpec,
    deltas: &[f64],
    per_family: usize,
    paths: usize,
    seed: u64,
) -> Result<ModulusCurve> {
    let batch = sample_copies(spec, paths, seed)?;
    let dirs = ball_directions(spec.count(), per_family, seed);
    let curves: Vec<Result<Vec<f64>>> = with_pool(|| {
        dirs.par_iter()
            .map(|a| {
                let nrm = sequence_norm(psi, a).value;
                if nrm == 0.0 {
                    return Ok(vec![0.0; deltas.len()]);
                }
                let mut x = batch.combine(&a.scaled(1.0 / nrm))?;
                x.iter_mut().for_each(|v| *v = v.abs());
                x.sort_by(|p, q| q.total_cmp(p));
                Ok(deltas.iter().map(|d| head_norm(m, &x, *d)).collect())
            })
            .collect()
    });
    let mut modulus = vec![0.0f64; deltas.len()];
    for c in curves {
        for (mx, v) in modulus.iter_mut().zip(c?) {
            *mx = mx.max(v);
        }
    }
    Ok(ModulusCurve {
        label: "sampled lower envelope".into(),
        delta: deltas.to_vec(),
        modulus,
        ball_size: dirs.len(),
        paths,
        seed,
        generator: GENERATOR_ID.into(),
    })
}

/// `δ = 2^{-1}, …, 2^{-j_max}`.
pub fn dyadic_deltas(j_max: u32) -> Vec<f64> {
    (1..=j_max).map(|j| 2f64.powi(-(j as i32))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_ops::{distribution, ClosedForm};

    fn ones() -> SampledRealFunction {
        SampledRealFunction::unit(ClosedForm::Constant { c: 1.0 })
    }

    #[test]
    fn constant_copies_are_signs() {
        let b = sample_copies(&CopySpec::identical(ones(), 3), 10_000, 7).unwrap();
        assert!(b.data.iter().all(|v| *v == 1.0 || *v == -1.0));
        for k in 0..3 {
            let mean = b.copy(k).iter().sum::<f64>() / 10_000.0;
            assert!(mean.abs() < 4.0 / 100.0);
        }
    }

    #[test]
    fn batches_are_reproducible_and_thread_independent() {
        let f = SampledRealFunction::unit(ClosedForm::power_log(1.0, 0.5, 0.2));
        let spec = CopySpec::identical(f, 4);
        let a = sample_copies(&spec, 3 * BLOCK + 17, 11).unwrap();
        let b = sample_copies(&spec, 3 * BLOCK + 17, 11).unwrap();
        assert_eq!(a.data, b.data);
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| sample_copies(&spec, 3 * BLOCK + 17, 11).unwrap());
        assert_eq!(a.data, serial.data);
        let c = sample_copies(&spec, 3 * BLOCK + 17, 12).unwrap();
        assert_ne!(a.data, c.data);
        // copies draw from different streams
        assert_ne!(a.copy(0), a.copy(1));
    }

    #[test]
    fn copies_follow_the_distribution() {
        let f = SampledRealFunction::unit(ClosedForm::power_log(1.0, 0.5, 0.2));
        let n = 100_000;
        let b = sample_copies(&CopySpec::identical(f.clone(), 1), n, 3).unwrap();
        let d = ks_distance(b.copy(0), &distribution(&f));
        assert!(d <= 2.0 / (n as f64).sqrt(), "KS {d}");
    }

    #[test]
    fn rademacher_l2_norm_is_euclidean() {
        let b = sample_copies(&CopySpec::identical(ones(), 6), 200_000, 5).unwrap();
        let a = CoeffSeq(vec![1.0, -0.5, 0.25, 2.0, 0.0, 0.1]);
        let e = empirical_luxemburg(&OrliczSpec::power(2.0), &a, &b).unwrap();
        assert!((e.value - a.l2()).abs() <= 3.0 * e.se, "{e:?} vs {}", a.l2());
        let neg = empirical_luxemburg(&OrliczSpec::power(2.0), &a.scaled(-1.0), &b).unwrap();
        assert_eq!(e.value, neg.value);
    }

    #[test]
    fn single_copy_matches_quadrature() {
        // M(f) = t^{-0.45} has finite variance; log-integrable tails such as
        // the worked examples lose the modular mass below t = 1/paths
        let m = OrliczSpec::power(1.5);
        let f = SampledRealFunction::unit(ClosedForm::power_log(1.0, 0.3, 0.0));
        let exact = crate::norms::luxemburg_norm(&m, &f).value;
        let b = sample_copies(&CopySpec::identical(f, 1), 200_000, 9).unwrap();
        let e = empirical_luxemburg(&m, &CoeffSeq(vec![1.0]), &b).unwrap();
        assert!((e.value - exact).abs() <= 3.0 * e.se + 1e-3 * exact, "{e:?} vs {exact}");
    }

    #[test]
    fn quadrupled_paths_agree() {
        let m = OrliczSpec::power(1.5);
        let f = SampledRealFunction::unit(ClosedForm::power_log(1.0, 0.3, 0.0));
        let small = sample_copies(&CopySpec::identical(f.clone(), 8), 25_000, 4).unwrap();
        let large = sample_copies(&CopySpec::identical(f, 8), 100_000, 5).unwrap();
        for a in crate::span_builder::default_corpus(12) {
            let a = CoeffSeq(a.0.into_iter().take(8).collect());
            let x = empirical_luxemburg(&m, &a, &small).unwrap();
            let y = empirical_luxemburg(&m, &a, &large).unwrap();
            let se = (x.se * x.se + y.se * y.se).sqrt();
            assert!((x.value - y.value).abs() <= 2.0 * se, "{a:?}: {x:?} vs {y:?}");
        }
    }

    #[test]
    fn bounded_copies_have_decaying_modulus() {
        let deltas = dyadic_deltas(10);
        let c = equicontinuity_modulus(&OrliczSpec::power(2.0), &OrliczSpec::power(2.0), &CopySpec::identical(ones(), 4), &deltas, 6, 1 << 14, 1).unwrap();
        assert_eq!(c.label, "sampled lower envelope");
        assert!(c.modulus[9] < 0.25 * c.modulus[0]);
        assert!(c.trend_slope() < -0.2);
    }
}
