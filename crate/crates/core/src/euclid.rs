//! Distance-preserving encoders for real vectors: position-ID, signed random
//! projection and (quantized) random Fourier features, with distortion,
//! cluster-preservation and robustness diagnostics.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{codeword, Codebook, CodebookKind};
use crate::error::{invalid, HdcError, Result};
use crate::hdcore::{bind, bundle_sum_in, dot, hamming, norm2, sq_euclid, Hypervector};
use crate::metrics::quantiles;
use crate::rng::{self, derive_seed, CounterRng};
use crate::scalar::Scalar;

/// A deterministic map from `ℝⁿ` into hypervectors.
pub trait Encoder<T: Scalar>: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn encode(&self, x: &[T]) -> Result<Hypervector<T>>;
}

fn check_input(n: usize, x: &[impl Copy]) -> Result<()> {
    if x.len() != n {
        return Err(HdcError::DimensionMismatch { left: n, right: x.len() });
    }
    Ok(())
}

/// Monotone bipolar codebook over `m` evenly spaced levels on `[0, 1]`.
///
/// Level 0 is a random bipolar word; each further level flips the next
/// `⌈d/(2(m−1))⌉` coordinates of a seeded permutation, so no coordinate is
/// flipped twice and the extreme levels are orthogonal when `2(m−1)` divides
/// `d`.
pub fn level_codebook<T: Scalar>(m: usize, d: usize, seed: u64) -> Result<Codebook<T>> {
    if m < 2 || d == 0 {
        return Err(invalid(format!("level codebook needs m ≥ 2 and d ≥ 1, got m={m} d={d}")));
    }
    let step = d.div_ceil(2 * (m - 1));
    if step * (m - 1) > d {
        return Err(invalid(format!("{} cumulative flips exceed dimension {d}", step * (m - 1))));
    }
    let base: Hypervector<T> = codeword(CodebookKind::DenseBipolar, d, seed, 0)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut rng::stream(seed, 0x6c6576656c));
    let mut cur = base.as_bipolar().expect("bipolar").to_vec();
    let mut vectors = vec![Hypervector::bipolar(cur.clone())?];
    for k in 1..m {
        for &i in &order[(k - 1) * step..k * step] {
            cur[i] = -cur[i];
        }
        vectors.push(Hypervector::bipolar(cur.clone())?);
    }
    Codebook::assemble(CodebookKind::Explicit, d, seed, vectors)
}

/// Position-ID encoder `φ(x) = Σᵢ L(q(xᵢ)) ⊗ ψ(i)` with `m` quantization
/// levels at `k/(m−1)`, `k = 0..m−1`.
#[derive(Debug, Clone)]
pub struct PositionId<T: Scalar> {
    n: usize,
    m: usize,
    levels: Vec<Codebook<T>>,
    features: Codebook<T>,
}

impl<T: Scalar> PositionId<T> {
    /// Shared level codebook for all features.
    pub fn new(n: usize, m: usize, d: usize, seed: u64) -> Result<Self> {
        Self::build(n, m, d, seed, false)
    }

    /// One independent level codebook per feature.
    pub fn per_feature(n: usize, m: usize, d: usize, seed: u64) -> Result<Self> {
        Self::build(n, m, d, seed, true)
    }

    fn build(n: usize, m: usize, d: usize, seed: u64, per_feature: bool) -> Result<Self> {
        if n == 0 {
            return Err(invalid("position-ID needs n ≥ 1"));
        }
        let count = if per_feature { n } else { 1 };
        let levels = (0..count)
            .map(|f| level_codebook(m, d, derive_seed(seed, f as u64)))
            .collect::<Result<Vec<_>>>()?;
        let features = Codebook::generate(CodebookKind::DenseBipolar, n, d, derive_seed(seed, u64::MAX))?;
        Ok(Self { n, m, levels, features })
    }

    pub fn bins(&self) -> usize {
        self.m
    }

    pub fn levels(&self, feature: usize) -> &Codebook<T> {
        &self.levels[feature % self.levels.len()]
    }

    pub fn features(&self) -> &Codebook<T> {
        &self.features
    }

    /// Level index of `x`, clamped into `[0, 1]` first.
    pub fn quantize(&self, x: T) -> usize {
        let x = x.f64().clamp(0.0, 1.0);
        (x * (self.m - 1) as f64).round() as usize
    }

    pub fn centroid(&self, k: usize) -> f64 {
        k as f64 / (self.m - 1) as f64
    }

    /// `max |⟨L_f(a)⊗ψ(f), L_g(b)⊗ψ(g)⟩| / d` over features `f < g` and all
    /// level pairs.
    ///
    /// Consecutive levels differ on a short list of coordinates, so each
    /// row of inner products over `b` is updated along those lists instead of
    /// recomputed.
    pub fn cross_incoherence(&self) -> Result<T> {
        let n = self.n;
        let d = self.output_dim();
        let lv = |f: usize| -> Vec<&[i8]> {
            self.levels(f).vectors().iter().map(|v| v.as_bipolar().expect("bipolar levels")).collect()
        };
        let diffs: Vec<Vec<Vec<usize>>> = self
            .levels
            .iter()
            .map(|cb| {
                let v: Vec<&[i8]> = cb.vectors().iter().map(|h| h.as_bipolar().expect("bipolar levels")).collect();
                v.windows(2).map(|w| (0..d).filter(|&i| w[0][i] != w[1][i]).collect()).collect()
            })
            .collect();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|f| (f + 1..n).map(move |g| (f, g))).collect();
        let worst = pairs
            .par_iter()
            .map(|&(f, g)| {
                let (pf, pg) = (self.features.vectors()[f].as_bipolar().expect("bipolar"), self.features.vectors()[g].as_bipolar().expect("bipolar"));
                let (lf, lg) = (lv(f), lv(g));
                let dg = &diffs[g % diffs.len()];
                let mut w = 0i64;
                let mut u = vec![0i8; d];
                for a in &lf {
                    for i in 0..d {
                        u[i] = a[i] * pf[i] * pg[i];
                    }
                    let mut v: i64 = u.iter().zip(lg[0]).map(|(&x, &y)| (x * y) as i64).sum();
                    w = w.max(v.abs());
                    for (b, flips) in dg.iter().enumerate() {
                        for &i in flips {
                            v -= 2 * (u[i] * lg[b][i]) as i64;
                        }
                        w = w.max(v.abs());
                    }
                }
                w
            })
            .max()
            .unwrap_or(0);
        Ok(T::of_i64(worst) / T::of_i64(d as i64))
    }

    /// Bound on `|l1_estimate − ‖x − x′‖₁|` beyond the `2n²μ` cross-talk
    /// term: `n/(m−1)` for rounding both points to the level grid plus
    /// `2n(m−1)/d` for the ceiling in the per-level flip count.
    pub fn quantization_slack(&self) -> f64 {
        let (n, m, d) = (self.n as f64, self.m as f64, self.output_dim() as f64);
        n / (m - 1.0) + 2.0 * n * (m - 1.0) / d
    }

    /// `‖h₁ − h₂‖² / (2d)`, an estimate of the L1 distance.
    pub fn l1_estimate(&self, h1: &Hypervector<T>, h2: &Hypervector<T>) -> Result<T> {
        Ok(sq_euclid(h1, h2)? / T::of_i64(2 * self.output_dim() as i64))
    }
}

impl<T: Scalar> Encoder<T> for PositionId<T> {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn output_dim(&self) -> usize {
        self.features.d()
    }

    fn encode(&self, x: &[T]) -> Result<Hypervector<T>> {
        check_input(self.n, x)?;
        let bound = x
            .iter()
            .enumerate()
            .map(|(f, &v)| bind(&self.levels(f).vectors()[self.quantize(v)], &self.features.vectors()[f]))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Hypervector<T>> = bound.iter().collect();
        bundle_sum_in(self.output_dim(), &refs)
    }
}

/// Signed random projection `sign(Φx)` with unit-norm Gaussian rows and
/// `sign(0) = +1`.
#[derive(Debug, Clone)]
pub struct Srp<T> {
    n: usize,
    d: usize,
    rows: Vec<T>,
}

fn gaussian_row(g: &CounterRng, row: usize, n: usize, scale: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    for j in 0..n.div_ceil(2) {
        let (a, b) = g.normal_pair(row as u64, j as u64);
        v.push(a * scale);
        v.push(b * scale);
    }
    v.truncate(n);
    v
}

impl<T: Scalar> Srp<T> {
    pub fn new(n: usize, d: usize, seed: u64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(invalid(format!("SRP needs n, d ≥ 1, got n={n} d={d}")));
        }
        let g = CounterRng::new(seed);
        let rows = (0..d)
            .into_par_iter()
            .flat_map_iter(|r| {
                let v = gaussian_row(&g, r, n, 1.0);
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(move |x| T::of(x / norm))
            })
            .collect();
        Ok(Self { n, d, rows })
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.rows[r * self.n..(r + 1) * self.n]
    }

    /// `θ̂ = hamming / d`, the estimated angle as a fraction of π.
    pub fn angle_estimate(h1: &Hypervector<T>, h2: &Hypervector<T>) -> Result<f64> {
        Ok(hamming(h1, h2)? as f64 / h1.dim() as f64)
    }
}

impl<T: Scalar> Encoder<T> for Srp<T> {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn output_dim(&self) -> usize {
        self.d
    }

    fn encode(&self, x: &[T]) -> Result<Hypervector<T>> {
        check_input(self.n, x)?;
        let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm.is_zero() {
            return Err(invalid("cannot project the zero vector onto the sphere"));
        }
        let bits = (0..self.d)
            .map(|r| {
                let p: T = self.row(r).iter().zip(x).map(|(&a, &b)| a * b).sum();
                if p / norm >= T::zero() {
                    1
                } else {
                    -1
                }
            })
            .collect();
        Hypervector::bipolar(bits)
    }
}

/// Linear random projection `Φx` with rows uniform on the unit sphere; the
/// real-valued counterpart of [`Srp`] sharing its rows for a given seed.
#[derive(Debug, Clone)]
pub struct Projection<T> {
    inner: Srp<T>,
}

impl<T: Scalar> Projection<T> {
    pub fn new(n: usize, d: usize, seed: u64) -> Result<Self> {
        Ok(Self { inner: Srp::new(n, d, seed)? })
    }

    pub fn row(&self, r: usize) -> &[T] {
        self.inner.row(r)
    }
}

impl<T: Scalar> Encoder<T> for Projection<T> {
    fn input_dim(&self) -> usize {
        self.inner.n
    }

    fn output_dim(&self) -> usize {
        self.inner.d
    }

    fn encode(&self, x: &[T]) -> Result<Hypervector<T>> {
        check_input(self.inner.n, x)?;
        Ok(Hypervector::real(
            (0..self.inner.d).map(|r| self.row(r).iter().zip(x).map(|(&a, &b)| a * b).sum()).collect(),
        ))
    }
}

/// Shift-invariant kernel whose spectral distribution seeds the features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "kebab-case")]
pub enum Kernel {
    /// `k(x, x′) = exp(−γ‖x − x′‖²)`, spectrum `N(0, 2γI)`.
    Gaussian { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Gaussian { gamma } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * sq).exp()
            }
        }
    }

    fn spectral_scale(&self) -> f64 {
        match *self {
            Kernel::Gaussian { gamma } => (2.0 * gamma).sqrt(),
        }
    }
}

/// Random Fourier features `√(2/d)·cos(Φx + b)`, or their binary
/// quantization `½(1 + sign(cos(Φx + b) + t))` with `t ~ U[−1, 1]`.
///
/// The `√(2/d)` scale makes `⟨φ(x), φ(x′)⟩` an unbiased estimate of
/// `k(x, x′)`.
#[derive(Debug, Clone)]
pub struct Rff<T> {
    n: usize,
    d: usize,
    kernel: Kernel,
    w: Vec<T>,
    b: Vec<T>,
    t: Vec<T>,
    quantized: bool,
}

impl<T: Scalar> Rff<T> {
    pub fn new(n: usize, d: usize, kernel: Kernel, quantized: bool, seed: u64) -> Result<Self> {
        let Kernel::Gaussian { gamma } = kernel;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("kernel bandwidth must be positive, got {gamma}")));
        }
        if n == 0 || d == 0 {
            return Err(invalid(format!("RFF needs n, d ≥ 1, got n={n} d={d}")));
        }
        let g = CounterRng::new(seed);
        let w = (0..d)
            .into_par_iter()
            .flat_map_iter(|r| gaussian_row(&g, r, n, kernel.spectral_scale()).into_iter().map(T::of))
            .collect();
        let gb = CounterRng::new(derive_seed(seed, 1));
        let gt = CounterRng::new(derive_seed(seed, 2));
        let b = (0..d).map(|r| T::of(2.0 * std::f64::consts::PI * gb.uniform(0, r as u64))).collect();
        let t = (0..d).map(|r| T::of(2.0 * gt.uniform(0, r as u64) - 1.0)).collect();
        Ok(Self { n, d, kernel, w, b, t, quantized })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn quantized(&self) -> bool {
        self.quantized
    }

    fn phases(&self, x: &[T]) -> Vec<T> {
        (0..self.d)
            .map(|r| {
                let row = &self.w[r * self.n..(r + 1) * self.n];
                (row.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>() + self.b[r]).cos()
            })
            .collect()
    }

    /// Encodes `x` in either form regardless of the configured default.
    pub fn rff_encode(&self, x: &[T], quantized: bool) -> Result<Hypervector<T>> {
        check_input(self.n, x)?;
        let c = self.phases(x);
        if quantized {
            let ix = (0..self.d).filter(|&r| c[r] + self.t[r] >= T::zero()).map(|r| r as u32).collect();
            Hypervector::sparse(self.d, ix)
        } else {
            let scale = T::of((2.0 / self.d as f64).sqrt());
            Ok(Hypervector::real(c.into_iter().map(|v| v * scale).collect()))
        }
    }
}

impl<T: Scalar> Encoder<T> for Rff<T> {
    fn input_dim(&self) -> usize {
        self.n
    }

    fn output_dim(&self) -> usize {
        self.d
    }

    fn encode(&self, x: &[T]) -> Result<Hypervector<T>> {
        self.rff_encode(x, self.quantized)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMetric {
    L1,
    L2,
    /// Squared Euclidean distance.
    SqL2,
    /// `cos⁻¹(⟨x, x′⟩ / ‖x‖‖x′‖) / π ∈ [0, 1]`.
    Angular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HdMetric {
    SqEuclid,
    Hamming,
    Angular,
}

fn angle(dotp: f64, n1: f64, n2: f64) -> f64 {
    (dotp / (n1 * n2)).clamp(-1.0, 1.0).acos() / std::f64::consts::PI
}

impl InputMetric {
    pub fn eval<T: Scalar>(&self, x: &[T], y: &[T]) -> f64 {
        let (x, y): (Vec<f64>, Vec<f64>) = (x.iter().map(|v| v.f64()).collect(), y.iter().map(|v| v.f64()).collect());
        match self {
            InputMetric::L1 => x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum(),
            InputMetric::L2 => x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            InputMetric::SqL2 => x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum(),
            InputMetric::Angular => {
                let d: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
                let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
                angle(d, nx, ny)
            }
        }
    }
}

impl HdMetric {
    pub fn eval<T: Scalar>(&self, a: &Hypervector<T>, b: &Hypervector<T>) -> Result<f64> {
        Ok(match self {
            HdMetric::SqEuclid => sq_euclid(a, b)?.f64(),
            HdMetric::Hamming => hamming(a, b)? as f64,
            HdMetric::Angular => angle(dot(a, b)?.f64(), norm2(a).f64(), norm2(b).f64()),
        })
    }
}

/// Fit of `δ_H ≈ α·δ_X ± β` over a set of pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    pub pairs_tested: usize,
    /// Least-squares slope through the origin.
    pub alpha_fit: f64,
    /// `max |δ_H − α·δ_X|`.
    pub beta_max: f64,
    /// Quantiles 0.5, 0.9, 0.99 and 1.0 of `|δ_H − α·δ_X|`.
    pub residual_quantiles: [f64; 4],
}

impl DistortionReport {
    pub fn from_distances(dx: &[f64], dh: &[f64]) -> Result<Self> {
        if dx.len() != dh.len() || dx.len() < 2 {
            return Err(invalid("distortion fit needs at least two paired distances"));
        }
        let sxx: f64 = dx.iter().map(|x| x * x).sum();
        if sxx == 0.0 {
            return Err(invalid("all input distances are zero"));
        }
        let alpha = dx.iter().zip(dh).map(|(x, h)| x * h).sum::<f64>() / sxx;
        let res: Vec<f64> = dx.iter().zip(dh).map(|(x, h)| (h - alpha * x).abs()).collect();
        let q = quantiles(&res, &[0.5, 0.9, 0.99, 1.0]);
        Ok(Self {
            pairs_tested: dx.len(),
            alpha_fit: alpha,
            beta_max: q[3],
            residual_quantiles: [q[0], q[1], q[2], q[3]],
        })
    }

    pub fn beta_over_alpha(&self) -> f64 {
        self.beta_max / self.alpha_fit
    }
}

/// Input and encoded distances for every pair.
pub fn pair_distances<T: Scalar, E: Encoder<T> + ?Sized>(enc: &E, pairs: &[(Vec<T>, Vec<T>)], dx: InputMetric, dh: HdMetric) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = pairs
        .par_iter()
        .map(|(x, y)| Ok((dx.eval(x, y), dh.eval(&enc.encode(x)?, &enc.encode(y)?)?)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(rows.into_iter().unzip())
}

pub fn distortion_report<T: Scalar, E: Encoder<T> + ?Sized>(enc: &E, pairs: &[(Vec<T>, Vec<T>)], dx: InputMetric, dh: HdMetric) -> Result<DistortionReport> {
    if pairs.len() < 2 {
        return Err(invalid("distortion report needs at least two pairs"));
    }
    let (x, h) = pair_distances(enc, pairs, dx, dh)?;
    DistortionReport::from_distances(&x, &h)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    /// `min_x min_{c′ ≠ c(x)} ½(δ_X(x, c′) − δ_X(x, c(x)))`.
    pub min_gap: f64,
    /// Measured `β/α` over all point–centroid pairs.
    pub beta_over_alpha: f64,
    /// Whether the sufficient condition `β/α < min_gap` holds.
    pub condition_met: bool,
    /// Fraction of points whose nearest centroid is unchanged by encoding.
    pub agreement: f64,
    pub preserved: bool,
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

pub fn cluster_preservation_check<T: Scalar, E: Encoder<T> + ?Sized>(
    enc: &E,
    centroids: &[Vec<T>],
    points: &[Vec<T>],
    dx: InputMetric,
    dh: HdMetric,
) -> Result<ClusterReport> {
    if centroids.is_empty() || points.is_empty() {
        return Err(invalid("cluster check needs centroids and points"));
    }
    for (i, a) in centroids.iter().enumerate() {
        if centroids[..i].iter().any(|b| b == a) {
            return Err(HdcError::Duplicate(i));
        }
    }
    let hc = centroids.iter().map(|c| enc.encode(c)).collect::<Result<Vec<_>>>()?;
    let rows = points
        .par_iter()
        .map(|p| {
            let hp = enc.encode(p)?;
            let xs: Vec<f64> = centroids.iter().map(|c| dx.eval(p, c)).collect();
            let hs = hc.iter().map(|c| dh.eval(&hp, c)).collect::<Result<Vec<f64>>>()?;
            Ok((xs, hs))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut gap = f64::INFINITY;
    let mut agree = 0;
    let (mut all_x, mut all_h) = (Vec::new(), Vec::new());
    for (xs, hs) in &rows {
        let c = argmin(xs);
        for (k, &v) in xs.iter().enumerate() {
            if k != c {
                gap = gap.min(0.5 * (v - xs[c]));
            }
        }
        if argmin(hs) == c {
            agree += 1;
        }
        all_x.extend_from_slice(xs);
        all_h.extend_from_slice(hs);
    }
    let beta_over_alpha = match DistortionReport::from_distances(&all_x, &all_h) {
        Ok(r) => r.beta_over_alpha(),
        Err(_) => 0.0,
    };
    Ok(ClusterReport {
        min_gap: gap,
        beta_over_alpha,
        condition_met: beta_over_alpha < gap,
        agreement: agree as f64 / points.len() as f64,
        preserved: agree == points.len(),
    })
}

fn check_eps(eps1: f64, eps2: f64) -> Result<()> {
    if !(eps2 > eps1 && eps1 >= 0.0) {
        return Err(invalid(format!("need ε₂ > ε₁ ≥ 0, got ε₁={eps1} ε₂={eps2}")));
    }
    Ok(())
}

/// `(α/4)(ε₂ − ε₁) − β/2 − ρ` for a squared-Euclidean distortion report;
/// positive means every ε₁-near point stays closer than every ε₂-far point
/// under ρ-bounded noise.
pub fn robustness_margin(eps1: f64, eps2: f64, rho: f64, report: &DistortionReport) -> Result<f64> {
    check_eps(eps1, eps2)?;
    Ok(report.alpha_fit / 4.0 * (eps2 - eps1) - report.beta_max / 2.0 - rho)
}

/// Gaussian noise level `σ < (α/16L)(ε₂ − ε₁) − β/(8L)`, with `L` the largest
/// encoding norm.
pub fn awgn_robust_tolerance(eps1: f64, eps2: f64, max_norm: f64, report: &DistortionReport) -> Result<f64> {
    check_eps(eps1, eps2)?;
    Ok(report.alpha_fit / (16.0 * max_norm) * (eps2 - eps1) - report.beta_max / (8.0 * max_norm))
}

/// Corrupted-coordinate fraction `ω < (α/4d)(ε₂ − ε₁) − β/(2d)` for bipolar
/// encodings.
pub fn adversarial_robust_tolerance(eps1: f64, eps2: f64, d: usize, report: &DistortionReport) -> Result<f64> {
    check_eps(eps1, eps2)?;
    let d = d as f64;
    Ok(report.alpha_fit / (4.0 * d) * (eps2 - eps1) - report.beta_max / (2.0 * d))
}

/// Uniform random unit vector in `ℝⁿ`.
pub fn random_unit(n: usize, r: &mut impl rand::Rng) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(r)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Unit vector at angle `θ·π` from the unit vector `x`, in a random direction.
pub fn unit_at_angle(x: &[f64], theta: f64, r: &mut impl rand::Rng) -> Vec<f64> {
    let n = x.len();
    loop {
        let u = random_unit(n, r);
        let p: f64 = u.iter().zip(x).map(|(a, b)| a * b).sum();
        let mut v: Vec<f64> = u.iter().zip(x).map(|(a, b)| a - p * b).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        let ang = theta * std::f64::consts::PI;
        return x.iter().zip(&v).map(|(a, b)| ang.cos() * a + ang.sin() * b).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdcore::{dot_exact, norm_sq};
    use rand::Rng;

    #[test]
    fn level_codebook_structure() {
        let (m, d) = (9, 512);
        let cb = level_codebook::<f64>(m, d, 3).unwrap();
        assert_eq!(dot_exact(&cb.vectors()[0], &cb.vectors()[m - 1]).unwrap(), 0);
        let step = d / (2 * (m - 1));
        for i in 0..m {
            assert_eq!(norm_sq(&cb.vectors()[i]), d as f64);
            for j in 0..m {
                let expect = d as i64 - 2 * (step * i.abs_diff(j)) as i64;
                assert_eq!(dot_exact(&cb.vectors()[i], &cb.vectors()[j]).unwrap(), expect);
            }
        }
        assert!(level_codebook::<f64>(1, 64, 0).is_err());
    }

    #[test]
    fn level_codebook_ceiling_drift() {
        let (m, d) = (7, 1000);
        let cb = level_codebook::<f64>(m, d, 4).unwrap();
        let slack = 2.0 * (m - 1) as f64 / d as f64;
        for i in 0..m {
            for j in 0..m {
                let got = dot_exact(&cb.vectors()[i], &cb.vectors()[j]).unwrap() as f64 / d as f64;
                let ideal = 1.0 - (i.abs_diff(j)) as f64 / (m - 1) as f64;
                assert!((got - ideal).abs() <= slack, "{i} {j}");
                if j > 0 && i < j {
                    let prev = dot_exact(&cb.vectors()[i], &cb.vectors()[j - 1]).unwrap();
                    assert!(got * d as f64 <= prev as f64);
                }
            }
        }
    }

    #[test]
    fn position_id_identical_and_single_feature() {
        let enc = PositionId::<f64>::new(4, 16, 2048, 1).unwrap();
        let mu = enc.cross_incoherence().unwrap();
        let x = [0.1, 0.5, 0.9, 0.3];
        let h = enc.encode(&x).unwrap();
        assert!(enc.l1_estimate(&h, &h).unwrap() <= 16.0 * mu);
        let one = PositionId::<f64>::new(1, 11, 2000, 2).unwrap();
        for (a, b) in [(0.0, 1.0), (0.2, 0.7), (0.33, 0.34)] {
            let (ha, hb) = (one.encode(&[a]).unwrap(), one.encode(&[b]).unwrap());
            let q = (one.centroid(one.quantize(a)) - one.centroid(one.quantize(b))).abs();
            assert!((one.l1_estimate(&ha, &hb).unwrap() - q).abs() <= 2.0 * 10.0 / 2000.0 + 1e-12);
        }
        assert!(enc.encode(&[0.1]).is_err());
    }

    #[test]
    fn position_id_sandwich_and_norms() {
        let (n, m, d) = (5, 16, 8192);
        for enc in [PositionId::<f64>::new(n, m, d, 5).unwrap(), PositionId::<f64>::per_feature(n, m, d, 5).unwrap()] {
            let mu = enc.cross_incoherence().unwrap();
            let bound = 2.0 * (n * n) as f64 * mu + enc.quantization_slack();
            let mut r = rng::stream(5, 0);
            for _ in 0..100 {
                let x: Vec<f64> = (0..n).map(|_| r.random()).collect();
                let y: Vec<f64> = (0..n).map(|_| r.random()).collect();
                let l1: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
                let (hx, hy) = (enc.encode(&x).unwrap(), enc.encode(&y).unwrap());
                assert!((enc.l1_estimate(&hx, &hy).unwrap() - l1).abs() <= bound);
                let ns = norm_sq(&hx);
                assert!((ns - (n * d) as f64).abs() <= (n * n * d) as f64 * mu);
            }
        }
    }

    #[test]
    fn cross_incoherence_brute_force() {
        let enc = PositionId::<f64>::new(3, 4, 64, 9).unwrap();
        let mut w = 0i64;
        for f in 0..3 {
            for g in 0..3 {
                if f == g {
                    continue;
                }
                for a in 0..4 {
                    for b in 0..4 {
                        let x = bind(&enc.levels(f).vectors()[a], &enc.features().vectors()[f]).unwrap();
                        let y = bind(&enc.levels(g).vectors()[b], &enc.features().vectors()[g]).unwrap();
                        w = w.max(dot_exact(&x, &y).unwrap().abs());
                    }
                }
            }
        }
        assert_eq!(enc.cross_incoherence().unwrap(), w as f64 / 64.0);
    }

    #[test]
    fn srp_basic_identities() {
        let enc = Srp::<f64>::new(8, 1024, 1).unwrap();
        for r in 0..1024 {
            let n: f64 = enc.row(r).iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        let x = [0.3, -1.0, 2.0, 0.0, 0.5, 0.1, -0.2, 0.7];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let (h, hn) = (enc.encode(&x).unwrap(), enc.encode(&neg).unwrap());
        assert_eq!(Srp::angle_estimate(&h, &h).unwrap(), 0.0);
        assert_eq!(Srp::angle_estimate(&h, &hn).unwrap(), 1.0);
        assert_eq!(dot_exact(&h, &hn).unwrap(), 1024 - 2 * hamming(&h, &hn).unwrap() as i64);
        assert!(enc.encode(&[0.0; 8]).is_err());
        let scaled: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        assert_eq!(enc.encode(&scaled).unwrap(), h);
    }

    #[test]
    fn srp_angle_concentration() {
        let (n, d) = (32, 4096);
        let enc = Srp::<f64>::new(n, d, 3).unwrap();
        let tol = (2.0 * (2.0f64 / 0.01).ln() / d as f64).sqrt();
        assert!((tol - 0.051).abs() < 5e-4);
        let mut r = rng::stream(3, 1);
        let pairs = 300;
        let ok = (0..pairs)
            .filter(|_| {
                let x = random_unit(n, &mut r);
                let y = random_unit(n, &mut r);
                let theta = InputMetric::Angular.eval(&x, &y);
                let est = Srp::angle_estimate(&enc.encode(&x).unwrap(), &enc.encode(&y).unwrap()).unwrap();
                (est - theta).abs() <= tol
            })
            .count();
        assert!(ok as f64 >= 0.99 * pairs as f64, "{ok}");
    }

    #[test]
    fn srp_distortion_slope() {
        let (n, d) = (16, 4096);
        let enc = Srp::<f64>::new(n, d, 4).unwrap();
        let mut r = rng::stream(4, 0);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..200)
            .map(|_| {
                let x = random_unit(n, &mut r);
                let t = r.random::<f64>();
                let y = unit_at_angle(&x, t, &mut r);
                (x, y)
            })
            .collect();
        let rep = distortion_report(&enc, &pairs, InputMetric::Angular, HdMetric::Hamming).unwrap();
        assert!((0.9..=1.1).contains(&(rep.alpha_fit / d as f64)), "{}", rep.alpha_fit);
        assert!(rep.beta_max >= 0.0);
    }

    #[test]
    fn unit_at_angle_is_exact() {
        let mut r = rng::stream(0, 0);
        let x = random_unit(10, &mut r);
        for t in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let y = unit_at_angle(&x, t, &mut r);
            assert!((InputMetric::Angular.eval(&x, &y) - t).abs() < 1e-6);
        }
    }

    #[test]
    fn position_id_distortion_slope() {
        let (n, m, d) = (4, 16, 16_384);
        let enc = PositionId::<f64>::new(n, m, d, 8).unwrap();
        let mu = enc.cross_incoherence().unwrap();
        let mut r = rng::stream(8, 0);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..100)
            .map(|_| ((0..n).map(|_| r.random()).collect(), (0..n).map(|_| r.random()).collect()))
            .collect();
        let rep = distortion_report(&enc, &pairs, InputMetric::L1, HdMetric::SqEuclid).unwrap();
        assert!((0.9..=1.1).contains(&(rep.alpha_fit / (2 * d) as f64)));
        assert!(rep.beta_over_alpha() <= 2.0 * (n * n) as f64 * mu + enc.quantization_slack());
    }

    #[test]
    fn projection_matches_srp_signs() {
        let (p, s) = (Projection::<f64>::new(6, 256, 2).unwrap(), Srp::<f64>::new(6, 256, 2).unwrap());
        let x = [0.2, -0.4, 0.1, 0.9, -0.3, 0.05];
        let signs: Vec<i8> = p.encode(&x).unwrap().as_real().unwrap().iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect();
        assert_eq!(s.encode(&x).unwrap().as_bipolar().unwrap(), &signs[..]);
    }

    #[test]
    fn distortion_degenerate_inputs() {
        assert!(DistortionReport::from_distances(&[0.0, 0.0], &[1.0, 2.0]).is_err());
        assert!(DistortionReport::from_distances(&[1.0], &[1.0]).is_err());
        let r = DistortionReport::from_distances(&[1.0, 2.0, 0.0], &[3.0, 6.0, 0.0]).unwrap();
        assert_eq!(r.alpha_fit, 3.0);
        assert_eq!(r.beta_max, 0.0);
    }

    #[test]
    fn rff_self_consistency_and_kernel() {
        let (n, d) = (4, 8192);
        let kernel = Kernel::Gaussian { gamma: 0.5 };
        let enc = Rff::<f64>::new(n, d, kernel, false, 2).unwrap();
        let x = [0.1, 0.2, -0.3, 0.4];
        let h = enc.encode(&x).unwrap();
        let direct: f64 = enc.phases(&x).iter().map(|c| c * c).sum::<f64>() * 2.0 / d as f64;
        assert!((norm_sq(&h) - direct).abs() < 1e-9);
        let mut r = rng::stream(2, 0);
        let mut err = 0.0;
        let pairs = 200;
        for _ in 0..pairs {
            let a: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
            let got = dot(&enc.encode(&a).unwrap(), &enc.encode(&b).unwrap()).unwrap();
            err += (got - kernel.eval(&a, &b)).abs();
        }
        assert!(err / pairs as f64 <= 3.0 / (d as f64).sqrt());
        assert!(Rff::<f64>::new(n, d, Kernel::Gaussian { gamma: 0.0 }, false, 0).is_err());
        let q = enc.rff_encode(&x, true).unwrap();
        assert!(q.as_sparse().is_some());
    }

    #[test]
    fn cluster_checks() {
        let enc = Srp::<f64>::new(2, 2048, 1).unwrap();
        let one = cluster_preservation_check(&enc, &[vec![1.0, 0.0]], &[vec![0.5, 0.5]], InputMetric::Angular, HdMetric::Hamming).unwrap();
        assert!(one.preserved);
        let cents = vec![vec![1.0, 0.0], vec![-1.0, 0.1]];
        let mut r = rng::stream(1, 0);
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let c = &cents[i % 2];
                vec![c[0] + r.random_range(-0.1..0.1), c[1] + r.random_range(-0.1..0.1)]
            })
            .collect();
        let rep = cluster_preservation_check(&enc, &cents, &pts, InputMetric::Angular, HdMetric::Hamming).unwrap();
        assert!(rep.condition_met);
        assert!(rep.preserved);
        assert!(cluster_preservation_check(&enc, &[vec![1.0, 0.0], vec![1.0, 0.0]], &pts, InputMetric::L2, HdMetric::Hamming).is_err());
    }

    #[test]
    fn robustness_margin_algebra() {
        let rep = DistortionReport::from_distances(&[1.0, 2.0], &[4.0, 8.5]).unwrap();
        let rho = rep.alpha_fit / 4.0 * 0.2 - rep.beta_max / 2.0;
        assert!(robustness_margin(0.1, 0.3, rho, &rep).unwrap().abs() < 1e-12);
        assert!(robustness_margin(0.0, 100.0, 0.0, &rep).unwrap() > 0.0);
        assert!(robustness_margin(0.3, 0.3, 0.0, &rep).is_err());
    }
}
