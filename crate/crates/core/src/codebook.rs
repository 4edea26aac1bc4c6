//! Random codebooks, their incoherence statistics and dimension sizing.

use std::sync::OnceLock;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, HdcError, Result};
use crate::hdcore::{bundle_sum_in, dot, norm_sq, Hypervector, StorageKind};
use crate::rng::{self, CounterRng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CodebookKind {
    /// Coordinates uniform on {−1, +1}.
    DenseBipolar,
    /// Coordinates i.i.d. N(0, σ²).
    Gaussian { sigma: f64 },
    /// Coordinates i.i.d. Bernoulli(p), or exactly `round(p·d)` ones per
    /// codeword when `fixed_weight` is set.
    SparseBinary { p: f64, fixed_weight: bool },
    /// Codewords supplied by the caller (orthogonal sets, level codebooks).
    Explicit,
}

impl CodebookKind {
    pub fn sparse(p: f64) -> Self {
        CodebookKind::SparseBinary {
            p,
            fixed_weight: false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CodebookKind::DenseBipolar => "bipolar",
            CodebookKind::Gaussian { .. } => "gaussian",
            CodebookKind::SparseBinary { .. } => "sparse",
            CodebookKind::Explicit => "explicit",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CodebookKind::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(invalid(format!("gaussian sigma must be positive, got {sigma}")))
            }
            CodebookKind::SparseBinary { p, .. } if !(p > 0.0 && p < 1.0) => {
                Err(invalid(format!("sparse density must lie in (0, 1), got {p}")))
            }
            _ => Ok(()),
        }
    }
}

/// Norm statistics fixed at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodebookStats {
    /// `L`, the smallest codeword norm.
    pub min_norm: f64,
    /// `L²`, kept separately so integer codebooks compare exactly.
    pub min_norm_sq: f64,
    /// `L_max`, the largest codeword norm.
    pub max_norm: f64,
    /// `κ = L² / L_max²`.
    pub kappa: f64,
}

#[derive(Debug)]
pub struct Codebook<T> {
    kind: CodebookKind,
    d: usize,
    seed: u64,
    vectors: Vec<Hypervector<T>>,
    stats: CodebookStats,
    mu: OnceLock<f64>,
    id: OnceLock<String>,
}

impl<T: Scalar> Clone for Codebook<T> {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind,
            d: self.d,
            seed: self.seed,
            vectors: self.vectors.clone(),
            stats: self.stats,
            mu: self.mu.clone(),
            id: self.id.clone(),
        }
    }
}

/// Regenerates codeword `symbol` of a random codebook without materializing
/// the others.
pub fn codeword<T: Scalar>(kind: CodebookKind, d: usize, seed: u64, symbol: usize) -> Result<Hypervector<T>> {
    kind.validate()?;
    let g = CounterRng::new(seed);
    let a = symbol as u64;
    Ok(match kind {
        CodebookKind::DenseBipolar => {
            let mut v = Vec::with_capacity(d);
            for block in 0..d.div_ceil(64) {
                let bits = g.bits(a, block as u64);
                let take = (d - block * 64).min(64);
                v.extend((0..take).map(|j| if (bits >> j) & 1 == 1 { 1i8 } else { -1 }));
            }
            Hypervector::bipolar_unchecked(v)
        }
        CodebookKind::Gaussian { sigma } => {
            let mut v = Vec::with_capacity(d + 1);
            for j in 0..d.div_ceil(2) {
                let (x, y) = g.normal_pair(a, j as u64);
                v.push(T::of(sigma * x));
                v.push(T::of(sigma * y));
            }
            v.truncate(d);
            Hypervector::real(v)
        }
        CodebookKind::SparseBinary { p, fixed_weight: false } => {
            // Empty draws are redrawn from a derived stream so every codeword
            // has positive norm.
            let mut g = g;
            let mut attempt = 0;
            loop {
                let ix: Vec<u32> = (0..d)
                    .filter(|&i| g.uniform(a, i as u64) < p)
                    .map(|i| i as u32)
                    .collect();
                if !ix.is_empty() {
                    break Hypervector::sparse_unchecked(d, ix);
                }
                attempt += 1;
                g = CounterRng::new(rng::derive_seed(seed, attempt));
            }
        }
        CodebookKind::SparseBinary { p, fixed_weight: true } => {
            let k = ((p * d as f64).round() as usize).clamp(1, d);
            let mut r = rng::stream(g.bits(a, u64::MAX), 0);
            let mut ix: Vec<u32> = index::sample(&mut r, d, k).into_iter().map(|i| i as u32).collect();
            ix.sort_unstable();
            Hypervector::sparse_unchecked(d, ix)
        }
        CodebookKind::Explicit => return Err(invalid("explicit codebooks cannot be regenerated")),
    })
}

impl<T: Scalar> Codebook<T> {
    /// Samples `m` codewords of dimension `d`; every coordinate is a pure
    /// function of `(seed, symbol, coordinate)`.
    pub fn generate(kind: CodebookKind, m: usize, d: usize, seed: u64) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(invalid(format!("codebook needs m ≥ 1 and d ≥ 1, got m={m} d={d}")));
        }
        if kind == CodebookKind::Explicit {
            return Err(invalid("use Codebook::from_vectors for explicit codebooks"));
        }
        kind.validate()?;
        let vectors = (0..m)
            .into_par_iter()
            .map(|a| codeword(kind, d, seed, a))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(kind, d, seed, vectors)
    }

    pub fn from_vectors(vectors: Vec<Hypervector<T>>) -> Result<Self> {
        let d = vectors.first().ok_or_else(|| invalid("empty codebook"))?.dim();
        Self::assemble(CodebookKind::Explicit, d, 0, vectors)
    }

    pub(crate) fn assemble(kind: CodebookKind, d: usize, seed: u64, vectors: Vec<Hypervector<T>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(invalid("empty codebook"));
        }
        if let Some(v) = vectors.iter().find(|v| v.dim() != d) {
            return Err(HdcError::DimensionMismatch { left: d, right: v.dim() });
        }
        let sq: Vec<f64> = vectors.iter().map(|v| norm_sq(v).f64()).collect();
        let lo = sq.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sq.iter().cloned().fold(0.0, f64::max);
        if lo <= 0.0 {
            return Err(invalid("codebook contains a zero codeword"));
        }
        let stats = CodebookStats {
            min_norm: lo.sqrt(),
            min_norm_sq: lo,
            max_norm: hi.sqrt(),
            kappa: lo / hi,
        };
        Ok(Self {
            kind,
            d,
            seed,
            vectors,
            stats,
            mu: OnceLock::new(),
            id: OnceLock::new(),
        })
    }

    /// `m` rows of the identity matrix (integer storage), mutually orthogonal.
    pub fn orthogonal(m: usize, d: usize) -> Result<Self> {
        if m > d {
            return Err(invalid(format!("orthogonal codebook needs m ≤ d, got m={m} d={d}")));
        }
        let vectors = (0..m)
            .map(|a| {
                let mut v = vec![0; d];
                v[a] = 1;
                Hypervector::integer_unchecked(v, 1)
            })
            .collect();
        Self::from_vectors(vectors)
    }

    /// First `m` rows of the Sylvester–Hadamard matrix: orthogonal and bipolar.
    /// `d` must be a power of two.
    pub fn hadamard(m: usize, d: usize) -> Result<Self> {
        if !d.is_power_of_two() || m > d || m == 0 {
            return Err(invalid(format!("hadamard codebook needs d a power of two and 1 ≤ m ≤ d, got m={m} d={d}")));
        }
        let vectors = (0..m)
            .map(|a| {
                Hypervector::bipolar_unchecked(
                    (0..d)
                        .map(|j| if (a & j).count_ones() % 2 == 0 { 1 } else { -1 })
                        .collect(),
                )
            })
            .collect();
        Self::from_vectors(vectors)
    }

    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.vectors.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vectors(&self) -> &[Hypervector<T>] {
        &self.vectors
    }

    pub fn get(&self, symbol: usize) -> Result<&Hypervector<T>> {
        self.vectors.get(symbol).ok_or(HdcError::IndexOutOfRange {
            index: symbol,
            size: self.m(),
        })
    }

    pub fn storage_kind(&self) -> StorageKind {
        self.vectors[0].kind()
    }

    pub fn is_bipolar(&self) -> bool {
        self.vectors.iter().all(|v| v.kind() == StorageKind::Bipolar)
    }

    pub fn stats(&self) -> CodebookStats {
        self.stats
    }

    /// `L`.
    pub fn min_norm(&self) -> T {
        T::of(self.stats.min_norm)
    }

    /// `L²`, computed exactly from the smallest squared norm.
    pub fn min_norm_sq(&self) -> T {
        T::of(self.stats.min_norm_sq)
    }

    pub fn max_norm(&self) -> T {
        T::of(self.stats.max_norm)
    }

    pub fn kappa(&self) -> T {
        T::of(self.stats.kappa)
    }

    /// Empirical incoherence `μ = max_{a≠a'} |⟨φ(a), φ(a')⟩| / L²` over all
    /// pairs. Cached after the first call.
    pub fn incoherence(&self) -> Result<T> {
        if self.m() < 2 {
            return Err(invalid("incoherence needs at least two codewords"));
        }
        let mu = *self.mu.get_or_init(|| {
            let l2 = self.stats.min_norm_sq;
            let max = (0..self.m())
                .into_par_iter()
                .map(|a| {
                    (a + 1..self.m())
                        .map(|b| dot(&self.vectors[a], &self.vectors[b]).expect("same dim").f64().abs())
                        .fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max);
            max / l2
        });
        Ok(T::of(mu))
    }

    /// Incoherence if it has already been computed.
    pub fn cached_incoherence(&self) -> Option<T> {
        self.mu.get().map(|&x| T::of(x))
    }

    pub(crate) fn set_cached_incoherence(&self, mu: f64) {
        let _ = self.mu.set(mu);
    }

    /// `⟨φ(a), h⟩` for every symbol `a`.
    pub fn scores(&self, h: &Hypervector<T>) -> Result<Vec<T>> {
        if h.dim() != self.d {
            return Err(HdcError::DimensionMismatch { left: self.d, right: h.dim() });
        }
        Ok(self
            .vectors
            .iter()
            .map(|v| dot(v, h).expect("dims checked"))
            .collect())
    }

    /// Content hash identifying this codebook in serialized artifacts.
    pub fn id(&self) -> &str {
        self.id
            .get_or_init(|| crate::container::content_id(self))
            .as_str()
    }
}

/// Per-trial subset incoherence: for each of `trials` random subsets `S` of
/// size `s`, `max_{a∉S} |Σ_{a'∈S} ⟨φ(a), φ(a')⟩| / L²`.
pub fn subset_incoherence_trials<T: Scalar>(cb: &Codebook<T>, s: usize, trials: usize, seed: u64) -> Result<Vec<T>> {
    if s >= cb.m() {
        return Err(invalid(format!("subset size {s} must be below alphabet size {}", cb.m())));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let l2 = cb.min_norm_sq();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let mut members: Vec<usize> = index::sample(&mut r, cb.m(), s).into_vec();
            members.sort_unstable();
            let refs: Vec<&Hypervector<T>> = members.iter().map(|&a| &cb.vectors()[a]).collect();
            let sum = bundle_sum_in(cb.d(), &refs)?;
            let mut worst = T::zero();
            for (a, v) in cb.vectors().iter().enumerate() {
                if members.binary_search(&a).is_err() {
                    worst = worst.max(dot(v, &sum)?.abs() / l2);
                }
            }
            Ok(worst)
        })
        .collect()
}

/// Empirical maximum of [`subset_incoherence_trials`].
pub fn subset_incoherence_estimate<T: Scalar>(cb: &Codebook<T>, s: usize, trials: usize, seed: u64) -> Result<T> {
    Ok(subset_incoherence_trials(cb, s, trials, seed)?
        .into_iter()
        .fold(T::zero(), T::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Every set of size ≤ s decodes, with probability 1 − δ over the codebook.
    Uniform,
    /// Any fixed set of size ≤ s decodes with probability 1 − δ.
    Pointwise,
}

/// Encoding dimension for bipolar codebooks.
///
/// `Uniform` solves `m²·exp(−μ²d/2) ≤ δ` at `μ = 1/(2s)`, giving
/// `⌈8s²·ln(m²/δ)⌉`. `Pointwise` solves `2m·exp(−τ²d/(2s)) ≤ δ` at `τ = 1/2`,
/// giving `⌈8s·ln(2m/δ)⌉`.
pub fn dimension_for(s: usize, m: usize, delta: f64, regime: Regime) -> Result<usize> {
    if s == 0 || m < 2 || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!(
            "dimension_for needs s ≥ 1, m ≥ 2, δ ∈ (0,1); got s={s} m={m} δ={delta}"
        )));
    }
    let (s, m) = (s as f64, m as f64);
    Ok(match regime {
        Regime::Uniform => uniform_closed_form(s, (m * m / delta).ln()),
        Regime::Pointwise => (8.0 * s * (2.0 * m / delta).ln()).ceil() as usize,
    })
}

fn uniform_closed_form(s: f64, log_term: f64) -> usize {
    (8.0 * s * s * log_term).ceil() as usize
}
