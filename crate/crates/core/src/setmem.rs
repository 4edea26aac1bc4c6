//! Set encoding by bundling, threshold membership decoding, cardinality
//! estimates, Bloom-filter mode and context-dependent thinning.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, CodebookKind};
use crate::container::{read_hypervector, write_hypervector};
use crate::error::{invalid, HdcError, Result};
use crate::hdcore::{binarize, bundle_max_in, bundle_sum_in, clamp, dot, norm1, norm_sq, Hypervector, StorageKind};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bundling {
    /// Element-wise sum.
    Sum,
    /// Element-wise maximum of sparse binary codewords (Bloom filter).
    Max,
    /// Element-wise sum followed by `g_t(x) = 1(x ≥ t)`.
    Threshold(f64),
}

impl Bundling {
    fn name(&self) -> String {
        match self {
            Bundling::Sum => "sum".into(),
            Bundling::Max => "max".into(),
            Bundling::Threshold(t) => format!("threshold:{t:?}"),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Bundling::Sum),
            "max" => Ok(Bundling::Max),
            _ => s
                .strip_prefix("threshold:")
                .and_then(|t| t.parse().ok())
                .map(Bundling::Threshold)
                .ok_or_else(|| HdcError::Format(format!("unknown bundling {s}"))),
        }
    }
}

/// Membership rule for binary (Max or Threshold) encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryRule {
    /// Accept when `⟨φ(a), φ(S)⟩ = ‖φ(a)‖₁`: every bit of `φ(a)` is set.
    #[default]
    ExactContainment,
    /// Accept when `⟨φ(a), φ(S)⟩ ≥ L²/2`.
    HalfNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSet<T> {
    pub vector: Hypervector<T>,
    pub codebook_id: String,
    pub bundling: Bundling,
    pub s_declared: Option<usize>,
}

fn check_items(items: &[usize], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    for &a in items {
        if a >= m {
            return Err(HdcError::IndexOutOfRange { index: a, size: m });
        }
        if std::mem::replace(&mut seen[a], true) {
            return Err(HdcError::Duplicate(a));
        }
    }
    Ok(())
}

/// Bundles the codewords of `items`.
pub fn encode_set<T: Scalar>(items: &[usize], cb: &Codebook<T>, bundling: Bundling) -> Result<EncodedSet<T>> {
    check_items(items, cb.m())?;
    // canonical order keeps floating-point sums bit-identical under permutation
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    let vs: Vec<&Hypervector<T>> = sorted.iter().map(|&a| &cb.vectors()[a]).collect();
    let vector = match bundling {
        Bundling::Sum => bundle_sum_in(cb.d(), &vs)?,
        Bundling::Max => {
            if !matches!(cb.kind(), CodebookKind::SparseBinary { .. }) && cb.storage_kind() != StorageKind::Sparse {
                return Err(HdcError::BundlingMode("max with a non-sparse codebook"));
            }
            bundle_max_in(cb.d(), &vs)?
        }
        Bundling::Threshold(t) => {
            let sum = bundle_sum_in(cb.d(), &vs)?;
            let sum = if sum.is_dense() { sum } else { sum.to_integer()? };
            binarize(&sum, T::of(t))?
        }
    };
    Ok(EncodedSet {
        vector,
        codebook_id: cb.id().to_string(),
        bundling,
        s_declared: None,
    })
}

impl<T: Scalar> EncodedSet<T> {
    pub fn with_declared_size(mut self, s: usize) -> Self {
        self.s_declared = Some(s);
        self
    }

    /// Same set with a replaced (typically corrupted) vector.
    pub fn with_vector(&self, vector: Hypervector<T>) -> Result<Self> {
        if vector.dim() != self.vector.dim() {
            return Err(HdcError::DimensionMismatch {
                left: self.vector.dim(),
                right: vector.dim(),
            });
        }
        Ok(Self {
            vector,
            ..self.clone()
        })
    }

    /// Saturates a Sum bundle to `[−c, c]`.
    pub fn clamped(&self, c: i32) -> Result<Self> {
        if self.bundling != Bundling::Sum {
            return Err(HdcError::BundlingMode("clamping a non-sum"));
        }
        self.with_vector(clamp(&self.vector, c)?)
    }

    fn check(&self, cb: &Codebook<T>) -> Result<()> {
        if self.codebook_id != cb.id() || self.vector.dim() != cb.d() {
            return Err(HdcError::CodebookMismatch);
        }
        Ok(())
    }

    fn rule(&self, rule: QueryRule) -> QueryRule {
        match self.bundling {
            Bundling::Sum => QueryRule::HalfNorm,
            _ => rule,
        }
    }
}

/// Clamping bound `⌈2√s⌉` used for saturated Sum bundles.
pub fn clamp_bound(s: usize) -> i32 {
    (2.0 * (s as f64).sqrt()).ceil() as i32
}

fn accepts<T: Scalar>(score: T, codeword: &Hypervector<T>, half: T, rule: QueryRule) -> bool {
    match rule {
        QueryRule::HalfNorm => score >= half,
        QueryRule::ExactContainment => score >= norm1(codeword),
    }
}

/// Membership with the default rule: `≥ L²/2` for sums, exact containment
/// for binary encodings.
pub fn member_query<T: Scalar>(es: &EncodedSet<T>, a: usize, cb: &Codebook<T>) -> Result<bool> {
    member_query_with(es, a, cb, QueryRule::default())
}

/// Membership with an explicit rule for binary encodings. Sum encodings always
/// use the `L²/2` threshold.
pub fn member_query_with<T: Scalar>(es: &EncodedSet<T>, a: usize, cb: &Codebook<T>, rule: QueryRule) -> Result<bool> {
    es.check(cb)?;
    let v = cb.get(a)?;
    let half = cb.min_norm_sq() / T::of(2.0);
    Ok(accepts(dot(v, &es.vector)?, v, half, es.rule(rule)))
}

pub fn decode_set<T: Scalar>(es: &EncodedSet<T>, cb: &Codebook<T>) -> Result<Vec<usize>> {
    decode_set_with(es, cb, QueryRule::default())
}

pub fn decode_set_with<T: Scalar>(es: &EncodedSet<T>, cb: &Codebook<T>, rule: QueryRule) -> Result<Vec<usize>> {
    es.check(cb)?;
    let rule = es.rule(rule);
    let half = cb.min_norm_sq() / T::of(2.0);
    let mut out = Vec::new();
    for (a, v) in cb.vectors().iter().enumerate() {
        if accepts(dot(v, &es.vector)?, v, half, rule) {
            out.push(a);
        }
    }
    Ok(out)
}

fn require_sum<T>(es: &EncodedSet<T>) -> Result<()> {
    match es.bundling {
        Bundling::Sum => Ok(()),
        Bundling::Max => Err(HdcError::BundlingMode("max")),
        Bundling::Threshold(_) => Err(HdcError::BundlingMode("threshold")),
    }
}

/// `‖φ(S)‖² / L²`.
pub fn size_estimate<T: Scalar>(es: &EncodedSet<T>, cb: &Codebook<T>) -> Result<T> {
    require_sum(es)?;
    es.check(cb)?;
    Ok(norm_sq(&es.vector) / cb.min_norm_sq())
}

/// `⟨φ(S), φ(S′)⟩ / L²`.
pub fn intersection_estimate<T: Scalar>(a: &EncodedSet<T>, b: &EncodedSet<T>, cb: &Codebook<T>) -> Result<T> {
    require_sum(a)?;
    require_sum(b)?;
    a.check(cb)?;
    b.check(cb)?;
    Ok(dot(&a.vector, &b.vector)? / cb.min_norm_sq())
}

/// `|S| + |S′| − |S ∩ S′|` from the two estimates above.
pub fn union_estimate<T: Scalar>(a: &EncodedSet<T>, b: &EncodedSet<T>, cb: &Codebook<T>) -> Result<T> {
    Ok(size_estimate(a, cb)? + size_estimate(b, cb)? - intersection_estimate(a, b, cb)?)
}

/// Context-dependent thinning: each round replaces `v` with `v ∧ σ_r(v)` for
/// a permutation `σ_r` seeded by `(perm_seed, r)`.
pub fn cdt_thin<T: Scalar>(v: &Hypervector<T>, rounds: usize, perm_seed: u64) -> Result<Hypervector<T>> {
    let mut cur = v
        .as_sparse()
        .ok_or(HdcError::Storage {
            op: "cdt_thin",
            found: v.kind(),
        })?
        .to_vec();
    let d = v.dim();
    for r in 0..rounds {
        if cur.is_empty() {
            break;
        }
        let mut sigma: Vec<u32> = (0..d as u32).collect();
        sigma.shuffle(&mut rng::stream(perm_seed, r as u64));
        let mut moved: Vec<u32> = cur.iter().map(|&i| sigma[i as usize]).collect();
        moved.sort_unstable();
        cur.retain(|i| moved.binary_search(i).is_ok());
    }
    Ok(Hypervector::sparse_unchecked(d, cur))
}

/// Sparse-codebook sizing for Bloom mode: `p = ln2/s`, and the classical
/// calibration `d = ⌈s·ln(1/δ) / (ln 2)²⌉` (≈ 1.443·s·log₂(1/δ) bits), so
/// that `round(p·d)` fixed-weight codewords reach false-positive rate ≈ δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BloomParams {
    pub p: f64,
    pub d: usize,
    pub hashes: usize,
}

pub fn bloom_parameters(s: usize, delta: f64) -> Result<BloomParams> {
    if s == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("bloom sizing needs s ≥ 1 and δ ∈ (0,1), got s={s} δ={delta}")));
    }
    let ln2 = std::f64::consts::LN_2;
    let p = ln2 / s as f64;
    let d = ((s as f64) * (1.0 / delta).ln() / (ln2 * ln2)).ceil() as usize;
    let hashes = ((p * d as f64).round() as usize).max(1);
    Ok(BloomParams { p, d, hashes })
}

pub fn write_encoded_set<T: Scalar>(w: &mut impl Write, es: &EncodedSet<T>) -> Result<()> {
    let mut meta = BTreeMap::new();
    meta.insert("type".to_string(), "encoded-set".to_string());
    meta.insert("bundling".to_string(), es.bundling.name());
    meta.insert("codebook".to_string(), es.codebook_id.clone());
    if let Some(s) = es.s_declared {
        meta.insert("s".to_string(), s.to_string());
    }
    write_hypervector(w, &es.vector, &meta)
}

pub fn read_encoded_set<T: Scalar>(r: &mut impl BufRead) -> Result<EncodedSet<T>> {
    let (vector, meta) = read_hypervector(r)?;
    let get = |k: &str| meta.get(k).ok_or_else(|| HdcError::Format(format!("missing {k}")));
    if get("type")? != "encoded-set" {
        return Err(HdcError::Format("not an encoded set".into()));
    }
    let s_declared = match meta.get("s") {
        Some(s) => Some(s.parse().map_err(|_| HdcError::Format("bad declared size".into()))?),
        None => None,
    };
    Ok(EncodedSet {
        vector,
        codebook_id: get("codebook")?.clone(),
        bundling: Bundling::parse(get("bundling")?)?,
        s_declared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::BufReader;

    type Cb = Codebook<f64>;

    fn subsets_up_to(m: usize, s: usize) -> Vec<Vec<usize>> {
        (0u32..1 << m)
            .filter(|mask| mask.count_ones() as usize <= s)
            .map(|mask| (0..m).filter(|&i| mask >> i & 1 == 1).collect())
            .collect()
    }

    #[test]
    fn trivial_encodings() {
        let cb = Cb::generate(CodebookKind::DenseBipolar, 10, 64, 0).unwrap();
        let e = encode_set(&[], &cb, Bundling::Sum).unwrap();
        assert_eq!(e.vector.to_i64_vec().unwrap(), vec![0; 64]);
        assert!(decode_set(&e, &cb).unwrap().is_empty());
        let one = encode_set(&[3], &cb, Bundling::Sum).unwrap();
        assert_eq!(one.vector.to_i64_vec(), cb.vectors()[3].to_i64_vec());
        assert!(matches!(encode_set(&[1, 1], &cb, Bundling::Sum), Err(HdcError::Duplicate(1))));
        assert!(matches!(encode_set(&[10], &cb, Bundling::Sum), Err(HdcError::IndexOutOfRange { .. })));
        assert!(encode_set(&[1], &cb, Bundling::Max).is_err());
    }

    #[test]
    fn max_bundle_matches_dense_maximum() {
        let cb = Cb::generate(CodebookKind::sparse(0.1), 20, 300, 4).unwrap();
        let items = [2, 5, 11, 17];
        let e = encode_set(&items, &cb, Bundling::Max).unwrap();
        let mut oracle = vec![0i64; 300];
        for &a in &items {
            for (o, x) in oracle.iter_mut().zip(cb.vectors()[a].to_i64_vec().unwrap()) {
                *o = (*o).max(x);
            }
        }
        assert_eq!(e.vector.to_i64_vec().unwrap(), oracle);
        let t = encode_set(&items, &cb, Bundling::Threshold(1.0)).unwrap();
        assert_eq!(t.vector, e.vector);
    }

    #[test]
    fn orthogonal_membership_and_estimates() {
        let cb = Cb::orthogonal(8, 8).unwrap();
        let s = encode_set(&[0, 2, 5], &cb, Bundling::Sum).unwrap();
        let t = encode_set(&[2, 5, 6, 7], &cb, Bundling::Sum).unwrap();
        for a in 0..8 {
            assert_eq!(dot(&cb.vectors()[a], &s.vector).unwrap(), if [0, 2, 5].contains(&a) { 1.0 } else { 0.0 });
        }
        assert_eq!(decode_set(&s, &cb).unwrap(), vec![0, 2, 5]);
        assert_eq!(size_estimate(&s, &cb).unwrap(), 3.0);
        assert_eq!(intersection_estimate(&s, &t, &cb).unwrap(), 2.0);
        assert_eq!(union_estimate(&s, &t, &cb).unwrap(), 5.0);
        let u = encode_set(&[1, 3], &cb, Bundling::Sum).unwrap();
        assert_eq!(intersection_estimate(&s, &u, &cb).unwrap(), 0.0);
        assert_eq!(union_estimate(&s, &u, &cb).unwrap(), 5.0);
    }

    #[test]
    fn codebook_mismatch_is_rejected() {
        let a = Cb::generate(CodebookKind::DenseBipolar, 5, 64, 0).unwrap();
        let b = Cb::generate(CodebookKind::DenseBipolar, 5, 64, 1).unwrap();
        let e = encode_set(&[1], &a, Bundling::Sum).unwrap();
        assert!(matches!(member_query(&e, 1, &b), Err(HdcError::CodebookMismatch)));
    }

    #[test]
    fn estimates_undefined_for_max() {
        let cb = Cb::generate(CodebookKind::sparse(0.1), 10, 100, 0).unwrap();
        let e = encode_set(&[1, 2], &cb, Bundling::Max).unwrap();
        assert!(matches!(size_estimate(&e, &cb), Err(HdcError::BundlingMode(_))));
        assert!(intersection_estimate(&e, &e, &cb).is_err());
    }

    #[test]
    fn incoherent_codebooks_decode_every_small_subset() {
        // Exhaustive over all subsets of size ≤ s whenever the measured μ < 1/(2s).
        let mut checked = 0;
        for seed in 0..20 {
            let cb = Cb::generate(CodebookKind::DenseBipolar, 10, 512, seed).unwrap();
            let mu = cb.incoherence().unwrap();
            let s = 3;
            if mu >= 1.0 / (2.0 * s as f64) {
                continue;
            }
            checked += 1;
            for set in subsets_up_to(10, s) {
                let e = encode_set(&set, &cb, Bundling::Sum).unwrap();
                assert_eq!(decode_set(&e, &cb).unwrap(), set);
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn order_independent_encoding() {
        let cb = Cb::generate(CodebookKind::Gaussian { sigma: 1.0 }, 10, 128, 3).unwrap();
        let a = encode_set(&[1, 4, 7, 9], &cb, Bundling::Sum).unwrap();
        let b = encode_set(&[9, 7, 1, 4], &cb, Bundling::Sum).unwrap();
        assert_eq!(a.vector, b.vector);
    }

    #[test]
    fn size_estimate_deterministic_bound() {
        let cb = Cb::generate(CodebookKind::DenseBipolar, 40, 2048, 8).unwrap();
        let mu = cb.incoherence().unwrap();
        let mut r = rng::stream(1, 0);
        for s in 1..=10 {
            let mut items: Vec<usize> = (0..40).collect();
            items.shuffle(&mut r);
            items.truncate(s);
            let e = encode_set(&items, &cb, Bundling::Sum).unwrap();
            let est = size_estimate(&e, &cb).unwrap();
            assert!((est - s as f64).abs() <= (s * s) as f64 * mu + 1e-9);
        }
    }

    #[test]
    fn clamped_bundles_still_decode_with_margin() {
        // Clamping is ρ-bounded noise: ρ = max_a |⟨φ(a), clamp(v) − v⟩|.
        let s = 9;
        let c = clamp_bound(s);
        assert_eq!(c, 6);
        let cb = Cb::generate(CodebookKind::DenseBipolar, 50, 4096, 2).unwrap();
        let mu = cb.incoherence().unwrap();
        let e = encode_set(&(0..s).collect::<Vec<_>>(), &cb, Bundling::Sum).unwrap();
        let cl = e.clamped(c).unwrap();
        let delta = crate::hdcore::sub(&cl.vector, &e.vector).unwrap();
        let rho = cb
            .vectors()
            .iter()
            .map(|v| dot(v, &delta).unwrap().abs())
            .fold(0.0, f64::max);
        if 0.5 - s as f64 * mu - rho / cb.min_norm_sq() > 0.0 {
            assert_eq!(decode_set(&cl, &cb).unwrap(), (0..s).collect::<Vec<_>>());
        }
        assert_eq!(decode_set(&cl, &cb).unwrap(), (0..s).collect::<Vec<_>>());
    }

    #[test]
    fn cdt_examples() {
        let z = Hypervector::<f64>::sparse(100, vec![]).unwrap();
        assert_eq!(cdt_thin(&z, 3, 1).unwrap(), z);
        let cb = Cb::generate(CodebookKind::sparse(0.3), 1, 100, 0).unwrap();
        let v = &cb.vectors()[0];
        assert_eq!(&cdt_thin(v, 0, 1).unwrap(), v);
        let once = cdt_thin(v, 1, 1).unwrap();
        assert!(once.as_sparse().unwrap().iter().all(|i| v.as_sparse().unwrap().contains(i)));
        assert!(cdt_thin(&Hypervector::<f64>::identity(4), 1, 0).is_err());
    }

    #[test]
    fn cdt_one_round_squares_density() {
        let q = 0.2;
        let d = 20_000;
        let mut total = 0.0;
        let reps = 20;
        for seed in 0..reps {
            let v = crate::codebook::codeword::<f64>(CodebookKind::sparse(q), d, seed, 0).unwrap();
            total += cdt_thin(&v, 1, seed + 100).unwrap().support_size() as f64 / d as f64;
        }
        let mean = total / reps as f64;
        assert!((mean - q * q).abs() < 0.004, "{mean}");
    }

    #[test]
    fn bloom_zero_false_negatives_and_calibrated_fpr() {
        let bp = bloom_parameters(100, 0.01).unwrap();
        assert_eq!(bp.d, 959);
        assert_eq!(bp.hashes, 7);
        let kind = CodebookKind::SparseBinary { p: bp.p, fixed_weight: true };
        let cb = Cb::generate(kind, 2100, bp.d, 5).unwrap();
        let e = encode_set(&(0..100).collect::<Vec<_>>(), &cb, Bundling::Max).unwrap();
        let decoded = decode_set(&e, &cb).unwrap();
        assert!((0..100).all(|a| decoded.contains(&a)));
        let fp = decoded.iter().filter(|&&a| a >= 100).count();
        // ≈ 0.01 · 2000 expected; 60 is beyond four standard deviations.
        assert!(fp <= 60, "{fp}");
    }

    #[test]
    fn half_norm_rule_on_bloom_encodings() {
        let cb = Cb::generate(CodebookKind::sparse(0.05), 30, 500, 1).unwrap();
        let e = encode_set(&[0, 1, 2], &cb, Bundling::Max).unwrap();
        for a in 0..3 {
            assert!(member_query_with(&e, a, &cb, QueryRule::HalfNorm).unwrap());
            assert!(member_query(&e, a, &cb).unwrap());
        }
    }

    #[test]
    fn encoded_set_roundtrip() {
        let cb = Cb::generate(CodebookKind::DenseBipolar, 10, 77, 0).unwrap();
        let e = encode_set(&[1, 2, 3], &cb, Bundling::Sum).unwrap().with_declared_size(5);
        let mut buf = Vec::new();
        write_encoded_set(&mut buf, &e).unwrap();
        let back: EncodedSet<f64> = read_encoded_set(&mut BufReader::new(&buf[..])).unwrap();
        assert_eq!(back, e);
        let sp = Cb::generate(CodebookKind::sparse(0.1), 10, 77, 0).unwrap();
        let t = encode_set(&[1, 2], &sp, Bundling::Threshold(1.0)).unwrap();
        let mut buf = Vec::new();
        write_encoded_set(&mut buf, &t).unwrap();
        assert_eq!(read_encoded_set::<f64>(&mut BufReader::new(&buf[..])).unwrap(), t);
    }
}
