//! Passive and adversarial corruption of encodings, ρ-boundedness and the
//! closed-form noise tolerances of threshold decoding.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, CodebookKind};
use crate::error::{invalid, HdcError, Result};
use crate::hdcore::{dot, norm2, Hypervector, Storage, StorageKind};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum NoiseModel {
    /// `Δ ~ N(0, σ²I)`.
    Awgn { sigma: f64 },
    /// `Δ ~ unif({−c, …, c}^d)`.
    UniformInteger { c: i32 },
    /// `Δ_i = ±1` with probability `θ/2` each, then truncation to `{0, 1}`.
    TernaryFlip { theta: f64 },
    /// `Δ = −ωL·φ(t)/‖φ(t)‖` against a target symbol `t`.
    AdversarialL2 { omega: f64 },
    /// Unit steps against `φ(t)` with `‖Δ‖₁ ≤ budget`.
    AdversarialL1 { budget: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Awgn,
    UniformInteger,
    TernaryFlip,
    AdversarialL2,
    AdversarialL1,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 5] = [
        NoiseKind::Awgn,
        NoiseKind::UniformInteger,
        NoiseKind::TernaryFlip,
        NoiseKind::AdversarialL2,
        NoiseKind::AdversarialL1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::Awgn => "awgn",
            NoiseKind::UniformInteger => "uniform-integer",
            NoiseKind::TernaryFlip => "ternary-flip",
            NoiseKind::AdversarialL2 => "adversarial-l2",
            NoiseKind::AdversarialL1 => "adversarial-l1",
        }
    }

    pub fn is_adversarial(&self) -> bool {
        matches!(self, NoiseKind::AdversarialL2 | NoiseKind::AdversarialL1)
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = HdcError;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown noise model {s}")))
    }
}

impl NoiseModel {
    pub fn kind(&self) -> NoiseKind {
        match self {
            NoiseModel::Awgn { .. } => NoiseKind::Awgn,
            NoiseModel::UniformInteger { .. } => NoiseKind::UniformInteger,
            NoiseModel::TernaryFlip { .. } => NoiseKind::TernaryFlip,
            NoiseModel::AdversarialL2 { .. } => NoiseKind::AdversarialL2,
            NoiseModel::AdversarialL1 { .. } => NoiseKind::AdversarialL1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseModel::Awgn { sigma } => sigma >= 0.0 && sigma.is_finite(),
            NoiseModel::UniformInteger { c } => c >= 0,
            NoiseModel::TernaryFlip { theta } => (0.0..=1.0).contains(&theta),
            NoiseModel::AdversarialL2 { omega } => omega >= 0.0 && omega.is_finite(),
            NoiseModel::AdversarialL1 { budget } => budget >= 0.0 && budget.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("noise parameter out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub model: NoiseModel,
    pub seed: u64,
}

fn storage_err(op: &'static str, found: StorageKind) -> HdcError {
    HdcError::Storage { op, found }
}

/// Corrupted copy of `h`. Adversarial models need `target`.
pub fn apply_noise<T: Scalar>(h: &Hypervector<T>, spec: &NoiseSpec, target: Option<usize>, cb: &Codebook<T>) -> Result<Hypervector<T>> {
    spec.model.validate()?;
    if h.dim() != cb.d() {
        return Err(HdcError::DimensionMismatch { left: cb.d(), right: h.dim() });
    }
    let d = h.dim();
    let mut r = rng::stream(spec.seed, 0x6e6f697365);
    match spec.model {
        NoiseModel::Awgn { sigma } => {
            if !h.is_dense() {
                return Err(storage_err("awgn", h.kind()));
            }
            if sigma == 0.0 {
                return Ok(h.clone());
            }
            let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
            let x = h.to_real_vec();
            Ok(Hypervector::real(x.into_iter().map(|v| v + T::of(normal.sample(&mut r))).collect()))
        }
        NoiseModel::UniformInteger { c } => {
            let x = match h.storage() {
                Storage::Bipolar(_) | Storage::Integer { .. } => h.to_i64_vec().expect("integer valued"),
                _ => return Err(storage_err("uniform-integer", h.kind())),
            };
            if c == 0 {
                return Ok(h.clone());
            }
            let data = x.into_iter().map(|v| (v + r.random_range(-c as i64..=c as i64)) as i32).collect();
            let bound = h.bound().expect("integer valued").checked_add(c).ok_or(HdcError::BoundOverflow { limit: i32::MAX as i64 })?;
            Hypervector::integer(data, bound)
        }
        NoiseModel::TernaryFlip { theta } => {
            let ix = h.as_sparse().ok_or(storage_err("ternary-flip", h.kind()))?;
            if theta == 0.0 {
                return Ok(h.clone());
            }
            let mut set = vec![false; d];
            for &i in ix {
                set[i as usize] = true;
            }
            for s in set.iter_mut() {
                let u: f64 = r.random();
                if u < theta / 2.0 {
                    *s = false;
                } else if u < theta {
                    *s = true;
                }
            }
            let out = (0..d).filter(|&i| set[i]).map(|i| i as u32).collect();
            Hypervector::sparse(d, out)
        }
        NoiseModel::AdversarialL2 { omega } => {
            let t = cb.get(target.ok_or(HdcError::MissingTarget)?)?;
            if !h.is_dense() {
                return Err(storage_err("adversarial-l2", h.kind()));
            }
            if omega == 0.0 {
                return Ok(h.clone());
            }
            let scale = T::of(omega) * cb.min_norm() / norm2(t);
            let (x, y) = (h.to_real_vec(), t.to_real_vec());
            Ok(Hypervector::real(x.iter().zip(&y).map(|(&a, &b)| a - scale * b).collect()))
        }
        NoiseModel::AdversarialL1 { budget } => {
            let t = cb.get(target.ok_or(HdcError::MissingTarget)?)?;
            adversarial_l1(h, t, budget)
        }
    }
}

/// Spends `⌊budget⌋` unit steps against `φ(t)`, round-robin over the
/// coordinates where `|φ(t)_i|` is largest, each step opposing the sign of
/// `φ(t)_i`. Sparse inputs clear set bits of the target support.
fn adversarial_l1<T: Scalar>(h: &Hypervector<T>, t: &Hypervector<T>, budget: f64) -> Result<Hypervector<T>> {
    let units = budget.floor() as usize;
    if units == 0 {
        return Ok(h.clone());
    }
    let d = h.dim();
    let tv = t.to_real_vec();
    let top = tv.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    let coords: Vec<usize> = (0..d).filter(|&i| !top.is_zero() && tv[i].abs() == top).collect();
    if coords.is_empty() {
        return Ok(h.clone());
    }
    match h.storage() {
        Storage::Sparse(ix) => {
            let kill: Vec<u32> = coords.iter().take(units).map(|&i| i as u32).collect();
            let out = ix.iter().copied().filter(|i| kill.binary_search(i).is_err()).collect();
            Hypervector::sparse(d, out)
        }
        Storage::Real(_) => {
            let mut x = h.to_real_vec();
            let per = T::of(budget) / T::of_i64(coords.len() as i64);
            for &i in &coords {
                x[i] = x[i] - per * tv[i].signum();
            }
            Ok(Hypervector::real(x))
        }
        _ => {
            let mut x = h.to_i64_vec().expect("integer valued");
            let (q, rem) = (units / coords.len(), units % coords.len());
            for (k, &i) in coords.iter().enumerate() {
                let steps = (q + usize::from(k < rem)) as i64;
                x[i] -= steps * if tv[i] > T::zero() { 1 } else { -1 };
            }
            let extra = (q + usize::from(rem > 0)) as i32;
            let bound = h.bound().expect("integer valued") + extra;
            Hypervector::integer(x.into_iter().map(|v| v as i32).collect(), bound)
        }
    }
}

/// `noisy − clean`, exact for integer-valued storage.
pub fn noise_delta<T: Scalar>(clean: &Hypervector<T>, noisy: &Hypervector<T>) -> Result<Hypervector<T>> {
    if clean.dim() != noisy.dim() {
        return Err(HdcError::DimensionMismatch { left: clean.dim(), right: noisy.dim() });
    }
    match (clean.to_i64_vec(), noisy.to_i64_vec()) {
        (Some(a), Some(b)) => {
            let diff: Vec<i64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
            let bound = diff.iter().map(|v| v.abs()).max().unwrap_or(0);
            let bound = i32::try_from(bound).map_err(|_| HdcError::BoundOverflow { limit: i32::MAX as i64 })?;
            Hypervector::integer(diff.into_iter().map(|v| v as i32).collect(), bound)
        }
        _ => {
            let (a, b) = (clean.to_real_vec(), noisy.to_real_vec());
            Ok(Hypervector::real(b.iter().zip(&a).map(|(&x, &y)| x - y).collect()))
        }
    }
}

/// `ρ = max_a |⟨φ(a), Δ⟩|` by brute force over the alphabet.
pub fn rho_bound<T: Scalar>(cb: &Codebook<T>, delta: &Hypervector<T>) -> Result<T> {
    let mut worst = T::zero();
    for v in cb.vectors() {
        worst = worst.max(dot(v, delta)?.abs());
    }
    Ok(worst)
}

/// `½ − s·μ − ρ/L²`; decoding of any set of size ≤ s is guaranteed when
/// positive.
pub fn decoding_margin<T: Scalar>(cb: &Codebook<T>, s: usize, rho: T) -> Result<T> {
    if s == 0 {
        return Err(invalid("set size must be at least 1"));
    }
    Ok(T::of(0.5) - T::of_i64(s as i64) * cb.incoherence()? - rho / cb.min_norm_sq())
}

fn sparse_density<T: Scalar>(cb: &Codebook<T>) -> Result<f64> {
    match cb.kind() {
        CodebookKind::SparseBinary { p, .. } => Ok(p),
        _ => Err(HdcError::Storage {
            op: "sparse tolerance",
            found: cb.storage_kind(),
        }),
    }
}

/// Largest noise parameter the closed-form analysis tolerates, using the
/// measured incoherence:
///
/// | model | parameter | tolerance |
/// |---|---|---|
/// | Awgn | σ | `L/√(2 ln(2m/δ)) · (½ − sμ)` |
/// | UniformInteger | c | `√(d/(2 ln(2m/δ))) · (½ − sμ)` |
/// | TernaryFlip | θ | `½ − 2sμ − √(ln(2m/δ)/(2dp))` |
/// | AdversarialL2 | ω (`‖Δ‖₂ ≤ ωL`) | `½ − sμ` |
/// | AdversarialL1, dense | ω (`‖Δ‖₁ ≤ ωsd`) | `1/(2s) − μ` |
/// | AdversarialL1, sparse | ω (`‖Δ‖₁ ≤ ωd`) | `p(½ − sμ)` |
///
/// A non-positive result means the configuration has no guaranteed margin.
pub fn tolerance<T: Scalar>(cb: &Codebook<T>, s: usize, delta: f64, kind: NoiseKind) -> Result<T> {
    if s == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("tolerance needs s ≥ 1 and δ ∈ (0,1), got s={s} δ={delta}")));
    }
    let mu = cb.incoherence()?.f64();
    let (sf, m, d) = (s as f64, cb.m() as f64, cb.d() as f64);
    let log = (2.0 * m / delta).ln();
    let slack = 0.5 - sf * mu;
    let sparse = cb.storage_kind() == StorageKind::Sparse;
    let t = match kind {
        NoiseKind::Awgn => cb.min_norm().f64() / (2.0 * log).sqrt() * slack,
        NoiseKind::UniformInteger => (d / (2.0 * log)).sqrt() * slack,
        NoiseKind::TernaryFlip => {
            let p = sparse_density(cb)?;
            0.5 - 2.0 * sf * mu - (log / (2.0 * d * p)).sqrt()
        }
        NoiseKind::AdversarialL2 => slack,
        NoiseKind::AdversarialL1 if sparse => sparse_density(cb)? * slack,
        NoiseKind::AdversarialL1 => 1.0 / (2.0 * sf) - mu,
    };
    Ok(T::of(t))
}

/// Concrete model at tolerance parameter `param` (as returned by
/// [`tolerance`]). UniformInteger floors to an integer range; AdversarialL1
/// converts ω to its L1 budget.
pub fn model_at<T: Scalar>(kind: NoiseKind, param: f64, cb: &Codebook<T>, s: usize) -> NoiseModel {
    let param = param.max(0.0);
    match kind {
        NoiseKind::Awgn => NoiseModel::Awgn { sigma: param },
        NoiseKind::UniformInteger => NoiseModel::UniformInteger { c: param.floor() as i32 },
        NoiseKind::TernaryFlip => NoiseModel::TernaryFlip { theta: param.min(1.0) },
        NoiseKind::AdversarialL2 => NoiseModel::AdversarialL2 { omega: param },
        NoiseKind::AdversarialL1 => {
            let scale = if cb.storage_kind() == StorageKind::Sparse { 1.0 } else { s as f64 };
            NoiseModel::AdversarialL1 { budget: param * scale * cb.d() as f64 }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdcore::norm1;
    use crate::setmem::{decode_set, encode_set, Bundling};

    type Cb = Codebook<f64>;

    fn spec(model: NoiseModel) -> NoiseSpec {
        NoiseSpec { model, seed: 17 }
    }

    #[test]
    fn zero_parameters_are_identity() {
        let cb = Cb::generate(CodebookKind::DenseBipolar, 10, 128, 0).unwrap();
        let h = encode_set(&[1, 2, 3], &cb, Bundling::Sum).unwrap().vector;
        for m in [
            NoiseModel::Awgn { sigma: 0.0 },
            NoiseModel::UniformInteger { c: 0 },
            NoiseModel::AdversarialL2 { omega: 0.0 },
            NoiseModel::AdversarialL1 { budget: 0.0 },
        ] {
            assert_eq!(apply_noise(&h, &spec(m), Some(1), &cb).unwrap(), h);
        }
        let sp = Cb::generate(CodebookKind::sparse(0.05), 10, 500, 0).unwrap();
        let hs = encode_set(&[1, 2], &sp, Bundling::Max).unwrap().vector;
        assert_eq!(apply_noise(&hs, &spec(NoiseModel::TernaryFlip { theta: 0.0 }), None, &sp).unwrap(), hs);
    }

    #[test]
    fn invalid_models_and_storage() {
        let cb = Cb::generate(CodebookKind::DenseBipolar, 10, 64, 0).unwrap();
        let h = cb.vectors()[0].clone();
        assert!(apply_noise(&h, &spec(NoiseModel::Awgn { sigma: -1.0 }), None, &cb).is_err());
        assert!(apply_noise(&h, &spec(NoiseModel::TernaryFlip { theta: 1.5 }), None, &cb).is_err());
        assert!(apply_noise(&h, &spec(NoiseModel::TernaryFlip { theta: 0.1 }), None, &cb).is_err());
        assert!(matches!(
            apply_noise(&h, &spec(NoiseModel::AdversarialL2 { omega: 0.1 }), None, &cb),
            Err(HdcError::MissingTarget)
        ));
        let real = h.to_real();
        assert!(apply_noise(&real, &spec(NoiseModel::UniformInteger { c: 1 }), None, &cb).is_err());
    }

    #[test]
    fn passive_models_are_seed_deterministic() {
        let cb = Cb::generate(CodebookKind::DenseBipolar, 10, 256, 0).unwrap();
        let h = encode_set(&[0, 4], &cb, Bundling::Sum).unwrap().vector;
        for m in [NoiseModel::Awgn { sigma: 1.5 }, NoiseModel::UniformInteger { c: 3 }] {
            let a = apply_noise(&h, &spec(m), None, &cb).unwrap();
            let b = apply_noise(&h, &spec(m), None, &cb).unwrap();
            assert_eq!(a, b);
            let c = apply_noise(&h, &NoiseSpec { model: m, seed: 18 }, None, &cb).unwrap();
            assert_ne!(a, c);
        }
        let u = apply_noise(&h, &spec(NoiseModel::UniformInteger { c: 3 }), None, &cb).unwrap();
        let delta = noise_delta(&h, &u).unwrap().to_i64_vec().unwrap();
        assert!(delta.iter().all(|v| v.abs() <= 3));
        assert_eq!(u.bound(), Some(5));
    }

    #[test]
    fn full_ternary_flip_halves_agreement() {
        let d = 40_000;
        let sp = Cb::generate(CodebookKind::sparse(0.3), 1, d, 0).unwrap();
        let h = sp.vectors()[0].clone();
        let n = apply_noise(&h, &spec(NoiseModel::TernaryFlip { theta: 1.0 }), None, &sp).unwrap();
        let (a, b) = (h.to_i64_vec().unwrap(), n.to_i64_vec().unwrap());
        let agree = a.iter().zip(&b).filter(|(x, y)| x == y).count() as f64 / d as f64;
        // Binomial(40000, ½): four standard deviations is 0.01.
        assert!((agree - 0.5).abs() < 0.01, "{agree}");
        assert!(b.iter().all(|&v| v == 0 || v == 1));
    }

    #[test]
    fn adversarial_budgets_are_exact() {
        let cb = Cb::generate(CodebookKind::DenseBipolar, 10, 300, 2).unwrap();
        let h = encode_set(&[0, 1, 2], &cb, Bundling::Sum).unwrap().vector;
        let omega = 0.3;
        let n = apply_noise(&h, &spec(NoiseModel::AdversarialL2 { omega }), Some(1), &cb).unwrap();
        let delta = noise_delta(&h, &n).unwrap();
        assert!(norm2(&delta) <= omega * cb.min_norm() * (1.0 + 1e-12));
        assert!(dot(&cb.vectors()[1], &delta).unwrap() < 0.0);
        for budget in [1.0, 299.0, 300.0, 1234.5] {
            let n = apply_noise(&h, &spec(NoiseModel::AdversarialL1 { budget }), Some(1), &cb).unwrap();
            let delta = noise_delta(&h, &n).unwrap();
            assert!(norm1(&delta) <= budget);
            assert_eq!(norm1(&delta), budget.floor());
            assert_eq!(dot(&cb.vectors()[1], &delta).unwrap(), -budget.floor());
        }
    }

    #[test]
    fn rho_bound_examples() {
        let cb = Cb::generate(CodebookKind::DenseBipolar, 10, 128, 3).unwrap();
        assert_eq!(rho_bound(&cb, &Hypervector::zeros(128)).unwrap(), 0.0);
        assert!(rho_bound(&cb, &cb.vectors()[4]).unwrap() >= cb.min_norm_sq());
    }

    #[test]
    fn awgn_rho_tail() {
        let (m, d, sigma, delta) = (50usize, 1024usize, 2.0f64, 0.05f64);
        let cb = Cb::generate(CodebookKind::DenseBipolar, m, d, 4).unwrap();
        let bound = sigma * cb.min_norm() * (2.0 * (2.0 * m as f64 / delta).ln()).sqrt();
        let trials = 400;
        let zero = Hypervector::<f64>::zeros(d).to_real();
        let within = (0..trials)
            .filter(|&t| {
                let n = apply_noise(&zero, &NoiseSpec { model: NoiseModel::Awgn { sigma }, seed: t }, None, &cb).unwrap();
                rho_bound(&cb, &n).unwrap() <= bound
            })
            .count();
        assert!(within as f64 >= (1.0 - delta) * trials as f64, "{within}");
    }

    #[test]
    fn margin_examples() {
        let orth = Cb::orthogonal(4, 4).unwrap();
        assert_eq!(decoding_margin(&orth, 2, 0.0).unwrap(), 0.5);
        let cb = Cb::generate(CodebookKind::DenseBipolar, 20, 2048, 5).unwrap();
        let (s, mu, l2) = (3usize, cb.incoherence().unwrap(), cb.min_norm_sq());
        let rho = l2 * (0.5 - s as f64 * mu);
        assert!(decoding_margin(&cb, s, rho).unwrap().abs() < 1e-12);
        assert!(decoding_margin(&cb, 0, 0.0).is_err());
    }

    #[test]
    fn tolerance_formulas() {
        let cb = Cb::generate(CodebookKind::DenseBipolar, 100, 4096, 6).unwrap();
        let mu = cb.incoherence().unwrap();
        let (s, delta) = (5usize, 0.05);
        let log = (200.0f64 / delta).ln();
        let slack = 0.5 - 5.0 * mu;
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(tolerance(&cb, s, delta, NoiseKind::Awgn).unwrap(), 64.0 / (2.0 * log).sqrt() * slack));
        assert!(close(tolerance(&cb, s, delta, NoiseKind::UniformInteger).unwrap(), (4096.0 / (2.0 * log)).sqrt() * slack));
        assert!(close(tolerance(&cb, s, delta, NoiseKind::AdversarialL2).unwrap(), slack));
        assert!(close(tolerance(&cb, s, delta, NoiseKind::AdversarialL1).unwrap(), 0.1 - mu));
        assert!(tolerance(&cb, s, delta, NoiseKind::TernaryFlip).is_err());
        let sp = Cb::generate(CodebookKind::sparse(0.01), 100, 50_000, 6).unwrap();
        let smu = sp.incoherence().unwrap();
        let t = tolerance(&sp, 2, delta, NoiseKind::TernaryFlip).unwrap();
        assert!(close(t, 0.5 - 4.0 * smu - (log / (2.0 * 50_000.0 * 0.01)).sqrt()));
        assert!(close(tolerance(&sp, 2, delta, NoiseKind::AdversarialL1).unwrap(), 0.01 * (0.5 - 2.0 * smu)));
    }

    #[test]
    fn safety_invariant_per_instance() {
        // Whenever the realized corruption leaves a positive margin, decoding is exact.
        let s = 4;
        let mut positive = 0;
        for seed in 0..40u64 {
            let cb = Cb::generate(CodebookKind::DenseBipolar, 30, 2048, seed).unwrap();
            let items: Vec<usize> = (0..s).map(|i| (i * 7 + seed as usize) % 30).collect();
            let es = encode_set(&items, &cb, Bundling::Sum).unwrap();
            for kind in [NoiseKind::Awgn, NoiseKind::UniformInteger, NoiseKind::AdversarialL2, NoiseKind::AdversarialL1] {
                let tol = tolerance(&cb, s, 0.05, kind).unwrap().max(0.0);
                let model = model_at(kind, 1.5 * tol, &cb, s);
                let noisy = apply_noise(&es.vector, &NoiseSpec { model, seed }, Some(items[0]), &cb).unwrap();
                let rho = rho_bound(&cb, &noise_delta(&es.vector, &noisy).unwrap()).unwrap();
                if decoding_margin(&cb, s, rho).unwrap() > 0.0 {
                    positive += 1;
                    let mut want = items.clone();
                    want.sort_unstable();
                    assert_eq!(decode_set(&es.with_vector(noisy).unwrap(), &cb).unwrap(), want);
                }
            }
        }
        assert!(positive > 0);
    }
}
