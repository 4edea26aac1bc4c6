//! Feature–value records via binding, sequences via cyclic shifts, and a
//! streaming window over the shift encoding.

use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{invalid, HdcError, Result};
use crate::hdcore::{bind, bundle_sum_in, dot, dot_exact, permute, Hypervector, StorageKind};
use crate::scalar::Scalar;

/// Value codebook `φ` over symbols and bipolar feature codebook `ψ`.
#[derive(Debug, Clone)]
pub struct StructureCodec<T> {
    values: Arc<Codebook<T>>,
    features: Arc<Codebook<T>>,
}

/// Which pairs of bound codewords enter the binding incoherence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindingScope {
    /// Every pair of distinct `(a, f) ≠ (a′, f′)`.
    All,
    /// Only pairs with `f ≠ f′`.
    CrossOnly,
}

/// Argmax over scores with ties to the lowest index.
pub fn argmax<T: Scalar>(scores: &[T]) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best
}

impl<T: Scalar> StructureCodec<T> {
    pub fn new(values: Codebook<T>, features: Codebook<T>) -> Result<Self> {
        Self::shared(Arc::new(values), Arc::new(features))
    }

    pub fn shared(values: Arc<Codebook<T>>, features: Arc<Codebook<T>>) -> Result<Self> {
        if !features.is_bipolar() {
            return Err(HdcError::NonBipolarKey(features.storage_kind()));
        }
        if values.d() != features.d() {
            return Err(HdcError::DimensionMismatch {
                left: values.d(),
                right: features.d(),
            });
        }
        if values.storage_kind() == StorageKind::Sparse {
            return Err(HdcError::Storage {
                op: "structure values",
                found: StorageKind::Sparse,
            });
        }
        Ok(Self { values, features })
    }

    pub fn values(&self) -> &Codebook<T> {
        &self.values
    }

    pub fn features(&self) -> &Codebook<T> {
        &self.features
    }

    pub fn d(&self) -> usize {
        self.values.d()
    }

    /// `M`, the largest bound-pair norm (binding preserves norms).
    pub fn max_pair_norm(&self) -> T {
        self.values.max_norm()
    }

    /// `max |⟨φ(a)⊗ψ(f), φ(a′)⊗ψ(f′)⟩| / L²` over distinct bound pairs.
    pub fn binding_incoherence(&self, scope: BindingScope) -> Result<T> {
        let n = self.features.m();
        let l2 = self.values.min_norm_sq();
        let keys: Vec<(usize, usize)> = (0..n).flat_map(|f| (f + 1..n).map(move |g| (f, g))).collect();
        let vals = self.values.vectors();
        let cross = keys
            .par_iter()
            .map(|&(f, g)| {
                let key = bind(&self.features.vectors()[f], &self.features.vectors()[g])?;
                let mut worst = T::zero();
                for a in vals {
                    let ka = bind(a, &key)?;
                    for b in vals {
                        worst = worst.max(dot(&ka, b)?.abs());
                    }
                }
                Ok(worst / l2)
            })
            .collect::<Result<Vec<T>>>()?
            .into_iter()
            .fold(T::zero(), T::max);
        Ok(match scope {
            BindingScope::CrossOnly => cross,
            BindingScope::All if self.values.m() > 1 => cross.max(self.values.incoherence()?),
            BindingScope::All => cross,
        })
    }
}

/// `Σ ψ(f) ⊗ φ(a)` over the given `(feature, value)` pairs.
pub fn encode_structure<T: Scalar>(pairs: &[(usize, usize)], codec: &StructureCodec<T>) -> Result<Hypervector<T>> {
    let (n, m) = (codec.features.m(), codec.values.m());
    let mut seen = vec![false; n];
    for &(f, a) in pairs {
        if f >= n {
            return Err(HdcError::IndexOutOfRange { index: f, size: n });
        }
        if a >= m {
            return Err(HdcError::IndexOutOfRange { index: a, size: m });
        }
        if std::mem::replace(&mut seen[f], true) {
            return Err(HdcError::Duplicate(f));
        }
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    let bound = sorted
        .iter()
        .map(|&(f, a)| bind(&codec.values.vectors()[a], &codec.features.vectors()[f]))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Hypervector<T>> = bound.iter().collect();
    bundle_sum_in(codec.d(), &refs)
}

/// Scores `⟨φ(a), h ⊗ ψ(f)⟩` for every value symbol.
pub fn feature_scores<T: Scalar>(h: &Hypervector<T>, f: usize, codec: &StructureCodec<T>) -> Result<Vec<T>> {
    let key = codec.features.get(f)?;
    codec.values.scores(&bind(h, key)?)
}

/// Value stored under feature `f`: the argmax of [`feature_scores`], ties to
/// the lowest symbol.
pub fn decode_feature<T: Scalar>(h: &Hypervector<T>, f: usize, codec: &StructureCodec<T>) -> Result<usize> {
    Ok(decode_feature_scored(h, f, codec)?.0)
}

pub fn decode_feature_scored<T: Scalar>(h: &Hypervector<T>, f: usize, codec: &StructureCodec<T>) -> Result<(usize, T)> {
    let scores = feature_scores(h, f, codec)?;
    Ok(argmax(&scores).expect("codebooks are non-empty"))
}

/// `⟨h₁, h₂⟩ / L²`, an estimate of the number of agreeing features.
pub fn structure_overlap<T: Scalar>(h1: &Hypervector<T>, h2: &Hypervector<T>, codec: &StructureCodec<T>) -> Result<T> {
    if h1.dim() != codec.d() || h2.dim() != codec.d() {
        return Err(HdcError::CodebookMismatch);
    }
    Ok(dot(h1, h2)? / codec.values.min_norm_sq())
}

fn require_bipolar<T: Scalar>(cb: &Codebook<T>) -> Result<()> {
    if cb.is_bipolar() {
        Ok(())
    } else {
        Err(HdcError::Storage {
            op: "sequence values",
            found: cb.storage_kind(),
        })
    }
}

/// Shift encoding `Σ_{i=1..n} ρ^{n−i}(φ(x_i))`: the newest symbol is
/// unshifted. Requires a bipolar codebook and `n < d`.
pub fn encode_sequence<T: Scalar>(xs: &[usize], cb: &Codebook<T>) -> Result<Hypervector<T>> {
    require_bipolar(cb)?;
    let (n, d) = (xs.len(), cb.d());
    if n >= d {
        return Err(invalid(format!("sequence length {n} must be below dimension {d}")));
    }
    let mut acc = vec![0i32; d];
    for (i, &x) in xs.iter().enumerate() {
        let v = cb.get(x)?.as_bipolar().expect("checked bipolar");
        let s = n - 1 - i;
        // ρ^s(v)_j = v_{(j+s) mod d}
        let (head, tail) = acc.split_at_mut(d - s);
        head.iter_mut().zip(&v[s..]).for_each(|(a, &b)| *a += b as i32);
        tail.iter_mut().zip(&v[..s]).for_each(|(a, &b)| *a += b as i32);
    }
    Ok(Hypervector::integer(acc, n.max(1) as i32).expect("bounded by n"))
}

/// Symbol at 0-based `position` of a shift-encoded window of length `n`:
/// `argmax_a ⟨φ(a), ρ^{−(n−1−position)}(h)⟩`, ties to the lowest symbol.
pub fn decode_sequence_position<T: Scalar>(h: &Hypervector<T>, position: usize, n: usize, cb: &Codebook<T>) -> Result<usize> {
    if position >= n {
        return Err(HdcError::IndexOutOfRange { index: position, size: n });
    }
    let unshifted = permute(h, -((n - 1 - position) as i64));
    Ok(argmax(&cb.scores(&unshifted)?).expect("non-empty").0)
}

/// `max |⟨φ(a), ρ^i(φ(a′))⟩| / d` over all symbol pairs and shifts
/// `1 ≤ i ≤ max_shift` (negative shifts are covered by swapping `a, a′`).
pub fn shift_incoherence<T: Scalar>(cb: &Codebook<T>, max_shift: usize) -> Result<T> {
    require_bipolar(cb)?;
    let d = cb.d();
    let worst = (1..=max_shift.min(d.saturating_sub(1)))
        .into_par_iter()
        .map(|i| {
            let mut w = 0i64;
            for b in cb.vectors() {
                let shifted = permute(b, i as i64);
                for a in cb.vectors() {
                    w = w.max(dot_exact(a, &shifted)?.abs());
                }
            }
            Ok(w)
        })
        .collect::<Result<Vec<i64>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    Ok(T::of_i64(worst) / T::of_i64(d as i64))
}

/// `max |⟨φ(a), ρ^i(φ(a))⟩| / d` over every symbol and every shift `i ≠ 0`.
pub fn self_shift_incoherence<T: Scalar>(cb: &Codebook<T>) -> Result<T> {
    require_bipolar(cb)?;
    let d = cb.d();
    let worst = cb
        .vectors()
        .par_iter()
        .map(|v| {
            let x = v.as_bipolar().expect("bipolar");
            let mut doubled = x.to_vec();
            doubled.extend_from_slice(x);
            (1..d)
                .map(|i| {
                    let s: i64 = x.iter().zip(&doubled[i..i + d]).map(|(&p, &q)| (p * q) as i64).sum();
                    s.abs()
                })
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0);
    Ok(T::of_i64(worst) / T::of_i64(d as i64))
}

/// Streaming shift encoding of the `n` most recent symbols.
///
/// Before `n` symbols have arrived the state is the shift encoding of the
/// partial sequence, newest symbol unshifted. Once full, each push evicts the
/// oldest symbol: `state ← ρ¹(state − ρ^{n−1}(φ(x_old))) + φ(x_new)`.
#[derive(Debug, Clone)]
pub struct SequenceWindow<T> {
    cb: Arc<Codebook<T>>,
    n: usize,
    state: Vec<i32>,
    history: VecDeque<usize>,
}

impl<T: Scalar> SequenceWindow<T> {
    pub fn new(cb: Arc<Codebook<T>>, n: usize) -> Result<Self> {
        require_bipolar(&cb)?;
        if n == 0 || n >= cb.d() {
            return Err(invalid(format!("window length must satisfy 1 ≤ n < d, got n={} d={}", n, cb.d())));
        }
        Ok(Self {
            state: vec![0; cb.d()],
            cb,
            n,
            history: VecDeque::with_capacity(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_full(&self) -> bool {
        self.history.len() == self.n
    }

    pub fn contents(&self) -> Vec<usize> {
        self.history.iter().copied().collect()
    }

    pub fn state(&self) -> Hypervector<T> {
        Hypervector::integer(self.state.clone(), self.history.len().max(1) as i32).expect("bounded by n")
    }

    /// In-place push.
    pub fn push_mut(&mut self, x: usize) -> Result<()> {
        let d = self.cb.d();
        let new = self.cb.get(x)?.as_bipolar().expect("checked bipolar");
        if self.is_full() {
            let old = self.history.pop_front().expect("full window");
            let ov = self.cb.vectors()[old].as_bipolar().expect("checked bipolar");
            let s = self.n - 1;
            for (j, st) in self.state.iter_mut().enumerate() {
                *st -= ov[(j + s) % d] as i32;
            }
        }
        self.state.rotate_left(1);
        for (st, &v) in self.state.iter_mut().zip(new) {
            *st += v as i32;
        }
        self.history.push_back(x);
        Ok(())
    }

    /// Persistent push returning the updated window.
    pub fn push(&self, x: usize) -> Result<Self> {
        let mut w = self.clone();
        w.push_mut(x)?;
        Ok(w)
    }
}

impl<T: Scalar> PartialEq for SequenceWindow<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.state == other.state && self.history == other.history
    }
}
