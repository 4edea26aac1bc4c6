//! Hypervector value type and the element-wise algebra: bundling, binding,
//! cyclic permutation and similarity.
//!
//! Dense storage is a flat array. Sparse binary storage is a strictly
//! increasing index list with the dimension attached. Arithmetic between
//! dense storages promotes bipolar to bounded integer and anything mixed
//! with reals to real; sparse operands only mix with dense ones in `dot`
//! (iterating the sparse support) and must otherwise be promoted explicitly.

use std::fmt;

use crate::error::{HdcError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageKind {
    Bipolar,
    Integer,
    Real,
    Sparse,
}

impl fmt::Display for StorageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StorageKind::Bipolar => "bipolar",
            StorageKind::Integer => "integer",
            StorageKind::Real => "real",
            StorageKind::Sparse => "sparse",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage<T> {
    /// Entries are exactly -1 or +1.
    Bipolar(Vec<i8>),
    /// Entries lie in `[-bound, bound]`.
    Integer { data: Vec<i32>, bound: i32 },
    Real(Vec<T>),
    /// Strictly increasing indices of the coordinates equal to one.
    Sparse(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypervector<T> {
    dim: usize,
    storage: Storage<T>,
}

impl<T: Scalar> Hypervector<T> {
    pub fn bipolar(data: Vec<i8>) -> Result<Self> {
        if let Some(i) = data.iter().position(|&x| x != 1 && x != -1) {
            return Err(HdcError::InvalidEntry {
                index: i,
                reason: "bipolar entries must be +1 or -1",
            });
        }
        Ok(Self::bipolar_unchecked(data))
    }

    pub(crate) fn bipolar_unchecked(data: Vec<i8>) -> Self {
        Self {
            dim: data.len(),
            storage: Storage::Bipolar(data),
        }
    }

    pub fn integer(data: Vec<i32>, bound: i32) -> Result<Self> {
        if bound < 0 {
            return Err(HdcError::InvalidParameter(format!("negative bound {bound}")));
        }
        if let Some(i) = data.iter().position(|x| x.unsigned_abs() > bound as u32) {
            return Err(HdcError::InvalidEntry {
                index: i,
                reason: "integer entry exceeds declared bound",
            });
        }
        Ok(Self::integer_unchecked(data, bound))
    }

    pub(crate) fn integer_unchecked(data: Vec<i32>, bound: i32) -> Self {
        Self {
            dim: data.len(),
            storage: Storage::Integer { data, bound },
        }
    }

    pub fn real(data: Vec<T>) -> Self {
        Self {
            dim: data.len(),
            storage: Storage::Real(data),
        }
    }

    /// Sparse binary vector from strictly increasing indices below `dim`.
    pub fn sparse(dim: usize, indices: Vec<u32>) -> Result<Self> {
        for (k, w) in indices.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(HdcError::InvalidEntry {
                    index: k + 1,
                    reason: "sparse indices must be strictly increasing",
                });
            }
        }
        if let Some(&last) = indices.last() {
            if last as usize >= dim {
                return Err(HdcError::InvalidEntry {
                    index: indices.len() - 1,
                    reason: "sparse index outside the dimension",
                });
            }
        }
        Ok(Self::sparse_unchecked(dim, indices))
    }

    /// Sorts and deduplicates before validating.
    pub fn sparse_from_unsorted(dim: usize, mut indices: Vec<u32>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::sparse(dim, indices)
    }

    pub(crate) fn sparse_unchecked(dim: usize, indices: Vec<u32>) -> Self {
        Self {
            dim,
            storage: Storage::Sparse(indices),
        }
    }

    /// All-zero integer vector.
    pub fn zeros(dim: usize) -> Self {
        Self::integer_unchecked(vec![0; dim], 0)
    }

    /// Binding identity: all coordinates +1.
    pub fn identity(dim: usize) -> Self {
        Self::bipolar_unchecked(vec![1; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn storage(&self) -> &Storage<T> {
        &self.storage
    }

    pub fn into_storage(self) -> Storage<T> {
        self.storage
    }

    pub fn kind(&self) -> StorageKind {
        match self.storage {
            Storage::Bipolar(_) => StorageKind::Bipolar,
            Storage::Integer { .. } => StorageKind::Integer,
            Storage::Real(_) => StorageKind::Real,
            Storage::Sparse(_) => StorageKind::Sparse,
        }
    }

    pub fn as_bipolar(&self) -> Option<&[i8]> {
        match &self.storage {
            Storage::Bipolar(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<(&[i32], i32)> {
        match &self.storage {
            Storage::Integer { data, bound } => Some((data, *bound)),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<&[T]> {
        match &self.storage {
            Storage::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_sparse(&self) -> Option<&[u32]> {
        match &self.storage {
            Storage::Sparse(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_dense(&self) -> bool {
        !matches!(self.storage, Storage::Sparse(_))
    }

    /// Magnitude bound on integer-valued storage (`None` for reals).
    pub fn bound(&self) -> Option<i32> {
        match &self.storage {
            Storage::Bipolar(_) | Storage::Sparse(_) => Some(1),
            Storage::Integer { bound, .. } => Some(*bound),
            Storage::Real(_) => None,
        }
    }

    /// Value at coordinate `i`.
    pub fn get(&self, i: usize) -> T {
        match &self.storage {
            Storage::Bipolar(v) => T::of_i64(v[i] as i64),
            Storage::Integer { data, .. } => T::of_i64(data[i] as i64),
            Storage::Real(v) => v[i],
            Storage::Sparse(ix) => {
                if ix.binary_search(&(i as u32)).is_ok() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Number of non-zero coordinates.
    pub fn support_size(&self) -> usize {
        match &self.storage {
            Storage::Bipolar(v) => v.len(),
            Storage::Integer { data, .. } => data.iter().filter(|&&x| x != 0).count(),
            Storage::Real(v) => v.iter().filter(|x| !x.is_zero()).count(),
            Storage::Sparse(ix) => ix.len(),
        }
    }

    /// Exact integer coordinates for integer-valued storage.
    pub fn to_i64_vec(&self) -> Option<Vec<i64>> {
        match &self.storage {
            Storage::Bipolar(v) => Some(v.iter().map(|&x| x as i64).collect()),
            Storage::Integer { data, .. } => Some(data.iter().map(|&x| x as i64).collect()),
            Storage::Sparse(ix) => {
                let mut out = vec![0; self.dim];
                for &i in ix {
                    out[i as usize] = 1;
                }
                Some(out)
            }
            Storage::Real(_) => None,
        }
    }

    pub fn to_real_vec(&self) -> Vec<T> {
        match &self.storage {
            Storage::Real(v) => v.clone(),
            _ => self
                .to_i64_vec()
                .expect("non-real storage is integer valued")
                .into_iter()
                .map(T::of_i64)
                .collect(),
        }
    }

    /// Explicit promotion to bounded integer storage. Reals are rejected.
    pub fn to_integer(&self) -> Result<Self> {
        match &self.storage {
            Storage::Integer { .. } => Ok(self.clone()),
            Storage::Real(_) => Err(HdcError::Storage {
                op: "to_integer",
                found: StorageKind::Real,
            }),
            _ => {
                let data = self
                    .to_i64_vec()
                    .expect("integer valued")
                    .into_iter()
                    .map(|x| x as i32)
                    .collect();
                Ok(Self::integer_unchecked(data, 1))
            }
        }
    }

    /// Explicit promotion to real storage.
    pub fn to_real(&self) -> Self {
        Self::real(self.to_real_vec())
    }
}

fn check_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(HdcError::DimensionMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}

fn checked_bound(a: i64, b: i64) -> Result<i32> {
    let s = a + b;
    i32::try_from(s).map_err(|_| HdcError::BoundOverflow {
        limit: i32::MAX as i64,
    })
}

/// Element-wise sum of a non-empty list.
///
/// Integer-valued operands (bipolar, bounded integer) accumulate into
/// bounded integer storage whose bound is the sum of the operand bounds, so
/// a bundle of `s` bipolar vectors has bound `s`. Any real operand makes the
/// result real. A list made only of sparse vectors accumulates support counts.
pub fn bundle_sum<T: Scalar>(vs: &[&Hypervector<T>]) -> Result<Hypervector<T>> {
    let first = vs.first().ok_or(HdcError::EmptyBundle)?;
    bundle_sum_in(first.dim(), vs)
}

/// Like [`bundle_sum`] but an empty list yields the zero vector of `dim`.
pub fn bundle_sum_in<T: Scalar>(dim: usize, vs: &[&Hypervector<T>]) -> Result<Hypervector<T>> {
    for v in vs {
        check_dim(dim, v.dim())?;
    }
    let sparse = vs.iter().filter(|v| !v.is_dense()).count();
    if sparse != 0 && sparse != vs.len() {
        return Err(HdcError::MixedSparseDense);
    }
    if vs.iter().any(|v| v.kind() == StorageKind::Real) {
        let mut acc = vec![T::zero(); dim];
        for v in vs {
            accumulate_real(&mut acc, v, T::one());
        }
        return Ok(Hypervector::real(acc));
    }
    let mut acc = vec![0i32; dim];
    let mut bound = 0i32;
    for v in vs {
        bound = checked_bound(bound as i64, v.bound().unwrap_or(0) as i64)?;
        accumulate_int(&mut acc, v, 1);
    }
    Ok(Hypervector::integer_unchecked(acc, bound))
}

fn accumulate_int<T: Scalar>(acc: &mut [i32], v: &Hypervector<T>, sign: i32) {
    match &v.storage {
        Storage::Bipolar(x) => acc
            .iter_mut()
            .zip(x)
            .for_each(|(a, &b)| *a += sign * b as i32),
        Storage::Integer { data, .. } => acc.iter_mut().zip(data).for_each(|(a, &b)| *a += sign * b),
        Storage::Sparse(ix) => ix.iter().for_each(|&i| acc[i as usize] += sign),
        Storage::Real(_) => unreachable!("real operands take the real path"),
    }
}

fn accumulate_real<T: Scalar>(acc: &mut [T], v: &Hypervector<T>, sign: T) {
    match &v.storage {
        Storage::Real(x) => acc.iter_mut().zip(x).for_each(|(a, &b)| *a = *a + sign * b),
        Storage::Bipolar(x) => acc
            .iter_mut()
            .zip(x)
            .for_each(|(a, &b)| *a = *a + sign * T::of_i64(b as i64)),
        Storage::Integer { data, .. } => acc
            .iter_mut()
            .zip(data)
            .for_each(|(a, &b)| *a = *a + sign * T::of_i64(b as i64)),
        Storage::Sparse(ix) => ix.iter().for_each(|&i| acc[i as usize] = acc[i as usize] + sign),
    }
}

/// `a ⊕ b` for two operands.
pub fn add<T: Scalar>(a: &Hypervector<T>, b: &Hypervector<T>) -> Result<Hypervector<T>> {
    bundle_sum(&[a, b])
}

/// `a - b` with the same promotion rules as [`bundle_sum`]. The integer bound
/// of the difference is the sum of both bounds.
pub fn sub<T: Scalar>(a: &Hypervector<T>, b: &Hypervector<T>) -> Result<Hypervector<T>> {
    check_dim(a.dim(), b.dim())?;
    if a.is_dense() != b.is_dense() {
        return Err(HdcError::MixedSparseDense);
    }
    if a.kind() == StorageKind::Real || b.kind() == StorageKind::Real {
        let mut acc = vec![T::zero(); a.dim()];
        accumulate_real(&mut acc, a, T::one());
        accumulate_real(&mut acc, b, -T::one());
        return Ok(Hypervector::real(acc));
    }
    let bound = checked_bound(a.bound().unwrap_or(0) as i64, b.bound().unwrap_or(0) as i64)?;
    let mut acc = vec![0i32; a.dim()];
    accumulate_int(&mut acc, a, 1);
    accumulate_int(&mut acc, b, -1);
    Ok(Hypervector::integer_unchecked(acc, bound))
}

/// Coordinate-wise negation of dense storage.
pub fn negate<T: Scalar>(v: &Hypervector<T>) -> Result<Hypervector<T>> {
    Ok(match &v.storage {
        Storage::Bipolar(x) => Hypervector::bipolar_unchecked(x.iter().map(|&e| -e).collect()),
        Storage::Integer { data, bound } => {
            Hypervector::integer_unchecked(data.iter().map(|&e| -e).collect(), *bound)
        }
        Storage::Real(x) => Hypervector::real(x.iter().map(|&e| -e).collect()),
        Storage::Sparse(_) => {
            return Err(HdcError::Storage {
                op: "negate",
                found: StorageKind::Sparse,
            })
        }
    })
}

/// Coordinate-wise maximum of sparse binary vectors (support union).
pub fn bundle_max<T: Scalar>(vs: &[&Hypervector<T>]) -> Result<Hypervector<T>> {
    let first = vs.first().ok_or(HdcError::EmptyBundle)?;
    bundle_max_in(first.dim(), vs)
}

/// Like [`bundle_max`] but an empty list yields the empty sparse vector.
pub fn bundle_max_in<T: Scalar>(dim: usize, vs: &[&Hypervector<T>]) -> Result<Hypervector<T>> {
    let mut all: Vec<u32> = Vec::new();
    for v in vs {
        check_dim(dim, v.dim())?;
        match &v.storage {
            Storage::Sparse(ix) => all.extend_from_slice(ix),
            _ => {
                return Err(HdcError::Storage {
                    op: "bundle_max",
                    found: v.kind(),
                })
            }
        }
    }
    all.sort_unstable();
    all.dedup();
    Ok(Hypervector::sparse_unchecked(dim, all))
}

/// Element-wise product with a bipolar key. The result keeps the storage of
/// `a`; binding twice with the same key restores `a`.
pub fn bind<T: Scalar>(a: &Hypervector<T>, key: &Hypervector<T>) -> Result<Hypervector<T>> {
    check_dim(a.dim(), key.dim())?;
    let k = key.as_bipolar().ok_or(HdcError::NonBipolarKey(key.kind()))?;
    Ok(match &a.storage {
        Storage::Bipolar(x) => {
            Hypervector::bipolar_unchecked(x.iter().zip(k).map(|(&p, &q)| p * q).collect())
        }
        Storage::Integer { data, bound } => Hypervector::integer_unchecked(
            data.iter().zip(k).map(|(&p, &q)| p * q as i32).collect(),
            *bound,
        ),
        Storage::Real(x) => Hypervector::real(
            x.iter()
                .zip(k)
                .map(|(&p, &q)| if q < 0 { -p } else { p })
                .collect(),
        ),
        Storage::Sparse(_) => {
            return Err(HdcError::Storage {
                op: "bind",
                found: StorageKind::Sparse,
            })
        }
    })
}

/// Cyclic left shift by `shift` coordinates: `ρ¹(z₁,…,z_d) = (z₂,…,z_d,z₁)`.
/// Negative shifts rotate right; the amount is reduced modulo the dimension.
pub fn permute<T: Scalar>(v: &Hypervector<T>, shift: i64) -> Hypervector<T> {
    let d = v.dim();
    if d == 0 {
        return v.clone();
    }
    let s = shift.rem_euclid(d as i64) as usize;
    let storage = match &v.storage {
        Storage::Bipolar(x) => {
            let mut y = x.clone();
            y.rotate_left(s);
            Storage::Bipolar(y)
        }
        Storage::Integer { data, bound } => {
            let mut y = data.clone();
            y.rotate_left(s);
            Storage::Integer {
                data: y,
                bound: *bound,
            }
        }
        Storage::Real(x) => {
            let mut y = x.clone();
            y.rotate_left(s);
            Storage::Real(y)
        }
        Storage::Sparse(ix) => {
            // coordinate j of the output holds input coordinate j + s
            let mut y: Vec<u32> = ix
                .iter()
                .map(|&i| ((i as usize + d - s) % d) as u32)
                .collect();
            y.sort_unstable();
            Storage::Sparse(y)
        }
    };
    Hypervector { dim: d, storage }
}

#[inline]
fn dot_i8(a: &[i8], b: &[i8]) -> i64 {
    // i32 partial sums cannot overflow within a 1<<16 chunk
    a.chunks(1 << 16)
        .zip(b.chunks(1 << 16))
        .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| (p as i32) * (q as i32)).sum::<i32>() as i64)
        .sum()
}

#[inline]
fn dot_i8_i32(a: &[i8], b: &[i32]) -> i64 {
    a.iter().zip(b).map(|(&p, &q)| p as i64 * q as i64).sum()
}

#[inline]
fn dot_i32(a: &[i32], b: &[i32]) -> i64 {
    a.iter().zip(b).map(|(&p, &q)| p as i64 * q as i64).sum()
}

fn sparse_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Exact inner product of two integer-valued vectors.
pub fn dot_exact<T: Scalar>(a: &Hypervector<T>, b: &Hypervector<T>) -> Result<i64> {
    check_dim(a.dim(), b.dim())?;
    use Storage::*;
    Ok(match (&a.storage, &b.storage) {
        (Bipolar(x), Bipolar(y)) => dot_i8(x, y),
        (Bipolar(x), Integer { data, .. }) | (Integer { data, .. }, Bipolar(x)) => dot_i8_i32(x, data),
        (Integer { data: x, .. }, Integer { data: y, .. }) => dot_i32(x, y),
        (Sparse(x), Sparse(y)) => sparse_intersection(x, y) as i64,
        (Sparse(ix), Bipolar(y)) | (Bipolar(y), Sparse(ix)) => {
            ix.iter().map(|&i| y[i as usize] as i64).sum()
        }
        (Sparse(ix), Integer { data, .. }) | (Integer { data, .. }, Sparse(ix)) => {
            ix.iter().map(|&i| data[i as usize] as i64).sum()
        }
        (Real(_), _) | (_, Real(_)) => {
            return Err(HdcError::Storage {
                op: "dot_exact",
                found: StorageKind::Real,
            })
        }
    })
}

/// Inner product. Integer-valued pairs are summed exactly before conversion.
pub fn dot<T: Scalar>(a: &Hypervector<T>, b: &Hypervector<T>) -> Result<T> {
    check_dim(a.dim(), b.dim())?;
    use Storage::*;
    match (&a.storage, &b.storage) {
        (Real(x), Real(y)) => Ok(x.iter().zip(y).map(|(&p, &q)| p * q).sum()),
        (Real(x), Sparse(ix)) | (Sparse(ix), Real(x)) => Ok(ix.iter().map(|&i| x[i as usize]).sum()),
        (Real(x), other) | (other, Real(x)) => Ok(match other {
            Bipolar(y) => x
                .iter()
                .zip(y)
                .map(|(&p, &q)| if q < 0 { -p } else { p })
                .sum(),
            Integer { data, .. } => x.iter().zip(data).map(|(&p, &q)| p * T::of_i64(q as i64)).sum(),
            _ => unreachable!(),
        }),
        _ => dot_exact(a, b).map(T::of_i64),
    }
}

pub fn norm_sq<T: Scalar>(a: &Hypervector<T>) -> T {
    match &a.storage {
        Storage::Bipolar(x) => T::of_i64(x.len() as i64),
        Storage::Sparse(ix) => T::of_i64(ix.len() as i64),
        _ => dot(a, a).expect("self dot"),
    }
}

pub fn norm2<T: Scalar>(a: &Hypervector<T>) -> T {
    norm_sq(a).sqrt()
}

pub fn norm1<T: Scalar>(a: &Hypervector<T>) -> T {
    match &a.storage {
        Storage::Bipolar(x) => T::of_i64(x.len() as i64),
        Storage::Integer { data, .. } => T::of_i64(data.iter().map(|&x| x.unsigned_abs() as i64).sum()),
        Storage::Real(x) => x.iter().map(|v| v.abs()).sum(),
        Storage::Sparse(ix) => T::of_i64(ix.len() as i64),
    }
}

/// Squared Euclidean distance `‖a − b‖²`.
pub fn sq_euclid<T: Scalar>(a: &Hypervector<T>, b: &Hypervector<T>) -> Result<T> {
    check_dim(a.dim(), b.dim())?;
    if let (Some(x), Some(y)) = (a.as_real(), b.as_real()) {
        return Ok(x.iter().zip(y).map(|(&p, &q)| (p - q) * (p - q)).sum());
    }
    if a.kind() == StorageKind::Real || b.kind() == StorageKind::Real {
        let (x, y) = (a.to_real_vec(), b.to_real_vec());
        return Ok(x.iter().zip(&y).map(|(&p, &q)| (p - q) * (p - q)).sum());
    }
    Ok(T::of_i64(dot_exact(a, a)? + dot_exact(b, b)? - 2 * dot_exact(a, b)?))
}

/// Number of disagreeing coordinates between two bipolar vectors, or between
/// two sparse binary vectors (size of the symmetric difference).
pub fn hamming<T: Scalar>(a: &Hypervector<T>, b: &Hypervector<T>) -> Result<usize> {
    check_dim(a.dim(), b.dim())?;
    match (&a.storage, &b.storage) {
        (Storage::Bipolar(x), Storage::Bipolar(y)) => {
            Ok(x.iter().zip(y).filter(|(p, q)| p != q).count())
        }
        (Storage::Sparse(x), Storage::Sparse(y)) => {
            Ok(x.len() + y.len() - 2 * sparse_intersection(x, y))
        }
        (Storage::Bipolar(_), _) => Err(HdcError::Storage {
            op: "hamming",
            found: b.kind(),
        }),
        _ => Err(HdcError::Storage {
            op: "hamming",
            found: a.kind(),
        }),
    }
}

/// Saturates every coordinate to `[-c, c]`.
pub fn clamp<T: Scalar>(v: &Hypervector<T>, c: i32) -> Result<Hypervector<T>> {
    if c <= 0 {
        return Err(HdcError::InvalidParameter(format!("clamp bound must be positive, got {c}")));
    }
    Ok(match &v.storage {
        Storage::Bipolar(_) => v.clone(),
        Storage::Integer { data, bound } => {
            Hypervector::integer_unchecked(data.iter().map(|&x| x.clamp(-c, c)).collect(), (*bound).min(c))
        }
        Storage::Real(x) => {
            let cc = T::of_i64(c as i64);
            Hypervector::real(x.iter().map(|&e| e.max(-cc).min(cc)).collect())
        }
        Storage::Sparse(_) => {
            return Err(HdcError::Storage {
                op: "clamp",
                found: StorageKind::Sparse,
            })
        }
    })
}

/// Threshold map `g_t(x) = 1 if x ≥ t else 0`, returned as a sparse index set.
pub fn binarize<T: Scalar>(v: &Hypervector<T>, t: T) -> Result<Hypervector<T>> {
    if !v.is_dense() {
        return Err(HdcError::Storage {
            op: "binarize",
            found: StorageKind::Sparse,
        });
    }
    let ix = (0..v.dim())
        .filter(|&i| v.get(i) >= t)
        .map(|i| i as u32)
        .collect();
    Ok(Hypervector::sparse_unchecked(v.dim(), ix))
}

/// Bipolar form of the threshold map: +1 where `x ≥ t`, −1 elsewhere.
pub fn binarize_bipolar<T: Scalar>(v: &Hypervector<T>, t: T) -> Result<Hypervector<T>> {
    if !v.is_dense() {
        return Err(HdcError::Storage {
            op: "binarize_bipolar",
            found: StorageKind::Sparse,
        });
    }
    Ok(Hypervector::bipolar_unchecked(
        (0..v.dim()).map(|i| if v.get(i) >= t { 1 } else { -1 }).collect(),
    ))
}
