//! Learners on encoded data: bundled class prototypes, multiclass perceptron
//! fine-tuning, balanced Winnow, the closest-pair linear separator and the
//! sparse random-projection separator experiment.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, HdcError, Result};
use crate::euclid::{random_unit, DistortionReport, Encoder, HdMetric, InputMetric, Projection};
use crate::hdcore::{add, dot, norm2, norm_sq, sub, Hypervector, StorageKind};
use crate::rng::{self, derive_seed};
use crate::scalar::Scalar;
use crate::structures::argmax;

/// Class prototypes `c_k = Σ_{yᵢ = k} φ(xᵢ)`, predicted by
/// `argmax_k ⟨c_k, φ(x)⟩ / ‖c_k‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeModel<T> {
    classes: Vec<usize>,
    prototypes: Vec<Hypervector<T>>,
    counts: Vec<usize>,
    norms: Vec<T>,
}

fn dense_copy<T: Scalar>(h: &Hypervector<T>) -> Result<Hypervector<T>> {
    if h.kind() == StorageKind::Sparse {
        h.to_integer()
    } else {
        Ok(h.clone())
    }
}

fn lex_cmp<T: Scalar>(a: &Hypervector<T>, b: &Hypervector<T>) -> std::cmp::Ordering {
    let (x, y) = (a.to_real_vec(), b.to_real_vec());
    x.iter()
        .zip(&y)
        .map(|(p, q)| p.f64().total_cmp(&q.f64()))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

impl<T: Scalar> PrototypeModel<T> {
    /// Empty model of dimension `d` over the given labels.
    pub fn new(d: usize, classes: &[usize]) -> Self {
        let mut classes = classes.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let k = classes.len();
        Self {
            classes,
            prototypes: vec![Hypervector::zeros(d); k],
            counts: vec![0; k],
            norms: vec![T::zero(); k],
        }
    }

    /// Bundles every example into its class prototype. Classes are indexed by
    /// ascending label, and each class is summed in a canonical order so the
    /// result does not depend on the order of the stream.
    pub fn train(examples: &[(Hypervector<T>, usize)]) -> Result<Self> {
        let first = examples.first().ok_or(HdcError::EmptyBundle)?;
        let labels: Vec<usize> = examples.iter().map(|e| e.1).collect();
        let mut model = Self::new(first.0.dim(), &labels);
        let mut groups: Vec<Vec<&Hypervector<T>>> = vec![Vec::new(); model.classes.len()];
        for (h, y) in examples {
            groups[model.index_of(*y).expect("label registered")].push(h);
        }
        for (k, g) in groups.iter_mut().enumerate() {
            g.sort_by(|a, b| lex_cmp(a, b));
            for h in g.iter() {
                model.add_to(k, h)?;
            }
        }
        Ok(model)
    }

    fn add_to(&mut self, k: usize, h: &Hypervector<T>) -> Result<()> {
        self.prototypes[k] = add(&self.prototypes[k], &dense_copy(h)?)?;
        self.counts[k] += 1;
        self.norms[k] = norm2(&self.prototypes[k]);
        Ok(())
    }

    fn subtract_from(&mut self, k: usize, h: &Hypervector<T>) -> Result<()> {
        self.prototypes[k] = sub(&self.prototypes[k], &dense_copy(h)?)?;
        self.norms[k] = norm2(&self.prototypes[k]);
        Ok(())
    }

    /// Online update: adds one example, registering its label if new.
    pub fn add_example(&mut self, h: &Hypervector<T>, label: usize) -> Result<()> {
        let k = match self.classes.binary_search(&label) {
            Ok(k) => k,
            Err(k) => {
                self.classes.insert(k, label);
                self.prototypes.insert(k, Hypervector::zeros(h.dim()));
                self.counts.insert(k, 0);
                self.norms.insert(k, T::zero());
                k
            }
        };
        self.add_to(k, h)
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn prototypes(&self) -> &[Hypervector<T>] {
        &self.prototypes
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn norms(&self) -> &[T] {
        &self.norms
    }

    pub fn index_of(&self, label: usize) -> Option<usize> {
        self.classes.binary_search(&label).ok()
    }

    /// Multiplies every prototype by the positive integer `c`.
    pub fn scaled(&self, c: i32) -> Result<Self> {
        if c <= 0 {
            return Err(invalid(format!("scale must be positive, got {c}")));
        }
        let mut out = self.clone();
        for (p, n) in out.prototypes.iter_mut().zip(out.norms.iter_mut()) {
            let refs = vec![&*p; c as usize];
            *p = crate::hdcore::bundle_sum(&refs)?;
            *n = norm2(p);
        }
        Ok(out)
    }

    /// Normalized scores `⟨c_k, h⟩/‖c_k‖`; a zero prototype scores 0.
    pub fn scores(&self, h: &Hypervector<T>) -> Result<Vec<T>> {
        let h = dense_copy(h)?;
        self.prototypes
            .iter()
            .zip(&self.norms)
            .map(|(p, &n)| Ok(if n.is_zero() { T::zero() } else { dot(p, &h)? / n }))
            .collect()
    }

    /// Predicted label; ties go to the lowest class index.
    pub fn predict(&self, h: &Hypervector<T>) -> Result<usize> {
        if self.classes.is_empty() {
            return Err(invalid("prediction on an empty model"));
        }
        let (k, _) = argmax(&self.scores(h)?).expect("non-empty");
        Ok(self.classes[k])
    }

    pub fn accuracy(&self, data: &[(Hypervector<T>, usize)]) -> Result<f64> {
        let hits = data
            .par_iter()
            .map(|(h, y)| Ok((self.predict(h)? == *y) as usize))
            .collect::<Result<Vec<_>>>()?;
        Ok(hits.iter().sum::<usize>() as f64 / data.len() as f64)
    }

    /// Multiclass perceptron passes over `data`: on a mistake `ŷ ≠ y`,
    /// `c_y += φ(x)` and `c_ŷ −= φ(x)`. Stops after the first epoch without
    /// mistakes; returns the mistakes of each epoch run.
    pub fn perceptron_finetune(&mut self, data: &[(Hypervector<T>, usize)], epochs: usize) -> Result<Vec<usize>> {
        if epochs == 0 {
            return Err(invalid("fine-tuning needs at least one epoch"));
        }
        for (h, y) in data {
            if self.index_of(*y).is_none() {
                self.add_example(&Hypervector::zeros(h.dim()), *y)?;
                let k = self.index_of(*y).expect("registered");
                self.counts[k] -= 1;
            }
        }
        let mut history = Vec::new();
        for _ in 0..epochs {
            let mut mistakes = 0;
            for (h, y) in data {
                let pred = self.predict(h)?;
                if pred != *y {
                    mistakes += 1;
                    let (ky, kp) = (self.index_of(*y).expect("registered"), self.index_of(pred).expect("registered"));
                    self.add_to(ky, h)?;
                    self.counts[ky] -= 1;
                    self.subtract_from(kp, h)?;
                }
            }
            history.push(mistakes);
            if mistakes == 0 {
                break;
            }
        }
        Ok(history)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearKind {
    Perceptron,
    Winnow,
}

/// Online binary linear classifier with labels in `{−1, +1}`.
///
/// Winnow runs in balanced form: an input `x` becomes the `2d` boolean
/// features `[(1+x)/2, (1−x)/2]` for bipolar `x`, or `[x, 1−x]` for 0/1
/// sparse `x`; weights start at 1, the default threshold is the feature
/// count over 2, and mistakes double or halve the weights of active features.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearModel {
    kind: LinearKind,
    weights: Vec<f64>,
    threshold: f64,
    mistakes: usize,
}

fn check_label(y: i8) -> Result<()> {
    if y == 1 || y == -1 {
        Ok(())
    } else {
        Err(invalid(format!("labels must be ±1, got {y}")))
    }
}

impl LinearModel {
    /// Zero-initialized homogeneous perceptron over dimension `d`.
    pub fn perceptron(d: usize) -> Self {
        Self { kind: LinearKind::Perceptron, weights: vec![0.0; d], threshold: 0.0, mistakes: 0 }
    }

    pub fn winnow(d: usize) -> Self {
        Self::winnow_with_threshold(d, d as f64)
    }

    pub fn winnow_with_threshold(d: usize, threshold: f64) -> Self {
        Self { kind: LinearKind::Winnow, weights: vec![1.0; 2 * d], threshold, mistakes: 0 }
    }

    pub fn kind(&self) -> LinearKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn mistakes(&self) -> usize {
        self.mistakes
    }

    fn input_dim(&self) -> usize {
        match self.kind {
            LinearKind::Perceptron => self.weights.len(),
            LinearKind::Winnow => self.weights.len() / 2,
        }
    }

    /// Indices of the active balanced features.
    fn active<T: Scalar>(&self, x: &Hypervector<T>) -> Result<Vec<usize>> {
        let d = self.input_dim();
        if let Some(bits) = x.as_bipolar() {
            return Ok(bits.iter().enumerate().map(|(i, &b)| if b > 0 { i } else { d + i }).collect());
        }
        if let Some(ix) = x.as_sparse() {
            let mut out = Vec::with_capacity(d);
            let mut it = ix.iter().peekable();
            for i in 0..d {
                if it.peek() == Some(&&(i as u32)) {
                    it.next();
                    out.push(i);
                } else {
                    out.push(d + i);
                }
            }
            return Ok(out);
        }
        Err(HdcError::Storage { op: "winnow", found: x.kind() })
    }

    pub fn score<T: Scalar>(&self, x: &Hypervector<T>) -> Result<f64> {
        if x.dim() != self.input_dim() {
            return Err(HdcError::DimensionMismatch { left: self.input_dim(), right: x.dim() });
        }
        Ok(match self.kind {
            LinearKind::Perceptron => x.to_real_vec().iter().zip(&self.weights).map(|(a, w)| a.f64() * w).sum(),
            LinearKind::Winnow => self.active(x)?.iter().map(|&i| self.weights[i]).sum(),
        })
    }

    pub fn predict<T: Scalar>(&self, x: &Hypervector<T>) -> Result<i8> {
        let s = self.score(x)?;
        Ok(match self.kind {
            LinearKind::Perceptron => if s > self.threshold { 1 } else { -1 },
            LinearKind::Winnow => if s >= self.threshold { 1 } else { -1 },
        })
    }

    /// One online step; returns whether it was a mistake.
    pub fn update<T: Scalar>(&mut self, x: &Hypervector<T>, y: i8) -> Result<bool> {
        check_label(y)?;
        if self.predict(x)? == y {
            return Ok(false);
        }
        self.mistakes += 1;
        match self.kind {
            LinearKind::Perceptron => {
                for (w, a) in self.weights.iter_mut().zip(x.to_real_vec()) {
                    *w += y as f64 * a.f64();
                }
            }
            LinearKind::Winnow => {
                let factor = if y > 0 { 2.0 } else { 0.5 };
                for i in self.active(x)? {
                    self.weights[i] *= factor;
                }
            }
        }
        Ok(true)
    }

    /// Runs the stream once and returns the total mistake count.
    pub fn train<T: Scalar>(&mut self, stream: &[(Hypervector<T>, i8)]) -> Result<usize> {
        for (x, y) in stream {
            self.update(x, *y)?;
        }
        Ok(self.mistakes)
    }
}

/// `f(x) = ⟨φ(x), φ(p) − φ(q)⟩ − ½(‖φ(p)‖² − ‖φ(q)‖²)` for the closest pair
/// `(p, q)` between two point sets.
#[derive(Debug, Clone, Serialize)]
pub struct SeparatingFunction {
    pub p_index: usize,
    pub q_index: usize,
    /// `½‖p − q‖²`.
    pub half_gap: f64,
    /// Measured `β/α` of squared encoded distance against squared input
    /// distance, over every pair `(x, p)` and `(x, q)`.
    pub beta_over_alpha: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `β/α < ½‖p − q‖²`.
    pub condition_met: bool,
    /// Whether every point of each set lies on its side of the input-space
    /// bisector with slack `½‖p − q‖²`, which holds when `(p, q)` is also the
    /// closest pair of the sets' convex hulls.
    pub hull_condition: bool,
    #[serde(skip)]
    direction: Vec<f64>,
    #[serde(skip)]
    offset: f64,
}

impl SeparatingFunction {
    pub fn eval<T: Scalar>(&self, h: &Hypervector<T>) -> f64 {
        h.to_real_vec().iter().zip(&self.direction).map(|(a, w)| a.f64() * w).sum::<f64>() - self.offset
    }

    /// Whether both conditions hold, so exact separation is implied.
    pub fn guaranteed(&self) -> bool {
        self.condition_met && self.hull_condition
    }
}

fn sq_l2<T: Scalar>(x: &[T], y: &[T]) -> f64 {
    InputMetric::SqL2.eval(x, y)
}

pub fn separating_function<T: Scalar, E: Encoder<T> + ?Sized>(p_set: &[Vec<T>], q_set: &[Vec<T>], enc: &E) -> Result<SeparatingFunction> {
    if p_set.is_empty() || q_set.is_empty() {
        return Err(invalid("separating function needs two non-empty sets"));
    }
    let mut best = (f64::INFINITY, 0, 0);
    for (i, p) in p_set.iter().enumerate() {
        for (j, q) in q_set.iter().enumerate() {
            let dd = sq_l2(p, q);
            if dd < best.0 {
                best = (dd, i, j);
            }
        }
    }
    let (gap, pi, qi) = best;
    if gap == 0.0 {
        return Err(invalid("the point sets overlap"));
    }
    let (p, q) = (&p_set[pi], &q_set[qi]);
    let (hp, hq) = (enc.encode(p)?, enc.encode(q)?);
    let all: Vec<&Vec<T>> = p_set.iter().chain(q_set).collect();
    let encoded = all.par_iter().map(|x| enc.encode(x)).collect::<Result<Vec<_>>>()?;
    let (mut dx, mut dh) = (Vec::new(), Vec::new());
    for (x, hx) in all.iter().zip(&encoded) {
        for (c, hc) in [(p, &hp), (q, &hq)] {
            dx.push(sq_l2(x, c));
            dh.push(HdMetric::SqEuclid.eval(hx, hc)?);
        }
    }
    let rep = DistortionReport::from_distances(&dx, &dh)?;
    let raw = |x: &[T]| {
        let pq: f64 = x.iter().zip(p.iter().zip(q)).map(|(a, (b, c))| a.f64() * (b.f64() - c.f64())).sum();
        let np: f64 = p.iter().map(|v| v.f64() * v.f64()).sum();
        let nq: f64 = q.iter().map(|v| v.f64() * v.f64()).sum();
        pq - 0.5 * (np - nq)
    };
    let tol = 1e-12 * (1.0 + gap);
    let hull_condition = p_set.iter().all(|x| raw(x) >= 0.5 * gap - tol) && q_set.iter().all(|x| -raw(x) >= 0.5 * gap - tol);
    let (vp, vq) = (hp.to_real_vec(), hq.to_real_vec());
    let direction = vp.iter().zip(&vq).map(|(a, b)| a.f64() - b.f64()).collect();
    let offset = 0.5 * (norm_sq(&hp).f64() - norm_sq(&hq).f64());
    let half_gap = 0.5 * gap;
    Ok(SeparatingFunction {
        p_index: pi,
        q_index: qi,
        half_gap,
        beta_over_alpha: rep.beta_over_alpha(),
        alpha: rep.alpha_fit,
        beta: rep.beta_max,
        condition_met: rep.alpha_fit > 0.0 && rep.beta_over_alpha() < half_gap,
        hull_condition,
        direction,
        offset,
    })
}

/// Configuration of the k-sparse random-projection separator experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseSeparatorConfig {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub trials: usize,
    pub seed: u64,
    /// Constant in front of `k·exp(n/(2kγ²))`.
    pub multiplier: f64,
    pub d_cap: usize,
    pub points: usize,
    /// Plant the separator `w` itself as one projection row.
    pub inject: bool,
}

impl SparseSeparatorConfig {
    pub fn new(n: usize, k: usize, gamma: f64, trials: usize, seed: u64) -> Self {
        Self { n, k, gamma, trials, seed, multiplier: 1.0, d_cap: 1 << 20, points: 200, inject: false }
    }

    /// `⌈multiplier · k · exp(n/(2kγ²))⌉`, refused above the cap.
    pub fn dimension(&self) -> Result<usize> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!("margin must lie in (0, 1), got {}", self.gamma)));
        }
        if self.k == 0 || self.n == 0 {
            return Err(invalid("sparse separator needs n, k ≥ 1"));
        }
        let exponent = self.n as f64 / (2.0 * self.k as f64 * self.gamma * self.gamma);
        let d = (self.multiplier * self.k as f64 * exponent.exp()).ceil();
        if !d.is_finite() || d > self.d_cap as f64 {
            return Err(HdcError::ResourceCap(format!("d = {d:.3e} exceeds cap {}", self.d_cap)));
        }
        Ok((d as usize).max(self.k))
    }

    /// Row correlation `1/(γ√k)` that makes the summed rows a separator.
    pub fn rho_required(&self) -> f64 {
        1.0 / (self.gamma * (self.k as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseSeparatorTrial {
    pub trial: usize,
    pub success: bool,
    /// Smallest correlation `⟨Φᵢ, w⟩` among the selected rows.
    pub min_rho: f64,
    /// `⟨Σ Φᵢ, w⟩ / ‖Σ Φᵢ‖` over the selected rows.
    pub alignment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseSeparatorReport {
    pub d: usize,
    pub rho_required: f64,
    /// `1 − γ²/2`, the alignment that guarantees separation.
    pub alignment_required: f64,
    pub success_rate: f64,
    pub min_rho_observed: f64,
    pub trials: Vec<SparseSeparatorTrial>,
}

/// Unit vector `x` with `|⟨x, w⟩| ≥ γ` on the side given by `label`.
fn margin_point(w: &[f64], gamma: f64, label: f64, r: &mut impl Rng) -> Vec<f64> {
    let c = r.random_range(gamma..=1.0);
    let u = random_unit(w.len(), r);
    let p: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    let mut v: Vec<f64> = u.iter().zip(w).map(|(a, b)| a - p * b).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    let s = (1.0 - c * c).max(0.0).sqrt();
    w.iter().zip(&v).map(|(a, b)| label * c * a + s * b).collect()
}

pub fn sparse_separator_experiment(cfg: &SparseSeparatorConfig) -> Result<SparseSeparatorReport> {
    let d = cfg.dimension()?;
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let ts = derive_seed(cfg.seed, t as u64);
            let mut r = rng::stream(ts, 0);
            let w = random_unit(cfg.n, &mut r);
            let proj = Projection::<f64>::new(cfg.n, d, ts)?;
            let mut corr: Vec<(f64, usize)> = (0..d)
                .map(|i| (proj.row(i).iter().zip(&w).map(|(a, b)| a * b).sum(), i))
                .collect();
            if cfg.inject {
                corr[0] = (1.0, usize::MAX);
            }
            corr.sort_by(|a, b| b.0.total_cmp(&a.0));
            let chosen = &corr[..cfg.k];
            let mut sum = vec![0.0; cfg.n];
            for &(_, i) in chosen {
                let row: &[f64] = if i == usize::MAX { &w } else { proj.row(i) };
                sum.iter_mut().zip(row).for_each(|(a, b)| *a += b);
            }
            let norm = sum.iter().map(|a| a * a).sum::<f64>().sqrt();
            let alignment = sum.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / norm;
            let success = (0..cfg.points).all(|i| {
                let label = if i % 2 == 0 { 1.0 } else { -1.0 };
                let x = margin_point(&w, cfg.gamma, label, &mut r);
                label * sum.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() > 0.0
            });
            Ok(SparseSeparatorTrial { trial: t, success, min_rho: chosen[cfg.k - 1].0, alignment })
        })
        .collect::<Result<Vec<_>>>()?;
    let wins = trials.iter().filter(|t| t.success).count();
    Ok(SparseSeparatorReport {
        d,
        rho_required: cfg.rho_required(),
        alignment_required: 1.0 - cfg.gamma * cfg.gamma / 2.0,
        success_rate: wins as f64 / cfg.trials.max(1) as f64,
        min_rho_observed: trials.iter().map(|t| t.min_rho).fold(f64::INFINITY, f64::min),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{Codebook, CodebookKind};
    use crate::euclid::Srp;

    fn bip(v: &[i8]) -> Hypervector<f64> {
        Hypervector::bipolar(v.to_vec()).unwrap()
    }

    #[test]
    fn one_example_per_class() {
        let cb = Codebook::<f64>::generate(CodebookKind::DenseBipolar, 5, 1024, 1).unwrap();
        let data: Vec<_> = cb.vectors().iter().cloned().zip([10, 20, 30, 40, 50]).collect();
        let m = PrototypeModel::train(&data).unwrap();
        for (h, y) in &data {
            assert_eq!(m.predict(h).unwrap(), *y);
        }
        assert_eq!(m.classes(), &[10, 20, 30, 40, 50]);
    }

    #[test]
    fn duplication_and_scaling_preserve_predictions() {
        let cb = Codebook::<f64>::generate(CodebookKind::DenseBipolar, 40, 256, 2).unwrap();
        let data: Vec<_> = cb.vectors().iter().cloned().enumerate().map(|(i, h)| (h, i % 3)).collect();
        let m = PrototypeModel::train(&data).unwrap();
        let doubled: Vec<_> = data.iter().chain(&data).cloned().collect();
        let m2 = PrototypeModel::train(&doubled).unwrap();
        assert_eq!(m2.prototypes(), m.scaled(2).unwrap().prototypes());
        let probe = Codebook::<f64>::generate(CodebookKind::DenseBipolar, 30, 256, 3).unwrap();
        for h in probe.vectors() {
            assert_eq!(m.predict(h).unwrap(), m2.predict(h).unwrap());
            assert_eq!(m.predict(h).unwrap(), m.scaled(5).unwrap().predict(h).unwrap());
        }
    }

    #[test]
    fn training_is_order_independent() {
        let gauss = Codebook::<f64>::generate(CodebookKind::Gaussian { sigma: 1.0 }, 30, 64, 4).unwrap();
        let mut data: Vec<_> = gauss.vectors().iter().cloned().enumerate().map(|(i, h)| (h, i % 4)).collect();
        let a = PrototypeModel::train(&data).unwrap();
        data.reverse();
        data.swap(3, 17);
        assert_eq!(a, PrototypeModel::train(&data).unwrap());
    }

    #[test]
    fn empty_model_and_ties() {
        let m = PrototypeModel::<f64>::new(4, &[]);
        assert!(m.predict(&bip(&[1, 1, 1, 1])).is_err());
        let mut m = PrototypeModel::new(4, &[]);
        m.add_example(&bip(&[1, 1, -1, -1]), 7).unwrap();
        m.add_example(&bip(&[1, -1, 1, -1]), 3).unwrap();
        assert_eq!(m.classes(), &[3, 7]);
        // equidistant probe: lowest class index wins
        assert_eq!(m.predict(&bip(&[1, 1, 1, 1])).unwrap(), 3);
    }

    #[test]
    fn finetune_fixed_point_and_label_noise() {
        let cb = Codebook::<f64>::generate(CodebookKind::DenseBipolar, 6, 512, 5).unwrap();
        let data: Vec<_> = cb.vectors().iter().cloned().enumerate().map(|(i, h)| (h, i % 2)).collect();
        let mut m = PrototypeModel::train(&data).unwrap();
        let before = m.clone();
        assert_eq!(m.perceptron_finetune(&data, 5).unwrap(), vec![0]);
        assert_eq!(m, before);
        assert!(m.perceptron_finetune(&data, 0).is_err());

        let mut r = rng::stream(5, 0);
        let big = Codebook::<f64>::generate(CodebookKind::DenseBipolar, 200, 64, 6).unwrap();
        let noisy: Vec<_> = big
            .vectors()
            .iter()
            .cloned()
            .map(|h| {
                let y = (h.get(0) > 0.0) as usize;
                (h, if r.random::<f64>() < 0.1 { 1 - y } else { y })
            })
            .collect();
        let mut m = PrototypeModel::train(&noisy).unwrap();
        let hist = m.perceptron_finetune(&noisy, 7).unwrap();
        assert!(hist.len() <= 7);
    }

    #[test]
    fn finetune_reaches_separable_fit() {
        let (n, d) = (8, 512);
        let enc = Srp::<f64>::new(n, d, 7).unwrap();
        let mut r = rng::stream(7, 1);
        let data: Vec<_> = (0..150)
            .map(|_| {
                let x = random_unit(n, &mut r);
                let h = enc.encode(&x).unwrap();
                let y = (h.get(0) + h.get(1) + h.get(2) > 0.0) as usize;
                (h, y)
            })
            .collect();
        let mut m = PrototypeModel::train(&data).unwrap();
        let start = m.accuracy(&data).unwrap();
        let hist = m.perceptron_finetune(&data, 200).unwrap();
        assert_eq!(*hist.last().unwrap(), 0);
        assert!(m.accuracy(&data).unwrap() >= start);
        assert_eq!(m.accuracy(&data).unwrap(), 1.0);
    }

    #[test]
    fn perceptron_mistake_bound() {
        // Labels follow the sign of three coordinates, so u = (e₀+e₁+e₂)/√3
        // separates with margin 1/√3 and R = √d.
        let d = 256;
        let cb = Codebook::<f64>::generate(CodebookKind::DenseBipolar, 400, d, 8).unwrap();
        let stream: Vec<_> = cb
            .vectors()
            .iter()
            .map(|h| {
                let y: i8 = if h.get(0) + h.get(1) + h.get(2) > 0.0 { 1 } else { -1 };
                (h.clone(), y)
            })
            .collect();
        let gamma = stream
            .iter()
            .map(|(h, y)| *y as f64 * (h.get(0) + h.get(1) + h.get(2)) / 3f64.sqrt())
            .fold(f64::INFINITY, f64::min);
        let bound = (d as f64) / (gamma * gamma);
        let mut m = LinearModel::perceptron(d);
        let mut total = 0;
        for _ in 0..100 {
            let before = m.mistakes();
            m.train(&stream).unwrap();
            total = m.mistakes();
            if total == before {
                break;
            }
        }
        assert!(total as f64 <= bound, "{total} > {bound}");
        assert!(stream.iter().all(|(h, y)| m.predict(h).unwrap() == *y));
    }

    #[test]
    fn winnow_single_coordinate() {
        let d = 1024;
        let cb = Codebook::<f64>::generate(CodebookKind::DenseBipolar, 3000, d, 9).unwrap();
        let stream: Vec<_> = cb.vectors().iter().map(|h| (h.clone(), h.as_bipolar().unwrap()[17])).collect();
        let mut m = LinearModel::winnow(d);
        let mistakes = m.train(&stream).unwrap();
        assert!(mistakes as f64 <= 4.0 * (d as f64).log2() + 4.0, "{mistakes}");
        assert!(m.weights().iter().all(|&w| w > 0.0));
        for &w in m.weights() {
            assert_eq!(w.log2().fract(), 0.0);
        }
    }

    #[test]
    fn winnow_constant_labels_and_errors() {
        let cb = Codebook::<f64>::generate(CodebookKind::DenseBipolar, 200, 128, 10).unwrap();
        for y in [1i8, -1] {
            let stream: Vec<_> = cb.vectors().iter().map(|h| (h.clone(), y)).collect();
            let mut m = LinearModel::winnow(128);
            assert!(m.train(&stream).unwrap() <= 3);
        }
        let mut m = LinearModel::winnow(128);
        assert!(m.update(&cb.vectors()[0], 0).is_err());
        let sp = Hypervector::<f64>::sparse(4, vec![1, 3]).unwrap();
        let m = LinearModel::winnow(4);
        assert_eq!(m.score(&sp).unwrap(), 4.0);
    }

    #[test]
    fn separating_function_singletons() {
        let enc = Srp::<f64>::new(3, 512, 11).unwrap();
        let (p, q) = (vec![1.0, 0.2, 0.0], vec![-0.3, 1.0, 0.5]);
        let f = separating_function(std::slice::from_ref(&p), std::slice::from_ref(&q), &enc).unwrap();
        assert!(f.eval(&enc.encode(&p).unwrap()) > 0.0);
        assert!(f.eval(&enc.encode(&q).unwrap()) < 0.0);
        assert!(separating_function(std::slice::from_ref(&p), std::slice::from_ref(&p), &enc).is_err());
    }

    #[test]
    fn separating_function_guarantee_is_exact() {
        let (n, d) = (6, 2048);
        let enc = Projection::<f64>::new(n, d, 12).unwrap();
        let mut guaranteed = 0;
        for trial in 0..10 {
            let mut r = rng::stream(12, trial);
            let a = 0.3;
            let v: Vec<f64> = (0..n - 1).map(|_| r.random_range(-1.0..1.0)).collect();
            let mk = |s: f64, r: &mut rand_chacha::ChaCha8Rng, shift: f64| {
                let mut x = vec![s * (a + shift)];
                for b in &v {
                    x.push(if shift > 0.0 { b + r.random_range(-0.5..0.5) } else { *b });
                }
                x
            };
            let mut ps = vec![mk(1.0, &mut r, 0.0)];
            let mut qs = vec![mk(-1.0, &mut r, 0.0)];
            for _ in 0..20 {
                let sp = r.random_range(0.05..1.0);
                ps.push(mk(1.0, &mut r, sp));
                let sq = r.random_range(0.05..1.0);
                qs.push(mk(-1.0, &mut r, sq));
            }
            let f = separating_function(&ps, &qs, &enc).unwrap();
            assert!(f.hull_condition);
            if f.guaranteed() {
                guaranteed += 1;
                assert!(ps.iter().all(|x| f.eval(&enc.encode(x).unwrap()) > 0.0));
                assert!(qs.iter().all(|x| f.eval(&enc.encode(x).unwrap()) < 0.0));
            }
        }
        assert!(guaranteed > 0);
    }

    #[test]
    fn sparse_separator_dimension_and_cap() {
        let cfg = SparseSeparatorConfig::new(16, 4, 0.5, 1, 0);
        assert_eq!(cfg.dimension().unwrap(), (4.0 * 8f64.exp()).ceil() as usize);
        assert!((cfg.rho_required() - 1.0).abs() < 1e-12);
        let tiny = SparseSeparatorConfig::new(16, 1, 0.05, 1, 0);
        assert!(matches!(tiny.dimension(), Err(HdcError::ResourceCap(_))));
        assert!(SparseSeparatorConfig::new(16, 1, 1.0, 1, 0).dimension().is_err());
    }

    #[test]
    fn sparse_separator_single_row() {
        let mut cfg = SparseSeparatorConfig::new(4, 1, 0.9, 40, 13);
        let rep = sparse_separator_experiment(&cfg).unwrap();
        assert!(rep.success_rate >= 0.5, "{}", rep.success_rate);
        cfg.inject = true;
        cfg.gamma = 0.6;
        cfg.n = 6;
        let rep = sparse_separator_experiment(&cfg).unwrap();
        assert_eq!(rep.success_rate, 1.0);
    }
}
