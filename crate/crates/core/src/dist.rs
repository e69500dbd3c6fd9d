//! Product distributions over item values with k-demand valuation
//! semantics: construction, canonical truncations, support enumeration,
//! sampling, and expected-value computation.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for "probabilities sum to one" checks on a single marginal.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("marginal {index}: values and probs lists have different lengths ({values} vs {probs})")]
    LengthMismatch {
        index: usize,
        values: usize,
        probs: usize,
    },
    #[error("marginal {index}: probabilities sum to {sum}, expected 1 within 1e-12")]
    BadProbSum { index: usize, sum: f64 },
    #[error("marginal {index}: negative or non-finite entry {value}")]
    BadEntry { index: usize, value: f64 },
    #[error("invalid demand parameter k={k} for n={n} items (need 1 <= k <= n)")]
    InvalidK { k: usize, n: usize },
    #[error("distribution has no items")]
    Empty,
    #[error("support size {size} exceeds cap {cap}")]
    SupportTooLarge { size: u128, cap: usize },
    #[error("support size overflows during counting")]
    SupportOverflow,
    #[error("truncation mode {mode:?} does not match valuation class k={k} of n={n}")]
    ModeClassMismatch { mode: TruncationMode, k: usize, n: usize },
    #[error("truncation threshold must be positive, got {t}")]
    BadThreshold { t: f64 },
}

/// A single-item discrete distribution: atoms `(values[i], probs[i])` with
/// strictly ascending non-negative values and strictly positive
/// probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl Marginal {
    /// Builds a marginal, merging duplicate values, dropping zero-mass
    /// atoms, and validating the invariants.  `index` is only used in
    /// error messages.
    pub fn new_indexed(values: Vec<f64>, probs: Vec<f64>, index: usize) -> Result<Self, DistError> {
        if values.len() != probs.len() {
            return Err(DistError::LengthMismatch {
                index,
                values: values.len(),
                probs: probs.len(),
            });
        }
        for &v in &values {
            if !v.is_finite() || v < 0.0 {
                return Err(DistError::BadEntry { index, value: v });
            }
        }
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(DistError::BadEntry { index, value: p });
            }
        }
        let mut atoms: Vec<(f64, f64)> = values.into_iter().zip(probs).collect();
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        merged.retain(|&(_, p)| p > 0.0);
        let sum: f64 = merged.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(DistError::BadProbSum { index, sum });
        }
        Ok(Marginal {
            values: merged.iter().map(|&(v, _)| v).collect(),
            probs: merged.iter().map(|&(_, p)| p).collect(),
        })
    }

    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self, DistError> {
        Self::new_indexed(values, probs, 0)
    }

    /// A deterministic marginal putting all mass on `v`.
    pub fn point_mass(v: f64) -> Self {
        Marginal::new(vec![v], vec![1.0]).expect("point mass is always valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn expectation(&self) -> f64 {
        self.atoms().map(|(v, p)| v * p).sum()
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().expect("marginal is nonempty")
    }

    /// `Pr[v >= p]`.
    pub fn pr_geq(&self, p: f64) -> f64 {
        self.atoms().filter(|&(v, _)| v >= p).map(|(_, q)| q).sum()
    }

    /// `Pr[v < p]`.
    pub fn pr_lt(&self, p: f64) -> f64 {
        self.atoms().filter(|&(v, _)| v < p).map(|(_, q)| q).sum()
    }

    /// Draws one value.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.gen::<f64>();
        let mut acc = 0.0;
        for (v, p) in self.atoms() {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.max_value()
    }

    /// Exact atom-by-atom equality (values and probabilities within `tol`).
    pub fn atom_equal(&self, other: &Marginal, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .atoms()
                .zip(other.atoms())
                .all(|((v, p), (w, q))| (v - w).abs() <= tol && (p - q).abs() <= tol)
    }
}

/// The buyer's valuation class: value of a set is the sum of its `k`
/// largest item values (`k = 1` is unit-demand, `k = n` additive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationClass {
    pub k: usize,
}

/// How values above the threshold are truncated.  Additive truncation
/// caps per-item values for additive (and general k-demand) buyers; max
/// truncation is the unit-demand variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationMode {
    Additive,
    Max,
}

/// A product distribution `D = D_1 x ... x D_n` with a k-demand class.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDistribution {
    marginals: Vec<Marginal>,
    class: ValuationClass,
}

/// Builds a normalized product distribution.
pub fn make_product(marginals: Vec<Marginal>, k: usize) -> Result<ProductDistribution, DistError> {
    let n = marginals.len();
    if n == 0 {
        return Err(DistError::Empty);
    }
    if k < 1 || k > n {
        return Err(DistError::InvalidK { k, n });
    }
    Ok(ProductDistribution {
        marginals,
        class: ValuationClass { k },
    })
}

/// Sum of the `k` largest values among items of `s` (all of them when
/// `|s| <= k`).
pub fn value_of_set(v: &[f64], s: &[usize], class: ValuationClass) -> f64 {
    let mut vals: Vec<f64> = s.iter().map(|&i| v[i]).collect();
    if vals.len() > class.k {
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        vals.truncate(class.k);
    }
    vals.iter().sum()
}

/// Sum of the `k` largest entries of `d` (helper for full-set values).
pub fn top_k_sum(d: &[f64], k: usize) -> f64 {
    if d.len() <= k {
        return d.iter().sum();
    }
    let mut vals = d.to_vec();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals[..k].iter().sum()
}

impl ProductDistribution {
    pub fn n(&self) -> usize {
        self.marginals.len()
    }

    pub fn k(&self) -> usize {
        self.class.k
    }

    pub fn class(&self) -> ValuationClass {
        self.class
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn marginal(&self, i: usize) -> &Marginal {
        &self.marginals[i]
    }

    /// Value of the full item set under the class semantics.
    pub fn full_set_value(&self, v: &[f64]) -> f64 {
        top_k_sum(v, self.class.k)
    }

    /// Exact product-support size, detecting overflow.
    pub fn support_size(&self) -> Result<u128, DistError> {
        let mut size: u128 = 1;
        for m in &self.marginals {
            size = size
                .checked_mul(m.len() as u128)
                .ok_or(DistError::SupportOverflow)?;
        }
        Ok(size)
    }

    /// Enumerates every support point with its product probability.
    pub fn enumerate_support(&self, cap: usize) -> Result<SupportIter<'_>, DistError> {
        let size = self.support_size()?;
        if size > cap as u128 {
            return Err(DistError::SupportTooLarge { size, cap });
        }
        Ok(SupportIter {
            dist: self,
            indices: vec![0; self.n()],
            done: false,
        })
    }

    /// The canonical truncation `D(T, p)`: values above `T` are capped at
    /// `T`, and each item independently takes the huge value
    /// `W = n^2 (max{1,T})^3` with probability `q_i = min{p_i / W, 1}`.
    pub fn truncate(
        &self,
        t: f64,
        p: &[f64],
        mode: TruncationMode,
    ) -> Result<ProductDistribution, DistError> {
        if !(t > 0.0) {
            return Err(DistError::BadThreshold { t });
        }
        let (n, k) = (self.n(), self.k());
        let mode_ok = match mode {
            TruncationMode::Max => k == 1,
            TruncationMode::Additive => k == n || k > 1,
        };
        if !mode_ok {
            return Err(DistError::ModeClassMismatch { mode, k, n });
        }
        let w_value = (n as f64) * (n as f64) * t.max(1.0).powi(3);
        let mut out = Vec::with_capacity(n);
        for (i, m) in self.marginals.iter().enumerate() {
            let q = (p[i] / w_value).min(1.0);
            let mut values: Vec<f64> = m.values().iter().map(|&v| v.min(t)).collect();
            let mut probs: Vec<f64> = m.probs().iter().map(|&pr| pr * (1.0 - q)).collect();
            if q > 0.0 {
                values.push(w_value);
                probs.push(q);
            }
            out.push(Marginal::new_indexed(values, probs, i)?);
        }
        make_product(out, k)
    }

    /// Draws one value vector, i.i.d. across items.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.marginals.iter().map(|m| m.sample(rng)).collect()
    }

    /// Exact `E[v([n])]` by linearity (additive) or enumeration.
    pub fn val_expectation_exact(&self, cap: usize) -> Result<f64, DistError> {
        if self.class.k == self.n() {
            return Ok(self.marginals.iter().map(|m| m.expectation()).sum());
        }
        let mut total = 0.0;
        for (v, p) in self.enumerate_support(cap)? {
            total += p * self.full_set_value(&v);
        }
        Ok(total)
    }

    /// Monte-Carlo `E[v([n])]` with standard error, deterministic under
    /// the seed.
    pub fn val_expectation_mc(&self, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..samples {
            let v = self.sample(&mut rng);
            let x = self.full_set_value(&v);
            sum += x;
            sumsq += x * x;
        }
        let m = samples as f64;
        let mean = sum / m;
        let var = (sumsq / m - mean * mean).max(0.0);
        (mean, (var / m).sqrt())
    }
}

/// Iterator over all product-support points `(value vector, probability)`.
pub struct SupportIter<'a> {
    dist: &'a ProductDistribution,
    indices: Vec<usize>,
    done: bool,
}

impl Iterator for SupportIter<'_> {
    type Item = (Vec<f64>, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut v = Vec::with_capacity(self.indices.len());
        let mut p = 1.0;
        for (i, &idx) in self.indices.iter().enumerate() {
            let m = self.dist.marginal(i);
            v.push(m.values()[idx]);
            p *= m.probs()[idx];
        }
        // Advance odometer.
        let mut carried = true;
        for (i, idx) in self.indices.iter_mut().enumerate().rev() {
            if *idx + 1 < self.dist.marginal(i).len() {
                *idx += 1;
                carried = false;
                break;
            }
            *idx = 0;
        }
        if carried {
            self.done = true;
        }
        Some((v, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_SUPPORT_CAP;

    fn uniform12() -> Marginal {
        Marginal::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn make_product_point_mass() {
        let d = make_product(vec![Marginal::point_mass(1.0)], 1).unwrap();
        assert_eq!(d.n(), 1);
        assert_eq!(d.k(), 1);
    }

    #[test]
    fn bad_prob_sum_rejected() {
        let r = Marginal::new(vec![1.0], vec![0.9]);
        assert!(matches!(r, Err(DistError::BadProbSum { .. })));
    }

    #[test]
    fn duplicate_atoms_merged() {
        let m = Marginal::new(vec![1.0, 1.0, 2.0], vec![0.3, 0.2, 0.5]).unwrap();
        assert_eq!(m.values(), &[1.0, 2.0]);
        assert_eq!(m.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn value_of_set_examples() {
        assert_eq!(
            value_of_set(&[1.0, 2.0], &[0, 1], ValuationClass { k: 2 }),
            3.0
        );
        assert_eq!(
            value_of_set(&[1.0, 2.0], &[0, 1], ValuationClass { k: 1 }),
            2.0
        );
        assert_eq!(
            value_of_set(&[3.0, 2.0, 1.0], &[0, 1, 2], ValuationClass { k: 2 }),
            5.0
        );
    }

    #[test]
    fn truncate_caps_values() {
        let m = Marginal::new(vec![0.5, 10.0], vec![0.5, 0.5]).unwrap();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        let t = d.truncate(1.0, &[0.0, 0.0], TruncationMode::Additive).unwrap();
        assert_eq!(t.marginal(0).values(), &[0.5, 1.0]);
        assert_eq!(t.marginal(0).probs(), &[0.5, 0.5]);
    }

    #[test]
    fn truncate_point_mass_arithmetic() {
        // n=2, T=2 -> W = 4 * 8 = 32; p_1 = 0.64 -> q_1 = 0.02.
        let m = uniform12();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        let t = d.truncate(2.0, &[0.64, 0.0], TruncationMode::Additive).unwrap();
        let m0 = t.marginal(0);
        assert_eq!(m0.values(), &[1.0, 2.0, 32.0]);
        assert!((m0.probs()[0] - 0.49).abs() < 1e-15);
        assert!((m0.probs()[2] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn truncate_identity_when_bounded() {
        let m = uniform12();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        let t = d.truncate(5.0, &[0.0, 0.0], TruncationMode::Additive).unwrap();
        assert_eq!(t, d);
    }

    #[test]
    fn truncate_mode_mismatch() {
        let d = make_product(vec![uniform12(), uniform12()], 2).unwrap();
        let r = d.truncate(1.0, &[0.0, 0.0], TruncationMode::Max);
        assert!(matches!(r, Err(DistError::ModeClassMismatch { .. })));
    }

    #[test]
    fn enumerate_support_counts_and_sums() {
        let d = make_product(
            vec![
                uniform12(),
                Marginal::new(vec![0.0, 1.0, 2.0], vec![0.2, 0.3, 0.5]).unwrap(),
                uniform12(),
            ],
            3,
        )
        .unwrap();
        let pts: Vec<_> = d.enumerate_support(DEFAULT_SUPPORT_CAP).unwrap().collect();
        assert_eq!(pts.len(), 12);
        let total: f64 = pts.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sample_deterministic_under_seed() {
        let d = make_product(vec![uniform12(), uniform12()], 2).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut r1), d.sample(&mut r2));
        }
    }

    #[test]
    fn sample_frequencies_within_4_sigma() {
        let m = Marginal::new(vec![1.0, 2.0, 5.0], vec![0.2, 0.5, 0.3]).unwrap();
        let d = make_product(vec![m.clone()], 1).unwrap();
        let trials = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = vec![0usize; m.len()];
        for _ in 0..trials {
            let v = d.sample(&mut rng)[0];
            let idx = m.values().iter().position(|&x| x == v).unwrap();
            counts[idx] += 1;
        }
        for (i, (_, p)) in m.atoms().enumerate() {
            let mean = p * trials as f64;
            let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (counts[i] as f64 - mean).abs() <= 4.0 * sigma,
                "atom {i}: count {} vs mean {mean} sigma {sigma}",
                counts[i]
            );
        }
    }

    #[test]
    fn val_expectation_additive_linearity() {
        let m = Marginal::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        assert!((d.val_expectation_exact(100).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn val_expectation_unit_demand_max() {
        let d = make_product(vec![uniform12(), uniform12()], 1).unwrap();
        // E[max of two iid uniform{1,2}] = 1.75.
        assert!((d.val_expectation_exact(100).unwrap() - 1.75).abs() < 1e-12);
    }

    #[test]
    fn val_expectation_matches_enumeration() {
        let m = Marginal::new(vec![0.0, 1.0, 3.0], vec![0.25, 0.5, 0.25]).unwrap();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        let exact = d.val_expectation_exact(100).unwrap();
        let mut byenum = 0.0;
        for (v, p) in d.enumerate_support(100).unwrap() {
            byenum += p * d.full_set_value(&v);
        }
        assert!((exact - byenum).abs() < 1e-12);
    }

    #[test]
    fn truncate_preserves_mass() {
        let m = Marginal::new(vec![1.0, 2.0, 100.0], vec![0.4, 0.4, 0.2]).unwrap();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        let t = d.truncate(10.0, &[0.5, 0.0], TruncationMode::Additive).unwrap();
        for m in t.marginals() {
            let s: f64 = m.probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            let w = 4.0 * 1000.0;
            for &v in m.values() {
                assert!(v <= 10.0 || v == w);
            }
        }
    }
}
