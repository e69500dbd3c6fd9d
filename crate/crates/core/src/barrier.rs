//! The barrier distribution: an asymmetric additive instance with
//! geometric-grid marginals on which selling separately, bundling, and
//! symmetric-coupling approaches all lose a constant factor.

use crate::dist::{make_product, DistError, Marginal, ProductDistribution};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BarrierError {
    #[error("n must be even and at least 64 (got {0})")]
    BadN(usize),
    #[error("eps must lie in (0,1) (got {0})")]
    BadEps(f64),
    #[error("grid length k must be a positive even integer (got {0})")]
    BadK(usize),
    #[error("failed to find separated indicator vectors within {0} retries")]
    SeparationFailed(usize),
    #[error("zero-atom residual is negative for item {item}: {residual}")]
    NegativeMass { item: usize, residual: f64 },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// The construction parameters plus the sampled grid-indicator vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    /// Grid length; even, with each vector holding exactly `k/2` ones.
    pub k: usize,
    /// `vectors[i][l]` is true when item `i` carries grid level `l`.
    pub vectors: Vec<Vec<bool>>,
}

/// Grid length `k`: `ln(n / ln n) / eps + 1` rounded to the nearest even
/// integer, at least 2.
pub fn barrier_k(n: usize, eps: f64) -> usize {
    let raw = (n as f64 / (n as f64).ln()).ln() / eps + 1.0;
    let even = 2 * (raw / 2.0).round() as usize;
    even.max(2)
}

/// Grid level value: `eps * (1-eps)^l / ln n`.
pub fn grid_value(n: usize, eps: f64, k: usize, l: usize) -> f64 {
    let _ = k;
    eps * (1.0 - eps).powi(l as i32) / (n as f64).ln()
}

/// Grid level probability: `(ln n) * (1-eps)^{-l} / (n k)`.
pub fn grid_prob(n: usize, eps: f64, k: usize, l: usize) -> f64 {
    (n as f64).ln() * (1.0 - eps).powi(-(l as i32)) / (n as f64 * k as f64)
}

fn sample_vector(k: usize, rng: &mut ChaCha8Rng) -> u64 {
    // Uniform subset of size k/2 via partial Fisher-Yates on [0, k).
    let mut idx: Vec<usize> = (0..k).collect();
    let mut bits = 0u64;
    for pos in 0..k / 2 {
        let j = rng.gen_range(pos..k);
        idx.swap(pos, j);
        bits |= 1u64 << idx[pos];
    }
    bits
}

fn separated(a: u64, b: u64, k: usize) -> bool {
    // |ones(a) ∩ zeros(b)| >= k/6; symmetric when both have k/2 ones.
    6 * (a & !b).count_ones() as usize >= k
}

/// Builds the barrier instance: even items carry an atom `(1, eps/n)`,
/// odd items `(1/2, 2 eps/n)`, each item carries the `k/2` grid atoms
/// its indicator vector selects, and the residual mass sits at 0.
/// Vectors are resampled one at a time until every pair satisfies the
/// separation property.
pub fn gen_barrier(
    n: usize,
    eps: f64,
    seed: u64,
    max_retries: usize,
) -> Result<(ProductDistribution, BarrierSpec), BarrierError> {
    gen_barrier_with_k(n, eps, seed, max_retries, None)
}

/// Like [`gen_barrier`] but with an explicit grid length overriding the
/// formula (must be even).
pub fn gen_barrier_with_k(
    n: usize,
    eps: f64,
    seed: u64,
    max_retries: usize,
    k_override: Option<usize>,
) -> Result<(ProductDistribution, BarrierSpec), BarrierError> {
    if !n.is_multiple_of(2) || n < 64 {
        return Err(BarrierError::BadN(n));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(BarrierError::BadEps(eps));
    }
    let k = k_override.unwrap_or_else(|| barrier_k(n, eps));
    if !k.is_multiple_of(2) || k == 0 {
        return Err(BarrierError::BadK(k));
    }
    assert!(k <= 64, "grid length {k} exceeds the bitset width");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted: Vec<u64> = Vec::with_capacity(n);
    let mut retries = 0usize;
    while accepted.len() < n {
        let cand = sample_vector(k, &mut rng);
        if accepted.iter().all(|&prev| separated(cand, prev, k)) {
            accepted.push(cand);
        } else {
            retries += 1;
            if retries > max_retries {
                return Err(BarrierError::SeparationFailed(max_retries));
            }
        }
    }

    let mut marginals = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for (i, &bits) in accepted.iter().enumerate() {
        let (big_value, big_prob) = if i % 2 == 0 {
            (1.0, eps / n as f64)
        } else {
            (0.5, 2.0 * eps / n as f64)
        };
        let mut values = vec![big_value];
        let mut probs = vec![big_prob];
        for l in 0..k {
            if bits & (1 << l) != 0 {
                values.push(grid_value(n, eps, k, l));
                probs.push(grid_prob(n, eps, k, l));
            }
        }
        let residual = 1.0 - probs.iter().sum::<f64>();
        if residual < 0.0 {
            return Err(BarrierError::NegativeMass { item: i, residual });
        }
        values.push(0.0);
        probs.push(residual);
        marginals.push(Marginal::new(values, probs)?);
        vectors.push((0..k).map(|l| bits & (1 << l) != 0).collect());
    }
    let d = make_product(marginals, n)?;
    Ok((
        d,
        BarrierSpec {
            n,
            eps,
            seed,
            k,
            vectors,
        },
    ))
}

/// Exactly-checkable features of the barrier instance, plus a
/// Monte-Carlo bundle-revenue estimate (statistical, not asserted).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierFeatures {
    /// Exact `Val(D) = sum of E[v_i]`; the target is `3 eps / 2`.
    pub val: f64,
    pub val_target: f64,
    /// Selling-separately revenue at prices 1 (even items) and 1/2 (odd
    /// items); the target is `eps`.
    pub srev_at_fixed_prices: f64,
    pub srev_target: f64,
    /// Maximum over grid prices and items of the per-item posted
    /// revenue `p * Pr[v_i >= p]`; each term is bounded by `eps / n`.
    pub max_grid_item_revenue: f64,
    pub grid_item_revenue_bound: f64,
    /// Per-item max value is 1 on even items and 1/2 on odd items.
    pub max_value: f64,
    /// Grand-bundle revenue estimate: best grid price times the
    /// Monte-Carlo sell probability, with a standard error.
    pub brev_estimate: f64,
    pub brev_stderr: f64,
    pub brev_reference: f64,
}

/// Evaluates the feature report; callers assert (a)-(d) against their
/// targets, while the bundle estimate is informational.
pub fn check_features(
    d: &ProductDistribution,
    spec: &BarrierSpec,
    mc_samples: usize,
    mc_seed: u64,
) -> BarrierFeatures {
    let n = spec.n;
    let eps = spec.eps;
    let val: f64 = (0..n).map(|i| d.marginal(i).expectation()).sum();

    let srev: f64 = (0..n)
        .map(|i| {
            let p = if i % 2 == 0 { 1.0 } else { 0.5 };
            p * d.marginal(i).pr_geq(p)
        })
        .sum();

    let mut max_grid_rev: f64 = 0.0;
    for l in 0..spec.k {
        let p = grid_value(n, eps, spec.k, l);
        for i in 0..n {
            max_grid_rev = max_grid_rev.max(p * d.marginal(i).pr_geq(p));
        }
    }

    let max_value = (0..n).map(|i| d.marginal(i).max_value()).fold(0.0, f64::max);

    // Grand-bundle revenue over a geometric price grid, one Monte-Carlo
    // pass per candidate price.
    let mut best = (0.0, 0.0);
    let mut price = 3.0 * eps; // twice the expected bundle value
    let mut cand = 0usize;
    while price > eps * eps / 10.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(mc_seed);
        rng.set_stream(cand as u64 + 1);
        let mut hits = 0usize;
        for _ in 0..mc_samples {
            let v = d.sample(&mut rng);
            if v.iter().sum::<f64>() >= price {
                hits += 1;
            }
        }
        let q = hits as f64 / mc_samples as f64;
        let rev = price * q;
        if rev > best.0 {
            let se = price * (q * (1.0 - q) / mc_samples as f64).sqrt();
            best = (rev, se);
        }
        price *= 0.8;
        cand += 1;
    }

    BarrierFeatures {
        val,
        val_target: 1.5 * eps,
        srev_at_fixed_prices: srev,
        srev_target: eps,
        max_grid_item_revenue: max_grid_rev,
        grid_item_revenue_bound: eps / n as f64,
        max_value,
        brev_estimate: best.0,
        brev_stderr: best.1,
        brev_reference: eps,
    }
}
