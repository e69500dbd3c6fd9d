//! The bucket mechanism: approximates selling-separately revenue with
//! linear symmetric menu complexity by splitting items into high-value
//! singletons, per-price exclusive buckets, and one joint low bundle.

use crate::dist::{DistError, ProductDistribution};
use crate::menu::{
    ItemPermutationGroup, LotteryAllocation, MenuOption, SymmetricComponent, SymmetricMenu,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BucketError {
    #[error("degenerate input: sum of p_i q_i is zero")]
    DegenerateInput,
    #[error("bucket menu would have {options} options, exceeding budget {budget}")]
    MenuTooLarge { options: u128, budget: usize },
    #[error("bucket evaluation requires an additive buyer (k={k}, n={n})")]
    UnsupportedClass { k: usize, n: usize },
    #[error("joint-bundle exact evaluation state space exceeds cap {cap}")]
    JointTooLarge { cap: usize },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// A bucket mechanism: exclusive singleton sales on `b0`, at most one
/// item per bucket, and one all-or-nothing joint bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BucketMechanism {
    /// High items: `(item, price)`, sold at their original prices.
    pub b0: Vec<(usize, f64)>,
    /// Exclusive buckets: `(items, price)`.
    pub buckets: Vec<(Vec<usize>, f64)>,
    /// Joint low bundle `(items, price)`, if any.
    pub joint: Option<(Vec<usize>, f64)>,
    /// Low items dropped because their total mass was below eps * S.
    pub dropped: Vec<usize>,
    pub eps: f64,
}

/// Builds the bucket mechanism from per-item prices and sale
/// probabilities.  High items (`p_i >= S/eps^2`) go to B0; low items
/// (`p_i <= eps^3 S`) form the joint bundle priced at
/// `(1 - eps/2) sum(p q)` when their mass is at least `eps * S`, else
/// they are dropped; medium items get prices rounded down to powers of
/// `(1 - eps)` (anchored at `S/eps^2`), items with `q_i >= eps/2` get
/// singleton buckets, and the rest are greedily packed per price level,
/// closing a bucket when its probability sum would exceed `eps`.
pub fn build_buckets(p: &[f64], q: &[f64], eps: f64) -> Result<BucketMechanism, BucketError> {
    assert_eq!(p.len(), q.len());
    assert!(eps > 0.0 && eps < 1.0);
    let s: f64 = p.iter().zip(q).map(|(&pi, &qi)| pi * qi).sum();
    if s <= 0.0 {
        return Err(BucketError::DegenerateInput);
    }
    let high_cut = s / (eps * eps);
    let low_cut = eps * eps * eps * s;

    let mut b0 = Vec::new();
    let mut low = Vec::new();
    let mut medium = Vec::new();
    for i in 0..p.len() {
        if p[i] >= high_cut {
            b0.push((i, p[i]));
        } else if p[i] <= low_cut {
            low.push(i);
        } else {
            medium.push(i);
        }
    }

    let low_mass: f64 = low.iter().map(|&i| p[i] * q[i]).sum();
    let (joint, dropped) = if !low.is_empty() && low_mass >= eps * s {
        (Some((low, (1.0 - eps / 2.0) * low_mass)), Vec::new())
    } else {
        (None, low)
    };

    // Round medium prices down to powers of (1 - eps) below the high cut.
    let rounded_price = |pi: f64| -> f64 {
        let mut level = high_cut;
        while level > pi * (1.0 + 1e-12) {
            level *= 1.0 - eps;
        }
        level
    };
    let mut buckets: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut packable: Vec<(usize, f64)> = Vec::new(); // (item, rounded price)
    for &i in &medium {
        let r = rounded_price(p[i]);
        if q[i] >= eps / 2.0 {
            buckets.push((vec![i], r));
        } else {
            packable.push((i, r));
        }
    }
    // Group by price level; greedy packing in descending-q order.
    let mut levels: Vec<f64> = packable.iter().map(|&(_, r)| r).collect();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    levels.dedup();
    for level in levels {
        let mut items: Vec<usize> = packable
            .iter()
            .filter(|&&(_, r)| r == level)
            .map(|&(i, _)| i)
            .collect();
        items.sort_by(|&a, &b| q[b].partial_cmp(&q[a]).unwrap().then(a.cmp(&b)));
        let mut current: Vec<usize> = Vec::new();
        let mut mass = 0.0;
        for i in items {
            if !current.is_empty() && mass + q[i] > eps {
                buckets.push((std::mem::take(&mut current), level));
                mass = 0.0;
            }
            current.push(i);
            mass += q[i];
        }
        if !current.is_empty() {
            buckets.push((current, level));
        }
    }
    Ok(BucketMechanism {
        b0,
        buckets,
        joint,
        dropped,
        eps,
    })
}

impl BucketMechanism {
    /// Number of explicit options of the symmetric-menu encoding (the
    /// null option excluded): B0 choice x per-bucket take flags x joint
    /// flag.
    pub fn option_count(&self) -> u128 {
        let b0_choices = self.b0.len() as u128 + 1;
        let joint_choices: u128 = if self.joint.is_some() { 2 } else { 1 };
        let bucket_choices = (0..self.buckets.len()).fold(1u128, |acc, _| acc.saturating_mul(2));
        b0_choices
            .saturating_mul(bucket_choices)
            .saturating_mul(joint_choices)
            .saturating_sub(1)
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }
}

/// Encodes the mechanism as one symmetric component whose group blocks
/// are the buckets (other items in singleton blocks); one representative
/// option per (B0 choice, bucket take-pattern, joint flag).
pub fn bucket_to_menu(
    bm: &BucketMechanism,
    n: usize,
    budget: usize,
) -> Result<SymmetricMenu, BucketError> {
    let options_count = bm.option_count();
    if options_count > budget as u128 {
        return Err(BucketError::MenuTooLarge {
            options: options_count,
            budget,
        });
    }
    let mut blocks: Vec<Vec<usize>> = bm.buckets.iter().map(|(items, _)| items.clone()).collect();
    let in_bucket: Vec<usize> = blocks.iter().flatten().copied().collect();
    for i in 0..n {
        if !in_bucket.contains(&i) {
            blocks.push(vec![i]);
        }
    }
    let group = ItemPermutationGroup::new(blocks, n).expect("buckets partition a subset of items");

    let nb = bm.buckets.len();
    let mut options = Vec::new();
    for b0_choice in 0..=bm.b0.len() {
        for pattern in 0u64..(1u64 << nb) {
            for joint_flag in 0..=usize::from(bm.joint.is_some()) {
                if b0_choice == 0 && pattern == 0 && joint_flag == 0 {
                    continue; // the implicit null option
                }
                let mut x = vec![0.0; n];
                let mut price = 0.0;
                if b0_choice > 0 {
                    let (item, p) = bm.b0[b0_choice - 1];
                    x[item] = 1.0;
                    price += p;
                }
                for (bi, (items, p)) in bm.buckets.iter().enumerate() {
                    if pattern & (1 << bi) != 0 {
                        // One representative item; the orbit covers the rest.
                        x[items[0]] = 1.0;
                        price += p;
                    }
                }
                if joint_flag == 1 {
                    let (items, p) = bm.joint.as_ref().unwrap();
                    for &i in items {
                        x[i] = 1.0;
                    }
                    price += p;
                }
                options.push(MenuOption {
                    alloc: LotteryAllocation { x },
                    price,
                });
            }
        }
    }
    Ok(SymmetricMenu {
        n,
        components: vec![SymmetricComponent { group, options }],
    })
}

#[derive(Debug, Clone, Copy)]
pub enum BucketEvalMode {
    Exact { joint_cap: usize },
    Mc { samples: usize, seed: u64 },
}

/// Decomposed revenue of a bucket mechanism for an additive buyer: each
/// B0 item sells iff `v_j >= p_j`, each bucket sells at its price iff
/// some member clears it, the joint bundle sells iff the member values
/// sum past its price.  Returns `(revenue, stderr)` (stderr 0 in exact
/// mode).
pub fn bucket_revenue(
    bm: &BucketMechanism,
    d: &ProductDistribution,
    mode: BucketEvalMode,
) -> Result<(f64, f64), BucketError> {
    if d.k() != d.n() {
        return Err(BucketError::UnsupportedClass { k: d.k(), n: d.n() });
    }
    match mode {
        BucketEvalMode::Exact { joint_cap } => {
            let mut total = 0.0;
            for &(i, p) in &bm.b0 {
                total += p * d.marginal(i).pr_geq(p);
            }
            for (items, price) in &bm.buckets {
                let none: f64 = items.iter().map(|&i| d.marginal(i).pr_lt(*price)).product();
                total += price * (1.0 - none);
            }
            if let Some((items, price)) = &bm.joint {
                // Distribution of the member sum by dynamic convolution.
                let mut sums: Vec<(f64, f64)> = vec![(0.0, 1.0)];
                for &i in items {
                    let m = d.marginal(i);
                    let mut next: Vec<(f64, f64)> = Vec::with_capacity(sums.len() * m.len());
                    for &(s, ps) in &sums {
                        for (v, pv) in m.atoms() {
                            next.push((s + v, ps * pv));
                        }
                    }
                    next.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(next.len());
                    for (s, p) in next {
                        match merged.last_mut() {
                            Some(last) if last.0 == s => last.1 += p,
                            _ => merged.push((s, p)),
                        }
                    }
                    if merged.len() > joint_cap {
                        return Err(BucketError::JointTooLarge { cap: joint_cap });
                    }
                    sums = merged;
                }
                let sell: f64 = sums
                    .iter()
                    .filter(|&&(s, _)| s >= *price)
                    .map(|&(_, p)| p)
                    .sum();
                total += price * sell;
            }
            Ok((total, 0.0))
        }
        BucketEvalMode::Mc { samples, seed } => {
            const CHUNK: usize = 1024;
            let chunks = samples.div_ceil(CHUNK);
            let stats: Vec<(f64, f64)> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(c as u64 + 1);
                    let count = CHUNK.min(samples - c * CHUNK);
                    let mut sum = 0.0;
                    let mut sumsq = 0.0;
                    for _ in 0..count {
                        let v = d.sample(&mut rng);
                        let mut rev = 0.0;
                        for &(i, p) in &bm.b0 {
                            if v[i] >= p {
                                rev += p;
                            }
                        }
                        for (items, price) in &bm.buckets {
                            if items.iter().any(|&i| v[i] >= *price) {
                                rev += price;
                            }
                        }
                        if let Some((items, price)) = &bm.joint {
                            let total: f64 = items.iter().map(|&i| v[i]).sum();
                            if total >= *price {
                                rev += price;
                            }
                        }
                        sum += rev;
                        sumsq += rev * rev;
                    }
                    (sum, sumsq)
                })
                .collect();
            let (sum, sumsq) = stats
                .iter()
                .fold((0.0, 0.0), |(a, b), &(s, q)| (a + s, b + q));
            let m = samples as f64;
            let mean = sum / m;
            let var = (sumsq / m - mean * mean).max(0.0);
            Ok((mean, (var / m).sqrt()))
        }
    }
}
