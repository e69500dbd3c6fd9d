//! Canonical value- and probability-discretizations with explicit
//! couplings, and the coupling errors delta / delta_M feeding the
//! nudge-and-round inequalities.

use crate::dist::{make_product, DistError, Marginal, ProductDistribution};
use crate::menu::{best_symmetric_variant, SymmetricMenu};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiscretizeError {
    #[error("atom value {value} exceeds the boundedness cap t*Rhat = {cap}")]
    BoundednessViolated { value: f64, cap: f64 },
    #[error("coupling is not componentwise dominating: item {item}, source {from} -> target {to}")]
    NonMonotoneCoupling { item: usize, from: f64, to: f64 },
    #[error("invalid discretization parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Parameters of the canonical discretizations: grid ratio `delta`,
/// boundedness factor `t`, and the revenue proxy `Rhat` standing in for
/// the unknown optimal revenue.
#[derive(Debug, Clone, Copy)]
pub struct DiscretizationParams {
    pub delta: f64,
    pub t: f64,
    pub rev_proxy: f64,
    pub k: usize,
    pub n: usize,
}

impl DiscretizationParams {
    fn check(&self) -> Result<(), DiscretizeError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(DiscretizeError::BadParams(format!(
                "delta {} not in (0,1)",
                self.delta
            )));
        }
        if !(self.rev_proxy > 0.0) {
            return Err(DiscretizeError::BadParams(format!(
                "rev_proxy {} must be positive",
                self.rev_proxy
            )));
        }
        if !(self.t > 0.0) {
            return Err(DiscretizeError::BadParams(format!(
                "t {} must be positive",
                self.t
            )));
        }
        Ok(())
    }
}

/// Per-item randomized map: `maps[a]` lists `(target value, conditional
/// probability)` pairs for source atom index `a`.
#[derive(Debug, Clone)]
pub struct ItemCoupling {
    pub maps: Vec<Vec<(f64, f64)>>,
}

/// A product coupling between two product distributions, item by item.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub items: Vec<ItemCoupling>,
}

impl Coupling {
    /// Checks conditional normalization and that pushing the source
    /// marginals through the coupling reproduces the target marginals.
    pub fn validate(
        &self,
        source: &ProductDistribution,
        target: &ProductDistribution,
        tol: f64,
    ) -> bool {
        for (i, ic) in self.items.iter().enumerate() {
            let src = source.marginal(i);
            if ic.maps.len() != src.len() {
                return false;
            }
            let mut pushed: Vec<(f64, f64)> = Vec::new();
            for (a, targets) in ic.maps.iter().enumerate() {
                let total: f64 = targets.iter().map(|&(_, p)| p).sum();
                if (total - 1.0).abs() > tol {
                    return false;
                }
                for &(v, p) in targets {
                    match pushed.iter_mut().find(|(w, _)| *w == v) {
                        Some(entry) => entry.1 += src.probs()[a] * p,
                        None => pushed.push((v, src.probs()[a] * p)),
                    }
                }
            }
            let tgt = target.marginal(i);
            for (v, p) in tgt.atoms() {
                let got = pushed
                    .iter()
                    .find(|(w, _)| *w == v)
                    .map(|&(_, p)| p)
                    .unwrap_or(0.0);
                if (got - p).abs() > tol {
                    return false;
                }
            }
            let extra: f64 = pushed
                .iter()
                .filter(|(v, _)| tgt.values().iter().all(|&w| w != *v))
                .map(|&(_, p)| p)
                .sum();
            if extra > tol {
                return false;
            }
        }
        true
    }

    /// `E[target value | source atom a]` for item `i`.
    fn cond_exp(&self, i: usize, a: usize) -> f64 {
        self.items[i].maps[a].iter().map(|&(v, p)| v * p).sum()
    }

    /// Verifies the coupling only ever maps values downward.
    fn check_dominating(&self, source: &ProductDistribution) -> Result<(), DiscretizeError> {
        for (i, ic) in self.items.iter().enumerate() {
            for (a, targets) in ic.maps.iter().enumerate() {
                let sv = source.marginal(i).values()[a];
                for &(tv, p) in targets {
                    if p > 0.0 && tv > sv + 1e-12 {
                        return Err(DiscretizeError::NonMonotoneCoupling {
                            item: i,
                            from: sv,
                            to: tv,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Composition: `self` maps D -> D_mid, `other` maps D_mid -> D_out.
    pub fn compose(&self, mid: &ProductDistribution, other: &Coupling) -> Coupling {
        let items = self
            .items
            .iter()
            .enumerate()
            .map(|(i, ic)| {
                let mid_values = mid.marginal(i).values();
                let maps = ic
                    .maps
                    .iter()
                    .map(|targets| {
                        let mut out: Vec<(f64, f64)> = Vec::new();
                        for &(v_mid, p1) in targets {
                            let idx = mid_values
                                .iter()
                                .position(|&w| w == v_mid)
                                .expect("intermediate value present in mid distribution");
                            for &(v_out, p2) in &other.items[i].maps[idx] {
                                let p = p1 * p2;
                                if p == 0.0 {
                                    continue;
                                }
                                match out.iter_mut().find(|(w, _)| *w == v_out) {
                                    Some(e) => e.1 += p,
                                    None => out.push((v_out, p)),
                                }
                            }
                        }
                        out
                    })
                    .collect();
                ItemCoupling { maps }
            })
            .collect();
        Coupling { items }
    }
}

/// Largest exponent-`e` power `(1-delta)^e <= ratio` for `ratio` in
/// `(0, 1]`, with a downward guard so rounding never rounds up; returns
/// the power itself.  Exact powers are preserved.
fn round_down_power(ratio: f64, delta: f64) -> f64 {
    debug_assert!(ratio > 0.0 && ratio <= 1.0 + 1e-12);
    let base = 1.0 - delta;
    let mut e = (ratio.ln() / base.ln()).ceil().max(0.0) as i64;
    let rel = 1.0 + 1e-12;
    while base.powi(e as i32) > ratio * rel {
        e += 1;
    }
    while e > 0 && base.powi(e as i32 - 1) <= ratio * rel {
        e -= 1;
    }
    base.powi(e as i32)
}

/// Canonical value-discretization: every positive atom value is rounded
/// down onto the grid `t * Rhat * (1-delta)^j`, then values below
/// `delta * Rhat / k` are zeroed.  The coupling is the deterministic
/// per-atom rounding.
pub fn value_discretize(
    d: &ProductDistribution,
    params: &DiscretizationParams,
) -> Result<(ProductDistribution, Coupling), DiscretizeError> {
    params.check()?;
    let cap = params.t * params.rev_proxy;
    let floor = params.delta * params.rev_proxy / params.k as f64;
    let mut marginals = Vec::with_capacity(d.n());
    let mut items = Vec::with_capacity(d.n());
    for (i, m) in d.marginals().iter().enumerate() {
        let mut values = Vec::with_capacity(m.len());
        let mut maps = Vec::with_capacity(m.len());
        for &v in m.values() {
            if v > cap * (1.0 + 1e-12) {
                return Err(DiscretizeError::BoundednessViolated { value: v, cap });
            }
            let rounded = if v <= 0.0 {
                0.0
            } else {
                let r = cap * round_down_power((v / cap).min(1.0), params.delta);
                if r < floor {
                    0.0
                } else {
                    r
                }
            };
            values.push(rounded);
            maps.push(vec![(rounded, 1.0)]);
        }
        marginals.push(Marginal::new_indexed(values, m.probs().to_vec(), i)?);
        items.push(ItemCoupling { maps });
    }
    Ok((make_product(marginals, d.k())?, Coupling { items }))
}

/// Canonical probability-discretization of an already value-discretized
/// distribution: each positive-value atom's probability is rounded down
/// to a power of `(1-delta)` (zero below `delta^2 / n^2`), the removed
/// mass moves to value 0, and the careful coupling keeps the value with
/// probability `q'/q`.
pub fn prob_discretize(
    d: &ProductDistribution,
    params: &DiscretizationParams,
) -> Result<(ProductDistribution, Coupling), DiscretizeError> {
    params.check()?;
    let threshold = params.delta * params.delta / (params.n as f64 * params.n as f64);
    let mut marginals = Vec::with_capacity(d.n());
    let mut items = Vec::with_capacity(d.n());
    for (i, m) in d.marginals().iter().enumerate() {
        let mut values = Vec::new();
        let mut probs = Vec::new();
        let mut moved = 0.0;
        let mut maps = Vec::with_capacity(m.len());
        for (v, q) in m.atoms() {
            if v <= 0.0 {
                maps.push(vec![(0.0, 1.0)]);
                values.push(0.0);
                probs.push(q);
                continue;
            }
            let q_new = if q < threshold {
                0.0
            } else {
                round_down_power(q.min(1.0), params.delta)
            };
            moved += q - q_new;
            let keep = q_new / q;
            let mut targets = Vec::new();
            if keep > 0.0 {
                targets.push((v, keep));
            }
            if keep < 1.0 {
                targets.push((0.0, 1.0 - keep));
            }
            maps.push(targets);
            if q_new > 0.0 {
                values.push(v);
                probs.push(q_new);
            }
        }
        if moved > 0.0 {
            values.push(0.0);
            probs.push(moved);
        }
        marginals.push(Marginal::new_indexed(values, probs, i)?);
        items.push(ItemCoupling { maps });
    }
    Ok((make_product(marginals, d.k())?, Coupling { items }))
}

/// The composed canonical discretization `D*_delta`: value-discretize
/// with parameter `k * delta`, then probability-discretize with `delta`.
pub fn canonical_discretize(
    d: &ProductDistribution,
    params: &DiscretizationParams,
) -> Result<(ProductDistribution, Coupling), DiscretizeError> {
    let kdelta = params.delta * params.k as f64;
    if kdelta >= 1.0 {
        return Err(DiscretizeError::BadParams(format!(
            "k * delta = {kdelta} must be below 1"
        )));
    }
    let vparams = DiscretizationParams {
        delta: kdelta,
        ..*params
    };
    let (mid, c1) = value_discretize(d, &vparams)?;
    let (out, c2) = prob_discretize(&mid, params)?;
    let coupling = c1.compose(&mid, &c2);
    Ok((out, coupling))
}

#[derive(Debug, Clone, Copy)]
pub enum DeltaMode {
    ExactEnumerate,
    Analytic,
}

/// The coupling error `delta(D, D') = E[max_S (v(S) - v'(S)) + max_S
/// (v'(S) - v(S))]`.  For componentwise-dominating couplings the first
/// term is the sum of the k largest coordinates of `v - E-outcome` and
/// the second is zero.  Analytic mode returns the bound
/// `delta * (Val(D) + Rhat)`.
pub fn delta_bound(
    d: &ProductDistribution,
    coupling: &Coupling,
    params: &DiscretizationParams,
    mode: DeltaMode,
    support_cap: usize,
) -> Result<f64, DiscretizeError> {
    match mode {
        DeltaMode::Analytic => {
            let val = d.val_expectation_exact(support_cap)?;
            Ok(params.delta * (val + params.rev_proxy))
        }
        DeltaMode::ExactEnumerate => {
            coupling.check_dominating(d)?;
            let k = d.k();
            let mut total = 0.0;
            for_each_source_atom(d, support_cap, |idx, v, p| {
                // Expand the per-item coupling outcomes for this source
                // point; the expectation of the top-k difference needs
                // the full joint over outcomes.
                let mut acc = 0.0;
                expand_outcomes(coupling, idx, v, 0, &mut vec![0.0; v.len()], 1.0, &mut |diff,
                     q| {
                    acc += q * crate::dist::top_k_sum(diff, k);
                });
                total += p * acc;
            })?;
            Ok(total)
        }
    }
}

/// Enumerates source support atoms as `(atom index vector, values,
/// probability)`.
fn for_each_source_atom(
    d: &ProductDistribution,
    support_cap: usize,
    mut f: impl FnMut(&[usize], &[f64], f64),
) -> Result<(), DistError> {
    let size = d.support_size()?;
    if size > support_cap as u128 {
        return Err(DistError::SupportTooLarge {
            size,
            cap: support_cap,
        });
    }
    let n = d.n();
    let mut idx = vec![0usize; n];
    loop {
        let mut v = Vec::with_capacity(n);
        let mut p = 1.0;
        for i in 0..n {
            v.push(d.marginal(i).values()[idx[i]]);
            p *= d.marginal(i).probs()[idx[i]];
        }
        f(&idx, &v, p);
        let mut done = true;
        for i in (0..n).rev() {
            if idx[i] + 1 < d.marginal(i).len() {
                idx[i] += 1;
                done = false;
                break;
            }
            idx[i] = 0;
        }
        if done {
            return Ok(());
        }
    }
}

/// Recursively expands the joint coupling outcomes for one source point,
/// yielding the difference vector `v - v'` and its conditional mass.
fn expand_outcomes(
    coupling: &Coupling,
    idx: &[usize],
    v: &[f64],
    item: usize,
    diff: &mut Vec<f64>,
    mass: f64,
    f: &mut impl FnMut(&[f64], f64),
) {
    if item == v.len() {
        f(diff, mass);
        return;
    }
    for &(tv, p) in &coupling.items[item].maps[idx[item]] {
        if p == 0.0 {
            continue;
        }
        diff[item] = (v[item] - tv).max(0.0);
        expand_outcomes(coupling, idx, v, item + 1, diff, mass * p, f);
    }
    diff[item] = 0.0;
}

#[derive(Debug, Clone, Copy)]
pub enum DeltaMMode {
    ExactEnumerate,
    Mc { samples: usize, seed: u64 },
}

/// The menu-specific coupling error `delta_M`: the sup over mappings
/// decomposes pointwise into, for each source point, the best menu
/// allocation (orbit-optimized) applied to the conditional expected
/// difference vector; the reverse term vanishes for dominating
/// couplings.  Monte-Carlo mode returns `(estimate, stderr)`.
pub fn delta_m(
    d: &ProductDistribution,
    coupling: &Coupling,
    menu: &SymmetricMenu,
    mode: DeltaMMode,
    support_cap: usize,
) -> Result<(f64, f64), DiscretizeError> {
    coupling.check_dominating(d)?;
    let term_for = |idx: &[usize], v: &[f64]| -> f64 {
        let diff: Vec<f64> = (0..v.len())
            .map(|i| (v[i] - coupling.cond_exp(i, idx[i])).max(0.0))
            .collect();
        let mut best = 0.0f64; // the null mapping contributes zero
        for comp in &menu.components {
            for opt in &comp.options {
                let (_, u) = best_symmetric_variant(&diff, &comp.group, &opt.alloc, 0.0);
                best = best.max(u);
            }
        }
        best
    };
    match mode {
        DeltaMMode::ExactEnumerate => {
            let mut total = 0.0;
            for_each_source_atom(d, support_cap, |idx, v, p| {
                total += p * term_for(idx, v);
            })?;
            Ok((total, 0.0))
        }
        DeltaMMode::Mc { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = d.n();
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..samples {
                let mut idx = Vec::with_capacity(n);
                let mut v = Vec::with_capacity(n);
                for i in 0..n {
                    let m = d.marginal(i);
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    let mut chosen = m.len() - 1;
                    for (a, &p) in m.probs().iter().enumerate() {
                        acc += p;
                        if u < acc {
                            chosen = a;
                            break;
                        }
                    }
                    idx.push(chosen);
                    v.push(m.values()[chosen]);
                }
                let x = term_for(&idx, &v);
                sum += x;
                sumsq += x * x;
            }
            let m = samples as f64;
            let mean = sum / m;
            let var = (sumsq / m - mean * mean).max(0.0);
            Ok((mean, (var / m).sqrt()))
        }
    }
}

/// The identity coupling of a distribution with itself.
pub fn identity_coupling(d: &ProductDistribution) -> Coupling {
    Coupling {
        items: d
            .marginals()
            .iter()
            .map(|m| ItemCoupling {
                maps: m.values().iter().map(|&v| vec![(v, 1.0)]).collect(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::make_product;
    use crate::menu::{LotteryAllocation, MenuOption};

    fn params(delta: f64, t: f64, rhat: f64, k: usize, n: usize) -> DiscretizationParams {
        DiscretizationParams {
            delta,
            t,
            rev_proxy: rhat,
            k,
            n,
        }
    }

    #[test]
    fn round_down_power_examples() {
        assert!((round_down_power(1.0, 0.5) - 1.0).abs() < 1e-15);
        assert!((round_down_power(0.6, 0.5) - 0.5).abs() < 1e-15);
        assert!((round_down_power(0.5, 0.5) - 0.5).abs() < 1e-15);
        assert!((round_down_power(0.3, 0.5) - 0.25).abs() < 1e-15);
        // Exact powers survive many-step rounding.
        let p = 0.9f64.powi(40);
        assert_eq!(round_down_power(p, 0.1), p);
    }

    #[test]
    fn value_discretize_basics() {
        let m = Marginal::new(vec![0.6, 1.0], vec![0.5, 0.5]).unwrap();
        let d = make_product(vec![m], 1).unwrap();
        let p = params(0.5, 1.0, 1.0, 1, 1);
        let (out, coupling) = value_discretize(&d, &p).unwrap();
        assert_eq!(out.marginal(0).values(), &[0.5, 1.0]);
        assert!(coupling.validate(&d, &out, 1e-9));
    }

    #[test]
    fn value_discretize_zeroes_below_floor() {
        // delta * Rhat / k = 0.5; v = 0.25 rounds to 0.25 < 0.5 -> 0.
        let m = Marginal::new(vec![0.25, 1.0], vec![0.5, 0.5]).unwrap();
        let d = make_product(vec![m], 1).unwrap();
        let p = params(0.5, 1.0, 1.0, 1, 1);
        let (out, _) = value_discretize(&d, &p).unwrap();
        assert_eq!(out.marginal(0).values(), &[0.0, 1.0]);
    }

    #[test]
    fn value_discretize_boundedness() {
        let m = Marginal::new(vec![2.0], vec![1.0]).unwrap();
        let d = make_product(vec![m], 1).unwrap();
        let p = params(0.5, 1.0, 1.0, 1, 1);
        assert!(matches!(
            value_discretize(&d, &p),
            Err(DiscretizeError::BoundednessViolated { .. })
        ));
    }

    #[test]
    fn value_discretize_band_invariant() {
        let m = Marginal::new(vec![0.13, 0.47, 0.81, 1.0], vec![0.25; 4]).unwrap();
        let d = make_product(vec![m], 1).unwrap();
        let p = params(0.1, 1.0, 1.0, 1, 1);
        let (out, _) = value_discretize(&d, &p).unwrap();
        for (&v_in, &v_out) in d.marginal(0).values().iter().zip(out.marginal(0).values()) {
            assert!(v_out <= v_in + 1e-12);
            if v_in >= 0.1 {
                assert!(v_out > (1.0 - 0.1) * v_in - 1e-12);
            }
        }
    }

    #[test]
    fn prob_discretize_rounds_down() {
        let m = Marginal::new(vec![0.0, 1.0], vec![0.7, 0.3]).unwrap();
        let d = make_product(vec![m], 1).unwrap();
        let p = params(0.5, 1.0, 1.0, 1, 1);
        let (out, coupling) = prob_discretize(&d, &p).unwrap();
        // q = 0.3 -> 0.25, mass 0.05 moves to 0.
        let tgt = out.marginal(0);
        assert_eq!(tgt.values(), &[0.0, 1.0]);
        assert!((tgt.probs()[1] - 0.25).abs() < 1e-12);
        assert!((tgt.probs()[0] - 0.75).abs() < 1e-12);
        assert!(coupling.validate(&d, &out, 1e-9));
    }

    #[test]
    fn prob_discretize_threshold() {
        let m = Marginal::new(vec![0.0, 1.0], vec![1.0 - 1e-9, 1e-9]).unwrap();
        let d = make_product(vec![m.clone(); 10], 10).unwrap();
        let p = params(0.5, 1.0, 1.0, 10, 10);
        // threshold delta^2/n^2 = 0.0025 > 1e-9 -> atom dropped.
        let (out, _) = prob_discretize(&d, &p).unwrap();
        assert_eq!(out.marginal(0).values(), &[0.0]);
    }

    #[test]
    fn prob_discretize_band_invariant() {
        let m = Marginal::new(vec![0.0, 0.5, 1.0], vec![0.17, 0.42, 0.41]).unwrap();
        let d = make_product(vec![m], 1).unwrap();
        let p = params(0.3, 1.0, 1.0, 1, 1);
        let (out, _) = prob_discretize(&d, &p).unwrap();
        let src = d.marginal(0);
        let tgt = out.marginal(0);
        for (v, q) in src.atoms() {
            if v == 0.0 {
                continue;
            }
            let q_new = tgt
                .atoms()
                .find(|&(w, _)| w == v)
                .map(|(_, p)| p)
                .unwrap_or(0.0);
            assert!(q_new == 0.0 || ((1.0 - 0.3) * q < q_new && q_new <= q));
        }
        let total: f64 = tgt.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_coupling_zero_delta() {
        let m = Marginal::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        let c = identity_coupling(&d);
        let p = params(0.5, 1.0, 1.0, 2, 2);
        let delta = delta_bound(&d, &c, &p, DeltaMode::ExactEnumerate, 100).unwrap();
        assert_eq!(delta, 0.0);
    }

    #[test]
    fn delta_bound_single_rounding() {
        // v = 1 rounded to 0.9 with prob 1, k = 1 -> 0.1.
        let d = make_product(vec![Marginal::point_mass(1.0)], 1).unwrap();
        let c = Coupling {
            items: vec![ItemCoupling {
                maps: vec![vec![(0.9, 1.0)]],
            }],
        };
        let p = params(0.1, 1.0, 1.0, 1, 1);
        let delta = delta_bound(&d, &c, &p, DeltaMode::ExactEnumerate, 100).unwrap();
        assert!((delta - 0.1).abs() < 1e-12);
    }

    #[test]
    fn delta_exact_below_analytic() {
        let m = Marginal::new(vec![0.2, 0.6, 1.0], vec![0.3, 0.4, 0.3]).unwrap();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        let p = params(0.25, 1.0, 1.0, 2, 2);
        let (_, c) = value_discretize(&d, &p).unwrap();
        let exact = delta_bound(&d, &c, &p, DeltaMode::ExactEnumerate, 100).unwrap();
        let analytic = delta_bound(&d, &c, &p, DeltaMode::Analytic, 100).unwrap();
        assert!(exact <= analytic + 1e-12);
    }

    #[test]
    fn delta_m_identity_zero() {
        let m = Marginal::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        let d = make_product(vec![m], 1).unwrap();
        let c = identity_coupling(&d);
        let menu = SymmetricMenu::from_options(
            1,
            vec![MenuOption {
                alloc: LotteryAllocation { x: vec![1.0] },
                price: 1.0,
            }],
        );
        let (dm, _) = delta_m(&d, &c, &menu, DeltaMMode::ExactEnumerate, 100).unwrap();
        assert_eq!(dm, 0.0);
    }

    #[test]
    fn delta_m_mc_matches_exact() {
        let m = Marginal::new(vec![0.0, 0.5, 1.0], vec![0.2, 0.4, 0.4]).unwrap();
        let d = make_product(vec![m], 1).unwrap();
        let p = params(0.3, 1.0, 1.0, 1, 1);
        let (_, c) = canonical_discretize(&d, &p).unwrap();
        let menu = SymmetricMenu::from_options(
            1,
            vec![MenuOption {
                alloc: LotteryAllocation { x: vec![1.0] },
                price: 0.4,
            }],
        );
        let (exact, _) = delta_m(&d, &c, &menu, DeltaMMode::ExactEnumerate, 100).unwrap();
        let (est, se) = delta_m(
            &d,
            &c,
            &menu,
            DeltaMMode::Mc {
                samples: 50_000,
                seed: 5,
            },
            100,
        )
        .unwrap();
        assert!((est - exact).abs() <= 4.0 * se.max(1e-4));
    }

    #[test]
    fn delta_m_below_delta() {
        let m = Marginal::new(vec![0.0, 0.4, 1.0], vec![0.3, 0.3, 0.4]).unwrap();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        let p = params(0.2, 1.0, 1.0, 2, 2);
        let (_, c) = canonical_discretize(&d, &p).unwrap();
        let menu = SymmetricMenu::from_options(
            2,
            vec![MenuOption {
                alloc: LotteryAllocation { x: vec![1.0, 1.0] },
                price: 1.0,
            }],
        );
        let (dm, _) = delta_m(&d, &c, &menu, DeltaMMode::ExactEnumerate, 100).unwrap();
        let db = delta_bound(&d, &c, &p, DeltaMode::ExactEnumerate, 100).unwrap();
        assert!(dm <= db + 1e-12);
    }

    #[test]
    fn canonical_coupling_reproduces_marginals() {
        let m = Marginal::new(vec![0.0, 0.3, 0.8, 1.0], vec![0.1, 0.3, 0.35, 0.25]).unwrap();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        let p = params(0.2, 1.0, 1.0, 2, 2);
        let (out, c) = canonical_discretize(&d, &p).unwrap();
        assert!(c.validate(&d, &out, 1e-9));
    }
}
