//! Posted-price benchmarks: per-item monopoly pricing with floors,
//! selling separately (SRev), the grand bundle (BRev), and exclusive
//! single-item sale (SRev*).

use crate::dist::{DistError, Marginal, ProductDistribution};
use crate::menu::{revenue_exact, LotteryAllocation, MenuOption, SymmetricMenu};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("SRev is only decomposable for additive or unit-demand buyers (k={k}, n={n})")]
    UnsupportedClass { k: usize, n: usize },
    #[error("price-grid search budget exceeded: {combos} combinations > cap {cap}")]
    BudgetExceeded { combos: u128, cap: usize },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Default Monte-Carlo budget for `brev` on non-enumerable instances.
pub const BREV_MC_SAMPLES: usize = 100_000;
/// Number of empirical quantile candidates for Monte-Carlo `brev`.
pub const BREV_MC_CANDIDATES: usize = 200;
/// Default grid budget for `srev_star` exact mode.
pub const SREV_STAR_GRID_CAP: usize = 100_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub srev: Option<PricedRevenue>,
    pub srev_note: Option<String>,
    pub brev: SinglePriceRevenue,
    pub srev_star_lower: SinglePriceRevenue,
    pub srev_star_exact: Option<PricedRevenue>,
    pub per_item_monopoly: Vec<MonopolyQuote>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PricedRevenue {
    pub prices: Vec<Option<f64>>,
    pub revenue: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SinglePriceRevenue {
    pub price: f64,
    pub revenue: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonopolyQuote {
    pub price: Option<f64>,
    pub revenue: f64,
}

/// Maximizes `p * Pr[v >= p]` over support atoms `>= floor` (the supremum
/// over reals is attained at an atom for a discrete marginal).  Ties go
/// to the smaller price; `(None, 0)` when no atom clears the floor.
pub fn monopoly_price(m: &Marginal, floor: f64) -> (Option<f64>, f64) {
    let mut best: Option<f64> = None;
    let mut best_rev = 0.0;
    for &p in m.values() {
        if p < floor {
            continue;
        }
        let rev = p * m.pr_geq(p);
        if best.is_none() || rev > best_rev {
            best = Some(p);
            best_rev = rev;
        }
    }
    (best, best_rev)
}

/// Best take-it-or-leave-it price on the grand bundle.  Exact when the
/// bundle-value distribution is enumerable (candidates are the distinct
/// bundle values); Monte Carlo with empirical quantile candidates
/// otherwise.
pub fn brev(
    d: &ProductDistribution,
    support_cap: usize,
    mc_samples: usize,
    seed: u64,
) -> SinglePriceRevenue {
    match d.enumerate_support(support_cap) {
        Ok(iter) => {
            let mut atoms: Vec<(f64, f64)> = Vec::new();
            for (v, p) in iter {
                atoms.push((d.full_set_value(&v), p));
            }
            atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            // Merge equal bundle values.
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (v, p) in atoms {
                match merged.last_mut() {
                    Some(last) if last.0 == v => last.1 += p,
                    _ => merged.push((v, p)),
                }
            }
            // Sweep descending so Pr[bundle >= price] accumulates.
            let mut best = SinglePriceRevenue {
                price: 0.0,
                revenue: 0.0,
            };
            let mut tail = 0.0;
            for &(v, p) in merged.iter().rev() {
                tail += p;
                let rev = v * tail;
                if rev > best.revenue || (rev == best.revenue && v < best.price) {
                    best = SinglePriceRevenue {
                        price: v,
                        revenue: rev,
                    };
                }
            }
            best
        }
        Err(_) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut vals: Vec<f64> = (0..mc_samples)
                .map(|_| d.full_set_value(&d.sample(&mut rng)))
                .collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut best = SinglePriceRevenue {
                price: 0.0,
                revenue: 0.0,
            };
            let m = vals.len();
            for c in 0..BREV_MC_CANDIDATES {
                let idx = (c * (m - 1)) / (BREV_MC_CANDIDATES - 1).max(1);
                let price = vals[idx];
                let geq = vals.iter().filter(|&&v| v >= price).count() as f64 / m as f64;
                let rev = price * geq;
                if rev > best.revenue || (rev == best.revenue && price < best.price) {
                    best = SinglePriceRevenue {
                        price,
                        revenue: rev,
                    };
                }
            }
            best
        }
    }
}

/// Selling-separately revenue.  Additive buyers decompose item by item
/// (per-item monopoly prices); unit-demand delegates to [`srev_star`]
/// since the buyer purchases at most one item either way.
pub fn srev(
    d: &ProductDistribution,
    support_cap: usize,
    grid_cap: usize,
) -> Result<PricedRevenue, BenchError> {
    let (n, k) = (d.n(), d.k());
    if k == n {
        let mut prices = Vec::with_capacity(n);
        let mut total = 0.0;
        for m in d.marginals() {
            let (p, rev) = monopoly_price(m, 0.0);
            prices.push(p);
            total += rev;
        }
        Ok(PricedRevenue {
            prices,
            revenue: total,
        })
    } else if k == 1 {
        srev_star(d, SrevStarMode::ExactSmall { grid_cap }, support_cap)
    } else {
        Err(BenchError::UnsupportedClass { k, n })
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SrevStarMode {
    /// Best single uniform price over the union of atom values; a valid
    /// lower bound with closed-form revenue `p (1 - prod_i Pr[v_i < p])`.
    UniformLower,
    /// Exhaustive per-item price grids (atoms plus "absent").
    ExactSmall { grid_cap: usize },
}

/// Exclusive single-item sale: price each singleton, the buyer purchases
/// the utility-maximizing item or nothing.
pub fn srev_star(
    d: &ProductDistribution,
    mode: SrevStarMode,
    support_cap: usize,
) -> Result<PricedRevenue, BenchError> {
    let n = d.n();
    match mode {
        SrevStarMode::UniformLower => {
            let mut candidates: Vec<f64> = d
                .marginals()
                .iter()
                .flat_map(|m| m.values().iter().copied())
                .filter(|&v| v > 0.0)
                .collect();
            candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
            candidates.dedup();
            let mut best_price = 0.0;
            let mut best_rev = 0.0;
            for &p in &candidates {
                let none_clears: f64 = d.marginals().iter().map(|m| m.pr_lt(p)).product();
                let rev = p * (1.0 - none_clears);
                if rev > best_rev || (rev == best_rev && rev > 0.0 && p < best_price) {
                    best_price = p;
                    best_rev = rev;
                }
            }
            Ok(PricedRevenue {
                prices: vec![Some(best_price); n],
                revenue: best_rev,
            })
        }
        SrevStarMode::ExactSmall { grid_cap } => {
            let mut combos: u128 = 1;
            for m in d.marginals() {
                combos = combos.saturating_mul(m.len() as u128 + 1);
            }
            if combos > grid_cap as u128 {
                return Err(BenchError::BudgetExceeded {
                    combos,
                    cap: grid_cap,
                });
            }
            let grids: Vec<Vec<Option<f64>>> = d
                .marginals()
                .iter()
                .map(|m| {
                    let mut g: Vec<Option<f64>> =
                        m.values().iter().map(|&v| Some(v)).collect();
                    g.push(None);
                    g
                })
                .collect();
            let mut best = PricedRevenue {
                prices: vec![None; n],
                revenue: 0.0,
            };
            let mut assignment = vec![0usize; n];
            loop {
                let prices: Vec<Option<f64>> = assignment
                    .iter()
                    .enumerate()
                    .map(|(i, &gi)| grids[i][gi])
                    .collect();
                let menu = exclusive_menu(n, &prices);
                let rev = revenue_exact(&menu, d, support_cap)?;
                if rev > best.revenue {
                    best = PricedRevenue {
                        prices,
                        revenue: rev,
                    };
                }
                // Advance odometer.
                let mut done = true;
                for i in (0..n).rev() {
                    if assignment[i] + 1 < grids[i].len() {
                        assignment[i] += 1;
                        done = false;
                        break;
                    }
                    assignment[i] = 0;
                }
                if done {
                    break;
                }
            }
            Ok(best)
        }
    }
}

/// The exclusive menu for given per-item prices (`None` = not offered).
pub fn exclusive_menu(n: usize, prices: &[Option<f64>]) -> SymmetricMenu {
    let options: Vec<MenuOption> = prices
        .iter()
        .enumerate()
        .filter_map(|(i, &p)| {
            p.map(|price| MenuOption {
                alloc: LotteryAllocation::single(n, i, 1.0),
                price,
            })
        })
        .collect();
    SymmetricMenu::from_options(n, options)
}

/// Computes the full benchmark report.
pub fn benchmark_report(
    d: &ProductDistribution,
    support_cap: usize,
    grid_cap: usize,
    mc_samples: usize,
    seed: u64,
) -> BenchmarkReport {
    let per_item_monopoly = d
        .marginals()
        .iter()
        .map(|m| {
            let (price, revenue) = monopoly_price(m, 0.0);
            MonopolyQuote { price, revenue }
        })
        .collect();
    let lower = srev_star(d, SrevStarMode::UniformLower, support_cap)
        .expect("uniform lower bound cannot fail");
    let srev_star_lower = SinglePriceRevenue {
        price: lower.prices[0].unwrap_or(0.0),
        revenue: lower.revenue,
    };
    let srev_star_exact = srev_star(d, SrevStarMode::ExactSmall { grid_cap }, support_cap).ok();
    let (srev_result, srev_note) = match srev(d, support_cap, grid_cap) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    BenchmarkReport {
        srev: srev_result,
        srev_note,
        brev: brev(d, support_cap, mc_samples, seed),
        srev_star_lower,
        srev_star_exact,
        per_item_monopoly,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::make_product;

    fn uniform12() -> Marginal {
        Marginal::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn monopoly_price_ties_to_smaller() {
        let (p, rev) = monopoly_price(&uniform12(), 0.0);
        assert_eq!(p, Some(1.0));
        assert_eq!(rev, 1.0);
    }

    #[test]
    fn monopoly_price_with_floor() {
        let (p, rev) = monopoly_price(&uniform12(), 1.5);
        assert_eq!(p, Some(2.0));
        assert_eq!(rev, 1.0);
        let (p2, rev2) = monopoly_price(&uniform12(), 3.0);
        assert_eq!(p2, None);
        assert_eq!(rev2, 0.0);
    }

    #[test]
    fn monopoly_price_point_mass() {
        let (p, rev) = monopoly_price(&Marginal::point_mass(3.0), 0.0);
        assert_eq!(p, Some(3.0));
        assert_eq!(rev, 3.0);
    }

    #[test]
    fn monopoly_dominates_every_atom() {
        let m = Marginal::new(vec![0.5, 1.0, 4.0], vec![0.3, 0.4, 0.3]).unwrap();
        let (_, rev) = monopoly_price(&m, 0.0);
        for &p in m.values() {
            assert!(rev >= p * m.pr_geq(p) - 1e-15);
        }
    }

    #[test]
    fn brev_deterministic_bundle() {
        let d = make_product(vec![Marginal::point_mass(1.0), Marginal::point_mass(1.0)], 2)
            .unwrap();
        let b = brev(&d, 100, 1000, 1);
        assert_eq!(b.price, 2.0);
        assert_eq!(b.revenue, 2.0);
    }

    #[test]
    fn brev_single_item() {
        let d = make_product(vec![uniform12()], 1).unwrap();
        let b = brev(&d, 100, 1000, 1);
        assert_eq!(b.price, 1.0);
        assert_eq!(b.revenue, 1.0);
    }

    #[test]
    fn brev_unit_demand_max_bundle() {
        let d = make_product(vec![uniform12(), uniform12()], 1).unwrap();
        let b = brev(&d, 100, 1000, 1);
        assert_eq!(b.price, 2.0);
        assert!((b.revenue - 1.5).abs() < 1e-12);
    }

    #[test]
    fn brev_exact_is_exhaustive_max() {
        let m = Marginal::new(vec![0.0, 1.0, 3.0], vec![0.2, 0.5, 0.3]).unwrap();
        let d = make_product(vec![m.clone(), m], 2).unwrap();
        let b = brev(&d, 100, 1000, 1);
        // Exhaustive check over distinct bundle values.
        let mut best = 0.0f64;
        let vals: Vec<f64> = d
            .enumerate_support(100)
            .unwrap()
            .map(|(v, _)| d.full_set_value(&v))
            .collect();
        let probs: Vec<f64> = d.enumerate_support(100).unwrap().map(|(_, p)| p).collect();
        let mut cands = vals.clone();
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cands.dedup();
        for &c in &cands {
            let pr: f64 = vals
                .iter()
                .zip(&probs)
                .filter(|(&v, _)| v >= c)
                .map(|(_, &p)| p)
                .sum();
            best = best.max(c * pr);
        }
        assert!((b.revenue - best).abs() < 1e-12);
    }

    #[test]
    fn srev_additive_examples() {
        let d = make_product(vec![uniform12(), uniform12()], 2).unwrap();
        let r = srev(&d, 100, 1000).unwrap();
        assert!((r.revenue - 2.0).abs() < 1e-12);

        let d2 = make_product(vec![Marginal::point_mass(1.0), Marginal::point_mass(2.0)], 2)
            .unwrap();
        assert!((srev(&d2, 100, 1000).unwrap().revenue - 3.0).abs() < 1e-12);
    }

    #[test]
    fn srev_unit_demand_delegates() {
        let d = make_product(vec![uniform12(), uniform12()], 1).unwrap();
        let a = srev(&d, 100, 1000).unwrap();
        let b = srev_star(&d, SrevStarMode::ExactSmall { grid_cap: 1000 }, 100).unwrap();
        assert_eq!(a.revenue, b.revenue);
    }

    #[test]
    fn srev_unsupported_middle_k() {
        let m = uniform12();
        let d = make_product(vec![m.clone(), m.clone(), m], 2).unwrap();
        assert!(matches!(
            srev(&d, 100, 1000),
            Err(BenchError::UnsupportedClass { .. })
        ));
    }

    #[test]
    fn srev_star_uniform_closed_form() {
        let d = make_product(vec![uniform12(), uniform12()], 1).unwrap();
        let r = srev_star(&d, SrevStarMode::UniformLower, 100).unwrap();
        // Price 2: 2 * (1 - (1/2)^2) = 1.5 beats price 1 (revenue 1).
        assert!((r.revenue - 1.5).abs() < 1e-12);
        assert_eq!(r.prices[0], Some(2.0));
    }

    #[test]
    fn srev_star_exact_at_least_lower() {
        let m1 = Marginal::new(vec![1.0, 3.0], vec![0.6, 0.4]).unwrap();
        let m2 = Marginal::new(vec![0.5, 2.0], vec![0.3, 0.7]).unwrap();
        let d = make_product(vec![m1, m2], 1).unwrap();
        let lower = srev_star(&d, SrevStarMode::UniformLower, 100).unwrap();
        let exact = srev_star(&d, SrevStarMode::ExactSmall { grid_cap: 1000 }, 100).unwrap();
        assert!(exact.revenue >= lower.revenue - 1e-12);
    }

    #[test]
    fn srev_star_budget_enforced() {
        let d = make_product(vec![uniform12(), uniform12()], 1).unwrap();
        assert!(matches!(
            srev_star(&d, SrevStarMode::ExactSmall { grid_cap: 2 }, 100),
            Err(BenchError::BudgetExceeded { .. })
        ));
    }
}
