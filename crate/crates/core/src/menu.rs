//! Menus and symmetric menus: buyer best response, revenue evaluation,
//! leftovers, price scaling, the exclusive transforms, domination
//! pruning, and menu-complexity accounting.

use crate::dist::{DistError, ProductDistribution};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-item award probabilities of a lottery; `sum(x) <= k` so the
/// buyer's expected value for the lottery is `sum_i v_i x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotteryAllocation {
    pub x: Vec<f64>,
}

impl LotteryAllocation {
    pub fn zero(n: usize) -> Self {
        LotteryAllocation { x: vec![0.0; n] }
    }

    /// Probability `p` on item `i` only.
    pub fn single(n: usize, i: usize, p: f64) -> Self {
        let mut x = vec![0.0; n];
        x[i] = p;
        LotteryAllocation { x }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuOption {
    pub alloc: LotteryAllocation,
    pub price: f64,
}

/// An item-permutation group given as a partition of `[n]`: the group of
/// all permutations that separately permute items within each block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemPermutationGroup {
    blocks: Vec<Vec<usize>>,
    n: usize,
}

impl ItemPermutationGroup {
    pub fn new(blocks: Vec<Vec<usize>>, n: usize) -> Option<Self> {
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.is_empty() {
                return None;
            }
            for &i in b {
                if i >= n || seen[i] {
                    return None;
                }
                seen[i] = true;
            }
        }
        if seen.iter().all(|&s| s) {
            Some(ItemPermutationGroup { blocks, n })
        } else {
            None
        }
    }

    /// The trivial group: every item in its own block.
    pub fn trivial(n: usize) -> Self {
        ItemPermutationGroup {
            blocks: (0..n).map(|i| vec![i]).collect(),
            n,
        }
    }

    /// The full symmetric group on `[n]` (one block).
    pub fn full(n: usize) -> Self {
        ItemPermutationGroup {
            blocks: vec![(0..n).collect()],
            n,
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Index of the block containing item `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(&i))
            .expect("blocks partition [n]")
    }
}

/// A set of options sharing one symmetry group; denotes the orbit
/// closure of every option under the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricComponent {
    pub group: ItemPermutationGroup,
    pub options: Vec<MenuOption>,
}

/// A menu given as symmetric components; the null option `(0, 0)` is
/// always implicitly available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMenu {
    pub n: usize,
    pub components: Vec<SymmetricComponent>,
}

impl SymmetricMenu {
    pub fn empty(n: usize) -> Self {
        SymmetricMenu {
            n,
            components: Vec::new(),
        }
    }

    /// A menu of concrete options with no symmetry (trivial group).
    pub fn from_options(n: usize, options: Vec<MenuOption>) -> Self {
        if options.is_empty() {
            return SymmetricMenu::empty(n);
        }
        SymmetricMenu {
            n,
            components: vec![SymmetricComponent {
                group: ItemPermutationGroup::trivial(n),
                options,
            }],
        }
    }

    pub fn option_count(&self) -> usize {
        self.components.iter().map(|c| c.options.len()).sum()
    }
}

/// The buyer's selected option; `component`/`option` are `None` for the
/// null option.
#[derive(Debug, Clone, PartialEq)]
pub struct BuyerChoice {
    pub component: Option<usize>,
    pub option: Option<usize>,
    pub alloc: Vec<f64>,
    pub price: f64,
    pub utility: f64,
}

/// `sum_i v_i x_i - price`.
pub fn option_utility(v: &[f64], alloc: &LotteryAllocation, price: f64) -> f64 {
    dot(v, &alloc.x) - price
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The buyer's best variant of an option within its orbit: within each
/// block, pair the block's values (descending) with the block's
/// allocation entries (descending).  Returns the concrete allocation and
/// its utility, which equals `max over sigma in the group` of
/// `option_utility(v, sigma(x), price)`.
pub fn best_symmetric_variant(
    v: &[f64],
    group: &ItemPermutationGroup,
    alloc: &LotteryAllocation,
    price: f64,
) -> (Vec<f64>, f64) {
    let mut out = vec![0.0; v.len()];
    for block in group.blocks() {
        let mut items: Vec<usize> = block.clone();
        // Stable descending sort by value keeps the identity assignment
        // whenever the values are already non-increasing in item index.
        items.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap());
        let mut xs: Vec<f64> = block.iter().map(|&i| alloc.x[i]).collect();
        xs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (slot, &item) in items.iter().enumerate() {
            out[item] = xs[slot];
        }
    }
    let u = dot(v, &out) - price;
    (out, u)
}

/// The buyer's utility-maximizing choice over all components, options,
/// orbit variants, and the null option.  Ties are broken by (1) higher
/// price, (2) lower component index, (3) lower option index.
///
/// Utilities within a scale-aware tolerance count as tied, so the
/// higher-price rule also governs near-ties.  LP-extracted menus place
/// buyers exactly on indifference boundaries; without the tolerance, a
/// rounding error of one ulp in a price would flip the designated
/// choice to the null option and misprice the whole menu.
const CHOICE_TIE_TOL: f64 = 1e-9;

pub fn choose(v: &[f64], menu: &SymmetricMenu) -> BuyerChoice {
    let mut best = BuyerChoice {
        component: None,
        option: None,
        alloc: vec![0.0; v.len()],
        price: 0.0,
        utility: 0.0,
    };
    for (ci, comp) in menu.components.iter().enumerate() {
        for (oi, opt) in comp.options.iter().enumerate() {
            let (alloc, u) = best_symmetric_variant(v, &comp.group, &opt.alloc, opt.price);
            let tie = CHOICE_TIE_TOL * (1.0 + u.abs() + best.utility.abs());
            if u > best.utility + tie || (u > best.utility - tie && opt.price > best.price) {
                best = BuyerChoice {
                    component: Some(ci),
                    option: Some(oi),
                    alloc,
                    price: opt.price,
                    utility: u,
                };
            }
        }
    }
    best
}

/// Exact expected revenue by support enumeration.
pub fn revenue_exact(
    menu: &SymmetricMenu,
    d: &ProductDistribution,
    cap: usize,
) -> Result<f64, DistError> {
    let mut total = 0.0;
    for (v, p) in d.enumerate_support(cap)? {
        total += p * choose(&v, menu).price;
    }
    Ok(total)
}

const MC_CHUNK: usize = 1024;

/// Monte-Carlo revenue estimate `(mean, stderr)`.  Samples are drawn in
/// fixed-size chunks, each from its own RNG stream, so the result is
/// identical regardless of how many worker threads evaluate the chunks.
pub fn revenue_mc(
    menu: &SymmetricMenu,
    d: &ProductDistribution,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    assert!(samples >= 2, "revenue_mc needs at least 2 samples");
    let chunks = samples.div_ceil(MC_CHUNK);
    let stats: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64 + 1);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..count {
                let v = d.sample(&mut rng);
                let p = choose(&v, menu).price;
                sum += p;
                sumsq += p * p;
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
    (mean, (var / m).sqrt())
}

/// Leftovers `l_i = 1 - max` over components, options, and items `j` in
/// `i`'s orbit (same block) of `x_j`.
pub fn leftovers(menu: &SymmetricMenu) -> Vec<f64> {
    let n = menu.n;
    let mut max_award = vec![0.0f64; n];
    for comp in &menu.components {
        for block in comp.group.blocks() {
            let mut block_max = 0.0f64;
            for opt in &comp.options {
                for &j in block {
                    block_max = block_max.max(opt.alloc.x[j]);
                }
            }
            for &i in block {
                max_award[i] = max_award[i].max(block_max);
            }
        }
    }
    max_award.iter().map(|&m| 1.0 - m.min(1.0)).collect()
}

/// `revenue_exact + w . leftovers` — the ModRevMax objective of a menu.
pub fn modrev_objective(
    menu: &SymmetricMenu,
    d: &ProductDistribution,
    w: &[f64],
    cap: usize,
) -> Result<f64, DistError> {
    let rev = revenue_exact(menu, d, cap)?;
    Ok(rev + dot(w, &leftovers(menu)))
}

/// Multiplies every price by `factor` (allocations unchanged).
pub fn scale_prices(menu: &SymmetricMenu, factor: f64) -> SymmetricMenu {
    assert!(factor > 0.0 && factor <= 1.0, "factor must be in (0, 1]");
    let mut out = menu.clone();
    for comp in &mut out.components {
        for opt in &mut comp.options {
            opt.price *= factor;
        }
    }
    out
}

/// The E-exclusive transform: options priced `<= e` are kept at
/// `(1-eps) * price`; each option priced above `e` is replaced by
/// single-item options `(x_i on item i, (1-eps) * price)` for every item
/// it awards with positive probability.  Components mixing cheap and
/// expensive options are split in two first, preserving the group.
pub fn make_exclusive(menu: &SymmetricMenu, e: f64, eps: f64) -> SymmetricMenu {
    assert!(e > 0.0, "exclusivity threshold must be positive");
    let n = menu.n;
    let factor = 1.0 - eps;
    let mut out = SymmetricMenu::empty(n);
    for comp in &menu.components {
        let (cheap, expensive): (Vec<_>, Vec<_>) =
            comp.options.iter().partition(|o| o.price <= e);
        if !cheap.is_empty() {
            out.components.push(SymmetricComponent {
                group: comp.group.clone(),
                options: cheap
                    .into_iter()
                    .map(|o| MenuOption {
                        alloc: o.alloc.clone(),
                        price: o.price * factor,
                    })
                    .collect(),
            });
        }
        if !expensive.is_empty() {
            let mut options = Vec::new();
            for o in expensive {
                for i in 0..n {
                    if o.alloc.x[i] > 0.0 {
                        options.push(MenuOption {
                            alloc: LotteryAllocation::single(n, i, o.alloc.x[i]),
                            price: o.price * factor,
                        });
                    }
                }
            }
            out.components.push(SymmetricComponent {
                group: comp.group.clone(),
                options,
            });
        }
    }
    out
}

/// Appends, for each item `i` with a tail reserve `r_i`, the exclusive
/// option `({i}: 1, q_i + r_i (1 - x_i))`, where `(x_i, q_i)` are the
/// allocation probability on `i` and the price that the probe buyer
/// `v = T . 1(i in S)` obtains from the input menu; then multiplies all
/// prices by `(1 - eps)`.  Items with `r_i` absent get no option.
pub fn concat_exclusive(
    menu: &SymmetricMenu,
    t: f64,
    r: &[Option<f64>],
    eps: f64,
) -> SymmetricMenu {
    let n = menu.n;
    let mut out = menu.clone();
    let mut exclusive = Vec::new();
    for (i, reserve) in r.iter().enumerate() {
        let Some(ri) = reserve else { continue };
        let mut probe = vec![0.0; n];
        probe[i] = t;
        let ch = choose(&probe, menu);
        let xi = ch.alloc[i];
        let qi = ch.price;
        exclusive.push(MenuOption {
            alloc: LotteryAllocation::single(n, i, 1.0),
            price: qi + ri * (1.0 - xi),
        });
    }
    if !exclusive.is_empty() {
        out.components.push(SymmetricComponent {
            group: ItemPermutationGroup::trivial(n),
            options: exclusive,
        });
    }
    scale_prices(&out, 1.0 - eps)
}

/// Removes dominated single-item-lottery options: `(T, q)` on item `i`
/// is dominated by a distinct `(S, p)` on the same item when
/// `Pr[i in S] >= Pr[i in T]` and `p / Pr[i in S] <= q / Pr[i in T]`.
/// Only options awarding exactly one item, whose block for that item is
/// a singleton, participate; all other options are untouched.
pub fn prune_dominated(menu: &SymmetricMenu) -> SymmetricMenu {
    // (component, option, item, award probability, price)
    let mut singles: Vec<(usize, usize, usize, f64, f64)> = Vec::new();
    for (ci, comp) in menu.components.iter().enumerate() {
        for (oi, opt) in comp.options.iter().enumerate() {
            let positive: Vec<usize> = (0..menu.n).filter(|&i| opt.alloc.x[i] > 0.0).collect();
            if positive.len() != 1 {
                continue;
            }
            let item = positive[0];
            if comp.group.blocks()[comp.group.block_of(item)].len() != 1 {
                continue;
            }
            singles.push((ci, oi, item, opt.alloc.x[item], opt.price));
        }
    }
    let mut removed: Vec<(usize, usize)> = Vec::new();
    for (bi, &(bc, bo, bitem, bprob, bprice)) in singles.iter().enumerate() {
        let dominated = singles.iter().enumerate().any(|(ai, &(_, _, aitem, aprob, aprice))| {
            if ai == bi || aitem != bitem {
                return false;
            }
            let dominates = aprob >= bprob && aprice / aprob <= bprice / bprob;
            // Of two identical options, only the later one is removed.
            let identical = aprob == bprob && aprice == bprice;
            dominates && (!identical || ai < bi)
        });
        if dominated {
            removed.push((bc, bo));
        }
    }
    let mut out = SymmetricMenu::empty(menu.n);
    for (ci, comp) in menu.components.iter().enumerate() {
        let options: Vec<MenuOption> = comp
            .options
            .iter()
            .enumerate()
            .filter(|(oi, _)| !removed.contains(&(ci, *oi)))
            .map(|(_, o)| o.clone())
            .collect();
        if !options.is_empty() {
            out.components.push(SymmetricComponent {
                group: comp.group.clone(),
                options,
            });
        }
    }
    out
}

/// A possibly-overflowing menu-complexity count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComplexityCount {
    Finite(u64),
    Overflow,
}

impl ComplexityCount {
    pub fn finite(&self) -> Option<u64> {
        match self {
            ComplexityCount::Finite(v) => Some(*v),
            ComplexityCount::Overflow => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityMeasures {
    /// Flat option count: distinct orbit elements summed over components.
    pub mc: ComplexityCount,
    /// Declared strong symmetric complexity: option count when all
    /// components share one group; `Overflow` marks mixed groups.
    pub declared_ssmc: ComplexityCount,
    /// Declared weak symmetric complexity: total option count.
    pub declared_wsmc: u64,
}

/// Multinomial coefficient `|block|! / prod(counts!)` with overflow
/// detection.
fn multinomial(counts: &[usize]) -> Option<u128> {
    let mut result: u128 = 1;
    let mut placed: usize = 0;
    for &c in counts {
        for j in 1..=c {
            placed += 1;
            result = result.checked_mul(placed as u128)?;
            result /= j as u128; // exact: running product of binomials
        }
    }
    Some(result)
}

/// Orbit size of an option under the group: the number of distinct
/// images of its allocation, computed blockwise by multiset counting.
fn orbit_size(group: &ItemPermutationGroup, alloc: &LotteryAllocation) -> Option<u128> {
    let mut total: u128 = 1;
    for block in group.blocks() {
        let mut xs: Vec<u64> = block.iter().map(|&i| alloc.x[i].to_bits()).collect();
        xs.sort_unstable();
        let mut counts = Vec::new();
        let mut run = 1usize;
        for w in xs.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                counts.push(run);
                run = 1;
            }
        }
        counts.push(run);
        total = total.checked_mul(multinomial(&counts)?)?;
    }
    Some(total)
}

/// Computes `(MC, declared_SSMC, declared_WSMC)`.
pub fn complexity_measures(menu: &SymmetricMenu) -> ComplexityMeasures {
    let wsmc = menu.option_count() as u64;
    let same_group = menu
        .components
        .windows(2)
        .all(|w| w[0].group == w[1].group);
    let ssmc = if same_group {
        ComplexityCount::Finite(wsmc)
    } else {
        ComplexityCount::Overflow
    };

    let mut mc: Option<u128> = Some(0);
    for comp in &menu.components {
        // Deduplicate options with identical orbits: same price and same
        // per-block multiset of allocation entries.
        let mut keys: Vec<(u64, Vec<Vec<u64>>)> = Vec::new();
        for opt in &comp.options {
            let key_blocks: Vec<Vec<u64>> = comp
                .group
                .blocks()
                .iter()
                .map(|b| {
                    let mut xs: Vec<u64> = b.iter().map(|&i| opt.alloc.x[i].to_bits()).collect();
                    xs.sort_unstable();
                    xs
                })
                .collect();
            let key = (opt.price.to_bits(), key_blocks);
            if keys.contains(&key) {
                continue;
            }
            mc = mc.and_then(|acc| {
                orbit_size(&comp.group, &opt.alloc).and_then(|o| acc.checked_add(o))
            });
            keys.push(key);
        }
    }
    let mc = match mc {
        Some(v) if v <= u64::MAX as u128 => ComplexityCount::Finite(v as u64),
        _ => ComplexityCount::Overflow,
    };
    ComplexityMeasures {
        mc,
        declared_ssmc: ssmc,
        declared_wsmc: wsmc,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{make_product, Marginal};

    fn uniform12() -> Marginal {
        Marginal::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap()
    }

    fn single_option_menu(n: usize, x: Vec<f64>, price: f64) -> SymmetricMenu {
        SymmetricMenu::from_options(
            n,
            vec![MenuOption {
                alloc: LotteryAllocation { x },
                price,
            }],
        )
    }

    #[test]
    fn option_utility_examples() {
        assert_eq!(
            option_utility(&[1.0, 0.0], &LotteryAllocation { x: vec![1.0, 0.0] }, 0.5),
            0.5
        );
        assert_eq!(
            option_utility(&[5.0], &LotteryAllocation::zero(1), 0.0),
            0.0
        );
        assert_eq!(
            option_utility(&[2.0, 3.0], &LotteryAllocation { x: vec![0.5, 0.5] }, 1.0),
            1.5
        );
    }

    #[test]
    fn best_variant_swaps_within_block() {
        let g = ItemPermutationGroup::full(2);
        let (x, u) =
            best_symmetric_variant(&[0.0, 1.0], &g, &LotteryAllocation { x: vec![1.0, 0.0] }, 0.25);
        assert_eq!(x, vec![0.0, 1.0]);
        assert_eq!(u, 0.75);
    }

    #[test]
    fn best_variant_identity_for_trivial_group() {
        let g = ItemPermutationGroup::trivial(2);
        let (x, u) =
            best_symmetric_variant(&[0.0, 1.0], &g, &LotteryAllocation { x: vec![1.0, 0.0] }, 0.0);
        assert_eq!(x, vec![1.0, 0.0]);
        assert_eq!(u, 0.0);
    }

    #[test]
    fn choose_empty_menu_is_null() {
        let m = SymmetricMenu::empty(2);
        let c = choose(&[5.0, 5.0], &m);
        assert_eq!(c.component, None);
        assert_eq!(c.price, 0.0);
        assert_eq!(c.utility, 0.0);
    }

    #[test]
    fn choose_prefers_higher_utility() {
        let m = SymmetricMenu::from_options(
            1,
            vec![
                MenuOption {
                    alloc: LotteryAllocation { x: vec![1.0] },
                    price: 1.0,
                },
                MenuOption {
                    alloc: LotteryAllocation { x: vec![1.0] },
                    price: 1.5,
                },
            ],
        );
        let c = choose(&[2.0], &m);
        assert_eq!(c.option, Some(0));
        assert_eq!(c.price, 1.0);
    }

    #[test]
    fn choose_seller_favorable_tie() {
        let m = single_option_menu(1, vec![1.0], 2.0);
        let c = choose(&[2.0], &m);
        assert_eq!(c.price, 2.0);
        assert_eq!(c.utility, 0.0);
    }

    #[test]
    fn revenue_exact_point_mass() {
        let d = make_product(vec![Marginal::point_mass(1.0)], 1).unwrap();
        let m = single_option_menu(1, vec![1.0], 1.0);
        assert_eq!(revenue_exact(&m, &d, 10).unwrap(), 1.0);
    }

    #[test]
    fn revenue_exact_unit_demand_exclusive() {
        // 2 iid uniform{1,2}, unit-demand, price 2 on each item:
        // buys iff max = 2 (tie at utility 0 is seller-favorable).
        let d = make_product(vec![uniform12(), uniform12()], 1).unwrap();
        let m = SymmetricMenu::from_options(
            2,
            vec![
                MenuOption {
                    alloc: LotteryAllocation::single(2, 0, 1.0),
                    price: 2.0,
                },
                MenuOption {
                    alloc: LotteryAllocation::single(2, 1, 1.0),
                    price: 2.0,
                },
            ],
        );
        assert!((revenue_exact(&m, &d, 10).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn revenue_mc_matches_exact_and_is_deterministic() {
        let d = make_product(vec![uniform12(), uniform12()], 2).unwrap();
        let m = single_option_menu(2, vec![1.0, 1.0], 3.0);
        let exact = revenue_exact(&m, &d, 10).unwrap();
        let (est1, se) = revenue_mc(&m, &d, 20_000, 11);
        let (est2, _) = revenue_mc(&m, &d, 20_000, 11);
        assert_eq!(est1, est2);
        assert!((est1 - exact).abs() <= 4.0 * se.max(1e-3));
    }

    #[test]
    fn revenue_mc_point_mass_zero_stderr() {
        let d = make_product(vec![Marginal::point_mass(2.0)], 1).unwrap();
        let m = single_option_menu(1, vec![1.0], 1.5);
        let (est, se) = revenue_mc(&m, &d, 100, 3);
        assert_eq!(est, 1.5);
        assert!(se < 1e-12);
    }

    #[test]
    fn leftovers_examples() {
        let m = single_option_menu(2, vec![1.0, 0.0], 1.0);
        assert_eq!(leftovers(&m), vec![0.0, 1.0]);

        let m2 = SymmetricMenu {
            n: 2,
            components: vec![SymmetricComponent {
                group: ItemPermutationGroup::full(2),
                options: vec![MenuOption {
                    alloc: LotteryAllocation { x: vec![1.0, 0.0] },
                    price: 1.0,
                }],
            }],
        };
        assert_eq!(leftovers(&m2), vec![0.0, 0.0]);

        assert_eq!(leftovers(&SymmetricMenu::empty(2)), vec![1.0, 1.0]);
    }

    #[test]
    fn modrev_objective_empty_menu() {
        let d = make_product(vec![uniform12(), uniform12()], 2).unwrap();
        let m = SymmetricMenu::empty(2);
        let obj = modrev_objective(&m, &d, &[3.0, 4.0], 10).unwrap();
        assert_eq!(obj, 7.0);
    }

    #[test]
    fn scale_prices_composes() {
        let m = single_option_menu(1, vec![1.0], 2.0);
        let a = scale_prices(&scale_prices(&m, 0.9), 0.5);
        let b = scale_prices(&m, 0.45);
        assert!((a.components[0].options[0].price - b.components[0].options[0].price).abs() < 1e-15);
        assert!((a.components[0].options[0].price - 0.9).abs() < 1e-15);
    }

    #[test]
    fn make_exclusive_splits_expensive_options() {
        let m = single_option_menu(2, vec![1.0, 1.0], 10.0);
        let out = make_exclusive(&m, 5.0, 0.1);
        assert_eq!(out.option_count(), 2);
        let opts = &out.components[0].options;
        assert_eq!(opts[0].alloc.x, vec![1.0, 0.0]);
        assert_eq!(opts[1].alloc.x, vec![0.0, 1.0]);
        for o in opts {
            assert!((o.price - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn make_exclusive_keeps_cheap_options() {
        let m = single_option_menu(2, vec![1.0, 1.0], 3.0);
        let out = make_exclusive(&m, 5.0, 0.1);
        assert_eq!(out.option_count(), 1);
        assert_eq!(out.components[0].options[0].alloc.x, vec![1.0, 1.0]);
        assert!((out.components[0].options[0].price - 2.7).abs() < 1e-12);
    }

    #[test]
    fn concat_exclusive_empty_menu() {
        let m = SymmetricMenu::empty(1);
        let out = concat_exclusive(&m, 100.0, &[Some(5.0)], 0.1);
        assert_eq!(out.option_count(), 1);
        let o = &out.components[0].options[0];
        assert_eq!(o.alloc.x, vec![1.0]);
        assert!((o.price - 4.5).abs() < 1e-12);
    }

    #[test]
    fn concat_exclusive_formula() {
        let m = single_option_menu(1, vec![0.4], 0.3);
        let out = concat_exclusive(&m, 100.0, &[Some(2.0)], 0.1);
        // Probe buys (0.4, 0.3); appended price 0.3 + 0.6*2 = 1.5; all x0.9.
        assert_eq!(out.components.len(), 2);
        let appended = &out.components[1].options[0];
        assert!((appended.price - 1.35).abs() < 1e-12);
        assert!((out.components[0].options[0].price - 0.27).abs() < 1e-12);
    }

    #[test]
    fn concat_exclusive_no_reserves() {
        let m = single_option_menu(1, vec![1.0], 1.0);
        let out = concat_exclusive(&m, 100.0, &[None], 0.25);
        assert_eq!(out.option_count(), 1);
        assert!((out.components[0].options[0].price - 0.75).abs() < 1e-12);
    }

    #[test]
    fn prune_dominated_removes_worse_per_unit() {
        let m = SymmetricMenu::from_options(
            1,
            vec![
                MenuOption {
                    alloc: LotteryAllocation { x: vec![1.0] },
                    price: 2.0,
                },
                MenuOption {
                    alloc: LotteryAllocation { x: vec![0.5] },
                    price: 1.5,
                },
            ],
        );
        let out = prune_dominated(&m);
        assert_eq!(out.option_count(), 1);
        assert_eq!(out.components[0].options[0].price, 2.0);
    }

    #[test]
    fn prune_dominated_keeps_one_of_identical() {
        let opt = MenuOption {
            alloc: LotteryAllocation { x: vec![1.0] },
            price: 2.0,
        };
        let m = SymmetricMenu::from_options(1, vec![opt.clone(), opt]);
        let out = prune_dominated(&m);
        assert_eq!(out.option_count(), 1);
    }

    #[test]
    fn complexity_trivial_group() {
        let m = SymmetricMenu::from_options(
            2,
            vec![
                MenuOption {
                    alloc: LotteryAllocation::single(2, 0, 1.0),
                    price: 1.0,
                },
                MenuOption {
                    alloc: LotteryAllocation::single(2, 1, 1.0),
                    price: 1.0,
                },
                MenuOption {
                    alloc: LotteryAllocation { x: vec![1.0, 1.0] },
                    price: 2.0,
                },
            ],
        );
        let c = complexity_measures(&m);
        assert_eq!(c.mc, ComplexityCount::Finite(3));
        assert_eq!(c.declared_ssmc, ComplexityCount::Finite(3));
        assert_eq!(c.declared_wsmc, 3);
    }

    #[test]
    fn complexity_orbit_counting() {
        // One block of size 3, option x = (1, 0.5, 0): orbit size 3! = 6.
        let m = SymmetricMenu {
            n: 3,
            components: vec![SymmetricComponent {
                group: ItemPermutationGroup::full(3),
                options: vec![MenuOption {
                    alloc: LotteryAllocation { x: vec![1.0, 0.5, 0.0] },
                    price: 1.0,
                }],
            }],
        };
        let c = complexity_measures(&m);
        assert_eq!(c.mc, ComplexityCount::Finite(6));
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&[1, 1, 1]), Some(6));
        assert_eq!(multinomial(&[2, 1]), Some(3));
        assert_eq!(multinomial(&[3]), Some(1));
    }
}
