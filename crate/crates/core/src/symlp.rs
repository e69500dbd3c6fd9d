//! ModRevMax solved exactly via the linear program over canonical
//! representatives of the item-symmetry group: grouping, representative
//! enumeration with multiplicities, LP assembly, and menu extraction.

use crate::dist::ProductDistribution;
use crate::lp::{lp_solve, LPModel, LPStatus, LpError, Rel};
use crate::menu::{
    ItemPermutationGroup, LotteryAllocation, MenuOption, SymmetricComponent, SymmetricMenu,
};
use thiserror::Error;

/// Tolerance for marginal / weight equality when grouping items.
pub const GROUP_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SymLpError {
    #[error("canonical representative budget exceeded: {count} classes > cap {cap}")]
    BudgetExceeded { count: u128, cap: usize },
    #[error("distribution is not symmetric under the supplied group (block {block})")]
    NotSymmetric { block: usize },
    #[error("weights are not constant within block {block}")]
    AsymmetricWeights { block: usize },
    #[error("LP did not return an optimum: {status:?}")]
    NoOptimum { status: LPStatus },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// One equivalence class of valuation vectors: its blockwise
/// non-increasing representative and the class's probability mass.
#[derive(Debug, Clone)]
pub struct CanonicalRep {
    pub values: Vec<f64>,
    /// Number of raw support vectors in the class.
    pub count: u64,
    /// Total probability mass of the class.
    pub q: f64,
}

/// Partitions items into blocks of identical marginals (values and
/// probabilities within 1e-12) and equal weights.
pub fn group_items(d: &ProductDistribution, w: &[f64]) -> ItemPermutationGroup {
    let n = d.n();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let home = blocks.iter_mut().find(|b| {
            let j = b[0];
            d.marginal(i).atom_equal(d.marginal(j), GROUP_TOL) && (w[i] - w[j]).abs() <= GROUP_TOL
        });
        match home {
            Some(b) => b.push(i),
            None => blocks.push(vec![i]),
        }
    }
    ItemPermutationGroup::new(blocks, n).expect("grouping covers all items")
}

/// Number of canonical classes: product over blocks of the multiset
/// coefficient `C(|B| + c - 1, c - 1)` for `c` support values.
pub fn rep_count(d: &ProductDistribution, group: &ItemPermutationGroup) -> u128 {
    let mut total: u128 = 1;
    for block in group.blocks() {
        let b = block.len() as u128;
        let c = d.marginal(block[0]).len() as u128;
        // C(b + c - 1, c - 1) computed multiplicatively.
        let mut coeff: u128 = 1;
        for j in 1..c {
            coeff = coeff.saturating_mul(b + c - j) / j;
        }
        total = total.saturating_mul(coeff);
    }
    total
}

/// Enumerates the canonical representatives (blockwise non-increasing
/// value vectors) with their class counts and masses Q.
pub fn canonical_reps(
    d: &ProductDistribution,
    group: &ItemPermutationGroup,
    rep_cap: usize,
) -> Result<Vec<CanonicalRep>, SymLpError> {
    // Verify symmetry: marginals identical within each block.
    for (bi, block) in group.blocks().iter().enumerate() {
        for &i in block {
            if !d.marginal(i).atom_equal(d.marginal(block[0]), GROUP_TOL) {
                return Err(SymLpError::NotSymmetric { block: bi });
            }
        }
    }
    let count = rep_count(d, group);
    if count > rep_cap as u128 {
        return Err(SymLpError::BudgetExceeded {
            count,
            cap: rep_cap,
        });
    }

    // Per block: all count vectors over the block's support values, each
    // with its multinomial count and probability mass.
    struct BlockChoice {
        /// Values assigned to the block's items, non-increasing.
        values: Vec<f64>,
        count: u64,
        mass: f64,
    }
    let mut per_block: Vec<Vec<BlockChoice>> = Vec::new();
    for block in group.blocks() {
        let m = d.marginal(block[0]);
        let size = block.len();
        let mut choices = Vec::new();
        // counts[c] = how many items take support value index c.
        let mut counts = vec![0usize; m.len()];
        enumerate_counts(&mut counts, 0, size, &mut |counts| {
            let mut values = Vec::with_capacity(size);
            // Descending value order within the block.
            for c in (0..m.len()).rev() {
                for _ in 0..counts[c] {
                    values.push(m.values()[c]);
                }
            }
            let mut comb: u128 = 1;
            let mut placed = 0usize;
            let mut mass = 1.0;
            for (c, &cnt) in counts.iter().enumerate() {
                for j in 1..=cnt {
                    placed += 1;
                    comb = comb * placed as u128 / j as u128;
                }
                mass *= m.probs()[c].powi(cnt as i32);
            }
            choices.push(BlockChoice {
                values,
                count: comb as u64,
                mass: mass * comb as f64,
            });
        });
        per_block.push(choices);
    }

    // Cartesian product across blocks.
    let mut reps = Vec::with_capacity(count as usize);
    let mut pick = vec![0usize; per_block.len()];
    loop {
        let mut values = vec![0.0; d.n()];
        let mut cnt: u64 = 1;
        let mut q = 1.0;
        for (bi, block) in group.blocks().iter().enumerate() {
            let choice = &per_block[bi][pick[bi]];
            for (slot, &item) in block.iter().enumerate() {
                values[item] = choice.values[slot];
            }
            cnt = cnt.saturating_mul(choice.count);
            q *= choice.mass;
        }
        reps.push(CanonicalRep {
            values,
            count: cnt,
            q,
        });
        let mut done = true;
        for bi in (0..pick.len()).rev() {
            if pick[bi] + 1 < per_block[bi].len() {
                pick[bi] += 1;
                done = false;
                break;
            }
            pick[bi] = 0;
        }
        if done {
            break;
        }
    }
    Ok(reps)
}

/// All ways to split `remaining` items over support-value slots from
/// `from` on.
fn enumerate_counts(
    counts: &mut Vec<usize>,
    from: usize,
    remaining: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if from == counts.len() - 1 {
        counts[from] = remaining;
        f(counts);
        counts[from] = 0;
        return;
    }
    for take in 0..=remaining {
        counts[from] = take;
        enumerate_counts(counts, from + 1, remaining - take, f);
    }
    counts[from] = 0;
}

/// Variable layout of the ModRevMax LP: prices `p(v)` for each of `m`
/// reps, then allocations `x_i(v)` (rep-major), then leftovers `l_i`.
pub struct ModRevLayout {
    pub m: usize,
    pub n: usize,
}

impl ModRevLayout {
    pub fn p(&self, rep: usize) -> usize {
        rep
    }

    pub fn x(&self, rep: usize, item: usize) -> usize {
        self.m + rep * self.n + item
    }

    pub fn l(&self, item: usize) -> usize {
        self.m + self.m * self.n + item
    }

    pub fn num_vars(&self) -> usize {
        self.m * (self.n + 1) + self.n
    }
}

/// Builds the symmetry-reduced ModRevMax LP: maximize
/// `sum Q(v) p(v) + sum w_i l_i` subject to (1) `x_j(v) <= 1 - l_i` for
/// `i ~ j`, (2) `sum_i x_i(v) <= k`, (4) IC between all ordered rep
/// pairs, (5) within-block monotone allocations, plus individual
/// rationality rows for the implicit null option.
pub fn build_modrev_lp(
    reps: &[CanonicalRep],
    w: &[f64],
    k: usize,
    group: &ItemPermutationGroup,
) -> (LPModel<f64>, ModRevLayout) {
    let m = reps.len();
    let n = w.len();
    let layout = ModRevLayout { m, n };
    let nv = layout.num_vars();
    let mut model = LPModel::new(nv);
    for (r, rep) in reps.iter().enumerate() {
        model.objective[layout.p(r)] = rep.q;
    }
    for i in 0..n {
        model.objective[layout.l(i)] = w[i];
    }
    // Bounds: p >= 0, x in [0, 1], l in [0, 1].
    for r in 0..m {
        model.bounds[layout.p(r)] = (0.0, f64::INFINITY);
        for i in 0..n {
            model.bounds[layout.x(r, i)] = (0.0, 1.0);
        }
    }
    for i in 0..n {
        model.bounds[layout.l(i)] = (0.0, 1.0);
    }

    for r in 0..m {
        // (1) x_j(v) + l_i <= 1 for all i ~ j.
        for block in group.blocks() {
            for &i in block {
                for &j in block {
                    let mut row = vec![0.0; nv];
                    row[layout.x(r, j)] = 1.0;
                    row[layout.l(i)] = 1.0;
                    model.push_row(row, Rel::Le, 1.0);
                }
            }
        }
        // (2) sum_i x_i(v) <= k.
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[layout.x(r, i)] = 1.0;
        }
        model.push_row(row, Rel::Le, k as f64);
        // (5) x_i(v) >= x_j(v) for i ~ j with i < j.
        for block in group.blocks() {
            for a in 0..block.len() {
                for b in (a + 1)..block.len() {
                    let (i, j) = (block[a].min(block[b]), block[a].max(block[b]));
                    let mut row = vec![0.0; nv];
                    row[layout.x(r, j)] = 1.0;
                    row[layout.x(r, i)] = -1.0;
                    model.push_row(row, Rel::Le, 0.0);
                }
            }
        }
        // Individual rationality: sum v_i x_i(v) - p(v) >= 0.
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[layout.x(r, i)] = -reps[r].values[i];
        }
        row[layout.p(r)] = 1.0;
        model.push_row(row, Rel::Le, 0.0);
    }
    // (4) IC between every ordered pair of reps: buying the own option
    // beats every other option under the own values.
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            let mut row = vec![0.0; nv];
            for i in 0..n {
                row[layout.x(a, i)] -= reps[a].values[i];
                row[layout.x(b, i)] += reps[a].values[i];
            }
            row[layout.p(a)] += 1.0;
            row[layout.p(b)] -= 1.0;
            model.push_row(row, Rel::Le, 0.0);
        }
    }
    (model, layout)
}

/// Output of a ModRevMax solve.
#[derive(Debug, Clone)]
pub struct ModRevSolution {
    pub menu: SymmetricMenu,
    pub objective: f64,
    pub num_reps: usize,
}

/// Solves ModRevMax for `d` with weights `w` under an explicit group.
pub fn solve_modrev_with_group(
    d: &ProductDistribution,
    w: &[f64],
    group: &ItemPermutationGroup,
    rep_cap: usize,
    tolerance: f64,
) -> Result<ModRevSolution, SymLpError> {
    for (bi, block) in group.blocks().iter().enumerate() {
        if block.iter().any(|&i| (w[i] - w[block[0]]).abs() > GROUP_TOL) {
            return Err(SymLpError::AsymmetricWeights { block: bi });
        }
    }
    let reps = canonical_reps(d, group, rep_cap)?;
    let (model, layout) = build_modrev_lp(&reps, w, d.k(), group);
    let sol = lp_solve(&model, tolerance)?;
    if sol.status != LPStatus::Optimal {
        return Err(SymLpError::NoOptimum { status: sol.status });
    }
    let mut options = Vec::new();
    for r in 0..reps.len() {
        let price = sol.primal[layout.p(r)];
        let x: Vec<f64> = (0..d.n())
            .map(|i| sol.primal[layout.x(r, i)].clamp(0.0, 1.0))
            .collect();
        // Drop the null option (all-zero allocation at zero price).
        if price > tolerance || x.iter().any(|&xi| xi > tolerance) {
            options.push(MenuOption {
                alloc: LotteryAllocation { x },
                price: price.max(0.0),
            });
        }
    }
    let menu = if options.is_empty() {
        SymmetricMenu::empty(d.n())
    } else {
        SymmetricMenu {
            n: d.n(),
            components: vec![SymmetricComponent {
                group: group.clone(),
                options,
            }],
        }
    };
    Ok(ModRevSolution {
        menu,
        objective: sol.objective,
        num_reps: reps.len(),
    })
}

/// Solves ModRevMax using the group detected by [`group_items`].
pub fn solve_modrev(
    d: &ProductDistribution,
    w: &[f64],
    rep_cap: usize,
    tolerance: f64,
) -> Result<ModRevSolution, SymLpError> {
    let group = group_items(d, w);
    solve_modrev_with_group(d, w, &group, rep_cap, tolerance)
}
