//! A self-contained dense linear-program solver: two-phase primal
//! simplex with a deterministic Dantzig entering rule and a two-pass
//! largest-pivot ratio test.  Maximization form with per-variable
//! bounds and mixed `<=` / `>=` / `=` rows.
//!
//! The engine is generic over the scalar type via `num_traits::Float`;
//! the rest of the crate instantiates it at [`crate::Scalar`] (`f64`).

use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

/// `maximize objective . x` subject to rows and per-variable bounds
/// `[lo, hi]` (infinite endpoints allowed).
#[derive(Debug, Clone)]
pub struct LPModel<F> {
    pub objective: Vec<F>,
    pub rows: Vec<(Vec<F>, Rel, F)>,
    pub bounds: Vec<(F, F)>,
}

impl<F: Float> LPModel<F> {
    pub fn new(num_vars: usize) -> Self {
        LPModel {
            objective: vec![F::zero(); num_vars],
            rows: Vec::new(),
            bounds: vec![(F::zero(), F::infinity()); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push_row(&mut self, coeffs: Vec<F>, rel: Rel, rhs: F) {
        debug_assert_eq!(coeffs.len(), self.num_vars());
        self.rows.push((coeffs, rel, rhs));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LPStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LPSolution<F> {
    pub status: LPStatus,
    pub primal: Vec<F>,
    pub objective: F,
}

/// How each original variable maps into the non-negative standard-form
/// variables: `x = offset + sum(sign_c * y_c)`.
struct VarMap<F> {
    offset: F,
    terms: Vec<(usize, F)>,
}

struct Tableau<F> {
    /// `rows x (cols + 1)` dense matrix, last column is the rhs.
    a: Vec<F>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
}

impl<F: Float> Tableau<F> {
    fn at(&self, r: usize, c: usize) -> F {
        self.a[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> F {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize, zrow: &mut [F]) {
        let w = self.cols + 1;
        let piv = self.a[r * w + c];
        let inv = F::one() / piv;
        // Split the flat matrix around the pivot row so the elimination
        // loops work on disjoint slices (bounds checks elided).
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for x in prow.iter_mut() {
            *x = *x * inv;
        }
        let prow: &[F] = prow;
        let eliminate = |row: &mut [F]| {
            let factor = row[c];
            if factor != F::zero() {
                for (x, &p) in row.iter_mut().zip(prow) {
                    *x = *x - factor * p;
                }
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        let factor = zrow[c];
        if factor != F::zero() {
            for (x, &p) in zrow.iter_mut().zip(prow) {
                *x = *x - factor * p;
            }
        }
        self.basis[r] = c;
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

/// Runs one simplex phase until optimality or unboundedness.
/// `allowed[c]` gates which columns may enter the basis.
///
/// Entering rule: largest reduced cost, ties to the lowest index
/// (deterministic Dantzig).  When the objective has not moved for a
/// stretch of degenerate pivots, the entering rule switches to Bland's
/// lowest-index choice until progress resumes, which breaks the cycles
/// Dantzig can fall into at heavily degenerate vertices.  Leaving rule:
/// a two-pass ratio test that relaxes ties by the tolerance and then
/// pivots on the largest eligible entry — dividing by a near-zero entry
/// wrecks the tableau, so stability takes priority.  The iteration cap
/// backstops termination and the caller certifies the answer
/// independently.
fn simplex_phase<F: Float>(
    tab: &mut Tableau<F>,
    zrow: &mut [F],
    allowed: &[bool],
    tol: F,
    max_iters: usize,
) -> Result<PhaseOutcome, LpError> {
    let stall_limit = 50 + tab.rows;
    let mut stall = 0usize;
    let mut last_obj = zrow[tab.cols];
    for _ in 0..max_iters {
        let improved = (zrow[tab.cols] - last_obj).abs() > tol * (F::one() + last_obj.abs());
        if improved {
            last_obj = zrow[tab.cols];
            stall = 0;
        } else {
            stall += 1;
        }
        let mut entering: Option<(usize, F)> = None;
        if stall > stall_limit {
            entering = (0..tab.cols)
                .find(|&c| allowed[c] && zrow[c] > tol)
                .map(|c| (c, zrow[c]));
        } else {
            for c in 0..tab.cols {
                if allowed[c] && zrow[c] > tol && entering.is_none_or(|(_, bz)| zrow[c] > bz) {
                    entering = Some((c, zrow[c]));
                }
            }
        }
        let Some((c, _)) = entering else {
            return Ok(PhaseOutcome::Optimal);
        };
        // Two-pass ratio test.  Pass 1: the strict minimum ratio over
        // rows with a positive pivot entry.  Pass 2: among rows whose
        // ratio ties the minimum within tolerance, pivot on the largest
        // entry — dividing by a near-zero entry (an exact zero perturbed
        // by rounding) wrecks the tableau, so stability takes priority
        // and remaining ties go to the smallest basic index.
        // Rounding can leave a basic value slightly negative; clamping
        // the ratio at zero keeps the step length non-negative, so such
        // rows trigger a degenerate pivot instead of a backward one.
        let mut min_ratio: Option<F> = None;
        for r in 0..tab.rows {
            let a = tab.at(r, c);
            if a > tol {
                let ratio = tab.rhs(r).max(F::zero()) / a;
                if min_ratio.is_none_or(|m| ratio < m) {
                    min_ratio = Some(ratio);
                }
            }
        }
        let Some(min_ratio) = min_ratio else {
            return Ok(PhaseOutcome::Unbounded);
        };
        let tie_cut = min_ratio + tol * (F::one() + min_ratio.abs());
        let mut leave: Option<(usize, F)> = None;
        for r in 0..tab.rows {
            let a = tab.at(r, c);
            if a > tol && tab.rhs(r).max(F::zero()) / a <= tie_cut {
                let better = match leave {
                    None => true,
                    Some((best_r, best_a)) => {
                        a > best_a || (a == best_a && tab.basis[r] < tab.basis[best_r])
                    }
                };
                if better {
                    leave = Some((r, a));
                }
            }
        }
        tab.pivot(leave.expect("at least one tie row").0, c, zrow);
    }
    Err(LpError::NumericalFailure(
        "simplex iteration cap exceeded".into(),
    ))
}

/// Solves `B x_B = b` where `B` collects the basic columns of the
/// pristine standard-form matrix `a0` (`m` rows of width `w`, rhs in
/// the last column).  Gaussian elimination with partial pivoting;
/// `None` when the basis matrix is numerically singular.
fn solve_basis_system<F: Float>(a0: &[F], w: usize, m: usize, basis: &[usize]) -> Option<Vec<F>> {
    let bw = m + 1;
    let mut sys = vec![F::zero(); m * bw];
    for r in 0..m {
        for (j, &col) in basis.iter().enumerate() {
            sys[r * bw + j] = a0[r * w + col];
        }
        sys[r * bw + m] = a0[r * w + w - 1];
    }
    for col in 0..m {
        let mut pivot = col;
        let mut best = sys[col * bw + col].abs();
        for r in col + 1..m {
            let v = sys[r * bw + col].abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best < F::from(1e-12).unwrap() {
            return None;
        }
        if pivot != col {
            for j in col..bw {
                sys.swap(col * bw + j, pivot * bw + j);
            }
        }
        let inv = F::one() / sys[col * bw + col];
        let (upper, lower) = sys.split_at_mut((col + 1) * bw);
        let prow = &upper[col * bw..];
        for row in lower.chunks_exact_mut(bw) {
            let factor = row[col] * inv;
            if factor != F::zero() {
                for j in col..bw {
                    row[j] = row[j] - factor * prow[j];
                }
            }
        }
    }
    let mut xb = vec![F::zero(); m];
    for r in (0..m).rev() {
        let mut acc = sys[r * bw + m];
        for j in r + 1..m {
            acc = acc - sys[r * bw + j] * xb[j];
        }
        xb[r] = acc / sys[r * bw + r];
    }
    if xb.iter().all(|v| v.is_finite()) {
        Some(xb)
    } else {
        None
    }
}

/// Solves `model` to `tolerance` with a deterministic two-phase dense
/// primal simplex.  Returns the status, an optimal basic
/// solution when one exists, and the objective value; residuals of an
/// `Optimal` answer are certified within `10 * tolerance` (relative to
/// row magnitudes) or the solve fails.
pub fn lp_solve<F: Float>(model: &LPModel<F>, tolerance: F) -> Result<LPSolution<F>, LpError> {
    let nv = model.num_vars();
    for (coeffs, _, rhs) in &model.rows {
        if coeffs.len() != nv {
            return Err(LpError::Malformed("row width mismatch".into()));
        }
        if !rhs.is_finite() {
            return Err(LpError::Malformed("non-finite rhs".into()));
        }
    }
    if model.bounds.len() != nv {
        return Err(LpError::Malformed("bounds length mismatch".into()));
    }
    let tol = tolerance;

    // Map each variable into non-negative standard-form variables.
    let mut maps: Vec<VarMap<F>> = Vec::with_capacity(nv);
    let mut upper_rows: Vec<(usize, F)> = Vec::new(); // (column, range) for finite [lo, hi]
    let mut ny = 0usize;
    for &(lo, hi) in &model.bounds {
        if lo > hi {
            return Ok(LPSolution {
                status: LPStatus::Infeasible,
                primal: Vec::new(),
                objective: F::zero(),
            });
        }
        if lo.is_finite() {
            maps.push(VarMap {
                offset: lo,
                terms: vec![(ny, F::one())],
            });
            if hi.is_finite() {
                upper_rows.push((ny, hi - lo));
            }
            ny += 1;
        } else if hi.is_finite() {
            maps.push(VarMap {
                offset: hi,
                terms: vec![(ny, -F::one())],
            });
            ny += 1;
        } else {
            maps.push(VarMap {
                offset: F::zero(),
                terms: vec![(ny, F::one()), (ny + 1, -F::one())],
            });
            ny += 2;
        }
    }

    // Transformed rows over y >= 0: (coeffs, rel, rhs).
    let mut trows: Vec<(Vec<F>, Rel, F)> = Vec::new();
    let mut tobj = vec![F::zero(); ny];
    let mut obj_const = F::zero();
    for (j, map) in maps.iter().enumerate() {
        let cj = model.objective[j];
        obj_const = obj_const + cj * map.offset;
        for &(col, sign) in &map.terms {
            tobj[col] = tobj[col] + cj * sign;
        }
    }
    for (coeffs, rel, rhs) in &model.rows {
        let mut row = vec![F::zero(); ny];
        let mut b = *rhs;
        for (j, map) in maps.iter().enumerate() {
            let aj = coeffs[j];
            if aj == F::zero() {
                continue;
            }
            b = b - aj * map.offset;
            for &(col, sign) in &map.terms {
                row[col] = row[col] + aj * sign;
            }
        }
        trows.push((row, *rel, b));
    }
    for &(col, range) in &upper_rows {
        let mut row = vec![F::zero(); ny];
        row[col] = F::one();
        trows.push((row, Rel::Le, range));
    }

    // Normalize: rhs >= 0 everywhere; >= rows with zero rhs become <=.
    for (row, rel, b) in &mut trows {
        if *b < F::zero() {
            for x in row.iter_mut() {
                *x = -*x;
            }
            *b = -*b;
            *rel = match *rel {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
        }
        if *b == F::zero() && *rel == Rel::Ge {
            for x in row.iter_mut() {
                *x = -*x;
            }
            *rel = Rel::Le;
        }
    }

    // Assemble the tableau: structural + slack/surplus + artificial.
    let m = trows.len();
    let num_slack = trows
        .iter()
        .filter(|(_, rel, _)| *rel != Rel::Eq)
        .count();
    let num_art = trows
        .iter()
        .filter(|(_, rel, _)| *rel != Rel::Le)
        .count();
    let cols = ny + num_slack + num_art;
    let w = cols + 1;
    let mut a = vec![F::zero(); m * w];
    let mut basis = vec![0usize; m];
    let mut is_artificial = vec![false; cols];
    let mut next_slack = ny;
    let mut next_art = ny + num_slack;
    for (i, (row, rel, b)) in trows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            a[i * w + j] = x;
        }
        a[i * w + cols] = *b;
        match rel {
            Rel::Le => {
                a[i * w + next_slack] = F::one();
                basis[i] = next_slack;
                next_slack += 1;
            }
            Rel::Ge => {
                a[i * w + next_slack] = -F::one();
                next_slack += 1;
                a[i * w + next_art] = F::one();
                is_artificial[next_art] = true;
                basis[i] = next_art;
                next_art += 1;
            }
            Rel::Eq => {
                a[i * w + next_art] = F::one();
                is_artificial[next_art] = true;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }
    // Pristine copy of the standard form for post-solve refinement.
    let a0 = a.clone();
    // Anti-degeneracy perturbation: jitter each rhs by a deterministic,
    // row-dependent sub-tolerance amount so ratio-test ties — the
    // source of degenerate stalling and cycling — become strict.  The
    // final basis is re-solved against the pristine copy above, so the
    // perturbation never reaches the reported solution.  Equality rows
    // are left alone: an overdetermined-but-consistent equality system
    // would turn infeasible under independent jitter.
    for r in 0..m {
        if trows[r].1 == Rel::Eq {
            continue;
        }
        let frac = ((r + 1) as f64 * 0.618_033_988_749_894_9).fract();
        let jitter = F::from(0.25 + 0.5 * frac).unwrap();
        let b = a[r * w + cols];
        a[r * w + cols] = b + tol * jitter * (F::one() + b.abs());
    }
    let mut tab = Tableau {
        a,
        rows: m,
        cols,
        basis,
    };
    // The ratio test has no formal anti-cycling guarantee, so the cap
    // doubles as the termination backstop.
    let max_iters = 20_000 + 500 * (m + cols);

    // Phase 1: drive artificials to zero (maximize -sum of artificials).
    if num_art > 0 {
        let mut zrow = vec![F::zero(); w];
        for c in 0..cols {
            if is_artificial[c] {
                zrow[c] = -F::one();
            }
        }
        // Price out the basic artificials.
        for r in 0..tab.rows {
            if is_artificial[tab.basis[r]] {
                for j in 0..w {
                    let v = tab.a[r * w + j];
                    zrow[j] = zrow[j] + v;
                }
            }
        }
        let allowed = vec![true; cols];
        match simplex_phase(&mut tab, &mut zrow, &allowed, tol, max_iters)? {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded => {
                return Err(LpError::NumericalFailure(
                    "phase-1 objective unbounded".into(),
                ))
            }
        }
        // zrow rhs holds -(phase-1 objective) = sum of residual artificials.
        if zrow[cols] > tol {
            return Ok(LPSolution {
                status: LPStatus::Infeasible,
                primal: Vec::new(),
                objective: F::zero(),
            });
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..tab.rows {
            if is_artificial[tab.basis[r]] {
                let pivot_col =
                    (0..cols).find(|&c| !is_artificial[c] && tab.at(r, c).abs() > tol);
                if let Some(c) = pivot_col {
                    let mut dummy = vec![F::zero(); w];
                    tab.pivot(r, c, &mut dummy);
                }
                // A row with no eligible pivot is redundant; its basic
                // artificial stays at zero and the column is barred below.
            }
        }
    }

    // Phase 2: original objective.
    let mut zrow = vec![F::zero(); w];
    for (j, &c) in tobj.iter().enumerate() {
        zrow[j] = c;
    }
    for r in 0..tab.rows {
        let b = tab.basis[r];
        let coef = if b < ny { tobj[b] } else { F::zero() };
        if coef != F::zero() {
            for j in 0..w {
                let v = tab.a[r * w + j];
                zrow[j] = zrow[j] - coef * v;
            }
        }
    }
    let allowed: Vec<bool> = (0..cols).map(|c| !is_artificial[c]).collect();
    match simplex_phase(&mut tab, &mut zrow, &allowed, tol, max_iters)? {
        PhaseOutcome::Optimal => {}
        PhaseOutcome::Unbounded => {
            return Ok(LPSolution {
                status: LPStatus::Unbounded,
                primal: Vec::new(),
                objective: F::infinity(),
            });
        }
    }

    // Recover y, then the original variables.  The iterated tableau
    // accumulates rounding drift, so refine the basic values by solving
    // the final basis system against the pristine standard-form data.
    let mut y = vec![F::zero(); cols];
    match solve_basis_system(&a0, w, m, &tab.basis) {
        Some(xb) => {
            for r in 0..tab.rows {
                y[tab.basis[r]] = xb[r];
            }
        }
        None => {
            for r in 0..tab.rows {
                y[tab.basis[r]] = tab.rhs(r);
            }
        }
    }
    let mut primal = vec![F::zero(); nv];
    for (j, map) in maps.iter().enumerate() {
        let mut x = map.offset;
        for &(col, sign) in &map.terms {
            x = x + sign * y[col];
        }
        primal[j] = x;
    }
    let objective = model
        .objective
        .iter()
        .zip(&primal)
        .fold(F::zero(), |acc, (&c, &x)| acc + c * x);

    // Certify feasibility of the answer within 10 * tolerance.
    let ten = F::from(10.0).unwrap();
    for (coeffs, rel, rhs) in &model.rows {
        let lhs = coeffs
            .iter()
            .zip(&primal)
            .fold(F::zero(), |acc, (&c, &x)| acc + c * x);
        let scale = F::one() + rhs.abs();
        let resid = match rel {
            Rel::Le => lhs - *rhs,
            Rel::Ge => *rhs - lhs,
            Rel::Eq => (lhs - *rhs).abs(),
        };
        if resid > ten * tol * scale {
            return Err(LpError::NumericalFailure(format!(
                "row residual {} exceeds certification threshold",
                resid.to_f64().unwrap_or(f64::NAN)
            )));
        }
    }
    for (j, &(lo, hi)) in model.bounds.iter().enumerate() {
        let scale = F::one() + primal[j].abs();
        if primal[j] < lo - ten * tol * scale || primal[j] > hi + ten * tol * scale {
            return Err(LpError::NumericalFailure(format!("variable {j} out of bounds")));
        }
    }
    let _ = obj_const; // objective is recomputed from the primal directly
    Ok(LPSolution {
        status: LPStatus::Optimal,
        primal,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(model: &LPModel<f64>) -> LPSolution<f64> {
        lp_solve(model, 1e-9).unwrap()
    }

    #[test]
    fn max_x_le_1() {
        let mut m = LPModel::new(1);
        m.objective = vec![1.0];
        m.push_row(vec![1.0], Rel::Le, 1.0);
        let s = solve(&m);
        assert_eq!(s.status, LPStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
        assert!((s.primal[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut m = LPModel::new(1);
        m.objective = vec![1.0];
        m.push_row(vec![1.0], Rel::Le, 0.0);
        m.push_row(vec![1.0], Rel::Ge, 1.0);
        let s = solve(&m);
        assert_eq!(s.status, LPStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = LPModel::new(1);
        m.objective = vec![1.0];
        let s = solve(&m);
        assert_eq!(s.status, LPStatus::Unbounded);
    }

    #[test]
    fn vertex_optimum() {
        // max 3x + 2y st x + y <= 4, x <= 2 -> 10 at (2, 2).
        let mut m = LPModel::new(2);
        m.objective = vec![3.0, 2.0];
        m.push_row(vec![1.0, 1.0], Rel::Le, 4.0);
        m.push_row(vec![1.0, 0.0], Rel::Le, 2.0);
        let s = solve(&m);
        assert_eq!(s.status, LPStatus::Optimal);
        assert!((s.objective - 10.0).abs() < 1e-9);
        assert!((s.primal[0] - 2.0).abs() < 1e-9);
        assert!((s.primal[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_bounds() {
        // max x + y st x + y = 3, x in [0, 1], y in [0, 5] -> 3.
        let mut m = LPModel::new(2);
        m.objective = vec![1.0, 1.0];
        m.bounds = vec![(0.0, 1.0), (0.0, 5.0)];
        m.push_row(vec![1.0, 1.0], Rel::Eq, 3.0);
        let s = solve(&m);
        assert_eq!(s.status, LPStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn free_variable() {
        // max -x st x >= -5 (via free var and a >= row) -> x = -5.
        let mut m = LPModel::new(1);
        m.objective = vec![-1.0];
        m.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY)];
        m.push_row(vec![1.0], Rel::Ge, -5.0);
        let s = solve(&m);
        assert_eq!(s.status, LPStatus::Optimal);
        assert!((s.objective - 5.0).abs() < 1e-9);
        assert!((s.primal[0] + 5.0).abs() < 1e-9);
    }

    #[test]
    fn upper_bounded_variable_only() {
        let mut m = LPModel::new(1);
        m.objective = vec![1.0];
        m.bounds = vec![(f64::NEG_INFINITY, 2.5)];
        let s = solve(&m);
        assert_eq!(s.status, LPStatus::Optimal);
        assert!((s.objective - 2.5).abs() < 1e-9);
    }

    #[test]
    fn deterministic_repeat() {
        let mut m = LPModel::new(3);
        m.objective = vec![1.0, 2.0, 0.5];
        m.bounds = vec![(0.0, 2.0); 3];
        m.push_row(vec![1.0, 1.0, 1.0], Rel::Le, 3.0);
        m.push_row(vec![0.0, 1.0, -1.0], Rel::Ge, -1.0);
        let s1 = solve(&m);
        let s2 = solve(&m);
        assert_eq!(s1.primal, s2.primal);
        assert_eq!(s1.objective, s2.objective);
    }

    #[test]
    fn generic_f32_instantiation() {
        let mut m: LPModel<f32> = LPModel::new(1);
        m.objective = vec![1.0];
        m.push_row(vec![1.0], Rel::Le, 1.0);
        let s = lp_solve(&m, 1e-4).unwrap();
        assert_eq!(s.status, LPStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-4);
    }
}
