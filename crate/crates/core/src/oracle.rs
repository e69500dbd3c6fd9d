//! Ground-truth optimal menus for tiny instances: the full exponential
//! ModRevMax LP over the entire support (the symmetric LP with the
//! trivial group).

use crate::dist::ProductDistribution;
use crate::menu::ItemPermutationGroup;
use crate::symlp::{solve_modrev_with_group, ModRevSolution, SymLpError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("full support size {size} exceeds oracle cap {cap}")]
    SupportTooLarge { size: u128, cap: usize },
    #[error(transparent)]
    SymLp(#[from] SymLpError),
}

/// Solves ModRevMax exactly over the full support (no symmetry).  The
/// objective is the true optimum for the discrete instance.
pub fn brute_force_optimal(
    d: &ProductDistribution,
    w: &[f64],
    cap: usize,
    tolerance: f64,
) -> Result<ModRevSolution, OracleError> {
    let size = d
        .support_size()
        .map_err(|_| OracleError::SupportTooLarge {
            size: u128::MAX,
            cap,
        })?;
    if size > cap as u128 {
        return Err(OracleError::SupportTooLarge { size, cap });
    }
    let group = ItemPermutationGroup::trivial(d.n());
    Ok(solve_modrev_with_group(d, w, &group, cap + 1, tolerance)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{brev, srev_star, SrevStarMode};
    use crate::dist::{make_product, Marginal};
    use crate::{DEFAULT_LP_TOLERANCE, DEFAULT_ORACLE_CAP};

    fn uniform12() -> Marginal {
        Marginal::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn single_item_uniform() {
        let d = make_product(vec![uniform12()], 1).unwrap();
        let sol =
            brute_force_optimal(&d, &[0.0], DEFAULT_ORACLE_CAP, DEFAULT_LP_TOLERANCE).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-8);
    }

    #[test]
    fn point_mass_full_surplus() {
        let d = make_product(
            vec![Marginal::point_mass(1.0), Marginal::point_mass(2.5)],
            2,
        )
        .unwrap();
        let sol =
            brute_force_optimal(&d, &[0.0, 0.0], DEFAULT_ORACLE_CAP, DEFAULT_LP_TOLERANCE)
                .unwrap();
        assert!((sol.objective - 3.5).abs() < 1e-8);
    }

    #[test]
    fn dominates_benchmarks() {
        let m1 = Marginal::new(vec![1.0, 3.0], vec![0.6, 0.4]).unwrap();
        let m2 = Marginal::new(vec![0.5, 2.0], vec![0.3, 0.7]).unwrap();
        let d = make_product(vec![m1, m2], 2).unwrap();
        let sol =
            brute_force_optimal(&d, &[0.0, 0.0], DEFAULT_ORACLE_CAP, DEFAULT_LP_TOLERANCE)
                .unwrap();
        let b = brev(&d, 1000, 1000, 1);
        let s = srev_star(&d, SrevStarMode::ExactSmall { grid_cap: 1000 }, 1000).unwrap();
        assert!(sol.objective >= b.revenue - 1e-7);
        assert!(sol.objective >= s.revenue - 1e-7);
    }

    #[test]
    fn cap_enforced() {
        let d = make_product(vec![uniform12(); 3], 3).unwrap();
        assert!(matches!(
            brute_force_optimal(&d, &[0.0; 3], 4, DEFAULT_LP_TOLERANCE),
            Err(OracleError::SupportTooLarge { .. })
        ));
    }
}
