//! Menu optimization for a single buyer with a product distribution over
//! item values.
//!
//! The library computes exactly-optimal menus for small discrete instances
//! (via a symmetry-reduced linear program and a brute-force oracle), and
//! approximately-optimal menus for unbounded instances via an
//! unbounded-to-bounded reduction built from canonical truncations,
//! value/probability discretizations, price nudging, exclusive-option
//! transforms, and domination pruning.  A bucket-mechanism constructor
//! approximates selling-separately revenue with linear symmetric menu
//! complexity, and a barrier-instance generator reproduces the known
//! hard distribution for symmetry-based approaches.

pub mod barrier;
pub mod benchmarks;
pub mod bucket;
pub mod discretize;
pub mod dist;
pub mod io;
pub mod lp;
pub mod menu;
pub mod oracle;
pub mod reduction;
pub mod symlp;

/// Concrete scalar used throughout the high-level pipeline.  The LP engine
/// in [`lp`] is generic over `num_traits::Float`; everything else is pinned
/// to `f64` because file formats and tolerances are specified for doubles.
pub type Scalar = f64;

/// Default cap on exact support enumeration (number of product atoms).
pub const DEFAULT_SUPPORT_CAP: usize = 10_000_000;
/// Default cap on canonical-representative enumeration.
pub const DEFAULT_REP_CAP: usize = 200_000;
/// Default cap on the brute-force oracle's full support size.
pub const DEFAULT_ORACLE_CAP: usize = 2_000;
/// Default LP feasibility/optimality tolerance.
pub const DEFAULT_LP_TOLERANCE: f64 = 1e-9;
