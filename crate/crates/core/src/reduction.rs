//! The end-to-end unbounded-to-bounded pipeline: parameter selection,
//! canonical truncation, discretized symmetric ModRevMax solve, price
//! nudge, E-exclusive transform, exclusive-option concatenation, and
//! domination pruning, with a measured guarantee report.

use crate::benchmarks::{brev, monopoly_price, srev_star, SrevStarMode};
use crate::discretize::{canonical_discretize, DiscretizationParams, DiscretizeError};
use crate::dist::{DistError, ProductDistribution, TruncationMode};
use crate::menu::{
    complexity_measures, concat_exclusive, make_exclusive, prune_dominated, revenue_exact,
    revenue_mc, scale_prices, ComplexityMeasures, SymmetricMenu,
};
use crate::oracle::{brute_force_optimal, OracleError};
use crate::symlp::{group_items, solve_modrev_with_group, SymLpError};
use crate::{DEFAULT_ORACLE_CAP, DEFAULT_REP_CAP, DEFAULT_SUPPORT_CAP};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("eps must lie in (0, 1/2] (got {0})")]
    BadEps(f64),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error("bounded solve exceeded budget: {0}")]
    SymLp(#[from] SymLpError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Budgets, seeds, and the two tunable constants of the pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub support_cap: usize,
    pub rep_cap: usize,
    pub oracle_cap: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Multiplier on the selling-separately lower bound used as the
    /// `H` proxy; compensates for the proxy being a lower bound.
    pub safety_factor: f64,
    /// Multiplier on the discretization granularity `eps^2 / (t k)`.
    pub c_delta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            support_cap: DEFAULT_SUPPORT_CAP,
            rep_cap: DEFAULT_REP_CAP,
            oracle_cap: DEFAULT_ORACLE_CAP,
            mc_samples: 100_000,
            seed: 1,
            tolerance: crate::DEFAULT_LP_TOLERANCE,
            safety_factor: 2.0,
            c_delta: 1.0,
        }
    }
}

/// Selected thresholds and per-item tail quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionParams {
    pub eps: f64,
    /// Proxy for the symmetric-menu revenue upper bound over eps.
    pub h: f64,
    /// Exclusivity threshold.
    pub e: f64,
    /// Truncation threshold.
    pub t: f64,
    /// Revenue proxy `Rhat`: the larger of the selling-separately lower
    /// bound and the bundle revenue.
    pub rhat: f64,
    /// Tail monopoly revenue `sup_{r >= T} r Pr[v_i >= r]` per item.
    pub p_i: Vec<f64>,
    /// Tail reserve attaining `p_i`; absent when no atom reaches `T`.
    pub r_i: Vec<Option<f64>>,
    /// `w_i = r_i Pr[v_i >= r_i]` (0 when `r_i` is absent).
    pub w_i: Vec<f64>,
}

/// How the final revenue was measured.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum RevenueMeasurement {
    Exact { value: f64 },
    Mc { value: f64, stderr: f64, samples: usize },
}

impl RevenueMeasurement {
    pub fn value(&self) -> f64 {
        match self {
            RevenueMeasurement::Exact { value } => *value,
            RevenueMeasurement::Mc { value, .. } => *value,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    pub params: Option<ReductionParams>,
    /// The instance was all-zero; the empty menu is optimal.
    pub degenerate: bool,
    /// Some `w_i` cleared `Rhat / eps`, so the bounded menu is empty
    /// and all revenue comes from the exclusive options.
    pub tail_shortcut: bool,
    /// Discretization granularity used for the bounded solve.
    pub delta: Option<f64>,
    /// ModRevMax objective of the bounded solve (on the discretized
    /// truncation).
    pub bounded_objective: f64,
    pub num_reps: usize,
    pub bounded_complexity: ComplexityMeasures,
    pub final_menu: SymmetricMenu,
    pub final_complexity: ComplexityMeasures,
    pub revenue: RevenueMeasurement,
    /// Exact optimum of the original instance when enumerable.
    pub oracle_objective: Option<f64>,
    pub ratio: Option<f64>,
    pub seed: u64,
}

/// Largest power `(1-delta)^j` (integer `j`, possibly negative) not
/// exceeding `v > 0`, guarded so rounding never rounds up.
fn power_floor(v: f64, delta: f64) -> f64 {
    let base = 1.0 - delta;
    let mut j = (v.ln() / base.ln()).ceil() as i64;
    let rel = 1.0 + 1e-12;
    while base.powi(j as i32) > v * rel {
        j += 1;
    }
    while base.powi(j as i32 - 1) <= v * rel {
        j -= 1;
    }
    base.powi(j as i32)
}

/// Parameter selection: `H = safety * SRevLower / eps`, `E = max(H /
/// eps^2, BRev / eps)`, `T = E / eps`, per-item tail monopoly quotes at
/// floor `T`.  Returns `None` for the all-zero instance.
pub fn select_params(
    d: &ProductDistribution,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<Option<ReductionParams>, ReductionError> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(ReductionError::BadEps(eps));
    }
    let srev_lower = srev_star(d, SrevStarMode::UniformLower, cfg.support_cap)
        .expect("uniform lower bound cannot fail")
        .revenue;
    let brev_rev = brev(d, cfg.support_cap, cfg.mc_samples, cfg.seed).revenue;
    if srev_lower <= 0.0 && brev_rev <= 0.0 {
        return Ok(None);
    }
    let h = cfg.safety_factor * srev_lower / eps;
    let e = (h / (eps * eps)).max(brev_rev / eps);
    let t = e / eps;
    let rhat = srev_lower.max(brev_rev);
    let mut p_i = Vec::with_capacity(d.n());
    let mut r_i = Vec::with_capacity(d.n());
    let mut w_i = Vec::with_capacity(d.n());
    for m in d.marginals() {
        let (price, revenue) = monopoly_price(m, t);
        p_i.push(revenue);
        w_i.push(if price.is_some() { revenue } else { 0.0 });
        r_i.push(price);
    }
    Ok(Some(ReductionParams {
        eps,
        h,
        e,
        t,
        rhat,
        p_i,
        r_i,
        w_i,
    }))
}

/// Runs the full pipeline and evaluates the final menu on the original
/// distribution (exactly when enumerable, else Monte Carlo).
pub fn run_reduction(
    d: &ProductDistribution,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<ReductionReport, ReductionError> {
    let n = d.n();
    let Some(params) = select_params(d, eps, cfg)? else {
        let empty = SymmetricMenu::empty(n);
        let c = complexity_measures(&empty);
        return Ok(ReductionReport {
            params: None,
            degenerate: true,
            tail_shortcut: false,
            delta: None,
            bounded_objective: 0.0,
            num_reps: 0,
            bounded_complexity: c,
            final_menu: empty.clone(),
            final_complexity: c,
            revenue: RevenueMeasurement::Exact { value: 0.0 },
            oracle_objective: None,
            ratio: None,
            seed: cfg.seed,
        });
    };

    let mode = if d.k() == 1 {
        TruncationMode::Max
    } else {
        TruncationMode::Additive
    };
    let d_t = d.truncate(params.t, &vec![0.0; n], mode)?;

    let tail_shortcut = params.w_i.iter().any(|&w| w >= params.rhat / eps);
    let (bounded_menu, bounded_objective, num_reps, delta) = if tail_shortcut {
        (SymmetricMenu::empty(n), 0.0, 0, None)
    } else {
        let t_ratio = params.t / params.rhat;
        let delta = cfg.c_delta * eps * eps / (t_ratio * d.k() as f64);
        let dparams = DiscretizationParams {
            delta,
            t: t_ratio,
            rev_proxy: params.rhat,
            k: d.k(),
            n,
        };
        let (d_disc, _coupling) = canonical_discretize(&d_t, &dparams)?;
        let w_floor = eps * params.rhat / n as f64;
        let w_disc: Vec<f64> = params
            .w_i
            .iter()
            .map(|&w| if w < w_floor { 0.0 } else { power_floor(w, delta) })
            .collect();
        let group = group_items(&d_disc, &w_disc);
        let sol = solve_modrev_with_group(&d_disc, &w_disc, &group, cfg.rep_cap, cfg.tolerance)?;
        (sol.menu, sol.objective, sol.num_reps, Some(delta))
    };

    let bounded_complexity = complexity_measures(&bounded_menu);
    let scaled = scale_prices(&bounded_menu, 1.0 - eps);
    let exclusive = make_exclusive(&scaled, params.e, eps);
    let concatenated = concat_exclusive(&exclusive, params.t, &params.r_i, eps);
    let final_menu = prune_dominated(&concatenated);
    let final_complexity = complexity_measures(&final_menu);

    let revenue = match revenue_exact(&final_menu, d, cfg.support_cap) {
        Ok(value) => RevenueMeasurement::Exact { value },
        Err(_) => {
            let (value, stderr) = revenue_mc(&final_menu, d, cfg.mc_samples, cfg.seed);
            RevenueMeasurement::Mc {
                value,
                stderr,
                samples: cfg.mc_samples,
            }
        }
    };

    let oracle_objective = match d.support_size() {
        Ok(size) if size <= cfg.oracle_cap as u128 => Some(
            brute_force_optimal(d, &vec![0.0; n], cfg.oracle_cap, cfg.tolerance)?.objective,
        ),
        _ => None,
    };
    let ratio = oracle_objective
        .filter(|&o| o > 0.0)
        .map(|o| revenue.value() / o);

    Ok(ReductionReport {
        params: Some(params),
        degenerate: false,
        tail_shortcut,
        delta,
        bounded_objective,
        num_reps,
        bounded_complexity,
        final_menu,
        final_complexity,
        revenue,
        oracle_objective,
        ratio,
        seed: cfg.seed,
    })
}
