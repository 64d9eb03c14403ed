//! One-row-per-`(scheme, θ)` phase-diagram tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremality::extremality_report;
use crate::scheme::{classify, nonuniqueness_criterion, SchemeMatrix};
use crate::solver::{solve_system, SolverConfig, SolverWarning};
use crate::special::Coupling;

/// Column names in field order.
pub const SWEEP_COLUMNS: [&str; 23] = [
    "k", "a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4", "a", "b", "c", "d", "theta", "criterion", "n_solutions",
    "family", "h", "l", "kappa_bound", "gamma_bound", "product", "verdict",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: u32,
    pub a1: u32,
    pub a2: u32,
    pub a3: u32,
    pub a4: u32,
    pub b1: u32,
    pub b2: u32,
    pub b3: u32,
    pub b4: u32,
    pub a: i32,
    pub b: i32,
    pub c: i32,
    pub d: i32,
    pub theta: f64,
    pub criterion: bool,
    pub n_solutions: usize,
    pub family: String,
    /// The non-negative solution with the largest `h + l`.
    pub h: f64,
    pub l: f64,
    pub kappa_bound: f64,
    pub gamma_bound: f64,
    pub product: f64,
    pub verdict: String,
}

/// `steps` equally spaced points from `lo` to `hi` inclusive.
pub fn theta_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo < hi && hi < 1.0) {
        return Err(Error::Domain(format!("theta grid needs 0 < lo < hi < 1, got [{lo}, {hi}]")));
    }
    if steps < 2 {
        return Err(Error::Config(format!("theta grid needs at least 2 steps, got {steps}")));
    }
    let span = hi - lo;
    Ok((0..steps).map(|i| if i + 1 == steps { hi } else { lo + span * i as f64 / (steps - 1) as f64 }).collect())
}

/// Solve, classify and certify one grid point.
pub fn sweep_row(m: &SchemeMatrix, theta: f64, cfg: &SolverConfig) -> Result<(SweepRow, Vec<SolverWarning>)> {
    let r = m.reduce();
    let sols = solve_system(&r, theta, cfg)?;
    let top = sols.largest_nonneg();
    let k = m.k();
    let rep = extremality_report(k, &Coupling::from_theta(theta)?, &top, cfg)?;
    let [a1, a2, a3, a4] = m.a_row();
    let [b1, b2, b3, b4] = m.b_row();
    let row = SweepRow {
        k,
        a1,
        a2,
        a3,
        a4,
        b1,
        b2,
        b3,
        b4,
        a: r.a,
        b: r.b,
        c: r.c,
        d: r.d,
        theta,
        criterion: nonuniqueness_criterion(&r, theta),
        n_solutions: sols.len(),
        family: classify(m, &top).to_string(),
        h: top.h,
        l: top.l,
        kappa_bound: rep.kappa_bound,
        gamma_bound: rep.gamma_bound,
        product: rep.product,
        verdict: rep.verdict.to_string(),
    };
    Ok((row, sols.warnings().to_vec()))
}

/// Rows for every scheme and θ, scheme-major, computed in parallel on the
/// current rayon pool. Output order does not depend on the pool size.
pub fn sweep_rows(
    schemes: &[SchemeMatrix],
    thetas: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<(SweepRow, Vec<SolverWarning>)>> {
    cfg.validate()?;
    let points: Vec<(SchemeMatrix, f64)> =
        schemes.iter().flat_map(|m| thetas.iter().map(move |&t| (*m, t))).collect();
    points.par_iter().map(|(m, t)| sweep_row(m, *t, cfg)).collect()
}
