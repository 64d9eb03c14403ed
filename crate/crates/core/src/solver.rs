//! Solutions `(h, l)` of the two-field fixed-point system
//!
//! ```text
//! h = a·f(h) + b·f(l)
//! l = c·f(h) + d·f(l)
//! ```
//!
//! The system is reduced to a single scalar equation in one of four ways,
//! depending on which of `a`, `b` vanish, and that equation is solved by a
//! uniform grid scan followed by bisection. Every reduced equation except the
//! shifted one of [`solve_case_b0`] is odd, so only the positive half-line is
//! scanned and roots are reflected.
//!
//! The scan isolates roots by sign changes. Tangential roots are recovered by
//! refining local minima of `|F|` between grid points; when such a minimum
//! comes close to zero without reaching the residual tolerance the result
//! carries a [`SolverWarning::NearTangency`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::ReducedParams;
use crate::special::Kernel;

/// Local minima of `|F|` below this (but above the residual tolerance) are
/// reported as possible missed tangential roots.
pub const NEAR_TANGENCY_TOL: f64 = 1e-6;

/// One solution of the fixed-point system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPair {
    pub h: f64,
    pub l: f64,
}

impl FieldPair {
    pub const ZERO: FieldPair = FieldPair { h: 0.0, l: 0.0 };

    pub const fn new(h: f64, l: f64) -> Self {
        Self { h, l }
    }

    pub fn negated(&self) -> Self {
        Self::new(-self.h, -self.l)
    }

    pub fn dist_inf(&self, other: &FieldPair) -> f64 {
        (self.h - other.h).abs().max((self.l - other.l).abs())
    }

    pub fn norm_inf(&self) -> f64 {
        self.h.abs().max(self.l.abs())
    }
}

impl fmt::Display for FieldPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(h={}, l={})", self.h, self.l)
    }
}

/// Interval scanned for roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScanRange {
    /// `[−B − margin, B + margin]` where `B` is the a priori bound
    /// `(|coef| + |coef|)·arctanh|θ|` of the equation being solved.
    Auto { margin: f64 },
    Fixed { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scan: ScanRange,
    pub grid_points: usize,
    pub bisect_tol: f64,
    pub residual_tol: f64,
    pub dedup_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scan: ScanRange::Auto { margin: 0.5 },
            grid_points: 4096,
            bisect_tol: 1e-12,
            residual_tol: 1e-9,
            dedup_tol: 1e-7,
            max_iter: 200,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self.scan {
            ScanRange::Auto { margin } if !(margin >= 0.0 && margin.is_finite()) => {
                return bad(format!("scan margin must be finite and >= 0, got {margin}"))
            }
            ScanRange::Fixed { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => {
                return bad(format!("scan interval [{lo}, {hi}] is empty or not finite"))
            }
            _ => {}
        }
        if self.grid_points < 64 {
            return bad(format!("grid_points must be >= 64, got {}", self.grid_points));
        }
        for (name, v) in [
            ("bisect_tol", self.bisect_tol),
            ("residual_tol", self.residual_tol),
            ("dedup_tol", self.dedup_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1".into());
        }
        Ok(())
    }

    /// Upper end of the positive half-line scan for an odd equation whose
    /// roots are bounded by `bound`.
    fn half_hi(&self, bound: f64) -> f64 {
        match self.scan {
            ScanRange::Auto { margin } => bound + margin,
            ScanRange::Fixed { hi, .. } => hi,
        }
    }

    fn full_range(&self, bound: f64) -> (f64, f64) {
        match self.scan {
            ScanRange::Auto { margin } => (-bound - margin, bound + margin),
            ScanRange::Fixed { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverWarning {
    /// A double root found by minimizing `|F|`; no sign change brackets it.
    BoundaryDegenerate { at: f64, residual: f64 },
    /// `|F|` dips to `min_abs` near `at` without reaching zero; a pair of
    /// roots may have been missed at the current grid density.
    NearTangency { at: f64, min_abs: f64 },
    /// A bracketed root whose back-substituted pair failed the residual check.
    ResidualRejected { h: f64, l: f64, residual: f64 },
}

impl fmt::Display for SolverWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BoundaryDegenerate { at, residual } => {
                write!(f, "boundary-degenerate double root at {at} (|F| = {residual:e})")
            }
            Self::NearTangency { at, min_abs } => {
                write!(f, "near-tangency at {at}: min |F| = {min_abs:e}, roots may be missed")
            }
            Self::ResidualRejected { h, l, residual } => {
                write!(f, "rejected candidate (h={h}, l={l}) with residual {residual:e}")
            }
        }
    }
}

/// Deduplicated, negation-closed set of solutions containing `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    params: ReducedParams,
    theta: f64,
    solutions: Vec<FieldPair>,
    residuals: Vec<f64>,
    residual_tol: f64,
    dedup_tol: f64,
    grid_points: usize,
    warnings: Vec<SolverWarning>,
}

impl SolutionSet {
    fn trivial(params: ReducedParams, theta: f64, cfg: &SolverConfig) -> Self {
        Self {
            params,
            theta,
            solutions: vec![FieldPair::ZERO],
            residuals: vec![0.0],
            residual_tol: cfg.residual_tol,
            dedup_tol: cfg.dedup_tol,
            grid_points: cfg.grid_points,
            warnings: Vec::new(),
        }
    }

    /// Verify, canonicalize, deduplicate and close `candidates` under negation.
    fn assemble(
        params: ReducedParams,
        kernel: &Kernel,
        candidates: impl IntoIterator<Item = FieldPair>,
        cfg: &SolverConfig,
        mut warnings: Vec<SolverWarning>,
    ) -> Self {
        // one representative per ± pair: the lexicographically positive one
        let mut reps: Vec<FieldPair> = Vec::new();
        for p in candidates {
            if !(p.h.is_finite() && p.l.is_finite()) || p.norm_inf() < cfg.dedup_tol {
                continue;
            }
            let p = snap_to_zero(&params, kernel, p, cfg);
            let res = system_residual(&params, kernel, &p);
            if !(res < cfg.residual_tol) {
                warnings.push(SolverWarning::ResidualRejected { h: p.h, l: p.l, residual: res });
                continue;
            }
            let p = if (p.h, p.l) > (0.0, 0.0) { p } else { p.negated() };
            if reps.iter().all(|q| q.dist_inf(&p) >= cfg.dedup_tol) {
                reps.push(p);
            }
        }

        let mut solutions = Vec::with_capacity(2 * reps.len() + 1);
        solutions.push(FieldPair::ZERO);
        for p in reps {
            solutions.push(p);
            solutions.push(p.negated());
        }
        solutions.sort_by(|x, y| x.h.total_cmp(&y.h).then(x.l.total_cmp(&y.l)));
        let residuals = solutions.iter().map(|p| system_residual(&params, kernel, p)).collect();

        Self {
            params,
            theta: kernel.theta(),
            solutions,
            residuals,
            residual_tol: cfg.residual_tol,
            dedup_tol: cfg.dedup_tol,
            grid_points: cfg.grid_points,
            warnings,
        }
    }

    pub fn params(&self) -> ReducedParams {
        self.params
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Solutions sorted by `h`, then `l`.
    pub fn solutions(&self) -> &[FieldPair] {
        &self.solutions
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn iter_with_residuals(&self) -> impl Iterator<Item = (FieldPair, f64)> + '_ {
        self.solutions.iter().copied().zip(self.residuals.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn residual_tol(&self) -> f64 {
        self.residual_tol
    }

    pub fn dedup_tol(&self) -> f64 {
        self.dedup_tol
    }

    /// Grid density the roots were isolated at.
    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn warnings(&self) -> &[SolverWarning] {
        &self.warnings
    }

    pub fn contains(&self, p: &FieldPair, tol: f64) -> bool {
        self.solutions.iter().any(|q| q.dist_inf(p) < tol)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Solutions with `h > 0` and `l > 0`.
    pub fn fully_positive(&self) -> impl Iterator<Item = FieldPair> + '_ {
        self.solutions.iter().copied().filter(|p| p.h > 0.0 && p.l > 0.0)
    }

    /// The non-negative solution with the largest `h + l`; `(0, 0)` if
    /// there is no other.
    pub fn largest_nonneg(&self) -> FieldPair {
        self.solutions
            .iter()
            .copied()
            .filter(|p| p.h >= 0.0 && p.l >= 0.0)
            .max_by(|x, y| (x.h + x.l).total_cmp(&(y.h + y.l)).then(x.h.total_cmp(&y.h)))
            .unwrap_or(FieldPair::ZERO)
    }
}

/// Components below `bisect_tol` are roots at zero polished into float
/// noise; set them to exactly 0 unless that worsens the residual past tolerance.
fn snap_to_zero(params: &ReducedParams, kernel: &Kernel, p: FieldPair, cfg: &SolverConfig) -> FieldPair {
    let snap = |x: f64| if x.abs() < cfg.bisect_tol { 0.0 } else { x };
    let q = FieldPair::new(snap(p.h), snap(p.l));
    if q != p && system_residual(params, kernel, &q) < cfg.residual_tol {
        q
    } else {
        p
    }
}

/// `max(|h − a f(h) − b f(l)|, |l − c f(h) − d f(l)|)`.
pub fn system_residual(r: &ReducedParams, kernel: &Kernel, p: &FieldPair) -> f64 {
    let (fh, fl) = (kernel.f(p.h), kernel.f(p.l));
    let e1 = p.h - r.a as f64 * fh - r.b as f64 * fl;
    let e2 = p.l - r.c as f64 * fh - r.d as f64 * fl;
    e1.abs().max(e2.abs())
}

/// `g(l) = c·f(b·f(l)) + d·f(l)`, the reduced map when `a = 0`.
pub fn g_case_a0(r: &ReducedParams, kernel: &Kernel, l: f64) -> f64 {
    let fl = kernel.f(l);
    r.c as f64 * kernel.f(r.b as f64 * fl) + r.d as f64 * fl
}

/// `φ(h) = [(bc − ad)·f(h) + d·h] / b`, giving `l` from `h` when `b ≠ 0`.
pub fn phi(r: &ReducedParams, kernel: &Kernel, h: f64) -> f64 {
    let det = (r.b * r.c - r.a * r.d) as f64;
    (det * kernel.f(h) + r.d as f64 * h) / r.b as f64
}

/// `ψ(h) = a·f(h) + b·f(φ(h))`, the reduced map when `b ≠ 0`.
pub fn psi(r: &ReducedParams, kernel: &Kernel, h: f64) -> f64 {
    r.a as f64 * kernel.f(h) + r.b as f64 * kernel.f(phi(r, kernel, h))
}

/// `max_{l ≥ 0} [d·f(l) − l]`.
///
/// When `d·θ > 1` the maximizer solves `d·f'(l) = 1`, which has the closed
/// form `tanh² l = (dθ − 1) / (θ(d − θ))`; otherwise the maximum is 0 at `l = 0`.
pub fn h_bar(d: i32, kernel: &Kernel) -> f64 {
    let theta = kernel.theta();
    let m = d as f64;
    if m * theta <= 1.0 {
        return 0.0;
    }
    // m·θ > 1 forces m and θ to share a sign; f is odd in θ so use |m|, |θ|
    let (m, t) = (m.abs(), theta.abs());
    let t2 = (m * t - 1.0) / (t * (m - t));
    let l_star = t2.sqrt().atanh();
    (m * kernel.f(l_star) - l_star).max(0.0)
}

/// Number of roots of `l = s + d·f(l)` predicted by comparing `|s|` with
/// [`h_bar`]: three below, two at equality (when positive), one above.
pub fn predicted_shifted_root_count(shift: f64, d: i32, kernel: &Kernel) -> usize {
    let hb = h_bar(d, kernel);
    let s = shift.abs();
    if s > hb || (s == 0.0 && hb == 0.0) {
        1
    } else if s == hb {
        2
    } else {
        3
    }
}

fn bisect(
    func: &impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    sign_lo: f64,
    cfg: &SolverConfig,
) -> f64 {
    let mut iters = 0;
    while hi - lo > cfg.bisect_tol && iters < cfg.max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = func(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    // polish to floating-point resolution so downstream residuals sit far
    // below the exact-oracle tolerances
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = func(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimize `sign·F` on `[lo, hi]` by golden-section search.
fn golden_min(func: &impl Fn(f64) -> f64, sign: f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let obj = |x: f64| sign * func(x);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (obj(x1), obj(x2));
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = obj(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = obj(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, func(x))
}

/// Every root of `func` on `[lo, hi]` isolated by a sign change on a uniform
/// grid of `cfg.grid_points` points, refined by bisection. Grid points where
/// `func` is exactly zero are roots too.
///
/// Tangential roots without a sign change are found only when a grid point
/// lands on them.
pub fn find_roots_1d(func: impl Fn(f64) -> f64, lo: f64, hi: f64, cfg: &SolverConfig) -> Vec<f64> {
    let mut warnings = Vec::new();
    scan(&func, lo, hi, None, false, cfg, &mut warnings)
}

/// Grid scan on `[lo, hi]`.
///
/// `sign_at_lo` overrides the sign of `func(lo)`; odd equations pass the sign
/// of `F'(0)` there since `F(0) = 0` carries no information. With `touch`
/// set, local minima of `|F|` are refined to pick up double roots and close
/// root pairs the grid straddles.
fn scan(
    func: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    sign_at_lo: Option<f64>,
    touch: bool,
    cfg: &SolverConfig,
    warnings: &mut Vec<SolverWarning>,
) -> Vec<f64> {
    let n = cfg.grid_points.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect();
    let mut fs: Vec<f64> = xs.iter().map(|&x| func(x)).collect();
    let mut roots = Vec::new();

    match sign_at_lo {
        Some(s) => fs[0] = s,
        None if fs[0] == 0.0 => roots.push(xs[0]),
        None => {}
    }

    for i in 1..n {
        let (f0, f1) = (fs[i - 1], fs[i]);
        if f1 == 0.0 {
            roots.push(xs[i]);
        } else if f0 != 0.0 && f0.signum() != f1.signum() {
            roots.push(bisect(func, xs[i - 1], xs[i], f0.signum(), cfg));
        }
    }

    if touch {
        // a virtual sign at lo is not a magnitude, so fs[1] is no minimum
        let first = if sign_at_lo.is_some() { 2 } else { 1 };
        for i in first..n - 1 {
            let (f0, f1, f2) = (fs[i - 1], fs[i], fs[i + 1]);
            let same_sign = f0 != 0.0 && f1 != 0.0 && f2 != 0.0 && f0.signum() == f1.signum() && f1.signum() == f2.signum();
            if !(same_sign && f1.abs() < f0.abs() && f1.abs() <= f2.abs()) {
                continue;
            }
            let s = f1.signum();
            let (xm, fm) = golden_min(func, s, xs[i - 1], xs[i + 1], cfg.bisect_tol);
            if fm.signum() != s && fm != 0.0 {
                // the dip crosses zero between grid points: two roots
                roots.push(bisect(func, xs[i - 1], xm, s, cfg));
                roots.push(bisect(func, xm, xs[i + 1], -s, cfg));
            } else if fm.abs() < cfg.residual_tol {
                roots.push(xm);
                warnings.push(SolverWarning::BoundaryDegenerate { at: xm, residual: fm.abs() });
            } else if fm.abs() < NEAR_TANGENCY_TOL {
                warnings.push(SolverWarning::NearTangency { at: xm, min_abs: fm.abs() });
            }
        }
    }

    roots.sort_by(f64::total_cmp);
    roots
}

/// Positive roots of an odd `F` with `F(0) = 0` and `F'(0) = slope0`.
fn odd_positive_roots(
    func: &impl Fn(f64) -> f64,
    hi: f64,
    slope0: f64,
    cfg: &SolverConfig,
    warnings: &mut Vec<SolverWarning>,
) -> Vec<f64> {
    if hi <= 0.0 {
        return Vec::new();
    }
    let sign0 = if slope0 == 0.0 { 0.0 } else { slope0.signum() };
    scan(func, 0.0, hi, Some(sign0), true, cfg, warnings)
        .into_iter()
        .filter(|&x| x >= cfg.dedup_tol)
        .collect()
}

fn a_priori_bound(c1: i32, c2: i32, kernel: &Kernel) -> f64 {
    (c1.unsigned_abs() + c2.unsigned_abs()) as f64 * kernel.saturation().abs()
}

/// Roots of `h = m·f_θ(h)` for `m ≥ 1`, `0 < θ < 1`: `{0}` when `θ ≤ 1/m`,
/// otherwise `{−h*, 0, h*}`. Sorted ascending.
pub fn solve_scalar(m: u32, theta: f64, cfg: &SolverConfig) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Domain("scalar equation needs m >= 1".into()));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("scalar equation needs 0 < theta < 1, got {theta}")));
    }
    cfg.validate()?;
    let kernel = Kernel::new(theta)?;
    let bound = m as f64 * kernel.saturation();
    if let ScanRange::Fixed { lo, hi } = cfg.scan {
        if lo > -bound || hi < bound {
            return Err(Error::Config(format!(
                "scan interval [{lo}, {hi}] does not cover [-{bound}, {bound}]"
            )));
        }
    }
    let mut warnings = Vec::new();
    Ok(signed_scalar_roots(m as i32, &kernel, cfg, &mut warnings))
}

/// Roots of `x = m·f_θ(x)` for any integer `m` and any `θ`. Only
/// `m·θ > 0` can produce non-zero roots (`f` is odd in θ).
fn signed_scalar_roots(m: i32, kernel: &Kernel, cfg: &SolverConfig, warnings: &mut Vec<SolverWarning>) -> Vec<f64> {
    let mf = m as f64;
    let theta = kernel.theta();
    if m == 0 || mf * theta <= 0.0 {
        return vec![0.0];
    }
    let func = |x: f64| x - mf * kernel.f(x);
    let hi = cfg.half_hi(mf.abs() * kernel.saturation().abs());
    let pos = odd_positive_roots(&func, hi, 1.0 - mf * theta, cfg, warnings);
    let mut roots: Vec<f64> = pos.iter().map(|x| -x).collect();
    roots.push(0.0);
    roots.extend(pos);
    roots.sort_by(f64::total_cmp);
    roots
}

fn check_theta(theta: f64) -> Result<Kernel> {
    if !(theta.abs() < 1.0) {
        return Err(Error::Domain(format!("theta must lie in (-1, 1), got {theta}")));
    }
    Kernel::new(theta)
}

/// `a = b = 0`: `h = 0` and `l = d·f(l)`.
pub fn solve_case_a0_b0(r: &ReducedParams, theta: f64, cfg: &SolverConfig) -> Result<SolutionSet> {
    if r.a != 0 || r.b != 0 {
        return Err(Error::Domain(format!("case a=b=0 called with {r}")));
    }
    cfg.validate()?;
    let kernel = check_theta(theta)?;
    let mut warnings = Vec::new();
    let ls = signed_scalar_roots(r.d, &kernel, cfg, &mut warnings);
    let cands: Vec<_> = ls.into_iter().map(|l| FieldPair::new(0.0, l)).collect();
    Ok(SolutionSet::assemble(*r, &kernel, cands, cfg, warnings))
}

/// `a = 0, b ≠ 0`: `l = g(l)` with `h = b·f(l)` back-substituted.
pub fn solve_case_a0(r: &ReducedParams, theta: f64, cfg: &SolverConfig) -> Result<SolutionSet> {
    if r.a != 0 || r.b == 0 {
        return Err(Error::Domain(format!("case a=0, b!=0 called with {r}")));
    }
    cfg.validate()?;
    let kernel = check_theta(theta)?;
    let mut warnings = Vec::new();
    let func = |l: f64| l - g_case_a0(r, &kernel, l);
    let slope0 = 1.0 - (r.b as f64 * r.c as f64 * theta * theta + r.d as f64 * theta);
    let hi = cfg.half_hi(a_priori_bound(r.c, r.d, &kernel));
    let ls = odd_positive_roots(&func, hi, slope0, cfg, &mut warnings);
    let cands: Vec<_> = ls.into_iter().map(|l| FieldPair::new(r.b as f64 * kernel.f(l), l)).collect();
    Ok(SolutionSet::assemble(*r, &kernel, cands, cfg, warnings))
}

/// `a ≠ 0, b = 0`: `h = a·f(h)`, then `l = c·f(h) + d·f(l)` on each `h` branch.
///
/// On the `h = ±h*` branches the `l`-equation is shifted by `±c·f(h*)` and
/// has one, two or three roots according to [`predicted_shifted_root_count`].
pub fn solve_case_b0(r: &ReducedParams, theta: f64, cfg: &SolverConfig) -> Result<SolutionSet> {
    if r.a == 0 || r.b != 0 {
        return Err(Error::Domain(format!("case a!=0, b=0 called with {r}")));
    }
    cfg.validate()?;
    let kernel = check_theta(theta)?;
    let mut warnings = Vec::new();
    let hs = signed_scalar_roots(r.a, &kernel, cfg, &mut warnings);
    let mut cands = Vec::new();
    let l_bound = a_priori_bound(r.c, r.d, &kernel);
    let (lo, hi) = cfg.full_range(l_bound);
    for h in hs.into_iter().filter(|&h| h >= 0.0) {
        if h == 0.0 {
            for l in signed_scalar_roots(r.d, &kernel, cfg, &mut warnings) {
                cands.push(FieldPair::new(0.0, l));
            }
        } else {
            let shift = r.c as f64 * kernel.f(h);
            let func = |l: f64| l - shift - r.d as f64 * kernel.f(l);
            for l in scan(&func, lo, hi, None, true, cfg, &mut warnings) {
                cands.push(FieldPair::new(h, l));
            }
        }
    }
    Ok(SolutionSet::assemble(*r, &kernel, cands, cfg, warnings))
}

/// `a ≠ 0, b ≠ 0`: `h = ψ(h)` with `l = φ(h)`. Each back-substituted pair
/// is re-checked against both original equations.
pub fn solve_case_general(r: &ReducedParams, theta: f64, cfg: &SolverConfig) -> Result<SolutionSet> {
    if r.a == 0 || r.b == 0 {
        return Err(Error::Domain(format!("case a!=0, b!=0 called with {r}")));
    }
    cfg.validate()?;
    let kernel = check_theta(theta)?;
    let mut warnings = Vec::new();
    let func = |h: f64| h - psi(r, &kernel, h);
    let slope0 = 1.0 - r.criterion_value(theta);
    let hi = cfg.half_hi(a_priori_bound(r.a, r.b, &kernel));
    let hs = odd_positive_roots(&func, hi, slope0, cfg, &mut warnings);
    let cands: Vec<_> = hs.into_iter().map(|h| FieldPair::new(h, phi(r, &kernel, h))).collect();
    Ok(SolutionSet::assemble(*r, &kernel, cands, cfg, warnings))
}

/// All solutions of the system for parameters `r` at `θ`.
///
/// Negative `θ` is mapped to `|θ|` with all four parameters negated, which
/// leaves the system unchanged because `f_{−θ} = −f_θ`.
pub fn solve_system(r: &ReducedParams, theta: f64, cfg: &SolverConfig) -> Result<SolutionSet> {
    cfg.validate()?;
    let kernel = check_theta(theta)?;
    if theta == 0.0 || r.is_zero() {
        return Ok(SolutionSet::trivial(*r, theta, cfg));
    }
    if theta < 0.0 {
        let flipped = solve_system(&r.negated(), -theta, cfg)?;
        let cands = flipped.solutions().to_vec();
        let warnings = flipped.warnings().to_vec();
        return Ok(SolutionSet::assemble(*r, &kernel, cands, cfg, warnings));
    }
    match (r.a == 0, r.b == 0) {
        (true, true) => solve_case_a0_b0(r, theta, cfg),
        (true, false) => solve_case_a0(r, theta, cfg),
        (false, true) => solve_case_b0(r, theta, cfg),
        (false, false) => solve_case_general(r, theta, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{nonuniqueness_criterion, realizable_reduced};

    // 40-digit mpmath roots of h = m·f_θ(h)
    const H_STAR_2_08: f64 = 2.063_437_068_895_560_5;
    const H_STAR_3_08: f64 = 3.276_965_687_407_663;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn rp(a: i32, b: i32, c: i32, d: i32) -> ReducedParams {
        ReducedParams::new(a, b, c, d)
    }

    /// Independent plain bisection on [lo, hi], used as an oracle.
    fn oracle_bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn scalar_bifurcation() {
        assert_eq!(solve_scalar(2, 0.4, &cfg()).unwrap(), vec![0.0]);
        let r = solve_scalar(2, 0.8, &cfg()).unwrap();
        assert_eq!(r.len(), 3);
        assert!((r[2] - H_STAR_2_08).abs() < 1e-12);
        assert_eq!(r[0], -r[2]);
        assert_eq!(r[1], 0.0);
        let k = Kernel::new(0.8).unwrap();
        let bis = oracle_bisect(|x| x - 2.0 * k.f(x), 1e-3, 2.0 * k.saturation());
        assert!((r[2] - bis).abs() < 1e-9);
        assert_eq!(solve_scalar(1, 0.9, &cfg()).unwrap(), vec![0.0]);
        let r3 = solve_scalar(3, 0.8, &cfg()).unwrap();
        assert!((r3[2] - H_STAR_3_08).abs() < 1e-12);
    }

    #[test]
    fn scalar_rejects_bad_input() {
        assert!(solve_scalar(0, 0.5, &cfg()).is_err());
        assert!(solve_scalar(2, 0.0, &cfg()).is_err());
        assert!(solve_scalar(2, 1.0, &cfg()).is_err());
        let narrow = SolverConfig { scan: ScanRange::Fixed { lo: -1.0, hi: 1.0 }, ..cfg() };
        assert!(matches!(solve_scalar(2, 0.8, &narrow), Err(Error::Config(_))));
        let wide = SolverConfig { scan: ScanRange::Fixed { lo: -5.0, hi: 5.0 }, ..cfg() };
        assert_eq!(solve_scalar(2, 0.8, &wide).unwrap().len(), 3);
        let coarse = SolverConfig { grid_points: 10, ..cfg() };
        assert!(matches!(solve_scalar(2, 0.8, &coarse), Err(Error::Config(_))));
    }

    #[test]
    fn find_roots_examples() {
        assert_eq!(find_roots_1d(|x| x, -1.0, 1.0, &cfg()), vec![0.0]);
        assert!(find_roots_1d(|x| x * x + 1.0, -1.0, 1.0, &cfg()).is_empty());
        let k = Kernel::new(0.8).unwrap();
        let r = find_roots_1d(|x| x - 2.0 * k.f(x), 1e-6, 3.0, &cfg());
        assert_eq!(r.len(), 1);
        assert!((r[0] - H_STAR_2_08).abs() < 1e-10);
        // tangential root missed without a grid hit
        assert!(find_roots_1d(|x| (x - 0.123_456).powi(2), -1.0, 1.0, &cfg()).is_empty());
    }

    #[test]
    fn case_a0_b0() {
        let s = solve_case_a0_b0(&rp(0, 0, 0, 0), 0.9, &cfg()).unwrap();
        assert_eq!(s.solutions(), &[FieldPair::ZERO]);
        let s = solve_case_a0_b0(&rp(0, 0, 1, 2), 0.8, &cfg()).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.contains(&FieldPair::new(0.0, H_STAR_2_08), 1e-10));
        assert!(s.contains(&FieldPair::new(0.0, -H_STAR_2_08), 1e-10));
        assert_eq!(solve_case_a0_b0(&rp(0, 0, 0, 2), 0.3, &cfg()).unwrap().len(), 1);
        // negative d never bifurcates for θ > 0
        assert_eq!(solve_case_a0_b0(&rp(0, 0, 0, -2), 0.9, &cfg()).unwrap().len(), 1);
        assert!(solve_case_a0_b0(&rp(1, 0, 0, 0), 0.5, &cfg()).is_err());
    }

    #[test]
    fn case_a0() {
        let r = rp(0, 2, 2, 0);
        let s = solve_case_a0(&r, 0.6, &cfg()).unwrap();
        assert!(s.len() >= 3);
        assert!(s.fully_positive().count() >= 1);
        for p in s.solutions() {
            assert!(s.solutions().contains(&p.negated()));
        }
        assert_eq!(solve_case_a0(&rp(0, 2, 0, 0), 0.9, &cfg()).unwrap().len(), 1);
        assert!(solve_case_a0(&rp(1, 1, 0, 0), 0.5, &cfg()).is_err());
    }

    #[test]
    fn case_a0_matches_monotone_iteration() {
        let r = rp(0, 2, 2, 0);
        let k = Kernel::new(0.6).unwrap();
        let mut l: f64 = 1e-3;
        for _ in 0..10_000 {
            let next = g_case_a0(&r, &k, l);
            assert!(next >= l - 1e-15, "iterates must increase");
            l = next;
        }
        let s = solve_case_a0(&r, 0.6, &cfg()).unwrap();
        assert!(s.contains(&FieldPair::new(r.b as f64 * k.f(l), l), 1e-9));
    }

    #[test]
    fn case_b0_decoupled_and_explicit() {
        let s = solve_case_b0(&rp(2, 0, 0, 2), 0.8, &cfg()).unwrap();
        assert_eq!(s.len(), 9);
        for h in [-H_STAR_2_08, 0.0, H_STAR_2_08] {
            for l in [-H_STAR_2_08, 0.0, H_STAR_2_08] {
                assert!(s.contains(&FieldPair::new(h, l), 1e-10), "missing ({h}, {l})");
            }
        }
        let s = solve_case_b0(&rp(2, 0, 1, 0), 0.8, &cfg()).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.contains(&FieldPair::new(H_STAR_2_08, 0.5 * H_STAR_2_08), 1e-10));
        assert_eq!(solve_case_b0(&rp(2, 0, 0, 2), 0.3, &cfg()).unwrap().len(), 1);
    }

    #[test]
    fn case_b0_branch_counts_follow_h_bar() {
        // a = 3 gives h*, then l = ±c f(h*) + d f(l) for several (c, d)
        for theta in [0.4, 0.5, 0.6, 0.7, 0.8, 0.9] {
            let k = Kernel::new(theta).unwrap();
            for (c, d) in [(0, 3), (1, 2), (2, 1), (0, 2), (1, 3), (-1, 2), (3, 0)] {
                let r = rp(3, 0, c, d);
                let s = solve_case_b0(&r, theta, &cfg()).unwrap();
                let hs = solve_scalar(3, theta, &cfg()).unwrap();
                let h_star = hs[hs.len() - 1];
                if h_star == 0.0 {
                    continue;
                }
                let expected = predicted_shifted_root_count(c as f64 * k.f(h_star), d, &k);
                let on_branch = s.solutions().iter().filter(|p| (p.h - h_star).abs() < 1e-9).count();
                assert_eq!(on_branch, expected, "theta={theta} r={r}");
            }
        }
    }

    #[test]
    fn h_bar_matches_numeric_maximization() {
        for theta in [0.3, 0.5, 0.7, 0.9] {
            let k = Kernel::new(theta).unwrap();
            for d in 1..=4 {
                let brute = (0..=200_000)
                    .map(|i| i as f64 * 1e-4)
                    .map(|l| d as f64 * k.f(l) - l)
                    .fold(0.0f64, f64::max);
                assert!((h_bar(d, &k) - brute).abs() < 1e-8, "theta={theta} d={d}");
            }
            assert_eq!(h_bar(-2, &k), 0.0);
        }
    }

    #[test]
    fn degenerate_double_root_is_flagged() {
        // tune the shift so l = s + 2 f(l) sits exactly at the two-root boundary
        let theta = 0.8;
        let k = Kernel::new(theta).unwrap();
        let hb = h_bar(2, &k);
        let func = |l: f64| l - hb - 2.0 * k.f(l);
        let mut w = Vec::new();
        let roots = scan(&func, -4.0, 4.0, None, true, &cfg(), &mut w);
        assert_eq!(predicted_shifted_root_count(hb, 2, &k), 2);
        assert_eq!(roots.len(), 2, "{roots:?}");
        assert!(w.iter().any(|w| matches!(w, SolverWarning::BoundaryDegenerate { .. })));
    }

    #[test]
    fn close_root_pair_between_grid_points() {
        let f = |x: f64| (x - 0.3) * (x - 0.3 - 1e-5);
        let mut w = Vec::new();
        let coarse = SolverConfig { grid_points: 64, ..cfg() };
        let roots = scan(&f, -1.0, 1.0, None, true, &coarse, &mut w);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - 0.3).abs() < 1e-10 && (roots[1] - 0.30001).abs() < 1e-10);
    }

    #[test]
    fn general_case_examples() {
        let s = solve_case_general(&rp(1, 1, 1, 1), 0.8, &cfg()).unwrap();
        assert!(s.contains(&FieldPair::new(H_STAR_2_08, H_STAR_2_08), 1e-10));
        assert!(s.contains(&FieldPair::new(-H_STAR_2_08, -H_STAR_2_08), 1e-10));

        let r = rp(1, -1, 0, 0);
        // criterion value is θ, never above 1: l = 0 and h = f(h) force h = 0
        assert!(!nonuniqueness_criterion(&r, 0.95));
        assert_eq!(solve_case_general(&r, 0.95, &cfg()).unwrap().len(), 1);
        assert!(solve_case_general(&rp(1, 0, 0, 0), 0.6, &cfg()).is_err());
    }

    #[test]
    fn psi_slope_at_zero_matches_criterion_value() {
        for r in realizable_reduced(3) {
            if r.b == 0 {
                continue;
            }
            for theta in [0.2, 0.5, 0.85] {
                let k = Kernel::new(theta).unwrap();
                let step = 1e-6;
                let fd = (psi(&r, &k, step) - psi(&r, &k, -step)) / (2.0 * step);
                assert!((fd - r.criterion_value(theta)).abs() < 1e-6, "r={r} theta={theta}");
            }
        }
    }

    #[test]
    fn system_examples() {
        assert_eq!(solve_system(&rp(0, 0, 0, 0), 0.9, &cfg()).unwrap().len(), 1);
        assert_eq!(solve_system(&rp(2, 0, 0, 2), 0.8, &cfg()).unwrap().len(), 9);
        assert!(solve_system(&rp(0, 2, 2, 0), 0.6, &cfg()).unwrap().len() >= 3);
        assert_eq!(solve_system(&rp(2, 1, 1, 1), 0.0, &cfg()).unwrap().len(), 1);
        assert!(solve_system(&rp(2, 1, 1, 1), 1.0, &cfg()).is_err());
    }

    #[test]
    fn negative_theta_uses_parameter_negation() {
        // two-periodic pattern a = −k bifurcates for θ < −1/k
        let r = rp(-2, 0, 0, -2);
        assert_eq!(solve_system(&r, 0.8, &cfg()).unwrap().len(), 1);
        let s = solve_system(&r, -0.8, &cfg()).unwrap();
        assert_eq!(s.len(), 9);
        assert!(s.max_residual() < 1e-12);
        let k = Kernel::new(-0.8).unwrap();
        for p in s.solutions() {
            assert!(system_residual(&r, &k, p) < 1e-12);
        }
    }

    #[test]
    fn every_solution_is_verified_and_closed() {
        for r in realizable_reduced(2) {
            for theta in [0.3, 0.6, 0.8, 0.95, -0.7] {
                let s = solve_system(&r, theta, &cfg()).unwrap();
                assert!(s.contains(&FieldPair::ZERO, 1e-300));
                assert!(s.max_residual() < 1e-9, "r={r} theta={theta}");
                for (i, p) in s.solutions().iter().enumerate() {
                    assert!(s.solutions().contains(&p.negated()));
                    for q in &s.solutions()[i + 1..] {
                        assert!(p.dist_inf(q) >= s.dedup_tol());
                    }
                }
            }
        }
    }

    #[test]
    fn roots_respect_a_priori_bound() {
        for r in realizable_reduced(3) {
            let theta = 0.9;
            let k = Kernel::new(theta).unwrap();
            let s = solve_system(&r, theta, &cfg()).unwrap();
            for p in s.solutions() {
                assert!(p.h.abs() <= a_priori_bound(r.a, r.b, &k) + 1e-12);
                assert!(p.l.abs() <= a_priori_bound(r.c, r.d, &k) + 1e-12);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(SolverConfig { grid_points: 63, ..cfg() }.validate().is_err());
        assert!(SolverConfig { residual_tol: 0.0, ..cfg() }.validate().is_err());
        assert!(SolverConfig { scan: ScanRange::Fixed { lo: 1.0, hi: 1.0 }, ..cfg() }.validate().is_err());
        assert!(SolverConfig { scan: ScanRange::Auto { margin: -1.0 }, ..cfg() }.validate().is_err());
    }
}
