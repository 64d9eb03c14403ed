//! The `k·κ·γ < 1` extremality certificate.
//!
//! `κ` and `γ` bound disagreement percolation down and up the tree. Both are
//! at most `K_β(1) = θ`; `κ` is at most `max K_β(R_z)` over the four values
//! `R_z ∈ {e^{±2h}, e^{±2l}}` of the single-site ratio.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::SchemeMatrix;
use crate::solver::{solve_scalar, FieldPair, SolverConfig};
use crate::special::{big_f_unchecked, k_beta, Coupling};

/// Relative slack when comparing a solved field with the translation-invariant
/// root `h*`.
const H_STAR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ExtremeCertified,
    /// The certificate did not fire. This is not a claim of non-extremality.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ExtremeCertified => "extreme_certified",
            Self::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaMethod {
    GenericKBeta,
    RefinedOverK,
}

impl KappaMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GenericKBeta => "generic_k_beta",
            Self::RefinedOverK => "refined_over_k",
        }
    }
}

impl fmt::Display for KappaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalityReport {
    pub kappa_bound: f64,
    pub gamma_bound: f64,
    /// `k·κ·γ`.
    pub product: f64,
    pub verdict: Verdict,
    pub method: KappaMethod,
}

impl ExtremalityReport {
    pub fn with_method(mut self, method: KappaMethod) -> Self {
        self.method = method;
        self
    }
}

/// Which `α` enters the Möbius map `F(x) = (α + x)/(1 + αx)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaConvention {
    /// `α = e^{−2βJ}`; the only choice with `F(e^{2h}) = e^{2f_θ(h)}`.
    #[default]
    TwoBetaJ,
    /// `α = e^{−βJ}`.
    LiteralBetaJ,
}

impl AlphaConvention {
    pub fn alpha(self, coupling: &Coupling) -> f64 {
        match self {
            Self::TwoBetaJ => (-2.0 * coupling.beta_j()).exp(),
            Self::LiteralBetaJ => (-coupling.beta_j()).exp(),
        }
    }
}

/// Exponentiated variables `A = e^{2h}`, `C = e^{2l}` and `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpVars {
    pub big_a: f64,
    pub big_c: f64,
    pub alpha: f64,
}

impl ExpVars {
    pub fn new(coupling: &Coupling, solution: &FieldPair, convention: AlphaConvention) -> Self {
        Self {
            big_a: (2.0 * solution.h).exp(),
            big_c: (2.0 * solution.l).exp(),
            alpha: convention.alpha(coupling),
        }
    }

    pub fn big_f(&self, x: f64) -> f64 {
        big_f_unchecked(self.alpha, x)
    }
}

fn require_ferromagnetic(coupling: &Coupling) -> Result<()> {
    if coupling.is_ferromagnetic() && coupling.theta() > 0.0 {
        Ok(())
    } else {
        Err(Error::Regime(format!("extremality bounds need J > 0, got J = {}", coupling.j())))
    }
}

/// `γ ≤ K_β(1) = θ`.
pub fn gamma_bound(coupling: &Coupling) -> Result<f64> {
    require_ferromagnetic(coupling)?;
    Ok(coupling.theta())
}

/// `max K_β(s)` over `s ∈ {e^{±2h}, e^{±2l}}`; exactly `θ` when `h·l = 0`.
pub fn kappa_bound_generic(coupling: &Coupling, solution: &FieldPair) -> Result<f64> {
    require_ferromagnetic(coupling)?;
    if solution.h == 0.0 || solution.l == 0.0 {
        return Ok(coupling.theta());
    }
    // K_β(s) = K_β(1/s), and e^{−2|x|} ∈ (0, 1] cannot overflow
    let kh = k_beta(coupling, (-2.0 * solution.h.abs()).exp())?;
    let kl = k_beta(coupling, (-2.0 * solution.l.abs()).exp())?;
    Ok(kh.max(kl).min(coupling.theta()))
}

/// Positive root `h*` of `h = k·f_θ(h)`, or 0 when `θ ≤ 1/k`.
pub fn h_star(k: u32, theta: f64, cfg: &SolverConfig) -> Result<f64> {
    Ok(solve_scalar(k, theta, cfg)?.into_iter().fold(0.0, f64::max))
}

/// `(1/k)·(A/J(A))·J′(A)` with `J(x) = F(x)^k`, `α = e^{−2βJ}`.
///
/// Refused unless `θ > 1/k`, `|h| ≤ h*` and `J′(A) ≤ 1`, under which the
/// value is at most `1/k`. `A` and `1/A` give the same value.
pub fn kappa_bound_refined(coupling: &Coupling, k: u32, big_a: f64) -> Result<f64> {
    kappa_bound_refined_with(coupling, k, big_a, &SolverConfig::default())
}

pub fn kappa_bound_refined_with(coupling: &Coupling, k: u32, big_a: f64, cfg: &SolverConfig) -> Result<f64> {
    require_ferromagnetic(coupling)?;
    if k == 0 {
        return Err(Error::Domain("k must be >= 1".into()));
    }
    if !(big_a > 0.0 && big_a.is_finite()) {
        return Err(Error::Domain(format!("A must be finite and > 0, got {big_a}")));
    }
    let theta = coupling.theta();
    if theta * k as f64 <= 1.0 {
        return Err(Error::Regime(format!("refined bound needs theta > 1/k, got theta = {theta}, k = {k}")));
    }
    let a = big_a.max(1.0 / big_a);
    let h = 0.5 * a.ln();
    let hs = h_star(k, theta, cfg)?;
    if h > hs * (1.0 + H_STAR_SLACK) {
        return Err(Error::Regime(format!("refined bound needs h <= h* = {hs}, got h = {h}")));
    }
    let alpha = AlphaConvention::TwoBetaJ.alpha(coupling);
    let fa = big_f_unchecked(alpha, a);
    let dfa = (1.0 - alpha * alpha) / (1.0 + alpha * a).powi(2);
    let j = fa.powi(k as i32);
    let dj = k as f64 * fa.powi(k as i32 - 1) * dfa;
    if dj > 1.0 {
        return Err(Error::Regime(format!("refined bound needs J'(A) <= 1, got {dj} at h = {h}")));
    }
    Ok(a / j * dj / k as f64)
}

/// Evaluate `k·κ·γ` and its verdict; the method is recorded as generic.
pub fn certify(k: u32, kappa: f64, gamma: f64) -> ExtremalityReport {
    let product = k as f64 * kappa * gamma;
    ExtremalityReport {
        kappa_bound: kappa,
        gamma_bound: gamma,
        product,
        verdict: if product < 1.0 { Verdict::ExtremeCertified } else { Verdict::Inconclusive },
        method: KappaMethod::GenericKBeta,
    }
}

/// Report for one solution: the refined `κ` bound when both fields are
/// nonzero and its hypotheses hold at `A` and `C`, the generic one otherwise.
pub fn extremality_report(k: u32, coupling: &Coupling, solution: &FieldPair, cfg: &SolverConfig) -> Result<ExtremalityReport> {
    let gamma = gamma_bound(coupling)?;
    if solution.h != 0.0 && solution.l != 0.0 {
        let refined = kappa_bound_refined_with(coupling, k, (2.0 * solution.h).exp(), cfg).and_then(|ka| {
            Ok(ka.max(kappa_bound_refined_with(coupling, k, (2.0 * solution.l).exp(), cfg)?))
        });
        if let Ok(kappa) = refined {
            return Ok(certify(k, kappa, gamma).with_method(KappaMethod::RefinedOverK));
        }
    }
    Ok(certify(k, kappa_bound_generic(coupling, solution)?, gamma))
}

/// The two extremality windows.
///
/// With `h·l = 0` the certificate fires iff `1/k < θ < 1/√k`. With both
/// fields nonzero (signs normalized) it fires when the refined chain
/// `κ ≤ 1/k, γ ≤ θ` applies, and otherwise falls back to the generic bound.
pub fn theorem2_windows(k: u32, theta: f64, solution: &FieldPair) -> Verdict {
    let kf = k as f64;
    if !(theta > 0.0 && theta < 1.0) || k == 0 {
        return Verdict::Inconclusive;
    }
    if solution.h == 0.0 || solution.l == 0.0 {
        return if theta > 1.0 / kf && kf * theta * theta < 1.0 { Verdict::ExtremeCertified } else { Verdict::Inconclusive };
    }
    let Ok(coupling) = Coupling::from_theta(theta) else {
        return Verdict::Inconclusive;
    };
    let normalized = FieldPair::new(solution.h.abs(), solution.l.abs());
    match extremality_report(k, &coupling, &normalized, &SolverConfig::default()) {
        Ok(rep) => rep.verdict,
        Err(_) => Verdict::Inconclusive,
    }
}

/// Max absolute residual of `A = F(A)^a F(C)^b`, `C = F(A)^c F(C)^d`.
pub fn exp_system_residual(
    m: &SchemeMatrix,
    coupling: &Coupling,
    solution: &FieldPair,
    convention: AlphaConvention,
) -> f64 {
    let r = m.reduce();
    let v = ExpVars::new(coupling, solution, convention);
    let (fa, fc) = (v.big_f(v.big_a), v.big_f(v.big_c));
    let e1 = v.big_a - fa.powi(r.a) * fc.powi(r.b);
    let e2 = v.big_c - fa.powi(r.c) * fc.powi(r.d);
    e1.abs().max(e2.abs())
}
