//! Exact finite-volume Gibbs measures by brute-force enumeration.
//!
//! The weight of `σ` on `V_n` is
//! `exp(βJ·Σ_{⟨x,y⟩ ⊂ V_n} σ(x)σ(y) + Σ_{x ∈ W_n} h_x σ(x))`.
//! Nothing here uses the tree recursion, so the results serve as an
//! independent check of it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::Coupling;
use crate::tree::BoundaryAssignment;

/// Largest `|V_n|` the oracle will enumerate.
pub const MAX_ORACLE_SPINS: usize = 24;

pub const KOLMOGOROV_TOL: f64 = 1e-12;

/// A configuration on `V_n` packed into bits: bit `x` set means `σ(x) = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfig {
    bits: u32,
    len: u8,
}

impl SpinConfig {
    pub fn new(bits: u32, len: usize) -> Result<Self> {
        if len > MAX_ORACLE_SPINS {
            return Err(Error::Capacity { what: "oracle spins", needed: len as u64, cap: MAX_ORACLE_SPINS as u64 });
        }
        if len < 32 && bits >> len != 0 {
            return Err(Error::Domain(format!("configuration bits {bits:#x} exceed {len} spins")));
        }
        Ok(Self { bits, len: len as u8 })
    }

    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut bits = 0u32;
        for (x, &s) in spins.iter().enumerate() {
            match s {
                1 => bits |= 1 << x,
                -1 => {}
                _ => return Err(Error::Domain(format!("spin at vertex {x} is {s}, expected ±1"))),
            }
        }
        Self::new(bits, spins.len())
    }

    pub fn all_plus(len: usize) -> Result<Self> {
        Self::new(mask(len), len)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spin(&self, x: usize) -> Option<i8> {
        (x < self.len()).then(|| if self.bits >> x & 1 == 1 { 1 } else { -1 })
    }

    pub fn flipped(&self) -> Self {
        Self { bits: !self.bits & mask(self.len()), len: self.len }
    }

    pub fn with_flip(&self, x: usize) -> Self {
        Self { bits: self.bits ^ (1 << x), len: self.len }
    }
}

fn mask(len: usize) -> u32 {
    if len >= 32 {
        u32::MAX
    } else {
        (1u32 << len) - 1
    }
}

/// Precomputed edge list and boundary fields for one `(assignment, n)`.
struct Energy {
    beta_j: f64,
    /// `(child, parent)` for every edge inside `V_n`.
    edges: Vec<(u32, u32)>,
    boundary: Vec<(u32, f64)>,
    spins: usize,
}

impl Energy {
    fn new(asg: &BoundaryAssignment<'_>, coupling: &Coupling, n: u32) -> Result<Self> {
        let tree = asg.tree();
        if n > tree.depth() {
            return Err(Error::DepthMismatch(format!("n = {n} exceeds tree depth {}", tree.depth())));
        }
        let spins = tree.volume_len(n);
        if spins > MAX_ORACLE_SPINS {
            return Err(Error::Capacity { what: "oracle spins", needed: spins as u64, cap: MAX_ORACLE_SPINS as u64 });
        }
        let edges = (1..spins).map(|y| (y as u32, tree.parent(y).unwrap() as u32)).collect();
        let boundary = tree.level(n).map(|x| Ok((x as u32, asg.numeric_field(x)?))).collect::<Result<_>>()?;
        Ok(Self { beta_j: coupling.beta_j(), edges, boundary, spins })
    }

    fn log_weight(&self, bits: u32) -> f64 {
        let mut agree: i64 = 0;
        for &(y, x) in &self.edges {
            agree += if (bits >> y ^ bits >> x) & 1 == 0 { 1 } else { -1 };
        }
        let mut field = 0.0;
        for &(x, h) in &self.boundary {
            field += if bits >> x & 1 == 1 { h } else { -h };
        }
        self.beta_j * agree as f64 + field
    }
}

/// Unnormalized weight of `sigma` on `V_n`. Fails unless `sigma` covers
/// exactly `V_n`.
pub fn config_weight(asg: &BoundaryAssignment<'_>, coupling: &Coupling, sigma: &SpinConfig, n: u32) -> Result<f64> {
    Ok(config_log_weight(asg, coupling, sigma, n)?.exp())
}

pub fn config_log_weight(
    asg: &BoundaryAssignment<'_>,
    coupling: &Coupling,
    sigma: &SpinConfig,
    n: u32,
) -> Result<f64> {
    let energy = Energy::new(asg, coupling, n)?;
    if sigma.len() != energy.spins {
        return Err(Error::Domain(format!(
            "configuration covers {} spins, V_{n} has {}",
            sigma.len(),
            energy.spins
        )));
    }
    Ok(energy.log_weight(sigma.bits))
}

/// Normalized distribution over all `2^|V_n|` configurations, indexed by
/// [`SpinConfig::bits`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteVolumeMeasure {
    k: u32,
    n: u32,
    spins: usize,
    probabilities: Vec<f64>,
    log_z: f64,
}

impl FiniteVolumeMeasure {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn spins(&self) -> usize {
        self.spins
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, sigma: &SpinConfig) -> Option<f64> {
        (sigma.len() == self.spins).then(|| self.probabilities[sigma.bits as usize])
    }

    /// `ln Z_n`.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// `Z_n`; may overflow to `+∞` where `ln Z_n` does not.
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// `(μ(σ(x) = +1), μ(σ(x) = −1))`.
    pub fn site_marginal(&self, x: usize) -> Result<(f64, f64)> {
        if x >= self.spins {
            return Err(Error::UnknownVertex(x));
        }
        let mut plus = 0.0;
        let mut minus = 0.0;
        for (c, &p) in self.probabilities.iter().enumerate() {
            if c >> x & 1 == 1 {
                plus += p;
            } else {
                minus += p;
            }
        }
        Ok((plus, minus))
    }
}

/// Exact `μ_n` for the given assignment.
pub fn finite_volume_measure(asg: &BoundaryAssignment<'_>, coupling: &Coupling, n: u32) -> Result<FiniteVolumeMeasure> {
    let energy = Energy::new(asg, coupling, n)?;
    let count = 1usize << energy.spins;
    let log_w: Vec<f64> = (0..count as u32).into_par_iter().map(|c| energy.log_weight(c)).collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probabilities: Vec<f64> = log_w.par_iter().map(|&w| (w - max).exp()).collect();
    let total: f64 = probabilities.iter().sum();
    probabilities.par_iter_mut().for_each(|p| *p /= total);
    Ok(FiniteVolumeMeasure {
        k: asg.tree().k(),
        n,
        spins: energy.spins,
        probabilities,
        log_z: max + total.ln(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KolmogorovReport {
    pub max_discrepancy: f64,
    pub pass: bool,
}

/// Compares the marginal of `mu_n` on `V_{n−1}` with `mu_prev`.
pub fn check_kolmogorov(mu_n: &FiniteVolumeMeasure, mu_prev: &FiniteVolumeMeasure) -> Result<KolmogorovReport> {
    if mu_n.k != mu_prev.k || mu_n.n != mu_prev.n + 1 {
        return Err(Error::DepthMismatch(format!(
            "expected depths n and n-1 on one tree, got k={} n={} and k={} n={}",
            mu_n.k, mu_n.n, mu_prev.k, mu_prev.n
        )));
    }
    // V_{n−1} is an index prefix of V_n, so marginalizing is masking
    let low = mask(mu_prev.spins) as usize;
    let mut marginal = vec![0.0; mu_prev.probabilities.len()];
    for (c, &p) in mu_n.probabilities.iter().enumerate() {
        marginal[c & low] += p;
    }
    let max_discrepancy =
        marginal.iter().zip(&mu_prev.probabilities).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(KolmogorovReport { max_discrepancy, pass: max_discrepancy < KOLMOGOROV_TOL })
}

/// `μ(σ(root) = −1) / μ(σ(root) = +1)`, or `+∞` when the plus-probability
/// underflows to zero.
pub fn root_marginal_ratio(mu: &FiniteVolumeMeasure) -> f64 {
    let (plus, minus) = mu.site_marginal(0).expect("V_n always contains the root");
    if plus == 0.0 {
        f64::INFINITY
    } else {
        minus / plus
    }
}

/// `μ(σ(root) = +1)` on `V_n` with an extra spin `parent_spin` attached to
/// the root by one more edge, enumerated directly.
pub fn pinned_parent_root_plus(
    asg: &BoundaryAssignment<'_>,
    coupling: &Coupling,
    n: u32,
    parent_spin: i8,
) -> Result<f64> {
    if parent_spin != 1 && parent_spin != -1 {
        return Err(Error::Domain(format!("parent spin must be ±1, got {parent_spin}")));
    }
    let energy = Energy::new(asg, coupling, n)?;
    let count = 1u32 << energy.spins;
    let log_w: Vec<(bool, f64)> = (0..count)
        .into_par_iter()
        .map(|c| {
            let root = if c & 1 == 1 { 1.0 } else { -1.0 };
            (c & 1 == 1, energy.log_weight(c) + energy.beta_j * root * parent_spin as f64)
        })
        .collect();
    let max = log_w.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut plus, mut total) = (0.0, 0.0);
    for (is_plus, w) in log_w {
        let e = (w - max).exp();
        total += e;
        if is_plus {
            plus += e;
        }
    }
    Ok(plus / total)
}

/// `|μ(σ(root)=+1 | parent=+1) − μ(σ(root)=+1 | parent=−1)|`.
pub fn pinned_parent_disagreement(asg: &BoundaryAssignment<'_>, coupling: &Coupling, n: u32) -> Result<f64> {
    Ok((pinned_parent_root_plus(asg, coupling, n, 1)? - pinned_parent_root_plus(asg, coupling, n, -1)?).abs())
}
