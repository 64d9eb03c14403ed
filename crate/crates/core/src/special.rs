//! Scalar kernels: the tree recursion map `f_θ(h) = arctanh(θ·tanh h)`, its
//! derivative, the variation-distance kernel `K_β` and the Möbius map `F`.
//!
//! The free functions validate their arguments on every call. Hot loops
//! (root scans, oracles) should build a [`Kernel`] once and call its methods.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arguments of arctanh this close to ±1 are refused instead of clamped.
pub const ARCTANH_GUARD: f64 = 1.0 - 1e-15;

/// Interaction `J`, inverse temperature `β` and the derived `θ = tanh(βJ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    j: f64,
    beta: f64,
    theta: f64,
}

impl Coupling {
    pub fn new(j: f64, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Domain(format!("beta must be finite and > 0, got {beta}")));
        }
        if !j.is_finite() {
            return Err(Error::Domain(format!("J must be finite, got {j}")));
        }
        let theta = (beta * j).tanh();
        if theta.abs() >= 1.0 {
            return Err(Error::Domain(format!(
                "beta*J = {} saturates tanh; theta must lie in (-1, 1)",
                beta * j
            )));
        }
        Ok(Self { j, beta, theta })
    }

    /// Coupling with `β = 1` and `J = arctanh θ`.
    pub fn from_theta(theta: f64) -> Result<Self> {
        let j = arctanh(theta)?;
        let mut c = Self::new(j, 1.0)?;
        // keep the caller's θ bit-exact rather than tanh(arctanh θ)
        c.theta = theta;
        Ok(c)
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn beta_j(&self) -> f64 {
        self.beta * self.j
    }

    pub fn is_ferromagnetic(&self) -> bool {
        self.j > 0.0
    }
}

/// `arctanh x = ½·ln((1+x)/(1−x))`, refusing `|x| ≥ 1 − 1e−15`.
pub fn arctanh(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() >= ARCTANH_GUARD {
        return Err(Error::Domain(format!("arctanh argument {x} outside (-1, 1)")));
    }
    Ok(arctanh_unchecked(x))
}

#[inline]
fn arctanh_unchecked(x: f64) -> f64 {
    0.5 * (x.ln_1p() - (-x).ln_1p())
}

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta.abs() >= 1.0 {
        return Err(Error::Domain(format!("theta must lie in (-1, 1), got {theta}")));
    }
    Ok(())
}

/// The recursion kernel at a fixed, validated `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    theta: f64,
}

impl Kernel {
    pub fn new(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        // θ·tanh h must stay below the arctanh guard for every h
        if theta.abs() >= ARCTANH_GUARD {
            return Err(Error::Domain(format!("theta {theta} too close to ±1")));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `f_θ(h)`. Finite for every finite or infinite `h`.
    #[inline]
    pub fn f(&self, h: f64) -> f64 {
        arctanh_unchecked(self.theta * h.tanh())
    }

    /// `θ(1 − tanh²h) / (1 − θ²tanh²h)`.
    #[inline]
    pub fn f_prime(&self, h: f64) -> f64 {
        let t = h.tanh();
        let tt = t * t;
        self.theta * (1.0 - tt) / (1.0 - self.theta * self.theta * tt)
    }

    /// `lim_{h→∞} f_θ(h) = arctanh θ`.
    pub fn saturation(&self) -> f64 {
        arctanh_unchecked(self.theta)
    }
}

pub fn f_theta(theta: f64, h: f64) -> Result<f64> {
    if !h.is_finite() {
        return Err(Error::Domain(format!("field h must be finite, got {h}")));
    }
    Ok(Kernel::new(theta)?.f(h))
}

pub fn f_theta_prime(theta: f64, h: f64) -> Result<f64> {
    if !h.is_finite() {
        return Err(Error::Domain(format!("field h must be finite, got {h}")));
    }
    Ok(Kernel::new(theta)?.f_prime(h))
}

/// `K_β(a) = 1/(e^{−2βJ}a + 1) − 1/(e^{2βJ}a + 1)`.
///
/// For `J > 0` this is unimodal on `[0, ∞)` with maximum `K_β(1) = θ`, and
/// `K_β(a) = K_β(1/a)`.
pub fn k_beta(coupling: &Coupling, a: f64) -> Result<f64> {
    if a.is_nan() || a < 0.0 {
        return Err(Error::Domain(format!("K_beta argument must be >= 0, got {a}")));
    }
    let x = 2.0 * coupling.beta_j();
    Ok(1.0 / ((-x).exp() * a + 1.0) - 1.0 / (x.exp() * a + 1.0))
}

/// `F(x) = (α + x) / (1 + αx)`.
///
/// With `α = e^{−2βJ}` this satisfies `F(e^{2h}) = e^{2 f_θ(h)}`.
pub fn big_f(alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("F argument must be >= 0, got {x}")));
    }
    Ok(big_f_unchecked(alpha, x))
}

#[inline]
pub(crate) fn big_f_unchecked(alpha: f64, x: f64) -> f64 {
    (alpha + x) / (1.0 + alpha * x)
}
