//! Rate calculus: the drift function `f`, its primitive `F(t) = ∫₁ᵗ dw/f(w)`
//! and the convergence envelope `ψ(t) = f(F⁻¹(γ t))^{-δ}`.

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.5;
pub const DEFAULT_GAMMA_TIME: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateClass {
    Exponential,
    /// `ψ(t) ≍ t^exponent` with `exponent < 0`.
    Polynomial { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSpec {
    pub p: f64,
    /// Growth exponent of the drift bound (`γ_ker`, `γ_tot` or a Φ-variant).
    pub gamma: f64,
    pub delta: f64,
    /// The time scale `γ` inside `F⁻¹(γ t)`.
    pub gamma_time: f64,
}

impl RateSpec {
    pub fn new(p: f64, gamma: f64) -> Result<Self> {
        Self::with_params(p, gamma, DEFAULT_DELTA, DEFAULT_GAMMA_TIME)
    }

    pub fn with_params(p: f64, gamma: f64, delta: f64, gamma_time: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param("p", alloc::format!("must lie in (0, 1), got {p}")));
        }
        if !gamma.is_finite() {
            return Err(Error::param("gamma", "must be finite"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param("delta", alloc::format!("must lie in (0, 1), got {delta}")));
        }
        if !(gamma_time > 0.0 && gamma_time < 1.0) {
            return Err(Error::param(
                "gamma_time",
                alloc::format!("must lie in (0, 1), got {gamma_time}"),
            ));
        }
        Ok(RateSpec {
            p,
            gamma,
            delta,
            gamma_time,
        })
    }

    pub fn classify(&self) -> Result<RateClass> {
        classify(self.p, self.gamma, self.delta)
    }
}

/// Exponential when `γ ≥ 1`, polynomial with exponent `-(p+γ-1)δ/(1-γ)` when
/// `γ < 1` and `p + γ > 1`.
pub fn classify(p: f64, gamma: f64, delta: f64) -> Result<RateClass> {
    if !(p + gamma > 1.0) {
        return Err(Error::Inconclusive(alloc::format!(
            "p + gamma = {} is not above 1; the rate formula degenerates",
            p + gamma
        )));
    }
    if gamma >= 1.0 {
        Ok(RateClass::Exponential)
    } else {
        Ok(RateClass::Polynomial {
            exponent: -(p + gamma - 1.0) * delta / (1.0 - gamma),
        })
    }
}

/// Exponent `e = (p - 1 + γ)/p` of `f(r) = r^e` on `r ≥ 1`.
pub fn drift_exponent(p: f64, gamma: f64) -> Result<f64> {
    if !(p + gamma > 1.0) {
        return Err(Error::param("gamma", "p + gamma must exceed 1"));
    }
    Ok((p - 1.0 + gamma) / p)
}

/// `f(r) = r^{(p-1+γ)/p}` for `r ≥ 1`.
///
/// Below 1 the concave case (`γ < 1`) continues along the tangent at `r = 1`,
/// which keeps `f` positive, increasing and concave on `[0, ∞)`; otherwise the
/// power itself is used.
pub fn rate_f(r: f64, p: f64, gamma: f64) -> Result<f64> {
    let e = drift_exponent(p, gamma)?;
    if r >= 1.0 || e >= 1.0 {
        Ok(libm::pow(r.max(0.0), e))
    } else {
        Ok(1.0 + e * (r - 1.0))
    }
}

/// The drift function actually used by the rate formula: `f` for `γ < 1`,
/// the identity for `γ ≥ 1` (where `f(r) ≥ r` makes the linear bound valid).
pub fn effective_f(r: f64, p: f64, gamma: f64) -> Result<f64> {
    if gamma >= 1.0 {
        drift_exponent(p, gamma)?;
        Ok(r)
    } else {
        rate_f(r, p, gamma)
    }
}

/// `F(t) = ∫₁ᵗ dw / f(w)` for the effective `f`, `t ≥ 1`.
pub fn big_f(t: f64, p: f64, gamma: f64) -> Result<f64> {
    if t < 1.0 {
        return Err(Error::param("t", "F is defined for t >= 1"));
    }
    let e = drift_exponent(p, gamma)?;
    if gamma >= 1.0 {
        return Ok(libm::log(t));
    }
    let k = 1.0 - e;
    Ok((libm::pow(t, k) - 1.0) / k)
}

/// Inverse of [`big_f`] on `s ≥ 0`.
pub fn big_f_inv(s: f64, p: f64, gamma: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::param("s", "F^{-1} is defined for s >= 0"));
    }
    drift_exponent(p, gamma)?;
    if gamma >= 1.0 {
        return Ok(libm::exp(s));
    }
    // 1 - e = (1 - γ)/p
    let k = (1.0 - gamma) / p;
    Ok(libm::pow(1.0 + k * s, 1.0 / k))
}

/// `ψ(t) = (1 / f(F⁻¹(γ t)))^δ`.
///
/// Polynomial case: `(1 + γ t (1-γ_ker)/p)^{-(p+γ_ker-1)δ/(1-γ_ker)}`.
/// Exponential case: `exp(-δ γ t)`.
pub fn rate_psi(t: f64, spec: &RateSpec) -> Result<f64> {
    if t < 1.0 {
        return Err(Error::param("t", "psi is evaluated for t >= 1"));
    }
    match spec.classify()? {
        RateClass::Exponential => Ok(libm::exp(-spec.delta * spec.gamma_time * t)),
        RateClass::Polynomial { exponent } => {
            let base = 1.0 + spec.gamma_time * t * (1.0 - spec.gamma) / spec.p;
            Ok(libm::pow(base, exponent))
        }
    }
}
