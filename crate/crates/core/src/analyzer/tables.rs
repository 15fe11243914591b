//! Closed-form constants and the case tables combining small/big and
//! kernel/drift contributions.

use crate::error::{Error, Result};
use crate::kernels::ConeSpec;

/// Which of `φ^small`, `φ^big` dominates for large `|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KerRegime {
    SmallDominates,
    BigDominates,
    Comparable,
}

/// Which of `φ^ker`, `φ^drift` dominates for large `|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TotRegime {
    KerDominates,
    DriftDominates,
    Comparable,
}

/// `(A^small, A^big) = ((p/4)(1+(p−2)ε²_small), (p/2)(1−2ε_big))`.
pub fn closed_constants(p: f64, eps_small: f64, eps_big: f64) -> Result<(f64, f64)> {
    let c = ConeSpec::new(p, eps_small, eps_big)?;
    Ok((c.a_small(), c.a_big()))
}

fn sign_of(v: f64, band: f64, what: &str) -> Result<bool> {
    if !v.is_finite() {
        if v.is_nan() {
            return Err(Error::Inconclusive(alloc::format!("{what} is undefined")));
        }
        return Ok(v < 0.0);
    }
    if v.abs() <= band {
        return Err(Error::Inconclusive(alloc::format!(
            "sign of {what} = {v:e} is within the error band {band:e}"
        )));
    }
    Ok(v < 0.0)
}

fn check_ratio_bounds(c_inf: f64, c_sup: f64) -> Result<()> {
    if !(c_inf >= 0.0 && c_sup >= c_inf && c_sup.is_finite()) {
        return Err(Error::Inconclusive(alloc::format!(
            "comparable regime needs 0 ≤ c_inf ≤ c_sup < ∞, got [{c_inf}, {c_sup}]"
        )));
    }
    Ok(())
}

/// `C^ker` from the case table. `band` is the absolute error band used for
/// sign decisions on `A + B`.
#[allow(clippy::too_many_arguments)]
pub fn combine_c_ker(
    a_small: f64,
    b_small: f64,
    a_big: f64,
    b_big: f64,
    c_inf: f64,
    c_sup: f64,
    regime: KerRegime,
    band: f64,
) -> Result<f64> {
    let s = a_small + b_small;
    let b = a_big + b_big;
    match regime {
        KerRegime::SmallDominates => Ok(s),
        KerRegime::BigDominates => Ok(b),
        KerRegime::Comparable => {
            check_ratio_bounds(c_inf, c_sup)?;
            let s_neg = sign_of(s, band, "A^small + B^small")?;
            let b_neg = sign_of(b, band, "A^big + B^big")?;
            let (ws, wb) = match (s_neg, b_neg) {
                (true, true) => (c_sup, c_inf),
                (false, true) => (c_inf, c_inf),
                (true, false) => (c_sup, c_sup),
                (false, false) => (c_inf, c_sup),
            };
            Ok(s / (1.0 + ws) + b * wb / (1.0 + wb))
        }
    }
}

/// `C^tot` from the case table, verbatim including its asymmetric weights.
pub fn combine_c_tot(
    c_ker: f64,
    c_drift: f64,
    c_inf: f64,
    c_sup: f64,
    regime: TotRegime,
    band: f64,
) -> Result<f64> {
    match regime {
        TotRegime::KerDominates => Ok(c_ker),
        TotRegime::DriftDominates => Ok(c_drift),
        TotRegime::Comparable => {
            check_ratio_bounds(c_inf, c_sup)?;
            let w = if sign_of(c_drift, band, "C^drift")? { c_inf } else { c_sup };
            Ok(c_ker / (1.0 + c_inf) + c_drift * w / (1.0 + w))
        }
    }
}

/// Upper envelope of `C^ker/(1+s) + C^drift·t/(1+t)` over `s, t ∈ [c_inf, c_sup]`.
/// Both terms are monotone in their ratio, so the maximum sits at a corner.
pub fn c_tot_envelope(c_ker: f64, c_drift: f64, c_inf: f64, c_sup: f64) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for s in [c_inf, c_sup] {
        for t in [c_inf, c_sup] {
            m = m.max(c_ker / (1.0 + s) + c_drift * t / (1.0 + t));
        }
    }
    m
}
