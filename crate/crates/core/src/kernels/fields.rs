//! Closed-form coefficient fields: drift `ℓ(x)`, diffusion `Q(x)` and the
//! jump-size matrix `Φ(x)`.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[inline]
fn bracket(x: &Vector) -> f64 {
    1.0 + x.norm_sq()
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriftField {
    Zero,
    /// `ℓ(x) = A x + b`.
    Linear { a: Matrix, b: Vector },
    /// `ℓ(x) = c (1+|x|²)^{(κ−1)/2} x`, so `|ℓ(x)| ~ |c| |x|^κ`.
    RadialPower { coeff: f64, kappa: f64 },
}

impl DriftField {
    pub fn eval(&self, x: &Vector) -> Vector {
        match self {
            DriftField::Zero => Vector::zeros(x.dim()),
            DriftField::Linear { a, b } => a.mul_vec(x) + *b,
            DriftField::RadialPower { coeff, kappa } => {
                *x * (coeff * libm::pow(bracket(x), 0.5 * (kappa - 1.0)))
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DriftField::Zero)
    }

    pub(crate) fn validate(&self, d: usize) -> Result<()> {
        match self {
            DriftField::Zero => Ok(()),
            DriftField::Linear { a, b } => {
                if a.dim() != d || b.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: a.dim().max(b.dim()),
                    });
                }
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::param("drift", "entries must be finite"));
                }
                Ok(())
            }
            DriftField::RadialPower { coeff, kappa } => {
                if !coeff.is_finite() || !kappa.is_finite() {
                    return Err(Error::param("drift", "coefficients must be finite"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiffusionField {
    Zero,
    Constant(Matrix),
    /// `Q(x) = s x x'`; with `s = 1` in `d = 2` this is
    /// `q₁₁ = x₁², q₂₂ = x₂², q₁₂ = x₁x₂`.
    OuterProduct { scale: f64 },
    /// `Q(x) = c (1+|x|²)^{κ/2} I`.
    RadialPower { coeff: f64, kappa: f64 },
}

impl DiffusionField {
    pub fn eval(&self, x: &Vector) -> Matrix {
        let d = x.dim();
        match self {
            DiffusionField::Zero => Matrix::zeros(d),
            DiffusionField::Constant(m) => *m,
            DiffusionField::OuterProduct { scale } => Matrix::outer(x, x).scale(*scale),
            DiffusionField::RadialPower { coeff, kappa } => {
                Matrix::scalar(d, coeff * libm::pow(bracket(x), 0.5 * kappa))
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DiffusionField::Zero)
    }

    pub(crate) fn validate(&self, d: usize) -> Result<()> {
        match self {
            DiffusionField::Zero => Ok(()),
            DiffusionField::Constant(m) => {
                if m.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: m.dim(),
                    });
                }
                if !m.is_finite() || !m.is_symmetric(1e-12) {
                    return Err(Error::param("diffusion", "matrix must be finite and symmetric"));
                }
                m.sqrt_psd(1e-10)?;
                Ok(())
            }
            DiffusionField::OuterProduct { scale } => {
                if !(scale.is_finite() && *scale >= 0.0) {
                    return Err(Error::param("diffusion", "scale must be finite and nonnegative"));
                }
                Ok(())
            }
            DiffusionField::RadialPower { coeff, kappa } => {
                if !(coeff.is_finite() && *coeff >= 0.0 && kappa.is_finite()) {
                    return Err(Error::param(
                        "diffusion",
                        "coefficient must be finite and nonnegative",
                    ));
                }
                Ok(())
            }
        }
    }
}

/// The matrix field `Φ(x)` of a multiplicative kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiField {
    /// `Φ(x) = (1+|x|²)^{κ/2} M`.
    Matrix { m: Matrix, kappa: f64 },
    /// `Φ(x) = s (1+|x|²)^{κ/2} (e e' + η (I − e e'))` with `e = x/|x|`:
    /// radial stretching by `s`, tangential by `s η`. At the origin `Φ = s I`.
    Radial { scale: f64, kappa: f64, eta: f64 },
}

impl PhiField {
    pub fn identity(d: usize) -> Self {
        PhiField::Matrix {
            m: Matrix::identity(d),
            kappa: 0.0,
        }
    }

    pub fn eval(&self, x: &Vector) -> Matrix {
        let d = x.dim();
        match self {
            PhiField::Matrix { m, kappa } => {
                if *kappa == 0.0 {
                    *m
                } else {
                    m.scale(libm::pow(bracket(x), 0.5 * kappa))
                }
            }
            PhiField::Radial { scale, kappa, eta } => {
                let s = scale * libm::pow(bracket(x), 0.5 * kappa);
                match x.normalized() {
                    None => Matrix::scalar(d, s),
                    Some(e) => Matrix::from_fn(d, |i, j| {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        s * (eta * delta + (1.0 - eta) * e[i] * e[j])
                    }),
                }
            }
        }
    }

    /// Growth order `κ` of `‖Φ(x)‖`.
    pub fn kappa(&self) -> f64 {
        match self {
            PhiField::Matrix { kappa, .. } | PhiField::Radial { kappa, .. } => *kappa,
        }
    }

    /// True when `Φ(x)` commutes with rotations about `x`, so cone geometry in
    /// jump-source space is axially symmetric about `x`.
    pub fn is_axial(&self) -> bool {
        match self {
            PhiField::Radial { .. } => true,
            PhiField::Matrix { m, .. } => {
                let s = m.get(0, 0);
                let d = m.dim();
                (0..d).all(|i| (0..d).all(|j| m.get(i, j) == if i == j { s } else { 0.0 }))
            }
        }
    }

    pub(crate) fn validate(&self, d: usize) -> Result<()> {
        match self {
            PhiField::Matrix { m, kappa } => {
                if m.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: m.dim(),
                    });
                }
                if !m.is_finite() || !kappa.is_finite() {
                    return Err(Error::param("phi", "entries must be finite"));
                }
                let (vals, _) = m.transpose().mul_mat(m).symmetric_eigen();
                if !(vals[0] > 1e-24 * vals[d - 1]) {
                    return Err(Error::param("phi", "matrix must be nonsingular"));
                }
                check_sublinear(*kappa)
            }
            PhiField::Radial { scale, kappa, eta } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::param("phi", "scale must be positive"));
                }
                if !(eta.is_finite() && *eta > 0.0) {
                    return Err(Error::param("phi", "eta must be positive"));
                }
                check_sublinear(*kappa)
            }
        }
    }
}

fn check_sublinear(kappa: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa < 1.0) {
        return Err(Error::param(
            "phi.kappa",
            alloc::format!("Φ must grow sub-linearly (kappa < 1), got {kappa}"),
        ));
    }
    Ok(())
}
