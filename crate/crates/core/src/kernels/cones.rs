//! Cone geometry: the sets `D_x^small`, `D_x^big` and their Φ-variants.
//!
//! All inequalities are non-strict, so boundary points belong to the sets.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    eps_small: f64,
    eps_big: f64,
    p: f64,
}

impl ConeSpec {
    /// Requires `eps_small ∈ (1/√(2−p), 1)` and `eps_big ∈ (1/2, 1)`.
    pub fn new(p: f64, eps_small: f64, eps_big: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param("p", alloc::format!("must lie in (0, 1), got {p}")));
        }
        let lo = 1.0 / libm::sqrt(2.0 - p);
        if !(eps_small > lo && eps_small < 1.0) {
            return Err(Error::param(
                "eps_small",
                alloc::format!("must lie in ({lo:.6}, 1) for p = {p}, got {eps_small}"),
            ));
        }
        if !(eps_big > 0.5 && eps_big < 1.0) {
            return Err(Error::param(
                "eps_big",
                alloc::format!("must lie in (0.5, 1), got {eps_big}"),
            ));
        }
        Ok(ConeSpec {
            eps_small,
            eps_big,
            p,
        })
    }

    #[inline]
    pub fn eps_small(&self) -> f64 {
        self.eps_small
    }

    #[inline]
    pub fn eps_big(&self) -> f64 {
        self.eps_big
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(p/4)(1 + (p−2) eps_small²)`.
    pub fn a_small(&self) -> f64 {
        a_small(self.p, self.eps_small)
    }

    /// `(p/2)(1 − 2 eps_big)`.
    pub fn a_big(&self) -> f64 {
        a_big(self.p, self.eps_big)
    }
}

pub fn a_small(p: f64, eps_small: f64) -> f64 {
    p / 4.0 * (1.0 + (p - 2.0) * eps_small * eps_small)
}

pub fn a_big(p: f64, eps_big: f64) -> f64 {
    p / 2.0 * (1.0 - 2.0 * eps_big)
}

/// Cosine of the angle between `x` and `u`.
pub fn gamma_cos(x: &Vector, u: &Vector) -> Result<f64> {
    let nx = x.norm();
    let nu = u.norm();
    if nx == 0.0 || nu == 0.0 {
        return Err(Error::Domain("cosine of an angle with the zero vector"));
    }
    Ok((x.dot(u) / (nx * nu)).clamp(-1.0, 1.0))
}

#[inline]
pub(crate) fn small_cone_test(norm_u: f64, gamma: f64, eps: f64) -> bool {
    norm_u <= 1.0 && gamma.abs() >= eps
}

#[inline]
pub(crate) fn big_cone_test(norm_u: f64, radius: f64, gamma: f64, eps: f64) -> bool {
    norm_u > 1.0 && norm_u <= radius && gamma <= -eps
}

/// `u ∈ D_x^small`: `|u| ≤ 1` and `|γ_{x,u}| ≥ eps_small`.
pub fn in_d_small(x: &Vector, u: &Vector, cones: &ConeSpec) -> bool {
    match gamma_cos(x, u) {
        Ok(g) => small_cone_test(u.norm(), g, cones.eps_small),
        Err(_) => false,
    }
}

/// `u ∈ D_x^big`: `1 < |u| ≤ |x|` and `γ_{x,u} ≤ −eps_big`.
pub fn in_d_big(x: &Vector, u: &Vector, cones: &ConeSpec) -> bool {
    match gamma_cos(x, u) {
        Ok(g) => big_cone_test(u.norm(), x.norm(), g, cones.eps_big),
        Err(_) => false,
    }
}

fn phi_image(x: &Vector, u: &Vector, phi: &Matrix) -> Result<Vector> {
    if x.norm() == 0.0 {
        return Err(Error::Domain("cone membership at the origin"));
    }
    let w = phi.mul_vec(u);
    if w.norm() == 0.0 {
        return Err(Error::Degenerate("Φ(x)u = 0"));
    }
    Ok(w)
}

/// `u ∈ D_x^{Φ,small}`: `|u| ≤ 1` and `|γ_{x,Φ(x)u}| ≥ eps_small`.
pub fn in_d_small_phi(x: &Vector, u: &Vector, cones: &ConeSpec, phi: &Matrix) -> Result<bool> {
    let w = phi_image(x, u, phi)?;
    let g = gamma_cos(x, &w)?;
    Ok(small_cone_test(u.norm(), g, cones.eps_small))
}

/// `u ∈ D_x^{Φ,big}`: `1 < |u| ≤ |x|/‖Φ(x)‖` and `γ_{x,Φ(x)u} ≤ −eps_big`,
/// with the max-row-sum norm.
pub fn in_d_big_phi(x: &Vector, u: &Vector, cones: &ConeSpec, phi: &Matrix) -> Result<bool> {
    let w = phi_image(x, u, phi)?;
    let g = gamma_cos(x, &w)?;
    let radius = x.norm() / phi.row_sum_norm();
    Ok(big_cone_test(u.norm(), radius, g, cones.eps_big))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(gamma_cos(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert!((gamma_cos(&v(&[1.0, 1.0]), &v(&[2.0, 2.0])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(gamma_cos(&v(&[1.0, 0.0]), &v(&[-3.0, 0.0])).unwrap(), -1.0);
        assert!(gamma_cos(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn membership_examples() {
        let c = ConeSpec::new(0.5, 0.9, 0.75).unwrap();
        let x = v(&[3.0, 0.0]);
        assert!(in_d_small(&x, &v(&[0.5, 0.0]), &c));
        assert!(in_d_big(&x, &v(&[-3.0, 0.0]), &c));
        assert!(!in_d_big(&x, &v(&[-6.0, 0.0]), &c));
        assert!(!in_d_big(&x, &v(&[6.0, 0.0]), &c));
    }

    #[test]
    fn phi_big_radius_uses_row_sum_norm() {
        let c = ConeSpec::new(0.5, 0.9, 0.75).unwrap();
        let x = v(&[6.0, 0.0]);
        let phi = Matrix::scalar(2, 2.0);
        assert!(in_d_big_phi(&x, &v(&[-3.0, 0.0]), &c, &phi).unwrap());
        assert!(!in_d_big_phi(&x, &v(&[-3.000001, 0.0]), &c, &phi).unwrap());
    }

    #[test]
    fn anisotropic_phi_uses_image_direction() {
        let c = ConeSpec::new(0.5, 0.9, 0.75).unwrap();
        let x = v(&[1.0, 0.0]);
        let phi = Matrix::diag(&v(&[1.0, 10.0]));
        let u = v(&[-0.05, 0.03]);
        let w = phi.mul_vec(&u);
        assert_eq!(w.as_slice(), &[-0.05, 0.3]);
        let g = gamma_cos(&x, &w).unwrap();
        assert_eq!(in_d_small_phi(&x, &u, &c, &phi).unwrap(), g.abs() >= 0.9);
        assert!(!in_d_small_phi(&x, &u, &c, &phi).unwrap());
        let singular = Matrix::zeros(2);
        assert!(matches!(
            in_d_small_phi(&x, &u, &c, &singular),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn cone_validation() {
        assert!(ConeSpec::new(0.5, 0.81, 0.75).is_err());
        assert!(ConeSpec::new(0.5, 0.9, 0.4).is_err());
        assert!(ConeSpec::new(0.5, 0.9, 1.0).is_err());
        assert!((ConeSpec::new(0.5, 0.9, 0.75).unwrap().a_small() + 0.026875).abs() < 1e-16);
        assert_eq!(ConeSpec::new(0.5, 0.9, 0.75).unwrap().a_big(), -0.125);
    }
}
