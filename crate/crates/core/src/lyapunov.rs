//! The Lyapunov function `V(x) = φ(|x|)^p` and its derivatives.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Coefficients of the cutoff profile `φ(r) = r³(a + b r + c r²)` on `[0, 1]`.
///
/// They solve `φ(1) = 1`, `φ'(1) = 1`, `φ''(1) = 0`, so `φ` joins the identity
/// at `r = 1` with a continuous second derivative.
pub const CUTOFF_COEFFS: [f64; 3] = [6.0, -8.0, 3.0];

/// A function the generator can be applied to.
///
/// `LyapunovSpec` is the production implementation; tests also use
/// [`QuadraticForm`], for which second-order Taylor expansions are exact.
pub trait TestFunction: Sync {
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Result<Vector>;
    fn hessian(&self, x: &Vector) -> Result<Matrix>;

    /// `u' D²f(y) u`.
    fn hessian_quad(&self, y: &Vector, u: &Vector) -> f64 {
        self.hessian(y).map(|h| h.quad_form(u)).unwrap_or(0.0)
    }

    /// Power `q` with `|f(y)| = O(|y|^q)` as `|y| → ∞`. Used to map the
    /// outer radial tail of jump integrals.
    fn growth_order(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSpec {
    p: f64,
}

/// Radial profile value and first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radial {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl LyapunovSpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::param("p", alloc::format!("must lie in (0, 1), got {p}")));
        }
        Ok(LyapunovSpec { p })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn cutoff_radius(&self) -> f64 {
        1.0
    }

    /// The cutoff profile `φ` and its derivatives at `r >= 0`.
    pub fn profile(r: f64) -> Radial {
        if r > 1.0 {
            return Radial {
                value: r,
                d1: 1.0,
                d2: 0.0,
            };
        }
        let [a, b, c] = CUTOFF_COEFFS;
        let r2 = r * r;
        Radial {
            value: r2 * r * (a + b * r + c * r2),
            d1: r2 * (3.0 * a + 4.0 * b * r + 5.0 * c * r2),
            d2: r * (6.0 * a + 12.0 * b * r + 20.0 * c * r2),
        }
    }

    /// `g(r) = φ(r)^p` with derivatives.
    pub fn radial(&self, r: f64) -> Radial {
        let p = self.p;
        if r > 1.0 {
            let rp = libm::pow(r, p);
            return Radial {
                value: rp,
                d1: p * rp / r,
                d2: p * (p - 1.0) * rp / (r * r),
            };
        }
        if r <= 0.0 {
            return Radial {
                value: 0.0,
                d1: 0.0,
                d2: 0.0,
            };
        }
        let phi = Self::profile(r);
        let pm2 = libm::pow(phi.value, p - 2.0);
        let pm1 = pm2 * phi.value;
        Radial {
            value: pm1 * phi.value,
            d1: p * pm1 * phi.d1,
            d2: p * pm2 * ((p - 1.0) * phi.d1 * phi.d1 + phi.value * phi.d2),
        }
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        let r = x.norm();
        if r > 1.0 {
            libm::pow(r, self.p)
        } else {
            self.radial(r).value
        }
    }

    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::Domain("gradient of V is undefined at the origin"));
        }
        let g = self.radial(r);
        Ok(*x * (g.d1 / r))
    }

    pub fn hess(&self, x: &Vector) -> Result<Matrix> {
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::Domain("Hessian of V is undefined at the origin"));
        }
        let g = self.radial(r);
        let e = *x * (1.0 / r);
        let t = g.d1 / r;
        Ok(Matrix::from_fn(x.dim(), |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            (g.d2 - t) * e[i] * e[j] + t * delta
        }))
    }
}

impl TestFunction for LyapunovSpec {
    fn value(&self, x: &Vector) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: &Vector) -> Result<Vector> {
        self.grad(x)
    }

    fn hessian(&self, x: &Vector) -> Result<Matrix> {
        self.hess(x)
    }

    fn hessian_quad(&self, y: &Vector, u: &Vector) -> f64 {
        let r = y.norm();
        if r == 0.0 {
            return 0.0;
        }
        let g = self.radial(r);
        let a = y.dot(u) / r;
        let u2 = u.norm_sq();
        g.d2 * a * a + (g.d1 / r) * (u2 - a * a)
    }

    fn growth_order(&self) -> f64 {
        self.p
    }
}

/// `f(y) = ½ y'Ay + b·y`, a test function with constant Hessian.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticForm {
    pub a: Matrix,
    pub b: Vector,
}

impl QuadraticForm {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        Ok(QuadraticForm {
            a: a.add_mat(&a.transpose()).scale(0.5),
            b,
        })
    }
}

impl TestFunction for QuadraticForm {
    fn value(&self, x: &Vector) -> f64 {
        0.5 * self.a.quad_form(x) + self.b.dot(x)
    }

    fn gradient(&self, x: &Vector) -> Result<Vector> {
        Ok(self.a.mul_vec(x) + self.b)
    }

    fn hessian(&self, _x: &Vector) -> Result<Matrix> {
        Ok(self.a)
    }

    fn hessian_quad(&self, _y: &Vector, u: &Vector) -> f64 {
        self.a.quad_form(u)
    }

    fn growth_order(&self) -> f64 {
        2.0
    }
}
