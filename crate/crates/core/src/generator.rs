//! Numerical evaluation of `ℒV(x)` split into drift, diffusion, compensated
//! small-jump and big-jump parts, and of the real part of the symbol.
//!
//! For multiplicative kernels the jump is `Φ(x)u` and compensation is on the
//! source ball `|u| ≤ 1`, with the drift replaced by `ℓ^Φ`.

use crate::cubature::{gauss_legendre, integrate, CubatureOptions, Estimate, Oscillation, Problem};
use crate::error::{Error, Result};
use crate::kernels::{
    analysis_breaks, big_cone_test, checked, kernel_is_axial, small_cone_test, ConeSpec,
    Functional, GeneratorSpec, KernelAt,
};
use crate::linalg::Vector;
use crate::lyapunov::{LyapunovSpec, TestFunction};

/// Below `|w| < 10⁻³ |x|` the compensated integrand is evaluated through the
/// integral form of the Taylor remainder.
pub const TAYLOR_SWITCH: f64 = 1e-3;

/// `|u|`-cutoff (in units of `1/|Φ'ξ|`) beyond which `1 − cos` is replaced by
/// its mean in [`symbol_re`].
pub const SYMBOL_CUT: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorValue {
    pub drift_part: f64,
    pub diffusion_part: f64,
    pub small_jump_part: f64,
    pub big_jump_part: f64,
    pub total: f64,
    pub est_error: f64,
}

/// `∫₀¹ (1−θ) g(θ) dθ` by 16-point Gauss–Legendre, weights include `1−θ`.
pub(crate) struct TaylorRule {
    theta: [f64; 16],
    weight: [f64; 16],
}

impl TaylorRule {
    pub fn new() -> Self {
        let (x, w) = gauss_legendre::<16>();
        let mut theta = [0.0; 16];
        let mut weight = [0.0; 16];
        for i in 0..16 {
            theta[i] = 0.5 * (x[i] + 1.0);
            weight[i] = 0.5 * w[i] * (1.0 - theta[i]);
        }
        TaylorRule { theta, weight }
    }

    /// `V(x+w) − V(x) − ∇V(x)·w`.
    #[inline]
    pub fn compensated<T: TestFunction + ?Sized>(
        &self,
        test: &T,
        x: &Vector,
        vx: f64,
        grad: &Vector,
        w: &Vector,
        norm_w: f64,
        norm_x: f64,
    ) -> f64 {
        if norm_w < TAYLOR_SWITCH * norm_x {
            let mut s = 0.0;
            for i in 0..16 {
                s += self.weight[i] * test.hessian_quad(&(*x + *w * self.theta[i]), w);
            }
            s
        } else {
            test.value(&(*x + *w)) - vx - grad.dot(w)
        }
    }
}

/// `ℒV(x)` for the Lyapunov function `V = φ^p(|x|)`.
pub fn apply_generator(
    x: &Vector,
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    opts: &CubatureOptions,
) -> Result<GeneratorValue> {
    apply_generator_with(x, gen, lyap, opts)
}

/// `ℒf(x)` for any smooth test function.
pub fn apply_generator_with<T: TestFunction>(
    x: &Vector,
    gen: &GeneratorSpec,
    test: &T,
    opts: &CubatureOptions,
) -> Result<GeneratorValue> {
    gen.check_point(x)?;
    let grad = test.gradient(x)?;
    let hess = test.hessian(x)?;
    let drift_part = gen.drift_phi(x).dot(&grad);
    let diffusion_part = 0.5 * gen.diffusion.eval(x).trace_product(&hess);
    let (small, big) = jump_parts(x, gen, test, &grad, opts)?;
    Ok(GeneratorValue {
        drift_part,
        diffusion_part,
        small_jump_part: small.value,
        big_jump_part: big.value,
        total: drift_part + diffusion_part + small.value + big.value,
        est_error: small.error + big.error,
    })
}

fn jump_parts<T: TestFunction>(
    x: &Vector,
    gen: &GeneratorSpec,
    test: &T,
    grad: &Vector,
    opts: &CubatureOptions,
) -> Result<(Estimate, Estimate)> {
    if gen.kernel.is_zero() {
        return Ok((Estimate::default(), Estimate::default()));
    }
    let at = KernelAt::new(&gen.kernel, x);
    let prob = Problem {
        at: &at,
        cos_breaks: alloc::vec::Vec::new(),
        oscillation: None,
        axisymmetric: false,
    };
    let rule = TaylorRule::new();
    let vx = test.value(x);
    let nx = x.norm();
    let res = integrate(&prob, [None, Some(test.growth_order())], opts, |n, out| {
        if n.r <= 1.0 {
            out[0] = rule.compensated(test, x, vx, grad, &n.w, n.norm_w, nx);
        } else {
            out[1] = test.value(&(*x + n.w)) - vx;
        }
    });
    checked(&res, &[0, 1], "jump integral")?;
    Ok((res.est[0], res.est[1]))
}

/// `∫_{|u|≤1} (V(x+w) − V(x) − ∇V(x)·w) ν(du)` with its error estimate.
pub fn small_jump_integral(
    x: &Vector,
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    opts: &CubatureOptions,
) -> Result<Functional> {
    gen.check_point(x)?;
    let grad = lyap.grad(x)?;
    Ok(jump_parts(x, gen, lyap, &grad, opts)?.0.into())
}

/// `∫_{|u|>1} (V(x+w) − V(x)) ν(du)` with its error estimate.
pub fn big_jump_integral(
    x: &Vector,
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    opts: &CubatureOptions,
) -> Result<Functional> {
    gen.check_point(x)?;
    let grad = lyap.grad(x)?;
    Ok(jump_parts(x, gen, lyap, &grad, opts)?.1.into())
}

/// `∫_{|u|≤1} (V(x+w) − V(x)) ν(du)` without the gradient compensator; only
/// finite when the small-jump kernel is integrable against `|u|`.
pub fn small_jump_uncompensated(
    x: &Vector,
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    opts: &CubatureOptions,
) -> Result<Functional> {
    gen.check_point(x)?;
    let at = KernelAt::new(&gen.kernel, x);
    let prob = Problem {
        at: &at,
        cos_breaks: alloc::vec::Vec::new(),
        oscillation: None,
        axisymmetric: false,
    };
    let vx = lyap.eval(x);
    let res = integrate(&prob, [None], opts, |n, out| {
        if n.r <= 1.0 {
            out[0] = lyap.eval(&(*x + n.w)) - vx;
        }
    });
    checked(&res, &[0], "uncompensated small-jump integral")?;
    Ok(res.est[0].into())
}

/// Split of the small-jump part over `D_x^small` and its complement in the
/// unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallJumpParts {
    pub i1: Functional,
    pub i2: Functional,
}

/// Split of the big-jump part: `J` (landing in `B(0,1)`), `I₃` over
/// `D_x^big`, `I₄` over the rest, and the mass of `B(−x,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigJumpParts {
    pub j: Functional,
    pub i3: Functional,
    pub i4: Functional,
    pub ball_mass: Functional,
}

pub fn small_jump_decomposition(
    x: &Vector,
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    cones: &ConeSpec,
    opts: &CubatureOptions,
) -> Result<SmallJumpParts> {
    let s = sweep(x, gen, lyap, cones, opts)?;
    Ok(SmallJumpParts {
        i1: s.est[idx::I1].into(),
        i2: s.est[idx::I2].into(),
    })
}

pub fn big_jump_decomposition(
    x: &Vector,
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    cones: &ConeSpec,
    opts: &CubatureOptions,
) -> Result<BigJumpParts> {
    let s = sweep(x, gen, lyap, cones, opts)?;
    Ok(BigJumpParts {
        j: s.est[idx::J].into(),
        i3: s.est[idx::I3].into(),
        i4: s.est[idx::I4].into(),
        ball_mass: s.est[idx::BALL].into(),
    })
}

/// `Re q(x, ξ) = ½ ξ'Q(x)ξ + ∫ (1 − cos(ξ·w)) ν(du)`.
pub fn symbol_re(
    x: &Vector,
    xi: &Vector,
    gen: &GeneratorSpec,
    opts: &CubatureOptions,
) -> Result<Functional> {
    symbol_re_with_cut(x, xi, gen, opts, SYMBOL_CUT)
}

pub(crate) fn symbol_re_with_cut(
    x: &Vector,
    xi: &Vector,
    gen: &GeneratorSpec,
    opts: &CubatureOptions,
    cut: f64,
) -> Result<Functional> {
    gen.check_point(x)?;
    if xi.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: xi.dim(),
        });
    }
    let diff = 0.5 * gen.diffusion.eval(x).quad_form(xi);
    if xi.norm() == 0.0 || gen.kernel.is_zero() {
        return Ok(Functional {
            value: diff,
            est_error: 0.0,
        });
    }
    let at = KernelAt::new(&gen.kernel, x);
    // ξ·Φu = (Φ'ξ)·u
    let eta = match gen.kernel.phi_field() {
        Some(_) => at.phi.tr_mul_vec(xi),
        None => *xi,
    };
    let rs = cut / eta.norm();
    let prob = Problem {
        at: &at,
        cos_breaks: alloc::vec::Vec::new(),
        oscillation: Some(Oscillation { eta, cut }),
        axisymmetric: false,
    };
    let res = integrate(&prob, [Some(0.0)], opts, |n, out| {
        out[0] = if n.r > rs {
            1.0
        } else {
            let s = libm::sin(0.5 * xi.dot(&n.w));
            2.0 * s * s
        };
    });
    checked(&res, &[0], "symbol")?;
    Ok(Functional {
        value: diff + res.est[0].value,
        est_error: res.est[0].error,
    })
}

/// Component indices of [`sweep`].
pub(crate) mod idx {
    /// `∫_{D_small} |w|²`.
    pub const S_IN: usize = 0;
    /// `∫_{B(0,1)∖D_small} |w|² (1 + (p−2)γ²)`.
    pub const S_OUT: usize = 1;
    /// `∫_{D_big} |w|`.
    pub const G_IN: usize = 2;
    /// `∫_{B^c(0,1)∖D_big} |w|^p`.
    pub const G_OUT: usize = 3;
    /// `ν(x, B(−x, 1))`.
    pub const BALL: usize = 4;
    /// Compensated small-jump part, source split `|u| ≤ 1`.
    pub const SMALL: usize = 5;
    /// Big-jump part, source split `|u| > 1`.
    pub const BIG: usize = 6;
    pub const I1: usize = 7;
    pub const I2: usize = 8;
    pub const J: usize = 9;
    pub const I3: usize = 10;
    pub const I4: usize = 11;
    /// Φ-cones in the source variable.
    pub const SP_IN: usize = 12;
    pub const SP_OUT: usize = 13;
    pub const GP_IN: usize = 14;
    pub const GP_OUT: usize = 15;
    pub const K: usize = 16;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SweepResult {
    pub est: [Estimate; idx::K],
    pub converged: bool,
}

/// Every kernel integral the analysis needs at one state, in one pass.
pub(crate) fn sweep(
    x: &Vector,
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    cones: &ConeSpec,
    opts: &CubatureOptions,
) -> Result<SweepResult> {
    gen.check_point(x)?;
    let nx = x.norm();
    if !(nx > 1.0) {
        return Err(Error::Domain("the analysis sweep needs |x| > 1"));
    }
    if gen.kernel.is_zero() {
        return Ok(SweepResult {
            est: [Estimate::default(); idx::K],
            converged: true,
        });
    }
    let at = KernelAt::new(&gen.kernel, x);
    let prob = Problem {
        at: &at,
        cos_breaks: analysis_breaks(cones),
        oscillation: None,
        axisymmetric: kernel_is_axial(&gen.kernel),
    };
    let p = lyap.p();
    let (es, eb) = (cones.eps_small(), cones.eps_big());
    let big_radius_phi = nx / at.phi_norm;
    let rule = TaylorRule::new();
    let vx = lyap.eval(x);
    let grad = lyap.grad(x)?;
    let xp = libm::pow(nx, p);
    let mut growth = [None; idx::K];
    for c in [idx::G_OUT, idx::BIG, idx::I4, idx::GP_OUT] {
        growth[c] = Some(p);
    }
    let res = integrate(&prob, growth, opts, |n, out| {
        let (r, nw, g) = (n.r, n.norm_w, n.gamma_w);
        let y = *x + n.w;
        let ny = y.norm();
        let vy = lyap.radial(ny).value;
        let comp = if nw <= 1.0 || r <= 1.0 {
            rule.compensated(lyap, x, vx, &grad, &n.w, nw, nx)
        } else {
            0.0
        };
        // general pipeline, jump variable w
        if nw <= 1.0 {
            if small_cone_test(nw, g, es) {
                out[idx::S_IN] = nw * nw;
                out[idx::I1] = comp;
            } else {
                out[idx::S_OUT] = nw * nw * (1.0 + (p - 2.0) * g * g);
                out[idx::I2] = comp;
            }
        } else {
            let inc = libm::pow(ny, p) - xp;
            if ny <= 1.0 {
                out[idx::BALL] = 1.0;
                out[idx::J] = vy - libm::pow(ny, p);
            }
            if big_cone_test(nw, nx, g, eb) {
                out[idx::G_IN] = nw;
                out[idx::I3] = inc;
            } else {
                out[idx::G_OUT] = libm::pow(nw, p);
                out[idx::I4] = inc;
            }
        }
        // generator split in the source variable
        if r <= 1.0 {
            out[idx::SMALL] = comp;
        } else {
            out[idx::BIG] = vy - vx;
        }
        // Φ-cones in the source variable
        if r <= 1.0 {
            if small_cone_test(r, g, es) {
                out[idx::SP_IN] = r * r;
            } else {
                out[idx::SP_OUT] = r * r * (1.0 + (p - 2.0) * g * g);
            }
        } else if big_cone_test(r, big_radius_phi, g, eb) {
            out[idx::GP_IN] = r;
        } else {
            out[idx::GP_OUT] = libm::pow(r, p);
        }
    });
    let all: [usize; idx::K] = core::array::from_fn(|i| i);
    for &c in &all {
        if let Some((end, exponent)) = res.divergent[c] {
            return Err(Error::Integrability { end, exponent });
        }
    }
    Ok(SweepResult {
        est: res.est,
        converged: res.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{DiffusionField, DriftField, JumpKernel};
    use crate::linalg::Matrix;

    #[test]
    fn taylor_rule_is_exact_for_quadratics() {
        let q = crate::lyapunov::QuadraticForm::new(
            Matrix::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]).unwrap(),
            Vector::zeros(2),
        )
        .unwrap();
        let rule = TaylorRule::new();
        let x = Vector::from_slice(&[1.0, 2.0]).unwrap();
        let w = Vector::from_slice(&[1e-5, -2e-5]).unwrap();
        let g = q.gradient(&x).unwrap();
        let exact = 0.5 * q.hessian(&x).unwrap().quad_form(&w);
        let got = rule.compensated(&q, &x, q.value(&x), &g, &w, w.norm(), 1e9);
        assert!((got - exact).abs() < 1e-14 * exact.abs().max(1e-300));
    }

    #[test]
    fn pure_diffusion_symbol() {
        let gen = GeneratorSpec::new(
            2,
            DriftField::Zero,
            DiffusionField::OuterProduct { scale: 1.0 },
            JumpKernel::zero(),
        )
        .unwrap();
        let x = Vector::from_slice(&[2.0, 1.0]).unwrap();
        let xi = Vector::from_slice(&[0.5, -1.0]).unwrap();
        let s = symbol_re(&x, &xi, &gen, &CubatureOptions::default()).unwrap();
        // ½ (ξ·x)² = ½ (1 − 1)² = 0
        assert_eq!(s.value, 0.0);
    }
}
