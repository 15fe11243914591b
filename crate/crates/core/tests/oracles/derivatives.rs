//! Central finite differences of `V` and its gradient, and the closed-form
//! Hessian spectrum outside the unit ball.

use levy_drift_core::lyapunov::LyapunovSpec;
use levy_drift_core::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_point(rng: &mut ChaCha8Rng, d: usize, r_lo: f64, r_hi: f64) -> Vector {
    let c: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let dir = Vector::from_slice(&c).unwrap().normalized().unwrap_or_else(|| Vector::basis(d, 0));
    let r = (rng.random::<f64>() * (r_hi.ln() - r_lo.ln()) + r_lo.ln()).exp();
    dir * r
}

pub fn fd_grad(v: &LyapunovSpec, x: &Vector, h: f64) -> Vector {
    Vector::from_fn(x.dim(), |i| {
        let e = Vector::basis(x.dim(), i) * h;
        (v.eval(&(*x + e)) - v.eval(&(*x - e))) / (2.0 * h)
    })
}

pub fn fd_hess(v: &LyapunovSpec, x: &Vector, h: f64) -> Matrix {
    let cols: Vec<Vector> = (0..x.dim())
        .map(|j| {
            let e = Vector::basis(x.dim(), j) * h;
            (v.grad(&(*x + e)).unwrap() - v.grad(&(*x - e)).unwrap()) * (0.5 / h)
        })
        .collect();
    Matrix::from_fn(x.dim(), |i, j| cols[j][i])
}

/// Worst relative errors `(grad, hess)` of the analytic derivatives over
/// `n` random points with `|x| ∈ [0.1, 100]`, `d ∈ {2, 3, 4}`, random `p`.
pub fn worst_fd_errors(n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0f64, 0.0f64);
    for k in 0..n {
        let d = 2 + k % 3;
        let p = 0.1 + 0.8 * rng.random::<f64>();
        let v = LyapunovSpec::new(p).unwrap();
        let x = random_point(&mut rng, d, 0.1, 100.0);
        let h = 1e-5 * x.norm();
        let g = v.grad(&x).unwrap();
        let eg = (fd_grad(&v, &x, h) - g).norm() / g.norm();
        let hs = v.hess(&x).unwrap();
        let eh = fd_hess(&v, &x, h).add_mat(&hs.scale(-1.0)).frobenius() / hs.frobenius();
        worst = (worst.0.max(eg), worst.1.max(eh));
    }
    worst
}

/// Worst relative deviation of the Hessian from `p(p−1)|x|^{p−2}` on `x`
/// and `p|x|^{p−2}` on its orthogonal complement, checked through the
/// eigenpairs and the sorted spectrum, `|x| ∈ (1, 100]`.
pub fn worst_eigen_error(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let d = 2 + rng.random_range(0..4);
        let p = 0.05 + 0.9 * rng.random::<f64>();
        let v = LyapunovSpec::new(p).unwrap();
        let x = random_point(&mut rng, d, 1.0 + 1e-6, 100.0);
        let r = x.norm();
        let radial = p * (p - 1.0) * r.powf(p - 2.0);
        let tangential = p * r.powf(p - 2.0);
        let h = v.hess(&x).unwrap();
        let e = x * (1.0 / r);
        worst = worst.max((h.mul_vec(&e) - e * radial).norm() / radial.abs());
        let c: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut t = Vector::from_slice(&c).unwrap();
        t -= e * t.dot(&e);
        let t = t.normalized().unwrap();
        worst = worst.max((h.mul_vec(&t) - t * tangential).norm() / tangential);
        let (vals, _) = h.symmetric_eigen();
        let mut vals: Vec<f64> = vals.as_slice().to_vec();
        vals.sort_by(f64::total_cmp);
        worst = worst.max((vals[0] - radial).abs() / radial.abs());
        for &l in &vals[1..] {
            worst = worst.max((l - tangential).abs() / tangential);
        }
    }
    worst
}
