//! `ψ(t) = f(F⁻¹(γt))^{-δ}` by numeric integration of `1/f` and bisection.

use levy_drift_core::rate::effective_f;
use levy_drift_core::RateSpec;

/// `∫₁ᵀ dw/f(w)` in the variable `s = ln w`, composite Simpson.
pub fn numeric_big_f(t: f64, p: f64, gamma: f64) -> f64 {
    let top = t.ln();
    if top == 0.0 {
        return 0.0;
    }
    let n = 20_000;
    let h = top / n as f64;
    let g = |s: f64| s.exp() / effective_f(s.exp(), p, gamma).unwrap();
    let mut acc = g(0.0) + g(top);
    for i in 1..n {
        acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// `F⁻¹(target)` by bisection on `ln w`.
pub fn numeric_inverse(target: f64, p: f64, gamma: f64) -> f64 {
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while numeric_big_f(hi.exp(), p, gamma) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if numeric_big_f(mid.exp(), p, gamma) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
    }
    (0.5 * (lo + hi)).exp()
}

pub fn numeric_psi(t: f64, spec: &RateSpec) -> f64 {
    let w = numeric_inverse(spec.gamma_time * t, spec.p, spec.gamma);
    effective_f(w, spec.p, spec.gamma).unwrap().powf(-spec.delta)
}

/// Specs covering both regimes with non-default `δ` and time scale.
pub fn specs() -> Vec<RateSpec> {
    vec![
        RateSpec::new(0.5, 0.8).unwrap(),
        RateSpec::with_params(0.7, 0.45, 0.3, 0.6).unwrap(),
        RateSpec::new(0.5, 1.0).unwrap(),
        RateSpec::with_params(0.3, 1.4, 0.8, 0.2).unwrap(),
    ]
}

/// 20 log-spaced times in `[1, 1000]`.
pub fn times() -> Vec<f64> {
    (0..20).map(|i| 10f64.powf(3.0 * i as f64 / 19.0)).collect()
}
