//! Increment samplers for the kernel families with samplable jumps.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::cubature::sphere_area;
use crate::error::{Error, Result};
use crate::kernels::{CompoundPoissonKernel, JumpKernel, JumpLaw, StableKernel};
use crate::linalg::{Matrix, Vector};

pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vector {
    let mut z = Vector::zeros(d);
    for k in 0..d {
        z[k] = StandardNormal.sample(rng);
    }
    z
}

/// Uniform direction on the unit sphere.
pub(crate) fn direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vector {
    loop {
        if let Some(v) = gaussian(rng, d).normalized() {
            return v;
        }
    }
}

/// Radial law `∝ r^{−1−α}` on `(a, b]`, `b` possibly infinite.
#[derive(Debug, Clone, Copy)]
struct PowerShell {
    a_pow: f64,
    b_pow: f64,
    inv_alpha: f64,
}

impl PowerShell {
    fn new(a: f64, b: f64, alpha: f64) -> Self {
        PowerShell {
            a_pow: libm::pow(a, -alpha),
            b_pow: if b.is_finite() { libm::pow(b, -alpha) } else { 0.0 },
            inv_alpha: 1.0 / alpha,
        }
    }

    /// `∫_a^b r^{−1−α} dr`.
    fn mass(&self) -> f64 {
        (self.a_pow - self.b_pow) * self.inv_alpha
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        libm::pow(self.a_pow - u * (self.a_pow - self.b_pow), -self.inv_alpha)
    }
}

#[derive(Debug, Clone)]
struct JumpClass {
    poisson: Option<Poisson<f64>>,
    law: JumpSource,
}

#[derive(Debug, Clone)]
enum JumpSource {
    Stable(PowerShell),
    Atoms { cumulative: alloc::vec::Vec<f64>, atoms: alloc::vec::Vec<Vector> },
    Gaussian { std: f64 },
}

impl JumpClass {
    fn new(rate: f64, dt: f64, law: JumpSource) -> Result<Self> {
        let poisson = if rate * dt > 0.0 {
            Some(Poisson::new(rate * dt).map_err(|_| Error::param("kernel", "jump rate is not finite"))?)
        } else {
            None
        };
        Ok(JumpClass { poisson, law })
    }

    fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R, d: usize) -> Vector {
        match &self.law {
            JumpSource::Stable(shell) => direction(rng, d) * shell.sample(rng),
            JumpSource::Gaussian { std } => gaussian(rng, d) * *std,
            JumpSource::Atoms { cumulative, atoms } => {
                let total = *cumulative.last().unwrap();
                let u: f64 = rng.random::<f64>() * total;
                let k = cumulative.partition_point(|&c| c <= u).min(atoms.len() - 1);
                atoms[k]
            }
        }
    }

    /// Sum of the source jumps arriving during one step.
    fn sum<R: Rng + ?Sized>(&self, rng: &mut R, d: usize) -> Option<Vector> {
        let n = self.poisson.as_ref()?.sample(rng) as u64;
        if n == 0 {
            return None;
        }
        let mut s = Vector::zeros(d);
        for _ in 0..n {
            s += self.sample_jump(rng, d);
        }
        Some(s)
    }
}

/// Per-step jump increments in the source variable `u`; the caller maps them
/// through `Φ(X)`.
#[derive(Debug, Clone)]
pub(crate) struct JumpSampler {
    d: usize,
    /// Per-coordinate standard deviation of the Gaussian stand-in for jumps
    /// with `|u| ≤ r_cut`, per unit time.
    small_std: f64,
    classes: alloc::vec::Vec<JumpClass>,
    /// `∫ u 1{|u| ≤ 1} ν(du)`, removed from the drift when jumps are added
    /// uncompensated.
    pub compensator: Vector,
    /// `∫_{|u| ≤ r_cut} |u|³ ν(du)`.
    pub third_moment: f64,
}

impl JumpSampler {
    pub fn new(kernel: &JumpKernel, d: usize, r_cut: f64, dt: f64) -> Result<Self> {
        match kernel {
            JumpKernel::StateDependent(_) => {
                if kernel.is_zero() {
                    Ok(Self::empty(d))
                } else {
                    Err(Error::UnsupportedFamily(
                        "state-dependent densities cannot be simulated; use a multiplicative or compound Poisson kernel",
                    ))
                }
            }
            JumpKernel::MultiplicativeStable(k) => Self::stable(k, d, r_cut, dt),
            JumpKernel::CompoundPoisson(k) => Self::compound(k, d, dt),
        }
    }

    fn empty(d: usize) -> Self {
        JumpSampler {
            d,
            small_std: 0.0,
            classes: alloc::vec::Vec::new(),
            compensator: Vector::zeros(d),
            third_moment: 0.0,
        }
    }

    fn stable(k: &StableKernel, d: usize, r_cut: f64, dt: f64) -> Result<Self> {
        let mut s = Self::empty(d);
        if k.coeff == 0.0 {
            return Ok(s);
        }
        let t = k.truncation.unwrap_or(f64::INFINITY);
        let a = k.alpha;
        let c = k.coeff * sphere_area(d);
        let rc = r_cut.min(t);
        // Σ = (c/d) ∫_0^{rc} r^{1−α} dr · I
        s.small_std = libm::sqrt(c * libm::pow(rc, 2.0 - a) / ((2.0 - a) * d as f64));
        s.third_moment = c * libm::pow(rc, 3.0 - a) / (3.0 - a);
        for (lo, hi) in [(r_cut, t.min(1.0)), (1.0, t)] {
            if hi > lo {
                let shell = PowerShell::new(lo, hi, a);
                s.classes.push(JumpClass::new(c * shell.mass(), dt, JumpSource::Stable(shell))?);
            }
        }
        Ok(s)
    }

    fn compound(k: &CompoundPoissonKernel, d: usize, dt: f64) -> Result<Self> {
        let mut s = Self::empty(d);
        match &k.law {
            JumpLaw::Gaussian { rate, std } => {
                s.classes.push(JumpClass::new(*rate, dt, JumpSource::Gaussian { std: *std })?);
            }
            JumpLaw::Atoms(atoms) => {
                let atoms: alloc::vec::Vec<_> = atoms.iter().filter(|a| a.weight > 0.0).collect();
                if atoms.is_empty() {
                    return Ok(s);
                }
                let mut acc = 0.0;
                let cumulative = atoms
                    .iter()
                    .map(|a| {
                        acc += a.weight;
                        acc
                    })
                    .collect();
                for a in &atoms {
                    if a.u.norm() <= 1.0 {
                        s.compensator += a.u * a.weight;
                    }
                }
                let law = JumpSource::Atoms {
                    cumulative,
                    atoms: atoms.iter().map(|a| a.u).collect(),
                };
                s.classes.push(JumpClass::new(acc, dt, law)?);
            }
        }
        Ok(s)
    }

    /// Source-space increment over one step of length `dt`: Gaussian
    /// stand-in for the smallest jumps plus every sampled jump.
    pub fn increment<R: Rng + ?Sized>(&self, rng: &mut R, dt: f64) -> Option<Vector> {
        let mut total: Option<Vector> = None;
        if self.small_std > 0.0 {
            total = Some(gaussian(rng, self.d) * (self.small_std * libm::sqrt(dt)));
        }
        for c in &self.classes {
            if let Some(j) = c.sum(rng, self.d) {
                total = Some(total.map_or(j, |t| t + j));
            }
        }
        total
    }
}

/// `Q^{1/2}(x)`, precomputed when `Q` does not depend on the state.
#[derive(Debug, Clone)]
pub(crate) enum DiffusionRoot {
    None,
    Constant(Matrix),
    StateDependent,
}
