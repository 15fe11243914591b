//! Euler simulation of the jump-diffusion with generator `ℒ^Φ` and the
//! empirical checks built on it.
//!
//! Every path draws from its own ChaCha8 stream, selected by the path index,
//! so ensembles are identical however the paths are scheduled.

mod sampling;
pub mod stats;

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::kernels::{DiffusionField, GeneratorSpec};
use crate::linalg::{Matrix, Vector};
use sampling::{gaussian, DiffusionRoot, JumpSampler};

pub use stats::{
    fit_rate, skeleton_drift_check, tv_decay, tv_distance, EmpiricalMeasure, FittedModel, RateFit,
    SkeletonCheck, SkeletonRow, TvPoint, TvSeries, BOOTSTRAP_RESAMPLES, DECAY_CEILING, FLOOR_MULTIPLE,
};

/// Paths whose norm exceeds this are stopped and flagged.
pub const EXPLOSION_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Euler step; rounded down so that `h` is a whole number of steps.
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    /// Source jumps with `|u| ≤ r_cut` are replaced by a matched Gaussian.
    pub r_cut: f64,
    pub seed: u64,
    /// Skeleton step.
    pub h: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.01,
            horizon: 20.0,
            n_paths: 10_000,
            r_cut: 0.1,
            seed: 0,
            h: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::param("h", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt <= self.h) {
            return Err(Error::param("dt", "must lie in (0, h]"));
        }
        if !(self.r_cut > 0.0 && self.r_cut <= 1.0) {
            return Err(Error::param("r_cut", "must lie in (0, 1]"));
        }
        if !(self.horizon >= self.h && self.horizon.is_finite()) {
            return Err(Error::param("horizon", "must be finite and at least h"));
        }
        if self.n_paths == 0 {
            return Err(Error::param("n_paths", "must be positive"));
        }
        Ok(())
    }

    /// Euler steps per skeleton step.
    pub fn steps_per_skeleton(&self) -> usize {
        libm::ceil(self.h / self.dt - 1e-9) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        self.h / self.steps_per_skeleton() as f64
    }

    /// Number of skeleton times `0, h, …` up to the horizon.
    pub fn n_snapshots(&self) -> usize {
        libm::floor(self.horizon / self.h + 1e-9) as usize + 1
    }
}

/// Skeleton states `X_{kh}` of an ensemble of independent paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    dim: usize,
    n_paths: usize,
    n_snapshots: usize,
    pub h: f64,
    pub dt: f64,
    pub seed: u64,
    /// Index of the first RNG stream; path `i` uses stream `first_stream + i`.
    pub first_stream: u64,
    /// Weak-error bound of the small-jump Gaussian replacement.
    pub truncation_bias: f64,
    /// Path-major, then snapshot, then coordinate. Stopped paths hold NaN
    /// after the explosion.
    data: Vec<f64>,
    exploded: Vec<bool>,
}

impl PathEnsemble {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_snapshots(&self) -> usize {
        self.n_snapshots
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_snapshots).map(|k| k as f64 * self.h).collect()
    }

    pub fn state(&self, path: usize, k: usize) -> Vector {
        let o = (path * self.n_snapshots + k) * self.dim;
        Vector::from_slice(&self.data[o..o + self.dim]).unwrap()
    }

    pub fn exploded(&self, path: usize) -> bool {
        self.exploded[path]
    }

    pub fn exploded_count(&self) -> usize {
        self.exploded.iter().filter(|&&e| e).count()
    }

    /// States at skeleton time `k` of the paths that did not explode.
    pub fn snapshot(&self, k: usize) -> Vec<Vector> {
        (0..self.n_paths)
            .filter(|&i| !self.exploded[i])
            .map(|i| self.state(i, k))
            .collect()
    }

    /// Raw row-major data: path, snapshot, coordinate.
    pub fn raw(&self) -> &[f64] {
        &self.data
    }
}

/// Fixed per-ensemble ingredients of the Euler step.
struct Stepper<'a> {
    gen: &'a GeneratorSpec,
    jumps: JumpSampler,
    root: DiffusionRoot,
    dt: f64,
    multiplicative: bool,
}

impl<'a> Stepper<'a> {
    fn new(gen: &'a GeneratorSpec, cfg: &SimConfig) -> Result<Self> {
        let d = gen.dim();
        let dt = cfg.effective_dt();
        let jumps = JumpSampler::new(&gen.kernel, d, cfg.r_cut, dt)?;
        let root = match &gen.diffusion {
            DiffusionField::Zero => DiffusionRoot::None,
            DiffusionField::Constant(m) => DiffusionRoot::Constant(m.sqrt_psd(1e-10)?),
            _ => DiffusionRoot::StateDependent,
        };
        Ok(Stepper {
            gen,
            jumps,
            root,
            dt,
            multiplicative: gen.kernel.phi_field().is_some(),
        })
    }

    fn diffusion_root(&self, x: &Vector) -> Result<Option<Matrix>> {
        Ok(match &self.root {
            DiffusionRoot::None => None,
            DiffusionRoot::Constant(m) => Some(*m),
            DiffusionRoot::StateDependent => {
                let q = self.gen.diffusion.eval(x);
                if q.frobenius() == 0.0 {
                    None
                } else {
                    Some(q.sqrt_psd(1e-10)?)
                }
            }
        })
    }

    fn step(&self, x: &Vector, rng: &mut ChaCha8Rng) -> Result<Vector> {
        let d = x.dim();
        let phi = if self.multiplicative {
            Some(self.gen.kernel.phi_at(x))
        } else {
            None
        };
        let mut drift = self.gen.drift_phi(x);
        if let Some(m) = &phi {
            drift -= m.mul_vec(&self.jumps.compensator);
        }
        let mut y = *x + drift * self.dt;
        if let Some(s) = self.diffusion_root(x)? {
            y += s.mul_vec(&(gaussian(rng, d) * libm::sqrt(self.dt)));
        }
        if let Some(j) = self.jumps.increment(rng, self.dt) {
            y += match &phi {
                Some(m) => m.mul_vec(&j),
                None => j,
            };
        }
        Ok(y)
    }
}

fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct PathOutput {
    data: Vec<f64>,
    exploded: bool,
    max_phi: f64,
}

fn simulate_path(
    stepper: &Stepper,
    x0: &Vector,
    cfg: &SimConfig,
    stream: u64,
) -> Result<PathOutput> {
    let d = x0.dim();
    let ns = cfg.n_snapshots();
    let m = cfg.steps_per_skeleton();
    let mut rng = path_rng(cfg.seed, stream);
    let mut data = Vec::with_capacity(ns * d);
    data.extend_from_slice(x0.as_slice());
    let mut x = *x0;
    let mut max_phi: f64 = 0.0;
    let track_phi = stepper.multiplicative && stepper.jumps.third_moment > 0.0;
    for _ in 1..ns {
        for _ in 0..m {
            if track_phi {
                max_phi = max_phi.max(stepper.gen.kernel.phi_at(&x).row_sum_norm());
            }
            x = stepper.step(&x, &mut rng)?;
            if !(x.norm() <= EXPLOSION_NORM) {
                data.resize(ns * d, f64::NAN);
                return Ok(PathOutput {
                    data,
                    exploded: true,
                    max_phi,
                });
            }
        }
        data.extend_from_slice(x.as_slice());
    }
    Ok(PathOutput {
        data,
        exploded: false,
        max_phi,
    })
}

/// Simulates `cfg.n_paths` paths from `x0`, recording the skeleton.
pub fn simulate_ensemble<E: Executor>(
    x0: &Vector,
    gen: &GeneratorSpec,
    cfg: &SimConfig,
    exec: &E,
) -> Result<PathEnsemble> {
    simulate_ensemble_streams(x0, gen, cfg, 0, exec)
}

/// As [`simulate_ensemble`], with path `i` on RNG stream `first_stream + i`.
pub fn simulate_ensemble_streams<E: Executor>(
    x0: &Vector,
    gen: &GeneratorSpec,
    cfg: &SimConfig,
    first_stream: u64,
    exec: &E,
) -> Result<PathEnsemble> {
    cfg.validate()?;
    if x0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: x0.dim(),
        });
    }
    if !x0.is_finite() {
        return Err(Error::Domain("initial state must be finite"));
    }
    let stepper = Stepper::new(gen, cfg)?;
    let outs = exec.map(cfg.n_paths, |i| {
        simulate_path(&stepper, x0, cfg, first_stream + i as u64)
    });
    let d = gen.dim();
    let ns = cfg.n_snapshots();
    let mut data = Vec::with_capacity(cfg.n_paths * ns * d);
    let mut exploded = Vec::with_capacity(cfg.n_paths);
    let mut max_phi: f64 = 0.0;
    for o in outs {
        let o = o?;
        data.extend_from_slice(&o.data);
        exploded.push(o.exploded);
        max_phi = max_phi.max(o.max_phi);
    }
    let phi3 = if stepper.multiplicative { max_phi * max_phi * max_phi } else { 1.0 };
    Ok(PathEnsemble {
        dim: d,
        n_paths: cfg.n_paths,
        n_snapshots: ns,
        h: cfg.h,
        dt: cfg.effective_dt(),
        seed: cfg.seed,
        first_stream,
        truncation_bias: cfg.horizon * stepper.jumps.third_moment * phi3,
        data,
        exploded,
    })
}
