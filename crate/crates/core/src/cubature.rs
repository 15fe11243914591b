//! Polar cubature for integrals against a Lévy kernel frozen at a state.
//!
//! The jump-source variable is written `u = r·ϑ`. Each direction `ϑ` gets its
//! own radial breakpoints (the unit sphere, `|x|`, cone radii, the ball
//! around `−x`, truncation) and the radial integral between breakpoints uses
//! 6-point Gauss–Legendre panels in `ln r`. The inner cutoff `r₀ = 1e−8` is
//! closed by a power-law extrapolation; the outer tail beyond
//! `max(10|x|, 10³)` is mapped to `(0, 1]` using the declared decay order of
//! the kernel. Angular rules:
//!
//! * `d = 1`: the two rays `±e_x`;
//! * `d = 2`: Gauss–Legendre panels in the angle, split where a cone or ball
//!   boundary crosses;
//! * `d = 3`: Gauss–Legendre in the polar angle about `e_x` (split the same
//!   way) times the trapezoid rule in azimuth;
//! * `d ≥ 4`: randomly shifted Halton directions.
//!
//! Each refinement level halves every panel. The reported error is the
//! difference between the last two levels plus the tail-closure error.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::TailEnd;
use crate::kernels::KernelAt;
use crate::linalg::{orthonormal_frame, Matrix, Vector};

pub const INNER_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubatureOptions {
    /// Relative tolerance per component, measured against
    /// `max(|value|, ∫|integrand|)`.
    pub tol: f64,
    pub max_level: u32,
}

impl Default for CubatureOptions {
    fn default() -> Self {
        CubatureOptions {
            tol: 1e-6,
            max_level: 4,
        }
    }
}

impl CubatureOptions {
    pub fn with_tol(tol: f64) -> Self {
        CubatureOptions {
            tol,
            ..Default::default()
        }
    }
}

/// A value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// `∫|integrand|`, the natural scale for relative tolerances.
    pub l1: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            error: 0.0,
            l1: value.abs(),
        }
    }

    pub fn scaled(self, s: f64) -> Self {
        Estimate {
            value: self.value * s,
            error: self.error * s.abs(),
            l1: self.l1 * s.abs(),
        }
    }

    pub fn plus(self, other: Estimate) -> Self {
        Estimate {
            value: self.value + other.value,
            error: self.error + other.error,
            l1: self.l1 + other.l1,
        }
    }
}

/// One evaluation point of the jump variable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub w: Vector,
    /// `|u|`.
    pub r: f64,
    /// `|w|`.
    pub norm_w: f64,
    /// `γ_{x,w}` (0 when undefined).
    pub gamma_w: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Oscillation {
    /// Frequency vector in `u`: the integrand oscillates like `cos(η·u)`.
    pub eta: Vector,
    /// Beyond `|u| = cut / |η|` the integrand is replaced by its mean.
    pub cut: f64,
}

pub(crate) struct Problem<'a, 'k> {
    pub at: &'a KernelAt<'k>,
    /// Extra cosine thresholds `γ_{x,w} = t` where the integrand jumps.
    pub cos_breaks: Vec<f64>,
    pub oscillation: Option<Oscillation>,
    /// The integrand and kernel are invariant under rotations about `x`.
    pub axisymmetric: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CubatureResult<const K: usize> {
    pub est: [Estimate; K],
    /// Per component: the integral diverges at this end.
    pub divergent: [Option<(TailEnd, f64)>; K],
    pub converged: bool,
    pub level: u32,
}

const GL6_X: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GL6_W: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691_1,
    0.467_913_934_572_691_1,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub(crate) fn gauss_legendre<const N: usize>() -> ([f64; N], [f64; N]) {
    let mut x = [0.0; N];
    let mut w = [0.0; N];
    let n = N as f64;
    for i in 0..N.div_ceil(2) {
        let mut z = libm::cos(PI * (i as f64 + 0.75) / (n + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..N {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[N - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[N - 1 - i] = w[i];
    }
    (x, w)
}

const LOG_WIDTH0: f64 = 2.0;
const ANGLE_WIDTH0_2D: f64 = PI / 4.0;
const ANGLE_WIDTH0_3D: f64 = PI / 8.0;
const AZIMUTH0: usize = 8;
const TAIL_OCTAVES: i32 = 12;
const SCAN_POINTS: usize = 720;
const QMC_REPLICATES: usize = 4;
const QMC_BASE: usize = 64;
const MAX_RADIUS: f64 = 1e250;

/// A direction with its angular weight.
#[derive(Clone, Copy)]
struct Dir {
    theta: Vector,
    weight: f64,
}

struct Acc<const K: usize> {
    sum: [f64; K],
    l1: [f64; K],
    tail_err: [f64; K],
    divergent: [Option<(TailEnd, f64)>; K],
}

impl<const K: usize> Acc<K> {
    fn new() -> Self {
        Acc {
            sum: [0.0; K],
            l1: [0.0; K],
            tail_err: [0.0; K],
            divergent: [None; K],
        }
    }
}

/// Integrates `K` functions of the jump against `ν(x, du)` simultaneously.
///
/// `f` writes the integrand values at a node (without the kernel density).
/// `growth[c]` is the power `q` with `|f_c| = O(|u|^q)` at infinity, or `None`
/// when `f_c` vanishes for large jumps.
pub(crate) fn integrate<const K: usize, F>(
    prob: &Problem<'_, '_>,
    growth: [Option<f64>; K],
    opts: &CubatureOptions,
    f: F,
) -> CubatureResult<K>
where
    F: Fn(&Node, &mut [f64; K]),
{
    let at = prob.at;
    let mut atom_vals = [Estimate::default(); K];
    let mut out = [0.0; K];
    for (u, wt) in at.atoms() {
        let node = make_node(at, u);
        out.iter_mut().for_each(|o| *o = 0.0);
        f(&node, &mut out);
        for c in 0..K {
            atom_vals[c].value += wt * out[c];
            atom_vals[c].l1 += (wt * out[c]).abs();
        }
    }
    if !at.has_density() {
        return CubatureResult {
            est: atom_vals,
            divergent: [None; K],
            converged: true,
            level: 0,
        };
    }

    let d = at.x.dim();
    let engine = Engine::new(prob, growth);
    let tol = opts.tol;
    let mut result = None;
    if d >= 4 {
        let mut last: Option<([f64; K], [f64; K], [f64; K], Acc<K>)> = None;
        for level in 0..=opts.max_level {
            let (mean, se, l1, acc) = engine.qmc(level, &f);
            let done = (0..K).all(|c| se[c] <= tol * mean[c].abs().max(l1[c]));
            last = Some((mean, se, l1, acc));
            if done {
                break;
            }
        }
        let (mean, se, l1, acc) = last.unwrap();
        let mut est = [Estimate::default(); K];
        for c in 0..K {
            est[c] = Estimate {
                value: mean[c],
                error: se[c] + acc.tail_err[c],
                l1: l1[c],
            }
            .plus(atom_vals[c]);
        }
        return CubatureResult {
            est,
            divergent: acc.divergent,
            converged: true,
            level: opts.max_level,
        };
    }

    let mut prev: Option<Acc<K>> = None;
    for level in 0..=opts.max_level {
        let acc = engine.sweep(level, &f);
        if let Some(p) = &prev {
            let ok = (0..K).all(|c| {
                acc.divergent[c].is_some()
                    || (acc.sum[c] - p.sum[c]).abs() <= tol * acc.sum[c].abs().max(acc.l1[c])
            });
            if ok || level == opts.max_level {
                result = Some((acc, prev.take().unwrap(), ok, level));
                break;
            }
        }
        prev = Some(acc);
    }
    let (acc, p, converged, level) = match result {
        Some(r) => r,
        None => {
            // max_level == 0: no nested estimate is available
            let acc = prev.unwrap();
            let p = Acc {
                sum: [f64::NAN; K],
                ..Acc::new()
            };
            (acc, p, false, 0)
        }
    };
    let mut est = [Estimate::default(); K];
    for c in 0..K {
        let diff = (acc.sum[c] - p.sum[c]).abs();
        est[c] = Estimate {
            value: acc.sum[c],
            error: if diff.is_finite() { diff } else { acc.l1[c] } + acc.tail_err[c],
            l1: acc.l1[c],
        }
        .plus(atom_vals[c]);
    }
    CubatureResult {
        est,
        divergent: acc.divergent,
        converged,
        level,
    }
}

fn make_node(at: &KernelAt<'_>, u: Vector) -> Node {
    let w = at.jump(&u);
    let norm_w = w.norm();
    let gamma_w = if norm_w > 0.0 && at.norm_x > 0.0 {
        (at.x.dot(&w) / (at.norm_x * norm_w)).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Node {
        w,
        r: u.norm(),
        norm_w,
        gamma_w,
    }
}

struct Engine<'p, 'a, 'k, const K: usize> {
    prob: &'p Problem<'a, 'k>,
    growth: [Option<f64>; K],
    frame: Matrix,
    /// Cosine thresholds in the jump direction.
    thresholds: Vec<f64>,
    tail_alpha: Option<f64>,
    support: Option<f64>,
    outer_base: f64,
}

impl<'p, 'a, 'k, const K: usize> Engine<'p, 'a, 'k, K> {
    fn new(prob: &'p Problem<'a, 'k>, growth: [Option<f64>; K]) -> Self {
        let at = prob.at;
        let d = at.x.dim();
        let e = at.x.normalized().unwrap_or_else(|| Vector::basis(d, 0));
        let mut frame = orthonormal_frame(&e);
        if d >= 3 && !prob.axisymmetric {
            // orient the second axis towards the preimage of −x so the polar
            // scan sees the ball window
            if let Some(pre) = preimage_of_minus_x(at) {
                let t = pre - e * pre.dot(&e);
                if let Some(t) = t.normalized() {
                    let mut f2 = orthonormal_frame(&e);
                    // Gram-Schmidt with t as the second vector
                    let mut cols = [Vector::zeros(d); crate::linalg::MAX_DIM];
                    cols[0] = e;
                    cols[1] = t;
                    let mut filled = 2;
                    for k in 1..d {
                        if filled == d {
                            break;
                        }
                        let mut v = f2.column(k);
                        for _ in 0..2 {
                            for c in cols.iter().take(filled) {
                                let pr = v.dot(c);
                                v -= *c * pr;
                            }
                        }
                        if v.norm() > 1e-8 {
                            cols[filled] = v.normalized().unwrap();
                            filled += 1;
                        }
                    }
                    if filled == d {
                        f2 = Matrix::from_fn(d, |i, j| cols[j][i]);
                        frame = f2;
                    }
                }
            }
        }
        let mut thresholds = prob.cos_breaks.clone();
        at.cosine_breaks(&mut thresholds);
        thresholds.retain(|t| t.abs() < 1.0);
        sort_dedup(&mut thresholds, 1e-15);
        let support = at.support_radius();
        let outer_base = (10.0 * at.norm_x).max(1e3);
        Engine {
            prob,
            growth,
            frame,
            thresholds,
            tail_alpha: at.tail_alpha(),
            support,
            outer_base,
        }
    }

    fn dir_from_frame(&self, coords: &[f64]) -> Vector {
        let d = self.frame.dim();
        let mut v = Vector::zeros(d);
        for (j, &c) in coords.iter().enumerate() {
            if c != 0.0 {
                v += self.frame.column(j) * c;
            }
        }
        v
    }

    /// Direction in the (e1, e2) plane of the frame at angle `t`.
    fn planar(&self, t: f64) -> Vector {
        let d = self.frame.dim();
        let mut c = [0.0; crate::linalg::MAX_DIM];
        c[0] = libm::cos(t);
        if d > 1 {
            c[1] = libm::sin(t);
        }
        self.dir_from_frame(&c[..d])
    }

    /// Angles in `[0, span]` where the integrand or density changes form.
    fn angular_breaks(&self, span: f64) -> Vec<f64> {
        let at = self.prob.at;
        let mut breaks = Vec::new();
        let mut k = 0.0;
        while k <= span + 1e-12 {
            breaks.push(k.min(span));
            k += PI / 2.0;
        }
        let xn = at.norm_x;
        let thresholds = &self.thresholds;
        let indicator_count = thresholds.len() + usize::from(xn > 1.0);
        if indicator_count == 0 || xn == 0.0 {
            return breaks;
        }
        let eval = |t: f64, i: usize| -> f64 {
            let a = at.jump(&self.planar(t));
            let na = a.norm();
            if i < thresholds.len() {
                if na == 0.0 {
                    return 0.0;
                }
                at.x.dot(&a) / (xn * na) - thresholds[i]
            } else {
                let xa = at.x.dot(&a);
                xa * xa - a.norm_sq() * (xn * xn - 1.0)
            }
        };
        let mut grid: Vec<f64> = (0..=SCAN_POINTS)
            .map(|i| span * i as f64 / SCAN_POINTS as f64)
            .collect();
        if xn > 1.0 {
            if let Some(pre) = preimage_of_minus_x(at) {
                let c0 = pre.dot(&self.frame.column(0));
                let c1 = if self.frame.dim() > 1 {
                    pre.dot(&self.frame.column(1))
                } else {
                    0.0
                };
                let mut t = libm::atan2(c1, c0);
                if t < 0.0 {
                    t += 2.0 * PI;
                }
                if t <= span {
                    grid.push(t);
                }
            }
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        for i in 0..indicator_count {
            let vals: Vec<f64> = grid.iter().map(|&t| eval(t, i)).collect();
            for j in 0..grid.len() - 1 {
                let (a, b) = (grid[j], grid[j + 1]);
                let (fa, fb) = (vals[j], vals[j + 1]);
                if fa == 0.0 {
                    breaks.push(a);
                } else if fa * fb < 0.0 {
                    breaks.push(bisect(|t| eval(t, i), a, b, fa));
                }
            }
            // narrow ball window around the preimage seed
            if i == thresholds.len() {
                if let Some(pos) = grid
                    .iter()
                    .zip(vals.iter())
                    .enumerate()
                    .filter(|(_, (_, v))| **v > 0.0)
                    .map(|(j, _)| j)
                    .next()
                {
                    let _ = pos;
                }
            }
        }
        sort_dedup(&mut breaks, 1e-13);
        breaks
    }

    fn directions(&self, level: u32) -> Vec<Dir> {
        let d = self.frame.dim();
        let (gx, gw) = (GL6_X, GL6_W);
        let refine = (1u64 << level) as f64;
        match d {
            1 => {
                let e = self.frame.column(0);
                alloc::vec![
                    Dir {
                        theta: e,
                        weight: 1.0
                    },
                    Dir {
                        theta: -e,
                        weight: 1.0
                    }
                ]
            }
            2 => {
                let mut breaks = self.angular_breaks(2.0 * PI);
                if *breaks.last().unwrap() < 2.0 * PI {
                    breaks.push(2.0 * PI);
                }
                let mut out = Vec::new();
                for win in breaks.windows(2) {
                    let (a, b) = (win[0], win[1]);
                    if b - a <= 0.0 {
                        continue;
                    }
                    let n = libm::ceil((b - a) / ANGLE_WIDTH0_2D * refine).max(1.0) as usize;
                    let h = (b - a) / n as f64;
                    for k in 0..n {
                        let lo = a + h * k as f64;
                        for q in 0..6 {
                            let t = lo + 0.5 * h * (gx[q] + 1.0);
                            out.push(Dir {
                                theta: self.planar(t),
                                weight: 0.5 * h * gw[q],
                            });
                        }
                    }
                }
                out
            }
            _ => {
                let mut breaks = self.angular_breaks(PI);
                if *breaks.last().unwrap() < PI {
                    breaks.push(PI);
                }
                let m = if self.prob.axisymmetric {
                    1
                } else {
                    AZIMUTH0 << level
                };
                let e1 = self.frame.column(0);
                let e2 = self.frame.column(1);
                let e3 = self.frame.column(2);
                let mut out = Vec::new();
                for win in breaks.windows(2) {
                    let (a, b) = (win[0], win[1]);
                    if b - a <= 0.0 {
                        continue;
                    }
                    let n = libm::ceil((b - a) / ANGLE_WIDTH0_3D * refine).max(1.0) as usize;
                    let h = (b - a) / n as f64;
                    for k in 0..n {
                        let lo = a + h * k as f64;
                        for q in 0..6 {
                            let t = lo + 0.5 * h * (gx[q] + 1.0);
                            let (st, ct) = (libm::sin(t), libm::cos(t));
                            for j in 0..m {
                                let az = 2.0 * PI * j as f64 / m as f64;
                                let theta =
                                    e1 * ct + e2 * (st * libm::cos(az)) + e3 * (st * libm::sin(az));
                                out.push(Dir {
                                    theta,
                                    weight: 0.5 * h * gw[q] * st * 2.0 * PI / m as f64,
                                });
                            }
                        }
                    }
                }
                out
            }
        }
    }

    fn sweep<F>(&self, level: u32, f: &F) -> Acc<K>
    where
        F: Fn(&Node, &mut [f64; K]),
    {
        let mut acc = Acc::new();
        for dir in self.directions(level) {
            self.ray(&dir, level, f, &mut acc);
        }
        acc
    }

    /// Randomly shifted Halton directions; returns mean, standard error, L1.
    fn qmc<F>(&self, level: u32, f: &F) -> ([f64; K], [f64; K], [f64; K], Acc<K>)
    where
        F: Fn(&Node, &mut [f64; K]),
    {
        let d = self.frame.dim();
        let n = QMC_BASE << level;
        let area = sphere_area(d);
        let mut rng = ChaCha8Rng::seed_from_u64(0x51ed_2701_u64 ^ d as u64);
        let mut reps: Vec<[f64; K]> = Vec::new();
        let mut l1 = [0.0; K];
        let mut merged = Acc::new();
        let dims = d + (d % 2);
        for _ in 0..QMC_REPLICATES {
            let shift: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();
            let mut acc = Acc::new();
            for i in 0..n {
                let mut g = Vector::zeros(d);
                for k in 0..dims / 2 {
                    let u1 = frac(halton(i + 1, PRIMES[2 * k]) + shift[2 * k]).max(1e-300);
                    let u2 = frac(halton(i + 1, PRIMES[2 * k + 1]) + shift[2 * k + 1]);
                    let rad = libm::sqrt(-2.0 * libm::log(u1));
                    g[2 * k] = rad * libm::cos(2.0 * PI * u2);
                    if 2 * k + 1 < d {
                        g[2 * k + 1] = rad * libm::sin(2.0 * PI * u2);
                    }
                }
                let Some(theta) = g.normalized() else { continue };
                let dir = Dir {
                    theta,
                    weight: area / n as f64,
                };
                self.ray(&dir, 1, f, &mut acc);
            }
            for c in 0..K {
                l1[c] += acc.l1[c] / QMC_REPLICATES as f64;
                merged.tail_err[c] += acc.tail_err[c] / QMC_REPLICATES as f64;
                if merged.divergent[c].is_none() {
                    merged.divergent[c] = acc.divergent[c];
                }
            }
            reps.push(acc.sum);
        }
        let r = QMC_REPLICATES as f64;
        let mut mean = [0.0; K];
        let mut se = [0.0; K];
        for c in 0..K {
            mean[c] = reps.iter().map(|v| v[c]).sum::<f64>() / r;
            let var = reps.iter().map(|v| (v[c] - mean[c]) * (v[c] - mean[c])).sum::<f64>() / (r - 1.0);
            se[c] = libm::sqrt(var / r);
        }
        (mean, se, l1, merged)
    }

    fn ray<F>(&self, dir: &Dir, level: u32, f: &F, acc: &mut Acc<K>)
    where
        F: Fn(&Node, &mut [f64; K]),
    {
        let at = self.prob.at;
        let d = at.x.dim();
        let theta = dir.theta;
        let a = at.jump(&theta);
        let na = a.norm();
        if na == 0.0 {
            return;
        }
        let xn = at.norm_x;
        let gamma_u = if xn > 0.0 {
            (at.x.dot(&theta) / xn).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let gamma_w = if xn > 0.0 {
            (at.x.dot(&a) / (xn * na)).clamp(-1.0, 1.0)
        } else {
            0.0
        };

        let mut breaks: Vec<f64> = Vec::with_capacity(16);
        at.radial_breaks(&mut breaks);
        breaks.push(1.0 / na);
        if xn > 0.0 {
            breaks.push(xn / na);
            breaks.push(xn / at.phi_norm);
            breaks.push(xn);
            // ball |x + r a| = 1 and the closest approach to −x
            let xa = at.x.dot(&a);
            let a2 = na * na;
            let rstar = -xa / a2;
            if rstar > 0.0 {
                breaks.push(rstar);
            }
            let disc = xa * xa - a2 * (xn * xn - 1.0);
            if disc >= 0.0 {
                let sq = libm::sqrt(disc);
                breaks.push((-xa - sq) / a2);
                breaks.push((-xa + sq) / a2);
            }
        }
        let osc = self.prob.oscillation.map(|o| {
            let freq = o.eta.dot(&theta).abs();
            let en = o.eta.norm();
            let cut = if en > 0.0 { o.cut / en } else { f64::INFINITY };
            (freq, cut)
        });
        if let Some((_, cut)) = osc {
            if cut.is_finite() {
                breaks.push(cut);
            }
        }
        let end = match self.support {
            Some(s) => s,
            None => {
                let mx = breaks
                    .iter()
                    .copied()
                    .filter(|b| b.is_finite())
                    .fold(0.0, f64::max);
                self.outer_base.max(2.0 * mx)
            }
        };
        if end <= INNER_CUTOFF {
            return;
        }
        breaks.retain(|&b| b.is_finite() && b > INNER_CUTOFF && b < end);
        breaks.push(INNER_CUTOFF);
        breaks.push(end);
        sort_dedup(&mut breaks, 1e-14);

        let mut out = [0.0; K];
        let mut eval = |r: f64, wt: f64, acc: &mut Acc<K>| {
            let dens = at.density(r, gamma_u);
            if dens == 0.0 {
                return;
            }
            let node = Node {
                w: a * r,
                r,
                norm_w: na * r,
                gamma_w,
            };
            out.iter_mut().for_each(|o| *o = 0.0);
            f(&node, &mut out);
            let scale = wt * dens * dir.weight * libm::pow(r, (d - 1) as f64);
            for c in 0..K {
                let v = out[c] * scale;
                acc.sum[c] += v;
                acc.l1[c] += v.abs();
            }
        };

        let refine = (1u64 << level) as f64;
        for win in breaks.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            let mid = libm::sqrt(lo * hi);
            if at.density(mid, gamma_u) == 0.0 {
                continue;
            }
            let logw = libm::log(hi / lo);
            let n_log = libm::ceil(logw / LOG_WIDTH0 * refine).max(1.0) as usize;
            let lin_cap = match osc {
                Some((freq, cut)) if freq > 0.0 && lo < cut => PI / freq / refine,
                _ => f64::INFINITY,
            };
            // log panels up to where a log panel outgrows the oscillation cap
            let h_log = logw / n_log as f64;
            let switch = if lin_cap.is_finite() {
                (lin_cap / h_log).clamp(lo, hi)
            } else {
                hi
            };
            if switch > lo {
                let lw = libm::log(switch / lo);
                let n = libm::ceil(lw / LOG_WIDTH0 * refine).max(1.0) as usize;
                let h = lw / n as f64;
                let l0 = libm::log(lo);
                for k in 0..n {
                    let s0 = l0 + h * k as f64;
                    for q in 0..6 {
                        let s = s0 + 0.5 * h * (GL6_X[q] + 1.0);
                        let r = libm::exp(s);
                        eval(r, 0.5 * h * GL6_W[q] * r, acc);
                    }
                }
            }
            if switch < hi {
                let n = libm::ceil((hi - switch) / lin_cap).max(1.0) as usize;
                let h = (hi - switch) / n as f64;
                for k in 0..n {
                    let r0 = switch + h * k as f64;
                    for q in 0..6 {
                        let r = r0 + 0.5 * h * (GL6_X[q] + 1.0);
                        eval(r, 0.5 * h * GL6_W[q], acc);
                    }
                }
            }
        }

        // inner closure on (0, r0)
        let r0 = INNER_CUTOFF;
        if at.density(r0, gamma_u) != 0.0 {
            let e = core::f64::consts::E;
            let mut h = [[0.0; K]; 3];
            for (k, hk) in h.iter_mut().enumerate() {
                let r = r0 / libm::pow(e, k as f64);
                let mut tmp = Acc::new();
                eval(r, 1.0, &mut tmp);
                *hk = tmp.sum;
            }
            for c in 0..K {
                let (h0, h1, h2) = (h[0][c], h[1][c], h[2][c]);
                if h0 == 0.0 {
                    continue;
                }
                if h0 * h1 <= 0.0 || h1 * h2 <= 0.0 {
                    acc.tail_err[c] += (h0 * r0).abs();
                    continue;
                }
                let k1 = libm::log(h0 / h1);
                let k2 = libm::log(h1 / h2);
                if k1 + 1.0 <= 0.0 {
                    acc.divergent[c].get_or_insert((TailEnd::Inner, k1));
                    continue;
                }
                let t1 = h0 * r0 / (k1 + 1.0);
                let t2 = if k2 + 1.0 > 0.0 {
                    h0 * r0 / (k2 + 1.0)
                } else {
                    2.0 * t1
                };
                acc.sum[c] += t1;
                acc.l1[c] += t1.abs();
                acc.tail_err[c] += (t1 - t2).abs();
            }
        }

        // outer tail on (end, ∞), mapped by r = end · y^{-1/m}
        if self.support.is_none() {
            let Some(alpha) = self.tail_alpha else { return };
            if at.density(2.0 * end, gamma_u) == 0.0 {
                return;
            }
            let mut gmax: Option<f64> = None;
            for c in 0..K {
                if let Some(g) = self.growth[c] {
                    if g >= alpha {
                        acc.divergent[c].get_or_insert((TailEnd::Outer, g - alpha));
                    } else {
                        gmax = Some(gmax.map_or(g, |m: f64| m.max(g)));
                    }
                }
            }
            let Some(gmax) = gmax else { return };
            let m = alpha - gmax;
            let mut tail = Acc::new();
            let mut edges: Vec<f64> = (0..=TAIL_OCTAVES)
                .map(|k| libm::pow(2.0, -(TAIL_OCTAVES - k) as f64))
                .collect();
            edges.insert(0, 0.0);
            for win in edges.windows(2) {
                let (y0, y1) = (win[0], win[1]);
                let n = (1usize << level).max(1);
                let h = (y1 - y0) / n as f64;
                for k in 0..n {
                    let ya = y0 + h * k as f64;
                    for q in 0..6 {
                        let y = ya + 0.5 * h * (GL6_X[q] + 1.0);
                        let r = end * libm::pow(y, -1.0 / m);
                        if !(r.is_finite() && r < MAX_RADIUS) {
                            continue;
                        }
                        let drdy = r / (m * y);
                        eval(r, 0.5 * h * GL6_W[q] * drdy, &mut tail);
                    }
                }
            }
            for c in 0..K {
                if self.growth[c].is_some_and(|g| g < alpha) {
                    acc.sum[c] += tail.sum[c];
                    acc.l1[c] += tail.l1[c];
                }
            }
        }
    }
}

/// `Φ(x)^{-1}(−x)`: the source direction aiming straight at `−x`.
fn preimage_of_minus_x(at: &KernelAt<'_>) -> Option<Vector> {
    let d = at.x.dim();
    // solve Φ v = −x by Gaussian elimination with partial pivoting
    let m = at.phi;
    let mut a = [[0.0; crate::linalg::MAX_DIM + 1]; crate::linalg::MAX_DIM];
    for i in 0..d {
        for j in 0..d {
            a[i][j] = m.get(i, j);
        }
        a[i][d] = -at.x[i];
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for i in 0..d {
            if i != col {
                let fct = a[i][col] / a[col][col];
                for j in col..=d {
                    a[i][j] -= fct * a[col][j];
                }
            }
        }
    }
    let v = Vector::from_fn(d, |i| a[i][d] / a[i][i]);
    v.is_finite().then_some(v)
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

fn sort_dedup(v: &mut Vec<f64>, rel: f64) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    v.dedup_by(|b, a| (*b - *a).abs() <= rel * a.abs().max(b.abs()).max(1e-300));
}

const PRIMES: [usize; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn frac(x: f64) -> f64 {
    x - libm::floor(x)
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * libm::pow(PI, 0.5 * d as f64) / libm::tgamma(0.5 * d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_matches_table() {
        let (x, w) = gauss_legendre::<6>();
        for i in 0..6 {
            assert!((x[i] - GL6_X[i]).abs() < 1e-15);
            assert!((w[i] - GL6_W[i]).abs() < 1e-15);
        }
        let (x, w) = gauss_legendre::<16>();
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // exact for x^30
        let m: f64 = x.iter().zip(w.iter()).map(|(x, w)| w * x.powi(30)).sum();
        assert!((m - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }
}
