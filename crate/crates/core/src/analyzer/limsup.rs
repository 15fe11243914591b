//! Finite-sample proxies for `limsup`/`liminf` over `|x| → ∞`.
//!
//! Each direction of the grid gets a least-squares fit over the top decade of
//! radii; the fit is evaluated at the largest radius. Positive ratios are
//! fitted in log-log coordinates, others linearly in `ln |x|` with the slope
//! normalised by the mean magnitude.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg::Vector;

/// Ratios still growing faster than `|x|^{0.05}` are flagged as divergent.
pub const DIVERGENCE_SLOPE: f64 = 0.05;

/// Radial × directional evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    radii: Vec<f64>,
    directions: Vec<Vector>,
}

pub const MIN_RADII: usize = 8;
pub const MIN_DIRECTIONS: usize = 16;

impl Grid {
    pub fn new(radii: Vec<f64>, directions: Vec<Vector>) -> Result<Self> {
        if radii.is_empty() || directions.is_empty() {
            return Err(Error::param("grid", "needs at least one radius and direction"));
        }
        if !radii.windows(2).all(|w| w[0] < w[1]) || !(radii[0] > 0.0) {
            return Err(Error::param("grid.radii", "must be positive and increasing"));
        }
        let d = directions[0].dim();
        for v in &directions {
            if v.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.dim(),
                });
            }
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::param("grid.directions", "must be unit vectors"));
            }
        }
        Ok(Grid { radii, directions })
    }

    /// `n_radii` log-spaced radii in `[r_min, r_max]` and `n_dirs` directions:
    /// equally spaced angles for `d = 2`, a Fibonacci lattice for `d = 3`,
    /// `±e₁` for `d = 1` and seeded Gaussian directions otherwise.
    pub fn log_spaced(dim: usize, r_min: f64, r_max: f64, n_radii: usize, n_dirs: usize) -> Result<Self> {
        crate::linalg::check_dim(dim)?;
        if !(r_min > 0.0 && r_max > r_min) || n_radii < 2 || n_dirs == 0 {
            return Err(Error::param("grid", "need 0 < r_min < r_max, n_radii ≥ 2, n_dirs ≥ 1"));
        }
        let (l0, l1) = (libm::log(r_min), libm::log(r_max));
        let radii = (0..n_radii)
            .map(|i| libm::exp(l0 + (l1 - l0) * i as f64 / (n_radii - 1) as f64))
            .collect();
        Grid::new(radii, directions(dim, n_dirs))
    }

    /// Radii in `[10, 10⁴]` (16 points); 32 directions in the plane, 98 in
    /// space.
    pub fn default_for(dim: usize) -> Result<Self> {
        let n = match dim {
            2 => 32,
            3 => 98,
            _ => 64,
        };
        Self::log_spaced(dim, 10.0, 1e4, 16, n)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    pub fn dim(&self) -> usize {
        self.directions[0].dim()
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Cells in row-major order: direction-major, radius-minor.
    pub fn len(&self) -> usize {
        self.radii.len() * self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(direction index, radius index, point)` of a flat cell index.
    pub fn cell(&self, k: usize) -> (usize, usize, Vector) {
        let nr = self.radii.len();
        let (j, i) = (k / nr, k % nr);
        (j, i, self.directions[j] * self.radii[i])
    }

    /// Enforces the minimum resolution of a limsup estimate.
    pub fn check_resolution(&self) -> Result<()> {
        let need_dirs = match self.dim() {
            1 => 2,
            _ => MIN_DIRECTIONS,
        };
        if self.radii.len() < MIN_RADII || self.directions.len() < need_dirs {
            return Err(Error::Precondition(alloc::format!(
                "limsup estimation needs at least {MIN_RADII} radii and {need_dirs} directions, got {} and {}",
                self.radii.len(),
                self.directions.len()
            )));
        }
        Ok(())
    }

    /// Indices of the top decade of radii (at least three points).
    pub fn top_decade(&self) -> Vec<usize> {
        top_decade(&self.radii)
    }
}

pub(crate) fn top_decade(radii: &[f64]) -> Vec<usize> {
    let r_max = radii[radii.len() - 1];
    let idx: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] >= r_max / 10.0 * (1.0 - 1e-12)).collect();
    if idx.len() >= 3 || radii.len() < 3 {
        idx
    } else {
        (radii.len() - 3..radii.len()).collect()
    }
}

pub(crate) fn directions(dim: usize, n: usize) -> Vec<Vector> {
    use core::f64::consts::PI;
    match dim {
        1 => alloc::vec![Vector::basis(1, 0), -Vector::basis(1, 0)],
        2 => (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                Vector::from_slice(&[libm::cos(t), libm::sin(t)]).unwrap()
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - libm::sqrt(5.0));
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let rho = libm::sqrt(1.0 - z * z);
                    let t = golden * k as f64;
                    Vector::from_slice(&[rho * libm::cos(t), rho * libm::sin(t), z]).unwrap()
                })
                .collect()
        }
        _ => {
            use rand::SeedableRng;
            use rand_distr::{Distribution, StandardNormal};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e37_79b9 ^ dim as u64);
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let mut g = Vector::zeros(dim);
                for k in 0..dim {
                    g[k] = StandardNormal.sample(&mut rng);
                }
                if let Some(v) = g.normalized() {
                    out.push(v);
                }
            }
            out
        }
    }
}

/// Ordinary least squares `y = a + b t`; returns `(a, b, residual sd)`.
pub fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in t.iter().zip(y) {
        sxx += (a - mt) * (a - mt);
        sxy += (a - mt) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mt;
    let rss: f64 = t
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - icpt - slope * a;
            r * r
        })
        .sum();
    let sd = if t.len() > 2 { libm::sqrt(rss / (n - 2.0)) } else { 0.0 };
    (icpt, slope, sd)
}

/// Fit of one direction's ratio profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionFit {
    /// Fitted value at the largest radius.
    pub value: f64,
    /// Log-log slope (positive ratios) or relative slope in `ln |x|`.
    pub slope: f64,
    /// Last observed ratio.
    pub last: f64,
    /// Residual spread of the fit, in ratio units.
    pub spread: f64,
}

/// Growth exponent of a positive profile: log-log slope over the top decade.
pub fn growth_exponent(radii: &[f64], values: &[f64]) -> Option<f64> {
    let idx = top_decade(radii);
    if idx.iter().any(|&i| !(values[i] > 0.0 && values[i].is_finite())) {
        return None;
    }
    let t: Vec<f64> = idx.iter().map(|&i| libm::log(radii[i])).collect();
    let y: Vec<f64> = idx.iter().map(|&i| libm::log(values[i])).collect();
    Some(linear_fit(&t, &y).1)
}

pub fn fit_direction(radii: &[f64], ratios: &[f64]) -> DirectionFit {
    let idx = top_decade(radii);
    let last = ratios[ratios.len() - 1];
    let vals: Vec<f64> = idx.iter().map(|&i| ratios[i]).collect();
    if vals.iter().any(|v| v.is_nan()) {
        return DirectionFit {
            value: f64::NAN,
            slope: f64::NAN,
            last,
            spread: f64::NAN,
        };
    }
    if vals.iter().any(|v| v.is_infinite()) {
        let inf = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return DirectionFit {
            value: inf,
            slope: if inf > 0.0 { f64::INFINITY } else { 0.0 },
            last,
            spread: 0.0,
        };
    }
    let t: Vec<f64> = idx.iter().map(|&i| libm::log(radii[i])).collect();
    let t_end = libm::log(radii[radii.len() - 1]);
    if vals.iter().all(|&v| v > 0.0) {
        let y: Vec<f64> = vals.iter().map(|&v| libm::log(v)).collect();
        let (a, b, sd) = linear_fit(&t, &y);
        let value = libm::exp(a + b * t_end);
        DirectionFit {
            value,
            slope: b,
            last,
            spread: value * (libm::exp(sd) - 1.0),
        }
    } else {
        let (a, b, sd) = linear_fit(&t, &vals);
        let scale = vals.iter().map(|v| v.abs()).sum::<f64>() / vals.len() as f64;
        DirectionFit {
            value: a + b * t_end,
            slope: if scale > 0.0 { b / scale } else { 0.0 },
            last,
            spread: sd,
        }
    }
}

/// A limsup (and liminf) estimate across the directions of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LimsupEstimate {
    /// Max over directions of the extrapolated ratio.
    pub value: f64,
    /// Min over directions of the extrapolated ratio.
    pub liminf: f64,
    /// Max over directions of the fitted slope.
    pub trend_slope: f64,
    /// Min over directions of the fitted slope.
    pub min_slope: f64,
    /// Largest residual spread of the per-direction fits.
    pub spread: f64,
    pub diverges: bool,
    pub per_direction: Vec<DirectionFit>,
}

impl LimsupEstimate {
    /// Builds the estimate from `ratios[direction][radius]`.
    pub fn from_table(radii: &[f64], ratios: &[Vec<f64>]) -> Self {
        let per_direction: Vec<DirectionFit> =
            ratios.iter().map(|row| fit_direction(radii, row)).collect();
        let mut value = f64::NEG_INFINITY;
        let mut liminf = f64::INFINITY;
        let mut trend = f64::NEG_INFINITY;
        let mut min_slope = f64::INFINITY;
        let mut spread: f64 = 0.0;
        for f in &per_direction {
            value = value.max(f.value);
            liminf = liminf.min(f.value);
            trend = trend.max(f.slope);
            min_slope = min_slope.min(f.slope);
            spread = spread.max(f.spread);
            if f.value.is_nan() {
                value = f64::NAN;
            }
        }
        LimsupEstimate {
            value,
            liminf,
            trend_slope: trend,
            min_slope,
            spread,
            diverges: trend > DIVERGENCE_SLOPE || value == f64::INFINITY,
            per_direction,
        }
    }
}

/// `num/den` with `0/0 = 0` and `x/0 = ±∞`.
pub fn safe_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            num.signum() * f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `limsup num(x)/den(x)` estimated on `grid`.
pub fn estimate_limsup_ratio<E, N, D>(grid: &Grid, exec: &E, num: N, den: D) -> Result<LimsupEstimate>
where
    E: Executor,
    N: Fn(&Vector) -> Result<f64> + Sync + Send,
    D: Fn(&Vector) -> Result<f64> + Sync + Send,
{
    grid.check_resolution()?;
    let cells = exec.map(grid.len(), |k| {
        let (_, _, x) = grid.cell(k);
        Ok::<f64, Error>(safe_ratio(num(&x)?, den(&x)?))
    });
    let nr = grid.radii().len();
    let mut table = Vec::with_capacity(grid.directions().len());
    let mut row = Vec::with_capacity(nr);
    for c in cells {
        row.push(c?);
        if row.len() == nr {
            table.push(core::mem::take(&mut row));
        }
    }
    Ok(LimsupEstimate::from_table(grid.radii(), &table))
}
