//! Drift constants, growth exponents, ergodicity classification and drift
//! verification on radial grids.

mod limsup;
mod tables;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub use limsup::{
    estimate_limsup_ratio, fit_direction, growth_exponent, linear_fit, safe_ratio, DirectionFit,
    Grid, LimsupEstimate, DIVERGENCE_SLOPE, MIN_DIRECTIONS, MIN_RADII,
};
pub use tables::{
    c_tot_envelope, closed_constants, combine_c_ker, combine_c_tot, KerRegime, TotRegime,
};

use crate::cubature::CubatureOptions;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::generator::{apply_generator, idx, sweep, symbol_re_with_cut};
use crate::kernels::{cone_infimum, ConeKind, ConeSpec, GeneratorSpec};
use crate::linalg::Vector;
use crate::lyapunov::LyapunovSpec;
use crate::rate::{self, RateClass, RateSpec};

/// Largest compact-part constant `C` a verification accepts.
pub const MAX_COMPACT_CONSTANT: f64 = 1e6;
/// A negligibility ratio must end below this value.
pub const NEGLIGIBLE_LAST: f64 = 1e-2;
/// Oscillation cut of the symbol in the negligibility check; it only has to
/// resolve a threshold, so a few percent accuracy is enough.
pub const NEGLIGIBILITY_SYMBOL_CUT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    pub cubature: CubatureOptions,
    /// Slope threshold separating `≫` from `≍` in regime detection.
    pub regime_slope: f64,
    /// Evaluate the symbol-based negligibility check.
    pub symbol_check: bool,
    /// State directions used by the symbol check.
    pub symbol_states: usize,
    /// Frequency directions per state in the symbol check.
    pub symbol_directions: usize,
    pub delta: f64,
    pub gamma_time: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            cubature: CubatureOptions::default(),
            regime_slope: 0.05,
            symbol_check: true,
            symbol_states: 4,
            symbol_directions: 8,
            delta: rate::DEFAULT_DELTA,
            gamma_time: rate::DEFAULT_GAMMA_TIME,
        }
    }
}

/// A constant that is either computed or could not be decided.
#[derive(Debug, Clone, PartialEq)]
pub enum Computed {
    Value(f64),
    Inconclusive(String),
}

impl Computed {
    pub fn value(&self) -> Option<f64> {
        match self {
            Computed::Value(v) => Some(*v),
            Computed::Inconclusive(_) => None,
        }
    }

    fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(v) => Computed::Value(v),
            Err(Error::Inconclusive(m)) => Computed::Inconclusive(m),
            Err(e) => Computed::Inconclusive(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// `ℒ₀V ≤ (C^ker+θ)|x|^{p−1+γ_ker} + C`.
    Ker,
    /// `ℒV ≤ (C^tot+θ)|x|^{p−1+γ_tot} + C`.
    Tot,
    PhiKer,
    PhiTot,
    /// `ℒV ≤ (C+θ)V + C` with `C = limsup ℒV/V`; no kernel mass or drift.
    PureDiffusion,
}

impl Pipeline {
    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::Ker => "ker",
            Pipeline::Tot => "tot",
            Pipeline::PhiKer => "phi-ker",
            Pipeline::PhiTot => "phi-tot",
            Pipeline::PureDiffusion => "pure-diffusion",
        }
    }

    /// True when the bound concerns the jump part `ℒ₀V` alone.
    pub fn jump_part_only(&self) -> bool {
        matches!(self, Pipeline::Ker | Pipeline::PhiKer)
    }
}

/// Constants of one pipeline (general or Φ).
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConstants {
    pub a_small: f64,
    pub a_big: f64,
    pub b_small: LimsupEstimate,
    pub b_big: LimsupEstimate,
    /// `φ^big/φ^small`.
    pub ker_ratio: LimsupEstimate,
    pub c_inf_ker: f64,
    pub c_sup_ker: f64,
    pub regime_ker: Option<KerRegime>,
    pub c_ker: Computed,
    /// `φ^drift/φ^ker`.
    pub tot_ratio: LimsupEstimate,
    pub c_inf_tot: f64,
    pub c_sup_tot: f64,
    pub regime_tot: Option<TotRegime>,
    pub c_tot: Computed,
    /// Conservative upper envelope of `C^tot` in the comparable regime.
    pub c_tot_envelope: Option<f64>,
    pub gamma_small: Option<f64>,
    pub gamma_big: Option<f64>,
    pub gamma_ker: Option<f64>,
    pub gamma_tot: Option<f64>,
    pub k_small: Option<f64>,
    pub k_big: Option<f64>,
    /// `p + γ_small > 2`.
    pub gam_small: Option<bool>,
    /// `p + γ_big > 1`.
    pub gam_big: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub p: f64,
    pub eps_small: f64,
    pub eps_big: f64,
    pub general: PipelineConstants,
    pub phi: Option<PipelineConstants>,
    /// `ℓ·∇V / φ^drift`.
    pub c_drift: LimsupEstimate,
    /// Fitted growth order `κ` of `|ℓ|`.
    pub gamma_drift: Option<f64>,
    /// `ℒV/V`, when neither the kernel cones nor the drift carry anything.
    pub pure_diffusion: Option<LimsupEstimate>,
}

/// The constant and exponent a drift bound is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub pipeline: Pipeline,
    pub c: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Exponential,
    Polynomial { exponent: f64 },
    /// The relevant constant is not negative.
    NotCertified { reason: String },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegligibilityCheck {
    pub ratios: LimsupEstimate,
    /// Every top-decade ratio is exactly zero.
    pub identically_zero: bool,
    /// Largest last-radius ratio over directions.
    pub last: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegligibilityReport {
    /// `ν(x, B(−x,1)) / φ^ker`.
    pub ball: NegligibilityCheck,
    /// Same mass against `φ^{Φ,ker}`.
    pub phi_ball: Option<NegligibilityCheck>,
    /// `sup_{|ξ| = 2/|x|} Re q(x, ξ) / φ^ker`.
    pub symbol: Option<NegligibilityCheck>,
    pub pass: bool,
    pub phi_pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub radii: Vec<f64>,
    pub n_directions: usize,
    pub constants: ConstantsReport,
    pub certificate: Option<Certificate>,
    pub classification: Classification,
    pub rate: Option<RateSpec>,
    pub negligibility: NegligibilityReport,
    /// `|½ tr(QD²V)| / φ^tot`.
    pub diffusion_ratio: Option<LimsupEstimate>,
    pub warnings: Vec<String>,
    pub non_converged_cells: usize,
}

/// Everything the analysis needs at one grid point.
#[derive(Debug, Clone, Copy)]
struct Cell {
    nx: f64,
    est: [f64; idx::K],
    converged: bool,
    drift_dot: f64,
    ell_norm: f64,
    diffusion: f64,
    /// `ℒV(x)` from the sweep's generator split.
    lv: f64,
    v: f64,
    inf_small: f64,
    inf_big: f64,
    phi_norm: f64,
}

fn infimum_or_zero(x: &Vector, gen: &GeneratorSpec, kind: ConeKind) -> Result<f64> {
    match cone_infimum(x, &gen.kernel.phi_at(x), kind) {
        Ok(c) => Ok(c.value),
        Err(Error::EmptyCone(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

fn eval_cell(
    x: &Vector,
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    cones: &ConeSpec,
    opts: &CubatureOptions,
) -> Result<Cell> {
    let s = sweep(x, gen, lyap, cones, opts)?;
    let grad = lyap.grad(x)?;
    let hess = lyap.hess(x)?;
    let ell = gen.drift.eval(x);
    let diffusion = 0.5 * gen.diffusion.eval(x).trace_product(&hess);
    let est: [f64; idx::K] = core::array::from_fn(|c| s.est[c].value);
    let lv = gen.drift_phi(x).dot(&grad) + diffusion + est[idx::SMALL] + est[idx::BIG];
    let (inf_small, inf_big, phi_norm) = if gen.kernel.phi_field().is_some() {
        (
            infimum_or_zero(x, gen, ConeKind::Small(cones.eps_small()))?,
            infimum_or_zero(x, gen, ConeKind::Big(cones.eps_big()))?,
            gen.kernel.phi_at(x).row_sum_norm(),
        )
    } else {
        (1.0, 1.0, 1.0)
    };
    Ok(Cell {
        nx: x.norm(),
        est,
        converged: s.converged,
        drift_dot: ell.dot(&grad),
        ell_norm: ell.norm(),
        diffusion,
        lv,
        v: lyap.eval(x),
        inf_small,
        inf_big,
        phi_norm,
    })
}

/// Cells arranged as `[direction][radius]`.
struct Cells {
    radii: Vec<f64>,
    rows: Vec<Vec<Cell>>,
}

impl Cells {
    fn evaluate<E: Executor>(
        grid: &Grid,
        gen: &GeneratorSpec,
        lyap: &LyapunovSpec,
        cones: &ConeSpec,
        opts: &CubatureOptions,
        exec: &E,
    ) -> Result<Self> {
        if gen.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: gen.dim(),
                found: grid.dim(),
            });
        }
        if !(grid.radii()[0] > 2.0) {
            return Err(Error::Precondition(
                "analysis grids start beyond |x| = 2 so the ball B(−x,1) avoids the origin".into(),
            ));
        }
        let flat = exec.map(grid.len(), |k| {
            let (_, _, x) = grid.cell(k);
            eval_cell(&x, gen, lyap, cones, opts)
        });
        let nr = grid.radii().len();
        let mut rows = Vec::with_capacity(grid.directions().len());
        let mut row = Vec::with_capacity(nr);
        for c in flat {
            row.push(c?);
            if row.len() == nr {
                rows.push(core::mem::take(&mut row));
            }
        }
        Ok(Cells {
            radii: grid.radii().to_vec(),
            rows,
        })
    }

    fn table(&self, f: impl Fn(&Cell) -> f64) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().map(&f).collect()).collect()
    }

    fn ratio(&self, num: impl Fn(&Cell) -> f64, den: impl Fn(&Cell) -> f64) -> LimsupEstimate {
        let t = self.table(|c| safe_ratio(num(c), den(c)));
        LimsupEstimate::from_table(&self.radii, &t)
    }

    fn all_zero(&self, f: impl Fn(&Cell) -> f64) -> bool {
        self.rows.iter().flatten().all(|c| f(c) == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trend {
    Grows,
    Decays,
    Flat,
}

/// Trend of `num/den` over the top decade, agreed on by every direction.
fn ratio_trend(
    cells: &Cells,
    num: impl Fn(&Cell) -> f64,
    den: impl Fn(&Cell) -> f64,
    threshold: f64,
    what: &str,
) -> Result<Trend> {
    let top = limsup::top_decade(&cells.radii);
    let t: Vec<f64> = top.iter().map(|&i| libm::log(cells.radii[i])).collect();
    let mut verdict: Option<Trend> = None;
    for row in &cells.rows {
        let n: Vec<f64> = top.iter().map(|&i| num(&row[i])).collect();
        let d: Vec<f64> = top.iter().map(|&i| den(&row[i])).collect();
        let nz = n.iter().all(|&v| v == 0.0);
        let dz = d.iter().all(|&v| v == 0.0);
        let trend = if nz && dz {
            continue;
        } else if dz {
            Trend::Grows
        } else if nz {
            Trend::Decays
        } else if n.iter().chain(&d).any(|&v| !(v > 0.0)) {
            return Err(Error::Inconclusive(alloc::format!(
                "{what}: intermittently vanishing functionals"
            )));
        } else {
            let y: Vec<f64> = n.iter().zip(&d).map(|(a, b)| libm::log(a / b)).collect();
            let s = linear_fit(&t, &y).1;
            if s > threshold {
                Trend::Grows
            } else if s < -threshold {
                Trend::Decays
            } else {
                Trend::Flat
            }
        };
        match verdict {
            None => verdict = Some(trend),
            Some(v) if v != trend => {
                return Err(Error::Inconclusive(alloc::format!(
                    "{what}: directions disagree on the dominance regime"
                )))
            }
            _ => {}
        }
    }
    verdict.ok_or_else(|| Error::Inconclusive(alloc::format!("{what}: both functionals vanish")))
}

/// Minimum over directions of the fitted growth order; `None` when some
/// direction does not grow like a power.
fn growth(cells: &Cells, f: impl Fn(&Cell) -> f64) -> Option<f64> {
    let mut g = f64::INFINITY;
    for row in &cells.rows {
        let vals: Vec<f64> = row.iter().map(&f).collect();
        g = g.min(growth_exponent(&cells.radii, &vals)?);
    }
    g.is_finite().then_some(g)
}

/// Largest `K` with `f(x) ≥ K|x|^γ` on the grid.
fn lower_constant(cells: &Cells, gamma: Option<f64>, f: impl Fn(&Cell) -> f64) -> Option<f64> {
    let g = gamma?;
    cells
        .rows
        .iter()
        .flatten()
        .map(|c| f(c) / libm::pow(c.nx, g))
        .reduce(f64::min)
}

fn opt_max(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn limsup_value(e: &LimsupEstimate) -> f64 {
    if e.diverges {
        f64::INFINITY
    } else {
        e.value
    }
}

/// The functionals of one pipeline, as cell accessors.
struct Functionals {
    phi_small: fn(&Cell, f64) -> f64,
    phi_big: fn(&Cell, f64) -> f64,
    b_small_num: fn(&Cell, f64) -> f64,
    b_big_num: fn(&Cell, f64) -> f64,
    mass_small: fn(&Cell) -> f64,
    mass_big: fn(&Cell) -> f64,
}

const GENERAL: Functionals = Functionals {
    phi_small: |c, p| libm::pow(c.nx, p - 2.0) * c.est[idx::S_IN],
    phi_big: |c, p| libm::pow(c.nx, p - 1.0) * c.est[idx::G_IN],
    b_small_num: |c, p| 0.25 * p * libm::pow(c.nx, p - 2.0) * c.est[idx::S_OUT],
    b_big_num: |c, _| c.est[idx::G_OUT],
    mass_small: |c| c.est[idx::S_IN],
    mass_big: |c| c.est[idx::G_IN],
};

const PHI: Functionals = Functionals {
    phi_small: |c, p| libm::pow(c.nx, p - 2.0) * c.inf_small * c.inf_small * c.est[idx::SP_IN],
    phi_big: |c, p| libm::pow(c.nx, p - 1.0) * c.inf_big * c.est[idx::GP_IN],
    b_small_num: |c, p| {
        0.25 * p * c.phi_norm * c.phi_norm * libm::pow(c.nx, p - 2.0) * c.est[idx::SP_OUT]
    },
    b_big_num: |c, p| libm::pow(c.phi_norm, p) * c.est[idx::GP_OUT],
    mass_small: |c| c.inf_small * c.inf_small * c.est[idx::SP_IN],
    mass_big: |c| c.inf_big * c.est[idx::GP_IN],
};

fn phi_drift(c: &Cell, p: f64) -> f64 {
    libm::pow(c.nx, p - 1.0) * c.ell_norm
}

fn pipeline_constants(
    cells: &Cells,
    fun: &Functionals,
    cones: &ConeSpec,
    c_drift: &LimsupEstimate,
    gamma_drift: Option<f64>,
    settings: &AnalysisSettings,
) -> PipelineConstants {
    let p = cones.p();
    let phs = |c: &Cell| (fun.phi_small)(c, p);
    let phb = |c: &Cell| (fun.phi_big)(c, p);
    let phk = |c: &Cell| phs(c) + phb(c);
    let phd = |c: &Cell| phi_drift(c, p);

    let b_small = cells.ratio(|c| (fun.b_small_num)(c, p), phs);
    let b_big = cells.ratio(|c| (fun.b_big_num)(c, p), phb);
    let ker_ratio = cells.ratio(phb, phs);
    let regime_ker = ratio_trend(cells, phb, phs, settings.regime_slope, "φ^big/φ^small")
        .map(|t| match t {
            Trend::Grows => KerRegime::BigDominates,
            Trend::Decays => KerRegime::SmallDominates,
            Trend::Flat => KerRegime::Comparable,
        });
    let band = b_small.spread.max(b_big.spread) + 10.0 * settings.cubature.tol;
    let (c_inf_ker, c_sup_ker) = (ker_ratio.liminf, ker_ratio.value);
    let c_ker = Computed::from_result(regime_ker.clone().and_then(|r| {
        combine_c_ker(
            cones.a_small(),
            limsup_value(&b_small),
            cones.a_big(),
            limsup_value(&b_big),
            c_inf_ker,
            c_sup_ker,
            r,
            band,
        )
    }));

    let tot_ratio = cells.ratio(phd, phk);
    let regime_tot = ratio_trend(cells, phd, phk, settings.regime_slope, "φ^drift/φ^ker").map(
        |t| match t {
            Trend::Grows => TotRegime::DriftDominates,
            Trend::Decays => TotRegime::KerDominates,
            Trend::Flat => TotRegime::Comparable,
        },
    );
    let (c_inf_tot, c_sup_tot) = (tot_ratio.liminf, tot_ratio.value);
    let c_drift_v = limsup_value(c_drift);
    let c_tot = Computed::from_result(regime_tot.clone().and_then(|r| {
        let ck = match (r, c_ker.value()) {
            (TotRegime::DriftDominates, v) => v.unwrap_or(f64::NAN),
            (_, Some(v)) => v,
            (_, None) => {
                return Err(Error::Inconclusive("C^ker is not available".into()));
            }
        };
        combine_c_tot(ck, c_drift_v, c_inf_tot, c_sup_tot, r, c_drift.spread + band)
    }));
    let c_tot_envelope = match (&regime_tot, c_ker.value()) {
        (Ok(TotRegime::Comparable), Some(ck)) => {
            Some(c_tot_envelope(ck, c_drift_v, c_inf_tot, c_sup_tot))
        }
        _ => None,
    };

    let gamma_small = growth(cells, fun.mass_small);
    let gamma_big = growth(cells, fun.mass_big);
    let gamma_ker = opt_max(gamma_small.map(|g| g - 1.0), gamma_big);
    PipelineConstants {
        a_small: cones.a_small(),
        a_big: cones.a_big(),
        b_small,
        b_big,
        ker_ratio,
        c_inf_ker,
        c_sup_ker,
        regime_ker: regime_ker.ok(),
        c_ker,
        tot_ratio,
        c_inf_tot,
        c_sup_tot,
        regime_tot: regime_tot.ok(),
        c_tot,
        c_tot_envelope,
        gamma_small,
        gamma_big,
        gamma_ker,
        gamma_tot: opt_max(gamma_drift, gamma_ker),
        k_small: lower_constant(cells, gamma_small, fun.mass_small),
        k_big: lower_constant(cells, gamma_big, fun.mass_big),
        gam_small: gamma_small.map(|g| p + g > 2.0),
        gam_big: gamma_big.map(|g| p + g > 1.0),
    }
}

fn negligibility_check(ratios: LimsupEstimate, table: &[Vec<f64>], radii: &[f64], slope: f64) -> NegligibilityCheck {
    let top = limsup::top_decade(radii);
    let identically_zero = table.iter().all(|row| top.iter().all(|&i| row[i] == 0.0));
    let last = ratios.per_direction.iter().map(|f| f.last).fold(f64::NEG_INFINITY, f64::max);
    let pass = identically_zero || (ratios.trend_slope <= -slope && last < NEGLIGIBLE_LAST);
    NegligibilityCheck {
        ratios,
        identically_zero,
        last,
        pass,
    }
}

fn ball_check(cells: &Cells, den: impl Fn(&Cell) -> f64, slope: f64) -> NegligibilityCheck {
    let t = cells.table(|c| safe_ratio(c.est[idx::BALL], den(c)));
    let est = LimsupEstimate::from_table(&cells.radii, &t);
    negligibility_check(est, &t, &cells.radii, slope)
}

fn symbol_check<E: Executor>(
    grid: &Grid,
    cells: &Cells,
    gen: &GeneratorSpec,
    p: f64,
    settings: &AnalysisSettings,
    exec: &E,
) -> Result<NegligibilityCheck> {
    let nd = grid.directions().len();
    let states = settings.symbol_states.clamp(1, nd);
    let rows: Vec<usize> = (0..states).map(|k| k * nd / states).collect();
    // `1 − cos` is even in ξ: half the circle suffices in the plane.
    let nf = settings.symbol_directions.max(1);
    let freqs = match grid.dim() {
        2 => limsup::directions(2, 2 * nf)[..nf].to_vec(),
        d => limsup::directions(d, nf),
    };
    let nr = grid.radii().len();
    let opts = settings.cubature;
    let flat = exec.map(rows.len() * nr, |k| {
        let (j, i) = (rows[k / nr], k % nr);
        let x = grid.directions()[j] * grid.radii()[i];
        let scale = 2.0 / x.norm();
        let mut sup = 0.0f64;
        for f in &freqs {
            sup = sup.max(
                symbol_re_with_cut(&x, &(*f * scale), gen, &opts, NEGLIGIBILITY_SYMBOL_CUT)?.value,
            );
        }
        let c = &cells.rows[j][i];
        Ok::<f64, Error>(safe_ratio(sup, GENERAL.phi_ker(c, p)))
    });
    let mut table = Vec::with_capacity(rows.len());
    let mut row = Vec::with_capacity(nr);
    for v in flat {
        row.push(v?);
        if row.len() == nr {
            table.push(core::mem::take(&mut row));
        }
    }
    let est = LimsupEstimate::from_table(grid.radii(), &table);
    Ok(negligibility_check(est, &table, grid.radii(), settings.regime_slope))
}

impl Functionals {
    fn phi_ker(&self, c: &Cell, p: f64) -> f64 {
        (self.phi_small)(c, p) + (self.phi_big)(c, p)
    }
}

fn negligibility<E: Executor>(
    grid: &Grid,
    cells: &Cells,
    gen: &GeneratorSpec,
    p: f64,
    settings: &AnalysisSettings,
    exec: &E,
) -> Result<NegligibilityReport> {
    let ball = ball_check(cells, |c| GENERAL.phi_ker(c, p), settings.regime_slope);
    let phi_ball = gen
        .kernel
        .phi_field()
        .map(|_| ball_check(cells, |c| PHI.phi_ker(c, p), settings.regime_slope));
    let symbol = if settings.symbol_check && !ball.identically_zero {
        Some(symbol_check(grid, cells, gen, p, settings, exec)?)
    } else {
        None
    };
    let pass = ball.pass || symbol.as_ref().is_some_and(|s| s.pass);
    let phi_pass = phi_ball.as_ref().map(|b| b.pass);
    Ok(NegligibilityReport {
        ball,
        phi_ball,
        symbol,
        pass,
        phi_pass,
    })
}

/// Standalone negligibility check of the ball mass `ν(x, B(−x,1))` against
/// `φ^ker`, plus the symbol-based sufficient condition.
pub fn check_negligibility<E: Executor>(
    grid: &Grid,
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    cones: &ConeSpec,
    settings: &AnalysisSettings,
    exec: &E,
) -> Result<NegligibilityReport> {
    grid.check_resolution()?;
    let cells = Cells::evaluate(grid, gen, lyap, cones, &settings.cubature, exec)?;
    negligibility(grid, &cells, gen, cones.p(), settings, exec)
}

fn select_certificate(
    gen: &GeneratorSpec,
    constants: &ConstantsReport,
) -> core::result::Result<Certificate, String> {
    if let Some(pd) = &constants.pure_diffusion {
        return Ok(Certificate {
            pipeline: Pipeline::PureDiffusion,
            c: limsup_value(pd),
            gamma: 1.0,
        });
    }
    let tot = !gen.drift.is_zero() || !gen.diffusion.is_zero();
    let mut candidates = Vec::new();
    let mut push = |pc: &PipelineConstants, ker: Pipeline, full: Pipeline| {
        let (c, g, which) = if tot {
            (&pc.c_tot, pc.gamma_tot, full)
        } else {
            (&pc.c_ker, pc.gamma_ker, ker)
        };
        candidates.push(match (c, g) {
            (Computed::Value(c), Some(gamma)) => Ok(Certificate {
                pipeline: which,
                c: *c,
                gamma,
            }),
            (Computed::Inconclusive(m), _) => Err(alloc::format!("{}: {m}", which.name())),
            (_, None) => Err(alloc::format!("{}: no growth exponent", which.name())),
        });
    };
    push(&constants.general, Pipeline::Ker, Pipeline::Tot);
    if let Some(phi) = &constants.phi {
        push(phi, Pipeline::PhiKer, Pipeline::PhiTot);
    }
    if let Some(c) = candidates.iter().flatten().find(|c| c.c < 0.0) {
        return Ok(*c);
    }
    candidates.into_iter().next().unwrap()
}

/// Runs the full constants pipeline on `grid`.
pub fn analyze<E: Executor>(
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    cones: &ConeSpec,
    grid: &Grid,
    settings: &AnalysisSettings,
    exec: &E,
) -> Result<DriftReport> {
    grid.check_resolution()?;
    if (lyap.p() - cones.p()).abs() > 0.0 {
        return Err(Error::param("cones", "cone spec was validated for a different p"));
    }
    let p = lyap.p();
    let cells = Cells::evaluate(grid, gen, lyap, cones, &settings.cubature, exec)?;
    let mut warnings = Vec::new();
    let non_converged_cells = cells.rows.iter().flatten().filter(|c| !c.converged).count();
    if non_converged_cells > 0 {
        warnings.push(alloc::format!(
            "{non_converged_cells} grid cells did not reach the cubature tolerance"
        ));
    }

    let c_drift = cells.ratio(|c| c.drift_dot, |c| phi_drift(c, p));
    let gamma_drift = if cells.all_zero(|c| c.ell_norm) {
        None
    } else {
        growth(&cells, |c| c.ell_norm)
    };
    let general = pipeline_constants(&cells, &GENERAL, cones, &c_drift, gamma_drift, settings);
    let phi = gen
        .kernel
        .phi_field()
        .map(|_| pipeline_constants(&cells, &PHI, cones, &c_drift, gamma_drift, settings));

    let phi_tot = |c: &Cell| GENERAL.phi_ker(c, p) + phi_drift(c, p);
    let quiet = cells.all_zero(phi_tot);
    let pure_diffusion = (quiet && !cells.all_zero(|c| c.lv)).then(|| cells.ratio(|c| c.lv, |c| c.v));

    let diffusion_ratio = if cells.all_zero(|c| c.diffusion) || quiet {
        None
    } else {
        let r = cells.ratio(|c| c.diffusion.abs(), phi_tot);
        if r.trend_slope > -settings.regime_slope && !cells.all_zero(|c| c.diffusion) {
            warnings.push(alloc::format!(
                "diffusion term does not become negligible against φ^tot (trend slope {:.3})",
                r.trend_slope
            ));
        }
        Some(r)
    };
    for (name, pc) in [("general", Some(&general)), ("Φ", phi.as_ref())] {
        let Some(pc) = pc else { continue };
        if pc.gam_small == Some(false) {
            warnings.push(alloc::format!("{name} pipeline: p + γ_small ≤ 2"));
        }
        if pc.gam_big == Some(false) {
            warnings.push(alloc::format!("{name} pipeline: p + γ_big ≤ 1"));
        }
        for (b, label) in [(&pc.b_small, "B^small"), (&pc.b_big, "B^big")] {
            if b.diverges && b.value.is_finite() {
                warnings.push(alloc::format!(
                    "{name} pipeline: {label} ratio still grows (slope {:.3})",
                    b.trend_slope
                ));
            }
        }
    }

    let constants = ConstantsReport {
        p,
        eps_small: cones.eps_small(),
        eps_big: cones.eps_big(),
        general,
        phi,
        c_drift,
        gamma_drift,
        pure_diffusion,
    };
    let negligibility = negligibility(grid, &cells, gen, p, settings, exec)?;

    let certificate = select_certificate(gen, &constants);
    let (classification, rate_spec) = match &certificate {
        Err(reason) => (
            Classification::Inconclusive {
                reason: reason.clone(),
            },
            None,
        ),
        Ok(cert) => {
            let neglig_ok = match cert.pipeline {
                Pipeline::PhiKer | Pipeline::PhiTot => negligibility.phi_pass.unwrap_or(false),
                _ => negligibility.pass,
            };
            classify(cert, p, neglig_ok, settings)
        }
    };
    Ok(DriftReport {
        radii: grid.radii().to_vec(),
        n_directions: grid.directions().len(),
        constants,
        certificate: certificate.ok(),
        classification,
        rate: rate_spec,
        negligibility,
        diffusion_ratio,
        warnings,
        non_converged_cells,
    })
}

fn classify(
    cert: &Certificate,
    p: f64,
    negligible: bool,
    settings: &AnalysisSettings,
) -> (Classification, Option<RateSpec>) {
    if !(cert.c < 0.0) {
        return (
            Classification::NotCertified {
                reason: alloc::format!("{} constant {} is not negative", cert.pipeline.name(), cert.c),
            },
            None,
        );
    }
    if !negligible {
        return (
            Classification::Inconclusive {
                reason: "ball-mass negligibility is not established".into(),
            },
            None,
        );
    }
    match RateSpec::with_params(p, cert.gamma, settings.delta, settings.gamma_time)
        .and_then(|s| s.classify().map(|c| (c, s)))
    {
        Ok((RateClass::Exponential, s)) => (Classification::Exponential, Some(s)),
        Ok((RateClass::Polynomial { exponent }, s)) => {
            (Classification::Polynomial { exponent }, Some(s))
        }
        Err(e) => (
            Classification::Inconclusive {
                reason: e.to_string(),
            },
            None,
        ),
    }
}

/// Rate class and ψ parameters of a report whose certificate is negative.
pub fn classify_and_rate(report: &DriftReport) -> Result<(RateClass, RateSpec)> {
    let cert = report
        .certificate
        .ok_or_else(|| Error::Inconclusive("no drift certificate".into()))?;
    if !(cert.c < 0.0) {
        return Err(Error::Inconclusive(alloc::format!(
            "constant {} is not negative",
            cert.c
        )));
    }
    let spec = match report.rate {
        Some(s) => s,
        None => RateSpec::new(report.constants.p, cert.gamma)?,
    };
    Ok((spec.classify()?, spec))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationRow {
    pub norm_x: f64,
    pub direction: usize,
    pub lv: f64,
    pub bound: f64,
    /// `bound − ℒV`; negative rows need the compact constant.
    pub margin: f64,
    pub est_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub certificate: Certificate,
    pub theta: f64,
    pub rows: Vec<VerificationRow>,
    /// Smallest `C ≥ 0` with `ℒV ≤ bound + C` on the whole grid.
    pub c_min: f64,
    pub worst: Option<usize>,
    pub failures: usize,
    /// Rows in the top decade of radii that violate the bound without `C`.
    pub tail_failures: usize,
    pub pass: bool,
}

/// Checks `ℒV(x) ≤ (c + θ)|x|^{p−1+γ} + C` at every grid point, with `ℒ₀V`
/// in place of `ℒV` for jump-only certificates.
pub fn verify_drift<E: Executor>(
    grid: &Grid,
    gen: &GeneratorSpec,
    lyap: &LyapunovSpec,
    cert: &Certificate,
    theta: f64,
    opts: &CubatureOptions,
    exec: &E,
) -> Result<Verification> {
    if !(cert.c < 0.0) {
        return Err(Error::Precondition(alloc::format!(
            "verification needs a negative constant, got {}",
            cert.c
        )));
    }
    if !(theta > 0.0 && theta < -cert.c) {
        return Err(Error::Precondition(alloc::format!(
            "theta must lie in (0, {}), got {theta}",
            -cert.c
        )));
    }
    if gen.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: grid.dim(),
        });
    }
    let p = lyap.p();
    let nr = grid.radii().len();
    let flat = exec.map(grid.len(), |k| {
        let (j, i, x) = grid.cell(k);
        let g = apply_generator(&x, gen, lyap, opts)?;
        let lv = if cert.pipeline.jump_part_only() {
            g.small_jump_part + g.big_jump_part
        } else {
            g.total
        };
        let bound = (cert.c + theta) * libm::pow(grid.radii()[i], p - 1.0 + cert.gamma);
        Ok::<VerificationRow, Error>(VerificationRow {
            norm_x: grid.radii()[i],
            direction: j,
            lv,
            bound,
            margin: bound - lv,
            est_error: g.est_error,
        })
    });
    let rows = flat.into_iter().collect::<Result<Vec<_>>>()?;
    let top = limsup::top_decade(grid.radii());
    let mut c_min = 0.0f64;
    let mut worst = None;
    let mut failures = 0;
    let mut tail_failures = 0;
    for (k, r) in rows.iter().enumerate() {
        if r.margin < 0.0 {
            failures += 1;
            if top.contains(&(k % nr)) {
                tail_failures += 1;
            }
            if -r.margin > c_min {
                c_min = -r.margin;
                worst = Some(k);
            }
        }
    }
    Ok(Verification {
        certificate: *cert,
        theta,
        rows,
        c_min,
        worst,
        failures,
        tail_failures,
        pass: c_min <= MAX_COMPACT_CONSTANT && tail_failures == 0,
    })
}

/// The default slack `θ = −c/2`.
pub fn default_theta(cert: &Certificate) -> f64 {
    -0.5 * cert.c
}
