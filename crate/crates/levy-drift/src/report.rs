//! Serializable reports. Each command fills one of these; the text and JSON
//! renderings are produced from the same value so they carry the same
//! numbers. JSON holds full `f64` precision; non-finite values become `null`.

use std::fmt::Write as _;

use levy_drift_core::analyzer::{
    Classification, Computed, DriftReport, LimsupEstimate, NegligibilityCheck, PipelineConstants,
    Verification,
};
use levy_drift_core::simulator::{RateFit, TvSeries};
use levy_drift_core::RateSpec;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct EstimateOut {
    pub value: f64,
    pub liminf: f64,
    pub trend_slope: f64,
    pub min_slope: f64,
    pub spread: f64,
    pub diverges: bool,
}

impl From<&LimsupEstimate> for EstimateOut {
    fn from(e: &LimsupEstimate) -> Self {
        EstimateOut {
            value: e.value,
            liminf: e.liminf,
            trend_slope: e.trend_slope,
            min_slope: e.min_slope,
            spread: e.spread,
            diverges: e.diverges,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComputedOut {
    pub value: Option<f64>,
    pub inconclusive: Option<String>,
}

impl From<&Computed> for ComputedOut {
    fn from(c: &Computed) -> Self {
        match c {
            Computed::Value(v) => ComputedOut {
                value: Some(*v),
                inconclusive: None,
            },
            Computed::Inconclusive(m) => ComputedOut {
                value: None,
                inconclusive: Some(m.clone()),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineOut {
    pub a_small: f64,
    pub a_big: f64,
    pub b_small: EstimateOut,
    pub b_big: EstimateOut,
    pub ker_ratio: EstimateOut,
    pub c_inf_ker: f64,
    pub c_sup_ker: f64,
    pub regime_ker: Option<String>,
    pub c_ker: ComputedOut,
    pub tot_ratio: EstimateOut,
    pub c_inf_tot: f64,
    pub c_sup_tot: f64,
    pub regime_tot: Option<String>,
    pub c_tot: ComputedOut,
    pub c_tot_envelope: Option<f64>,
    pub gamma_small: Option<f64>,
    pub gamma_big: Option<f64>,
    pub gamma_ker: Option<f64>,
    pub gamma_tot: Option<f64>,
    pub k_small: Option<f64>,
    pub k_big: Option<f64>,
    pub gam_small: Option<bool>,
    pub gam_big: Option<bool>,
}

impl From<&PipelineConstants> for PipelineOut {
    fn from(c: &PipelineConstants) -> Self {
        PipelineOut {
            a_small: c.a_small,
            a_big: c.a_big,
            b_small: (&c.b_small).into(),
            b_big: (&c.b_big).into(),
            ker_ratio: (&c.ker_ratio).into(),
            c_inf_ker: c.c_inf_ker,
            c_sup_ker: c.c_sup_ker,
            regime_ker: c.regime_ker.map(|r| format!("{r:?}")),
            c_ker: (&c.c_ker).into(),
            tot_ratio: (&c.tot_ratio).into(),
            c_inf_tot: c.c_inf_tot,
            c_sup_tot: c.c_sup_tot,
            regime_tot: c.regime_tot.map(|r| format!("{r:?}")),
            c_tot: (&c.c_tot).into(),
            c_tot_envelope: c.c_tot_envelope,
            gamma_small: c.gamma_small,
            gamma_big: c.gamma_big,
            gamma_ker: c.gamma_ker,
            gamma_tot: c.gamma_tot,
            k_small: c.k_small,
            k_big: c.k_big,
            gam_small: c.gam_small,
            gam_big: c.gam_big,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOut {
    pub ratios: EstimateOut,
    pub identically_zero: bool,
    pub last: f64,
    pub pass: bool,
}

impl From<&NegligibilityCheck> for CheckOut {
    fn from(c: &NegligibilityCheck) -> Self {
        CheckOut {
            ratios: (&c.ratios).into(),
            identically_zero: c.identically_zero,
            last: c.last,
            pass: c.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NegligibilityOut {
    pub ball: CheckOut,
    pub phi_ball: Option<CheckOut>,
    pub symbol: Option<CheckOut>,
    pub pass: bool,
    pub phi_pass: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateOut {
    pub pipeline: String,
    pub c: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationOut {
    /// `exponential`, `polynomial`, `not_certified` or `inconclusive`.
    pub kind: String,
    pub exponent: Option<f64>,
    pub reason: Option<String>,
}

impl From<&Classification> for ClassificationOut {
    fn from(c: &Classification) -> Self {
        let (kind, exponent, reason) = match c {
            Classification::Exponential => ("exponential", None, None),
            Classification::Polynomial { exponent } => ("polynomial", Some(*exponent), None),
            Classification::NotCertified { reason } => ("not_certified", None, Some(reason.clone())),
            Classification::Inconclusive { reason } => ("inconclusive", None, Some(reason.clone())),
        };
        ClassificationOut {
            kind: kind.into(),
            exponent,
            reason,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSpecOut {
    pub p: f64,
    pub gamma: f64,
    pub delta: f64,
    pub gamma_time: f64,
}

impl From<&RateSpec> for RateSpecOut {
    fn from(r: &RateSpec) -> Self {
        RateSpecOut {
            p: r.p,
            gamma: r.gamma,
            delta: r.delta,
            gamma_time: r.gamma_time,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsOut {
    pub p: f64,
    pub eps_small: f64,
    pub eps_big: f64,
    pub radii: Vec<f64>,
    pub n_directions: usize,
    pub general: PipelineOut,
    pub phi: Option<PipelineOut>,
    pub c_drift: EstimateOut,
    pub gamma_drift: Option<f64>,
    /// `limsup ℒV/V` when the generator has no jumps and no drift.
    pub pure_diffusion: Option<EstimateOut>,
    pub diffusion_ratio: Option<EstimateOut>,
    pub certificate: Option<CertificateOut>,
    pub classification: ClassificationOut,
    pub rate: Option<RateSpecOut>,
    pub negligibility: NegligibilityOut,
    pub non_converged_cells: usize,
    pub warnings: Vec<String>,
}

impl From<&DriftReport> for ConstantsOut {
    fn from(r: &DriftReport) -> Self {
        let c = &r.constants;
        let n = &r.negligibility;
        ConstantsOut {
            p: c.p,
            eps_small: c.eps_small,
            eps_big: c.eps_big,
            radii: r.radii.clone(),
            n_directions: r.n_directions,
            general: (&c.general).into(),
            phi: c.phi.as_ref().map(Into::into),
            c_drift: (&c.c_drift).into(),
            gamma_drift: c.gamma_drift,
            pure_diffusion: c.pure_diffusion.as_ref().map(Into::into),
            diffusion_ratio: r.diffusion_ratio.as_ref().map(Into::into),
            certificate: r.certificate.map(|c| CertificateOut {
                pipeline: c.pipeline.name().into(),
                c: c.c,
                gamma: c.gamma,
            }),
            classification: (&r.classification).into(),
            rate: r.rate.as_ref().map(Into::into),
            negligibility: NegligibilityOut {
                ball: (&n.ball).into(),
                phi_ball: n.phi_ball.as_ref().map(Into::into),
                symbol: n.symbol.as_ref().map(Into::into),
                pass: n.pass,
                phi_pass: n.phi_pass,
            },
            non_converged_cells: r.non_converged_cells,
            warnings: r.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOut {
    pub constants: ConstantsOut,
    pub theta: Option<f64>,
    pub c_min: Option<f64>,
    pub failures: Option<usize>,
    pub tail_failures: Option<usize>,
    pub worst_norm_x: Option<f64>,
    pub worst_margin: Option<f64>,
    pub pass: bool,
}

impl VerifyOut {
    pub fn new(constants: ConstantsOut, v: Option<&Verification>) -> Self {
        let worst = v.and_then(|v| v.worst.map(|k| v.rows[k]));
        VerifyOut {
            constants,
            theta: v.map(|v| v.theta),
            c_min: v.map(|v| v.c_min),
            failures: v.map(|v| v.failures),
            tail_failures: v.map(|v| v.tail_failures),
            worst_norm_x: worst.map(|r| r.norm_x),
            worst_margin: worst.map(|r| r.margin),
            pass: v.is_some_and(|v| v.pass),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotOut {
    pub t: f64,
    pub mean: Vec<f64>,
    pub mean_norm: f64,
    pub mean_v: f64,
    pub se_v: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TvPointOut {
    pub t: f64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub null_floor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitOut {
    /// `exponential` or `polynomial`.
    pub model: String,
    /// Decay rate (exponential) or exponent (polynomial).
    pub parameter: f64,
    pub r2_exponential: f64,
    pub r2_polynomial: f64,
    pub n_points: usize,
}

impl From<&RateFit> for FitOut {
    fn from(f: &RateFit) -> Self {
        use levy_drift_core::simulator::FittedModel;
        let (model, parameter) = match f.model {
            FittedModel::Exponential { rate } => ("exponential", rate),
            FittedModel::Polynomial { exponent } => ("polynomial", exponent),
        };
        FitOut {
            model: model.into(),
            parameter,
            r2_exponential: f.r2_exponential,
            r2_polynomial: f.r2_polynomial,
            n_points: f.n_points,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TvOut {
    pub points: Vec<TvPointOut>,
    pub decreasing: bool,
    /// Times used by the rate fit.
    pub fit_times: Vec<f64>,
    pub fit: Option<FitOut>,
    pub fit_error: Option<String>,
    pub warnings: Vec<String>,
}

impl TvOut {
    pub fn new(series: &TvSeries, fit: Result<RateFit, String>) -> Self {
        let (fit, fit_error) = match fit {
            Ok(f) => (Some((&f).into()), None),
            Err(e) => (None, Some(e)),
        };
        TvOut {
            points: series
                .points
                .iter()
                .map(|p| TvPointOut {
                    t: p.t,
                    estimate: p.estimate,
                    ci_lo: p.ci_lo,
                    ci_hi: p.ci_hi,
                    null_floor: p.null_floor,
                })
                .collect(),
            decreasing: series.is_decreasing(),
            fit_times: series.decay_window().iter().map(|p| p.0).collect(),
            fit,
            fit_error,
            warnings: series.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateOut {
    pub dim: usize,
    pub n_paths: usize,
    pub dt: f64,
    pub h: f64,
    pub horizon: f64,
    pub seed: u64,
    pub exploded: usize,
    pub truncation_bias: f64,
    pub snapshots: Vec<SnapshotOut>,
    pub tv: Option<TvOut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiRow {
    pub t: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateOut {
    pub classification: ClassificationOut,
    pub rate: Option<RateSpecOut>,
    pub table: Vec<PsiRow>,
}

/// Numbers in the text report.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        format!("{v}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), num)
}

fn estimate_line(out: &mut String, name: &str, e: &EstimateOut) {
    let _ = writeln!(
        out,
        "  {name:<16} {} (liminf {}, slope {}{})",
        num(e.value),
        num(e.liminf),
        num(e.trend_slope),
        if e.diverges { ", diverges" } else { "" }
    );
}

fn computed(c: &ComputedOut) -> String {
    match (&c.value, &c.inconclusive) {
        (Some(v), _) => num(*v),
        (None, Some(m)) => format!("inconclusive ({m})"),
        (None, None) => "n/a".into(),
    }
}

fn pipeline_text(out: &mut String, title: &str, c: &PipelineOut) {
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "  A_small          {}", num(c.a_small));
    let _ = writeln!(out, "  A_big            {}", num(c.a_big));
    estimate_line(out, "B_small", &c.b_small);
    estimate_line(out, "B_big", &c.b_big);
    estimate_line(out, "big/small", &c.ker_ratio);
    let _ = writeln!(
        out,
        "  regime ker       {} [c_inf {}, c_sup {}]",
        c.regime_ker.as_deref().unwrap_or("n/a"),
        num(c.c_inf_ker),
        num(c.c_sup_ker)
    );
    let _ = writeln!(out, "  C_ker            {}", computed(&c.c_ker));
    estimate_line(out, "drift/ker", &c.tot_ratio);
    let _ = writeln!(
        out,
        "  regime tot       {} [c_inf {}, c_sup {}]",
        c.regime_tot.as_deref().unwrap_or("n/a"),
        num(c.c_inf_tot),
        num(c.c_sup_tot)
    );
    let _ = writeln!(out, "  C_tot            {}", computed(&c.c_tot));
    let _ = writeln!(out, "  C_tot envelope   {}", opt(c.c_tot_envelope));
    let _ = writeln!(
        out,
        "  gamma small/big  {} / {}",
        opt(c.gamma_small),
        opt(c.gamma_big)
    );
    let _ = writeln!(
        out,
        "  gamma ker/tot    {} / {}",
        opt(c.gamma_ker),
        opt(c.gamma_tot)
    );
    let _ = writeln!(out, "  K small/big      {} / {}", opt(c.k_small), opt(c.k_big));
}

fn check_line(out: &mut String, name: &str, c: &CheckOut) {
    let _ = writeln!(
        out,
        "  {name:<16} {} (last {}, slope {}{})",
        if c.pass { "pass" } else { "fail" },
        num(c.last),
        num(c.ratios.trend_slope),
        if c.identically_zero { ", identically zero" } else { "" }
    );
}

fn classification_line(c: &ClassificationOut) -> String {
    match (c.kind.as_str(), c.exponent, &c.reason) {
        ("polynomial", Some(e), _) => format!("polynomial, psi(t) ~ t^{}", num(e)),
        (k, _, Some(r)) => format!("{k} ({r})"),
        (k, _, None) => k.into(),
    }
}

impl ConstantsOut {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "drift constants");
        let _ = writeln!(
            out,
            "  p {}  eps_small {}  eps_big {}",
            num(self.p),
            num(self.eps_small),
            num(self.eps_big)
        );
        let _ = writeln!(
            out,
            "  grid {} radii in [{}, {}] x {} directions",
            self.radii.len(),
            opt(self.radii.first().copied()),
            opt(self.radii.last().copied()),
            self.n_directions
        );
        pipeline_text(&mut out, "general pipeline", &self.general);
        if let Some(phi) = &self.phi {
            pipeline_text(&mut out, "phi pipeline", phi);
        }
        let _ = writeln!(out, "drift");
        estimate_line(&mut out, "C_drift", &self.c_drift);
        let _ = writeln!(out, "  gamma drift      {}", opt(self.gamma_drift));
        if let Some(e) = &self.diffusion_ratio {
            estimate_line(&mut out, "diffusion ratio", e);
        }
        if let Some(e) = &self.pure_diffusion {
            let _ = writeln!(out, "pure diffusion");
            estimate_line(&mut out, "LV/V", e);
        }
        let _ = writeln!(out, "negligibility");
        check_line(&mut out, "ball", &self.negligibility.ball);
        if let Some(c) = &self.negligibility.phi_ball {
            check_line(&mut out, "phi ball", c);
        }
        if let Some(c) = &self.negligibility.symbol {
            check_line(&mut out, "symbol", c);
        }
        let _ = writeln!(
            out,
            "  verdict          {}",
            if self.negligibility.pass { "pass" } else { "fail" }
        );
        let _ = writeln!(out, "certificate");
        match &self.certificate {
            Some(c) => {
                let _ = writeln!(
                    out,
                    "  {} c {} gamma {}",
                    c.pipeline,
                    num(c.c),
                    num(c.gamma)
                );
            }
            None => {
                let _ = writeln!(out, "  none");
            }
        }
        let _ = writeln!(out, "classification");
        let _ = writeln!(out, "  {}", classification_line(&self.classification));
        if let Some(r) = &self.rate {
            let _ = writeln!(
                out,
                "  rate p {} gamma {} delta {} time scale {}",
                num(r.p),
                num(r.gamma),
                num(r.delta),
                num(r.gamma_time)
            );
        }
        if self.non_converged_cells > 0 {
            let _ = writeln!(out, "non-converged cells {}", self.non_converged_cells);
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

impl VerifyOut {
    pub fn to_text(&self) -> String {
        let mut out = self.constants.to_text();
        let _ = writeln!(out, "verification");
        match self.theta {
            None => {
                let _ = writeln!(out, "  skipped: no certificate");
            }
            Some(theta) => {
                let _ = writeln!(out, "  theta            {}", num(theta));
                let _ = writeln!(out, "  C (compact)      {}", opt(self.c_min));
                let _ = writeln!(
                    out,
                    "  failures         {} ({} in the top decade)",
                    self.failures.unwrap_or(0),
                    self.tail_failures.unwrap_or(0)
                );
                if let (Some(r), Some(m)) = (self.worst_norm_x, self.worst_margin) {
                    let _ = writeln!(out, "  worst            |x| {} margin {}", num(r), num(m));
                }
                let _ = writeln!(out, "  verdict          {}", if self.pass { "pass" } else { "fail" });
            }
        }
        out
    }
}

impl SimulateOut {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "simulation");
        let _ = writeln!(
            out,
            "  d {}  paths {}  dt {}  h {}  horizon {}  seed {}",
            self.dim,
            self.n_paths,
            num(self.dt),
            num(self.h),
            num(self.horizon),
            self.seed
        );
        let _ = writeln!(out, "  exploded paths   {}", self.exploded);
        let _ = writeln!(out, "  truncation bias  {}", num(self.truncation_bias));
        let _ = writeln!(out, "skeleton");
        let _ = writeln!(out, "  {:>14} {:>14} {:>14} {:>14}", "t", "mean |X|", "mean V", "se V");
        for s in &self.snapshots {
            let _ = writeln!(
                out,
                "  {:>14} {:>14} {:>14} {:>14}",
                num(s.t),
                num(s.mean_norm),
                num(s.mean_v),
                num(s.se_v)
            );
        }
        if let Some(tv) = &self.tv {
            let _ = writeln!(out, "total variation");
            let _ = writeln!(
                out,
                "  {:>14} {:>14} {:>14} {:>14} {:>14}",
                "t", "estimate", "ci_lo", "ci_hi", "noise floor"
            );
            for p in &tv.points {
                let _ = writeln!(
                    out,
                    "  {:>14} {:>14} {:>14} {:>14} {:>14}",
                    num(p.t),
                    num(p.estimate),
                    num(p.ci_lo),
                    num(p.ci_hi),
                    num(p.null_floor)
                );
            }
            let _ = writeln!(out, "  decreasing       {}", tv.decreasing);
            match (&tv.fit, &tv.fit_error) {
                (Some(f), _) => {
                    let _ = writeln!(
                        out,
                        "  fit              {} {} (R2 exp {}, poly {}, {} points)",
                        f.model,
                        num(f.parameter),
                        num(f.r2_exponential),
                        num(f.r2_polynomial),
                        f.n_points
                    );
                }
                (None, Some(e)) => {
                    let _ = writeln!(out, "  fit              inconclusive ({e})");
                }
                (None, None) => {}
            }
            for w in &tv.warnings {
                let _ = writeln!(out, "warning: {w}");
            }
        }
        out
    }
}

impl RateOut {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ergodic rate");
        let _ = writeln!(out, "  {}", classification_line(&self.classification));
        if let Some(r) = &self.rate {
            let _ = writeln!(
                out,
                "  p {} gamma {} delta {} time scale {}",
                num(r.p),
                num(r.gamma),
                num(r.delta),
                num(r.gamma_time)
            );
        }
        if !self.table.is_empty() {
            let _ = writeln!(out, "  {:>14} {:>14}", "t", "psi(t)");
            for row in &self.table {
                let _ = writeln!(out, "  {:>14} {:>14}", num(row.t), num(row.psi));
            }
        }
        out
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report values serialize");
    s.push('\n');
    s
}
