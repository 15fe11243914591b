use std::path::PathBuf;

use levy_drift_core::analyzer::{analyze, default_theta, verify_drift, Classification};
use levy_drift_core::rate::rate_psi;
use levy_drift_core::simulator::{fit_rate, simulate_ensemble, tv_decay};
use levy_drift_core::{RateClass, RateSpec, TestFunction, Vector};

use crate::config::{Model, RunConfig};
use crate::error::{exit, CliError};
use crate::exec::Parallel;
use crate::io::{psi_csv, skeleton_bytes, snapshots_csv, tv_csv, verification_csv, OutDir};
use crate::report::{
    to_json, ClassificationOut, ConstantsOut, PsiRow, RateOut, SimulateOut, SnapshotOut, TvOut,
    VerifyOut,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Constants,
    Verify,
    Simulate,
    Rate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Verify => "verify",
            Command::Simulate => "simulate",
            Command::Rate => "rate",
        }
    }
}

/// Command-line overrides on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub grid_radii: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tol {
            cfg.analysis.tol = t;
        }
        if let Some(n) = self.grid_radii {
            cfg.grid.radii = n;
        }
    }
}

pub struct Outcome {
    pub exit_code: i32,
    pub text: String,
    pub json: String,
}

fn classification_code(c: &Classification) -> i32 {
    match c {
        Classification::Exponential | Classification::Polynomial { .. } => exit::CERTIFIED,
        Classification::NotCertified { .. } => exit::NOT_CERTIFIED,
        Classification::Inconclusive { .. } => exit::INCONCLUSIVE,
    }
}

/// Runs `cmd`, writes its files under the configured output directory and
/// returns the rendered report.
pub fn run(cmd: Command, cfg: &RunConfig, exec: &Parallel) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let out = OutDir::create(&cfg.output.dir)?;
    let outcome = match cmd {
        Command::Constants => constants(cfg, &model, exec)?,
        Command::Verify => verify(cfg, &model, exec, &out)?,
        Command::Simulate => simulate(cfg, &model, exec, &out)?,
        Command::Rate => rate(cfg, &model, exec, &out)?,
    };
    out.write(&format!("{}.txt", cmd.name()), outcome.text.as_bytes())?;
    out.write(&format!("{}.json", cmd.name()), outcome.json.as_bytes())?;
    Ok(outcome)
}

fn constants(cfg: &RunConfig, m: &Model, exec: &Parallel) -> Result<Outcome, CliError> {
    let cones = cfg.require_cones(m)?;
    let report = analyze(&m.generator, &m.lyapunov, &cones, &m.grid, &m.settings, exec)?;
    let out = ConstantsOut::from(&report);
    Ok(Outcome {
        exit_code: classification_code(&report.classification),
        text: out.to_text(),
        json: to_json(&out),
    })
}

fn verify(cfg: &RunConfig, m: &Model, exec: &Parallel, dir: &OutDir) -> Result<Outcome, CliError> {
    let cones = cfg.require_cones(m)?;
    let report = analyze(&m.generator, &m.lyapunov, &cones, &m.grid, &m.settings, exec)?;
    let mut code = classification_code(&report.classification);
    let verification = match report.certificate {
        Some(cert) if cert.c < 0.0 => {
            let theta = cfg.analysis.theta.unwrap_or_else(|| default_theta(&cert));
            let v = verify_drift(
                &m.grid,
                &m.generator,
                &m.lyapunov,
                &cert,
                theta,
                &m.settings.cubature,
                exec,
            )?;
            dir.write("verification.csv", verification_csv(&v).as_bytes())?;
            if code == exit::CERTIFIED && !v.pass {
                code = exit::NOT_CERTIFIED;
            }
            Some(v)
        }
        _ => None,
    };
    let out = VerifyOut::new(ConstantsOut::from(&report), verification.as_ref());
    Ok(Outcome {
        exit_code: code,
        text: out.to_text(),
        json: to_json(&out),
    })
}

fn point(v: &[f64], d: usize, what: &str) -> Result<Vector, CliError> {
    if v.len() != d {
        return Err(CliError::Config(format!("{what} needs {d} entries, got {}", v.len())));
    }
    Vector::from_slice(v).map_err(|e| CliError::Config(e.to_string()))
}

fn simulate(cfg: &RunConfig, m: &Model, exec: &Parallel, dir: &OutDir) -> Result<Outcome, CliError> {
    let (sim, s) = cfg.sim_config()?;
    let d = m.generator.dim();
    let x0 = point(&s.x0, d, "simulate.x0")?;
    let y0 = s.y0.as_deref().map(|y| point(y, d, "simulate.y0")).transpose()?;
    let ens = simulate_ensemble(&x0, &m.generator, &sim, exec)?;
    let mut snapshots = Vec::with_capacity(ens.n_snapshots());
    for (k, t) in ens.times().into_iter().enumerate() {
        let states = ens.snapshot(k);
        let n = states.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        let (mut norm, mut v, mut v2) = (0.0, 0.0, 0.0);
        for x in &states {
            for (i, m) in mean.iter_mut().enumerate() {
                *m += x[i];
            }
            norm += x.norm();
            let vx = m.lyapunov.value(x);
            v += vx;
            v2 += vx * vx;
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mean_v = v / n;
        let var = if n > 1.0 { ((v2 / n - mean_v * mean_v) * n / (n - 1.0)).max(0.0) } else { 0.0 };
        snapshots.push(SnapshotOut {
            t,
            mean,
            mean_norm: norm / n,
            mean_v,
            se_v: (var / n).sqrt(),
        });
    }
    dir.write("skeleton_summary.csv", snapshots_csv(&snapshots, d).as_bytes())?;
    if s.dump_skeleton {
        dir.write("skeleton.bin", &skeleton_bytes(&ens))?;
    }
    let mut code = exit::CERTIFIED;
    let tv = match &y0 {
        None => None,
        Some(y0) => {
            let times: Vec<f64> = ens.times().into_iter().skip(1).collect();
            let series = tv_decay(&x0, y0, &times, &m.generator, &sim, s.bins, exec)?;
            let fit = fit_rate(&series.decay_window()).map_err(|e| e.to_string());
            if fit.is_err() {
                code = exit::INCONCLUSIVE;
            }
            let tv = TvOut::new(&series, fit);
            dir.write("tv.csv", tv_csv(&tv.points).as_bytes())?;
            Some(tv)
        }
    };
    let out = SimulateOut {
        dim: d,
        n_paths: ens.n_paths(),
        dt: ens.dt,
        h: ens.h,
        horizon: sim.horizon,
        seed: sim.seed,
        exploded: ens.exploded_count(),
        truncation_bias: ens.truncation_bias,
        snapshots,
        tv,
    };
    Ok(Outcome {
        exit_code: code,
        text: out.to_text(),
        json: to_json(&out),
    })
}

fn rate(cfg: &RunConfig, m: &Model, exec: &Parallel, dir: &OutDir) -> Result<Outcome, CliError> {
    let r = &cfg.rate;
    if !(r.t_max > 1.0) || r.points < 2 {
        return Err(CliError::Config("rate needs t_max > 1 and at least 2 points".into()));
    }
    let p = m.lyapunov.p();
    let (classification, spec) = match r.gamma {
        Some(gamma) => {
            let spec = RateSpec::with_params(p, gamma, m.settings.delta, m.settings.gamma_time)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let c = match spec.classify() {
                Ok(RateClass::Exponential) => Classification::Exponential,
                Ok(RateClass::Polynomial { exponent }) => Classification::Polynomial { exponent },
                Err(e) => Classification::Inconclusive { reason: e.to_string() },
            };
            (c, Some(spec))
        }
        None => {
            let cones = cfg.require_cones(m)?;
            let report = analyze(&m.generator, &m.lyapunov, &cones, &m.grid, &m.settings, exec)?;
            (report.classification.clone(), report.rate)
        }
    };
    let code = classification_code(&classification);
    let mut table = Vec::new();
    if let (exit::CERTIFIED, Some(spec)) = (code, &spec) {
        let l = r.t_max.ln();
        for i in 0..r.points {
            let t = (l * i as f64 / (r.points - 1) as f64).exp();
            table.push(PsiRow {
                t,
                psi: rate_psi(t, spec)?,
            });
        }
        dir.write("psi.csv", psi_csv(&table).as_bytes())?;
    }
    let out = RateOut {
        classification: ClassificationOut::from(&classification),
        rate: spec.as_ref().map(Into::into),
        table,
    };
    Ok(Outcome {
        exit_code: code,
        text: out.to_text(),
        json: to_json(&out),
    })
}
