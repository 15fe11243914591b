//! Run configuration: a TOML document with nested tables. The schema is
//! documented in `configs/SCHEMA.md`; unknown keys are rejected.

use std::path::{Path, PathBuf};

use levy_drift_core::analyzer::{AnalysisSettings, Grid};
use levy_drift_core::kernels::{
    Atom, AtomOffset, CompoundPoissonKernel, DiffusionField, DriftField, JumpLaw, PhiField,
    PowerPiece, Region, StableKernel, StateAtom, StateDependentKernel,
};
use levy_drift_core::simulator::SimConfig;
use levy_drift_core::{ConeSpec, CubatureOptions, GeneratorSpec, JumpKernel, LyapunovSpec, Matrix, Vector};
use serde::Deserialize;

use crate::error::{config_err, CliError};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub lyapunov: LyapunovConfig,
    pub cones: Option<ConesConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub rate: RateConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub dim: usize,
    #[serde(default)]
    pub drift: DriftConfig,
    #[serde(default)]
    pub diffusion: DiffusionConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
}

/// Named drift fields.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    #[default]
    Zero,
    /// `ℓ(x) = A x + b`.
    Linear { a: Vec<Vec<f64>>, b: Option<Vec<f64>> },
    /// `ℓ(x) = coeff (1+|x|²)^{(kappa−1)/2} x`.
    RadialPower { coeff: f64, kappa: f64 },
}

/// Named diffusion fields.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionConfig {
    #[default]
    Zero,
    Constant { q: Vec<Vec<f64>> },
    /// `Q(x) = scale · x x'`.
    OuterProduct {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `Q(x) = coeff (1+|x|²)^{kappa/2} I`.
    RadialPower { coeff: f64, kappa: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiConfig {
    #[default]
    Identity,
    Matrix {
        m: Vec<Vec<f64>>,
        #[serde(default)]
        kappa: f64,
    },
    Radial {
        scale: f64,
        #[serde(default)]
        kappa: f64,
        #[serde(default = "one")]
        eta: f64,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    #[default]
    None,
    StateDependent {
        #[serde(default)]
        pieces: Vec<PieceConfig>,
        #[serde(default)]
        atoms: Vec<StateAtomConfig>,
        truncation: Option<f64>,
    },
    Stable {
        coeff: f64,
        alpha: f64,
        truncation: Option<f64>,
        #[serde(default)]
        phi: PhiConfig,
    },
    CompoundPoisson {
        #[serde(default)]
        phi: PhiConfig,
        jumps: JumpLawConfig,
    },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RegionName {
    Everywhere,
    SmallBall,
    BigComplement,
    SmallCone,
    SmallConeComplement,
    BigCone,
    BigConeComplement,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    pub coeff: f64,
    #[serde(default)]
    pub beta: f64,
    pub alpha: f64,
    pub region: RegionName,
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateAtomConfig {
    pub coeff: f64,
    #[serde(default)]
    pub beta: f64,
    /// A fixed jump vector.
    pub offset: Option<Vec<f64>>,
    /// The jump `s · x`.
    pub state_multiple: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLawConfig {
    Gaussian { rate: f64, std: f64 },
    Atoms { atoms: Vec<AtomConfig> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub u: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub p: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConesConfig {
    pub eps_small: f64,
    pub eps_big: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "GridConfig::default_r_min")]
    pub r_min: f64,
    #[serde(default = "GridConfig::default_r_max")]
    pub r_max: f64,
    #[serde(default = "GridConfig::default_radii")]
    pub radii: usize,
    /// Defaults to 32 in the plane, 98 in space and 64 otherwise.
    pub directions: Option<usize>,
}

impl GridConfig {
    fn default_r_min() -> f64 {
        10.0
    }
    fn default_r_max() -> f64 {
        1e4
    }
    fn default_radii() -> usize {
        16
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            r_min: Self::default_r_min(),
            r_max: Self::default_r_max(),
            radii: Self::default_radii(),
            directions: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub tol: f64,
    pub max_level: u32,
    pub regime_slope: f64,
    pub symbol_check: bool,
    pub delta: f64,
    pub gamma_time: f64,
    /// Slack of the verified bound; defaults to `−c/2`.
    pub theta: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let s = AnalysisSettings::default();
        AnalysisConfig {
            tol: s.cubature.tol,
            max_level: s.cubature.max_level,
            regime_slope: s.regime_slope,
            symbol_check: s.symbol_check,
            delta: s.delta,
            gamma_time: s.gamma_time,
            theta: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub x0: Vec<f64>,
    /// Second starting point; enables the TV decay series.
    pub y0: Option<Vec<f64>>,
    #[serde(default = "SimulateConfig::default_dt")]
    pub dt: f64,
    #[serde(default = "SimulateConfig::default_horizon")]
    pub horizon: f64,
    #[serde(default = "SimulateConfig::default_paths")]
    pub n_paths: usize,
    #[serde(default = "SimulateConfig::default_r_cut")]
    pub r_cut: f64,
    #[serde(default = "one")]
    pub h: f64,
    /// Histogram cells per axis; Freedman–Diaconis when absent.
    pub bins: Option<usize>,
    /// Write the raw skeleton in the binary layout.
    #[serde(default)]
    pub dump_skeleton: bool,
}

impl SimulateConfig {
    fn default_dt() -> f64 {
        SimConfig::default().dt
    }
    fn default_horizon() -> f64 {
        SimConfig::default().horizon
    }
    fn default_paths() -> usize {
        SimConfig::default().n_paths
    }
    fn default_r_cut() -> f64 {
        SimConfig::default().r_cut
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateConfig {
    pub t_max: f64,
    pub points: usize,
    /// Skip the analysis and tabulate ψ for this growth exponent.
    pub gamma: Option<f64>,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            t_max: 1e3,
            points: 31,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

fn one() -> f64 {
    1.0
}

/// Validated library objects built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Model {
    pub generator: GeneratorSpec,
    pub lyapunov: LyapunovSpec,
    pub cones: Option<ConeSpec>,
    pub grid: Grid,
    pub settings: AnalysisSettings,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Builds and range-checks every library object the commands need.
    pub fn model(&self) -> Result<Model, CliError> {
        let d = self.generator.dim;
        let generator = self.generator.build()?;
        let lyapunov = LyapunovSpec::new(self.lyapunov.p).map_err(config_err)?;
        let cones = self
            .cones
            .as_ref()
            .map(|c| ConeSpec::new(self.lyapunov.p, c.eps_small, c.eps_big))
            .transpose()
            .map_err(config_err)?;
        let n_dirs = match self.grid.directions {
            Some(n) => n,
            None => Grid::default_for(d).map_err(config_err)?.directions().len(),
        };
        let grid = Grid::log_spaced(d, self.grid.r_min, self.grid.r_max, self.grid.radii, n_dirs)
            .map_err(config_err)?;
        grid.check_resolution().map_err(config_err)?;
        let a = &self.analysis;
        if !(a.tol > 0.0 && a.tol < 1.0) {
            return Err(CliError::Config("analysis.tol must lie in (0, 1)".into()));
        }
        if !(a.regime_slope > 0.0) {
            return Err(CliError::Config("analysis.regime_slope must be positive".into()));
        }
        let settings = AnalysisSettings {
            cubature: CubatureOptions {
                tol: a.tol,
                max_level: a.max_level,
            },
            regime_slope: a.regime_slope,
            symbol_check: a.symbol_check,
            delta: a.delta,
            gamma_time: a.gamma_time,
            ..AnalysisSettings::default()
        };
        // δ and γ range checks live in the rate constructor
        levy_drift_core::RateSpec::with_params(self.lyapunov.p, 1.0, a.delta, a.gamma_time)
            .map_err(config_err)?;
        Ok(Model {
            generator,
            lyapunov,
            cones,
            grid,
            settings,
        })
    }

    pub fn require_cones(&self, model: &Model) -> Result<ConeSpec, CliError> {
        model
            .cones
            .ok_or_else(|| CliError::Config("this command needs a [cones] table".into()))
    }

    pub fn sim_config(&self) -> Result<(SimConfig, &SimulateConfig), CliError> {
        let s = self
            .simulate
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a [simulate] table".into()))?;
        let cfg = SimConfig {
            dt: s.dt,
            horizon: s.horizon,
            n_paths: s.n_paths,
            r_cut: s.r_cut,
            seed: self.seed,
            h: s.h,
        };
        cfg.validate().map_err(config_err)?;
        if s.bins == Some(0) {
            return Err(CliError::Config("simulate.bins must be positive".into()));
        }
        Ok((cfg, s))
    }
}

fn vector(v: &[f64], d: usize, what: &str) -> Result<Vector, CliError> {
    if v.len() != d {
        return Err(CliError::Config(format!("{what} needs {d} entries, got {}", v.len())));
    }
    Vector::from_slice(v).map_err(config_err)
}

fn matrix(rows: &[Vec<f64>], d: usize, what: &str) -> Result<Matrix, CliError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Config(format!("{what} must be a {d}×{d} matrix")));
    }
    Matrix::from_rows(rows).map_err(config_err)
}

impl PhiConfig {
    fn build(&self, d: usize) -> Result<PhiField, CliError> {
        Ok(match self {
            PhiConfig::Identity => PhiField::identity(d),
            PhiConfig::Matrix { m, kappa } => PhiField::Matrix {
                m: matrix(m, d, "kernel.phi.m")?,
                kappa: *kappa,
            },
            PhiConfig::Radial { scale, kappa, eta } => PhiField::Radial {
                scale: *scale,
                kappa: *kappa,
                eta: *eta,
            },
        })
    }
}

impl PieceConfig {
    fn region(&self) -> Result<Region, CliError> {
        let eps = || {
            self.eps
                .ok_or_else(|| CliError::Config(format!("region {:?} needs eps", self.region)))
        };
        let no_eps = || match self.eps {
            Some(_) => Err(CliError::Config(format!("region {:?} takes no eps", self.region))),
            None => Ok(()),
        };
        Ok(match self.region {
            RegionName::Everywhere => no_eps().map(|_| Region::Everywhere)?,
            RegionName::SmallBall => no_eps().map(|_| Region::SmallBall)?,
            RegionName::BigComplement => no_eps().map(|_| Region::BigComplement)?,
            RegionName::SmallCone => Region::SmallCone { eps: eps()? },
            RegionName::SmallConeComplement => Region::SmallConeComplement { eps: eps()? },
            RegionName::BigCone => Region::BigCone { eps: eps()? },
            RegionName::BigConeComplement => Region::BigConeComplement { eps: eps()? },
        })
    }
}

impl GeneratorConfig {
    pub fn build(&self) -> Result<GeneratorSpec, CliError> {
        let d = self.dim;
        let drift = match &self.drift {
            DriftConfig::Zero => DriftField::Zero,
            DriftConfig::Linear { a, b } => DriftField::Linear {
                a: matrix(a, d, "drift.a")?,
                b: match b {
                    Some(b) => vector(b, d, "drift.b")?,
                    None => Vector::zeros(d),
                },
            },
            DriftConfig::RadialPower { coeff, kappa } => DriftField::RadialPower {
                coeff: *coeff,
                kappa: *kappa,
            },
        };
        let diffusion = match &self.diffusion {
            DiffusionConfig::Zero => DiffusionField::Zero,
            DiffusionConfig::Constant { q } => DiffusionField::Constant(matrix(q, d, "diffusion.q")?),
            DiffusionConfig::OuterProduct { scale } => DiffusionField::OuterProduct { scale: *scale },
            DiffusionConfig::RadialPower { coeff, kappa } => DiffusionField::RadialPower {
                coeff: *coeff,
                kappa: *kappa,
            },
        };
        let kernel = match &self.kernel {
            KernelConfig::None => JumpKernel::zero(),
            KernelConfig::StateDependent {
                pieces,
                atoms,
                truncation,
            } => JumpKernel::StateDependent(StateDependentKernel {
                pieces: pieces
                    .iter()
                    .map(|p| {
                        Ok(PowerPiece {
                            coeff: p.coeff,
                            beta: p.beta,
                            alpha: p.alpha,
                            region: p.region()?,
                        })
                    })
                    .collect::<Result<_, CliError>>()?,
                atoms: atoms
                    .iter()
                    .map(|a| {
                        let offset = match (&a.offset, a.state_multiple) {
                            (Some(v), None) => AtomOffset::Fixed(vector(v, d, "kernel.atoms.offset")?),
                            (None, Some(s)) => AtomOffset::StateMultiple(s),
                            _ => {
                                return Err(CliError::Config(
                                    "each kernel atom needs exactly one of offset, state_multiple".into(),
                                ))
                            }
                        };
                        Ok(StateAtom {
                            offset,
                            coeff: a.coeff,
                            beta: a.beta,
                        })
                    })
                    .collect::<Result<_, CliError>>()?,
                truncation: *truncation,
            }),
            KernelConfig::Stable {
                coeff,
                alpha,
                truncation,
                phi,
            } => JumpKernel::MultiplicativeStable(StableKernel {
                phi: phi.build(d)?,
                coeff: *coeff,
                alpha: *alpha,
                truncation: *truncation,
            }),
            KernelConfig::CompoundPoisson { phi, jumps } => {
                JumpKernel::CompoundPoisson(CompoundPoissonKernel {
                    phi: phi.build(d)?,
                    law: match jumps {
                        JumpLawConfig::Gaussian { rate, std } => JumpLaw::Gaussian {
                            rate: *rate,
                            std: *std,
                        },
                        JumpLawConfig::Atoms { atoms } => JumpLaw::Atoms(
                            atoms
                                .iter()
                                .map(|a| {
                                    Ok(Atom {
                                        u: vector(&a.u, d, "kernel.jumps.atoms.u")?,
                                        weight: a.weight,
                                    })
                                })
                                .collect::<Result<_, CliError>>()?,
                        ),
                    },
                })
            }
        };
        GeneratorSpec::new(d, drift, diffusion, kernel).map_err(config_err)
    }
}
