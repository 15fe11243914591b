//! Jump-kernel families, coefficient fields, cone geometry and the growth
//! functionals built on them.

mod cones;
mod fields;
mod functionals;

use alloc::vec::Vec;

pub use cones::{
    a_big, a_small, gamma_cos, in_d_big, in_d_big_phi, in_d_small, in_d_small_phi, ConeSpec,
};
pub(crate) use cones::{big_cone_test, small_cone_test};
pub use fields::{DiffusionField, DriftField, PhiField};
pub use functionals::{
    ball_mass, ball_mass_phi, cone_infimum, phi_big, phi_big_phi, phi_drift, phi_ker, phi_small,
    phi_small_phi, phi_tot, ConeInfimum, ConeKind, Functional,
};
pub(crate) use functionals::{analysis_breaks, checked, kernel_is_axial};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, Matrix, Vector};

/// Where a state-dependent density piece is switched on. Cone regions carry
/// their own aperture so a kernel can be defined independently of the cones
/// used for the analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Everywhere,
    /// `|u| ≤ 1`.
    SmallBall,
    /// `|u| > 1`.
    BigComplement,
    /// `|u| ≤ 1`, `|γ_{x,u}| ≥ eps`.
    SmallCone { eps: f64 },
    /// `|u| ≤ 1`, `|γ_{x,u}| < eps`.
    SmallConeComplement { eps: f64 },
    /// `1 < |u| ≤ |x|`, `γ_{x,u} ≤ −eps`.
    BigCone { eps: f64 },
    /// `|u| > 1` and not in `BigCone { eps }`.
    BigConeComplement { eps: f64 },
}

impl Region {
    #[inline]
    pub(crate) fn contains(&self, norm_u: f64, gamma: f64, norm_x: f64) -> bool {
        match *self {
            Region::Everywhere => true,
            Region::SmallBall => norm_u <= 1.0,
            Region::BigComplement => norm_u > 1.0,
            Region::SmallCone { eps } => small_cone_test(norm_u, gamma, eps),
            Region::SmallConeComplement { eps } => {
                norm_u <= 1.0 && !small_cone_test(norm_u, gamma, eps)
            }
            Region::BigCone { eps } => big_cone_test(norm_u, norm_x, gamma, eps),
            Region::BigConeComplement { eps } => {
                norm_u > 1.0 && !big_cone_test(norm_u, norm_x, gamma, eps)
            }
        }
    }

    fn is_unbounded(&self) -> bool {
        matches!(
            self,
            Region::Everywhere | Region::BigComplement | Region::BigConeComplement { .. }
        )
    }

    fn reaches_origin(&self) -> bool {
        matches!(
            self,
            Region::Everywhere
                | Region::SmallBall
                | Region::SmallCone { .. }
                | Region::SmallConeComplement { .. }
        )
    }

    fn eps(&self) -> Option<f64> {
        match *self {
            Region::SmallCone { eps }
            | Region::SmallConeComplement { eps }
            | Region::BigCone { eps }
            | Region::BigConeComplement { eps } => Some(eps),
            _ => None,
        }
    }
}

/// Density piece `coeff · |x|^β / |u|^{d+α}` on `region`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPiece {
    pub coeff: f64,
    pub beta: f64,
    pub alpha: f64,
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomOffset {
    Fixed(Vector),
    /// The jump `s · x`; `s = −1` plants an atom at `−x`.
    StateMultiple(f64),
}

/// Point mass `coeff · |x|^β` at the jump `offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateAtom {
    pub offset: AtomOffset,
    pub coeff: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDependentKernel {
    pub pieces: Vec<PowerPiece>,
    pub atoms: Vec<StateAtom>,
    /// Jumps longer than this carry no mass.
    pub truncation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableKernel {
    pub phi: PhiField,
    /// Base measure `coeff / |u|^{d+α} du`.
    pub coeff: f64,
    pub alpha: f64,
    pub truncation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub u: Vector,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    Atoms(Vec<Atom>),
    /// Total intensity `rate`, jump sizes `N(0, std² I)`.
    Gaussian { rate: f64, std: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoissonKernel {
    pub phi: PhiField,
    pub law: JumpLaw,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JumpKernel {
    StateDependent(StateDependentKernel),
    MultiplicativeStable(StableKernel),
    CompoundPoisson(CompoundPoissonKernel),
}

/// Gaussian densities are treated as supported in this many standard
/// deviations; the neglected mass is below `1e-300`.
const GAUSSIAN_SUPPORT_SIGMAS: f64 = 40.0;

impl JumpKernel {
    pub fn zero() -> Self {
        JumpKernel::StateDependent(StateDependentKernel {
            pieces: Vec::new(),
            atoms: Vec::new(),
            truncation: None,
        })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            JumpKernel::StateDependent(k) => {
                k.pieces.iter().all(|p| p.coeff == 0.0) && k.atoms.iter().all(|a| a.coeff == 0.0)
            }
            JumpKernel::MultiplicativeStable(k) => k.coeff == 0.0,
            JumpKernel::CompoundPoisson(k) => match &k.law {
                JumpLaw::Atoms(a) => a.iter().all(|a| a.weight == 0.0),
                JumpLaw::Gaussian { rate, .. } => *rate == 0.0,
            },
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            JumpKernel::StateDependent(_) => "state-dependent density",
            JumpKernel::MultiplicativeStable(_) => "multiplicative stable",
            JumpKernel::CompoundPoisson(_) => "compound Poisson",
        }
    }

    /// The `Φ` field for multiplicative families.
    pub fn phi_field(&self) -> Option<&PhiField> {
        match self {
            JumpKernel::StateDependent(_) => None,
            JumpKernel::MultiplicativeStable(k) => Some(&k.phi),
            JumpKernel::CompoundPoisson(k) => Some(&k.phi),
        }
    }

    /// `Φ(x)`; the identity for state-dependent kernels.
    pub fn phi_at(&self, x: &Vector) -> Matrix {
        match self.phi_field() {
            Some(f) => f.eval(x),
            None => Matrix::identity(x.dim()),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let alpha_ok = |a: f64| a > 0.0 && a < 2.0;
        let eps_ok = |e: f64| e > 0.0 && e < 1.0;
        match self {
            JumpKernel::StateDependent(k) => {
                for piece in &k.pieces {
                    if !alpha_ok(piece.alpha) {
                        return Err(Error::param(
                            "kernel.pieces.alpha",
                            alloc::format!("must lie in (0, 2), got {}", piece.alpha),
                        ));
                    }
                    if !(piece.coeff.is_finite() && piece.coeff >= 0.0 && piece.beta.is_finite()) {
                        return Err(Error::param(
                            "kernel.pieces",
                            "coeff must be finite and nonnegative, beta finite",
                        ));
                    }
                    if let Some(e) = piece.region.eps() {
                        if !eps_ok(e) {
                            return Err(Error::param("kernel.pieces.eps", "must lie in (0, 1)"));
                        }
                    }
                }
                for atom in &k.atoms {
                    if !(atom.coeff.is_finite() && atom.coeff >= 0.0 && atom.beta.is_finite()) {
                        return Err(Error::param(
                            "kernel.atoms",
                            "coeff must be finite and nonnegative, beta finite",
                        ));
                    }
                    if let AtomOffset::Fixed(v) = &atom.offset {
                        if v.dim() != d {
                            return Err(Error::DimensionMismatch {
                                expected: d,
                                found: v.dim(),
                            });
                        }
                    }
                }
                check_truncation(k.truncation)
            }
            JumpKernel::MultiplicativeStable(k) => {
                k.phi.validate(d)?;
                if !alpha_ok(k.alpha) {
                    return Err(Error::param(
                        "kernel.alpha",
                        alloc::format!("must lie in (0, 2), got {}", k.alpha),
                    ));
                }
                if !(k.coeff.is_finite() && k.coeff >= 0.0) {
                    return Err(Error::param("kernel.coeff", "must be finite and nonnegative"));
                }
                check_truncation(k.truncation)
            }
            JumpKernel::CompoundPoisson(k) => {
                k.phi.validate(d)?;
                match &k.law {
                    JumpLaw::Atoms(atoms) => {
                        for a in atoms {
                            if a.u.dim() != d {
                                return Err(Error::DimensionMismatch {
                                    expected: d,
                                    found: a.u.dim(),
                                });
                            }
                            if !(a.weight.is_finite() && a.weight >= 0.0 && a.u.is_finite()) {
                                return Err(Error::param(
                                    "kernel.jumps",
                                    "atom weights must be finite and nonnegative",
                                ));
                            }
                        }
                        Ok(())
                    }
                    JumpLaw::Gaussian { rate, std } => {
                        if !(rate.is_finite() && *rate >= 0.0) {
                            return Err(Error::param("kernel.jumps.rate", "must be nonnegative"));
                        }
                        if !(std.is_finite() && *std > 0.0) {
                            return Err(Error::param("kernel.jumps.std", "must be positive"));
                        }
                        Ok(())
                    }
                }
            }
        }
    }

    /// Integrability order near the origin: the largest `α` for which the
    /// density behaves like `|u|^{-d-α}` close to 0, or `None` when the
    /// density is bounded there.
    pub fn singularity_order(&self) -> Option<f64> {
        match self {
            JumpKernel::StateDependent(k) => k
                .pieces
                .iter()
                .filter(|p| p.coeff > 0.0 && p.region.reaches_origin())
                .map(|p| p.alpha)
                .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |b| b.max(a)))),
            JumpKernel::MultiplicativeStable(k) => (k.coeff > 0.0).then_some(k.alpha),
            JumpKernel::CompoundPoisson(_) => None,
        }
    }
}

fn check_truncation(t: Option<f64>) -> Result<()> {
    match t {
        Some(t) if !(t.is_finite() && t > 0.0) => {
            Err(Error::param("kernel.truncation", "must be positive and finite"))
        }
        _ => Ok(()),
    }
}

/// The triple `(ℓ, Q, ν)` of a Lévy-type generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    dim: usize,
    pub drift: DriftField,
    pub diffusion: DiffusionField,
    pub kernel: JumpKernel,
}

impl GeneratorSpec {
    pub fn new(
        dim: usize,
        drift: DriftField,
        diffusion: DiffusionField,
        kernel: JumpKernel,
    ) -> Result<Self> {
        check_dim(dim)?;
        drift.validate(dim)?;
        diffusion.validate(dim)?;
        kernel.validate(dim)?;
        Ok(GeneratorSpec {
            dim,
            drift,
            diffusion,
            kernel,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn check_point(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        if !x.is_finite() {
            return Err(Error::Domain("state must be finite"));
        }
        Ok(())
    }

    /// Checks that `Q(x)` is symmetric positive semidefinite.
    pub fn check_diffusion_at(&self, x: &Vector) -> Result<()> {
        let q = self.diffusion.eval(x);
        if !q.is_symmetric(1e-12) {
            return Err(Error::param("diffusion", "Q(x) is not symmetric"));
        }
        q.sqrt_psd(1e-10).map(|_| ())
    }

    /// The drift `ℓ^Φ` that pairs with compensation on `|u| ≤ 1`:
    /// `ℓ − ∫ Φu (1{|Φu| ≤ 1} − 1{|u| ≤ 1}) ν(du)`.
    ///
    /// The bracket vanishes for symmetric base measures and is a finite sum
    /// for atoms, so it is evaluated exactly.
    pub fn drift_phi(&self, x: &Vector) -> Vector {
        let mut l = self.drift.eval(x);
        if let JumpKernel::CompoundPoisson(CompoundPoissonKernel {
            phi,
            law: JumpLaw::Atoms(atoms),
        }) = &self.kernel
        {
            let m = phi.eval(x);
            for a in atoms {
                let w = m.mul_vec(&a.u);
                let inner = if w.norm() <= 1.0 { 1.0 } else { 0.0 };
                let outer = if a.u.norm() <= 1.0 { 1.0 } else { 0.0 };
                l -= w * (a.weight * (inner - outer));
            }
        }
        l
    }
}

/// The kernel frozen at a state `x`, in the jump-source variable `u`; the
/// jump itself is `w = Φ(x) u`.
#[derive(Debug, Clone)]
pub(crate) struct KernelAt<'a> {
    pub x: Vector,
    pub norm_x: f64,
    pub phi: Matrix,
    pub phi_norm: f64,
    kernel: &'a JumpKernel,
}

impl<'a> KernelAt<'a> {
    pub fn new(kernel: &'a JumpKernel, x: &Vector) -> Self {
        let phi = kernel.phi_at(x);
        KernelAt {
            x: *x,
            norm_x: x.norm(),
            phi_norm: phi.row_sum_norm(),
            phi,
            kernel,
        }
    }

    #[inline]
    pub fn jump(&self, u: &Vector) -> Vector {
        match self.kernel {
            JumpKernel::StateDependent(_) => *u,
            _ => self.phi.mul_vec(u),
        }
    }

    /// Density of `ν(x, du)` with respect to Lebesgue measure at `u`, given
    /// `r = |u|` and `gamma = γ_{x,u}`.
    #[inline]
    pub fn density(&self, r: f64, gamma: f64) -> f64 {
        let d = self.x.dim() as f64;
        match self.kernel {
            JumpKernel::StateDependent(k) => {
                if let Some(t) = k.truncation {
                    if r > t {
                        return 0.0;
                    }
                }
                let mut s = 0.0;
                for piece in &k.pieces {
                    if piece.coeff != 0.0 && piece.region.contains(r, gamma, self.norm_x) {
                        s += piece.coeff
                            * libm::pow(self.norm_x, piece.beta)
                            * libm::pow(r, -d - piece.alpha);
                    }
                }
                s
            }
            JumpKernel::MultiplicativeStable(k) => {
                if k.truncation.is_some_and(|t| r > t) {
                    0.0
                } else {
                    k.coeff * libm::pow(r, -d - k.alpha)
                }
            }
            JumpKernel::CompoundPoisson(k) => match &k.law {
                JumpLaw::Atoms(_) => 0.0,
                JumpLaw::Gaussian { rate, std } => {
                    let norm = libm::pow(2.0 * core::f64::consts::PI * std * std, -0.5 * d);
                    rate * norm * libm::exp(-0.5 * r * r / (std * std))
                }
            },
        }
    }

    pub fn has_density(&self) -> bool {
        match self.kernel {
            JumpKernel::StateDependent(k) => k.pieces.iter().any(|p| p.coeff > 0.0),
            JumpKernel::MultiplicativeStable(k) => k.coeff > 0.0,
            JumpKernel::CompoundPoisson(k) => {
                matches!(k.law, JumpLaw::Gaussian { rate, .. } if rate > 0.0)
            }
        }
    }

    /// Point masses `(u, weight)` at this state.
    pub fn atoms(&self) -> Vec<(Vector, f64)> {
        match self.kernel {
            JumpKernel::StateDependent(k) => k
                .atoms
                .iter()
                .filter(|a| a.coeff != 0.0)
                .map(|a| {
                    let u = match a.offset {
                        AtomOffset::Fixed(v) => v,
                        AtomOffset::StateMultiple(s) => self.x * s,
                    };
                    (u, a.coeff * libm::pow(self.norm_x, a.beta))
                })
                .filter(|(u, _)| u.norm() > 0.0)
                .collect(),
            JumpKernel::CompoundPoisson(CompoundPoissonKernel {
                law: JumpLaw::Atoms(atoms),
                ..
            }) => atoms
                .iter()
                .filter(|a| a.weight != 0.0 && a.u.norm() > 0.0)
                .map(|a| (a.u, a.weight))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Radius beyond which the density vanishes, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match self.kernel {
            JumpKernel::StateDependent(k) => k.truncation,
            JumpKernel::MultiplicativeStable(k) => k.truncation,
            JumpKernel::CompoundPoisson(k) => match k.law {
                JumpLaw::Atoms(_) => Some(0.0),
                JumpLaw::Gaussian { std, .. } => Some(GAUSSIAN_SUPPORT_SIGMAS * std),
            },
        }
    }

    /// Smallest `α` among density pieces reaching infinity: the density decays
    /// no slower than `|u|^{-d-α}`. `None` when the support is bounded.
    pub fn tail_alpha(&self) -> Option<f64> {
        if self.support_radius().is_some() {
            return None;
        }
        match self.kernel {
            JumpKernel::StateDependent(k) => k
                .pieces
                .iter()
                .filter(|p| p.coeff > 0.0 && p.region.is_unbounded())
                .map(|p| p.alpha)
                .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |b| b.min(a)))),
            JumpKernel::MultiplicativeStable(k) => (k.coeff > 0.0).then_some(k.alpha),
            JumpKernel::CompoundPoisson(_) => None,
        }
    }

    /// Radii (in `u`) where the density changes form along every ray.
    pub fn radial_breaks(&self, out: &mut Vec<f64>) {
        out.push(1.0);
        match self.kernel {
            JumpKernel::StateDependent(k) => {
                if k.pieces
                    .iter()
                    .any(|p| matches!(p.region, Region::BigCone { .. } | Region::BigConeComplement { .. }))
                {
                    out.push(self.norm_x);
                }
                if let Some(t) = k.truncation {
                    out.push(t);
                }
            }
            JumpKernel::MultiplicativeStable(k) => {
                if let Some(t) = k.truncation {
                    out.push(t);
                }
            }
            JumpKernel::CompoundPoisson(_) => {}
        }
    }

    /// Cosine thresholds (relative to `x`, in the jump direction) at which the
    /// density switches pieces.
    pub fn cosine_breaks(&self, out: &mut Vec<f64>) {
        if let JumpKernel::StateDependent(k) = self.kernel {
            for piece in &k.pieces {
                match piece.region {
                    Region::SmallCone { eps } | Region::SmallConeComplement { eps } => {
                        out.push(eps);
                        out.push(-eps);
                    }
                    Region::BigCone { eps } | Region::BigConeComplement { eps } => out.push(-eps),
                    _ => {}
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    #[test]
    fn example_kernel_density_switches_on_cone() {
        let k = JumpKernel::StateDependent(StateDependentKernel {
            pieces: vec![
                PowerPiece {
                    coeff: 1.0,
                    beta: 0.8,
                    alpha: 1.5,
                    region: Region::BigCone { eps: 0.75 },
                },
                PowerPiece {
                    coeff: 1.0,
                    beta: -1.0,
                    alpha: 1.2,
                    region: Region::BigConeComplement { eps: 0.75 },
                },
            ],
            atoms: vec![],
            truncation: None,
        });
        k.validate(2).unwrap();
        let x = v(&[10.0, 0.0]);
        let at = KernelAt::new(&k, &x);
        let inside = at.density(2.0, -1.0);
        let outside = at.density(2.0, 1.0);
        assert!((inside - libm::pow(10.0, 0.8) * libm::pow(2.0, -3.5)).abs() < 1e-14);
        assert!((outside - libm::pow(10.0, -1.0) * libm::pow(2.0, -3.2)).abs() < 1e-14);
        assert_eq!(at.density(0.5, -1.0), 0.0);
        assert_eq!(at.tail_alpha(), Some(1.2));
    }

    #[test]
    fn drift_bracket_for_atoms() {
        let k = JumpKernel::CompoundPoisson(CompoundPoissonKernel {
            phi: PhiField::Matrix {
                m: Matrix::scalar(1, 2.0),
                kappa: 0.0,
            },
            law: JumpLaw::Atoms(vec![Atom {
                u: v(&[0.8]),
                weight: 3.0,
            }]),
        });
        let g = GeneratorSpec::new(1, DriftField::Zero, DiffusionField::Zero, k).unwrap();
        // |u| ≤ 1 but |Φu| = 1.6 > 1: ℓ^Φ = 0 − 3·1.6·(0 − 1)
        assert!((g.drift_phi(&v(&[5.0]))[0] - 4.8).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_alpha() {
        let k = JumpKernel::MultiplicativeStable(StableKernel {
            phi: PhiField::identity(2),
            coeff: 1.0,
            alpha: 2.0,
            truncation: None,
        });
        assert!(k.validate(2).is_err());
    }
}
