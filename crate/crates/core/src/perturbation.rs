//! Structured perturbations `v = a(r) · (angular factor) · (direction)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::RadialMesh;

/// Degree of the seeded polynomial factor of random test functions.
pub const RANDOM_DEGREE: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// `v = a(r) x/|x|`, parallel to the vortex; degree-one sector.
    RadialAligned,
    /// `v = a(r) e_M` with `M > N`, pointwise orthogonal to the vortex.
    OrthogonalComponent,
    /// `v = a(r) Y_ℓ(θ₁) e_M` with a zonal harmonic `Y_ℓ`.
    SingleAngle,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::RadialAligned, Family::OrthogonalComponent, Family::SingleAngle];

    pub fn name(self) -> &'static str {
        match self {
            Family::RadialAligned => "radial_aligned",
            Family::OrthogonalComponent => "orthogonal_component",
            Family::SingleAngle => "single_angle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown perturbation family `{s}`")))
    }
}

/// A perturbation in one angular sector, sampled at mesh nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorPerturbation {
    pub family: Family,
    /// Angular index; the Laplace-Beltrami eigenvalue is `ℓ(ℓ+N-2)`.
    pub ell: usize,
    /// Target coordinate (1-based) in `R^M`.
    pub component: usize,
    /// Target dimension `M`.
    pub target_dim: usize,
    pub a: Vec<f64>,
}

impl SectorPerturbation {
    pub fn radial_aligned(dim: usize, a: Vec<f64>) -> Self {
        Self { family: Family::RadialAligned, ell: 1, component: 1, target_dim: dim, a }
    }

    pub fn orthogonal(target_dim: usize, a: Vec<f64>) -> Self {
        Self { family: Family::OrthogonalComponent, ell: 0, component: target_dim, target_dim, a }
    }

    pub fn single_angle(target_dim: usize, ell: usize, a: Vec<f64>) -> Self {
        Self { family: Family::SingleAngle, ell, component: target_dim, target_dim, a }
    }

    /// Scalar test function `a(r) Y_ℓ` placed in the extra component
    /// `e_{N+1}`.
    pub fn scalar(dim: usize, ell: usize, a: Vec<f64>) -> Self {
        if ell == 0 {
            Self::orthogonal(dim + 1, a)
        } else {
            Self::single_angle(dim + 1, ell, a)
        }
    }

    /// Same sector and direction, another radial coefficient.
    pub fn with_coefficients(&self, a: Vec<f64>) -> Self {
        Self { a, ..self.clone() }
    }

    /// `ℓ(ℓ+N-2)`.
    pub fn angular_eigenvalue(&self, dim: usize) -> f64 {
        let l = self.ell as f64;
        l * (l + dim as f64 - 2.0)
    }

    pub fn validate(&self, mesh: &RadialMesh, dim: usize) -> Result<()> {
        let n = mesh.n();
        if self.a.len() != n + 1 {
            return Err(Error::Input(format!(
                "perturbation has {} samples, mesh has {} nodes",
                self.a.len(),
                n + 1
            )));
        }
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("perturbation has non-finite samples".into()));
        }
        if self.a[n] != 0.0 {
            return Err(Error::Input("perturbation must vanish at r = 1".into()));
        }
        if self.ell >= 1 && self.a[0] != 0.0 {
            return Err(Error::Input(format!("sector ℓ = {} needs a(0) = 0", self.ell)));
        }
        if self.component == 0 || self.component > self.target_dim || self.target_dim < dim {
            return Err(Error::Input(format!(
                "component {} invalid for target dimension {} (N = {dim})",
                self.component, self.target_dim
            )));
        }
        match self.family {
            Family::RadialAligned if self.ell != 1 => {
                Err(Error::Input("radially aligned perturbations live in the ℓ = 1 sector".into()))
            }
            Family::OrthogonalComponent if self.ell != 0 => {
                Err(Error::Input("orthogonal-component perturbations live in the ℓ = 0 sector".into()))
            }
            Family::OrthogonalComponent | Family::SingleAngle if self.target_dim <= dim => Err(Error::Input(
                format!("{} needs M > N (M = {}, N = {dim})", self.family.name(), self.target_dim),
            )),
            Family::OrthogonalComponent | Family::SingleAngle if self.component <= dim => Err(Error::Input(
                format!("{} must use a component beyond N", self.family.name()),
            )),
            Family::SingleAngle if dim < 3 => Err(Error::Input("zonal harmonics need N >= 3".into())),
            _ => Ok(()),
        }
    }
}

/// `(1-r) r^{max(ℓ,1)} p(r)` with a degree-6 polynomial `p` whose
/// coefficients are drawn uniformly from `[-1, 1]` by a seeded generator.
pub fn random_coefficients(mesh: &RadialMesh, ell: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..=RANDOM_DEGREE).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let power = ell.max(1) as i32;
    let n = mesh.n();
    let mut a: Vec<f64> = mesh
        .nodes()
        .iter()
        .map(|&r| (1.0 - r) * r.powi(power) * coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c))
        .collect();
    a[0] = 0.0;
    a[n] = 0.0;
    a
}

/// Smooth bump supported in `(lo, hi)`, equal to 1 at the midpoint.
pub fn bump(lo: f64, hi: f64, r: f64) -> f64 {
    let x = (2.0 * r - lo - hi) / (hi - lo);
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Seeded test function with support in `[0.2, 0.8]`: a bump times a
/// seeded polynomial.
pub fn random_bump_coefficients(mesh: &RadialMesh, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..=RANDOM_DEGREE).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    mesh.nodes()
        .iter()
        .map(|&r| bump(0.2, 0.8, r) * coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c))
        .collect()
}

/// Samples of `bump(0.2, 0.8, r)`.
pub fn bump_coefficients(mesh: &RadialMesh) -> Vec<f64> {
    mesh.nodes().iter().map(|&r| bump(0.2, 0.8, r)).collect()
}

/// Checks that `w` vanishes on the first and last two elements.
pub fn check_interior_support(w: &[f64]) -> Result<()> {
    let n = w.len() - 1;
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-14 * scale;
    let edges = [0, 1, 2, n - 2, n - 1, n];
    if edges.iter().any(|&i| w[i].abs() > tol) {
        return Err(Error::Input(
            "test function must vanish near r = 0 and r = 1 (support away from the origin and boundary)".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_coefficients_are_reproducible_and_admissible() {
        let mesh = RadialMesh::build(200, 2.0).unwrap();
        let a = random_coefficients(&mesh, 2, 42);
        assert_eq!(a, random_coefficients(&mesh, 2, 42));
        assert_ne!(a, random_coefficients(&mesh, 2, 43));
        let v = SectorPerturbation::single_angle(8, 2, a);
        v.validate(&mesh, 7).unwrap();
    }

    #[test]
    fn invariants_enforced() {
        let mesh = RadialMesh::build(16, 1.0).unwrap();
        let mut a = vec![0.1; 17];
        a[16] = 0.0;
        assert!(SectorPerturbation::orthogonal(8, a.clone()).validate(&mesh, 7).is_ok());
        assert!(SectorPerturbation::radial_aligned(7, a.clone()).validate(&mesh, 7).is_err());
        assert!(SectorPerturbation::orthogonal(7, a.clone()).validate(&mesh, 7).is_err());
        let mut b = a.clone();
        b[16] = 0.1;
        assert!(SectorPerturbation::orthogonal(8, b).validate(&mesh, 7).is_err());
        assert!(SectorPerturbation::single_angle(8, 1, a).validate(&mesh, 7).is_err());
    }

    #[test]
    fn bump_support() {
        let mesh = RadialMesh::build(400, 2.0).unwrap();
        let w = bump_coefficients(&mesh);
        check_interior_support(&w).unwrap();
        assert!((bump(0.2, 0.8, 0.5) - 1.0).abs() < 1e-15);
        let a = random_coefficients(&mesh, 1, 3);
        assert!(check_interior_support(&a).is_err());
    }
}
