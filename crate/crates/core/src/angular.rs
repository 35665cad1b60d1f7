//! Zonal spherical harmonics on `S^{N-1}` and polar-angle quadrature.

use std::f64::consts::PI;

use crate::mesh::{gamma_half_integer, sphere_area};

/// Number of Gauss-Legendre points used for polar-angle integrals.
pub const POLAR_POINTS: usize = 64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gegenbauer polynomial `C_ℓ^λ(x)` by the three-term recurrence.
pub fn gegenbauer(ell: usize, lambda: f64, x: f64) -> f64 {
    let (mut c0, mut c1) = (1.0, 2.0 * lambda * x);
    if ell == 0 {
        return c0;
    }
    for k in 1..ell {
        let k = k as f64;
        let c2 = (2.0 * x * (k + lambda) * c1 - (k + 2.0 * lambda - 1.0) * c0) / (k + 1.0);
        c0 = c1;
        c1 = c2;
    }
    c1
}

/// Polar-angle quadrature for zonal functions on `S^{N-1}`, `N >= 3`.
///
/// `mean(g)` approximates the spherical average
/// `|S^{N-1}|⁻¹ ∫ g(θ₁) dσ = (|S^{N-2}| / |S^{N-1}|) ∫₀^π g(θ) sin^{N-2}θ dθ`.
#[derive(Clone, Debug)]
pub struct PolarQuadrature {
    pub theta: Vec<f64>,
    /// Weights including `sin^{N-2}θ` and the sphere normalization.
    pub weights: Vec<f64>,
}

impl PolarQuadrature {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 3, "polar quadrature needs N >= 3");
        let (x, w) = gauss_legendre(POLAR_POINTS);
        let scale = sphere_area(dim - 1) / sphere_area(dim) * 0.5 * PI;
        let theta: Vec<f64> = x.iter().map(|x| 0.5 * PI * (x + 1.0)).collect();
        let weights = theta
            .iter()
            .zip(&w)
            .map(|(t, w)| scale * w * t.sin().powi(dim as i32 - 2))
            .collect();
        Self { theta, weights }
    }

    pub fn mean(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.theta.iter().zip(&self.weights).map(|(&t, w)| w * g(t)).sum()
    }
}

/// Zonal harmonic of degree `ℓ` on `S^{N-1}` with unit mean square.
#[derive(Clone, Debug)]
pub struct ZonalHarmonic {
    pub ell: usize,
    lambda: f64,
    scale: f64,
}

impl ZonalHarmonic {
    pub fn new(dim: usize, ell: usize) -> Self {
        assert!(dim >= 3, "zonal harmonics need N >= 3");
        let lambda = (dim as f64 - 2.0) / 2.0;
        // ∫_{-1}^{1} (C_ℓ^λ)² (1-x²)^{λ-1/2} dx
        let factorial: f64 = (1..=ell).map(|k| k as f64).product();
        let norm = PI * 2f64.powf(1.0 - 2.0 * lambda) * gamma_half_integer(ell as f64 + 2.0 * lambda)
            / (factorial * (ell as f64 + lambda) * gamma_half_integer(lambda).powi(2));
        let mean_square = sphere_area(dim - 1) / sphere_area(dim) * norm;
        Self { ell, lambda, scale: mean_square.sqrt().recip() }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.scale * gegenbauer(self.ell, self.lambda, theta.cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(POLAR_POINTS);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((m - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn harmonics_have_unit_mean_square_and_are_orthogonal() {
        for dim in [3usize, 4, 7, 8, 10] {
            let q = PolarQuadrature::new(dim);
            assert!((q.mean(|_| 1.0) - 1.0).abs() < 1e-13);
            for ell in 0..=6 {
                let y = ZonalHarmonic::new(dim, ell);
                assert!((q.mean(|t| y.eval(t).powi(2)) - 1.0).abs() < 1e-12, "N={dim} ℓ={ell}");
                let z = ZonalHarmonic::new(dim, ell + 1);
                assert!(q.mean(|t| y.eval(t) * z.eval(t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degree_one_harmonic_is_scaled_cosine() {
        // x₁ = cos θ has mean square 1/N
        let y = ZonalHarmonic::new(7, 1);
        assert!((y.eval(0.3) - 7f64.sqrt() * 0.3f64.cos()).abs() < 1e-13);
    }
}
