//! Graded radial meshes on `[0, 1]` and the quadrature weights used to
//! reduce integrals over the unit ball `B^N` to one radial dimension.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::angular::gauss_legendre;
use crate::error::{Error, Result};

pub const MIN_INTERVALS: usize = 16;
pub const DEFAULT_INTERVALS: usize = 2000;
pub const DEFAULT_GRADING: f64 = 2.0;

/// Nodes `r_i = (i/n)^grading`, `i = 0..=n`, without size checks.
pub fn graded_nodes(n: usize, grading: f64) -> Vec<f64> {
    let mut nodes: Vec<f64> = (0..=n)
        .map(|i| (i as f64 / n as f64).powf(grading))
        .collect();
    nodes[0] = 0.0;
    nodes[n] = 1.0;
    nodes
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialMesh {
    nodes: Vec<f64>,
    grading: f64,
}

impl RadialMesh {
    /// Graded mesh with `n` intervals; `grading = 1` is uniform.
    pub fn build(n: usize, grading: f64) -> Result<Self> {
        if n < MIN_INTERVALS {
            return Err(Error::Config(format!(
                "mesh needs at least {MIN_INTERVALS} intervals, got {n}"
            )));
        }
        if !(grading.is_finite() && grading >= 1.0) {
            return Err(Error::Config(format!("grading exponent must be >= 1, got {grading}")));
        }
        Ok(Self { nodes: graded_nodes(n, grading), grading })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn spacing(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }
}

/// Euler's Gamma function at a positive multiple of `1/2`.
pub fn gamma_half_integer(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    assert!(
        twice >= 1.0 && (2.0 * x - twice).abs() < 1e-12,
        "gamma_half_integer needs a positive multiple of 1/2, got {x}"
    );
    let (mut g, mut arg) = if twice as u64 % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while arg < x - 0.25 {
        g *= arg;
        arg += 1.0;
    }
    g
}

/// Surface measure `|S^{N-1}| = 2π^{N/2} / Γ(N/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    assert!(dim >= 1, "sphere_area needs N >= 1");
    2.0 * PI.powf(dim as f64 / 2.0) / gamma_half_integer(dim as f64 / 2.0)
}

/// Volume of the unit ball `B^N`.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_area(dim) / dim as f64
}

/// Weights of `∫₀¹ g(r) r^{N-1} dr` at the mesh nodes: the composite
/// trapezoid rule for `g` with the `r^{N-1}` factor integrated exactly
/// against each hat function. Unlike the plain trapezoid rule the weight
/// at `r = 0` is positive and constants are integrated exactly.
pub fn trapezoid_weights(mesh: &RadialMesh, dim: usize) -> Vec<f64> {
    let r = mesh.nodes();
    let n = mesh.n();
    let p = dim as i32 - 1;
    let mut w = vec![0.0; n + 1];
    for e in 0..n {
        let (a, h) = (r[e], r[e + 1] - r[e]);
        // r = a + h x on the element; binomial expansion in x keeps all
        // terms positive.
        let (mut left, mut right) = (0.0, 0.0);
        let mut binom = 1.0;
        for k in 0..=p {
            let term = binom * a.powi(p - k) * h.powi(k);
            let kf = k as f64;
            left += term / ((kf + 1.0) * (kf + 2.0));
            right += term / (kf + 2.0);
            binom = binom * (p - k) as f64 / (kf + 1.0);
        }
        w[e] += h * left;
        w[e + 1] += h * right;
    }
    w
}

/// Element-exact `∫ r^p φ_i φ_j dr` for hat functions (8-point Gauss per
/// element; exact for `p ≤ 13`, and for `p = -1` away from the origin
/// node). Returns the diagonal and the couplings `(e, e+1)`.
pub fn consistent_mass(mesh: &RadialMesh, p: i32) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(8);
    let r = mesh.nodes();
    let n = mesh.n();
    let mut diag = vec![0.0; n + 1];
    let mut off = vec![0.0; n];
    for e in 0..n {
        let (a, h) = (r[e], r[e + 1] - r[e]);
        for (x, w) in x.iter().zip(&w) {
            let t = 0.5 * (x + 1.0);
            let q = 0.5 * w * h * (a + h * t).powi(p);
            diag[e] += q * (1.0 - t) * (1.0 - t);
            diag[e + 1] += q * t * t;
            off[e] += q * t * (1.0 - t);
        }
    }
    (diag, off)
}

/// `|S^{N-1}| ∫₀¹ g(r) r^{N-1} dr` by the weighted trapezoid rule of
/// [`trapezoid_weights`].
///
/// When `g` is only defined on `(0, 1]`, pass its limit at `r = 0` (or
/// any finite value if `g r^{N-1}` vanishes there fast enough; the origin
/// weight is `h₁^N / (N(N+1))`).
pub fn integrate_radial(mesh: &RadialMesh, samples: &[f64], dim: usize) -> Result<f64> {
    if samples.len() != mesh.nodes().len() {
        return Err(Error::Input(format!(
            "{} samples for a mesh with {} nodes",
            samples.len(),
            mesh.nodes().len()
        )));
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite integrand at node {i}")));
    }
    let w = trapezoid_weights(mesh, dim);
    Ok(sphere_area(dim) * w.iter().zip(samples).map(|(w, g)| w * g).sum::<f64>())
}

/// Discrete weights shared by the profile solver, the energies and the
/// sector operators for one `(mesh, N)` pair.
///
/// All fields omit the `|S^{N-1}|` factor.
#[derive(Clone, Debug)]
pub struct RadialWeights {
    pub dim: usize,
    /// Mean of `r^{N-1}` over each element (`n` entries); the exact
    /// stiffness weight of a piecewise-linear function is this mean
    /// divided by the element length.
    pub flux: Vec<f64>,
    /// Lumped `r^{N-1}` weights at nodes ([`trapezoid_weights`]).
    pub mass: Vec<f64>,
    /// `flux[i] - flux[i-1]` at interior nodes, `1 - flux[n-1]` at `r = 1`
    /// and zero at the origin. It is `(N-1)` times a lumped `r^{N-3}`
    /// weight multiplied by `r_i`, built so that linear functions are exact
    /// for the centrifugal balance and the energy of `f = r`.
    pub centrifugal: Vec<f64>,
    /// Lumped `r^{N-3}` weights: `centrifugal[i] / ((N-1) r_i)`, zero at
    /// the origin.
    pub hardy: Vec<f64>,
    /// Consistent `r^{N-3}` mass of piecewise-linear functions: diagonal
    /// (`n + 1`) and couplings (`n`), so that `a ↦ ∫ a² r^{N-3} dr` is
    /// exact for the interpolant. The origin entry is meaningless for
    /// `N = 2`.
    pub hardy_exact_diag: Vec<f64>,
    pub hardy_exact_off: Vec<f64>,
}

impl RadialWeights {
    pub fn new(mesh: &RadialMesh, dim: usize) -> Self {
        assert!(dim >= 2, "radial weights need N >= 2");
        let r = mesh.nodes();
        let n = mesh.n();
        let flux: Vec<f64> = (0..n)
            .map(|e| {
                let (a, b) = (r[e], r[e + 1]);
                // (b^N - a^N) / (N (b - a)) = Σ_k b^k a^{N-1-k} / N
                let sum: f64 = (0..dim)
                    .map(|k| b.powi(k as i32) * a.powi((dim - 1 - k) as i32))
                    .sum();
                sum / dim as f64
            })
            .collect();
        let mass = trapezoid_weights(mesh, dim);
        let mut centrifugal = vec![0.0; n + 1];
        let mut hardy = vec![0.0; n + 1];
        for i in 1..n {
            centrifugal[i] = flux[i] - flux[i - 1];
            hardy[i] = centrifugal[i] / ((dim as f64 - 1.0) * r[i]);
        }
        centrifugal[n] = 1.0 - flux[n - 1];
        hardy[n] = centrifugal[n] / (dim as f64 - 1.0);
        let (hardy_exact_diag, hardy_exact_off) = consistent_mass(mesh, dim as i32 - 3);
        Self { dim, flux, mass, centrifugal, hardy, hardy_exact_diag, hardy_exact_off }
    }

    /// `Σ_e flux_e (Δa_e)² / h_e`, the discrete `∫ a'² r^{N-1} dr`.
    pub fn stiffness(&self, mesh: &RadialMesh, a: &[f64]) -> f64 {
        let r = mesh.nodes();
        self.flux
            .iter()
            .enumerate()
            .map(|(e, q)| {
                let h = r[e + 1] - r[e];
                let d = a[e + 1] - a[e];
                q * d * d / h
            })
            .sum()
    }

    /// Discrete `∫ a² r^{N-3} dr`.
    pub fn hardy_norm(&self, a: &[f64]) -> f64 {
        self.hardy.iter().zip(a).map(|(w, v)| w * v * v).sum()
    }

    /// `∫ a² r^{N-3} dr` for the piecewise-linear interpolant of `a`;
    /// infinite for `N = 2` unless `a(0) = 0`.
    pub fn hardy_integral(&self, a: &[f64]) -> f64 {
        if self.dim == 2 && a[0] != 0.0 {
            return f64::INFINITY;
        }
        let start = usize::from(a[0] == 0.0);
        let diag: f64 = (start..a.len()).map(|i| self.hardy_exact_diag[i] * a[i] * a[i]).sum();
        let off: f64 = (start..a.len() - 1).map(|e| self.hardy_exact_off[e] * a[e] * a[e + 1]).sum();
        diag + 2.0 * off
    }

    /// Discrete `∫ a² r^{N-1} dr`.
    pub fn mass_norm(&self, a: &[f64]) -> f64 {
        self.mass.iter().zip(a).map(|(w, v)| w * v * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_match_formula() {
        assert_eq!(graded_nodes(4, 1.0), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(graded_nodes(4, 2.0), vec![0.0, 0.0625, 0.25, 0.5625, 1.0]);
        let m = RadialMesh::build(16, 2.0).unwrap();
        for (i, r) in m.nodes().iter().enumerate() {
            assert_eq!(*r, (i as f64 / 16.0).powi(2));
        }
        assert!(m.nodes().windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn too_few_intervals() {
        assert!(matches!(RadialMesh::build(15, 1.0), Err(Error::Config(_))));
        assert!(matches!(RadialMesh::build(100, 0.5), Err(Error::Config(_))));
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(7) - 16.0 * PI.powi(3) / 15.0).abs() < 1e-12);
        assert!((ball_volume(7) - 16.0 * PI.powi(3) / 105.0).abs() < 1e-12);
        assert!((gamma_half_integer(3.5) - 15.0 * PI.sqrt() / 8.0).abs() < 1e-14);
        assert_eq!(gamma_half_integer(5.0), 24.0);
    }

    #[test]
    fn ball_volumes_by_quadrature() {
        let mesh = RadialMesh::build(2000, 2.0).unwrap();
        let ones = vec![1.0; 2001];
        assert!((integrate_radial(&mesh, &ones, 2).unwrap() - PI).abs() < 1e-6);
        assert!((integrate_radial(&mesh, &ones, 3).unwrap() - 4.0 * PI / 3.0).abs() < 1e-6);
        let half_n = vec![1.5; 2001];
        assert!((integrate_radial(&mesh, &half_n, 3).unwrap() - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn trapezoid_is_second_order() {
        let err = |n: usize| {
            let mesh = RadialMesh::build(n, 2.0).unwrap();
            let g: Vec<f64> = mesh.nodes().iter().map(|r| (3.0 * r).cos()).collect();
            // ∫₀¹ cos(3r) r dr = (cos 3 + 3 sin 3 - 1) / 9
            let exact = 2.0 * PI * ((3.0f64).cos() + 3.0 * (3.0f64).sin() - 1.0) / 9.0;
            (integrate_radial(&mesh, &g, 2).unwrap() - exact).abs()
        };
        let ratio = err(200) / err(400);
        assert!(ratio > 3.8 && ratio < 4.2, "ratio {ratio}");
    }

    #[test]
    fn non_finite_rejected() {
        let mesh = RadialMesh::build(16, 1.0).unwrap();
        let mut g = vec![1.0; 17];
        g[3] = f64::NAN;
        assert!(matches!(integrate_radial(&mesh, &g, 3), Err(Error::Numeric(_))));
    }

    #[test]
    fn flux_is_element_mean() {
        let mesh = RadialMesh::build(64, 2.0).unwrap();
        for dim in [2usize, 3, 7, 10] {
            let w = RadialWeights::new(&mesh, dim);
            let r = mesh.nodes();
            for e in 0..64 {
                let exact = (r[e + 1].powi(dim as i32) - r[e].powi(dim as i32))
                    / (dim as f64 * (r[e + 1] - r[e]));
                assert!((w.flux[e] - exact).abs() <= 1e-12 * exact.abs().max(1e-300));
            }
            assert!(w.hardy[1..64].iter().all(|&d| d > 0.0));
            // lumped r^{N-3} weight is consistent with the trapezoid one
            for i in [32, 60] {
                let trap = r[i].powi(dim as i32 - 3) * 0.5 * (r[i + 1] - r[i - 1]);
                assert!((w.hardy[i] / trap - 1.0).abs() < 3e-2, "{dim} {i}");
            }
            let lin: Vec<f64> = r.iter().map(|r| r * (1.0 - r)).collect();
            // r(1-r) is not linear, compare with the interpolant's integral
            // computed element by element in closed form for N = 3
            if dim == 3 {
                let mut exact = 0.0;
                for e in 0..64 {
                    let (u, v, h) = (lin[e], lin[e + 1], r[e + 1] - r[e]);
                    exact += h * (u * u + u * v + v * v) / 3.0;
                }
                assert!((w.hardy_integral(&lin) - exact).abs() < 1e-15);
            }
            let total: f64 = w.mass.iter().sum();
            assert!((total - 1.0 / dim as f64).abs() < 1e-15);
        }
    }
}
