//! Ginzburg-Landau energy, its second variation `F` and exact energy gaps
//! for the structured perturbation families.
//!
//! Every quantity uses the same discrete weights as the profile solver, so
//! the discrete profile is an exact critical point of [`radial_energy`] up
//! to its residual.

use serde::Serialize;

use crate::angular::{PolarQuadrature, ZonalHarmonic};
use crate::error::{Error, Result};
use crate::mesh::{sphere_area, RadialWeights};
use crate::perturbation::{check_interior_support, Family, SectorPerturbation};
use crate::profile::{energy_gradient, inverse_eps_sq, RadialProfile};

/// `c_N = (N-2)²/4 - (N-1)`.
pub fn compute_c_n(dim: usize) -> f64 {
    let n = dim as f64;
    (n - 2.0).powi(2) / 4.0 - (n - 1.0)
}

/// Energies and inequality slacks for one perturbation.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    #[serde(rename = "E_base")]
    pub e_base: f64,
    #[serde(rename = "E_perturbed")]
    pub e_perturbed: f64,
    pub gap: f64,
    #[serde(rename = "F_value")]
    pub f_value: f64,
    pub hardy_integral: f64,
    #[serde(rename = "c_N")]
    pub c_n: f64,
    /// `gap - F/2`.
    pub slack_step1: f64,
    /// `F - c_N ∫|v|²/r²`.
    pub slack_step4: f64,
}

/// Discrete energy of the radial map `f(r) x/|x|` with nodal values `f`.
fn energy_of(prof: &RadialProfile, w: &RadialWeights, f: &[f64]) -> Result<f64> {
    let elastic = 0.5 * w.stiffness(&prof.mesh, f) + 0.5 * (prof.dim as f64 - 1.0) * w.hardy_norm(f);
    let potential = reaction(prof, w, |i| Ok(1.0 - f[i] * f[i]))?;
    Ok(sphere_area(prof.dim) * (elastic + potential))
}

/// `Σ m_i W(t_i) / (2ε²)`, skipping the potential entirely for `ε = ∞`.
fn reaction(prof: &RadialProfile, w: &RadialWeights, mut t: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
    let k = inverse_eps_sq(prof.eps);
    if k == 0.0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (i, m) in w.mass.iter().enumerate() {
        sum += m * prof.potential.eval_w(t(i)?)?;
    }
    let value = 0.5 * k * sum;
    if !value.is_finite() {
        return Err(Error::Numeric("non-finite potential energy".into()));
    }
    Ok(value)
}

/// `E_ε(u_ε)` for `u_ε = f(r) x/|x|`.
pub fn radial_energy(prof: &RadialProfile) -> Result<f64> {
    let w = RadialWeights::new(&prof.mesh, prof.dim);
    let e = energy_of(prof, &w, &prof.f)?;
    if !e.is_finite() {
        return Err(Error::Numeric("non-finite energy".into()));
    }
    Ok(e)
}

/// Energy of the radial map with arbitrary nodal values on the profile's
/// mesh, with the profile's `N`, `ε` and potential.
pub fn radial_energy_of(prof: &RadialProfile, f: &[f64]) -> Result<f64> {
    check_len(prof, f)?;
    energy_of(prof, &RadialWeights::new(&prof.mesh, prof.dim), f)
}

/// Directional derivative of [`radial_energy`] at the profile along the
/// radial direction `a` (the discrete weak Euler-Lagrange residual).
pub fn energy_first_variation(prof: &RadialProfile, a: &[f64]) -> Result<f64> {
    check_len(prof, a)?;
    let g = energy_gradient(prof)?;
    Ok(sphere_area(prof.dim) * g.iter().zip(a).map(|(g, a)| g * a).sum::<f64>())
}

fn check_len(prof: &RadialProfile, a: &[f64]) -> Result<()> {
    if a.len() != prof.mesh.nodes().len() {
        return Err(Error::Input(format!(
            "{} samples for a mesh with {} nodes",
            a.len(),
            prof.mesh.nodes().len()
        )));
    }
    Ok(())
}

/// `W'(1-f²)/ε²` at each node.
fn linear_potential(prof: &RadialProfile) -> Result<Vec<f64>> {
    let k = inverse_eps_sq(prof.eps);
    if k == 0.0 {
        return Ok(vec![0.0; prof.f.len()]);
    }
    prof.f.iter().map(|f| Ok(k * prof.potential.eval_dw(1.0 - f * f)?)).collect()
}

fn quad_form_with(prof: &RadialProfile, w: &RadialWeights, q: &[f64], v: &SectorPerturbation) -> f64 {
    let a = &v.a;
    let potential: f64 = w.mass.iter().zip(q).zip(a).map(|((m, q), a)| m * q * a * a).sum();
    sphere_area(prof.dim)
        * (w.stiffness(&prof.mesh, a) + v.angular_eigenvalue(prof.dim) * w.hardy_norm(a) - potential)
}

/// `F_ε(v) = ∫ |∇v|² - W'(1-f²)|v|²/ε² dx` (twice the second variation).
pub fn quad_form_f(prof: &RadialProfile, v: &SectorPerturbation) -> Result<f64> {
    v.validate(&prof.mesh, prof.dim)?;
    let w = RadialWeights::new(&prof.mesh, prof.dim);
    Ok(quad_form_with(prof, &w, &linear_potential(prof)?, v))
}

/// `F_ε` of a perturbation with several components; the linearized
/// operator acts componentwise, so this is the sum over components.
pub fn quad_form_f_sum(prof: &RadialProfile, parts: &[SectorPerturbation]) -> Result<f64> {
    for (k, p) in parts.iter().enumerate() {
        p.validate(&prof.mesh, prof.dim)?;
        if parts[..k].iter().any(|q| q.component == p.component && q.family == p.family && q.ell == p.ell) {
            return Err(Error::Input("components of a multi-component perturbation must differ".into()));
        }
    }
    let w = RadialWeights::new(&prof.mesh, prof.dim);
    let q = linear_potential(prof)?;
    Ok(parts.iter().map(|p| quad_form_with(prof, &w, &q, p)).sum())
}

/// `∫ |v|²/r² dx` for the piecewise-linear interpolant of `a`.
pub fn hardy_integral(prof: &RadialProfile, v: &SectorPerturbation) -> Result<f64> {
    v.validate(&prof.mesh, prof.dim)?;
    let w = RadialWeights::new(&prof.mesh, prof.dim);
    Ok(sphere_area(prof.dim) * w.hardy_integral(&v.a))
}

/// `E_ε(u_ε + v)`.
fn perturbed_energy(prof: &RadialProfile, w: &RadialWeights, v: &SectorPerturbation) -> Result<f64> {
    let f = &prof.f;
    let a = &v.a;
    let area = sphere_area(prof.dim);
    match v.family {
        Family::RadialAligned => {
            let g: Vec<f64> = f.iter().zip(a).map(|(f, a)| f + a).collect();
            energy_of(prof, w, &g)
        }
        Family::OrthogonalComponent => {
            let elastic = 0.5 * w.stiffness(&prof.mesh, f)
                + 0.5 * (prof.dim as f64 - 1.0) * w.hardy_norm(f)
                + 0.5 * w.stiffness(&prof.mesh, a);
            let potential = reaction(prof, w, |i| Ok(1.0 - f[i] * f[i] - a[i] * a[i]))?;
            Ok(area * (elastic + potential))
        }
        Family::SingleAngle => {
            let elastic = 0.5 * w.stiffness(&prof.mesh, f)
                + 0.5 * (prof.dim as f64 - 1.0) * w.hardy_norm(f)
                + 0.5 * (w.stiffness(&prof.mesh, a) + v.angular_eigenvalue(prof.dim) * w.hardy_norm(a));
            let k = inverse_eps_sq(prof.eps);
            let mut potential = 0.0;
            if k != 0.0 {
                let quad = PolarQuadrature::new(prof.dim);
                let y = ZonalHarmonic::new(prof.dim, v.ell);
                let y2: Vec<f64> = quad.theta.iter().map(|&t| y.eval(t).powi(2)).collect();
                for (i, m) in w.mass.iter().enumerate() {
                    let base = 1.0 - f[i] * f[i];
                    let mut mean = 0.0;
                    for (q, y2) in quad.weights.iter().zip(&y2) {
                        mean += q * prof.potential.eval_w(base - a[i] * a[i] * y2)?;
                    }
                    potential += m * mean;
                }
                potential *= 0.5 * k;
            }
            Ok(area * (elastic + potential))
        }
    }
}

/// `gap - F/2` assembled term by term: the first variation along the
/// radial part of `v` plus `(1/2ε²) ∫ [W(t-d) - W(t) + W'(t) d]` with
/// `t = 1 - |u|²` and `d = |u+v|² - |u|²`.
///
/// Subtracting `F/2` from a difference of two energies loses all relative
/// precision once `v` is small; this form does not.
fn step1_slack(prof: &RadialProfile, w: &RadialWeights, v: &SectorPerturbation) -> Result<f64> {
    let (f, a) = (&prof.f, &v.a);
    let first = match v.family {
        Family::RadialAligned => energy_first_variation(prof, a)?,
        _ => 0.0,
    };
    let k = inverse_eps_sq(prof.eps);
    if k == 0.0 {
        return Ok(first);
    }
    let p = &prof.potential;
    let mut sum = 0.0;
    match v.family {
        Family::RadialAligned => {
            for (i, m) in w.mass.iter().enumerate() {
                sum += m * p.taylor_remainder(1.0 - f[i] * f[i], 2.0 * f[i] * a[i] + a[i] * a[i])?;
            }
        }
        Family::OrthogonalComponent => {
            for (i, m) in w.mass.iter().enumerate() {
                sum += m * p.taylor_remainder(1.0 - f[i] * f[i], a[i] * a[i])?;
            }
        }
        Family::SingleAngle => {
            let quad = PolarQuadrature::new(prof.dim);
            let y = ZonalHarmonic::new(prof.dim, v.ell);
            let y2: Vec<f64> = quad.theta.iter().map(|&t| y.eval(t).powi(2)).collect();
            for (i, m) in w.mass.iter().enumerate() {
                let t = 1.0 - f[i] * f[i];
                let mut mean = 0.0;
                for (q, y2) in quad.weights.iter().zip(&y2) {
                    mean += q * p.taylor_remainder(t, a[i] * a[i] * y2)?;
                }
                sum += m * mean;
            }
        }
    }
    Ok(first + sphere_area(prof.dim) * 0.5 * k * sum)
}

/// Energy gap `E_ε(u_ε + v) - E_ε(u_ε)` with `F_ε(v)` and the slacks of
/// `gap ≥ F/2` and `F ≥ c_N ∫|v|²/r²`.
///
/// `E_perturbed` is evaluated directly; `gap` is `F/2` plus the
/// separately assembled remainder, which agrees with
/// `E_perturbed - E_base` up to rounding in the energies.
pub fn energy_gap(prof: &RadialProfile, v: &SectorPerturbation) -> Result<EnergyReport> {
    v.validate(&prof.mesh, prof.dim)?;
    let w = RadialWeights::new(&prof.mesh, prof.dim);
    let e_base = energy_of(prof, &w, &prof.f)?;
    let e_perturbed = perturbed_energy(prof, &w, v)?;
    let f_value = quad_form_with(prof, &w, &linear_potential(prof)?, v);
    let slack_step1 = step1_slack(prof, &w, v)?;
    let hardy = sphere_area(prof.dim) * w.hardy_integral(&v.a);
    let c_n = compute_c_n(prof.dim);
    let report = EnergyReport {
        e_base,
        e_perturbed,
        gap: 0.5 * f_value + slack_step1,
        f_value,
        hardy_integral: hardy,
        c_n,
        slack_step1,
        slack_step4: f_value - c_n * hardy,
    };
    if [report.e_perturbed, report.gap, report.f_value].iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite energy gap".into()));
    }
    Ok(report)
}

/// `(1/4ε²) ∫ (|u+v|² - |u|²)² dx`, which equals `gap - F/2` for the
/// quadratic potential when `v` is orthogonal to `u` pointwise.
pub fn quartic_remainder(prof: &RadialProfile, v: &SectorPerturbation) -> Result<f64> {
    v.validate(&prof.mesh, prof.dim)?;
    let w = RadialWeights::new(&prof.mesh, prof.dim);
    let (f, a) = (&prof.f, &v.a);
    let fourth_moment = match v.family {
        Family::SingleAngle => {
            let quad = PolarQuadrature::new(prof.dim);
            let y = ZonalHarmonic::new(prof.dim, v.ell);
            quad.mean(|t| y.eval(t).powi(4))
        }
        _ => 1.0,
    };
    let sum: f64 = (0..a.len())
        .map(|i| {
            let d2 = match v.family {
                Family::RadialAligned => (2.0 * f[i] * a[i] + a[i] * a[i]).powi(2),
                _ => a[i].powi(4) * fourth_moment,
            };
            w.mass[i] * d2
        })
        .sum();
    Ok(sphere_area(prof.dim) * 0.25 * inverse_eps_sq(prof.eps) * sum)
}

/// Relative discrepancy in `F_ε(f w) = ∫ f²(|∇w|² - (N-1)w²/r²) dx`.
///
/// The right side is assembled from the nodal products `f_i f_{i+1}` and
/// never touches the potential, so the two sides share no code path
/// beyond the mesh weights.
pub fn verify_step2_identity(prof: &RadialProfile, w: &SectorPerturbation) -> Result<f64> {
    w.validate(&prof.mesh, prof.dim)?;
    check_interior_support(&w.a)?;
    let (f, g) = (&prof.f, &w.a);
    let weights = RadialWeights::new(&prof.mesh, prof.dim);
    let v = w.with_coefficients(f.iter().zip(g).map(|(f, g)| f * g).collect());
    let lhs = quad_form_with(prof, &weights, &linear_potential(prof)?, &v);

    let r = prof.mesh.nodes();
    let gradient: f64 = weights
        .flux
        .iter()
        .enumerate()
        .map(|(e, q)| q / (r[e + 1] - r[e]) * f[e] * f[e + 1] * (g[e + 1] - g[e]).powi(2))
        .sum();
    let shift = w.angular_eigenvalue(prof.dim) - (prof.dim as f64 - 1.0);
    let zeroth: f64 = (0..g.len()).map(|i| weights.hardy[i] * (f[i] * g[i]).powi(2)).sum();
    let rhs = sphere_area(prof.dim) * (gradient + shift * zeroth);
    Ok((lhs - rhs).abs() / (1.0 + lhs.abs()))
}
