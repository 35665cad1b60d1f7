//! Angular sectors of the linearized operator `L = -Δ - W'(1-f²)/ε²` and
//! the Hardy-type lower bounds built on it.

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{compute_c_n, quad_form_f};
use crate::error::{Error, Result};
use crate::mesh::{sphere_area, RadialMesh, RadialWeights};
use crate::perturbation::{check_interior_support, SectorPerturbation};
use crate::potential::PotentialSpec;
use crate::profile::{inverse_eps_sq, solve_tridiagonal, RadialProfile};

/// Target backward error of eigenpairs (see `SectorOperator::residual`).
pub const EIGEN_TOLERANCE: f64 = 1e-10;
const MAX_INVERSE_STEPS: usize = 50;
const MAX_BISECTIONS: usize = 300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    /// `∫ a² r^{N-1} dr`
    Identity,
    /// `∫ a² r^{N-3} dr`
    Hardy,
}

impl Weight {
    pub fn name(self) -> &'static str {
        match self {
            Weight::Identity => "identity",
            Weight::Hardy => "hardy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Weight::Identity),
            "hardy" => Ok(Weight::Hardy),
            _ => Err(Error::Config(format!("unknown weight `{s}` (identity|hardy)"))),
        }
    }
}

/// Sector form `∫ (a'² + [ℓ(ℓ+N-2)/r² - W'(1-f²)/ε²] a²) r^{N-1} dr` as a
/// symmetric tridiagonal matrix over all mesh nodes, with its two weights.
#[derive(Clone, Debug)]
pub struct SectorOperator {
    pub dim: usize,
    pub eps: f64,
    pub ell: usize,
    pub mesh: RadialMesh,
    /// `n + 1` diagonal entries.
    pub diag: Vec<f64>,
    /// `n` couplings between nodes `e` and `e + 1`.
    pub offdiag: Vec<f64>,
    /// Lumped `r^{N-1}` mass.
    pub mass_diag: Vec<f64>,
    /// Consistent `r^{N-3}` mass (diagonal and couplings); its quadratic
    /// form is `∫ a² r^{N-3} dr` of the piecewise-linear interpolant.
    pub hardy_diag: Vec<f64>,
    pub hardy_off: Vec<f64>,
    /// Nodal zeroth-order coefficient times its lumped weight:
    /// `ℓ(ℓ+N-2) d_i - W'(1-f_i²)/ε² m_i`.
    zeroth: Vec<f64>,
    zeros: Vec<f64>,
}

pub fn build_sector_operator(prof: &RadialProfile, ell: usize) -> Result<SectorOperator> {
    let mesh = &prof.mesh;
    let r = mesh.nodes();
    let n = mesh.n();
    let w = RadialWeights::new(mesh, prof.dim);
    let k = inverse_eps_sq(prof.eps);
    let l = ell as f64;
    let angular = l * (l + prof.dim as f64 - 2.0);
    let mut zeroth = vec![0.0; n + 1];
    for i in 0..=n {
        let q = if k == 0.0 { 0.0 } else { k * prof.potential.eval_dw(1.0 - prof.f[i] * prof.f[i])? };
        zeroth[i] = angular * w.hardy[i] - q * w.mass[i];
    }
    let offdiag: Vec<f64> = (0..n).map(|e| -w.flux[e] / (r[e + 1] - r[e])).collect();
    let diag: Vec<f64> = (0..=n)
        .map(|i| {
            let left = if i > 0 { -offdiag[i - 1] } else { 0.0 };
            let right = if i < n { -offdiag[i] } else { 0.0 };
            left + right + zeroth[i]
        })
        .collect();
    Ok(SectorOperator {
        dim: prof.dim,
        eps: prof.eps,
        ell,
        mesh: mesh.clone(),
        diag,
        offdiag,
        mass_diag: w.mass,
        hardy_diag: w.hardy_exact_diag,
        hardy_off: w.hardy_exact_off,
        zeroth,
        zeros: vec![0.0; n],
    })
}

/// The sector operator acting on a perturbation's component; `L` acts
/// componentwise so only `ℓ` enters.
pub fn sector_operator_for(prof: &RadialProfile, v: &SectorPerturbation) -> Result<SectorOperator> {
    v.validate(&prof.mesh, prof.dim)?;
    build_sector_operator(prof, v.ell)
}

/// Lowest eigenpair of one sector.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralResult {
    pub ell: usize,
    pub weight: Weight,
    pub mu: f64,
    /// Nodal eigenvector with unit weighted norm, zero at Dirichlet nodes.
    #[serde(skip)]
    pub eigvec: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl SectorOperator {
    /// Nodes carrying unknowns: `r = 1` is always Dirichlet; the origin is
    /// free only for `ℓ = 0` with the identity weight, where the lumped
    /// mass there is positive.
    fn active(&self, weight: Weight) -> std::ops::Range<usize> {
        let first = if self.ell == 0 && weight == Weight::Identity { 0 } else { 1 };
        first..self.mesh.n()
    }

    /// Diagonal and couplings of the weight matrix.
    fn pencil(&self, weight: Weight) -> (&[f64], &[f64]) {
        match weight {
            Weight::Identity => (&self.mass_diag, &self.zeros),
            Weight::Hardy => (&self.hardy_diag, &self.hardy_off),
        }
    }

    /// `aᵀ K a` over nodal values, written as a sum of squares plus the
    /// zeroth-order part to limit cancellation.
    pub fn form(&self, a: &[f64]) -> f64 {
        let grad: f64 = self.offdiag.iter().enumerate().map(|(e, c)| -c * (a[e + 1] - a[e]).powi(2)).sum();
        grad + self.zeroth.iter().zip(a).map(|(z, a)| z * a * a).sum::<f64>()
    }

    /// `aᵀ B a` over the active nodes.
    pub fn weight_form(&self, weight: Weight, a: &[f64]) -> f64 {
        let (b, c) = self.pencil(weight);
        let range = self.active(weight);
        let diag: f64 = range.clone().map(|i| b[i] * a[i] * a[i]).sum();
        let off: f64 = (range.start..range.end - 1).map(|e| c[e] * a[e] * a[e + 1]).sum();
        diag + 2.0 * off
    }

    /// Tridiagonal `K - σB` over the active nodes (lower, diagonal, upper).
    fn shifted(&self, weight: Weight, sigma: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (b, c) = self.pencil(weight);
        let range = self.active(weight);
        let mut lower = Vec::with_capacity(range.len());
        let mut diag = Vec::with_capacity(range.len());
        let mut upper = Vec::with_capacity(range.len());
        for i in range.clone() {
            lower.push(if i > range.start { self.offdiag[i - 1] - sigma * c[i - 1] } else { 0.0 });
            diag.push(self.diag[i] - sigma * b[i]);
            upper.push(if i + 1 < range.end { self.offdiag[i] - sigma * c[i] } else { 0.0 });
        }
        (lower, diag, upper)
    }

    /// Number of eigenvalues below `sigma` (Sylvester inertia of `K - σB`).
    fn count_below(&self, weight: Weight, sigma: f64) -> usize {
        let (lower, diag, _) = self.shifted(weight, sigma);
        let mut count = 0;
        let mut prev = 1.0;
        for (k, (l, d)) in lower.iter().zip(&diag).enumerate() {
            let mut p = if k == 0 { *d } else { d - l * l / prev };
            if p == 0.0 {
                p = -f64::MIN_POSITIVE;
            }
            if p < 0.0 {
                count += 1;
            }
            prev = p;
        }
        count
    }

    /// Componentwise backward error of `(μ, a)`:
    /// `‖Ka - μBa‖ / ‖ |K||a| + |μ||B||a| ‖`.
    fn residual(&self, weight: Weight, a: &[f64], mu: f64) -> f64 {
        let (b, c) = self.pencil(weight);
        let range = self.active(weight);
        let (mut num, mut den) = (0.0, 0.0);
        for i in range.clone() {
            let mut r = (self.diag[i] - mu * b[i]) * a[i];
            let mut s = (self.diag[i].abs() + (mu * b[i]).abs()) * a[i].abs();
            if i > range.start {
                r += (self.offdiag[i - 1] - mu * c[i - 1]) * a[i - 1];
                s += (self.offdiag[i - 1].abs() + (mu * c[i - 1]).abs()) * a[i - 1].abs();
            }
            if i + 1 < range.end {
                r += (self.offdiag[i] - mu * c[i]) * a[i + 1];
                s += (self.offdiag[i].abs() + (mu * c[i]).abs()) * a[i + 1].abs();
            }
            num += r * r;
            den += s * s;
        }
        (num / den).sqrt()
    }

    /// Smallest `μ` with `K a = μ B a`: Sturm-count bisection brackets
    /// `μ`, then shifted inverse iteration refines the eigenvector and `μ`
    /// is its Rayleigh quotient.
    pub fn lowest_eigen(&self, weight: Weight) -> Result<SpectralResult> {
        let (b, _) = self.pencil(weight);
        let range = self.active(weight);
        if range.len() < 2 {
            return Err(Error::Input("sector operator has fewer than two unknowns".into()));
        }
        if let Some(i) = range.clone().find(|&i| !(b[i] > 0.0 && b[i].is_finite())) {
            return Err(Error::Numeric(format!("weight not positive at node {i}")));
        }
        // a positive trial vector bounds μ from above
        let mut trial = vec![0.0; self.diag.len()];
        for i in range.clone() {
            trial[i] = 1.0;
        }
        let rq = self.form(&trial) / self.weight_form(weight, &trial);
        let mut hi = rq + 1e-12 * rq.abs().max(1.0);
        // Gershgorin lower bound for the lumped part, widened until no
        // eigenvalue lies below it
        let mut lo = range
            .clone()
            .map(|i| {
                let left = if i > range.start { self.offdiag[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < range.end { self.offdiag[i].abs() } else { 0.0 };
                (self.diag[i] - left - right) / b[i]
            })
            .fold(f64::INFINITY, f64::min)
            .min(hi - 1.0);
        let mut widenings = 0;
        while self.count_below(weight, lo) > 0 {
            lo -= lo.abs().max(1.0);
            widenings += 1;
            if widenings > 200 || !lo.is_finite() {
                return Err(Error::Numeric("could not bracket the lowest eigenvalue".into()));
            }
        }
        if self.count_below(weight, hi) == 0 {
            hi = rq.abs().max(1.0) * 2.0 + rq;
        }
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-14 * lo.abs().max(hi.abs()).max(1.0) || mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(weight, mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }

        // inverse iteration with K - σB positive definite
        let sigma = lo - 1e-12 * lo.abs().max(1.0);
        let (lower, shifted, upper) = self.shifted(weight, sigma);
        let (bd, bc) = self.pencil(weight);
        let mut a = trial;
        let mut history = Vec::new();
        for step in 1..=MAX_INVERSE_STEPS {
            let mut rhs: Vec<f64> = range
                .clone()
                .map(|i| {
                    let mut v = bd[i] * a[i];
                    if i > range.start {
                        v += bc[i - 1] * a[i - 1];
                    }
                    if i + 1 < range.end {
                        v += bc[i] * a[i + 1];
                    }
                    v
                })
                .collect();
            solve_tridiagonal(&lower, &shifted, &upper, &mut rhs)?;
            let sign = if rhs.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            for (k, i) in range.clone().enumerate() {
                a[i] = sign * rhs[k];
            }
            let norm = self.weight_form(weight, &a).sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::Numeric("inverse iteration lost its iterate".into()));
            }
            a.iter_mut().for_each(|x| *x /= norm);
            let mu = self.form(&a);
            let res = self.residual(weight, &a, mu);
            history.push(res);
            if res <= EIGEN_TOLERANCE {
                return Ok(SpectralResult { ell: self.ell, weight, mu, eigvec: a, iterations: step, residual: res });
            }
            if step >= 4 && res >= 0.5 * history[step - 4] {
                break;
            }
        }
        Err(Error::EigenStagnation { iterations: history.len(), history })
    }
}

/// `lowest_eigen` for a built operator.
pub fn lowest_eigen(op: &SectorOperator, weight: Weight) -> Result<SpectralResult> {
    op.lowest_eigen(weight)
}

/// Hardy-weight eigenvalues for `ℓ = 0..=ell_max`.
#[derive(Clone, Debug, Serialize)]
pub struct HardyScan {
    pub dim: usize,
    pub eps: f64,
    pub sectors: Vec<SpectralResult>,
    pub min_mu: f64,
    pub argmin_ell: usize,
    #[serde(rename = "c_N")]
    pub c_n: f64,
}

impl HardyScan {
    /// `min μ - c_N`; for `ℓ > ell_max` sector monotonicity bounds the
    /// tail by the last computed value, so this is the global margin.
    pub fn margin(&self) -> f64 {
        self.min_mu - self.c_n
    }

    /// `Some(pass)` when the bound is claimed (`N ≥ 7`), `None` otherwise.
    pub fn certified(&self, tolerance: f64) -> Option<bool> {
        (self.dim >= critical_dimension()).then(|| self.margin() >= -tolerance)
    }
}

pub fn hardy_gap(prof: &RadialProfile, ell_max: usize) -> Result<HardyScan> {
    if ell_max < 2 {
        return Err(Error::Input(format!("ell_max must be at least 2, got {ell_max}")));
    }
    let sectors: Vec<SpectralResult> = (0..=ell_max)
        .into_par_iter()
        .map(|ell| build_sector_operator(prof, ell)?.lowest_eigen(Weight::Hardy))
        .collect::<Result<_>>()?;
    let (argmin_ell, min_mu) = sectors
        .iter()
        .map(|s| (s.ell, s.mu))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    Ok(HardyScan { dim: prof.dim, eps: prof.eps, sectors, min_mu, argmin_ell, c_n: compute_c_n(prof.dim) })
}

/// `φ = r^{-(N-2)/2}` at the nodes, with the origin set to zero (only
/// ever multiplied by test functions vanishing there).
fn hardy_ground_state(mesh: &RadialMesh, dim: usize) -> Vec<f64> {
    let k = (dim as f64 - 2.0) / 2.0;
    mesh.nodes().iter().map(|&r| if r == 0.0 { 0.0 } else { r.powf(-k) }).collect()
}

/// Pointwise `-2φφ'ff' = (N-2) r^{1-N} f f'` at interior nodes (centred
/// differences for `f'`), zero at both ends.
pub fn cross_term_density(prof: &RadialProfile) -> Vec<f64> {
    let r = prof.mesh.nodes();
    let f = &prof.f;
    let n = prof.mesh.n();
    let mut out = vec![0.0; n + 1];
    for i in 1..n {
        let df = (f[i + 1] - f[i - 1]) / (r[i + 1] - r[i - 1]);
        out[i] = (prof.dim as f64 - 2.0) * r[i].powi(1 - prof.dim as i32) * f[i] * df;
    }
    out
}

/// Pieces of `F(v) = ∫f²φ²|∇g|² + ((N-2)²/4 + ℓ(ℓ+N-2) - (N-1))∫v²/r² + X`
/// for `v = f φ g`, with the cross term `X = -½∫∇(φ²)·∇(f²) g²`.
#[derive(Clone, Debug, Serialize)]
pub struct Step3Chain {
    pub gradient_term: f64,
    /// Discrete `(N-2)²/4 ∫ v²/r²`.
    pub hardy_term: f64,
    /// `(ℓ(ℓ+N-2) - (N-1)) ∫ v²/r²`.
    pub centrifugal_term: f64,
    /// Sum of the three terms above.
    pub rewritten: f64,
    pub cross_term: f64,
    /// Smallest nodal contribution to the cross term.
    pub cross_term_min_density: f64,
    #[serde(rename = "F_value")]
    pub f_value: f64,
    pub hardy_integral: f64,
    #[serde(rename = "c_N")]
    pub c_n: f64,
    /// `F - c_N ∫ v²/r²`.
    pub bound_slack: f64,
    /// `|F - rewritten - X| / (1 + |F|)`.
    pub discrepancy: f64,
}

pub fn verify_step3_chain(prof: &RadialProfile, g: &SectorPerturbation) -> Result<Step3Chain> {
    g.validate(&prof.mesh, prof.dim)?;
    check_interior_support(&g.a)?;
    let mesh = &prof.mesh;
    let r = mesh.nodes();
    let n = mesh.n();
    let (f, gv) = (&prof.f, &g.a);
    let w = RadialWeights::new(mesh, prof.dim);
    let phi = hardy_ground_state(mesh, prof.dim);
    let area = sphere_area(prof.dim);

    let mut gradient = 0.0;
    for e in 0..n {
        let dg = gv[e + 1] - gv[e];
        if dg != 0.0 {
            gradient += w.flux[e] / (r[e + 1] - r[e]) * f[e] * f[e + 1] * phi[e] * phi[e + 1] * dg * dg;
        }
    }
    let slope = |u: &[f64], e: usize| (u[e + 1] - u[e]) / (r[e + 1] - r[e]);
    let (mut hardy_term, mut cross, mut cross_min) = (0.0, 0.0, f64::INFINITY);
    for i in 1..n {
        if gv[i] == 0.0 {
            continue;
        }
        let (sl, sr) = (slope(&phi, i - 1), slope(&phi, i));
        let g2 = gv[i] * gv[i];
        hardy_term += f[i] * f[i] * phi[i] * (w.flux[i - 1] * sl - w.flux[i] * sr) * g2;
        let hl = r[i] - r[i - 1];
        let hr = r[i + 1] - r[i];
        let x = -phi[i]
            * f[i]
            * (w.flux[i - 1] * hl * sl * slope(f, i - 1) + w.flux[i] * hr * sr * slope(f, i))
            * g2;
        cross += x;
        cross_min = cross_min.min(x);
    }
    let v_vals: Vec<f64> = (0..=n).map(|i| f[i] * phi[i] * gv[i]).collect();
    let hardy_sum = w.hardy_norm(&v_vals);
    let hardy_exact = w.hardy_integral(&v_vals);
    let shift = g.angular_eigenvalue(prof.dim) - (prof.dim as f64 - 1.0);
    let v = g.with_coefficients(v_vals);
    let f_value = quad_form_f(prof, &v)?;
    let gradient_term = area * gradient;
    let hardy_term = area * hardy_term;
    let centrifugal_term = area * shift * hardy_sum;
    let rewritten = gradient_term + hardy_term + centrifugal_term;
    let cross_term = area * cross;
    let hardy_integral = area * hardy_exact;
    let c_n = compute_c_n(prof.dim);
    Ok(Step3Chain {
        gradient_term,
        hardy_term,
        centrifugal_term,
        rewritten,
        cross_term,
        cross_term_min_density: if cross_min.is_finite() { area * cross_min } else { 0.0 },
        f_value,
        hardy_integral,
        c_n,
        bound_slack: f_value - c_n * hardy_integral,
        discrepancy: (f_value - rewritten - cross_term).abs() / (1.0 + f_value.abs()),
    })
}

/// Energy comparison for the sphere-valued competitor
/// `U = (x/|x| + a e_M)/|x/|x| + a e_M|` against the hedgehog.
#[derive(Clone, Debug, Serialize)]
pub struct HarmonicMapReport {
    /// `∫ |∇U|² - |∇u_*|²`.
    pub energy_gap: f64,
    /// `∫ |∇v|² - (N-1)|v|²/r²` with `v = U - u_*`.
    pub reduced_form: f64,
    pub hardy_integral: f64,
    #[serde(rename = "c_N")]
    pub c_n: f64,
    /// `|gap - reduced| / (1 + |gap|)`.
    pub discrepancy: f64,
    /// `gap - c_N ∫ |v|²/r²`.
    pub bound_slack: f64,
}

pub fn harmonic_map_gap(dim: usize, target_dim: usize, w: &SectorPerturbation, mesh: &RadialMesh) -> Result<HarmonicMapReport> {
    if target_dim <= dim {
        return Err(Error::Input(format!("need M > N, got M = {target_dim}, N = {dim}")));
    }
    if dim < 2 {
        return Err(Error::Input("need N >= 2".into()));
    }
    let a = &w.a;
    let n = mesh.n();
    if a.len() != n + 1 {
        return Err(Error::Input("perturbation does not match the mesh".into()));
    }
    if a[n] != 0.0 || a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("perturbation must be finite and vanish at r = 1".into()));
    }
    // u_* and a e_M are orthogonal, so |u_* + v̂|² = 1 + a² never vanishes;
    // the check guards against overflow in a².
    let norm: Vec<f64> = a.iter().map(|a| (1.0 + a * a).sqrt()).collect();
    if norm.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Input("|u_* + v| vanishes or overflows".into()));
    }
    let alpha: Vec<f64> = norm.iter().map(|s| 1.0 / s).collect();
    let beta: Vec<f64> = a.iter().zip(&norm).map(|(a, s)| a / s).collect();
    let wts = RadialWeights::new(mesh, dim);
    let area = sphere_area(dim);
    let nm1 = dim as f64 - 1.0;

    let grad = wts.stiffness(mesh, &alpha) + wts.stiffness(mesh, &beta);
    // |∇U|² - |∇u_*|² = α'² + β'² + (N-1)(α² - 1)/r²
    let tangential: f64 = wts.hardy.iter().zip(&alpha).map(|(d, al)| d * (al * al - 1.0)).sum();
    let energy_gap = area * (grad + nm1 * tangential);
    // v = (α-1) u_* + β e_M: |∇v|² = α'² + β'² + (N-1)(α-1)²/r²
    let am1: Vec<f64> = alpha.iter().map(|al| al - 1.0).collect();
    let v2: f64 = wts.hardy.iter().zip(am1.iter().zip(&beta)).map(|(d, (x, b))| d * (x * x + b * b)).sum();
    let reduced_form = area * (grad + nm1 * wts.hardy_norm(&am1) - nm1 * v2);
    let hardy_integral = area * (wts.hardy_integral(&am1) + wts.hardy_integral(&beta));
    let c_n = compute_c_n(dim);
    Ok(HarmonicMapReport {
        energy_gap,
        reduced_form,
        hardy_integral,
        c_n,
        discrepancy: (energy_gap - reduced_form).abs() / (1.0 + energy_gap.abs()),
        bound_slack: energy_gap - c_n * hardy_integral,
    })
}

/// First Dirichlet eigenvalue of `-Δ` on the unit ball, from the
/// `ℓ = 0` identity-weight sector with no potential.
pub fn dirichlet_eigenvalue(dim: usize, mesh: &RadialMesh) -> Result<f64> {
    let prof = RadialProfile::from_values(
        mesh.clone(),
        mesh.nodes().to_vec(),
        dim,
        f64::INFINITY,
        PotentialSpec::Quadratic,
    )?;
    Ok(build_sector_operator(&prof, 0)?.lowest_eigen(Weight::Identity)?.mu)
}

/// `ε* = (W'(1)/λ₁)^{1/2}`: above it the energy is strictly convex.
pub fn convexity_threshold(dim: usize, p: &PotentialSpec, mesh: &RadialMesh) -> Result<f64> {
    let slope = p.eval_dw(1.0)?;
    if !(slope > 0.0) {
        return Err(Error::Admissibility(format!("W'(1) = {slope} must be positive")));
    }
    Ok((slope / dirichlet_eigenvalue(dim, mesh)?).sqrt())
}

/// Smallest `N` with `c_N ≥ 0`.
pub fn critical_dimension() -> usize {
    (2..).find(|&n| compute_c_n(n) >= 0.0).expect("c_N grows quadratically")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ball_dirichlet_eigenvalue, first_bessel_zero};
    use crate::perturbation::{bump_coefficients, random_coefficients};
    use crate::profile::{continuation_solve, SolveOptions};

    fn harmonic(dim: usize, n: usize) -> RadialProfile {
        let mesh = RadialMesh::build(n, 2.0).unwrap();
        RadialProfile::from_values(mesh.clone(), mesh.nodes().to_vec(), dim, f64::INFINITY, PotentialSpec::Quadratic)
            .unwrap()
    }

    fn vortex(dim: usize, eps: f64, n: usize) -> RadialProfile {
        let mesh = RadialMesh::build(n, 2.0).unwrap();
        continuation_solve(dim, eps, &PotentialSpec::Quadratic, &mesh, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn dirichlet_eigenvalues_of_balls() {
        let mesh = RadialMesh::build(2000, 2.0).unwrap();
        let l3 = dirichlet_eigenvalue(3, &mesh).unwrap();
        assert!((l3 / std::f64::consts::PI.powi(2) - 1.0).abs() < 1e-4, "{l3}");
        let l2 = dirichlet_eigenvalue(2, &mesh).unwrap();
        assert!((l2 / first_bessel_zero(0.0).powi(2) - 1.0).abs() < 1e-3, "{l2}");
        let l7 = dirichlet_eigenvalue(7, &mesh).unwrap();
        assert!((l7 / ball_dirichlet_eigenvalue(7) - 1.0).abs() < 1e-4, "{l7}");
    }

    #[test]
    fn thresholds() {
        let mesh = RadialMesh::build(2000, 2.0).unwrap();
        let t3 = convexity_threshold(3, &PotentialSpec::Quadratic, &mesh).unwrap();
        assert!((t3 - 1.0 / std::f64::consts::PI).abs() < 1e-4);
        let t2 = convexity_threshold(2, &PotentialSpec::Quadratic, &mesh).unwrap();
        assert!((t2 - 0.41584).abs() < 1e-3);
        assert_eq!(critical_dimension(), 7);
    }

    #[test]
    fn rayleigh_quotient_consistency_and_monotonicity() {
        let prof = vortex(7, 0.5, 1000);
        let mut prev = [f64::NEG_INFINITY; 2];
        for ell in 0..=4 {
            let op = build_sector_operator(&prof, ell).unwrap();
            for (k, weight) in [Weight::Identity, Weight::Hardy].into_iter().enumerate() {
                let res = op.lowest_eigen(weight).unwrap();
                let rq = op.form(&res.eigvec) / op.weight_form(weight, &res.eigvec);
                assert!((rq - res.mu).abs() <= 1e-9 * res.mu.abs().max(1.0));
                assert!(res.mu >= prev[k], "ℓ={ell} {weight:?}");
                prev[k] = res.mu;
            }
        }
    }

    #[test]
    fn pure_hardy_limit_from_above() {
        let mut last = f64::INFINITY;
        for n in [250, 1000, 4000] {
            let op = build_sector_operator(&harmonic(7, n), 0).unwrap();
            let mu = op.lowest_eigen(Weight::Hardy).unwrap().mu;
            assert!(mu > 6.25 && mu < last, "n={n} μ={mu}");
            last = mu;
        }
    }

    #[test]
    fn step3_chain_reconstructs_f() {
        let prof = vortex(7, 0.5, 2000);
        let g = SectorPerturbation::single_angle(8, 1, bump_coefficients(&prof.mesh));
        let chain = verify_step3_chain(&prof, &g).unwrap();
        assert!(chain.discrepancy <= 1e-7, "{chain:?}");
        assert!(chain.cross_term_min_density >= -1e-12);
        assert!(chain.bound_slack >= 0.0);
        let harmonic = harmonic(7, 2000);
        let chain = verify_step3_chain(&harmonic, &g).unwrap();
        assert!(chain.cross_term > 0.0 && chain.discrepancy <= 1e-10, "{chain:?}");
    }

    #[test]
    fn harmonic_map_identity() {
        let mesh = RadialMesh::build(2000, 2.0).unwrap();
        let a: Vec<f64> = mesh.nodes().iter().map(|r| 0.3 * r * (1.0 - r)).collect();
        for (dim, bound) in [(7usize, true), (6, false)] {
            let w = SectorPerturbation::orthogonal(dim + 1, a.clone());
            let rep = harmonic_map_gap(dim, dim + 1, &w, &mesh).unwrap();
            assert!(rep.discrepancy <= 1e-7);
            if bound {
                assert!(rep.bound_slack >= -1e-6);
            }
        }
        let zero = SectorPerturbation::orthogonal(8, vec![0.0; 2001]);
        let rep = harmonic_map_gap(7, 8, &zero, &mesh).unwrap();
        assert_eq!((rep.energy_gap, rep.reduced_form), (0.0, 0.0));
    }

    #[test]
    fn component_does_not_matter() {
        let prof = vortex(7, 0.5, 400);
        let a = random_coefficients(&prof.mesh, 2, 5);
        let mut results = Vec::new();
        for m in [8, 9, 12] {
            let mut v = SectorPerturbation::single_angle(m, 2, a.clone());
            v.component = m;
            let op = sector_operator_for(&prof, &v).unwrap();
            results.push(op.lowest_eigen(Weight::Hardy).unwrap().mu.to_bits());
        }
        assert!(results.windows(2).all(|p| p[0] == p[1]));
    }
}
