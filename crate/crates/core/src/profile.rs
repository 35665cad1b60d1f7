//! Degree-one vortex profile `f` on `[0, 1]`:
//!
//! ```text
//! -f'' - (N-1)/r f' + (N-1)/r² f = f W'(1 - f²) / ε²,   f(0) = 0, f(1) = 1.
//! ```
//!
//! The discretization is the nodal gradient of the discrete radial energy
//! (see [`crate::energy::radial_energy`]): piecewise-linear stiffness with
//! exact `r^{N-1}` element weights, a lumped centrifugal term balanced so
//! that `f(r) = r` is an exact discrete solution, and trapezoid-lumped
//! reaction. Dividing the nodal gradient by the trapezoid mass gives a
//! second-order approximation of the ODE residual, which is what
//! [`profile_residual`] reports.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{Error, Result};
use crate::mesh::{RadialMesh, RadialWeights};
use crate::potential::PotentialSpec;

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Bound on the sup-norm of the discrete ODE residual.
    pub tolerance: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    /// Armijo sufficient-decrease constant on the residual 2-norm.
    pub armijo: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tolerance: 1e-7, max_newton: 200, max_halvings: 30, armijo: 1e-4 }
    }
}

/// A solved (or candidate) vortex profile.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub mesh: RadialMesh,
    pub f: Vec<f64>,
    pub dim: usize,
    /// Coherence length; `f64::INFINITY` drops the reaction term.
    pub eps: f64,
    pub potential: PotentialSpec,
    pub residual_sup: f64,
}

/// `1/ε²`, zero for `ε = ∞`.
pub fn inverse_eps_sq(eps: f64) -> f64 {
    if eps.is_infinite() {
        0.0
    } else {
        1.0 / (eps * eps)
    }
}

/// Formats `ε` the way configs spell it (`inf` for the harmonic case).
pub fn format_eps(eps: f64) -> String {
    if eps.is_infinite() {
        "inf".to_string()
    } else {
        format!("{eps}")
    }
}

struct Discretization<'a> {
    mesh: &'a RadialMesh,
    weights: RadialWeights,
    inv_eps2: f64,
    potential: &'a PotentialSpec,
}

impl<'a> Discretization<'a> {
    fn new(mesh: &'a RadialMesh, dim: usize, eps: f64, potential: &'a PotentialSpec) -> Self {
        Self { mesh, weights: RadialWeights::new(mesh, dim), inv_eps2: inverse_eps_sq(eps), potential }
    }

    /// Nodal energy gradient (zero at the two Dirichlet nodes).
    fn gradient(&self, f: &[f64]) -> Result<Vec<f64>> {
        let r = self.mesh.nodes();
        let n = self.mesh.n();
        let w = &self.weights;
        let mut g = vec![0.0; n + 1];
        for i in 1..n {
            let s_left = (f[i] - f[i - 1]) / (r[i] - r[i - 1]);
            let s_right = (f[i + 1] - f[i]) / (r[i + 1] - r[i]);
            let elastic = (w.flux[i - 1] * s_left - w.flux[i] * s_right) + w.centrifugal[i] * (f[i] / r[i]);
            let reaction = if self.inv_eps2 == 0.0 {
                0.0
            } else {
                w.mass[i] * f[i] * self.potential.eval_dw(1.0 - f[i] * f[i])? * self.inv_eps2
            };
            g[i] = elastic - reaction;
        }
        Ok(g)
    }

    /// Pointwise ODE residual: gradient divided by the lumped mass.
    fn residual(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.gradient(f)?;
        let n = self.mesh.n();
        for i in 1..n {
            g[i] /= self.weights.mass[i];
        }
        Ok(g)
    }

    /// Tridiagonal Hessian of the discrete energy over interior nodes
    /// `1..n` (lower, diagonal, upper; index 0 is node 1).
    fn jacobian(&self, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let r = self.mesh.nodes();
        let n = self.mesh.n();
        let w = &self.weights;
        let m = n - 1;
        let (mut lower, mut diag, mut upper) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for i in 1..n {
            let hl = r[i] - r[i - 1];
            let hr = r[i + 1] - r[i];
            let k = i - 1;
            lower[k] = -w.flux[i - 1] / hl;
            upper[k] = -w.flux[i] / hr;
            let mut d = w.flux[i - 1] / hl + w.flux[i] / hr + w.centrifugal[i] / r[i];
            if self.inv_eps2 != 0.0 {
                let t = 1.0 - f[i] * f[i];
                let slope = self.potential.eval_dw(t)? - 2.0 * f[i] * f[i] * self.potential.dw_slope(t)?;
                d -= w.mass[i] * slope * self.inv_eps2;
            }
            diag[k] = d;
        }
        Ok((lower, diag, upper))
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm).
pub(crate) fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::Numeric("singular tridiagonal system".into()));
    }
    c[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for k in 1..m {
        pivot = diag[k] - lower[k] * c[k - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Numeric(format!("zero pivot at row {k}")));
        }
        c[k] = upper[k] / pivot;
        rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / pivot;
    }
    for k in (0..m - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
    Ok(())
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn validate_inputs(dim: usize, eps: f64) -> Result<()> {
    if dim < 2 {
        return Err(Error::Input(format!("dimension N must be >= 2, got {dim}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Input(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Damped Newton solve of the profile equation from an explicit initial
/// guess (whose end values are overwritten by the boundary conditions).
pub fn solve_profile_from(
    dim: usize,
    eps: f64,
    potential: &PotentialSpec,
    mesh: &RadialMesh,
    opts: &SolveOptions,
    initial: Vec<f64>,
) -> Result<RadialProfile> {
    validate_inputs(dim, eps)?;
    let n = mesh.n();
    if initial.len() != n + 1 {
        return Err(Error::Input("initial guess does not match the mesh".into()));
    }
    let disc = Discretization::new(mesh, dim, eps, potential);
    let mut f = initial;
    f[0] = 0.0;
    f[n] = 1.0;

    let mut res = disc.residual(&f)?;
    let mut norm = two_norm(&res);
    let mut history = vec![sup_norm(&res)];
    let mut converged_at = None;

    for it in 0..opts.max_newton {
        let sup = sup_norm(&res);
        if sup <= opts.tolerance {
            converged_at = Some(it);
            break;
        }
        let (lower, diag, upper) = disc.jacobian(&f)?;
        let mut step: Vec<f64> = disc.gradient(&f)?[1..n].iter().map(|g| -g).collect();
        solve_tridiagonal(&lower, &diag, &upper, &mut step)?;

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let mut trial = f.clone();
            for (k, s) in step.iter().enumerate() {
                trial[k + 1] += lambda * s;
            }
            if let Ok(trial_res) = disc.residual(&trial) {
                let trial_norm = two_norm(&trial_res);
                if trial_norm.is_finite() && trial_norm <= (1.0 - opts.armijo * lambda) * norm {
                    f = trial;
                    res = trial_res;
                    norm = trial_norm;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        history.push(sup_norm(&res));
        if !accepted {
            break;
        }
    }

    if converged_at.is_none() {
        if sup_norm(&res) <= opts.tolerance {
            converged_at = Some(opts.max_newton);
        } else {
            return Err(Error::NoConvergence {
                iterations: history.len() - 1,
                last_residual: sup_norm(&res),
                residual_history: history,
                last_iterate: f,
            });
        }
    }

    // Newton is quadratic here; a couple of extra steps take the nodal
    // gradient down to rounding level, which the energy identities rely on.
    if converged_at != Some(0) {
        for _ in 0..2 {
            let (lower, diag, upper) = disc.jacobian(&f)?;
            let grad = disc.gradient(&f)?;
            let mut step: Vec<f64> = grad[1..n].iter().map(|g| -g).collect();
            solve_tridiagonal(&lower, &diag, &upper, &mut step)?;
            let mut trial = f.clone();
            for (k, s) in step.iter().enumerate() {
                trial[k + 1] += s;
            }
            let trial_grad = disc.gradient(&trial)?;
            if two_norm(&trial_grad) < two_norm(&grad) {
                f = trial;
            } else {
                break;
            }
        }
        res = disc.residual(&f)?;
    }

    let profile = RadialProfile {
        mesh: mesh.clone(),
        f,
        dim,
        eps,
        potential: potential.clone(),
        residual_sup: sup_norm(&res),
    };
    profile.check_invariants(opts.tolerance)?;
    Ok(profile)
}

/// Damped Newton solve from the harmonic guess `f(r) = r`.
pub fn solve_profile(
    dim: usize,
    eps: f64,
    potential: &PotentialSpec,
    mesh: &RadialMesh,
    opts: &SolveOptions,
) -> Result<RadialProfile> {
    solve_profile_from(dim, eps, potential, mesh, opts, mesh.nodes().to_vec())
}

/// Descending-ε ladder used by [`continuation_solve`].
pub fn continuation_ladder(eps_target: f64) -> Vec<f64> {
    if eps_target.is_infinite() || eps_target >= 10.0 {
        return vec![eps_target];
    }
    let mut ladder = Vec::new();
    let mut eps = (10.0 * eps_target).max(10.0);
    while eps > eps_target * 1.5 {
        ladder.push(eps);
        eps *= 0.5;
    }
    ladder.push(eps_target);
    ladder
}

/// Solves along a descending ε ladder, warm-starting each rung from the
/// previous one, beginning from `f(r) = r`.
pub fn continuation_solve(
    dim: usize,
    eps_target: f64,
    potential: &PotentialSpec,
    mesh: &RadialMesh,
    opts: &SolveOptions,
) -> Result<RadialProfile> {
    if !(eps_target > 0.0) {
        return Err(Error::Input(format!("eps must be positive, got {eps_target}")));
    }
    let mut guess = mesh.nodes().to_vec();
    let mut last = None;
    for (rung, eps) in continuation_ladder(eps_target).into_iter().enumerate() {
        let prof = solve_profile_from(dim, eps, potential, mesh, opts, guess)
            .map_err(|e| Error::Continuation { rung, eps, source: Box::new(e) })?;
        guess = prof.f.clone();
        last = Some(prof);
    }
    Ok(last.expect("ladder is never empty"))
}

/// Sup-norm of the discrete ODE residual over interior nodes.
pub fn profile_residual(prof: &RadialProfile) -> Result<f64> {
    let disc = Discretization::new(&prof.mesh, prof.dim, prof.eps, &prof.potential);
    Ok(sup_norm(&disc.residual(&prof.f)?))
}

/// Nodal gradient of the discrete radial energy, without the `|S^{N-1}|`
/// factor.
pub fn energy_gradient(prof: &RadialProfile) -> Result<Vec<f64>> {
    Discretization::new(&prof.mesh, prof.dim, prof.eps, &prof.potential).gradient(&prof.f)
}

impl RadialProfile {
    /// Wraps externally produced nodal values, recomputing the residual.
    pub fn from_values(
        mesh: RadialMesh,
        f: Vec<f64>,
        dim: usize,
        eps: f64,
        potential: PotentialSpec,
    ) -> Result<Self> {
        validate_inputs(dim, eps)?;
        if f.len() != mesh.nodes().len() {
            return Err(Error::Input("profile values do not match the mesh".into()));
        }
        let mut prof = Self { mesh, f, dim, eps, potential, residual_sup: 0.0 };
        prof.residual_sup = profile_residual(&prof)?;
        Ok(prof)
    }

    /// Boundary values, bounds, strict monotonicity and residual.
    pub fn check_invariants(&self, tolerance: f64) -> Result<()> {
        let n = self.mesh.n();
        if self.f[0] != 0.0 || self.f[n] != 1.0 {
            return Err(Error::Postcondition(format!(
                "boundary values f(0) = {}, f(1) = {}",
                self.f[0], self.f[n]
            )));
        }
        if let Some(i) = self.f.iter().position(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Postcondition(format!("f = {} outside [0, 1] at node {i}", self.f[i])));
        }
        if let Some(i) = self.f.windows(2).position(|p| p[1] <= p[0]) {
            return Err(Error::Postcondition(format!("f not strictly increasing at node {i}")));
        }
        if !(self.residual_sup <= tolerance) {
            return Err(Error::Postcondition(format!(
                "residual {:.3e} above tolerance {tolerance:.3e}",
                self.residual_sup
            )));
        }
        Ok(())
    }

    /// Linear interpolation of `f` at `r`.
    pub fn value_at(&self, r: f64) -> f64 {
        let nodes = self.mesh.nodes();
        let k = nodes.partition_point(|&s| s <= r).clamp(1, nodes.len() - 1) - 1;
        let theta = (r - nodes[k]) / (nodes[k + 1] - nodes[k]);
        self.f[k] + theta * (self.f[k + 1] - self.f[k])
    }

    /// Writes `r,f` rows and a JSON sidecar next to `csv_path`.
    pub fn write(&self, csv_path: &Path, config: &serde_json::Value) -> Result<()> {
        let mut out = String::from("r,f\n");
        for (r, f) in self.mesh.nodes().iter().zip(&self.f) {
            out.push_str(&format!("{r:.16e},{f:.16e}\n"));
        }
        std::fs::write(csv_path, out)?;
        let sidecar = json!({
            "N": self.dim,
            "eps": format_eps(self.eps),
            "potential": self.potential.to_string(),
            "n": self.mesh.n(),
            "grading": self.mesh.grading(),
            "residual_sup": self.residual_sup,
            "config": config,
        });
        std::fs::write(sidecar_path(csv_path), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }

    /// Reads a profile written by [`RadialProfile::write`]. Tabulated
    /// potentials cannot be recovered from the sidecar, so `potential`
    /// overrides the recorded selector when given.
    pub fn read(csv_path: &Path, potential: Option<PotentialSpec>) -> Result<Self> {
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(sidecar_path(csv_path))?)?;
        let field = |k: &str| meta.get(k).ok_or_else(|| Error::Input(format!("sidecar lacks `{k}`")));
        let dim = field("N")?.as_u64().ok_or_else(|| Error::Input("bad N".into()))? as usize;
        let n = field("n")?.as_u64().ok_or_else(|| Error::Input("bad n".into()))? as usize;
        let grading = field("grading")?.as_f64().ok_or_else(|| Error::Input("bad grading".into()))?;
        let eps = parse_eps(field("eps")?.as_str().ok_or_else(|| Error::Input("bad eps".into()))?)?;
        let potential = match potential {
            Some(p) => p,
            None => PotentialSpec::parse(
                field("potential")?.as_str().ok_or_else(|| Error::Input("bad potential".into()))?,
            )?,
        };
        let mesh = RadialMesh::build(n, grading)?;

        let mut reader = csv::Reader::from_path(csv_path)?;
        let (mut r, mut f) = (Vec::new(), Vec::new());
        for rec in reader.records() {
            let rec = rec?;
            let get = |k: usize| -> Result<f64> {
                rec.get(k)
                    .unwrap_or("")
                    .parse::<f64>()
                    .map_err(|e| Error::Input(format!("{}: {e}", csv_path.display())))
            };
            r.push(get(0)?);
            f.push(get(1)?);
        }
        if r.len() != mesh.nodes().len() || r.iter().zip(mesh.nodes()).any(|(a, b)| a != b) {
            return Err(Error::Input(format!("{}: nodes do not match the recorded mesh", csv_path.display())));
        }
        Self::from_values(mesh, f, dim, eps, potential)
    }
}

/// `profile.csv` → `profile.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Parses a positive ε, accepting `inf`.
pub fn parse_eps(s: &str) -> Result<f64> {
    let s = s.trim();
    let eps = if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        f64::INFINITY
    } else {
        s.parse::<f64>().map_err(|e| Error::Config(format!("bad eps `{s}`: {e}")))?
    };
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got `{s}`")));
    }
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> RadialMesh {
        RadialMesh::build(2000, 2.0).unwrap()
    }

    #[test]
    fn harmonic_case_is_exact() {
        let mesh = mesh();
        for dim in [2, 3, 7, 10] {
            let p = solve_profile(dim, f64::INFINITY, &PotentialSpec::Quadratic, &mesh, &SolveOptions::default()).unwrap();
            let dev = p.f.iter().zip(mesh.nodes()).map(|(f, r)| (f - r).abs()).fold(0.0, f64::max);
            assert!(dev <= 1e-12);
            assert!(p.residual_sup <= 1e-12);
        }
    }

    #[test]
    fn residual_of_identity_with_reaction() {
        let mesh = mesh();
        let prof = RadialProfile::from_values(mesh.clone(), mesh.nodes().to_vec(), 7, 1.0, PotentialSpec::Quadratic).unwrap();
        let expected = 2.0 / (3.0 * 3.0f64.sqrt());
        assert!((prof.residual_sup - expected).abs() < 1e-6, "{}", prof.residual_sup);
    }

    #[test]
    fn converged_profile_invariants() {
        let p = solve_profile(7, 0.5, &PotentialSpec::Quadratic, &mesh(), &SolveOptions::default()).unwrap();
        assert!(p.residual_sup <= 1e-7);
        assert!((profile_residual(&p).unwrap() - p.residual_sup).abs() <= 1e-15);
        assert!(p.f.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn small_eps_bulk_near_one() {
        let p = continuation_solve(7, 0.05, &PotentialSpec::Quadratic, &mesh(), &SolveOptions::default()).unwrap();
        assert!(p.value_at(0.5) > 0.9);
    }

    #[test]
    fn ladder_shape() {
        assert_eq!(continuation_ladder(10.0), vec![10.0]);
        assert_eq!(continuation_ladder(f64::INFINITY), vec![f64::INFINITY]);
        let l = continuation_ladder(0.05);
        assert_eq!(l[0], 10.0);
        assert_eq!(*l.last().unwrap(), 0.05);
        assert!(l.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(continuation_ladder(2.0)[0], 20.0);
    }

    #[test]
    fn continuation_matches_direct() {
        let mesh = mesh();
        let opts = SolveOptions::default();
        for eps in [10.0, 0.5] {
            let a = solve_profile(7, eps, &PotentialSpec::Quadratic, &mesh, &opts).unwrap();
            let b = continuation_solve(7, eps, &PotentialSpec::Quadratic, &mesh, &opts).unwrap();
            let d = a.f.iter().zip(&b.f).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(d <= 1e-10, "eps {eps}: {d}");
        }
    }

    #[test]
    fn bad_inputs() {
        let mesh = mesh();
        let o = SolveOptions::default();
        assert!(matches!(solve_profile(1, 1.0, &PotentialSpec::Quadratic, &mesh, &o), Err(Error::Input(_))));
        assert!(matches!(solve_profile(3, 0.0, &PotentialSpec::Quadratic, &mesh, &o), Err(Error::Input(_))));
        assert!(parse_eps("inf").unwrap().is_infinite());
        assert!(parse_eps("-1").is_err());
    }

    #[test]
    fn non_convergence_reports_history() {
        let o = SolveOptions { max_newton: 1, ..SolveOptions::default() };
        match solve_profile(7, 0.05, &PotentialSpec::Quadratic, &mesh(), &o) {
            Err(Error::NoConvergence { residual_history, last_iterate, .. }) => {
                assert_eq!(residual_history.len(), 2);
                assert_eq!(last_iterate.len(), 2001);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn write_read_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let mesh = RadialMesh::build(64, 2.0).unwrap();
        let p = solve_profile(7, 0.5, &PotentialSpec::huber(0.1).unwrap(), &mesh, &SolveOptions::default()).unwrap();
        p.write(&path, &serde_json::json!({})).unwrap();
        let q = RadialProfile::read(&path, None).unwrap();
        assert_eq!(p.f, q.f);
        assert_eq!(q.eps, 0.5);
        assert_eq!(q.residual_sup, p.residual_sup);
    }
}
