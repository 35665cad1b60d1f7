//! Reference solutions computed by methods unrelated to the main solvers:
//! a shooting method for the profile equation and power-series Bessel
//! functions for the Dirichlet eigenvalues of the ball.

use crate::error::{Error, Result};
use crate::mesh::gamma_half_integer;
use crate::potential::PotentialSpec;
use crate::profile::inverse_eps_sq;

/// Starting radius of the shooting integration.
pub const SHOOTING_START: f64 = 1e-6;

/// Shooting solution of the profile equation.
#[derive(Clone, Debug)]
pub struct ShootingSolution {
    /// Slope at the origin, `f ≈ slope · r`.
    pub slope: f64,
    /// Correction coefficient in `f ≈ slope·r + cubic·r³`.
    pub cubic: f64,
    s: Vec<f64>,
    f: Vec<f64>,
    fs: Vec<f64>,
}

impl ShootingSolution {
    /// Profile value at `r ∈ [0, 1]` (cubic Hermite interpolation in `ln r`).
    pub fn value_at(&self, r: f64) -> f64 {
        if r <= SHOOTING_START {
            return self.slope * r + self.cubic * r * r * r;
        }
        let s = r.ln().min(0.0);
        let ds = self.s[1] - self.s[0];
        let k = (((s - self.s[0]) / ds).floor() as usize).min(self.s.len() - 2);
        let t = (s - self.s[k]) / ds;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
            t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        );
        h00 * self.f[k] + h10 * ds * self.fs[k] + h01 * self.f[k + 1] + h11 * ds * self.fs[k + 1]
    }

    pub fn value_at_one(&self) -> f64 {
        *self.f.last().unwrap()
    }
}

struct Shooter<'a> {
    dim: f64,
    inv_eps2: f64,
    potential: &'a PotentialSpec,
    steps: usize,
}

impl Shooter<'_> {
    // In s = ln r: f_ss = -(N-2) f_s + (N-1) f - e^{2s} f W'(1-f²)/ε².
    fn rhs(&self, s: f64, f: f64, fs: f64) -> Option<(f64, f64)> {
        let reaction = if self.inv_eps2 == 0.0 {
            0.0
        } else {
            (2.0 * s).exp() * f * self.potential.eval_dw(1.0 - f * f).ok()? * self.inv_eps2
        };
        Some((fs, -(self.dim - 2.0) * fs + (self.dim - 1.0) * f - reaction))
    }

    fn start(&self, slope: f64) -> (f64, f64) {
        let r0 = SHOOTING_START;
        let cubic = self.cubic(slope);
        (slope * r0 + cubic * r0.powi(3), slope * r0 + 3.0 * cubic * r0.powi(3))
    }

    fn cubic(&self, slope: f64) -> f64 {
        let dw1 = self.potential.eval_dw(1.0).unwrap_or(0.0);
        -slope * dw1 * self.inv_eps2 / (2.0 * (self.dim + 2.0))
    }

    /// Integrates to r = 1. `None` when the trajectory leaves `|f| <= 2`.
    fn integrate(&self, slope: f64, keep: bool) -> Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let s0 = SHOOTING_START.ln();
        let ds = -s0 / self.steps as f64;
        let (mut f, mut fs) = self.start(slope);
        let (mut ss, mut fv, mut fsv) = (Vec::new(), Vec::new(), Vec::new());
        if keep {
            ss.reserve(self.steps + 1);
            ss.push(s0);
            fv.push(f);
            fsv.push(fs);
        }
        for k in 0..self.steps {
            let s = s0 + k as f64 * ds;
            let (k1f, k1g) = self.rhs(s, f, fs)?;
            let (k2f, k2g) = self.rhs(s + 0.5 * ds, f + 0.5 * ds * k1f, fs + 0.5 * ds * k1g)?;
            let (k3f, k3g) = self.rhs(s + 0.5 * ds, f + 0.5 * ds * k2f, fs + 0.5 * ds * k2g)?;
            let (k4f, k4g) = self.rhs(s + ds, f + ds * k3f, fs + ds * k3g)?;
            f += ds / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
            fs += ds / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
            if !(f.abs() <= 2.0) {
                return None;
            }
            if keep {
                ss.push(s0 + (k + 1) as f64 * ds);
                fv.push(f);
                fsv.push(fs);
            }
        }
        Some((f, ss, fv, fsv))
    }
}

/// Solves the profile equation by RK4 shooting in `ln r` from
/// [`SHOOTING_START`] and bisection on the slope at the origin.
pub fn shoot_profile(dim: usize, eps: f64, potential: &PotentialSpec, steps: usize) -> Result<ShootingSolution> {
    let shooter = Shooter { dim: dim as f64, inv_eps2: inverse_eps_sq(eps), potential, steps };
    let overshoots = |a: f64| match shooter.integrate(a, false) {
        Some((f1, ..)) => f1 > 1.0,
        None => true,
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while !overshoots(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::Numeric("shooting bracket not found".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if overshoots(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (_, s, f, fs) = shooter
        .integrate(lo, true)
        .ok_or_else(|| Error::Numeric("shooting trajectory escaped".into()))?;
    Ok(ShootingSolution { slope: lo, cubic: shooter.cubic(lo), s, f, fs })
}

/// Bessel function `J_ν(x)` by its power series (ν a multiple of 1/2,
/// moderate `x`).
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powf(nu) / gamma_half_integer(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= -half * half / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// First positive zero of `J_ν`, by scanning and bisection.
pub fn first_bessel_zero(nu: f64) -> f64 {
    let mut a = 0.5;
    let mut b = a + 0.05;
    while bessel_j(nu, a).signum() == bessel_j(nu, b).signum() {
        a = b;
        b += 0.05;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if bessel_j(nu, a).signum() == bessel_j(nu, m).signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// First Dirichlet eigenvalue of `-Δ` on `B^N`: `j_{N/2-1,1}²`.
pub fn ball_dirichlet_eigenvalue(dim: usize) -> f64 {
    first_bessel_zero(dim as f64 / 2.0 - 1.0).powi(2)
}
