//! Convex Ginzburg-Landau potentials `W` on `(-inf, 1]`.
//!
//! The energy density is `½|∇u|² + W(1 - |u|²) / (2ε²)`, so only `W` and
//! its derivative are ever needed. Three kinds are supported: the classical
//! quadratic `t²/2`, a Huber potential which is C¹ and convex but flat in
//! curvature outside `[-δ, δ]`, and a user-supplied table.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default half-width of the admissibility sampling window `[-T, 1]`.
pub const DEFAULT_SAMPLING_WINDOW: f64 = 3.0;

/// Step of the symmetric difference used in place of `W''`.
const SLOPE_STEP: f64 = 1e-6;

/// A tabulated potential, linearly interpolated between grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPotential {
    t: Vec<f64>,
    w: Vec<f64>,
    dw: Vec<f64>,
}

impl SampledPotential {
    pub fn new(t: Vec<f64>, w: Vec<f64>, dw: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != w.len() || t.len() != dw.len() {
            return Err(Error::Input(
                "sampled potential needs at least two (t, W, dW) rows of equal length".into(),
            ));
        }
        if t.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Input("sampled potential grid must be strictly increasing".into()));
        }
        if *t.last().unwrap() > 1.0 {
            return Err(Error::Input("sampled potential grid extends beyond t = 1".into()));
        }
        if t.iter().chain(&w).chain(&dw).any(|v| !v.is_finite()) {
            return Err(Error::Input("sampled potential contains non-finite values".into()));
        }
        Ok(Self { t, w, dw })
    }

    /// Reads a CSV file with header `t,W,dW`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let names: Vec<&str> = headers.iter().map(str::trim).collect();
        if names != ["t", "W", "dW"] {
            return Err(Error::Input(format!(
                "{}: expected header `t,W,dW`, found `{}`",
                path.display(),
                names.join(",")
            )));
        }
        let (mut t, mut w, mut dw) = (Vec::new(), Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record?;
            let parse = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .map(str::trim)
                    .unwrap_or("")
                    .parse::<f64>()
                    .map_err(|e| Error::Input(format!("{}: {e}", path.display())))
            };
            t.push(parse(0)?);
            w.push(parse(1)?);
            dw.push(parse(2)?);
        }
        Self::new(t, w, dw)
    }

    pub fn grid(&self) -> &[f64] {
        &self.t
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let (lo, hi) = (self.t[0], *self.t.last().unwrap());
        if !(lo..=hi).contains(&t) {
            return Err(Error::Input(format!(
                "t = {t} outside the sampled range [{lo}, {hi}]"
            )));
        }
        let k = match self.t.partition_point(|&s| s <= t) {
            0 => 0,
            k if k >= self.t.len() => self.t.len() - 2,
            k => k - 1,
        };
        let theta = (t - self.t[k]) / (self.t[k + 1] - self.t[k]);
        Ok((k, theta))
    }

    fn interp(values: &[f64], k: usize, theta: f64) -> f64 {
        values[k] + theta * (values[k + 1] - values[k])
    }
}

/// Which potential to use.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    /// `W(t) = t²/2`.
    Quadratic,
    /// `W(t) = t²/2` for `|t| <= delta`, `delta|t| - delta²/2` otherwise.
    Huber { delta: f64 },
    CustomSampled(SampledPotential),
}

impl PotentialSpec {
    pub fn huber(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Input(format!("Huber delta must be positive, got {delta}")));
        }
        Ok(Self::Huber { delta })
    }

    /// Parses `quadratic`, `huber:<delta>` or `file:<path>`.
    pub fn parse(selector: &str) -> Result<Self> {
        let s = selector.trim();
        if s == "quadratic" {
            Ok(Self::Quadratic)
        } else if let Some(d) = s.strip_prefix("huber:") {
            let delta = d
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad Huber delta `{d}`: {e}")))?;
            Self::huber(delta).map_err(|e| Error::Config(e.to_string()))
        } else if let Some(path) = s.strip_prefix("file:") {
            Ok(Self::CustomSampled(SampledPotential::from_csv(Path::new(path.trim()))?))
        } else {
            Err(Error::Config(format!(
                "unknown potential `{s}` (expected quadratic, huber:<delta> or file:<path>)"
            )))
        }
    }

    /// `W(t)`.
    pub fn eval_w(&self, t: f64) -> Result<f64> {
        check_domain(t)?;
        Ok(match self {
            Self::Quadratic => 0.5 * t * t,
            Self::Huber { delta } => {
                if t.abs() <= *delta {
                    0.5 * t * t
                } else {
                    delta * t.abs() - 0.5 * delta * delta
                }
            }
            Self::CustomSampled(s) => {
                let (k, theta) = s.locate(t)?;
                SampledPotential::interp(&s.w, k, theta)
            }
        })
    }

    /// `W'(t)`.
    pub fn eval_dw(&self, t: f64) -> Result<f64> {
        check_domain(t)?;
        Ok(match self {
            Self::Quadratic => t,
            Self::Huber { delta } => t.clamp(-delta, *delta),
            Self::CustomSampled(s) => {
                let (k, theta) = s.locate(t)?;
                SampledPotential::interp(&s.dw, k, theta)
            }
        })
    }

    /// Second-order Taylor remainder `W(t-d) - W(t) + W'(t) d`, in closed
    /// form wherever `W` is quadratic so small increments keep full
    /// relative precision.
    pub fn taylor_remainder(&self, t: f64, d: f64) -> Result<f64> {
        check_domain(t)?;
        check_domain(t - d)?;
        match self {
            Self::Quadratic => Ok(0.5 * d * d),
            Self::Huber { delta } if t.abs() <= *delta && (t - d).abs() <= *delta => Ok(0.5 * d * d),
            _ => Ok(self.eval_w(t - d)? - self.eval_w(t)? + self.eval_dw(t)? * d),
        }
    }

    /// Finite-difference slope of `W'` at `t`, clamped to the domain.
    ///
    /// Stands in for `W''` in Newton linearizations; it exists for
    /// potentials with a kink in `W'` as well.
    pub fn dw_slope(&self, t: f64) -> Result<f64> {
        let hi = (t + SLOPE_STEP).min(1.0);
        let mut lo = t - SLOPE_STEP;
        if let Self::CustomSampled(s) = self {
            lo = lo.max(s.t[0]);
        }
        Ok((self.eval_dw(hi)? - self.eval_dw(lo)?) / (hi - lo))
    }

    /// Leftmost point where the potential can be evaluated.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Self::CustomSampled(s) => s.t[0],
            _ => f64::NEG_INFINITY,
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic => write!(f, "quadratic"),
            Self::Huber { delta } => write!(f, "huber:{delta}"),
            Self::CustomSampled(s) => write!(f, "sampled[{} points]", s.t.len()),
        }
    }
}

fn check_domain(t: f64) -> Result<()> {
    if t.is_nan() || t > 1.0 {
        Err(Error::Input(format!("potential argument {t} outside (-inf, 1]")))
    } else {
        Ok(())
    }
}

/// Outcome of one admissibility hypothesis.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Most negative margin seen (>= 0 when the hypothesis holds).
    pub worst_margin: f64,
    /// Sample point(s) of the first violation in increasing `t`.
    pub first_violation: Option<Vec<f64>>,
    /// Sample point(s) of the worst violation.
    pub worst_violation: Option<Vec<f64>>,
}

impl HypothesisCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: true,
            worst_margin: f64::INFINITY,
            first_violation: None,
            worst_violation: None,
        }
    }

    fn record(&mut self, margin: f64, tol: f64, at: &[f64]) {
        if margin < self.worst_margin {
            self.worst_margin = margin;
            if margin < -tol {
                self.worst_violation = Some(at.to_vec());
            }
        }
        if margin < -tol {
            self.passed = false;
            if self.first_violation.is_none() {
                self.first_violation = Some(at.to_vec());
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub samples: Vec<f64>,
    pub zero_at_origin: HypothesisCheck,
    pub positivity: HypothesisCheck,
    pub secant_convexity: HypothesisCheck,
    pub monotone_derivative: HypothesisCheck,
}

impl AdmissibilityReport {
    pub fn all_passed(&self) -> bool {
        self.zero_at_origin.passed
            && self.positivity.passed
            && self.secant_convexity.passed
            && self.monotone_derivative.passed
    }
}

/// Checks `W(0) = 0`, `W > 0` away from 0, secant convexity and monotone
/// `W'` on `n_samples` seeded points of `[-window, 1]` (plus `0` and `1`).
///
/// Tabulated potentials are checked on their own grid instead, which is
/// where the piecewise-linear interpolant can fail.
pub fn check_admissible(
    p: &PotentialSpec,
    n_samples: usize,
    seed: u64,
    window: f64,
) -> Result<AdmissibilityReport> {
    if n_samples < 3 {
        return Err(Error::Input("admissibility check needs at least 3 samples".into()));
    }
    let mut samples = match p {
        PotentialSpec::CustomSampled(s) => s.t.iter().copied().filter(|&t| t >= -window).collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v: Vec<f64> = (0..n_samples).map(|_| rng.gen_range(-window..=1.0)).collect();
            v.extend([0.0, 1.0, -window]);
            v
        }
    };
    samples.sort_by(f64::total_cmp);
    samples.dedup();

    let w: Vec<f64> = samples.iter().map(|&t| p.eval_w(t)).collect::<Result<_>>()?;
    let dw: Vec<f64> = samples.iter().map(|&t| p.eval_dw(t)).collect::<Result<_>>()?;

    let mut zero = HypothesisCheck::new("W(0) = 0");
    if p.lower_bound() <= 0.0 {
        let w0 = p.eval_w(0.0)?;
        zero.record(-w0.abs(), 0.0, &[0.0]);
    }

    let mut positivity = HypothesisCheck::new("W(t) > 0 for t != 0");
    for (&t, &wt) in samples.iter().zip(&w) {
        if t != 0.0 {
            // Strict positivity: zero counts as a violation.
            let margin = if wt > 0.0 { wt } else { wt.min(-f64::MIN_POSITIVE) };
            positivity.record(margin, 0.0, &[t]);
        }
    }

    let mut convexity = HypothesisCheck::new("secant slopes nondecreasing");
    for k in 0..samples.len().saturating_sub(2) {
        let (t1, t2, t3) = (samples[k], samples[k + 1], samples[k + 2]);
        let s12 = (w[k + 1] - w[k]) / (t2 - t1);
        let s23 = (w[k + 2] - w[k + 1]) / (t3 - t2);
        // rounding of each secant slope is about eps·|W| / Δt
        let tol = 64.0
            * f64::EPSILON
            * (s12.abs()
                + s23.abs()
                + (w[k].abs() + w[k + 1].abs()) / (t2 - t1)
                + (w[k + 1].abs() + w[k + 2].abs()) / (t3 - t2));
        convexity.record(s23 - s12, tol, &[t1, t2, t3]);
    }

    let mut monotone = HypothesisCheck::new("W' nondecreasing");
    for k in 0..samples.len() - 1 {
        let tol = 16.0 * f64::EPSILON * (dw[k].abs() + dw[k + 1].abs());
        monotone.record(dw[k + 1] - dw[k], tol, &[samples[k], samples[k + 1]]);
    }

    Ok(AdmissibilityReport {
        samples,
        zero_at_origin: zero,
        positivity,
        secant_convexity: convexity,
        monotone_derivative: monotone,
    })
}
