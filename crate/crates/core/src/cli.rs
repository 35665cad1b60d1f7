//! Command-line front end: parameter sweeps, certification and
//! verification runs writing deterministic CSV/JSON artifacts.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check or solver
//! error, 2 on a configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::energy::{
    compute_c_n, energy_gap, quartic_remainder, verify_step2_identity, EnergyReport,
};
use crate::error::{Error, Result};
use crate::mesh::{ball_volume, integrate_radial, sphere_area, RadialMesh};
use crate::oracle::{ball_dirichlet_eigenvalue, first_bessel_zero, shoot_profile};
use crate::perturbation::{
    bump_coefficients, random_bump_coefficients, random_coefficients, Family, SectorPerturbation,
};
use crate::potential::{check_admissible, PotentialSpec, DEFAULT_SAMPLING_WINDOW};
use crate::profile::{continuation_solve, format_eps, parse_eps, RadialProfile, SolveOptions};
use crate::spectral::{
    build_sector_operator, convexity_threshold, critical_dimension, cross_term_density, dirichlet_eigenvalue,
    harmonic_map_gap, hardy_gap, verify_step3_chain, Weight,
};

/// Smallest admissible value of any nodal cross-term density.
const CROSS_TERM_FLOOR: f64 = -1e-12;
/// Angular indices of the identity suites.
const SUITE_ELLS: [usize; 3] = [0, 1, 2];
/// Seeded test functions per `ℓ` in the factorization chain suite.
const CHAIN_SAMPLES: u64 = 5;
/// RK4 steps of the shooting oracle.
const SHOOTING_STEPS: usize = 40_000;

#[derive(Parser, Debug)]
#[command(name = "glvortex", version, about = "Radial Ginzburg-Landau vortices: profiles, spectra and minimality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve profiles over the (N, eps) grid.
    Profile(GridArgs),
    /// Certify the Hardy gap and energy inequalities (N >= 7 only).
    Certify(GridArgs),
    /// Report margins for any N without asserting signs.
    Explore(GridArgs),
    /// Run the invariant and oracle suite, or replay a profile file.
    Verify {
        #[command(flatten)]
        grid: GridArgs,
        /// Check a previously written profile CSV instead.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Energy gap of one seeded perturbation (JSON on stdout).
    EnergyGap {
        #[command(flatten)]
        grid: GridArgs,
        /// radial_aligned | orthogonal_component | single_angle
        #[arg(long, default_value = "orthogonal_component")]
        family: String,
        #[arg(long)]
        ell: Option<usize>,
        /// Target dimension M (default N + 1).
        #[arg(long)]
        target_dim: Option<usize>,
    },
    /// Lowest sector eigenvalues (CSV on stdout).
    Spectrum {
        #[command(flatten)]
        grid: GridArgs,
        /// identity | hardy
        #[arg(long, default_value = "hardy")]
        weight: String,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct GridArgs {
    /// Flat TOML config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimensions, comma separated (config key `N_list`).
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Coherence lengths, comma separated; `inf` allowed (config key `eps_list`).
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<String>>,
    /// Log-spaced eps grid `min:max:count`; replaces the eps list.
    #[arg(long)]
    eps_log: Option<String>,
    /// quadratic | huber:<delta> | file:<path>
    #[arg(long)]
    potential: Option<String>,
    /// Number of mesh intervals.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    grading: Option<f64>,
    #[arg(long)]
    ell_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, short = 'o')]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    tol_solve: Option<f64>,
    #[arg(long)]
    tol_identity: Option<f64>,
    #[arg(long)]
    tol_chain: Option<f64>,
    #[arg(long)]
    tol_inequality: Option<f64>,
    #[arg(long)]
    tol_exact: Option<f64>,
    #[arg(long)]
    tol_hardy: Option<f64>,
    #[arg(long)]
    step1_count: Option<u64>,
    #[arg(long)]
    step2_count: Option<u64>,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub n_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub eps_log: Option<String>,
    pub potential: String,
    pub n: usize,
    pub grading: f64,
    pub ell_max: usize,
    pub seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
    /// Newton residual bound.
    pub tol_solve: f64,
    /// Relative discrepancy of the `v = f w` identity.
    pub tol_identity: f64,
    /// Relative discrepancy of the `w = φ g` chain and the harmonic-map
    /// identity.
    pub tol_chain: f64,
    /// Slack allowed in `gap ≥ F/2` and `F ≥ c_N ∫v²/r²`.
    pub tol_inequality: f64,
    /// Relative error of the quartic remainder for the quadratic potential.
    pub tol_exact: f64,
    /// Slack allowed in `min μ ≥ c_N`.
    pub tol_hardy: f64,
    pub step1_count: u64,
    pub step2_count: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_list: vec![7],
            eps_list: vec![0.5],
            eps_log: None,
            potential: "quadratic".into(),
            n: 2000,
            grading: 2.0,
            ell_max: 10,
            seed: 0,
            workers: 0,
            output_dir: PathBuf::from("out"),
            tol_solve: 1e-7,
            tol_identity: 1e-8,
            tol_chain: 1e-7,
            tol_inequality: 1e-10,
            tol_exact: 1e-9,
            tol_hardy: 5e-3,
            step1_count: 50,
            step2_count: 20,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn log_spaced(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || config_err(format!("eps_log must be `min:max:count`, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || count < 2 {
        return Err(bad());
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|k| match k {
            0 => lo,
            k if k == count - 1 => hi,
            // 12 significant digits keep file names and labels readable
            k => format!("{:.11e}", (a + (b - a) * k as f64 / (count - 1) as f64).exp()).parse().unwrap(),
        })
        .collect())
}

impl ScanConfig {
    /// Defaults, then the config file, then command-line flags.
    fn resolve(defaults: ScanConfig, args: &GridArgs) -> Result<Self> {
        let mut cfg = defaults;
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            let table: toml::Table =
                text.parse().map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            cfg.apply_table(&table)?;
        }
        cfg.apply_args(args)?;
        cfg.finish()
    }

    fn apply_table(&mut self, table: &toml::Table) -> Result<()> {
        use toml::Value as T;
        let int = |k: &str, v: &T| -> Result<u64> {
            v.as_integer()
                .filter(|i| *i >= 0)
                .map(|i| i as u64)
                .ok_or_else(|| config_err(format!("`{k}` must be a non-negative integer")))
        };
        let float = |k: &str, v: &T| -> Result<f64> {
            v.as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .ok_or_else(|| config_err(format!("`{k}` must be a number")))
        };
        let string = |k: &str, v: &T| -> Result<String> {
            v.as_str().map(str::to_string).ok_or_else(|| config_err(format!("`{k}` must be a string")))
        };
        for (key, value) in table {
            match key.as_str() {
                "N_list" => {
                    let arr = value.as_array().ok_or_else(|| config_err("`N_list` must be an array"))?;
                    self.n_list = arr.iter().map(|v| Ok(int(key, v)? as usize)).collect::<Result<_>>()?;
                }
                "eps_list" => {
                    let arr = value.as_array().ok_or_else(|| config_err("`eps_list` must be an array"))?;
                    self.eps_list = arr
                        .iter()
                        .map(|v| match v {
                            T::String(s) => parse_eps(s),
                            _ => parse_eps(&float(key, v)?.to_string()),
                        })
                        .collect::<Result<_>>()?;
                }
                "eps_log" => self.eps_log = Some(string(key, value)?),
                "potential" => self.potential = string(key, value)?,
                "n" => self.n = int(key, value)? as usize,
                "grading" => self.grading = float(key, value)?,
                "ell_max" => self.ell_max = int(key, value)? as usize,
                "seed" => self.seed = int(key, value)?,
                "workers" => self.workers = int(key, value)? as usize,
                "output_dir" => self.output_dir = PathBuf::from(string(key, value)?),
                "tol_solve" => self.tol_solve = float(key, value)?,
                "tol_identity" => self.tol_identity = float(key, value)?,
                "tol_chain" => self.tol_chain = float(key, value)?,
                "tol_inequality" => self.tol_inequality = float(key, value)?,
                "tol_exact" => self.tol_exact = float(key, value)?,
                "tol_hardy" => self.tol_hardy = float(key, value)?,
                "step1_count" => self.step1_count = int(key, value)?,
                "step2_count" => self.step2_count = int(key, value)?,
                other => return Err(config_err(format!("unknown config key `{other}`"))),
            }
        }
        Ok(())
    }

    fn apply_args(&mut self, a: &GridArgs) -> Result<()> {
        if let Some(v) = &a.dims {
            self.n_list = v.clone();
        }
        if let Some(v) = &a.eps {
            self.eps_list = v.iter().map(|s| parse_eps(s)).collect::<Result<_>>()?;
            self.eps_log = None;
        }
        macro_rules! take {
            ($($field:ident),*) => {$(if let Some(v) = &a.$field { self.$field = v.clone(); })*};
        }
        take!(potential, n, grading, ell_max, seed, workers, output_dir, tol_solve, tol_identity, tol_chain);
        take!(tol_inequality, tol_exact, tol_hardy, step1_count, step2_count);
        if let Some(v) = &a.eps_log {
            self.eps_log = Some(v.clone());
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Self> {
        if let Some(spec) = &self.eps_log {
            self.eps_list = log_spaced(spec)?;
        }
        self.n_list.sort_unstable();
        self.n_list.dedup();
        self.eps_list.sort_by(f64::total_cmp);
        self.eps_list.dedup();
        if self.n_list.is_empty() || self.eps_list.is_empty() {
            return Err(config_err("N_list and eps_list must be nonempty"));
        }
        if let Some(&d) = self.n_list.iter().find(|&&d| d < 2) {
            return Err(config_err(format!("dimension {d} is below 2")));
        }
        if let Some(e) = self.eps_list.iter().find(|e| !(**e > 0.0)) {
            return Err(config_err(format!("eps {e} is not positive")));
        }
        let tols = [
            ("tol_solve", self.tol_solve),
            ("tol_identity", self.tol_identity),
            ("tol_chain", self.tol_chain),
            ("tol_inequality", self.tol_inequality),
            ("tol_exact", self.tol_exact),
            ("tol_hardy", self.tol_hardy),
        ];
        if let Some((k, v)) = tols.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(config_err(format!("`{k}` must be positive, got {v}")));
        }
        if self.ell_max < 2 {
            return Err(config_err(format!("ell_max must be at least 2, got {}", self.ell_max)));
        }
        Ok(self)
    }

    /// The resolved configuration as embedded in every JSON artifact.
    pub fn to_json(&self) -> Value {
        json!({
            "N_list": self.n_list,
            "eps_list": self.eps_list.iter().map(|e| format_eps(*e)).collect::<Vec<_>>(),
            "eps_log": self.eps_log,
            "potential": self.potential,
            "n": self.n,
            "grading": self.grading,
            "ell_max": self.ell_max,
            "seed": self.seed,
            "workers": self.workers,
            "output_dir": self.output_dir.display().to_string(),
            "tol_solve": self.tol_solve,
            "tol_identity": self.tol_identity,
            "tol_chain": self.tol_chain,
            "tol_inequality": self.tol_inequality,
            "tol_exact": self.tol_exact,
            "tol_hardy": self.tol_hardy,
            "step1_count": self.step1_count,
            "step2_count": self.step2_count,
        })
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions { tolerance: self.tol_solve, ..SolveOptions::default() }
    }

    fn mesh(&self) -> Result<RadialMesh> {
        RadialMesh::build(self.n, self.grading)
    }

    fn potential(&self) -> Result<PotentialSpec> {
        PotentialSpec::parse(&self.potential)
    }

    fn grid(&self) -> Vec<(usize, f64)> {
        self.n_list.iter().flat_map(|&d| self.eps_list.iter().map(move |&e| (d, e))).collect()
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Numeric(format!("worker pool: {e}")))
    }
}

/// Float formatting shared by all CSV outputs: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn case_stem(dim: usize, eps: f64) -> String {
    format!("N{dim}_eps{}", format_eps(eps))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<()> {
    write_text(dir, name, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Profile(grid) => cmd_profile(&grid),
        Command::Certify(grid) => cmd_certify(&grid),
        Command::Explore(grid) => cmd_explore(&grid),
        Command::Verify { grid, replay } => cmd_verify(&grid, replay.as_deref()),
        Command::EnergyGap { grid, family, ell, target_dim } => cmd_energy_gap(&grid, &family, ell, target_dim),
        Command::Spectrum { grid, weight } => cmd_spectrum(&grid, &weight),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn prepare(defaults: ScanConfig, args: &GridArgs) -> Result<(ScanConfig, RadialMesh, PotentialSpec)> {
    let cfg = ScanConfig::resolve(defaults, args)?;
    let mesh = cfg.mesh()?;
    let potential = cfg.potential()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    Ok((cfg, mesh, potential))
}

fn cmd_profile(args: &GridArgs) -> Result<i32> {
    let (cfg, mesh, potential) = prepare(ScanConfig::default(), args)?;
    let opts = cfg.solve_options();
    let results: Vec<Result<RadialProfile>> = cfg.pool()?.install(|| {
        cfg.grid()
            .par_iter()
            .map(|&(dim, eps)| {
                let prof = continuation_solve(dim, eps, &potential, &mesh, &opts)?;
                prof.check_invariants(cfg.tol_solve)?;
                Ok(prof)
            })
            .collect()
    });
    let config = cfg.to_json();
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    for ((dim, eps), res) in cfg.grid().into_iter().zip(results) {
        match res {
            Ok(prof) => {
                let name = format!("profile_{}.csv", case_stem(dim, eps));
                prof.write(&cfg.output_dir.join(&name), &config)?;
                println!("ok    N={dim} eps={} residual={:.3e} -> {name}", format_eps(eps), prof.residual_sup);
                cases.push(json!({"N": dim, "eps": format_eps(eps), "file": name, "residual_sup": prof.residual_sup}));
            }
            Err(e) => {
                println!("FAIL  N={dim} eps={}: {e}", format_eps(eps));
                failures.push(json!({"N": dim, "eps": format_eps(eps), "error": e.to_string()}));
            }
        }
    }
    let pass = failures.is_empty();
    write_json(
        &cfg.output_dir,
        "profile_summary.json",
        &json!({"config": config, "cases": cases, "failures": failures, "pass": pass}),
    )?;
    Ok(if pass { 0 } else { 1 })
}

/// Everything computed for one (N, eps) grid point of `certify`/`explore`.
struct CaseOutcome {
    summary: Value,
    spectrum_rows: Vec<String>,
    gap_rows: Vec<String>,
    failures: Vec<String>,
}

fn energy_row(family: Family, ell: usize, seed: u64, r: &EnergyReport) -> String {
    format!(
        "{},{ell},{seed},{},{},{},{},{}",
        family.name(),
        fmt_float(r.gap),
        fmt_float(r.f_value),
        fmt_float(r.hardy_integral),
        fmt_float(r.slack_step1),
        fmt_float(r.slack_step4)
    )
}

fn spectrum_row(dim: usize, eps: f64, ell: usize, weight: Weight, mu: f64, extra: Option<f64>) -> String {
    let c = compute_c_n(dim);
    let mut row = format!(
        "{dim},{},{ell},{},{},{},{}",
        fmt_float(eps),
        weight.name(),
        fmt_float(mu),
        fmt_float(c),
        fmt_float(mu - c)
    );
    if let Some(x) = extra {
        let _ = write!(row, ",{}", fmt_float(x));
    }
    row
}

/// Runs the full per-case suite. With `assert_signs` false (explore),
/// margins are only reported and `failures` collects solver errors alone.
fn run_case(
    cfg: &ScanConfig,
    potential: &PotentialSpec,
    mesh: &RadialMesh,
    dim: usize,
    eps: f64,
    assert_signs: bool,
) -> Result<CaseOutcome> {
    let mut failures = Vec::new();
    let tag = format!("N={dim} eps={}", format_eps(eps));
    let prof = continuation_solve(dim, eps, potential, mesh, &cfg.solve_options())?;
    prof.check_invariants(cfg.tol_solve)?;

    // Hardy-weighted sector eigenvalues
    let scan = hardy_gap(&prof, cfg.ell_max)?;
    let eps_star = if assert_signs { None } else { Some(convexity_threshold(dim, potential, mesh)?) };
    let spectrum_rows: Vec<String> = scan
        .sectors
        .iter()
        .map(|s| spectrum_row(dim, eps, s.ell, Weight::Hardy, s.mu, eps_star))
        .collect();
    if let Some(false) = scan.certified(cfg.tol_hardy).filter(|_| assert_signs) {
        failures.push(format!("{tag}: min mu {} at ell={} below c_N = {}", scan.min_mu, scan.argmin_ell, scan.c_n));
    }
    let hardy = json!({
        "min_mu": scan.min_mu,
        "argmin_ell": scan.argmin_ell,
        "c_N": scan.c_n,
        "margin": scan.margin(),
        "tail_bound": "mu_ell >= mu_ell_max for ell > ell_max",
        "certified": if assert_signs { json!(scan.certified(cfg.tol_hardy)) } else { Value::Null },
    });

    // factorization v = f w
    let mut step2_worst: f64 = 0.0;
    let mut step2_count = 0;
    let ells: Vec<usize> = SUITE_ELLS.iter().copied().filter(|&l| l == 0 || dim >= 3).collect();
    for &ell in &ells {
        for k in 0..cfg.step2_count {
            let seed = cfg.seed + k;
            let w = SectorPerturbation::scalar(dim, ell, random_bump_coefficients(mesh, seed));
            let d = verify_step2_identity(&prof, &w)?;
            step2_worst = step2_worst.max(d);
            step2_count += 1;
            if d > cfg.tol_identity {
                failures.push(format!("{tag}: v = f w identity off by {d:.3e} (ell={ell}, seed={seed})"));
            }
        }
    }

    // chain w = φ g and the cross-term sign
    let density_min = cross_term_density(&prof).into_iter().fold(f64::INFINITY, f64::min);
    if density_min < CROSS_TERM_FLOOR {
        failures.push(format!("{tag}: cross-term density {density_min:.3e} is negative"));
    }
    let (mut chain_worst, mut chain_cross_min, mut chain_slack_min) = (0.0f64, f64::INFINITY, f64::INFINITY);
    for &ell in &ells {
        for k in 0..CHAIN_SAMPLES {
            let g = if k == 0 { bump_coefficients(mesh) } else { random_bump_coefficients(mesh, cfg.seed + k) };
            let chain = verify_step3_chain(&prof, &SectorPerturbation::scalar(dim, ell, g))?;
            chain_worst = chain_worst.max(chain.discrepancy);
            chain_cross_min = chain_cross_min.min(chain.cross_term_min_density);
            chain_slack_min = chain_slack_min.min(chain.bound_slack);
            if chain.discrepancy > cfg.tol_chain || chain.cross_term_min_density < CROSS_TERM_FLOOR {
                failures.push(format!(
                    "{tag}: chain discrepancy {:.3e}, cross term {:.3e} (ell={ell}, sample={k})",
                    chain.discrepancy, chain.cross_term_min_density
                ));
            }
            if assert_signs && chain.bound_slack < -cfg.tol_inequality {
                failures.push(format!("{tag}: F < c_N ∫v²/r² by {:.3e} (ell={ell}, sample={k})", chain.bound_slack));
            }
        }
    }

    // energy gaps
    let quadratic = matches!(potential, PotentialSpec::Quadratic) && eps.is_finite();
    let mut gap_rows = Vec::new();
    let mut families = Vec::new();
    let mut quartic_worst: Option<f64> = None;
    for family in Family::ALL {
        if family == Family::SingleAngle && dim < 3 {
            families.push(json!({"family": family.name(), "skipped": "zonal harmonics need N >= 3"}));
            continue;
        }
        let (mut min1, mut min4) = (f64::INFINITY, f64::INFINITY);
        for k in 0..cfg.step1_count {
            let seed = cfg.seed + k;
            let v = match family {
                Family::RadialAligned => SectorPerturbation::radial_aligned(dim, random_coefficients(mesh, 1, seed)),
                Family::OrthogonalComponent => {
                    SectorPerturbation::orthogonal(dim + 1, random_coefficients(mesh, 0, seed))
                }
                Family::SingleAngle => {
                    let ell = 1 + (k % 3) as usize;
                    SectorPerturbation::single_angle(dim + 1, ell, random_coefficients(mesh, ell, seed))
                }
            };
            let rep = energy_gap(&prof, &v)?;
            gap_rows.push(energy_row(family, v.ell, seed, &rep));
            min1 = min1.min(rep.slack_step1);
            min4 = min4.min(rep.slack_step4);
            if assert_signs && rep.slack_step1 < -cfg.tol_inequality {
                failures.push(format!("{tag}: gap < F/2 by {:.3e} ({}, seed={seed})", rep.slack_step1, family.name()));
            }
            if assert_signs && rep.slack_step4 < -cfg.tol_inequality {
                failures.push(format!("{tag}: F < c_N ∫v²/r² by {:.3e} ({}, seed={seed})", rep.slack_step4, family.name()));
            }
            if quadratic && family == Family::OrthogonalComponent {
                let q = quartic_remainder(&prof, &v)?;
                let rel = (rep.slack_step1 - q).abs() / q.abs().max(f64::MIN_POSITIVE);
                quartic_worst = Some(quartic_worst.unwrap_or(0.0).max(rel));
                if rel > cfg.tol_exact {
                    failures.push(format!("{tag}: quartic remainder off by {rel:.3e} (seed={seed})"));
                }
            }
        }
        families.push(json!({"family": family.name(), "count": cfg.step1_count, "min_slack1": min1, "min_slack4": min4}));
    }

    let summary = json!({
        "N": dim,
        "eps": format_eps(eps),
        "residual_sup": prof.residual_sup,
        "eps_star": eps_star,
        "hardy": hardy,
        "step2": {"count": step2_count, "ells": ells, "max_discrepancy": step2_worst},
        "step3": {
            "count": ells.len() as u64 * CHAIN_SAMPLES,
            "max_discrepancy": chain_worst,
            "min_cross_term": chain_cross_min,
            "min_bound_slack": chain_slack_min,
            "min_profile_density": density_min,
        },
        "step1": families,
        "quartic_max_relative_error": quartic_worst,
        "failures": failures,
    });
    Ok(CaseOutcome { summary, spectrum_rows, gap_rows, failures })
}

fn run_grid(args: &GridArgs, defaults: ScanConfig, assert_signs: bool) -> Result<i32> {
    let (cfg, mesh, potential) = prepare(defaults, args)?;
    if assert_signs {
        if let Some(&d) = cfg.n_list.iter().find(|&&d| d < critical_dimension()) {
            return Err(config_err(format!(
                "certify needs N >= {}, got N = {d}; use `explore` for lower dimensions",
                critical_dimension()
            )));
        }
    }
    let admissibility = check_admissible(&potential, 200, cfg.seed, DEFAULT_SAMPLING_WINDOW)?;
    let outcomes: Vec<Result<CaseOutcome>> = cfg.pool()?.install(|| {
        cfg.grid()
            .par_iter()
            .map(|&(dim, eps)| run_case(&cfg, &potential, &mesh, dim, eps, assert_signs))
            .collect()
    });

    let label = if assert_signs { "certify" } else { "explore" };
    let mut header = String::from("N,eps,ell,weight,mu,c_N,margin");
    if !assert_signs {
        header.push_str(",eps_star");
    }
    let mut spectrum = header.clone() + "\n";
    let mut cases = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    if assert_signs && !admissibility.all_passed() {
        failures.push("potential fails the admissibility hypotheses".into());
    }
    let mut errored = false;
    for ((dim, eps), outcome) in cfg.grid().into_iter().zip(outcomes) {
        let stem = case_stem(dim, eps);
        match outcome {
            Ok(out) => {
                let mut gaps = String::from("family,ell,seed,gap,F,hardy_integral,slack1,slack4\n");
                for row in &out.gap_rows {
                    gaps.push_str(row);
                    gaps.push('\n');
                }
                write_text(&cfg.output_dir, &format!("energy_gap_{stem}.csv"), &gaps)?;
                let mut case_csv = header.clone() + "\n";
                for row in &out.spectrum_rows {
                    spectrum.push_str(row);
                    spectrum.push('\n');
                    case_csv.push_str(row);
                    case_csv.push('\n');
                }
                write_text(&cfg.output_dir, &format!("spectrum_{stem}.csv"), &case_csv)?;
                let status = match (assert_signs, out.failures.is_empty()) {
                    (false, _) => "ok  ",
                    (true, true) => "PASS",
                    (true, false) => "FAIL",
                };
                let margin = out.summary["hardy"]["margin"].as_f64().unwrap_or(f64::NAN);
                println!("{status}  N={dim} eps={} hardy margin={margin:.6}", format_eps(eps));
                failures.extend(out.failures);
                cases.push(out.summary);
            }
            Err(e) => {
                println!("FAIL  N={dim} eps={}: {e}", format_eps(eps));
                errored = true;
                failures.push(format!("N={dim} eps={}: {e}", format_eps(eps)));
                cases.push(json!({"N": dim, "eps": format_eps(eps), "error": e.to_string()}));
            }
        }
    }
    write_text(&cfg.output_dir, &format!("{label}.csv"), &spectrum)?;
    let pass = failures.is_empty();
    write_json(
        &cfg.output_dir,
        &format!("{label}_summary.json"),
        &json!({
            "config": cfg.to_json(),
            "critical_dimension": critical_dimension(),
            "admissibility": admissibility,
            "cases": cases,
            "failures": failures,
            "pass": pass,
        }),
    )?;
    Ok(if assert_signs { if pass { 0 } else { 1 } } else if errored { 1 } else { 0 })
}

fn cmd_certify(args: &GridArgs) -> Result<i32> {
    run_grid(args, ScanConfig::default(), true)
}

fn cmd_explore(args: &GridArgs) -> Result<i32> {
    let defaults = ScanConfig {
        n_list: vec![2, 3, 4, 5, 6],
        eps_log: Some("0.05:5:5".into()),
        ..ScanConfig::default()
    };
    run_grid(args, defaults, false)
}

/// One named check of the verification suite.
struct Check {
    name: String,
    value: f64,
    threshold: f64,
    pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }

    fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value >= threshold }
    }

    fn to_json(&self) -> Value {
        json!({"name": self.name, "value": self.value, "threshold": self.threshold, "pass": self.pass})
    }
}

fn sup_diff(a: &[f64], b: impl Iterator<Item = f64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn verify_suite(cfg: &ScanConfig, potential: &PotentialSpec) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let opts = cfg.solve_options();
    let mesh = cfg.mesh()?;

    for dim in [2usize, 3, 7, 10] {
        let prof = continuation_solve(dim, f64::INFINITY, potential, &mesh, &opts)?;
        let dev = sup_diff(&prof.f, mesh.nodes().iter().copied());
        checks.push(Check::at_most(format!("harmonic_exactness_N{dim}"), dev, 1e-12));
    }

    let oracle_cases: Vec<(usize, f64)> = vec![(7, 0.3), (7, 1.0), (8, 0.3), (8, 1.0)];
    let oracle: Vec<Result<f64>> = oracle_cases
        .par_iter()
        .map(|&(dim, eps)| {
            let prof = continuation_solve(dim, eps, potential, &mesh, &opts)?;
            let shot = shoot_profile(dim, eps, potential, SHOOTING_STEPS)?;
            Ok(sup_diff(&prof.f, mesh.nodes().iter().map(|&r| shot.value_at(r))))
        })
        .collect();
    for ((dim, eps), diff) in oracle_cases.into_iter().zip(oracle) {
        checks.push(Check::at_most(format!("oracle_equivalence_N{dim}_eps{eps}"), diff?, 1e-6));
    }

    let mut coarse: Vec<Vec<f64>> = Vec::new();
    for n in [250usize, 500, 1000, 2000] {
        let m = RadialMesh::build(n, cfg.grading)?;
        coarse.push(continuation_solve(7, 0.5, potential, &m, &opts)?.f);
    }
    let diffs: Vec<f64> = coarse
        .windows(2)
        .map(|p| sup_diff(&p[0], p[0].iter().enumerate().map(|(i, _)| p[1][2 * i])))
        .collect();
    for (k, pair) in diffs.windows(2).enumerate() {
        checks.push(Check::at_least(format!("mesh_convergence_ratio_{}", 250 << k), pair[0] / pair[1], 3.5));
    }

    let pi2 = std::f64::consts::PI.powi(2);
    checks.push(Check::at_most("dirichlet_eigenvalue_B3", (dirichlet_eigenvalue(3, &mesh)? / pi2 - 1.0).abs(), 1e-4));
    let j01 = first_bessel_zero(0.0);
    checks.push(Check::at_most(
        "dirichlet_eigenvalue_B2",
        (dirichlet_eigenvalue(2, &mesh)? / (j01 * j01) - 1.0).abs(),
        1e-3,
    ));
    checks.push(Check::at_most(
        "dirichlet_eigenvalue_B7",
        (dirichlet_eigenvalue(7, &mesh)? / ball_dirichlet_eigenvalue(7) - 1.0).abs(),
        1e-4,
    ));
    checks.push(Check::at_most(
        "convexity_threshold_N3",
        (convexity_threshold(3, &PotentialSpec::Quadratic, &mesh)? - 1.0 / std::f64::consts::PI).abs(),
        1e-4,
    ));

    let harmonic7 = continuation_solve(7, f64::INFINITY, potential, &mesh, &opts)?;
    let hardy0 = build_sector_operator(&harmonic7, 0)?.lowest_eigen(Weight::Hardy)?.mu;
    checks.push(Check::at_least("pure_hardy_above_sharp_constant_N7", hardy0 - 6.25, 0.0));
    let bump = SectorPerturbation::single_angle(8, 1, bump_coefficients(&mesh));
    checks.push(Check::at_most("step2_identity_harmonic_N7", verify_step2_identity(&harmonic7, &bump)?, 1e-10));

    for amp in [0.1, 0.3, 0.5] {
        let a: Vec<f64> = mesh.nodes().iter().map(|r| amp * r * (1.0 - r)).collect();
        let rep = harmonic_map_gap(7, 8, &SectorPerturbation::orthogonal(8, a), &mesh)?;
        checks.push(Check::at_most(format!("harmonic_map_identity_a{amp}"), rep.discrepancy, 1e-7));
        checks.push(Check::at_least(format!("harmonic_map_hardy_bound_a{amp}"), rep.bound_slack, -1e-6));
    }

    checks.push(Check::at_most("critical_dimension", (critical_dimension() as f64 - 7.0).abs(), 0.0));
    let c_err = (2..=12usize)
        .map(|d| {
            let n = d as f64;
            (compute_c_n(d) - ((n - 2.0) * (n - 2.0) / 4.0 - (n - 1.0))).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("c_N_formula", c_err, 0.0));
    let pi = std::f64::consts::PI;
    let geometry = [
        (sphere_area(2), 2.0 * pi),
        (sphere_area(3), 4.0 * pi),
        (ball_volume(3), 4.0 * pi / 3.0),
        (ball_volume(7), 16.0 * pi.powi(3) / 105.0),
    ];
    let geo_err = geometry.iter().map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("sphere_area_ball_volume", geo_err, 1e-14));
    let ones = vec![1.0; mesh.nodes().len()];
    let quad_err = [2usize, 3, 7, 10]
        .iter()
        .map(|&d| Ok((integrate_radial(&mesh, &ones, d)? / ball_volume(d) - 1.0).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::at_most("ball_volume_by_quadrature", quad_err, 1e-12));
    Ok(checks)
}

fn cmd_verify(args: &GridArgs, replay: Option<&Path>) -> Result<i32> {
    let cfg = ScanConfig::resolve(ScanConfig::default(), args)?;
    let potential = cfg.potential()?;
    if let Some(path) = replay {
        let override_potential = args.potential.as_ref().map(|_| potential.clone());
        return Ok(match RadialProfile::read(path, override_potential)
            .and_then(|p| p.check_invariants(cfg.tol_solve).map(|_| p))
        {
            Ok(p) => {
                println!("PASS  replay {} (residual {:.3e})", path.display(), p.residual_sup);
                0
            }
            Err(e) => {
                println!("FAIL  replay {}: {e}", path.display());
                1
            }
        });
    }
    cfg.mesh()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let checks = cfg.pool()?.install(|| verify_suite(&cfg, &potential))?;
    for c in &checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("{status}  {:<40} value={:.3e} threshold={:.3e}", c.name, c.value, c.threshold);
    }
    let pass = checks.iter().all(|c| c.pass);
    write_json(
        &cfg.output_dir,
        "verify_summary.json",
        &json!({
            "config": cfg.to_json(),
            "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
            "pass": pass,
        }),
    )?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_energy_gap(args: &GridArgs, family: &str, ell: Option<usize>, target_dim: Option<usize>) -> Result<i32> {
    let cfg = ScanConfig::resolve(ScanConfig::default(), args)?;
    let (mesh, potential) = (cfg.mesh()?, cfg.potential()?);
    let family = Family::parse(family)?;
    let mut reports = Vec::new();
    for (dim, eps) in cfg.grid() {
        let m = target_dim.unwrap_or(dim + 1);
        let v = match family {
            Family::RadialAligned => SectorPerturbation::radial_aligned(dim, random_coefficients(&mesh, 1, cfg.seed)),
            Family::OrthogonalComponent => SectorPerturbation::orthogonal(m, random_coefficients(&mesh, 0, cfg.seed)),
            Family::SingleAngle => {
                let l = ell.unwrap_or(1);
                SectorPerturbation::single_angle(m, l, random_coefficients(&mesh, l, cfg.seed))
            }
        };
        v.validate(&mesh, dim).map_err(|e| config_err(e.to_string()))?;
        let prof = continuation_solve(dim, eps, &potential, &mesh, &cfg.solve_options())?;
        let rep = energy_gap(&prof, &v)?;
        reports.push(json!({
            "N": dim,
            "eps": format_eps(eps),
            "family": family.name(),
            "ell": v.ell,
            "target_dim": v.target_dim,
            "seed": cfg.seed,
            "report": rep,
        }));
    }
    let out = json!({"config": cfg.to_json(), "results": reports});
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(0)
}

fn cmd_spectrum(args: &GridArgs, weight: &str) -> Result<i32> {
    let cfg = ScanConfig::resolve(ScanConfig::default(), args)?;
    let (mesh, potential) = (cfg.mesh()?, cfg.potential()?);
    let weight = Weight::parse(weight)?;
    let mut out = String::from("N,eps,ell,weight,mu,c_N,margin\n");
    for (dim, eps) in cfg.grid() {
        let prof = continuation_solve(dim, eps, &potential, &mesh, &cfg.solve_options())?;
        let rows: Vec<Result<String>> = (0..=cfg.ell_max)
            .into_par_iter()
            .map(|ell| {
                let res = build_sector_operator(&prof, ell)?.lowest_eigen(weight)?;
                Ok(spectrum_row(dim, eps, ell, weight, res.mu, None))
            })
            .collect();
        for row in rows {
            out.push_str(&row?);
            out.push('\n');
        }
    }
    print!("{out}");
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spacing_hits_endpoints() {
        let v = log_spaced("0.05:5:5").unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!((v[0], v[4]), (0.05, 5.0));
        assert_eq!(v[2], 0.5);
        assert!(log_spaced("1:0.5:3").is_err());
        assert!(log_spaced("1:2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "N_list = [8, 7]\neps_list = [1.0, \"inf\"]\nseed = 4\nn = 500\n").unwrap();
        let args = GridArgs { config: Some(path.clone()), seed: Some(9), ..Default::default() };
        let cfg = ScanConfig::resolve(ScanConfig::default(), &args).unwrap();
        assert_eq!(cfg.n_list, vec![7, 8]);
        assert_eq!(cfg.eps_list, vec![1.0, f64::INFINITY]);
        assert_eq!((cfg.seed, cfg.n), (9, 500));
        std::fs::write(&path, "bogus = 1\n").unwrap();
        let args = GridArgs { config: Some(path), ..Default::default() };
        assert!(matches!(ScanConfig::resolve(ScanConfig::default(), &args), Err(Error::Config(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["glvortex", "profile", "--n", "8"]), 2);
        assert_eq!(run(["glvortex", "certify", "--dims", "6", "--n", "100"]), 2);
        assert_eq!(run(["glvortex", "profile", "--potential", "cubic"]), 2);
        assert_eq!(run(["glvortex", "nonsense"]), 2);
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }
}
