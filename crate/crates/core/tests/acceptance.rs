//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use glvortex::energy::{compute_c_n, energy_gap, quartic_remainder, verify_step2_identity};
use glvortex::mesh::RadialMesh;
use glvortex::oracle::{first_bessel_zero, shoot_profile};
use glvortex::perturbation::{bump_coefficients, random_bump_coefficients, random_coefficients, SectorPerturbation};
use glvortex::potential::PotentialSpec;
use glvortex::profile::{continuation_solve, solve_profile, RadialProfile, SolveOptions};
use glvortex::spectral::{
    convexity_threshold, critical_dimension, cross_term_density, dirichlet_eigenvalue, harmonic_map_gap,
    verify_step3_chain,
};
use glvortex::{cli, Result};

type Outcome = Result<std::result::Result<String, String>>;

fn mesh(n: usize) -> RadialMesh {
    RadialMesh::build(n, 2.0).unwrap()
}

fn vortex(dim: usize, eps: f64, n: usize) -> Result<RadialProfile> {
    continuation_solve(dim, eps, &PotentialSpec::Quadratic, &mesh(n), &SolveOptions::default())
}

fn judge(ok: bool, detail: String) -> Outcome {
    Ok(if ok { Ok(detail) } else { Err(detail) })
}

fn sup_diff(a: &[f64], b: impl Iterator<Item = f64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn harmonic_exactness() -> Outcome {
    let m = mesh(2000);
    let (mut worst, mut slowest) = (0.0f64, Duration::ZERO);
    for dim in [2usize, 3, 7, 10] {
        let start = Instant::now();
        let prof = solve_profile(dim, f64::INFINITY, &PotentialSpec::Quadratic, &m, &SolveOptions::default())?;
        slowest = slowest.max(start.elapsed());
        worst = worst.max(sup_diff(&prof.f, m.nodes().iter().copied()));
    }
    judge(
        worst <= 1e-12 && slowest < Duration::from_secs(1),
        format!("max deviation {worst:.2e}, slowest case {slowest:.2?}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let m = mesh(2000);
    let (mut worst, mut slowest) = (0.0f64, Duration::ZERO);
    for dim in [7usize, 8] {
        for eps in [0.3, 1.0] {
            let start = Instant::now();
            let prof = continuation_solve(dim, eps, &PotentialSpec::Quadratic, &m, &SolveOptions::default())?;
            let shot = shoot_profile(dim, eps, &PotentialSpec::Quadratic, 40_000)?;
            slowest = slowest.max(start.elapsed());
            worst = worst.max(sup_diff(&prof.f, m.nodes().iter().map(|&r| shot.value_at(r))));
        }
    }
    judge(
        worst <= 1e-6 && slowest < Duration::from_secs(10),
        format!("max sup difference {worst:.2e}, slowest case {slowest:.2?}"),
    )
}

fn mesh_convergence() -> Outcome {
    let sols: Vec<Vec<f64>> = [250usize, 500, 1000, 2000]
        .iter()
        .map(|&n| vortex(7, 0.5, n).map(|p| p.f))
        .collect::<Result<_>>()?;
    let diffs: Vec<f64> = sols
        .windows(2)
        .map(|p| sup_diff(&p[0], (0..p[0].len()).map(|i| p[1][2 * i])))
        .collect();
    let ratios: Vec<f64> = diffs.windows(2).map(|d| d[0] / d[1]).collect();
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    judge(min >= 3.5, format!("contraction ratios {ratios:.3?}"))
}

fn eigen_calibration() -> Outcome {
    let m = mesh(2000);
    let pi = std::f64::consts::PI;
    let e3 = (dirichlet_eigenvalue(3, &m)? / (pi * pi) - 1.0).abs();
    let j = first_bessel_zero(0.0);
    let e2 = (dirichlet_eigenvalue(2, &m)? / (j * j) - 1.0).abs();
    let t3 = (convexity_threshold(3, &PotentialSpec::Quadratic, &m)? - 1.0 / pi).abs();
    judge(
        e3 <= 1e-4 && e2 <= 1e-3 && t3 <= 1e-4,
        format!("B3 rel {e3:.2e}, B2 rel {e2:.2e}, threshold err {t3:.2e}"),
    )
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn run_cli(args: &[&str]) -> i32 {
    cli::run(std::iter::once("glvortex").chain(args.iter().copied()))
}

fn hardy_certification() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    for potential in ["quadratic", "huber:0.1"] {
        let dir = tempfile::tempdir()?;
        let out = dir.path().to_str().unwrap();
        let code = run_cli(&["certify", "--dims", "7,8,10", "--eps", "0.1,0.3,1,3", "--potential", potential, "-o", out]);
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("certify_summary.json"))?)?;
        let mut worst = f64::INFINITY;
        for case in summary["cases"].as_array().unwrap() {
            let dim = case["N"].as_u64().unwrap() as usize;
            let hardy = &case["hardy"];
            let c = hardy["c_N"].as_f64().unwrap();
            ok &= c == compute_c_n(dim) && hardy["min_mu"].as_f64().unwrap() >= c - 5e-3;
            worst = worst.min(hardy["margin"].as_f64().unwrap());
        }
        ok &= code == 0;
        notes.push(format!("{potential}: exit {code}, min margin {worst:.4}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    judge(ok, format!("{}; {elapsed:.1?}", notes.join(", ")))
}

fn step2_identity() -> Outcome {
    let mut worst = 0.0f64;
    for eps in [0.5, f64::INFINITY] {
        let prof = vortex(7, eps, 2000)?;
        for ell in [0usize, 1, 2] {
            for seed in 0..20 {
                let w = SectorPerturbation::scalar(7, ell, random_bump_coefficients(&prof.mesh, seed));
                worst = worst.max(verify_step2_identity(&prof, &w)?);
            }
        }
    }
    judge(worst <= 1e-8, format!("max relative discrepancy {worst:.2e} over 120 test functions"))
}

fn step3_chain() -> Outcome {
    let (mut min_cross, mut worst) = (f64::INFINITY, 0.0f64);
    for dim in [7usize, 8, 10] {
        for eps in [0.1, 0.3, 0.5, 1.0, 3.0, f64::INFINITY] {
            let prof = vortex(dim, eps, 2000)?;
            min_cross = cross_term_density(&prof).into_iter().fold(min_cross, f64::min);
            for ell in [0usize, 1, 2] {
                for k in 0..5u64 {
                    let g = if k == 0 { bump_coefficients(&prof.mesh) } else { random_bump_coefficients(&prof.mesh, k) };
                    let chain = verify_step3_chain(&prof, &SectorPerturbation::scalar(dim, ell, g))?;
                    worst = worst.max(chain.discrepancy);
                    min_cross = min_cross.min(chain.cross_term_min_density);
                }
            }
        }
    }
    judge(
        min_cross >= -1e-12 && worst <= 1e-7,
        format!("min cross-term density {min_cross:.2e}, max discrepancy {worst:.2e}"),
    )
}

fn step1_gap() -> Outcome {
    let (mut min_slack, mut worst_quartic, mut worst_direct) = (f64::INFINITY, 0.0f64, 0.0f64);
    for dim in [7usize, 8] {
        for eps in [0.3, 1.0] {
            let prof = vortex(dim, eps, 2000)?;
            for seed in 0..50u64 {
                let ell = 1 + (seed % 3) as usize;
                let m = &prof.mesh;
                let family = [
                    SectorPerturbation::radial_aligned(dim, random_coefficients(m, 1, seed)),
                    SectorPerturbation::orthogonal(dim + 1, random_coefficients(m, 0, seed)),
                    SectorPerturbation::single_angle(dim + 1, ell, random_coefficients(m, ell, seed)),
                ];
                for v in &family {
                    let rep = energy_gap(&prof, v)?;
                    min_slack = min_slack.min(rep.slack_step1);
                    // the assembled gap against a plain difference of energies
                    worst_direct = worst_direct.max((rep.gap - (rep.e_perturbed - rep.e_base)).abs() / rep.e_base);
                }
                let slack = energy_gap(&prof, &family[1])?.slack_step1;
                let q = quartic_remainder(&prof, &family[1])?;
                worst_quartic = worst_quartic.max((slack - q).abs() / q);
            }
        }
    }
    judge(
        min_slack >= -1e-10 && worst_quartic <= 1e-9 && worst_direct <= 1e-12,
        format!(
            "min gap - F/2 {min_slack:.2e}, quartic relative error {worst_quartic:.2e}, \
             gap vs energy difference {worst_direct:.2e} of E"
        ),
    )
}

fn harmonic_map_identity() -> Outcome {
    let m = mesh(2000);
    let (mut worst, mut min_slack) = (0.0f64, f64::INFINITY);
    for amp in [0.1, 0.3, 0.5] {
        let a: Vec<f64> = m.nodes().iter().map(|r| amp * r * (1.0 - r)).collect();
        let rep = harmonic_map_gap(7, 8, &SectorPerturbation::orthogonal(8, a), &m)?;
        worst = worst.max(rep.discrepancy);
        min_slack = min_slack.min(rep.bound_slack);
    }
    judge(
        worst <= 1e-7 && min_slack >= -1e-6,
        format!("max discrepancy {worst:.2e}, min Hardy bound margin {min_slack:.3e}"),
    )
}

fn critical_dimension_and_constants() -> Outcome {
    let exact = (2..=12).all(|d| {
        let n = d as f64;
        compute_c_n(d) == (n - 2.0) * (n - 2.0) / 4.0 - (n - 1.0)
    });
    let crit = critical_dimension();
    judge(crit == 7 && exact, format!("critical dimension {crit}, c_N formula exact: {exact}"))
}

fn exploratory_scan() -> Outcome {
    let dir = tempfile::tempdir()?;
    let code = run_cli(&["explore", "-o", dir.path().to_str().unwrap()]);
    let table = std::fs::read_to_string(dir.path().join("explore.csv"))?;
    let mut reader = csv::Reader::from_reader(table.as_bytes());
    let header = reader.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (ci, mi, ni) = (col("c_N"), col("margin"), col("N"));
    let mut dims = std::collections::BTreeSet::new();
    let (mut rows, mut negative_c) = (0, true);
    for rec in reader.records() {
        let rec = rec?;
        rows += 1;
        dims.insert(rec[ni].parse::<usize>().unwrap());
        negative_c &= rec[ci].parse::<f64>().unwrap() < 0.0;
        rec[mi].parse::<f64>().unwrap();
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("explore_summary.json"))?)?;
    let unasserted = summary["cases"].as_array().unwrap().iter().all(|c| c["hardy"]["certified"].is_null());
    judge(
        code == 0 && dims.len() == 5 && negative_c && unasserted,
        format!("exit {code}, {rows} rows over N = {dims:?}, all c_N < 0: {negative_c}"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir()?;
    let out = dir.path().to_str().unwrap();
    let args = ["certify", "--dims", "7", "--eps", "0.5,inf", "--n", "1000", "--seed", "11", "-o", out];
    let first_code = run_cli(&args);
    let first = read_dir(dir.path());
    std::fs::remove_dir_all(dir.path())?;
    let second_code = run_cli(&args);
    let second = read_dir(dir.path());
    let same = first == second && !first.is_empty();
    judge(
        first_code == 0 && second_code == 0 && same,
        format!("{} files, byte-identical: {same}", first.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("harmonic exactness", harmonic_exactness),
        ("profile oracle equivalence", oracle_equivalence),
        ("mesh convergence", mesh_convergence),
        ("eigenvalue calibration", eigen_calibration),
        ("Hardy-gap certification", hardy_certification),
        ("factorization identity v = f w", step2_identity),
        ("factorization chain and cross-term sign", step3_chain),
        ("energy-gap inequality and quartic exactness", step1_gap),
        ("harmonic-map identity", harmonic_map_identity),
        ("critical dimension and c_N", critical_dimension_and_constants),
        ("exploratory scan N = 2..6", exploratory_scan),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (status, detail) = match check() {
            Ok(Ok(d)) => ("PASS", d),
            Ok(Err(d)) => ("FAIL", d),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} {:>2}. {name}: {detail}", k + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
