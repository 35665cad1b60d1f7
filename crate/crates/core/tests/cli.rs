use std::process::Command;

fn glvortex(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_glvortex")).args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn harmonic_profile_file_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(glvortex(&["profile", "--dims", "7", "--eps", "inf", "-o", out]), 0);
    let csv = dir.path().join("profile_N7_epsinf.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    for line in text.lines().skip(1) {
        let (r, f) = line.split_once(',').unwrap();
        assert_eq!(r, f);
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("profile_N7_epsinf.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["N_list"], serde_json::json!([7]));
    assert_eq!(glvortex(&["verify", "--replay", csv.to_str().unwrap()]), 0);

    // a non-monotone value breaks the invariants
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let (r, _) = lines[1000].split_once(',').unwrap();
    lines[1000] = format!("{r},{:.16e}", 0.0);
    std::fs::write(&csv, lines.join("\n") + "\n").unwrap();
    assert_eq!(glvortex(&["verify", "--replay", csv.to_str().unwrap()]), 1);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(glvortex(&["profile", "--n", "8", "-o", out]), 2);
    assert_eq!(glvortex(&["certify", "--dims", "6,7", "-o", out]), 2);
    assert_eq!(glvortex(&["explore", "--eps", "0", "-o", out]), 2);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "N_list = [7]\ntolerance = 3\n").unwrap();
    assert_eq!(glvortex(&["profile", "--config", cfg.to_str().unwrap(), "-o", out]), 2);
    assert_eq!(glvortex(&["--help"]), 0);
}

#[test]
fn spectrum_passthrough_prints_all_sectors() {
    let out = Command::new(env!("CARGO_BIN_EXE_glvortex"))
        .args(["spectrum", "--dims", "7", "--eps", "0.5", "--n", "500", "--ell-max", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("N,eps,ell,weight,mu,c_N,margin\n"));
}
