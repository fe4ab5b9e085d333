//! End-to-end checks of the command-line interface: exit codes, emitted
//! artifacts, and the manifest contract.

use std::path::Path;
use std::process::{Command, Output};

fn vnudge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnudge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn repo_config(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    path.to_str().unwrap().to_string()
}

fn read_csv_column(path: &Path, col: usize) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn simulate_taylor_green_decays_analytically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tg");
    let res = vnudge(&[
        "simulate",
        "--config",
        &repo_config("taylor_green.conf"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));

    let times = read_csv_column(&out.join("reference.csv"), 0);
    assert!(times.windows(2).all(|w| w[1] > w[0]), "time column must be monotone");

    let l2 = read_csv_column(&out.join("reference.csv"), 1);
    let analytic = (0.5f64).sqrt() * (-8.0 * std::f64::consts::PI.powi(2) * 0.01 * 0.1).exp();
    let err = (l2.last().unwrap() - analytic).abs() / analytic;
    assert!(err <= 1e-8, "final l2 off by {err:.3e}");

    // every emitted file is listed in the manifest
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    let mut on_disk: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.txt")
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = manifest
        .lines()
        .filter(|l| l.starts_with("artifact."))
        .map(|l| l.split(" = ").nth(1).unwrap().to_string())
        .collect();
    listed.sort();
    assert_eq!(on_disk, listed, "manifest must list every artifact");
    assert!(manifest.contains("code_version = "));
    assert!(manifest.contains("seed = "));

    // the config echo parses back to a valid configuration
    let echo = std::fs::read_to_string(out.join("config_echo.conf")).unwrap();
    let cfg = vnudge::config::parse_config(&echo).unwrap();
    assert_eq!(cfg.grid.n(), 32);
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "stepper.dt = -1\n").unwrap();
    let res = vnudge(&[
        "simulate",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("stepper.dt"), "stderr: {stderr}");

    let res = vnudge(&[
        "simulate",
        "--config",
        dir.path().join("missing.conf").to_str().unwrap(),
        "--out",
        dir.path().join("o2").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn assimilate_quick_twin_writes_summary_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let res = vnudge(&[
            "assimilate",
            "--config",
            &repo_config("quick_twin.conf"),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    }
    let summary = std::fs::read_to_string(out_a.join("summary.txt")).unwrap();
    for key in ["rate = ", "plateau_l2 = ", "conditions_satisfied_t2 = ", "decay_detected = true"] {
        assert!(summary.contains(key), "summary missing `{key}`:\n{summary}");
    }
    let csv_a = std::fs::read(out_a.join("twin.csv")).unwrap();
    let csv_b = std::fs::read(out_b.join("twin.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "identical config + seed must give bit-identical CSV");
    let header = String::from_utf8_lossy(&csv_a);
    assert!(header.starts_with("t,l2_err,h1_err,h2_err,X,Xtilde,energy_u,energy_v\n"));
}

#[test]
fn assimilate_with_mu_zero_reports_no_decay() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("mu0.conf");
    let base = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/quick_twin.conf"),
    )
    .unwrap();
    std::fs::write(&cfgp, base.replace("physics.mu = 30.0", "physics.mu = 0.0")).unwrap();
    let out = dir.path().join("out");
    let res = vnudge(&[
        "assimilate",
        "--config",
        cfgp.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(
        summary.contains("decay_detected = false"),
        "mu = 0 must not assimilate:\n{summary}"
    );
}

#[test]
fn sweep_alpha_argument_validation() {
    let dir = tempfile::tempdir().unwrap();
    // non-numeric alpha: usage error
    let res = vnudge(&[
        "sweep-alpha",
        "--config",
        &repo_config("quick_twin.conf"),
        "--alphas",
        "0.1,zzz",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));

    // a single alpha violates the sweep precondition
    let res = vnudge(&[
        "sweep-alpha",
        "--config",
        &repo_config("quick_twin.conf"),
        "--alphas",
        "0.1",
        "--out",
        dir.path().join("o2").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn verify_passes_and_mutation_hook_fails() {
    let dir = tempfile::tempdir().unwrap();
    let res = vnudge(&["verify", "--out", dir.path().join("v").to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "stdout: {stdout}");
    for name in [
        "fft_roundtrip",
        "leray_projector",
        "poincare_chain",
        "bilinear_identities",
        "interpolant_bound",
        "taylor_green_decay",
    ] {
        assert!(stdout.contains(name), "missing property line for {name}");
    }
    assert!(!stdout.contains("FAIL"));
    assert!(dir.path().join("v/verify.txt").exists());

    // dev-mode mutation: the bilinear identity check must catch a sign error
    let res = vnudge(&["verify", "--mutate-bilinear"]);
    assert_eq!(res.status.code(), Some(4));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("FAIL"), "stdout: {stdout}");
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "11"), (&out_b, "12")] {
        let res = vnudge(&[
            "simulate",
            "--config",
            &repo_config("taylor_green.conf"),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(res.status.success());
    }
    let ma = std::fs::read_to_string(out_a.join("manifest.txt")).unwrap();
    let mb = std::fs::read_to_string(out_b.join("manifest.txt")).unwrap();
    assert!(ma.contains("seed = 11"), "{ma}");
    assert!(mb.contains("seed = 12"), "{mb}");
}
