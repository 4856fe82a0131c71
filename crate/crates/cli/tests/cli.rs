use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mmk");

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("MM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn verify_exits_zero_and_lists_every_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["verify"], tmp.path());
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.matches("suite ").count(), 8);
    assert!(stdout.contains("3/3 checks passed"));
    assert!(stdout.trim_end().ends_with("all suites passed"));
}

#[test]
fn fig1_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "reproduce-fig1",
        "--n",
        "100",
        "--replicas",
        "3",
        "--t-end",
        "1",
        "--seed",
        "7",
    ];
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = run(
        &[&args[..], &["--out", a.to_str().unwrap()]].concat(),
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let out = run(
        &[&args[..], &["--out", b.to_str().unwrap()]].concat(),
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");

    for name in ["fig1.csv", "fig1.svg", "config_resolved.txt"] {
        assert_eq!(
            read(&a, name),
            read(&b, name),
            "{name} differs across reruns"
        );
    }
    assert!(read(&a, "fig1.csv").starts_with("t,zv_ssa_mean,zv_flln\n"));
    assert!(read(&a, "fig1.svg").starts_with("<svg"));
    assert!(read(&a, "config_resolved.txt").contains("master_seed = 7"));
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "n = 100\nbogus = 1\n").unwrap();
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("bogus"), "stderr: {stderr}");
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn convergence_writes_table_and_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "convergence",
            "--n",
            "50,100,200",
            "--replicas",
            "3",
            "--t-end",
            "1",
            "--out",
            ".",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let csv = read(tmp.path(), "convergence.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "n,mean_sup_error,fitted_slope,slope_ci_lo,slope_ci_hi"
    );
    assert_eq!(lines.len(), 4);
    let slope: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!(slope < 0.0, "fitted slope {slope}");
    assert!(read(tmp.path(), "convergence.txt").contains("fitted rate"));
}

#[test]
fn out_dir_env_var_is_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("artifacts");
    let out = Command::new(BIN)
        .args(["limit", "--n", "100", "--t-end", "1"])
        .current_dir(tmp.path())
        .env("MM_OUT_DIR", &target)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{out:?}");
    for (name, label) in [
        ("flln_tqssa.csv", "flln_tqssa"),
        ("det_tqssa.csv", "det_tqssa"),
        ("det_sqssa.csv", "det_sqssa"),
    ] {
        let csv = read(&target, name);
        assert!(csv.starts_with("t,value,model\n"));
        assert!(csv.lines().nth(1).unwrap().ends_with(label));
    }
}

#[test]
fn single_scale_commands_reject_scale_lists() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--n", "100,200", "--out", "."], tmp.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("single scale"), "stderr: {stderr}");
}

#[test]
fn simulate_writes_one_file_per_replica() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "simulate",
            "--n",
            "50",
            "--replicas",
            "2",
            "--t-end",
            "1",
            "--out",
            ".",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    for name in ["trajectory_0.csv", "trajectory_1.csv"] {
        let csv = read(tmp.path(), name);
        assert!(csv.starts_with("t,zs,ze,zc,zp,zv\n"));
        assert_eq!(csv.lines().count(), 1002);
    }

    let jumps_dir = tmp.path().join("jumps");
    let out = run(
        &[
            "simulate",
            "--n",
            "50",
            "--replicas",
            "1",
            "--t-end",
            "1",
            "--jumps",
            "--out",
            jumps_dir.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let csv = read(&jumps_dir, "trajectory_0.csv");
    assert!(csv.starts_with("t,zs,ze,zc,zp,zv\n"));
    assert!(csv.lines().nth(1).unwrap().starts_with("0,"));
}

#[test]
fn fluctuate_writes_paths_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["fluctuate", "--replicas", "2", "--t-end", "1", "--out", "."],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let paths = read(tmp.path(), "fluctuation.csv");
    assert!(paths.starts_with("t,u,replica\n"));
    assert_eq!(paths.lines().count(), 1 + 2 * 1001);
    let summary = read(tmp.path(), "summary.csv");
    assert!(summary.starts_with("t,mean,var,n_replicas\n"));
    assert_eq!(summary.lines().count(), 1 + 1001);
    assert!(summary.lines().nth(1).unwrap().starts_with("0,0,0,2"));
}

#[test]
fn occupation_writes_per_scale_measures_and_fractions() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "occupation",
            "--n",
            "50,100",
            "--replicas",
            "2",
            "--t-end",
            "1",
            "--out",
            ".",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    for name in ["occupation_n50.csv", "occupation_n100.csv"] {
        assert!(read(tmp.path(), name).starts_with("zc_lo,zc_hi,zv_lo,zv_hi,t_lo,t_hi,mass\n"));
    }
    let fractions = read(tmp.path(), "occupation_fractions.csv");
    let lines: Vec<&str> = fractions.lines().collect();
    assert_eq!(lines[0], "n,fraction");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let f: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&f), "fraction {f}");
    }
}
