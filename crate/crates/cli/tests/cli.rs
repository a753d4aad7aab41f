use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn msqp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msqp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_trajectory_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out/circle.csv");
    let cfg = write_config(
        dir.path(),
        &format!(
            "problem = circle\noptimizer = sqp-heavyball\niterations = 200\nalpha = 0.05\nstride = 50\noutput = {}\n",
            csv.display()
        ),
    );
    let out = msqp(&["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,f,cviol_l1,proj_grad_sq,merit,dnorm,eta,wall_s"));
    let ks: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ks, ["1", "51", "101", "151", "200"]);
    assert!(csv.with_extension("params").exists());
    assert!(csv.with_extension("state").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("cviol_l1"));
}

#[test]
fn set_overrides_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "problem = linear\noptimizer = sqp\niterations = 5\n");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let run = |path: &Path, extra: &[&str]| {
        let set = format!("output={}", path.display());
        let mut args = vec!["run", "--config", &cfg, "--set", &set];
        args.extend_from_slice(extra);
        assert!(msqp(&args).status.success());
        fs::read_to_string(path).unwrap()
    };
    let plain = run(&a, &[]);
    let longer = run(&b, &["--set", "iterations=9"]);
    assert_eq!(plain.lines().count(), 6);
    assert_eq!(longer.lines().count(), 10);
}

#[test]
fn config_errors_exit_with_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "problem = circle\noptimizer = sqp-adam\niterations = 10\nbeta2 = 1.5\n",
    );
    let out = msqp(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta2"));

    let out = msqp(&["run", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(out.status.code(), Some(1));

    let out = msqp(&["run", "--config", &cfg, "--set", "beta2=0.999", "--set", "optimizer=newton"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("optimizer"));
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // Gradient noise this large overflows J Jᵀ after the first step.
    let cfg = write_config(
        dir.path(),
        "problem = circle\noptimizer = sqp-heavyball\niterations = 100\nalpha = 1\nnoise_sigma = 1e300\n",
    );
    let out = msqp(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteration"));
}

#[test]
fn sweep_writes_per_seed_csvs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("noisy.csv");
    let cfg = write_config(
        dir.path(),
        &format!(
            "problem = circle\noptimizer = sqp-adam\niterations = 100\nalpha = 0.01\nnoise_sigma = 0.1\noutput = {}\n",
            csv.display()
        ),
    );
    let out = msqp(&["sweep", "--config", &cfg, "--seeds", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for s in 0..3 {
        assert!(dir.path().join(format!("noisy_seed{s}.csv")).exists());
    }
    let summary = fs::read_to_string(dir.path().join("noisy_summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert!(lines.next().unwrap().starts_with("group,n_ok,n_failed,"));
    let row = lines.next().unwrap();
    assert!(row.contains(",3,0,"), "{row}");
    assert_eq!(lines.next(), None);
}

#[test]
fn check_passes() {
    let out = msqp(&["check"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn series_and_spring_data() {
    let out = msqp(&["series", "--beta", "0.5", "--terms", "1000"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 5);
    assert_eq!(msqp(&["series", "--beta", "1.0"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spring.csv");
    assert!(msqp(&["spring-data", "--output", path.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("kind,t,target"));
    assert_eq!(text.lines().count(), 1 + 10 + 30 + 3);
}
