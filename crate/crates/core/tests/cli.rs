use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-d2d"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen_data(dir: &Path) -> std::path::PathBuf {
    let o = run(dir, &["gen-data"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("dataset.csv")
}

#[test]
fn gen_data_writes_header_plus_rows_reproducibly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = gen_data(a.path());
    let pb = gen_data(b.path());
    let text = std::fs::read(&pa).unwrap();
    assert_eq!(String::from_utf8_lossy(&text).lines().count(), 1001);
    assert_eq!(text, std::fs::read(&pb).unwrap());
}

#[test]
fn effective_configuration_is_echoed() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["gen-data", "--set", "n_train=10"]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("n_train = 10"), "{err}");
    assert!(err.contains("gamma_min_d = 0.1"));
}

#[test]
fn bad_configuration_exits_one_and_names_the_key() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["gen-data", "--set", "bogus_key=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus_key"));

    let cfg = d.path().join("run.toml");
    std::fs::write(&cfg, "epsilon = 0.05\nepsilonn = 0.1\n").unwrap();
    let o = run(d.path(), &["gen-data", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilonn"));

    let o = run(d.path(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_set_outputs() {
    let d = tempfile::tempdir().unwrap();
    let data = gen_data(d.path());
    let data = data.to_str().unwrap();

    let o = run(d.path(), &["fit-set", data, "--method", "box"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(d.path().join("set_boxset.txt")).unwrap();
    assert!(text.contains("shape=BoxSet"));

    let o = run(d.path(), &["fit-set", data, "--method", "svc"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("C=0.02"), "{}", stdout(&o));
    assert!(d.path().join("set_svc.txt").exists());

    let o = run(d.path(), &["fit-set", "/nonexistent/data.csv", "--method", "svc"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn allocate_endpoint_trace_and_collapse() {
    let d = tempfile::tempdir().unwrap();
    let data = gen_data(d.path());
    run(d.path(), &["fit-set", data.to_str().unwrap(), "--method", "box"]);
    let set = d.path().join("set_boxset.txt");
    let set = set.to_str().unwrap();

    let o = run(d.path(), &["allocate", set, "--verbosity", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("method,epsilon,gamma_min_d,p_c,p_d,feasible,iterations,margin")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "BoxSet");
    assert_eq!(row[5], "true");
    let p_c: f64 = row[3].parse().unwrap();
    // default budget 0.1 W, termination threshold 1e-5 W
    assert!((p_c - 0.1).abs() <= 1e-5);
    assert_eq!(lines.next(), Some("iteration,p_d,p_c"));
    let trace = lines.count();
    assert!((1..=25).contains(&trace));
    assert_eq!(trace, row[6].parse::<usize>().unwrap());

    let o = run(d.path(), &["allocate", set, "--set", "gamma_min_d=1000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains(",false,"));
}

#[test]
fn sweep_file_inventory_and_rerun() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--set",
        "sweep_var=\"epsilon\"",
        "--set",
        "sweep_grid=[0.05, 0.06, 0.07, 0.08, 0.09, 0.1]",
        "--set",
        "n_train=300",
        "--set",
        "n_test=1000",
    ];
    let o = run(d.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = std::fs::read(d.path().join("metrics.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&metrics).lines().count(), 37);
    let mut names: Vec<String> = std::fs::read_dir(d.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "cdf_boxset.csv",
            "cdf_l1ball.csv",
            "cdf_l2ball.csv",
            "cdf_nonrobust.csv",
            "cdf_quantilesvc.csv",
            "cdf_svc.csv",
            "metrics.csv"
        ]
    );
    let again = tempfile::tempdir().unwrap();
    assert_eq!(run(again.path(), &args).status.code(), Some(0));
    assert_eq!(std::fs::read(again.path().join("metrics.csv")).unwrap(), metrics);
    assert_eq!(
        std::fs::read(again.path().join("cdf_svc.csv")).unwrap(),
        std::fs::read(d.path().join("cdf_svc.csv")).unwrap()
    );
}
