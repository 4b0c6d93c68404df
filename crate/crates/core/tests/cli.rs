use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use uapca::io::load_dataset;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn students() -> String {
    format!("{DATA}/students.json")
}

fn uapca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uapca"))
        .args(args)
        .env_remove("UAPCA_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).expect("output file exists")
}

/// stdout without the `wrote <path>` lines.
fn summary(out: &Output) -> String {
    stdout(out)
        .lines()
        .filter(|l| !l.starts_with("wrote "))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn project_writes_csv_and_svg() {
    let dir = TempDir::new().unwrap();
    let out = uapca(&[
        "project",
        "--input",
        &students(),
        "--out-prefix",
        &path(&dir, "s"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = read(dir.path().join("s.projection.csv"));
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("label,mean_1,mean_2,cov_1_1,cov_1_2,cov_2_1,cov_2_2")
    );
    assert_eq!(lines.count(), 6);
    assert!(read(dir.path().join("s.projection.svg")).contains("<svg"));
    assert!(stdout(&out).contains("lambda_1 ="));
}

#[test]
fn project_without_svg_for_other_dims() {
    let dir = TempDir::new().unwrap();
    let out = uapca(&[
        "project",
        "--input",
        &students(),
        "--dims",
        "3",
        "--out-prefix",
        &path(&dir, "s"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("s.projection.csv").exists());
    assert!(!dir.path().join("s.projection.svg").exists());
}

#[test]
fn zero_scale_equals_point_pca_on_means() {
    let dir = TempDir::new().unwrap();
    let ds = load_dataset(students()).unwrap();
    let mut means = ds.dim_names().join(",") + ",label\n";
    for (i, item) in ds.items().iter().enumerate() {
        for v in item.mean().iter() {
            write!(means, "{v},").unwrap();
        }
        writeln!(means, "{}", ds.label(i)).unwrap();
    }
    let means_path = path(&dir, "means.csv");
    fs::write(&means_path, means).unwrap();

    let a = uapca(&[
        "project",
        "--input",
        &students(),
        "--scale",
        "0",
        "--out-prefix",
        &path(&dir, "a"),
    ]);
    let b = uapca(&[
        "project",
        "--input",
        &means_path,
        "--points",
        "--out-prefix",
        &path(&dir, "b"),
    ]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(summary(&a), summary(&b));
    for ext in ["projection.csv", "projection.svg"] {
        assert_eq!(
            read(dir.path().join(format!("a.{ext}"))),
            read(dir.path().join(format!("b.{ext}"))),
            "{ext}"
        );
    }
}

#[test]
fn infinite_scale_is_accepted() {
    let dir = TempDir::new().unwrap();
    let out = uapca(&[
        "project",
        "--input",
        &students(),
        "--scale",
        "inf",
        "--out-prefix",
        &path(&dir, "s"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let bad = uapca(&[
        "project",
        "--input",
        &students(),
        "--scale",
        "-1",
        "--out-prefix",
        &path(&dir, "s"),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn aggregated_iris_projection() {
    let dir = TempDir::new().unwrap();
    let iris = format!("{DATA}/iris.csv");
    for mode in ["gaussian", "empirical"] {
        let out = uapca(&[
            "project",
            "--input",
            &iris,
            "--aggregate-by",
            "label",
            "--aggregate-mode",
            mode,
            "--out-prefix",
            &path(&dir, mode),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let csv = read(dir.path().join(format!("{mode}.projection.csv")));
        let labels: Vec<&str> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(labels, ["setosa", "versicolor", "virginica"]);
    }
    let missing = uapca(&[
        "project",
        "--input",
        &iris,
        "--aggregate-by",
        "species",
        "--out-prefix",
        &path(&dir, "x"),
    ]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("species"));
}

#[test]
fn missing_input_exits_1_naming_path() {
    let dir = TempDir::new().unwrap();
    let out = uapca(&[
        "project",
        "--input",
        "/no/such/file.json",
        "--out-prefix",
        &path(&dir, "x"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("/no/such/file.json"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn invalid_dataset_exits_1() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    fs::write(
        &bad,
        r#"{"dims": ["a"], "items": [{"values": [{"trapezoid": [12, 10, 8, 6]}]}]}"#,
    )
    .unwrap();
    let out = uapca(&[
        "project",
        "--input",
        &bad,
        "--dims",
        "1",
        "--out-prefix",
        &path(&dir, "x"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("a <= b <= c <= d"));
    assert_eq!(stderr(&out).trim_end().lines().count(), 1);
}

#[test]
fn too_many_dims_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = uapca(&[
        "project",
        "--input",
        &students(),
        "--dims",
        "5",
        "--out-prefix",
        &path(&dir, "x"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("1 <= q <= D = 4"), "{}", stderr(&out));
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(
        uapca(&["project", "--input", &students()]).status.code(),
        Some(2)
    );
    assert_eq!(uapca(&["project", "--bogus"]).status.code(), Some(2));
    assert_eq!(uapca(&[]).status.code(), Some(2));
    assert_eq!(
        uapca(&[
            "trace",
            "--input",
            &students(),
            "--steps",
            "x",
            "--out-prefix",
            "p"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn trace_writes_all_outputs() {
    let dir = TempDir::new().unwrap();
    let out = uapca(&[
        "trace",
        "--input",
        &students(),
        "--out-prefix",
        &path(&dir, "t"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for ext in ["traces.csv", "eigvals.csv", "traces.svg", "eigvals.svg"] {
        assert!(dir.path().join(format!("t.{ext}")).exists(), "{ext}");
    }
    assert!(stdout(&out).contains("avoided crossing"));
    let eig = read(dir.path().join("t.eigvals.csv"));
    assert_eq!(eig.lines().next(), Some("step,s,index,lambda"));
    assert_eq!(eig.lines().count(), 1 + 64 * 4);
}

/// `(step, axis) -> (x, y)` for the `+` orientation.
fn trace_rows(csv: &str) -> Vec<(usize, String, f64, f64)> {
    csv.lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[3] == "+").then(|| {
                (
                    f[0].parse().unwrap(),
                    f[2].to_string(),
                    f[4].parse().unwrap(),
                    f[5].parse().unwrap(),
                )
            })
        })
        .collect()
}

#[test]
fn student_p1_trace_moves_to_the_unit_circle() {
    let dir = TempDir::new().unwrap();
    let out = uapca(&[
        "trace",
        "--input",
        &students(),
        "--out-prefix",
        &path(&dir, "t"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = trace_rows(&read(dir.path().join("t.traces.csv")));
    let last = rows.iter().map(|r| r.0).max().unwrap();
    assert_eq!(last, 63);
    let (_, _, x, y) = rows.iter().find(|r| r.0 == last && r.1 == "P1").unwrap();
    assert!(x.hypot(*y) > 0.9, "P1 ends at norm {}", x.hypot(*y));
}

#[test]
fn point_only_traces_are_constant() {
    let dir = TempDir::new().unwrap();
    let pts = path(&dir, "pts.csv");
    fs::write(&pts, "a,b,c\n0,1,2\n2,0.5,1\n1,3,0\n4,1,1\n").unwrap();
    let out = uapca(&[
        "trace",
        "--input",
        &pts,
        "--points",
        "--steps",
        "8",
        "--out-prefix",
        &path(&dir, "t"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = trace_rows(&read(dir.path().join("t.traces.csv")));
    assert_eq!(rows.len(), 8 * 3);
    for axis in ["a", "b", "c"] {
        let coords: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.1 == axis)
            .map(|r| (r.2, r.3))
            .collect();
        assert!(coords.iter().all(|c| *c == coords[0]), "{axis}");
    }
    assert!(stdout(&out).contains("avoided crossings: none"));
}

#[test]
fn trace_constraints_exit_2() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "t");
    let steps = uapca(&[
        "trace",
        "--input",
        &students(),
        "--steps",
        "1",
        "--out-prefix",
        &p,
    ]);
    assert_eq!(steps.status.code(), Some(2));
    assert!(stderr(&steps).contains("at least 2"));
    let dims = uapca(&[
        "trace",
        "--input",
        &students(),
        "--dims",
        "3",
        "--out-prefix",
        &p,
    ]);
    assert_eq!(dims.status.code(), Some(2));
    assert!(stderr(&dims).contains("--dims 2"));
}

#[test]
fn compare_sampling_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    for out in [&a, &b] {
        let run = uapca(&[
            "compare-sampling",
            "--runs",
            "1",
            "--dims",
            "2",
            "--seed",
            "7",
            "--out",
            out,
        ]);
        assert!(run.status.success(), "{}", stderr(&run));
    }
    let table = read(&a);
    assert_eq!(table, read(&b));
    assert_eq!(
        table.lines().next(),
        Some("dim,samples,median_hellinger,runs,seed")
    );
    assert_eq!(table.lines().count(), 11);
    assert!(table
        .lines()
        .skip(1)
        .all(|l| l.starts_with("2,") && l.ends_with(",1,7")));
}

#[test]
fn seed_environment_overrides_flag() {
    let dir = TempDir::new().unwrap();
    let (env_out, flag_out, other) = (
        path(&dir, "env.csv"),
        path(&dir, "flag.csv"),
        path(&dir, "other.csv"),
    );
    let common = [
        "compare-sampling",
        "--runs",
        "2",
        "--dims",
        "2,3",
        "--sample-counts",
        "10,50",
    ];
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_uapca"));
        cmd.args(common).args(extra).env_remove("UAPCA_SEED");
        if let Some(v) = env {
            cmd.env("UAPCA_SEED", v);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    };
    run(&["--seed", "1", "--out", &env_out], Some("7"));
    run(&["--seed", "7", "--out", &flag_out], None);
    run(&["--seed", "1", "--out", &other], None);
    assert_eq!(read(&env_out), read(&flag_out));
    assert_ne!(read(&env_out), read(&other));

    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uapca"));
    let bad = cmd
        .args(common)
        .args(["--out", &other])
        .env("UAPCA_SEED", "seven")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn compare_sampling_constraints_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "c.csv");
    for args in [
        vec!["compare-sampling", "--dims", "0", "--out", &out],
        vec!["compare-sampling", "--runs", "0", "--out", &out],
        vec![
            "compare-sampling",
            "--sample-counts",
            "50,10",
            "--out",
            &out,
        ],
        vec!["compare-sampling", "--dims", "2"],
    ] {
        assert_eq!(uapca(&args).status.code(), Some(2), "{args:?}");
    }
    assert!(!PathBuf::from(&out).exists());
}

#[test]
fn unwritable_output_exits_1() {
    let out = uapca(&[
        "project",
        "--input",
        &students(),
        "--out-prefix",
        "/no/such/dir/p",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/no/such/dir/p.projection.csv"));
}
