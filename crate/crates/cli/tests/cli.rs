//! End-to-end tests driving the `qcts` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qcts"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qcts-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn example_matrix() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/example_4x20_z128.txt")
}

fn write_small_matrix(dir: &Path) -> PathBuf {
    let path = dir.join("small.txt");
    std::fs::write(&path, "2 4 6\n0 2 5 1\n3 0 4 2\n").unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn project_identity_round_trips_bytes() {
    let dir = workdir("ident");
    let input = write_small_matrix(&dir);
    let output = dir.join("same.txt");
    let out = run(&[
        "project",
        input.to_str().unwrap(),
        output.to_str().unwrap(),
        "--z-star",
        "6",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(&output).unwrap()
    );
    // sidecar manifest exists and references the output digest
    let manifest = std::fs::read_to_string(dir.join("same.txt.manifest.json")).unwrap();
    assert!(manifest.contains("\"output_digest\""));
}

#[test]
fn lift_then_project_restores_input() {
    let dir = workdir("roundtrip");
    let input = write_small_matrix(&dir);
    let lifted = dir.join("lifted.txt");
    let back = dir.join("back.txt");
    let out = run(&[
        "lift",
        input.to_str().unwrap(),
        lifted.to_str().unwrap(),
        "--factor",
        "2",
        "--seed",
        "9",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = run(&[
        "project",
        lifted.to_str().unwrap(),
        back.to_str().unwrap(),
        "--z-star",
        "6",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(&back).unwrap()
    );
}

#[test]
fn lift_is_reproducible_and_seed_sensitive() {
    let dir = workdir("liftseed");
    let input = write_small_matrix(&dir);
    let a = dir.join("a.txt");
    let b = dir.join("b.txt");
    let c = dir.join("c.txt");
    assert!(run(&[
        "lift",
        input.to_str().unwrap(),
        a.to_str().unwrap(),
        "--seed",
        "1"
    ])
    .status
    .success());
    assert!(run(&[
        "lift",
        input.to_str().unwrap(),
        b.to_str().unwrap(),
        "--seed",
        "1"
    ])
    .status
    .success());
    assert!(run(&[
        "lift",
        input.to_str().unwrap(),
        c.to_str().unwrap(),
        "--seed",
        "2"
    ])
    .status
    .success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());

    // different seeds record different offset digests in the manifests
    let ma = std::fs::read_to_string(dir.join("a.txt.manifest.json")).unwrap();
    let mc = std::fs::read_to_string(dir.join("c.txt.manifest.json")).unwrap();
    let digest = |m: &str| {
        let v: serde_json::Value = serde_json::from_str(m).unwrap();
        v["args"]["b_digest"].as_str().unwrap().to_string()
    };
    assert_ne!(digest(&ma), digest(&mc));
}

#[test]
fn lift_rejects_factor_one() {
    let dir = workdir("factor1");
    let input = write_small_matrix(&dir);
    let out = run(&[
        "lift",
        input.to_str().unwrap(),
        dir.join("x.txt").to_str().unwrap(),
        "--factor",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn project_rejects_non_divisor_naming_both_values() {
    let dir = workdir("nondiv");
    let input = write_small_matrix(&dir);
    let out = run(&[
        "project",
        input.to_str().unwrap(),
        dir.join("x.txt").to_str().unwrap(),
        "--z-star",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains('4') && msg.contains('6'), "message: {msg}");
}

#[test]
fn project_rejects_malformed_matrix() {
    let dir = workdir("badmatrix");
    let path = dir.join("bad.txt");
    std::fs::write(&path, "1 1 4\n7\n").unwrap();
    let out = run(&[
        "project",
        path.to_str().unwrap(),
        dir.join("x.txt").to_str().unwrap(),
        "--z-star",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn enumerate_writes_reproducible_database() {
    let dir = workdir("enum");
    let input = write_small_matrix(&dir);
    let db1 = dir.join("a.tsdb");
    let db2 = dir.join("b.tsdb");
    let args = |out: &Path| {
        vec![
            "enumerate".to_string(),
            input.to_str().unwrap().to_string(),
            out.to_str().unwrap().to_string(),
            "--strategy".into(),
            "exhaustive".into(),
            "--wmax".into(),
            "3".into(),
            "--lifts".into(),
            "2".into(),
            "--seed".into(),
            "7".into(),
        ]
    };
    let out = bin().args(args(&db1)).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let shown = stdout(&out);
    assert!(
        shown.contains("w\\v"),
        "missing distribution table: {shown}"
    );
    assert!(
        shown.contains("fold-down class changes"),
        "missing diff histogram: {shown}"
    );

    let out = bin().args(args(&db2)).output().unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&db1).unwrap(), std::fs::read(&db2).unwrap());

    let text = std::fs::read_to_string(&db1).unwrap();
    assert!(text.starts_with("#qcts v1 2 4 6 "));
    assert!(text.lines().nth(1).unwrap().starts_with("#meta "));
}

#[test]
fn enumerate_exhaustive_refuses_oversized_code() {
    let dir = workdir("oversize");
    let out = run(&[
        "enumerate",
        example_matrix().to_str().unwrap(),
        dir.join("x.tsdb").to_str().unwrap(),
        "--strategy",
        "exhaustive",
        "--wmax",
        "30",
        "--lifts",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cap"), "{}", stderr(&out));
}

#[test]
fn enumerate_empty_result_is_valid() {
    let dir = workdir("empty");
    // single full-weight column: no nonzero vector with v <= w <= 1 exists
    let path = dir.join("tiny.txt");
    std::fs::write(&path, "2 1 3\n0\n1\n").unwrap();
    let db = dir.join("empty.tsdb");
    let out = run(&[
        "enumerate",
        path.to_str().unwrap(),
        db.to_str().unwrap(),
        "--strategy",
        "exhaustive",
        "--wmax",
        "1",
        "--vmax",
        "0",
        "--lifts",
        "0",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("no records"));
    let text = std::fs::read_to_string(&db).unwrap();
    assert!(
        text.lines().all(|l| l.starts_with('#')),
        "expected no record lines: {text}"
    );

    let stats = run(&["stats", db.to_str().unwrap()]);
    assert!(stats.status.success());
    assert_eq!(stdout(&stats), "w,v,count\n");
}

#[test]
fn classify_support_and_database() {
    let dir = workdir("classify");
    let input = write_small_matrix(&dir);
    let out = run(&["classify", input.to_str().unwrap(), "--support", "0,5,9"]);
    assert!(out.status.success());
    let line = stdout(&out);
    let parts: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(parts[0], "3");

    let db = dir.join("c.tsdb");
    assert!(run(&[
        "enumerate",
        input.to_str().unwrap(),
        db.to_str().unwrap(),
        "--strategy",
        "exhaustive",
        "--wmax",
        "3",
        "--lifts",
        "0",
    ])
    .status
    .success());
    let out = run(&["classify", input.to_str().unwrap(), db.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).lines().all(|l| l.ends_with("ok")));
}

#[test]
fn classify_rejects_mismatched_matrix() {
    let dir = workdir("mismatch");
    let input = write_small_matrix(&dir);
    let db = dir.join("m.tsdb");
    assert!(run(&[
        "enumerate",
        input.to_str().unwrap(),
        db.to_str().unwrap(),
        "--strategy",
        "exhaustive",
        "--wmax",
        "3",
        "--lifts",
        "0",
    ])
    .status
    .success());
    let other = dir.join("other.txt");
    std::fs::write(&other, "2 4 6\n1 2 5 1\n3 0 4 2\n").unwrap();
    let out = run(&["classify", other.to_str().unwrap(), db.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("built from matrix"), "{msg}");
}

#[test]
fn weigh_tabular_and_oracle_agree() {
    let dir = workdir("weigh");
    let input = write_small_matrix(&dir);
    let db = dir.join("w.tsdb");
    assert!(run(&[
        "enumerate",
        input.to_str().unwrap(),
        db.to_str().unwrap(),
        "--strategy",
        "exhaustive",
        "--wmax",
        "3",
        "--lifts",
        "0",
    ])
    .status
    .success());

    let report = |name: &str, oracle: bool| -> serde_json::Value {
        let path = dir.join(name);
        let mut args = vec![
            "weigh".to_string(),
            input.to_str().unwrap().to_string(),
            db.to_str().unwrap().to_string(),
            path.to_str().unwrap().to_string(),
            "--sigma".into(),
            "1.0".into(),
            "--samples".into(),
            "2000".into(),
            "--seed".into(),
            "5".into(),
            "--basis".into(),
            "2".into(),
        ];
        if oracle {
            args.push("--oracle".into());
        }
        let out = bin().args(&args).output().unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
    };

    let tabular = report("tab.json", false);
    let naive = report("naive.json", true);
    let (a, b) = (
        tabular["estimate"].as_f64().unwrap(),
        naive["estimate"].as_f64().unwrap(),
    );
    assert!(
        (a - b).abs() <= 1e-9 * a.abs().max(1e-300),
        "tabular {a} vs oracle {b}"
    );
    assert_eq!(tabular["L"].as_u64(), Some(2000));
    assert!(tabular["per_point"].as_array().unwrap().len() == 2);
    assert!(tabular.get("delta_policy").is_some());
}

#[test]
fn weigh_rejects_zero_samples_and_bad_pairing() {
    let dir = workdir("weighbad");
    let input = write_small_matrix(&dir);
    let db = dir.join("w.tsdb");
    assert!(run(&[
        "enumerate",
        input.to_str().unwrap(),
        db.to_str().unwrap(),
        "--strategy",
        "exhaustive",
        "--wmax",
        "3",
        "--lifts",
        "0",
    ])
    .status
    .success());

    let out = run(&[
        "weigh",
        input.to_str().unwrap(),
        db.to_str().unwrap(),
        dir.join("r.json").to_str().unwrap(),
        "--sigma",
        "1.0",
        "--samples",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));

    let other = dir.join("other.txt");
    std::fs::write(&other, "2 4 6\n1 2 5 1\n3 0 4 2\n").unwrap();
    let out = run(&[
        "weigh",
        other.to_str().unwrap(),
        db.to_str().unwrap(),
        dir.join("r.json").to_str().unwrap(),
        "--sigma",
        "1.0",
        "--samples",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    // both digests surface in the mismatch report
    assert!(msg.matches(char::is_alphanumeric).count() > 0);
    assert!(msg.contains("built from matrix"), "{msg}");
}

#[test]
fn stats_difference_table_against_base() {
    let dir = workdir("statsdiff");
    let input = write_small_matrix(&dir);
    let lifted = dir.join("lifted.txt");
    assert!(run(&[
        "lift",
        input.to_str().unwrap(),
        lifted.to_str().unwrap(),
        "--factor",
        "2",
        "--seed",
        "3",
    ])
    .status
    .success());
    let db = dir.join("cover.tsdb");
    assert!(run(&[
        "enumerate",
        lifted.to_str().unwrap(),
        db.to_str().unwrap(),
        "--strategy",
        "exhaustive",
        "--wmax",
        "3",
        "--lifts",
        "0",
    ])
    .status
    .success());

    let out = run(&["stats", db.to_str().unwrap(), input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("dw,dv,percent"));
    let mut total = 0.0f64;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 3);
        let dw: i64 = cols[0].parse().unwrap();
        let dv: i64 = cols[1].parse().unwrap();
        assert!(dw % 2 == 0 && dv % 2 == 0);
        let pct: f64 = cols[2].parse().unwrap();
        assert_eq!(cols[2].split('.').nth(1).unwrap().len(), 6);
        total += pct;
    }
    assert!((total - 100.0).abs() < 1e-4);

    // differences need a base matrix that the database actually covers
    let out = run(&["stats", db.to_str().unwrap(), lifted.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["enumerate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--help"]);
    assert!(out.status.success());
}

#[test]
fn reference_matrix_lift_project_round_trip() {
    let dir = workdir("reference");
    let input = example_matrix();
    let lifted = dir.join("lifted.txt");
    let back = dir.join("back.txt");
    assert!(run(&[
        "lift",
        input.to_str().unwrap(),
        lifted.to_str().unwrap(),
        "--factor",
        "2",
        "--seed",
        "1",
    ])
    .status
    .success());
    assert!(std::fs::read_to_string(&lifted)
        .unwrap()
        .starts_with("4 20 256\n"));
    assert!(run(&[
        "project",
        lifted.to_str().unwrap(),
        back.to_str().unwrap(),
        "--z-star",
        "128",
    ])
    .status
    .success());
    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(&back).unwrap()
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = workdir("threads");
    let input = write_small_matrix(&dir);
    let db = dir.join("t.tsdb");
    assert!(run(&[
        "enumerate",
        input.to_str().unwrap(),
        db.to_str().unwrap(),
        "--strategy",
        "cycle",
        "--wmax",
        "6",
        "--vmax",
        "8",
        "--trials",
        "100",
        "--lifts",
        "0",
        "--seed",
        "3",
    ])
    .status
    .success());

    let report = |threads: &str| -> Vec<u8> {
        let path = dir.join(format!("r{threads}.json"));
        let out = run(&[
            "weigh",
            input.to_str().unwrap(),
            db.to_str().unwrap(),
            path.to_str().unwrap(),
            "--sigma",
            "1.0",
            "--samples",
            "1000",
            "--seed",
            "5",
            "--basis",
            "2",
            "--threads",
            threads,
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        std::fs::read(path).unwrap()
    };
    assert_eq!(report("1"), report("4"));
}

#[test]
fn threads_env_var_is_honored() {
    let dir = workdir("threadenv");
    let input = write_small_matrix(&dir);
    let output = dir.join("p.txt");
    let out = bin()
        .env("QCTS_THREADS", "2")
        .args([
            "project",
            input.to_str().unwrap(),
            output.to_str().unwrap(),
            "--z-star",
            "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));

    let out = bin()
        .env("QCTS_THREADS", "not-a-number")
        .args([
            "project",
            input.to_str().unwrap(),
            dir.join("q.txt").to_str().unwrap(),
            "--z-star",
            "3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
