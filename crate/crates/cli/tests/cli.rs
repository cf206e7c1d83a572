use std::path::PathBuf;
use std::process::{Command, Output};

const CFG_A_EIGENVALUES: [f64; 7] = [
    -0.974_623_702_788_533_6,
    1.220_098_836_324_658_8,
    5.724_697_005_392_685_7,
    15.485_759_232_028_737,
    30.258_702_400_944_391,
    49.984_876_276_631_682,
    74.652_278_110_090_570,
];

fn problem(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "problems", name]
        .iter()
        .collect();
    path.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sturmtx"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Data rows (header line included) of a CSV report.
fn rows(out: &Output) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(out.stdout.as_slice())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_reports_rho_and_rejects_bad_input() {
    let out = run(&["validate", &problem("cfg_a.toml")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("rho = 1.0000000000000000e0"));
    assert!(stdout(&out).contains("symmetry_condition = holds"));

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(problem("cfg_a.toml")).unwrap();
    let bad = write_temp(
        &dir,
        "rho.toml",
        &text.replace("alpha = [0, -1]", "alpha = [0, 1]"),
    );
    let out = run(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("rho"), "{}", stderr(&out));

    let out = run(&["validate", "/nonexistent/problem.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot read"));
}

#[test]
fn eigs_window_matches_closed_form_roots() {
    let out = run(&[
        "eigs",
        &problem("cfg_a.toml"),
        "--lambda-min",
        "-5",
        "--lambda-max",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = rows(&out);
    assert_eq!(table[0], ["n", "lambda", "d_residual", "norm_check"]);
    assert_eq!(table.len() - 1, CFG_A_EIGENVALUES.len());
    for (row, expected) in table[1..].iter().zip(CFG_A_EIGENVALUES) {
        let lambda = num(&row[1]);
        assert!(
            (lambda - expected).abs() <= 1e-8 * expected.abs(),
            "{lambda} vs {expected}"
        );
        assert!((num(&row[3]) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn eigs_empty_window_and_oracle_columns() {
    let out = run(&[
        "eigs",
        &problem("cfg_a.toml"),
        "--lambda-min",
        "2",
        "--lambda-max",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(rows(&out).len(), 1);

    let out = run(&[
        "eigs",
        &problem("cfg_b.toml"),
        "--k",
        "4",
        "--oracle",
        "--oracle-m",
        "128",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = rows(&out);
    assert_eq!(table[0].len(), 6);
    assert_eq!(table.len(), 5);
    for row in &table[1..] {
        let (lambda, oracle, diff) = (num(&row[1]), num(&row[4]), num(&row[5]));
        assert!(oracle.is_finite() && (oracle - lambda - diff).abs() < 1e-12);
        assert!(diff.abs() / (1.0 + lambda.abs()) < 1e-2);
    }
}

#[test]
fn output_is_deterministic_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = problem("variable.toml");
    for (path, jobs) in [(&a, "1"), (&b, "3")] {
        let out = run(&[
            "--jobs",
            jobs,
            "--out",
            path.to_str().unwrap(),
            "eigs",
            &cfg,
            "--k",
            "6",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(out.stdout.is_empty());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("# sturmtx "));
    assert!(
        text.contains("#   p = [\"exp(x)\", \"2 + x\", \"1 + x ^ 2\"]"),
        "{text}"
    );
}

/// `(x, side, phi, phi')` rows.
fn eigenfunction_rows(cfg: &str, n: &str, samples: &str) -> Vec<(f64, String, f64, f64)> {
    let out = run(&[
        "eigenfunction",
        &problem(cfg),
        "--n",
        n,
        "--samples",
        samples,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    rows(&out)[1..]
        .iter()
        .map(|r| (num(&r[0]), r[1].clone(), num(&r[2]), num(&r[3])))
        .collect()
}

#[test]
fn eigenfunction_rows_honor_breakpoints() {
    let a = eigenfunction_rows("cfg_a.toml", "3", "51");
    let tagged: Vec<usize> = (0..a.len()).filter(|&i| !a[i].1.is_empty()).collect();
    assert_eq!(tagged.len(), 4);
    for pair in tagged.chunks(2) {
        let (left, right) = (&a[pair[0]], &a[pair[1]]);
        assert_eq!((left.1.as_str(), right.1.as_str()), ("-0", "+0"));
        assert_eq!(left.0, right.0);
        assert!((left.2 - right.2).abs() < 1e-8 && (left.3 - right.3).abs() < 1e-8);
    }

    let b = eigenfunction_rows("cfg_b.toml", "2", "51");
    let i = b.iter().position(|r| r.1 == "-0").unwrap();
    assert!((b[i + 1].2 / b[i].2 - 0.5).abs() < 1e-12);
    assert!((b[i + 1].3 / b[i].3 - 0.5).abs() < 1e-12);
}

#[test]
fn sampled_eigenfunction_has_unit_norm() {
    let samples = 401;
    let rows = eigenfunction_rows("cfg_a.toml", "4", &samples.to_string());
    let mut integral = 0.0;
    for piece in rows.chunks(samples) {
        let h = (piece[samples - 1].0 - piece[0].0) / (samples - 1) as f64;
        for (k, r) in piece.iter().enumerate() {
            let w = if k == 0 || k == samples - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            integral += w * h / 3.0 * r.2 * r.2;
        }
    }
    // CFG-A: (phi)'_1 = phi'(1) and p(1)/rho = 1.
    let boundary = rows.last().unwrap().3;
    assert!(
        (integral + boundary * boundary - 1.0).abs() < 1e-8,
        "{integral}"
    );
}

#[test]
fn eigenfunction_index_beyond_window_fails() {
    let out = run(&[
        "eigenfunction",
        &problem("cfg_a.toml"),
        "--n",
        "3",
        "--lambda-min",
        "-5",
        "--lambda-max",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn resolvent_examples_and_near_eigenvalue() {
    let cfg = problem("cfg_a.toml");
    let out = run(&[
        "resolvent",
        &cfg,
        "--lambda",
        "0",
        "--rhs",
        "1",
        "--t2",
        "0",
        "--samples",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = rows(&out);
    let middle = table
        .iter()
        .find(|r| r[0] == "0.0000000000000000e0")
        .unwrap();
    assert!((num(&middle[2]) - 0.5).abs() < 1e-10);
    let text = stdout(&out);
    let scalar = text
        .lines()
        .find_map(|l| l.strip_prefix("# boundary_scalar = "))
        .unwrap();
    assert!((num(scalar) + 1.0).abs() < 1e-10);
    assert!(text.contains("# residual_ode = "));

    let out = run(&["resolvent", &cfg, "--lambda", "0.5", "--rhs", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(rows(&out)[1..]
        .iter()
        .all(|r| num(&r[2]) == 0.0 && num(&r[3]) == 0.0));

    let out = run(&[
        "resolvent",
        &cfg,
        "--lambda",
        "1.2200988363246588",
        "--rhs",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(out.stdout.is_empty());

    let out = run(&["resolvent", &cfg, "--lambda", "0", "--rhs", "1 +"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("offset 3"));
}

#[test]
fn expand_reports_coefficients() {
    let out = run(&[
        "expand",
        &problem("cfg_a.toml"),
        "--terms",
        "8",
        "--rhs",
        "x + 1",
        "--t2",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(rows(&out).len(), 9);
    let text = stdout(&out);
    let gap = text
        .lines()
        .find_map(|l| l.strip_prefix("# bessel_gap = "))
        .unwrap();
    assert!(num(gap) >= -1e-10);
}

#[test]
fn verify_statuses_and_exit_codes() {
    let out = run(&["verify", &problem("cfg_a.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(rows(&out)[1..].iter().all(|r| r[1] == "pass"));

    let out = run(&["verify", &problem("asymmetric.toml")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("# self_adjoint = false"));
    assert!(text.contains("symmetry of K on random domain pairs,expected-fail"));
    assert!(!text.contains(",FAIL,"));

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(problem("cfg_a.toml")).unwrap();
    let truncated = write_temp(
        &dir,
        "cut.toml",
        &text[..text.find("[coefficients]").unwrap()],
    );
    assert_eq!(run(&["verify", &truncated]).status.code(), Some(2));
    assert_eq!(
        run(&["verify", &problem("cfg_a.toml"), "--level", "fast"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn rejects_bad_global_flags() {
    let cfg = problem("cfg_a.toml");
    assert_eq!(run(&["--tol", "0", "eigs", &cfg]).status.code(), Some(2));
    assert_eq!(
        run(&["--grid", "cubic:4", "eigs", &cfg]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["--jobs", "0", "eigs", &cfg]).status.code(), Some(2));
}
