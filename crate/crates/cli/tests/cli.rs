use std::process::{Command, Output};

fn qcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcalc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Column `col` of each data row.
fn column(csv: &str, col: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn eval_examples() {
    let o = qcalc(&[
        "eval", "qexp(x)", "--q", "0.5", "--from", "0", "--to", "1", "--points", "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "x,value,flags\n0.0000000000000000e0,1.0000000000000000e0,\n1.0000000000000000e0,2.2500000000000000e0,\n"
    );
    let o = qcalc(&[
        "eval", "x", "--q", "1", "--from", "0", "--to", "1", "--points", "2",
    ]);
    assert_eq!(column(&stdout(&o), 1), vec![0.0, 1.0]);
    assert!(stdout(&o).contains("q1_branch") || stdout(&o).lines().count() == 3);
}

#[test]
fn eval_flags_cutoff() {
    let o = qcalc(&[
        "eval", "qexp(x)", "--q", "0.5", "--from", "-3", "--to", "-2.5", "--points", "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cutoff_applied"));
}

#[test]
fn domain_error_exits_one_without_output() {
    let o = qcalc(&[
        "eval", "qlog(x)", "--q", "0.5", "--from", "-1", "--to", "1", "--points", "3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("domain"));
}

#[test]
fn parse_error_exits_two_with_offset() {
    let o = qcalc(&[
        "eval", "1 + @", "--q", "0.5", "--from", "0", "--to", "1", "--points", "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("byte 4"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &[
            "eval", "x", "--q", "0.5", "--from", "0", "--to", "1", "--points", "1",
        ][..],
        &[
            "eval", "x", "--q", "0.5", "--from", "1", "--to", "0", "--points", "3",
        ],
        &["eval", "x", "--from", "0", "--to", "1", "--points", "3"],
        &["eval", "x", "--q", "0.5", "--bogus"],
        &[
            "eval", "x", "--q", "0.5", "--from", "0", "--to", "1", "--points", "2", "--format",
            "xml",
        ],
    ] {
        let o = qcalc(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn diff_examples() {
    let o = qcalc(&[
        "diff", "qexp(x)", "primal", "numeric", "--q", "0.5", "--at", "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = column(&stdout(&o), 1)[0];
    assert!((v - 1.0).abs() <= 1e-8);
    let o = qcalc(&[
        "diff", "qlog(x)", "dual", "closed", "--q", "0.5", "--at", "2",
    ]);
    assert!((column(&stdout(&o), 1)[0] - 0.5).abs() < 1e-15);
    let o = qcalc(&[
        "diff", "3", "primal", "numeric", "--q", "0.5", "--at", "1", "--at", "-1",
    ]);
    assert_eq!(column(&stdout(&o), 1), vec![0.0, 0.0]);
    let o = qcalc(&[
        "diff", "x^2", "primal", "closed", "--q", "0.5", "--from", "0", "--to", "1", "--points",
        "3",
    ]);
    assert_eq!(column(&stdout(&o), 1), vec![0.0, 1.25, 3.0]);
}

#[test]
fn integrate_examples() {
    let cases = [
        (
            &["integrate", "qexp(x)", "primal", "--q", "0.5", "0", "1"][..],
            1.25,
        ),
        (
            &["integrate", "1/x", "dual", "--q", "0.5", "1", "2"],
            0.828_427_124_746_190_1,
        ),
        (
            &["integrate", "1/x", "borges-dual", "--q", "0.5", "1", "2"],
            2f64.ln() - 0.25 + 0.5,
        ),
    ];
    for (args, expect) in cases {
        let o = qcalc(args);
        assert_eq!(o.status.code(), Some(0));
        let out = stdout(&o);
        assert!(out.starts_with("x_lo,x_hi,value,error_estimate,flags\n"));
        assert!(
            (column(&out, 2)[0] - expect).abs() < 1e-8,
            "{args:?}: {out}"
        );
    }
}

#[test]
fn integrate_singularity_modes() {
    let o = qcalc(&["integrate", "1", "primal", "--q", "0.5", "-3", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("singularity"));
    let o = qcalc(&[
        "integrate",
        "1",
        "primal",
        "--q",
        "0.5",
        "--singularity",
        "reflect",
        "-3",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("singularity_crossed|reflection_applied"));
}

#[test]
fn qline_examples() {
    let o = qcalc(&["qline", "qexp(x)", "primal", "tangent", "0", "--q", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("mode,slope,c,intercept,x,line,curve\n"));
    assert_eq!(out.lines().count(), 12);
    assert!((column(&out, 1)[0] - 1.0).abs() < 1e-8);
    assert!((column(&out, 2)[0] - 1.0).abs() < 1e-12);

    let o = qcalc(&[
        "qline",
        "2*ln(1 + 0.5*x)/0.5 + 0.25",
        "primal",
        "secant",
        "0.5",
        "2",
        "--q",
        "0.5",
    ]);
    let out = stdout(&o);
    assert!((column(&out, 1)[0] - 2.0).abs() < 1e-12);
    assert!((column(&out, 2)[0] - 0.25).abs() < 1e-12);

    let o = qcalc(&[
        "qline", "qexp(x)", "primal", "secant", "1", "-5", "--q", "0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("degenerate secant"));
    assert!(o.stdout.is_empty());

    let o = qcalc(&[
        "qline", "qlog(x)", "dual", "tangent", "2", "--q", "0.5", "--from", "1", "--to", "3",
        "--points", "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!((column(&stdout(&o), 1)[0] - 0.5).abs() < 1e-8);

    let o = qcalc(&["qline", "x", "primal", "secant", "1", "--q", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_schema() {
    let o = qcalc(&[
        "eval", "qexp(x)", "--q", "0.5", "--from", "-3", "--to", "1", "--points", "3", "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let j: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let meta = j["meta"].as_object().unwrap();
    for key in [
        "command",
        "q",
        "format",
        "out",
        "abs_tol",
        "rel_tol",
        "singularity",
        "from",
        "to",
        "points",
        "expr",
    ] {
        assert!(meta.contains_key(key), "meta lacks {key}");
    }
    assert_eq!(meta["q"], 0.5);
    let rows = j["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let keys: Vec<&str> = row
            .as_object()
            .unwrap()
            .keys()
            .map(String::as_str)
            .collect();
        assert_eq!(keys, ["flags", "value", "x"]);
    }
    assert_eq!(rows[0]["value"], 0.0);
    assert_eq!(rows[0]["flags"][0], "cutoff_applied");
    assert_eq!(rows[2]["value"], 2.25);
    assert!(rows[2]["flags"].as_array().unwrap().is_empty());
}

#[test]
fn pole_is_a_domain_error() {
    let o = qcalc(&[
        "eval", "qexp(x)", "--q", "2", "--from", "0", "--to", "1", "--points", "3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
}

#[test]
fn out_file_matches_stdout() {
    let dir = std::env::temp_dir().join(format!("qcalc-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("t.csv");
    let args = ["integrate", "qexp(x)", "primal", "--q", "0.5", "0", "1"];
    let direct = stdout(&qcalc(&args));
    let mut with_out = args.to_vec();
    let p = path.to_str().unwrap();
    with_out.extend(["--out", p]);
    let o = qcalc(&with_out);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), direct);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn verify_restricted_to_one() {
    let o = qcalc(&["verify", "--q", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("property,q,max_residual,tolerance,status\n"));
    assert!(out.contains("continuity_near_one"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn verify_fault_injection_exits_three() {
    let o = qcalc(&["verify", "--inject-fault", "flip-sign"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains(",FAIL"));
}

#[test]
fn help_documents_grammar() {
    let o = qcalc(&["--help"]);
    let out = stdout(&o);
    assert!(out.contains("expr    := term"));
    assert!(out.contains("-x^2 = -(x^2)"));
    assert!(!out.contains("inject"));
}
