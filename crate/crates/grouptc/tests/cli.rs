//! End-to-end CLI checks: exit codes, golden rows, and byte-identical
//! reruns for every command that writes files.

use grouptc::cli::run;
use std::path::Path;

fn cli(dir: &Path, args: &[&str]) -> grouptc::cli::CommandResult {
    let args: Vec<String> = args
        .iter()
        .map(|a| a.replace("$DIR", dir.to_str().unwrap()))
        .collect();
    run(&args)
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn write(dir: &Path, name: &str, content: &str) {
    std::fs::write(dir.join(name), content).unwrap();
}

#[test]
fn group_make_validate_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let result = cli(dir.path(), &["group", "make", "--kind", "c4", "--out", "$DIR/c4.json"]);
    assert_eq!(result.exit_code, 0);
    assert!(result.summary_line().contains("order=4"));
    let result =
        cli(dir.path(), &["group", "validate", "--table", "$DIR/c4.json"]);
    assert_eq!(result.exit_code, 0);
    assert!(result.summary_line().contains("commutative=true"));
}

#[test]
fn group_validate_names_failing_axiom() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "broken.json",
        r#"{"format_version":1,"name":"broken","elements":["a","b"],"table":[[0,1],[1,1]]}"#,
    );
    let result = cli(dir.path(), &["group", "validate", "--table", "$DIR/broken.json"]);
    assert_eq!(result.exit_code, 1);
    assert!(result.summary_line().contains("inverse"), "{}", result.summary_line());
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let result = cli(dir.path(), &["group", "validate", "--table", "$DIR/none.json"]);
    assert_eq!(result.exit_code, 2);
}

#[test]
fn tc_compute_golden_rows() {
    let dir = tempfile::tempdir().unwrap();
    cli(dir.path(), &["group", "make", "--kind", "c4", "--out", "$DIR/c4.json"]);
    write(dir.path(), "theta.csv", "# v1\nelement,value\n0,0\n1,-1\n2,1\n3,2\n");
    let result = cli(
        dir.path(),
        &["tc", "compute", "--group", "$DIR/c4.json", "--signal", "$DIR/theta.csv", "--out", "$DIR/tc.csv"],
    );
    assert_eq!(result.exit_code, 0);
    let out = read(dir.path(), "tc.csv");
    assert!(out.contains("\n0,0,8\n"), "missing 0,0,8 in {out}");
    assert!(out.contains("\n0,1,3\n"), "missing 0,1,3 in {out}");
    assert!(out.starts_with("# v1\n"));

    let reduced = cli(
        dir.path(),
        &["tc", "compute", "--group", "c4", "--signal", "$DIR/theta.csv", "--reduced", "--out", "$DIR/red.csv"],
    );
    assert_eq!(reduced.exit_code, 0);
    let red = read(dir.path(), "red.csv");
    assert!(red.contains("class_rep_g1,class_rep_g2,value"));
    assert!(red.contains("\n0,0,8\n"));
    assert!(red.contains("\n1,2,-2\n"));
}

#[test]
fn spectral_plan_oh_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let result = cli(dir.path(), &["spectral", "plan", "--group", "oh"]);
    assert_eq!(result.exit_code, 3);
    assert!(result.summary_line().contains("feasible=false"), "{}", result.summary_line());
}

#[test]
fn unknown_command_and_bad_flag() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["frobnicate", "now"]).exit_code, 1);
    assert_eq!(cli(dir.path(), &["group", "make", "--kind"]).exit_code, 1);
    assert_eq!(cli(dir.path(), &["group", "make", "badarg"]).exit_code, 1);
}

#[test]
fn deterministic_outputs_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [dir_a.path(), dir_b.path()] {
        write(dir, "sig.csv", "# v1\nelement,value\n0,1\n1,2\n2,0\n3,1\n");
        let r1 = cli(dir, &["spectral", "recover", "--group", "c4", "--signal", "$DIR/sig.csv", "--out", "$DIR/rec.csv"]);
        assert_eq!(r1.exit_code, 0);
        let r2 = cli(dir, &["spectral", "bispectrum", "--group", "c4", "--signal", "$DIR/sig.csv", "--out", "$DIR/beta.csv"]);
        assert_eq!(r2.exit_code, 0);
        let r3 = cli(dir, &["completeness", "scan", "--group", "klein", "--values", "0..2", "--filter", "nonzero-fourier", "--out", "$DIR/scan.csv"]);
        assert_eq!(r3.exit_code, 0);
        let r4 = cli(
            dir,
            &["train", "run", "--group", "d4", "--variant", "tc", "--classes", "3",
              "--per-class", "8", "--grid", "4", "--channels", "3", "--hidden", "8",
              "--epochs", "2", "--batch", "8", "--lr", "1e-3", "--seed", "0",
              "--out", "$DIR/model.json", "--log", "$DIR/log.csv"],
        );
        assert_eq!(r4.exit_code, 0);
    }
    for name in ["rec.csv", "beta.csv", "scan.csv", "model.json", "log.csv"] {
        assert_eq!(
            read(dir_a.path(), name),
            read(dir_b.path(), name),
            "{name} differs between identical invocations"
        );
    }
}

#[test]
fn recover_summary_in_orbit() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sig.csv", "# v1\nelement,value\n0,1\n1,2\n2,0\n3,1\n");
    let result = cli(dir.path(), &["spectral", "recover", "--group", "c4", "--signal", "$DIR/sig.csv"]);
    assert_eq!(result.exit_code, 0);
    assert!(result.summary_line().contains("in_orbit=true"));
}

#[test]
fn recover_oh_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..48).map(|i| format!("{i},{}\n", i % 5)).collect();
    write(dir.path(), "sig.csv", &format!("# v1\nelement,value\n{rows}"));
    let result = cli(dir.path(), &["spectral", "recover", "--group", "oh", "--signal", "$DIR/sig.csv"]);
    assert_eq!(result.exit_code, 3);
}

#[test]
fn conv_run_and_action_dump() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "f.csv", "# v1\nelement,value\n0,1\n1,0\n2,0\n3,0\n");
    write(dir.path(), "phi.csv", "# v1\nelement,value\n0,1\n1,0\n2,0\n3,0\n");
    let result = cli(
        dir.path(),
        &["conv", "run", "--group", "c4", "--domain", "square:2", "--signal", "$DIR/f.csv",
          "--filters", "$DIR/phi.csv", "--out", "$DIR/theta.csv"],
    );
    assert_eq!(result.exit_code, 0);
    let theta = read(dir.path(), "theta.csv");
    // matched one-hot filter peaks at the identity
    assert!(theta.contains("\n0,1\n") || theta.contains("element,value\n0,1\n"), "{theta}");

    let dump = cli(dir.path(), &["action", "dump", "--group", "d4", "--domain", "square:3", "--out", "$DIR/act.csv"]);
    assert_eq!(dump.exit_code, 0);
    let act = read(dir.path(), "act.csv");
    assert!(act.starts_with("# v1\nelement,domain_index,image_index\n"));
    // the center pixel is fixed by every element
    for g in 0..8 {
        assert!(act.contains(&format!("\n{g},4,4\n")));
    }
}

#[test]
fn gradcheck_command() {
    let dir = tempfile::tempdir().unwrap();
    let result = cli(dir.path(), &["train", "gradcheck", "--variant", "max", "--seed", "1", "--configs", "2"]);
    assert_eq!(result.exit_code, 0, "{}", result.summary_line());
    assert!(result.summary_line().contains("max_rel_error="));
}

#[test]
fn threads_flag_validated() {
    let dir = tempfile::tempdir().unwrap();
    let result = cli(dir.path(), &["spectral", "plan", "--group", "d4", "--threads", "0"]);
    assert_eq!(result.exit_code, 1);
    let result = cli(dir.path(), &["spectral", "plan", "--group", "d4", "--threads", "4"]);
    assert_eq!(result.exit_code, 0);
}

#[test]
fn metamer_via_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let train = cli(
        dir.path(),
        &["train", "run", "--group", "d4", "--variant", "max", "--classes", "3",
          "--per-class", "8", "--grid", "4", "--channels", "3", "--hidden", "8",
          "--epochs", "3", "--batch", "8", "--lr", "1e-3", "--seed", "0",
          "--out", "$DIR/m.json"],
    );
    assert_eq!(train.exit_code, 0);
    let result = cli(
        dir.path(),
        &["completeness", "metamer", "--model", "$DIR/m.json", "--targets", "1",
          "--restarts", "2", "--steps", "300", "--seed", "5", "--out", "$DIR/mm.csv"],
    );
    assert_eq!(result.exit_code, 0, "{}", result.summary_line());
    let report = read(dir.path(), "mm.csv");
    assert!(report.contains("target,restart,outcome"));
}
