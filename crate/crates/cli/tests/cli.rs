//! End-to-end checks of the `gtl` binary: output streams and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn gtl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtl")).args(args).output().expect("spawn gtl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_accepts_a_clean_program() {
    let out = gtl(&["check", fixture("median.gtl").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "ok");
}

#[test]
fn run_prints_value_side_effects_and_counters() {
    let out = gtl(&[
        "run",
        fixture("zoo.gtl").to_str().unwrap(),
        "--mode",
        "erased",
        "--counters",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ottermanymixed");
    assert_eq!(lines[1], "12");
    assert!(lines.iter().any(|l| l.starts_with("steps=")));
    assert!(lines.contains(&"shape_checks=0"));
}

#[test]
fn deep_contract_failure_exits_3_and_names_the_boundary() {
    let out = gtl(&["run", fixture("median.gtl").to_str().unwrap(), "--mode", "deep"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.starts_with("deep: boundary"), "{err}");
    assert!(err.contains("blamed client"), "{err}");
}

#[test]
fn shallow_failure_with_dump_blame_shows_the_witness() {
    let out = gtl(&[
        "run",
        fixture("median.gtl").to_str().unwrap(),
        "--mode",
        "sb",
        "--dump-blame",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.starts_with("shallow:"), "{err}");
    assert!(err.contains("witness: "), "{err}");
    assert!(err.contains("site: "), "{err}");
    assert!(err.contains("unfiltered: "), "{err}");
}

#[test]
fn dump_checks_lists_injected_sites() {
    let out = gtl(&[
        "run",
        fixture("sum_loop.gtl").to_str().unwrap(),
        "--mode",
        "shallow",
        "--dump-checks",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).lines().any(|l| l.starts_with("fn-entry[0]")), "{}", stdout(&out));
}

#[test]
fn config_bits_flip_modules_typed() {
    let control = fixture("control.gtl");
    let typed = gtl(&[
        "run",
        control.to_str().unwrap(),
        "--config",
        "111",
        "--mode",
        "shallow",
        "--counters",
    ]);
    assert_eq!(typed.status.code(), Some(0));
    let typed_out = stdout(&typed);
    assert!(typed_out.lines().next() == Some("540"), "{typed_out}");
    let checks = typed_out
        .lines()
        .find_map(|l| l.strip_prefix("shape_checks="))
        .unwrap()
        .parse::<u64>()
        .unwrap();
    assert!(checks > 0);

    let untyped = gtl(&[
        "run",
        control.to_str().unwrap(),
        "--config",
        "untyped",
        "--mode",
        "shallow",
        "--counters",
    ]);
    assert!(stdout(&untyped).contains("shape_checks=0"));
}

#[test]
fn lattice_emits_one_mode_csv_when_asked() {
    let out = gtl(&[
        "lattice",
        fixture("control.gtl").to_str().unwrap(),
        "--mode",
        "shallow",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "config_bits,mode,shape_checks,flat_checks,wrappers,wrapped_calls,blame_ops,steps,cost,overhead,status"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8, "{text}");
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("shallow")));
    assert!(rows[0].starts_with("000,"));
    assert!(rows[7].starts_with("111,"));
}

#[test]
fn lattice_cdf_output_covers_the_tick_sweep() {
    let out = gtl(&[
        "lattice",
        fixture("control.gtl").to_str().unwrap(),
        "--cdf",
        "--mode",
        "erased",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("mode,x,percent\n"));
    assert!(text.contains("erased,1,100.0"), "{text}");
    assert!(text.contains("erased,20,100.0"), "{text}");
}

#[test]
fn report_prints_the_cost_of_blame_row() {
    let out = gtl(&["report", fixture("control.gtl").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "fixture,worst_shallow,worst_deep,sb_at_fully_typed");
    let row = lines.next().unwrap();
    assert!(row.starts_with("control,"), "{row}");
    assert_eq!(row.split(',').count(), 4, "{row}");
}

#[test]
fn static_errors_exit_2() {
    let dir = std::env::temp_dir();
    let path = dir.join("gtl_cli_static_error.gtl");
    std::fs::write(&path, "(module m typed (define main : Int \"nope\"))").unwrap();
    let out = gtl(&["run", path.to_str().unwrap(), "--mode", "erased"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let parse = dir.join("gtl_cli_parse_error.gtl");
    std::fs::write(&parse, "(module m untyped (define main").unwrap();
    let out = gtl(&["check", parse.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn timeouts_exit_3() {
    let out = gtl(&[
        "run",
        fixture("control.gtl").to_str().unwrap(),
        "--mode",
        "erased",
        "--step-budget",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("step budget exceeded (10)"));
}

#[test]
fn usage_errors_exit_64() {
    let out = gtl(&["run"]);
    assert_eq!(out.status.code(), Some(64));
    let out = gtl(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(64));
    let out = gtl(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    // Bad flag values are misuse too, no matter what program they point at.
    let out = gtl(&["run", fixture("median.gtl").to_str().unwrap(), "--mode", "nonsense"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(stderr(&out).contains("unknown mode"));
    let out = gtl(&["run", fixture("median.gtl").to_str().unwrap(), "--config", "2x"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(stderr(&out).contains("bad config"));
}
