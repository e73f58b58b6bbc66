use std::path::PathBuf;
use std::process::{Command, Output};

const SEC6: &str = "p pqe 3 1 2\ny 1 0\n-2 3 0\n1 2 0\n1 -3 0\n";

fn pqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pqe-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn solve_sec6_verifies() {
    let f = scratch("sec6.pqdimacs", SEC6);
    let o = pqe(&["solve", f.to_str().unwrap(), "--verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l == "1 0"));
    assert!(stdout(&o).contains("p cnf 3 1\n"));
    assert!(stderr(&o).contains("verified"));
}

#[test]
fn solve_is_deterministic_and_writes_out() {
    let f = scratch("det.pqdimacs", SEC6);
    let a = pqe(&["solve", f.to_str().unwrap(), "--stats"]);
    let b = pqe(&["solve", f.to_str().unwrap(), "--stats"]);
    assert_eq!(a.stdout, b.stdout);
    let out = f.with_extension("cnf");
    let o = pqe(&["solve", f.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().contains("1 0\n"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let f = scratch("bad.pqdimacs", "p pqe 3 0 1\ny 0\n2 -2 0\n");
    let o = pqe(&["solve", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    assert_eq!(
        pqe(&["solve", "/nonexistent.pqdimacs"]).status.code(),
        Some(2)
    );
    assert_eq!(pqe(&["solve"]).status.code(), Some(2));
    assert_eq!(pqe(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_refuses_wide_y() {
    // 40 free variables, one quantified
    let ys: Vec<String> = (1..=40).map(|v| v.to_string()).collect();
    let text = format!("p pqe 41 1 1\ny {} 0\n1 41 0\n2 -41 0\n", ys.join(" "));
    let f = scratch("wide.pqdimacs", &text);
    let o = pqe(&["solve", f.to_str().unwrap(), "--verify"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stderr(&o).contains("verification refused"),
        "{}",
        stderr(&o)
    );
    assert!(stdout(&o).contains("1 2 0"));
}

#[test]
fn qe_and_noise_filter() {
    // ∃x2[(y1 ∨ x2) ∧ (y1 ∨ ¬x2)] = y1
    let f = scratch("qe.pqdimacs", "p pqe 2 0 2\ny 1 0\n1 2 0\n1 -2 0\n");
    let o = pqe(&["solve", f.to_str().unwrap(), "--qe", "--verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l == "1 0"));
    let o = pqe(&["solve", f.to_str().unwrap(), "--noise-filter"]);
    assert!(stdout(&o).contains("p cnf 2 0\n"));
    let o = pqe(&["solve", f.to_str().unwrap(), "--time-limit", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unsat_solution_is_the_empty_clause() {
    let f = scratch("unsat.pqdimacs", "p pqe 2 2 0\ny 0\n1 0\n-1 0\n");
    let o = pqe(&["solve", f.to_str().unwrap(), "--verify"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("c status unsat\np cnf 2 1\n0\n"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn sat_subcommand() {
    let s = scratch("s.cnf", "p cnf 2 2\n1 2 0\n-1 0\n");
    let u = scratch("u.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    assert_eq!(
        stdout(&pqe(&["sat", s.to_str().unwrap()])),
        "s SATISFIABLE\n"
    );
    assert_eq!(
        stdout(&pqe(&["sat", u.to_str().unwrap()])),
        "s UNSATISFIABLE\n"
    );
}

#[test]
fn fifo_then_propgen() {
    let dir = std::env::temp_dir().join(format!("pqe-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let model = dir.join("fifo.aag");
    let table = dir.join("fifo.tsv");
    let o = pqe(&[
        "fifo",
        "--n",
        "2",
        "--p",
        "2",
        "--val",
        "1",
        "--buggy",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&model).unwrap().starts_with("aag "));
    let o = pqe(&[
        "propgen",
        model.to_str().unwrap(),
        "--frames",
        "2",
        "--expect",
        "fifo-data",
        "--table",
        table.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("frames 2 targets "), "{text}");
    // data0 never holds 1 in the buggy design
    assert!(
        text.contains(
            "Q -1 2 0 (!data0_0 | data0_1) invariant=true implied_by_spec=unknown bad=true"
        ),
        "{text}"
    );
    let t = std::fs::read_to_string(&table).unwrap();
    assert!(t.starts_with("clause\tlocal\tinvariant\timplied_by_spec\tbad\n"));
    assert_eq!(
        t.lines().count() - 1,
        text.lines().filter(|l| l.starts_with("Q ")).count()
    );

    assert_eq!(
        pqe(&["fifo", "--p", "2", "--val", "4"]).status.code(),
        Some(2)
    );
    let bad = scratch("bad.aag", "aag 1 0 0 0 1\n2 2 2\n");
    assert_eq!(
        pqe(&["propgen", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
}
