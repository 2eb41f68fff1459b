use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn lamg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lamg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = lamg(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = lamg(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn missing_file_exits_1() {
    let o = lamg(&["print", "/nonexistent/x.lamg"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn parse_and_print_round_trip() {
    let a = fixture("progA.lamg");
    assert!(ok(&["parse", path(&a)]).starts_with("7 functions"));
    let printed = ok(&["print", path(&a)]);
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("again.lamg");
    std::fs::write(&copy, &printed).unwrap();
    assert_eq!(ok(&["print", copy.to_str().unwrap()]), printed);
}

#[test]
fn fv_lines_are_sorted() {
    let out = ok(&["fv", path(&fixture("progA.lamg"))]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines.windows(2).all(|w| w[0] < w[1]));
    assert!(lines.contains(&"xj: {f, hj}"), "{out}");
    assert!(lines.contains(&"bi: {f, hi}"), "{out}");
}

#[test]
fn fv_stats_report_iterations() {
    let out = ok(&["fv", path(&fixture("progA.lamg")), "--label", "f", "--stats"]);
    assert_eq!(out, "f: {}\n  iterations=3 visited=21 acyclic_fast_path=false\n");
}

#[test]
fn trace_table_runs() {
    let out = ok(&["fv", path(&fixture("progA.lamg")), "--trace-table", "--label", "xi", "--label", "f"]);
    let runs: Vec<&str> = out.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(runs, ["0", "2", "4", "5", "6"]);
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("6   6 6  6  6  6  6  2"), "{last}");
    assert!(last.ends_with("{f, hi}"));
}

#[test]
fn trie_dot_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trie.dot");
    ok(&["fv", path(&fixture("progB.lamg")), "--trie-dot", out.to_str().unwrap()]);
    assert!(std::fs::read_to_string(out).unwrap().starts_with("digraph trie"));
}

#[test]
fn nest_tree_sccs_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("nest.dot");
    let out = ok(&["nest", path(&fixture("progA.lamg")), "--sccs", "--dot", dot.to_str().unwrap()]);
    assert!(out.starts_with("⊤\n  f\n    hi\n      bi\n      xi\n    hj\n"), "{out}");
    assert!(out.contains("sccs f: [hi hj] rec"), "{out}");
    let d = std::fs::read_to_string(dot).unwrap();
    assert!(d.contains("style=dotted"));
    let rooted = ok(&["nest", path(&fixture("progA.lamg")), "--root", "hj"]);
    // xj jumps back to hi, which then hangs off the root.
    assert_eq!(rooted, "hj\n  bj\n  xj\n  hi\n    bi\n    xi\n");
}

#[test]
fn ill_formed_inputs_exit_1() {
    let o = lamg(&["check", path(&fixture("cycProg.lamg"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nesting cycle"));
    let o = lamg(&["check", path(&fixture("ill_typed_branch.lamg"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("type mismatch"));
    assert_eq!(ok(&["check", path(&fixture("progB.lamg"))]), "ok\n");
}

#[test]
fn beta_copies_the_inner_loop_only() {
    let out = ok(&["beta", path(&fixture("progA.lamg")), "--call", "hi", "--arg", "0"]);
    assert!(out.starts_with("# hi specialized as hi'; fresh: hi', bi', xi'\n"), "{out}");
}

#[test]
fn eval_pow_and_halt() {
    assert_eq!(ok(&["eval", path(&fixture("pow.lamg")), "--main", "pow", "--args", "3", "5"]), "243\n");
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("m.lamg");
    std::fs::write(&f, "fn main : [int, int -> bot] -> bot = @main.1 (%mul(@main.0, -2));\nfn ret : int -> bot;\n")
        .unwrap();
    let out = ok(&["eval", f.to_str().unwrap(), "--main", "main", "--args", "-7", "ret"]);
    assert!(out.starts_with("halt ret 14"), "{out}");
}

#[test]
fn eta_modes() {
    let wk = fixture("well_known.lamg");
    let out = ok(&["eta", "--well-known", "f", path(&wk)]);
    assert!(out.contains("g f_eta"), "{out}");
    assert!(out.contains("fn f_eta : [int, int] -> int = f @f_eta;"), "{out}");
    assert_eq!(lamg(&["eta", "--reduce", "h", path(&wk)]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.lamg");
    std::fs::write(&w, "fn f : int -> int = @f;\nfn f_eta : int -> int = f @f_eta;\n").unwrap();
    let out = ok(&["eta", "--reduce", "f_eta", w.to_str().unwrap()]);
    assert_eq!(out, "f_eta = f\n");
    assert_eq!(lamg(&["eta", path(&wk)]).status.code(), Some(1));
}

#[test]
fn emit_ml_closes_scopes() {
    let out = ok(&["emit-ml", path(&fixture("progA.lamg"))]);
    assert!(out.contains("let rec"), "{out}");
    let o = lamg(&["emit-ml", path(&fixture("cycProg.lamg"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_writes_one_row_per_power_of_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    ok(&[
        "bench",
        "--strategy",
        "cascade",
        "--op",
        "fv",
        "--min-n",
        "1",
        "--max-n",
        "1024",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,median_us,min_us,max_us");
    assert_eq!(lines.len(), 12);
    let ns: Vec<usize> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ns, (0..=10).map(|e| 1usize << e).collect::<Vec<_>>());
    let o = lamg(&["bench", "--strategy", "spiral", "--op", "fv"]);
    assert_eq!(o.status.code(), Some(1));
}
