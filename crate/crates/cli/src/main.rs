use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use lamg_core::bench::{self, BenchSpec, Op, Strategy, CSV_HEADER};
use lamg_core::eval::{eval, Outcome, DEFAULT_FUEL};
use lamg_core::nesting::{build_nest_tree, well_formed, NestTree, Root};
use lamg_core::surface::{emit_dot, emit_ml, parse_expr, parse_program, print_expr, print_program};
use lamg_core::transform::{eta_expand, eta_reduce, make_well_known, specialize, WellKnown};
use lamg_core::{Expr, Label, Program, TraceRow, TypeKind};

#[derive(Parser)]
#[command(name = "lamg", version, about = "Graph-based lambda calculus IR toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a program and report its size.
    Parse { file: PathBuf },
    /// Pretty-print a program.
    Print { file: PathBuf },
    /// Type-check a program and check that nesting is acyclic.
    Check { file: PathBuf },
    /// Free variables.
    Fv(FvArgs),
    /// Nesting tree.
    Nest(NestArgs),
    /// Specialize a function to an argument and print the result.
    Beta {
        file: PathBuf,
        #[arg(long)]
        call: String,
        /// An expression in surface syntax.
        #[arg(long, allow_hyphen_values = true)]
        arg: String,
    },
    /// η-expansion, η-reduction and well-knownness.
    Eta(EtaArgs),
    /// Run a function on arguments.
    Eval {
        file: PathBuf,
        #[arg(long)]
        main: String,
        /// Argument expressions: a tuple when they match the parameter's arity,
        /// otherwise applied one at a time.
        #[arg(long, num_args = 0.., allow_hyphen_values = true)]
        args: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Emit ML with reconstructed lexical scopes.
    EmitMl {
        file: PathBuf,
        #[arg(long)]
        root: Option<String>,
    },
    /// Time an operation on generated programs.
    Bench(BenchArgs),
}

#[derive(Args)]
struct FvArgs {
    file: PathBuf,
    /// Query only these functions, in order.
    #[arg(long = "label")]
    labels: Vec<String>,
    #[arg(long)]
    stats: bool,
    /// Print marks and cached sets after every pass.
    #[arg(long)]
    trace_table: bool,
    /// Write the variable universe's trie as DOT.
    #[arg(long, value_name = "OUT")]
    trie_dot: Option<PathBuf>,
}

#[derive(Args)]
struct NestArgs {
    file: PathBuf,
    #[arg(long, conflicts_with = "virtual_root")]
    root: Option<String>,
    /// Nest every function under a synthetic root (the default).
    #[arg(long)]
    virtual_root: bool,
    #[arg(long, value_name = "OUT")]
    dot: Option<PathBuf>,
    #[arg(long)]
    sccs: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["expand", "reduce", "well_known"])))]
struct EtaArgs {
    #[arg(long, value_name = "LABEL")]
    expand: Option<String>,
    #[arg(long, value_name = "LABEL")]
    reduce: Option<String>,
    #[arg(long, value_name = "LABEL")]
    well_known: Option<String>,
    file: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    strategy: Strategy,
    #[arg(long)]
    op: Op,
    #[arg(long, default_value_t = 1)]
    min_n: usize,
    #[arg(long, default_value_t = 1024)]
    max_n: usize,
    #[arg(long, value_name = "OUT")]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    #[arg(long, default_value_t = 9)]
    repeats: usize,
}

/// A user-facing failure; exits with status 1.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Res = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(cli.cmd)) {
        Ok(Ok(out)) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Ok(Err(Failure(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(_) => {
            eprintln!("internal error");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Program, Failure> {
    let src = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    parse_program(&src).map_err(|e| Failure(format!("{}:{e}", path.display())))
}

fn label(p: &Program, name: &str) -> Result<Label, Failure> {
    p.lookup(name).ok_or_else(|| Failure(format!("no function named `{name}`")))
}

fn run(cmd: Cmd) -> Res {
    match cmd {
        Cmd::Parse { file } => {
            let p = load(&file)?;
            let set = p.labels().filter(|&l| p.body(l).is_some()).count();
            Ok(format!("{} functions ({} with bodies)\n", p.len(), set))
        }
        Cmd::Print { file } => Ok(print_program(&load(&file)?)),
        Cmd::Check { file } => check(&file),
        Cmd::Fv(a) => fv(a),
        Cmd::Nest(a) => nest(a),
        Cmd::Beta { file, call, arg } => {
            let mut p = load(&file)?;
            let l = label(&p, &call)?;
            let arg = parse_expr(&mut p, &arg).map_err(|e| Failure(format!("--arg: {e}")))?;
            let (c, r) = specialize(&mut p, l, arg)?;
            let copies: Vec<&str> = r.fresh.iter().map(|&f| p.name(f)).collect();
            Ok(format!("# {} specialized as {}; fresh: {}\n{}", call, p.name(c), copies.join(", "), print_program(&p)))
        }
        Cmd::Eta(a) => eta(a),
        Cmd::Eval { file, main, args, fuel } => {
            let mut p = load(&file)?;
            let l = label(&p, &main)?;
            let mut xs = Vec::with_capacity(args.len());
            for a in &args {
                xs.push(parse_expr(&mut p, a).map_err(|e| Failure(format!("--args: {e}")))?);
            }
            let dom = p.function(l).dom;
            let tupled = matches!(p.type_kind(dom), TypeKind::Tuple(ts) if ts.len() == xs.len());
            let mut app = p.fun(l)?;
            if tupled || xs.is_empty() {
                let arg = p.tuple(&xs);
                app = p.app(app, arg)?;
            } else {
                // Curried: one application per argument.
                for x in xs {
                    app = p.app(app, x)?;
                }
            }
            let (out, steps) = eval(&mut p, app, fuel)?;
            Ok(match out {
                Outcome::Value(v) => format!("{}\n", print_expr(&p, v)),
                Outcome::Halt { cont, value } => {
                    format!("halt {} {} after {steps} steps\n", p.name(cont), print_expr(&p, value))
                }
            })
        }
        Cmd::EmitMl { file, root } => {
            let mut p = load(&file)?;
            let root = match root {
                Some(r) => Root::Label(label(&p, &r)?),
                None => Root::Virtual,
            };
            well_formed(&mut p).map_err(|c| Failure(format!("ill-formed: nesting cycle {}", names(&p, &c))))?;
            let t = build_nest_tree(&mut p, root)?;
            emit_ml(&p, &t).map_err(|bad| Failure(format!("unbound in emitted ML: {}", bad.join(", "))))
        }
        Cmd::Bench(a) => bench_cmd(a),
    }
}

fn names(p: &Program, ls: &[Label]) -> String {
    ls.iter().map(|&l| p.name(l)).collect::<Vec<_>>().join(" ⇄ ")
}

fn check(file: &Path) -> Res {
    let mut p = load(file)?;
    let mut problems = Vec::new();
    if let Err(errs) = p.check_program() {
        for (l, e) in errs {
            problems.push(format!("{}: {e}", p.name(l)));
        }
    }
    if let Err(cycle) = well_formed(&mut p) {
        problems.push(format!("nesting cycle {}", names(&p, &cycle)));
    }
    if problems.is_empty() {
        Ok("ok\n".into())
    } else {
        Err(Failure(problems.join("\n")))
    }
}

fn set_str(p: &Program, ls: &[Label]) -> String {
    let mut ns: Vec<&str> = ls.iter().map(|&l| p.name(l)).collect();
    ns.sort_unstable();
    format!("{{{}}}", ns.join(", "))
}

fn fv(a: FvArgs) -> Res {
    let mut p = load(&a.file)?;
    let mut targets = Vec::new();
    for n in &a.labels {
        targets.push(label(&p, n)?);
    }
    let mut out = String::new();
    if a.trace_table {
        if targets.is_empty() {
            targets = p.labels().collect();
        }
        let mut rows = vec![p.snapshot()];
        for &l in &targets {
            rows.extend(p.trace_query(l)?);
        }
        out = trace_table(&p, &rows);
    } else {
        if targets.is_empty() {
            targets = p.labels().collect();
            targets.sort_by(|&x, &y| p.name(x).cmp(p.name(y)));
        }
        for l in targets {
            let (s, st) = p.free_vars_stats(l)?;
            let vs = p.var_set(s);
            out.push_str(&format!("{}: {}\n", p.name(l), set_str(&p, &vs)));
            if a.stats {
                out.push_str(&format!(
                    "  iterations={} visited={} acyclic_fast_path={}\n",
                    st.iterations, st.visited, st.acyclic_fast_path
                ));
            }
        }
    }
    if let Some(path) = a.trie_dot {
        fs::write(&path, p.var_universe().trie_dot())?;
    }
    Ok(out)
}

/// One line per snapshot: the run, every mark, then every cached set.
fn trace_table(p: &Program, rows: &[TraceRow]) -> String {
    let ls: Vec<Label> = p.labels().collect();
    let mut table = vec![std::iter::once("run".to_string())
        .chain(ls.iter().map(|&l| p.name(l).to_string()))
        .chain(ls.iter().map(|&l| format!("FV({})", p.name(l))))
        .collect::<Vec<_>>()];
    for r in rows {
        let mut line = vec![r.run.to_string()];
        line.extend(ls.iter().map(|l| r.marks[l.index()].to_string()));
        line.extend(ls.iter().map(|l| set_str(p, &r.fvs[l.index()])));
        table.push(line);
    }
    let cols = table[0].len();
    let width: Vec<usize> = (0..cols).map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap()).collect();
    let mut out = String::new();
    for r in &table {
        let cells: Vec<String> = r.iter().zip(&width).map(|(s, &w)| format!("{s:<w$}")).collect();
        let (marks, sets) = cells.split_at(1 + ls.len());
        out.push_str(format!("{} | {}", marks.join(" "), sets.join(" ")).trim_end());
        out.push('\n');
    }
    out
}

fn tree_for(p: &mut Program, root: Option<String>) -> Result<NestTree, Failure> {
    let root = match root {
        Some(r) => Root::Label(label(p, &r)?),
        None => Root::Virtual,
    };
    Ok(build_nest_tree(p, root)?)
}

fn node_name(p: &Program, t: &NestTree, n: usize) -> String {
    t.nodes[n].label.map_or("⊤".to_string(), |l| p.name(l).to_string())
}

fn nest(a: NestArgs) -> Res {
    let mut p = load(&a.file)?;
    well_formed(&mut p).map_err(|c| Failure(format!("ill-formed: nesting cycle {}", names(&p, &c))))?;
    let t = tree_for(&mut p, a.root)?;
    let mut out = String::new();
    for n in t.preorder() {
        let indent = "  ".repeat(t.nodes[n].level as usize);
        out.push_str(&format!("{indent}{}\n", node_name(&p, &t, n)));
    }
    if a.sccs {
        for n in t.preorder() {
            if t.sccs[n].is_empty() {
                continue;
            }
            let groups: Vec<String> = t
                .sccs_labels(n)
                .into_iter()
                .map(|(m, rec)| {
                    let ms: Vec<&str> = m.iter().map(|&l| p.name(l)).collect();
                    format!("[{}]{}", ms.join(" "), if rec { " rec" } else { "" })
                })
                .collect();
            out.push_str(&format!("sccs {}: {}\n", node_name(&p, &t, n), groups.join(", ")));
        }
    }
    if let Some(path) = a.dot {
        fs::write(&path, emit_dot(&p, &t))?;
    }
    Ok(out)
}

fn eta(a: EtaArgs) -> Res {
    let mut p = load(&a.file)?;
    if let Some(n) = a.expand {
        let l = label(&p, &n)?;
        let f = p.fun(l)?;
        let w = eta_expand(&mut p, f)?;
        return Ok(format!("# expanded as {}\n{}", p.name(w), print_program(&p)));
    }
    if let Some(n) = a.reduce {
        let l = label(&p, &n)?;
        let e: Expr = eta_reduce(&mut p, l).ok_or_else(|| Failure(format!("`{n}` is not an η-redex")))?;
        return Ok(format!("{n} = {}\n", print_expr(&p, e)));
    }
    let n = a.well_known.expect("clap enforces one mode");
    let l = label(&p, &n)?;
    Ok(match make_well_known(&mut p, l)? {
        WellKnown::AlreadyWellKnown => format!("# {n} is already well-known\n{}", print_program(&p)),
        WellKnown::Wrapped(w) => format!("# unknown uses of {n} now go through {}\n{}", p.name(w), print_program(&p)),
    })
}

fn bench_cmd(a: BenchArgs) -> Res {
    if a.min_n > a.max_n || a.max_n == 0 {
        return Err(Failure(format!("empty size range {}..={}", a.min_n, a.max_n)));
    }
    if a.repeats.is_multiple_of(2) {
        return Err(Failure("--repeats must be odd".into()));
    }
    let mut csv = format!("{CSV_HEADER}\n");
    let mut rows = Vec::new();
    for n in bench::sizes(a.min_n, a.max_n) {
        let spec = BenchSpec { warmup: a.warmup, repeats: a.repeats, ..BenchSpec::new(a.strategy, n, a.op) };
        let row = bench::run_bench(&spec);
        csv.push_str(&row.csv());
        csv.push('\n');
        rows.push(row);
    }
    let Some(path) = a.csv else { return Ok(csv) };
    fs::write(&path, csv)?;
    let mut out = format!("{} rows written to {}\n", rows.len(), path.display());
    if rows.len() >= 2 {
        let (c, r2) = bench::fit_n_log_n(&rows);
        out.push_str(&format!(
            "fit c·n·log2(n): c={c:.4} R²={r2:.3}; max doubling ratio {:.2}\n",
            bench::max_doubling_ratio(&rows)
        ));
    }
    Ok(out)
}
