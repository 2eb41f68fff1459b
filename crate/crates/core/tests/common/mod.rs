//! Checks shared by the acceptance runner and the regular test targets.
//! Each returns a short detail line on success.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lamg_core::bench::{self, BenchRow, BenchSpec, Op, Strategy};
use lamg_core::eval::{eval, is_value, step, Outcome, Step};
use lamg_core::fixtures;
use lamg_core::nesting::{build_nest_tree, cfg_overlay, well_formed, NestTree, Root};
use lamg_core::oracle::{brute_force_fv, loop_connectedness, strict_nesters, tree_subst, unfold};
use lamg_core::random::{random_program, random_well_formed, RandomConfig};
use lamg_core::surface::{parse_expr, parse_program, print_expr};
use lamg_core::transform::{beta_reduce, eta_expand, eta_reduce, make_well_known, unknown_uses, WellKnown};
use lamg_core::{Expr, ExprKind, Label, Prim, Program};
use lamg_sets::{SetHandle, Tier, Universe};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub fn seed() -> u64 {
    std::env::var("LAMG_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0x1a6)
}

pub fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed() ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

macro_rules! ensure {
    ($c:expr, $($msg:tt)+) => {
        if !$c {
            return Err(format!($($msg)+));
        }
    };
}

fn names(p: &Program, ls: impl IntoIterator<Item = Label>) -> BTreeSet<String> {
    ls.into_iter().map(|l| p.name(l).to_string()).collect()
}

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn fv_names(p: &mut Program, f: &str) -> BTreeSet<String> {
    let l = p.label(f);
    let s = p.free_vars(l).unwrap();
    names(p, p.var_set(s))
}

const ORDER: [&str; 7] = ["f", "hi", "bi", "hj", "bj", "xj", "xi"];

/// Marks in the fixture's label order.
fn marks(p: &Program) -> Vec<u64> {
    ORDER.iter().map(|n| p.mark(p.label(n))).collect()
}

// ── 1 ────────────────────────────────────────────────────────────────────

pub fn table_fv_and_marks() -> Check {
    let mut p = fixtures::nested_loops();
    for n in ORDER {
        ensure!(p.mark(p.label(n)) == 0, "fresh mark of {n} is not 0");
    }
    let xi = p.label("xi");
    let rows = p.trace_query(xi).map_err(|e| e.to_string())?;
    ensure!(rows.len() == 1 && p.run() == 2, "xi query: {} passes, run {}", rows.len(), p.run());
    ensure!(marks(&p) == [0, 0, 0, 0, 0, 0, 2], "marks after xi: {:?}", marks(&p));

    let f = p.label("f");
    let rows = p.trace_query(f).map_err(|e| e.to_string())?;
    let runs: Vec<u64> = rows.iter().map(|r| r.run).collect();
    ensure!(runs == [4, 5, 6], "pass runs for f: {runs:?}");
    for (row, want) in rows.iter().zip([4u64, 5, 6]) {
        let got: Vec<u64> = ORDER.iter().map(|n| row.marks[p.label(n).index()]).collect();
        ensure!(got == [want, want, want, want, want, want, 2], "marks at run {want}: {got:?}");
    }
    // The partial sets after the first pass.
    let first = &rows[0];
    let partial = |n: &str| names(&p, first.fvs[p.label(n).index()].iter().copied());
    ensure!(partial("bj") == set(&["hj"]) && partial("xj") == set(&["hj"]), "run-4 partial sets of bj/xj");

    let want_a: [(&str, &[&str]); 7] = [
        ("f", &[]),
        ("hi", &["f"]),
        ("bi", &["f", "hi"]),
        ("hj", &["f"]),
        ("bj", &["f", "hj"]),
        ("xj", &["f", "hj"]),
        ("xi", &["f", "hi"]),
    ];
    for (n, w) in want_a {
        let got = names(&p, rows[2].fvs[p.label(n).index()].iter().copied());
        ensure!(got == set(w), "FV({n}) at run 6: {got:?}");
    }

    let xj = p.label("xj");
    p.unset_body(xj);
    ensure!(marks(&p) == [0, 0, 0, 0, 0, 0, 2], "marks after unsetting xj: {:?}", marks(&p));
    let hi_v = p.var(p.label("hi")).unwrap();
    let hj_v = p.var(p.label("hj")).unwrap();
    let i2 = p.binop(Prim::Add, hi_v, hj_v).unwrap();
    let hi_f = p.fun(p.label("hi")).unwrap();
    let b = p.app(hi_f, i2).unwrap();
    p.set_body(xj, b).unwrap();
    let rows = p.trace_query(f).map_err(|e| e.to_string())?;
    let runs: Vec<u64> = rows.iter().map(|r| r.run).collect();
    ensure!(runs == [8, 9, 10], "pass runs after switching xj: {runs:?}");
    for (row, want) in rows.iter().zip([8u64, 9, 10]) {
        let got: Vec<u64> = ORDER.iter().map(|n| row.marks[p.label(n).index()]).collect();
        ensure!(got == [want, want, want, want, want, want, 2], "marks at run {want}: {got:?}");
    }
    let want_b: [(&str, &[&str]); 7] = [
        ("f", &[]),
        ("hi", &["f"]),
        ("bi", &["f", "hi"]),
        ("hj", &["f", "hi"]),
        ("bj", &["f", "hi", "hj"]),
        ("xj", &["f", "hi", "hj"]),
        ("xi", &["f", "hi"]),
    ];
    for (n, w) in want_b {
        let got = names(&p, rows[2].fvs[p.label(n).index()].iter().copied());
        ensure!(got == set(w), "FV({n}) at run 10: {got:?}");
    }

    // The separately parsed variant agrees.
    let mut q = fixtures::nested_loops_acc();
    for (n, w) in want_b {
        ensure!(fv_names(&mut q, n) == set(w), "FV({n}) in the accumulating fixture");
    }
    Ok("runs 2 | 4,5,6 | 8,9,10 and all 14 FV cells match".into())
}

// ── 2 ────────────────────────────────────────────────────────────────────

pub fn invalidation_locality() -> Check {
    let mut p = fixtures::nested_loops();
    let (f, xi, xj) = (p.label("f"), p.label("xi"), p.label("xj"));
    p.free_vars(xi).unwrap();
    p.free_vars(f).unwrap();
    let before = p.cached_fv(xi);
    p.unset_body(xj);
    let zeroed: BTreeSet<String> = names(&p, p.labels().filter(|&l| p.mark(l) == 0));
    ensure!(zeroed == set(&["f", "hi", "bi", "hj", "bj", "xj"]), "zeroed marks: {zeroed:?}");
    let (s, stats) = p.free_vars_stats(xi).unwrap();
    ensure!(stats.visited == 0, "xi re-query visited {}", stats.visited);
    ensure!(s == before, "xi memo changed");
    Ok("exactly {f,hi,bi,hj,bj,xj} zeroed; xi re-query visits 0".into())
}

// ── 3 ────────────────────────────────────────────────────────────────────

pub fn iteration_bound(programs: usize) -> Check {
    let mut r = rng(3);
    let mut checked = 0;
    let mut acyclic = 0;
    for i in 0..programs {
        let cfg = RandomConfig { functions: r.gen_range(2..14), acyclic: i % 4 == 0, ..Default::default() };
        let base = random_program(&mut r, &cfg);
        let oracle = brute_force_fv(&base);
        for root in base.labels() {
            let mut p = base.clone();
            let d = loop_connectedness(&p, root);
            let (s, stats) = p.free_vars_stats(root).unwrap();
            ensure!(
                p.var_set(s).into_iter().collect::<BTreeSet<_>>() == oracle[root.index()],
                "program {i}: FV({}) differs from the oracle",
                p.name(root)
            );
            ensure!(
                stats.iterations as usize <= d + 2,
                "program {i}, root {}: {} iterations, d(G) = {d}",
                p.name(root),
                stats.iterations
            );
            if d == 0 {
                acyclic += 1;
                ensure!(stats.iterations == 1, "program {i}: acyclic root took {} iterations", stats.iterations);
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} queries ({acyclic} acyclic) within d(G)+2"))
}

// ── 4 ────────────────────────────────────────────────────────────────────

fn tree_shape(p: &Program, t: &NestTree) -> BTreeMap<String, Vec<String>> {
    let mut out = BTreeMap::new();
    for (i, n) in t.nodes.iter().enumerate() {
        let key = n.label.map_or("⊤".to_string(), |l| p.name(l).to_string());
        let mut kids: Vec<String> = t.children_of(i).into_iter().map(|l| p.name(l).to_string()).collect();
        kids.sort();
        if !kids.is_empty() {
            out.insert(key, kids);
        }
    }
    out
}

fn deps(p: &Program, t: &NestTree) -> BTreeSet<(String, String)> {
    t.deps_labels().into_iter().map(|(a, b)| (p.name(a).to_string(), p.name(b).to_string())).collect()
}

fn sccs(p: &Program, t: &NestTree, of: &str) -> Vec<(Vec<String>, bool)> {
    let n = if of == "⊤" { 0 } else { t.node_of(p.label(of)).unwrap() };
    t.sccs_labels(n).into_iter().map(|(ls, r)| (ls.into_iter().map(|l| p.name(l).to_string()).collect(), r)).collect()
}

fn shape(entries: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
    entries
        .iter()
        .map(|(k, v)| {
            let mut v: Vec<String> = v.iter().map(|s| s.to_string()).collect();
            v.sort();
            (k.to_string(), v)
        })
        .collect()
}

fn pairs(xs: &[(&str, &str)]) -> BTreeSet<(String, String)> {
    xs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

pub fn nesting_trees() -> Check {
    let mut p = fixtures::nested_loops();
    let root = Root::Label(p.label("f"));
    let t = build_nest_tree(&mut p, root).map_err(|e| e.to_string())?;
    let s = tree_shape(&p, &t);
    ensure!(s == shape(&[("f", &["hi", "hj"]), ("hi", &["bi", "xi"]), ("hj", &["bj", "xj"])]), "first tree: {s:?}");
    let d = deps(&p, &t);
    ensure!(d == pairs(&[("hi", "hj"), ("hj", "hj"), ("hj", "hi")]), "first deps: {d:?}");
    let c = sccs(&p, &t, "f");
    ensure!(c == vec![(vec!["hi".to_string(), "hj".to_string()], true)], "first SCCs: {c:?}");
    for leaf in ["hi", "hj"] {
        let c = sccs(&p, &t, leaf);
        ensure!(c.len() == 2 && c.iter().all(|(m, r)| m.len() == 1 && !r), "SCCs under {leaf}: {c:?}");
    }

    let mut p = fixtures::nested_loops_acc();
    let root = Root::Label(p.label("f"));
    let t = build_nest_tree(&mut p, root).map_err(|e| e.to_string())?;
    let s = tree_shape(&p, &t);
    ensure!(s == shape(&[("f", &["hi"]), ("hi", &["bi", "hj", "xi"]), ("hj", &["bj", "xj"])]), "second tree: {s:?}");
    let d = deps(&p, &t);
    ensure!(d == pairs(&[("bi", "hj"), ("hj", "hj"), ("hi", "hi")]), "second deps: {d:?}");
    let c = sccs(&p, &t, "f");
    ensure!(c == vec![(vec!["hi".to_string()], true)], "SCCs under f: {c:?}");
    let c = sccs(&p, &t, "hi");
    let hj = c.iter().find(|(m, _)| m == &vec!["hj".to_string()]);
    ensure!(hj.is_some_and(|(_, r)| *r), "hj is not a self-loop SCC under hi: {c:?}");
    ensure!(c.iter().filter(|(_, r)| *r).count() == 1 && c.len() == 3, "SCCs under hi: {c:?}");
    let pos = |n: &str| c.iter().position(|(m, _)| m[0] == n).unwrap();
    ensure!(pos("bi") < pos("hj"), "bi must precede the hj SCC it depends on");

    let mut p = fixtures::pow();
    let t = build_nest_tree(&mut p, Root::Virtual).map_err(|e| e.to_string())?;
    let s = tree_shape(&p, &t);
    let want = shape(&[
        ("⊤", &["iter", "succ", "add", "mul", "pow"]),
        ("iter", &["a", "b"]),
        ("add", &["add'"]),
        ("mul", &["mul'"]),
        ("pow", &["pow'"]),
    ]);
    ensure!(s == want, "forest: {s:?}");
    let d = deps(&p, &t);
    let want = pairs(&[
        ("iter", "iter"),
        ("add", "iter"),
        ("add", "succ"),
        ("mul", "iter"),
        ("mul", "add"),
        ("pow", "iter"),
        ("pow", "mul"),
    ]);
    ensure!(d == want, "forest deps: {d:?}");
    let c = sccs(&p, &t, "⊤");
    let order: Vec<String> = c.iter().map(|(m, _)| m.join(",")).collect();
    let rec: Vec<bool> = c.iter().map(|(_, r)| *r).collect();
    ensure!(c.iter().all(|(m, _)| m.len() == 1), "top-level SCCs: {c:?}");
    let at = |n: &str| order.iter().position(|x| x == n).unwrap();
    ensure!(
        at("pow") < at("mul") && at("mul") < at("add") && at("add") < at("iter") && at("add") < at("succ"),
        "top order {order:?}"
    );
    ensure!(rec[at("iter")] && rec.iter().filter(|r| **r).count() == 1, "only iter recursive: {c:?}");
    Ok("two nesting trees and the forest match, with deps and SCCs".into())
}

// ── 5 ────────────────────────────────────────────────────────────────────

pub fn nesting_implies_dominance(programs: usize) -> Check {
    let mut p = fixtures::nested_loops();
    let (f, bi, hj) = (p.label("f"), p.label("bi"), p.label("hj"));
    let cfg = cfg_overlay(&mut p, f).map_err(|e| e.to_string())?;
    ensure!(cfg.dominates(bi, hj), "bi does not dominate hj");
    ensure!(!p.var_in_fv(bi, hj), "bi nests hj");

    let mut r = rng(5);
    let mut pairs = 0usize;
    for i in 0..programs {
        let cfg = RandomConfig { functions: r.gen_range(2..14), ..Default::default() };
        let mut p = random_well_formed(&mut r, &cfg);
        let fv = brute_force_fv(&p);
        let nesters = strict_nesters(&p, &fv);
        for root in p.labels().collect::<Vec<_>>() {
            let ov = cfg_overlay(&mut p, root).map_err(|e| e.to_string())?;
            for &b in &ov.nodes {
                for &a in &nesters[b.index()] {
                    if !ov.nodes.contains(&a) {
                        continue;
                    }
                    pairs += 1;
                    ensure!(
                        ov.dominates(a, b),
                        "program {i}, root {}: {} nests {} but does not dominate it",
                        p.name(root),
                        p.name(a),
                        p.name(b)
                    );
                }
            }
        }
    }
    Ok(format!("{pairs} nesting pairs dominate; bi dominates hj without nesting it"))
}

// ── 6 ────────────────────────────────────────────────────────────────────

pub fn minimal_beta() -> Check {
    let mut p = fixtures::nested_loops();
    p.free_vars_all();
    let before: Vec<Label> = p.labels().collect();
    let hi = p.label("hi");
    let zero = p.int(0);
    let (c, r) = lamg_core::transform::specialize(&mut p, hi, zero).map_err(|e| e.to_string())?;
    let origins: BTreeSet<String> =
        r.fresh.iter().map(|&l| p.name(p.function(l).origin.unwrap()).to_string()).collect();
    ensure!(origins == set(&["hi", "bi", "xi"]), "fresh copies of {origins:?}");
    ensure!(r.fresh.len() == 3 && r.fresh[0] == c, "fresh list {:?}", r.fresh);
    for n in ["hj", "bj", "xj"] {
        let l = p.label(n);
        ensure!(!r.copies.contains_key(&l), "{n} was copied");
    }
    ensure!(p.len() == before.len() + 3, "program grew by {}", p.len() - before.len());
    // The copy of bi still calls the original hj.
    let bi2 = r.copies[&p.label("bi")];
    let body = p.body(bi2).unwrap();
    ensure!(p.local_funs(body) == vec![p.label("hj")], "bi copy calls {:?}", names(&p, p.local_funs(body)));
    // β alone copies the two continuations.
    let mut q = fixtures::nested_loops();
    let (hi, zero) = (q.label("hi"), q.int(0));
    let hf = q.fun(hi).unwrap();
    let app = q.app(hf, zero).unwrap();
    let r = beta_reduce(&mut q, app).map_err(|e| e.to_string())?;
    let origins = names(&q, r.fresh.iter().map(|&l| q.function(l).origin.unwrap()));
    ensure!(origins == set(&["bi", "xi"]), "β copies {origins:?}");
    Ok("specializing hi at 0 copies exactly {hi, bi, xi}".into())
}

// ── 7 ────────────────────────────────────────────────────────────────────

fn closed_arg(p: &mut Program, t: lamg_core::Type, r: &mut impl Rng) -> Expr {
    if t == Program::INT {
        p.int(r.gen_range(0..6))
    } else if t == Program::UNIT {
        p.tuple(&[])
    } else {
        let (a, b) = (p.int(r.gen_range(0..6)), p.int(r.gen_range(0..6)));
        p.tuple(&[a, b])
    }
}

pub fn metatheory(programs: usize, subst_cases: usize) -> Check {
    let mut r = rng(7);
    let mut steps_total = 0u64;
    let mut runs = 0usize;
    while runs < programs {
        let cfg = RandomConfig { functions: r.gen_range(2..10), ..Default::default() };
        let mut p = random_well_formed(&mut r, &cfg);
        let closed: Vec<Label> =
            p.labels().collect::<Vec<_>>().into_iter().filter(|&l| p.free_vars(l).unwrap().is_empty()).collect();
        let Some(&l) = closed.choose(&mut r) else { continue };
        runs += 1;
        let dom = p.function(l).dom;
        let arg = closed_arg(&mut p, dom, &mut r);
        let f = p.fun(l).unwrap();
        let mut e = p.app(f, arg).unwrap();
        let ty = p.type_of(e);
        for _ in 0..300 {
            let fv = p.expr_fv(e);
            ensure!(fv.is_empty(), "run {runs}: expression became open");
            match step(&mut p, e) {
                Ok(Step::Next(x)) => {
                    ensure!(
                        p.type_of(x) == ty,
                        "run {runs}: type changed from {} to {}",
                        p.type_str(ty),
                        p.type_str(p.type_of(x))
                    );
                    ensure!(well_formed(&mut p).is_ok(), "run {runs}: program became ill-formed");
                    let mut memo = Default::default();
                    let derived = p.derive_type(x, &mut memo).map_err(|e| format!("run {runs}: {e}"))?;
                    ensure!(derived == ty, "run {runs}: derived type differs");
                    e = x;
                    steps_total += 1;
                }
                Ok(Step::Value) => {
                    ensure!(is_value(&p, e), "run {runs}: value check");
                    break;
                }
                Ok(Step::Halt(..)) => break,
                Err(err) => return Err(format!("run {runs}: {err} in {}", print_expr(&p, e))),
            }
        }
    }

    let mut cases = 0;
    while cases < subst_cases {
        let cfg = RandomConfig { functions: r.gen_range(2..9), acyclic: true, unset: 0.15, depth: 3 };
        let mut p = random_well_formed(&mut r, &cfg);
        let with_body: Vec<Label> = p.labels().filter(|&l| p.body(l).is_some()).collect();
        let Some(&l) = with_body.choose(&mut r) else { continue };
        cases += 1;
        let body = p.body(l).unwrap();
        let dom = p.function(l).dom;
        let arg = closed_arg(&mut p, dom, &mut r);
        let want = tree_subst(&unfold(&p, body), l, &unfold(&p, arg));
        let f = p.fun(l).unwrap();
        let app = p.app(f, arg).unwrap();
        let got = beta_reduce(&mut p, app).map_err(|e| e.to_string())?;
        ensure!(unfold(&p, got.expr) == want, "case {cases}: substitution differs from the whole-copy oracle");
        let mut memo = Default::default();
        ensure!(p.derive_type(got.expr, &mut memo).is_ok(), "case {cases}: result ill-typed");
    }
    Ok(format!("{runs} runs ({steps_total} steps) without getting stuck; {cases} substitutions agree"))
}

// ── 8 ────────────────────────────────────────────────────────────────────

fn run_int(p: &mut Program, src: &str) -> Result<i64, String> {
    let e = parse_expr(p, src).map_err(|e| e.to_string())?;
    match eval(p, e, lamg_core::eval::DEFAULT_FUEL).map_err(|e| e.to_string())?.0 {
        Outcome::Value(v) => match p.kind(v) {
            &ExprKind::Int(n) => Ok(n),
            _ => Err(format!("{src} gave {}", print_expr(p, v))),
        },
        Outcome::Halt { .. } => Err(format!("{src} halted")),
    }
}

pub fn evaluator() -> Check {
    let mut p = fixtures::pow();
    let v = run_int(&mut p, "pow 3 5")?;
    ensure!(v == 243, "pow 3 5 = {v}");
    for n in 0..=10 {
        let v = run_int(&mut p, &format!("iter (succ, {n}, 0)"))?;
        ensure!(v == n, "iter(succ, {n}, 0) = {v}");
    }
    Ok("pow 3 5 = 243; iter(succ, n, 0) = n for n in 0..=10".into())
}

// ── 9 ────────────────────────────────────────────────────────────────────

fn tier_of(n: usize) -> Tier {
    match n {
        0 => Tier::Empty,
        1 => Tier::Singleton,
        2..=16 => Tier::SmallArray,
        _ => Tier::Trie,
    }
}

pub fn set_structure(ops: usize, pairs: usize) -> Check {
    let mut r = rng(9);
    let mut u = Universe::new();
    let mut pool: Vec<(SetHandle, BTreeSet<u32>)> = vec![(SetHandle::Empty, BTreeSet::new())];
    let mut canon: BTreeMap<Vec<u32>, SetHandle> = BTreeMap::new();
    for i in 0..ops {
        let a = r.gen_range(0..pool.len());
        let (s, o) = pool[a].clone();
        let (ns, no) = match r.gen_range(0..10) {
            0..=3 => {
                let x = r.gen_range(0..200);
                let mut o = o;
                o.insert(x);
                (u.insert(s, x), o)
            }
            4 | 5 => {
                let x = o.iter().copied().collect::<Vec<_>>().choose(&mut r).copied().unwrap_or(0);
                let mut o = o;
                o.remove(&x);
                (u.remove(s, x), o)
            }
            6 | 7 => {
                let (t, p) = pool[r.gen_range(0..pool.len())].clone();
                (u.union(s, t), o.union(&p).copied().collect())
            }
            8 => {
                let (t, p) = pool[r.gen_range(0..pool.len())].clone();
                (u.difference(s, t), o.difference(&p).copied().collect())
            }
            _ => {
                let (t, p) = pool[r.gen_range(0..pool.len())].clone();
                let got = u.intersects(s, t);
                ensure!(got == !o.is_disjoint(&p), "op {i}: intersects disagrees");
                let x = r.gen_range(0..200);
                ensure!(u.member(s, x) == o.contains(&x), "op {i}: member disagrees");
                continue;
            }
        };
        let got: BTreeSet<u32> = u.elements(ns).into_iter().collect();
        ensure!(got == no, "op {i}: contents differ");
        ensure!(ns.tier() == tier_of(no.len()), "op {i}: tier {:?} for {} elements", ns.tier(), no.len());
        let key: Vec<u32> = no.iter().copied().collect();
        if let Some(&prev) = canon.get(&key) {
            ensure!(prev == ns, "op {i}: equal sets with different handles");
        } else {
            canon.insert(key, ns);
        }
        if pool.len() < 400 {
            pool.push((ns, no));
        } else {
            let k = r.gen_range(0..pool.len());
            pool[k] = (ns, no);
        }
    }
    u.check_invariants()?;

    // Insertion order does not matter.
    let xs: Vec<u32> = (0..40).map(|_| r.gen_range(0..1000)).collect();
    let mut ys = xs.clone();
    ys.shuffle(&mut r);
    let (mut a, mut b) = (SetHandle::Empty, SetHandle::Empty);
    for (&x, &y) in xs.iter().zip(&ys) {
        a = u.insert(a, x);
        b = u.insert(b, y);
    }
    ensure!(a == b, "insertion order changed the handle");

    // 16 ↔ 17 both ways.
    let mut s = SetHandle::Empty;
    for x in 0..16 {
        s = u.insert(s, 5000 + x);
    }
    ensure!(s.tier() == Tier::SmallArray, "16 elements not an array");
    let up = u.insert(s, 5016);
    ensure!(up.tier() == Tier::Trie, "17 elements not a trie");
    let down = u.remove(up, 5016);
    ensure!(down.tier() == Tier::SmallArray && down == s, "17 → 16 did not return the array");

    // Intersection pairs from families with shared prefixes.
    let mut fam: Vec<(SetHandle, BTreeSet<u32>)> = Vec::new();
    for _ in 0..200 {
        let n = r.gen_range(0..60);
        let base = r.gen_range(0..5) * 40;
        let o: BTreeSet<u32> = (0..n).map(|_| base + r.gen_range(0..120)).collect();
        let h = u.from_elements(o.iter().copied());
        fam.push((h, o));
    }
    for i in 0..pairs {
        let (a, oa) = &fam[r.gen_range(0..fam.len())];
        let (b, ob) = &fam[r.gen_range(0..fam.len())];
        ensure!(u.intersects(*a, *b) == !oa.is_disjoint(ob), "pair {i}: intersects disagrees");
    }
    u.check_invariants()?;
    Ok(format!("{ops} ops, canonical handles, 16↔17 tiers, {pairs} intersect pairs"))
}

// ── 10 ───────────────────────────────────────────────────────────────────

pub fn scaling_rows(strategy: Strategy, op: Op, min: usize, max: usize) -> Vec<BenchRow> {
    bench::sizes(min, max).into_iter().map(|n| bench::run_bench(&BenchSpec::new(strategy, n, op))).collect()
}

pub fn scaling(min: usize, max: usize) -> Check {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for s in [Strategy::LoopCascade, Strategy::AccLoopCascade] {
        for op in [Op::Fv, Op::Beta, Op::Nest] {
            let rows = scaling_rows(s, op, min, max);
            let (_, r2) = bench::fit_n_log_n(&rows);
            let ratio = bench::max_doubling_ratio(&rows);
            let note = format!("{s}/{op:?}: R²={r2:.3} max ratio={ratio:.2}");
            if r2 < 0.9 || ratio > 2.8 {
                failures.push(note.clone());
            }
            notes.push(note);
        }
    }
    // Nested loops: correctness smoke test only.
    for n in bench::sizes(1, 512) {
        generator_checks(Strategy::LoopNest, n, false)?;
    }
    if failures.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

/// Structural checks on one generated program; `exact` adds the Kleene
/// oracle comparison.
pub fn generator_checks(s: Strategy, n: usize, exact: bool) -> Check {
    let g = bench::generate(s, n);
    let mut p = g.program;
    ensure!(p.check_program().is_ok(), "{s} {n}: ill-typed");
    p.free_vars_all();
    if exact {
        let oracle = brute_force_fv(&p);
        for l in p.labels().collect::<Vec<_>>() {
            let got: BTreeSet<Label> = {
                let s = p.free_vars(l).unwrap();
                p.var_set(s)
            }
            .into_iter()
            .collect();
            ensure!(got == oracle[l.index()], "{s} {n}: FV({}) differs", p.name(l));
        }
    }
    let counters: BTreeSet<Label> = g.loops.iter().map(|lp| lp.header).collect();
    let t = build_nest_tree(&mut p, Root::Label(g.main)).map_err(|e| e.to_string())?;
    match s {
        Strategy::LoopCascade => {
            for lp in &g.loops {
                ensure!(t.parent_of(lp.header) == Some(Some(g.main)), "{s} {n}: header not under main");
            }
            let top = t.sccs_labels(0);
            let heads: Vec<&(Vec<Label>, bool)> = top.iter().filter(|(m, _)| counters.contains(&m[0])).collect();
            ensure!(heads.len() == n && heads.iter().all(|(m, r)| m.len() == 1 && *r), "{s} {n}: header SCCs");
            let pos: Vec<usize> =
                g.loops.iter().map(|lp| top.iter().position(|(m, _)| m[0] == lp.header).unwrap()).collect();
            ensure!(pos.windows(2).all(|w| w[0] < w[1]), "{s} {n}: headers not ordered");
        }
        Strategy::AccLoopCascade => {
            let last = g.loops[n - 1].exit;
            let fv: BTreeSet<Label> = {
                let s = p.free_vars(last).unwrap();
                p.var_set(s)
            }
            .into_iter()
            .collect();
            ensure!(counters.is_subset(&fv), "{s} {n}: final exit misses counters");
        }
        Strategy::LoopNest => {
            for (k, lp) in g.loops.iter().enumerate() {
                ensure!(t.level_of(lp.header) == Some(k as u32 + 1), "{s} {n}: header {k} at wrong level");
            }
            let inner = g.loops[n - 1].body;
            let fv: BTreeSet<Label> = {
                let s = p.free_vars(inner).unwrap();
                p.var_set(s)
            }
            .into_iter()
            .collect();
            ensure!(counters.is_subset(&fv), "{s} {n}: innermost body misses counters");
        }
    }
    Ok(format!("{s} {n}"))
}

// ── 11 ───────────────────────────────────────────────────────────────────

pub fn eta_and_well_known(cases: usize) -> Check {
    let mut p = fixtures::well_known();
    let (f, h) = (p.label("f"), p.label("h"));
    ensure!(unknown_uses(&p, f) == vec![h], "unknown uses of f: {:?}", names(&p, unknown_uses(&p, f)));
    let WellKnown::Wrapped(w) = make_well_known(&mut p, f).map_err(|e| e.to_string())? else {
        return Err("f was already well-known".into());
    };
    ensure!(p.name(w) == "f_eta", "wrapper named {}", p.name(w));
    let wb = print_expr(&p, p.body(w).unwrap());
    ensure!(wb == "f @f_eta", "wrapper body {wb}");
    let hb = print_expr(&p, p.body(h).unwrap());
    ensure!(hb == "%add (f (@h.0, @h.1), g f_eta)", "h body {hb}");
    ensure!(unknown_uses(&p, f).is_empty(), "f still escapes");
    ensure!(make_well_known(&mut p, f) == Ok(WellKnown::AlreadyWellKnown), "second pass changed something");

    let mut r = rng(11);
    let mut p = fixtures::pow();
    let mut q = random_program(&mut r, &RandomConfig::default());
    let curried: Vec<Label> = ["add", "mul", "pow"].iter().map(|n| p.label(n)).collect();
    for i in 0..cases {
        let (prog, e) = if i % 2 == 0 {
            let e = match r.gen_range(0..4) {
                0 => {
                    let l = *p.labels().collect::<Vec<_>>().choose(&mut r).unwrap();
                    p.fun(l).unwrap()
                }
                1 => p.prim(Prim::ARITH[r.gen_range(0..6)]),
                2 => {
                    let (a, b) =
                        (p.fun(curried[r.gen_range(0..3)]).unwrap(), p.fun(curried[r.gen_range(0..3)]).unwrap());
                    let t = p.tuple(&[a, b]);
                    p.extract(t, r.gen_range(0..2)).unwrap()
                }
                _ => {
                    let c = p.fun(curried[r.gen_range(0..3)]).unwrap();
                    let n = p.int(r.gen_range(0..9));
                    p.app(c, n).unwrap()
                }
            };
            (&mut p, e)
        } else {
            let l = *q.labels().collect::<Vec<_>>().choose(&mut r).unwrap();
            let e = q.fun(l).unwrap();
            (&mut q, e)
        };
        let w = eta_expand(prog, e).map_err(|e| e.to_string())?;
        ensure!(eta_reduce(prog, w) == Some(e), "case {i}: η round trip failed for {}", print_expr(prog, e));
    }
    Ok(format!("escaping f wrapped as f_eta; {cases} η round trips"))
}

// ── 12 ───────────────────────────────────────────────────────────────────

pub fn ill_formedness() -> Check {
    let mut p = fixtures::cyclic_nesting();
    let w = well_formed(&mut p).err().ok_or("cyclic program accepted")?;
    ensure!(w.len() == 2 && names(&p, w.clone()) == set(&["f", "g"]), "witness {:?}", names(&p, w));
    let e = parse_program(fixtures::ILL_TYPED_BRANCH).err().ok_or("ill-typed branch accepted")?;
    ensure!(e.msg.contains("type mismatch"), "unexpected error: {e}");
    let mut ok = fixtures::nested_loops();
    ensure!(well_formed(&mut ok).is_ok(), "well-formed fixture rejected");
    Ok(format!("witness cycle f ⇄ g; branch rejected ({e})"))
}
