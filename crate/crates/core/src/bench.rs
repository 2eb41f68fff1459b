//! Synthetic CPS loop programs and a small timing harness.
//!
//! Every generated program lives in a container `main : [int, int -> bot]
//! -> bot` that receives the loop bound and a return continuation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::ir::{Expr, Label, Prim, Program};
use crate::nesting::{build_nest_tree, Root};
use crate::transform::specialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// `n` consecutive counting loops; loop `k` hands its counter to loop
    /// `k + 1` as the bound.
    LoopCascade,
    /// A cascade whose exit sums every loop counter.
    AccLoopCascade,
    /// `n` nested counting loops.
    LoopNest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Fv,
    Beta,
    Nest,
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cascade" | "loop-cascade" => Ok(Strategy::LoopCascade),
            "acc" | "acc-cascade" | "acc-loop-cascade" => Ok(Strategy::AccLoopCascade),
            "nest" | "loop-nest" => Ok(Strategy::LoopNest),
            _ => Err(format!("unknown strategy `{s}` (cascade, acc-cascade, nest)")),
        }
    }
}

impl FromStr for Op {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fv" => Ok(Op::Fv),
            "beta" => Ok(Op::Beta),
            "nest" => Ok(Op::Nest),
            _ => Err(format!("unknown op `{s}` (fv, beta, nest)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::LoopCascade => "cascade",
            Strategy::AccLoopCascade => "acc-cascade",
            Strategy::LoopNest => "nest",
        })
    }
}

/// Labels of one generated loop.
#[derive(Clone, Copy, Debug)]
pub struct Loop {
    pub header: Label,
    pub body: Label,
    pub exit: Label,
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub program: Program,
    pub main: Label,
    pub loops: Vec<Loop>,
}

fn sum(p: &mut Program, xs: &[Expr]) -> Expr {
    match xs {
        [] => p.int(0),
        [x] => *x,
        _ => {
            let (a, b) = xs.split_at(xs.len() / 2);
            let (a, b) = (sum(p, a), sum(p, b));
            p.binop(Prim::Add, a, b).unwrap()
        }
    }
}

pub fn generate(strategy: Strategy, n: usize) -> Generated {
    assert!(n >= 1);
    let mut p = Program::new();
    let pair = p.tuple_type(&[Program::INT, Program::INT]);
    let ret = p.arrow(Program::INT, Program::BOT);
    let main_dom = p.tuple_type(&[Program::INT, ret]);
    let main = p.new_function("main", main_dom, Program::BOT);
    let hdom = if strategy == Strategy::LoopNest { Program::INT } else { pair };
    let loops: Vec<Loop> = (1..=n)
        .map(|k| Loop {
            header: p.new_function(&format!("h{k}"), hdom, Program::BOT),
            body: p.new_function(&format!("b{k}"), Program::UNIT, Program::BOT),
            exit: p.new_function(&format!("x{k}"), Program::UNIT, Program::BOT),
        })
        .collect();
    let e = &mut p;
    let mv = e.var(main).unwrap();
    let bound = e.extract(mv, 0).unwrap();
    let k_ret = e.extract(mv, 1).unwrap();
    let zero = e.int(0);
    let one = e.int(1);
    let call = |e: &mut Program, f: Label, a: Expr| {
        let f = e.fun(f).unwrap();
        e.app(f, a).unwrap()
    };
    match strategy {
        Strategy::LoopCascade | Strategy::AccLoopCascade => {
            let a = e.tuple(&[zero, bound]);
            let b = call(e, loops[0].header, a);
            e.set_body(main, b).unwrap();
            let counters: Vec<Expr> = loops
                .iter()
                .map(|lp| {
                    let v = e.var(lp.header).unwrap();
                    e.extract(v, 0).unwrap()
                })
                .collect();
            for (k, lp) in loops.iter().enumerate() {
                let v = e.var(lp.header).unwrap();
                let (i, hi) = (counters[k], e.extract(v, 1).unwrap());
                let c = e.binop(Prim::Lt, i, hi).unwrap();
                let (bf, xf) = (e.fun(lp.body).unwrap(), e.fun(lp.exit).unwrap());
                let br = e.branch(Program::BOT, c, bf, xf).unwrap();
                e.set_body(lp.header, br).unwrap();
                let i1 = e.binop(Prim::Add, i, one).unwrap();
                let a = e.tuple(&[i1, hi]);
                let b = call(e, lp.header, a);
                e.set_body(lp.body, b).unwrap();
                let x = if k + 1 < n {
                    let a = e.tuple(&[zero, i]);
                    call(e, loops[k + 1].header, a)
                } else {
                    let r = if strategy == Strategy::AccLoopCascade { sum(e, &counters) } else { i };
                    e.app(k_ret, r).unwrap()
                };
                e.set_body(lp.exit, x).unwrap();
            }
        }
        Strategy::LoopNest => {
            let b = call(e, loops[0].header, zero);
            e.set_body(main, b).unwrap();
            for (k, lp) in loops.iter().enumerate() {
                let i = e.var(lp.header).unwrap();
                let c = e.binop(Prim::Lt, i, bound).unwrap();
                let (bf, xf) = (e.fun(lp.body).unwrap(), e.fun(lp.exit).unwrap());
                let br = e.branch(Program::BOT, c, bf, xf).unwrap();
                e.set_body(lp.header, br).unwrap();
                let body = if k + 1 < n {
                    call(e, loops[k + 1].header, zero)
                } else {
                    let i1 = e.binop(Prim::Add, i, one).unwrap();
                    call(e, lp.header, i1)
                };
                e.set_body(lp.body, body).unwrap();
                let exit = if k > 0 {
                    let outer = e.var(loops[k - 1].header).unwrap();
                    let o1 = e.binop(Prim::Add, outer, one).unwrap();
                    call(e, loops[k - 1].header, o1)
                } else {
                    e.app(k_ret, i).unwrap()
                };
                e.set_body(lp.exit, exit).unwrap();
            }
        }
    }
    Generated { program: p, main, loops }
}

#[derive(Clone, Copy, Debug)]
pub struct BenchSpec {
    pub strategy: Strategy,
    pub n: usize,
    pub op: Op,
    pub warmup: usize,
    pub repeats: usize,
}

impl BenchSpec {
    pub fn new(strategy: Strategy, n: usize, op: Op) -> Self {
        BenchSpec { strategy, n, op, warmup: 3, repeats: 9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub median_us: f64,
    pub min_us: f64,
    pub max_us: f64,
}

pub const CSV_HEADER: &str = "n,median_us,min_us,max_us";

impl BenchRow {
    pub fn csv(&self) -> String {
        format!("{},{:.3},{:.3},{:.3}", self.n, self.median_us, self.min_us, self.max_us)
    }
}

/// One timed run on a freshly generated program, in microseconds.
pub fn time_once(strategy: Strategy, n: usize, op: Op) -> f64 {
    let Generated { program: mut p, main, .. } = generate(strategy, n);
    match op {
        Op::Fv => {
            let labels: Vec<Label> = p.labels().collect();
            let t = Instant::now();
            for l in labels {
                p.free_vars(l).unwrap();
            }
            t.elapsed().as_secs_f64() * 1e6
        }
        Op::Beta => {
            p.free_vars_all();
            // A specialization at most doubles the program; growing the
            // tables inside the timed region would dominate single sizes.
            p.reserve(p.expr_count(), p.len());
            let k = p.new_function("ret", Program::INT, Program::BOT);
            let (zero, kf) = (p.int(0), p.fun(k).unwrap());
            let arg = p.tuple(&[zero, kf]);
            let t = Instant::now();
            specialize(&mut p, main, arg).unwrap();
            t.elapsed().as_secs_f64() * 1e6
        }
        Op::Nest => {
            p.free_vars_all();
            let t = Instant::now();
            let tree = build_nest_tree(&mut p, Root::Label(main)).unwrap();
            let us = t.elapsed().as_secs_f64() * 1e6;
            std::hint::black_box(tree);
            us
        }
    }
}

/// Runs `warmup` discarded runs, then reports the median and range of
/// `repeats` timed runs.
pub fn run_bench(spec: &BenchSpec) -> BenchRow {
    for _ in 0..spec.warmup {
        time_once(spec.strategy, spec.n, spec.op);
    }
    let mut ts: Vec<f64> = (0..spec.repeats.max(1)).map(|_| time_once(spec.strategy, spec.n, spec.op)).collect();
    ts.sort_by(f64::total_cmp);
    BenchRow { n: spec.n, median_us: ts[ts.len() / 2], min_us: ts[0], max_us: ts[ts.len() - 1] }
}

/// Powers of two in `min..=max`.
pub fn sizes(min: usize, max: usize) -> Vec<usize> {
    (0..usize::BITS).map(|e| 1usize << e).filter(|&n| n >= min.max(1) && n <= max).collect()
}

/// Least-squares fit of `t = c · n·log₂n` through the origin. Returns `c`
/// and the coefficient of determination.
pub fn fit_n_log_n(rows: &[BenchRow]) -> (f64, f64) {
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64 * (r.n as f64).log2()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_us).collect();
    let c = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / xs.iter().map(|x| x * x).sum::<f64>();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - c * x).powi(2)).sum();
    (c, 1.0 - ss_res / ss_tot)
}

/// Largest ratio between medians of successive rows.
pub fn max_doubling_ratio(rows: &[BenchRow]) -> f64 {
    rows.windows(2).map(|w| w[1].median_us / w[0].median_us).fold(0.0, f64::max)
}
