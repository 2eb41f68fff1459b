//! Seeded random programs for property tests.
//!
//! Functions are laid out on a random tree. A body reads only the variables
//! of its tree ancestors (or its own) but may call any function, so most
//! programs are well-formed and some are not.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ir::{Expr, Label, Prim, Program, Type};
use crate::nesting::well_formed;

#[derive(Clone, Debug)]
pub struct RandomConfig {
    pub functions: usize,
    /// Only call functions with a larger label, so every call graph is a DAG.
    pub acyclic: bool,
    /// Probability that a function is left without a body.
    pub unset: f64,
    /// Expression nesting budget per body.
    pub depth: u32,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig { functions: 12, acyclic: false, unset: 0.1, depth: 4 }
    }
}

struct Gen<'a, R> {
    p: &'a mut Program,
    rng: &'a mut R,
    parent: Vec<Option<usize>>,
    labels: Vec<Label>,
    pair: Type,
    acyclic: bool,
}

impl<R: Rng> Gen<'_, R> {
    fn readable(&self, k: usize) -> Vec<usize> {
        let mut out = vec![k];
        let mut a = self.parent[k];
        while let Some(x) = a {
            out.push(x);
            a = self.parent[x];
        }
        out.retain(|&x| self.p.function(self.labels[x]).dom != Program::UNIT);
        out
    }

    fn callees(&self, k: usize) -> Vec<usize> {
        if self.acyclic {
            (k + 1..self.labels.len()).collect()
        } else {
            (0..self.labels.len()).collect()
        }
    }

    fn read(&mut self, k: usize) -> Option<Expr> {
        let &a = self.readable(k).choose(self.rng)?;
        let l = self.labels[a];
        let v = self.p.var(l).unwrap();
        if self.p.function(l).dom == Program::INT {
            Some(v)
        } else {
            let i = self.rng.gen_range(0..2);
            Some(self.p.extract(v, i).unwrap())
        }
    }

    fn arg(&mut self, k: usize, t: Type, depth: u32) -> Expr {
        if t == Program::INT {
            self.int_expr(k, depth)
        } else if t == self.pair {
            let a = self.int_expr(k, depth);
            let b = self.int_expr(k, depth);
            self.p.tuple(&[a, b])
        } else {
            self.p.tuple(&[])
        }
    }

    fn call(&mut self, k: usize, depth: u32) -> Option<Expr> {
        let &g = self.callees(k).choose(self.rng)?;
        let l = self.labels[g];
        let dom = self.p.function(l).dom;
        let a = self.arg(k, dom, depth);
        let f = self.p.fun(l).unwrap();
        Some(self.p.app(f, a).unwrap())
    }

    fn branch(&mut self, k: usize, depth: u32) -> Option<Expr> {
        let units: Vec<usize> =
            self.callees(k).into_iter().filter(|&g| self.p.function(self.labels[g]).dom == Program::UNIT).collect();
        let (&t, &f) = (units.choose(self.rng)?, units.choose(self.rng)?);
        let a = self.int_expr(k, depth);
        let b = self.int_expr(k, depth);
        let c = self.p.binop(Prim::Lt, a, b).unwrap();
        let (t, f) = (self.p.fun(self.labels[t]).unwrap(), self.p.fun(self.labels[f]).unwrap());
        Some(self.p.branch(Program::INT, c, t, f).unwrap())
    }

    fn int_expr(&mut self, k: usize, depth: u32) -> Expr {
        if depth == 0 {
            return match self.rng.gen_range(0..3) {
                0 => self.p.int(self.rng.gen_range(-3..10)),
                _ => self.read(k).unwrap_or_else(|| self.p.int(1)),
            };
        }
        let d = depth - 1;
        let e = match self.rng.gen_range(0..6) {
            0 => Some(self.p.int(self.rng.gen_range(-3..10))),
            1 => self.read(k),
            2 => {
                let a = self.int_expr(k, d);
                let b = self.int_expr(k, d);
                Some(self.p.binop(Prim::Add, a, b).unwrap())
            }
            3 | 4 => self.call(k, d),
            _ => self.branch(k, d),
        };
        e.unwrap_or_else(|| self.int_expr(k, 0))
    }
}

/// One random program. It may be ill-formed.
pub fn random_program<R: Rng>(rng: &mut R, cfg: &RandomConfig) -> Program {
    let mut p = Program::new();
    let pair = p.tuple_type(&[Program::INT, Program::INT]);
    let n = cfg.functions.max(1);
    let mut parent = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        parent.push(if k == 0 || rng.gen_bool(0.2) { None } else { Some(rng.gen_range(0..k)) });
        let dom = [Program::INT, Program::UNIT, pair][rng.gen_range(0..3)];
        labels.push(p.new_function(&format!("f{k}"), dom, Program::INT));
    }
    let mut g = Gen { p: &mut p, rng, parent, labels, pair, acyclic: cfg.acyclic };
    for k in 0..n {
        if g.rng.gen_bool(cfg.unset) {
            continue;
        }
        let e = g.int_expr(k, cfg.depth);
        g.p.set_body(g.labels[k], e).unwrap();
    }
    p
}

/// A random well-formed program, retrying as needed.
pub fn random_well_formed<R: Rng>(rng: &mut R, cfg: &RandomConfig) -> Program {
    loop {
        let mut p = random_program(rng, cfg);
        if well_formed(&mut p).is_ok() {
            return p;
        }
    }
}
