//! Pretty-printer producing text that [`parse_program`](super::parse_program)
//! reads back. Compound subexpressions shared within one body are bound
//! once with `let`.

use std::fmt::Write;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::ir::{Expr, ExprKind, Label, Prim, Program};

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for l in p.labels() {
        print_function(p, l, &mut out);
    }
    out
}

pub fn print_function(p: &Program, l: Label, out: &mut String) {
    let f = p.function(l);
    let _ = write!(out, "fn {} : {} -> {}", f.name, atype(p, f.dom), p.type_str(f.cod));
    match f.body {
        None => out.push_str(";\n"),
        Some(b) => {
            let mut pr = Printer::new(p, b);
            if pr.order.is_empty() {
                out.push_str(" = ");
                pr.expr(b, out);
                out.push_str(";\n");
            } else {
                out.push_str(" =\n");
                for e in std::mem::take(&mut pr.order) {
                    let _ = write!(out, "  let {} = ", pr.bound[&e]);
                    pr.expr_unbound(e, out);
                    out.push_str(" in\n");
                }
                out.push_str("  ");
                pr.expr(b, out);
                out.push_str(";\n");
            }
        }
    }
}

/// Renders one expression, inlining sharing.
pub fn print_expr(p: &Program, e: Expr) -> String {
    let pr = Printer { p, bound: FxHashMap::default(), order: Vec::new() };
    let mut s = String::new();
    pr.expr(e, &mut s);
    s
}

/// A domain type as it must appear left of `->`.
fn atype(p: &Program, t: crate::Type) -> String {
    let s = p.type_str(t);
    if matches!(p.type_kind(t), crate::TypeKind::Arrow(..)) {
        format!("({s})")
    } else {
        s
    }
}

struct Printer<'a> {
    p: &'a Program,
    bound: FxHashMap<Expr, String>,
    /// Shared nodes, children before parents.
    order: Vec<Expr>,
}

fn children(p: &Program, e: Expr) -> Vec<Expr> {
    match p.kind(e) {
        &ExprKind::App(a, b) => vec![a, b],
        ExprKind::Tuple(es) => es.to_vec(),
        &ExprKind::Extract(x, _) => vec![x],
        _ => Vec::new(),
    }
}

fn is_compound(p: &Program, e: Expr) -> bool {
    match p.kind(e) {
        ExprKind::App(..) | ExprKind::Extract(..) => true,
        ExprKind::Tuple(es) => !es.is_empty(),
        _ => false,
    }
}

impl<'a> Printer<'a> {
    fn new(p: &'a Program, root: Expr) -> Self {
        let mut uses: FxHashMap<Expr, u32> = FxHashMap::default();
        let mut seen = FxHashSet::default();
        let mut post = Vec::new();
        let mut stack = vec![(root, false)];
        while let Some((e, done)) = stack.pop() {
            if done {
                post.push(e);
                continue;
            }
            if !seen.insert(e) {
                continue;
            }
            stack.push((e, true));
            for c in children(p, e) {
                *uses.entry(c).or_default() += 1;
                stack.push((c, false));
            }
        }
        let mut taken: FxHashSet<String> = p.labels().map(|l| p.name(l).to_string()).collect();
        let mut bound = FxHashMap::default();
        let mut order = Vec::new();
        let mut next = 0;
        for e in post {
            if e != root && uses.get(&e).copied().unwrap_or(0) >= 2 && is_compound(p, e) {
                let name = loop {
                    let n = format!("_t{next}");
                    next += 1;
                    if taken.insert(n.clone()) {
                        break n;
                    }
                };
                bound.insert(e, name);
                order.push(e);
            }
        }
        Printer { p, bound, order }
    }

    fn expr(&self, e: Expr, out: &mut String) {
        if let Some(n) = self.bound.get(&e) {
            out.push_str(n);
            return;
        }
        self.expr_unbound(e, out);
    }

    /// Application level.
    fn expr_unbound(&self, e: Expr, out: &mut String) {
        stacker::maybe_grow(64 * 1024, 2 << 20, || match self.p.kind(e) {
            &ExprKind::App(a, b) => {
                self.expr(a, out);
                out.push(' ');
                self.postfix(b, out);
            }
            _ => self.postfix_unbound(e, out),
        })
    }

    fn postfix(&self, e: Expr, out: &mut String) {
        if let Some(n) = self.bound.get(&e) {
            out.push_str(n);
            return;
        }
        self.postfix_unbound(e, out);
    }

    fn postfix_unbound(&self, e: Expr, out: &mut String) {
        let p = self.p;
        match p.kind(e) {
            &ExprKind::Int(v) => {
                let _ = write!(out, "{v}");
            }
            &ExprKind::Bool(b) => {
                let _ = write!(out, "{b}");
            }
            ExprKind::Prim(Prim::Br(t)) => {
                let _ = write!(out, "%br[{}]", p.type_str(*t));
            }
            ExprKind::Prim(op) => {
                let _ = write!(out, "%{}", op.name());
            }
            &ExprKind::Fun(l) => out.push_str(p.name(l)),
            &ExprKind::Var(l) => {
                let _ = write!(out, "@{}", p.name(l));
            }
            ExprKind::Tuple(es) => {
                out.push('(');
                for (i, &x) in es.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.expr(x, out);
                }
                if es.len() == 1 {
                    out.push(',');
                }
                out.push(')');
            }
            &ExprKind::Extract(x, i) => {
                self.postfix(x, out);
                let _ = write!(out, ".{i}");
            }
            ExprKind::App(..) => {
                out.push('(');
                self.expr_unbound(e, out);
                out.push(')');
            }
        }
    }
}
