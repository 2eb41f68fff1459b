//! Emits a nesting tree as a lexically scoped ML program (OCaml syntax).
//!
//! Every function becomes a one-argument ML function. Its children in the
//! nesting tree become local bindings at the start of its body, one group
//! per SCC, dependencies first: `let` for a non-recursive singleton,
//! `let rec` otherwise, with `and` joining the members of a larger SCC.
//! Functions outside the tree are not emitted.

use std::fmt::Write;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::ir::{Expr, ExprKind, Label, Prim, Program, TypeKind};
use crate::nesting::{NestTree, Root};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MlExpr {
    Int(i64),
    Bool(bool),
    Unit,
    Name(String),
    App(Box<MlExpr>, Box<MlExpr>),
    Tuple(Vec<MlExpr>),
    /// Projection `i` out of an `n`-tuple.
    Proj {
        of: Box<MlExpr>,
        index: usize,
        arity: usize,
    },
    Failwith(String),
    Let {
        group: Group,
        body: Box<MlExpr>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub name: String,
    pub param: String,
    pub body: MlExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub recursive: bool,
    pub bindings: Vec<Binding>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlProgram {
    /// Builtin helpers referenced by the program.
    pub prelude: Vec<Prim>,
    pub groups: Vec<Group>,
}

const RESERVED: &[&str] = &[
    "and",
    "as",
    "assert",
    "begin",
    "class",
    "constraint",
    "do",
    "done",
    "downto",
    "else",
    "end",
    "exception",
    "external",
    "false",
    "for",
    "fun",
    "function",
    "functor",
    "if",
    "in",
    "include",
    "inherit",
    "initializer",
    "lazy",
    "let",
    "match",
    "method",
    "module",
    "mutable",
    "new",
    "nonrec",
    "object",
    "of",
    "open",
    "or",
    "private",
    "rec",
    "sig",
    "struct",
    "then",
    "to",
    "true",
    "try",
    "type",
    "val",
    "virtual",
    "when",
    "while",
    "with",
    "mod",
    "land",
    "lor",
    "lxor",
    "lsl",
    "lsr",
    "asr",
    "failwith",
    "not",
    "ref",
];

const PROJ_VAR: &str = "lamg_p";

fn helper(op: Prim) -> &'static str {
    match op {
        Prim::Add => "lamg_add",
        Prim::Sub => "lamg_sub",
        Prim::Mul => "lamg_mul",
        Prim::Lt => "lamg_lt",
        Prim::Le => "lamg_le",
        Prim::Eq => "lamg_eq",
        Prim::Br(_) => "lamg_br",
    }
}

fn helper_def(op: Prim) -> &'static str {
    match op {
        Prim::Add => "let lamg_add (a, b) = a + b",
        Prim::Sub => "let lamg_sub (a, b) = a - b",
        Prim::Mul => "let lamg_mul (a, b) = a * b",
        Prim::Lt => "let lamg_lt (a, b) = a < b",
        Prim::Le => "let lamg_le (a, b) = a <= b",
        Prim::Eq => "let lamg_eq (a, b) = a = b",
        Prim::Br(_) => "let lamg_br (c, t, f) = if c then t () else f ()",
    }
}

struct Namer {
    taken: FxHashSet<String>,
    funs: FxHashMap<Label, String>,
    params: FxHashMap<Label, String>,
}

impl Namer {
    fn fresh(&mut self, base: String) -> String {
        let base =
            if base.starts_with("lamg_") || RESERVED.contains(&base.as_str()) { format!("{base}_") } else { base };
        let mut n = base.clone();
        let mut k = 1;
        while !self.taken.insert(n.clone()) {
            n = format!("{base}_{k}");
            k += 1;
        }
        n
    }
}

fn ident(name: &str) -> String {
    let mut s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '\'' { c } else { '_' }).collect();
    if !s.starts_with(|c: char| c.is_ascii_lowercase() || c == '_') {
        s.insert(0, 'f');
    }
    s
}

struct Builder<'a> {
    p: &'a Program,
    t: &'a NestTree,
    names: Namer,
    prims: Vec<Prim>,
}

impl Builder<'_> {
    fn groups(&mut self, n: usize) -> Vec<Group> {
        let sccs = self.t.sccs[n].clone();
        sccs.iter()
            .rev()
            .map(|s| Group { recursive: s.recursive, bindings: s.members.iter().map(|&m| self.binding(m)).collect() })
            .collect()
    }

    fn binding(&mut self, n: usize) -> Binding {
        let l = self.t.nodes[n].label.expect("not the virtual root");
        let name = self.names.funs[&l].clone();
        let param = self.names.params[&l].clone();
        let mut body = match self.p.body(l) {
            Some(b) => self.expr(b),
            None => MlExpr::Failwith(format!("unset {}", self.p.name(l))),
        };
        for g in self.groups(n).into_iter().rev() {
            body = MlExpr::Let { group: g, body: Box::new(body) };
        }
        Binding { name, param, body }
    }

    fn expr(&mut self, e: Expr) -> MlExpr {
        stacker::maybe_grow(64 * 1024, 2 << 20, || self.expr_inner(e))
    }

    fn expr_inner(&mut self, e: Expr) -> MlExpr {
        let p = self.p;
        match p.kind(e) {
            &ExprKind::Int(v) => MlExpr::Int(v),
            &ExprKind::Bool(b) => MlExpr::Bool(b),
            &ExprKind::Prim(op) => {
                let key = match op {
                    Prim::Br(_) => Prim::Br(Program::INT),
                    o => o,
                };
                if !self.prims.contains(&key) {
                    self.prims.push(key);
                }
                MlExpr::Name(helper(op).into())
            }
            ExprKind::Fun(l) => MlExpr::Name(self.names.funs[l].clone()),
            ExprKind::Var(l) => MlExpr::Name(self.names.params[l].clone()),
            &ExprKind::App(a, b) => MlExpr::App(Box::new(self.expr(a)), Box::new(self.expr(b))),
            ExprKind::Tuple(es) => match es.len() {
                0 => MlExpr::Unit,
                1 => self.expr(es[0]),
                _ => MlExpr::Tuple(es.iter().map(|&x| self.expr(x)).collect()),
            },
            &ExprKind::Extract(x, i) => {
                let arity = match p.type_kind(p.type_of(x)) {
                    TypeKind::Tuple(ts) => ts.len(),
                    _ => unreachable!("extract from a non-tuple"),
                };
                let of = self.expr(x);
                if arity == 1 {
                    of
                } else {
                    MlExpr::Proj { of: Box::new(of), index: i as usize, arity }
                }
            }
        }
    }
}

/// Translates the functions in `t`. Top-level groups come from the
/// children of a virtual root, or from the root function alone.
pub fn to_ml(p: &Program, t: &NestTree) -> MlProgram {
    let mut names = Namer { taken: FxHashSet::default(), funs: FxHashMap::default(), params: FxHashMap::default() };
    let labels: Vec<Label> = t.nodes.iter().filter_map(|n| n.label).collect();
    for &l in &labels {
        let n = names.fresh(ident(p.name(l)));
        names.funs.insert(l, n);
    }
    for &l in &labels {
        let n = names.fresh(format!("x_{}", ident(p.name(l))));
        names.params.insert(l, n);
    }
    let mut b = Builder { p, t, names, prims: Vec::new() };
    let groups = match t.root {
        Root::Virtual => b.groups(0),
        Root::Label(l) => {
            let recursive = labels.iter().any(|&u| p.succs(u).contains(&l));
            vec![Group { recursive, bindings: vec![b.binding(0)] }]
        }
    };
    let mut prelude = b.prims;
    prelude.sort_by_key(|&op| helper(op));
    MlProgram { prelude, groups }
}

/// Checks that every name is bound where it is used. Returns the unbound
/// uses.
pub fn scope_check(m: &MlProgram) -> Vec<String> {
    let mut env: Vec<String> = m.prelude.iter().map(|&op| helper(op).to_string()).collect();
    let mut bad = Vec::new();
    for g in &m.groups {
        check_group(g, &mut env, &mut bad);
    }
    bad
}

fn check_group(g: &Group, env: &mut Vec<String>, bad: &mut Vec<String>) {
    let base = env.len();
    if g.recursive {
        env.extend(g.bindings.iter().map(|b| b.name.clone()));
    }
    for b in &g.bindings {
        env.push(b.param.clone());
        check_expr(&b.body, env, bad);
        env.pop();
    }
    env.truncate(base);
    env.extend(g.bindings.iter().map(|b| b.name.clone()));
}

fn check_expr(e: &MlExpr, env: &mut Vec<String>, bad: &mut Vec<String>) {
    stacker::maybe_grow(64 * 1024, 2 << 20, || match e {
        MlExpr::Int(_) | MlExpr::Bool(_) | MlExpr::Unit | MlExpr::Failwith(_) => {}
        MlExpr::Name(n) => {
            if !env.iter().rev().any(|x| x == n) {
                bad.push(n.clone());
            }
        }
        MlExpr::App(a, b) => {
            check_expr(a, env, bad);
            check_expr(b, env, bad);
        }
        MlExpr::Tuple(es) => es.iter().for_each(|x| check_expr(x, env, bad)),
        MlExpr::Proj { of, .. } => check_expr(of, env, bad),
        MlExpr::Let { group, body } => {
            let base = env.len();
            check_group(group, env, bad);
            check_expr(body, env, bad);
            env.truncate(base);
        }
    })
}

pub fn render(m: &MlProgram) -> String {
    let mut out = String::new();
    for &op in &m.prelude {
        out.push_str(helper_def(op));
        out.push('\n');
    }
    if !m.prelude.is_empty() {
        out.push('\n');
    }
    for g in &m.groups {
        render_group(g, 0, &mut out);
        out.push('\n');
    }
    out
}

fn indent(out: &mut String, d: usize) {
    for _ in 0..d {
        out.push_str("  ");
    }
}

fn render_group(g: &Group, d: usize, out: &mut String) {
    for (i, b) in g.bindings.iter().enumerate() {
        indent(out, d);
        let kw = match (i, g.recursive) {
            (0, true) => "let rec",
            (0, false) => "let",
            _ => "and",
        };
        let _ = writeln!(out, "{kw} {} {} =", b.name, b.param);
        render_body(&b.body, d + 1, out);
        out.push('\n');
    }
}

fn render_body(e: &MlExpr, d: usize, out: &mut String) {
    if let MlExpr::Let { group, body } = e {
        render_group(group, d, out);
        indent(out, d);
        out.push_str("in\n");
        render_body(body, d, out);
    } else {
        indent(out, d);
        render_expr(e, out);
    }
}

fn render_expr(e: &MlExpr, out: &mut String) {
    stacker::maybe_grow(64 * 1024, 2 << 20, || match e {
        MlExpr::Int(v) if *v < 0 => {
            let _ = write!(out, "({v})");
        }
        MlExpr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        MlExpr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        MlExpr::Unit => out.push_str("()"),
        MlExpr::Name(n) => out.push_str(n),
        MlExpr::App(a, b) => {
            out.push('(');
            render_expr(a, out);
            out.push(' ');
            render_expr(b, out);
            out.push(')');
        }
        MlExpr::Tuple(es) => {
            out.push('(');
            for (i, x) in es.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_expr(x, out);
            }
            out.push(')');
        }
        MlExpr::Proj { of, index, arity } => {
            out.push_str("(match ");
            render_expr(of, out);
            out.push_str(" with (");
            for k in 0..*arity {
                if k > 0 {
                    out.push_str(", ");
                }
                out.push_str(if k == *index { PROJ_VAR } else { "_" });
            }
            let _ = write!(out, ") -> {PROJ_VAR})");
        }
        MlExpr::Failwith(msg) => {
            let _ = write!(out, "(failwith {msg:?})");
        }
        MlExpr::Let { .. } => {
            out.push_str("(\n");
            render_body(e, 1, out);
            out.push(')');
        }
    })
}

/// Builds, checks and renders in one go.
pub fn emit_ml(p: &Program, t: &NestTree) -> Result<String, Vec<String>> {
    let m = to_ml(p, t);
    let bad = scope_check(&m);
    if bad.is_empty() {
        Ok(render(&m))
    } else {
        Err(bad)
    }
}
