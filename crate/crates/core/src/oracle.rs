//! Slow, obviously-correct reference computations used by the test suites.
//!
//! Nothing here uses the memoized free-variable machinery or the cached
//! local sets in expression nodes; everything is recomputed from the
//! defining equations.

use std::collections::{BTreeMap, BTreeSet};

use crate::ir::{Expr, ExprKind, Label, Program};

pub type LabelSet = BTreeSet<Label>;

/// Local variables and local functions of `e`, by structural recursion.
pub fn local_sets(p: &Program, e: Expr) -> (LabelSet, LabelSet) {
    let mut lv = LabelSet::new();
    let mut lf = LabelSet::new();
    let mut stack = vec![e];
    let mut seen = BTreeSet::new();
    while let Some(x) = stack.pop() {
        if !seen.insert(x) {
            continue;
        }
        match p.kind(x) {
            ExprKind::Var(l) => {
                lv.insert(*l);
            }
            ExprKind::Fun(l) => {
                lf.insert(*l);
            }
            ExprKind::App(a, b) => {
                stack.push(*a);
                stack.push(*b);
            }
            ExprKind::Tuple(es) => stack.extend(es.iter().copied()),
            ExprKind::Extract(a, _) => stack.push(*a),
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Prim(_) => {}
        }
    }
    (lv, lf)
}

/// Least fixed point of the free-variable equations by naive whole-program
/// Kleene iteration.
pub fn brute_force_fv(p: &Program) -> Vec<LabelSet> {
    let locals: Vec<Option<(LabelSet, LabelSet)>> = p.labels().map(|l| p.body(l).map(|b| local_sets(p, b))).collect();
    let mut fv = vec![LabelSet::new(); p.len()];
    loop {
        let mut changed = false;
        for l in p.labels() {
            let Some((lv, lf)) = &locals[l.index()] else { continue };
            let mut s = lv.clone();
            for g in lf {
                s.extend(fv[g.index()].iter().copied());
            }
            s.remove(&l);
            if s != fv[l.index()] {
                fv[l.index()] = s;
                changed = true;
            }
        }
        if !changed {
            return fv;
        }
    }
}

/// Strict nesters of every function: the transitive closure of
/// "var(a) is free in b".
pub fn strict_nesters(p: &Program, fv: &[LabelSet]) -> Vec<LabelSet> {
    p.labels()
        .map(|l| {
            let mut out = LabelSet::new();
            let mut work: Vec<Label> = fv[l.index()].iter().copied().collect();
            while let Some(a) = work.pop() {
                if out.insert(a) {
                    work.extend(fv[a.index()].iter().copied());
                }
            }
            out
        })
        .collect()
}

/// Brute-force immediate nester among `candidates`: the unique strict
/// nester that every other candidate strictly nests. `Err` lists the
/// minimal candidates when there is no unique one.
pub fn inest(nesters: &[LabelSet], l: Label, candidates: impl Fn(Label) -> bool) -> Result<Option<Label>, Vec<Label>> {
    let cs: Vec<Label> = nesters[l.index()].iter().copied().filter(|&c| candidates(c)).collect();
    let minimal: Vec<Label> =
        cs.iter().copied().filter(|&m| !cs.iter().any(|&o| o != m && nesters[o.index()].contains(&m))).collect();
    match minimal.len() {
        0 => Ok(None),
        1 => Ok(Some(minimal[0])),
        _ => Err(minimal),
    }
}

/// Loop-connectedness of the call graph reachable from `root`.
///
/// Builds a depth-first spanning tree visiting callees in local-function
/// order, classifies edges to tree ancestors (including self-loops) as
/// retreating, then returns the maximum number of retreating edges on any
/// path, starting anywhere, that repeats no node, except that its final
/// edge may close a cycle.
pub fn loop_connectedness(p: &Program, root: Label) -> usize {
    let succ: BTreeMap<Label, Vec<Label>> = reachable(p, root).into_iter().map(|l| (l, p.succs(l))).collect();
    let mut pre = BTreeMap::new();
    let mut post = BTreeMap::new();
    let mut clock = 0usize;
    let mut stack: Vec<(Label, usize)> = vec![(root, 0)];
    pre.insert(root, clock);
    while let Some(&mut (u, ref mut i)) = stack.last_mut() {
        if let Some(&v) = succ[&u].get(*i) {
            *i += 1;
            if let std::collections::btree_map::Entry::Vacant(e) = pre.entry(v) {
                clock += 1;
                e.insert(clock);
                stack.push((v, 0));
            }
        } else {
            clock += 1;
            post.insert(u, clock);
            stack.pop();
        }
    }
    let is_ancestor = |a: Label, d: Label| pre[&a] <= pre[&d] && post[&d] <= post[&a];

    fn walk(
        u: Label,
        succ: &BTreeMap<Label, Vec<Label>>,
        on_path: &mut BTreeSet<Label>,
        is_ancestor: &dyn Fn(Label, Label) -> bool,
    ) -> usize {
        let mut best = 0;
        for &v in &succ[&u] {
            let r = usize::from(is_ancestor(v, u));
            if on_path.contains(&v) {
                best = best.max(r);
            } else {
                on_path.insert(v);
                best = best.max(r + walk(v, succ, on_path, is_ancestor));
                on_path.remove(&v);
            }
        }
        best
    }
    let mut best = 0;
    for &start in succ.keys() {
        let mut on_path = BTreeSet::from([start]);
        best = best.max(walk(start, &succ, &mut on_path, &is_ancestor));
    }
    best
}

/// Functions reachable from `root` through local functions, root included.
pub fn reachable(p: &Program, root: Label) -> LabelSet {
    let mut seen = LabelSet::from([root]);
    let mut work = vec![root];
    while let Some(u) = work.pop() {
        for v in p.succs(u) {
            if seen.insert(v) {
                work.push(v);
            }
        }
    }
    seen
}

/// Expression unfolded into a tree: function references become inline
/// lambdas, named by the original label of the function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tree {
    Int(i64),
    Bool(bool),
    Prim(String),
    Var(Label),
    Lam(Label, Option<Box<Tree>>),
    App(Box<Tree>, Box<Tree>),
    Tuple(Vec<Tree>),
    Extract(Box<Tree>, u32),
}

/// Unfolds `e` through function bodies. Labels are mapped to their origin
/// so copies compare equal to what they were copied from. Only terminates on
/// programs whose call graph below `e` is acyclic.
pub fn unfold(p: &Program, e: Expr) -> Tree {
    let origin = |l: Label| p.function(l).origin.unwrap_or(l);
    match p.kind(e) {
        &ExprKind::Int(v) => Tree::Int(v),
        &ExprKind::Bool(b) => Tree::Bool(b),
        ExprKind::Prim(_) => Tree::Prim(p.expr_str(e)),
        &ExprKind::Var(l) => Tree::Var(origin(l)),
        &ExprKind::Fun(l) => Tree::Lam(origin(l), p.body(l).map(|b| Box::new(unfold(p, b)))),
        &ExprKind::App(a, b) => Tree::App(Box::new(unfold(p, a)), Box::new(unfold(p, b))),
        ExprKind::Tuple(es) => Tree::Tuple(es.iter().map(|&x| unfold(p, x)).collect()),
        &ExprKind::Extract(a, i) => Tree::Extract(Box::new(unfold(p, a)), i),
    }
}

/// Capture-avoiding substitution of `var ↦ by` on a tree. A lambda binding
/// `var` shadows it.
pub fn tree_subst(t: &Tree, var: Label, by: &Tree) -> Tree {
    match t {
        Tree::Var(l) if *l == var => by.clone(),
        Tree::Lam(l, _) if *l == var => t.clone(),
        Tree::Lam(l, b) => Tree::Lam(*l, b.as_ref().map(|b| Box::new(tree_subst(b, var, by)))),
        Tree::App(a, b) => Tree::App(Box::new(tree_subst(a, var, by)), Box::new(tree_subst(b, var, by))),
        Tree::Tuple(es) => Tree::Tuple(es.iter().map(|x| tree_subst(x, var, by)).collect()),
        Tree::Extract(a, i) => Tree::Extract(Box::new(tree_subst(a, var, by)), *i),
        _ => t.clone(),
    }
}
