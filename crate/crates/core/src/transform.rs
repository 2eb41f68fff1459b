//! Dependency-aware substitution, β-reduction and η-conversion.
//!
//! Substitution rewrites only what transitively depends on a substituted
//! variable. An expression whose free variables miss the substitution
//! domain is returned as is. A referenced function whose free variables
//! hit it is copied to a fresh function; inside the copy, the old
//! function's variable is redirected to the new one.

use lamg_sets::SetHandle;
use rustc_hash::FxHashMap;

use crate::ir::{Expr, ExprKind, Label, Program, TypeKind};
use crate::Error;

impl Program {
    /// Free variables of an arbitrary expression: its local variables plus
    /// the free variables of its local functions.
    pub fn expr_fv(&mut self, e: Expr) -> SetHandle {
        let n = self.node(e);
        let mut s = n.lv;
        for g in self.fun_set(n.lf) {
            let f = self.free_vars(g).expect("label in range");
            s = self.vars.union(s, f);
        }
        s
    }
}

/// Result of a substitution.
#[derive(Clone, Debug)]
pub struct Substituted {
    pub expr: Expr,
    /// Fresh functions in creation order.
    pub fresh: Vec<Label>,
    /// Original function ↦ its copy.
    pub copies: FxHashMap<Label, Label>,
}

struct Subst {
    /// Current variable map; extended and restored around copied bodies.
    vars: FxHashMap<Label, Expr>,
    dom: SetHandle,
    funs: FxHashMap<Label, Label>,
    fresh: Vec<Label>,
    scope: u32,
    next_scope: u32,
    memo: FxHashMap<(Expr, u32), Expr>,
}

/// Substitutes `var(l) ↦ e` for every pair in `map` inside `e`, adding
/// fresh functions to `p` as needed.
pub fn substitute(p: &mut Program, map: &[(Label, Expr)], e: Expr) -> Result<Substituted, Error> {
    let mut dom = SetHandle::Empty;
    for &(l, by) in map {
        let want = p.function(l).dom;
        if p.type_of(by) != want {
            return Err(Error::TypeMismatch { expected: p.type_str(want), found: p.type_str(p.type_of(by)) });
        }
        dom = p.vars.insert(dom, l.0);
    }
    let mut st = Subst {
        vars: map.iter().copied().collect(),
        dom,
        funs: FxHashMap::default(),
        fresh: Vec::new(),
        scope: 0,
        next_scope: 1,
        memo: FxHashMap::default(),
    };
    let expr = subst(p, &mut st, e)?;
    Ok(Substituted { expr, fresh: st.fresh, copies: st.funs })
}

/// `FV(e) ∩ dom ≠ ∅`, checked on local variables first, then on each local
/// function's free variables.
fn touches(p: &mut Program, dom: SetHandle, e: Expr) -> bool {
    let n = p.node(e);
    let (lv, lf) = (n.lv, n.lf);
    if p.vars.intersects(lv, dom) {
        return true;
    }
    for g in p.fun_set(lf) {
        let fv = p.free_vars(g).expect("label in range");
        if p.vars.intersects(fv, dom) {
            return true;
        }
    }
    false
}

/// Whether `var(l)` is free in `body`. When it is not, the copy of `l`
/// needs no redirection and the scope stays as it is.
fn mentions_own_var(p: &mut Program, l: Label, body: Expr) -> bool {
    let n = p.node(body);
    let (lv, lf) = (n.lv, n.lf);
    if p.vars.member(lv, l.0) {
        return true;
    }
    for g in p.fun_set(lf) {
        let fv = p.free_vars(g).expect("label in range");
        if p.vars.member(fv, l.0) {
            return true;
        }
    }
    false
}

enum Task {
    Visit(Expr),
    /// Rebuild a compound node from the results of its children.
    Build(Expr),
    /// Finish the copy `c` of the function referenced by `Fun` node `e`.
    Finish {
        e: Expr,
        c: Label,
        saved: Option<(Option<Expr>, SetHandle, u32)>,
        l: Label,
    },
}

fn subst(p: &mut Program, st: &mut Subst, root: Expr) -> Result<Expr, Error> {
    let mut tasks = vec![Task::Visit(root)];
    let mut out: Vec<Expr> = Vec::new();
    while let Some(t) = tasks.pop() {
        match t {
            Task::Visit(e) => {
                if let Some(&r) = st.memo.get(&(e, st.scope)) {
                    out.push(r);
                    continue;
                }
                if !touches(p, st.dom, e) {
                    out.push(e);
                    continue;
                }
                match *p.kind(e) {
                    ExprKind::Var(l) => {
                        let r = st.vars[&l];
                        st.memo.insert((e, st.scope), r);
                        out.push(r);
                    }
                    ExprKind::Fun(l) => {
                        if let Some(&c) = st.funs.get(&l) {
                            out.push(p.fun(c)?);
                            continue;
                        }
                        let c = p.fresh_copy_of(l);
                        st.funs.insert(l, c);
                        st.fresh.push(c);
                        let body = p.body(l).expect("a function with free variables has a body");
                        let saved = if mentions_own_var(p, l, body) {
                            let var_c = p.var(c)?;
                            let saved = (st.vars.insert(l, var_c), st.dom, st.scope);
                            st.dom = p.vars.insert(st.dom, l.0);
                            st.scope = st.next_scope;
                            st.next_scope += 1;
                            Some(saved)
                        } else {
                            None
                        };
                        tasks.push(Task::Finish { e, c, saved, l });
                        tasks.push(Task::Visit(body));
                    }
                    ExprKind::App(a, b) => {
                        tasks.push(Task::Build(e));
                        tasks.push(Task::Visit(b));
                        tasks.push(Task::Visit(a));
                    }
                    ExprKind::Extract(x, _) => {
                        tasks.push(Task::Build(e));
                        tasks.push(Task::Visit(x));
                    }
                    ExprKind::Tuple(ref es) => {
                        let es = es.clone();
                        tasks.push(Task::Build(e));
                        tasks.extend(es.iter().rev().map(|&x| Task::Visit(x)));
                    }
                    ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Prim(_) => out.push(e),
                }
            }
            Task::Build(e) => {
                let r = match *p.kind(e) {
                    ExprKind::App(..) => {
                        let b = out.pop().unwrap();
                        let a = out.pop().unwrap();
                        p.app(a, b)?
                    }
                    ExprKind::Extract(_, i) => {
                        let x = out.pop().unwrap();
                        p.extract(x, i)?
                    }
                    ExprKind::Tuple(ref es) => {
                        let at = out.len() - es.len();
                        let r = p.tuple(&out[at..]);
                        out.truncate(at);
                        r
                    }
                    _ => unreachable!("only compound nodes are rebuilt"),
                };
                st.memo.insert((e, st.scope), r);
                out.push(r);
            }
            Task::Finish { e, c, saved, l } => {
                let b = out.pop().unwrap();
                if let Some((prev, dom, scope)) = saved {
                    match prev {
                        Some(prev) => st.vars.insert(l, prev),
                        None => st.vars.remove(&l),
                    };
                    st.dom = dom;
                    st.scope = scope;
                }
                p.set_body(c, b)?;
                let r = p.fun(c)?;
                st.memo.insert((e, st.scope), r);
                out.push(r);
            }
        }
    }
    Ok(out.pop().expect("one result"))
}

/// β-reduces `l arg`: the body of `l` with `var(l) ↦ arg`.
pub fn beta_reduce(p: &mut Program, app: Expr) -> Result<Substituted, Error> {
    let &ExprKind::App(callee, arg) = p.kind(app) else {
        return Err(Error::NotAnApplication);
    };
    let &ExprKind::Fun(l) = p.kind(callee) else {
        return Err(Error::NotAnApplication);
    };
    let Some(body) = p.body(l) else {
        return Err(Error::UnsetBody(p.name(l).to_string()));
    };
    substitute(p, &[(l, arg)], body)
}

/// β-reduces `l arg` and stores the result as the body of a fresh copy of
/// `l`. The copy is listed first in `fresh`.
pub fn specialize(p: &mut Program, l: Label, arg: Expr) -> Result<(Label, Substituted), Error> {
    let f = p.fun(l)?;
    let app = p.app(f, arg)?;
    let mut r = beta_reduce(p, app)?;
    let c = p.fresh_copy_of(l);
    p.set_body(c, r.expr)?;
    r.fresh.insert(0, c);
    Ok((c, r))
}

/// η-reduction: a body `e @l` with `@l` not free in `e` reduces to `e`.
pub fn eta_reduce(p: &mut Program, l: Label) -> Option<Expr> {
    let body = p.body(l)?;
    let &ExprKind::App(e, v) = p.kind(body) else { return None };
    if *p.kind(v) != ExprKind::Var(l) {
        return None;
    }
    let fv = p.expr_fv(e);
    if p.vars.member(fv, l.0) {
        return None;
    }
    Some(e)
}

/// η-expansion: a fresh function `l` with body `e @l`.
pub fn eta_expand(p: &mut Program, e: Expr) -> Result<Label, Error> {
    let t = p.type_of(e);
    let &TypeKind::Arrow(dom, cod) = p.type_kind(t) else {
        return Err(Error::NotAFunction(p.type_str(t)));
    };
    let name = match p.kind(e) {
        &ExprKind::Fun(g) => format!("{}_eta", p.name(g)),
        _ => "eta".to_string(),
    };
    let l = p.new_function(&name, dom, cod);
    let v = p.var(l)?;
    let body = p.app(e, v)?;
    p.set_body(l, body)?;
    Ok(l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WellKnown {
    AlreadyWellKnown,
    /// The η-wrapper now standing in for every unknown use.
    Wrapped(Label),
}

/// Functions whose bodies reference `l` outside callee position.
pub fn unknown_uses(p: &Program, l: Label) -> Vec<Label> {
    p.users(l).into_iter().filter(|&u| p.body(u).is_some_and(|b| has_unknown(p, l, b))).collect()
}

fn has_unknown(p: &Program, l: Label, root: Expr) -> bool {
    let mut seen = rustc_hash::FxHashSet::default();
    let mut stack = vec![(root, false)];
    while let Some((e, callee)) = stack.pop() {
        if !seen.insert((e, callee)) {
            continue;
        }
        match p.kind(e) {
            &ExprKind::Fun(g) if g == l && !callee => return true,
            &ExprKind::App(a, b) => {
                stack.push((a, true));
                stack.push((b, false));
            }
            ExprKind::Tuple(es) => stack.extend(es.iter().map(|&x| (x, false))),
            &ExprKind::Extract(x, _) => stack.push((x, false)),
            _ => {}
        }
    }
    false
}

/// Makes `l` well-known: every reference outside callee position is
/// redirected to an η-expanded wrapper.
pub fn make_well_known(p: &mut Program, l: Label) -> Result<WellKnown, Error> {
    let users = unknown_uses(p, l);
    if users.is_empty() {
        return Ok(WellKnown::AlreadyWellKnown);
    }
    let f = p.fun(l)?;
    let w = eta_expand(p, f)?;
    let wf = p.fun(w)?;
    for u in users {
        let body = p.body(u).unwrap();
        let mut memo = FxHashMap::default();
        let nb = redirect(p, l, wf, body, false, &mut memo)?;
        p.set_body(u, nb)?;
    }
    Ok(WellKnown::Wrapped(w))
}

fn redirect(
    p: &mut Program,
    l: Label,
    to: Expr,
    e: Expr,
    callee: bool,
    memo: &mut FxHashMap<(Expr, bool), Expr>,
) -> Result<Expr, Error> {
    if let Some(&r) = memo.get(&(e, callee)) {
        return Ok(r);
    }
    let lf = p.node(e).lf;
    if !p.fns.member(lf, l.0) {
        return Ok(e);
    }
    let r = match p.kind(e).clone() {
        ExprKind::Fun(g) if g == l && !callee => to,
        ExprKind::App(a, b) => {
            let a = redirect(p, l, to, a, true, memo)?;
            let b = redirect(p, l, to, b, false, memo)?;
            p.app(a, b)?
        }
        ExprKind::Tuple(es) => {
            let mut out = Vec::with_capacity(es.len());
            for &x in es.iter() {
                out.push(redirect(p, l, to, x, false, memo)?);
            }
            p.tuple(&out)
        }
        ExprKind::Extract(x, i) => {
            let x = redirect(p, l, to, x, false, memo)?;
            p.extract(x, i)?
        }
        _ => e,
    };
    memo.insert((e, callee), r);
    Ok(r)
}
