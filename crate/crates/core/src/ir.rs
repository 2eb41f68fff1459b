//! Programs, functions, types and hash-consed expressions.
//!
//! A [`Program`] is a flat map from [`Label`]s to [`Function`]s. Every label
//! names both a function and the single variable that function binds.
//! Expressions are immutable and interned: building the same expression
//! twice returns the same [`Expr`]. Each node stores its type together with
//! its local-variable and local-function sets, so none of these need a
//! traversal later.

use std::fmt::{self, Write as _};

use lamg_sets::{SetHandle, Universe};
use rustc_hash::FxHashMap;

use crate::Error;

/// Identity of a function and of the variable it binds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub u32);

impl Label {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interned type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Type(u32);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeKind {
    Int,
    Bool,
    Bot,
    Arrow(Type, Type),
    Tuple(Box<[Type]>),
}

/// Interned expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(u32);

/// Builtin operations. Arithmetic and comparisons take a pair of ints;
/// `Br(t)` is the branch `[bool, [] -> t, [] -> t] -> t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Eq,
    Br(Type),
}

impl Prim {
    pub const ARITH: [Prim; 6] = [Prim::Add, Prim::Sub, Prim::Mul, Prim::Lt, Prim::Le, Prim::Eq];

    pub fn name(self) -> &'static str {
        match self {
            Prim::Add => "add",
            Prim::Sub => "sub",
            Prim::Mul => "mul",
            Prim::Lt => "lt",
            Prim::Le => "le",
            Prim::Eq => "eq",
            Prim::Br(_) => "br",
        }
    }

    pub fn from_name(s: &str) -> Option<Prim> {
        Prim::ARITH.iter().copied().find(|p| p.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Prim(Prim),
    /// Reference to a function.
    Fun(Label),
    /// The variable bound by a function.
    Var(Label),
    App(Expr, Expr),
    Tuple(Box<[Expr]>),
    Extract(Expr, u32),
}

#[derive(Clone, Debug)]
pub struct ExprNode {
    pub kind: ExprKind,
    pub ty: Type,
    /// Local variables (over the variable universe).
    pub lv: SetHandle,
    /// Local functions (over the function universe).
    pub lf: SetHandle,
}

#[derive(Clone, Debug)]
pub struct Function {
    pub name: String,
    pub dom: Type,
    pub cod: Type,
    /// `None` is the unset body.
    pub body: Option<Expr>,
    pub mark: u64,
    pub fv: SetHandle,
    /// Functions whose body mentions this one.
    pub users: SetHandle,
    /// The function this one was copied from, for fresh copies.
    pub origin: Option<Label>,
    pub(crate) on_stack: bool,
}

#[derive(Clone)]
pub struct Program {
    types: Vec<TypeKind>,
    type_ids: FxHashMap<TypeKind, Type>,
    exprs: Vec<ExprNode>,
    expr_ids: FxHashMap<ExprKind, Expr>,
    pub(crate) funs: Vec<Function>,
    names: FxHashMap<String, Label>,
    pub(crate) run: u64,
    pub(crate) vars: Universe,
    pub(crate) fns: Universe,
}

impl Default for Program {
    fn default() -> Self {
        Self::new()
    }
}

impl Program {
    pub fn new() -> Self {
        let mut p = Program {
            types: Vec::new(),
            type_ids: FxHashMap::default(),
            exprs: Vec::new(),
            expr_ids: FxHashMap::default(),
            funs: Vec::new(),
            names: FxHashMap::default(),
            run: 0,
            vars: Universe::new(),
            fns: Universe::new(),
        };
        // Fixed ids for the base types.
        p.mk_type(TypeKind::Int);
        p.mk_type(TypeKind::Bool);
        p.mk_type(TypeKind::Bot);
        p.mk_type(TypeKind::Tuple(Box::new([])));
        p
    }

    /// Reserves room for `exprs` more expression nodes and `funs` more
    /// functions.
    pub fn reserve(&mut self, exprs: usize, funs: usize) {
        self.exprs.reserve(exprs);
        self.expr_ids.reserve(exprs);
        self.funs.reserve(funs);
        self.names.reserve(funs);
    }

    // ── types ──────────────────────────────────────────────────────────────

    pub const INT: Type = Type(0);
    pub const BOOL: Type = Type(1);
    pub const BOT: Type = Type(2);
    pub const UNIT: Type = Type(3);

    pub fn mk_type(&mut self, k: TypeKind) -> Type {
        if let Some(&t) = self.type_ids.get(&k) {
            return t;
        }
        let t = Type(self.types.len() as u32);
        self.types.push(k.clone());
        self.type_ids.insert(k, t);
        t
    }

    pub fn arrow(&mut self, dom: Type, cod: Type) -> Type {
        self.mk_type(TypeKind::Arrow(dom, cod))
    }

    pub fn tuple_type(&mut self, ts: &[Type]) -> Type {
        self.mk_type(TypeKind::Tuple(ts.into()))
    }

    pub fn type_kind(&self, t: Type) -> &TypeKind {
        &self.types[t.0 as usize]
    }

    pub fn type_str(&self, t: Type) -> String {
        let mut s = String::new();
        self.write_type(&mut s, t, false);
        s
    }

    fn write_type(&self, out: &mut String, t: Type, arrow_lhs: bool) {
        match self.type_kind(t) {
            TypeKind::Int => out.push_str("int"),
            TypeKind::Bool => out.push_str("bool"),
            TypeKind::Bot => out.push_str("bot"),
            TypeKind::Tuple(ts) => {
                out.push('[');
                for (i, &m) in ts.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.write_type(out, m, false);
                }
                out.push(']');
            }
            &TypeKind::Arrow(a, b) => {
                if arrow_lhs {
                    out.push('(');
                }
                self.write_type(out, a, true);
                out.push_str(" -> ");
                self.write_type(out, b, false);
                if arrow_lhs {
                    out.push(')');
                }
            }
        }
    }

    pub fn prim_type(&mut self, p: Prim) -> Type {
        let int2 = self.tuple_type(&[Self::INT, Self::INT]);
        match p {
            Prim::Add | Prim::Sub | Prim::Mul => self.arrow(int2, Self::INT),
            Prim::Lt | Prim::Le | Prim::Eq => self.arrow(int2, Self::BOOL),
            Prim::Br(t) => {
                let thunk = self.arrow(Self::UNIT, t);
                let arg = self.tuple_type(&[Self::BOOL, thunk, thunk]);
                self.arrow(arg, t)
            }
        }
    }

    fn mismatch(&self, expected: Type, found: Type) -> Error {
        Error::TypeMismatch { expected: self.type_str(expected), found: self.type_str(found) }
    }

    // ── functions ──────────────────────────────────────────────────────────

    /// Adds a function with an unset body. A taken name gets `'` appended
    /// until it is free.
    pub fn new_function(&mut self, name: &str, dom: Type, cod: Type) -> Label {
        let mut name = if name.is_empty() { "_".to_string() } else { name.to_string() };
        while self.names.contains_key(&name) {
            name.push('\'');
        }
        let l = Label(self.funs.len() as u32);
        self.names.insert(name.clone(), l);
        self.funs.push(Function {
            name,
            dom,
            cod,
            body: None,
            mark: 0,
            fv: SetHandle::Empty,
            users: SetHandle::Empty,
            origin: None,
            on_stack: false,
        });
        l
    }

    /// Fresh unset function with the type and a derived name of `l`.
    pub fn fresh_copy_of(&mut self, l: Label) -> Label {
        let f = &self.funs[l.index()];
        let (name, dom, cod) = (format!("{}'", f.name), f.dom, f.cod);
        let root = f.origin.unwrap_or(l);
        let c = self.new_function(&name, dom, cod);
        self.funs[c.index()].origin = Some(root);
        c
    }

    pub fn len(&self) -> usize {
        self.funs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funs.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        (0..self.funs.len() as u32).map(Label)
    }

    pub fn contains(&self, l: Label) -> bool {
        l.index() < self.funs.len()
    }

    pub fn function(&self, l: Label) -> &Function {
        &self.funs[l.index()]
    }

    pub fn name(&self, l: Label) -> &str {
        &self.funs[l.index()].name
    }

    pub fn lookup(&self, name: &str) -> Option<Label> {
        self.names.get(name).copied()
    }

    /// Label by name, panicking when absent. For fixtures and tests.
    pub fn label(&self, name: &str) -> Label {
        self.lookup(name).unwrap_or_else(|| panic!("no function named {name}"))
    }

    pub fn body(&self, l: Label) -> Option<Expr> {
        self.funs[l.index()].body
    }

    pub fn fun_type(&mut self, l: Label) -> Type {
        let f = &self.funs[l.index()];
        let (d, c) = (f.dom, f.cod);
        self.arrow(d, c)
    }

    fn check_label(&self, l: Label) -> Result<(), Error> {
        if self.contains(l) {
            Ok(())
        } else {
            Err(Error::UnknownLabel(l.0))
        }
    }

    /// Installs `e` as the body of `l`, maintains user sets and invalidates
    /// the free-variable memos that may depend on `l`.
    pub fn set_body(&mut self, l: Label, e: Expr) -> Result<(), Error> {
        self.check_label(l)?;
        let cod = self.funs[l.index()].cod;
        let ty = self.exprs[e.0 as usize].ty;
        if ty != cod {
            return Err(self.mismatch(cod, ty));
        }
        self.detach_users(l);
        self.funs[l.index()].body = Some(e);
        let lf = self.exprs[e.0 as usize].lf;
        for g in self.fns.elements(lf) {
            let u = self.funs[g as usize].users;
            self.funs[g as usize].users = self.fns.insert(u, l.0);
        }
        self.invalidate(l);
        Ok(())
    }

    /// Resets `l` to the unset body. No-op if already unset.
    pub fn unset_body(&mut self, l: Label) {
        if self.funs[l.index()].body.is_none() {
            return;
        }
        self.detach_users(l);
        self.funs[l.index()].body = None;
        self.invalidate(l);
    }

    fn detach_users(&mut self, l: Label) {
        if let Some(old) = self.funs[l.index()].body {
            let lf = self.exprs[old.0 as usize].lf;
            for g in self.fns.elements(lf) {
                let u = self.funs[g as usize].users;
                self.funs[g as usize].users = self.fns.remove(u, l.0);
            }
        }
    }

    pub fn users(&self, l: Label) -> Vec<Label> {
        self.fun_set(self.funs[l.index()].users)
    }

    // ── expressions ────────────────────────────────────────────────────────

    pub fn node(&self, e: Expr) -> &ExprNode {
        &self.exprs[e.0 as usize]
    }

    pub fn kind(&self, e: Expr) -> &ExprKind {
        &self.exprs[e.0 as usize].kind
    }

    pub fn type_of(&self, e: Expr) -> Type {
        self.exprs[e.0 as usize].ty
    }

    pub fn expr_count(&self) -> usize {
        self.exprs.len()
    }

    fn intern(&mut self, kind: ExprKind, ty: Type, lv: SetHandle, lf: SetHandle) -> Expr {
        let e = Expr(self.exprs.len() as u32);
        self.exprs.push(ExprNode { kind: kind.clone(), ty, lv, lf });
        self.expr_ids.insert(kind, e);
        e
    }

    fn existing(&self, kind: &ExprKind) -> Option<Expr> {
        self.expr_ids.get(kind).copied()
    }

    pub fn int(&mut self, v: i64) -> Expr {
        let k = ExprKind::Int(v);
        self.existing(&k).unwrap_or_else(|| self.intern(k, Self::INT, SetHandle::Empty, SetHandle::Empty))
    }

    pub fn bool(&mut self, b: bool) -> Expr {
        let k = ExprKind::Bool(b);
        self.existing(&k).unwrap_or_else(|| self.intern(k, Self::BOOL, SetHandle::Empty, SetHandle::Empty))
    }

    pub fn prim(&mut self, p: Prim) -> Expr {
        let k = ExprKind::Prim(p);
        if let Some(e) = self.existing(&k) {
            return e;
        }
        let ty = self.prim_type(p);
        self.intern(k, ty, SetHandle::Empty, SetHandle::Empty)
    }

    pub fn fun(&mut self, l: Label) -> Result<Expr, Error> {
        self.check_label(l)?;
        let k = ExprKind::Fun(l);
        if let Some(e) = self.existing(&k) {
            return Ok(e);
        }
        let ty = self.fun_type(l);
        let lf = SetHandle::Single(l.0);
        Ok(self.intern(k, ty, SetHandle::Empty, lf))
    }

    pub fn var(&mut self, l: Label) -> Result<Expr, Error> {
        self.check_label(l)?;
        let k = ExprKind::Var(l);
        if let Some(e) = self.existing(&k) {
            return Ok(e);
        }
        let ty = self.funs[l.index()].dom;
        Ok(self.intern(k, ty, SetHandle::Single(l.0), SetHandle::Empty))
    }

    pub fn app(&mut self, callee: Expr, arg: Expr) -> Result<Expr, Error> {
        let k = ExprKind::App(callee, arg);
        if let Some(e) = self.existing(&k) {
            return Ok(e);
        }
        let (ct, at) = (self.type_of(callee), self.type_of(arg));
        let &TypeKind::Arrow(dom, cod) = self.type_kind(ct) else {
            return Err(Error::NotAFunction(self.type_str(ct)));
        };
        if dom != at {
            return Err(self.mismatch(dom, at));
        }
        let (a, b) = (self.node(callee).clone(), self.node(arg).clone());
        let lv = self.vars.union(a.lv, b.lv);
        let lf = self.fns.union(a.lf, b.lf);
        Ok(self.intern(k, cod, lv, lf))
    }

    pub fn tuple(&mut self, es: &[Expr]) -> Expr {
        let k = ExprKind::Tuple(es.into());
        if let Some(e) = self.existing(&k) {
            return e;
        }
        let tys: Vec<Type> = es.iter().map(|&e| self.type_of(e)).collect();
        let ty = self.tuple_type(&tys);
        let (mut lv, mut lf) = (SetHandle::Empty, SetHandle::Empty);
        for &e in es {
            let (l, f) = (self.node(e).lv, self.node(e).lf);
            lv = self.vars.union(lv, l);
            lf = self.fns.union(lf, f);
        }
        self.intern(k, ty, lv, lf)
    }

    pub fn extract(&mut self, e: Expr, i: u32) -> Result<Expr, Error> {
        let k = ExprKind::Extract(e, i);
        if let Some(x) = self.existing(&k) {
            return Ok(x);
        }
        let t = self.type_of(e);
        let TypeKind::Tuple(ts) = self.type_kind(t) else {
            return Err(Error::NotATuple(self.type_str(t)));
        };
        let Some(&ty) = ts.get(i as usize) else {
            return Err(Error::IndexOutOfBounds { index: i, ty: self.type_str(t) });
        };
        let n = self.node(e);
        let (lv, lf) = (n.lv, n.lf);
        Ok(self.intern(k, ty, lv, lf))
    }

    /// `prim(a, b)` for a binary builtin.
    pub fn binop(&mut self, p: Prim, a: Expr, b: Expr) -> Result<Expr, Error> {
        let f = self.prim(p);
        let arg = self.tuple(&[a, b]);
        self.app(f, arg)
    }

    /// `br[t](c, then, else)`.
    pub fn branch(&mut self, t: Type, c: Expr, then: Expr, els: Expr) -> Result<Expr, Error> {
        let f = self.prim(Prim::Br(t));
        let arg = self.tuple(&[c, then, els]);
        self.app(f, arg)
    }

    /// Rebuilds an expression of the same shape with new children.
    pub fn rebuild(&mut self, kind: &ExprKind) -> Result<Expr, Error> {
        match kind {
            &ExprKind::Int(v) => Ok(self.int(v)),
            &ExprKind::Bool(b) => Ok(self.bool(b)),
            &ExprKind::Prim(p) => Ok(self.prim(p)),
            &ExprKind::Fun(l) => self.fun(l),
            &ExprKind::Var(l) => self.var(l),
            &ExprKind::App(a, b) => self.app(a, b),
            ExprKind::Tuple(es) => Ok(self.tuple(es)),
            &ExprKind::Extract(e, i) => self.extract(e, i),
        }
    }

    // ── sets ───────────────────────────────────────────────────────────────

    pub fn var_set(&self, s: SetHandle) -> Vec<Label> {
        self.vars.elements(s).into_iter().map(Label).collect()
    }

    pub fn fun_set(&self, s: SetHandle) -> Vec<Label> {
        self.fns.elements(s).into_iter().map(Label).collect()
    }

    pub fn var_universe(&mut self) -> &mut Universe {
        &mut self.vars
    }

    pub fn fun_universe(&mut self) -> &mut Universe {
        &mut self.fns
    }

    /// Local functions of `e` in iteration order.
    pub fn local_funs(&self, e: Expr) -> Vec<Label> {
        self.fun_set(self.node(e).lf)
    }

    pub fn local_vars(&self, e: Expr) -> Vec<Label> {
        self.var_set(self.node(e).lv)
    }

    /// Callees of `l`: local functions of its body.
    pub fn succs(&self, l: Label) -> Vec<Label> {
        match self.funs[l.index()].body {
            Some(b) => self.local_funs(b),
            None => Vec::new(),
        }
    }

    /// `{name, ...}` with names sorted.
    pub fn fmt_vars(&self, s: SetHandle) -> String {
        let mut names: Vec<&str> = self.var_set(s).into_iter().map(|l| self.name(l)).collect();
        names.sort_unstable();
        format!("{{{}}}", names.join(", "))
    }

    // ── typing ─────────────────────────────────────────────────────────────

    /// Re-derives the type of every set body with a checker walk that
    /// ignores the types cached in expression nodes.
    pub fn check_program(&mut self) -> Result<(), Vec<(Label, Error)>> {
        let mut errors = Vec::new();
        let mut memo = FxHashMap::default();
        for l in self.labels() {
            let Some(b) = self.funs[l.index()].body else { continue };
            match self.derive_type(b, &mut memo) {
                Ok(t) if t == self.funs[l.index()].cod => {}
                Ok(t) => {
                    let cod = self.funs[l.index()].cod;
                    errors.push((l, self.mismatch(cod, t)));
                }
                Err(e) => errors.push((l, e)),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Independent typing judgment for one expression.
    pub fn derive_type(&mut self, e: Expr, memo: &mut FxHashMap<Expr, Type>) -> Result<Type, Error> {
        if let Some(&t) = memo.get(&e) {
            return Ok(t);
        }
        let kind = self.kind(e).clone();
        let t = stacker::maybe_grow(64 * 1024, 1 << 20, || -> Result<Type, Error> {
            Ok(match kind {
                ExprKind::Int(_) => Self::INT,
                ExprKind::Bool(_) => Self::BOOL,
                ExprKind::Prim(p) => self.prim_type(p),
                ExprKind::Fun(l) => {
                    self.check_label(l)?;
                    self.fun_type(l)
                }
                ExprKind::Var(l) => {
                    self.check_label(l)?;
                    self.funs[l.index()].dom
                }
                ExprKind::App(a, b) => {
                    let ta = self.derive_type(a, memo)?;
                    let tb = self.derive_type(b, memo)?;
                    match *self.type_kind(ta) {
                        TypeKind::Arrow(d, c) if d == tb => c,
                        TypeKind::Arrow(d, _) => return Err(self.mismatch(d, tb)),
                        _ => return Err(Error::NotAFunction(self.type_str(ta))),
                    }
                }
                ExprKind::Tuple(es) => {
                    let mut ts = Vec::with_capacity(es.len());
                    for &x in es.iter() {
                        ts.push(self.derive_type(x, memo)?);
                    }
                    self.tuple_type(&ts)
                }
                ExprKind::Extract(x, i) => {
                    let tx = self.derive_type(x, memo)?;
                    match self.type_kind(tx) {
                        TypeKind::Tuple(ts) => match ts.get(i as usize) {
                            Some(&t) => t,
                            None => return Err(Error::IndexOutOfBounds { index: i, ty: self.type_str(tx) }),
                        },
                        _ => return Err(Error::NotATuple(self.type_str(tx))),
                    }
                }
            })
        })?;
        memo.insert(e, t);
        Ok(t)
    }

    /// Short human-readable rendering of an expression, for diagnostics.
    pub fn expr_str(&self, e: Expr) -> String {
        let mut s = String::new();
        self.write_expr(&mut s, e, 0);
        s
    }

    fn write_expr(&self, out: &mut String, e: Expr, depth: usize) {
        if depth > 64 {
            out.push('…');
            return;
        }
        match self.kind(e) {
            ExprKind::Int(v) => {
                let _ = write!(out, "{v}");
            }
            ExprKind::Bool(b) => {
                let _ = write!(out, "{b}");
            }
            ExprKind::Prim(Prim::Br(t)) => {
                let _ = write!(out, "%br[{}]", self.type_str(*t));
            }
            ExprKind::Prim(p) => {
                let _ = write!(out, "%{}", p.name());
            }
            ExprKind::Fun(l) => out.push_str(self.name(*l)),
            ExprKind::Var(l) => {
                let _ = write!(out, "@{}", self.name(*l));
            }
            &ExprKind::App(a, b) => {
                out.push('(');
                self.write_expr(out, a, depth + 1);
                out.push(' ');
                self.write_expr(out, b, depth + 1);
                out.push(')');
            }
            ExprKind::Tuple(es) => {
                out.push('(');
                for (i, &x) in es.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.write_expr(out, x, depth + 1);
                }
                if es.len() == 1 {
                    out.push(',');
                }
                out.push(')');
            }
            &ExprKind::Extract(x, i) => {
                self.write_expr(out, x, depth + 1);
                let _ = write!(out, ".{i}");
            }
        }
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for l in self.labels() {
            let body = self.body(l).map(|b| self.expr_str(b)).unwrap_or_else(|| "<unset>".into());
            m.entry(&self.name(l), &body);
        }
        m.finish()
    }
}
