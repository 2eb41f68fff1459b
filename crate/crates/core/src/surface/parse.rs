//! Parser for the textual program format.
//!
//! ```text
//! program := decl*
//! decl    := 'fn' NAME ':' type ('=' expr)? ';'
//! type    := atype ('->' type)?
//! atype   := 'int' | 'bool' | 'bot' | '[' (type (',' type)*)? ']' | '(' type ')'
//! expr    := 'let' NAME '=' expr 'in' expr | postfix postfix*
//! postfix := atom ('.' INT)*
//! atom    := INT | '-' INT | 'true' | 'false' | NAME | '@' NAME
//!          | '%' NAME ('[' type ']')? | '(' ')' | '(' expr ')' | '(' expr (',' expr)+ ','? ')' | '(' expr ',' ')'
//! ```
//!
//! `NAME` is a function (or a let binding); `@NAME` is the variable of
//! function `NAME`; `%NAME` is a builtin. A bare builtin name is accepted
//! when no function has that name. `#` starts a line comment.

use std::fmt;

use rustc_hash::FxHashMap;

use crate::ir::{Expr, Label, Prim, Program, Type, TypeKind};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Name(String),
    At(String),
    Percent(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

const KEYWORDS: [&str; 8] = ["fn", "let", "in", "true", "false", "int", "bool", "bot"];

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| ParseError { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let name = |i: &mut usize| {
            let s = *i;
            while *i < chars.len() && is_name_char(chars[*i]) {
                *i += 1;
            }
            chars[s..*i].iter().collect::<String>()
        };
        let tok = if is_name_start(c) {
            Tok::Name(name(&mut i))
        } else if c == '@' || c == '%' {
            i += 1;
            if i >= chars.len() || !is_name_start(chars[i]) {
                return Err(err(line, col, format!("expected a name after `{c}`")));
            }
            let n = name(&mut i);
            if c == '@' {
                Tok::At(n)
            } else {
                Tok::Percent(n)
            }
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            Tok::Int(s.parse().map_err(|_| err(line, col, format!("integer `{s}` out of range")))?)
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            i += 2;
            Tok::Sym("->")
        } else {
            let sym = match c {
                ':' => ":",
                '=' => "=",
                ';' => ";",
                ',' => ",",
                '.' => ".",
                '(' => "(",
                ')' => ")",
                '[' => "[",
                ']' => "]",
                '-' => "-",
                _ => return Err(err(line, col, format!("unexpected character `{c}`"))),
            };
            i += 1;
            Tok::Sym(sym)
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

#[derive(Clone, Debug)]
enum TypeAst {
    Int,
    Bool,
    Bot,
    Tuple(Vec<TypeAst>),
    Arrow(Box<TypeAst>, Box<TypeAst>),
}

#[derive(Clone, Debug)]
enum Ast {
    Int(i64),
    Bool(bool),
    Name(String),
    Var(String),
    Prim(String, Option<TypeAst>),
    App(Box<(Ast, Pos)>, Box<(Ast, Pos)>),
    Tuple(Vec<(Ast, Pos)>),
    Extract(Box<(Ast, Pos)>, u32),
    Let(String, Box<(Ast, Pos)>, Box<(Ast, Pos)>),
}

struct Decl {
    name: String,
    pos: Pos,
    ty: TypeAst,
    body: Option<(Ast, Pos)>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let p = self.pos();
        Err(ParseError { line: p.line, col: p.col, msg: msg.into() })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Name(n) => format!("`{n}`"),
            Tok::At(n) => format!("`@{n}`"),
            Tok::Percent(n) => format!("`%{n}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Name(x) if x == k)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", Self::describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), ParseError> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{k}`, found {}", Self::describe(self.peek())))
        }
    }

    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.bump();
                Ok(n)
            }
            t => self.err(format!("expected a name, found {}", Self::describe(t))),
        }
    }

    fn decls(&mut self) -> Result<Vec<Decl>, ParseError> {
        let mut out = Vec::new();
        while *self.peek() != Tok::Eof {
            self.expect_kw("fn")?;
            let pos = self.pos();
            let name = self.name()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            let body = if self.is_sym("=") {
                self.bump();
                Some(self.expr()?)
            } else {
                None
            };
            self.expect_sym(";")?;
            out.push(Decl { name, pos, ty, body });
        }
        Ok(out)
    }

    fn ty(&mut self) -> Result<TypeAst, ParseError> {
        let a = self.aty()?;
        if self.is_sym("->") {
            self.bump();
            let b = self.ty()?;
            return Ok(TypeAst::Arrow(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn aty(&mut self) -> Result<TypeAst, ParseError> {
        match self.bump() {
            Tok::Name(n) if n == "int" => Ok(TypeAst::Int),
            Tok::Name(n) if n == "bool" => Ok(TypeAst::Bool),
            Tok::Name(n) if n == "bot" => Ok(TypeAst::Bot),
            Tok::Sym("[") => {
                let mut ts = Vec::new();
                if !self.is_sym("]") {
                    ts.push(self.ty()?);
                    while self.is_sym(",") {
                        self.bump();
                        ts.push(self.ty()?);
                    }
                }
                self.expect_sym("]")?;
                Ok(TypeAst::Tuple(ts))
            }
            Tok::Sym("(") => {
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            t => {
                self.at -= usize::from(t != Tok::Eof);
                self.err(format!("expected a type, found {}", Self::describe(&t)))
            }
        }
    }

    fn expr(&mut self) -> Result<(Ast, Pos), ParseError> {
        stacker::maybe_grow(64 * 1024, 2 << 20, || self.expr_inner())
    }

    fn expr_inner(&mut self) -> Result<(Ast, Pos), ParseError> {
        let pos = self.pos();
        if self.is_kw("let") {
            self.bump();
            let n = self.name()?;
            self.expect_sym("=")?;
            let v = self.expr()?;
            self.expect_kw("in")?;
            let b = self.expr()?;
            return Ok((Ast::Let(n, Box::new(v), Box::new(b)), pos));
        }
        let mut e = self.postfix()?;
        while self.starts_atom() {
            let a = self.postfix()?;
            e = (Ast::App(Box::new(e), Box::new(a)), pos);
        }
        Ok(e)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::At(_) | Tok::Percent(_) => true,
            Tok::Sym(s) => *s == "(" || *s == "-",
            Tok::Name(n) => !matches!(n.as_str(), "let" | "in" | "fn"),
            Tok::Eof => false,
        }
    }

    fn postfix(&mut self) -> Result<(Ast, Pos), ParseError> {
        let mut e = self.atom()?;
        while self.is_sym(".") {
            let pos = self.pos();
            self.bump();
            match self.bump() {
                Tok::Int(i) if i >= 0 && i <= u32::MAX as i64 => {
                    e = (Ast::Extract(Box::new(e), i as u32), pos);
                }
                t => {
                    self.at -= 1;
                    return self.err(format!("expected a tuple index, found {}", Self::describe(&t)));
                }
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<(Ast, Pos), ParseError> {
        let pos = self.pos();
        let a = match self.bump() {
            Tok::Int(v) => Ast::Int(v),
            Tok::Sym("-") => match self.bump() {
                Tok::Int(v) => Ast::Int(-v),
                t => {
                    self.at -= 1;
                    return self.err(format!("expected an integer after `-`, found {}", Self::describe(&t)));
                }
            },
            Tok::Name(n) if n == "true" => Ast::Bool(true),
            Tok::Name(n) if n == "false" => Ast::Bool(false),
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                if n == "br" && self.is_sym("[") {
                    Ast::Prim(n, Some(self.bracket_type()?))
                } else {
                    Ast::Name(n)
                }
            }
            Tok::At(n) => Ast::Var(n),
            Tok::Percent(n) => {
                let t = if self.is_sym("[") { Some(self.bracket_type()?) } else { None };
                Ast::Prim(n, t)
            }
            Tok::Sym("(") => {
                if self.is_sym(")") {
                    self.bump();
                    return Ok((Ast::Tuple(Vec::new()), pos));
                }
                let first = self.expr()?;
                if self.is_sym(")") {
                    self.bump();
                    return Ok(first);
                }
                let mut es = vec![first];
                while self.is_sym(",") {
                    self.bump();
                    if self.is_sym(")") {
                        break;
                    }
                    es.push(self.expr()?);
                }
                self.expect_sym(")")?;
                Ast::Tuple(es)
            }
            t => {
                self.at -= usize::from(t != Tok::Eof);
                return self.err(format!("expected an expression, found {}", Self::describe(&t)));
            }
        };
        Ok((a, pos))
    }

    fn bracket_type(&mut self) -> Result<TypeAst, ParseError> {
        self.expect_sym("[")?;
        let t = self.ty()?;
        self.expect_sym("]")?;
        Ok(t)
    }
}

fn lower_type(p: &mut Program, t: &TypeAst) -> Type {
    match t {
        TypeAst::Int => Program::INT,
        TypeAst::Bool => Program::BOOL,
        TypeAst::Bot => Program::BOT,
        TypeAst::Tuple(ts) => {
            let ts: Vec<Type> = ts.iter().map(|t| lower_type(p, t)).collect();
            p.tuple_type(&ts)
        }
        TypeAst::Arrow(a, b) => {
            let (a, b) = (lower_type(p, a), lower_type(p, b));
            p.arrow(a, b)
        }
    }
}

struct Lower<'a> {
    p: &'a mut Program,
    lets: Vec<(String, Expr)>,
    names: &'a FxHashMap<String, Label>,
}

fn at(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError { line: pos.line, col: pos.col, msg: msg.into() }
}

fn ir(pos: Pos, r: Result<Expr, Error>) -> Result<Expr, ParseError> {
    r.map_err(|e| at(pos, e.to_string()))
}

impl Lower<'_> {
    fn expr(&mut self, a: &(Ast, Pos)) -> Result<Expr, ParseError> {
        stacker::maybe_grow(64 * 1024, 2 << 20, || self.expr_inner(a))
    }

    fn expr_inner(&mut self, (a, pos): &(Ast, Pos)) -> Result<Expr, ParseError> {
        let pos = *pos;
        match a {
            &Ast::Int(v) => Ok(self.p.int(v)),
            &Ast::Bool(b) => Ok(self.p.bool(b)),
            Ast::Name(n) => {
                if let Some((_, e)) = self.lets.iter().rev().find(|(m, _)| m == n) {
                    return Ok(*e);
                }
                if let Some(&l) = self.names.get(n) {
                    return ir(pos, self.p.fun(l));
                }
                match Prim::from_name(n) {
                    Some(op) => Ok(self.p.prim(op)),
                    None if n == "br" => Err(at(pos, "`br` needs a result type, as in `br[int]`")),
                    None => Err(at(pos, format!("unknown function `{n}`"))),
                }
            }
            Ast::Var(n) => match self.names.get(n) {
                Some(&l) => ir(pos, self.p.var(l)),
                None => Err(at(pos, format!("unknown function `{n}` in `@{n}`"))),
            },
            Ast::Prim(n, t) => match (n.as_str(), t) {
                ("br", Some(t)) => {
                    let t = lower_type(self.p, t);
                    Ok(self.p.prim(Prim::Br(t)))
                }
                ("br", None) => Err(at(pos, "`%br` needs a result type, as in `%br[int]`")),
                (_, Some(_)) => Err(at(pos, format!("builtin `%{n}` takes no type argument"))),
                (_, None) => Prim::from_name(n)
                    .map(|op| self.p.prim(op))
                    .ok_or_else(|| at(pos, format!("unknown builtin `%{n}`"))),
            },
            Ast::App(f, x) => {
                let f = self.expr(f)?;
                let x = self.expr(x)?;
                ir(pos, self.p.app(f, x))
            }
            Ast::Tuple(es) => {
                let mut out = Vec::with_capacity(es.len());
                for e in es {
                    out.push(self.expr(e)?);
                }
                Ok(self.p.tuple(&out))
            }
            Ast::Extract(x, i) => {
                let x = self.expr(x)?;
                ir(pos, self.p.extract(x, *i))
            }
            Ast::Let(n, v, b) => {
                let v = self.expr(v)?;
                self.lets.push((n.clone(), v));
                let r = self.expr(b);
                self.lets.pop();
                r
            }
        }
    }
}

/// Parses a whole program. All declarations are registered before any body
/// is lowered, so functions may refer to each other in any order.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Program::new();
    parse_into(&mut p, src)?;
    Ok(p)
}

/// Parses declarations into an existing program. Names must be new.
pub fn parse_into(p: &mut Program, src: &str) -> Result<Vec<Label>, ParseError> {
    let mut parser = Parser { toks: lex(src)?, at: 0 };
    let decls = parser.decls()?;
    let mut names: FxHashMap<String, Label> = p.labels().map(|l| (p.name(l).to_string(), l)).collect();
    let mut labels = Vec::with_capacity(decls.len());
    for d in &decls {
        if names.contains_key(&d.name) {
            return Err(at(d.pos, format!("function `{}` declared twice", d.name)));
        }
        let t = lower_type(p, &d.ty);
        let &TypeKind::Arrow(dom, cod) = p.type_kind(t) else {
            return Err(at(d.pos, format!("`{}` must have a function type, found {}", d.name, p.type_str(t))));
        };
        let l = p.new_function(&d.name, dom, cod);
        names.insert(d.name.clone(), l);
        labels.push(l);
    }
    for (d, &l) in decls.iter().zip(&labels) {
        let Some(body) = &d.body else { continue };
        let mut lw = Lower { p, lets: Vec::new(), names: &names };
        let e = lw.expr(body)?;
        p.set_body(l, e).map_err(|e| at(body.1, format!("body of `{}`: {e}", d.name)))?;
    }
    Ok(labels)
}

/// Parses a single expression against the functions of `p`.
pub fn parse_expr(p: &mut Program, src: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser { toks: lex(src)?, at: 0 };
    let e = parser.expr()?;
    if *parser.peek() != Tok::Eof {
        return parser.err(format!("unexpected {}", Parser::describe(parser.peek())));
    }
    let names: FxHashMap<String, Label> = p.labels().map(|l| (p.name(l).to_string(), l)).collect();
    let mut lw = Lower { p, lets: Vec::new(), names: &names };
    lw.expr(&e)
}
