//! Parsers for session types and processes.
//!
//! Both grammars share one lexer. Operator precedence, loosest to tightest:
//! internal choice `(+)`, external choice `+`, parallel `|`, then prefixing.
//! Prefix continuations, `rec` bodies, `new` bodies and replication bodies
//! all bind at the tightest level, so `rec X.?Int.X | rec Y.!Int.Y` is the
//! parallel composition of two loops and `new c. P | Q` restricts `c` in `P`
//! only. `#` starts a line comment.

use thiserror::Error;

use crate::process::{BinOp, Expr, Process, ProcNode, ProcPrefix};
use crate::types::{Action, Ctx, TypeId};
use crate::universe::{parse_number, BasicTypeExpr, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Str(String),
    Atom(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Dot,
    Comma,
    Colon,
    Bang,
    Query,
    Plus,
    Minus,
    Star,
    Slash,
    OPlus,
    Pipe,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier {s:?}"),
        Tok::Num(s) => format!("number {s}"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Atom(s) => format!("atom '{s}'"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBrack => "`[`".into(),
        Tok::RBrack => "`]`".into(),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Colon => "`:`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Query => "`?`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::OPlus => "`(+)`".into(),
        Tok::Pipe => "`|`".into(),
    }
}

const KEYWORDS: [&str; 5] = ["rec", "new", "empty", "true", "false"];

fn error_at(src: &str, offset: usize, msg: impl Into<String>) -> ParseError {
    let upto = &src[..offset.min(src.len())];
    let line = upto.matches('\n').count() + 1;
    let col = offset - upto.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    ParseError { line, col, msg: msg.into() }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' => {
                if bytes.get(i + 1) == Some(&b'+') && bytes.get(i + 2) == Some(&b')') {
                    toks.push((Tok::OPlus, i, i + 3));
                    i += 3;
                } else {
                    toks.push((Tok::LParen, i, i + 1));
                    i += 1;
                }
            }
            ')' => {
                toks.push((Tok::RParen, i, i + 1));
                i += 1;
            }
            '[' => {
                toks.push((Tok::LBrack, i, i + 1));
                i += 1;
            }
            ']' => {
                toks.push((Tok::RBrack, i, i + 1));
                i += 1;
            }
            '{' => {
                toks.push((Tok::LBrace, i, i + 1));
                i += 1;
            }
            '}' => {
                toks.push((Tok::RBrace, i, i + 1));
                i += 1;
            }
            '.' => {
                toks.push((Tok::Dot, i, i + 1));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, i, i + 1));
                i += 1;
            }
            ':' => {
                toks.push((Tok::Colon, i, i + 1));
                i += 1;
            }
            '!' => {
                toks.push((Tok::Bang, i, i + 1));
                i += 1;
            }
            '?' => {
                toks.push((Tok::Query, i, i + 1));
                i += 1;
            }
            '+' => {
                toks.push((Tok::Plus, i, i + 1));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, i, i + 1));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, i, i + 1));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, i, i + 1));
                i += 1;
            }
            '|' => {
                toks.push((Tok::Pipe, i, i + 1));
                i += 1;
            }
            '"' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    i += 1;
                }
                if i >= bytes.len() {
                    return Err(error_at(src, start, "unterminated string literal"));
                }
                toks.push((Tok::Str(src[start + 1..i].to_string()), start, i + 1));
                i += 1;
            }
            '\'' => {
                let start = i;
                i += 1;
                while i < bytes.len() && bytes[i] != b'\'' {
                    i += 1;
                }
                if i >= bytes.len() {
                    return Err(error_at(src, start, "unterminated atom literal"));
                }
                toks.push((Tok::Atom(src[start + 1..i].to_string()), start, i + 1));
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < bytes.len()
                    && bytes[i] == b'.'
                    && bytes[i + 1].is_ascii_digit()
                {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                toks.push((Tok::Num(src[start..i].to_string()), start, i));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start, i));
            }
            other => return Err(error_at(src, i, format!("unexpected character {other:?}"))),
        }
    }
    Ok(toks)
}

struct P<'a> {
    src: &'a str,
    ctx: &'a Ctx,
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    last_end: usize,
}

impl<'a> P<'a> {
    fn new(ctx: &'a Ctx, src: &'a str) -> Result<P<'a>, ParseError> {
        Ok(P { src, ctx, toks: tokenize(src)?, pos: 0, last_end: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn cur_start(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, s, _)| s).unwrap_or(self.src.len())
    }

    fn next(&mut self) -> Option<Tok> {
        let item = self.toks.get(self.pos).cloned();
        if let Some((t, _, e)) = item {
            self.pos += 1;
            self.last_end = e;
            Some(t)
        } else {
            None
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.next();
            true
        } else {
            false
        }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        error_at(self.src, self.cur_start(), msg)
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.err(match self.peek() {
                Some(found) => format!("expected {what}, found {}", describe(found)),
                None => format!("expected {what}, found end of input"),
            }))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                self.next();
                Ok(s)
            }
            Some(found) => Err(self.err(format!("expected {what}, found {}", describe(&found)))),
            None => Err(self.err(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(format!("unexpected {} after the term", describe(t)))),
        }
    }

    // ---- session types ----

    fn ty(&mut self, binders: &mut Vec<String>) -> Result<TypeId, ParseError> {
        let mut parts = vec![self.ty_ext(binders)?];
        while self.eat(&Tok::OPlus) {
            parts.push(self.ty_ext(binders)?);
        }
        Ok(if parts.len() == 1 { parts[0] } else { self.ctx.int_choice(parts) })
    }

    fn ty_ext(&mut self, binders: &mut Vec<String>) -> Result<TypeId, ParseError> {
        let mut parts = vec![self.ty_par(binders)?];
        while self.eat(&Tok::Plus) {
            parts.push(self.ty_par(binders)?);
        }
        Ok(if parts.len() == 1 { parts[0] } else { self.ctx.ext(parts) })
    }

    fn ty_par(&mut self, binders: &mut Vec<String>) -> Result<TypeId, ParseError> {
        let mut parts = vec![self.ty_tight(binders)?];
        while self.eat(&Tok::Pipe) {
            parts.push(self.ty_tight(binders)?);
        }
        Ok(if parts.len() == 1 { parts[0] } else { self.ctx.par(parts) })
    }

    fn ty_tight(&mut self, binders: &mut Vec<String>) -> Result<TypeId, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) if n == "0" => {
                self.next();
                Ok(self.ctx.fail())
            }
            Some(Tok::Num(n)) if n == "1" => {
                self.next();
                Ok(self.ctx.done())
            }
            Some(Tok::LParen) => {
                self.next();
                let t = self.ty(binders)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Some(Tok::Ident(kw)) if kw == "rec" => {
                self.next();
                let name = self.ident("a recursion variable after `rec`")?;
                self.expect(Tok::Dot, "`.` after the recursion variable")?;
                binders.push(name);
                let body = self.ty_tight(binders);
                binders.pop();
                Ok(self.ctx.rec(body?))
            }
            Some(Tok::Ident(name)) => {
                match binders.iter().rev().position(|b| *b == name) {
                    Some(k) => {
                        self.next();
                        Ok(self.ctx.var(k as u32))
                    }
                    None => Err(self.err(format!(
                        "unbound recursion variable {name} (session types start with `?`, `!`, `0`, `1`, `rec` or `(`)"
                    ))),
                }
            }
            Some(t @ (Tok::Query | Tok::Bang)) => {
                self.next();
                let action = if self.eat(&Tok::LBrack) {
                    let payload = self.ty(binders)?;
                    self.expect(Tok::RBrack, "`]` closing the delegated type")?;
                    if t == Tok::Query {
                        Action::InCh(payload)
                    } else {
                        Action::OutCh(payload)
                    }
                } else {
                    let bt = self.basic()?;
                    if t == Tok::Query {
                        Action::InVal(bt)
                    } else {
                        Action::OutVal(bt)
                    }
                };
                self.expect(Tok::Dot, "`.` after the prefix")?;
                let cont = self.ty_tight(binders)?;
                Ok(self.ctx.prefix(action, cont))
            }
            Some(found) => Err(self.err(format!("expected a session type, found {}", describe(&found)))),
            None => Err(self.err("expected a session type, found end of input")),
        }
    }

    fn basic(&mut self) -> Result<BasicTypeExpr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(n)) if n == "empty" => {
                self.next();
                Ok(BasicTypeExpr::Empty)
            }
            Some(Tok::Ident(n)) => {
                if self.ctx.universe.is_named_type(&n) {
                    self.next();
                    Ok(BasicTypeExpr::Named(n))
                } else {
                    Err(self.err(format!("unknown basic type {n}")))
                }
            }
            Some(Tok::Atom(s)) => {
                let v = Value::Sym(s.clone());
                if self.ctx.universe.is_singleton_value(&v) {
                    self.next();
                    Ok(BasicTypeExpr::Singleton(v))
                } else {
                    Err(self.err(format!("'{s}' is not a declared singleton")))
                }
            }
            Some(found) => Err(self.err(format!("expected a basic type, found {}", describe(&found)))),
            None => Err(self.err("expected a basic type, found end of input")),
        }
    }

    // ---- processes ----

    fn proc(&mut self) -> Result<Process, ParseError> {
        let start = self.cur_start();
        let mut parts = vec![self.proc_ext()?];
        while self.eat(&Tok::OPlus) {
            parts.push(self.proc_ext()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Process::new(ProcNode::Int(parts), (start, self.last_end))
        })
    }

    fn proc_ext(&mut self) -> Result<Process, ParseError> {
        let start = self.cur_start();
        let mut parts = vec![self.proc_par()?];
        while self.eat(&Tok::Plus) {
            parts.push(self.proc_par()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Process::new(ProcNode::Ext(parts), (start, self.last_end))
        })
    }

    fn proc_par(&mut self) -> Result<Process, ParseError> {
        let start = self.cur_start();
        let mut acc = self.proc_tight()?;
        while self.eat(&Tok::Pipe) {
            let rhs = self.proc_tight()?;
            acc = Process::new(
                ProcNode::Par(Box::new(acc), Box::new(rhs)),
                (start, self.last_end),
            );
        }
        Ok(acc)
    }

    fn proc_tight(&mut self) -> Result<Process, ParseError> {
        let start = self.cur_start();
        match self.peek().cloned() {
            Some(Tok::Num(n)) if n == "0" => {
                self.next();
                Ok(Process::new(ProcNode::Idle, (start, self.last_end)))
            }
            Some(Tok::LParen) => {
                self.next();
                let p = self.proc()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            Some(Tok::Ident(kw)) if kw == "new" => {
                self.next();
                let name = self.ident("a channel name after `new`")?;
                self.expect(Tok::Dot, "`.` after the restricted name")?;
                let body = self.proc_tight()?;
                Ok(Process::new(
                    ProcNode::New(name, Box::new(body)),
                    (start, self.last_end),
                ))
            }
            Some(Tok::Star) => {
                self.next();
                let anns = if self.eat(&Tok::LBrace) {
                    let mut list = Vec::new();
                    loop {
                        let u = self.ident("a channel name in the replication annotation")?;
                        self.expect(Tok::Colon, "`:` after the channel name")?;
                        let s = self.ty(&mut Vec::new())?;
                        list.push((u, s));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBrace, "`}` closing the annotation")?;
                    Some(list)
                } else {
                    None
                };
                let body = self.proc_tight()?;
                Ok(Process::new(
                    ProcNode::Repl(anns, Box::new(body)),
                    (start, self.last_end),
                ))
            }
            Some(Tok::Ident(_)) => {
                let subj = self.ident("a channel name")?;
                let pref = self.prefix_rest(subj)?;
                self.expect(Tok::Dot, "`.` after the prefix")?;
                let cont = self.proc_tight()?;
                Ok(Process::new(
                    ProcNode::Act(pref, Box::new(cont)),
                    (start, self.last_end),
                ))
            }
            Some(found) => Err(self.err(format!("expected a process, found {}", describe(&found)))),
            None => Err(self.err("expected a process, found end of input")),
        }
    }

    fn prefix_rest(&mut self, subj: String) -> Result<ProcPrefix, ParseError> {
        if self.eat(&Tok::Query) {
            if self.eat(&Tok::LParen) {
                let var = self.ident("a variable name")?;
                self.expect(Tok::Colon, "`:` before the value type")?;
                let ty = self.basic()?;
                self.expect(Tok::RParen, "`)` closing the input")?;
                Ok(ProcPrefix::InVal { subj, var, ty })
            } else if self.eat(&Tok::LBrack) {
                let var = self.ident("a channel variable")?;
                let ann = if self.eat(&Tok::Colon) {
                    Some(self.ty(&mut Vec::new())?)
                } else {
                    None
                };
                self.expect(Tok::RBrack, "`]` closing the channel input")?;
                Ok(ProcPrefix::InCh { subj, var, ann })
            } else {
                Err(self.err("expected `(` or `[` after `?`"))
            }
        } else if self.eat(&Tok::Bang) {
            if self.eat(&Tok::LParen) {
                let expr = self.expr()?;
                self.expect(Tok::RParen, "`)` closing the output")?;
                Ok(ProcPrefix::OutVal { subj, expr })
            } else if self.eat(&Tok::LBrack) {
                let obj = self.ident("a channel name")?;
                let ann = if self.eat(&Tok::Colon) {
                    Some(self.ty(&mut Vec::new())?)
                } else {
                    None
                };
                self.expect(Tok::RBrack, "`]` closing the delegation")?;
                Ok(ProcPrefix::OutCh { subj, obj, ann })
            } else {
                Err(self.err("expected `(` or `[` after `!`"))
            }
        } else {
            Err(self.err(format!(
                "expected `?` or `!` after channel {subj}"
            )))
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            let op = if self.eat(&Tok::Plus) {
                BinOp::Add
            } else if self.eat(&Tok::Minus) {
                BinOp::Sub
            } else {
                return Ok(acc);
            };
            let rhs = self.term()?;
            acc = Expr::Bin(op, Box::new(acc), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            let op = if self.eat(&Tok::Star) {
                BinOp::Mul
            } else if self.eat(&Tok::Slash) {
                BinOp::Div
            } else {
                return Ok(acc);
            };
            let rhs = self.factor()?;
            acc = Expr::Bin(op, Box::new(acc), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.next();
                match parse_number(&n) {
                    Some(v) => Ok(Expr::Lit(v)),
                    None => Err(self.err(format!("invalid number {n}"))),
                }
            }
            Some(Tok::Str(s)) => {
                self.next();
                Ok(Expr::Lit(Value::Str(s)))
            }
            Some(Tok::Atom(s)) => {
                self.next();
                Ok(Expr::Lit(Value::Sym(s)))
            }
            Some(Tok::Ident(n)) if n == "true" => {
                self.next();
                Ok(Expr::Lit(Value::Bool(true)))
            }
            Some(Tok::Ident(n)) if n == "false" => {
                self.next();
                Ok(Expr::Lit(Value::Bool(false)))
            }
            Some(Tok::Ident(_)) => {
                let name = self.ident("a variable or function name")?;
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "`)` closing the arguments")?;
                    Ok(Expr::App(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::Minus) => {
                self.next();
                let f = self.factor()?;
                Ok(Expr::Bin(
                    BinOp::Sub,
                    Box::new(Expr::Lit(Value::int(0))),
                    Box::new(f),
                ))
            }
            Some(Tok::LParen) => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(found) => Err(self.err(format!("expected an expression, found {}", describe(&found)))),
            None => Err(self.err("expected an expression, found end of input")),
        }
    }
}

/// Parses a complete session type.
pub fn parse_type(ctx: &Ctx, src: &str) -> Result<TypeId, ParseError> {
    let mut p = P::new(ctx, src)?;
    let mut binders = Vec::new();
    let t = p.ty(&mut binders)?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a complete process.
pub fn parse_process(ctx: &Ctx, src: &str) -> Result<Process, ParseError> {
    let mut p = P::new(ctx, src)?;
    let t = p.proc()?;
    p.expect_eof()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::canon;
    use crate::types::TypeNode;
    use crate::universe::Universe;

    fn ctx() -> Ctx {
        Ctx::new(Universe::default_universe())
    }

    #[test]
    fn precedence_orders_the_three_operators() {
        let c = ctx();
        // `+` binds looser than `|`, `(+)` looser than `+`
        let t = parse_type(&c, "1 (+) ?Int.1 + ?Bool.1 | !Int.0").unwrap();
        let TypeNode::Int(parts) = c.node(t) else { panic!("expected internal choice") };
        assert_eq!(parts.len(), 2);
        let ext = parts
            .iter()
            .find(|&&p| matches!(c.node(p), TypeNode::Ext(_)))
            .copied()
            .unwrap();
        let TypeNode::Ext(branches) = c.node(ext) else { unreachable!() };
        assert!(branches.iter().any(|&b| matches!(c.node(b), TypeNode::Par(_))));
    }

    #[test]
    fn rec_bodies_bind_tightly() {
        let c = ctx();
        let t = parse_type(&c, "rec X.?Int.X | rec Y.!Int.Y").unwrap();
        let TypeNode::Par(parts) = c.node(t) else {
            panic!("expected a parallel composition, got {}", c.pretty(t))
        };
        assert_eq!(parts.len(), 2);
        for p in parts.iter() {
            assert!(matches!(c.node(*p), TypeNode::Rec(_)));
        }
    }

    #[test]
    fn alpha_equivalent_types_are_identical() {
        let c = ctx();
        let a = parse_type(&c, "rec X. ?Int.X").unwrap();
        let b = parse_type(&c, "rec Loop. ?Int.Loop").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn delegation_payloads_nest() {
        let c = ctx();
        let t = parse_type(&c, "?[!Int.1 + ?[?Bool.1].1].1").unwrap();
        let TypeNode::Prefix(Action::InCh(p), _) = c.node(t) else { panic!() };
        assert!(matches!(c.node(p), TypeNode::Ext(_)));
    }

    #[test]
    fn types_round_trip_through_the_printer() {
        let c = ctx();
        for src in [
            "0",
            "1",
            "?Int.1",
            "!'abort'.0",
            "rec X. (1 (+) ?[?Int.1].X)",
            "rec X.?Int.X | rec Y.!Int.Y",
            "?String.!Int.?Address.!Date.1",
            "?Int.1 + ?Bool.1 + ?empty.0",
            "(?Int.1 + ?Bool.1) | (1 (+) !Real.1)",
            "rec X. ?[!Int.1].(X + ?Bool.1)",
        ] {
            let t = parse_type(&c, src).unwrap();
            let printed = c.pretty(t);
            let again = parse_type(&c, &printed)
                .unwrap_or_else(|e| panic!("printed form {printed:?} failed to parse: {e}"));
            assert_eq!(t, again, "round trip changed {src:?} -> {printed:?}");
        }
    }

    #[test]
    fn unknown_names_are_rejected_with_positions() {
        let c = ctx();
        let err = parse_type(&c, "?Unknown.1").unwrap_err();
        assert!(err.msg.contains("unknown basic type"), "{err}");
        let err = parse_type(&c, "rec X. ?Int.Y").unwrap_err();
        assert!(err.msg.contains("unbound recursion variable"), "{err}");
        let err = parse_type(&c, "?'missing'.1").unwrap_err();
        assert!(err.msg.contains("not a declared singleton"), "{err}");
        let err = parse_type(&c, "?Int.1 ?Bool.1").unwrap_err();
        assert!(err.msg.contains("unexpected"), "{err}");
    }

    #[test]
    fn processes_parse_with_annotations_and_expressions() {
        let c = ctx();
        let src = "new c. a![c: ?String.!Int.1]. c!(\"War and Peace\"). c?(p:Int). c!(p/2). 0";
        let p = parse_process(&c, src).unwrap();
        let ProcNode::New(n, body) = &p.node else { panic!() };
        assert_eq!(n, "c");
        let ProcNode::Act(ProcPrefix::OutCh { ann, .. }, _) = &body.node else { panic!() };
        assert!(ann.is_some());
        // expression precedence: p/2 is a division node
        let printed = crate::process::pretty_proc(&c, &p);
        assert!(printed.contains("(p / 2)"), "{printed}");
    }

    #[test]
    fn replication_annotations_parse() {
        let c = ctx();
        let src = "*{server: rec X.(1 (+) ?[?Int.1].X)} server?[x: ?Int.1]. x?(v:Int). 0";
        let p = parse_process(&c, src).unwrap();
        let ProcNode::Repl(Some(anns), _) = &p.node else { panic!() };
        assert_eq!(anns.len(), 1);
        assert_eq!(anns[0].0, "server");
    }

    #[test]
    fn new_binds_tightly_in_parallel_compositions() {
        let c = ctx();
        let p = parse_process(&c, "new c. c!(1). 0 | c?(x:Int). 0").unwrap();
        // the right component's c is free, not under the restriction
        let ProcNode::Par(l, _) = &p.node else { panic!("got {:?}", p.node) };
        assert!(matches!(l.node, ProcNode::New(_, _)));
        assert!(crate::process::free_names(&p).contains("c"));
    }

    #[test]
    fn processes_round_trip_through_the_printer() {
        let c = ctx();
        for src in [
            "0",
            "a?(x:Int). b!(x + 1). 0",
            "a?[x]. x?(t:String). x!(price(t)). 0",
            "new c. a![c: ?Int.1]. c!(3). 0 | a?[y]. 0",
            "a?(x:Int). 0 + b?(y:Bool). 0",
            "c!(1). 0 (+) c!(2). 0",
            "*{s: rec X.(1 (+) ?[?Int.1].X)} s?[x: ?Int.1]. x?(v:Int). 0",
            "a!('abort'). 0",
            "a!(-3). 0",
        ] {
            let p = parse_process(&c, src).unwrap();
            let printed = crate::process::pretty_proc(&c, &p);
            let again = parse_process(&c, &printed)
                .unwrap_or_else(|e| panic!("printed form {printed:?} failed to parse: {e}"));
            assert_eq!(
                canon(&c, &p),
                canon(&c, &again),
                "round trip changed {src:?} -> {printed:?}"
            );
        }
    }

    #[test]
    fn keywords_cannot_be_channel_names() {
        let c = ctx();
        assert!(parse_process(&c, "new?(x:Int). 0").is_err());
        assert!(parse_process(&c, "true!(1). 0").is_err());
    }
}
