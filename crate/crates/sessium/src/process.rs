//! Value-passing pi-calculus processes and their transition relation.
//!
//! Processes communicate values drawn from the configured universe and
//! delegate channels. The transition relation is an early-instantiation
//! labelled semantics: inputs branch over the (finite) carrier values of the
//! annotated type, channel inputs branch over the names in scope plus one
//! deterministic fresh name, and restriction supports scope extrusion via a
//! bound-output label. A closed system therefore has a finite, reproducible
//! set of internal transitions from each state.

use std::collections::BTreeSet;
use std::fmt;

use num::One;

use crate::types::{Ctx, TypeId};
use crate::universe::{BasicTypeExpr, Universe, Value};

pub type Name = String;
/// Byte range in the source the node was parsed from.
pub type Span = (usize, usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

/// Expressions occurring in value outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Lit(Value),
    Var(Name),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    App(String, Vec<Expr>),
}

/// A communication prefix. Delegation annotations are the session types the
/// typing rules require; they do not influence the transition relation.
#[derive(Clone, Debug)]
pub enum ProcPrefix {
    InVal { subj: Name, var: Name, ty: BasicTypeExpr },
    OutVal { subj: Name, expr: Expr },
    InCh { subj: Name, var: Name, ann: Option<TypeId> },
    OutCh { subj: Name, obj: Name, ann: Option<TypeId> },
}

impl ProcPrefix {
    pub fn subject(&self) -> &Name {
        match self {
            ProcPrefix::InVal { subj, .. }
            | ProcPrefix::OutVal { subj, .. }
            | ProcPrefix::InCh { subj, .. }
            | ProcPrefix::OutCh { subj, .. } => subj,
        }
    }

    /// The name bound by the prefix in its continuation, if any.
    pub fn binder(&self) -> Option<&Name> {
        match self {
            ProcPrefix::InVal { var, .. } | ProcPrefix::InCh { var, .. } => Some(var),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Process {
    pub node: ProcNode,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum ProcNode {
    /// `0`, the inactive process.
    Idle,
    Act(ProcPrefix, Box<Process>),
    /// External choice between prefixed branches.
    Ext(Vec<Process>),
    /// Internal choice.
    Int(Vec<Process>),
    Par(Box<Process>, Box<Process>),
    /// Replication, optionally carrying per-channel session annotations.
    Repl(Option<Vec<(Name, TypeId)>>, Box<Process>),
    /// Channel restriction `new c. P`.
    New(Name, Box<Process>),
}

impl Process {
    pub fn new(node: ProcNode, span: Span) -> Process {
        Process { node, span }
    }

    pub fn idle() -> Process {
        Process::new(ProcNode::Idle, (0, 0))
    }
}

/// A transmitted message: either a value or a channel name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Msg {
    Val(Value),
    Chan(Name),
}

impl fmt::Display for Msg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Msg::Val(v) => write!(f, "{v}"),
            Msg::Chan(c) => write!(f, "[{c}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProcLabel {
    Tau,
    In(Name, Msg),
    Out(Name, Msg),
    /// Output of a restricted channel whose scope is being extruded.
    BoundOut(Name, Name),
}

impl fmt::Display for ProcLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcLabel::Tau => write!(f, "tau"),
            ProcLabel::In(c, m) => write!(f, "{c}?{m}"),
            ProcLabel::Out(c, m) => write!(f, "{c}!{m}"),
            ProcLabel::BoundOut(c, d) => write!(f, "{c}!(new {d})"),
        }
    }
}

fn label_mentions(l: &ProcLabel, n: &Name) -> bool {
    match l {
        ProcLabel::Tau => false,
        ProcLabel::In(c, m) | ProcLabel::Out(c, m) => {
            c == n || matches!(m, Msg::Chan(d) if d == n)
        }
        ProcLabel::BoundOut(c, d) => c == n || d == n,
    }
}

// ---- names ----

fn expr_names(e: &Expr, out: &mut BTreeSet<Name>) {
    match e {
        Expr::Lit(_) => {}
        Expr::Var(x) => {
            out.insert(x.clone());
        }
        Expr::Bin(_, a, b) => {
            expr_names(a, out);
            expr_names(b, out);
        }
        Expr::App(_, args) => {
            for a in args {
                expr_names(a, out);
            }
        }
    }
}

/// Free names of a process: channel subjects and objects together with free
/// expression variables. Function symbols are not names.
pub fn free_names(p: &Process) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    fn go(p: &Process, out: &mut BTreeSet<Name>) {
        match &p.node {
            ProcNode::Idle => {}
            ProcNode::Act(pref, cont) => {
                out.insert(pref.subject().clone());
                match pref {
                    ProcPrefix::OutVal { expr, .. } => expr_names(expr, out),
                    ProcPrefix::OutCh { obj, .. } => {
                        out.insert(obj.clone());
                    }
                    _ => {}
                }
                let mut inner = free_names(cont);
                if let Some(b) = pref.binder() {
                    inner.remove(b);
                }
                out.extend(inner);
            }
            ProcNode::Ext(bs) | ProcNode::Int(bs) => {
                for b in bs {
                    go(b, out);
                }
            }
            ProcNode::Par(l, r) => {
                go(l, out);
                go(r, out);
            }
            ProcNode::Repl(anns, body) => {
                if let Some(anns) = anns {
                    for (u, _) in anns {
                        out.insert(u.clone());
                    }
                }
                go(body, out);
            }
            ProcNode::New(n, body) => {
                let mut inner = free_names(body);
                inner.remove(n);
                out.extend(inner);
            }
        }
    }
    go(p, &mut out);
    out
}

fn bound_names(p: &Process, out: &mut BTreeSet<Name>) {
    match &p.node {
        ProcNode::Idle => {}
        ProcNode::Act(pref, cont) => {
            if let Some(b) = pref.binder() {
                out.insert(b.clone());
            }
            bound_names(cont, out);
        }
        ProcNode::Ext(bs) | ProcNode::Int(bs) => {
            for b in bs {
                bound_names(b, out);
            }
        }
        ProcNode::Par(l, r) => {
            bound_names(l, out);
            bound_names(r, out);
        }
        ProcNode::Repl(_, body) => bound_names(body, out),
        ProcNode::New(n, body) => {
            out.insert(n.clone());
            bound_names(body, out);
        }
    }
}

/// A name based on `base` that avoids everything in `avoid`.
fn fresh_variant(base: &str, avoid: &BTreeSet<Name>) -> Name {
    if !avoid.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !avoid.contains(n))
        .unwrap()
}

/// The deterministic fresh channel used for scope extrusion and for input
/// candidates. `#` cannot occur in a parsed identifier, so these names never
/// collide with source binders.
pub fn fresh_channel(avoid: &BTreeSet<Name>) -> Name {
    (0..)
        .map(|i| format!("ch#{i}"))
        .find(|n| !avoid.contains(n))
        .unwrap()
}

// ---- substitution ----

fn expr_rename(e: &Expr, x: &Name, to: &Name) -> Expr {
    match e {
        Expr::Lit(_) => e.clone(),
        Expr::Var(y) => {
            if y == x {
                Expr::Var(to.clone())
            } else {
                e.clone()
            }
        }
        Expr::Bin(op, a, b) => Expr::Bin(
            *op,
            Box::new(expr_rename(a, x, to)),
            Box::new(expr_rename(b, x, to)),
        ),
        Expr::App(f, args) => {
            Expr::App(f.clone(), args.iter().map(|a| expr_rename(a, x, to)).collect())
        }
    }
}

fn expr_subst_val(e: &Expr, x: &Name, v: &Value) -> Expr {
    match e {
        Expr::Lit(_) => e.clone(),
        Expr::Var(y) => {
            if y == x {
                Expr::Lit(v.clone())
            } else {
                e.clone()
            }
        }
        Expr::Bin(op, a, b) => Expr::Bin(
            *op,
            Box::new(expr_subst_val(a, x, v)),
            Box::new(expr_subst_val(b, x, v)),
        ),
        Expr::App(f, args) => {
            Expr::App(f.clone(), args.iter().map(|a| expr_subst_val(a, x, v)).collect())
        }
    }
}

/// Capture-avoiding renaming of the free name `x` to `to`.
pub fn subst_chan(p: &Process, x: &Name, to: &Name) -> Process {
    if x == to {
        return p.clone();
    }
    let ren = |n: &Name| if n == x { to.clone() } else { n.clone() };
    let node = match &p.node {
        ProcNode::Idle => ProcNode::Idle,
        ProcNode::Act(pref, cont) => {
            let mut pref = match pref {
                ProcPrefix::InVal { subj, var, ty } => ProcPrefix::InVal {
                    subj: ren(subj),
                    var: var.clone(),
                    ty: ty.clone(),
                },
                ProcPrefix::OutVal { subj, expr } => ProcPrefix::OutVal {
                    subj: ren(subj),
                    expr: expr_rename(expr, x, to),
                },
                ProcPrefix::InCh { subj, var, ann } => ProcPrefix::InCh {
                    subj: ren(subj),
                    var: var.clone(),
                    ann: *ann,
                },
                ProcPrefix::OutCh { subj, obj, ann } => ProcPrefix::OutCh {
                    subj: ren(subj),
                    obj: ren(obj),
                    ann: *ann,
                },
            };
            let cont = match pref.binder().cloned() {
                Some(b) if b == *x => (**cont).clone(),
                Some(b) if b == *to => {
                    // The binder would capture the incoming name; rename it.
                    let mut avoid = free_names(cont);
                    avoid.insert(x.clone());
                    avoid.insert(to.clone());
                    let b2 = fresh_variant(&b, &avoid);
                    let renamed = subst_chan(cont, &b, &b2);
                    match &mut pref {
                        ProcPrefix::InVal { var, .. } | ProcPrefix::InCh { var, .. } => {
                            *var = b2.clone()
                        }
                        _ => unreachable!(),
                    }
                    subst_chan(&renamed, x, to)
                }
                _ => subst_chan(cont, x, to),
            };
            ProcNode::Act(pref, Box::new(cont))
        }
        ProcNode::Ext(bs) => ProcNode::Ext(bs.iter().map(|b| subst_chan(b, x, to)).collect()),
        ProcNode::Int(bs) => ProcNode::Int(bs.iter().map(|b| subst_chan(b, x, to)).collect()),
        ProcNode::Par(l, r) => ProcNode::Par(
            Box::new(subst_chan(l, x, to)),
            Box::new(subst_chan(r, x, to)),
        ),
        ProcNode::Repl(anns, body) => {
            let anns = anns.as_ref().map(|v| {
                v.iter().map(|(u, s)| (ren(u), *s)).collect::<Vec<_>>()
            });
            ProcNode::Repl(anns, Box::new(subst_chan(body, x, to)))
        }
        ProcNode::New(n, body) => {
            if n == x {
                ProcNode::New(n.clone(), body.clone())
            } else if n == to {
                let mut avoid = free_names(body);
                avoid.insert(x.clone());
                avoid.insert(to.clone());
                let n2 = fresh_variant(n, &avoid);
                let renamed = subst_chan(body, n, &n2);
                ProcNode::New(n2, Box::new(subst_chan(&renamed, x, to)))
            } else {
                ProcNode::New(n.clone(), Box::new(subst_chan(body, x, to)))
            }
        }
    };
    Process::new(node, p.span)
}

/// Substitutes a concrete value for the free variable `x`. Values contain no
/// names, so no capture is possible; binders named `x` simply shadow it.
pub fn subst_val(p: &Process, x: &Name, v: &Value) -> Process {
    let node = match &p.node {
        ProcNode::Idle => ProcNode::Idle,
        ProcNode::Act(pref, cont) => {
            let pref2 = match pref {
                ProcPrefix::OutVal { subj, expr } => ProcPrefix::OutVal {
                    subj: subj.clone(),
                    expr: expr_subst_val(expr, x, v),
                },
                other => other.clone(),
            };
            let cont2 = match pref.binder() {
                Some(b) if b == x => (**cont).clone(),
                _ => subst_val(cont, x, v),
            };
            ProcNode::Act(pref2, Box::new(cont2))
        }
        ProcNode::Ext(bs) => ProcNode::Ext(bs.iter().map(|b| subst_val(b, x, v)).collect()),
        ProcNode::Int(bs) => ProcNode::Int(bs.iter().map(|b| subst_val(b, x, v)).collect()),
        ProcNode::Par(l, r) => ProcNode::Par(
            Box::new(subst_val(l, x, v)),
            Box::new(subst_val(r, x, v)),
        ),
        ProcNode::Repl(anns, body) => ProcNode::Repl(anns.clone(), Box::new(subst_val(body, x, v))),
        ProcNode::New(n, body) => {
            if n == x {
                ProcNode::New(n.clone(), body.clone())
            } else {
                ProcNode::New(n.clone(), Box::new(subst_val(body, x, v)))
            }
        }
    };
    Process::new(node, p.span)
}

// ---- expression evaluation ----

/// Evaluates a closed expression. Numeric arithmetic is exact; division of
/// two integers is euclidean integer division, so integer-typed expressions
/// stay integers.
pub fn eval(u: &Universe, e: &Expr) -> Result<Value, String> {
    match e {
        Expr::Lit(v) => Ok(v.clone()),
        Expr::Var(x) => Err(format!("unbound variable {x}")),
        Expr::Bin(op, a, b) => {
            let (Value::Num(a), Value::Num(b)) = (eval(u, a)?, eval(u, b)?) else {
                return Err(format!("operator {} applied to non-numbers", op.symbol()));
            };
            let r = match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == num::zero() {
                        return Err("division by zero".into());
                    }
                    if a.denom().is_one() && b.denom().is_one() {
                        num::rational::Rational64::from_integer(
                            a.numer().div_euclid(*b.numer()),
                        )
                    } else {
                        a / b
                    }
                }
            };
            Ok(Value::Num(r))
        }
        Expr::App(f, args) => {
            let def = u.fun(f).ok_or_else(|| format!("unknown function {f}"))?;
            let vals: Result<Vec<Value>, String> =
                args.iter().map(|a| eval(u, a)).collect();
            let vals = vals?;
            def.table
                .get(&vals)
                .cloned()
                .ok_or_else(|| {
                    let shown: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
                    format!("{f} is not defined at ({})", shown.join(", "))
                })
        }
    }
}

// ---- transition relation ----

/// All transitions of `p`, with early instantiation of inputs. The result is
/// deterministic in `p`: candidate received names are the free names of the
/// whole process plus one deterministic fresh name, and extruded channels are
/// renamed to that same fresh name, so matching sends and receives produce
/// syntactically equal labels.
pub fn proc_steps(ctx: &Ctx, p: &Process) -> Vec<(ProcLabel, Process)> {
    let known = free_names(p);
    let mut avoid = known.clone();
    bound_names(p, &mut avoid);
    let fresh = fresh_channel(&avoid);
    steps_rec(ctx, p, &known, &fresh)
}

/// Only the internal transitions of `p`, deduplicated and deterministically
/// ordered by successor state.
pub fn tau_steps(ctx: &Ctx, p: &Process) -> Vec<(Process, String)> {
    let mut out: Vec<(Process, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    for (l, q) in proc_steps(ctx, p) {
        if l == ProcLabel::Tau {
            let key = canon(ctx, &q);
            if seen.insert(key.clone()) {
                out.push((q, key));
            }
        }
    }
    out.sort_by(|a, b| a.1.cmp(&b.1));
    out
}

fn steps_rec(
    ctx: &Ctx,
    p: &Process,
    known: &BTreeSet<Name>,
    fresh: &Name,
) -> Vec<(ProcLabel, Process)> {
    let span = p.span;
    match &p.node {
        ProcNode::Idle => Vec::new(),
        ProcNode::Act(pref, cont) => {
            let mut out = Vec::new();
            match pref {
                ProcPrefix::InVal { subj, var, ty } => {
                    let cells = ctx.universe.denote(ty);
                    for v in ctx.universe.values_of(&cells) {
                        out.push((
                            ProcLabel::In(subj.clone(), Msg::Val(v.clone())),
                            subst_val(cont, var, &v),
                        ));
                    }
                }
                ProcPrefix::OutVal { subj, expr } => {
                    if let Ok(v) = eval(&ctx.universe, expr) {
                        out.push((ProcLabel::Out(subj.clone(), Msg::Val(v)), (**cont).clone()));
                    }
                }
                ProcPrefix::InCh { subj, var, .. } => {
                    for d in known.iter().chain(std::iter::once(fresh)) {
                        out.push((
                            ProcLabel::In(subj.clone(), Msg::Chan(d.clone())),
                            subst_chan(cont, var, d),
                        ));
                    }
                }
                ProcPrefix::OutCh { subj, obj, .. } => {
                    out.push((
                        ProcLabel::Out(subj.clone(), Msg::Chan(obj.clone())),
                        (**cont).clone(),
                    ));
                }
            }
            out
        }
        ProcNode::Ext(branches) => {
            let mut out = Vec::new();
            for (i, b) in branches.iter().enumerate() {
                for (l, q) in steps_rec(ctx, b, known, fresh) {
                    if l == ProcLabel::Tau {
                        // Internal moves do not resolve an external choice.
                        let mut bs = branches.clone();
                        bs[i] = q;
                        out.push((ProcLabel::Tau, Process::new(ProcNode::Ext(bs), span)));
                    } else {
                        out.push((l, q));
                    }
                }
            }
            out
        }
        ProcNode::Int(branches) => branches
            .iter()
            .map(|b| (ProcLabel::Tau, b.clone()))
            .collect(),
        ProcNode::Par(l, r) => {
            let ls = steps_rec(ctx, l, known, fresh);
            let rs = steps_rec(ctx, r, known, fresh);
            let mut out = Vec::new();
            for (la, qa) in &ls {
                out.push((
                    la.clone(),
                    Process::new(ProcNode::Par(Box::new(qa.clone()), r.clone()), span),
                ));
            }
            for (lb, qb) in &rs {
                out.push((
                    lb.clone(),
                    Process::new(ProcNode::Par(l.clone(), Box::new(qb.clone())), span),
                ));
            }
            for (la, qa) in &ls {
                for (lb, qb) in &rs {
                    if let Some(t) = sync(la, qa, lb, qb, span) {
                        out.push(t);
                    }
                }
            }
            out
        }
        ProcNode::Repl(_, body) => {
            let bs = steps_rec(ctx, body, known, fresh);
            let mut out = Vec::new();
            for (l, q) in &bs {
                out.push((
                    l.clone(),
                    Process::new(ProcNode::Par(Box::new(q.clone()), Box::new(p.clone())), span),
                ));
            }
            // Two spawned copies may communicate with each other.
            for (la, qa) in &bs {
                for (lb, qb) in &bs {
                    if let Some((_, s)) = sync(la, qa, lb, qb, span) {
                        out.push((
                            ProcLabel::Tau,
                            Process::new(ProcNode::Par(Box::new(s), Box::new(p.clone())), span),
                        ));
                    }
                }
            }
            out
        }
        ProcNode::New(n, body) => {
            let mut known2 = known.clone();
            known2.insert(n.clone());
            let mut out = Vec::new();
            for (l, q) in steps_rec(ctx, body, &known2, fresh) {
                match &l {
                    ProcLabel::Out(c, Msg::Chan(d)) if d == n && c != n => {
                        // Scope extrusion: the restricted name escapes under a
                        // fresh identity and the restriction moves to whoever
                        // receives it.
                        out.push((
                            ProcLabel::BoundOut(c.clone(), fresh.clone()),
                            subst_chan(&q, n, fresh),
                        ));
                    }
                    l2 if label_mentions(l2, n) => {}
                    _ => out.push((l, Process::new(ProcNode::New(n.clone(), Box::new(q)), span))),
                }
            }
            out
        }
    }
}

fn sync(
    la: &ProcLabel,
    qa: &Process,
    lb: &ProcLabel,
    qb: &Process,
    span: Span,
) -> Option<(ProcLabel, Process)> {
    use ProcLabel::*;
    let par = |a: &Process, b: &Process| {
        Process::new(ProcNode::Par(Box::new(a.clone()), Box::new(b.clone())), span)
    };
    match (la, lb) {
        (Out(c, m), In(c2, m2)) | (In(c2, m2), Out(c, m)) if c == c2 && m == m2 => {
            Some((Tau, par(qa, qb)))
        }
        (BoundOut(c, e), In(c2, Msg::Chan(e2))) | (In(c2, Msg::Chan(e2)), BoundOut(c, e))
            if c == c2 && e == e2 =>
        {
            Some((
                Tau,
                Process::new(ProcNode::New(e.clone(), Box::new(par(qa, qb))), span),
            ))
        }
        _ => None,
    }
}

// ---- readiness ----

/// Whether every occurrence of `c` in `p` sits at a top-level prefix: no use
/// of `c` is blocked behind communication on some other channel.
pub fn ready(p: &Process, c: &Name) -> bool {
    match &p.node {
        ProcNode::Idle => true,
        ProcNode::Act(pref, _) => pref.subject() == c || !free_names(p).contains(c),
        ProcNode::Ext(bs) | ProcNode::Int(bs) => bs.iter().all(|b| ready(b, c)),
        ProcNode::Par(l, r) => ready(l, c) && ready(r, c),
        ProcNode::Repl(_, body) => ready(body, c),
        ProcNode::New(n, body) => n == c || ready(body, c),
    }
}

// ---- printing and canonical keys ----

fn expr_str(e: &Expr, look: &dyn Fn(&Name) -> String) -> String {
    match e {
        Expr::Lit(v) => v.to_string(),
        Expr::Var(x) => look(x),
        Expr::Bin(op, a, b) => {
            format!("({} {} {})", expr_str(a, look), op.symbol(), expr_str(b, look))
        }
        Expr::App(f, args) => {
            let parts: Vec<String> = args.iter().map(|a| expr_str(a, look)).collect();
            format!("{f}({})", parts.join(", "))
        }
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    expr_str(e, &|n| n.clone())
}

/// Source-like rendering with the original names.
pub fn pretty_proc(ctx: &Ctx, p: &Process) -> String {
    // Levels, loosest to tightest: 0 = `(+)`, 1 = `+`, 2 = `|`, 3 = atoms.
    fn go(ctx: &Ctx, p: &Process, level: u8) -> String {
        let wrap = |s: String, needs: bool| if needs { format!("({s})") } else { s };
        match &p.node {
            ProcNode::Idle => "0".into(),
            ProcNode::Act(pref, cont) => {
                let head = match pref {
                    ProcPrefix::InVal { subj, var, ty } => {
                        format!("{subj}?({var}:{})", ctx.pretty_bt(ty))
                    }
                    ProcPrefix::OutVal { subj, expr } => {
                        format!("{subj}!({})", pretty_expr(expr))
                    }
                    ProcPrefix::InCh { subj, var, ann } => match ann {
                        Some(s) => format!("{subj}?[{var}: {}]", ctx.pretty(*s)),
                        None => format!("{subj}?[{var}]"),
                    },
                    ProcPrefix::OutCh { subj, obj, ann } => match ann {
                        Some(s) => format!("{subj}![{obj}: {}]", ctx.pretty(*s)),
                        None => format!("{subj}![{obj}]"),
                    },
                };
                format!("{head}. {}", go(ctx, cont, 3))
            }
            ProcNode::Ext(bs) => wrap(
                bs.iter().map(|b| go(ctx, b, 2)).collect::<Vec<_>>().join(" + "),
                level > 1,
            ),
            ProcNode::Int(bs) => wrap(
                bs.iter().map(|b| go(ctx, b, 1)).collect::<Vec<_>>().join(" (+) "),
                level > 0,
            ),
            ProcNode::Par(l, r) => wrap(
                format!("{} | {}", go(ctx, l, 3), go(ctx, r, 3)),
                level > 2,
            ),
            ProcNode::Repl(anns, body) => {
                let anns = match anns {
                    Some(list) => {
                        let parts: Vec<String> = list
                            .iter()
                            .map(|(u, s)| format!("{u}: {}", ctx.pretty(*s)))
                            .collect();
                        format!("{{{}}} ", parts.join(", "))
                    }
                    None => String::new(),
                };
                format!("*{anns}{}", go(ctx, body, 3))
            }
            ProcNode::New(n, body) => format!("new {n}. {}", go(ctx, body, 3)),
        }
    }
    go(ctx, p, 0)
}

/// A canonical key for a process state: alpha-renamed, with parallel and
/// choice components flattened and sorted, inert subterms dropped, and every
/// group fully parenthesized. Equal keys mean the states are interchangeable
/// for exploration purposes; the converse need not hold.
pub fn canon(ctx: &Ctx, p: &Process) -> String {
    canon_rec(ctx, p, &Vec::new(), 0)
}

/// Whether the process has no behaviour left: it is `0` up to restriction,
/// replication of `0`, and parallel composition.
pub fn is_inactive(ctx: &Ctx, p: &Process) -> bool {
    canon(ctx, p) == "0"
}

fn canon_rec(ctx: &Ctx, p: &Process, env: &Vec<(Name, String)>, depth: usize) -> String {
    let look = |n: &Name| -> String {
        env.iter()
            .rev()
            .find(|(orig, _)| orig == n)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(|| n.clone())
    };
    match &p.node {
        ProcNode::Idle => "0".into(),
        ProcNode::Act(pref, cont) => {
            let (head, binder) = match pref {
                ProcPrefix::InVal { subj, var, ty } => {
                    let cells: Vec<&str> = ctx
                        .universe
                        .denote(ty)
                        .iter()
                        .map(|&c| ctx.universe.cell_name(c))
                        .collect();
                    (
                        format!("{}?(%{depth}:{{{}}})", look(subj), cells.join(",")),
                        Some(var.clone()),
                    )
                }
                ProcPrefix::OutVal { subj, expr } => {
                    (format!("{}!({})", look(subj), expr_str(expr, &look)), None)
                }
                ProcPrefix::InCh { subj, var, ann } => {
                    let ann = match ann {
                        Some(s) => format!(":{}", ctx.pretty(*s)),
                        None => String::new(),
                    };
                    (format!("{}?[%{depth}{ann}]", look(subj)), Some(var.clone()))
                }
                ProcPrefix::OutCh { subj, obj, ann } => {
                    let ann = match ann {
                        Some(s) => format!(":{}", ctx.pretty(*s)),
                        None => String::new(),
                    };
                    (format!("{}![{}{ann}]", look(subj), look(obj)), None)
                }
            };
            let body = match binder {
                Some(b) => {
                    let mut env2 = env.clone();
                    env2.push((b, format!("%{depth}")));
                    canon_rec(ctx, cont, &env2, depth + 1)
                }
                None => canon_rec(ctx, cont, env, depth),
            };
            format!("{head}.{body}")
        }
        ProcNode::Ext(bs) => {
            let mut parts: Vec<String> = bs
                .iter()
                .map(|b| canon_rec(ctx, b, env, depth))
                .filter(|s| s != "0")
                .collect();
            parts.sort();
            group(parts, " + ")
        }
        ProcNode::Int(bs) => {
            let mut parts: Vec<String> =
                bs.iter().map(|b| canon_rec(ctx, b, env, depth)).collect();
            parts.sort();
            group(parts, " (+) ")
        }
        ProcNode::Par(_, _) => {
            let mut flat = Vec::new();
            par_parts(p, &mut flat);
            let mut parts: Vec<String> = flat
                .iter()
                .map(|b| canon_rec(ctx, b, env, depth))
                .filter(|s| s != "0")
                .collect();
            parts.sort();
            group(parts, " | ")
        }
        ProcNode::Repl(anns, body) => {
            let inner = canon_rec(ctx, body, env, depth);
            if inner == "0" {
                return "0".into();
            }
            let anns = match anns {
                Some(list) => {
                    let mut parts: Vec<String> = list
                        .iter()
                        .map(|(u, s)| format!("{}:{}", look(u), ctx.pretty(*s)))
                        .collect();
                    parts.sort();
                    format!("{{{}}}", parts.join(","))
                }
                None => String::new(),
            };
            format!("*{anns}({inner})")
        }
        ProcNode::New(n, body) => {
            if !free_names(body).contains(n) {
                return canon_rec(ctx, body, env, depth);
            }
            let mut env2 = env.clone();
            env2.push((n.clone(), format!("%{depth}")));
            format!("new %{depth}.({})", canon_rec(ctx, body, &env2, depth + 1))
        }
    }
}

fn group(parts: Vec<String>, sep: &str) -> String {
    match parts.len() {
        0 => "0".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("({})", parts.join(sep)),
    }
}

fn par_parts<'a>(p: &'a Process, out: &mut Vec<&'a Process>) {
    match &p.node {
        ProcNode::Par(l, r) => {
            par_parts(l, out);
            par_parts(r, out);
        }
        _ => out.push(p),
    }
}
