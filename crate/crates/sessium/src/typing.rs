//! The type system for processes.
//!
//! Typing *projects* a process onto each channel it uses: the result is a
//! session environment mapping every free channel to the session type the
//! process enacts on it. Absent entries mean `1` (the channel is not used).
//! Inference is syntax-directed; the points where the declarative system
//! would apply subsumption are surfaced as recorded [`Check`]s backed by the
//! decision procedures in [`crate::relations`]:
//!
//! * each restriction requires the restricted channel's composed session
//!   type to be complete;
//! * each replication requires every channel's session type to sit below
//!   two copies of itself, and a declared annotation must sit below the
//!   inferred one-copy type;
//! * an annotation on a received channel must sit below the inferred use;
//! * at the top level, every free channel's type must be viable.
//!
//! Because the underlying relations are three-valued, a check can come back
//! undecided. In strict mode that rejects the process (nothing unsound is
//! ever accepted silently); in permissive mode it downgrades to a warning.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::process::{
    eval, free_names, Expr, Name, ProcNode, ProcPrefix, Process, Span,
};
use crate::relations::{strong_subsession, viability, Verdict};
use crate::semantics::is_complete;
use crate::types::{Action, Ctx, TypeId};
use crate::universe::BasicTypeExpr;

/// Channel-to-session-type map. Channels not in the map are at `1`.
pub type SessionEnv = BTreeMap<Name, TypeId>;

type ValueEnv = BTreeMap<Name, BasicTypeExpr>;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum TypingError {
    #[error("external choice must have all branches prefixed on one channel; {detail}")]
    ExtShape { at: Span, detail: String },
    #[error("after receiving a channel as {var}, the continuation may only use {var}; it also uses {others}")]
    InputScope { at: Span, var: Name, others: String },
    #[error("delegating {obj} over {subj} requires an annotation: {subj}![{obj}: S]")]
    MissingAnnotation { at: Span, subj: Name, obj: Name },
    #[error("expression does not type: {msg}")]
    Expr { at: Span, msg: String },
}

/// One deferred side condition together with its verdict.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    /// What the check is attached to, e.g. `restriction of c`.
    pub subject: String,
    /// The requirement in concrete syntax.
    pub requirement: String,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Holds,
    Fails { detail: String },
    Undecided { reason: String },
}

impl Outcome {
    fn of(v: &Verdict) -> Outcome {
        match v {
            Verdict::Yes { .. } => Outcome::Holds,
            Verdict::No { witness } => Outcome::Fails { detail: witness_line(witness) },
            Verdict::Unknown { reason } => Outcome::Undecided { reason: reason.clone() },
        }
    }

    fn of_completeness(r: Result<bool, crate::semantics::AnalysisError>) -> Outcome {
        match r {
            Ok(true) => Outcome::Holds,
            Ok(false) => Outcome::Fails { detail: "a communication error is reachable".into() },
            Err(e) => Outcome::Undecided { reason: e.to_string() },
        }
    }
}

fn witness_line(w: &crate::relations::Witness) -> String {
    let mut s = String::new();
    if let Some(cx) = &w.context {
        s.push_str(&format!("context {cx}, "));
    }
    if let Some(t) = &w.tester {
        s.push_str(&format!("tester {t}: "));
    }
    s.push_str(&w.note);
    s
}

/// The result of projecting a process: its session environment plus every
/// side condition encountered on the way.
#[derive(Clone, Debug)]
pub struct Inference {
    pub env: SessionEnv,
    pub checks: Vec<Check>,
    /// Session types of restricted channels, in the order their
    /// restrictions were closed. Useful for inspecting a system whose
    /// interesting channels are all private.
    pub restrictions: Vec<(Name, TypeId)>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TypingMode {
    /// Undecided side conditions reject the process.
    Strict,
    /// Undecided side conditions become warnings.
    Permissive,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    WellTyped,
    WellTypedWithWarnings,
    Rejected,
}

/// Full typing report for a process.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub status: Status,
    /// Set when inference itself failed (shape errors, scope errors,
    /// missing annotations, untypable expressions).
    pub error: Option<String>,
    /// Pretty-printed top-level session environment.
    pub env: Vec<(String, String)>,
    pub checks: Vec<Check>,
    /// True when the status was decided by an undecided side condition
    /// rather than a definite failure.
    pub undecided: bool,
    #[serde(skip)]
    pub session_env: SessionEnv,
    #[serde(skip)]
    pub restrictions: Vec<(Name, TypeId)>,
}

/// Projects `p` onto its channels without the top-level viability check.
pub fn infer(ctx: &Ctx, p: &Process) -> Result<Inference, TypingError> {
    input_scope_check(p)?;
    let mut checks = Vec::new();
    let mut restrictions = Vec::new();
    let env = infer_rec(ctx, p, &ValueEnv::new(), &mut checks, &mut restrictions)?;
    Ok(Inference { env, checks, restrictions })
}

/// Types a process: projection, all recorded side conditions, and viability
/// of every top-level channel.
pub fn typecheck(ctx: &Ctx, p: &Process, mode: TypingMode) -> Report {
    let inf = match infer(ctx, p) {
        Ok(inf) => inf,
        Err(e) => {
            return Report {
                status: Status::Rejected,
                error: Some(e.to_string()),
                env: Vec::new(),
                checks: Vec::new(),
                undecided: false,
                session_env: SessionEnv::new(),
                restrictions: Vec::new(),
            }
        }
    };
    let mut checks = inf.checks;
    for (u, &t) in &inf.env {
        let v = viability(ctx, t, ctx.default_bound);
        checks.push(Check {
            subject: format!("free channel {u}"),
            requirement: format!("{} is viable", ctx.pretty(t)),
            outcome: Outcome::of(&v),
        });
    }
    let failed = checks.iter().any(|c| matches!(c.outcome, Outcome::Fails { .. }));
    let undecided = checks.iter().any(|c| matches!(c.outcome, Outcome::Undecided { .. }));
    let status = if failed {
        Status::Rejected
    } else if undecided {
        match mode {
            TypingMode::Strict => Status::Rejected,
            TypingMode::Permissive => Status::WellTypedWithWarnings,
        }
    } else {
        Status::WellTyped
    };
    Report {
        status,
        error: None,
        env: inf.env.iter().map(|(u, &t)| (u.clone(), ctx.pretty(t))).collect(),
        checks,
        undecided: undecided && !failed,
        session_env: inf.env,
        restrictions: inf.restrictions,
    }
}

/// Receiving a channel confines the continuation to that channel alone;
/// this is checked syntactically before inference starts.
fn input_scope_check(p: &Process) -> Result<(), TypingError> {
    match &p.node {
        ProcNode::Idle => Ok(()),
        ProcNode::Act(pre, body) => {
            if let ProcPrefix::InCh { var, .. } = pre {
                let extra: Vec<Name> = free_names(body)
                    .into_iter()
                    .filter(|n| n != var)
                    .collect();
                if !extra.is_empty() {
                    return Err(TypingError::InputScope {
                        at: p.span,
                        var: var.clone(),
                        others: extra.join(", "),
                    });
                }
            }
            input_scope_check(body)
        }
        ProcNode::Ext(bs) | ProcNode::Int(bs) => bs.iter().try_for_each(input_scope_check),
        ProcNode::Par(l, r) => {
            input_scope_check(l)?;
            input_scope_check(r)
        }
        ProcNode::Repl(_, body) | ProcNode::New(_, body) => input_scope_check(body),
    }
}

fn infer_rec(
    ctx: &Ctx,
    p: &Process,
    gamma: &ValueEnv,
    checks: &mut Vec<Check>,
    restrictions: &mut Vec<(Name, TypeId)>,
) -> Result<SessionEnv, TypingError> {
    match &p.node {
        ProcNode::Idle => Ok(SessionEnv::new()),
        ProcNode::Act(pre, body) => infer_act(ctx, pre, body, p.span, gamma, checks, restrictions),
        ProcNode::Ext(branches) => {
            // Every branch must be a prefix on one shared subject; the
            // subject collects the sum while any other channel sees an
            // internal choice (it cannot tell which branch was taken).
            let mut subject: Option<&Name> = None;
            for b in branches {
                let ProcNode::Act(pre, _) = &b.node else {
                    return Err(TypingError::ExtShape {
                        at: b.span,
                        detail: "a branch is not an action prefix".into(),
                    });
                };
                match subject {
                    None => subject = Some(pre.subject()),
                    Some(u) if u == pre.subject() => {}
                    Some(u) => {
                        return Err(TypingError::ExtShape {
                            at: b.span,
                            detail: format!(
                                "branches use different subjects {u} and {}",
                                pre.subject()
                            ),
                        })
                    }
                }
            }
            let subject = subject
                .ok_or(TypingError::ExtShape { at: p.span, detail: "empty choice".into() })?
                .clone();
            let envs = branches
                .iter()
                .map(|b| infer_rec(ctx, b, gamma, checks, restrictions))
                .collect::<Result<Vec<_>, _>>()?;
            let mut out = SessionEnv::new();
            let subj_ty =
                ctx.ext(envs.iter().map(|e| e.get(&subject).copied().unwrap_or(ctx.done())).collect::<Vec<_>>());
            for v in envs.iter().flat_map(|e| e.keys()) {
                if v != &subject && !out.contains_key(v) {
                    let ty = ctx.int_choice(
                        envs.iter().map(|e| e.get(v).copied().unwrap_or(ctx.done())).collect::<Vec<_>>(),
                    );
                    out.insert(v.clone(), ty);
                }
            }
            out.insert(subject, subj_ty);
            Ok(out)
        }
        ProcNode::Int(branches) => {
            let envs = branches
                .iter()
                .map(|b| infer_rec(ctx, b, gamma, checks, restrictions))
                .collect::<Result<Vec<_>, _>>()?;
            let mut out = SessionEnv::new();
            for v in envs.iter().flat_map(|e| e.keys()) {
                if !out.contains_key(v) {
                    let ty = ctx.int_choice(
                        envs.iter().map(|e| e.get(v).copied().unwrap_or(ctx.done())).collect::<Vec<_>>(),
                    );
                    out.insert(v.clone(), ty);
                }
            }
            Ok(out)
        }
        ProcNode::Par(l, r) => {
            let el = infer_rec(ctx, l, gamma, checks, restrictions)?;
            let er = infer_rec(ctx, r, gamma, checks, restrictions)?;
            let mut out = el;
            for (v, t) in er {
                let combined = match out.get(&v) {
                    Some(&prev) => ctx.par([prev, t]),
                    None => t,
                };
                out.insert(v, combined);
            }
            Ok(out)
        }
        ProcNode::New(n, body) => {
            let mut env = infer_rec(ctx, body, gamma, checks, restrictions)?;
            let cty = env.remove(n).unwrap_or_else(|| ctx.done());
            checks.push(Check {
                subject: format!("restriction of {n}"),
                requirement: format!("{} is complete", ctx.pretty(cty)),
                outcome: Outcome::of_completeness(is_complete(ctx, cty)),
            });
            restrictions.push((n.clone(), cty));
            Ok(env)
        }
        ProcNode::Repl(anns, body) => {
            let mut env = infer_rec(ctx, body, gamma, checks, restrictions)?;
            let mut out = SessionEnv::new();
            if let Some(list) = anns {
                for (u, s) in list {
                    let used = env.remove(u).unwrap_or_else(|| ctx.done());
                    if *s != used {
                        let v = strong_subsession(ctx, *s, used, ctx.default_bound);
                        checks.push(Check {
                            subject: format!("replication annotation on {u}"),
                            requirement: format!(
                                "{} is below one copy {}",
                                ctx.pretty(*s),
                                ctx.pretty(used)
                            ),
                            outcome: Outcome::of(&v),
                        });
                    }
                    let double = ctx.par([*s, *s]);
                    let v = strong_subsession(ctx, *s, double, ctx.default_bound);
                    checks.push(Check {
                        subject: format!("replication on {u}"),
                        requirement: format!(
                            "{} is below two copies of itself",
                            ctx.pretty(*s)
                        ),
                        outcome: Outcome::of(&v),
                    });
                    out.insert(u.clone(), *s);
                }
            }
            // channels used by the body but not annotated keep their
            // inferred types, which must then be self-replicable as they are
            for (u, t) in env {
                let double = ctx.par([t, t]);
                let v = strong_subsession(ctx, t, double, ctx.default_bound);
                checks.push(Check {
                    subject: format!("replication on {u}"),
                    requirement: format!("{} is below two copies of itself", ctx.pretty(t)),
                    outcome: Outcome::of(&v),
                });
                out.insert(u, t);
            }
            Ok(out)
        }
    }
}

fn infer_act(
    ctx: &Ctx,
    pre: &ProcPrefix,
    body: &Process,
    at: Span,
    gamma: &ValueEnv,
    checks: &mut Vec<Check>,
    restrictions: &mut Vec<(Name, TypeId)>,
) -> Result<SessionEnv, TypingError> {
    match pre {
        ProcPrefix::InVal { subj, var, ty } => {
            let mut g = gamma.clone();
            g.insert(var.clone(), ty.clone());
            let mut env = infer_rec(ctx, body, &g, checks, restrictions)?;
            let cont = env.remove(subj).unwrap_or_else(|| ctx.done());
            env.insert(subj.clone(), ctx.prefix(Action::InVal(ty.clone()), cont));
            Ok(env)
        }
        ProcPrefix::OutVal { subj, expr } => {
            let t = expr_type(ctx, gamma, expr)
                .map_err(|msg| TypingError::Expr { at, msg })?;
            let mut env = infer_rec(ctx, body, gamma, checks, restrictions)?;
            let cont = env.remove(subj).unwrap_or_else(|| ctx.done());
            env.insert(subj.clone(), ctx.prefix(Action::OutVal(t), cont));
            Ok(env)
        }
        ProcPrefix::InCh { subj, var, ann } => {
            // The scope pre-pass guarantees the body only uses `var`, so the
            // inferred environment is that channel's type alone.
            let env = infer_rec(ctx, body, gamma, checks, restrictions)?;
            let inferred = env.get(var).copied().unwrap_or_else(|| ctx.done());
            let rho = match ann {
                Some(a) => {
                    if *a != inferred {
                        let v = strong_subsession(ctx, *a, inferred, ctx.default_bound);
                        checks.push(Check {
                            subject: format!("annotation on received channel {var}"),
                            requirement: format!(
                                "{} is below the inferred use {}",
                                ctx.pretty(*a),
                                ctx.pretty(inferred)
                            ),
                            outcome: Outcome::of(&v),
                        });
                    }
                    *a
                }
                None => inferred,
            };
            let mut out = SessionEnv::new();
            out.insert(subj.clone(), ctx.prefix(Action::InCh(rho), ctx.done()));
            Ok(out)
        }
        ProcPrefix::OutCh { subj, obj, ann } => {
            let rho = ann.ok_or_else(|| TypingError::MissingAnnotation {
                at,
                subj: subj.clone(),
                obj: obj.clone(),
            })?;
            let mut env = infer_rec(ctx, body, gamma, checks, restrictions)?;
            let eta = env.remove(subj).unwrap_or_else(|| ctx.done());
            let theta = env.remove(obj).unwrap_or_else(|| ctx.done());
            env.insert(subj.clone(), ctx.prefix(Action::OutCh(rho), eta));
            // the delegated channel carries both what we still do on it and
            // what the receiver promises to do
            env.insert(obj.clone(), ctx.par([theta, rho]));
            Ok(env)
        }
    }
}

/// Types an expression against the declared value variables. Arithmetic is
/// classified by enumerating carrier values through the evaluator, so static
/// and dynamic behaviour agree by construction.
fn expr_type(ctx: &Ctx, gamma: &ValueEnv, e: &Expr) -> Result<BasicTypeExpr, String> {
    let u = &ctx.universe;
    match e {
        Expr::Lit(v) => u.literal_type(v),
        Expr::Var(x) => gamma
            .get(x)
            .cloned()
            .ok_or_else(|| format!("unbound variable {x}")),
        Expr::App(f, args) => {
            let def = u.fun(f).ok_or_else(|| format!("unknown function {f}"))?;
            if args.len() != def.params.len() {
                return Err(format!(
                    "{f} expects {} arguments, got {}",
                    def.params.len(),
                    args.len()
                ));
            }
            for (i, (a, pt)) in args.iter().zip(&def.params).enumerate() {
                let at = expr_type(ctx, gamma, a)?;
                if !u.bt_subtype(&at, pt) {
                    return Err(format!(
                        "argument {} of {f} has type {} where {} is expected",
                        i + 1,
                        ctx.pretty_bt(&at),
                        ctx.pretty_bt(pt)
                    ));
                }
            }
            Ok(def.result.clone())
        }
        Expr::Bin(op, a, b) => {
            let ta = expr_type(ctx, gamma, a)?;
            let tb = expr_type(ctx, gamma, b)?;
            let mut cells = std::collections::BTreeSet::new();
            for va in u.values_of(&u.denote(&ta)) {
                for vb in u.values_of(&u.denote(&tb)) {
                    let probe = Expr::Bin(
                        *op,
                        Box::new(Expr::Lit(va.clone())),
                        Box::new(Expr::Lit(vb.clone())),
                    );
                    if let Ok(v) = eval(u, &probe) {
                        if let Some(c) = u.cell_of_value(&v) {
                            cells.insert(c);
                        }
                    }
                }
            }
            if cells.is_empty() {
                return Err(format!(
                    "{} {} {} never yields a value of this universe",
                    ctx.pretty_bt(&ta),
                    op.symbol(),
                    ctx.pretty_bt(&tb)
                ));
            }
            // smallest named type covering every possible result
            let mut best: Option<(&String, usize)> = None;
            for (name, denot) in u.named_types() {
                if cells.iter().all(|c| denot.contains(c)) {
                    if best.map_or(true, |(_, s)| denot.len() < s) {
                        best = Some((name, denot.len()));
                    }
                }
            }
            match best {
                Some((name, _)) => Ok(BasicTypeExpr::Named(name.clone())),
                None => Err(format!(
                    "no named type covers the results of {} {} {}",
                    ctx.pretty_bt(&ta),
                    op.symbol(),
                    ctx.pretty_bt(&tb)
                )),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_process, parse_type};
    use crate::relations::sem_eq;
    use crate::universe::Universe;

    fn ctx() -> Ctx {
        Ctx::new(Universe::default_universe())
    }

    fn env_of(c: &Ctx, src: &str) -> Inference {
        infer(c, &parse_process(c, src).unwrap()).unwrap()
    }

    #[test]
    fn projection_follows_the_prefixes() {
        let c = ctx();
        let inf = env_of(&c, "a?(x: Int). b!(x + 1). a!(isprime(x)). 0");
        assert_eq!(inf.env.len(), 2);
        assert_eq!(c.pretty(inf.env["a"]), "?Int.!Bool.1");
        assert_eq!(c.pretty(inf.env["b"]), "!Int.1");
    }

    #[test]
    fn literals_get_their_smallest_type() {
        let c = ctx();
        let inf = env_of(&c, "a!(\"War and Peace\"). a!('abort'). a!(1.5). 0");
        assert_eq!(c.pretty(inf.env["a"]), "!String.!'abort'.!Real.1");
    }

    #[test]
    fn arithmetic_narrows_to_integers_when_possible() {
        let c = ctx();
        let inf = env_of(&c, "a?(p: Int). b!(p / 2). b!(p / 2 + 0.5). 0");
        assert_eq!(c.pretty(inf.env["b"]), "!Int.!Real.1");
    }

    #[test]
    fn bad_expressions_are_reported() {
        let c = ctx();
        let p = parse_process(&c, "a!(1 + true). 0").unwrap();
        assert!(matches!(infer(&c, &p), Err(TypingError::Expr { .. })));
        let p = parse_process(&c, "a!(price(3)). 0").unwrap();
        assert!(matches!(infer(&c, &p), Err(TypingError::Expr { .. })));
        let p = parse_process(&c, "a!(y). 0").unwrap();
        assert!(matches!(infer(&c, &p), Err(TypingError::Expr { .. })));
    }

    #[test]
    fn external_choice_needs_one_subject() {
        let c = ctx();
        let p = parse_process(&c, "a?(x: Int). 0 + b?(x: Int). 0").unwrap();
        assert!(matches!(infer(&c, &p), Err(TypingError::ExtShape { .. })));
        let inf = env_of(&c, "a?(x: Int). b!(1). 0 + a?(x: Bool). 0");
        assert_eq!(c.pretty(inf.env["a"]), "?Int.1 + ?Bool.1");
        // the bystander cannot know which branch runs
        assert_eq!(c.pretty(inf.env["b"]), "1 (+) !Int.1");
    }

    #[test]
    fn received_channels_confine_the_continuation() {
        let c = ctx();
        let p = parse_process(&c, "a?[x]. x!(1). b!(2). 0").unwrap();
        let Err(TypingError::InputScope { var, others, .. }) = infer(&c, &p) else {
            panic!("expected a scope error")
        };
        assert_eq!(var, "x");
        assert_eq!(others, "b");
    }

    #[test]
    fn delegation_composes_onto_the_delegated_channel() {
        let c = ctx();
        let inf = env_of(&c, "a![b: ?Int.1]. b!(3). 0");
        assert_eq!(c.pretty(inf.env["a"]), "![?Int.1].1");
        assert_eq!(c.pretty(inf.env["b"]), "?Int.1 | !Int.1");
        let p = parse_process(&c, "a![b]. 0").unwrap();
        assert!(matches!(infer(&c, &p), Err(TypingError::MissingAnnotation { .. })));
    }

    #[test]
    fn restrictions_check_completeness() {
        let c = ctx();
        let r = typecheck(
            &c,
            &parse_process(&c, "new a. (a!(2). 0 | a?(x: Int). 0)").unwrap(),
            TypingMode::Strict,
        );
        assert_eq!(r.status, Status::WellTyped);
        let r = typecheck(
            &c,
            &parse_process(&c, "new a. (a!(2). 0 | a?(x: Bool). 0)").unwrap(),
            TypingMode::Strict,
        );
        assert_eq!(r.status, Status::Rejected);
        assert!(r.checks.iter().any(|k| matches!(k.outcome, Outcome::Fails { .. })));
    }

    #[test]
    fn unviable_free_channels_are_flagged() {
        let c = ctx();
        let src = "new c. a![c: 1]. 0 | a?[x]. x!(3). 0";
        let r = typecheck(&c, &parse_process(&c, src).unwrap(), TypingMode::Strict);
        assert_eq!(r.status, Status::Rejected);
        let bad = r
            .checks
            .iter()
            .find(|k| k.subject == "free channel a")
            .expect("a viability check for a");
        assert!(matches!(bad.outcome, Outcome::Fails { .. }), "{bad:?}");
    }

    #[test]
    fn annotated_replication_defers_to_the_declared_invariant() {
        let c = ctx();
        let src = "*{a: rec X. (1 (+) ?[?Int.!Bool.1].X)} a?[x]. x?(n: Int). x!(isprime(n)). 0";
        let p = parse_process(&c, src).unwrap();
        let strict = typecheck(&c, &p, TypingMode::Strict);
        assert_eq!(strict.status, Status::Rejected);
        assert!(strict.undecided);
        let lax = typecheck(&c, &p, TypingMode::Permissive);
        assert_eq!(lax.status, Status::WellTypedWithWarnings);
        // the one-copy check holds; only self-replication stays open
        let one_copy = lax
            .checks
            .iter()
            .find(|k| k.subject == "replication annotation on a")
            .unwrap();
        assert_eq!(one_copy.outcome, Outcome::Holds);
        let split = lax.checks.iter().find(|k| k.subject == "replication on a").unwrap();
        assert!(matches!(split.outcome, Outcome::Undecided { .. }));
    }

    #[test]
    fn unannotated_replication_requires_self_replicability() {
        let c = ctx();
        let r = typecheck(
            &c,
            &parse_process(&c, "* a?(x: Int). 0").unwrap(),
            TypingMode::Strict,
        );
        assert_eq!(r.status, Status::Rejected);
        let split = r.checks.iter().find(|k| k.subject == "replication on a").unwrap();
        assert!(matches!(split.outcome, Outcome::Fails { .. }));
    }

    #[test]
    fn received_channel_annotations_are_compared_to_use() {
        let c = ctx();
        // declared below the inferred use: fine (and decidable here)
        let src = "a?[x: ?Int.1 (+) ?Bool.1]. x?(n: Int). 0 + a?[x: ?Int.1 (+) ?Bool.1]. x?(b: Bool). 0";
        let inf = env_of(&c, src);
        let ann = parse_type(&c, "?Int.1 (+) ?Bool.1").unwrap();
        let expect = c.ext([
            c.prefix(Action::InCh(ann), c.done()),
            c.prefix(Action::InCh(ann), c.done()),
        ]);
        assert!(sem_eq(&c, inf.env["a"], expect));
        for k in &inf.checks {
            assert_eq!(k.outcome, Outcome::Holds, "{k:?}");
        }
    }

    #[test]
    fn restriction_types_are_recorded_in_order() {
        let c = ctx();
        let inf = env_of(&c, "new a. new b. (a!(1). 0 | a?(x: Int). b!(2). 0 | b?(y: Int). 0)");
        let names: Vec<&str> = inf.restrictions.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["b", "a"]);
    }
}
