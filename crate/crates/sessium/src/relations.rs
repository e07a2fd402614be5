//! Decision procedures for the behavioural relations on session types.
//!
//! The central notions are *completion* (a composition in which success
//! stays reachable from every internally reachable state, decided exactly by
//! [`crate::semantics::is_complete`]), *viability* (some tester completes the
//! term), the *weak preorder* (every tester completing the left side
//! completes the right side), and the *strong preorder* (the weak preorder
//! under every external-choice context).
//!
//! The weak and strong preorders quantify over all testers, so they are not
//! decided outright. Queries return a three-valued [`Verdict`]:
//!
//! * `Yes` comes from a small proof engine whose rules are each sound for
//!   the relation they conclude; the evidence lists the steps used.
//! * `No` comes with a concrete tester (and context, for the strong
//!   relation) that completes the left side but not the right; every
//!   refutation is found by actually running the completeness check, so a
//!   `No` is self-certifying.
//! * `Unknown` means neither side was settled within the search bound.
//!
//! Raising the bound can only turn `Unknown` into `Yes` or `No`, never flip
//! a definite answer.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::semantics::{self, internal_graph, is_complete};
use crate::types::{Action, Bound, Ctx, Stats, TypeId, TypeNode};
use crate::universe::BasicTypeExpr;

/// Engine recursion limit; structural rules rarely nest this deep.
const PROOF_DEPTH: u32 = 48;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Yes { evidence: Vec<String> },
    No { witness: Witness },
    Unknown { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    /// External-choice context under which the refutation happens, if the
    /// query involved one.
    pub context: Option<String>,
    /// The tester that completes the left side but not the right.
    pub tester: Option<String>,
    pub note: String,
}

impl Verdict {
    pub fn yes(line: impl Into<String>) -> Verdict {
        Verdict::Yes { evidence: vec![line.into()] }
    }

    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes { .. })
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Verdict::No { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown { .. })
    }

    pub fn answer(&self) -> &'static str {
        match self {
            Verdict::Yes { .. } => "yes",
            Verdict::No { .. } => "no",
            Verdict::Unknown { .. } => "unknown",
        }
    }

    /// One-line rendering for the text output.
    pub fn summary(&self) -> String {
        match self {
            Verdict::Yes { evidence } => match evidence.last() {
                Some(e) => format!("yes ({e})"),
                None => "yes".into(),
            },
            Verdict::No { witness } => {
                let mut s = String::from("no (");
                if let Some(cx) = &witness.context {
                    s.push_str(&format!("context {cx}, "));
                }
                if let Some(t) = &witness.tester {
                    s.push_str(&format!("tester {t}: "));
                }
                s.push_str(&witness.note);
                s.push(')');
                s
            }
            Verdict::Unknown { reason } => format!("unknown ({reason})"),
        }
    }
}

// ---- normal forms and semantic equality ----

/// Removes inert subterms: a value prefix over a type with an empty
/// denotation has no transitions at all, so it is interchangeable with `0`.
pub(crate) fn norm(ctx: &Ctx, t: TypeId) -> TypeId {
    if let Some(&hit) = ctx.caches.norm.lock().unwrap().get(&t) {
        return hit;
    }
    let out = match ctx.node(t) {
        TypeNode::Fail | TypeNode::Done | TypeNode::Var(_) => t,
        TypeNode::Prefix(a, c) => match a {
            Action::InVal(bt) | Action::OutVal(bt)
                if ctx.universe.denote(&bt).is_empty() =>
            {
                ctx.fail()
            }
            Action::InCh(p) => ctx.prefix(Action::InCh(norm(ctx, p)), norm(ctx, c)),
            Action::OutCh(p) => ctx.prefix(Action::OutCh(norm(ctx, p)), norm(ctx, c)),
            a => ctx.prefix(a, norm(ctx, c)),
        },
        TypeNode::Ext(cs) => ctx.ext(cs.iter().map(|&c| norm(ctx, c)).collect::<Vec<_>>()),
        TypeNode::Int(cs) => {
            ctx.int_choice(cs.iter().map(|&c| norm(ctx, c)).collect::<Vec<_>>())
        }
        TypeNode::Par(cs) => ctx.par(cs.iter().map(|&c| norm(ctx, c)).collect::<Vec<_>>()),
        TypeNode::Rec(b) => ctx.rec(norm(ctx, b)),
    };
    ctx.caches.norm.lock().unwrap().insert(t, out);
    out
}

/// Equality of the transition systems the two terms denote, up to unfolding
/// of recursion, the unit and flattening laws already applied by the
/// constructors, and removal of inert subterms. Sound but not complete: a
/// `false` only means this procedure could not identify them.
pub fn sem_eq(ctx: &Ctx, a: TypeId, b: TypeId) -> bool {
    if a == b {
        return true;
    }
    let key = (a.min(b), a.max(b));
    if let Some(&hit) = ctx.caches.sem_eq.lock().unwrap().get(&key) {
        return hit;
    }
    let mut assumed = HashSet::new();
    let r = eq_rec(ctx, norm(ctx, a), norm(ctx, b), &mut assumed);
    ctx.caches.sem_eq.lock().unwrap().insert(key, r);
    r
}

fn eq_rec(ctx: &Ctx, a: TypeId, b: TypeId, assumed: &mut HashSet<(TypeId, TypeId)>) -> bool {
    if a == b {
        return true;
    }
    // Assume the pair equal while checking its unfoldings; a cycle back to
    // the same pair closes the argument.
    if !assumed.insert((a.min(b), a.max(b))) {
        return true;
    }
    let ea = ctx.expose(a);
    let eb = ctx.expose(b);
    if ea == eb {
        return true;
    }
    match (ctx.node(ea), ctx.node(eb)) {
        (TypeNode::Fail, TypeNode::Fail) | (TypeNode::Done, TypeNode::Done) => true,
        (TypeNode::Prefix(x, c1), TypeNode::Prefix(y, c2)) => {
            action_eq(ctx, &x, &y, assumed) && eq_rec(ctx, c1, c2, assumed)
        }
        (TypeNode::Ext(xs), TypeNode::Ext(ys))
        | (TypeNode::Int(xs), TypeNode::Int(ys))
        | (TypeNode::Par(xs), TypeNode::Par(ys))
            if xs.len() == ys.len() =>
        {
            match_multiset(ctx, &xs, &ys, assumed)
        }
        _ => false,
    }
}

fn action_eq(ctx: &Ctx, x: &Action, y: &Action, assumed: &mut HashSet<(TypeId, TypeId)>) -> bool {
    match (x, y) {
        (Action::InVal(a), Action::InVal(b)) | (Action::OutVal(a), Action::OutVal(b)) => {
            ctx.universe.denote(a) == ctx.universe.denote(b)
        }
        (Action::OutCommit(a), Action::OutCommit(b)) => a == b,
        (Action::InCh(p), Action::InCh(q)) | (Action::OutCh(p), Action::OutCh(q)) => {
            eq_rec(ctx, *p, *q, assumed)
        }
        _ => false,
    }
}

fn match_multiset(
    ctx: &Ctx,
    xs: &[TypeId],
    ys: &[TypeId],
    assumed: &mut HashSet<(TypeId, TypeId)>,
) -> bool {
    if xs.is_empty() {
        return ys.is_empty();
    }
    let x = xs[0];
    for (j, &y) in ys.iter().enumerate() {
        // Failed attempts must not leave assumptions behind.
        let mut trial = assumed.clone();
        if eq_rec(ctx, x, y, &mut trial) {
            let mut rest: Vec<TypeId> = ys.to_vec();
            rest.remove(j);
            if match_multiset(ctx, &xs[1..], &rest, &mut trial) {
                *assumed = trial;
                return true;
            }
        }
    }
    false
}

// ---- syntactic duals ----

/// The mirror image of a term: inputs become outputs and vice versa, and a
/// committed output becomes an input of exactly its cell. With
/// `swap_choices` the two kinds of choice are exchanged too, which yields a
/// tester that follows wherever the original decides to go. `0` maps to `1`
/// so that refused branches end in an indifferent tester.
pub fn dual(ctx: &Ctx, t: TypeId, swap_choices: bool) -> TypeId {
    if let Some(&hit) = ctx.caches.dual.lock().unwrap().get(&(t, swap_choices)) {
        return hit;
    }
    let out = match ctx.node(t) {
        TypeNode::Fail | TypeNode::Done => ctx.done(),
        TypeNode::Var(k) => ctx.var(k),
        TypeNode::Rec(b) => ctx.rec(dual(ctx, b, swap_choices)),
        TypeNode::Prefix(a, c) => {
            let a = match a {
                Action::InVal(bt) => Action::OutVal(bt),
                Action::OutVal(bt) => Action::InVal(bt),
                Action::OutCommit(cell) => Action::InVal(BasicTypeExpr::Cell(cell)),
                Action::InCh(p) => Action::OutCh(p),
                Action::OutCh(p) => Action::InCh(p),
            };
            ctx.prefix(a, dual(ctx, c, swap_choices))
        }
        TypeNode::Ext(cs) => {
            let ds: Vec<TypeId> = cs.iter().map(|&c| dual(ctx, c, swap_choices)).collect();
            if swap_choices {
                ctx.int_choice(ds)
            } else {
                ctx.ext(ds)
            }
        }
        TypeNode::Int(cs) => {
            let ds: Vec<TypeId> = cs.iter().map(|&c| dual(ctx, c, swap_choices)).collect();
            if swap_choices {
                ctx.ext(ds)
            } else {
                ctx.int_choice(ds)
            }
        }
        TypeNode::Par(cs) => {
            ctx.par(cs.iter().map(|&c| dual(ctx, c, swap_choices)).collect::<Vec<_>>())
        }
    };
    ctx.caches
        .dual
        .lock()
        .unwrap()
        .insert((t, swap_choices), out);
    out
}

// ---- tester enumeration ----

struct Alphabet {
    vals: Vec<BasicTypeExpr>,
    payloads: Vec<TypeId>,
}

fn collect_alphabet(ctx: &Ctx, roots: &[TypeId]) -> Alphabet {
    let mut vals: Vec<BasicTypeExpr> = Vec::new();
    let mut val_denos: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut payloads: Vec<TypeId> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut stack: Vec<TypeId> = roots.to_vec();
    while let Some(t) = stack.pop() {
        if !seen.insert(t) {
            continue;
        }
        match ctx.node(t) {
            TypeNode::Prefix(a, c) => {
                match a {
                    Action::InVal(bt) | Action::OutVal(bt) => {
                        let cells: Vec<usize> =
                            ctx.universe.denote(&bt).into_iter().collect();
                        if !cells.is_empty() && val_denos.insert(cells) {
                            vals.push(bt);
                        }
                    }
                    Action::OutCommit(cell) => {
                        if val_denos.insert(vec![cell]) {
                            vals.push(BasicTypeExpr::Cell(cell));
                        }
                    }
                    Action::InCh(p) | Action::OutCh(p) => payloads.push(p),
                }
                stack.push(c);
            }
            TypeNode::Ext(cs) | TypeNode::Int(cs) | TypeNode::Par(cs) => {
                stack.extend(cs.iter().copied())
            }
            TypeNode::Rec(b) => stack.push(b),
            TypeNode::Fail | TypeNode::Done | TypeNode::Var(_) => {}
        }
    }
    // Testers may need to hand over a matching channel or accept one.
    let extra: Vec<TypeId> = payloads
        .iter()
        .flat_map(|&p| [dual(ctx, p, false), dual(ctx, p, true)])
        .collect();
    payloads.extend(extra);
    payloads.sort();
    payloads.dedup();
    vals.sort_by_key(|bt| ctx.universe.denote(bt).into_iter().collect::<Vec<_>>());
    Alphabet { vals, payloads }
}

/// Candidate testers over the alphabet of `roots`, graded by the number of
/// communication prefixes, deterministically ordered, capped at `cap`.
fn enumerate_testers(ctx: &Ctx, roots: &[TypeId], bound: Bound, cap: usize) -> Vec<TypeId> {
    let alpha = collect_alphabet(ctx, roots);
    let mut actions: Vec<Action> = Vec::new();
    for bt in &alpha.vals {
        actions.push(Action::OutVal(bt.clone()));
        actions.push(Action::InVal(bt.clone()));
    }
    for &p in &alpha.payloads {
        actions.push(Action::OutCh(p));
        actions.push(Action::InCh(p));
    }
    let mut seen: HashSet<TypeId> = HashSet::new();
    let mut out: Vec<TypeId> = Vec::new();
    let mut sizes: Vec<Vec<TypeId>> = Vec::new();
    let atoms = vec![ctx.done(), ctx.fail()];
    for &a in &atoms {
        if seen.insert(a) {
            out.push(a);
        }
    }
    sizes.push(atoms);
    for n in 1..=(bound.depth as usize) {
        if out.len() >= cap {
            break;
        }
        let mut level: Vec<TypeId> = Vec::new();
        // one more prefix on top of anything smaller
        for a in &actions {
            for &t in &sizes[n - 1] {
                let cand = ctx.prefix(a.clone(), t);
                if seen.insert(cand) {
                    level.push(cand);
                    out.push(cand);
                }
                if out.len() >= cap {
                    break;
                }
            }
            if out.len() >= cap {
                break;
            }
        }
        // binary choices whose branch grades add up to n; the grade-n branch
        // may be one of the prefixed terms built just above (wider choices
        // arise by flattening nested ones). Balanced splits come first so
        // that small two-sided choices are tried before pairings of an atom
        // with one deep chain.
        let prefixed = level.clone();
        for i in (0..n).rev() {
            let j = n - i;
            let right: Vec<TypeId> =
                if j < sizes.len() { sizes[j].clone() } else { prefixed.clone() };
            for &x in &sizes[i].clone() {
                for &y in &right {
                    for cand in [ctx.ext([x, y]), ctx.int_choice([x, y])] {
                        if seen.insert(cand) {
                            level.push(cand);
                            out.push(cand);
                        }
                    }
                    if out.len() >= cap {
                        break;
                    }
                }
                if out.len() >= cap {
                    break;
                }
            }
            if out.len() >= cap {
                break;
            }
        }
        sizes.push(level);
    }
    out.truncate(cap);
    out
}

// ---- viability ----

/// Is there any tester that completes the term?
///
/// `No` is certified by a doomed state: a state reachable through internal
/// moves alone from which no sequence of moves, even with a maximally
/// cooperative environment, reaches a success-enabled state. `Yes` is
/// certified by a concrete completing tester.
pub fn viability(ctx: &Ctx, t: TypeId, bound: Bound) -> Verdict {
    let key = (ctx.expose(norm(ctx, t)), bound.key());
    if let Some(hit) = ctx.caches.viability.lock().unwrap().get(&key) {
        return hit.clone();
    }
    let v = viability_inner(ctx, key.0, bound);
    ctx.caches.viability.lock().unwrap().insert(key, v.clone());
    v
}

fn viability_inner(ctx: &Ctx, t: TypeId, bound: Bound) -> Verdict {
    Stats::bump(&ctx.stats.relation_queries);
    match semantics::build_graph(ctx, t, true) {
        Ok(g) => {
            let rescue = semantics::backward_closure(&g, &g.check, true);
            let doomed = semantics::internal_reachable(&g)
                .into_iter()
                .find(|n| !rescue.contains(n));
            if let Some(bad) = doomed {
                return Verdict::No {
                    witness: Witness {
                        context: None,
                        tester: None,
                        note: format!(
                            "internal moves alone reach {}, from which no environment can recover success",
                            ctx.pretty(bad)
                        ),
                    },
                };
            }
        }
        Err(e) => {
            return Verdict::Unknown { reason: e.to_string() };
        }
    }
    let mut saw_undecided = false;
    let mut tried = 0usize;
    let mut candidates: Vec<TypeId> =
        vec![ctx.done(), dual(ctx, t, false), dual(ctx, t, true)];
    candidates.extend(enumerate_testers(ctx, &[t], bound, bound.tester_cap()));
    let mut seen = HashSet::new();
    for sigma in candidates {
        if !seen.insert(sigma) {
            continue;
        }
        tried += 1;
        Stats::bump(&ctx.stats.testers_tried);
        match is_complete(ctx, ctx.par([t, sigma])) {
            Ok(true) => {
                return Verdict::Yes {
                    evidence: vec![format!(
                        "tester {} completes the composition",
                        ctx.pretty(sigma)
                    )],
                };
            }
            Ok(false) => {}
            Err(_) => saw_undecided = true,
        }
    }
    let reason = if saw_undecided {
        format!("no completing tester among {tried} candidates; some compositions were undecidable at this bound")
    } else {
        format!("no completing tester among {tried} candidates at depth {}", bound.depth)
    };
    Verdict::Unknown { reason }
}

// ---- the positive proof engine ----

#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
enum Mode {
    /// The weak preorder: preservation of completion under every tester.
    Preceq,
    /// The strong preorder: the weak one under every choice context.
    Ssub,
}

impl Mode {
    fn key(self) -> u8 {
        match self {
            Mode::Preceq => 0,
            Mode::Ssub => 1,
        }
    }
}

fn ext_components(ctx: &Ctx, t: TypeId) -> Vec<TypeId> {
    match ctx.node(ctx.expose(t)) {
        TypeNode::Ext(cs) => cs.to_vec(),
        _ => vec![t],
    }
}

fn par_components(ctx: &Ctx, t: TypeId) -> Vec<TypeId> {
    match ctx.node(ctx.expose(t)) {
        TypeNode::Par(cs) => cs.to_vec(),
        _ => vec![t],
    }
}

/// Tries every pairing of `ls` against `rs` (equal lengths), returning the
/// first permutation under which all obligations hold.
fn match_pairs(
    ls: &[TypeId],
    rs: &[TypeId],
    mut obligation: impl FnMut(TypeId, TypeId) -> Option<Vec<String>>,
) -> Option<Vec<String>> {
    fn go(
        ls: &[TypeId],
        rs: &mut Vec<TypeId>,
        used: &mut Vec<bool>,
        acc: &mut Vec<String>,
        obligation: &mut dyn FnMut(TypeId, TypeId) -> Option<Vec<String>>,
    ) -> bool {
        let Some((&l, rest)) = ls.split_first() else { return true };
        for j in 0..rs.len() {
            if used[j] {
                continue;
            }
            if let Some(ev) = obligation(l, rs[j]) {
                used[j] = true;
                let mark = acc.len();
                acc.extend(ev);
                if go(rest, rs, used, acc, obligation) {
                    return true;
                }
                acc.truncate(mark);
                used[j] = false;
            }
        }
        false
    }
    if ls.len() != rs.len() || ls.len() > 6 {
        return None;
    }
    let mut rs = rs.to_vec();
    let mut used = vec![false; rs.len()];
    let mut acc = Vec::new();
    if go(ls, &mut rs, &mut used, &mut acc, &mut obligation) {
        Some(acc)
    } else {
        None
    }
}

/// Merges external-choice branches that input the same value type into one
/// branch with an internal choice of continuations; the receiver cannot tell
/// them apart, so the two forms are interchangeable.
fn merge_equal_inputs(ctx: &Ctx, t: TypeId) -> Option<TypeId> {
    let TypeNode::Ext(cs) = ctx.node(ctx.expose(t)) else { return None };
    let mut groups: Vec<(Vec<usize>, Vec<TypeId>, BasicTypeExpr)> = Vec::new();
    let mut rest: Vec<TypeId> = Vec::new();
    for &c in cs.iter() {
        match ctx.node(ctx.expose(c)) {
            TypeNode::Prefix(Action::InVal(bt), cont) => {
                let cells: Vec<usize> = ctx.universe.denote(&bt).into_iter().collect();
                match groups.iter_mut().find(|(g, _, _)| *g == cells) {
                    Some((_, conts, _)) => conts.push(cont),
                    None => groups.push((cells, vec![cont], bt)),
                }
            }
            _ => rest.push(c),
        }
    }
    if groups.iter().all(|(_, conts, _)| conts.len() < 2) {
        return None;
    }
    for (_, conts, bt) in groups {
        rest.push(ctx.prefix(Action::InVal(bt), ctx.int_choice(conts)));
    }
    Some(ctx.ext(rest))
}

/// The proof search. Returns evidence lines on success, `None` when no rule
/// applies. Every rule is sound for its mode; the search is inductive, so a
/// cycle in the obligations simply fails.
fn prove(
    ctx: &Ctx,
    l: TypeId,
    r: TypeId,
    mode: Mode,
    bound: Bound,
    depth: u32,
    seen: &mut Vec<(TypeId, TypeId, Mode)>,
) -> Option<Vec<String>> {
    let l = norm(ctx, l);
    let r = norm(ctx, r);
    if sem_eq(ctx, l, r) {
        return Some(vec![format!(
            "{} and {} are equal up to unfolding and unit laws",
            ctx.pretty(l),
            ctx.pretty(r)
        )]);
    }
    if let Some(hit) = ctx.caches.prove.lock().unwrap().get(&(l, r, mode.key())) {
        return hit.clone();
    }
    if depth == 0 || seen.contains(&(l, r, mode)) {
        return None;
    }
    seen.push((l, r, mode));
    let result = prove_rules(ctx, l, r, mode, bound, depth, seen);
    seen.pop();
    if result.is_some() {
        ctx.caches
            .prove
            .lock()
            .unwrap()
            .insert((l, r, mode.key()), result.clone());
    }
    result
}

fn prove_rules(
    ctx: &Ctx,
    l: TypeId,
    r: TypeId,
    mode: Mode,
    bound: Bound,
    depth: u32,
    seen: &mut Vec<(TypeId, TypeId, Mode)>,
) -> Option<Vec<String>> {
    let el = ctx.expose(l);
    let er = ctx.expose(r);

    // The right side is an internal reduct of the left: whatever completes
    // the left must keep succeeding from all its internal futures.
    if let Ok(g) = internal_graph(ctx, l) {
        if g.nodes.iter().any(|&n| sem_eq(ctx, n, r)) && l != r {
            return Some(vec![format!(
                "{} reaches {} by internal moves alone",
                ctx.pretty(l),
                ctx.pretty(r)
            )]);
        }
    }

    // Left side only adds an immediate-stop branch to a complete right side.
    if let TypeNode::Ext(cs) = ctx.node(el) {
        if let Some(pos) = cs.iter().position(|&c| ctx.expose(c) == ctx.done()) {
            let mut restv: Vec<TypeId> = cs.to_vec();
            restv.remove(pos);
            let rest = ctx.ext(restv);
            if sem_eq(ctx, rest, r) && is_complete(ctx, r) == Ok(true) {
                return Some(vec![format!(
                    "{} only adds an immediate-stop option to {}, which is complete",
                    ctx.pretty(l),
                    ctx.pretty(r)
                )]);
            }
        }
    }

    // An internal choice on the left may commit to any branch.
    if let TypeNode::Int(ms) = ctx.node(el) {
        for &m in ms.iter() {
            if let Some(mut ev) = prove(ctx, m, r, mode, bound, depth - 1, seen) {
                ev.push(format!(
                    "an internal choice may commit to {}",
                    ctx.pretty(m)
                ));
                return Some(ev);
            }
        }
    }

    // An internal choice on the right must be below on every branch.
    if let TypeNode::Int(ns) = ctx.node(er) {
        let mut acc = Vec::new();
        let mut ok = true;
        for &n in ns.iter() {
            match prove(ctx, l, n, mode, bound, depth - 1, seen) {
                Some(ev) => acc.extend(ev),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            acc.push("holds against every branch of the internal choice".into());
            return Some(acc);
        }
    }

    match mode {
        Mode::Preceq => {
            // Prefix congruence. Inputs must offer the same cells; an output
            // may narrow its type on the right.
            if let (TypeNode::Prefix(al, cl), TypeNode::Prefix(ar, cr)) =
                (ctx.node(el), ctx.node(er))
            {
                let compatible = match (&al, &ar) {
                    (Action::InVal(a), Action::InVal(b)) => {
                        ctx.universe.denote(a) == ctx.universe.denote(b)
                    }
                    (Action::OutVal(a), Action::OutVal(b)) => {
                        let (da, db) = (ctx.universe.denote(a), ctx.universe.denote(b));
                        !db.is_empty() && db.is_subset(&da)
                    }
                    (Action::OutCommit(a), Action::OutCommit(b)) => a == b,
                    (Action::InCh(p), Action::InCh(q))
                    | (Action::OutCh(p), Action::OutCh(q)) => sem_eq(ctx, *p, *q),
                    _ => false,
                };
                if compatible {
                    if let Some(mut ev) = prove(ctx, cl, cr, mode, bound, depth - 1, seen) {
                        ev.push(format!(
                            "matching prefixes {} and {}",
                            ctx.pretty_action(&al),
                            ctx.pretty_action(&ar)
                        ));
                        return Some(ev);
                    }
                }
            }

            // Componentwise comparison of parallel compositions, padding the
            // shorter side with `1`.
            let (mut ls, mut rs) = (par_components(ctx, l), par_components(ctx, r));
            if ls.len().max(rs.len()) > 1 {
                while ls.len() < rs.len() {
                    ls.push(ctx.done());
                }
                while rs.len() < ls.len() {
                    rs.push(ctx.done());
                }
                if let Some(mut ev) = match_pairs(&ls, &rs, |a, b| {
                    prove(ctx, a, b, Mode::Preceq, bound, depth - 1, seen)
                }) {
                    ev.push("componentwise across the parallel composition".into());
                    return Some(ev);
                }
            }

            // Nothing completes an unviable left side.
            if viability(ctx, l, bound).is_no() {
                return Some(vec![format!(
                    "no tester completes {}, so the requirement is vacuous",
                    ctx.pretty(l)
                )]);
            }
        }
        Mode::Ssub => {
            // Branchwise comparison of external choices, padding the shorter
            // side with `0`: extra branches on the left must be refusable.
            let (mut ls, mut rs) = (ext_components(ctx, l), ext_components(ctx, r));
            if ls.len() + rs.len() > 2 {
                while ls.len() < rs.len() {
                    ls.push(ctx.fail());
                }
                while rs.len() < ls.len() {
                    rs.push(ctx.fail());
                }
                if let Some(mut ev) = match_pairs(&ls, &rs, |a, b| {
                    prove(ctx, a, b, Mode::Ssub, bound, depth - 1, seen)
                }) {
                    ev.push("branchwise across the external choice".into());
                    return Some(ev);
                }
            }

            // An unviable term sits below the failed session.
            if sem_eq(ctx, r, ctx.fail()) && viability(ctx, l, bound).is_no() {
                return Some(vec![format!(
                    "{} is not viable, hence interchangeable with 0 in any choice",
                    ctx.pretty(l)
                )]);
            }

            // Lifting: a viable term that is weakly below is strongly below.
            if viability(ctx, l, bound).is_yes() {
                if let Some(mut ev) = prove(ctx, l, r, Mode::Preceq, bound, depth - 1, seen) {
                    ev.push(format!(
                        "{} is viable, so the weak relation lifts to every choice context",
                        ctx.pretty(l)
                    ));
                    return Some(ev);
                }
            }
        }
    }

    // Rewriting either side by merging equal-typed input branches.
    if let Some(l2) = merge_equal_inputs(ctx, l) {
        if let Some(mut ev) = prove(ctx, l2, r, mode, bound, depth - 1, seen) {
            ev.push("after merging equal-typed input branches on the left".into());
            return Some(ev);
        }
    }
    if let Some(r2) = merge_equal_inputs(ctx, r) {
        if let Some(mut ev) = prove(ctx, l, r2, mode, bound, depth - 1, seen) {
            ev.push("after merging equal-typed input branches on the right".into());
            return Some(ev);
        }
    }

    None
}

// ---- refutation search ----

fn tester_candidates(ctx: &Ctx, l: TypeId, r: TypeId, bound: Bound, cap: usize) -> Vec<TypeId> {
    let mut cands = vec![
        ctx.done(),
        dual(ctx, l, false),
        dual(ctx, l, true),
        dual(ctx, r, false),
        dual(ctx, r, true),
    ];
    cands.extend(enumerate_testers(ctx, &[l, r], bound, cap));
    let mut seen = HashSet::new();
    cands.retain(|&t| seen.insert(t));
    cands
}

/// Searches for a tester completing `l` but not `r`. Also reports whether
/// any candidate ran into an undecidable side condition.
fn refute_preceq(ctx: &Ctx, l: TypeId, r: TypeId, bound: Bound, cap: usize) -> (Option<TypeId>, bool) {
    let mut saw = false;
    for sigma in tester_candidates(ctx, l, r, bound, cap) {
        Stats::bump(&ctx.stats.testers_tried);
        match is_complete(ctx, ctx.par([l, sigma])) {
            Ok(true) => {}
            Ok(false) => continue,
            Err(_) => {
                saw = true;
                continue;
            }
        }
        match is_complete(ctx, ctx.par([r, sigma])) {
            Ok(false) => return (Some(sigma), saw),
            Ok(true) => {}
            Err(_) => saw = true,
        }
    }
    (None, saw)
}

fn cached_relation(
    ctx: &Ctx,
    op: u8,
    l: TypeId,
    r: TypeId,
    bound: Bound,
    compute: impl FnOnce() -> Verdict,
) -> Verdict {
    let key = (op, l, r, bound.key());
    if let Some(hit) = ctx.caches.relation.lock().unwrap().get(&key) {
        return hit.clone();
    }
    let v = compute();
    ctx.caches.relation.lock().unwrap().insert(key, v.clone());
    v
}

/// The weak preorder: every tester that completes `l` also completes `r`.
pub fn subsession(ctx: &Ctx, l: TypeId, r: TypeId, bound: Bound) -> Verdict {
    cached_relation(ctx, 0, l, r, bound, || {
        Stats::bump(&ctx.stats.relation_queries);
        if let Some(ev) = prove(ctx, l, r, Mode::Preceq, bound, PROOF_DEPTH, &mut Vec::new()) {
            return Verdict::Yes { evidence: ev };
        }
        let (found, saw) = refute_preceq(ctx, l, r, bound, bound.tester_cap());
        match found {
            Some(sigma) => Verdict::No {
                witness: Witness {
                    context: None,
                    tester: Some(ctx.pretty(sigma)),
                    note: "completes the left side but not the right".into(),
                },
            },
            None => Verdict::Unknown {
                reason: unknown_reason(saw, bound),
            },
        }
    })
}

/// The strong preorder: the weak preorder under every external-choice
/// context.
pub fn strong_subsession(ctx: &Ctx, l: TypeId, r: TypeId, bound: Bound) -> Verdict {
    cached_relation(ctx, 1, l, r, bound, || {
        Stats::bump(&ctx.stats.relation_queries);
        if let Some(ev) = prove(ctx, l, r, Mode::Ssub, bound, PROOF_DEPTH, &mut Vec::new()) {
            return Verdict::Yes { evidence: ev };
        }
        let mut saw = false;
        let mut contexts = vec![ctx.fail()];
        contexts.extend(enumerate_testers(ctx, &[l, r], bound, bound.context_cap()));
        let mut seen = HashSet::new();
        for rho in contexts {
            if !seen.insert(rho) {
                continue;
            }
            let lc = ctx.ext([l, rho]);
            let rc = ctx.ext([r, rho]);
            let (found, s) = refute_preceq(ctx, lc, rc, bound, bound.per_context_cap());
            saw |= s;
            if let Some(sigma) = found {
                return Verdict::No {
                    witness: Witness {
                        context: Some(ctx.pretty(rho)),
                        tester: Some(ctx.pretty(sigma)),
                        note: "under this context the tester completes the left side but not the right".into(),
                    },
                };
            }
        }
        Verdict::Unknown {
            reason: unknown_reason(saw, bound),
        }
    })
}

fn unknown_reason(saw_undecided: bool, bound: Bound) -> String {
    if saw_undecided {
        format!(
            "not settled at depth {} (some compositions hit undecidable side conditions)",
            bound.depth
        )
    } else {
        format!("not settled at depth {}, width {}", bound.depth, bound.width)
    }
}

/// Mutual refinement, weak or strong.
pub fn equivalent(ctx: &Ctx, l: TypeId, r: TypeId, bound: Bound, strong: bool) -> Verdict {
    let run = if strong { strong_subsession } else { subsession };
    let fwd = run(ctx, l, r, bound);
    if let Verdict::No { witness } = fwd {
        return Verdict::No {
            witness: Witness {
                note: format!("left is not below right: {}", witness.note),
                ..witness
            },
        };
    }
    let back = run(ctx, r, l, bound);
    if let Verdict::No { witness } = back {
        return Verdict::No {
            witness: Witness {
                note: format!("right is not below left: {}", witness.note),
                ..witness
            },
        };
    }
    match (fwd, back) {
        (Verdict::Yes { evidence: mut a }, Verdict::Yes { evidence: b }) => {
            a.extend(b);
            Verdict::Yes { evidence: a }
        }
        (Verdict::Unknown { reason }, _) | (_, Verdict::Unknown { reason }) => {
            Verdict::Unknown { reason }
        }
        _ => unreachable!("no-cases returned above"),
    }
}

/// Decides the weak preorder definitely or not at all; used as the side
/// condition when a delegation meets an input. Recursion is well-founded
/// because the queried terms sit strictly lower in payload nesting than the
/// composition being stepped.
pub fn preceq_definite(ctx: &Ctx, l: TypeId, r: TypeId) -> Option<bool> {
    if sem_eq(ctx, l, r) {
        return Some(true);
    }
    let bound = ctx.default_bound;
    let v = cached_relation(ctx, 3, l, r, bound, || {
        if let Some(ev) = prove(ctx, l, r, Mode::Preceq, bound, PROOF_DEPTH, &mut Vec::new()) {
            return Verdict::Yes { evidence: ev };
        }
        if viability(ctx, l, bound).is_no() {
            return Verdict::Yes {
                evidence: vec!["left side is not viable".into()],
            };
        }
        if viability(ctx, l, bound).is_yes() {
            let (found, _) = refute_preceq(ctx, l, r, bound, bound.tester_cap());
            if let Some(sigma) = found {
                return Verdict::No {
                    witness: Witness {
                        context: None,
                        tester: Some(ctx.pretty(sigma)),
                        note: "completes the left side but not the right".into(),
                    },
                };
            }
        }
        Verdict::Unknown {
            reason: "side condition not settled".into(),
        }
    });
    match v {
        Verdict::Yes { .. } => Some(true),
        Verdict::No { .. } => Some(false),
        Verdict::Unknown { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_type;
    use crate::universe::Universe;

    fn ctx() -> Ctx {
        Ctx::new(Universe::default_universe())
    }

    fn t(c: &Ctx, s: &str) -> TypeId {
        parse_type(c, s).unwrap()
    }

    fn b() -> Bound {
        Bound::default()
    }

    #[test]
    fn semantic_equality_handles_unfolding_and_inert_prefixes() {
        let c = ctx();
        let a = t(&c, "rec X. ?Int.X");
        assert!(sem_eq(&c, a, c.unfold(a)));
        assert!(sem_eq(&c, t(&c, "?empty.1"), c.fail()));
        assert!(sem_eq(&c, t(&c, "?Int.1 | ?empty.0"), t(&c, "?Int.1 | 0")));
        assert!(!sem_eq(&c, t(&c, "!Int.0"), c.fail()));
        assert!(!sem_eq(&c, t(&c, "?Int.1"), t(&c, "?Bool.1")));
    }

    #[test]
    fn duals_mirror_actions() {
        let c = ctx();
        let d = dual(&c, t(&c, "?Int.!Bool.1"), false);
        assert_eq!(c.pretty(d), "!Int.?Bool.1");
        // choice-swapping dual follows an internal chooser
        let s = dual(&c, t(&c, "rec X. (1 (+) ?[?Int.1].X)"), true);
        assert_eq!(c.pretty(s), "rec X. (1 + ![?Int.1].X)");
        // plain dual of 0 is an indifferent tester
        assert_eq!(dual(&c, c.fail(), false), c.done());
    }

    #[test]
    fn viability_accepts_simple_protocols() {
        let c = ctx();
        assert!(viability(&c, t(&c, "1"), b()).is_yes());
        assert!(viability(&c, t(&c, "?Int.1"), b()).is_yes());
        assert!(viability(&c, t(&c, "?String.!Int.?Address.!Date.1"), b()).is_yes());
    }

    #[test]
    fn viability_rejects_doomed_terms() {
        let c = ctx();
        assert!(viability(&c, t(&c, "0"), b()).is_no());
        assert!(viability(&c, t(&c, "?Int.0"), b()).is_no());
        // a failed delegation handover dooms the composition
        assert!(viability(&c, t(&c, "![1].1 | ?[!Int.1].1"), b()).is_no());
    }

    #[test]
    fn viability_of_a_recursive_chooser_needs_a_following_tester() {
        let c = ctx();
        // The term may delegate arbitrarily many channels before stopping;
        // only a tester that follows its choices forever completes it.
        let s = t(&c, "rec X. (1 (+) ?[?Int.1].X)");
        let v = viability(&c, s, b());
        assert!(v.is_yes(), "{v:?}");
    }

    #[test]
    fn weak_preorder_basics() {
        let c = ctx();
        assert!(subsession(&c, t(&c, "?Int.1"), t(&c, "?Int.1"), b()).is_yes());
        // an unviable left side is below everything
        assert!(subsession(&c, t(&c, "0"), t(&c, "!Int.1"), b()).is_yes());
        assert!(subsession(&c, t(&c, "?Int.0"), t(&c, "1"), b()).is_yes());
        // output types may shrink on the right
        assert!(subsession(&c, t(&c, "!Real.1"), t(&c, "!Int.1"), b()).is_yes());
    }

    #[test]
    fn internal_reducts_are_above() {
        let c = ctx();
        assert!(subsession(&c, t(&c, "?Int.1 (+) ?Bool.1"), t(&c, "?Int.1"), b()).is_yes());
        assert!(subsession(&c, t(&c, "!Int.1 | ?Int.1"), t(&c, "1"), b()).is_yes());
    }

    #[test]
    fn widening_an_external_choice_is_refuted() {
        let c = ctx();
        let v = subsession(&c, t(&c, "?Int.1"), t(&c, "?Int.1 + ?Bool.1"), b());
        let Verdict::No { witness } = &v else { panic!("expected a refutation, got {v:?}") };
        assert!(witness.tester.is_some());
    }

    #[test]
    fn strong_preorder_distinguishes_zero_from_an_output() {
        let c = ctx();
        // weakly, 0 is below everything
        assert!(subsession(&c, t(&c, "0"), t(&c, "!Int.0"), b()).is_yes());
        // strongly it is not: a context can use the branch
        let v = strong_subsession(&c, t(&c, "0"), t(&c, "!Int.0"), b());
        let Verdict::No { witness } = &v else { panic!("expected a refutation, got {v:?}") };
        assert!(witness.context.is_some());
    }

    #[test]
    fn completion_is_adding_a_stop_option_strongly_below() {
        let c = ctx();
        // complete term: adding an immediate stop changes nothing
        let eta = t(&c, "!Int.1 | ?Int.1");
        let one_plus = c.ext([c.done(), eta]);
        assert!(strong_subsession(&c, one_plus, eta, b()).is_yes());
        // incomplete term: the stop option is observable
        let theta = t(&c, "?Int.1");
        let one_plus = c.ext([c.done(), theta]);
        assert!(strong_subsession(&c, one_plus, theta, b()).is_no());
    }

    #[test]
    fn unannotated_replication_obligation_fails_for_a_plain_input() {
        let c = ctx();
        let eta = t(&c, "?Int.1");
        let v = strong_subsession(&c, eta, c.par([eta, eta]), b());
        let Verdict::No { witness } = &v else { panic!("expected a refutation, got {v:?}") };
        assert_eq!(witness.context.as_deref(), Some("0"));
    }

    #[test]
    fn recursive_chooser_is_strongly_below_one_round() {
        let c = ctx();
        let s = t(&c, "rec X. (1 (+) ?[?Int.1].X)");
        let one_round = t(&c, "?[?Int.1].1");
        let v = strong_subsession(&c, s, one_round, b());
        assert!(v.is_yes(), "{v:?}");
        // self-replicability of the same term stays open at this bound
        let v = strong_subsession(&c, s, c.par([s, s]), b());
        assert!(v.is_unknown(), "{v:?}");
    }

    #[test]
    fn interleaving_against_sequencing_stays_open() {
        let c = ctx();
        let l = t(&c, "!Int.1 | !Bool.1");
        let r = t(&c, "!Int.!Bool.1 + !Bool.!Int.1");
        assert!(subsession(&c, l, r, b()).is_unknown());
        assert!(subsession(&c, r, l, b()).is_unknown());
    }

    #[test]
    fn weak_equivalence_identifies_all_unviable_terms() {
        let c = ctx();
        let v = equivalent(&c, t(&c, "0"), t(&c, "?Int.0"), b(), false);
        assert!(v.is_yes(), "{v:?}");
        let v = equivalent(&c, t(&c, "0"), t(&c, "?Int.0"), b(), true);
        assert!(v.is_no(), "{v:?}");
    }

    #[test]
    fn delegation_side_conditions_resolve_or_abstain() {
        let c = ctx();
        assert_eq!(preceq_definite(&c, t(&c, "?Int.1"), t(&c, "?Int.1")), Some(true));
        assert_eq!(preceq_definite(&c, t(&c, "1"), t(&c, "!Int.1")), Some(false));
        // behaviourally equal but not provably so at this bound
        let l = t(&c, "!Int.1 | !Bool.1");
        let r = t(&c, "!Int.!Bool.1 + !Bool.!Int.1");
        assert_eq!(preceq_definite(&c, l, r), None);
    }

    #[test]
    fn undecided_side_conditions_surface_as_unknown() {
        let c = ctx();
        let comp = t(
            &c,
            "![!Int.1 | !Bool.1].1 | ?[!Int.!Bool.1 + !Bool.!Int.1].1",
        );
        assert!(is_complete(&c, comp).is_err());
        let v = viability(&c, comp, b());
        assert!(v.is_unknown(), "{v:?}");
    }
}
