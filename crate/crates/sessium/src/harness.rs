//! Replay and law-checking infrastructure.
//!
//! This module exercises the rest of the crate end to end:
//!
//! * [`simulate`] runs a process by its silent transitions only, with a
//!   seeded random scheduler, and classifies how the run ends;
//! * [`check_subject_reduction`] replays a well-typed process and verifies
//!   that every silent step preserves its channel projections;
//! * [`check_progress`] replays a process and verifies that wherever the
//!   per-channel progress property's preconditions hold, the process can
//!   either move or has shed the channel;
//! * [`check_laws`] stress-tests the decision procedures against the
//!   algebraic laws tying viability, completeness and the two refinements
//!   together, over the built-in corpus and a stream of random types;
//! * [`run_corpus`] type-checks every built-in example.
//!
//! All randomness is drawn from a seeded ChaCha stream, so every report
//! here is a pure function of its inputs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::parser::parse_process;
use crate::process::{canon, free_names, is_inactive, ready, tau_steps, Name, Process};
use crate::relations::{strong_subsession, subsession, viability, Verdict};
use crate::semantics::is_complete;
use crate::types::{Bound, Ctx, TypeId};
use crate::typing::{infer, typecheck, Outcome, SessionEnv, Status, TypingMode};
use crate::universe::BasicTypeExpr;

/// The built-in examples, each a self-contained process source.
pub const CORPUS: &[(&str, &str)] = &[
    ("seller_buyers", include_str!("../corpus/seller_buyers.pi")),
    ("persistent_server", include_str!("../corpus/persistent_server.pi")),
    ("multiparty_primality", include_str!("../corpus/multiparty_primality.pi")),
    ("nonviable_delegation", include_str!("../corpus/nonviable_delegation.pi")),
    ("mixed_subject_choice", include_str!("../corpus/mixed_subject_choice.pi")),
    ("double_delegation", include_str!("../corpus/double_delegation.pi")),
    ("cross_channel_deadlock", include_str!("../corpus/cross_channel_deadlock.pi")),
];

/// Looks up and parses a built-in example by name.
pub fn corpus_process(ctx: &Ctx, name: &str) -> Option<Process> {
    let (_, src) = CORPUS.iter().find(|(n, _)| *n == name)?;
    Some(parse_process(ctx, src).expect("built-in examples parse"))
}

// ---------------------------------------------------------------- simulate

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimOutcome {
    /// No silent step is possible and the residual is inactive.
    Success,
    /// No silent step is possible but work remains.
    Stuck,
    /// The step budget ran out first.
    BudgetExhausted,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimReport {
    pub outcome: SimOutcome,
    pub steps: usize,
    /// Canonical form of the state after each step.
    pub trace: Vec<String>,
    pub final_state: String,
}

/// Runs `p` by silent steps only, choosing uniformly among the available
/// successors with a ChaCha stream seeded by `seed`.
pub fn simulate(ctx: &Ctx, p: &Process, steps: usize, seed: u64) -> SimReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = p.clone();
    let mut trace = Vec::new();
    for n in 0..steps {
        let mut succs = tau_steps(ctx, &cur);
        if succs.is_empty() {
            return SimReport {
                outcome: terminal_outcome(ctx, &cur),
                steps: n,
                final_state: canon(ctx, &cur),
                trace,
            };
        }
        let i = rng.gen_range(0..succs.len());
        let (q, key) = succs.swap_remove(i);
        trace.push(key);
        cur = q;
    }
    let outcome = if tau_steps(ctx, &cur).is_empty() {
        terminal_outcome(ctx, &cur)
    } else {
        SimOutcome::BudgetExhausted
    };
    SimReport { outcome, steps, final_state: canon(ctx, &cur), trace }
}

fn terminal_outcome(ctx: &Ctx, p: &Process) -> SimOutcome {
    if is_inactive(ctx, p) {
        SimOutcome::Success
    } else {
        SimOutcome::Stuck
    }
}

// ------------------------------------------------- silent-transition graph

/// Breadth-first exploration of the silent-transition graph, keyed by
/// canonical form. Returns the distinct states (first of which is the
/// root) and the edges between their indices.
fn explore(
    ctx: &Ctx,
    p: &Process,
    cap: usize,
) -> (Vec<Process>, Vec<(usize, usize)>, bool) {
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut states = Vec::new();
    let mut edges = Vec::new();
    let mut queue = VecDeque::new();
    let mut truncated = false;
    index.insert(canon(ctx, p), 0);
    states.push(p.clone());
    queue.push_back(0usize);
    while let Some(i) = queue.pop_front() {
        let here = states[i].clone();
        for (q, key) in tau_steps(ctx, &here) {
            let j = match index.get(&key) {
                Some(&j) => j,
                None => {
                    if states.len() >= cap {
                        truncated = true;
                        continue;
                    }
                    let j = states.len();
                    index.insert(key, j);
                    states.push(q);
                    queue.push_back(j);
                    j
                }
            };
            edges.push((i, j));
        }
    }
    (states, edges, truncated)
}

// --------------------------------------------------- subject reduction

/// How [`check_subject_reduction`] and [`check_progress`] walk the
/// silent-transition graph.
#[derive(Copy, Clone, Debug)]
pub enum Strategy {
    /// One random trajectory of at most `steps` transitions.
    Walk { steps: usize, seed: u64 },
    /// Every reachable state, up to `cap` distinct states.
    Exhaustive { cap: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct SrReport {
    /// False when the process is rejected outright, in which case nothing
    /// was replayed.
    pub applicable: bool,
    pub states: usize,
    pub transitions: usize,
    pub violations: Vec<String>,
    /// Comparisons the bounded prover could not decide either way.
    pub undecided: usize,
    pub truncated: bool,
}

/// Replays the silent transitions of `p` and checks that each step
/// preserves the typing: successors must still infer, their restricted
/// channels must stay complete, and on every channel the type before the
/// step must refine the type after it.
pub fn check_subject_reduction(ctx: &Ctx, p: &Process, strategy: Strategy) -> SrReport {
    let report = typecheck(ctx, p, TypingMode::Permissive);
    if report.status == Status::Rejected {
        return SrReport {
            applicable: false,
            states: 0,
            transitions: 0,
            violations: Vec::new(),
            undecided: 0,
            truncated: false,
        };
    }
    let (states, edges, truncated) = match strategy {
        Strategy::Exhaustive { cap } => explore(ctx, p, cap),
        Strategy::Walk { steps, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut states = vec![p.clone()];
            let mut edges = Vec::new();
            let mut cur = p.clone();
            for n in 0..steps {
                let mut succs = tau_steps(ctx, &cur);
                if succs.is_empty() {
                    break;
                }
                let i = rng.gen_range(0..succs.len());
                let (q, _) = succs.swap_remove(i);
                states.push(q.clone());
                edges.push((n, n + 1));
                cur = q;
            }
            (states, edges, false)
        }
    };
    let mut envs: Vec<Option<SessionEnv>> = vec![None; states.len()];
    let mut violations = Vec::new();
    let mut undecided = 0usize;
    for (i, q) in states.iter().enumerate() {
        match infer(ctx, q) {
            Ok(inf) => {
                for c in &inf.checks {
                    match &c.outcome {
                        Outcome::Fails { detail } => violations.push(format!(
                            "state {i} breaks a side condition ({}): {detail}",
                            c.subject
                        )),
                        Outcome::Undecided { .. } => undecided += 1,
                        Outcome::Holds => {}
                    }
                }
                envs[i] = Some(inf.env);
            }
            Err(e) => violations.push(format!("state {i} no longer types: {e}")),
        }
    }
    for &(i, j) in &edges {
        let (Some(before), Some(after)) = (&envs[i], &envs[j]) else { continue };
        let mut names: BTreeSet<&Name> = before.keys().collect();
        names.extend(after.keys());
        for u in names {
            let l = before.get(u).copied().unwrap_or_else(|| ctx.done());
            let r = after.get(u).copied().unwrap_or_else(|| ctx.done());
            if l == r {
                continue;
            }
            match strong_subsession(ctx, l, r, ctx.default_bound) {
                Verdict::Yes { .. } => {}
                Verdict::No { .. } => violations.push(format!(
                    "step {i} -> {j} breaks the projection on {u}: {} does not refine {}",
                    ctx.pretty(l),
                    ctx.pretty(r)
                )),
                Verdict::Unknown { .. } => undecided += 1,
            }
        }
    }
    SrReport {
        applicable: true,
        states: states.len(),
        transitions: edges.len(),
        violations,
        undecided,
        truncated,
    }
}

// ------------------------------------------------------------- progress

#[derive(Clone, Debug, Serialize)]
pub struct ProgressReport {
    pub channel: String,
    /// The three preconditions evaluated at the root, with outcomes.
    pub root_preconditions: Vec<(String, String)>,
    pub states: usize,
    /// Reachable states where all preconditions hold.
    pub applicable_states: usize,
    pub violations: Vec<String>,
    pub truncated: bool,
}

/// Replays `p` and, at every reachable state where the process is well
/// typed, the projection onto `channel` is complete, and the state is
/// ready on `channel`, verifies that the channel is either gone or a
/// silent step exists.
pub fn check_progress(ctx: &Ctx, p: &Process, channel: &str, strategy: Strategy) -> ProgressReport {
    let (states, _, truncated) = match strategy {
        Strategy::Exhaustive { cap } => explore(ctx, p, cap),
        Strategy::Walk { steps, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut states = vec![p.clone()];
            let mut cur = p.clone();
            for _ in 0..steps {
                let mut succs = tau_steps(ctx, &cur);
                if succs.is_empty() {
                    break;
                }
                let i = rng.gen_range(0..succs.len());
                let (q, _) = succs.swap_remove(i);
                states.push(q.clone());
                cur = q;
            }
            (states, Vec::new(), false)
        }
    };
    let name: Name = channel.to_string();
    let mut root_preconditions = Vec::new();
    let mut applicable_states = 0usize;
    let mut violations = Vec::new();
    for (i, q) in states.iter().enumerate() {
        let (pre, applicable) = progress_preconditions(ctx, q, &name);
        if i == 0 {
            root_preconditions = pre;
        }
        if !applicable {
            continue;
        }
        applicable_states += 1;
        let gone = !free_names(q).contains(&name);
        let can_move = !tau_steps(ctx, q).is_empty();
        if !gone && !can_move {
            violations.push(format!(
                "state {i} is ready on {name} with a complete projection but cannot move: {}",
                canon(ctx, q)
            ));
        }
    }
    ProgressReport {
        channel: channel.to_string(),
        root_preconditions,
        states: states.len(),
        applicable_states,
        violations,
        truncated,
    }
}

fn progress_preconditions(
    ctx: &Ctx,
    q: &Process,
    name: &Name,
) -> (Vec<(String, String)>, bool) {
    let mut pre = Vec::new();
    let mut ok = true;
    let typed = match infer(ctx, q) {
        Ok(inf) => {
            let failed = inf
                .checks
                .iter()
                .any(|c| matches!(c.outcome, Outcome::Fails { .. }));
            if failed {
                ("a side condition fails".to_string(), false)
            } else {
                let proj = inf.env.get(name).copied().unwrap_or_else(|| ctx.done());
                let comp = match is_complete(ctx, proj) {
                    Ok(true) => ("holds".to_string(), true),
                    Ok(false) => ("fails".to_string(), false),
                    Err(e) => (format!("undecided: {e}"), false),
                };
                pre.push((format!("projection onto {name} is complete"), comp.0));
                ok &= comp.1;
                ("holds".to_string(), true)
            }
        }
        Err(e) => (format!("fails: {e}"), false),
    };
    pre.insert(0, ("the process types".to_string(), typed.0));
    ok &= typed.1;
    let rdy = ready(q, name);
    pre.push((
        format!("the process is ready on {name}"),
        if rdy { "holds" } else { "fails" }.to_string(),
    ));
    ok &= rdy;
    (pre, ok)
}

// ------------------------------------------------------------ law suite

#[derive(Clone, Debug, Serialize)]
pub struct LawReport {
    pub terms: usize,
    pub pairs: usize,
    pub checks: usize,
    pub contradictions: Vec<String>,
    /// Instances where at least one verdict was undecided, so the law
    /// could not bite.
    pub undecided: usize,
}

/// Cross-checks the decision procedures against the laws that tie them
/// together, on the corpus projections plus `count` random types:
///
/// * a type is non-viable exactly when it refines the failed type;
/// * a type is complete exactly when adding an immediate-success branch
///   refines it;
/// * the plain refinement holds exactly when the type is unviable or the
///   strong refinement holds.
///
/// Only definite verdicts can contradict; undecided ones are counted.
pub fn check_laws(ctx: &Ctx, seed: u64, count: usize, bound: Bound) -> LawReport {
    let mut pool = corpus_types(ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while pool.len() < count {
        pool.push(random_type(ctx, &mut rng, 8));
    }
    let fail = ctx.fail();
    let done = ctx.done();
    let mut contradictions = Vec::new();
    let mut undecided = 0usize;
    let mut checks = 0usize;
    for &t in &pool {
        // non-viable exactly when below 0
        checks += 1;
        let viab = viability(ctx, t, bound);
        let below_fail = strong_subsession(ctx, t, fail, bound);
        match (&viab, &below_fail) {
            (Verdict::Yes { .. }, Verdict::Yes { .. }) => contradictions.push(format!(
                "{} is viable yet refines 0",
                ctx.pretty(t)
            )),
            (Verdict::No { .. }, Verdict::No { .. }) => contradictions.push(format!(
                "{} is non-viable yet does not refine 0",
                ctx.pretty(t)
            )),
            _ => {
                if viab.is_unknown() || below_fail.is_unknown() {
                    undecided += 1;
                }
            }
        }
        // complete exactly when 1 + t refines t
        checks += 1;
        let widened = ctx.ext([done, t]);
        let law = strong_subsession(ctx, widened, t, bound);
        match (is_complete(ctx, t), &law) {
            (Ok(true), Verdict::No { .. }) => contradictions.push(format!(
                "{} is complete yet 1 + it does not refine it",
                ctx.pretty(t)
            )),
            (Ok(false), Verdict::Yes { .. }) => contradictions.push(format!(
                "{} is incomplete yet 1 + it refines it",
                ctx.pretty(t)
            )),
            (Err(_), _) => undecided += 1,
            _ => {
                if law.is_unknown() {
                    undecided += 1;
                }
            }
        }
    }
    // plain refinement = unviable or strong refinement
    let mut pairs = 0usize;
    for _ in 0..pool.len() {
        let l = pool[rng.gen_range(0..pool.len())];
        let r = pool[rng.gen_range(0..pool.len())];
        pairs += 1;
        checks += 1;
        let plain = subsession(ctx, l, r, bound);
        let bottom = strong_subsession(ctx, l, fail, bound);
        let strong = strong_subsession(ctx, l, r, bound);
        match &plain {
            Verdict::No { .. } => {
                if bottom.is_yes() || strong.is_yes() {
                    contradictions.push(format!(
                        "{} does not plainly refine {} yet {}",
                        ctx.pretty(l),
                        ctx.pretty(r),
                        if bottom.is_yes() { "it refines 0" } else { "it strongly refines it" }
                    ));
                }
            }
            Verdict::Yes { .. } => {
                if bottom.is_no() && strong.is_no() {
                    contradictions.push(format!(
                        "{} plainly refines {} yet neither refines 0 nor strongly refines it",
                        ctx.pretty(l),
                        ctx.pretty(r)
                    ));
                }
            }
            Verdict::Unknown { .. } => undecided += 1,
        }
        if plain.is_no() && (bottom.is_unknown() || strong.is_unknown()) {
            undecided += 1;
        }
    }
    LawReport { terms: pool.len(), pairs, checks, contradictions, undecided }
}

/// Every projection and restriction type inferable from the corpus.
pub fn corpus_types(ctx: &Ctx) -> Vec<TypeId> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (name, _) in CORPUS {
        let p = corpus_process(ctx, name).unwrap();
        if let Ok(inf) = infer(ctx, &p) {
            for &t in inf.env.values() {
                if seen.insert(t) {
                    out.push(t);
                }
            }
            for (_, t) in inf.restrictions {
                if seen.insert(t) {
                    out.push(t);
                }
            }
        }
    }
    out
}

/// A random well-formed type of at most `budget` constructors, built from
/// value actions only, so every recursion is weight-free by construction.
pub fn random_type(ctx: &Ctx, rng: &mut ChaCha8Rng, budget: usize) -> TypeId {
    for _ in 0..64 {
        let t = gen(ctx, rng, &mut budget.clone(), false, 0);
        if ctx.validate(t).is_empty() {
            return t;
        }
    }
    ctx.done()
}

fn gen(ctx: &Ctx, rng: &mut ChaCha8Rng, budget: &mut usize, guarded: bool, recs: u32) -> TypeId {
    if *budget == 0 {
        return leaf(ctx, rng, guarded, recs);
    }
    *budget -= 1;
    match rng.gen_range(0..10u8) {
        0 | 1 => leaf(ctx, rng, guarded, recs),
        2 | 3 | 4 => {
            let bt = basic(ctx, rng);
            let cont = gen(ctx, rng, budget, true, recs);
            if rng.gen_bool(0.5) {
                ctx.in_val(bt, cont)
            } else {
                ctx.out_val(bt, cont)
            }
        }
        5 | 6 => {
            let l = gen(ctx, rng, budget, guarded, recs);
            let r = gen(ctx, rng, budget, guarded, recs);
            ctx.ext([l, r])
        }
        7 => {
            let l = gen(ctx, rng, budget, guarded, recs);
            let r = gen(ctx, rng, budget, guarded, recs);
            ctx.int_choice([l, r])
        }
        8 => {
            let l = gen(ctx, rng, budget, guarded, recs);
            let r = gen(ctx, rng, budget, guarded, recs);
            ctx.par([l, r])
        }
        _ => {
            let body = gen(ctx, rng, budget, false, recs + 1);
            ctx.rec(body)
        }
    }
}

fn leaf(ctx: &Ctx, rng: &mut ChaCha8Rng, guarded: bool, recs: u32) -> TypeId {
    if guarded && recs > 0 && rng.gen_bool(0.3) {
        return ctx.var(rng.gen_range(0..recs));
    }
    if rng.gen_bool(0.15) {
        ctx.fail()
    } else {
        ctx.done()
    }
}

fn basic(ctx: &Ctx, rng: &mut ChaCha8Rng) -> BasicTypeExpr {
    let names: Vec<&String> = ctx.universe.named_types().map(|(n, _)| n).collect();
    BasicTypeExpr::Named(names[rng.gen_range(0..names.len())].clone())
}

// --------------------------------------------------------------- corpus

#[derive(Clone, Debug, Serialize)]
pub struct CorpusOutcome {
    pub name: String,
    pub strict: Status,
    pub permissive: Status,
    pub error: Option<String>,
    pub failed_checks: usize,
    pub undecided_checks: usize,
}

/// Type-checks every built-in example under both modes.
pub fn run_corpus(ctx: &Ctx) -> Vec<CorpusOutcome> {
    CORPUS
        .iter()
        .map(|(name, src)| {
            let p = parse_process(ctx, src).expect("built-in examples parse");
            let strict = typecheck(ctx, &p, TypingMode::Strict);
            let lax = typecheck(ctx, &p, TypingMode::Permissive);
            CorpusOutcome {
                name: name.to_string(),
                strict: strict.status,
                permissive: lax.status,
                error: strict.error,
                failed_checks: lax
                    .checks
                    .iter()
                    .filter(|c| matches!(c.outcome, Outcome::Fails { .. }))
                    .count(),
                undecided_checks: lax
                    .checks
                    .iter()
                    .filter(|c| matches!(c.outcome, Outcome::Undecided { .. }))
                    .count(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_type;
    use crate::relations::sem_eq;
    use crate::universe::Universe;

    fn ctx() -> Ctx {
        Ctx::new(Universe::default_universe())
    }

    fn proc_of(c: &Ctx, name: &str) -> Process {
        corpus_process(c, name).unwrap()
    }

    #[test]
    fn corpus_examples_parse_and_classify() {
        let c = ctx();
        let outcomes = run_corpus(&c);
        let by_name: BTreeMap<&str, &CorpusOutcome> =
            outcomes.iter().map(|o| (o.name.as_str(), o)).collect();
        assert_eq!(by_name["seller_buyers"].strict, Status::WellTyped);
        assert_eq!(by_name["persistent_server"].strict, Status::Rejected);
        assert_eq!(
            by_name["persistent_server"].permissive,
            Status::WellTypedWithWarnings
        );
        assert_eq!(by_name["multiparty_primality"].strict, Status::WellTyped);
        assert_eq!(by_name["nonviable_delegation"].strict, Status::Rejected);
        assert_eq!(by_name["mixed_subject_choice"].strict, Status::Rejected);
        assert_eq!(by_name["double_delegation"].strict, Status::Rejected);
        assert_eq!(by_name["cross_channel_deadlock"].strict, Status::WellTyped);
    }

    #[test]
    fn seller_buyers_runs_to_completion_in_eight_steps() {
        let c = ctx();
        let p = proc_of(&c, "seller_buyers");
        for seed in [0, 1, 7] {
            let r = simulate(&c, &p, 1000, seed);
            assert_eq!(r.outcome, SimOutcome::Success, "seed {seed}: {r:?}");
            assert_eq!(r.steps, 8, "seed {seed}");
        }
    }

    #[test]
    fn seller_buyers_restrictions_take_the_expected_shapes() {
        let c = ctx();
        let inf = infer(&c, &proc_of(&c, "seller_buyers")).unwrap();
        let types: BTreeMap<&str, TypeId> = inf
            .restrictions
            .iter()
            .map(|(n, t)| (n.as_str(), *t))
            .collect();
        let want_c = parse_type(
            &c,
            "?String.!Int.?Address.!Date.1 | !String.?Int.!Address.?Date.1",
        )
        .unwrap();
        let want_d = parse_type(&c, "?Int.?[!Address.?Date.1].1 | !Int.![!Address.?Date.1].1")
            .unwrap();
        assert!(sem_eq(&c, types["c"], want_c), "c: {}", c.pretty(types["c"]));
        assert!(sem_eq(&c, types["d"], want_d), "d: {}", c.pretty(types["d"]));
    }

    #[test]
    fn multiparty_session_always_finishes() {
        let c = ctx();
        let p = proc_of(&c, "multiparty_primality");
        for seed in 0..5 {
            let r = simulate(&c, &p, 1000, seed);
            assert_eq!(r.outcome, SimOutcome::Success, "seed {seed}: {r:?}");
            assert_eq!(r.steps, 6, "seed {seed}");
        }
        let (states, _, truncated) = explore(&c, &p, 5000);
        assert!(!truncated);
        for q in &states {
            if tau_steps(&c, q).is_empty() {
                assert!(is_inactive(&c, q), "stuck state: {}", canon(&c, q));
            }
        }
    }

    #[test]
    fn double_delegation_jams_after_two_handovers() {
        let c = ctx();
        let p = proc_of(&c, "double_delegation");
        let r = simulate(&c, &p, 1000, 0);
        assert_eq!(r.outcome, SimOutcome::Stuck);
        assert_eq!(r.steps, 2);
    }

    #[test]
    fn cross_channel_deadlock_types_but_cannot_move() {
        let c = ctx();
        let p = proc_of(&c, "cross_channel_deadlock");
        let r = simulate(&c, &p, 1000, 0);
        assert_eq!(r.outcome, SimOutcome::Stuck);
        assert_eq!(r.steps, 0);
        let pr = check_progress(&c, &p, "a", Strategy::Exhaustive { cap: 100 });
        assert_eq!(pr.applicable_states, 0, "{pr:?}");
        assert!(pr.violations.is_empty());
        assert!(pr
            .root_preconditions
            .iter()
            .any(|(what, how)| what.contains("ready") && how == "fails"));
    }

    #[test]
    fn subject_reduction_holds_along_the_seller_buyers_session() {
        let c = ctx();
        let p = proc_of(&c, "seller_buyers");
        let r = check_subject_reduction(&c, &p, Strategy::Exhaustive { cap: 5000 });
        assert!(r.applicable);
        assert!(!r.truncated);
        assert_eq!(r.violations, Vec::<String>::new());
        assert_eq!(r.states, 9);
    }

    #[test]
    fn progress_holds_for_the_seller_buyers_opening_channel() {
        let c = ctx();
        let p = proc_of(&c, "seller_buyers");
        let r = check_progress(&c, &p, "a", Strategy::Exhaustive { cap: 5000 });
        assert!(r.applicable_states >= 1, "{r:?}");
        assert!(r.violations.is_empty(), "{:?}", r.violations);
    }

    #[test]
    fn law_suite_small_run_is_clean() {
        let c = ctx();
        let r = check_laws(&c, 0, 60, Bound { depth: 2, width: 2 });
        assert_eq!(r.contradictions, Vec::<String>::new());
        assert!(r.terms >= 60);
    }

    #[test]
    fn random_types_are_well_formed() {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let t = random_type(&c, &mut rng, 8);
            assert!(c.validate(t).is_empty(), "{}", c.pretty(t));
        }
    }
}
