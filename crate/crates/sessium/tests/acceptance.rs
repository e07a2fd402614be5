//! End-to-end acceptance gate.
//!
//! Each test exercises one observable guarantee of the toolchain, from the
//! completion analysis up through the typechecker, the replay harnesses, and
//! the command-line binary. Every test prints a single `criterion N … PASS`
//! line on success (visible with `--nocapture`); on failure the line carries
//! the collected mismatches.

use std::time::{Duration, Instant};

use sessium::harness::{
    check_laws, check_progress, check_subject_reduction, corpus_process, corpus_types, simulate,
    SimOutcome, Strategy, CORPUS,
};
use sessium::parser::{parse_process, parse_type};
use sessium::process::free_names;
use sessium::relations::{equivalent, sem_eq, strong_subsession, subsession, Verdict};
use sessium::semantics::is_complete;
use sessium::typing::{infer, typecheck, Outcome, Status, TypingMode};
use sessium::{Bound, Ctx, TypeId, Universe};

fn ctx() -> Ctx {
    Ctx::new(Universe::default_universe())
}

fn ty(c: &Ctx, src: &str) -> TypeId {
    parse_type(c, src).unwrap_or_else(|e| panic!("type `{src}` must parse: {e}"))
}

fn bound4() -> Bound {
    Bound { depth: 4, width: 2 }
}

/// Prints the per-criterion verdict line and fails the test on any mismatch.
fn conclude(number: u32, label: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("criterion {number} ({label}): PASS");
    } else {
        println!(
            "criterion {number} ({label}): FAIL\n  - {}",
            failures.join("\n  - ")
        );
        panic!("criterion {number} ({label}) failed: {}", failures.join("; "));
    }
}

// The channel types of the two-buyer purchase example, as established by
// hand: the book channel carries the full title/price/address/date exchange,
// the contribution channel carries the price share and then the tail of the
// book session.
const BOOK_SESSION: &str = "?String.!Int.?Address.!Date.1";
const BOOK_TAIL: &str = "!Address.?Date.1";

#[test]
fn criterion_1_completion_analysis_matches_hand_verdicts() {
    let c = ctx();
    let a = format!("?[{BOOK_SESSION}].1 | ![{BOOK_SESSION}].1");
    let b = format!("?[?Int.?[{BOOK_TAIL}].1].1 | ![?Int.?[{BOOK_TAIL}].1].1");
    let ch = format!("{BOOK_SESSION} | !String.?Int.!Address.?Date.1");
    let d = format!("?Int.?[{BOOK_TAIL}].1 | !Int.![{BOOK_TAIL}].1");
    let cases: &[(&str, bool)] = &[
        ("1", true),
        ("?Int.1 | !Real.1", false),
        ("rec X.?Int.X | rec Y.!Int.Y", false),
        ("(1 + ?Int.1) | (1 (+) !Int.1)", true),
        (&a, true),
        (&b, true),
        (&ch, true),
        (&d, true),
    ];
    let mut failures = Vec::new();
    for (src, want) in cases {
        let t = ty(&c, src);
        let start = Instant::now();
        let got = is_complete(&c, t);
        let spent = start.elapsed();
        match got {
            Ok(v) if v == *want => {
                if spent >= Duration::from_secs(1) {
                    failures.push(format!("{src}: correct verdict but took {spent:?}"));
                }
            }
            Ok(v) => failures.push(format!("{src}: classified {v}, expected {want}")),
            Err(e) => failures.push(format!("{src}: analysis gave up: {e}")),
        }
    }
    conclude(1, "completion analysis", failures);
}

#[test]
fn criterion_2_refinement_laws_and_witnesses() {
    let c = ctx();
    let b = bound4();
    let mut failures = Vec::new();

    let v = strong_subsession(&c, ty(&c, "?Int.1 (+) !Bool.1"), ty(&c, "?Int.1"), b);
    if !v.is_yes() {
        failures.push(format!(
            "an internal choice must refine to either branch: got {}",
            v.summary()
        ));
    }

    let v = subsession(&c, ty(&c, "!Real.1"), ty(&c, "!Int.1"), b);
    if !v.is_yes() {
        failures.push(format!(
            "narrowing an output from Real to Int must refine: got {}",
            v.summary()
        ));
    }

    // Widening an external choice of inputs is *not* a strong refinement,
    // and the refutation must surface the classic two-branch tester.
    let v = strong_subsession(&c, ty(&c, "?Int.1"), ty(&c, "?Int.1 + ?Bool.1"), b);
    match &v {
        Verdict::No { witness } => match &witness.tester {
            Some(tester) => {
                let found = ty(&c, tester);
                let expected = ty(&c, "!Int.1 + !Bool.0");
                if found != expected {
                    failures.push(format!(
                        "input-widening refuted, but with tester {tester} instead of !Int.1 + !Bool.0"
                    ));
                }
            }
            None => failures.push("input-widening refuted without a tester".into()),
        },
        other => failures.push(format!(
            "input-widening must be refuted: got {}",
            other.summary()
        )),
    }

    let v = strong_subsession(&c, ty(&c, "0"), ty(&c, "!Int.0"), b);
    if !v.is_no() {
        failures.push(format!(
            "the failed type must not strongly refine to a doomed output: got {}",
            v.summary()
        ));
    }

    let v = equivalent(
        &c,
        ty(&c, "?Int.!Bool.1 + ?Int.1"),
        ty(&c, "?Int.(!Bool.1 (+) 1)"),
        b,
        true,
    );
    if !v.is_yes() {
        failures.push(format!(
            "merging equal inputs into an internal choice must be provably equivalent: got {}",
            v.summary()
        ));
    }

    conclude(2, "refinement laws", failures);
}

#[test]
fn criterion_3_interleaving_outputs_not_refuted() {
    let c = ctx();
    let mut failures = Vec::new();
    let l = ty(&c, "!Int.1 | !Bool.1");
    let r = ty(&c, "!Int.!Bool.1 + !Bool.!Int.1");
    for (name, a, b) in [("parallel vs sequenced", l, r), ("sequenced vs parallel", r, l)] {
        let v = subsession(&c, a, b, bound4());
        if v.is_no() {
            failures.push(format!("{name} was refuted: {}", v.summary()));
        }
    }
    conclude(3, "interleaving against sequencing stays open", failures);
}

#[test]
fn criterion_4_law_suite_finds_no_contradictions() {
    let c = ctx();
    let seeds = corpus_types(&c).len();
    let report = check_laws(&c, 0, seeds + 1000, Bound { depth: 2, width: 2 });
    let mut failures = Vec::new();
    if report.terms < seeds + 1000 {
        failures.push(format!(
            "pool too small: {} terms ({} seeded)",
            report.terms, seeds
        ));
    }
    for contradiction in &report.contradictions {
        failures.push(format!("contradiction: {contradiction}"));
    }
    if failures.is_empty() {
        println!(
            "criterion 4 detail: {} terms, {} checks, {} undecided, 0 contradictions",
            report.terms, report.checks, report.undecided
        );
    }
    conclude(4, "cross-check of the decision procedures", failures);
}

/// The expected projections of the purchase example: the session the opening
/// channel carries, and the private channels' two- resp. three-party splits.
#[test]
fn criterion_5_typechecker_verdicts_on_the_corpus() {
    let c = ctx();
    let b = bound4();
    let mut failures = Vec::new();

    // -- two-buyer purchase: well typed, with the four known channel types.
    let p = corpus_process(&c, "seller_buyers").unwrap();
    let report = typecheck(&c, &p, TypingMode::Strict);
    if report.status != Status::WellTyped {
        failures.push(format!("seller_buyers: expected WellTyped, got {:?}", report.status));
    } else {
        let mut expect_env = vec![
            ("a", format!("?[{BOOK_SESSION}].1 | ![{BOOK_SESSION}].1")),
            ("b", format!("?[?Int.?[{BOOK_TAIL}].1].1 | ![?Int.?[{BOOK_TAIL}].1].1")),
        ];
        for (name, want) in expect_env.drain(..) {
            match report.session_env.get(name) {
                Some(&got) => {
                    let v = equivalent(&c, got, ty(&c, &want), b, false);
                    if v.is_no() {
                        failures.push(format!(
                            "seller_buyers {name}: inferred {} differs from {want}",
                            c.pretty(got)
                        ));
                    }
                }
                None => failures.push(format!("seller_buyers: no projection onto {name}")),
            }
        }
        let expect_restr = vec![
            ("c", format!("{BOOK_SESSION} | !String.?Int.!Address.?Date.1")),
            ("d", format!("?Int.?[{BOOK_TAIL}].1 | !Int.![{BOOK_TAIL}].1")),
        ];
        for (name, want) in expect_restr {
            match report.restrictions.iter().find(|(n, _)| n == name) {
                Some(&(_, got)) => {
                    let v = equivalent(&c, got, ty(&c, &want), b, false);
                    if v.is_no() {
                        failures.push(format!(
                            "seller_buyers restriction {name}: inferred {} differs from {want}",
                            c.pretty(got)
                        ));
                    }
                }
                None => failures.push(format!("seller_buyers: no restriction {name}")),
            }
        }
    }

    // -- primality testing with an audience: the opening channel splits
    // four ways, one per participant.
    let p = corpus_process(&c, "multiparty_primality").unwrap();
    let report = typecheck(&c, &p, TypingMode::Strict);
    if report.status != Status::WellTyped {
        failures.push(format!(
            "multiparty_primality: expected WellTyped, got {:?}",
            report.status
        ));
    } else {
        let session = "?Int.(!Bool.1 + ?'abort'.1)";
        let want = format!("?[{session}].1 | ?[{session}].1 | ![{session}].1 | ![{session}].1");
        match report.restrictions.iter().find(|(n, _)| n == "a") {
            Some(&(_, got)) => {
                let v = equivalent(&c, got, ty(&c, &want), b, false);
                if v.is_no() {
                    failures.push(format!(
                        "multiparty_primality a: inferred {} differs from the four-way split",
                        c.pretty(got)
                    ));
                }
            }
            None => failures.push("multiparty_primality: no restriction a".into()),
        }
    }

    // -- delegating a finished session: rejected because the opening
    // channel's projection is not viable.
    let p = corpus_process(&c, "nonviable_delegation").unwrap();
    let report = typecheck(&c, &p, TypingMode::Strict);
    if report.status != Status::Rejected {
        failures.push(format!(
            "nonviable_delegation: expected Rejected, got {:?}",
            report.status
        ));
    } else {
        let flagged = report.checks.iter().any(|ck| {
            ck.subject.contains("a") && matches!(ck.outcome, Outcome::Fails { .. })
        });
        if !flagged {
            failures.push("nonviable_delegation: no failing check names channel a".into());
        }
    }

    // -- a choice whose branches listen on different channels: rejected
    // with a shape error before any analysis runs.
    let p = corpus_process(&c, "mixed_subject_choice").unwrap();
    let report = typecheck(&c, &p, TypingMode::Strict);
    if report.status != Status::Rejected {
        failures.push(format!(
            "mixed_subject_choice: expected Rejected, got {:?}",
            report.status
        ));
    }
    match &report.error {
        Some(msg) if msg.contains("external choice") => {}
        other => failures.push(format!(
            "mixed_subject_choice: expected an external-choice shape error, got {other:?}"
        )),
    }

    // -- double delegation: the sender alone projects the delegated channel
    // into two outputs plus the receiving tail, and the full system jams
    // after exactly two silent steps.
    let sender = parse_process(
        &c,
        "a![c: !Int.1]. a![c: !Bool.1]. c?(x: Int). c?(y: Bool). 0",
    )
    .unwrap();
    match infer(&c, &sender) {
        Ok(inf) => match inf.env.get("c") {
            Some(&got) => {
                let want = ty(&c, "!Int.1 | !Bool.1 | ?Int.?Bool.1");
                if !sem_eq(&c, got, want) {
                    failures.push(format!(
                        "double_delegation sender: c projected to {}, expected !Int.1 | !Bool.1 | ?Int.?Bool.1",
                        c.pretty(got)
                    ));
                }
            }
            None => failures.push("double_delegation sender: no projection onto c".into()),
        },
        Err(e) => failures.push(format!("double_delegation sender does not infer: {e}")),
    }
    let p = corpus_process(&c, "double_delegation").unwrap();
    let sim = simulate(&c, &p, 1000, 0);
    if sim.outcome != SimOutcome::Stuck || sim.steps != 2 {
        failures.push(format!(
            "double_delegation: expected Stuck after 2 steps, got {:?} after {}",
            sim.outcome, sim.steps
        ));
    }

    // -- well-typed on each channel separately, yet jammed from the start.
    let p = corpus_process(&c, "cross_channel_deadlock").unwrap();
    let report = typecheck(&c, &p, TypingMode::Strict);
    if report.status != Status::WellTyped {
        failures.push(format!(
            "cross_channel_deadlock: expected WellTyped, got {:?}",
            report.status
        ));
    }
    let sim = simulate(&c, &p, 1000, 0);
    if sim.outcome != SimOutcome::Stuck || sim.steps != 0 {
        failures.push(format!(
            "cross_channel_deadlock: expected Stuck after 0 steps, got {:?} after {}",
            sim.outcome, sim.steps
        ));
    }

    // -- replicated server: accepted with exactly one open question, the
    // self-replication obligation; every other side condition holds.
    let p = corpus_process(&c, "persistent_server").unwrap();
    let report = typecheck(&c, &p, TypingMode::Permissive);
    if report.status != Status::WellTypedWithWarnings {
        failures.push(format!(
            "persistent_server: expected WellTypedWithWarnings, got {:?}",
            report.status
        ));
    } else {
        let undecided: Vec<_> = report
            .checks
            .iter()
            .filter(|ck| matches!(ck.outcome, Outcome::Undecided { .. }))
            .collect();
        let failing = report
            .checks
            .iter()
            .filter(|ck| matches!(ck.outcome, Outcome::Fails { .. }))
            .count();
        if failing > 0 {
            failures.push(format!("persistent_server: {failing} checks fail outright"));
        }
        match undecided.as_slice() {
            [only] if only.requirement.contains("two copies of itself") => {}
            other => failures.push(format!(
                "persistent_server: expected exactly the self-replication check undecided, got {:?}",
                other
                    .iter()
                    .map(|ck| ck.requirement.as_str())
                    .collect::<Vec<_>>()
            )),
        }
    }

    conclude(5, "typechecker verdicts on the corpus", failures);
}

#[test]
fn criterion_6_every_silent_step_preserves_typing() {
    let c = ctx();
    let mut failures = Vec::new();
    for name in ["seller_buyers", "multiparty_primality"] {
        let p = corpus_process(&c, name).unwrap();
        let report = check_subject_reduction(&c, &p, Strategy::Exhaustive { cap: 20_000 });
        if !report.applicable {
            failures.push(format!("{name}: replay did not run"));
            continue;
        }
        if report.truncated {
            failures.push(format!("{name}: exploration truncated"));
        }
        if report.states == 0 {
            failures.push(format!("{name}: no states explored"));
        }
        for v in &report.violations {
            failures.push(format!("{name}: {v}"));
        }
        if failures.is_empty() {
            println!(
                "criterion 6 detail: {name}: {} states, {} transitions, {} undecided comparisons",
                report.states, report.transitions, report.undecided
            );
        }
    }
    conclude(6, "typing preserved along every silent step", failures);
}

#[test]
fn criterion_7_ready_complete_states_can_always_move() {
    let c = ctx();
    let mut failures = Vec::new();
    let mut pairs = 0usize;
    for (name, _) in CORPUS {
        let p = corpus_process(&c, name).unwrap();
        for channel in free_names(&p) {
            pairs += 1;
            let report = check_progress(&c, &p, &channel, Strategy::Exhaustive { cap: 20_000 });
            if report.truncated {
                failures.push(format!("{name}/{channel}: exploration truncated"));
            }
            for v in &report.violations {
                failures.push(format!("{name}/{channel}: {v}"));
            }
            if *name == "mixed_subject_choice" {
                // This one must be reported as out of scope — its root fails
                // the typing precondition — rather than as a counterexample.
                let typing_holds = report
                    .root_preconditions
                    .iter()
                    .any(|(what, how)| what == "the process types" && how == "holds");
                if typing_holds {
                    failures.push(format!(
                        "{name}/{channel}: typing precondition unexpectedly holds"
                    ));
                }
            }
        }
    }
    if pairs == 0 {
        failures.push("no channel/configuration pairs were checked".into());
    }
    if failures.is_empty() {
        println!("criterion 7 detail: {pairs} configuration/channel pairs replayed");
    }
    conclude(7, "movement wherever the progress preconditions hold", failures);
}

#[test]
fn criterion_8_repeated_runs_are_byte_identical() {
    let exe = env!("CARGO_BIN_EXE_sessium");
    let seller = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/seller_buyers.pi");
    let invocations: &[&[&str]] = &[
        &["corpus", "--format", "structured"],
        &[
            "sub",
            "?Int.1",
            "?Int.1 + ?Bool.1",
            "--strong",
            "--format",
            "structured",
        ],
        &["simulate", seller, "--seed", "3", "--format", "structured"],
        &["laws", "--count", "40", "--bound", "2,2", "--format", "structured"],
    ];
    let mut failures = Vec::new();
    for args in invocations {
        let run = || {
            std::process::Command::new(exe)
                .args(*args)
                .output()
                .unwrap_or_else(|e| panic!("running {exe} {args:?}: {e}"))
        };
        let first = run();
        let second = run();
        if first.stdout != second.stdout {
            failures.push(format!("{args:?}: stdout differs between runs"));
        }
        if first.status.code() != second.status.code() {
            failures.push(format!(
                "{args:?}: exit codes differ ({:?} vs {:?})",
                first.status.code(),
                second.status.code()
            ));
        }
        if first.stdout.is_empty() {
            failures.push(format!("{args:?}: produced no output"));
        }
    }
    conclude(8, "byte-identical structured output across runs", failures);
}
