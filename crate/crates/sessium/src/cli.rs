//! Command-line interface.
//!
//! Exit codes are uniform across commands:
//!
//! * `0` — yes / success / well typed (warnings included),
//! * `1` — no / rejected / stuck / violations found,
//! * `2` — usage, parse, or input errors,
//! * `3` — the bounded analysis could not decide, or a budget ran out.
//!
//! With `--format structured` every command prints exactly one JSON
//! document containing the verdict, the command-specific result, and a
//! deterministic cost summary (work counters, never wall-clock time), so
//! identical invocations produce byte-identical output.

use std::path::PathBuf;
use std::sync::atomic::Ordering;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::harness::{
    check_laws, check_progress, check_subject_reduction, run_corpus, simulate, SimOutcome,
    Strategy,
};
use crate::parser::{parse_process, parse_type};
use crate::relations::{equivalent, strong_subsession, subsession, viability, Verdict};
use crate::semantics::{build_graph, is_complete, pretty_label};
use crate::types::{Bound, Ctx, TypeId};
use crate::typing::{typecheck, Status, TypingMode};
use crate::universe::Universe;

#[derive(Parser)]
#[command(
    name = "sessium",
    version,
    about = "Behavioural session analysis for value-passing processes"
)]
struct Cli {
    #[command(flatten)]
    opts: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Universe file (cells, named types, carriers, functions); defaults to
    /// the built-in one
    #[arg(long, global = true, value_name = "FILE")]
    universe: Option<PathBuf>,
    /// Search bound `depth[,width]` for the bounded prover
    #[arg(long, global = true, default_value = "4,2")]
    bound: String,
    /// How undecided side conditions affect type checking
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Strict)]
    mode: ModeArg,
    /// Seed for every randomized command
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Step budget for simulations and random walks
    #[arg(long, global = true, default_value_t = 1000)]
    steps: usize,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = FmtArg::Text)]
    format: FmtArg,
    /// Explore every reachable state instead of one random walk
    #[arg(long, global = true)]
    exhaustive: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Strict,
    Permissive,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FmtArg {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a session type for well-formedness
    Validate { r#type: String },
    /// Print the transition graph of a session type
    Lts {
        r#type: String,
        /// Follow visible transitions too, not only internal ones
        #[arg(long)]
        full: bool,
    },
    /// Decide whether a session type is complete
    Complete { r#type: String },
    /// Decide whether a session type is viable
    Viable { r#type: String },
    /// Decide refinement between two session types
    Sub {
        lhs: String,
        rhs: String,
        /// Decide the choice-context-closed refinement
        #[arg(long)]
        strong: bool,
    },
    /// Decide equivalence between two session types
    Equiv {
        lhs: String,
        rhs: String,
        /// Decide the choice-context-closed equivalence
        #[arg(long)]
        strong: bool,
    },
    /// Type-check a process file
    Typecheck { file: PathBuf },
    /// Run a process file by its silent steps
    Simulate {
        file: PathBuf,
        /// Skip type checking before running
        #[arg(long)]
        unchecked: bool,
    },
    /// Replay a process and verify every silent step preserves its typing
    CheckSr { file: PathBuf },
    /// Replay a process and verify the per-channel progress property
    CheckProgress { file: PathBuf, channel: String },
    /// Type-check every built-in example
    Corpus,
    /// Stress-test the decision procedures against their algebraic laws
    Laws {
        /// Number of types to test
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

struct Out {
    command: &'static str,
    fmt: FmtArg,
    verdict: String,
    lines: Vec<String>,
    result: Json,
    code: i32,
}

/// Writes one line to stdout. When the reader has gone away (`cmd | head`
/// closes the pipe early) this exits with the conventional SIGPIPE status
/// instead of panicking.
fn say(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out
        .write_all(line.as_bytes())
        .and_then(|()| out.write_all(b"\n"))
        .is_err()
    {
        std::process::exit(141);
    }
}

impl Out {
    fn emit(self, ctx: &Ctx) -> i32 {
        match self.fmt {
            FmtArg::Text => {
                say(&format!("verdict: {}", self.verdict));
                for l in self.lines {
                    say(&l);
                }
            }
            FmtArg::Structured => {
                let doc = json!({
                    "command": self.command,
                    "verdict": self.verdict,
                    "result": self.result,
                    "cost": cost(ctx),
                });
                say(&serde_json::to_string_pretty(&doc).unwrap());
            }
        }
        self.code
    }
}

fn cost(ctx: &Ctx) -> Json {
    json!({
        "graphs_built": ctx.stats.graphs_built.load(Ordering::Relaxed),
        "states_built": ctx.stats.states_built.load(Ordering::Relaxed),
        "relation_queries": ctx.stats.relation_queries.load(Ordering::Relaxed),
        "testers_tried": ctx.stats.testers_tried.load(Ordering::Relaxed),
    })
}

fn dispatch(cli: Cli) -> Result<i32, String> {
    let universe = match &cli.opts.universe {
        Some(path) => {
            let src = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            Universe::parse(&src).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => Universe::default_universe(),
    };
    let bound = parse_bound(&cli.opts.bound)?;
    let ctx = Ctx::with_bound(universe, bound);
    let fmt = cli.opts.format;
    let mode = match cli.opts.mode {
        ModeArg::Strict => TypingMode::Strict,
        ModeArg::Permissive => TypingMode::Permissive,
    };
    let strategy = if cli.opts.exhaustive {
        Strategy::Exhaustive { cap: 5000 }
    } else {
        Strategy::Walk { steps: cli.opts.steps, seed: cli.opts.seed }
    };

    let out = match cli.cmd {
        Cmd::Validate { r#type } => {
            let t = parse_ty(&ctx, &r#type)?;
            let violations = ctx.validate(t);
            let rendered: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Out {
                command: "validate",
                fmt,
                verdict: if rendered.is_empty() { "well-formed" } else { "ill-formed" }.into(),
                lines: rendered.clone(),
                result: json!({ "type": ctx.pretty(t), "violations": rendered }),
                code: if violations.is_empty() { 0 } else { 1 },
            }
        }
        Cmd::Lts { r#type, full } => {
            let t = parse_ty(&ctx, &r#type)?;
            match build_graph(&ctx, t, full) {
                Ok(g) => {
                    let mut lines = Vec::new();
                    let mut states = Vec::new();
                    for (i, &n) in g.nodes.iter().enumerate() {
                        let mut edges = Vec::new();
                        for &m in &g.internal[&n] {
                            edges.push(("tau".to_string(), ctx.pretty(m)));
                        }
                        for (l, m) in &g.visible[&n] {
                            edges.push((pretty_label(&ctx, l), ctx.pretty(*m)));
                        }
                        let check = g.check.contains(&n);
                        lines.push(format!(
                            "{i}: {}{}",
                            ctx.pretty(n),
                            if check { "  [check]" } else { "" }
                        ));
                        for (l, m) in &edges {
                            lines.push(format!("   --{l}--> {m}"));
                        }
                        states.push(json!({
                            "state": ctx.pretty(n),
                            "check": check,
                            "edges": edges
                                .iter()
                                .map(|(l, m)| json!({ "label": l, "to": m }))
                                .collect::<Vec<_>>(),
                        }));
                    }
                    Out {
                        command: "lts",
                        fmt,
                        verdict: format!("{} states", g.nodes.len()),
                        lines,
                        result: json!({ "full": full, "states": states }),
                        code: 0,
                    }
                }
                Err(e) => Out {
                    command: "lts",
                    fmt,
                    verdict: "unknown".into(),
                    lines: vec![e.to_string()],
                    result: json!({ "error": e.to_string() }),
                    code: 3,
                },
            }
        }
        Cmd::Complete { r#type } => {
            let t = parse_ty(&ctx, &r#type)?;
            let (verdict, detail, code) = match is_complete(&ctx, t) {
                Ok(true) => ("yes".to_string(), String::new(), 0),
                Ok(false) => ("no".to_string(), String::new(), 1),
                Err(e) => ("unknown".to_string(), e.to_string(), 3),
            };
            Out {
                command: "complete",
                fmt,
                verdict: verdict.clone(),
                lines: if detail.is_empty() { vec![] } else { vec![detail.clone()] },
                result: json!({ "type": ctx.pretty(t), "detail": detail }),
                code,
            }
        }
        Cmd::Viable { r#type } => {
            let t = parse_ty(&ctx, &r#type)?;
            let v = viability(&ctx, t, bound);
            verdict_out("viable", fmt, json!({ "type": ctx.pretty(t) }), v)
        }
        Cmd::Sub { lhs, rhs, strong } => {
            let l = parse_ty(&ctx, &lhs)?;
            let r = parse_ty(&ctx, &rhs)?;
            let v = if strong {
                strong_subsession(&ctx, l, r, bound)
            } else {
                subsession(&ctx, l, r, bound)
            };
            verdict_out(
                "sub",
                fmt,
                json!({ "lhs": ctx.pretty(l), "rhs": ctx.pretty(r), "strong": strong }),
                v,
            )
        }
        Cmd::Equiv { lhs, rhs, strong } => {
            let l = parse_ty(&ctx, &lhs)?;
            let r = parse_ty(&ctx, &rhs)?;
            let v = equivalent(&ctx, l, r, bound, strong);
            verdict_out(
                "equiv",
                fmt,
                json!({ "lhs": ctx.pretty(l), "rhs": ctx.pretty(r), "strong": strong }),
                v,
            )
        }
        Cmd::Typecheck { file } => {
            let p = load_process(&ctx, &file)?;
            let report = typecheck(&ctx, &p, mode);
            let mut lines = Vec::new();
            if let Some(e) = &report.error {
                lines.push(format!("error: {e}"));
            }
            for (u, t) in &report.env {
                lines.push(format!("{u}: {t}"));
            }
            for c in &report.checks {
                lines.push(format!(
                    "check [{}] {} -- {:?}",
                    c.subject, c.requirement, c.outcome
                ));
            }
            let code = match report.status {
                Status::WellTyped | Status::WellTypedWithWarnings => 0,
                Status::Rejected => {
                    if report.undecided {
                        3
                    } else {
                        1
                    }
                }
            };
            Out {
                command: "typecheck",
                fmt,
                verdict: status_str(report.status).into(),
                lines,
                result: serde_json::to_value(&report).unwrap(),
                code,
            }
        }
        Cmd::Simulate { file, unchecked } => {
            let p = load_process(&ctx, &file)?;
            if !unchecked {
                let report = typecheck(&ctx, &p, mode);
                if report.status == Status::Rejected {
                    let code = if report.undecided { 3 } else { 1 };
                    return Ok(Out {
                        command: "simulate",
                        fmt,
                        verdict: "rejected".into(),
                        lines: vec![
                            "the process does not type; pass --unchecked to run it anyway"
                                .into(),
                        ],
                        result: serde_json::to_value(&report).unwrap(),
                        code,
                    }
                    .emit(&ctx));
                }
            }
            let r = simulate(&ctx, &p, cli.opts.steps, cli.opts.seed);
            let verdict = match r.outcome {
                SimOutcome::Success => "success",
                SimOutcome::Stuck => "stuck",
                SimOutcome::BudgetExhausted => "budget-exhausted",
            };
            let code = match r.outcome {
                SimOutcome::Success => 0,
                SimOutcome::Stuck => 1,
                SimOutcome::BudgetExhausted => 3,
            };
            let mut lines = vec![format!("steps: {}", r.steps)];
            for (i, s) in r.trace.iter().enumerate() {
                lines.push(format!("{:>3}. {s}", i + 1));
            }
            lines.push(format!("final: {}", r.final_state));
            Out {
                command: "simulate",
                fmt,
                verdict: verdict.into(),
                lines,
                result: serde_json::to_value(&r).unwrap(),
                code,
            }
        }
        Cmd::CheckSr { file } => {
            let p = load_process(&ctx, &file)?;
            let r = check_subject_reduction(&ctx, &p, strategy);
            let (verdict, code) = if !r.applicable {
                ("inapplicable", 3)
            } else if !r.violations.is_empty() {
                ("violated", 1)
            } else {
                ("preserved", 0)
            };
            let mut lines = vec![format!(
                "states: {}, transitions: {}, undecided comparisons: {}",
                r.states, r.transitions, r.undecided
            )];
            lines.extend(r.violations.iter().cloned());
            Out {
                command: "check-sr",
                fmt,
                verdict: verdict.into(),
                lines,
                result: serde_json::to_value(&r).unwrap(),
                code,
            }
        }
        Cmd::CheckProgress { file, channel } => {
            let p = load_process(&ctx, &file)?;
            let r = check_progress(&ctx, &p, &channel, strategy);
            let (verdict, code) = if !r.violations.is_empty() {
                ("violated", 1)
            } else if r.applicable_states == 0 {
                ("inapplicable", 0)
            } else {
                ("holds", 0)
            };
            let mut lines = Vec::new();
            for (what, how) in &r.root_preconditions {
                lines.push(format!("precondition [{what}]: {how}"));
            }
            lines.push(format!(
                "states: {}, applicable: {}",
                r.states, r.applicable_states
            ));
            lines.extend(r.violations.iter().cloned());
            Out {
                command: "check-progress",
                fmt,
                verdict: verdict.into(),
                lines,
                result: serde_json::to_value(&r).unwrap(),
                code,
            }
        }
        Cmd::Corpus => {
            let outcomes = run_corpus(&ctx);
            let mut lines = Vec::new();
            for o in &outcomes {
                lines.push(format!(
                    "{:<24} strict: {:<26} permissive: {}",
                    o.name,
                    status_str(o.strict),
                    status_str(o.permissive)
                ));
            }
            Out {
                command: "corpus",
                fmt,
                verdict: format!("{} examples", outcomes.len()),
                lines,
                result: serde_json::to_value(&outcomes).unwrap(),
                code: 0,
            }
        }
        Cmd::Laws { count } => {
            let r = check_laws(&ctx, cli.opts.seed, count, bound);
            let (verdict, code) = if r.contradictions.is_empty() {
                ("consistent", 0)
            } else {
                ("contradicted", 1)
            };
            let mut lines = vec![format!(
                "terms: {}, pairs: {}, checks: {}, undecided: {}",
                r.terms, r.pairs, r.checks, r.undecided
            )];
            lines.extend(r.contradictions.iter().cloned());
            Out {
                command: "laws",
                fmt,
                verdict: verdict.into(),
                lines,
                result: serde_json::to_value(&r).unwrap(),
                code,
            }
        }
    };
    Ok(out.emit(&ctx))
}

fn verdict_out(command: &'static str, fmt: FmtArg, params: Json, v: Verdict) -> Out {
    let code = match &v {
        Verdict::Yes { .. } => 0,
        Verdict::No { .. } => 1,
        Verdict::Unknown { .. } => 3,
    };
    let mut result = params;
    result["detail"] = serde_json::to_value(&v).unwrap();
    Out {
        command,
        fmt,
        verdict: v.answer().into(),
        lines: vec![v.summary()],
        result,
        code,
    }
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::WellTyped => "well-typed",
        Status::WellTypedWithWarnings => "well-typed-with-warnings",
        Status::Rejected => "rejected",
    }
}

fn parse_ty(ctx: &Ctx, src: &str) -> Result<TypeId, String> {
    parse_type(ctx, src).map_err(|e| e.to_string())
}

fn load_process(ctx: &Ctx, path: &PathBuf) -> Result<crate::process::Process, String> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_process(ctx, &src).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_bound(src: &str) -> Result<Bound, String> {
    let mut parts = src.split(',');
    let depth: u32 = parts
        .next()
        .unwrap_or_default()
        .trim()
        .parse()
        .map_err(|_| format!("invalid bound {src}; expected depth[,width]"))?;
    let width = match parts.next() {
        Some(w) => w
            .trim()
            .parse()
            .map_err(|_| format!("invalid bound {src}; expected depth[,width]"))?,
        None => 2,
    };
    if parts.next().is_some() {
        return Err(format!("invalid bound {src}; expected depth[,width]"));
    }
    Ok(Bound { depth, width })
}
