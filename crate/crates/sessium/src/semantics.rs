//! Transition semantics of session types.
//!
//! States are canonical terms. Transitions are labelled either `check`
//! (successful termination, enabled exactly on the terms [`has_check`]
//! accepts), a visible communication (a value cell or a delegated session),
//! or are internal. Internal transitions are: commitment of a value output
//! to one cell of its type, resolution of an internal choice, any component
//! move under `+` or `|`, synchronization of a committed output with a
//! matching input, and synchronization of a delegation with an input whose
//! expected session the delegated one refines. A delegation meeting an input
//! it does not refine collapses the communicating pair to `0`.
//!
//! Because terms are hash-consed and every operator is canonicalized, the
//! set of states reachable from a well-formed term is finite; [`build_graph`]
//! materializes it and [`is_complete`] decides whether every internally
//! reachable state can still reach a `check`-enabled one.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::types::{Action, Ctx, Stats, TypeId, TypeNode};
use crate::universe::CellId;

/// Maximum number of states a single graph may hold before the analysis
/// gives up. Canonicalization keeps realistic graphs far below this.
pub const MAX_STATES: usize = 50_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeLabel {
    /// Successful-termination signal.
    Check,
    /// Committed output of a value in the given cell.
    OutCell(CellId),
    /// Input of a value in the given cell.
    InCell(CellId),
    /// Delegation of a channel with the given session.
    OutCh(TypeId),
    /// Reception of a channel with the given session.
    InCh(TypeId),
}

pub fn pretty_label(ctx: &Ctx, l: &TypeLabel) -> String {
    match l {
        TypeLabel::Check => "check".into(),
        TypeLabel::OutCell(c) => format!("!<{}>", ctx.universe.cell_name(*c)),
        TypeLabel::InCell(c) => format!("?<{}>", ctx.universe.cell_name(*c)),
        TypeLabel::OutCh(t) => format!("![{}]", ctx.pretty(*t)),
        TypeLabel::InCh(t) => format!("?[{}]", ctx.pretty(*t)),
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    /// A delegation met an input and the refinement side condition could not
    /// be settled either way within the search bound.
    #[error("undecided side condition: cannot settle whether {lhs} refines {rhs} within the bound")]
    Undecided { lhs: String, rhs: String },
    #[error("state space exceeded {limit} states")]
    StateSpace { limit: usize },
}

/// The outgoing transitions of one state.
#[derive(Clone, Debug, Default)]
pub struct NodeSucc {
    pub check: bool,
    pub internal: Vec<TypeId>,
    pub visible: Vec<(TypeLabel, TypeId)>,
}

/// Whether the term can signal successful termination right now: `1` can,
/// an external choice can if some branch can, a parallel composition can if
/// every component can.
pub fn has_check(ctx: &Ctx, t: TypeId) -> bool {
    match ctx.node(ctx.expose(t)) {
        TypeNode::Done => true,
        TypeNode::Ext(cs) => cs.iter().any(|&c| has_check(ctx, c)),
        TypeNode::Par(cs) => cs.iter().all(|&c| has_check(ctx, c)),
        _ => false,
    }
}

/// Visible transitions only (no `check`).
fn visible_steps(ctx: &Ctx, t: TypeId) -> Vec<(TypeLabel, TypeId)> {
    match ctx.node(ctx.expose(t)) {
        TypeNode::Fail | TypeNode::Done | TypeNode::Int(_) => Vec::new(),
        TypeNode::Var(_) => Vec::new(),
        TypeNode::Rec(_) => unreachable!("expose removed top-level binders"),
        TypeNode::Prefix(a, cont) => match a {
            Action::OutCommit(c) => vec![(TypeLabel::OutCell(c), cont)],
            Action::InVal(bt) => ctx
                .universe
                .denote(&bt)
                .into_iter()
                .map(|c| (TypeLabel::InCell(c), cont))
                .collect(),
            Action::InCh(p) => vec![(TypeLabel::InCh(p), cont)],
            Action::OutCh(p) => vec![(TypeLabel::OutCh(p), cont)],
            // An uncommitted output has no visible action yet.
            Action::OutVal(_) => Vec::new(),
        },
        TypeNode::Ext(cs) => {
            // A visible action resolves the choice in favour of its branch.
            let mut out = Vec::new();
            for &c in cs.iter() {
                out.extend(visible_steps(ctx, c));
            }
            out
        }
        TypeNode::Par(cs) => {
            let mut out = Vec::new();
            for (i, &c) in cs.iter().enumerate() {
                for (l, t2) in visible_steps(ctx, c) {
                    let mut parts: Vec<TypeId> = cs.to_vec();
                    parts[i] = t2;
                    out.push((l, ctx.par(parts)));
                }
            }
            out
        }
    }
}

/// Internal transitions. Fails when a delegation side condition cannot be
/// decided within the context's default bound.
fn internal_steps(ctx: &Ctx, t: TypeId) -> Result<Vec<TypeId>, AnalysisError> {
    match ctx.node(ctx.expose(t)) {
        TypeNode::Fail | TypeNode::Done | TypeNode::Var(_) => Ok(Vec::new()),
        TypeNode::Rec(_) => unreachable!("expose removed top-level binders"),
        TypeNode::Prefix(a, cont) => match a {
            // Committing to one cell of the value type.
            Action::OutVal(bt) => Ok(ctx
                .universe
                .denote(&bt)
                .into_iter()
                .map(|c| ctx.prefix(Action::OutCommit(c), cont))
                .collect()),
            _ => Ok(Vec::new()),
        },
        TypeNode::Int(cs) => Ok(cs.to_vec()),
        TypeNode::Ext(cs) => {
            // Internal moves of a branch do not resolve the choice.
            let mut out = Vec::new();
            for (i, &c) in cs.iter().enumerate() {
                for t2 in internal_steps(ctx, c)? {
                    let mut parts: Vec<TypeId> = cs.to_vec();
                    parts[i] = t2;
                    out.push(ctx.ext(parts));
                }
            }
            Ok(out)
        }
        TypeNode::Par(cs) => {
            let mut out = Vec::new();
            // component moves
            for (i, &c) in cs.iter().enumerate() {
                for t2 in internal_steps(ctx, c)? {
                    let mut parts: Vec<TypeId> = cs.to_vec();
                    parts[i] = t2;
                    out.push(ctx.par(parts));
                }
            }
            // pairwise synchronization
            for i in 0..cs.len() {
                for j in 0..cs.len() {
                    if i == j {
                        continue;
                    }
                    for (li, ti) in visible_steps(ctx, cs[i]) {
                        for (lj, tj) in visible_steps(ctx, cs[j]) {
                            match (&li, &lj) {
                                // matched value communication
                                (TypeLabel::OutCell(a), TypeLabel::InCell(b)) if a == b => {
                                    let mut parts: Vec<TypeId> = cs.to_vec();
                                    parts[i] = ti;
                                    parts[j] = tj;
                                    out.push(ctx.par(parts));
                                }
                                // delegation: the delegated session must
                                // refine the one the receiver expects
                                (TypeLabel::OutCh(rho), TypeLabel::InCh(exp)) => {
                                    let mut parts: Vec<TypeId> = keep_others(&cs, i, j);
                                    match crate::relations::preceq_definite(ctx, *rho, *exp) {
                                        Some(true) => {
                                            parts.push(ti);
                                            parts.push(tj);
                                            out.push(ctx.par(parts));
                                        }
                                        Some(false) => {
                                            // failed handover poisons the pair
                                            parts.push(ctx.fail());
                                            out.push(ctx.par(parts));
                                        }
                                        None => {
                                            return Err(AnalysisError::Undecided {
                                                lhs: ctx.pretty(*rho),
                                                rhs: ctx.pretty(*exp),
                                            });
                                        }
                                    }
                                }
                                _ => {}
                            }
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

fn keep_others(cs: &[TypeId], i: usize, j: usize) -> Vec<TypeId> {
    cs.iter()
        .enumerate()
        .filter(|&(k, _)| k != i && k != j)
        .map(|(_, &t)| t)
        .collect()
}

/// All transitions of one state.
pub fn successors(ctx: &Ctx, t: TypeId) -> Result<NodeSucc, AnalysisError> {
    Ok(NodeSucc {
        check: has_check(ctx, t),
        internal: dedup_sorted(internal_steps(ctx, t)?),
        visible: {
            let mut v = visible_steps(ctx, t);
            v.sort();
            v.dedup();
            v
        },
    })
}

fn dedup_sorted(mut v: Vec<TypeId>) -> Vec<TypeId> {
    v.sort();
    v.dedup();
    v
}

/// Reachable-state graph of a term.
#[derive(Clone, Debug)]
pub struct TypeStateGraph {
    pub root: TypeId,
    /// States in breadth-first discovery order.
    pub nodes: Vec<TypeId>,
    pub internal: BTreeMap<TypeId, Vec<TypeId>>,
    pub visible: BTreeMap<TypeId, Vec<(TypeLabel, TypeId)>>,
    /// `check`-enabled states.
    pub check: BTreeSet<TypeId>,
    /// Whether visible successors were added to the state set.
    pub full: bool,
}

/// Builds the graph of states reachable from `root`. With `full = false`
/// only internal transitions extend the state set (visible edges are still
/// recorded at each state); with `full = true` visible successors become
/// states too.
pub fn build_graph(ctx: &Ctx, root: TypeId, full: bool) -> Result<TypeStateGraph, AnalysisError> {
    let root = ctx.expose(root);
    let mut g = TypeStateGraph {
        root,
        nodes: Vec::new(),
        internal: BTreeMap::new(),
        visible: BTreeMap::new(),
        check: BTreeSet::new(),
        full,
    };
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(root);
    queue.push_back(root);
    while let Some(t) = queue.pop_front() {
        if g.nodes.len() >= MAX_STATES {
            return Err(AnalysisError::StateSpace { limit: MAX_STATES });
        }
        g.nodes.push(t);
        let succ = successors(ctx, t)?;
        if succ.check {
            g.check.insert(t);
        }
        let push = |next: TypeId, seen: &mut BTreeSet<TypeId>, queue: &mut VecDeque<TypeId>| {
            let next = ctx.expose(next);
            if seen.insert(next) {
                queue.push_back(next);
            }
            next
        };
        let internal: Vec<TypeId> = succ
            .internal
            .into_iter()
            .map(|n| push(n, &mut seen, &mut queue))
            .collect();
        let visible: Vec<(TypeLabel, TypeId)> = if full {
            succ.visible
                .into_iter()
                .map(|(l, n)| (l, push(n, &mut seen, &mut queue)))
                .collect()
        } else {
            succ.visible
                .into_iter()
                .map(|(l, n)| (l, ctx.expose(n)))
                .collect()
        };
        g.internal.insert(t, internal);
        g.visible.insert(t, visible);
    }
    Stats::bump(&ctx.stats.graphs_built);
    Stats::add(&ctx.stats.states_built, g.nodes.len() as u64);
    Ok(g)
}

/// How many internal-closure graphs to keep cached. Bulk analyses (tester
/// searches, law suites) build one graph per composition and rarely revisit
/// it once its completeness bit is memoised, so an unbounded cache is almost
/// pure memory growth; dropping it wholesale when it fills is cheap because
/// the graphs that are genuinely hot are small and quick to rebuild.
const GRAPH_CACHE_LIMIT: usize = 4096;

/// The internal-closure graph of `root`, cached.
pub fn internal_graph(ctx: &Ctx, root: TypeId) -> Result<Arc<TypeStateGraph>, AnalysisError> {
    let key = ctx.expose(root);
    if let Some(g) = ctx.caches.graphs.lock().unwrap().get(&key) {
        return Ok(g.clone());
    }
    let g = Arc::new(build_graph(ctx, key, false)?);
    let mut cache = ctx.caches.graphs.lock().unwrap();
    if cache.len() >= GRAPH_CACHE_LIMIT {
        cache.clear();
    }
    cache.insert(key, g.clone());
    Ok(g)
}

/// The set of states from which a seed is reachable, following the graph's
/// edges backwards. With `use_visible` both kinds of edges count.
pub fn backward_closure(
    g: &TypeStateGraph,
    seeds: &BTreeSet<TypeId>,
    use_visible: bool,
) -> BTreeSet<TypeId> {
    let mut rev: BTreeMap<TypeId, Vec<TypeId>> = BTreeMap::new();
    for (&src, dsts) in &g.internal {
        for &d in dsts {
            rev.entry(d).or_default().push(src);
        }
    }
    if use_visible {
        for (&src, edges) in &g.visible {
            for (_, d) in edges {
                rev.entry(*d).or_default().push(src);
            }
        }
    }
    let mut closure: BTreeSet<TypeId> = seeds.clone();
    let mut queue: VecDeque<TypeId> = seeds.iter().copied().collect();
    while let Some(t) = queue.pop_front() {
        if let Some(preds) = rev.get(&t) {
            for &p in preds {
                if closure.insert(p) {
                    queue.push_back(p);
                }
            }
        }
    }
    closure
}

/// States reachable from the root via internal edges only.
pub fn internal_reachable(g: &TypeStateGraph) -> BTreeSet<TypeId> {
    let mut seen = BTreeSet::from([g.root]);
    let mut queue = VecDeque::from([g.root]);
    while let Some(t) = queue.pop_front() {
        if let Some(dsts) = g.internal.get(&t) {
            for &d in dsts {
                if seen.insert(d) {
                    queue.push_back(d);
                }
            }
        }
    }
    seen
}

/// Whether every internally reachable state of `t` can still reach a
/// `check`-enabled state through internal moves.
pub fn is_complete(ctx: &Ctx, t: TypeId) -> Result<bool, AnalysisError> {
    let key = ctx.expose(t);
    if let Some(hit) = ctx.caches.complete.lock().unwrap().get(&key) {
        return hit.clone();
    }
    let result = (|| {
        let g = internal_graph(ctx, key)?;
        let good = backward_closure(&g, &g.check, false);
        Ok(g.nodes.iter().all(|n| good.contains(n)))
    })();
    ctx.caches
        .complete
        .lock()
        .unwrap()
        .insert(key, result.clone());
    result
}
