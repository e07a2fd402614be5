//! Session type terms.
//!
//! Terms are hash-consed into an arena owned by [`Ctx`]. The smart
//! constructors keep every stored term canonical modulo associativity and
//! commutativity of the three n-ary operators and their units: `0` is dropped
//! from external choices, `1` is dropped from parallel compositions, nested
//! occurrences of the same operator are flattened, and children are sorted.
//! Recursion uses de Bruijn binders (`Rec`/`Var`), so alpha-equivalent terms
//! are literally equal, and unfolding is substitution of the binder by the
//! whole `rec` term.
//!
//! Canonical identity makes the reachable state spaces of the transition
//! relation finite sets of `TypeId`s, which everything else in the crate
//! relies on.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::universe::{BasicTypeExpr, CellId, Universe};

/// Interned handle to a session type term.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TypeId(pub(crate) u32);

/// A communication prefix.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Action {
    /// `?t` — input of a value of basic type `t`.
    InVal(BasicTypeExpr),
    /// `!t` — output of some value of basic type `t`, not yet committed.
    OutVal(BasicTypeExpr),
    /// `?[s]` — input of a channel to be used according to `s`.
    InCh(TypeId),
    /// `![s]` — output of a channel to be used according to `s`.
    OutCh(TypeId),
    /// An output that has internally committed to a value of one cell.
    /// Never produced by the parser; it appears as an intermediate state of
    /// the transition relation.
    OutCommit(CellId),
}

/// One constructor of the term algebra.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum TypeNode {
    /// `0`, the failed session.
    Fail,
    /// `1`, the successfully terminated session.
    Done,
    Prefix(Action, TypeId),
    /// External choice `+` (n-ary, canonical).
    Ext(Box<[TypeId]>),
    /// Internal choice `(+)` (n-ary, canonical).
    Int(Box<[TypeId]>),
    /// Parallel composition `|` (n-ary, canonical).
    Par(Box<[TypeId]>),
    /// `rec X. body` with a de Bruijn binder.
    Rec(TypeId),
    /// A de Bruijn variable referring to an enclosing `Rec`.
    Var(u32),
}

struct Store {
    nodes: Vec<TypeNode>,
    /// Highest free de Bruijn index + 1; 0 means the term is closed.
    ceiling: Vec<u32>,
    index: HashMap<TypeNode, TypeId>,
}

/// Work counters, reported by the CLI as a deterministic cost measure.
#[derive(Default)]
pub struct Stats {
    pub graphs_built: AtomicU64,
    pub states_built: AtomicU64,
    pub relation_queries: AtomicU64,
    pub testers_tried: AtomicU64,
}

impl Stats {
    pub fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }
    pub fn add(counter: &AtomicU64, n: u64) {
        counter.fetch_add(n, Ordering::Relaxed);
    }
}

pub(crate) struct Caches {
    pub subst: Mutex<HashMap<(TypeId, u32, TypeId), TypeId>>,
    pub norm: Mutex<HashMap<TypeId, TypeId>>,
    pub weight: Mutex<HashMap<TypeId, u32>>,
    pub graphs: Mutex<HashMap<TypeId, Arc<crate::semantics::TypeStateGraph>>>,
    pub complete: Mutex<HashMap<TypeId, Result<bool, crate::semantics::AnalysisError>>>,
    pub sem_eq: Mutex<HashMap<(TypeId, TypeId), bool>>,
    pub prove: Mutex<HashMap<(TypeId, TypeId, u8), Option<Vec<String>>>>,
    pub viability: Mutex<HashMap<(TypeId, (u32, u32)), crate::relations::Verdict>>,
    pub relation: Mutex<HashMap<(u8, TypeId, TypeId, (u32, u32)), crate::relations::Verdict>>,
    pub dual: Mutex<HashMap<(TypeId, bool), TypeId>>,
}

impl Default for Caches {
    fn default() -> Self {
        Caches {
            subst: Mutex::new(HashMap::new()),
            norm: Mutex::new(HashMap::new()),
            weight: Mutex::new(HashMap::new()),
            graphs: Mutex::new(HashMap::new()),
            complete: Mutex::new(HashMap::new()),
            sem_eq: Mutex::new(HashMap::new()),
            prove: Mutex::new(HashMap::new()),
            viability: Mutex::new(HashMap::new()),
            relation: Mutex::new(HashMap::new()),
            dual: Mutex::new(HashMap::new()),
        }
    }
}

/// Search budget for the relation engine: maximum prefix depth and maximum
/// choice width of enumerated testers.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Bound {
    pub depth: u32,
    pub width: u32,
}

impl Default for Bound {
    fn default() -> Self {
        Bound { depth: 4, width: 2 }
    }
}

impl Bound {
    pub fn key(&self) -> (u32, u32) {
        (self.depth, self.width)
    }
    /// Cap on enumerated testers for a single refutation search.
    pub fn tester_cap(&self) -> usize {
        2000usize.saturating_mul(self.depth.max(1) as usize) / 4
    }
    /// Cap on choice contexts tried in a strong-subsession refutation.
    pub fn context_cap(&self) -> usize {
        12usize.saturating_mul(self.depth.max(1) as usize)
    }
    /// Cap on testers tried per context in a strong-subsession refutation.
    pub fn per_context_cap(&self) -> usize {
        65usize.saturating_mul(self.depth.max(1) as usize)
    }
}

/// Analysis context: the term arena, the value universe, the default search
/// bound, and transparent caches. All operations take `&self`; the caches
/// only memoize pure functions of their arguments.
pub struct Ctx {
    store: Mutex<Store>,
    pub universe: Universe,
    pub default_bound: Bound,
    pub(crate) caches: Caches,
    pub stats: Stats,
}

impl Ctx {
    pub fn new(universe: Universe) -> Ctx {
        Ctx::with_bound(universe, Bound::default())
    }

    pub fn with_bound(universe: Universe, bound: Bound) -> Ctx {
        Ctx {
            store: Mutex::new(Store {
                nodes: Vec::new(),
                ceiling: Vec::new(),
                index: HashMap::new(),
            }),
            universe,
            default_bound: bound,
            caches: Caches::default(),
            stats: Stats::default(),
        }
    }

    fn intern(&self, node: TypeNode) -> TypeId {
        let mut store = self.store.lock().unwrap();
        if let Some(&id) = store.index.get(&node) {
            return id;
        }
        let ceiling = {
            let ceil = |id: TypeId| store.ceiling[id.0 as usize];
            match &node {
                TypeNode::Fail | TypeNode::Done => 0,
                TypeNode::Var(k) => k + 1,
                TypeNode::Prefix(a, c) => {
                    let pc = match a {
                        Action::InCh(p) | Action::OutCh(p) => ceil(*p),
                        _ => 0,
                    };
                    pc.max(ceil(*c))
                }
                TypeNode::Ext(cs) | TypeNode::Int(cs) | TypeNode::Par(cs) => {
                    cs.iter().map(|&c| ceil(c)).max().unwrap_or(0)
                }
                TypeNode::Rec(b) => ceil(*b).saturating_sub(1),
            }
        };
        let id = TypeId(store.nodes.len() as u32);
        store.nodes.push(node.clone());
        store.ceiling.push(ceiling);
        store.index.insert(node, id);
        id
    }

    pub fn node(&self, t: TypeId) -> TypeNode {
        self.store.lock().unwrap().nodes[t.0 as usize].clone()
    }

    /// Highest free de Bruijn index + 1 (0 for closed terms).
    pub fn ceiling(&self, t: TypeId) -> u32 {
        self.store.lock().unwrap().ceiling[t.0 as usize]
    }

    // ---- smart constructors ----

    pub fn fail(&self) -> TypeId {
        self.intern(TypeNode::Fail)
    }

    pub fn done(&self) -> TypeId {
        self.intern(TypeNode::Done)
    }

    pub fn var(&self, k: u32) -> TypeId {
        self.intern(TypeNode::Var(k))
    }

    pub fn prefix(&self, a: Action, cont: TypeId) -> TypeId {
        self.intern(TypeNode::Prefix(a, cont))
    }

    pub fn in_val(&self, bt: BasicTypeExpr, cont: TypeId) -> TypeId {
        self.prefix(Action::InVal(bt), cont)
    }

    pub fn out_val(&self, bt: BasicTypeExpr, cont: TypeId) -> TypeId {
        self.prefix(Action::OutVal(bt), cont)
    }

    /// External choice. `0` is the unit and nested choices are flattened.
    pub fn ext(&self, children: impl IntoIterator<Item = TypeId>) -> TypeId {
        let mut flat = Vec::new();
        self.flatten(children, &mut flat, |n| match n {
            TypeNode::Ext(cs) => Some(cs),
            _ => None,
        });
        flat.retain(|&c| self.node(c) != TypeNode::Fail);
        flat.sort();
        match flat.len() {
            0 => self.fail(),
            1 => flat[0],
            _ => self.intern(TypeNode::Ext(flat.into_boxed_slice())),
        }
    }

    /// Internal choice; nested choices are flattened.
    pub fn int_choice(&self, children: impl IntoIterator<Item = TypeId>) -> TypeId {
        let mut flat = Vec::new();
        self.flatten(children, &mut flat, |n| match n {
            TypeNode::Int(cs) => Some(cs),
            _ => None,
        });
        flat.sort();
        match flat.len() {
            0 => self.fail(),
            1 => flat[0],
            _ => self.intern(TypeNode::Int(flat.into_boxed_slice())),
        }
    }

    /// Parallel composition. `1` is the unit and nested compositions are
    /// flattened.
    pub fn par(&self, children: impl IntoIterator<Item = TypeId>) -> TypeId {
        let mut flat = Vec::new();
        self.flatten(children, &mut flat, |n| match n {
            TypeNode::Par(cs) => Some(cs),
            _ => None,
        });
        flat.retain(|&c| self.node(c) != TypeNode::Done);
        flat.sort();
        match flat.len() {
            0 => self.done(),
            1 => flat[0],
            _ => self.intern(TypeNode::Par(flat.into_boxed_slice())),
        }
    }

    fn flatten(
        &self,
        children: impl IntoIterator<Item = TypeId>,
        out: &mut Vec<TypeId>,
        peel: impl Fn(TypeNode) -> Option<Box<[TypeId]>> + Copy,
    ) {
        for c in children {
            match peel(self.node(c)) {
                Some(cs) => self.flatten(cs.to_vec(), out, peel),
                None => out.push(c),
            }
        }
    }

    /// Recursion binder. A binder whose body is closed binds nothing and is
    /// dropped.
    pub fn rec(&self, body: TypeId) -> TypeId {
        if self.ceiling(body) == 0 {
            body
        } else {
            self.intern(TypeNode::Rec(body))
        }
    }

    // ---- substitution and unfolding ----

    /// Substitutes the closed term `rep` for the free variable `k` in `t`.
    pub fn subst(&self, t: TypeId, k: u32, rep: TypeId) -> TypeId {
        debug_assert_eq!(self.ceiling(rep), 0, "substituted term must be closed");
        if self.ceiling(t) <= k {
            return t;
        }
        if let Some(&hit) = self.caches.subst.lock().unwrap().get(&(t, k, rep)) {
            return hit;
        }
        let out = match self.node(t) {
            TypeNode::Var(j) => {
                if j == k {
                    rep
                } else {
                    t
                }
            }
            TypeNode::Prefix(a, c) => {
                let a = match a {
                    Action::InCh(p) => Action::InCh(self.subst(p, k, rep)),
                    Action::OutCh(p) => Action::OutCh(self.subst(p, k, rep)),
                    other => other,
                };
                self.prefix(a, self.subst(c, k, rep))
            }
            TypeNode::Ext(cs) => self.ext(cs.iter().map(|&c| self.subst(c, k, rep))),
            TypeNode::Int(cs) => self.int_choice(cs.iter().map(|&c| self.subst(c, k, rep))),
            TypeNode::Par(cs) => self.par(cs.iter().map(|&c| self.subst(c, k, rep))),
            TypeNode::Rec(b) => self.rec(self.subst(b, k + 1, rep)),
            TypeNode::Fail | TypeNode::Done => t,
        };
        self.caches.subst.lock().unwrap().insert((t, k, rep), out);
        out
    }

    /// One unfolding of a `rec` term; other terms are returned unchanged.
    pub fn unfold(&self, t: TypeId) -> TypeId {
        match self.node(t) {
            TypeNode::Rec(b) => self.subst(b, 0, t),
            _ => t,
        }
    }

    /// Unfolds top-level binders until a structural constructor shows.
    /// Contractivity bounds the number of unfoldings.
    pub fn expose(&self, t: TypeId) -> TypeId {
        let mut cur = t;
        for _ in 0..64 {
            match self.node(cur) {
                TypeNode::Rec(_) => cur = self.unfold(cur),
                _ => return cur,
            }
        }
        panic!("non-contractive term escaped validation: {}", self.pretty(t));
    }

    // ---- measures ----

    /// Nesting depth of channel payloads: 0 for terms without channel
    /// prefixes, otherwise one more than the deepest payload. This is the
    /// measure on which channel-matching side conditions recurse.
    pub fn weight(&self, t: TypeId) -> u32 {
        if let Some(&w) = self.caches.weight.lock().unwrap().get(&t) {
            return w;
        }
        let w = match self.node(t) {
            TypeNode::Fail | TypeNode::Done | TypeNode::Var(_) => 0,
            TypeNode::Prefix(a, c) => {
                let pay = match a {
                    Action::InCh(p) | Action::OutCh(p) => 1 + self.weight(p),
                    _ => 0,
                };
                pay.max(self.weight(c))
            }
            TypeNode::Ext(cs) | TypeNode::Int(cs) | TypeNode::Par(cs) => {
                cs.iter().map(|&c| self.weight(c)).max().unwrap_or(0)
            }
            TypeNode::Rec(b) => self.weight(b),
        };
        self.caches.weight.lock().unwrap().insert(t, w);
        w
    }

    /// Number of constructors in the stored term (payloads included).
    pub fn size(&self, t: TypeId) -> usize {
        match self.node(t) {
            TypeNode::Fail | TypeNode::Done | TypeNode::Var(_) => 1,
            TypeNode::Prefix(a, c) => {
                let pay = match a {
                    Action::InCh(p) | Action::OutCh(p) => self.size(p),
                    _ => 0,
                };
                1 + pay + self.size(c)
            }
            TypeNode::Ext(cs) | TypeNode::Int(cs) | TypeNode::Par(cs) => {
                1 + cs.iter().map(|&c| self.size(c)).sum::<usize>()
            }
            TypeNode::Rec(b) => 1 + self.size(b),
        }
    }

    // ---- validation ----

    /// Checks the three well-formedness conditions on the regular tree the
    /// term denotes, plus definedness of [`Ctx::weight`]:
    ///
    /// * contractivity — every recursion cycle crosses a communication prefix;
    /// * finite parallelism — no recursion cycle crosses `|`;
    /// * payload stratification — no recursion cycle enters a channel payload.
    ///
    /// Regularity holds by construction for every representable term. An
    /// empty result means the term is safe for every semantic operation.
    pub fn validate(&self, t: TypeId) -> Vec<Violation> {
        let mut recs = Vec::new();
        self.collect_recs(t, &mut recs, &mut Vec::new());
        let mut out = Vec::new();
        for r in recs {
            let TypeNode::Rec(body) = self.node(r) else { unreachable!() };
            let mut flags = RecFlags::default();
            let mut memo = HashMap::new();
            self.scan_rec(body, 0, false, false, false, &mut flags, &mut memo);
            if flags.unguarded {
                out.push(Violation::NonContractive { term: self.pretty(r) });
            }
            if flags.through_par {
                out.push(Violation::InfinitePar { term: self.pretty(r) });
            }
            if flags.through_payload {
                out.push(Violation::PayloadRecursion { term: self.pretty(r) });
            }
        }
        out
    }

    fn collect_recs(&self, t: TypeId, out: &mut Vec<TypeId>, seen: &mut Vec<TypeId>) {
        if seen.contains(&t) {
            return;
        }
        seen.push(t);
        match self.node(t) {
            TypeNode::Rec(b) => {
                out.push(t);
                self.collect_recs(b, out, seen);
            }
            TypeNode::Prefix(a, c) => {
                if let Action::InCh(p) | Action::OutCh(p) = a {
                    self.collect_recs(p, out, seen);
                }
                self.collect_recs(c, out, seen);
            }
            TypeNode::Ext(cs) | TypeNode::Int(cs) | TypeNode::Par(cs) => {
                for c in cs.iter() {
                    self.collect_recs(*c, out, seen);
                }
            }
            _ => {}
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn scan_rec(
        &self,
        t: TypeId,
        depth: u32,
        guarded: bool,
        par: bool,
        payload: bool,
        flags: &mut RecFlags,
        memo: &mut HashMap<(TypeId, u32, bool, bool, bool), ()>,
    ) {
        if self.ceiling(t) <= depth {
            return; // the binder under scrutiny is not free here
        }
        if memo.insert((t, depth, guarded, par, payload), ()).is_some() {
            return;
        }
        match self.node(t) {
            TypeNode::Var(j) => {
                if j == depth {
                    if !guarded {
                        flags.unguarded = true;
                    }
                    if par {
                        flags.through_par = true;
                    }
                    if payload {
                        flags.through_payload = true;
                    }
                }
            }
            TypeNode::Prefix(a, c) => {
                if let Action::InCh(p) | Action::OutCh(p) = a {
                    self.scan_rec(p, depth, true, par, true, flags, memo);
                }
                self.scan_rec(c, depth, true, par, payload, flags, memo);
            }
            TypeNode::Ext(cs) | TypeNode::Int(cs) => {
                for c in cs.iter() {
                    self.scan_rec(*c, depth, guarded, par, payload, flags, memo);
                }
            }
            TypeNode::Par(cs) => {
                for c in cs.iter() {
                    self.scan_rec(*c, depth, guarded, true, payload, flags, memo);
                }
            }
            TypeNode::Rec(b) => self.scan_rec(b, depth + 1, guarded, par, payload, flags, memo),
            TypeNode::Fail | TypeNode::Done => {}
        }
    }

    // ---- printing ----

    pub fn pretty(&self, t: TypeId) -> String {
        let mut names = Vec::new();
        self.print(t, 0, &mut names)
    }

    pub fn pretty_bt(&self, bt: &BasicTypeExpr) -> String {
        match bt {
            BasicTypeExpr::Empty => "empty".into(),
            BasicTypeExpr::Named(n) => n.clone(),
            BasicTypeExpr::Singleton(crate::universe::Value::Sym(s)) => format!("'{s}'"),
            BasicTypeExpr::Singleton(v) => format!("'{v}'"),
            BasicTypeExpr::Cell(c) => format!("<{}>", self.universe.cell_name(*c)),
        }
    }

    pub fn pretty_action(&self, a: &Action) -> String {
        match a {
            Action::InVal(bt) => format!("?{}", self.pretty_bt(bt)),
            Action::OutVal(bt) => format!("!{}", self.pretty_bt(bt)),
            Action::InCh(p) => format!("?[{}]", self.pretty(*p)),
            Action::OutCh(p) => format!("![{}]", self.pretty(*p)),
            Action::OutCommit(c) => format!("!<{}>", self.universe.cell_name(*c)),
        }
    }

    // Levels, loosest to tightest: 0 = `(+)`, 1 = `+`, 2 = `|`, 3 = atoms
    // and prefixes.
    fn print(&self, t: TypeId, level: u8, names: &mut Vec<String>) -> String {
        let wrap = |s: String, needs: bool| if needs { format!("({s})") } else { s };
        match self.node(t) {
            TypeNode::Fail => "0".into(),
            TypeNode::Done => "1".into(),
            TypeNode::Var(k) => {
                let idx = names.len() as i64 - 1 - k as i64;
                if idx >= 0 {
                    names[idx as usize].clone()
                } else {
                    format!("#{k}")
                }
            }
            TypeNode::Rec(b) => {
                let name = rec_name(names.len());
                names.push(name.clone());
                let body = self.print(b, 3, names);
                names.pop();
                format!("rec {name}. {body}")
            }
            TypeNode::Prefix(a, c) => {
                let act = match a {
                    Action::InVal(bt) => format!("?{}", self.pretty_bt(&bt)),
                    Action::OutVal(bt) => format!("!{}", self.pretty_bt(&bt)),
                    Action::InCh(p) => format!("?[{}]", self.print(p, 0, &mut Vec::new())),
                    Action::OutCh(p) => format!("![{}]", self.print(p, 0, &mut Vec::new())),
                    Action::OutCommit(c) => format!("!<{}>", self.universe.cell_name(c)),
                };
                format!("{act}.{}", self.print(c, 3, names))
            }
            TypeNode::Par(cs) => {
                let body = cs
                    .iter()
                    .map(|&c| self.print(c, 3, names))
                    .collect::<Vec<_>>()
                    .join(" | ");
                wrap(body, level > 2)
            }
            TypeNode::Ext(cs) => {
                let body = cs
                    .iter()
                    .map(|&c| self.print(c, 2, names))
                    .collect::<Vec<_>>()
                    .join(" + ");
                wrap(body, level > 1)
            }
            TypeNode::Int(cs) => {
                let body = cs
                    .iter()
                    .map(|&c| self.print(c, 1, names))
                    .collect::<Vec<_>>()
                    .join(" (+) ");
                wrap(body, level > 0)
            }
        }
    }
}

fn rec_name(depth: usize) -> String {
    const BASE: [&str; 4] = ["X", "Y", "Z", "W"];
    if depth < BASE.len() {
        BASE[depth].to_string()
    } else {
        format!("X{}", depth - BASE.len() + 1)
    }
}

#[derive(Default)]
struct RecFlags {
    unguarded: bool,
    through_par: bool,
    through_payload: bool,
}

/// A well-formedness defect found by [`Ctx::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A recursion cycle with no communication prefix on it.
    NonContractive { term: String },
    /// A recursion cycle that passes through a parallel composition.
    InfinitePar { term: String },
    /// A recursion cycle that passes through a channel payload, which would
    /// leave the payload-nesting measure undefined.
    PayloadRecursion { term: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NonContractive { term } => {
                write!(f, "non-contractive recursion in {term}")
            }
            Violation::InfinitePar { term } => {
                write!(f, "recursion through parallel composition in {term}")
            }
            Violation::PayloadRecursion { term } => {
                write!(f, "recursion through a channel payload in {term}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::Universe;

    fn ctx() -> Ctx {
        Ctx::new(Universe::default_universe())
    }

    fn bt(n: &str) -> BasicTypeExpr {
        BasicTypeExpr::named(n)
    }

    #[test]
    fn choice_units_and_flattening() {
        let c = ctx();
        let a = c.in_val(bt("Int"), c.done());
        let b = c.out_val(bt("Bool"), c.done());
        // 0 is the unit of +
        assert_eq!(c.ext([a, c.fail()]), a);
        // 1 is the unit of |
        assert_eq!(c.par([a, c.done()]), a);
        // commutativity via sorting
        assert_eq!(c.ext([a, b]), c.ext([b, a]));
        assert_eq!(c.par([a, b]), c.par([b, a]));
        assert_eq!(c.int_choice([a, b]), c.int_choice([b, a]));
        // associativity via flattening
        let l = c.ext([c.ext([a, b]), c.done()]);
        let r = c.ext([a, c.ext([b, c.done()])]);
        assert_eq!(l, r);
        // 1 | 1 collapses to 1
        assert_eq!(c.par([c.done(), c.done()]), c.done());
    }

    #[test]
    fn duplicate_branches_are_kept() {
        let c = ctx();
        let a = c.in_val(bt("Int"), c.done());
        assert_ne!(c.ext([a, a]), a);
        assert_ne!(c.int_choice([a, a]), a);
    }

    #[test]
    fn unused_binder_is_dropped() {
        let c = ctx();
        let body = c.in_val(bt("Int"), c.done());
        assert_eq!(c.rec(body), body);
    }

    #[test]
    fn unfolding_is_substitution() {
        let c = ctx();
        // rec X. !Int.X
        let t = c.rec(c.out_val(bt("Int"), c.var(0)));
        let u = c.unfold(t);
        assert_eq!(u, c.out_val(bt("Int"), t));
        // unfolding twice closes the loop on the same ids
        assert_eq!(c.unfold(c.expose(u)), u);
    }

    #[test]
    fn validate_flags_bad_recursion() {
        let c = ctx();
        // rec X. X + X : cycle with no prefix
        let t = c.intern(TypeNode::Rec(c.intern(TypeNode::Ext(
            vec![c.var(0), c.var(0)].into_boxed_slice(),
        ))));
        assert!(c
            .validate(t)
            .iter()
            .any(|v| matches!(v, Violation::NonContractive { .. })));

        // rec X. (X | !Int.1) : cycle through |
        let t = c.intern(TypeNode::Rec(c.intern(TypeNode::Par(
            vec![c.var(0), c.out_val(bt("Int"), c.done())].into_boxed_slice(),
        ))));
        assert!(c
            .validate(t)
            .iter()
            .any(|v| matches!(v, Violation::InfinitePar { .. })));

        // rec X. ?[X].1 : cycle through a payload
        let t = c.intern(TypeNode::Rec(c.prefix(Action::InCh(c.var(0)), c.done())));
        assert!(c
            .validate(t)
            .iter()
            .any(|v| matches!(v, Violation::PayloadRecursion { .. })));

        // rec X. ?Int.X : fine
        let t = c.rec(c.in_val(bt("Int"), c.var(0)));
        assert!(c.validate(t).is_empty());
    }

    #[test]
    fn weight_measures_payload_nesting() {
        let c = ctx();
        let w0 = c.in_val(bt("Int"), c.done());
        assert_eq!(c.weight(w0), 0);
        let w1 = c.prefix(Action::InCh(c.out_val(bt("Int"), c.done())), c.done());
        assert_eq!(c.weight(w1), 1);
        let w2 = c.prefix(Action::OutCh(w1), c.done());
        assert_eq!(c.weight(w2), 2);
        // max of payload weight and continuation weight
        let mix = c.prefix(Action::InCh(w0), w2);
        assert_eq!(c.weight(mix), 2);
    }

    #[test]
    fn pretty_printing_reads_back() {
        let c = ctx();
        let t = c.rec(c.int_choice([c.done(), c.prefix(Action::InCh(c.out_val(bt("Int"), c.done())), c.var(0))]));
        let s = c.pretty(t);
        assert!(s.contains("rec X."), "got {s}");
        assert!(s.contains("?[!Int.1]"), "got {s}");
    }
}
