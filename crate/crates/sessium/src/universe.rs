//! Universes of values: cells, named basic types, singletons and carriers.
//!
//! A universe partitions the value space into finitely many pairwise-disjoint
//! *cells*. Basic types denote sets of cells: a named type is a declared union
//! of cells, a singleton type `'v'` denotes the one cell owned by the value
//! `v`, and `empty` denotes no cell at all. Values of the same cell are
//! indistinguishable to the behavioural analyses, which is what keeps every
//! transition system in this crate finite.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::rational::Rational64;
use num::One;
use thiserror::Error;

/// Index of a cell within its [`Universe`].
pub type CellId = usize;

/// A concrete value. Numbers are exact rationals so that arithmetic in
/// process expressions never loses information.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Num(Rational64),
    Bool(bool),
    Str(String),
    /// An uninterpreted atom such as `'abort'`.
    Sym(String),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Num(Rational64::from_integer(n))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(r) => write!(f, "{}", format_rational(*r)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Sym(s) => write!(f, "'{s}'"),
        }
    }
}

/// Renders a rational as an integer or a finite decimal where possible,
/// falling back to `p/q` notation.
fn format_rational(r: Rational64) -> String {
    if r.denom().is_one() {
        return r.numer().to_string();
    }
    // A denominator of the form 2^a * 5^b has a finite decimal expansion.
    let mut d = *r.denom();
    let mut scale = 1i64;
    for p in [2i64, 5] {
        while d % p == 0 {
            d /= p;
            scale = scale.saturating_mul(p);
        }
    }
    if d == 1 {
        let mut digits = 1i64;
        let mut pow = 10i64;
        while pow % scale != 0 || (r.numer() * pow) % r.denom() != 0 {
            pow = pow.saturating_mul(10);
            digits += 1;
            if digits > 18 {
                return format!("{}/{}", r.numer(), r.denom());
            }
        }
        let scaled = (r.numer() * pow) / r.denom();
        let sign = if scaled.is_negative() { "-" } else { "" };
        let abs = scaled.abs();
        let int_part = abs / pow;
        let frac = format!("{:0width$}", abs % pow, width = digits as usize);
        let frac = frac.trim_end_matches('0');
        let frac = if frac.is_empty() { "0" } else { frac };
        format!("{sign}{int_part}.{frac}")
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Syntax of basic (value) types as they occur in session types and process
/// annotations.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasicTypeExpr {
    /// The uninhabited type, written `empty`.
    Empty,
    /// A declared named type such as `Int` or `Real`.
    Named(String),
    /// A singleton type `'v'` inhabited exactly by `v`.
    Singleton(Value),
    /// A single cell. Not part of the surface syntax; produced internally
    /// when an analysis needs a type that denotes precisely one cell.
    Cell(CellId),
}

impl BasicTypeExpr {
    pub fn named(s: &str) -> BasicTypeExpr {
        BasicTypeExpr::Named(s.to_string())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Global(String),
}

fn cfg_err<T>(line: usize, msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Line { line, msg: msg.into() })
}

/// A finite, table-driven function usable in process expressions.
#[derive(Clone, Debug)]
pub struct FnDef {
    pub name: String,
    pub params: Vec<BasicTypeExpr>,
    pub result: BasicTypeExpr,
    pub table: BTreeMap<Vec<Value>, Value>,
}

/// A fixed, finite universe of values. See the module docs for the model.
#[derive(Clone, Debug)]
pub struct Universe {
    cells: Vec<String>,
    named: BTreeMap<String, BTreeSet<CellId>>,
    singletons: BTreeMap<Value, CellId>,
    carriers: Vec<Vec<Value>>,
    funs: BTreeMap<String, FnDef>,
    value_cell: BTreeMap<Value, CellId>,
}

pub const DEFAULT_UNIVERSE_SRC: &str = include_str!("../corpus/default.u");

impl Universe {
    /// The universe used when no configuration file is given.
    pub fn default_universe() -> Universe {
        Universe::parse(DEFAULT_UNIVERSE_SRC).expect("built-in universe must parse")
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_name(&self, c: CellId) -> &str {
        &self.cells[c]
    }

    pub fn cell_by_name(&self, name: &str) -> Option<CellId> {
        self.cells.iter().position(|n| n == name)
    }

    pub fn named_types(&self) -> impl Iterator<Item = (&String, &BTreeSet<CellId>)> {
        self.named.iter()
    }

    pub fn fun(&self, name: &str) -> Option<&FnDef> {
        self.funs.get(name)
    }

    /// The set of cells a basic type expression denotes. Unknown names give
    /// the empty set; the parser rejects them before they can get here.
    pub fn denote(&self, bt: &BasicTypeExpr) -> BTreeSet<CellId> {
        match bt {
            BasicTypeExpr::Empty => BTreeSet::new(),
            BasicTypeExpr::Named(n) => self.named.get(n).cloned().unwrap_or_default(),
            BasicTypeExpr::Singleton(v) => {
                self.singletons.get(v).map(|c| BTreeSet::from([*c])).unwrap_or_default()
            }
            BasicTypeExpr::Cell(c) => BTreeSet::from([*c]),
        }
    }

    /// Set inclusion of denotations: `a` is a subtype of `b` when every cell
    /// of `a` is a cell of `b`.
    pub fn bt_subtype(&self, a: &BasicTypeExpr, b: &BasicTypeExpr) -> bool {
        self.denote(a).is_subset(&self.denote(b))
    }

    pub fn is_named_type(&self, name: &str) -> bool {
        self.named.contains_key(name)
    }

    pub fn is_singleton_value(&self, v: &Value) -> bool {
        self.singletons.contains_key(v)
    }

    /// The cell a concrete value inhabits, if it is part of the universe.
    pub fn cell_of_value(&self, v: &Value) -> Option<CellId> {
        self.value_cell.get(v).copied()
    }

    /// All carrier values of a cell.
    pub fn carriers(&self, c: CellId) -> &[Value] {
        &self.carriers[c]
    }

    /// All carrier values of a denotation, in a fixed order.
    pub fn values_of(&self, cells: &BTreeSet<CellId>) -> Vec<Value> {
        let mut out = Vec::new();
        for &c in cells {
            out.extend(self.carriers[c].iter().cloned());
        }
        out
    }

    /// Membership of a value in a basic type.
    pub fn value_has_type(&self, v: &Value, bt: &BasicTypeExpr) -> bool {
        match self.cell_of_value(v) {
            Some(c) => self.denote(bt).contains(&c),
            None => false,
        }
    }

    /// The type assigned to a literal: its singleton type if it is a declared
    /// singleton, otherwise the smallest named type containing its cell.
    pub fn literal_type(&self, v: &Value) -> Result<BasicTypeExpr, String> {
        if self.is_singleton_value(v) {
            return Ok(BasicTypeExpr::Singleton(v.clone()));
        }
        let cell = self
            .cell_of_value(v)
            .ok_or_else(|| format!("value {v} does not belong to any cell of the universe"))?;
        let mut best: Option<(&String, usize)> = None;
        for (name, cells) in &self.named {
            if cells.contains(&cell) {
                let size = cells.len();
                if best.map_or(true, |(_, s)| size < s) {
                    best = Some((name, size));
                }
            }
        }
        match best {
            Some((name, _)) => Ok(BasicTypeExpr::Named(name.clone())),
            None => Err(format!("no named type contains the cell of {v}")),
        }
    }

    /// Parses a universe description. The format is line oriented:
    ///
    /// ```text
    /// cell NAME
    /// type NAME = cell, cell, ...
    /// singleton 'lit' in CELL
    /// carrier CELL = lit, lit, ...
    /// fun NAME(types) -> type { input -> output; ... }
    /// ```
    pub fn parse(text: &str) -> Result<Universe, ConfigError> {
        let mut u = Universe {
            cells: Vec::new(),
            named: BTreeMap::new(),
            singletons: BTreeMap::new(),
            carriers: Vec::new(),
            funs: BTreeMap::new(),
            value_cell: BTreeMap::new(),
        };

        // Join lines until braces balance so `fun` tables may span lines.
        let mut logical: Vec<(usize, String)> = Vec::new();
        let mut pending: Option<(usize, String, i32)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim().to_string();
            if line.is_empty() && pending.is_none() {
                continue;
            }
            let delta =
                line.matches('{').count() as i32 - line.matches('}').count() as i32;
            match pending.take() {
                None => {
                    if delta > 0 {
                        pending = Some((i + 1, line, delta));
                    } else {
                        logical.push((i + 1, line));
                    }
                }
                Some((start, mut acc, depth)) => {
                    acc.push(' ');
                    acc.push_str(&line);
                    let depth = depth + delta;
                    if depth > 0 {
                        pending = Some((start, acc, depth));
                    } else {
                        logical.push((start, acc));
                    }
                }
            }
        }
        if let Some((start, _, _)) = pending {
            return cfg_err(start, "unbalanced braces in declaration");
        }

        for (ln, line) in &logical {
            let ln = *ln;
            let (kw, rest) = match line.split_once(char::is_whitespace) {
                Some((k, r)) => (k, r.trim()),
                None => (line.as_str(), ""),
            };
            match kw {
                "cell" => {
                    let name = rest;
                    if name.is_empty() || !is_ident(name) {
                        return cfg_err(ln, format!("invalid cell name {name:?}"));
                    }
                    if u.cells.iter().any(|c| c == name) {
                        return cfg_err(ln, format!("duplicate cell {name}"));
                    }
                    u.cells.push(name.to_string());
                    u.carriers.push(Vec::new());
                }
                "type" => {
                    let (name, cells) = rest
                        .split_once('=')
                        .ok_or_else(|| ConfigError::Line { line: ln, msg: "expected `type NAME = cells`".into() })?;
                    let name = name.trim();
                    if !is_ident(name) {
                        return cfg_err(ln, format!("invalid type name {name:?}"));
                    }
                    let mut set = BTreeSet::new();
                    for c in cells.split(',').map(str::trim).filter(|c| !c.is_empty()) {
                        match u.cell_by_name(c) {
                            Some(id) => {
                                set.insert(id);
                            }
                            None => return cfg_err(ln, format!("unknown cell {c}")),
                        }
                    }
                    if u.named.insert(name.to_string(), set).is_some() {
                        return cfg_err(ln, format!("duplicate type {name}"));
                    }
                }
                "singleton" => {
                    let (lit, cell) = rest
                        .split_once(" in ")
                        .ok_or_else(|| ConfigError::Line { line: ln, msg: "expected `singleton 'lit' in CELL`".into() })?;
                    let v = parse_literal(lit.trim())
                        .map_err(|msg| ConfigError::Line { line: ln, msg })?;
                    let cell = cell.trim();
                    let id = u
                        .cell_by_name(cell)
                        .ok_or_else(|| ConfigError::Line { line: ln, msg: format!("unknown cell {cell}") })?;
                    if u.singletons.insert(v, id).is_some() {
                        return cfg_err(ln, "duplicate singleton");
                    }
                }
                "carrier" => {
                    let (cell, lits) = rest
                        .split_once('=')
                        .ok_or_else(|| ConfigError::Line { line: ln, msg: "expected `carrier CELL = lits`".into() })?;
                    let cell = cell.trim();
                    let id = u
                        .cell_by_name(cell)
                        .ok_or_else(|| ConfigError::Line { line: ln, msg: format!("unknown cell {cell}") })?;
                    for lit in split_top_level(lits, ',') {
                        let v = parse_literal(lit.trim())
                            .map_err(|msg| ConfigError::Line { line: ln, msg })?;
                        u.carriers[id].push(v);
                    }
                }
                "fun" => {
                    let def = parse_fun(rest, ln)?;
                    if u.funs.contains_key(&def.name) {
                        return cfg_err(ln, format!("duplicate function {}", def.name));
                    }
                    u.funs.insert(def.name.clone(), def);
                }
                other => return cfg_err(ln, format!("unknown declaration {other:?}")),
            }
        }

        // Singleton values always carry their own cell.
        let singles: Vec<(Value, CellId)> =
            u.singletons.iter().map(|(v, c)| (v.clone(), *c)).collect();
        for (v, c) in singles {
            if !u.carriers[c].contains(&v) {
                u.carriers[c].push(v);
            }
        }

        // Derived value->cell index; also checks cell disjointness.
        for (id, vals) in u.carriers.iter().enumerate() {
            for v in vals {
                if let Some(prev) = u.value_cell.insert(v.clone(), id) {
                    if prev != id {
                        return Err(ConfigError::Global(format!(
                            "value {v} appears in cells {} and {}",
                            u.cells[prev], u.cells[id]
                        )));
                    }
                }
            }
        }
        for (id, vals) in u.carriers.iter().enumerate() {
            if vals.is_empty() {
                return Err(ConfigError::Global(format!(
                    "cell {} has no carrier values",
                    u.cells[id]
                )));
            }
        }

        // Function tables must agree with their signatures.
        for def in u.funs.values() {
            for (args, out) in &def.table {
                if args.len() != def.params.len() {
                    return Err(ConfigError::Global(format!(
                        "function {}: entry arity mismatch",
                        def.name
                    )));
                }
                for (a, p) in args.iter().zip(&def.params) {
                    if !u.value_has_type(a, p) {
                        return Err(ConfigError::Global(format!(
                            "function {}: argument {a} is not of the declared type",
                            def.name
                        )));
                    }
                }
                if !u.value_has_type(out, &def.result) {
                    return Err(ConfigError::Global(format!(
                        "function {}: result {out} is not of the declared type",
                        def.name
                    )));
                }
            }
        }

        Ok(u)
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits on a separator, ignoring occurrences inside string quotes.
fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth_quote = false;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '"' => depth_quote = !depth_quote,
            c if c == sep && !depth_quote => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out.into_iter().filter(|p| !p.trim().is_empty()).collect()
}

/// Parses a standalone value literal: integers, finite decimals, booleans,
/// `"strings"` and `'atoms'`.
pub fn parse_literal(s: &str) -> Result<Value, String> {
    let s = s.trim();
    if s == "true" {
        return Ok(Value::Bool(true));
    }
    if s == "false" {
        return Ok(Value::Bool(false));
    }
    if let Some(body) = s.strip_prefix('"').and_then(|t| t.strip_suffix('"')) {
        return Ok(Value::Str(body.to_string()));
    }
    if let Some(body) = s.strip_prefix('\'').and_then(|t| t.strip_suffix('\'')) {
        return Ok(Value::Sym(body.to_string()));
    }
    parse_number(s).ok_or_else(|| format!("invalid literal {s:?}"))
}

pub fn parse_number(s: &str) -> Option<Value> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return None;
    }
    let r = if let Some((int, frac)) = body.split_once('.') {
        if frac.is_empty() || frac.contains('.') {
            return None;
        }
        let scale = 10i64.checked_pow(frac.len() as u32)?;
        let int: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let frac: i64 = frac.parse().ok()?;
        Rational64::new(int.checked_mul(scale)?.checked_add(frac)?, scale)
    } else {
        Rational64::from_integer(body.parse().ok()?)
    };
    Some(Value::Num(if neg { -r } else { r }))
}

fn parse_fun(rest: &str, ln: usize) -> Result<FnDef, ConfigError> {
    // NAME(T, ...) -> T { k, ... -> v ; ... }
    let open = rest
        .find('(')
        .ok_or_else(|| ConfigError::Line { line: ln, msg: "expected parameter list".into() })?;
    let name = rest[..open].trim().to_string();
    if !is_ident(&name) {
        return cfg_err(ln, format!("invalid function name {name:?}"));
    }
    let close = rest
        .find(')')
        .ok_or_else(|| ConfigError::Line { line: ln, msg: "unclosed parameter list".into() })?;
    let params: Vec<BasicTypeExpr> = rest[open + 1..close]
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(BasicTypeExpr::named)
        .collect();
    let after = rest[close + 1..].trim();
    let after = after
        .strip_prefix("->")
        .ok_or_else(|| ConfigError::Line { line: ln, msg: "expected `->` after parameters".into() })?
        .trim();
    let brace = after
        .find('{')
        .ok_or_else(|| ConfigError::Line { line: ln, msg: "expected `{` table".into() })?;
    let result = BasicTypeExpr::named(after[..brace].trim());
    let body = after[brace + 1..]
        .strip_suffix('}')
        .ok_or_else(|| ConfigError::Line { line: ln, msg: "unclosed table".into() })?;
    let mut table = BTreeMap::new();
    for entry in split_top_level(body, ';') {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let (keys, val) = entry
            .split_once("->")
            .ok_or_else(|| ConfigError::Line { line: ln, msg: format!("bad table entry {entry:?}") })?;
        let keyvals: Result<Vec<Value>, String> =
            split_top_level(keys, ',').iter().map(|k| parse_literal(k.trim())).collect();
        let keyvals = keyvals.map_err(|msg| ConfigError::Line { line: ln, msg })?;
        let val = parse_literal(val.trim()).map_err(|msg| ConfigError::Line { line: ln, msg })?;
        table.insert(keyvals, val);
    }
    Ok(FnDef { name, params, result, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_universe_loads() {
        let u = Universe::default_universe();
        assert_eq!(u.cell_count(), 7);
        assert!(u.is_named_type("Int"));
        assert!(u.is_named_type("Real"));
        let int = u.denote(&BasicTypeExpr::named("Int"));
        let real = u.denote(&BasicTypeExpr::named("Real"));
        assert!(int.is_subset(&real) && int != real);
    }

    #[test]
    fn int_and_bool_are_disjoint() {
        let u = Universe::default_universe();
        let int = u.denote(&BasicTypeExpr::named("Int"));
        let bool_ = u.denote(&BasicTypeExpr::named("Bool"));
        assert!(int.intersection(&bool_).next().is_none());
        assert!(!u.bt_subtype(&BasicTypeExpr::named("Int"), &BasicTypeExpr::named("Bool")));
    }

    #[test]
    fn empty_denotes_nothing_and_is_bottom() {
        let u = Universe::default_universe();
        assert!(u.denote(&BasicTypeExpr::Empty).is_empty());
        for name in ["Int", "Real", "Bool", "String"] {
            assert!(u.bt_subtype(&BasicTypeExpr::Empty, &BasicTypeExpr::named(name)));
        }
    }

    #[test]
    fn singleton_owns_its_cell() {
        let u = Universe::default_universe();
        let abort = BasicTypeExpr::Singleton(Value::Sym("abort".into()));
        let cells = u.denote(&abort);
        assert_eq!(cells.len(), 1);
        assert!(u.value_has_type(&Value::Sym("abort".into()), &abort));
        assert!(!u.value_has_type(&Value::Bool(true), &abort));
    }

    #[test]
    fn literal_types_pick_smallest_named_type() {
        let u = Universe::default_universe();
        assert_eq!(u.literal_type(&Value::int(3)).unwrap(), BasicTypeExpr::named("Int"));
        assert_eq!(
            u.literal_type(&Value::Str("The Origin of Species".into())).unwrap(),
            BasicTypeExpr::named("String")
        );
        assert_eq!(
            u.literal_type(&Value::Sym("abort".into())).unwrap(),
            BasicTypeExpr::Singleton(Value::Sym("abort".into()))
        );
    }

    #[test]
    fn function_tables_apply() {
        let u = Universe::default_universe();
        let price = u.fun("price").unwrap();
        let key = vec![Value::Str("The Origin of Species".into())];
        assert_eq!(price.table.get(&key), Some(&Value::int(30)));
        let isprime = u.fun("isprime").unwrap();
        assert_eq!(isprime.table.get(&vec![Value::int(4)]), Some(&Value::Bool(false)));
        assert_eq!(isprime.table.get(&vec![Value::int(7)]), Some(&Value::Bool(true)));
    }

    #[test]
    fn rejects_overlapping_cells() {
        let src = "cell a\ncell b\ncarrier a = 1\ncarrier b = 1";
        assert!(Universe::parse(src).is_err());
    }

    #[test]
    fn decimal_literals_round_trip() {
        assert_eq!(parse_literal("1.5").unwrap().to_string(), "1.5");
        assert_eq!(parse_literal("-2").unwrap().to_string(), "-2");
        assert_eq!(parse_literal("3.25").unwrap().to_string(), "3.25");
    }
}
