//! Session-type analysis for value-passing processes.
//!
//! The library is organised in layers:
//!
//! * [`universe`] — finite value universe: cells, named types, singleton
//!   types, and function tables.
//! * [`types`] — hash-consed session-type terms with canonical constructors,
//!   well-formedness checks, and a pretty printer.
//! * [`parser`] — concrete syntax for types, processes, and expressions.
//! * [`semantics`] — the transition system of a type and the completion
//!   check (success reachable from every internally reachable state).
//! * [`relations`] — viability, the weak and strong refinement preorders,
//!   and their three-valued decision procedures.
//! * [`process`] — the process calculus: reduction, scope extrusion, and
//!   canonical forms.
//! * [`typing`] — the type system for processes, with per-restriction
//!   completion checks and replication obligations.
//! * [`harness`] — simulation, subject-reduction and progress checking, the
//!   built-in example corpus, and the algebraic-law suite.
//! * [`cli`] — the command-line interface.

pub mod cli;
pub mod harness;
pub mod parser;
pub mod process;
pub mod relations;
pub mod semantics;
pub mod types;
pub mod typing;
pub mod universe;

pub use relations::{Verdict, Witness};
pub use types::{Bound, Ctx, TypeId};
pub use universe::Universe;
