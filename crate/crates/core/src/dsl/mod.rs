//! A small, total language for IPD strategies.
//!
//! A program is a first move, an ordered list of guarded rules (first match
//! wins), a mandatory default, and optional bounded integer registers with
//! guarded updates that run after every round. There are no loops or
//! user-defined functions, so every evaluation terminates in
//! O(rules x MAX_WINDOW) time. Programs only see the [`GameView`], their
//! own registers and the match's strategy stream.
//!
//! The grammar is published in `docs/grammar.ebnf`.
//!
//! [`GameView`]: crate::game::GameView

pub mod ast;
pub mod eval;
pub mod parser;
pub mod pretty;
pub mod validate;

pub use ast::{Move, StrategySpec, MAX_ITEMS, MAX_WINDOW};
pub use eval::{decide, update_registers, DslStrategy, Registers};
pub use parser::{extract_header, parse, DslError, LimitError, ParseError};
pub use pretty::pretty_print;
pub use validate::{has_errors, validate, Diagnostic, Severity};
