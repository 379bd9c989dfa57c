//! A Constraint Handling Rules engine and static analyzer for type-class
//! inference with functional dependencies.
//!
//! Class and instance declarations translate into CHR rules; depth-bounded
//! CHR derivations answer inference goals; and three static checks —
//! syntactic range-restriction, local confluence via critical pairs, and
//! ground termination via rank certificates — establish that bounded
//! inference returns consistent, unique answers even when the rule set is
//! not terminating in general.
//!
//! The `examples/` directory has one runnable example per capability; the
//! `chrtc` binary exposes the same workflows as `translate`, `infer`,
//! `check` and `project` subcommands.

pub mod confluence;
pub mod driver;
pub mod engine;
pub mod frontend;
pub mod parse;
pub mod state;
pub mod term;
pub mod termination;

pub use engine::{
    applicable, derive, derive_trace, reachable, step, Outcome, Program, Redex, Rule, RuleKind,
    Strategy,
};
pub use parse::{parse_goal, parse_program, parse_rule, parse_term, ParseError};
pub use state::{state_equiv, NormalState, State};
pub use term::{match_into, match_multiset, unify, unify_pairs, Constraint, Subst, Term, Var};
