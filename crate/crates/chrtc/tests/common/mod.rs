//! Shared fixtures and random generators for the integration suites.

#![allow(dead_code)]

use chrtc::engine::Program;
use chrtc::frontend::{parse_decls, translate};
use chrtc::parse::parse_program;
use chrtc::term::{Constraint, Term, Var};
use rand::Rng;
use std::path::PathBuf;

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// Translates a declaration fixture.
pub fn decl_program(name: &str, fuse: bool) -> Program {
    let decls = parse_decls(&fixture(name)).expect("fixture parses");
    translate(&decls, fuse)
}

/// Parses a CHR program fixture.
pub fn chr_program(name: &str) -> Program {
    parse_program(&fixture(name)).expect("fixture parses")
}

/// A term signature: functor names with arities.
#[derive(Clone, Copy)]
pub struct Sig(pub &'static [(&'static str, usize)]);

pub const LIST_SIG: Sig = Sig(&[("Int", 0), ("Bool", 0), ("List", 1)]);
pub const NAT_SIG: Sig = Sig(&[("Zero", 0), ("Bool", 0), ("Succ", 1)]);

impl Sig {
    fn nullary(&self) -> Vec<&'static str> {
        self.0
            .iter()
            .filter(|(_, a)| *a == 0)
            .map(|(n, _)| *n)
            .collect()
    }
}

/// A random ground term of depth at most `depth`.
pub fn ground_term(rng: &mut impl Rng, sig: Sig, depth: usize) -> Term {
    if depth == 0 {
        let nullary = sig.nullary();
        let name = nullary[rng.gen_range(0..nullary.len())];
        return Term::app(name, vec![]);
    }
    let (name, arity) = sig.0[rng.gen_range(0..sig.0.len())];
    let args = (0..arity)
        .map(|_| ground_term(rng, sig, depth - 1))
        .collect();
    Term::app(name, args)
}

/// A random term that may bottom out in global variables drawn from
/// `vars`.
pub fn open_term(rng: &mut impl Rng, sig: Sig, vars: &[&str], depth: usize) -> Term {
    if !vars.is_empty() && rng.gen_bool(0.3) {
        let name = vars[rng.gen_range(0..vars.len())];
        return Term::Var(Var::Global(name.to_string()));
    }
    if depth == 0 {
        let nullary = sig.nullary();
        let name = nullary[rng.gen_range(0..nullary.len())];
        return Term::app(name, vec![]);
    }
    let (name, arity) = sig.0[rng.gen_range(0..sig.0.len())];
    let args = (0..arity)
        .map(|_| open_term(rng, sig, vars, depth - 1))
        .collect();
    Term::app(name, args)
}

/// A goal family: constraint names with arities plus the term signature
/// their arguments range over.
#[derive(Clone, Copy)]
pub struct GoalFamily {
    pub constraints: &'static [(&'static str, usize)],
    pub sig: Sig,
}

pub const F_GOALS: GoalFamily = GoalFamily {
    constraints: &[("F", 2)],
    sig: LIST_SIG,
};
pub const COLL_GOALS: GoalFamily = GoalFamily {
    constraints: &[("Coll", 2), ("Eq", 1)],
    sig: LIST_SIG,
};
pub const ADD_GOALS: GoalFamily = GoalFamily {
    constraints: &[("Add", 3)],
    sig: NAT_SIG,
};
pub const EQ_GOALS: GoalFamily = GoalFamily {
    constraints: &[("Eq", 1)],
    sig: LIST_SIG,
};
pub const P_GOALS: GoalFamily = GoalFamily {
    constraints: &[("P", 1)],
    sig: LIST_SIG,
};

/// A random ground goal of one to `max_constraints` constraints.
pub fn ground_goal(
    rng: &mut impl Rng,
    family: GoalFamily,
    max_constraints: usize,
    depth: usize,
) -> Vec<Constraint> {
    let n = rng.gen_range(1..=max_constraints);
    (0..n)
        .map(|_| {
            let (name, arity) = family.constraints[rng.gen_range(0..family.constraints.len())];
            let args = (0..arity)
                .map(|_| {
                    let d = rng.gen_range(0..=depth);
                    ground_term(rng, family.sig, d)
                })
                .collect();
            Constraint::user(name, args)
        })
        .collect()
}

/// A random goal over the given global variable pool.
pub fn open_goal(
    rng: &mut impl Rng,
    family: GoalFamily,
    vars: &[&str],
    max_constraints: usize,
    depth: usize,
) -> Vec<Constraint> {
    let n = rng.gen_range(1..=max_constraints);
    (0..n)
        .map(|_| {
            let (name, arity) = family.constraints[rng.gen_range(0..family.constraints.len())];
            let args = (0..arity)
                .map(|_| {
                    let d = rng.gen_range(0..=depth);
                    open_term(rng, family.sig, vars, d)
                })
                .collect();
            Constraint::user(name, args)
        })
        .collect()
}
