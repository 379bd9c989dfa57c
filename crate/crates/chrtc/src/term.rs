//! First-order terms in Haskell type notation, substitutions, unification
//! and multiset matching.
//!
//! Functors start with an upper-case letter, variables with a lower-case
//! letter, application is whitespace and `[t]` abbreviates `List t`. Terms
//! are finite trees; unification carries an occurs check.

use serde::ser::Serializer;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// The functor name used by the `[t]` list sugar.
pub const LIST_FUNCTOR: &str = "List";

/// A variable together with the class it belongs to.
///
/// Rule text introduces program variables, goal text introduces global
/// variables, and local variables are minted by the engine when a rule
/// body brings fresh existentials into a state. The three classes are
/// disjoint by construction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Program(String),
    Global(String),
    Local(u32),
}

impl Var {
    pub fn is_local(&self) -> bool {
        matches!(self, Var::Local(_))
    }

    pub fn is_global(&self) -> bool {
        matches!(self, Var::Global(_))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Program(n) | Var::Global(n) => write!(f, "{n}"),
            Var::Local(i) => write!(f, "_{i}"),
        }
    }
}

/// A finite first-order term: a variable or a functor applied to terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    pub fn app(functor: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(functor.into(), args)
    }

    /// `[t]`, i.e. `List t`.
    pub fn list(elem: Term) -> Term {
        Term::App(LIST_FUNCTOR.to_string(), vec![elem])
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::App(_, args) => args.iter().any(|t| t.contains_var(v)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    /// All subterms including the term itself.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = vec![self];
        if let Term::App(_, args) = self {
            for a in args {
                out.extend(a.subterms());
            }
        }
        out
    }

    /// Rewrites every variable through `f`.
    pub fn map_vars(&self, f: &impl Fn(&Var) -> Var) -> Term {
        match self {
            Term::Var(v) => Term::Var(f(v)),
            Term::App(name, args) => {
                Term::App(name.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(name, args) if name == LIST_FUNCTOR && args.len() == 1 => {
                write!(f, "[{}]", args[0])
            }
            Term::App(name, args) => {
                write!(f, "{name}")?;
                for a in args {
                    write!(f, " ")?;
                    fmt_atom(a, f)?;
                }
                Ok(())
            }
        }
    }
}

/// Writes `t` as it appears in argument position: applications with
/// arguments need parentheses, everything else is already atomic.
fn fmt_atom(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Var(_) => write!(f, "{t}"),
        Term::App(name, args) if args.is_empty() || (name == LIST_FUNCTOR && args.len() == 1) => {
            write!(f, "{t}")
        }
        Term::App(..) => write!(f, "({t})"),
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A single constraint: a built-in (`True`, `False`, an equation) or a
/// user constraint, i.e. an uninterpreted predicate over terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    True,
    False,
    Eq(Term, Term),
    User(String, Vec<Term>),
}

impl Constraint {
    pub fn user(name: impl Into<String>, args: Vec<Term>) -> Constraint {
        Constraint::User(name.into(), args)
    }

    pub fn is_user(&self) -> bool {
        matches!(self, Constraint::User(..))
    }

    pub fn is_builtin(&self) -> bool {
        !self.is_user()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Constraint::True | Constraint::False => {}
            Constraint::Eq(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Constraint::User(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        self.vars().is_empty()
    }

    pub fn map_vars(&self, f: &impl Fn(&Var) -> Var) -> Constraint {
        match self {
            Constraint::True => Constraint::True,
            Constraint::False => Constraint::False,
            Constraint::Eq(l, r) => Constraint::Eq(l.map_vars(f), r.map_vars(f)),
            Constraint::User(name, args) => {
                Constraint::User(name.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
        }
    }
}

pub fn vars_of(cs: &[Constraint]) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    for c in cs {
        c.collect_vars(&mut out);
    }
    out
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::True => write!(f, "True"),
            Constraint::False => write!(f, "False"),
            Constraint::Eq(l, r) => write!(f, "{l} = {r}"),
            Constraint::User(name, args) => {
                write!(f, "{name}")?;
                for a in args {
                    write!(f, " ")?;
                    fmt_atom(a, f)?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for Constraint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A substitution in solved (triangular, idempotent) form: domain
/// variables never occur in range terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Subst {
    map: BTreeMap<Var, Term>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    /// Inserts `v -> t` without touching existing entries. Used by
    /// matching, where bindings are built up left to right and never
    /// rewritten.
    pub fn insert_raw(&mut self, v: Var, t: Term) {
        self.map.insert(v, t);
    }

    /// Binds `v -> t` and keeps the solved form: the new binding is
    /// applied to every existing range term first.
    pub fn bind(&mut self, v: Var, t: Term) {
        let mut single = Subst::new();
        single.map.insert(v.clone(), t.clone());
        for range in self.map.values_mut() {
            *range = single.apply_term(range);
        }
        self.map.insert(v, t);
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => match self.map.get(v) {
                Some(img) => img.clone(),
                None => t.clone(),
            },
            Term::App(name, args) => Term::App(
                name.clone(),
                args.iter().map(|a| self.apply_term(a)).collect(),
            ),
        }
    }

    pub fn apply_var(&self, v: &Var) -> Term {
        self.apply_term(&Term::Var(v.clone()))
    }

    pub fn apply_constraint(&self, c: &Constraint) -> Constraint {
        match c {
            Constraint::True => Constraint::True,
            Constraint::False => Constraint::False,
            Constraint::Eq(l, r) => Constraint::Eq(self.apply_term(l), self.apply_term(r)),
            Constraint::User(name, args) => Constraint::User(
                name.clone(),
                args.iter().map(|a| self.apply_term(a)).collect(),
            ),
        }
    }

    pub fn apply_constraints(&self, cs: &[Constraint]) -> Vec<Constraint> {
        cs.iter().map(|c| self.apply_constraint(c)).collect()
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} -> {t}")?;
        }
        write!(f, "}}")
    }
}

/// Most general unifier of `t1` and `t2` under finite-tree equality, or
/// `None` when no unifier exists. The occurs check is enforced: `a` and
/// `[a]` do not unify.
pub fn unify(t1: &Term, t2: &Term) -> Option<Subst> {
    unify_pairs(vec![(t1.clone(), t2.clone())])
}

/// Simultaneous mgu of a list of term equations.
///
/// Variable-variable equations eliminate the greater variable under the
/// `Var` ordering, so locals are eliminated before globals and the solved
/// form is deterministic.
pub fn unify_pairs(pairs: Vec<(Term, Term)>) -> Option<Subst> {
    let mut subst = Subst::new();
    let mut queue = pairs;
    while let Some((a, b)) = queue.pop() {
        let a = subst.apply_term(&a);
        let b = subst.apply_term(&b);
        if a == b {
            continue;
        }
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                if x > y {
                    subst.bind(x, Term::Var(y));
                } else {
                    subst.bind(y, Term::Var(x));
                }
            }
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if t.contains_var(&x) {
                    return None;
                }
                subst.bind(x, t);
            }
            (Term::App(f, xs), Term::App(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                queue.extend(xs.into_iter().zip(ys));
            }
        }
    }
    Some(subst)
}

/// One-way matching of a pattern term against a target: only pattern
/// variables may be bound, target variables behave as constants.
fn match_term(pattern: &Term, target: &Term, subst: &mut Subst) -> bool {
    match (pattern, target) {
        (Term::Var(v), t) => match subst.get(v) {
            Some(bound) => bound == t,
            None => {
                subst.insert_raw(v.clone(), t.clone());
                true
            }
        },
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, subst))
        }
        (Term::App(..), Term::Var(_)) => false,
    }
}

fn match_user(pattern: &Constraint, target: &Constraint, subst: &mut Subst) -> bool {
    match (pattern, target) {
        (Constraint::User(f, xs), Constraint::User(g, ys)) => {
            f == g
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, subst))
        }
        _ => false,
    }
}

/// Every way of matching `pattern` onto a sub-multiset of `targets`.
///
/// Returns substitutions paired with the target indexes consumed, one per
/// pattern position. Enumeration order is deterministic: pattern order
/// outermost, ascending target index innermost.
pub fn match_into(pattern: &[Constraint], targets: &[Constraint]) -> Vec<(Subst, Vec<usize>)> {
    let mut out = Vec::new();
    let mut used = vec![false; targets.len()];
    let mut picked = Vec::with_capacity(pattern.len());
    match_into_rec(
        pattern,
        targets,
        &Subst::new(),
        &mut used,
        &mut picked,
        &mut out,
    );
    out
}

fn match_into_rec(
    pattern: &[Constraint],
    targets: &[Constraint],
    subst: &Subst,
    used: &mut Vec<bool>,
    picked: &mut Vec<usize>,
    out: &mut Vec<(Subst, Vec<usize>)>,
) {
    let Some(first) = pattern.first() else {
        out.push((subst.clone(), picked.clone()));
        return;
    };
    for (i, target) in targets.iter().enumerate() {
        if used[i] {
            continue;
        }
        let mut next = subst.clone();
        if match_user(first, target, &mut next) {
            used[i] = true;
            picked.push(i);
            match_into_rec(&pattern[1..], targets, &next, used, picked, out);
            picked.pop();
            used[i] = false;
        }
    }
}

/// All substitutions making `pattern` equal to `target` as multisets.
/// One-way: target variables are never bound. Duplicate substitutions
/// arising from symmetric alignments are collapsed.
pub fn match_multiset(pattern: &[Constraint], target: &[Constraint]) -> Vec<Subst> {
    if pattern.len() != target.len() {
        return Vec::new();
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (subst, _) in match_into(pattern, target) {
        if seen.insert(subst.clone()) {
            out.push(subst);
        }
    }
    out
}
