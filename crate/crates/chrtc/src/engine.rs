//! CHR rules, programs and the derivation relation: simplification
//! replaces matched head constraints by the rule body, propagation keeps
//! them. No propagation histories are kept; a propagation redex is
//! discarded instead when firing it would leave the state unchanged.

use crate::state::{state_equiv, State};
use crate::term::{match_into, vars_of, Constraint, Subst, Term, Var};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RuleKind {
    Simp,
    Prop,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule `{0}` has an empty head")]
    EmptyHead(String),
    #[error("rule `{0}` has a non-user constraint in its head")]
    BuiltinInHead(String),
    #[error("duplicate rule name `{0}`")]
    DuplicateName(String),
}

/// A CHR rule over program variables. The local variables of a rule are
/// the body variables that do not occur in the head; they are instantiated
/// fresh at every application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    name: String,
    kind: RuleKind,
    head: Vec<Constraint>,
    body: Vec<Constraint>,
}

impl Rule {
    pub fn new(
        name: impl Into<String>,
        kind: RuleKind,
        head: Vec<Constraint>,
        body: Vec<Constraint>,
    ) -> Result<Rule, RuleError> {
        let name = name.into();
        if head.is_empty() {
            return Err(RuleError::EmptyHead(name));
        }
        if head.iter().any(Constraint::is_builtin) {
            return Err(RuleError::BuiltinInHead(name));
        }
        Ok(Rule {
            name,
            kind,
            head,
            body,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn head(&self) -> &[Constraint] {
        &self.head
    }

    pub fn body(&self) -> &[Constraint] {
        &self.body
    }

    pub fn head_vars(&self) -> BTreeSet<Var> {
        vars_of(&self.head)
    }

    pub fn body_vars(&self) -> BTreeSet<Var> {
        vars_of(&self.body)
    }

    /// Body variables not occurring in the head.
    pub fn local_vars(&self) -> BTreeSet<Var> {
        let head = self.head_vars();
        self.body_vars()
            .into_iter()
            .filter(|v| !head.contains(v))
            .collect()
    }

    pub fn is_purely_builtin_body(&self) -> bool {
        self.body.iter().all(Constraint::is_builtin)
    }

    /// Renames every variable of the rule through `f`.
    pub fn map_vars(&self, f: &impl Fn(&Var) -> Var) -> Rule {
        Rule {
            name: self.name.clone(),
            kind: self.kind,
            head: self.head.iter().map(|c| c.map_vars(f)).collect(),
            body: self.body.iter().map(|c| c.map_vars(f)).collect(),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ ", self.name)?;
        for (i, c) in self.head.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        match self.kind {
            RuleKind::Simp => write!(f, " <=> ")?,
            RuleKind::Prop => write!(f, " ==> ")?,
        }
        for (i, c) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ".")
    }
}

/// An ordered list of rules with unique names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    rules: Vec<Rule>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Result<Program, RuleError> {
        let mut seen = BTreeSet::new();
        for r in &rules {
            if !seen.insert(r.name.clone()) {
                return Err(RuleError::DuplicateName(r.name.clone()));
            }
        }
        Ok(Program { rules })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, index: usize) -> &Rule {
        &self.rules[index]
    }

    /// User-constraint names occurring in any rule head.
    pub fn head_constraint_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            for c in r.head() {
                if let Constraint::User(name, _) = c {
                    out.insert(name.clone());
                }
            }
        }
        out
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

type VarMap = std::collections::BTreeMap<Var, Var>;

/// Rule equality modulo a bijective renaming of variables. Equations in
/// the body match in either orientation.
pub fn rule_alpha_eq(a: &Rule, b: &Rule) -> bool {
    if a.kind != b.kind || a.head.len() != b.head.len() || a.body.len() != b.body.len() {
        return false;
    }
    fn match_terms(x: &Term, y: &Term, fwd: &mut VarMap, bwd: &mut VarMap) -> bool {
        match (x, y) {
            (Term::Var(v), Term::Var(w)) => match (fwd.get(v), bwd.get(w)) {
                (Some(w2), _) => w2 == w,
                (None, Some(_)) => false,
                (None, None) => {
                    fwd.insert(v.clone(), w.clone());
                    bwd.insert(w.clone(), v.clone());
                    true
                }
            },
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| match_terms(x, y, fwd, bwd))
            }
            _ => false,
        }
    }
    fn match_constraints(
        x: &Constraint,
        y: &Constraint,
        fwd: &mut VarMap,
        bwd: &mut VarMap,
    ) -> bool {
        match (x, y) {
            (Constraint::True, Constraint::True) | (Constraint::False, Constraint::False) => true,
            (Constraint::Eq(l1, r1), Constraint::Eq(l2, r2)) => {
                let straight = {
                    let mut f2 = fwd.clone();
                    let mut b2 = bwd.clone();
                    if match_terms(l1, l2, &mut f2, &mut b2)
                        && match_terms(r1, r2, &mut f2, &mut b2)
                    {
                        *fwd = f2;
                        *bwd = b2;
                        true
                    } else {
                        false
                    }
                };
                if straight {
                    return true;
                }
                let mut f2 = fwd.clone();
                let mut b2 = bwd.clone();
                if match_terms(l1, r2, &mut f2, &mut b2) && match_terms(r1, l2, &mut f2, &mut b2) {
                    *fwd = f2;
                    *bwd = b2;
                    true
                } else {
                    false
                }
            }
            (Constraint::User(f, xs), Constraint::User(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| match_terms(x, y, fwd, bwd))
            }
            _ => false,
        }
    }
    fn match_multisets(
        rest: &[Constraint],
        used: &mut Vec<bool>,
        targets: &[Constraint],
        fwd: &mut VarMap,
        bwd: &mut VarMap,
        then: &mut dyn FnMut(&mut VarMap, &mut VarMap) -> bool,
    ) -> bool {
        let Some(first) = rest.first() else {
            return then(fwd, bwd);
        };
        for i in 0..targets.len() {
            if used[i] {
                continue;
            }
            let mut f2 = fwd.clone();
            let mut b2 = bwd.clone();
            if match_constraints(first, &targets[i], &mut f2, &mut b2) {
                used[i] = true;
                if match_multisets(&rest[1..], used, targets, &mut f2, &mut b2, then) {
                    used[i] = false;
                    *fwd = f2;
                    *bwd = b2;
                    return true;
                }
                used[i] = false;
            }
        }
        false
    }
    let mut fwd = std::collections::BTreeMap::new();
    let mut bwd = std::collections::BTreeMap::new();
    let body_a = a.body.clone();
    let body_b = b.body.clone();
    match_multisets(
        &a.head,
        &mut vec![false; b.head.len()],
        &b.head,
        &mut fwd,
        &mut bwd,
        &mut |fwd, bwd| {
            match_multisets(
                &body_a,
                &mut vec![false; body_b.len()],
                &body_b,
                fwd,
                bwd,
                &mut |_, _| true,
            )
        },
    )
}

/// One applicable rule instance: the rule, the matching substitution and
/// the indexes of the matched user constraints in the state's store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Redex {
    pub rule_index: usize,
    pub theta: Subst,
    pub matched: Vec<usize>,
}

/// How the propagation side condition compares the candidate successor
/// with the current state. The default compares modulo state equivalence,
/// which is what keeps purely built-in propagation rules from looping;
/// `Syntactic` compares normalized representations structurally and is
/// provided for comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PropagationCheck {
    #[default]
    ModuloEquiv,
    Syntactic,
}

/// Enumerates every applicable redex of `p` in `s`, in deterministic
/// order: program rule order first, then lexicographic order of the
/// matched user-constraint indexes. Propagation redexes whose application
/// would not change the state are excluded.
pub fn applicable(p: &Program, s: &State) -> Vec<Redex> {
    applicable_with(p, s, PropagationCheck::default())
}

pub fn applicable_with(p: &Program, s: &State, check: PropagationCheck) -> Vec<Redex> {
    let Some(ns) = s.as_normal() else {
        return Vec::new();
    };
    let mut out: Vec<Redex> = Vec::new();
    let mut seen: BTreeSet<(usize, Vec<usize>, Subst)> = BTreeSet::new();
    for (rule_index, rule) in p.rules.iter().enumerate() {
        for (theta, picked) in match_into(rule.head(), ns.users()) {
            let mut matched = picked;
            matched.sort_unstable();
            if !seen.insert((rule_index, matched.clone(), theta.clone())) {
                continue;
            }
            let redex = Redex {
                rule_index,
                theta,
                matched,
            };
            if rule.kind == RuleKind::Prop {
                let candidate = step(p, s, &redex);
                let redundant = match check {
                    PropagationCheck::ModuloEquiv => state_equiv(&candidate, s),
                    PropagationCheck::Syntactic => candidate == *s,
                };
                if redundant {
                    continue;
                }
            }
            out.push(redex);
        }
    }
    out
}

/// Applies one redex: body locals are instantiated with fresh local
/// variables, simplification removes the matched constraints, propagation
/// keeps them, and the result is normalized (possibly to `False`).
pub fn step(p: &Program, s: &State, r: &Redex) -> State {
    let ns = s.as_normal().expect("step on the False state");
    let rule = &p.rules[r.rule_index];
    let mut theta = r.theta.clone();
    let fresh = ns.fresh_local_base();
    for (k, v) in rule.local_vars().into_iter().enumerate() {
        theta.insert_raw(v, Term::Var(Var::Local(fresh + k as u32)));
    }
    let mut raw: Vec<Constraint> = Vec::new();
    match rule.kind {
        RuleKind::Simp => {
            let matched: BTreeSet<usize> = r.matched.iter().copied().collect();
            for (i, c) in ns.users().iter().enumerate() {
                if !matched.contains(&i) {
                    raw.push(c.clone());
                }
            }
        }
        RuleKind::Prop => raw.extend(ns.users().iter().cloned()),
    }
    for (v, t) in ns.eqs().iter() {
        raw.push(Constraint::Eq(Term::Var(v.clone()), t.clone()));
    }
    raw.extend(theta.apply_constraints(rule.body()));
    State::normalize(raw, ns.globals().clone())
}

/// Redex selection strategy for `derive`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// First rule in program order, first redex in enumeration order.
    FirstMatch,
    /// Uniform choice driven by a seeded generator.
    Random(u64),
    /// Index list consumed one entry per step, taken modulo the number of
    /// redexes; used by tests.
    Scripted(Vec<usize>),
}

/// Result of a bounded derivation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// A state admitting no further step, reached within the bound.
    FinalState { state: State, steps: usize },
    /// The bound was reached with redexes remaining.
    DepthExceeded { state: State, steps: usize },
    /// The derivation collapsed to `False`.
    FalseState { steps: usize },
}

impl Outcome {
    pub fn steps(&self) -> usize {
        match self {
            Outcome::FinalState { steps, .. }
            | Outcome::DepthExceeded { steps, .. }
            | Outcome::FalseState { steps } => *steps,
        }
    }

    /// The answer state: the final state, or `False` for a collapsed run.
    /// `None` when the bound was exceeded.
    pub fn answer(&self) -> Option<State> {
        match self {
            Outcome::FinalState { state, .. } => Some(state.clone()),
            Outcome::FalseState { .. } => Some(State::False),
            Outcome::DepthExceeded { .. } => None,
        }
    }
}

/// Runs a bounded derivation from `s`, picking one redex per step
/// according to `strat`.
pub fn derive(p: &Program, s: &State, bound: usize, strat: &Strategy) -> Outcome {
    derive_trace(p, s, bound, strat).0
}

/// Like `derive`, also returning every state visited, the initial state
/// first.
pub fn derive_trace(
    p: &Program,
    s: &State,
    bound: usize,
    strat: &Strategy,
) -> (Outcome, Vec<State>) {
    let mut trace = vec![s.clone()];
    let mut state = s.clone();
    let mut rng = match strat {
        Strategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let mut steps = 0;
    loop {
        if state.is_false() {
            return (Outcome::FalseState { steps }, trace);
        }
        let redexes = applicable(p, &state);
        if redexes.is_empty() {
            return (Outcome::FinalState { state, steps }, trace);
        }
        if steps == bound {
            return (Outcome::DepthExceeded { state, steps }, trace);
        }
        let choice = match strat {
            Strategy::FirstMatch => 0,
            Strategy::Random(_) => rng.as_mut().unwrap().gen_range(0..redexes.len()),
            Strategy::Scripted(script) => script.get(steps).copied().unwrap_or(0) % redexes.len(),
        };
        state = step(p, &state, &redexes[choice]);
        steps += 1;
        trace.push(state.clone());
    }
}

/// The set of states reachable within `depth` steps, exploring every
/// redex at every state and deduplicating modulo state equivalence.
#[derive(Clone, Debug)]
pub struct Reachable {
    /// Reached states with their minimal depth.
    pub states: Vec<(State, usize)>,
    /// True when the search stopped because the state budget `width` was
    /// exhausted; the result is then incomplete.
    pub truncated: bool,
    /// True when every frontier state was expanded to quiescence before
    /// the depth bound, i.e. the listed states are all reachable states.
    pub quiescent: bool,
}

impl Reachable {
    pub fn contains_equiv(&self, s: &State) -> bool {
        self.states.iter().any(|(t, _)| state_equiv(t, s))
    }
}

pub fn reachable(p: &Program, s: &State, depth: usize, width: usize) -> Reachable {
    use std::collections::HashMap;
    let mut states: Vec<(State, usize)> = Vec::new();
    let mut buckets: HashMap<String, Vec<usize>> = HashMap::new();
    let mut truncated = false;
    let mut quiescent = true;
    let mut queue: std::collections::VecDeque<usize> = Default::default();

    let insert = |st: State,
                  d: usize,
                  states: &mut Vec<(State, usize)>,
                  buckets: &mut HashMap<String, Vec<usize>>|
     -> Option<usize> {
        let fp = st.fingerprint();
        if let Some(ids) = buckets.get(&fp) {
            for &i in ids {
                if state_equiv(&states[i].0, &st) {
                    return None;
                }
            }
        }
        let idx = states.len();
        states.push((st, d));
        buckets.entry(fp).or_default().push(idx);
        Some(idx)
    };

    if let Some(i) = insert(s.clone(), 0, &mut states, &mut buckets) {
        queue.push_back(i);
    }
    while let Some(i) = queue.pop_front() {
        if truncated {
            break;
        }
        let (st, d) = states[i].clone();
        if st.is_false() {
            continue;
        }
        let redexes = applicable(p, &st);
        if d == depth {
            if !redexes.is_empty() {
                quiescent = false;
            }
            continue;
        }
        for r in &redexes {
            let next = step(p, &st, r);
            if states.len() >= width {
                // only flag when the successor is genuinely new
                let fp = next.fingerprint();
                let dup = buckets
                    .get(&fp)
                    .is_some_and(|ids| ids.iter().any(|&j| state_equiv(&states[j].0, &next)));
                if !dup {
                    truncated = true;
                    break;
                }
                continue;
            }
            if let Some(j) = insert(next, d + 1, &mut states, &mut buckets) {
                queue.push_back(j);
            }
        }
    }
    if truncated {
        quiescent = false;
    }
    Reachable {
        states,
        truncated,
        quiescent,
    }
}
