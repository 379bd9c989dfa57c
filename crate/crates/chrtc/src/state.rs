//! CHR states: multisets of constraints over global and local variables,
//! normalized to a user-constraint store plus a solved equality store, or
//! the distinguished `False` state.
//!
//! Two states are equal as states when one is a bijective renaming of the
//! other's local variables; `state_equiv` decides that relation. After
//! normalization local variables are renumbered by first occurrence in a
//! deterministic traversal, so structurally equal states are the common
//! fast path.

use crate::term::{unify_pairs, Constraint, Subst, Term, Var};
use serde::ser::Serializer;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A normalized non-`False` state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct NormalState {
    /// User constraints, closed under `eqs`, in canonical sorted order.
    users: Vec<Constraint>,
    /// Solved equality store restricted to the bound global variables.
    eqs: Subst,
    /// The global variables of the state, bound or not.
    globals: BTreeSet<String>,
}

/// A CHR state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum State {
    False,
    Normal(NormalState),
}

impl NormalState {
    pub fn users(&self) -> &[Constraint] {
        &self.users
    }

    pub fn eqs(&self) -> &Subst {
        &self.eqs
    }

    pub fn globals(&self) -> &BTreeSet<String> {
        &self.globals
    }

    /// Local variables visible in the store or in the image of a global.
    pub fn locals(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        let mut vars = BTreeSet::new();
        for c in &self.users {
            c.collect_vars(&mut vars);
        }
        for (_, t) in self.eqs.iter() {
            t.collect_vars(&mut vars);
        }
        for v in vars {
            if let Var::Local(i) = v {
                out.insert(i);
            }
        }
        out
    }

    /// Smallest local id not occurring in the state.
    pub fn fresh_local_base(&self) -> u32 {
        self.locals().iter().max().map(|m| m + 1).unwrap_or(0)
    }

    /// The state flattened back into a raw constraint multiset.
    pub fn to_constraints(&self) -> Vec<Constraint> {
        let mut out: Vec<Constraint> = self.users.clone();
        for (v, t) in self.eqs.iter() {
            out.push(Constraint::Eq(Term::Var(v.clone()), t.clone()));
        }
        out
    }
}

impl State {
    /// Builds a state from a raw constraint multiset: solves all equations
    /// into one mgu, collapses to `False` on an unsatisfiable equation or
    /// an explicit `False`, drops `True`, closes the user store under the
    /// mgu and renumbers local variables canonically.
    pub fn normalize(raw: Vec<Constraint>, mut globals: BTreeSet<String>) -> State {
        for v in crate::term::vars_of(&raw) {
            if let Var::Global(name) = v {
                globals.insert(name);
            }
        }
        let mut equations = Vec::new();
        let mut users = Vec::new();
        for c in raw {
            match c {
                Constraint::True => {}
                Constraint::False => return State::False,
                Constraint::Eq(l, r) => equations.push((l, r)),
                user @ Constraint::User(..) => users.push(user),
            }
        }
        let Some(mgu) = unify_pairs(equations) else {
            return State::False;
        };
        let users: Vec<Constraint> = users.iter().map(|c| mgu.apply_constraint(c)).collect();
        let mut eqs = Subst::new();
        for (v, t) in mgu.iter() {
            if let Var::Global(name) = v {
                if globals.contains(name) {
                    eqs.insert_raw(v.clone(), t.clone());
                }
            }
        }
        let st = NormalState {
            users,
            eqs,
            globals,
        };
        State::Normal(renumber_locals(st))
    }

    /// Parses a constraint multiset and normalizes it into a state whose
    /// globals are exactly the listed names; all other variables become
    /// locals. Handy for writing down expected states.
    pub fn from_text(text: &str, globals: &[&str]) -> Result<State, crate::parse::ParseError> {
        let raw = crate::parse::parse_goal(text)?;
        let globals: BTreeSet<String> = globals.iter().map(|s| s.to_string()).collect();
        let mut ids: BTreeMap<String, u32> = BTreeMap::new();
        for v in crate::term::vars_of(&raw) {
            if let Var::Global(n) = v {
                if !globals.contains(&n) {
                    let next = ids.len() as u32;
                    ids.entry(n).or_insert(next);
                }
            }
        }
        let raw: Vec<Constraint> = raw
            .iter()
            .map(|c| {
                c.map_vars(&|v| match v {
                    Var::Global(n) if !globals.contains(n) => Var::Local(ids[n]),
                    other => other.clone(),
                })
            })
            .collect();
        Ok(State::normalize(raw, globals))
    }

    /// Convenience constructor for goals: every variable of the raw
    /// multiset is global.
    pub fn goal(raw: Vec<Constraint>) -> State {
        let globals: BTreeSet<String> = crate::term::vars_of(&raw)
            .into_iter()
            .filter_map(|v| match v {
                Var::Global(n) => Some(n),
                _ => None,
            })
            .collect();
        State::normalize(raw, globals)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, State::False)
    }

    pub fn as_normal(&self) -> Option<&NormalState> {
        match self {
            State::False => None,
            State::Normal(ns) => Some(ns),
        }
    }

    /// True iff no variable occurs in the user store and every global is
    /// bound to a ground term. `False` contains no variables and counts
    /// as ground.
    pub fn is_ground(&self) -> bool {
        match self {
            State::False => true,
            State::Normal(ns) => {
                ns.users.iter().all(Constraint::is_ground)
                    && ns.globals.iter().all(|g| {
                        ns.eqs
                            .get(&Var::Global(g.clone()))
                            .is_some_and(Term::is_ground)
                    })
            }
        }
    }

    /// A renaming-invariant fingerprint: equivalent states always share
    /// it, so it serves as a bucket key when deduplicating modulo
    /// equivalence.
    pub fn fingerprint(&self) -> String {
        match self {
            State::False => "False".to_string(),
            State::Normal(ns) => {
                let mut parts: Vec<String> = ns
                    .users
                    .iter()
                    .map(|c| wildcard_locals(c).to_string())
                    .collect();
                parts.sort();
                let mut s = parts.join(",");
                s.push('|');
                for (v, t) in ns.eqs.iter() {
                    s.push_str(&format!("{v}={}", wildcard_locals_term(t)));
                    s.push(';');
                }
                s.push_str(&format!("#{}", ns.locals().len()));
                s
            }
        }
    }
}

fn wildcard_locals_term(t: &Term) -> Term {
    t.map_vars(&|v| match v {
        Var::Local(_) => Var::Local(u32::MAX),
        other => other.clone(),
    })
}

fn wildcard_locals(c: &Constraint) -> Constraint {
    c.map_vars(&|v| match v {
        Var::Local(_) => Var::Local(u32::MAX),
        other => other.clone(),
    })
}

/// Renumbers local variables by first occurrence in a deterministic
/// traversal (users in sorted order, then global bindings in name order)
/// and sorts the user store.
fn renumber_locals(st: NormalState) -> NormalState {
    let NormalState {
        mut users,
        eqs,
        globals,
    } = st;
    // Sort by a local-id-invariant key first so numbering does not depend
    // on the incoming ids; ties are broken by the incoming form.
    users.sort_by_key(|c| (wildcard_locals(c).to_string(), c.to_string()));
    let mut assign: BTreeMap<u32, u32> = BTreeMap::new();
    {
        let mut visit = |t: &Term| {
            for v in ordered_vars(t) {
                if let Var::Local(i) = v {
                    let next = assign.len() as u32;
                    assign.entry(*i).or_insert(next);
                }
            }
        };
        for c in &users {
            match c {
                Constraint::User(_, args) => args.iter().for_each(&mut visit),
                Constraint::Eq(l, r) => {
                    visit(l);
                    visit(r);
                }
                _ => {}
            }
        }
        for (_, t) in eqs.iter() {
            visit(t);
        }
    }
    let remap = |v: &Var| match v {
        Var::Local(i) => Var::Local(*assign.get(i).expect("local seen in traversal")),
        other => other.clone(),
    };
    let mut users: Vec<Constraint> = users.iter().map(|c| c.map_vars(&remap)).collect();
    users.sort_by_key(|c| (wildcard_locals(c).to_string(), c.to_string()));
    let mut new_eqs = Subst::new();
    for (v, t) in eqs.iter() {
        new_eqs.insert_raw(v.clone(), t.map_vars(&remap));
    }
    NormalState {
        users,
        eqs: new_eqs,
        globals,
    }
}

/// Variables of a term in left-to-right depth-first order.
fn ordered_vars(t: &Term) -> Vec<&Var> {
    match t {
        Term::Var(v) => vec![v],
        Term::App(_, args) => args.iter().flat_map(ordered_vars).collect(),
    }
}

/// Decides state equality: `False` only equals `False`, and two normal
/// states are equal iff some bijective renaming of local variables makes
/// their user stores equal as multisets and their global bindings equal.
pub fn state_equiv(a: &State, b: &State) -> bool {
    match (a, b) {
        (State::False, State::False) => true,
        (State::Normal(x), State::Normal(y)) => normal_equiv(x, y),
        _ => false,
    }
}

fn normal_equiv(a: &NormalState, b: &NormalState) -> bool {
    if a == b {
        return true;
    }
    if a.globals != b.globals || a.users.len() != b.users.len() {
        return false;
    }
    let dom_a: Vec<&Var> = a.eqs.domain().collect();
    let dom_b: Vec<&Var> = b.eqs.domain().collect();
    if dom_a != dom_b {
        return false;
    }
    if a.locals().len() != b.locals().len() {
        return false;
    }
    let mut bij = Bijection::default();
    // Global bindings pair up by name; locals inside them seed the bijection.
    for v in dom_a {
        let ta = a.eqs.get(v).unwrap();
        let tb = b.eqs.get(v).unwrap();
        if !bij.match_terms(ta, tb) {
            return false;
        }
    }
    match_users(
        &a.users,
        &mut vec![false; b.users.len()],
        &b.users,
        &mut bij,
    )
}

#[derive(Clone, Default)]
struct Bijection {
    fwd: BTreeMap<u32, u32>,
    bwd: BTreeMap<u32, u32>,
}

impl Bijection {
    fn match_locals(&mut self, x: u32, y: u32) -> bool {
        match (self.fwd.get(&x), self.bwd.get(&y)) {
            (Some(&y2), _) => y2 == y,
            (None, Some(_)) => false,
            (None, None) => {
                self.fwd.insert(x, y);
                self.bwd.insert(y, x);
                true
            }
        }
    }

    fn match_terms(&mut self, a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Var(Var::Local(x)), Term::Var(Var::Local(y))) => self.match_locals(*x, *y),
            (Term::Var(va), Term::Var(vb)) => va == vb,
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.match_terms(x, y))
            }
            _ => false,
        }
    }

    fn match_constraints(&mut self, a: &Constraint, b: &Constraint) -> bool {
        match (a, b) {
            (Constraint::User(f, xs), Constraint::User(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.match_terms(x, y))
            }
            _ => false,
        }
    }
}

fn match_users(
    rest: &[Constraint],
    used: &mut Vec<bool>,
    targets: &[Constraint],
    bij: &mut Bijection,
) -> bool {
    let Some(first) = rest.first() else {
        return true;
    };
    for i in 0..targets.len() {
        if used[i] {
            continue;
        }
        let saved = bij.clone();
        if bij.match_constraints(first, &targets[i]) {
            used[i] = true;
            if match_users(&rest[1..], used, targets, bij) {
                return true;
            }
            used[i] = false;
        }
        *bij = saved;
    }
    false
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::False => write!(f, "False"),
            State::Normal(ns) => {
                let mut parts: Vec<String> =
                    ns.eqs.iter().map(|(v, t)| format!("{v} = {t}")).collect();
                parts.extend(ns.users.iter().map(|c| c.to_string()));
                if parts.is_empty() {
                    write!(f, "True")
                } else {
                    write!(f, "{}", parts.join(", "))
                }
            }
        }
    }
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_goal;

    fn state_with_globals(text: &str, globals: &[&str]) -> State {
        State::from_text(text, globals).unwrap()
    }

    fn goal(text: &str) -> State {
        State::goal(parse_goal(text).unwrap())
    }

    #[test]
    fn normalize_applies_mgu_to_users() {
        let st = state_with_globals("F [a] a, a = [b]", &["a"]);
        let ns = st.as_normal().unwrap();
        assert_eq!(ns.users().len(), 1);
        assert_eq!(ns.users()[0].to_string(), "F [[_0]] [_0]");
        assert_eq!(
            ns.eqs().get(&Var::Global("a".into())).unwrap().to_string(),
            "[_0]"
        );
    }

    #[test]
    fn normalize_trivial_equation_is_true_state() {
        let st = goal("Succ Zero = Succ Zero");
        let ns = st.as_normal().unwrap();
        assert!(ns.users().is_empty());
        assert!(ns.eqs().is_empty());
        assert_eq!(st.to_string(), "True");
    }

    #[test]
    fn normalize_clash_collapses_to_false() {
        let st = goal("Int = Bool, Eq a");
        assert!(st.is_false());
    }

    #[test]
    fn equiv_renames_locals() {
        let s1 = state_with_globals("F [b] b, a = [b]", &["a"]);
        let s2 = state_with_globals("F [c] c, a = [c]", &["a"]);
        assert!(state_equiv(&s1, &s2));
    }

    #[test]
    fn equiv_respects_multiset_cardinality() {
        let s1 = goal("Eq a");
        let s2 = goal("Eq a, Eq a");
        assert!(!state_equiv(&s1, &s2));
    }

    #[test]
    fn equiv_distinguishes_shapes() {
        let s1 = state_with_globals("F [b] b, a = [b]", &["a"]);
        let s2 = state_with_globals("F [b] [b], a = [b]", &["a"]);
        assert!(!state_equiv(&s1, &s2));
    }

    #[test]
    fn equiv_drops_dead_local_bindings() {
        // an equation binding a local that appears nowhere else is vacuous
        let s1 = state_with_globals("F a, b = Int", &["a"]);
        let s2 = state_with_globals("F a", &["a"]);
        assert!(state_equiv(&s1, &s2));
    }

    #[test]
    fn equiv_keeps_local_constraints_on_globals() {
        // "a is some list" is a real constraint, not True
        let s1 = state_with_globals("a = [b]", &["a"]);
        let s2 = State::normalize(vec![], ["a".to_string()].into_iter().collect());
        assert!(!state_equiv(&s1, &s2));
    }

    #[test]
    fn ground_states() {
        assert!(goal("F Int Bool").is_ground());
        assert!(!goal("F [a] a").is_ground());
        assert!(State::False.is_ground());
        // a bound global with ground image is ground
        let st = goal("F Int, a = Bool");
        assert!(st.is_ground());
    }

    #[test]
    fn shared_local_is_not_two_locals() {
        let s1 = state_with_globals("a = [x], b = [x]", &["a", "b"]);
        let s2 = state_with_globals("a = [x], b = [y]", &["a", "b"]);
        assert!(!state_equiv(&s1, &s2));
    }

    #[test]
    fn render_order_is_bindings_then_users() {
        let st = state_with_globals("F [b] b, a = [b]", &["a"]);
        assert_eq!(st.to_string(), "a = [_0], F [_0] _0");
    }
}
