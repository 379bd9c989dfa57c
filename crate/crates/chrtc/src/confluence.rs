//! Confluence analysis: the syntactic range-restriction check, critical
//! pair enumeration, bounded joinability search, the local-confluence
//! verdict and empirical uniqueness-of-answers probing.

use crate::engine::{
    applicable, derive, reachable, step, Program, Redex, Rule, RuleKind, Strategy,
};
use crate::state::{state_equiv, State};
use crate::term::{unify_pairs, vars_of, Constraint, Subst, Term, Var};
use serde::Serialize;
use std::collections::BTreeSet;

/// Per-rule result of the syntactic range-restriction check.
#[derive(Clone, Debug, Serialize)]
pub struct RangeRuleReport {
    pub rule: String,
    pub pass: bool,
    /// Body variables that are neither head variables nor determined from
    /// them through the body's equations.
    pub undetermined: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RangeReport {
    pub pass: bool,
    pub rules: Vec<RangeRuleReport>,
}

/// Checks each rule syntactically: groundness of a store is preserved by
/// a rule whose body variables are all either head variables or forced
/// ground by the body's equations once the head variables are ground.
/// The determined set is closed under equations in both directions until
/// a fixpoint is reached.
pub fn range_restricted_syntactic(p: &Program) -> RangeReport {
    let mut rules = Vec::new();
    for rule in p.rules() {
        let mut determined = rule.head_vars();
        loop {
            let before = determined.len();
            for c in rule.body() {
                if let Constraint::Eq(l, r) = c {
                    let lv = l.vars();
                    let rv = r.vars();
                    if lv.iter().all(|v| determined.contains(v)) {
                        determined.extend(rv.iter().cloned());
                    }
                    if rv.iter().all(|v| determined.contains(v)) {
                        determined.extend(lv);
                    }
                }
            }
            if determined.len() == before {
                break;
            }
        }
        let undetermined: Vec<String> = rule
            .body_vars()
            .into_iter()
            .filter(|v| !determined.contains(v))
            .map(|v| v.to_string())
            .collect();
        rules.push(RangeRuleReport {
            rule: rule.name().to_string(),
            pass: undetermined.is_empty(),
            undetermined,
        });
    }
    RangeReport {
        pass: rules.iter().all(|r| r.pass),
        rules,
    }
}

/// A critical pair: two one-step successors of the most general state on
/// which two rule instances overlap.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalPair {
    pub rule_left: String,
    pub rule_right: String,
    /// The unified head sub-multiset the two rules compete for.
    pub overlap: Vec<Constraint>,
    pub source: State,
    pub left: State,
    pub right: State,
}

/// Enumerates the critical pairs of `p`: for every unordered pair of
/// rules (a rule is also paired with a renamed copy of itself) and every
/// nonempty unifiable alignment of head sub-multisets, the pair built
/// from the most general overlap state, all of whose variables are
/// global. The trivial self-overlap of a rule with itself on its full
/// head under the identity alignment is excluded, as are overlaps where a
/// propagation side would not actually change the state.
pub fn critical_pairs(p: &Program) -> Vec<CriticalPair> {
    let mut out = Vec::new();
    for i in 0..p.rules().len() {
        for j in i..p.rules().len() {
            let r1 = p.rule(i).clone();
            let (r2, rename) = rename_apart(p.rule(j), &r1.all_vars(), i == j);
            for alignment in alignments(r1.head().len(), r2.head().len()) {
                if i == j && is_identity_full(&alignment, r1.head().len()) {
                    continue;
                }
                if let Some(cp) = build_pair(p, i, j, &r1, &r2, &rename, &alignment) {
                    out.push(cp);
                }
            }
        }
    }
    out
}

trait AllVars {
    fn all_vars(&self) -> BTreeSet<Var>;
}

impl AllVars for Rule {
    fn all_vars(&self) -> BTreeSet<Var> {
        let mut vs = self.head_vars();
        vs.extend(self.body_vars());
        vs
    }
}

/// Renames the rule's variables away from `avoid`; when `force` is set
/// every variable is renamed even without a collision. Also returns the
/// name map applied.
fn rename_apart(
    rule: &Rule,
    avoid: &BTreeSet<Var>,
    force: bool,
) -> (Rule, std::collections::BTreeMap<String, String>) {
    let mut taken: BTreeSet<String> = avoid
        .iter()
        .filter_map(|v| match v {
            Var::Program(n) => Some(n.clone()),
            _ => None,
        })
        .collect();
    let mut map: std::collections::BTreeMap<String, String> = Default::default();
    for v in rule.all_vars() {
        if let Var::Program(n) = v {
            let mut fresh = n.clone();
            if force || taken.contains(&fresh) {
                loop {
                    fresh.push('\'');
                    if !taken.contains(&fresh) {
                        break;
                    }
                }
            }
            taken.insert(fresh.clone());
            map.insert(n, fresh);
        }
    }
    let renamed = rule.map_vars(&|v| match v {
        Var::Program(n) => Var::Program(map[n].clone()),
        other => other.clone(),
    });
    (renamed, map)
}

/// All nonempty injective alignments between head positions of the two
/// rules: pairs `(i1, i2)` with strictly increasing `i1`.
fn alignments(h1: usize, h2: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(
        next1: usize,
        h1: usize,
        h2: usize,
        used2: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if !current.is_empty() {
            out.push(current.clone());
        }
        for i1 in next1..h1 {
            for i2 in 0..h2 {
                if used2[i2] {
                    continue;
                }
                used2[i2] = true;
                current.push((i1, i2));
                rec(i1 + 1, h1, h2, used2, current, out);
                current.pop();
                used2[i2] = false;
            }
        }
    }
    rec(0, h1, h2, &mut vec![false; h2], &mut current, &mut out);
    out
}

fn is_identity_full(alignment: &[(usize, usize)], h: usize) -> bool {
    alignment.len() == h && alignment.iter().all(|(a, b)| a == b)
}

fn globalize(t: &Term) -> Term {
    t.map_vars(&|v| match v {
        Var::Program(n) => Var::Global(n.clone()),
        other => other.clone(),
    })
}

fn globalize_constraint(c: &Constraint) -> Constraint {
    match c {
        Constraint::True => Constraint::True,
        Constraint::False => Constraint::False,
        Constraint::Eq(l, r) => Constraint::Eq(globalize(l), globalize(r)),
        Constraint::User(n, args) => {
            Constraint::User(n.clone(), args.iter().map(globalize).collect())
        }
    }
}

/// Finds distinct indexes in `store` holding the wanted constraint values.
fn locate(wanted: &[Constraint], store: &[Constraint]) -> Vec<usize> {
    let mut used = vec![false; store.len()];
    let mut out = Vec::new();
    for w in wanted {
        let idx = store
            .iter()
            .enumerate()
            .position(|(k, c)| !used[k] && c == w)
            .expect("overlap constraint must occur in the source store");
        used[idx] = true;
        out.push(idx);
    }
    out.sort_unstable();
    out
}

fn build_pair(
    p: &Program,
    i: usize,
    j: usize,
    r1: &Rule,
    r2: &Rule,
    rename: &std::collections::BTreeMap<String, String>,
    alignment: &[(usize, usize)],
) -> Option<CriticalPair> {
    let mut pairs = Vec::new();
    for &(a, b) in alignment {
        match (&r1.head()[a], &r2.head()[b]) {
            (Constraint::User(f, xs), Constraint::User(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                pairs.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            _ => return None,
        }
    }
    let sigma = unify_pairs(pairs)?;
    let aligned2: BTreeSet<usize> = alignment.iter().map(|&(_, b)| b).collect();
    let mut users: Vec<Constraint> = r1
        .head()
        .iter()
        .map(|c| globalize_constraint(&sigma.apply_constraint(c)))
        .collect();
    for (k, c) in r2.head().iter().enumerate() {
        if !aligned2.contains(&k) {
            users.push(globalize_constraint(&sigma.apply_constraint(c)));
        }
    }
    let overlap: Vec<Constraint> = alignment
        .iter()
        .map(|&(a, _)| globalize_constraint(&sigma.apply_constraint(&r1.head()[a])))
        .collect();
    let globals: BTreeSet<String> = vars_of(&users)
        .into_iter()
        .filter_map(|v| match v {
            Var::Global(n) => Some(n),
            _ => None,
        })
        .collect();
    let source = State::normalize(users, globals);
    let src = source.as_normal().expect("head-only state cannot be False");

    let theta_for = |rule: &Rule| {
        let mut theta = Subst::new();
        for v in rule.head_vars() {
            theta.insert_raw(v.clone(), globalize(&sigma.apply_var(&v)));
        }
        theta
    };
    let wanted1: Vec<Constraint> = r1
        .head()
        .iter()
        .map(|c| globalize_constraint(&sigma.apply_constraint(c)))
        .collect();
    let wanted2: Vec<Constraint> = r2
        .head()
        .iter()
        .map(|c| globalize_constraint(&sigma.apply_constraint(c)))
        .collect();
    let redex1 = Redex {
        rule_index: i,
        theta: theta_for(r1),
        matched: locate(&wanted1, src.users()),
    };
    // theta for the original rule j speaks through the renaming of r2
    let mut theta2 = Subst::new();
    for v in p.rule(j).head_vars() {
        let renamed = match &v {
            Var::Program(n) => Var::Program(rename[n].clone()),
            other => (*other).clone(),
        };
        theta2.insert_raw(v.clone(), globalize(&sigma.apply_var(&renamed)));
    }
    let redex2 = Redex {
        rule_index: j,
        theta: theta2,
        matched: locate(&wanted2, src.users()),
    };

    let left = step(p, &source, &redex1);
    let right = step(p, &source, &redex2);
    if p.rule(i).kind() == RuleKind::Prop && state_equiv(&left, &source) {
        return None;
    }
    if p.rule(j).kind() == RuleKind::Prop && state_equiv(&right, &source) {
        return None;
    }
    Some(CriticalPair {
        rule_left: p.rule(i).name().to_string(),
        rule_right: p.rule(j).name().to_string(),
        overlap,
        source,
        left,
        right,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExploreStats {
    pub left_states: usize,
    pub right_states: usize,
    pub left_truncated: bool,
    pub right_truncated: bool,
    pub left_quiescent: bool,
    pub right_quiescent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub enum JoinVerdict {
    Joined {
        witness: State,
        depth_left: usize,
        depth_right: usize,
    },
    /// No common state was found and neither frontier was truncated by
    /// the width budget.
    NotJoinedWithinBound,
    /// The width budget cut at least one frontier short; the question is
    /// unresolved.
    BudgetExceeded,
}

#[derive(Clone, Debug, Serialize)]
pub struct JoinReport {
    pub verdict: JoinVerdict,
    pub explored: ExploreStats,
}

impl JoinReport {
    pub fn joined(&self) -> bool {
        matches!(self.verdict, JoinVerdict::Joined { .. })
    }
}

/// Breadth-bounded joinability: explores both states' reachable sets and
/// looks for an equivalent pair, preferring the witness with the smallest
/// combined depth.
pub fn joinable(p: &Program, s1: &State, s2: &State, depth: usize, width: usize) -> JoinReport {
    let left = reachable(p, s1, depth, width);
    let right = reachable(p, s2, depth, width);
    let mut best: Option<(State, usize, usize)> = None;
    for (ls, ld) in &left.states {
        for (rs, rd) in &right.states {
            if state_equiv(ls, rs) {
                let better = match &best {
                    Some((_, bl, br)) => ld + rd < bl + br,
                    None => true,
                };
                if better {
                    best = Some((ls.clone(), *ld, *rd));
                }
            }
        }
    }
    let explored = ExploreStats {
        left_states: left.states.len(),
        right_states: right.states.len(),
        left_truncated: left.truncated,
        right_truncated: right.truncated,
        left_quiescent: left.quiescent,
        right_quiescent: right.quiescent,
    };
    let verdict = match best {
        Some((witness, depth_left, depth_right)) => JoinVerdict::Joined {
            witness,
            depth_left,
            depth_right,
        },
        None if left.truncated || right.truncated => JoinVerdict::BudgetExceeded,
        None => JoinVerdict::NotJoinedWithinBound,
    };
    JoinReport { verdict, explored }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConfluenceVerdict {
    LocallyConfluent,
    NotLocallyConfluent,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub pair: CriticalPair,
    pub join: JoinReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfluenceReport {
    pub verdict: ConfluenceVerdict,
    pub pairs: Vec<PairReport>,
}

/// Joins every critical pair. The program is reported locally confluent
/// when all pairs join; not locally confluent when some pair fails with
/// both frontiers explored without truncation; unknown when a budget ran
/// out first.
pub fn local_confluence_check(p: &Program, depth: usize, width: usize) -> ConfluenceReport {
    let mut pairs = Vec::new();
    let mut verdict = ConfluenceVerdict::LocallyConfluent;
    for pair in critical_pairs(p) {
        let join = joinable(p, &pair.left, &pair.right, depth, width);
        match join.verdict {
            JoinVerdict::Joined { .. } => {}
            JoinVerdict::NotJoinedWithinBound => verdict = ConfluenceVerdict::NotLocallyConfluent,
            JoinVerdict::BudgetExceeded => {
                if verdict == ConfluenceVerdict::LocallyConfluent {
                    verdict = ConfluenceVerdict::Unknown;
                }
            }
        }
        pairs.push(PairReport { pair, join });
    }
    ConfluenceReport { verdict, pairs }
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub pass: bool,
    pub trials: usize,
    /// Runs that produced an answer (final state or `False`).
    pub answered: usize,
    pub depth_exceeded: usize,
    pub answer: Option<State>,
    pub counterexample: Option<(State, State)>,
}

/// Runs `trials` random-strategy derivations plus one first-match
/// derivation and checks that every answer reached is the same state.
/// `False` counts as the answer `False`; runs that exceed the bound are
/// tallied separately.
pub fn uniqueness_probe(
    p: &Program,
    goal: &State,
    trials: usize,
    bound: usize,
    seed_base: u64,
) -> UniquenessReport {
    let mut strategies = vec![Strategy::FirstMatch];
    for k in 0..trials {
        strategies.push(Strategy::Random(seed_base.wrapping_add(k as u64)));
    }
    let mut answer: Option<State> = None;
    let mut answered = 0usize;
    let mut depth_exceeded = 0usize;
    let mut counterexample = None;
    for strat in &strategies {
        match derive(p, goal, bound, strat).answer() {
            Some(state) => {
                answered += 1;
                match &answer {
                    None => answer = Some(state),
                    Some(first) => {
                        if counterexample.is_none() && !state_equiv(first, &state) {
                            counterexample = Some((first.clone(), state));
                        }
                    }
                }
            }
            None => depth_exceeded += 1,
        }
    }
    UniquenessReport {
        pass: counterexample.is_none(),
        trials: strategies.len(),
        answered,
        depth_exceeded,
        answer,
        counterexample,
    }
}

/// Replays a critical pair's two steps, confirming both sides are
/// reproducible through the public redex enumeration. Used by tests.
pub fn replay_check(p: &Program, cp: &CriticalPair) -> bool {
    let one_step_to = |target: &State| {
        applicable(p, &cp.source)
            .iter()
            .any(|r| state_equiv(&step(p, &cp.source, r), target))
    };
    one_step_to(&cp.left) && one_step_to(&cp.right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_program, parse_rule};
    use crate::state::State;

    fn goal(text: &str) -> State {
        State::goal(crate::parse::parse_goal(text).unwrap())
    }

    fn p_false() -> Program {
        parse_program("p1 @ P x <=> False.\np2 @ P x <=> x = [y], P y.\n").unwrap()
    }

    fn p_true() -> Program {
        parse_program("p1 @ P x <=> True.\np2 @ P x <=> x = [y], P y.\n").unwrap()
    }

    #[test]
    fn range_restriction_accepts_subset_body() {
        let p = parse_program("r @ Eq [a] <=> Eq a.").unwrap();
        assert!(range_restricted_syntactic(&p).pass);
    }

    #[test]
    fn range_restriction_accepts_equation_determined_local() {
        let p = parse_program("r @ F [a] b <=> b = [c], F a c.").unwrap();
        assert!(range_restricted_syntactic(&p).pass);
    }

    #[test]
    fn range_restriction_rejects_undetermined_context_variable() {
        let p = parse_program("r @ F [a] [b] <=> F a c, F c b.").unwrap();
        let rep = range_restricted_syntactic(&p);
        assert!(!rep.pass);
        assert_eq!(rep.rules[0].undetermined, vec!["c".to_string()]);
    }

    #[test]
    fn p_false_has_exactly_one_critical_pair() {
        let cps = critical_pairs(&p_false());
        assert_eq!(cps.len(), 1);
        let cp = &cps[0];
        assert!(cp.left.is_false());
        let want = State::from_text("x = [y], P y", &["x"]).unwrap();
        assert!(state_equiv(&cp.right, &want));
        assert!(replay_check(&p_false(), cp));
    }

    #[test]
    fn single_rule_eq_program_has_no_critical_pairs() {
        let p = parse_program("r @ Eq [a] <=> Eq a.").unwrap();
        assert!(critical_pairs(&p).is_empty());
    }

    #[test]
    fn fd_and_instance_overlap_is_enumerated() {
        let p =
            parse_program("fd @ F a b, F a c ==> b = c.\ninst @ F Int b <=> b = Bool.\n").unwrap();
        let cps = critical_pairs(&p);
        assert!(cps
            .iter()
            .any(|cp| cp.rule_left == "fd" && cp.rule_right == "inst"));
        for cp in &cps {
            assert!(
                replay_check(&p, cp),
                "pair {} / {}",
                cp.rule_left,
                cp.rule_right
            );
        }
    }

    #[test]
    fn p_false_pair_joins_at_false() {
        let p = p_false();
        let cp = &critical_pairs(&p)[0];
        let rep = joinable(&p, &cp.left, &cp.right, 20, 500);
        match &rep.verdict {
            JoinVerdict::Joined { witness, .. } => assert!(witness.is_false()),
            other => panic!("expected join, got {other:?}"),
        }
    }

    #[test]
    fn p_true_pair_does_not_join() {
        let p = p_true();
        let cps = critical_pairs(&p);
        assert_eq!(cps.len(), 1);
        let rep = joinable(&p, &cps[0].left, &cps[0].right, 20, 500);
        assert!(matches!(rep.verdict, JoinVerdict::NotJoinedWithinBound));
        assert!(!rep.explored.left_truncated && !rep.explored.right_truncated);
    }

    #[test]
    fn identical_states_join_at_depth_zero() {
        let p = p_false();
        let s = goal("P x");
        let rep = joinable(&p, &s, &s, 20, 500);
        match rep.verdict {
            JoinVerdict::Joined {
                depth_left,
                depth_right,
                ..
            } => assert_eq!((depth_left, depth_right), (0, 0)),
            other => panic!("expected join, got {other:?}"),
        }
    }

    #[test]
    fn p_false_is_locally_confluent() {
        let rep = local_confluence_check(&p_false(), 20, 500);
        assert_eq!(rep.verdict, ConfluenceVerdict::LocallyConfluent);
    }

    #[test]
    fn p_true_is_not_locally_confluent() {
        let rep = local_confluence_check(&p_true(), 20, 500);
        assert_eq!(rep.verdict, ConfluenceVerdict::NotLocallyConfluent);
    }

    #[test]
    fn coll_program_is_locally_confluent() {
        let p = parse_program(
            "coll_fd @ Coll c e, Coll c d ==> e = d.\n\
             coll_imp @ Coll [c] e ==> e = c.\n\
             coll_inst @ Coll [a] a <=> Eq a.\n",
        )
        .unwrap();
        let rep = local_confluence_check(&p, 20, 500);
        assert_eq!(rep.verdict, ConfluenceVerdict::LocallyConfluent);
    }

    #[test]
    fn uniqueness_probe_f_program() {
        let p = parse_program(
            "f_fd @ F a b, F a c ==> b = c.\n\
             f_int @ F Int b <=> b = Bool.\n\
             f_list @ F [a] b <=> b = [c], F a c.\n",
        )
        .unwrap();
        let rep = uniqueness_probe(&p, &goal("F [Int] b"), 100, 1000, 0);
        assert!(rep.pass);
        assert_eq!(rep.depth_exceeded, 0);
        assert_eq!(rep.answer.unwrap().to_string(), "b = [Bool]");
    }

    #[test]
    fn uniqueness_probe_coll_program() {
        let p = parse_program(
            "coll_fd @ Coll c e, Coll c d ==> e = d.\n\
             coll_imp @ Coll [c] e ==> e = c.\n\
             coll_inst @ Coll [a] a <=> Eq a.\n",
        )
        .unwrap();
        let rep = uniqueness_probe(&p, &goal("Coll [Int] e"), 100, 1000, 0);
        assert!(rep.pass);
        assert_eq!(rep.answer.unwrap().to_string(), "e = Int, Eq Int");
    }

    #[test]
    fn uniqueness_trivial_single_rule() {
        let p = parse_program("r @ Eq [a] <=> Eq a.").unwrap();
        let rep = uniqueness_probe(&p, &goal("Eq [[Int]]"), 10, 100, 0);
        assert!(rep.pass);
        assert_eq!(rep.depth_exceeded, 0);
    }

    #[test]
    fn joinable_is_symmetric() {
        let p = p_false();
        let cp = &critical_pairs(&p)[0];
        let a = joinable(&p, &cp.left, &cp.right, 20, 500);
        let b = joinable(&p, &cp.right, &cp.left, 20, 500);
        assert_eq!(a.joined(), b.joined());
    }

    #[test]
    fn parse_rule_used_in_reports() {
        // a propagation rule whose body changes nothing is never part of
        // a critical pair
        let r = parse_rule("imp @ Coll [c] e ==> e = c.").unwrap();
        let inst = parse_rule("inst @ Coll [a] a <=> Eq a.").unwrap();
        let p = Program::new(vec![r, inst]).unwrap();
        let cps = critical_pairs(&p);
        // the imp/inst overlap forces e = c = a, making imp's step a no-op
        assert!(cps
            .iter()
            .all(|cp| !(cp.rule_left == "imp" && cp.rule_right == "inst")));
    }
}
