//! Ground-termination certificates via linear rank functions, and the
//! Horn-clause projection of simplification rules for external
//! termination tools.
//!
//! The rank of a ground term is its functor weight plus the ranks of its
//! children; a user constraint is ranked by the sum of its measured
//! argument positions and a state by the sum over its store. A
//! simplification rule is certified when its head rank exceeds its body
//! rank by at least one for every ground instantiation satisfying the
//! body's equations.

use crate::engine::{Program, Rule, RuleKind};
use crate::term::{unify_pairs, Constraint, Term, Var};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RankSpecError {
    #[error("negative weight for functor `{0}`")]
    NegativeWeight(String),
    #[error("bad measure position `{0}` (positions are 1-based)")]
    BadPosition(String),
    #[error("malformed rank spec directive `{0}`")]
    BadDirective(String),
}

/// A rank measure: per-functor weights (default 1) and, per user
/// constraint, the argument positions that count toward the rank.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RankSpec {
    /// Functor name to weight; absent functors weigh 1.
    pub weights: BTreeMap<String, u64>,
    /// Constraint name to measured 0-based argument positions; absent
    /// constraints measure nothing.
    pub measures: BTreeMap<String, BTreeSet<usize>>,
}

impl RankSpec {
    pub fn weight(&self, functor: &str) -> u64 {
        self.weights.get(functor).copied().unwrap_or(1)
    }

    pub fn measured(&self, constraint: &str) -> BTreeSet<usize> {
        self.measures.get(constraint).cloned().unwrap_or_default()
    }

    /// Parses the declarative format: `measure F 1; weight List 1`, with
    /// directives separated by `;` or newlines. Measure positions are
    /// 1-based.
    pub fn parse(text: &str) -> Result<RankSpec, RankSpecError> {
        let mut spec = RankSpec::default();
        for raw in text.split([';', '\n']) {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('%') || line.starts_with("--") {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["measure", name, pos] => {
                    let idx: i64 = pos
                        .parse()
                        .map_err(|_| RankSpecError::BadPosition(pos.to_string()))?;
                    if idx < 1 {
                        return Err(RankSpecError::BadPosition(pos.to_string()));
                    }
                    spec.measures
                        .entry(name.to_string())
                        .or_default()
                        .insert((idx - 1) as usize);
                }
                ["weight", name, w] => {
                    let w: i64 = w
                        .parse()
                        .map_err(|_| RankSpecError::BadDirective(line.to_string()))?;
                    if w < 0 {
                        return Err(RankSpecError::NegativeWeight(name.to_string()));
                    }
                    spec.weights.insert(name.to_string(), w as u64);
                }
                _ => return Err(RankSpecError::BadDirective(line.to_string())),
            }
        }
        Ok(spec)
    }

    /// Concrete rank of a ground term.
    pub fn rank_term(&self, t: &Term) -> u64 {
        match t {
            Term::Var(_) => panic!("rank of a non-ground term"),
            Term::App(f, args) => {
                self.weight(f) + args.iter().map(|a| self.rank_term(a)).sum::<u64>()
            }
        }
    }

    /// Concrete rank of a ground user constraint.
    pub fn rank_constraint(&self, c: &Constraint) -> u64 {
        match c {
            Constraint::User(name, args) => self
                .measured(name)
                .iter()
                .filter_map(|&i| args.get(i))
                .map(|t| self.rank_term(t))
                .sum(),
            _ => 0,
        }
    }
}

impl fmt::Display for RankSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (name, positions) in &self.measures {
            for p in positions {
                parts.push(format!("measure {name} {}", p + 1));
            }
        }
        for (name, w) in &self.weights {
            parts.push(format!("weight {name} {w}"));
        }
        write!(f, "{}", parts.join("; "))
    }
}

/// A linear form `constant + sum of coefficient * size(v)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SizePolynomial {
    pub constant: i64,
    pub coeffs: BTreeMap<Var, i64>,
}

impl SizePolynomial {
    fn constant(c: i64) -> SizePolynomial {
        SizePolynomial {
            constant: c,
            coeffs: BTreeMap::new(),
        }
    }

    fn add(&mut self, other: &SizePolynomial) {
        self.constant += other.constant;
        for (v, c) in &other.coeffs {
            *self.coeffs.entry(v.clone()).or_insert(0) += c;
        }
    }

    fn sub(&self, other: &SizePolynomial) -> SizePolynomial {
        let mut out = self.clone();
        out.constant -= other.constant;
        for (v, c) in &other.coeffs {
            *out.coeffs.entry(v.clone()).or_insert(0) -= c;
        }
        out.coeffs.retain(|_, c| *c != 0);
        out
    }

    /// Minimum over all assignments of sizes >= 1, provided every
    /// coefficient is nonnegative.
    fn value_at_one(&self) -> i64 {
        self.constant + self.coeffs.values().sum::<i64>()
    }

    /// Evaluates under a concrete size assignment.
    pub fn eval(&self, sizes: &BTreeMap<Var, u64>) -> i64 {
        self.constant
            + self
                .coeffs
                .iter()
                .map(|(v, c)| c * sizes.get(v).copied().unwrap_or(1) as i64)
                .sum::<i64>()
    }
}

impl fmt::Display for SizePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.constant != 0 || self.coeffs.is_empty() {
            parts.push(self.constant.to_string());
        }
        for (v, c) in &self.coeffs {
            match c {
                1 => parts.push(format!("size({v})")),
                _ => parts.push(format!("{c}*size({v})")),
            }
        }
        write!(f, "{}", parts.join(" + "))
    }
}

fn term_poly(t: &Term, spec: &RankSpec) -> SizePolynomial {
    match t {
        Term::Var(v) => SizePolynomial {
            constant: 0,
            coeffs: BTreeMap::from([(v.clone(), 1)]),
        },
        Term::App(f, args) => {
            let mut out = SizePolynomial::constant(spec.weight(f) as i64);
            for a in args {
                out.add(&term_poly(a, spec));
            }
            out
        }
    }
}

fn store_poly(cs: &[Constraint], spec: &RankSpec) -> SizePolynomial {
    let mut out = SizePolynomial::constant(0);
    for c in cs {
        if let Constraint::User(name, args) = c {
            for &i in &spec.measured(name) {
                if let Some(arg) = args.get(i) {
                    out.add(&term_poly(arg, spec));
                }
            }
        }
    }
    out
}

/// Per-rule certificate status.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RuleCertificate {
    /// Simplification rule with a strict rank decrease: `head - body >= 1`
    /// for all positive variable sizes.
    Decreasing { head: String, body: String },
    /// The body equations are unsatisfiable, so firing collapses the
    /// state to `False` and the derivation ends.
    BodyUnsatisfiable,
    /// Propagation rule with a purely built-in body; such rule sets
    /// always terminate on their own.
    BuiltinPropagation,
    /// No certificate under this measure.
    NotCertifiable { reason: String },
}

impl RuleCertificate {
    pub fn certified(&self) -> bool {
        !matches!(self, RuleCertificate::NotCertifiable { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TerminationVerdict {
    GroundTerminating,
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct RuleReport {
    pub rule: String,
    pub certificate: RuleCertificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub verdict: TerminationVerdict,
    pub spec: RankSpec,
    pub auto_searched: bool,
    pub rules: Vec<RuleReport>,
}

/// Checks every rule of `p` against `spec`. Simplification rules need a
/// strict symbolic rank decrease after solving the body's equations;
/// purely built-in propagation rules are terminating on their own; and
/// propagation rules with user constraints in the body are honestly
/// reported as not certifiable, making the overall verdict `Unknown`.
pub fn rank_certificate(p: &Program, spec: &RankSpec) -> CertificateReport {
    let rules: Vec<RuleReport> = p
        .rules()
        .iter()
        .map(|r| RuleReport {
            rule: r.name().to_string(),
            certificate: certify_rule(r, spec),
        })
        .collect();
    let verdict = if rules.iter().all(|r| r.certificate.certified()) {
        TerminationVerdict::GroundTerminating
    } else {
        TerminationVerdict::Unknown
    };
    CertificateReport {
        verdict,
        spec: spec.clone(),
        auto_searched: false,
        rules,
    }
}

fn certify_rule(rule: &Rule, spec: &RankSpec) -> RuleCertificate {
    match rule.kind() {
        RuleKind::Prop => {
            if rule.is_purely_builtin_body() {
                RuleCertificate::BuiltinPropagation
            } else {
                RuleCertificate::NotCertifiable {
                    reason: "propagation rule with user constraints in the body".to_string(),
                }
            }
        }
        RuleKind::Simp => {
            if rule.body().iter().any(|c| matches!(c, Constraint::False)) {
                return RuleCertificate::BodyUnsatisfiable;
            }
            let eqs: Vec<(Term, Term)> = rule
                .body()
                .iter()
                .filter_map(|c| match c {
                    Constraint::Eq(l, r) => Some((l.clone(), r.clone())),
                    _ => None,
                })
                .collect();
            let Some(sigma) = unify_pairs(eqs) else {
                return RuleCertificate::BodyUnsatisfiable;
            };
            let head: Vec<Constraint> = sigma.apply_constraints(rule.head());
            let body: Vec<Constraint> = sigma
                .apply_constraints(rule.body())
                .into_iter()
                .filter(Constraint::is_user)
                .collect();
            let head_poly = store_poly(&head, spec);
            let body_poly = store_poly(&body, spec);
            let delta = head_poly.sub(&body_poly);
            let decreasing = delta.coeffs.values().all(|&c| c >= 0) && delta.value_at_one() >= 1;
            if decreasing {
                RuleCertificate::Decreasing {
                    head: head_poly.to_string(),
                    body: body_poly.to_string(),
                }
            } else {
                RuleCertificate::NotCertifiable {
                    reason: format!(
                        "head rank ({head_poly}) does not strictly dominate body rank ({body_poly})"
                    ),
                }
            }
        }
    }
}

/// Searches for a certifying measure when none is supplied: every functor
/// weight is 1 and each user constraint measures one of its argument
/// positions. The first combination (in deterministic order) certifying
/// all rules wins; failing that, the report of the best attempt is
/// returned with verdict `Unknown`.
pub fn rank_certificate_auto(p: &Program) -> CertificateReport {
    let mut arities: BTreeMap<String, usize> = BTreeMap::new();
    for rule in p.rules() {
        if rule.kind() != RuleKind::Simp {
            continue;
        }
        for c in rule.head().iter().chain(rule.body()) {
            if let Constraint::User(name, args) = c {
                let a = arities.entry(name.clone()).or_insert(args.len());
                *a = (*a).min(args.len());
            }
        }
    }
    let names: Vec<(String, usize)> = arities.into_iter().collect();
    let radixes: Vec<usize> = names.iter().map(|(_, a)| (*a).max(1)).collect();
    let mut combo = vec![0usize; names.len()];
    let mut best: Option<CertificateReport> = None;
    loop {
        let mut spec = RankSpec::default();
        for ((name, arity), &pos) in names.iter().zip(&combo) {
            if *arity > 0 {
                spec.measures.insert(name.clone(), BTreeSet::from([pos]));
            }
        }
        let mut report = rank_certificate(p, &spec);
        report.auto_searched = true;
        if report.verdict == TerminationVerdict::GroundTerminating {
            return report;
        }
        let certified =
            |r: &CertificateReport| r.rules.iter().filter(|x| x.certificate.certified()).count();
        if best
            .as_ref()
            .is_none_or(|b| certified(&report) > certified(b))
        {
            best = Some(report);
        }
        // odometer step over measured positions
        let mut i = combo.len();
        loop {
            if i == 0 {
                return best.expect("at least one combination was evaluated");
            }
            i -= 1;
            combo[i] += 1;
            if combo[i] < radixes[i] {
                break;
            }
            combo[i] = 0;
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ProjectionError {
    #[error("functors `{0}` and `{1}` collide as `{2}` after lowercasing")]
    FunctorCollision(String, String, String),
    #[error("variables `{0}` and `{1}` collide as `{2}` after uppercasing")]
    VariableCollision(String, String, String),
}

/// The Horn-clause projection of the simplification rules of `p`: one
/// clause `hi :- B.` per head constraint per simplification rule, in
/// standard logic-programming spelling (functors lowercased, variables
/// uppercased, `[t]` as `list(t)`). Propagation rules take no part on
/// ground states and are only listed in a header comment.
pub fn clp_projection(p: &Program) -> Result<String, ProjectionError> {
    let mut out = String::new();
    let props: Vec<&str> = p
        .rules()
        .iter()
        .filter(|r| r.kind() == RuleKind::Prop)
        .map(|r| r.name())
        .collect();
    let simps: Vec<&Rule> = p
        .rules()
        .iter()
        .filter(|r| r.kind() == RuleKind::Simp)
        .collect();
    if simps.is_empty() {
        out.push_str("% no simplification rules; the projection is empty\n");
    }
    if !props.is_empty() {
        out.push_str(&format!(
            "% propagation rules (not projected): {}\n",
            props.join(", ")
        ));
    }
    let multi: Vec<&str> = simps
        .iter()
        .filter(|r| r.head().len() > 1)
        .map(|r| r.name())
        .collect();
    if !multi.is_empty() {
        out.push_str(&format!(
            "% termination of the projection transfers to mono-headed rules; multi-headed: {}\n",
            multi.join(", ")
        ));
    }
    let mut functor_names: BTreeMap<String, String> = BTreeMap::new();
    for rule in &simps {
        let mut var_names: BTreeMap<String, String> = BTreeMap::new();
        let body: Vec<String> = rule
            .body()
            .iter()
            .filter(|c| !matches!(c, Constraint::True))
            .map(|c| pl_constraint(c, &mut functor_names, &mut var_names))
            .collect::<Result<_, _>>()?;
        for h in rule.head() {
            let head = pl_constraint(h, &mut functor_names, &mut var_names)?;
            if body.is_empty() {
                out.push_str(&format!("{head}.\n"));
            } else {
                out.push_str(&format!("{head} :- {}.\n", body.join(", ")));
            }
        }
    }
    Ok(out)
}

fn mangle_functor(
    name: &str,
    seen: &mut BTreeMap<String, String>,
) -> Result<String, ProjectionError> {
    let mut chars = name.chars();
    let mangled = match chars.next() {
        Some(c) => c.to_lowercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    };
    if let Some((prev, _)) = seen.iter().find(|(_, m)| **m == mangled) {
        if prev != name {
            return Err(ProjectionError::FunctorCollision(
                prev.clone(),
                name.to_string(),
                mangled,
            ));
        }
    }
    seen.insert(name.to_string(), mangled.clone());
    Ok(mangled)
}

fn mangle_var(name: &str, seen: &mut BTreeMap<String, String>) -> Result<String, ProjectionError> {
    let primes = name.chars().filter(|&c| c == '\'').count();
    let base: String = name.chars().filter(|&c| c != '\'').collect();
    let mut chars = base.chars();
    let mut mangled = match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    };
    if primes > 0 {
        mangled.push_str(&primes.to_string());
    }
    if let Some((prev, _)) = seen.iter().find(|(_, m)| **m == mangled) {
        if prev != name {
            return Err(ProjectionError::VariableCollision(
                prev.clone(),
                name.to_string(),
                mangled,
            ));
        }
    }
    seen.insert(name.to_string(), mangled.clone());
    Ok(mangled)
}

fn pl_term(
    t: &Term,
    functors: &mut BTreeMap<String, String>,
    vars: &mut BTreeMap<String, String>,
) -> Result<String, ProjectionError> {
    match t {
        Term::Var(v) => mangle_var(&v.to_string(), vars),
        Term::App(f, args) => {
            let name = mangle_functor(f, functors)?;
            if args.is_empty() {
                Ok(name)
            } else {
                let args: Vec<String> = args
                    .iter()
                    .map(|a| pl_term(a, functors, vars))
                    .collect::<Result<_, _>>()?;
                Ok(format!("{name}({})", args.join(", ")))
            }
        }
    }
}

fn pl_constraint(
    c: &Constraint,
    functors: &mut BTreeMap<String, String>,
    vars: &mut BTreeMap<String, String>,
) -> Result<String, ProjectionError> {
    match c {
        Constraint::True => Ok("true".to_string()),
        Constraint::False => Ok("false".to_string()),
        Constraint::Eq(l, r) => Ok(format!(
            "{} = {}",
            pl_term(l, functors, vars)?,
            pl_term(r, functors, vars)?
        )),
        Constraint::User(name, args) => {
            let name = mangle_functor(name, functors)?;
            if args.is_empty() {
                Ok(name)
            } else {
                let args: Vec<String> = args
                    .iter()
                    .map(|a| pl_term(a, functors, vars))
                    .collect::<Result<_, _>>()?;
                Ok(format!("{name}({})", args.join(", ")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_program, parse_rule};

    fn f_rule_spec() -> RankSpec {
        RankSpec::parse("measure F 1; weight List 1").unwrap()
    }

    #[test]
    fn f_list_rule_is_certified() {
        let p = parse_program("r @ F [a] b <=> b = [c], F a c.").unwrap();
        let rep = rank_certificate(&p, &f_rule_spec());
        assert_eq!(rep.verdict, TerminationVerdict::GroundTerminating);
        match &rep.rules[0].certificate {
            RuleCertificate::Decreasing { head, body } => {
                assert_eq!(head, "1 + size(a)");
                assert_eq!(body, "size(a)");
            }
            other => panic!("expected decreasing, got {other:?}"),
        }
    }

    #[test]
    fn eq_rule_is_certified() {
        let p = parse_program("r @ Eq [a] <=> Eq a.").unwrap();
        let spec = RankSpec::parse("measure Eq 1").unwrap();
        let rep = rank_certificate(&p, &spec);
        assert_eq!(rep.verdict, TerminationVerdict::GroundTerminating);
    }

    #[test]
    fn p_rule_certified_through_body_equation() {
        // size(x) = 1 + size(y) once the body equation is solved
        let p = parse_program("r @ P x <=> x = [y], P y.").unwrap();
        let spec = RankSpec::parse("measure P 1").unwrap();
        let rep = rank_certificate(&p, &spec);
        assert_eq!(rep.verdict, TerminationVerdict::GroundTerminating);
    }

    #[test]
    fn builtin_propagation_certified_by_lemma() {
        let p = parse_program("fd @ F a b, F a c ==> b = c.").unwrap();
        let rep = rank_certificate(&p, &RankSpec::default());
        assert_eq!(
            rep.rules[0].certificate,
            RuleCertificate::BuiltinPropagation
        );
        assert_eq!(rep.verdict, TerminationVerdict::GroundTerminating);
    }

    #[test]
    fn user_body_propagation_not_certifiable() {
        let p = parse_program("super @ C a ==> D a.").unwrap();
        let rep = rank_certificate(&p, &RankSpec::default());
        assert!(!rep.rules[0].certificate.certified());
        assert_eq!(rep.verdict, TerminationVerdict::Unknown);
    }

    #[test]
    fn nonterminating_rule_rejected() {
        let p = parse_program("r @ P x <=> x = y, P y.").unwrap();
        let spec = RankSpec::parse("measure P 1").unwrap();
        let rep = rank_certificate(&p, &spec);
        assert_eq!(rep.verdict, TerminationVerdict::Unknown);
    }

    #[test]
    fn auto_search_finds_f_measure() {
        let p = parse_program(
            "f_fd @ F a b, F a c ==> b = c.\n\
             f_int @ F Int Bool <=> True.\n\
             f_int_imp @ F Int b ==> b = Bool.\n\
             f_list @ F [a] [b] <=> F a b.\n\
             f_list_imp @ F [a] b ==> b = [c].\n",
        )
        .unwrap();
        let rep = rank_certificate_auto(&p);
        assert_eq!(rep.verdict, TerminationVerdict::GroundTerminating);
        assert_eq!(rep.spec.measured("F"), BTreeSet::from([0]));
        assert!(rep.auto_searched);
    }

    #[test]
    fn negative_weight_rejected() {
        assert_eq!(
            RankSpec::parse("weight List -1"),
            Err(RankSpecError::NegativeWeight("List".to_string()))
        );
    }

    #[test]
    fn concrete_rank_matches_paper_shape() {
        let spec = f_rule_spec();
        let t = crate::parse::parse_term("[[Int]]").unwrap();
        // 1 (outer list) + 1 (inner list) + 1 (Int)
        assert_eq!(spec.rank_term(&t), 3);
    }

    #[test]
    fn projection_of_f_list_rule() {
        let p = parse_program("r @ F [a] b <=> b = [c], F a c.").unwrap();
        let text = clp_projection(&p).unwrap();
        assert!(
            text.contains("f(list(A), B) :- B = list(C), f(A, C).\n"),
            "{text}"
        );
    }

    #[test]
    fn projection_of_f_int_rule() {
        let p = parse_program("r @ F Int b <=> b = Bool.").unwrap();
        let text = clp_projection(&p).unwrap();
        assert!(text.contains("f(int, B) :- B = bool.\n"), "{text}");
    }

    #[test]
    fn projection_emits_one_clause_per_head() {
        let p = parse_program("r @ A x, B x <=> C x.").unwrap();
        let text = clp_projection(&p).unwrap();
        assert!(text.contains("a(X) :- c(X).\n"), "{text}");
        assert!(text.contains("b(X) :- c(X).\n"), "{text}");
    }

    #[test]
    fn projection_empty_program_is_comment_only() {
        let p = parse_program("fd @ F a b, F a c ==> b = c.").unwrap();
        let text = clp_projection(&p).unwrap();
        assert!(text.contains("% no simplification rules"));
        assert!(text.contains("% propagation rules (not projected): fd"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('%')).count(), 0);
    }

    #[test]
    fn projection_true_body_is_a_fact() {
        let p = parse_program("r @ F Int Bool <=> True.").unwrap();
        let text = clp_projection(&p).unwrap();
        assert!(text.contains("f(int, bool).\n"), "{text}");
    }

    #[test]
    fn rule_with_unsatisfiable_body_is_terminal() {
        let r = parse_rule("r @ P x <=> Int = Bool, P x.").unwrap();
        assert_eq!(
            certify_rule(&r, &RankSpec::default()),
            RuleCertificate::BodyUnsatisfiable
        );
    }
}
