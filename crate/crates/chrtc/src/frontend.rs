//! Class and instance declarations with functional dependencies: parsing
//! the `.hs`-like surface syntax, translating declarations into CHR rules,
//! and the Consistency, Coverage and Weak Coverage conditions.

use crate::engine::{Program, Rule, RuleKind};
use crate::parse::{Cursor, ParseError, Tok};
use crate::term::{unify, unify_pairs, Constraint, Term, Var};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// A functional dependency `a_{i1} .. a_{ik} -> a_{i0}` over class
/// parameter positions (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FunDep {
    pub sources: Vec<usize>,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub params: Vec<String>,
    pub context: Vec<Constraint>,
    pub fundeps: Vec<FunDep>,
}

impl ClassDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceDecl {
    pub class: String,
    pub args: Vec<Term>,
    pub context: Vec<Constraint>,
}

impl InstanceDecl {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = crate::term::vars_of(&self.context);
        for t in &self.args {
            t.collect_vars(&mut out);
        }
        out
    }
}

impl fmt::Display for ClassDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "class ")?;
        write_context(f, &self.context)?;
        write!(f, "{}", self.name)?;
        for p in &self.params {
            write!(f, " {p}")?;
        }
        if !self.fundeps.is_empty() {
            write!(f, " | ")?;
            for (i, fd) in self.fundeps.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                for (k, s) in fd.sources.iter().enumerate() {
                    if k > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{}", self.params[*s])?;
                }
                write!(f, " -> {}", self.params[fd.target])?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for InstanceDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "instance ")?;
        write_context(f, &self.context)?;
        write!(
            f,
            "{}",
            Constraint::User(self.class.clone(), self.args.clone())
        )
    }
}

fn write_context(f: &mut fmt::Formatter<'_>, context: &[Constraint]) -> fmt::Result {
    match context.len() {
        0 => Ok(()),
        1 => write!(f, "{} => ", context[0]),
        _ => {
            write!(f, "(")?;
            for (i, c) in context.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ") => ")
        }
    }
}

/// Parsed declarations in file order.
#[derive(Clone, Debug, Default)]
pub struct Decls {
    pub classes: Vec<ClassDecl>,
    pub instances: Vec<InstanceDecl>,
}

impl Decls {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Instances of one class, in file order.
    pub fn instances_of(&self, class: &str) -> Vec<&InstanceDecl> {
        self.instances.iter().filter(|i| i.class == class).collect()
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DeclError {
    #[error(transparent)]
    Syntax(#[from] ParseError),
    #[error("line {line}: unknown class `{class}`")]
    UnknownClass { class: String, line: usize },
    #[error("line {line}: class `{class}` expects {expected} arguments, found {found}")]
    ArityMismatch {
        class: String,
        expected: usize,
        found: usize,
        line: usize,
    },
    #[error("line {line}: duplicate class `{class}`")]
    DuplicateClass { class: String, line: usize },
    #[error("line {line}: duplicate functional dependency")]
    DuplicateFunDep { line: usize },
    #[error("line {line}: {message}")]
    Invalid { message: String, line: usize },
}

/// Parses class/instance declarations. Declarations sit one per line or
/// separated by `;`; anything from `where` to the end of the line is
/// dropped, `data` declarations and indented continuation lines are
/// skipped, and `--` starts a comment.
pub fn parse_decls(text: &str) -> Result<Decls, DeclError> {
    let mut decls = Decls::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_where(raw_line);
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with("--") {
            continue;
        }
        if raw_line.starts_with(char::is_whitespace) {
            // continuation of a `where` body
            continue;
        }
        let Some(first) = trimmed.split_whitespace().next() else {
            continue;
        };
        match first {
            "data" => continue,
            "class" | "instance" => {}
            other => {
                return Err(DeclError::Invalid {
                    message: format!("expected `class`, `instance` or `data`, found `{other}`"),
                    line: lineno,
                })
            }
        }
        for chunk in trimmed.split(';') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            parse_one_decl(chunk, lineno, &mut decls)?;
        }
    }
    Ok(decls)
}

/// Cuts the line at a standalone `where` keyword.
fn strip_where(line: &str) -> &str {
    let bytes = line.as_bytes();
    let mut search = 0;
    while let Some(pos) = line[search..].find("where") {
        let at = search + pos;
        let before_ok = at == 0 || bytes[at - 1].is_ascii_whitespace();
        let end = at + "where".len();
        let after_ok = end == line.len() || bytes[end].is_ascii_whitespace();
        if before_ok && after_ok {
            return &line[..at];
        }
        search = end;
    }
    line
}

fn program_var(name: &str) -> Var {
    Var::Program(name.to_string())
}

fn parse_one_decl(chunk: &str, line: usize, decls: &mut Decls) -> Result<(), DeclError> {
    let mut cur = Cursor::new(chunk)?;
    let keyword = match cur.next().map(|s| s.tok.clone()) {
        Some(Tok::Lower(k)) if k == "class" || k == "instance" => k,
        _ => {
            return Err(DeclError::Invalid {
                message: "expected `class` or `instance`".to_string(),
                line,
            })
        }
    };
    let context = parse_context(&mut cur)?;
    let class_name = match cur.next().map(|s| s.tok.clone()) {
        Some(Tok::Upper(n)) => n,
        _ => {
            return Err(DeclError::Invalid {
                message: "expected a class name".to_string(),
                line,
            })
        }
    };
    if keyword == "class" {
        let mut params = Vec::new();
        while let Some(Tok::Lower(_)) = cur.peek() {
            match cur.next().map(|s| s.tok.clone()) {
                Some(Tok::Lower(p)) => params.push(p),
                _ => unreachable!(),
            }
        }
        let mut seen = BTreeSet::new();
        for p in &params {
            if !seen.insert(p.clone()) {
                return Err(DeclError::Invalid {
                    message: format!("duplicate class parameter `{p}`"),
                    line,
                });
            }
        }
        let fundeps = parse_fundeps(&mut cur, &params, line)?;
        if !cur.at_end() {
            return Err(DeclError::Syntax(
                cur.error("trailing input after class declaration"),
            ));
        }
        let param_set: BTreeSet<Var> = params.iter().map(|p| program_var(p)).collect();
        for c in &context {
            if !c.vars().is_subset(&param_set) {
                return Err(DeclError::Invalid {
                    message: "class context mentions a variable that is not a class parameter"
                        .to_string(),
                    line,
                });
            }
        }
        if decls.class(&class_name).is_some() {
            return Err(DeclError::DuplicateClass {
                class: class_name,
                line,
            });
        }
        decls.classes.push(ClassDecl {
            name: class_name,
            params,
            context,
            fundeps,
        });
    } else {
        let mut args = Vec::new();
        while !cur.at_end() {
            args.push(cur.atom(&program_var)?);
        }
        let Some(class) = decls.class(&class_name) else {
            return Err(DeclError::UnknownClass {
                class: class_name,
                line,
            });
        };
        if class.arity() != args.len() {
            return Err(DeclError::ArityMismatch {
                class: class_name,
                expected: class.arity(),
                found: args.len(),
                line,
            });
        }
        decls.instances.push(InstanceDecl {
            class: class_name,
            args,
            context,
        });
    }
    Ok(())
}

/// Parses an optional `D =>` prefix where `D` is a constraint or a
/// parenthesized constraint tuple. Detected by scanning for `=>` at
/// bracket depth zero.
fn parse_context(cur: &mut Cursor) -> Result<Vec<Constraint>, DeclError> {
    if !has_context_arrow(cur) {
        return Ok(Vec::new());
    }
    let mut context = Vec::new();
    if cur.peek() == Some(&Tok::LParen) {
        cur.next();
        loop {
            context.push(cur.constraint(&program_var)?);
            match cur.peek() {
                Some(Tok::Comma) => {
                    cur.next();
                }
                Some(Tok::RParen) => {
                    cur.next();
                    break;
                }
                _ => {
                    return Err(DeclError::Syntax(
                        cur.error("expected `,` or `)` in context"),
                    ))
                }
            }
        }
    } else {
        context.push(cur.constraint(&program_var)?);
    }
    cur.expect(Tok::ContextArrow)?;
    Ok(context)
}

fn has_context_arrow(cur: &Cursor) -> bool {
    let mut depth = 0i32;
    let mut i = 0;
    while let Some(tok) = cur.peek_at(i) {
        match tok {
            Tok::LParen | Tok::LBracket => depth += 1,
            Tok::RParen | Tok::RBracket => depth -= 1,
            Tok::ContextArrow if depth == 0 => return true,
            Tok::Pipe if depth == 0 => return false,
            _ => {}
        }
        i += 1;
    }
    false
}

fn parse_fundeps(
    cur: &mut Cursor,
    params: &[String],
    line: usize,
) -> Result<Vec<FunDep>, DeclError> {
    if cur.peek() != Some(&Tok::Pipe) {
        return Ok(Vec::new());
    }
    cur.next();
    let index_of = |name: &str| -> Result<usize, DeclError> {
        params
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| DeclError::Invalid {
                message: format!("functional dependency mentions `{name}`, not a class parameter"),
                line,
            })
    };
    let mut fundeps: Vec<FunDep> = Vec::new();
    loop {
        let mut sources = Vec::new();
        while let Some(Tok::Lower(_)) = cur.peek() {
            match cur.next().map(|s| s.tok.clone()) {
                Some(Tok::Lower(n)) => sources.push(index_of(&n)?),
                _ => unreachable!(),
            }
        }
        cur.expect(Tok::FdArrow)?;
        let target = match cur.next().map(|s| s.tok.clone()) {
            Some(Tok::Lower(n)) => index_of(&n)?,
            _ => {
                return Err(DeclError::Invalid {
                    message: "expected a target parameter after `->`".to_string(),
                    line,
                })
            }
        };
        if sources.is_empty() {
            return Err(DeclError::Invalid {
                message: "functional dependency needs at least one source parameter".to_string(),
                line,
            });
        }
        if sources.contains(&target) {
            return Err(DeclError::Invalid {
                message: "functional dependency target also appears as a source".to_string(),
                line,
            });
        }
        let fd = FunDep { sources, target };
        if fundeps.contains(&fd) {
            return Err(DeclError::DuplicateFunDep { line });
        }
        fundeps.push(fd);
        match cur.peek() {
            Some(Tok::Comma) => {
                cur.next();
            }
            _ => break,
        }
    }
    Ok(fundeps)
}

/// Picks a variable name based on `base` that avoids `taken`, by priming.
fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    let mut name = base.to_string();
    loop {
        name.push('\'');
        if !taken.contains(&name) {
            return name;
        }
    }
}

/// Translates declarations into a CHR program.
///
/// Per class: a propagation rule `C a.. ==> D` when the context is
/// nonempty, and per functional dependency the rule
/// `C a.., C b.. ==> a_t = b_t` with `b_j = a_j` at source positions and
/// fresh elsewhere. Per instance: the simplification `C t.. <=> D` (body
/// `True` when the context is empty) and, per functional dependency, the
/// improvement `C b.. ==> b_t = t_t` with `b_j = t_j` at source positions
/// and fresh elsewhere. Improvements whose body would be vacuous — the
/// target is a variable foreign to the source positions, so firing only
/// equates a fresh local with a fresh local — are not emitted.
///
/// With `fuse` set, each instance rule absorbs its improvement rules into
/// the combined form `C b.. <=> b_t = t_t, .., D`.
pub fn translate(decls: &Decls, fuse: bool) -> Program {
    let mut rules: Vec<Rule> = Vec::new();
    for class in &decls.classes {
        let params: Vec<Term> = class
            .params
            .iter()
            .map(|p| Term::Var(program_var(p)))
            .collect();
        let head = Constraint::User(class.name.clone(), params.clone());
        if !class.context.is_empty() {
            rules.push(
                Rule::new(
                    format!("{}_class", class.name),
                    RuleKind::Prop,
                    vec![head.clone()],
                    class.context.clone(),
                )
                .expect("class rule is well formed"),
            );
        }
        for (k, fd) in class.fundeps.iter().enumerate() {
            let mut taken: BTreeSet<String> = class.params.iter().cloned().collect();
            let second: Vec<Term> = class
                .params
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    if fd.sources.contains(&j) {
                        Term::Var(program_var(p))
                    } else {
                        let name = fresh_name(p, &taken);
                        taken.insert(name.clone());
                        Term::Var(program_var(&name))
                    }
                })
                .collect();
            let body = Constraint::Eq(params[fd.target].clone(), second[fd.target].clone());
            rules.push(
                Rule::new(
                    format!("{}_fd{}", class.name, k + 1),
                    RuleKind::Prop,
                    vec![head.clone(), Constraint::User(class.name.clone(), second)],
                    vec![body],
                )
                .expect("fd rule is well formed"),
            );
        }
    }
    let mut per_class_count: BTreeMap<String, usize> = BTreeMap::new();
    for inst in &decls.instances {
        let n = per_class_count.entry(inst.class.clone()).or_insert(0);
        *n += 1;
        let n = *n;
        let class = decls.class(&inst.class).expect("instance class declared");
        let inst_head = Constraint::User(inst.class.clone(), inst.args.clone());
        let inst_body = if inst.context.is_empty() {
            vec![Constraint::True]
        } else {
            inst.context.clone()
        };
        let inst_rule = Rule::new(
            format!("{}_inst{}", inst.class, n),
            RuleKind::Simp,
            vec![inst_head],
            inst_body,
        )
        .expect("instance rule is well formed");

        // improvement rules, skipping vacuous ones
        let inst_var_names: BTreeSet<String> = inst
            .vars()
            .into_iter()
            .filter_map(|v| match v {
                Var::Program(s) => Some(s),
                _ => None,
            })
            .collect();
        let mut improvements: Vec<(usize, &FunDep, Rule)> = Vec::new();
        for (k, fd) in class.fundeps.iter().enumerate() {
            let target_term = &inst.args[fd.target];
            let source_vars: BTreeSet<Var> = fd
                .sources
                .iter()
                .flat_map(|&j| inst.args[j].vars())
                .collect();
            let vacuous = match target_term {
                Term::Var(v) => !source_vars.contains(v),
                Term::App(..) => false,
            };
            if vacuous {
                continue;
            }
            let mut taken = inst_var_names.clone();
            let head_args: Vec<Term> = inst
                .args
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    if fd.sources.contains(&j) {
                        t.clone()
                    } else {
                        let name = fresh_name(&class.params[j], &taken);
                        taken.insert(name.clone());
                        Term::Var(program_var(&name))
                    }
                })
                .collect();
            let body = Constraint::Eq(head_args[fd.target].clone(), target_term.clone());
            let rule = Rule::new(
                format!("{}_inst{}_imp{}", inst.class, n, k + 1),
                RuleKind::Prop,
                vec![Constraint::User(inst.class.clone(), head_args)],
                vec![body],
            )
            .expect("improvement rule is well formed");
            improvements.push((k, fd, rule));
        }

        let fused = fuse && !improvements.is_empty() && fusable(&improvements, inst.args.len());
        if fused {
            let targets: BTreeSet<usize> =
                improvements.iter().map(|(_, fd, _)| fd.target).collect();
            let mut taken = inst_var_names.clone();
            let head_args: Vec<Term> = inst
                .args
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    if targets.contains(&j) {
                        let name = fresh_name(&class.params[j], &taken);
                        taken.insert(name.clone());
                        Term::Var(program_var(&name))
                    } else {
                        t.clone()
                    }
                })
                .collect();
            let mut body: Vec<Constraint> = improvements
                .iter()
                .map(|(_, fd, _)| {
                    Constraint::Eq(head_args[fd.target].clone(), inst.args[fd.target].clone())
                })
                .collect();
            body.extend(inst.context.clone());
            rules.push(
                Rule::new(
                    format!("{}_inst{}", inst.class, n),
                    RuleKind::Simp,
                    vec![Constraint::User(inst.class.clone(), head_args)],
                    body,
                )
                .expect("fused instance rule is well formed"),
            );
        } else {
            rules.push(inst_rule);
            rules.extend(improvements.into_iter().map(|(_, _, r)| r));
        }
    }
    Program::new(rules).expect("generated rule names are unique")
}

/// Fusion replaces target positions by fresh head variables; it is only
/// sound when no fused target position doubles as a source position.
fn fusable(improvements: &[(usize, &FunDep, Rule)], _arity: usize) -> bool {
    let targets: BTreeSet<usize> = improvements.iter().map(|(_, fd, _)| fd.target).collect();
    let sources: BTreeSet<usize> = improvements
        .iter()
        .flat_map(|(_, fd, _)| fd.sources.iter().copied())
        .collect();
    targets.is_disjoint(&sources)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionItem {
    pub subject: String,
    pub fundep: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub pass: bool,
    pub items: Vec<ConditionItem>,
}

impl ConditionReport {
    fn from_items(items: Vec<ConditionItem>) -> ConditionReport {
        ConditionReport {
            pass: items.iter().all(|i| i.pass),
            items,
        }
    }
}

fn fd_display(class: &ClassDecl, fd: &FunDep) -> String {
    let sources: Vec<&str> = fd
        .sources
        .iter()
        .map(|&j| class.params[j].as_str())
        .collect();
    format!("{} -> {}", sources.join(" "), class.params[fd.target])
}

/// Renames an instance's variables away from `avoid` by priming.
fn rename_instance(inst: &InstanceDecl, avoid: &BTreeSet<Var>) -> InstanceDecl {
    let taken: BTreeSet<String> = avoid
        .iter()
        .filter_map(|v| match v {
            Var::Program(n) => Some(n.clone()),
            _ => None,
        })
        .collect();
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut used = taken.clone();
    for v in inst.vars() {
        if let Var::Program(n) = v {
            let fresh = fresh_name(&n, &used);
            used.insert(fresh.clone());
            map.insert(n, fresh);
        }
    }
    let rename = |v: &Var| match v {
        Var::Program(n) => Var::Program(map[n].clone()),
        other => other.clone(),
    };
    InstanceDecl {
        class: inst.class.clone(),
        args: inst.args.iter().map(|t| t.map_vars(&rename)).collect(),
        context: inst.context.iter().map(|c| c.map_vars(&rename)).collect(),
    }
}

/// The Consistency Condition: whenever two instances of a class agree
/// (under substitution) on a functional dependency's source positions,
/// they must agree on its target position. Checked at the most general
/// unifier of the source tuples: the targets must unify without
/// instantiating the unified sources any further.
pub fn consistency_condition(decls: &Decls) -> ConditionReport {
    let mut items = Vec::new();
    for class in &decls.classes {
        let instances = decls.instances_of(&class.name);
        for m in 0..instances.len() {
            for n in m..instances.len() {
                let inst1 = instances[m];
                let inst2 = rename_instance(instances[n], &inst1.vars());
                for fd in &class.fundeps {
                    let subject = format!("{inst1} / {}", instances[n]);
                    let fundep = fd_display(class, fd);
                    let pairs: Vec<(Term, Term)> = fd
                        .sources
                        .iter()
                        .map(|&j| (inst1.args[j].clone(), inst2.args[j].clone()))
                        .collect();
                    let Some(theta) = unify_pairs(pairs) else {
                        items.push(ConditionItem {
                            subject,
                            fundep,
                            pass: true,
                            detail: "source positions do not unify".to_string(),
                        });
                        continue;
                    };
                    let t0 = theta.apply_term(&inst1.args[fd.target]);
                    let s0 = theta.apply_term(&inst2.args[fd.target]);
                    let Some(rho) = unify(&t0, &s0) else {
                        items.push(ConditionItem {
                            subject,
                            fundep,
                            pass: false,
                            detail: format!(
                                "source positions unify under {theta} but targets {t0} and {s0} do not"
                            ),
                        });
                        continue;
                    };
                    let mut source_vars: BTreeSet<Var> = BTreeSet::new();
                    for &j in &fd.sources {
                        theta
                            .apply_term(&inst1.args[j])
                            .collect_vars(&mut source_vars);
                    }
                    let offending: Vec<String> = rho
                        .domain()
                        .filter(|v| source_vars.contains(v))
                        .map(|v| v.to_string())
                        .collect();
                    if offending.is_empty() {
                        items.push(ConditionItem {
                            subject,
                            fundep,
                            pass: true,
                            detail: format!("targets agree under {theta}"),
                        });
                    } else {
                        items.push(ConditionItem {
                            subject,
                            fundep,
                            pass: false,
                            detail: format!(
                                "targets only unify by instantiating source variables {}",
                                offending.join(", ")
                            ),
                        });
                    }
                }
            }
        }
    }
    ConditionReport::from_items(items)
}

/// The Coverage Condition: per instance and functional dependency, the
/// target position's variables must be covered by the source positions'.
pub fn coverage_condition(decls: &Decls) -> ConditionReport {
    let mut items = Vec::new();
    for class in &decls.classes {
        for inst in decls.instances_of(&class.name) {
            for fd in &class.fundeps {
                let mut source_vars = BTreeSet::new();
                for &j in &fd.sources {
                    inst.args[j].collect_vars(&mut source_vars);
                }
                let target_vars = inst.args[fd.target].vars();
                let offending: Vec<String> = target_vars
                    .difference(&source_vars)
                    .map(|v| v.to_string())
                    .collect();
                items.push(ConditionItem {
                    subject: inst.to_string(),
                    fundep: fd_display(class, fd),
                    pass: offending.is_empty(),
                    detail: if offending.is_empty() {
                        "target variables covered by source positions".to_string()
                    } else {
                        format!(
                            "vars({}) not covered: {}",
                            inst.args[fd.target],
                            offending.join(", ")
                        )
                    },
                });
            }
        }
    }
    ConditionReport::from_items(items)
}

/// The Weak Coverage Condition: target variables must lie in the closure
/// of the source variables under the functional dependencies of the
/// instance context, computed as a fixpoint.
pub fn weak_coverage_condition(decls: &Decls) -> ConditionReport {
    let mut items = Vec::new();
    for class in &decls.classes {
        for inst in decls.instances_of(&class.name) {
            for fd in &class.fundeps {
                let mut covered = BTreeSet::new();
                for &j in &fd.sources {
                    inst.args[j].collect_vars(&mut covered);
                }
                loop {
                    let before = covered.len();
                    for c in &inst.context {
                        let Constraint::User(name, args) = c else {
                            continue;
                        };
                        let Some(ctx_class) = decls.class(name) else {
                            continue;
                        };
                        for cfd in &ctx_class.fundeps {
                            if cfd.sources.iter().all(|&j| {
                                args.get(j)
                                    .map(|t| t.vars().is_subset(&covered))
                                    .unwrap_or(false)
                            }) {
                                if let Some(t) = args.get(cfd.target) {
                                    covered.extend(t.vars());
                                }
                            }
                        }
                    }
                    if covered.len() == before {
                        break;
                    }
                }
                let target_vars = inst.args[fd.target].vars();
                let offending: Vec<String> = target_vars
                    .difference(&covered)
                    .map(|v| v.to_string())
                    .collect();
                items.push(ConditionItem {
                    subject: inst.to_string(),
                    fundep: fd_display(class, fd),
                    pass: offending.is_empty(),
                    detail: if offending.is_empty() {
                        format!(
                            "closure covers the target: {{{}}}",
                            covered
                                .iter()
                                .map(|v| v.to_string())
                                .collect::<Vec<_>>()
                                .join(", ")
                        )
                    } else {
                        format!("closure misses {}", offending.join(", "))
                    },
                });
            }
        }
    }
    ConditionReport::from_items(items)
}

/// Class rules whose bodies carry user constraints (superclass contexts);
/// these defeat the ground-termination analysis and are worth flagging.
pub fn superclass_rules(decls: &Decls) -> Vec<String> {
    decls
        .classes
        .iter()
        .filter(|c| c.context.iter().any(Constraint::is_user))
        .map(|c| format!("{}_class", c.name))
        .collect()
}
