//! Batch workflows behind the command-line interface: translate
//! declarations, run bounded inference on a goal, run the full condition
//! check, and emit the Horn-clause projection.
//!
//! Exit codes are uniform across commands: 0 for an answer or a SAFE
//! verdict, 1 for unknown, 2 for `False` or UNSAFE, anything above 2 for
//! usage or input errors.

use crate::confluence::{
    local_confluence_check, range_restricted_syntactic, uniqueness_probe, ConfluenceReport,
    ConfluenceVerdict, RangeReport, UniquenessReport,
};
use crate::engine::{derive, Outcome, Program, Strategy};
use crate::frontend::{
    consistency_condition, coverage_condition, parse_decls, superclass_rules, translate,
    weak_coverage_condition, ConditionReport, DeclError, Decls,
};
use crate::parse::{parse_goal, parse_program, ParseError};
use crate::state::State;
use crate::termination::{
    clp_projection, rank_certificate, rank_certificate_auto, CertificateReport, ProjectionError,
    RankSpec, RankSpecError, TerminationVerdict,
};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNKNOWN: i32 = 1;
pub const EXIT_FALSE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

/// Shared knobs for the batch commands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Derivation depth bound B.
    pub depth: usize,
    pub join_depth: usize,
    pub join_width: usize,
    /// Number of random-strategy trials for `--probe`.
    pub probe: Option<usize>,
    pub seed: u64,
    pub format: OutputFormat,
    /// Emit the combined instance/improvement rule form.
    pub fuse: bool,
    /// Externally supplied rank measure; searched automatically when
    /// absent.
    pub rank_spec: Option<RankSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            depth: 1000,
            join_depth: 20,
            join_width: 500,
            probe: None,
            seed: 0,
            format: OutputFormat::Text,
            fuse: false,
            rank_spec: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Decl(#[from] DeclError),
    #[error("{0}")]
    Projection(#[from] ProjectionError),
    #[error("{0}")]
    RankSpec(#[from] RankSpecError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Input(String),
}

/// Either a declaration file or a raw CHR program file.
pub enum LoadedProgram {
    FromDecls { decls: Decls, program: Program },
    Chr(Program),
}

impl LoadedProgram {
    pub fn program(&self) -> &Program {
        match self {
            LoadedProgram::FromDecls { program, .. } => program,
            LoadedProgram::Chr(p) => p,
        }
    }
}

/// Distinguishes declaration text from CHR rule text by its leading
/// keywords.
pub fn looks_like_decls(text: &str) -> bool {
    text.lines().any(|line| {
        let t = line.trim_start();
        t.starts_with("class ")
            || t.starts_with("instance ")
            || t.starts_with("data ")
            || t == "class"
            || t == "instance"
    })
}

/// Loads either kind of input, translating declarations on the fly.
pub fn load_program(text: &str, cfg: &RunConfig) -> Result<LoadedProgram, DriverError> {
    if looks_like_decls(text) {
        let decls = parse_decls(text)?;
        let program = translate(&decls, cfg.fuse);
        Ok(LoadedProgram::FromDecls { decls, program })
    } else {
        Ok(LoadedProgram::Chr(parse_program(text)?))
    }
}

pub struct TranslateOutput {
    pub program: Program,
    pub program_text: String,
    pub summary: String,
}

/// Translates a declaration file and reports per-declaration rule counts.
pub fn run_translate(decl_text: &str, cfg: &RunConfig) -> Result<TranslateOutput, DriverError> {
    let decls = parse_decls(decl_text)?;
    let program = translate(&decls, cfg.fuse);
    let mut lines = Vec::new();
    for class in &decls.classes {
        let count = program
            .rules()
            .iter()
            .filter(|r| {
                r.name() == format!("{}_class", class.name)
                    || r.name().starts_with(&format!("{}_fd", class.name))
            })
            .count();
        lines.push(format!("{class}: {count} rule{}", plural(count)));
    }
    let mut per_class: std::collections::BTreeMap<&str, usize> = Default::default();
    for inst in &decls.instances {
        let n = per_class.entry(inst.class.as_str()).or_insert(0);
        *n += 1;
        let prefix = format!("{}_inst{}", inst.class, n);
        let count = program
            .rules()
            .iter()
            .filter(|r| r.name() == prefix || r.name().starts_with(&format!("{prefix}_imp")))
            .count();
        lines.push(format!("{inst}: {count} rule{}", plural(count)));
    }
    lines.push(format!(
        "total: {} rule{}",
        program.rules().len(),
        plural(program.rules().len())
    ));
    Ok(TranslateOutput {
        program_text: program.to_string(),
        summary: lines.join("\n"),
        program,
    })
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        ""
    } else {
        "s"
    }
}

#[derive(Serialize)]
pub struct InferOutput {
    pub status: String,
    pub answer: Option<String>,
    pub steps: usize,
    pub probe: Option<UniquenessReport>,
    #[serde(skip)]
    pub rendered: String,
    #[serde(skip)]
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub exit_code: i32,
}

/// Runs bounded first-match inference for a goal against a declaration or
/// CHR file. Goal variables are global; answers are rendered as global
/// bindings followed by residual constraints.
pub fn run_infer(
    input_text: &str,
    goal_text: &str,
    cfg: &RunConfig,
) -> Result<InferOutput, DriverError> {
    let loaded = load_program(input_text, cfg)?;
    let program = loaded.program();
    let raw = parse_goal(goal_text)?;
    let mut warnings = Vec::new();
    let head_names = program.head_constraint_names();
    for c in &raw {
        if let crate::term::Constraint::User(name, _) = c {
            if !head_names.contains(name) {
                warnings.push(format!(
                    "warning: constraint `{name}` matches no rule head; it is inert"
                ));
            }
        }
    }
    let goal = State::goal(raw);
    let outcome = derive(program, &goal, cfg.depth, &Strategy::FirstMatch);
    let (status, answer, exit_code, mut rendered) = match &outcome {
        Outcome::FinalState { state, .. } => {
            let text = state.to_string();
            (
                "answer".to_string(),
                Some(text.clone()),
                EXIT_OK,
                format!("answer: {text}"),
            )
        }
        Outcome::FalseState { .. } => (
            "false".to_string(),
            Some("False".to_string()),
            EXIT_FALSE,
            "false".to_string(),
        ),
        Outcome::DepthExceeded { .. } => (
            "unknown".to_string(),
            None,
            EXIT_UNKNOWN,
            format!("unknown (depth bound {} exceeded)", cfg.depth),
        ),
    };
    let probe = cfg.probe.map(|trials| {
        let rep = uniqueness_probe(program, &goal, trials, cfg.depth, cfg.seed);
        rendered.push('\n');
        rendered.push_str(&render_probe(&rep));
        rep
    });
    let mut out = InferOutput {
        status,
        answer,
        steps: outcome.steps(),
        probe,
        rendered,
        warnings,
        exit_code,
    };
    if cfg.format == OutputFormat::Json {
        out.rendered = serde_json::to_string_pretty(&out).expect("report serializes");
    }
    Ok(out)
}

fn render_probe(rep: &UniquenessReport) -> String {
    if rep.pass {
        format!(
            "uniqueness probe: PASS ({} runs, {} answered, {} exceeded the bound{})",
            rep.trials,
            rep.answered,
            rep.depth_exceeded,
            match &rep.answer {
                Some(a) => format!("; answer {a}"),
                None => String::new(),
            }
        )
    } else {
        let (a, b) = rep
            .counterexample
            .as_ref()
            .expect("failed probe has witnesses");
        format!("uniqueness probe: FAIL (distinct answers `{a}` and `{b}`)")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OverallVerdict {
    Safe,
    Unsafe,
    Unknown,
}

#[derive(Serialize)]
pub struct CheckOutput {
    pub consistency: ConditionReport,
    pub coverage: ConditionReport,
    pub weak_coverage: ConditionReport,
    pub range_restriction: RangeReport,
    pub local_confluence: ConfluenceReport,
    pub ground_termination: CertificateReport,
    pub superclass_rules: Vec<String>,
    pub overall: OverallVerdict,
    #[serde(skip)]
    pub rendered: String,
    #[serde(skip)]
    pub exit_code: i32,
}

/// Runs every static check over a declaration file and consolidates the
/// relaxed conditions — range restriction, local confluence, ground
/// termination — into one verdict.
pub fn run_check(decl_text: &str, cfg: &RunConfig) -> Result<CheckOutput, DriverError> {
    if !looks_like_decls(decl_text) && !decl_text.trim().is_empty() {
        return Err(DriverError::Input(
            "check expects a declaration file (class/instance lines)".to_string(),
        ));
    }
    let decls = parse_decls(decl_text)?;
    let program = translate(&decls, cfg.fuse);
    let consistency = consistency_condition(&decls);
    let coverage = coverage_condition(&decls);
    let weak_coverage = weak_coverage_condition(&decls);
    let range_restriction = range_restricted_syntactic(&program);
    let local_confluence = local_confluence_check(&program, cfg.join_depth, cfg.join_width);
    let ground_termination = match &cfg.rank_spec {
        Some(spec) => rank_certificate(&program, spec),
        None => rank_certificate_auto(&program),
    };
    let superclass_rules = superclass_rules(&decls);

    let overall = if !range_restriction.pass
        || local_confluence.verdict == ConfluenceVerdict::NotLocallyConfluent
    {
        OverallVerdict::Unsafe
    } else if local_confluence.verdict == ConfluenceVerdict::Unknown
        || ground_termination.verdict == TerminationVerdict::Unknown
    {
        OverallVerdict::Unknown
    } else {
        OverallVerdict::Safe
    };
    let exit_code = match overall {
        OverallVerdict::Safe => EXIT_OK,
        OverallVerdict::Unknown => EXIT_UNKNOWN,
        OverallVerdict::Unsafe => EXIT_FALSE,
    };

    let mut out = CheckOutput {
        consistency,
        coverage,
        weak_coverage,
        range_restriction,
        local_confluence,
        ground_termination,
        superclass_rules,
        overall,
        rendered: String::new(),
        exit_code,
    };
    out.rendered = match cfg.format {
        OutputFormat::Text => render_check_text(&out),
        OutputFormat::Json => serde_json::to_string_pretty(&out).expect("report serializes"),
    };
    Ok(out)
}

fn render_condition(name: &str, rep: &ConditionReport, out: &mut Vec<String>) {
    out.push(format!(
        "{name}: {}",
        if rep.pass { "PASS" } else { "FAIL" }
    ));
    for item in rep.items.iter().filter(|i| !i.pass) {
        out.push(format!(
            "  {} [{}]: {}",
            item.subject, item.fundep, item.detail
        ));
    }
}

fn render_check_text(out: &CheckOutput) -> String {
    let mut lines = Vec::new();
    render_condition("consistency", &out.consistency, &mut lines);
    render_condition("coverage", &out.coverage, &mut lines);
    render_condition("weak coverage", &out.weak_coverage, &mut lines);
    lines.push(format!(
        "range restriction: {}",
        if out.range_restriction.pass {
            "PASS".to_string()
        } else {
            let bad: Vec<String> = out
                .range_restriction
                .rules
                .iter()
                .filter(|r| !r.pass)
                .map(|r| format!("{} (unresolved: {})", r.rule, r.undetermined.join(", ")))
                .collect();
            format!("FAIL on {}", bad.join("; "))
        }
    ));
    lines.push(format!(
        "local confluence: {} ({} critical pair{})",
        match out.local_confluence.verdict {
            ConfluenceVerdict::LocallyConfluent => "LOCALLY_CONFLUENT",
            ConfluenceVerdict::NotLocallyConfluent => "NOT_LOCALLY_CONFLUENT",
            ConfluenceVerdict::Unknown => "UNKNOWN",
        },
        out.local_confluence.pairs.len(),
        plural(out.local_confluence.pairs.len())
    ));
    for pair in out
        .local_confluence
        .pairs
        .iter()
        .filter(|p| !p.join.joined())
    {
        lines.push(format!(
            "  {} / {} on {}: not joined (left {} states, right {} states)",
            pair.pair.rule_left,
            pair.pair.rule_right,
            pair.pair
                .overlap
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(", "),
            pair.join.explored.left_states,
            pair.join.explored.right_states,
        ));
    }
    lines.push(format!(
        "ground termination: {}{}",
        match out.ground_termination.verdict {
            TerminationVerdict::GroundTerminating => "GROUND-TERMINATING".to_string(),
            TerminationVerdict::Unknown => "UNKNOWN".to_string(),
        },
        if out.ground_termination.verdict == TerminationVerdict::GroundTerminating {
            format!(" ({})", out.ground_termination.spec)
        } else {
            String::new()
        }
    ));
    for rule in out
        .ground_termination
        .rules
        .iter()
        .filter(|r| !r.certificate.certified())
    {
        lines.push(format!("  {}: not certifiable", rule.rule));
    }
    if !out.superclass_rules.is_empty() {
        lines.push(format!(
            "note: superclass contexts translate to user-constraint propagation rules: {}",
            out.superclass_rules.join(", ")
        ));
    }
    lines.push(format!(
        "overall: {}",
        match out.overall {
            OverallVerdict::Safe => "SAFE",
            OverallVerdict::Unsafe => "UNSAFE",
            OverallVerdict::Unknown => "UNKNOWN",
        }
    ));
    lines.join("\n")
}

pub struct ProjectOutput {
    pub clauses: String,
    pub summary: String,
}

/// Emits the Horn-clause projection for a CHR program or declaration
/// file.
pub fn run_project(input_text: &str, cfg: &RunConfig) -> Result<ProjectOutput, DriverError> {
    let loaded = load_program(input_text, cfg)?;
    let clauses = clp_projection(loaded.program())?;
    let count = clauses
        .lines()
        .filter(|l| !l.trim_start().starts_with('%') && !l.trim().is_empty())
        .count();
    Ok(ProjectOutput {
        clauses,
        summary: format!("{count} clause{}", plural(count)),
    })
}

/// JSON rendering of an arbitrary value, used by the binary for
/// `--format json` on commands without a dedicated report type.
pub fn to_json(value: impl Serialize) -> String {
    serde_json::to_string_pretty(&json!(value)).expect("value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const F_DECLS: &str =
        "class F a b | a -> b\ninstance F Int Bool\ninstance F a b => F [a] [b]\n";
    const COLL_DECLS: &str = "class Eq a\nclass Coll c e | c -> e\ninstance Eq a => Coll [a] a\n";
    const FC_UNSAFE: &str = "class F a b | a -> b\ninstance (F a c, F c b) => F [a] [b]\n";

    #[test]
    fn translate_counts_rules_per_declaration() {
        let out = run_translate(COLL_DECLS, &RunConfig::default()).unwrap();
        assert_eq!(out.program.rules().len(), 3);
        assert!(out.summary.contains("class Coll c e | c -> e: 1 rule"));
        assert!(out.summary.contains("instance Eq a => Coll [a] a: 2 rules"));
        assert!(out.summary.contains("total: 3 rules"));
    }

    #[test]
    fn translate_empty_file_succeeds() {
        let out = run_translate("", &RunConfig::default()).unwrap();
        assert_eq!(out.program.rules().len(), 0);
        assert!(out.summary.contains("total: 0 rules"));
    }

    #[test]
    fn translate_eq_declarations_yield_one_rule() {
        let out = run_translate(
            "class Eq a where (==) :: a -> a -> Bool\ninstance Eq a => Eq [a]\n",
            &RunConfig::default(),
        )
        .unwrap();
        assert_eq!(out.program.rules().len(), 1);
        assert!(out.summary.contains("total: 1 rule"));
    }

    #[test]
    fn infer_answers_f_goals() {
        let cfg = RunConfig::default();
        for (goal, want) in [
            ("F Int b", "answer: b = Bool"),
            ("F [Int] b", "answer: b = [Bool]"),
            ("F [[Int]] b", "answer: b = [[Bool]]"),
        ] {
            let out = run_infer(F_DECLS, goal, &cfg).unwrap();
            assert_eq!(out.rendered, want);
            assert_eq!(out.exit_code, EXIT_OK);
        }
    }

    #[test]
    fn infer_residual_answer() {
        let out = run_infer(F_DECLS, "F [a] [a]", &RunConfig::default()).unwrap();
        assert_eq!(out.rendered, "answer: F a a");
    }

    #[test]
    fn infer_reports_unknown_on_divergence() {
        let cfg = RunConfig {
            depth: 50,
            ..RunConfig::default()
        };
        let out = run_infer(F_DECLS, "F [a] a", &cfg).unwrap();
        assert_eq!(out.rendered, "unknown (depth bound 50 exceeded)");
        assert_eq!(out.exit_code, EXIT_UNKNOWN);
    }

    #[test]
    fn infer_reports_false() {
        let out = run_infer(F_DECLS, "F Int Int", &RunConfig::default()).unwrap();
        assert_eq!(out.rendered, "false");
        assert_eq!(out.exit_code, EXIT_FALSE);
    }

    #[test]
    fn infer_accepts_raw_chr_programs() {
        let chr = "eq_list @ Eq [a] <=> Eq a.\n";
        let out = run_infer(chr, "Eq [[Int]]", &RunConfig::default()).unwrap();
        assert_eq!(out.rendered, "answer: Eq Int");
    }

    #[test]
    fn infer_warns_on_inert_constraints() {
        let out = run_infer(F_DECLS, "G x", &RunConfig::default()).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("`G`"));
        assert_eq!(out.exit_code, EXIT_OK);
    }

    #[test]
    fn infer_probe_reports_pass() {
        let cfg = RunConfig {
            probe: Some(20),
            ..RunConfig::default()
        };
        let out = run_infer(F_DECLS, "F [Int] b", &cfg).unwrap();
        assert!(out.rendered.contains("uniqueness probe: PASS"));
        assert!(out.probe.unwrap().pass);
    }

    #[test]
    fn check_f_program_is_safe() {
        let out = run_check(F_DECLS, &RunConfig::default()).unwrap();
        assert!(out.consistency.pass);
        assert!(!out.coverage.pass);
        assert!(out.weak_coverage.pass);
        assert!(out.range_restriction.pass);
        assert_eq!(
            out.local_confluence.verdict,
            ConfluenceVerdict::LocallyConfluent
        );
        assert_eq!(
            out.ground_termination.verdict,
            TerminationVerdict::GroundTerminating
        );
        assert_eq!(out.overall, OverallVerdict::Safe);
        assert_eq!(out.exit_code, EXIT_OK);
    }

    #[test]
    fn check_unsafe_instance_fails_range_restriction() {
        let out = run_check(FC_UNSAFE, &RunConfig::default()).unwrap();
        assert!(!out.range_restriction.pass);
        assert_eq!(out.overall, OverallVerdict::Unsafe);
        assert_eq!(out.exit_code, EXIT_FALSE);
        assert!(out.rendered.contains("unresolved: c"));
    }

    #[test]
    fn check_coll_program_is_safe() {
        let out = run_check(COLL_DECLS, &RunConfig::default()).unwrap();
        assert!(out.consistency.pass);
        assert!(out.coverage.pass);
        assert!(out.weak_coverage.pass);
        assert_eq!(out.overall, OverallVerdict::Safe);
    }

    #[test]
    fn check_json_output_is_deterministic() {
        let cfg = RunConfig {
            format: OutputFormat::Json,
            ..RunConfig::default()
        };
        let a = run_check(F_DECLS, &cfg).unwrap().rendered;
        let b = run_check(F_DECLS, &cfg).unwrap().rendered;
        assert_eq!(a, b);
        assert!(a.starts_with('{'));
    }

    #[test]
    fn project_f_fixture_emits_two_clauses() {
        let out = run_project(F_DECLS, &RunConfig::default()).unwrap();
        assert_eq!(out.summary, "2 clauses");
        assert!(out.clauses.contains("f(int, bool).\n"));
        assert!(out.clauses.contains("f(list(A), list(B)) :- f(A, B).\n"));
    }

    #[test]
    fn superclass_contexts_are_flagged() {
        let decls = "class Eq a\nclass Eq a => Ord a\ninstance Eq Int\ninstance Ord Int\n";
        let out = run_check(decls, &RunConfig::default()).unwrap();
        assert_eq!(out.superclass_rules, vec!["Ord_class".to_string()]);
        assert_eq!(out.ground_termination.verdict, TerminationVerdict::Unknown);
        assert_eq!(out.overall, OverallVerdict::Unknown);
        assert_eq!(out.exit_code, EXIT_UNKNOWN);
    }
}
