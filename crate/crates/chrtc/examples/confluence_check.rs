//! Critical pairs and local confluence. Two one-rule changes apart, one
//! program is locally confluent and the other is not: with bodies
//! `False` and `x = [y], P y` the single critical pair rejoins at
//! `False`; flip the first body to `True` and it cannot rejoin.
//!
//! Run with: cargo run --example confluence_check

use chrtc::confluence::{critical_pairs, local_confluence_check, ConfluenceVerdict};
use chrtc::parse::parse_program;

fn main() {
    let programs = [
        (
            "p_false",
            "p1 @ P x <=> False.\np2 @ P x <=> x = [y], P y.\n",
        ),
        ("p_true", "p1 @ P x <=> True.\np2 @ P x <=> x = [y], P y.\n"),
        (
            "coll",
            "coll_fd @ Coll c e, Coll c d ==> e = d.\n\
             coll_imp @ Coll [c] e ==> e = c.\n\
             coll_inst @ Coll [a] a <=> Eq a.\n",
        ),
    ];
    for (name, text) in programs {
        let program = parse_program(text).expect("program parses");
        println!("=== {name} ===\n{program}");
        for cp in critical_pairs(&program) {
            println!(
                "critical pair [{} / {}] on {{{}}}:",
                cp.rule_left,
                cp.rule_right,
                cp.overlap
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            println!("  source: {}", cp.source);
            println!("  left:   {}", cp.left);
            println!("  right:  {}", cp.right);
        }
        let report = local_confluence_check(&program, 20, 500);
        let verdict = match report.verdict {
            ConfluenceVerdict::LocallyConfluent => "locally confluent",
            ConfluenceVerdict::NotLocallyConfluent => "NOT locally confluent",
            ConfluenceVerdict::Unknown => "unknown within budget",
        };
        println!("verdict: {verdict}\n");
    }
}
