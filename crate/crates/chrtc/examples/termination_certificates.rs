//! Ground-termination certificates and the Horn-clause projection.
//!
//! A linear rank measure with rank([x]) = 1 + rank(x) certifies that
//! every simplification strictly shrinks ground stores; the projection
//! hands the same question to off-the-shelf logic-programming
//! termination tools.
//!
//! Run with: cargo run --example termination_certificates

use chrtc::frontend::{parse_decls, translate};
use chrtc::termination::{clp_projection, rank_certificate, rank_certificate_auto, RankSpec};

fn main() {
    let decls = parse_decls(
        "class F a b | a -> b\n\
         instance F Int Bool\n\
         instance F a b => F [a] [b]\n",
    )
    .expect("declarations parse");
    let program = translate(&decls, false);
    println!("rules:\n{program}");

    let spec = RankSpec::parse("measure F 1; weight List 1").expect("spec parses");
    println!("certificate under `{spec}`:");
    let report = rank_certificate(&program, &spec);
    for rule in &report.rules {
        println!("  {:<16} {:?}", rule.rule, rule.certificate);
    }
    println!("verdict: {:?}", report.verdict);

    let auto = rank_certificate_auto(&program);
    println!(
        "\nauto-searched measure: `{}` -> {:?}",
        auto.spec, auto.verdict
    );

    println!("\nHorn-clause projection:");
    print!("{}", clp_projection(&program).expect("projection emits"));
}
