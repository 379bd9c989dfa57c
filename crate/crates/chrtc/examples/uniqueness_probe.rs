//! Uniqueness of answers: when the rule set is range-restricted,
//! ground-terminating and locally confluent, every derivation that
//! terminates on a goal terminates in the same state, regardless of rule
//! application order. Here many random strategies race on each goal and
//! their answers are compared.
//!
//! Run with: cargo run --example uniqueness_probe

use chrtc::confluence::uniqueness_probe;
use chrtc::frontend::{parse_decls, translate};
use chrtc::parse::parse_goal;
use chrtc::state::State;

fn main() {
    let decls = parse_decls(
        "class Eq a\n\
         class Coll c e | c -> e\n\
         instance Eq a => Coll [a] a\n\
         class F a b | a -> b\n\
         instance F Int Bool\n\
         instance F a b => F [a] [b]\n",
    )
    .expect("declarations parse");
    let program = translate(&decls, false);

    for goal_text in [
        "F [Int] b",
        "F [[Int]] b",
        "Coll [Int] e",
        "Coll [Bool] e, Coll c e",
        "F [a] [a], F Int b",
    ] {
        let goal = State::goal(parse_goal(goal_text).expect("goal parses"));
        let report = uniqueness_probe(&program, &goal, 100, 1000, 0);
        print!(
            "{goal_text:28} -> {} ({} runs, {} answered)",
            if report.pass { "unique" } else { "AMBIGUOUS" },
            report.trials,
            report.answered,
        );
        match report.answer {
            Some(answer) => println!("; answer: {answer}"),
            None => println!(),
        }
    }
}
