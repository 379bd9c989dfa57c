//! Watch the derivation relation at work: a terminating goal, then the
//! classic diverging goal cut off by the depth bound.
//!
//! Run with: cargo run --example derivation_trace

use chrtc::engine::{derive_trace, Outcome, Strategy};
use chrtc::frontend::{parse_decls, translate};
use chrtc::parse::parse_goal;
use chrtc::state::State;

fn main() {
    let decls = parse_decls(
        "class F a b | a -> b\n\
         instance F Int Bool\n\
         instance F a b => F [a] [b]\n",
    )
    .expect("declarations parse");
    // the combined rule form gives the compact textbook derivations
    let program = translate(&decls, true);
    println!("rules:\n{program}");

    for (goal_text, bound) in [("F [Int] b", 50), ("F [a] [a]", 50), ("F [a] a", 8)] {
        let goal = State::goal(parse_goal(goal_text).expect("goal parses"));
        let (outcome, trace) = derive_trace(&program, &goal, bound, &Strategy::FirstMatch);
        println!("goal {goal_text}:");
        for (i, st) in trace.iter().enumerate() {
            println!("  step {i}: {st}");
        }
        match outcome {
            Outcome::FinalState { state, steps } => {
                println!("  final state after {steps} steps: {state}\n")
            }
            Outcome::DepthExceeded { steps, .. } => {
                println!("  still reducible after {steps} steps: unknown\n")
            }
            Outcome::FalseState { steps } => println!("  collapsed to False after {steps} steps\n"),
        }
    }
}
