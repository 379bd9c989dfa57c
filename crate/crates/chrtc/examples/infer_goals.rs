//! Depth-bounded inference: feed constraint goals to a translated rule
//! set and read back bindings, residual constraints, `false`, or
//! `unknown` when the depth bound runs out.
//!
//! Run with: cargo run --example infer_goals

use chrtc::driver::{run_infer, RunConfig};

const F_DECLS: &str = "class F a b | a -> b\n\
                       instance F Int Bool\n\
                       instance F a b => F [a] [b]\n";

const ADD_DECLS: &str = "data Zero\ndata Succ n\n\
                         class Add a b c | a b -> c\n\
                         instance Add Zero b b\n\
                         instance Add a b c => Add (Succ a) b (Succ c)\n";

fn main() {
    let cfg = RunConfig {
        depth: 50,
        ..RunConfig::default()
    };
    let goals = [
        (F_DECLS, "F Int b"),
        (F_DECLS, "F [Int] b"),
        (F_DECLS, "F [[Int]] b"),
        (F_DECLS, "F [a] [a]"),
        (F_DECLS, "F Int Int"),
        (F_DECLS, "F [a] a"), // diverges: reported unknown
        (ADD_DECLS, "Add Zero Bool x"),
        (ADD_DECLS, "Add (Succ Zero) Zero c"),
        (ADD_DECLS, "Add (Succ Zero) (Succ Zero) c"),
    ];
    for (decls, goal) in goals {
        let out = run_infer(decls, goal, &cfg).expect("inference runs");
        println!("{goal:32} -> {}", out.rendered);
    }
}
