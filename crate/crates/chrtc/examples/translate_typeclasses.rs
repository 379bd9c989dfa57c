//! Translate class/instance declarations into CHR rules.
//!
//! Run with: cargo run --example translate_typeclasses

use chrtc::frontend::{parse_decls, translate};

fn main() {
    let sources = [
        (
            "Eq",
            "class Eq a where (==) :: a -> a -> Bool\n\
             instance Eq a => Eq [a]\n",
        ),
        (
            "Coll",
            "class Eq a\n\
             class Coll c e | c -> e\n\
             instance Eq a => Coll [a] a\n",
        ),
        (
            "F",
            "class F a b | a -> b\n\
             instance F Int Bool\n\
             instance F a b => F [a] [b]\n",
        ),
    ];
    for (name, text) in sources {
        let decls = parse_decls(text).expect("declarations parse");
        println!("=== {name} declarations ===");
        for line in text.lines() {
            println!("    {line}");
        }
        println!("--- rules ---");
        print!("{}", translate(&decls, false));
        println!("--- combined instance/improvement form ---");
        print!("{}", translate(&decls, true));
        println!();
    }
}
