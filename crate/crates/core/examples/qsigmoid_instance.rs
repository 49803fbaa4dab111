//! Print the coefficients of a quadratic-sigmoid instance as JSON, for
//! cross-checking with external solvers.
//!
//!     cargo run --example qsigmoid_instance -- 10 2 0 > instance.json

use goml::driver::bench::QuadraticSigmoid;

fn main() {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("arguments are n m seed"))
        .collect();
    let (n, m, seed) = match args[..] {
        [n, m, seed] => (n as usize, m as usize, seed),
        [] => (10, 2, 0),
        _ => panic!("usage: qsigmoid_instance [n m seed]"),
    };
    let inst = QuadraticSigmoid::generate(n, m, seed);
    println!("{}", serde_json::to_string_pretty(&inst).expect("instance serializes"));
}
