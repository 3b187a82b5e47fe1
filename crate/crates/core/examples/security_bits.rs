//! Soundness left after a union bound over every dataset commitment and
//! step proof, for growing training runs.
//!
//!     cargo run --example security_bits

use zkaudit::protocol::security_bits;

fn main() {
    let lambda = 128.0;
    println!("{:>12} {:>12} {:>8} {:>6}", "dataset", "steps", "bits", "lost");
    for (d, t) in [(16u64, 4u64), (1_000, 500), (1_000_000, 100_000), (1_000_000, 5_000_000), (100_000_000, 50_000_000)] {
        let bits = security_bits(lambda, d, t);
        println!("{d:>12} {t:>12} {bits:>8.2} {:>6.2}", lambda - bits);
    }
}
