//! Quantization, rounded division and rescaled products.
//!
//!     cargo run --example fixed_point

use zkaudit::fxp::{floor_div, round_div, FxpSpec};

fn main() -> anyhow::Result<()> {
    let spec = FxpSpec::recommender();
    println!("scale factor {} with {} range bits", spec.scale_factor, spec.range_bits);

    for x in [1.0, -0.5, 0.3, std::f64::consts::PI] {
        let raw = spec.quantize_raw(x)?;
        println!("{x:>10.6} -> raw {raw:>6} -> {:.6}", spec.dequantize(raw));
    }

    // Rounding versus truncation on the same quotients.
    println!("\n  a  c  floor  round");
    for (a, c) in [(7, 2), (5, 3), (-7, 2), (1000, 3)] {
        println!("{a:>4} {c:>2} {:>6} {:>6}", floor_div(a, c)?, round_div(a, c)?);
    }

    // One rounding per product.
    let toy = FxpSpec::new(1000, 12, zkaudit::field::PrimeField::bn254())?;
    let p = toy.mul_rescale_raw(333, 333)?;
    println!("\n0.333 * 0.333 at SF 1000 = raw {p} ({})", toy.dequantize(p));

    // Out-of-range values are errors, never silent wraparound.
    match spec.quantize_raw(1e6) {
        Ok(r) => println!("unexpected: {r}"),
        Err(e) => println!("1e6 does not fit: {e}"),
    }
    Ok(())
}
