//! Builds a small constraint grid from the division, max and softmax
//! gadgets, checks it with the mock checker, then breaks one cell.
//!
//!     cargo run --example gadgets

use zkaudit::air::{CircuitBuilder, ViolationKind, DEFAULT_COLS};
use zkaudit::field::PrimeField;
use zkaudit::fxp::FxpSpec;

fn main() -> anyhow::Result<()> {
    let spec = FxpSpec::new(1000, 12, PrimeField::bn254())?;
    let mut b = CircuitBuilder::new(spec, DEFAULT_COLS)?;

    let (q, _) = b.round_div_raw(7, 2)?;
    println!("round(7 / 2) = {}", b.value_i(q));

    let x = b.input_i(-693)?; // ln(1/2) at SF 1000
    let y = b.input_i(0)?;
    let m = b.max(x, y)?;
    println!("max(-693, 0) = {}", b.value_i(m));

    let sm = b.softmax(&[x, y])?;
    let exps: Vec<i128> = sm.exps.iter().map(|&c| b.value_i(c)).collect();
    let outs: Vec<i128> = sm.outputs.iter().map(|&c| b.value_i(c)).collect();
    println!("softmax: exps {exps:?}, sum {}, outputs {outs:?}", b.value_i(sm.sum));

    let mut circuit = b.finish()?;
    println!(
        "\ngrid {} rows x {} cols, {} constraints",
        circuit.grid.rows(),
        circuit.grid.cols(),
        circuit.cs.constraints.len()
    );
    println!("honest witness: {} violations", circuit.check()?.violations.len());

    // Claim round(7 / 2) = 3 instead of 4.
    circuit.grid.assign_i64(q, 3)?;
    let report = circuit.check()?;
    println!("after setting the quotient to 3: {} violations", report.violations.len());
    for v in report.violations.iter().take(3) {
        let kind = match &v.kind {
            ViolationKind::Residual(_) => "gate residual",
            ViolationKind::MissingTuple(_) => "lookup miss",
            ViolationKind::NotEqual { .. } => "copy mismatch",
        };
        println!("  constraint {} at row {}: {kind}", v.constraint, v.row);
    }
    Ok(())
}
