//! Bit-exact goldens. Regenerate with `ZKAUDIT_BLESS=1 cargo test --test golden`.

mod common;

use std::fs;
use std::path::PathBuf;

use zkaudit::air::dump::dump_circuit;
use zkaudit::air::{CircuitBuilder, DEFAULT_COLS};
use zkaudit::fxp::FxpSpec;

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("ZKAUDIT_BLESS").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from its golden file");
}

#[test]
fn round_div_and_softmax_grid_dump() {
    let spec = FxpSpec::new(1000, 12, zkaudit::field::PrimeField::bn254()).unwrap();
    let mut b = CircuitBuilder::new(spec, DEFAULT_COLS).unwrap();
    b.round_div_raw(7, 2).unwrap();
    b.round_div_raw(1000, 3).unwrap();
    let xs = [b.input_i(-693).unwrap(), b.input_i(0).unwrap()];
    b.softmax(&xs).unwrap();
    let c = b.finish().unwrap();
    assert!(c.check().unwrap().is_empty());
    golden("softmax_grid.json", &dump_circuit(&c.grid, &c.cs));
}

#[test]
fn tiny_transcript() {
    let art = common::Tiny::new(12, 1).prove();
    golden("tiny.zka.json", &art.transcript.to_canonical_string());
}
