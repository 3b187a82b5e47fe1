use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::grid::{Cell, Grid, SelectorId};
use crate::field::{Fe, PrimeField};

pub type TableId = usize;

/// Elementwise functions realized as (input, output) lookup relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonLinearity {
    /// `clamp(x, 0, 6·SF)`.
    Relu6,
    /// `1` on `(0, 6·SF)`, `0` elsewhere.
    Relu6Grad,
    /// `round(SF · exp(x / SF))` on non-positive inputs.
    Exp,
}

impl NonLinearity {
    pub fn name(&self) -> &'static str {
        match self {
            NonLinearity::Relu6 => "relu6",
            NonLinearity::Relu6Grad => "relu6_grad",
            NonLinearity::Exp => "exp",
        }
    }

    /// Integer semantics at scale factor `sf`.
    pub fn eval(&self, x: i64, sf: i64) -> i64 {
        match self {
            NonLinearity::Relu6 => x.clamp(0, 6 * sf),
            NonLinearity::Relu6Grad => i64::from(x > 0 && x < 6 * sf),
            NonLinearity::Exp => exp_fixed(x, sf),
        }
    }
}

/// `round(sf · e^(x/sf))`, computed with `libm` so every platform agrees.
pub fn exp_fixed(x: i64, sf: i64) -> i64 {
    let v = sf as f64 * libm::exp(x as f64 / sf as f64);
    libm::round(v) as i64
}

/// Smallest raw input kept by the exp table: `-ceil(SF · ln(2·SF))`.
/// Below it the rounded value is zero.
pub fn exp_table_floor(sf: i64) -> i64 {
    -(libm::ceil(sf as f64 * libm::log(2.0 * sf as f64)) as i64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TableKind {
    /// Literal tuple set; occupies `rows.len()` grid rows.
    Explicit { arity: usize, rows: Vec<Vec<Fe>> },
    /// `{0, …, 2^bits − 1}`, checked arithmetically.
    Range { bits: u32 },
    /// `{(x, f(x)) : lo ≤ x ≤ hi}` for a fixed nonlinearity.
    Function { nl: NonLinearity, scale: i64, lo: i64, hi: i64 },
}

#[derive(Clone, Debug)]
pub struct LookupTable {
    pub id: TableId,
    pub name: String,
    pub kind: TableKind,
    members: Option<HashSet<Vec<Fe>>>,
}

impl LookupTable {
    pub fn new(id: TableId, name: &str, kind: TableKind) -> Self {
        let members = match &kind {
            TableKind::Explicit { rows, .. } => Some(rows.iter().cloned().collect()),
            _ => None,
        };
        Self { id, name: name.to_string(), kind, members }
    }

    pub fn arity(&self) -> usize {
        match &self.kind {
            TableKind::Explicit { arity, .. } => *arity,
            TableKind::Range { .. } => 1,
            TableKind::Function { .. } => 2,
        }
    }

    /// Grid rows the table occupies. Range and function tables are checked
    /// arithmetically and take no rows.
    pub fn reserved_rows(&self) -> usize {
        match &self.kind {
            TableKind::Explicit { rows, .. } => rows.len(),
            _ => 0,
        }
    }

    pub fn contains(&self, field: &PrimeField, tuple: &[Fe]) -> bool {
        if tuple.len() != self.arity() {
            return false;
        }
        match &self.kind {
            TableKind::Explicit { .. } => self.members.as_ref().is_some_and(|m| m.contains(tuple)),
            TableKind::Range { bits } => field.in_range(tuple[0], *bits),
            TableKind::Function { nl, scale, lo, hi } => {
                let Some(x) = field.to_i128(tuple[0]) else { return false };
                if x < *lo as i128 || x > *hi as i128 {
                    return false;
                }
                field.from_i64(nl.eval(x as i64, *scale)) == tuple[1]
            }
        }
    }

    fn encode(&self, field: &PrimeField, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.name.len() as u64).to_le_bytes());
        out.extend_from_slice(self.name.as_bytes());
        match &self.kind {
            TableKind::Explicit { arity, rows } => {
                out.push(0);
                out.extend_from_slice(&(*arity as u64).to_le_bytes());
                out.extend_from_slice(&(rows.len() as u64).to_le_bytes());
                for r in rows {
                    for v in r {
                        out.extend_from_slice(&field.to_le_bytes(*v));
                    }
                }
            }
            TableKind::Range { bits } => {
                out.push(1);
                out.extend_from_slice(&bits.to_le_bytes());
            }
            TableKind::Function { nl, scale, lo, hi } => {
                out.push(2);
                out.extend_from_slice(nl.name().as_bytes());
                out.extend_from_slice(&scale.to_le_bytes());
                out.extend_from_slice(&lo.to_le_bytes());
                out.extend_from_slice(&hi.to_le_bytes());
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum Constraint {
    Equality { a: Cell, b: Cell },
    /// On every row where `selector` is on, the tuple of `inputs` evaluated
    /// on that row must be a member of `table`.
    Lookup { name: String, inputs: Vec<Expr>, table: TableId, selector: SelectorId },
    /// On every row where `selector` is on, `poly` must evaluate to zero.
    Gate { name: String, poly: Expr, selector: SelectorId },
}

impl Constraint {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            Constraint::Equality { a, b } => {
                out.push(0);
                for c in [a, b] {
                    out.extend_from_slice(&(c.col as u64).to_le_bytes());
                    out.extend_from_slice(&(c.row as u64).to_le_bytes());
                }
            }
            Constraint::Lookup { name, inputs, table, selector } => {
                out.push(1);
                out.extend_from_slice(&(name.len() as u64).to_le_bytes());
                out.extend_from_slice(name.as_bytes());
                out.extend_from_slice(&(*table as u64).to_le_bytes());
                out.extend_from_slice(&(*selector as u64).to_le_bytes());
                out.extend_from_slice(&(inputs.len() as u64).to_le_bytes());
                for e in inputs {
                    e.encode(out);
                }
            }
            Constraint::Gate { name, poly, selector } => {
                out.push(2);
                out.extend_from_slice(&(name.len() as u64).to_le_bytes());
                out.extend_from_slice(name.as_bytes());
                out.extend_from_slice(&(*selector as u64).to_le_bytes());
                poly.encode(out);
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConstraintSystem {
    pub constraints: Vec<Constraint>,
    pub tables: Vec<LookupTable>,
}

impl ConstraintSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_table(&mut self, name: &str, kind: TableKind) -> TableId {
        let id = self.tables.len();
        self.tables.push(LookupTable::new(id, name, kind));
        id
    }

    pub fn push(&mut self, c: Constraint) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn reserved_rows(&self) -> usize {
        self.tables.iter().map(|t| t.reserved_rows()).sum()
    }

    pub fn encode(&self, field: &PrimeField, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.tables.len() as u64).to_le_bytes());
        for t in &self.tables {
            t.encode(field, out);
        }
        out.extend_from_slice(&(self.constraints.len() as u64).to_le_bytes());
        for c in &self.constraints {
            c.encode(out);
        }
    }
}

/// A grid together with the constraints it must satisfy.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub grid: Grid,
    pub cs: ConstraintSystem,
}

impl Circuit {
    /// Everything except the witness values: grid shape, selectors,
    /// constraints and tables.
    pub fn structure_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.grid.write_layout(&mut out);
        self.cs.encode(self.grid.field(), &mut out);
        out
    }

    pub fn write_witness(&self, sink: &mut dyn FnMut(&[u8])) {
        self.grid.write_cells(sink)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_table_floor_rounds_to_zero() {
        for sf in [1000i64, 1 << 8, 1 << 13, 1 << 15] {
            let lo = exp_table_floor(sf);
            assert_eq!(exp_fixed(lo, sf), 0, "sf={sf}");
            assert_eq!(exp_fixed(0, sf), sf);
        }
        assert_eq!(exp_fixed(-693, 1000), 500);
    }

    #[test]
    fn relu6_semantics() {
        assert_eq!(NonLinearity::Relu6.eval(-5, 1), 0);
        assert_eq!(NonLinearity::Relu6.eval(3, 1), 3);
        assert_eq!(NonLinearity::Relu6.eval(9, 1), 6);
        assert_eq!(NonLinearity::Relu6Grad.eval(0, 4), 0);
        assert_eq!(NonLinearity::Relu6Grad.eval(1, 4), 1);
        assert_eq!(NonLinearity::Relu6Grad.eval(24, 4), 0);
    }

    #[test]
    fn table_membership() {
        let f = PrimeField::bn254();
        let r = LookupTable::new(0, "r4", TableKind::Range { bits: 4 });
        assert!(r.contains(&f, &[f.from_i64(15)]));
        assert!(!r.contains(&f, &[f.from_i64(16)]));
        assert!(!r.contains(&f, &[f.from_i64(-1)]));
        let t = LookupTable::new(1, "relu", TableKind::Function { nl: NonLinearity::Relu6, scale: 1, lo: -8, hi: 8 });
        assert!(t.contains(&f, &[f.from_i64(-5), f.zero()]));
        assert!(!t.contains(&f, &[f.from_i64(9), f.from_i64(6)]));
        assert!(!t.contains(&f, &[f.from_i64(3), f.from_i64(2)]));
        let e = LookupTable::new(
            2,
            "xor",
            TableKind::Explicit { arity: 2, rows: vec![vec![f.zero(), f.one()], vec![f.one(), f.zero()]] },
        );
        assert!(e.contains(&f, &[f.one(), f.zero()]));
        assert!(!e.contains(&f, &[f.one(), f.one()]));
        assert_eq!(e.reserved_rows(), 2);
    }
}
