//! Canonical JSON dumps of grids and constraint systems for golden tests.
//! Keys are sorted, cells are listed column-major, field elements are
//! minimal lowercase hex and unassigned cells are `null`.

use serde_json::{json, Value};

use super::constraint::{Constraint, ConstraintSystem, TableKind};
use super::grid::Grid;

pub fn grid_json(grid: &Grid) -> Value {
    let f = grid.field();
    let columns: Vec<Value> = (0..grid.cols())
        .map(|c| {
            Value::Array(
                (0..grid.rows())
                    .map(|r| match grid.get_at(c, r) {
                        Some(v) => Value::String(f.to_hex(v)),
                        None => Value::Null,
                    })
                    .collect(),
            )
        })
        .collect();
    let selectors: Vec<Value> = grid
        .selectors()
        .iter()
        .map(|s| {
            let rows: Vec<usize> = s.active.iter().enumerate().filter(|(_, a)| **a).map(|(i, _)| i).collect();
            json!({ "name": s.name, "rows": rows })
        })
        .collect();
    json!({
        "field_modulus": f.modulus_hex(),
        "rows": grid.rows(),
        "cols": grid.cols(),
        "selectors": selectors,
        "columns": columns,
    })
}

pub fn constraints_json(cs: &ConstraintSystem, grid: &Grid) -> Value {
    let f = grid.field();
    let tables: Vec<Value> = cs
        .tables
        .iter()
        .map(|t| match &t.kind {
            TableKind::Explicit { arity, rows } => json!({
                "id": t.id, "name": t.name, "kind": "explicit", "arity": arity,
                "rows": rows.iter().map(|r| r.iter().map(|v| f.to_hex(*v)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }),
            TableKind::Range { bits } => json!({ "id": t.id, "name": t.name, "kind": "range", "bits": bits }),
            TableKind::Function { nl, scale, lo, hi } => json!({
                "id": t.id, "name": t.name, "kind": "function", "function": nl.name(),
                "scale": scale, "lo": lo, "hi": hi,
            }),
        })
        .collect();
    let constraints: Vec<Value> = cs
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| match c {
            Constraint::Equality { a, b } => json!({
                "id": i, "kind": "equality", "a": [a.col, a.row], "b": [b.col, b.row],
            }),
            Constraint::Gate { name, poly, selector } => json!({
                "id": i, "kind": "gate", "name": name, "selector": selector, "poly": poly.to_string(),
            }),
            Constraint::Lookup { name, inputs, table, selector } => json!({
                "id": i, "kind": "lookup", "name": name, "selector": selector, "table": table,
                "inputs": inputs.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            }),
        })
        .collect();
    json!({ "tables": tables, "constraints": constraints })
}

/// Pretty-printed canonical dump of a grid and its constraints.
pub fn dump_circuit(grid: &Grid, cs: &ConstraintSystem) -> String {
    let v = json!({ "grid": grid_json(grid), "constraint_system": constraints_json(cs, grid) });
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}
