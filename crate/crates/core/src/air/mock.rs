use std::fmt;

use rayon::prelude::*;

use super::constraint::{Circuit, Constraint, ConstraintSystem};
use super::grid::{Cell, Grid};
use super::AirError;
use crate::field::Fe;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// Gate polynomial evaluated to this nonzero value.
    Residual(Fe),
    /// Lookup tuple not present in the table.
    MissingTuple(Vec<Fe>),
    /// Equality-constrained cells hold different values.
    NotEqual { left: Fe, right: Fe },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub constraint: usize,
    pub row: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "all constraints satisfied");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in self.violations.iter().take(20) {
            writeln!(f, "  constraint {} row {}: {:?}", v.constraint, v.row, v.kind)?;
        }
        Ok(())
    }
}

const ROW_CHUNK: usize = 2048;

/// Checks every constraint against the witness. Rows whose selector is off
/// are skipped entirely.
pub fn check_constraints(grid: &Grid, cs: &ConstraintSystem) -> Result<ViolationReport, AirError> {
    let field = *grid.field();
    for c in &cs.constraints {
        if let Constraint::Lookup { table, .. } = c {
            if *table >= cs.tables.len() {
                return Err(AirError::UnknownTable(*table));
            }
        }
    }

    // (constraint, row range) work items so a gate active on many rows is split.
    let mut items = Vec::new();
    for (i, c) in cs.constraints.iter().enumerate() {
        match c {
            Constraint::Equality { .. } => items.push((i, 0, 1)),
            _ => {
                let mut start = 0;
                while start < grid.rows() {
                    items.push((i, start, (start + ROW_CHUNK).min(grid.rows())));
                    start += ROW_CHUNK;
                }
            }
        }
    }

    let compiled: Vec<_> = cs
        .constraints
        .iter()
        .map(|c| match c {
            Constraint::Gate { poly, .. } => vec![poly.compile(&field)],
            Constraint::Lookup { inputs, .. } => inputs.iter().map(|e| e.compile(&field)).collect(),
            Constraint::Equality { .. } => Vec::new(),
        })
        .collect();

    let results: Vec<Result<Vec<Violation>, AirError>> = items
        .par_iter()
        .map(|&(i, lo, hi)| {
            let mut out = Vec::new();
            let mut stack = Vec::new();
            let missing = |cell: Cell| AirError::UnassignedCell { constraint: i, col: cell.col, row: cell.row };
            match &cs.constraints[i] {
                Constraint::Equality { a, b } => {
                    let left = grid.get(*a).ok_or_else(|| missing(*a))?;
                    let right = grid.get(*b).ok_or_else(|| missing(*b))?;
                    if left != right {
                        out.push(Violation { constraint: i, row: a.row, kind: ViolationKind::NotEqual { left, right } });
                    }
                }
                Constraint::Gate { selector, .. } => {
                    let poly = &compiled[i][0];
                    for row in lo..hi {
                        if !grid.is_active(*selector, row) {
                            continue;
                        }
                        let v = poly
                            .eval(&field, &mut stack, |col| grid.get(Cell::new(col, row)))
                            .map_err(|col| missing(Cell::new(col, row)))?;
                        if v != field.zero() {
                            out.push(Violation { constraint: i, row, kind: ViolationKind::Residual(v) });
                        }
                    }
                }
                Constraint::Lookup { table, selector, .. } => {
                    let table = &cs.tables[*table];
                    let mut tuple = Vec::with_capacity(compiled[i].len());
                    for row in lo..hi {
                        if !grid.is_active(*selector, row) {
                            continue;
                        }
                        tuple.clear();
                        for e in &compiled[i] {
                            let v = e
                                .eval(&field, &mut stack, |col| grid.get(Cell::new(col, row)))
                                .map_err(|col| missing(Cell::new(col, row)))?;
                            tuple.push(v);
                        }
                        if !table.contains(&field, &tuple) {
                            out.push(Violation { constraint: i, row, kind: ViolationKind::MissingTuple(tuple.clone()) });
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect();

    let mut violations = Vec::new();
    for r in results {
        violations.extend(r?);
    }
    violations.sort_by_key(|v| (v.constraint, v.row));
    Ok(ViolationReport { violations })
}

impl Circuit {
    pub fn check(&self) -> Result<ViolationReport, AirError> {
        check_constraints(&self.grid, &self.cs)
    }
}
