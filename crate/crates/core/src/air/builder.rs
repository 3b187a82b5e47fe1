use std::collections::HashMap;

use super::constraint::{Circuit, Constraint, ConstraintSystem, NonLinearity, TableId, TableKind};
use super::expr::Expr;
use super::grid::{Cell, Grid, Selector, SelectorId};
use super::AirError;
use crate::field::{Fe, PrimeField};
use crate::fxp::FxpSpec;

#[derive(Clone, Copy, Debug)]
struct PackCursor {
    row: usize,
    next: usize,
    slots: usize,
}

#[derive(Clone, Debug)]
struct Family {
    selector: SelectorId,
    width: usize,
    pad: Vec<Fe>,
}

/// Incrementally lays out gadgets on a grid with a fixed column count.
///
/// Gadget families (one selector each) register their constraints the first
/// time they are used; later instances only enable the selector on their row.
/// Packed families place several instances side by side in one row.
pub struct CircuitBuilder {
    spec: FxpSpec,
    field: PrimeField,
    cols: usize,
    capacity: Option<usize>,
    columns: Vec<Vec<Option<Fe>>>,
    selectors: Vec<Selector>,
    families: HashMap<String, Family>,
    tables: HashMap<String, TableId>,
    cursors: HashMap<String, PackCursor>,
    consts: HashMap<i128, Cell>,
    cs: ConstraintSystem,
    next_row: usize,
}

impl CircuitBuilder {
    pub fn new(spec: FxpSpec, cols: usize) -> Result<Self, AirError> {
        if cols < 4 {
            return Err(AirError::WidthExceeded { needed: 4, cols });
        }
        Ok(Self {
            field: spec.field_modulus,
            spec,
            cols,
            capacity: None,
            columns: vec![Vec::new(); cols],
            selectors: Vec::new(),
            families: HashMap::new(),
            tables: HashMap::new(),
            cursors: HashMap::new(),
            consts: HashMap::new(),
            cs: ConstraintSystem::new(),
            next_row: 0,
        })
    }

    /// Builder whose grid has exactly `rows` rows (a power of two).
    pub fn with_capacity(spec: FxpSpec, cols: usize, rows: usize) -> Result<Self, AirError> {
        if rows == 0 || !rows.is_power_of_two() {
            return Err(AirError::InvalidGrid(format!("row count {rows} is not a power of two")));
        }
        let mut b = Self::new(spec, cols)?;
        b.capacity = Some(rows);
        Ok(b)
    }

    pub fn spec(&self) -> &FxpSpec {
        &self.spec
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn rows_used(&self) -> usize {
        self.next_row
    }

    pub fn constraint_system(&self) -> &ConstraintSystem {
        &self.cs
    }

    pub fn alloc_row(&mut self) -> Result<usize, AirError> {
        self.alloc_rows(1)
    }

    /// Allocates `n` consecutive rows and returns the first.
    pub fn alloc_rows(&mut self, n: usize) -> Result<usize, AirError> {
        let start = self.next_row;
        let end = start + n;
        if let Some(cap) = self.capacity {
            if end > cap {
                return Err(AirError::CapacityExceeded { needed: end, available: cap });
            }
        }
        for col in &mut self.columns {
            col.resize(end, None);
        }
        for s in &mut self.selectors {
            s.active.resize(end, false);
        }
        self.next_row = end;
        Ok(start)
    }

    pub fn set(&mut self, cell: Cell, v: Fe) {
        self.columns[cell.col][cell.row] = Some(v);
    }

    pub fn set_i(&mut self, cell: Cell, v: i128) {
        let fe = self.field.from_i128(v);
        self.set(cell, fe);
    }

    pub fn value(&self, cell: Cell) -> Fe {
        self.columns[cell.col][cell.row].expect("gadget inputs are assigned")
    }

    /// Signed integer reading of an assigned cell.
    pub fn value_i(&self, cell: Cell) -> i128 {
        self.field.to_i128(self.value(cell)).expect("cell value fits in i128")
    }

    pub fn enable(&mut self, selector: SelectorId, row: usize) {
        self.selectors[selector].active[row] = true;
    }

    pub fn copy(&mut self, a: Cell, b: Cell) {
        self.cs.push(Constraint::Equality { a, b });
    }

    pub fn gate(&mut self, name: &str, poly: Expr, selector: SelectorId) {
        self.cs.push(Constraint::Gate { name: name.to_string(), poly, selector });
    }

    pub fn lookup(&mut self, name: &str, inputs: Vec<Expr>, table: TableId, selector: SelectorId) {
        self.cs.push(Constraint::Lookup { name: name.to_string(), inputs, table, selector });
    }

    fn new_selector(&mut self, name: &str) -> SelectorId {
        self.selectors.push(Selector { name: name.to_string(), active: vec![false; self.next_row] });
        self.selectors.len() - 1
    }

    /// Selector of an unpacked family, registering its constraints via
    /// `define` on first use.
    pub fn family<F>(&mut self, name: &str, define: F) -> SelectorId
    where
        F: FnOnce(&mut Self, SelectorId),
    {
        if let Some(f) = self.families.get(name) {
            return f.selector;
        }
        let sel = self.new_selector(name);
        self.families.insert(name.to_string(), Family { selector: sel, width: self.cols, pad: Vec::new() });
        define(self, sel);
        sel
    }

    /// Reserves a slot of `pad.len()` columns in a packed family's current
    /// row, opening a new row (pre-filled with `pad` in every slot) when the
    /// current one is full or `fresh` is set. `define(b, sel, base)` registers
    /// one slot's constraints at column offset `base`.
    pub fn packed_slot<F>(&mut self, name: &str, pad: &[Fe], fresh: bool, define: F) -> Result<Cell, AirError>
    where
        F: Fn(&mut Self, SelectorId, usize),
    {
        let width = pad.len();
        if width == 0 || width > self.cols {
            return Err(AirError::WidthExceeded { needed: width, cols: self.cols });
        }
        let slots = self.cols / width;
        if !self.families.contains_key(name) {
            let sel = self.new_selector(name);
            self.families.insert(name.to_string(), Family { selector: sel, width, pad: pad.to_vec() });
            for s in 0..slots {
                define(self, sel, s * width);
            }
        }
        let fam = self.families[name].clone();
        debug_assert_eq!(fam.width, width);
        let reuse = match self.cursors.get(name) {
            Some(c) if !fresh && c.next < c.slots => Some(*c),
            _ => None,
        };
        let cursor = match reuse {
            Some(c) => c,
            None => {
                let row = self.alloc_row()?;
                self.enable(fam.selector, row);
                for s in 0..slots {
                    for (j, v) in fam.pad.iter().enumerate() {
                        self.set(Cell::new(s * width + j, row), *v);
                    }
                }
                PackCursor { row, next: 0, slots }
            }
        };
        let base = cursor.next * width;
        self.cursors.insert(name.to_string(), PackCursor { next: cursor.next + 1, ..cursor });
        Ok(Cell::new(base, cursor.row))
    }

    /// Table of all values in `[0, 2^bits)`.
    pub fn range_table(&mut self, bits: u32) -> TableId {
        let name = format!("range_{bits}");
        if let Some(&id) = self.tables.get(&name) {
            return id;
        }
        let id = self.cs.add_table(&name, TableKind::Range { bits });
        self.tables.insert(name, id);
        id
    }

    /// `(x, f(x))` table over the nonlinearity's domain at this spec's scale.
    pub fn function_table(&mut self, nl: NonLinearity) -> TableId {
        let name = nl.name().to_string();
        if let Some(&id) = self.tables.get(&name) {
            return id;
        }
        let sf = self.spec.sf();
        let (lo, hi) = super::gadgets::nonlin_domain(nl, sf, self.spec.range_bits);
        let id = self.cs.add_table(&name, TableKind::Function { nl, scale: sf, lo, hi });
        self.tables.insert(name, id);
        id
    }

    /// Literal table; its rows are reserved at the current end of the grid.
    pub fn explicit_table(&mut self, name: &str, arity: usize, rows: Vec<Vec<Fe>>) -> Result<TableId, AirError> {
        if let Some(&id) = self.tables.get(name) {
            return Ok(id);
        }
        if rows.iter().any(|r| r.len() != arity) {
            return Err(AirError::ShapeMismatch(format!("table {name} rows must have arity {arity}")));
        }
        let mut seen = std::collections::HashSet::new();
        if !rows.iter().all(|r| seen.insert(r.clone())) {
            return Err(AirError::InvalidGrid(format!("table {name} has duplicate rows")));
        }
        self.alloc_rows(rows.len())?;
        let id = self.cs.add_table(name, TableKind::Explicit { arity, rows });
        self.tables.insert(name.to_string(), id);
        Ok(id)
    }

    /// Cell fixed to the constant `k` by a gate; one per distinct value.
    pub fn constant(&mut self, k: i128) -> Result<Cell, AirError> {
        if let Some(&c) = self.consts.get(&k) {
            return Ok(c);
        }
        let name = format!("const[{k}]");
        let fe = self.field.from_i128(k);
        let cell = self.packed_slot(&name, &[fe], false, |b, sel, base| {
            b.gate(&format!("const[{k}]"), Expr::col(base) - Expr::constant(k), sel);
        })?;
        self.consts.insert(k, cell);
        Ok(cell)
    }

    /// Free witness cell (no constraint of its own).
    pub fn input(&mut self, v: Fe) -> Result<Cell, AirError> {
        let zero = self.field.zero();
        let cell = self.packed_slot("input", &[zero], false, |_, _, _| {})?;
        self.set(cell, v);
        Ok(cell)
    }

    pub fn input_i(&mut self, v: i128) -> Result<Cell, AirError> {
        let fe = self.field.from_i128(v);
        self.input(fe)
    }

    pub fn finish(self) -> Result<Circuit, AirError> {
        let rows = match self.capacity {
            Some(cap) => cap,
            None => self.next_row.max(1).next_power_of_two(),
        };
        if self.next_row > rows {
            return Err(AirError::CapacityExceeded { needed: self.next_row, available: rows });
        }
        let grid = Grid::from_columns(self.field, rows, self.columns, self.selectors)?;
        Ok(Circuit { grid, cs: self.cs })
    }
}
