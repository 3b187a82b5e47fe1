use serde::Serialize;

use super::AirError;
use crate::field::{Fe, PrimeField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

pub type SelectorId = usize;

/// Named 0/1 column that switches gates on for chosen rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selector {
    pub name: String,
    pub active: Vec<bool>,
}

/// Rectangular `R x C` array of optionally-assigned field elements,
/// stored column-major, plus the selector columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    field: PrimeField,
    rows: usize,
    cols: usize,
    cells: Vec<Option<Fe>>,
    selectors: Vec<Selector>,
}

impl Grid {
    pub fn new(field: PrimeField, rows: usize, cols: usize) -> Result<Self, AirError> {
        if rows == 0 || !rows.is_power_of_two() {
            return Err(AirError::InvalidGrid(format!("row count {rows} is not a power of two")));
        }
        if cols == 0 {
            return Err(AirError::InvalidGrid("grid needs at least one column".into()));
        }
        Ok(Self { field, rows, cols, cells: vec![None; rows * cols], selectors: Vec::new() })
    }

    pub(crate) fn from_columns(
        field: PrimeField,
        rows: usize,
        columns: Vec<Vec<Option<Fe>>>,
        selectors: Vec<Selector>,
    ) -> Result<Self, AirError> {
        let cols = columns.len();
        let mut grid = Self::new(field, rows, cols)?;
        for (c, mut column) in columns.into_iter().enumerate() {
            if column.len() > rows {
                return Err(AirError::InvalidGrid(format!("column {c} has {} rows > {rows}", column.len())));
            }
            column.resize(rows, None);
            grid.cells[c * rows..(c + 1) * rows].copy_from_slice(&column);
        }
        for mut s in selectors {
            s.active.resize(rows, false);
            grid.selectors.push(s);
        }
        Ok(grid)
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn selectors(&self) -> &[Selector] {
        &self.selectors
    }

    pub fn add_selector(&mut self, name: &str) -> SelectorId {
        self.selectors.push(Selector { name: name.to_string(), active: vec![false; self.rows] });
        self.selectors.len() - 1
    }

    pub fn enable(&mut self, selector: SelectorId, row: usize) {
        self.selectors[selector].active[row] = true;
    }

    pub fn is_active(&self, selector: SelectorId, row: usize) -> bool {
        self.selectors[selector].active[row]
    }

    #[inline]
    pub fn get(&self, cell: Cell) -> Option<Fe> {
        if cell.col >= self.cols || cell.row >= self.rows {
            return None;
        }
        self.cells[cell.col * self.rows + cell.row]
    }

    #[inline]
    pub fn get_at(&self, col: usize, row: usize) -> Option<Fe> {
        self.cells[col * self.rows + row]
    }

    pub fn assign(&mut self, cell: Cell, value: Fe) -> Result<(), AirError> {
        if cell.col >= self.cols || cell.row >= self.rows {
            return Err(AirError::InvalidGrid(format!("cell {cell:?} outside {}x{}", self.rows, self.cols)));
        }
        self.cells[cell.col * self.rows + cell.row] = Some(value);
        Ok(())
    }

    pub fn assign_i64(&mut self, cell: Cell, value: i64) -> Result<(), AirError> {
        let v = self.field.from_i64(value);
        self.assign(cell, v)
    }

    pub fn clear(&mut self, cell: Cell) {
        if cell.col < self.cols && cell.row < self.rows {
            self.cells[cell.col * self.rows + cell.row] = None;
        }
    }

    /// Signed integer reading of an assigned cell.
    pub fn value_i128(&self, cell: Cell) -> Option<i128> {
        self.get(cell).and_then(|v| self.field.to_i128(v))
    }

    pub fn assigned_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Column-major iteration over every cell slot.
    pub fn cells(&self) -> impl Iterator<Item = (Cell, Option<Fe>)> + '_ {
        let rows = self.rows;
        self.cells.iter().enumerate().map(move |(i, v)| (Cell::new(i / rows, i % rows), *v))
    }

    /// Writes the shape and selector layout (everything except cell values).
    pub fn write_layout(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.field.to_le_bytes(self.field.neg(self.field.one())));
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        out.extend_from_slice(&(self.selectors.len() as u64).to_le_bytes());
        for s in &self.selectors {
            out.extend_from_slice(&(s.name.len() as u64).to_le_bytes());
            out.extend_from_slice(s.name.as_bytes());
            let mut byte = 0u8;
            for (i, &a) in s.active.iter().enumerate() {
                if a {
                    byte |= 1 << (i % 8);
                }
                if i % 8 == 7 {
                    out.push(byte);
                    byte = 0;
                }
            }
            if s.active.len() % 8 != 0 {
                out.push(byte);
            }
        }
    }

    /// Streams the cell values column-major: one presence byte, then the
    /// 32-byte little-endian canonical value when assigned.
    pub fn write_cells(&self, sink: &mut dyn FnMut(&[u8])) {
        let mut buf = Vec::with_capacity(33 * 1024);
        for v in &self.cells {
            match v {
                None => buf.push(0),
                Some(fe) => {
                    buf.push(1);
                    buf.extend_from_slice(&self.field.to_le_bytes(*fe));
                }
            }
            if buf.len() >= 32 * 1024 {
                sink(&buf);
                buf.clear();
            }
        }
        if !buf.is_empty() {
            sink(&buf);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_must_be_power_of_two() {
        let f = PrimeField::bn254();
        assert!(Grid::new(f, 6, 2).is_err());
        assert!(Grid::new(f, 0, 2).is_err());
        assert!(Grid::new(f, 8, 2).is_ok());
    }

    #[test]
    fn assign_and_read() {
        let f = PrimeField::bn254();
        let mut g = Grid::new(f, 4, 3).unwrap();
        g.assign_i64(Cell::new(2, 1), -9).unwrap();
        assert_eq!(g.value_i128(Cell::new(2, 1)), Some(-9));
        assert_eq!(g.get(Cell::new(0, 0)), None);
        assert!(g.assign_i64(Cell::new(3, 0), 1).is_err());
        assert_eq!(g.assigned_count(), 1);
    }
}
