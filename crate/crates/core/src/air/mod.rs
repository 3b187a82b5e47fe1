//! Constraint grids, the gadget library and the mock constraint checker.

mod builder;
mod constraint;
pub mod dump;
mod expr;
mod gadgets;
mod grid;
mod mock;

use thiserror::Error;

pub use builder::CircuitBuilder;
pub use constraint::{
    exp_fixed, exp_table_floor, Circuit, Constraint, ConstraintSystem, LookupTable, NonLinearity, TableId, TableKind,
};
pub use expr::{CompiledExpr, Expr};
pub use gadgets::{
    div_const_witness, le_checked, max_checked, nonlin_checked, nonlin_domain, pack_instances, round_div_checked,
    round_div_witness, sgd_witness, Gadget, Layout, RoundDivGadget, SoftmaxCells,
};
pub use grid::{Cell, Grid, Selector, SelectorId};
pub use mock::{check_constraints, Violation, ViolationKind, ViolationReport};

/// Default column count used by the training circuits.
pub const DEFAULT_COLS: usize = 18;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AirError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("constraint {constraint} references unassigned cell (col {col}, row {row})")]
    UnassignedCell { constraint: usize, col: usize, row: usize },
    #[error("unknown lookup table {0}")]
    UnknownTable(usize),
    #[error("capacity exceeded: need {needed} rows, have {available}")]
    CapacityExceeded { needed: usize, available: usize },
    #[error("gadget needs {needed} columns, grid has {cols}")]
    WidthExceeded { needed: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("value {value} outside the {bits}-bit range")]
    RangeOverflow { value: i128, bits: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {value} outside the domain of table {table}")]
    DomainMiss { table: String, value: i128 },
}
