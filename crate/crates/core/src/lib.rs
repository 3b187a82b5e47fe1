pub mod air;
pub mod commit;
pub mod field;
pub mod fxp;
pub mod nn;
pub mod protocol;
pub mod audits;
pub mod cli;
