//! Library side of the `planreg` command-line tool.

pub mod dataset;
pub mod evaluate;
pub mod register;
pub mod simulate;
