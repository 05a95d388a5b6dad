//! Thrust-constrained wind turbine control: aerodynamic surfaces, a
//! reduced-order turbine plant, wind estimation, power down-regulation and a
//! switching thrust governor, plus identification and simulation tooling.

// `!(x > 0.0)` is how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aero;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod governor;
pub mod harness;
pub mod regulation;
pub mod sysid;
pub mod turbine;
pub mod windfield;

pub use error::{Error, Result};
pub use exec::Exec;
