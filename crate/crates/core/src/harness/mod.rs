//! Scenario files, closed-loop runs, metrics, sweeps and plot output.

pub mod experiment;
pub mod metrics;
pub mod plot;
pub mod scenario;
pub mod sim;

pub use metrics::{metrics, sweep, Summary, SweepRow, SweepTable};
pub use scenario::{PowerReference, ReferenceKind, Scenario, SurfaceKind, SurfaceSource, SCHEMA_VERSION};
pub use sim::{run, Event, EventKind, SimLog, LOG_HEADER};
