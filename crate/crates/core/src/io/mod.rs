//! File formats and run configuration.

pub mod config;
pub mod manifest;
pub mod trace;
pub mod vtk;

pub use config::{Experiment, Preset, Problem, RunConfig};
pub use manifest::{DerivedParams, Manifest, Versions};
pub use trace::{average_mx, read_trace, write_trace, TraceRow, TraceWriter, TRACE_HEADER};
pub use vtk::{parse_vtk, read_vtk_pair, vtk_string, write_vtk, VtkData};
