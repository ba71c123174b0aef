//! File formats, synthetic benchmarks and the experiment runner built on
//! [`alloom_core`].

pub mod error;
pub mod io;
pub mod report;
pub mod results;
pub mod runner;
pub mod spec;
pub mod synth;

pub use error::{HarnessError, Result};
pub use runner::{run_spec, write_outputs, RunOutput};
pub use spec::ExperimentSpec;
