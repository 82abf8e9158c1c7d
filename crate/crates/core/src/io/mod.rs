pub mod config;
pub mod output;
pub mod trace;

pub use config::ExperimentConfig;
pub use trace::{read_trace, write_trace, write_trace_file};
