//! Simulation harness for the dadp-market engine: the audited message bus,
//! scenario files, random instance generation, sweeps and output writers.

pub mod audit;
pub mod bus;
pub mod gen;
pub mod output;
pub mod scenario;
pub mod sweep;
