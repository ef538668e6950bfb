//! Drivers for the named experiments, their configuration, snapshot
//! persistence, and the finite-dimensional toy model.

pub mod commands;
pub mod config;
pub mod setup;
pub mod snapshot;
pub mod toy;

pub use commands::{
    cmd_flow, cmd_orbit, cmd_spectrum, cmd_stationary, cmd_sweep, cmd_toy, inspect, orbit_point,
    sweep_point, ForwardLimitRecord, InspectReport, OrbitReport, SpectrumRecord, StationaryRecord,
    SweepReport, SweepSample,
};
pub use config::{Auto, ExperimentConfig};
pub use setup::{stabilizer, FlowRecord, FlowSetup};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};
pub use toy::{run_toy, ToyReport};
