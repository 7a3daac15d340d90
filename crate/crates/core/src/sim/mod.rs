//! Scenario-driven simulation: configuration, the control/physics loop and trace output.

mod config;
mod run;
mod trace;

pub use config::{
    BodyConfig, ControllerConfig, DynamicsConfig, NoiseConfig, PathConfig, Scenario, ScenarioConfig, ScenarioError,
    SimulationConfig, TrackPoint, ValidationError,
};
pub use run::{
    compare_modes, events_to_text, run_scenario, Comparison, RunError, RunOutput, Summary, Termination,
    COMPLETION_DISTANCE, STOP_SPEED,
};
pub use trace::{
    format_value, read_trace, trace_to_csv, write_trace, TraceRow, HEADER, SLIP_LATERAL, SLIP_LEFT, SLIP_RIGHT,
};
