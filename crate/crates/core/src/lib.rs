//! Quantized output-feedback stabilization of continuous-time switched
//! linear systems: design certificate, zoom controller and simulator.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod controller;
pub mod design;
pub mod numerics;
pub mod plant;
pub mod quantizer;
pub mod simulator;

pub use controller::{ControllerState, Stage, UpdateReason, ZoomUpdate};
pub use design::{
    assess_design, compute_certificate, stability_margins, DesignCertificate, DesignError,
    DesignInputs, StabilityMargins, Violation,
};
pub use numerics::{Matrix, SymmetricPositiveDefinite, Vector};
pub use plant::{
    DwellBound, ModeDynamics, ModeId, SignalGenerator, Switch, SwitchedPlant, SwitchingSignal,
};
pub use quantizer::QuantizerConfig;
pub use simulator::{
    monitor_invariants, simulate, MonitorReport, Outcome, Scenario, Start, TrajectoryRecord,
};
