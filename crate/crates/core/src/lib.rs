//! Windowed volume/flow DDoS detection with a flow-level attack simulator,
//! a cooperative edge/central detection protocol and an evaluation harness.

pub mod coop;
pub mod detector;
pub mod eval;
pub mod flow_model;
pub mod simulator;
