//! Elastic task allocation for coded distributed computing.
//!
//! Machines hold redundant copies of coded tasks. When a machine joins or
//! leaves, every surviving machine must change its load by a fixed amount; any
//! movement beyond that is *transition waste*. This crate builds allocation
//! schemes, measures their waste, and computes reallocations that avoid it.
//!
//! * [`tas`]: allocation type, axioms, waste metric.
//! * [`cyclic`]: cyclic and shifted cyclic schemes with closed-form waste.
//! * [`zero_waste`]: greedy join and matching-based leave reallocation.
//! * [`configurations`]: combinatorial configurations and zero-waste ranges.
//! * [`engine`]: event-driven simulation over join/leave traces.
//! * [`coded`]: coded matrix-vector multiplication on top of an allocation.

pub mod coded;
pub mod configurations;
pub mod cyclic;
pub mod engine;
pub mod finite_field;
mod flow;
pub mod random;
pub mod tas;
pub mod verify;
pub mod zero_waste;

pub use tas::{
    necessary_load_change, transition_waste, ElasticEvent, MachineId, TaskAllocation, TaskSet,
    TasError, TransitionOutcome, ValidationReport, Violation,
};
