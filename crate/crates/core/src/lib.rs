//! P2 finite element discretization of the Burgers equation as a port-Hamiltonian
//! system, with and without viscous dissipation, integrated by Crank–Nicolson.
//!
//! The core is generic over the scalar type ([`Real`], implemented for `f32` and
//! `f64`). The aliases at the crate root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod diagnostics;
pub mod error;
pub mod fem1d;
pub mod harness;
pub mod integrator;
pub mod phsystem;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result, StepFailure};
pub use fem1d::{assemble_operators, build_mesh};
pub use integrator::{run_simulation, FailureReason, RunSummary, StepOutcome, Termination};
pub use phsystem::Mode;
pub use scalar::Real;

pub type Mesh = fem1d::Mesh1D<f64>;
pub type Operators = fem1d::FeOperators<f64>;
pub type PhState = phsystem::State<f64>;
pub type Config = integrator::RunConfig<f64>;
pub type Ledger = diagnostics::PowerLedger<f64>;
pub type Output = integrator::SimulationOutput<f64>;
pub type Simulation = integrator::Simulation<f64>;
