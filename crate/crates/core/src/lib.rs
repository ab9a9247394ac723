//! Markovian couplings of Brownian motions on the constant-curvature model
//! spaces (Euclidean space, the unit sphere and the hyperboloid), together
//! with the numerical machinery used to check their distance laws.
//!
//! The crate is layered bottom-up:
//!
//! * [`smallmat`] – stack-allocated vectors and matrices, rotations and the
//!   explicit driver matrices of the sphere couplings.
//! * [`spaces`] – distances, exponential and log maps, parallel transport,
//!   Jacobi coefficients and index forms.
//! * [`drivers`] – seeded noise streams and one-step integrators.
//! * [`couplings`] – the coupling strategies and the patching state machine.
//! * [`sim`] – path simulation and parallel ensembles.
//! * [`verify`] – distance laws, convergence fits, statistical checks and the
//!   named verification suites.
//! * [`config`] – the simulation configuration and its key-value format.

pub mod config;
pub mod couplings;
pub mod drivers;
pub mod error;
pub mod sim;
pub mod smallmat;
pub mod spaces;
pub mod verify;

pub use couplings::{Coupling, CouplingState, PatchMode, Regime, RotationParams, Strategy, StrategyKind};
pub use drivers::{NoiseStream, StepNoise};
pub use error::{Error, Result};
pub use smallmat::{Matrix, NFrame, Vector};
pub use spaces::{Curvature, IndexFormValues, SpacePoint, SpaceSpec, TangentVector};
