//! Gaussian wave-packet dynamics for the logarithmic-friction
//! (Schuch–Chung–Hartmann) Schrödinger equation, with a velocity-integral
//! propagator and an independent grid solver for cross-validation.
//!
//! The library is organized in three layers:
//!
//! * **Packet layer** — [`dynamics`] integrates the five packet degrees of
//!   freedom (center, width, phase offset) through any [`potential`] model;
//!   [`packet`] assembles the closed-form Gaussian wavefunction and its
//!   Madelung fields from a packet state.
//! * **Verification layer** — [`madelung`] decomposes arbitrary complex
//!   fields into density and unwrapped phase; [`residuals`] checks the
//!   packet against the defining identities (logarithmic identity,
//!   continuity, Hamilton–Jacobi) by quadrature and finite differences;
//!   [`oracle`] evolves the full nonlinear equation on a grid with a
//!   split-step scheme, with no knowledge of the packet ansatz.
//! * **Propagator layer** — [`propagator`] builds the time-evolution kernel
//!   as a velocity integral over a family of packet solutions and probes
//!   its delta-limit and completeness properties.

pub mod dynamics;
pub mod error;
pub mod fd;
pub mod grid;
pub mod madelung;
pub mod oracle;
pub mod packet;
pub mod params;
pub mod potential;
pub mod propagator;
pub mod quad;
pub mod residuals;
pub mod rk;

pub use dynamics::{
    classical_action, integrate_trajectory, ode_rhs, PacketState, TrajectoryRecord,
};
pub use error::{Result, SchError};
pub use grid::{ComplexField, Grid, GridKind, RealField};
pub use params::{
    harmonic_equilibrium_width, InitialConditions, MeanActionVariant, PhysicsParams,
};
pub use potential::{PotentialModel, PotentialSample};
pub use oracle::{FieldMoments, OracleConfig, OracleRun};
pub use propagator::{
    CompletenessReport, KernelMatrix, QuadratureRule, VelocityQuadrature,
};
