//! Entropy-stable discontinuous Galerkin spectral element method for
//! nonconservative hyperbolic balance laws, specialised to the
//! Saint-Venant-Exner shallow water / bedload system.
//!
//! The crate is `no_std` compatible (it needs `alloc`). The `std` feature
//! (default) only switches the error type onto `std::error::Error`; the
//! `parallel` feature runs the volume integral of [`Semidiscretization::rhs`]
//! on the rayon thread pool.
//!
//! Module map:
//!
//! - [`sbp`]: Legendre-Gauss-Lobatto collocation operators and Gauss-Legendre
//!   rules on `[0, 1]` for path integrals.
//! - [`model`]: the physics of the SVE system (fluxes, nonconservative
//!   matrix, sediment discharge closures, entropy pair, Roe eigensystem).
//! - [`fluctuations`]: entropy-conservative fluctuations (path-integral and
//!   closed form), LLF / Roe viscosity and entropy-stable blending.
//! - [`dgsem`]: mesh, nodal field and the flux-differencing right-hand side.
//! - [`timeint`]: explicit SSP Runge-Kutta drivers.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cubic;
pub mod dgsem;
mod error;
pub mod fluctuations;
pub mod linalg;
mod math;
pub mod model;
pub mod sbp;
pub mod timeint;

pub use dgsem::{
    DGField, Mesh1D, RhsDiagnostics, Semidiscretization, SourceTerm, SurfaceFluctuation,
};
pub use error::{Error, Result};
pub use fluctuations::{
    BlendReport, BlendRule, EcFluctuation, FluctuationPair, ViscosityMatrix,
};
pub use model::{Discharge, EntropyVars, RoeEigen, State, SveParams};
pub use sbp::{GaussRule, LobattoBasis};
pub use timeint::{RecordInterval, Stepping, TimeIntegrationConfig, TimeMethod, TimeSeries, TimeSeriesRow};
