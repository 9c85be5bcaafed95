//! Numerical laboratory for the multi-scale bubble cascade of the 1D electron-MHD model
//! `B_t = -2bJB_x + b(HB_xx)B`, `J = -HB_x`.
//!
//! The solution is assembled from nested rescaled profiles `B_{n,k}` whose amplitudes
//! follow a triangular scaling-factor ODE; a periodic pseudo-spectral solver gives an
//! independent reference.

pub mod assembly;
pub mod bootstrap;
pub mod cascade_ode;
pub mod diagnostics;
pub mod direct_solver;
pub mod error;
pub mod field;
pub mod params;
pub mod profile;
pub mod singular_integral;
pub mod spectral;

pub use assembly::{BubbleAtlas, ResidualReport, SobolevReport, TailReport};
pub use cascade_ode::{solve_root, CascadeState, Trajectory};
pub use diagnostics::{DiagnosticsReport, RateFit};
pub use direct_solver::SpectralState;
pub use error::{CascadeError, Result};
pub use field::{Grid, Interval, Parity, SampledField};
pub use params::{CascadeParams, Dissipation, ModelParams, ProfileExponents};
pub use profile::SeedProfile;
pub use singular_integral::{BubbleSet, HilbertEvaluator, InteractionEngine};
