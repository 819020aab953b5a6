//! Phase-space numerics for multimode Gaussian light.
//!
//! * [`symplectic`]: propagators of quadratic Hamiltonians, real and ladder form.
//! * [`gaussian`]: Gaussian states, Wigner and Husimi functions.
//! * [`photon`]: photon-number distributions via multivariate Hermite polynomials.
//! * [`oscillator`]: the parametric oscillator, its states and Floquet analysis.
//! * [`cat`]: even and odd coherent states.

pub mod cat;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod linalg;
pub mod oscillator;
pub mod photon;
pub mod symplectic;

pub use cat::{CatState, Parity};
pub use error::{Error, Result};
pub use gaussian::{from_q_params, GaussianState, GaussianStateRecord, HermiteArgument, QFunctionParams};
pub use grid::{GridValues, PhaseGrid, SpatialGrid};
pub use oscillator::{EpsilonPoint, EpsilonTrajectory, FrequencyProfile, Quasienergy, Variances};
pub use photon::{MultiIndex, OracleGrid, PhotonDistribution};
pub use symplectic::{
    HamiltonianConfig, PropagatorComplex, PropagatorReal, PropagatorRecord, QuadraticHamiltonian, SymplecticForm,
};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
