//! Factorized time-dependent Dyson maps and the hybrid interaction pictures
//! they generate.
//!
//! A non-unitary map `Ω(t) = Ω_N(t) ··· Ω_1(t)` relates a friendly,
//! generally non-Hermitian representation of a quantum system to the textbook
//! Hermitian one. Every partial product `Ω_N ··· Ω_{j+1}` defines an equally
//! valid picture `j`; this crate builds the whole ladder, the composite
//! Coriolis operators that drive it, and integrates the evolution equations
//! for kets, observables, density matrices and metrics in any picture.
//!
//! * [`weyl`]: exact normal-ordered `x`/`p` algebra for closed-form Coriolis operators
//! * [`linop`]: dense complex matrices, factor evaluation, diagnostics
//! * [`pictures`]: partial products, metrics, Hamiltonian descent, state maps
//! * [`evolution`]: RK4 / RK45 integration of the four flows
//! * [`models`]: built-in scenarios

// `!(x > 0.0)` is deliberate: NaN has to fail positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod expr;
pub mod linop;
pub mod models;
pub mod pictures;
pub mod weyl;

pub use error::{Error, Result};
pub use evolution::{EvolutionResult, Method, TimeGrid};
pub use expr::CoefficientFn;
pub use linop::{CMatrix, CVector};
pub use pictures::{FactorizedDysonMap, Hamiltonian, PictureIndex, StatePair};
