//! Finite-`n` checks of the limiting energy.
//!
//! * [`exact_moment_sum`] evaluates the disorder-averaged first and second
//!   moments exactly, as a sum over compositions of `n` into `4^p` parts.
//!   Terms cancel heavily, so the sum runs in multiprecision.
//! * [`statevector_expectation`] and [`monte_carlo_moment`] simulate sampled
//!   instances directly.

pub(crate) mod big;
mod composition;
mod exact;
pub(crate) mod logcomplex;
mod statevector;

pub use big::BigComplex;
pub use composition::{composition_count, CompositionCursor};
pub use exact::{exact_moment_sum, ExactSumOptions, ExactSumResult};
pub use logcomplex::LogComplex;
pub use statevector::{monte_carlo_moment, statevector_expectation, MonteCarloOptions, MonteCarloResult, DEFAULT_MAX_QUBITS};
