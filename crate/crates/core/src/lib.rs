//! Infinite-size QAOA performance on mixed spin-glass and sparse random
//! hypergraph ensembles.
//!
//! The crate evaluates the limiting energy `V_p(γ, β)` of a depth-`p` QAOA
//! circuit through a self-consistent equation on the `4^p` configuration
//! hypercube, and ships several independent checks of that value: a tree
//! iteration for pure Gaussian models, exact finite-`n` combinatorial sums,
//! statevector Monte Carlo and a symbolic well-played polynomial lab.
//!
//! ```
//! use spinqaoa_core::{BasisTables, Ensemble, solve_fast, compute_moments};
//!
//! let tables = BasisTables::new(&[0.25], &[std::f64::consts::PI / 8.0]).unwrap();
//! let ensemble = Ensemble::pure_gaussian(2);
//! let solution = solve_fast(&tables, &ensemble).unwrap();
//! let report = compute_moments(&solution, &tables, &ensemble).unwrap();
//! assert!((report.v_p - 0.5 * (-0.25f64).exp()).abs() < 1e-12);
//! ```

pub mod basis;
pub mod ensemble;
pub mod error;
pub mod numeric;
pub mod optimize;
pub mod oracle;
pub mod sce;
pub mod transform;
pub mod tree;
pub mod wellplayed;

pub use basis::{BasisTables, Partition, SpinConfig};
pub use ensemble::{CustomFamily, Ensemble, Family, InstanceSample};
pub use error::{Error, Result};
pub use optimize::{optimize, optimize_ladder, OptimizeOptions, OptimizeResult};
pub use sce::{compute_moments, solve_fast, solve_reference, MomentReport, SceSolution, SolveMethod};
pub use transform::{HypercubeSpectrum, SpectrumDomain};
pub use tree::{check_tree_identity, iterate_h, nu_p, TreeState};

pub use num_complex::Complex64;
