//! Quadratic Wasserstein distances between faithful normal states of
//! finite-dimensional von Neumann algebras.
//!
//! The distance is the square root of a transport cost minimized over
//! channels (unital completely positive maps) that carry one state to the
//! other and intertwine the two modular groups. The minimization is a small
//! dense semidefinite program over Choi matrices, solved by operator
//! splitting. A verification harness machine-checks the metric axioms,
//! KMS-duality identities, and the counterexamples that appear when the
//! generator set fails to generate the algebra.
//!
//! Module map:
//! - [`linalg`]: complex matrices, Hermitian eigensolver, Kronecker/partial
//!   trace, PSD projection.
//! - [`algebra`]: direct sums of matrix blocks, faithful states, generator
//!   sets, generated subalgebras, support compression.
//! - [`modular`]: modular groups and sectors, the GNS contraction of a
//!   channel, KMS duals.
//! - [`transport`]: channels and transport plans, Choi duality, the cost
//!   functional in channel and GNS form, plan composition.
//! - [`solver`]: SDP assembly and the splitting solver, plus independent
//!   oracles (transportation simplex, qubit grid search).
//! - [`verify`]: metric-axiom suites, duality checks, and the pseudometric
//!   demos.
//!
//! # Example
//!
//! The classical two-point fixture: diagonal states on C² with the single
//! indicator generator reduce to a transportation problem, so
//! W₂² = |0.7 − 0.4| = 0.3.
//!
//! ```
//! use vnwass::algebra::{make_state, FdAlgebra, GeneratorSet};
//! use vnwass::linalg::CMatrix;
//! use vnwass::solver::{solve_w2, Mode, SolverOptions};
//!
//! let algebra = FdAlgebra::abelian(2);
//! let mu = make_state(&algebra, CMatrix::diag(&[0.7, 0.3]))?;
//! let nu = make_state(&algebra, CMatrix::diag(&[0.4, 0.6]))?;
//! let k = GeneratorSet::new(&algebra, vec![CMatrix::diag(&[0.0, 1.0])])?;
//!
//! let res = solve_w2(&mu, &nu, &k, Mode::Modular, &SolverOptions::default())?;
//! assert!((res.w2.powi(2) - 0.3).abs() < 1e-5);
//! # Ok::<(), vnwass::Error>(())
//! ```

pub mod algebra;
pub mod error;
pub mod linalg;
pub mod modular;
pub mod solver;
pub mod transport;
pub mod verify;

#[cfg(test)]
pub(crate) mod testutil;

pub use algebra::{FdAlgebra, GeneratorSet, State};
pub use error::{Error, Result};
pub use linalg::{CMatrix, HermEig, C64};
pub use solver::{Mode, SolverOptions, W2Result};
pub use transport::{Channel, CostReport, TransportPlan};
