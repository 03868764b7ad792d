//! Solvers for M-tensor equations `M x^(m-1) = b`.
//!
//! The crate finds nonnegative solutions with monotone iterations that only
//! ever factor the `n x n` majorization matrix of `M`:
//!
//! - [`tensor`]: dense storage, contractions, majorization and scaling.
//! - [`linalg`]: LU with partial pivoting and triangular solves.
//! - [`structure`]: Z/M-tensor certificates, feasibility, existence tests.
//! - [`solvers`]: S-MEQM, Jacobi/Gauss-Seidel/SOR and approximate Newton.
//! - [`problems`]: seeded benchmark generators and exact fixtures.
//! - [`io`], [`bench`]: file formats and the seeded sweep runner.
//!
//! ```
//! use mteq::problems::{fixture, FixtureId};
//! use mteq::solvers::{solve, Method, SolveConfig, Status};
//!
//! let ex = fixture(FixtureId::Ex21);
//! let cfg = SolveConfig { scale: false, ..SolveConfig::new(Method::Anewton, 1.0) };
//! let out = solve(&ex.tensor, &ex.rhs, &[0.8, 2.0], &cfg).unwrap();
//! assert_eq!(out.status, Status::Converged);
//! assert!((out.x[0] - 1.0).abs() < 1e-6);
//! ```

pub mod bench;
pub mod error;
pub mod io;
pub mod linalg;
pub mod problems;
pub mod solvers;
pub mod structure;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::DenseTensor;
