//! Homotopy solver for mathematical programs with complementarity constraints
//! (MPCCs).
//!
//! Each complementarity pair `0 ≤ G_i(x) ⊥ H_i(x) ≥ 0` is written as
//! `F_i(x) = (G_i(x), H_i(x)) ∈ D`, where `D` is the union of the two
//! nonnegative axes of the plane. The indicator of `D` is replaced by its
//! Lasry–Lions double envelope, which has a closed form and a Lipschitz
//! gradient ([`envelope`]). Minimizing the smoothed objective
//! ([`smoothing`]) for a decreasing sequence of `λ` ([`homotopy`]) with a
//! projected gradient method over the box ([`inner`]) yields approximately
//! stationary points of the MPCC, each labelled by a certificate.
//!
//! ```
//! use llmpcc::generators::kth3;
//! use llmpcc::homotopy::{solve, HomotopyParams, SolveStatus};
//!
//! let params = HomotopyParams { epsilon: 1e-6, ..Default::default() };
//! let report = solve(&kth3(), &params, &[3.0, 2.0], false).unwrap();
//! assert_eq!(report.status, SolveStatus::CertifiedStationary);
//! assert!(report.certificate.cc_violation <= 1e-6);
//! ```

pub mod baseline;
pub mod envelope;
pub mod error;
pub mod generators;
pub mod homotopy;
pub mod inner;
pub mod io;
pub mod model;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
pub mod smoothing;
pub mod sparse;

pub use error::{Error, Result};
