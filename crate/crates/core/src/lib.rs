//! Statevector laboratory for the quantum linear system problem.
//!
//! Implements three HHL variants that differ only in their eigenvalue
//! inversion stage:
//!
//! * **Canonical**: a uniformly controlled rotation over every nonzero clock pattern.
//! * **Hybrid**: a QPE preprocessing run picks the relevant clock patterns; only
//!   those get a rotation.
//! * **Enhanced hybrid**: preprocessing runs at higher precision (`l > k` bits) and
//!   a classical step spreads each high-precision estimate over its two neighbouring
//!   `k`-bit patterns, choosing angles that minimise the per-pattern error.
//!
//! ```
//! use hhl_core::{pipeline::{run, RunConfig, Variant}, qlsp::generate_n2};
//!
//! let problem = generate_n2(0.25).unwrap();
//! let result = run(&problem, &RunConfig::new(Variant::Enhanced)).unwrap();
//! assert!(result.error < 1.0);
//! ```

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod inversion;
pub mod pipeline;
pub mod preprocess;
pub mod qlsp;
pub mod sim;

pub use error::{HhlError, Result};
