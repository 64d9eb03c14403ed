//! Four-valued boundary-field Gibbs measures for the nearest-neighbour Ising
//! model on Cayley half-trees.
//!
//! A 4×4 count matrix ([`SchemeMatrix`]) prescribes how many children of a
//! vertex carry each of the field values `±h, ±l`. The boundary field is
//! compatible exactly when `(h, l)` solves the two-field fixed-point system
//!
//! ```text
//! h = a·f(h) + b·f(l)
//! l = c·f(h) + d·f(l),      f(x) = arctanh(θ·tanh x)
//! ```
//!
//! The crate solves that system ([`solver`]), realizes the fields on finite
//! trees ([`tree`]), checks them against exact brute-force finite-volume
//! measures ([`oracle`]), labels schemes by the classical measure families
//! they reproduce ([`scheme::classify`]) and evaluates the `k·κ·γ < 1`
//! extremality certificate ([`extremality`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extremality;
pub mod oracle;
pub mod scheme;
pub mod solver;
pub mod special;
pub mod sweep;
pub mod tree;

pub use error::{Error, Result};
pub use extremality::{AlphaConvention, ExpVars, ExtremalityReport, KappaMethod, Verdict};
pub use oracle::{FiniteVolumeMeasure, SpinConfig};
pub use scheme::{MeasureFamily, ReducedParams, SchemeMatrix};
pub use solver::{FieldPair, ScanRange, SolutionSet, SolverConfig, SolverWarning};
pub use special::{Coupling, Kernel};
pub use sweep::SweepRow;
pub use tree::{BoundaryAssignment, FieldLabel, FiniteTree};
