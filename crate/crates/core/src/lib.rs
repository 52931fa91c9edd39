//! Gauss-Hermite, sparse-grid and dimension-adaptive sparse-grid quadrature
//! for Gaussian-weighted integrals, and a quadrature-driven Gaussian filter.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod gh;
pub mod grid;
pub mod index;
pub mod models;
pub mod smolyak;
pub mod tridiag;

pub use error::{Error, Result};
pub use gh::{gauss_hermite_rule, rule_for_level, Rule1D};
pub use grid::WeightedGrid;
pub use index::MultiIndex;
