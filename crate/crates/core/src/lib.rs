//! Balanced separators for bounded-degree hypergraphs and their uses: an
//! exact CSP solver that branches on separator variables, tree-like
//! resolution refuters for sparse unsatisfiable boolean CSPs and Tseitin
//! formulas, and a tightness experiment on random hypergraphs.

pub mod cnf;
pub mod experiments;
pub mod formats;
pub mod csp;
pub mod hypergraph;
pub mod refutation;
pub mod separator;
pub mod tseitin;
mod util;

pub use util::derive_seed;
