//! Region-based semantic factorization for generator Jacobians.
//!
//! Given the Jacobian `J` of a generator at a latent code and a partition of
//! the output pixels into a region of interest (foreground) and its
//! complement (background), the factorizer finds latent directions `n` that
//! maximize `n^T A n / n^T B_reg n` with `A = J_f^T J_f` and
//! `B_reg = J_b^T J_b + τ·tr(J_b^T J_b)·I`. Moving a latent code along such a
//! direction changes the foreground a lot and the background as little as
//! possible, to first order.
//!
//! Two solvers are provided: a Cholesky congruence reduction and a low-rank
//! path that only needs a thin SVD of `J_b`. The remaining modules provide toy
//! generators with analytic Jacobians, region masks, an editing/sweep harness
//! measuring masked pixel change, and the binary/text interchange formats used
//! by the `rsf` command-line tool.

pub mod cli;
pub mod editor;
pub mod error;
pub mod factorizer;
pub mod generators;
pub mod interchange;
pub mod matrixkit;
pub mod par;
pub mod regions;

pub use error::{Error, Result};
