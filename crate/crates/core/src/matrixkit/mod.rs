//! Dense real linear algebra used by the factorizer.

pub mod cholesky;
pub mod dense;
pub mod eigen;
pub mod svd;
pub mod woodbury;

pub use cholesky::{
    cholesky, congruence_inverse, pivoted_cholesky, PivotedCholesky, solve_lower_transpose_vec, solve_lower_triangular,
    solve_lower_vec,
};
pub use dense::{dot, norm2, DenseMatrix, SymmetricMatrix};
pub use eigen::{jacobi_eigen, sym_eigen_top, sym_eigendecompose, tridiagonal_ql_eigen, EigenPairs};
pub use svd::{outer_factors, right_singular_factors, thin_svd, RightSingularFactors, SvdFactors, DEFAULT_RANK_TOLERANCE};
pub use woodbury::{apply_inverse_sqrt, woodbury_inverse_factors, LowRankShift, WoodburyInverse};
