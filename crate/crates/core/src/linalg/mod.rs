//! Linear algebra kernels: sparse complex matrices, dense Hermitian
//! eigensolvers, block Lanczos and Sturm bisection for tridiagonal matrices.

mod dense;
mod lanczos;
mod sparse;
mod tridiag;

pub use dense::{
    dense_hermitian_eigen, dense_hermitian_eigenvalues, least_squares, real_symmetric_eigenvalues, singular_values,
    DenseMatrix, LeastSquares,
};
pub use lanczos::{block_lanczos, LanczosOptions, LanczosResult};
pub use sparse::CsrMatrix;
pub use tridiag::{sturm_count, tridiagonal_eigenvalues};
