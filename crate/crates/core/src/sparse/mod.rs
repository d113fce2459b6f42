//! Sparse and dense linear-algebra kernels.

mod csr;
mod decomp;
mod dense;
pub mod mm;
pub mod vector;

pub use csr::CsrMatrix;
pub use decomp::{
    dense_eig, dense_eig_with_cap, dense_svd, dense_svd_with_cap, set_dense_threads, Svd, DEFAULT_EIG_CAP,
    DEFAULT_SVD_CAP,
};
pub use dense::DenseMatrix;
pub use num_complex::Complex64;
