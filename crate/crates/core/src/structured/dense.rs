use nalgebra::DMatrix;

use super::QuasiBandedMatrix;
use crate::{Error, Result, C64};

/// Largest dimension the dense reference will invert.
pub const DEFAULT_ORACLE_CAP: usize = 4096;

/// Ordinary `O(n^3)` inverse via partial-pivot LU.
pub fn dense_inverse(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    a.clone().lu().try_inverse().ok_or(Error::Singular)
}

/// Dense inverse of `psi`, the reference for the structured path.
pub fn dense_inverse_oracle(psi: &QuasiBandedMatrix, cap: usize) -> Result<DMatrix<C64>> {
    if psi.dim() > cap {
        return Err(Error::OracleCap { n: psi.dim(), cap });
    }
    dense_inverse(&psi.to_dense())
}
