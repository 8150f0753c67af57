use nalgebra::{DMatrix, DVector};

use crate::model::EffectiveChannel;
use crate::{Error, Result, C64};

/// A linear map `A` with its adjoint, as consumed by GAMP and LMMSE.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>>;
    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>>;
    fn frobenius_norm_sq(&self) -> f64;
    fn to_dense(&self) -> DMatrix<C64>;
}

impl LinearOperator for EffectiveChannel {
    fn nrows(&self) -> usize {
        self.dims().mn()
    }

    fn ncols(&self) -> usize {
        self.dims().mn()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        EffectiveChannel::apply(self, x)
    }

    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        EffectiveChannel::apply_adjoint(self, y)
    }

    fn frobenius_norm_sq(&self) -> f64 {
        self.h0().frobenius_norm_sq()
    }

    fn to_dense(&self) -> DMatrix<C64> {
        EffectiveChannel::to_dense(self)
    }
}

/// An explicit matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator(pub DMatrix<C64>);

impl LinearOperator for DenseOperator {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.0.ncols() {
            return Err(Error::DimensionMismatch { expected: self.0.ncols(), got: x.len() });
        }
        Ok((&self.0 * DVector::from_column_slice(x)).iter().copied().collect())
    }

    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        if y.len() != self.0.nrows() {
            return Err(Error::DimensionMismatch { expected: self.0.nrows(), got: y.len() });
        }
        Ok((self.0.adjoint() * DVector::from_column_slice(y)).iter().copied().collect())
    }

    fn frobenius_norm_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    fn to_dense(&self) -> DMatrix<C64> {
        self.0.clone()
    }
}
