//! Residuals paired with the magnitude of the terms they came from.
//!
//! Identity checks report a max-norm residual together with the scale of the
//! participating terms, so tolerances can be stated as `tol * scale` without
//! the check going vacuous on near-zero fields.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct ScaledResidual<R> {
    /// Max absolute deviation over the probed sites/points.
    pub max_abs: R,
    /// Magnitude of the terms entering the identity (max norm).
    pub scale: R,
}

impl<R: Real> ScaledResidual<R> {
    pub fn new(max_abs: R, scale: R) -> Self {
        Self { max_abs, scale }
    }

    pub fn zero() -> Self {
        Self {
            max_abs: R::zero(),
            scale: R::zero(),
        }
    }

    /// Residual relative to the term scale; falls back to the absolute
    /// residual when the scale itself vanishes.
    pub fn relative(&self) -> R {
        if self.scale > R::zero() {
            self.max_abs / self.scale
        } else {
            self.max_abs
        }
    }

    /// Fold one probe into the running maxima.
    pub fn record(&mut self, residual: R, scale: R) {
        self.max_abs = self.max_abs.max(residual);
        self.scale = self.scale.max(scale);
    }

    /// Pointwise max of two residual records.
    pub fn merge(self, other: Self) -> Self {
        Self {
            max_abs: self.max_abs.max(other.max_abs),
            scale: self.scale.max(other.scale),
        }
    }
}
