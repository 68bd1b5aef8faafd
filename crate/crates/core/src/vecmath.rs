//! Flat-vector arithmetic. Models, client updates, and reference directions
//! are all values of [`ParamVector`]; this is the only module that touches
//! raw numerics.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Norm threshold below which a vector is treated as zero. Angle and
/// manipulation formulas divide by norms, so they need this guard.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// A fixed-length vector of finite `f64` model coordinates.
///
/// The length is set at construction and every binary operation requires
/// equal lengths. Constructors reject NaN and infinity so downstream code
/// can rely on finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    /// Wraps `values`, rejecting empty or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("parameter vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ParamVector(values))
    }

    /// The zero vector of dimension `dim`.
    pub fn zeros(dim: usize) -> Self {
        debug_assert!(dim >= 1);
        ParamVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Inner product `Σ aᵢbᵢ`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Euclidean norm `√(Σ aᵢ²)`.
    pub fn norm(&self) -> f64 {
        math::sqrt(self.0.iter().map(|a| a * a).sum())
    }

    /// True when the norm is at or below [`DEGENERACY_EPS`].
    pub fn is_degenerate(&self) -> bool {
        self.norm() <= DEGENERACY_EPS
    }

    /// Entrywise `c·aᵢ`.
    pub fn scale(&self, c: f64) -> Self {
        debug_assert!(c.is_finite());
        ParamVector(self.0.iter().map(|a| c * a).collect())
    }

    /// `a + c·b`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        debug_assert!(c.is_finite());
        self.check_dim(other)?;
        Ok(ParamVector(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + c * b)
                .collect(),
        ))
    }

    /// Cosine of the angle between two vectors, clamped to `[-1, 1]` so that
    /// rounding can never push an angle-derived quantity out of range.
    ///
    /// The denominator is computed as `√(Σaᵢ²·Σbᵢ²)`, which keeps the
    /// cosine of a vector with (a scaling of) itself exactly `±1`.
    ///
    /// Errors with [`Error::DegenerateVector`] when either norm is at or
    /// below [`DEGENERACY_EPS`].
    pub fn cosine(&self, other: &Self) -> Result<f64> {
        let dot = self.inner(other)?;
        let sq_a: f64 = self.0.iter().map(|a| a * a).sum();
        let sq_b: f64 = other.0.iter().map(|b| b * b).sum();
        if math::sqrt(sq_a) <= DEGENERACY_EPS || math::sqrt(sq_b) <= DEGENERACY_EPS {
            return Err(Error::DegenerateVector);
        }
        Ok((dot / math::sqrt(sq_a * sq_b)).clamp(-1.0, 1.0))
    }

    /// Mean of a nonempty sequence of equal-dimension vectors.
    ///
    /// Accumulates in iteration order and scales once at the end, so every
    /// caller that aggregates client updates gets bit-identical results for
    /// the same inputs in the same order.
    pub fn mean<'a, I>(vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a ParamVector>,
    {
        let mut iter = vectors.into_iter();
        let first = iter.next().ok_or(Error::Empty("vector list"))?;
        let mut sum = first.0.clone();
        let mut count = 1usize;
        for v in iter {
            if v.dim() != sum.len() {
                return Err(Error::DimensionMismatch {
                    expected: sum.len(),
                    found: v.dim(),
                });
            }
            for (s, x) in sum.iter_mut().zip(v.0.iter()) {
                *s += x;
            }
            count += 1;
        }
        let inv = 1.0 / count as f64;
        for s in sum.iter_mut() {
            *s *= inv;
        }
        Ok(ParamVector(sum))
    }
}

impl AsRef<[f64]> for ParamVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn new_rejects_empty_and_non_finite() {
        assert_eq!(ParamVector::new(vec![]), Err(Error::Empty("parameter vector")));
        assert_eq!(ParamVector::new(vec![1.0, f64::NAN]), Err(Error::NonFinite));
        assert_eq!(
            ParamVector::new(vec![f64::INFINITY]),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn inner_examples() {
        assert_eq!(pv(&[1.0, 0.0]).inner(&pv(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(pv(&[1.0, 2.0]).inner(&pv(&[3.0, 4.0])).unwrap(), 11.0);
        assert!(matches!(
            pv(&[1.0]).inner(&pv(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(pv(&[3.0, 4.0]).norm(), 5.0);
        assert_eq!(ParamVector::zeros(4).norm(), 0.0);
    }

    #[test]
    fn scale_examples() {
        assert_eq!(pv(&[1.0, 2.0]).scale(0.0), pv(&[0.0, 0.0]));
        assert_eq!(pv(&[1.0, 2.0]).scale(1.0), pv(&[1.0, 2.0]));
        assert_eq!(pv(&[1.0, -2.0]).scale(-2.0), pv(&[-2.0, 4.0]));
    }

    #[test]
    fn axpy_examples() {
        let a = pv(&[1.0, 1.0]);
        assert_eq!(a.axpy(1.0, &ParamVector::zeros(2)).unwrap(), a);
        assert_eq!(
            pv(&[1.0, 0.0]).axpy(2.0, &pv(&[0.0, 1.0])).unwrap(),
            pv(&[1.0, 2.0])
        );
        assert_eq!(a.axpy(-1.0, &a).unwrap(), ParamVector::zeros(2));
    }

    #[test]
    fn cosine_examples() {
        let a = pv(&[0.3, -1.2, 4.0]);
        assert_eq!(a.cosine(&a).unwrap(), 1.0);
        assert_eq!(a.cosine(&a.scale(-1.0)).unwrap(), -1.0);
        assert_eq!(pv(&[1.0, 0.0]).cosine(&pv(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(
            pv(&[0.0, 0.0]).cosine(&pv(&[1.0, 0.0])),
            Err(Error::DegenerateVector)
        );
    }

    #[test]
    fn mean_examples() {
        let a = pv(&[1.0, 0.0]);
        let b = pv(&[0.0, 1.0]);
        assert_eq!(ParamVector::mean([&a]).unwrap(), a);
        assert_eq!(ParamVector::mean([&a, &b]).unwrap(), pv(&[0.5, 0.5]));
        let copies = [&a, &a, &a];
        assert_eq!(ParamVector::mean(copies).unwrap(), a);
        assert_eq!(
            ParamVector::mean::<[&ParamVector; 0]>([]),
            Err(Error::Empty("vector list"))
        );
    }
}
