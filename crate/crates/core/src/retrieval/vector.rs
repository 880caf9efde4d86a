//! Embedding vectors and the two distance functions the index supports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("cosine is undefined for a zero vector")]
    ZeroVector,
    #[error("vector component {index} is not finite")]
    NotFinite { index: usize },
    #[error("vector is empty")]
    Empty,
}

/// A finite, non-empty embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<EmbeddingVector, VectorError> {
        if values.is_empty() {
            return Err(VectorError::Empty);
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(VectorError::NotFinite { index });
            }
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = VectorError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        EmbeddingVector::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Vec<f64> {
        v.values
    }
}

fn check_dims(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<(), VectorError> {
    if u.dim() != v.dim() {
        return Err(VectorError::DimMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    Ok(())
}

/// Cosine similarity in [-1, 1].
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, VectorError> {
    check_dims(u, v)?;
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return Err(VectorError::ZeroVector);
    }
    let dot: f64 = u
        .values
        .iter()
        .zip(v.values.iter())
        .map(|(a, b)| a * b)
        .sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Euclidean distance.
pub fn l2(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, VectorError> {
    check_dims(u, v)?;
    let sum: f64 = u
        .values
        .iter()
        .zip(v.values.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec3(a: f64, b: f64, c: f64) -> EmbeddingVector {
        EmbeddingVector::new(vec![a, b, c]).unwrap()
    }

    #[test]
    fn cosine_of_parallel_vectors_is_one() {
        let u = vec3(1.0, 2.0, 3.0);
        let v = vec3(2.0, 4.0, 6.0);
        assert!((cosine(&u, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_of_orthogonal_vectors_is_zero() {
        let u = vec3(1.0, 0.0, 0.0);
        let v = vec3(0.0, 1.0, 0.0);
        assert!(cosine(&u, &v).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cosine_of_opposite_vectors_is_minus_one() {
        let u = vec3(1.0, 1.0, 0.0);
        let v = vec3(-1.0, -1.0, 0.0);
        assert!((cosine(&u, &v).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn l2_matches_hand_computation() {
        let u = vec3(1.0, 2.0, 2.0);
        let v = vec3(0.0, 0.0, 0.0);
        assert!((l2(&u, &v).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(l2(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn dim_mismatch_is_rejected() {
        let u = vec3(1.0, 2.0, 3.0);
        let v = EmbeddingVector::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            cosine(&u, &v),
            Err(VectorError::DimMismatch { left: 3, right: 2 })
        ));
        assert!(matches!(l2(&u, &v), Err(VectorError::DimMismatch { .. })));
    }

    #[test]
    fn zero_vector_has_no_cosine() {
        let u = vec3(0.0, 0.0, 0.0);
        let v = vec3(1.0, 0.0, 0.0);
        assert!(matches!(cosine(&u, &v), Err(VectorError::ZeroVector)));
    }

    #[test]
    fn non_finite_values_are_rejected_at_construction() {
        assert!(matches!(
            EmbeddingVector::new(vec![1.0, f64::NAN]),
            Err(VectorError::NotFinite { index: 1 })
        ));
        assert!(EmbeddingVector::new(vec![]).is_err());
    }
}
