//! Piecewise-constant fields on a mesh: conductivities, log-conductivities
//! and perturbation directions.

use crate::error::{Error, Result};
use crate::mesh::DiskMesh;
use crate::scalar::Real;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// A conductivity σ or a perturbation direction.
    Plain,
    /// A log-conductivity κ; the conductivity is `e^κ`.
    Log,
}

/// One value per mesh triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityField<T> {
    values: Vec<T>,
    kind: FieldKind,
}

impl<T: Real> ConductivityField<T> {
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("nonfinite field value".into()));
        }
        Ok(ConductivityField {
            values,
            kind: FieldKind::Plain,
        })
    }

    pub fn constant(mesh: &DiskMesh<T>, value: T) -> Self {
        ConductivityField {
            values: vec![value; mesh.n_triangles()],
            kind: FieldKind::Plain,
        }
    }

    /// Samples `f` at triangle centroids.
    pub fn from_fn(mesh: &DiskMesh<T>, f: impl Fn(T, T) -> T) -> Self {
        ConductivityField {
            values: (0..mesh.n_triangles())
                .map(|t| {
                    let [x, y] = mesh.centroid(t);
                    f(x, y)
                })
                .collect(),
            kind: FieldKind::Plain,
        }
    }

    /// Marks the field as a log-conductivity.
    pub fn into_log(mut self) -> Self {
        self.kind = FieldKind::Log;
        self
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().reduce(|a, v| a.min(v)).unwrap_or(T::zero())
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().reduce(|a, v| a.max(v)).unwrap_or(T::zero())
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    /// Strictly positive everywhere.
    pub fn is_admissible(&self) -> bool {
        !self.values.is_empty() && self.min() > T::zero()
    }

    /// The conductivity this field represents: `e^κ` for log fields, itself otherwise.
    pub fn conductivity(&self) -> Self {
        match self.kind {
            FieldKind::Log => self.map(|v| v.exp()),
            FieldKind::Plain => self.clone(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        ConductivityField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            kind: FieldKind::Plain,
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "fields of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(ConductivityField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            kind: FieldKind::Plain,
        })
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.map(|v| v * c);
        out.kind = self.kind;
        out
    }

    /// `self + t·other`, keeping the kind of `self`.
    pub fn axpy(&self, t: T, other: &Self) -> Result<Self> {
        let mut out = self.zip_with(other, |a, b| a + t * b)?;
        out.kind = self.kind;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self ≤ other` on every triangle.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.len() == other.len() && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    /// First 16 hex digits of the SHA-256 of the little-endian f64 values.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.values {
            h.update(v.as_f64().to_le_bytes());
        }
        let mut s = String::with_capacity(16);
        for b in &h.finalize()[..8] {
            let _ = write!(s, "{b:02x}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_disk_mesh;

    #[test]
    fn constant_and_bounds() {
        let mesh = build_disk_mesh::<f64>(1).unwrap();
        let s = ConductivityField::constant(&mesh, 2.0);
        assert_eq!(s.len(), mesh.n_triangles());
        assert_eq!(s.min(), 2.0);
        assert_eq!(s.max(), 2.0);
        assert!(s.is_admissible());
        assert!(!s.scaled(-1.0).is_admissible());
        assert!(!ConductivityField::constant(&mesh, 0.0).is_admissible());
    }

    #[test]
    fn log_field_exponentiates() {
        let mesh = build_disk_mesh::<f64>(0).unwrap();
        let k = ConductivityField::constant(&mesh, 2f64.ln()).into_log();
        let s = k.conductivity();
        assert!(s.values().iter().all(|&v| (v - 2.0).abs() < 1e-15));
        assert_eq!(s.kind(), FieldKind::Plain);
    }

    #[test]
    fn ordering_and_arithmetic() {
        let a = ConductivityField::from_values(vec![1.0, 2.0]).unwrap();
        let b = ConductivityField::from_values(vec![1.0, 3.0]).unwrap();
        assert!(a.dominated_by(&b));
        assert!(!b.dominated_by(&a));
        assert_eq!(b.sub(&a).unwrap().values(), &[0.0, 1.0]);
        assert_eq!(a.axpy(2.0, &b).unwrap().values(), &[3.0, 8.0]);
        let c = ConductivityField::from_values(vec![1.0]).unwrap();
        assert!(a.sub(&c).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ConductivityField::from_values(vec![1.0, 2.0]).unwrap();
        let b = ConductivityField::from_values(vec![1.0, 2.0 + 1e-15]).unwrap();
        assert_eq!(a.hash_hex(), a.clone().hash_hex());
        assert_eq!(a.hash_hex().len(), 16);
        assert_ne!(a.hash_hex(), b.hash_hex());
    }

    #[test]
    fn rejects_nan() {
        assert!(ConductivityField::from_values(vec![f64::NAN]).is_err());
    }
}
