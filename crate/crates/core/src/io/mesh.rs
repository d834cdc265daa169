use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Triangle mesh or point cloud (a mesh with no faces) with optional
/// per-vertex colours and normals.
///
/// Construction validates every invariant, so a `Mesh` in hand always has
/// in-range, non-repeating face indices and attribute arrays of length N.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
    colors: Option<Vec<[T; 3]>>,
    normals: Option<Vec<Vec3<T>>>,
}

impl<T: Real> Mesh<T> {
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "vertex position", index: i });
        }
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::IndexOutOfRange { face: fi, index: v as i64, count: n });
                }
            }
            if f[0] == f[1] || f[0] == f[2] {
                return Err(Error::RepeatedIndex { face: fi, index: f[0] });
            }
            if f[1] == f[2] {
                return Err(Error::RepeatedIndex { face: fi, index: f[1] });
            }
        }
        Ok(Self { vertices, faces, colors: None, normals: None })
    }

    /// Point cloud without connectivity.
    pub fn from_points(points: Vec<Vec3<T>>) -> Result<Self> {
        Self::new(points, Vec::new())
    }

    /// Attaches RGB colours in [0, 1].
    pub fn with_colors(mut self, colors: Vec<[T; 3]>) -> Result<Self> {
        if colors.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                what: "vertex colors",
                expected: self.vertices.len(),
                found: colors.len(),
            });
        }
        if let Some(i) = colors.iter().position(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite { what: "vertex color", index: i });
        }
        self.colors = Some(colors);
        Ok(self)
    }

    /// Attaches per-vertex normals, renormalising them to unit length.
    pub fn with_normals(mut self, normals: Vec<Vec3<T>>) -> Result<Self> {
        if normals.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                what: "vertex normals",
                expected: self.vertices.len(),
                found: normals.len(),
            });
        }
        let normals = normals
            .iter()
            .enumerate()
            .map(|(i, n)| {
                n.normalized().ok_or(Error::DegenerateVertex {
                    vertex: i,
                    msg: "zero-length normal".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    #[inline]
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn colors(&self) -> Option<&[[T; 3]]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[Vec3<T>]> {
        self.normals.as_deref()
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for f in &self.faces {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.into_iter().collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edges().len() as i64 + self.face_count() as i64
    }

    pub fn total_area(&self) -> T {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                (b - a).cross(&(c - a)).norm() * T::lit(0.5)
            })
            .fold(T::zero(), |s, a| s + a)
    }
}

/// Real-valued signal sampled at mesh vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSignal<T> {
    name: String,
    values: Vec<T>,
}

impl<T: Real> VertexSignal<T> {
    pub fn new(name: impl Into<String>, values: Vec<T>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "signal", index: i });
        }
        Ok(Self { name: name.into(), values })
    }

    pub fn constant(name: impl Into<String>, n: usize, value: T) -> Self {
        Self { name: name.into(), values: vec![value; n] }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Checks alignment with a mesh of `n` vertices.
    pub fn expect_len(&self, n: usize) -> Result<()> {
        if self.values.len() == n {
            Ok(())
        } else {
            Err(Error::LengthMismatch { what: "signal", expected: n, found: self.values.len() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_faces() {
        let v = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        assert!(matches!(
            Mesh::new(v.clone(), vec![[0, 1, 3]]),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
        assert!(matches!(Mesh::new(v, vec![[0, 1, 1]]), Err(Error::RepeatedIndex { .. })));
    }

    #[test]
    fn normals_become_unit() {
        let v = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        let m = Mesh::from_points(v)
            .unwrap()
            .with_normals(vec![Vec3::new(0.0f64, 0.0, 2.0), Vec3::new(0.6, 0.8, 0.0)])
            .unwrap();
        for n in m.normals().unwrap() {
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn signal_rejects_nan() {
        assert!(VertexSignal::new("s", vec![1.0, f64::NAN]).is_err());
    }
}
