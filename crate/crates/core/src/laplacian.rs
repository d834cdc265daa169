//! Discrete Laplace operators as a symmetric stiffness matrix plus a
//! diagonal mass, so that the operator acting on signals is `M^-1 L`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{knn, vertex_areas};
use crate::io::Mesh;
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds an `n` by `n` matrix from triplets, summing duplicates in input order.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|&(c, _)| c == j).map_or(T::zero(), |(_, v)| v)
    }

    /// `out = A x`.
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *o = s;
        }
    }

    /// `out = A X` for `X` with `b` columns stored row-major (`x[j * b + c]`).
    pub fn mul_block_into(&self, x: &[T], b: usize, out: &mut [T]) {
        for (i, o) in out.chunks_exact_mut(b).enumerate() {
            o.fill(T::zero());
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = self.vals[k];
                let c = self.cols[k];
                for (oo, &xx) in o.iter_mut().zip(&x[c * b..(c + 1) * b]) {
                    *oo += v * xx;
                }
            }
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Scales every entry by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self { vals: self.vals.iter().map(|&v| v * c).collect(), ..self.clone() }
    }
}

/// Power-iteration result for the largest generalized eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaMaxEstimate<T> {
    /// Estimate already multiplied by the 1.01 safety factor.
    pub value: T,
    pub converged: bool,
    pub iterations: usize,
}

/// Generalized Laplacian pair `(L, M)`: symmetric stiffness `L` with zero
/// row sums and positive diagonal mass `M`. Its action on signals is `M^-1 L`.
#[derive(Debug, Clone)]
pub struct SparseOperator<T> {
    stiffness: CsrMatrix<T>,
    mass: Vec<T>,
    lambda_max: LambdaMaxEstimate<T>,
    clamped_cotangents: usize,
}

impl<T: Real> SparseOperator<T> {
    /// Assembles from a stiffness matrix and mass vector, estimating `lambda_max`.
    pub fn new(stiffness: CsrMatrix<T>, mass: Vec<T>) -> Result<Self> {
        if mass.len() != stiffness.dim() {
            return Err(Error::LengthMismatch { what: "mass", expected: stiffness.dim(), found: mass.len() });
        }
        if let Some(i) = mass.iter().position(|m| !(*m > T::zero()) || !m.is_finite()) {
            return Err(Error::DegenerateVertex { vertex: i, msg: "non-positive mass".into() });
        }
        if let Some(k) = stiffness.vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "stiffness", index: k });
        }
        let mut op = Self {
            stiffness,
            mass,
            lambda_max: LambdaMaxEstimate { value: T::zero(), converged: true, iterations: 0 },
            clamped_cotangents: 0,
        };
        op.lambda_max = op.estimate_lambda_max();
        Ok(op)
    }

    /// Graph Laplacian `D - W` from undirected weighted edges with identity mass.
    /// Repeated edges add up; self loops are rejected.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, T)]) -> Result<Self> {
        let mut trip = Vec::with_capacity(edges.len() * 2);
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::VertexOutOfRange { index: a.max(b), count: n });
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("self loop at vertex {a}")));
            }
            if !w.is_finite() || w < T::zero() {
                return Err(Error::InvalidParameter(format!("edge ({a}, {b}) has invalid weight {w}")));
            }
            trip.push((a, b, -w));
            trip.push((b, a, -w));
        }
        Self::new(with_zero_row_sums(n, trip), vec![T::one(); n])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn stiffness(&self) -> &CsrMatrix<T> {
        &self.stiffness
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }

    pub fn has_identity_mass(&self) -> bool {
        self.mass.iter().all(|&m| m == T::one())
    }

    /// Cached output of [`Self::estimate_lambda_max`].
    pub fn lambda_max(&self) -> LambdaMaxEstimate<T> {
        self.lambda_max
    }

    /// Number of cotangents clamped to +-1e6 during assembly.
    pub fn clamped_cotangents(&self) -> usize {
        self.clamped_cotangents
    }

    /// `out = M^-1 L x`.
    pub fn apply_into(&self, x: &[T], out: &mut [T]) {
        self.stiffness.mul_vec_into(x, out);
        for (o, &m) in out.iter_mut().zip(&self.mass) {
            *o /= m;
        }
    }

    /// Block form of [`Self::apply_into`] over `b` row-major columns.
    pub fn apply_block_into(&self, x: &[T], b: usize, out: &mut [T]) {
        self.stiffness.mul_block_into(x, b, out);
        for (o, &m) in out.chunks_exact_mut(b).zip(&self.mass) {
            for v in o {
                *v /= m;
            }
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.apply_into(x, &mut out);
        out
    }

    /// Same operator with the stiffness scaled by `c` (eigenvalues scale by `c`).
    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(self.stiffness.scaled(c), self.mass.clone())
    }

    /// Power iteration on `M^-1/2 L M^-1/2` until the Rayleigh quotient moves
    /// less than 1e-6 relative, at most 1000 iterations. The result carries a
    /// 1.01 safety factor and is not a guaranteed upper bound.
    pub fn estimate_lambda_max(&self) -> LambdaMaxEstimate<T> {
        const MAX_ITERS: usize = 1000;
        let n = self.dim();
        if n == 0 {
            return LambdaMaxEstimate { value: T::zero(), converged: true, iterations: 0 };
        }
        let inv_sqrt_m: Vec<T> = self.mass.iter().map(|m| T::one() / m.sqrt()).collect();
        let mut x: Vec<T> = (0..n).map(|i| T::lit(pseudo_random(i as u64))).collect();
        let mut tmp = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let norm = |v: &[T]| v.iter().fold(T::zero(), |s, &a| s + a * a).sqrt();
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut lambda = T::zero();
        let tol = T::lit(1e-6);
        for it in 1..=MAX_ITERS {
            for i in 0..n {
                tmp[i] = x[i] * inv_sqrt_m[i];
            }
            self.stiffness.mul_vec_into(&tmp, &mut y);
            for i in 0..n {
                y[i] *= inv_sqrt_m[i];
            }
            let rq = x.iter().zip(&y).fold(T::zero(), |s, (&a, &b)| s + a * b);
            let ny = norm(&y);
            if !(ny > T::zero()) {
                return LambdaMaxEstimate { value: T::zero(), converged: true, iterations: it };
            }
            let done = it > 1 && (rq - lambda).abs() <= tol * rq.abs();
            lambda = rq;
            if done {
                return LambdaMaxEstimate { value: lambda * T::lit(1.01), converged: true, iterations: it };
            }
            for i in 0..n {
                x[i] = y[i] / ny;
            }
        }
        log::warn!("lambda_max power iteration did not converge in {MAX_ITERS} iterations");
        LambdaMaxEstimate { value: lambda * T::lit(1.01), converged: false, iterations: MAX_ITERS }
    }

    /// Writes the stiffness in Matrix Market coordinate format (lower triangle).
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let lower: Vec<(usize, usize, T)> = (0..self.dim())
            .flat_map(|i| self.stiffness.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
            .collect();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.dim(), self.dim(), lower.len())?;
        for (i, j, v) in lower {
            writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
        }
        Ok(())
    }

    /// Writes the diagonal mass in Matrix Market coordinate format.
    pub fn write_mass_matrix_market<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.dim(), self.dim(), self.dim())?;
        for (i, m) in self.mass.iter().enumerate() {
            writeln!(w, "{} {} {}", i + 1, i + 1, m)?;
        }
        Ok(())
    }
}

/// Deterministic start vector entries in [-1, 1] (splitmix64).
fn pseudo_random(i: u64) -> f64 {
    let mut z = i.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Appends diagonal entries equal to minus the row's off-diagonal sum.
fn with_zero_row_sums<T: Real>(n: usize, offdiag: Vec<(usize, usize, T)>) -> CsrMatrix<T> {
    let merged = CsrMatrix::from_triplets(n, offdiag);
    let mut trip: Vec<(usize, usize, T)> = Vec::with_capacity(merged.nnz() + n);
    for i in 0..n {
        let mut diag = T::zero();
        for (j, v) in merged.row(i) {
            trip.push((i, j, v));
            diag -= v;
        }
        trip.push((i, i, diag));
    }
    CsrMatrix::from_triplets(n, trip)
}

/// Largest cotangent magnitude kept during assembly.
pub const COTANGENT_CLAMP: f64 = 1e6;

/// Cotangent Laplacian: off-diagonal stiffness `-(cot a + cot b) / 2` (a single
/// cotangent on boundary edges), zero row sums, barycentric lumped mass.
pub fn cotan_operator<T: Real>(mesh: &Mesh<T>) -> Result<SparseOperator<T>> {
    let n = mesh.vertex_count();
    let p = mesh.vertices();
    let mut edge_faces: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    let mut trip = Vec::with_capacity(mesh.face_count() * 6);
    let clamp = T::lit(COTANGENT_CLAMP);
    let half = T::lit(0.5);
    let mut clamped = 0usize;
    for (fi, f) in mesh.faces().iter().enumerate() {
        for corner in 0..3 {
            let (c, a, b) = (f[corner], f[(corner + 1) % 3], f[(corner + 2) % 3]);
            let cnt = edge_faces.entry((a.min(b), a.max(b))).or_insert(0);
            *cnt += 1;
            if *cnt > 2 {
                return Err(Error::NonManifoldEdge { a: a.min(b), b: a.max(b) });
            }
            let (u, v): (Vec3<T>, Vec3<T>) = (p[a] - p[c], p[b] - p[c]);
            let cross = u.cross(&v).norm();
            let mut cot = u.dot(&v) / cross;
            if !cot.is_finite() {
                return Err(Error::DegenerateFace { face: fi });
            }
            if cot.abs() > clamp {
                cot = clamp * cot.signum();
                clamped += 1;
            }
            let w = cot * half;
            trip.push((a, b, -w));
            trip.push((b, a, -w));
        }
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} cotangent weights to +-{COTANGENT_CLAMP}");
    }
    let mass = vertex_areas(mesh)?;
    let mut op = SparseOperator::new(with_zero_row_sums(n, trip), mass)?;
    op.clamped_cotangents = clamped;
    Ok(op)
}

/// Kernel width for [`gaussian_knn_operator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma<T> {
    /// Mean distance to the k-th neighbour.
    Auto,
    Fixed(T),
}

/// Point-cloud Laplacian: `w_ij = exp(-|p_i - p_j|^2 / (2 sigma^2))` over kNN
/// pairs, symmetrized by taking the larger of the two directed weights;
/// identity mass.
pub fn gaussian_knn_operator<T: Real>(points: &[Vec3<T>], k: usize, sigma: Sigma<T>) -> Result<SparseOperator<T>> {
    let nbrs = knn(points, k)?;
    let sigma = match sigma {
        Sigma::Fixed(s) if s > T::zero() && s.is_finite() => s,
        Sigma::Fixed(s) => return Err(Error::InvalidParameter(format!("sigma must be positive, got {s}"))),
        Sigma::Auto => {
            let mean = nbrs.neighbors.iter().map(|l| l[k - 1].1).fold(T::zero(), |a, b| a + b)
                / T::from_count(points.len());
            if !(mean > T::zero()) {
                return Err(Error::InvalidParameter("automatic sigma is zero (coincident points)".into()));
            }
            mean
        }
    };
    let two_s2 = T::lit(2.0) * sigma * sigma;
    let mut weights: BTreeMap<(usize, usize), T> = BTreeMap::new();
    for (i, list) in nbrs.neighbors.iter().enumerate() {
        for &(j, d) in list {
            let w = (-(d * d) / two_s2).exp();
            let e = weights.entry((i.min(j), i.max(j))).or_insert(T::zero());
            *e = e.max(w);
        }
    }
    let edges: Vec<(usize, usize, T)> = weights.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    SparseOperator::from_weighted_edges(points.len(), &edges)
}

/// Row-sum residual relative to the row's absolute sum, maximised over rows.
pub fn max_relative_row_sum<T: Real>(m: &CsrMatrix<T>) -> T {
    (0..m.dim())
        .into_par_iter()
        .map(|i| {
            let (s, a) = m.row(i).fold((T::zero(), T::zero()), |(s, a), (_, v)| (s + v, a + v.abs()));
            if a > T::zero() { s.abs() / a } else { T::zero() }
        })
        .reduce(T::zero, |a, b| a.max(b))
}
