//! Per-vertex geometry: normals, lumped areas, tangent frames and exact kNN.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::Mesh;
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Orthonormal right-handed frame `(x_axis, y_axis, normal)` at a vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame<T> {
    pub origin: usize,
    pub normal: Vec3<T>,
    pub x_axis: Vec3<T>,
    pub y_axis: Vec3<T>,
}

impl<T: Real> LocalFrame<T> {
    /// Same frame with the tangent axes turned by `phi` about the normal.
    pub fn rotated(&self, phi: T) -> Self {
        let (s, c) = phi.sin_cos();
        let x_axis = self.x_axis * c + self.y_axis * s;
        let y_axis = self.normal.cross(&x_axis);
        Self { x_axis, y_axis, ..*self }
    }

    /// Largest deviation from orthonormality / right-handedness.
    pub fn orthonormality_error(&self) -> T {
        let (x, y, n) = (self.x_axis, self.y_axis, self.normal);
        let mut e = x.dot(&y).abs().max(x.dot(&n).abs()).max(y.dot(&n).abs());
        for v in [x, y, n] {
            e = e.max((v.norm() - T::one()).abs());
        }
        let c = x.cross(&y) - n;
        e.max(c.norm())
    }
}

/// For each point, its `k` nearest other points as `(index, distance)`,
/// sorted by distance then index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList<T> {
    pub neighbors: Vec<Vec<(usize, T)>>,
}

impl<T: Real> NeighborList<T> {
    pub fn k(&self) -> usize {
        self.neighbors.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Vertex normals: the mesh's own when present, otherwise estimated.
pub fn vertex_normals<T: Real>(mesh: &Mesh<T>) -> Result<Vec<Vec3<T>>> {
    match mesh.normals() {
        Some(n) => Ok(n.to_vec()),
        None => estimate_vertex_normals(mesh),
    }
}

/// Area-weighted average of incident face normals, accumulated in face order.
pub fn estimate_vertex_normals<T: Real>(mesh: &Mesh<T>) -> Result<Vec<Vec3<T>>> {
    let p = mesh.vertices();
    let mut acc = vec![Vec3::zero(); p.len()];
    let mut touched = vec![false; p.len()];
    for f in mesh.faces() {
        // |cross| is twice the area, so the raw cross product is already area weighted.
        let n = (p[f[1]] - p[f[0]]).cross(&(p[f[2]] - p[f[0]]));
        for &v in f {
            acc[v] += n;
            touched[v] = true;
        }
    }
    acc.iter()
        .enumerate()
        .map(|(i, a)| {
            if !touched[i] {
                return Err(Error::DegenerateVertex { vertex: i, msg: "isolated vertex has no normal".into() });
            }
            let scale = mesh.faces().len().max(1);
            let tol = T::epsilon() * T::from_count(scale);
            match a.normalized() {
                Some(n) if a.norm() > tol * bbox_scale(p).powi(2) => Ok(n),
                _ => Err(Error::DegenerateVertex { vertex: i, msg: "incident face normals cancel".into() }),
            }
        })
        .collect()
}

fn bbox_scale<T: Real>(p: &[Vec3<T>]) -> T {
    let mut lo = [T::infinity(); 3];
    let mut hi = [T::neg_infinity(); 3];
    for v in p {
        for c in 0..3 {
            lo[c] = lo[c].min(v[c]);
            hi[c] = hi[c].max(v[c]);
        }
    }
    (0..3).fold(T::zero(), |m, c| m.max(hi[c] - lo[c])).max(T::min_positive_value())
}

/// Point-cloud normals from local PCA over each point and its `k` nearest
/// neighbours, oriented consistently by breadth-first propagation over the
/// kNN graph starting at the highest point (whose normal is made to point up).
pub fn pca_normals<T: Real>(points: &[Vec3<T>], k: usize) -> Result<Vec<Vec3<T>>> {
    let n = points.len();
    if k < 3 || n <= k {
        return Err(Error::InvalidParameter(format!("PCA normals need N > k >= 3 (N = {n}, k = {k})")));
    }
    let nbrs = knn(points, k)?;
    let mut normals: Vec<Vec3<T>> = nbrs
        .neighbors
        .par_iter()
        .enumerate()
        .map(|(i, list)| {
            let distinct = list.iter().filter(|(_, d)| *d > T::zero()).count();
            if distinct < k {
                return Err(Error::DegenerateVertex {
                    vertex: i,
                    msg: format!("only {distinct} distinct neighbours, need {k}"),
                });
            }
            let pts = std::iter::once(points[i]).chain(list.iter().map(|&(j, _)| points[j]));
            let inv = T::one() / T::from_count(k + 1);
            let centroid = pts.clone().fold(Vec3::zero(), |s, q| s + q) * inv;
            let mut cov = [[T::zero(); 3]; 3];
            for q in pts {
                let d = q - centroid;
                for r in 0..3 {
                    for c in 0..3 {
                        cov[r][c] += d[r] * d[c];
                    }
                }
            }
            Ok(smallest_eigenvector(cov))
        })
        .collect::<Result<_>>()?;

    // Undirected kNN graph for propagation.
    let mut adj = vec![Vec::new(); n];
    for (i, list) in nbrs.neighbors.iter().enumerate() {
        for &(j, _) in list {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Highest z first, lower index on ties.
    order.sort_by(|&a, &b| points[b].z().partial_cmp(&points[a].z()).unwrap().then(a.cmp(&b)));
    let mut visited = vec![false; n];
    let mut queue = VecDeque::new();
    for &seed in &order {
        if visited[seed] {
            continue;
        }
        if normals[seed].z() < T::zero() {
            normals[seed] = -normals[seed];
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !visited[j] {
                    if normals[j].dot(&normals[i]) < T::zero() {
                        normals[j] = -normals[j];
                    }
                    visited[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(normals)
}

/// Unit eigenvector of the smallest eigenvalue of a symmetric 3x3 matrix (cyclic Jacobi).
pub(crate) fn smallest_eigenvector<T: Real>(mut a: [[T; 3]; 3]) -> Vec3<T> {
    let mut v = [[T::zero(); 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    for _sweep in 0..50 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        let diag = a[0][0].abs() + a[1][1].abs() + a[2][2].abs();
        if off <= T::epsilon() * diag || off == T::zero() {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let m = (0..3)
        .min_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap())
        .unwrap();
    Vec3::new(v[0][m], v[1][m], v[2][m]).normalized().unwrap_or(Vec3::axis(2))
}

/// Barycentric lumped vertex areas: a third of each incident face's area.
pub fn vertex_areas<T: Real>(mesh: &Mesh<T>) -> Result<Vec<T>> {
    let p = mesh.vertices();
    let third = T::one() / T::lit(3.0);
    let mut areas = vec![T::zero(); p.len()];
    for f in mesh.faces() {
        let a = (p[f[1]] - p[f[0]]).cross(&(p[f[2]] - p[f[0]])).norm() * T::lit(0.5);
        for &v in f {
            areas[v] += a * third;
        }
    }
    if let Some(i) = areas.iter().position(|a| !(*a > T::zero())) {
        return Err(Error::DegenerateVertex { vertex: i, msg: "zero incident area".into() });
    }
    Ok(areas)
}

/// Deterministic tangent frames: the global axis least aligned with the
/// normal (ties go to x, then y, then z) is projected onto the tangent plane.
pub fn build_frames<T: Real>(normals: &[Vec3<T>]) -> Result<Vec<LocalFrame<T>>> {
    let tol = T::lit(1e-6).max(T::epsilon() * T::lit(16.0));
    normals
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            if !n.is_finite() || (n.norm() - T::one()).abs() > tol {
                return Err(Error::InvalidParameter(format!("normal {i} is not unit length")));
            }
            let mut best = 0;
            for c in 1..3 {
                if n[c].abs() < n[best].abs() {
                    best = c;
                }
            }
            let a = Vec3::axis(best);
            let x_axis = (a - n * a.dot(&n))
                .normalized()
                .expect("least aligned axis is never parallel to a unit normal");
            let y_axis = n.cross(&x_axis);
            Ok(LocalFrame { origin: i, normal: n, x_axis, y_axis })
        })
        .collect()
}

/// Above this size `knn` switches from the exact scan to a uniform grid.
pub const KNN_SCAN_LIMIT: usize = 5000;

/// Exact k nearest neighbours, self excluded, ties broken by lower index.
pub fn knn<T: Real>(points: &[Vec3<T>], k: usize) -> Result<NeighborList<T>> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("kNN needs N > k >= 1 (N = {n}, k = {k})")));
    }
    if n <= KNN_SCAN_LIMIT {
        Ok(knn_scan(points, k))
    } else {
        Ok(knn_grid(points, k))
    }
}

fn by_dist_then_index<T: Real>(a: &(T, usize), b: &(T, usize)) -> std::cmp::Ordering {
    a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
}

fn finish<T: Real>(mut cand: Vec<(T, usize)>, k: usize) -> Vec<(usize, T)> {
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, by_dist_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_dist_then_index);
    cand.into_iter().map(|(d2, j)| (j, d2.sqrt())).collect()
}

pub(crate) fn knn_scan<T: Real>(points: &[Vec3<T>], k: usize) -> NeighborList<T> {
    let neighbors = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let cand: Vec<(T, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| ((*q - points[i]).norm_squared(), j))
                .collect();
            finish(cand, k)
        })
        .collect();
    NeighborList { neighbors }
}

pub(crate) fn knn_grid<T: Real>(points: &[Vec3<T>], k: usize) -> NeighborList<T> {
    let n = points.len();
    let mut lo = [T::infinity(); 3];
    let mut hi = [T::neg_infinity(); 3];
    for p in points {
        for c in 0..3 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let extent = bbox_scale(points);
    // Roughly k points per occupied cell.
    let target_cells = (n / k.max(1)).max(1) as f64;
    let h = {
        let e: Vec<f64> = (0..3).map(|c| (hi[c] - lo[c]).as_f64()).collect();
        let active: Vec<f64> = e.iter().copied().filter(|x| *x > extent.as_f64() * 1e-9).collect();
        let measure: f64 = active.iter().product();
        let dim = active.len().max(1) as f64;
        let h = (measure / target_cells).powf(1.0 / dim);
        T::lit(if h.is_finite() && h > 0.0 { h } else { extent.as_f64() })
    };
    let dims: [usize; 3] = std::array::from_fn(|c| (((hi[c] - lo[c]) / h).floor().as_f64() as usize + 1).max(1));
    let cell_of = |p: &Vec3<T>| -> [usize; 3] {
        std::array::from_fn(|c| (((p[c] - lo[c]) / h).floor().as_f64() as usize).min(dims[c] - 1))
    };
    let flat = |c: [usize; 3]| (c[2] * dims[1] + c[1]) * dims[0] + c[0];
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
    for (i, p) in points.iter().enumerate() {
        cells[flat(cell_of(p))].push(i);
    }
    let max_r = *dims.iter().max().unwrap();

    let neighbors = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = points[i];
            let ci = cell_of(&pi);
            let mut cand: Vec<(T, usize)> = Vec::new();
            for r in 0..=max_r {
                let ri = r as isize;
                for dz in -ri..=ri {
                    for dy in -ri..=ri {
                        for dx in -ri..=ri {
                            if dx.abs().max(dy.abs()).max(dz.abs()) != ri {
                                continue;
                            }
                            let c = [ci[0] as isize + dx, ci[1] as isize + dy, ci[2] as isize + dz];
                            if (0..3).any(|a| c[a] < 0 || c[a] >= dims[a] as isize) {
                                continue;
                            }
                            for &j in &cells[flat(c.map(|v| v as usize))] {
                                if j != i {
                                    cand.push(((points[j] - pi).norm_squared(), j));
                                }
                            }
                        }
                    }
                }
                if cand.len() >= k {
                    cand.select_nth_unstable_by(k - 1, by_dist_then_index);
                    cand.truncate(k);
                    let kth = cand.iter().fold(T::zero(), |m, c| m.max(c.0));
                    // Anything beyond shell r is at least r*h away.
                    let bound = h * T::from_count(r);
                    if kth < bound * bound {
                        break;
                    }
                }
            }
            finish(cand, k)
        })
        .collect();
    NeighborList { neighbors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    #[test]
    fn axis_aligned_frames() {
        let f = build_frames(&[v(0.0, 0.0, 1.0), v(1.0, 0.0, 0.0)]).unwrap();
        assert_eq!(f[0].x_axis, v(1.0, 0.0, 0.0));
        assert_eq!(f[0].y_axis, v(0.0, 1.0, 0.0));
        assert_eq!(f[1].x_axis, v(0.0, 1.0, 0.0));
        assert_eq!(f[1].y_axis, v(0.0, 0.0, 1.0));
    }

    #[test]
    fn frames_reject_non_unit() {
        assert!(build_frames(&[v(0.0, 0.0, 2.0)]).is_err());
    }

    #[test]
    fn random_frames_are_orthonormal_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let normals: Vec<_> = (0..1000)
            .map(|_| {
                let g = v(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                g.normalized().unwrap()
            })
            .collect();
        let a = build_frames(&normals).unwrap();
        let b = build_frames(&normals).unwrap();
        assert_eq!(a, b);
        for f in &a {
            assert!(f.orthonormality_error() <= 1e-9);
        }
    }

    #[test]
    fn collinear_knn() {
        let p = [v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(3.0, 0.0, 0.0)];
        let nl = knn(&p, 1).unwrap();
        let idx: Vec<usize> = nl.neighbors.iter().map(|l| l[0].0).collect();
        assert_eq!(idx, vec![1, 0, 1]);
        assert!(knn(&p, 3).is_err());
    }

    #[test]
    fn knn_ties_prefer_lower_index() {
        let p = [v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(-1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)];
        let nl = knn(&p, 2).unwrap();
        assert_eq!(nl.neighbors[0].iter().map(|x| x.0).collect::<Vec<_>>(), vec![1, 2]);
    }

    fn brute(points: &[Vec3<f64>], k: usize) -> Vec<Vec<usize>> {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut all: Vec<(f64, usize)> = points
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(j, q)| ((*q - *p).norm(), j))
                    .collect();
                all.sort_by(|a, b| a.partial_cmp(b).unwrap());
                all.into_iter().take(k).map(|x| x.1).collect()
            })
            .collect()
    }

    #[test]
    fn knn_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p: Vec<_> = (0..200).map(|_| v(rng.gen(), rng.gen(), rng.gen())).collect();
        let nl = knn(&p, 8).unwrap();
        let got: Vec<Vec<usize>> = nl.neighbors.iter().map(|l| l.iter().map(|x| x.0).collect()).collect();
        assert_eq!(got, brute(&p, 8));
        for l in &nl.neighbors {
            assert!(l.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }

    #[test]
    fn grid_knn_equals_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // Integer lattice jitter produces many exact distance ties.
        let mut p: Vec<_> = (0..1500).map(|_| v(rng.gen(), rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 0.5)).collect();
        for i in 0..300 {
            p.push(v((i % 10) as f64 * 0.1, (i / 10 % 10) as f64 * 0.1, 0.25));
        }
        for k in [1, 6, 15] {
            assert_eq!(knn_grid(&p, k), knn_scan(&p, k));
        }
        let flat: Vec<_> = (0..900).map(|i| v((i % 30) as f64, (i / 30) as f64, 0.0)).collect();
        assert_eq!(knn_grid(&flat, 8), knn_scan(&flat, 8));
    }

    #[test]
    fn jacobi_smallest_eigenvector() {
        let e = smallest_eigenvector([[2.0f64, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!((e.z().abs() - 1.0).abs() < 1e-14);
        let e = smallest_eigenvector([[2.0f64, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.x().abs() - s).abs() < 1e-12 && (e.y().abs() - s).abs() < 1e-12);
        assert!(e.x() * e.y() < 0.0);
    }

    #[test]
    fn pca_precondition() {
        let p: Vec<_> = (0..10).map(|i| v(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(pca_normals(&p, 2), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn pca_plane_points_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p: Vec<_> = (0..300).map(|_| v(rng.gen(), rng.gen(), 0.0)).collect();
        for n in pca_normals(&p, 8).unwrap() {
            assert!((n.z() - 1.0).abs() < 1e-9, "{n:?}");
        }
    }

    #[test]
    fn triangle_areas() {
        let h = 3f64.sqrt() / 2.0;
        let m = Mesh::new(vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.5, h, 0.0)], vec![[0, 1, 2]]).unwrap();
        for a in vertex_areas(&m).unwrap() {
            assert!((a - 3f64.sqrt() / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_area_only_vertex_errors() {
        let m = Mesh::new(
            vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(2.0, 0.0, 0.0), v(0.0, 1.0, 0.0)],
            vec![[0, 1, 3], [0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(vertex_areas(&m), Err(Error::DegenerateVertex { vertex: 2, .. })));
    }

    #[test]
    fn opposite_windings_cancel() {
        let m = Mesh::new(
            vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0), v(1.0, 1.0, 0.0)],
            vec![[0, 1, 2], [0, 2, 1]],
        )
        .unwrap();
        let err = estimate_vertex_normals(&m).unwrap_err();
        assert!(matches!(err, Error::DegenerateVertex { vertex: 0, .. }), "{err}");
    }

    #[test]
    fn given_normals_take_precedence() {
        let m = Mesh::new(vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)], vec![[0, 1, 2]])
            .unwrap()
            .with_normals(vec![v(1.0, 0.0, 0.0); 3])
            .unwrap();
        assert_eq!(vertex_normals(&m).unwrap()[0], v(1.0, 0.0, 0.0));
        assert_eq!(estimate_vertex_normals(&m).unwrap()[0], v(0.0, 0.0, 1.0));
    }
}
