//! Synthetic test surfaces: icospheres, bumpy spheres, flat grids and refined cubes.
//!
//! These stand in for scanned assets so every demonstration can run from
//! generated inputs.

use std::collections::HashMap;

use crate::io::Mesh;
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Unit-radius icosphere after `level` midpoint subdivisions
/// (12, 42, 162, 642, 2562 ... vertices), outward winding.
pub fn icosphere<T: Real>(level: u32) -> Mesh<T> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let unit = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    for v in verts.iter_mut() {
        *v = unit(*v);
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(unit([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]));
                verts.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = verts.into_iter().map(|v| Vec3(v.map(T::lit))).collect();
    Mesh::new(vertices, faces).expect("icosphere construction is valid")
}

/// Icosphere level whose vertex count is `n`, if any.
pub fn icosphere_level_for(n: usize) -> Option<u32> {
    (0..8).find(|&l| 10 * 4usize.pow(l) + 2 == n)
}

/// `nx` by `ny` vertices on the z = 0 plane with the given spacing, each
/// cell split along the same diagonal, counter-clockwise seen from +z.
///
/// Vertex `(ix, iy)` has index `iy * nx + ix` and position `(ix, iy, 0) * spacing`.
pub fn flat_grid<T: Real>(nx: usize, ny: usize, spacing: T) -> Mesh<T> {
    let mut vertices = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            vertices.push(Vec3::new(T::from_count(ix) * spacing, T::from_count(iy) * spacing, T::zero()));
        }
    }
    let id = |ix: usize, iy: usize| iy * nx + ix;
    let mut faces = Vec::with_capacity(2 * nx.saturating_sub(1) * ny.saturating_sub(1));
    for iy in 0..ny.saturating_sub(1) {
        for ix in 0..nx.saturating_sub(1) {
            let (a, b, c, d) = (id(ix, iy), id(ix + 1, iy), id(ix + 1, iy + 1), id(ix, iy + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    Mesh::new(vertices, faces).expect("grid construction is valid")
}

/// Axis-aligned cube of side `side` centred at the origin, each face
/// subdivided into `n` by `n` split squares, outward winding.
pub fn refined_cube<T: Real>(n: usize, side: T) -> Mesh<T> {
    assert!(n >= 1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut lattice: Vec<[usize; 3]> = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |p: [usize; 3]| {
        *index.entry(p).or_insert_with(|| {
            lattice.push(p);
            lattice.len() - 1
        })
    };
    // (fixed axis, fixed value, u axis, v axis) with u x v pointing outward.
    let sides = [
        (0, n, 1, 2),
        (0, 0, 2, 1),
        (1, n, 2, 0),
        (1, 0, 0, 2),
        (2, n, 0, 1),
        (2, 0, 1, 0),
    ];
    for (axis, value, ua, va) in sides {
        let at = |u: usize, v: usize| {
            let mut p = [0usize; 3];
            p[axis] = value;
            p[ua] = u;
            p[va] = v;
            p
        };
        for v in 0..n {
            for u in 0..n {
                let a = vid(at(u, v));
                let b = vid(at(u + 1, v));
                let c = vid(at(u + 1, v + 1));
                let d = vid(at(u, v + 1));
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
    }
    let scale = side / T::from_count(n);
    let half = side * T::lit(0.5);
    let vertices = lattice
        .iter()
        .map(|p| Vec3(p.map(|c| T::from_count(c) * scale - half)))
        .collect();
    Mesh::new(vertices, faces).expect("cube construction is valid")
}

/// Icosphere with a smooth radial displacement of relative size
/// `amplitude`: a closed, curved, non-symmetric stand-in for scanned shapes.
pub fn bumpy_sphere<T: Real>(level: u32, amplitude: T) -> Mesh<T> {
    let base = icosphere::<T>(level);
    let vertices = base
        .vertices()
        .iter()
        .map(|v| {
            let (x, y, z) = (v.x(), v.y(), v.z());
            let bump = (T::lit(3.0) * x).sin() * (T::lit(2.0) * y + z).cos() + T::lit(0.5) * (T::lit(4.0) * z).sin();
            *v * (T::one() + amplitude * bump)
        })
        .collect();
    Mesh::new(vertices, base.faces().to_vec()).expect("displaced icosphere is valid")
}

/// Distance from `p` to the nearest edge of the centred cube of side `side`.
pub fn distance_to_cube_edge<T: Real>(p: &Vec3<T>, side: T) -> T {
    let half = side * T::lit(0.5);
    // On a face, the nearest edge is where the second-largest |coordinate| reaches half.
    let mut a = [p[0].abs(), p[1].abs(), p[2].abs()];
    a.sort_by(|x, y| y.partial_cmp(x).unwrap());
    half - a[1]
}
