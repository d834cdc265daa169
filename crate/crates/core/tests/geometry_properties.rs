use mahf::geometry::{build_frames, knn, pca_normals, vertex_areas};
use mahf::laplacian::{cotan_operator, gaussian_knn_operator, max_relative_row_sum, Sigma};
use mahf::shapes::{flat_grid, icosphere, refined_cube};
use mahf::Vec3;
use proptest::prelude::*;

fn brute_knn(points: &[Vec3<f64>], k: usize) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            let mut d: Vec<(f64, usize)> =
                (0..points.len()).filter(|&j| j != i).map(|j| ((points[j] - points[i]).norm_squared(), j)).collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d.into_iter().take(k).map(|p| p.1).collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn frames_are_orthonormal(n in prop::array::uniform3(-1.0f64..1.0)) {
        let Some(n) = Vec3::from(n).normalized() else { return Ok(()) };
        let f = build_frames(&[n]).unwrap()[0];
        prop_assert!(f.orthonormality_error() < 1e-12);
        prop_assert!((f.normal - n).norm() == 0.0);
        prop_assert!((f.x_axis.cross(&f.y_axis) - n).norm() < 1e-12);
    }

    #[test]
    fn knn_matches_brute_force(pts in prop::collection::vec(prop::array::uniform3(-10i32..10), 12..80), k in 1usize..8) {
        let pts: Vec<Vec3<f64>> = pts.iter().map(|p| Vec3::new(p[0] as f64 * 0.5, p[1] as f64 * 0.25, p[2] as f64)).collect();
        let nl = knn(&pts, k).unwrap();
        let expected = brute_knn(&pts, k);
        for (i, row) in nl.neighbors.iter().enumerate() {
            // Ties may reorder equal distances, so compare distance profiles.
            let got: Vec<f64> = row.iter().map(|&(j, _)| (pts[j] - pts[i]).norm_squared()).collect();
            let want: Vec<f64> = expected[i].iter().map(|&j| (pts[j] - pts[i]).norm_squared()).collect();
            prop_assert_eq!(got, want);
            prop_assert!(row.iter().all(|&(j, _)| j != i));
        }
    }
}

#[test]
fn pca_normals_on_sphere_point_cloud() {
    let pts: Vec<Vec3<f64>> = icosphere::<f64>(3).vertices().to_vec();
    let normals = pca_normals(&pts, 10).unwrap();
    for (p, n) in pts.iter().zip(&normals) {
        // Radial up to orientation; the propagation keeps one consistent side.
        assert!(p.dot(n).abs() > 0.99);
    }
    let outward = normals.iter().zip(&pts).filter(|(n, p)| n.dot(p) > 0.0).count();
    assert!(outward == pts.len() || outward == 0);
    assert!(pca_normals(&pts[..5], 10).is_err());
}

#[test]
fn areas_sum_to_total() {
    for mesh in [icosphere::<f64>(2), flat_grid(7, 4, 0.5), refined_cube(3, 2.0)] {
        let a = vertex_areas(&mesh).unwrap();
        assert!((a.iter().sum::<f64>() - mesh.total_area()).abs() < 1e-12 * mesh.total_area());
    }
    let cube = refined_cube::<f64>(3, 2.0);
    assert!((cube.total_area() - 24.0).abs() < 1e-12);
    assert_eq!(cube.euler_characteristic(), 2);
}

#[test]
fn operators_are_symmetric_with_zero_row_sums() {
    let sphere = icosphere::<f64>(2);
    let cot = cotan_operator(&sphere).unwrap();
    assert!(cot.stiffness().is_symmetric());
    assert!(max_relative_row_sum(cot.stiffness()) < 1e-12);
    assert_eq!(cot.clamped_cotangents(), 0);
    let knn_op = gaussian_knn_operator(sphere.vertices(), 6, Sigma::Auto).unwrap();
    assert!(knn_op.stiffness().is_symmetric());
    assert!(max_relative_row_sum(knn_op.stiffness()) < 1e-12);
    assert!(knn_op.has_identity_mass());
    let fixed = gaussian_knn_operator(sphere.vertices(), 6, Sigma::Fixed(0.3)).unwrap();
    assert!(fixed.stiffness().is_symmetric());
    assert!(gaussian_knn_operator(sphere.vertices(), 6, Sigma::Fixed(0.0)).is_err());
}

#[test]
fn grid_cotangent_is_five_point_stencil() {
    let g = flat_grid::<f64>(5, 5, 1.0);
    let op = cotan_operator(&g).unwrap();
    let centre = 2 * 5 + 2;
    let mut row: Vec<(usize, f64)> = op.stiffness().row(centre).filter(|e| e.1.abs() > 1e-12).collect();
    row.sort_by_key(|e| e.0);
    let expected = [(7, -1.0), (11, -1.0), (12, 4.0), (13, -1.0), (17, -1.0)];
    assert_eq!(row.len(), expected.len());
    for (a, b) in row.iter().zip(&expected) {
        assert_eq!(a.0, b.0);
        assert!((a.1 - b.1).abs() < 1e-12);
    }
}
