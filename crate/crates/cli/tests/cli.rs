use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn mahf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mahf")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = mahf(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_csv(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.trim().parse().ok())
        .collect()
}

/// 20x20 grid plus a two-level signal.
fn grid_case(dir: &TempDir) -> (PathBuf, PathBuf) {
    let (mesh, sig) = (p(dir, "grid.off"), p(dir, "levels.csv"));
    ok(&["generate", "--shape", "grid", "--nx", "20", "--ny", "20", "--signal", "two-level", "--out", s(&mesh), "--signal-out", s(&sig)]);
    (mesh, sig)
}

#[test]
fn filter_writes_one_file_per_pair_and_a_manifest() {
    let dir = TempDir::new().unwrap();
    let (mesh, sig) = grid_case(&dir);
    let out = p(&dir, "resp.csv");
    ok(&["filter", "--mesh", s(&mesh), "--signal", s(&sig), "--k", "1", "--k", "2", "--t", "5", "--t", "30", "--out", s(&out)]);
    for name in ["resp_k1_t5.csv", "resp_k2_t5.csv", "resp_k1_t30.csv", "resp_k2_t30.csv"] {
        assert_eq!(read_csv(&p(&dir, name)).len(), 400, "{name}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(p(&dir, "resp.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "filter");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["heat"]["chebyshev_order"], 50);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
    assert_eq!(manifest["operator"]["kind"], "cotangent");
    // Away from the reflecting boundary the peak lies on the step between columns 9 and 10.
    let r = read_csv(&p(&dir, "resp_k1_t5.csv"));
    let interior = |i: &usize| (5..15).contains(&(i / 20)) && (5..15).contains(&(i % 20));
    let arg = (0..r.len()).filter(interior).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap();
    assert!(matches!(arg % 20, 9 | 10), "peak at column {}", arg % 20);
}

#[test]
fn multiscale_sweep_gives_two_ply_files() {
    let dir = TempDir::new().unwrap();
    let (mesh, sig) = grid_case(&dir);
    let out = p(&dir, "resp.ply");
    ok(&["filter", "--mesh", s(&mesh), "--signal", s(&sig), "--k", "1", "--t", "30", "--t", "5", "--out", s(&out)]);
    for name in ["resp_k1_t5.ply", "resp_k1_t30.ply"] {
        let text = fs::read_to_string(p(&dir, name)).unwrap();
        assert!(text.contains("property double quality"));
    }
}

#[test]
fn missing_signal_file_exits_2() {
    let dir = TempDir::new().unwrap();
    let (mesh, _) = grid_case(&dir);
    let missing = p(&dir, "absent.csv");
    let out = mahf(&["filter", "--mesh", s(&mesh), "--signal", s(&missing), "--k", "1", "--t", "5", "--out", s(&p(&dir, "r.ply"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(mahf(&["filter", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(mahf(&[]).status.code(), Some(2));
    assert_eq!(mahf(&["--help"]).status.code(), Some(0));
}

#[test]
fn fuse_with_zero_beta_returns_a() {
    let dir = TempDir::new().unwrap();
    let (a, b, out) = (p(&dir, "a.csv"), p(&dir, "b.csv"), p(&dir, "f.csv"));
    fs::write(&a, "0.5\n1.25\n3\n").unwrap();
    fs::write(&b, "7\n8\n9\n").unwrap();
    ok(&["fuse", "--a", s(&a), "--b", s(&b), "--beta", "0", "--out", s(&out)]);
    assert_eq!(read_csv(&out), vec![0.5, 1.25, 3.0]);
    ok(&["fuse", "--a", s(&a), "--b", s(&b), "--beta", "0.5", "--out", s(&out)]);
    assert_eq!(read_csv(&out), vec![4.0, 5.25, 7.5]);
}

#[test]
fn fuse_rejects_mismatch_and_negative_beta() {
    let dir = TempDir::new().unwrap();
    let (a, b, out) = (p(&dir, "a.csv"), p(&dir, "b.csv"), p(&dir, "f.csv"));
    fs::write(&a, "1\n2\n3\n").unwrap();
    fs::write(&b, "1\n2\n").unwrap();
    assert_eq!(mahf(&["fuse", "--a", s(&a), "--b", s(&b), "--beta", "1", "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(mahf(&["fuse", "--a", s(&a), "--b", s(&a), "--beta=-1", "--out", s(&out)]).status.code(), Some(2));
}

#[test]
fn kernel_rows_at_zero_and_positive_time() {
    let dir = TempDir::new().unwrap();
    let mesh = p(&dir, "sphere.off");
    ok(&["generate", "--shape", "icosphere", "--level", "2", "--out", s(&mesh)]);
    let out = p(&dir, "k.csv");
    ok(&["kernel", "--mesh", s(&mesh), "--vertex", "7", "--t", "0", "--t", "0.05", "--t", "0.2", "--out", s(&out)]);
    let k0 = read_csv(&p(&dir, "k_v7_t0.csv"));
    assert_eq!(k0.len(), 162);
    for (j, v) in k0.iter().enumerate() {
        let expected = if j == 7 { 1.0 } else { 0.0 };
        assert!((v - expected).abs() < 1e-12, "vertex {j}: {v}");
    }
    let support = |name: &str| read_csv(&p(&dir, name)).iter().filter(|v| **v != 0.0).count();
    assert!(support("k_v7_t0.05.csv") <= support("k_v7_t0.2.csv"));
    let bad = mahf(&["kernel", "--mesh", s(&mesh), "--vertex", "162", "--t", "1", "--out", s(&out)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn runs_are_bit_identical() {
    let dir = TempDir::new().unwrap();
    let (mesh, sig) = grid_case(&dir);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = p(&dir, &format!("{run}.ply"));
        let manifest = p(&dir, "m.json");
        ok(&["filter", "--mesh", s(&mesh), "--signal", s(&sig), "--k", "2", "--t", "3", "--out", s(&out), "--manifest", s(&manifest)]);
        outputs.push(fs::read(p(&dir, &format!("{run}_k2_t3.ply"))).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn normal_variation_and_mhw_on_cube() {
    let dir = TempDir::new().unwrap();
    let mesh = p(&dir, "cube.off");
    ok(&["generate", "--shape", "cube", "--nx", "6", "--out", s(&mesh)]);
    let out = p(&dir, "nv.csv");
    ok(&["normal-variation", "--mesh", s(&mesh), "--t", "0.05", "--k", "1", "--out", s(&out)]);
    ok(&["normal-variation", "--mesh", s(&mesh), "--t", "0.05", "--baseline", "mhw", "--out", s(&out)]);
    let mahf_field = read_csv(&p(&dir, "nv_k1_t0.05.csv"));
    let mhw_field = read_csv(&p(&dir, "nv_mhw_t0.05.csv"));
    assert_eq!(mahf_field.len(), 6 * 36 + 2);
    assert_eq!(mhw_field.len(), mahf_field.len());
    assert!(mahf_field.iter().all(|v| *v >= 0.0) && mahf_field.iter().any(|v| *v > 0.0));
}

#[test]
fn flat_grid_normal_variation_is_near_zero_inside() {
    let dir = TempDir::new().unwrap();
    let mesh = p(&dir, "grid.off");
    ok(&["generate", "--shape", "grid", "--nx", "16", "--ny", "16", "--out", s(&mesh)]);
    let out = p(&dir, "nv.csv");
    ok(&["normal-variation", "--mesh", s(&mesh), "--t", "1", "--out", s(&out)]);
    let r = read_csv(&p(&dir, "nv_k1_t1.csv"));
    // Margin 5 exceeds sqrt(t ln 1e6), where the reflected boundary contribution has decayed.
    for (i, v) in r.iter().enumerate() {
        if (5..11).contains(&(i / 16)) && (5..11).contains(&(i % 16)) {
            assert!(v.abs() < 1e-6, "vertex {i}: {v}");
        }
    }
}

#[test]
fn luminance_and_ply_property_signals() {
    let dir = TempDir::new().unwrap();
    let mesh = p(&dir, "bumpy.ply");
    ok(&["generate", "--shape", "bumpy-sphere", "--level", "2", "--colors", "--out", s(&mesh)]);
    let out = p(&dir, "lum.csv");
    ok(&["filter", "--mesh", s(&mesh), "--signal", "luminance", "--luma", "rec709", "--k", "1", "--t", "0.05", "--out", s(&out)]);
    assert_eq!(read_csv(&p(&dir, "lum_k1_t0.05.csv")).len(), 162);
    let missing = mahf(&["filter", "--mesh", s(&mesh), "--signal", "ply:curvature", "--k", "1", "--t", "1", "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn point_cloud_needs_knn_operator() {
    let dir = TempDir::new().unwrap();
    let cloud = p(&dir, "cloud.off");
    let mut text = String::from("OFF\n64 0 0\n");
    for i in 0..64 {
        let (x, y) = ((i % 8) as f64, (i / 8) as f64);
        text.push_str(&format!("{x} {y} {}\n", 0.01 * (x * y).sin()));
    }
    fs::write(&cloud, text).unwrap();
    let sig = p(&dir, "s.csv");
    fs::write(&sig, (0..64).map(|i| format!("{}\n", (i % 8 >= 4) as u8)).collect::<String>()).unwrap();
    let out = p(&dir, "r.csv");
    let base = ["filter", "--mesh", s(&cloud), "--signal", s(&sig), "--k", "1", "--t", "1", "--out", s(&out)];
    assert_eq!(mahf(&base).status.code(), Some(2));
    let mut knn = base.to_vec();
    knn.extend(["--operator", "gaussian-knn", "--knn-k", "8"]);
    ok(&knn);
    let manifest = fs::read_to_string(p(&dir, "r.json")).unwrap();
    assert!(manifest.contains("\"normals\": \"pca\""));
}

#[test]
fn spectrum_and_operator_dumps() {
    let dir = TempDir::new().unwrap();
    let mesh = p(&dir, "sphere.off");
    ok(&["generate", "--shape", "icosphere", "--level", "1", "--out", s(&mesh)]);
    let spec = p(&dir, "spec.csv");
    ok(&["spectrum", "--mesh", s(&mesh), "--out", s(&spec)]);
    let lam = read_csv(&spec);
    assert_eq!(lam.len(), 42);
    assert!(lam.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(mahf(&["spectrum", "--mesh", s(&mesh), "--dense-limit", "10", "--out", s(&spec)]).status.code(), Some(2));
    let (l, m) = (p(&dir, "L.mtx"), p(&dir, "M.mtx"));
    ok(&["operator", "--mesh", s(&mesh), "--out", s(&l), "--mass-out", s(&m)]);
    assert!(fs::read_to_string(&l).unwrap().starts_with("%%MatrixMarket"));
    assert!(fs::read_to_string(&m).unwrap().starts_with("%%MatrixMarket"));
}
