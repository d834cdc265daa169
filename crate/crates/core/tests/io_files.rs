use std::fs;
use std::path::Path;

use mahf::io::{
    parse_mesh, parse_ply, parse_signal, rgb_to_luminance, write_mesh, write_response, LuminanceWeights, MeshFormat,
    ParseOptions, ResponseFormat, SignalSource,
};
use mahf::shapes::icosphere;
use mahf::{Error, Mesh, VertexSignal};

fn data(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn formats_from_extensions() {
    assert_eq!(MeshFormat::from_path(Path::new("a/b.OFF")), Some(MeshFormat::Off));
    assert_eq!(MeshFormat::from_path(Path::new("b.obj")), Some(MeshFormat::Obj));
    assert_eq!(MeshFormat::from_path(Path::new("b.ply")), Some(MeshFormat::PlyAscii));
    assert_eq!(MeshFormat::from_path(Path::new("b.stl")), None);
    assert_eq!(ResponseFormat::from_path(Path::new("r.csv")), Some(ResponseFormat::Csv));
    assert_eq!(ResponseFormat::from_path(Path::new("r.ply")), Some(ResponseFormat::PlyAscii));
}

#[test]
fn every_format_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = icosphere::<f64>(1);
    for (ext, fmt) in [("off", MeshFormat::Off), ("obj", MeshFormat::Obj), ("ply", MeshFormat::PlyAscii)] {
        let path = dir.path().join(format!("m.{ext}"));
        write_mesh(&path, &mesh, fmt).unwrap();
        let back: Mesh<f64> = parse_mesh(&path, fmt, ParseOptions::default()).unwrap();
        assert_eq!(back, mesh, "{ext}");
    }
}

#[test]
fn response_fields_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = icosphere::<f64>(1);
    let field = VertexSignal::new("r", (0..mesh.vertex_count()).map(|i| (i as f64).sqrt() / 7.0).collect()).unwrap();
    let ply = dir.path().join("r.ply");
    let csv = dir.path().join("r.csv");
    write_response(&ply, &mesh, &field, ResponseFormat::PlyAscii).unwrap();
    write_response(&csv, &mesh, &field, ResponseFormat::Csv).unwrap();
    let a: VertexSignal<f64> = parse_signal(&ply, None, Some(mesh.vertex_count())).unwrap();
    let b: VertexSignal<f64> = parse_signal(&csv, None, Some(mesh.vertex_count())).unwrap();
    assert_eq!(a.values(), field.values());
    assert_eq!(b.values(), field.values());
    let back: Mesh<f64> = parse_mesh(&ply, MeshFormat::PlyAscii, ParseOptions::default()).unwrap();
    assert_eq!(back.vertices(), mesh.vertices());
    assert!(matches!(parse_signal::<f64>(&csv, None, Some(3)), Err(Error::LengthMismatch { .. })));
}

#[test]
fn ply_properties_and_luminance() {
    let d = parse_ply::<f64>(&data("colored_quality.ply"), ParseOptions::default()).unwrap();
    assert_eq!(d.vertex_property("quality").unwrap(), &[0.5, 1.5, -2.0, 0.0]);
    let q: VertexSignal<f64> = parse_signal(&data("colored_quality.ply"), Some(SignalSource::PlyProperty("quality")), None).unwrap();
    assert_eq!(q.len(), 4);
    assert!(matches!(
        parse_signal::<f64>(&data("colored_quality.ply"), Some(SignalSource::PlyProperty("nope")), None),
        Err(Error::MissingAttribute(_))
    ));
    let l601 = rgb_to_luminance(&d.mesh, LuminanceWeights::REC601).unwrap();
    let l709 = rgb_to_luminance(&d.mesh, LuminanceWeights::REC709).unwrap();
    assert!((l601.values()[0] - 0.299).abs() < 1e-12);
    assert!((l709.values()[1] - 0.7152).abs() < 1e-12);
    let extra = parse_ply::<f64>(&data("vertex_index_normals.ply"), ParseOptions::default()).unwrap();
    assert_eq!(extra.vertex_property("flags").unwrap(), &[7.0, 7.0, 7.0]);
    assert!(extra.mesh.normals().is_some());
}

#[test]
fn missing_files_are_io_errors() {
    let err = parse_mesh::<f64>(Path::new("/nonexistent/x.off"), MeshFormat::Off, ParseOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.is_input_error());
    let err = parse_signal::<f64>(Path::new("/nonexistent/s.csv"), None, None).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/s.csv"));
}

#[test]
fn quads_need_triangulation() {
    let p = data("square_quads.off");
    assert!(matches!(parse_mesh::<f64>(&p, MeshFormat::Off, ParseOptions::default()), Err(Error::NonTriangleFace { .. })));
    let m: Mesh<f64> = parse_mesh(&p, MeshFormat::Off, ParseOptions { triangulate: true }).unwrap();
    assert_eq!(m.face_count(), 4);
    assert!(fs::metadata(&p).unwrap().len() > 0);
}
