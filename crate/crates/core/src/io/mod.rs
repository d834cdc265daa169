//! Mesh and per-vertex signal files: ASCII OFF, OBJ and PLY, plus CSV signals.
//!
//! Vertex order is authoritative. Every signal read or written here is
//! positionally aligned with the vertex sequence of the mesh it belongs to.

mod csv;
mod mesh;
mod obj;
mod off;
mod ply;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use self::mesh::{Mesh, VertexSignal};
pub use self::ply::PlyData;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    PlyAscii,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "off" => Some(MeshFormat::Off),
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::PlyAscii),
            _ => None,
        }
    }
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(MeshFormat::Off),
            "obj" => Ok(MeshFormat::Obj),
            "ply" | "ply-ascii" => Ok(MeshFormat::PlyAscii),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Output layout for response fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseFormat {
    PlyAscii,
    Csv,
}

impl ResponseFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "ply" => Some(ResponseFormat::PlyAscii),
            "csv" | "txt" => Some(ResponseFormat::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Fan-triangulate polygons instead of rejecting them.
    pub triangulate: bool,
}

/// Name of the scalar vertex property carrying response fields in PLY output.
pub const QUALITY_PROPERTY: &str = "quality";

fn read_text(path: &Path) -> Result<String> {
    fs::read(path)
        .map_err(|e| Error::io(path, e))
        .and_then(|bytes| {
            String::from_utf8(bytes).map_err(|_| {
                Error::UnsupportedFormat(format!("{} is not ASCII text", path.display()))
            })
        })
}

pub fn parse_mesh<T: Real>(path: &Path, format: MeshFormat, opts: ParseOptions) -> Result<Mesh<T>> {
    let text = read_text(path)?;
    parse_mesh_str(&text, format, opts)
}

pub fn parse_mesh_str<T: Real>(text: &str, format: MeshFormat, opts: ParseOptions) -> Result<Mesh<T>> {
    match format {
        MeshFormat::Off => off::parse(text, opts),
        MeshFormat::Obj => obj::parse(text, opts),
        MeshFormat::PlyAscii => ply::parse(text, opts).map(|d| d.mesh),
    }
}

/// Parses a PLY file keeping every extra per-vertex scalar property.
pub fn parse_ply<T: Real>(path: &Path, opts: ParseOptions) -> Result<PlyData<T>> {
    ply::parse(&read_text(path)?, opts)
}

/// Where a scalar signal comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalSource<'a> {
    /// Newline separated values, optional single header line.
    Csv,
    /// A named per-vertex scalar property of a PLY file.
    PlyProperty(&'a str),
}

/// Reads a per-vertex signal. A `.ply` path defaults to its `quality` property.
///
/// When `expected_len` is given the signal length must match it.
pub fn parse_signal<T: Real>(
    path: &Path,
    source: Option<SignalSource<'_>>,
    expected_len: Option<usize>,
) -> Result<VertexSignal<T>> {
    let source = source.unwrap_or_else(|| match ResponseFormat::from_path(path) {
        Some(ResponseFormat::PlyAscii) => SignalSource::PlyProperty(QUALITY_PROPERTY),
        _ => SignalSource::Csv,
    });
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("signal")
        .to_string();
    let signal = match source {
        SignalSource::Csv => VertexSignal::new(name, csv::parse(&read_text(path)?)?)?,
        SignalSource::PlyProperty(prop) => {
            let data = parse_ply::<T>(path, ParseOptions::default())?;
            let values = data
                .vertex_property(prop)
                .ok_or(Error::MissingAttribute("requested PLY vertex property"))?
                .to_vec();
            VertexSignal::new(prop.to_string(), values)?
        }
    };
    if let Some(n) = expected_len {
        if signal.len() != n {
            return Err(Error::LengthMismatch { what: "signal", expected: n, found: signal.len() });
        }
    }
    Ok(signal)
}

pub fn parse_signal_str<T: Real>(text: &str, expected_len: Option<usize>) -> Result<VertexSignal<T>> {
    let signal = VertexSignal::new("signal", csv::parse(text)?)?;
    if let Some(n) = expected_len {
        if signal.len() != n {
            return Err(Error::LengthMismatch { what: "signal", expected: n, found: signal.len() });
        }
    }
    Ok(signal)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_mesh<T: Real>(path: &Path, mesh: &Mesh<T>, format: MeshFormat) -> Result<()> {
    let mut w = create(path)?;
    write_mesh_to(&mut w, mesh, format)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_mesh_to<T: Real, W: Write>(w: &mut W, mesh: &Mesh<T>, format: MeshFormat) -> std::io::Result<()> {
    match format {
        MeshFormat::Off => off::write(w, mesh),
        MeshFormat::Obj => obj::write(w, mesh),
        MeshFormat::PlyAscii => ply::write(w, mesh, None),
    }
}

/// Writes a response field: PLY with a `quality` vertex property, or CSV with
/// one value per vertex in vertex order.
pub fn write_response<T: Real>(
    path: &Path,
    mesh: &Mesh<T>,
    field: &VertexSignal<T>,
    format: ResponseFormat,
) -> Result<()> {
    if field.len() != mesh.vertex_count() {
        return Err(Error::LengthMismatch {
            what: "response field",
            expected: mesh.vertex_count(),
            found: field.len(),
        });
    }
    let mut w = create(path)?;
    let res = match format {
        ResponseFormat::PlyAscii => ply::write(&mut w, mesh, Some(field.values())),
        ResponseFormat::Csv => csv::write(&mut w, field.values()),
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Writes a bare field as CSV, for callers without a mesh at hand.
pub fn write_signal_csv<T: Real>(path: &Path, values: &[T]) -> Result<()> {
    let mut w = create(path)?;
    csv::write(&mut w, values)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// RGB weights used to turn per-vertex colours into a luminance signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuminanceWeights {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl LuminanceWeights {
    pub const REC601: Self = Self { r: 0.299, g: 0.587, b: 0.114 };
    pub const REC709: Self = Self { r: 0.2126, g: 0.7152, b: 0.0722 };
}

impl Default for LuminanceWeights {
    fn default() -> Self {
        Self::REC601
    }
}

pub fn rgb_to_luminance<T: Real>(mesh: &Mesh<T>, weights: LuminanceWeights) -> Result<VertexSignal<T>> {
    let colors = mesh.colors().ok_or(Error::MissingAttribute("vertex colors"))?;
    let (wr, wg, wb) = (T::lit(weights.r), T::lit(weights.g), T::lit(weights.b));
    let values = colors.iter().map(|c| wr * c[0] + wg * c[1] + wb * c[2]).collect();
    VertexSignal::new("luminance", values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::Vec3;

    fn tri() -> Mesh<f64> {
        Mesh::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn luminance_of_primaries() {
        let mesh = tri()
            .with_colors(vec![[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
            .unwrap();
        let l = rgb_to_luminance(&mesh, LuminanceWeights::REC601).unwrap();
        assert!((l.values()[0] - 1.0).abs() < 1e-15);
        assert_eq!(l.values()[1], 0.0);
        assert!((l.values()[2] - 0.299).abs() < 1e-15);
    }

    #[test]
    fn luminance_needs_colors() {
        assert!(matches!(
            rgb_to_luminance(&tri(), LuminanceWeights::default()),
            Err(Error::MissingAttribute(_))
        ));
    }

    #[test]
    fn csv_signal_lengths() {
        let s: VertexSignal<f64> = parse_signal_str("1\n1\n0\n0", Some(4)).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            parse_signal_str::<f64>("1\n1\n0", Some(4)),
            Err(Error::LengthMismatch { expected: 4, found: 3, .. })
        ));
        assert!(matches!(
            parse_signal_str::<f64>("1\nabc\n0", None),
            Err(Error::NonNumeric { line: 2, .. })
        ));
    }

    #[test]
    fn response_roundtrip_and_length_check() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = tri();
        let field = VertexSignal::new("r", vec![0.123456789012, -3.5e-7, 42.0]).unwrap();
        for (name, fmt) in [("a.ply", ResponseFormat::PlyAscii), ("a.csv", ResponseFormat::Csv)] {
            let p = dir.path().join(name);
            write_response(&p, &mesh, &field, fmt).unwrap();
            let back: VertexSignal<f64> = parse_signal(&p, None, Some(3)).unwrap();
            for (a, b) in back.values().iter().zip(field.values()) {
                assert!(((a - b) / b).abs() < 1e-9);
            }
        }
        let short = VertexSignal::new("r", vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            write_response(&dir.path().join("b.csv"), &mesh, &short, ResponseFormat::Csv),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn constant_zero_field_writes_zero_tokens() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.ply");
        let mesh = tri();
        write_response(&p, &mesh, &VertexSignal::new("z", vec![0.0; 3]).unwrap(), ResponseFormat::PlyAscii).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let body: Vec<&str> = text.split("end_header\n").nth(1).unwrap().lines().take(3).collect();
        for line in body {
            assert_eq!(line.split_whitespace().last(), Some("0"));
        }
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let mesh = tri();
        let field = VertexSignal::new("r", vec![0.0; 3]).unwrap();
        let err = write_response(Path::new("/nonexistent-dir/x.csv"), &mesh, &field, ResponseFormat::Csv);
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
