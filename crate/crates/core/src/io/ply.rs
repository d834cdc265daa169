use std::io::Write;

use super::off::push_polygon;
use super::{Mesh, ParseOptions, QUALITY_PROPERTY};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// A parsed PLY file: the mesh plus every other scalar vertex property.
#[derive(Debug, Clone)]
pub struct PlyData<T> {
    pub mesh: Mesh<T>,
    pub vertex_properties: Vec<(String, Vec<T>)>,
}

impl<T> PlyData<T> {
    pub fn vertex_property(&self, name: &str) -> Option<&[T]> {
        self.vertex_properties
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ScalarKind {
    Int,
    Float,
}

fn scalar_kind(name: &str) -> Option<ScalarKind> {
    match name {
        "char" | "uchar" | "short" | "ushort" | "int" | "uint" | "int8" | "uint8" | "int16" | "uint16"
        | "int32" | "uint32" => Some(ScalarKind::Int),
        "float" | "double" | "float32" | "float64" => Some(ScalarKind::Float),
        _ => None,
    }
}

#[derive(Debug)]
enum Property {
    Scalar { name: String, kind: ScalarKind },
    List { name: String },
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

fn parse_header(text: &str) -> Result<(Vec<Element>, usize)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::MalformedHeader { line: 1, msg: "missing 'ply' magic".into() }),
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut saw_format = false;
    for (i, raw) in lines {
        let line = i + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let bad = |msg: &str| Error::MalformedHeader { line, msg: msg.to_string() };
        match toks.first().copied() {
            Some("format") => {
                match toks.get(1).copied() {
                    Some("ascii") => {}
                    Some(f @ ("binary_little_endian" | "binary_big_endian")) => {
                        return Err(Error::UnsupportedFormat(format!("{f} PLY; only ASCII PLY is supported")))
                    }
                    _ => return Err(bad("unknown PLY format")),
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                if toks.len() != 3 {
                    return Err(bad("element needs a name and a count"));
                }
                let count = toks[2].parse().map_err(|_| bad("bad element count"))?;
                elements.push(Element { name: toks[1].to_string(), count, props: Vec::new() });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| bad("property before any element"))?;
                if toks.get(1) == Some(&"list") {
                    if toks.len() != 5 || scalar_kind(toks[2]).is_none() || scalar_kind(toks[3]).is_none() {
                        return Err(bad("malformed list property"));
                    }
                    el.props.push(Property::List { name: toks[4].to_string() });
                } else {
                    if toks.len() != 3 {
                        return Err(bad("malformed property"));
                    }
                    let kind = scalar_kind(toks[1]).ok_or_else(|| bad("unknown property type"))?;
                    el.props.push(Property::Scalar { name: toks[2].to_string(), kind });
                }
            }
            Some("end_header") => {
                if !saw_format {
                    return Err(bad("missing format line"));
                }
                return Ok((elements, line));
            }
            Some(other) => return Err(bad(&format!("unexpected header keyword {other:?}"))),
        }
    }
    Err(Error::MalformedHeader { line: text.lines().count(), msg: "missing end_header".into() })
}

struct Tokens<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, skip_lines: usize) -> Self {
        let it = text
            .lines()
            .enumerate()
            .skip(skip_lines)
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)));
        Self { inner: Box::new(it), last_line: skip_lines }
    }

    fn next_f64(&mut self, what: &'static str, declared: usize, found: usize) -> Result<f64> {
        let (line, tok) = self
            .inner
            .next()
            .ok_or(Error::CountMismatch { what, declared, found })?;
        self.last_line = line;
        tok.parse::<f64>()
            .map_err(|_| Error::NonNumeric { line, token: tok.to_string() })
    }
}

fn element_label(name: &str) -> &'static str {
    match name {
        "vertex" => "PLY vertex element",
        "face" => "PLY face element",
        _ => "PLY element",
    }
}

pub(super) fn parse<T: Real>(text: &str, opts: ParseOptions) -> Result<PlyData<T>> {
    let (elements, header_lines) = parse_header(text)?;
    let mut toks = Tokens::new(text, header_lines);

    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut normals: Vec<Vec3<T>> = Vec::new();
    let mut colors: Vec<[T; 3]> = Vec::new();
    let mut extra: Vec<(String, Vec<T>)> = Vec::new();
    let mut polys: Vec<Vec<i64>> = Vec::new();
    let mut seen_vertex = false;

    for el in &elements {
        let what = element_label(&el.name);
        match el.name.as_str() {
            "vertex" => {
                seen_vertex = true;
                let col = |n: &str| {
                    el.props.iter().position(|p| matches!(p, Property::Scalar { name, .. } if name == n))
                };
                let (ix, iy, iz) = match (col("x"), col("y"), col("z")) {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    _ => return Err(Error::MalformedHeader { line: header_lines, msg: "vertex lacks x/y/z".into() }),
                };
                let inormal = match (col("nx"), col("ny"), col("nz")) {
                    (Some(a), Some(b), Some(c)) => Some([a, b, c]),
                    _ => None,
                };
                let icolor = match (col("red"), col("green"), col("blue")) {
                    (Some(a), Some(b), Some(c)) => Some([a, b, c]),
                    _ => None,
                };
                let reserved: Vec<usize> = [Some([ix, iy, iz]), inormal, icolor]
                    .into_iter()
                    .flatten()
                    .flatten()
                    .collect();
                let extra_cols: Vec<usize> = (0..el.props.len())
                    .filter(|i| !reserved.contains(i) && matches!(el.props[*i], Property::Scalar { .. }))
                    .collect();
                for &c in &extra_cols {
                    if let Property::Scalar { name, .. } = &el.props[c] {
                        extra.push((name.clone(), Vec::with_capacity(el.count)));
                    }
                }
                let mut row = vec![0.0f64; el.props.len()];
                for n in 0..el.count {
                    for (p, prop) in el.props.iter().enumerate() {
                        row[p] = match prop {
                            Property::Scalar { .. } => toks.next_f64(what, el.count, n)?,
                            Property::List { .. } => {
                                let len = toks.next_f64(what, el.count, n)? as usize;
                                for _ in 0..len {
                                    toks.next_f64(what, el.count, n)?;
                                }
                                0.0
                            }
                        };
                    }
                    vertices.push(Vec3::new(T::lit(row[ix]), T::lit(row[iy]), T::lit(row[iz])));
                    if let Some([a, b, c]) = inormal {
                        normals.push(Vec3::new(T::lit(row[a]), T::lit(row[b]), T::lit(row[c])));
                    }
                    if let Some(cols) = icolor {
                        colors.push(cols.map(|c| {
                            let integral = matches!(el.props[c], Property::Scalar { kind: ScalarKind::Int, .. });
                            T::lit(if integral { row[c] / 255.0 } else { row[c] })
                        }));
                    }
                    for (slot, &c) in extra.iter_mut().zip(&extra_cols) {
                        slot.1.push(T::lit(row[c]));
                    }
                }
            }
            "face" => {
                let list_at = el
                    .props
                    .iter()
                    .position(|p| matches!(p, Property::List { name } if name == "vertex_indices" || name == "vertex_index"))
                    .ok_or(Error::MalformedHeader {
                        line: header_lines,
                        msg: "face element lacks vertex_indices".into(),
                    })?;
                for n in 0..el.count {
                    for (p, prop) in el.props.iter().enumerate() {
                        match prop {
                            Property::Scalar { .. } => {
                                toks.next_f64(what, el.count, n)?;
                            }
                            Property::List { .. } => {
                                let len = toks.next_f64(what, el.count, n)?;
                                let mut idx = Vec::with_capacity(len as usize);
                                for _ in 0..len as usize {
                                    let v = toks.next_f64(what, el.count, n)?;
                                    if v.fract() != 0.0 {
                                        return Err(Error::NonNumeric { line: toks.last_line, token: v.to_string() });
                                    }
                                    idx.push(v as i64);
                                }
                                if p == list_at {
                                    polys.push(idx);
                                }
                            }
                        }
                    }
                }
            }
            _ => {
                for n in 0..el.count {
                    for prop in &el.props {
                        let len = toks.next_f64(what, el.count, n)?;
                        if matches!(prop, Property::List { .. }) {
                            for _ in 0..len as usize {
                                toks.next_f64(what, el.count, n)?;
                            }
                        }
                    }
                }
            }
        }
    }
    if !seen_vertex {
        return Err(Error::MalformedHeader { line: header_lines, msg: "no vertex element".into() });
    }
    if let Some((line, tok)) = toks.inner.next() {
        return Err(Error::Syntax { line, msg: format!("trailing data {tok:?} after declared elements") });
    }

    let n = vertices.len();
    let mut faces = Vec::with_capacity(polys.len());
    for (face_no, idx) in polys.iter().enumerate() {
        let poly = idx
            .iter()
            .map(|&k| {
                if k < 0 || k as usize >= n {
                    Err(Error::IndexOutOfRange { face: face_no, index: k, count: n })
                } else {
                    Ok(k as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        push_polygon(&mut faces, &poly, face_no, opts)?;
    }

    let mut mesh = Mesh::new(vertices, faces)?;
    if !normals.is_empty() {
        mesh = mesh.with_normals(normals)?;
    }
    if !colors.is_empty() {
        mesh = mesh.with_colors(colors)?;
    }
    Ok(PlyData { mesh, vertex_properties: extra })
}

pub(super) fn write<T: Real, W: Write>(w: &mut W, mesh: &Mesh<T>, quality: Option<&[T]>) -> std::io::Result<()> {
    let coord = if std::mem::size_of::<T>() > 4 { "double" } else { "float" };
    writeln!(w, "ply\nformat ascii 1.0\ncomment written by mahf")?;
    writeln!(w, "element vertex {}", mesh.vertex_count())?;
    for c in ["x", "y", "z"] {
        writeln!(w, "property {coord} {c}")?;
    }
    if mesh.normals().is_some() {
        for c in ["nx", "ny", "nz"] {
            writeln!(w, "property {coord} {c}")?;
        }
    }
    if mesh.colors().is_some() {
        for c in ["red", "green", "blue"] {
            writeln!(w, "property uchar {c}")?;
        }
    }
    if quality.is_some() {
        writeln!(w, "property {coord} {QUALITY_PROPERTY}")?;
    }
    writeln!(w, "element face {}", mesh.face_count())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;

    let mut line = String::new();
    for (i, v) in mesh.vertices().iter().enumerate() {
        use std::fmt::Write as _;
        line.clear();
        let _ = write!(line, "{} {} {}", v[0], v[1], v[2]);
        if let Some(n) = mesh.normals() {
            let _ = write!(line, " {} {} {}", n[i][0], n[i][1], n[i][2]);
        }
        if let Some(c) = mesh.colors() {
            let byte = |x: T| (x.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8;
            let _ = write!(line, " {} {} {}", byte(c[i][0]), byte(c[i][1]), byte(c[i][2]));
        }
        if let Some(q) = quality {
            let _ = write!(line, " {}", q[i]);
        }
        writeln!(w, "{line}")?;
    }
    for f in mesh.faces() {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}
