use std::io::Write;

use super::{Mesh, ParseOptions};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Splits into `(line_number, tokens)` skipping blanks and `#` comments.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

pub(super) fn num<T: Real>(line: usize, tok: &str) -> Result<T> {
    tok.parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::NonNumeric { line, token: tok.to_string() })
}

pub(super) fn int(line: usize, tok: &str) -> Result<i64> {
    tok.parse::<i64>()
        .map_err(|_| Error::NonNumeric { line, token: tok.to_string() })
}

/// Appends `poly` as triangles, fanning from its first corner when allowed.
pub(super) fn push_polygon(
    faces: &mut Vec<[usize; 3]>,
    poly: &[usize],
    face_no: usize,
    opts: ParseOptions,
) -> Result<()> {
    match poly.len() {
        3 => faces.push([poly[0], poly[1], poly[2]]),
        n if n > 3 && opts.triangulate => {
            for i in 1..n - 1 {
                faces.push([poly[0], poly[i], poly[i + 1]]);
            }
        }
        n => return Err(Error::NonTriangleFace { face: face_no, sides: n }),
    }
    Ok(())
}

pub(super) fn parse<T: Real>(text: &str, opts: ParseOptions) -> Result<Mesh<T>> {
    let mut lines = content_lines(text);
    let (hline, htoks) = lines
        .next()
        .ok_or(Error::MalformedHeader { line: 1, msg: "empty file".into() })?;
    let keyword = htoks[0];
    let (has_normals, has_colors) = match keyword {
        "OFF" => (false, false),
        "COFF" => (false, true),
        "NOFF" => (true, false),
        "CNOFF" | "NCOFF" => (true, true),
        k => {
            return Err(Error::MalformedHeader {
                line: hline,
                msg: format!("expected OFF keyword, found {k:?}"),
            })
        }
    };
    // Counts may share the keyword line.
    let (cline, counts) = if htoks.len() > 1 {
        (hline, htoks[1..].to_vec())
    } else {
        lines
            .next()
            .ok_or(Error::MalformedHeader { line: hline + 1, msg: "missing counts".into() })?
    };
    if counts.len() < 2 {
        return Err(Error::MalformedHeader { line: cline, msg: "expected vertex and face counts".into() });
    }
    let parse_count = |tok: &str| {
        tok.parse::<usize>().map_err(|_| Error::MalformedHeader {
            line: cline,
            msg: format!("bad count {tok:?}"),
        })
    };
    let nv = parse_count(counts[0])?;
    let nf = parse_count(counts[1])?;

    let body: Vec<(usize, Vec<&str>)> = lines.collect();
    if body.len() < nv + nf {
        return Err(Error::CountMismatch {
            what: "OFF vertex and face lines",
            declared: nv + nf,
            found: body.len(),
        });
    }
    if body.len() > nv + nf {
        return Err(Error::Syntax {
            line: body[nv + nf].0,
            msg: format!("trailing data after {} declared elements", nv + nf),
        });
    }

    let stride = 3 + if has_normals { 3 } else { 0 };
    let mut vertices = Vec::with_capacity(nv);
    let mut normals = Vec::new();
    let mut colors = Vec::new();
    for (line, toks) in &body[..nv] {
        let need = stride + if has_colors { 3 } else { 0 };
        if toks.len() < need || (!has_colors && toks.len() != stride) {
            return Err(Error::Syntax {
                line: *line,
                msg: format!("expected {need} vertex fields, found {}", toks.len()),
            });
        }
        let f = |i: usize| num::<T>(*line, toks[i]);
        vertices.push(Vec3::new(f(0)?, f(1)?, f(2)?));
        if has_normals {
            normals.push(Vec3::new(f(3)?, f(4)?, f(5)?));
        }
        if has_colors {
            let mut c = [f(stride)?, f(stride + 1)?, f(stride + 2)?];
            // Integer colours are 0..255.
            if toks[stride..stride + 3].iter().all(|t| !t.contains('.')) {
                c = c.map(|v| v / T::lit(255.0));
            }
            colors.push(c);
        }
    }

    let mut faces = Vec::with_capacity(nf);
    for (face_no, (line, toks)) in body[nv..].iter().enumerate() {
        let sides = int(*line, toks[0])?;
        if sides < 0 || toks.len() < 1 + sides as usize {
            return Err(Error::Syntax { line: *line, msg: "face lists fewer indices than declared".into() });
        }
        let mut poly = Vec::with_capacity(sides as usize);
        for tok in &toks[1..1 + sides as usize] {
            let idx = int(*line, tok)?;
            if idx < 0 || idx as usize >= nv {
                return Err(Error::IndexOutOfRange { face: face_no, index: idx, count: nv });
            }
            poly.push(idx as usize);
        }
        push_polygon(&mut faces, &poly, face_no, opts)?;
    }

    let mut mesh = Mesh::new(vertices, faces)?;
    if has_normals {
        mesh = mesh.with_normals(normals)?;
    }
    if has_colors {
        mesh = mesh.with_colors(colors)?;
    }
    Ok(mesh)
}

pub(super) fn write<T: Real, W: Write>(w: &mut W, mesh: &Mesh<T>) -> std::io::Result<()> {
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} 0", mesh.vertex_count(), mesh.face_count())?;
    for v in mesh.vertices() {
        writeln!(w, "{} {} {}", v[0], v[1], v[2])?;
    }
    for f in mesh.faces() {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}
