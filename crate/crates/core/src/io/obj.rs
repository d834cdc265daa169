use std::io::Write;

use super::off::{int, num, push_polygon};
use super::{Mesh, ParseOptions};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Wavefront OBJ: `v x y z [r g b]` and `f` records; everything else ignored.
pub(super) fn parse<T: Real>(text: &str, opts: ParseOptions) -> Result<Mesh<T>> {
    let mut vertices = Vec::new();
    let mut colors: Vec<[T; 3]> = Vec::new();
    let mut polys: Vec<(usize, Vec<i64>)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let rest: Vec<&str> = toks.collect();
                if rest.len() != 3 && rest.len() != 4 && rest.len() != 6 {
                    return Err(Error::Syntax {
                        line,
                        msg: format!("vertex record has {} fields", rest.len()),
                    });
                }
                vertices.push(Vec3::new(num(line, rest[0])?, num(line, rest[1])?, num(line, rest[2])?));
                if rest.len() == 6 {
                    colors.push([num(line, rest[3])?, num(line, rest[4])?, num(line, rest[5])?]);
                }
            }
            Some("f") => {
                let idx = toks
                    .map(|t| int(line, t.split('/').next().unwrap_or("")))
                    .collect::<Result<Vec<_>>>()?;
                polys.push((line, idx));
            }
            _ => {}
        }
    }

    let n = vertices.len();
    let mut faces = Vec::with_capacity(polys.len());
    for (face_no, (_, idx)) in polys.iter().enumerate() {
        let poly = idx
            .iter()
            .map(|&k| {
                // 1-based, negatives count back from the current end.
                let resolved = if k < 0 { n as i64 + k } else { k - 1 };
                if k == 0 || resolved < 0 || resolved as usize >= n {
                    Err(Error::IndexOutOfRange { face: face_no, index: k, count: n })
                } else {
                    Ok(resolved as usize)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        push_polygon(&mut faces, &poly, face_no, opts)?;
    }

    let mesh = Mesh::new(vertices, faces)?;
    if colors.is_empty() {
        Ok(mesh)
    } else if colors.len() == n {
        mesh.with_colors(colors)
    } else {
        Err(Error::CountMismatch { what: "OBJ vertex colors", declared: n, found: colors.len() })
    }
}

pub(super) fn write<T: Real, W: Write>(w: &mut W, mesh: &Mesh<T>) -> std::io::Result<()> {
    match mesh.colors() {
        Some(c) => {
            for (v, c) in mesh.vertices().iter().zip(c) {
                writeln!(w, "v {} {} {} {} {} {}", v[0], v[1], v[2], c[0], c[1], c[2])?;
            }
        }
        None => {
            for v in mesh.vertices() {
                writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
            }
        }
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}
