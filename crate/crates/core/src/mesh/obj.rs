//! ASCII Wavefront OBJ reading and writing (geometry only).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Point, TriangleMesh};
use crate::error::{Error, Result};

/// Reads `v` and `f` statements; polygons are fan-triangulated from their
/// first corner. Normals, texture coordinates, groups and materials are
/// skipped.
pub fn load_obj<R: BufRead>(reader: R) -> Result<TriangleMesh> {
    let mut vertices: Vec<Point> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let content = line.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        let Some(keyword) = tokens.next() else {
            continue;
        };
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        match keyword {
            "v" => {
                let coords: Vec<f64> = tokens
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(format!("bad vertex coordinate: {e}")))?;
                if coords.len() < 3 || coords.len() > 4 {
                    return Err(parse_err(format!(
                        "vertex needs 3 coordinates, found {}",
                        coords.len()
                    )));
                }
                vertices.push(Point::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let mut corners = Vec::with_capacity(4);
                for token in tokens {
                    let index_str = token.split('/').next().unwrap_or("");
                    let raw: i64 = index_str
                        .parse()
                        .map_err(|_| parse_err(format!("bad face index {token:?}")))?;
                    let resolved = match raw {
                        0 => return Err(parse_err("face index 0 is not valid in OBJ".into())),
                        r if r > 0 => (r - 1) as usize,
                        r => {
                            let back = r.unsigned_abs() as usize;
                            if back > vertices.len() {
                                return Err(Error::Structural(format!(
                                    "line {lineno}: relative face index {r} precedes the first vertex"
                                )));
                            }
                            vertices.len() - back
                        }
                    };
                    corners.push(resolved);
                }
                if corners.len() < 3 {
                    return Err(parse_err(format!(
                        "face needs at least 3 corners, found {}",
                        corners.len()
                    )));
                }
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }

    TriangleMesh::new(vertices, faces)
}

pub fn load_obj_file(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_obj(BufReader::new(file))
}

/// Writes shortest round-trip decimal coordinates and 1-based faces.
pub fn save_obj<W: Write>(mesh: &TriangleMesh, mut writer: W) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(writer, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(writer, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    writer.flush()
}

pub fn save_obj_file(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    save_obj(mesh, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
