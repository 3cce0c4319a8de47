//! ASCII OBJ and PLY meshes, and `.parts` label sidecars.
//!
//! A sidecar sits next to its mesh with the extension replaced by `parts`
//! (`chair.obj` -> `chair.parts`). It starts with a block of `# <id> <name>`
//! lines followed by one integer label per vertex.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hoi_core::geometry::{PartLabeledMesh, TriangleMesh};
use hoi_core::Vec3;

use crate::error::{format_error, io_error, HoiError, Result};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_error(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    fs::write(path, text).map_err(io_error(path))
}

fn parse_f64(token: Option<&str>, path: &Path, line: usize) -> Result<f64> {
    let t = token.ok_or_else(|| format_error(path, line, "missing coordinate"))?;
    t.parse().map_err(|_| format_error(path, line, format!("bad number `{t}`")))
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn obj_index(token: &str, count: usize, path: &Path, line: usize) -> Result<u32> {
    let head = token.split('/').next().unwrap_or("");
    let i: i64 = head.parse().map_err(|_| format_error(path, line, format!("bad face index `{token}`")))?;
    let resolved = if i > 0 { i - 1 } else { count as i64 + i };
    if i == 0 || resolved < 0 || resolved >= count as i64 {
        return Err(format_error(path, line, format!("face index {i} out of range")));
    }
    Ok(resolved as u32)
}

/// Parses `v` and `f` records; polygons are fan-triangulated and every
/// other record is ignored.
pub fn parse_obj(text: &str, path: &Path) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut tok = raw.split_whitespace();
        match tok.next() {
            Some("v") => {
                let x = parse_f64(tok.next(), path, line)?;
                let y = parse_f64(tok.next(), path, line)?;
                let z = parse_f64(tok.next(), path, line)?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let idx = tok.map(|t| obj_index(t, vertices.len(), path, line)).collect::<Result<Vec<_>>>()?;
                if idx.len() < 3 {
                    return Err(format_error(path, line, "face with fewer than three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(TriangleMesh::new(vertices, faces)?)
}

pub fn format_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

/// ASCII PLY with a `vertex` element carrying `x y z` and a `face` element
/// with a vertex index list. Other properties are skipped.
pub fn parse_ply(text: &str, path: &Path) -> Result<TriangleMesh> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));
    if lines.next().map(|(_, l)| l) != Some("ply") {
        return Err(format_error(path, 1, "missing `ply` magic"));
    }
    // (name, count, property names)
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    let mut ascii = false;
    let mut body_start = None;
    for (line, l) in lines.by_ref() {
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok.as_slice() {
            ["format", "ascii", ..] => ascii = true,
            ["format", other, ..] => return Err(format_error(path, line, format!("unsupported format `{other}`"))),
            ["element", name, count] => {
                let count = count.parse().map_err(|_| format_error(path, line, "bad element count"))?;
                elements.push((name.to_string(), count, Vec::new()));
            }
            ["property", .., name] => match elements.last_mut() {
                Some(e) => e.2.push(name.to_string()),
                None => return Err(format_error(path, line, "property before any element")),
            },
            ["end_header"] => {
                body_start = Some(line);
                break;
            }
            _ => {}
        }
    }
    let Some(header_end) = body_start else {
        return Err(format_error(path, 1, "missing end_header"));
    };
    if !ascii {
        return Err(format_error(path, 1, "missing `format ascii` line"));
    }
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut last = header_end;
    for (name, count, props) in &elements {
        for _ in 0..*count {
            let (line, l) = lines.next().ok_or_else(|| format_error(path, last + 1, format!("truncated `{name}` element")))?;
            last = line;
            let values: Vec<&str> = l.split_whitespace().collect();
            match name.as_str() {
                "vertex" => {
                    let at = |axis: &str| -> Result<f64> {
                        let k = props.iter().position(|p| p == axis).ok_or_else(|| {
                            format_error(path, line, format!("vertex element lacks `{axis}`"))
                        })?;
                        parse_f64(values.get(k).copied(), path, line)
                    };
                    vertices.push(Vec3::new(at("x")?, at("y")?, at("z")?));
                }
                "face" => {
                    let n: usize = values
                        .first()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| format_error(path, line, "bad face vertex count"))?;
                    if n < 3 || values.len() < n + 1 {
                        return Err(format_error(path, line, "bad face record"));
                    }
                    let idx = values[1..=n]
                        .iter()
                        .map(|t| match t.parse::<u32>() {
                            Ok(i) if (i as usize) < vertices.len() => Ok(i),
                            _ => Err(format_error(path, line, format!("bad face index `{t}`"))),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    for k in 1..n - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
    }
    Ok(TriangleMesh::new(vertices, faces)?)
}

pub fn format_ply(mesh: &TriangleMesh) -> String {
    let mut s = String::from("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", mesh.vertices().len());
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    let _ = writeln!(s, "element face {}", mesh.faces().len());
    s.push_str("property list uchar int vertex_indices\nend_header\n");
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = read_text(path)?;
    match extension(path).as_str() {
        "obj" => parse_obj(&text, path),
        "ply" => parse_ply(&text, path),
        other => Err(format_error(path, 0, format!("unknown mesh extension `{other}`"))),
    }
}

pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let text = match extension(path).as_str() {
        "ply" => format_ply(mesh),
        _ => format_obj(mesh),
    };
    write_text(path, &text)
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

pub fn parts_path(mesh_path: &Path) -> PathBuf {
    mesh_path.with_extension("parts")
}

pub fn parse_parts(text: &str, vertex_count: usize, path: &Path) -> Result<(Vec<u32>, BTreeMap<u32, String>)> {
    let mut names = BTreeMap::new();
    let mut labels = Vec::with_capacity(vertex_count);
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(header) = l.strip_prefix('#') {
            let header = header.trim();
            let (id, name) = header.split_once(char::is_whitespace).unwrap_or((header, ""));
            let id: u32 = id.parse().map_err(|_| format_error(path, line, format!("bad part id `{id}`")))?;
            if name.trim().is_empty() {
                return Err(format_error(path, line, "part without a name"));
            }
            names.insert(id, name.trim().to_string());
            continue;
        }
        labels.push(l.parse().map_err(|_| format_error(path, line, format!("bad label `{l}`")))?);
    }
    if labels.len() != vertex_count {
        return Err(format_error(path, 0, format!("{} labels for {vertex_count} vertices", labels.len())));
    }
    Ok((labels, names))
}

pub fn format_parts(mesh: &PartLabeledMesh) -> String {
    let mut s = String::new();
    for (id, name) in mesh.part_names() {
        let _ = writeln!(s, "# {id} {name}");
    }
    for l in mesh.part_of_vertex() {
        let _ = writeln!(s, "{l}");
    }
    s
}

/// Mesh plus its `.parts` sidecar.
pub fn read_part_mesh(path: &Path) -> Result<PartLabeledMesh> {
    let mesh = read_mesh(path)?;
    let sidecar = parts_path(path);
    let (labels, names) = parse_parts(&read_text(&sidecar)?, mesh.vertices().len(), &sidecar)?;
    PartLabeledMesh::new(mesh, labels, names).map_err(|e| HoiError::Format {
        path: sidecar,
        line: 0,
        message: e.to_string(),
    })
}

pub fn write_part_mesh(path: &Path, mesh: &PartLabeledMesh) -> Result<()> {
    write_mesh(path, &mesh.mesh)?;
    write_text(&parts_path(path), &format_parts(mesh))
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    write_text(path, text)
}
