//! Readers and writers for STL, OBJ, polygon text and legacy VTK files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{Point2, Point3};

use super::grid::VoxelGrid;
use super::mesh::{PolygonSet, Solid, TriMesh};
use crate::error::{Error, Result};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

/// Reads a solid, choosing the format from the file extension
/// (`.stl`, `.obj`, or `.poly`/`.txt` for 2D polygon loops).
pub fn read_solid(path: &Path) -> Result<Solid> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "stl" => Ok(Solid::Mesh(read_stl(path)?)),
        "obj" => Ok(Solid::Mesh(read_obj(path)?)),
        "poly" | "txt" => Ok(Solid::Polygons(read_polygons(path)?)),
        _ => Err(parse_err(path, 0, format!("unsupported file extension `{ext}`"))),
    }
}

pub fn write_solid(solid: &Solid, path: &Path) -> Result<()> {
    match solid {
        Solid::Mesh(m) => {
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj")) {
                write_obj(m, path)
            } else {
                write_stl_binary(m, path)
            }
        }
        Solid::Polygons(p) => write_polygons(p, path),
    }
}

pub fn read_stl(path: &Path) -> Result<TriMesh> {
    let bytes = fs::read(path)?;
    if bytes.len() >= 84 {
        let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        if bytes.len() == 84 + 50 * n {
            return Ok(parse_binary_stl(&bytes, n));
        }
    }
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| parse_err(path, 0, "neither binary nor ASCII STL"))?;
    parse_ascii_stl(text, path)
}

fn parse_binary_stl(bytes: &[u8], n: usize) -> TriMesh {
    let f = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
    let tris: Vec<[Point3<f64>; 3]> = (0..n)
        .map(|t| {
            let base = 84 + 50 * t + 12;
            [0, 1, 2].map(|v| {
                let o = base + 12 * v;
                Point3::new(f(o), f(o + 4), f(o + 8))
            })
        })
        .collect();
    TriMesh::from_soup(&tris)
}

fn parse_ascii_stl(text: &str, path: &Path) -> Result<TriMesh> {
    let mut tris = Vec::new();
    let mut cur: Vec<Point3<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("vertex") => {
                let c: Vec<f64> = it
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(path, ln + 1, e.to_string()))?;
                if c.len() != 3 {
                    return Err(parse_err(path, ln + 1, "vertex needs 3 coordinates"));
                }
                cur.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("endloop") => {
                if cur.len() != 3 {
                    return Err(parse_err(path, ln + 1, "facet must have 3 vertices"));
                }
                tris.push([cur[0], cur[1], cur[2]]);
                cur.clear();
            }
            _ => {}
        }
    }
    if tris.is_empty() {
        return Err(parse_err(path, 0, "no facets found"));
    }
    Ok(TriMesh::from_soup(&tris))
}

fn facet_normal(t: &[Point3<f64>; 3]) -> [f32; 3] {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let n = if n.norm() > 0.0 { n.normalize() } else { n };
    [n.x as f32, n.y as f32, n.z as f32]
}

pub fn write_stl_binary(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(84 + 50 * mesh.triangles.len());
    let mut header = [0u8; 80];
    header[..8].copy_from_slice(b"peelplan");
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for i in 0..mesh.triangles.len() {
        let t = mesh.triangle(i);
        for c in facet_normal(&t) {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for p in &t {
            for c in [p.x, p.y, p.z] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_stl_ascii(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut s = String::from("solid peelplan\n");
    for i in 0..mesh.triangles.len() {
        let t = mesh.triangle(i);
        let n = facet_normal(&t);
        let _ = writeln!(s, "  facet normal {} {} {}\n    outer loop", n[0], n[1], n[2]);
        for p in &t {
            let _ = writeln!(s, "      vertex {} {} {}", p.x, p.y, p.z);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    s.push_str("endsolid peelplan\n");
    fs::write(path, s)?;
    Ok(())
}

pub fn read_obj(path: &Path) -> Result<TriMesh> {
    let text = fs::read_to_string(path)?;
    let mut mesh = TriMesh::default();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(path, ln + 1, e.to_string()))?;
                if c.len() != 3 {
                    return Err(parse_err(path, ln + 1, "vertex needs 3 coordinates"));
                }
                mesh.vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let n = mesh.vertices.len() as i64;
                let mut ids = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let v: i64 = first
                        .parse()
                        .map_err(|_| parse_err(path, ln + 1, format!("bad face index `{tok}`")))?;
                    let v = if v < 0 { n + v } else { v - 1 };
                    if v < 0 || v >= n {
                        return Err(parse_err(path, ln + 1, "face index out of range"));
                    }
                    ids.push(v as u32);
                }
                if ids.len() < 3 {
                    return Err(parse_err(path, ln + 1, "face needs at least 3 vertices"));
                }
                for k in 1..ids.len() - 1 {
                    mesh.triangles.push([ids[0], ids[k], ids[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(mesh)
}

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    fs::write(path, s)?;
    Ok(())
}

/// Writes a polyline (one `l` element through all points).
pub fn write_polyline_obj(points: &[Point3<f64>], path: &Path) -> Result<()> {
    let mut s = String::new();
    for p in points {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    if points.len() >= 2 {
        s.push('l');
        for i in 1..=points.len() {
            let _ = write!(s, " {i}");
        }
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// Reads `x y` vertex lines; blank lines separate loops and `#` starts a
/// comment. A repeated closing vertex is dropped.
pub fn read_polygons(path: &Path) -> Result<PolygonSet> {
    let text = fs::read_to_string(path)?;
    let mut set = PolygonSet::default();
    let mut cur: Vec<Point2<f64>> = Vec::new();
    let flush = |cur: &mut Vec<Point2<f64>>, set: &mut PolygonSet| {
        if cur.len() > 1 && cur.first() == cur.last() {
            cur.pop();
        }
        if !cur.is_empty() {
            set.loops.push(std::mem::take(cur));
        }
    };
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            flush(&mut cur, &mut set);
            continue;
        }
        let c: Vec<f64> = line
            .split(|ch: char| ch.is_whitespace() || ch == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(path, ln + 1, e.to_string()))?;
        if c.len() != 2 {
            return Err(parse_err(path, ln + 1, "expected two coordinates"));
        }
        cur.push(Point2::new(c[0], c[1]));
    }
    flush(&mut cur, &mut set);
    Ok(set)
}

pub fn write_polygons(poly: &PolygonSet, path: &Path) -> Result<()> {
    let mut s = String::new();
    for (i, l) in poly.loops.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        for p in l {
            let _ = writeln!(s, "{} {}", p.x, p.y);
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// Writes a scalar grid as legacy VTK structured points (ASCII), with
/// points at cell centres.
pub fn write_vtk<T: Copy + Into<f64>>(grid: &VoxelGrid<T>, name: &str, path: &Path) -> Result<()> {
    let f = grid.frame();
    let o = f.cell_center([0, 0, 0]);
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(file, "# vtk DataFile Version 3.0")?;
    writeln!(file, "{name}")?;
    writeln!(file, "ASCII")?;
    writeln!(file, "DATASET STRUCTURED_POINTS")?;
    writeln!(file, "DIMENSIONS {} {} {}", f.dims[0], f.dims[1], f.dims[2])?;
    writeln!(file, "ORIGIN {} {} {}", o.x, o.y, o.z)?;
    writeln!(file, "SPACING {} {} {}", f.spacing, f.spacing, f.spacing)?;
    writeln!(file, "POINT_DATA {}", f.len())?;
    writeln!(file, "SCALARS {name} float 1")?;
    writeln!(file, "LOOKUP_TABLE default")?;
    for row in grid.values().chunks(f.dims[0].max(1)) {
        let line: Vec<String> = row.iter().map(|&v| format!("{}", v.into())).collect();
        writeln!(file, "{}", line.join(" "))?;
    }
    file.flush()?;
    Ok(())
}

/// Reads back a grid written by [`write_vtk`] as raw values and dimensions.
pub fn read_vtk_values(path: &Path) -> Result<([usize; 3], Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut dims = None;
    let mut values = Vec::new();
    let mut in_data = false;
    for (ln, line) in text.lines().enumerate() {
        if in_data {
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|e| parse_err(path, ln + 1, e.to_string()))?);
            }
        } else if let Some(rest) = line.strip_prefix("DIMENSIONS") {
            let d: Vec<usize> = rest.split_whitespace().filter_map(|s| s.parse().ok()).collect();
            if d.len() != 3 {
                return Err(parse_err(path, ln + 1, "bad DIMENSIONS"));
            }
            dims = Some([d[0], d[1], d[2]]);
        } else if line.starts_with("LOOKUP_TABLE") {
            in_data = true;
        }
    }
    let dims = dims.ok_or_else(|| parse_err(path, 0, "missing DIMENSIONS"))?;
    Ok((dims, values))
}
