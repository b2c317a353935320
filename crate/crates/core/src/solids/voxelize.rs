//! Rasterisation of boundary representations onto voxel grids.
//!
//! Inside/outside is decided with the nonzero winding rule along axis-aligned
//! rays through cell centres (+z columns in 3D, +x rows in 2D). Edge ownership
//! follows a top-left rule with canonically ordered edge functions, so a ray
//! through a shared edge or vertex is counted exactly once.

use nalgebra::{Point2, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::grid::{GridFrame, VoxelGrid};
use super::mesh::{Dim, PolygonSet, Solid, TriMesh};
use crate::error::Result;

/// Which cells count as occupied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Cells whose centre is inside the solid.
    Centroid,
    /// Centroid cells plus every cell whose interior meets the boundary.
    #[default]
    Conservative,
}

/// Validates `solid` and rasterises it onto a fresh grid covering its bounds
/// with one cell of padding.
pub fn voxelize(solid: &Solid, spacing: f64, policy: Policy) -> Result<VoxelGrid<bool>> {
    solid.validate()?;
    let frame = GridFrame::covering(&solid.aabb(), spacing, 1, solid.dim());
    Ok(voxelize_into(solid, &frame, policy))
}

/// Rasterises onto an existing frame. Parts of the solid outside the frame
/// are clipped.
pub fn voxelize_into(solid: &Solid, frame: &GridFrame, policy: Policy) -> VoxelGrid<bool> {
    let mut grid = match solid {
        Solid::Mesh(m) => centroid_mesh(m, frame),
        Solid::Polygons(p) => centroid_polygons(p, frame),
    };
    if policy == Policy::Conservative {
        match solid {
            Solid::Mesh(m) => touch_mesh(m, &mut grid),
            Solid::Polygons(p) => touch_polygons(p, &mut grid),
        }
    }
    grid
}

/// Frame whose cell centres sit on integer multiples of `spacing`, so that
/// the origin is the centre of a cell. Used for tools expressed in the tip frame.
pub fn centred_frame(solid: &Solid, spacing: f64) -> GridFrame {
    let b = solid.aabb();
    let dim = solid.dim();
    let mut origin = Point3::new(0.0, 0.0, -spacing / 2.0);
    let mut dims = [1usize; 3];
    for a in 0..dim.count() {
        let lo = (b.min[a].min(0.0) / spacing).round() as i64 - 1;
        let hi = (b.max[a].max(0.0) / spacing).round() as i64 + 1;
        origin[a] = (lo as f64 - 0.5) * spacing;
        dims[a] = (hi - lo + 1) as usize;
    }
    GridFrame { origin, spacing, dims, dim }
}

#[inline]
fn cross2(d: (f64, f64), w: (f64, f64)) -> f64 {
    d.0 * w.1 - d.1 * w.0
}

/// Edge function of `u -> v` at `p`, evaluated from the lexicographically
/// smaller endpoint so that `edge(u, v, p) == -edge(v, u, p)` exactly.
#[inline]
fn edge(u: (f64, f64), v: (f64, f64), p: (f64, f64)) -> f64 {
    if u < v {
        cross2((v.0 - u.0, v.1 - u.1), (p.0 - u.0, p.1 - u.1))
    } else {
        -cross2((u.0 - v.0, u.1 - v.1), (p.0 - v.0, p.1 - v.1))
    }
}

/// Top-left ownership for counter-clockwise triangles.
#[inline]
fn owns(u: (f64, f64), v: (f64, f64)) -> bool {
    let (dx, dy) = (v.0 - u.0, v.1 - u.1);
    dy < 0.0 || (dy == 0.0 && dx < 0.0)
}

fn index_range(lo: f64, hi: f64, origin: f64, h: f64, n: usize) -> Option<(usize, usize)> {
    // Cells whose centre lies in [lo, hi].
    let a = ((lo - origin) / h - 0.5).ceil().max(0.0);
    let b = ((hi - origin) / h - 0.5).floor().min(n as f64 - 1.0);
    (a <= b).then_some((a as usize, b as usize))
}

fn centroid_mesh(mesh: &TriMesh, frame: &GridFrame) -> VoxelGrid<bool> {
    let h = frame.spacing;
    let [nx, ny, nz] = frame.dims;
    let o = frame.origin;
    let mut columns: Vec<Vec<(f64, i32)>> = vec![Vec::new(); nx * ny];
    for t in 0..mesh.triangles.len() {
        let [p0, p1, p2] = mesh.triangle(t);
        let (a, mut b, mut c) = (p0, p1, p2);
        let xy = |p: &Point3<f64>| (p.x, p.y);
        let area = edge(xy(&a), xy(&b), xy(&c));
        if area == 0.0 {
            continue;
        }
        let winding = if area > 0.0 { -1 } else { 1 };
        if area < 0.0 {
            std::mem::swap(&mut b, &mut c);
        }
        let (xa, xb, xc) = (xy(&a), xy(&b), xy(&c));
        let Some((i0, i1)) =
            index_range(a.x.min(b.x).min(c.x), a.x.max(b.x).max(c.x), o.x, h, nx)
        else {
            continue;
        };
        let Some((j0, j1)) =
            index_range(a.y.min(b.y).min(c.y), a.y.max(b.y).max(c.y), o.y, h, ny)
        else {
            continue;
        };
        let (own_bc, own_ca, own_ab) = (owns(xb, xc), owns(xc, xa), owns(xa, xb));
        for j in j0..=j1 {
            let y = o.y + (j as f64 + 0.5) * h;
            for i in i0..=i1 {
                let p = (o.x + (i as f64 + 0.5) * h, y);
                let w0 = edge(xb, xc, p);
                let w1 = edge(xc, xa, p);
                let w2 = edge(xa, xb, p);
                let inside = (w0 > 0.0 || (w0 == 0.0 && own_bc))
                    && (w1 > 0.0 || (w1 == 0.0 && own_ca))
                    && (w2 > 0.0 || (w2 == 0.0 && own_ab));
                if inside {
                    let z = (w0 * a.z + w1 * b.z + w2 * c.z) / (w0 + w1 + w2);
                    columns[i + nx * j].push((z, winding));
                }
            }
        }
    }
    let mut grid = VoxelGrid::new(*frame);
    for j in 0..ny {
        for i in 0..nx {
            let col = &mut columns[i + nx * j];
            if col.is_empty() {
                continue;
            }
            col.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut w = 0;
            let mut next = 0;
            for k in 0..nz {
                let z = o.z + (k as f64 + 0.5) * h;
                while next < col.len() && col[next].0 < z {
                    w += col[next].1;
                    next += 1;
                }
                if w != 0 {
                    grid.set([i, j, k], true);
                }
            }
        }
    }
    grid
}

fn centroid_polygons(poly: &PolygonSet, frame: &GridFrame) -> VoxelGrid<bool> {
    let h = frame.spacing;
    let [nx, ny, _] = frame.dims;
    let o = frame.origin;
    let mut rows: Vec<Vec<(f64, i32)>> = vec![Vec::new(); ny];
    for (a, b) in poly.edges() {
        if a.y == b.y {
            continue;
        }
        let winding = if a.y > b.y { 1 } else { -1 };
        let (lo, hi) = if a.y < b.y { (a, b) } else { (b, a) };
        let j0 = ((lo.y - o.y) / h - 0.5).ceil().max(0.0) as usize;
        for j in j0..ny {
            let y = o.y + (j as f64 + 0.5) * h;
            if y >= hi.y {
                break;
            }
            if y < lo.y {
                continue;
            }
            let x = lo.x + (y - lo.y) * (hi.x - lo.x) / (hi.y - lo.y);
            rows[j].push((x, winding));
        }
    }
    let mut grid = VoxelGrid::new(*frame);
    for (j, row) in rows.iter_mut().enumerate() {
        if row.is_empty() {
            continue;
        }
        row.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut w = 0;
        let mut next = 0;
        for i in 0..nx {
            let x = o.x + (i as f64 + 0.5) * h;
            while next < row.len() && row[next].0 < x {
                w += row[next].1;
                next += 1;
            }
            if w != 0 {
                grid.set([i, j, 0], true);
            }
        }
    }
    grid
}

fn cell_span(lo: f64, hi: f64, origin: f64, h: f64, n: usize) -> Option<(usize, usize)> {
    let a = ((lo - origin) / h).floor().max(0.0);
    let b = ((hi - origin) / h).floor().min(n as f64 - 1.0);
    (a <= b).then_some((a as usize, b as usize))
}

fn touch_mesh(mesh: &TriMesh, grid: &mut VoxelGrid<bool>) {
    let frame = *grid.frame();
    let h = frame.spacing;
    let half = h / 2.0;
    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangle(t);
        let mut span = [(0usize, 0usize); 3];
        let mut ok = true;
        for a in 0..3 {
            let lo = tri.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
            let hi = tri.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max);
            match cell_span(lo, hi, frame.origin[a], h, frame.dims[a]) {
                Some(s) => span[a] = s,
                None => ok = false,
            }
        }
        if !ok {
            continue;
        }
        for k in span[2].0..=span[2].1 {
            for j in span[1].0..=span[1].1 {
                for i in span[0].0..=span[0].1 {
                    if grid.get([i, j, k]) {
                        continue;
                    }
                    let c = frame.cell_center([i, j, k]);
                    if triangle_box_overlap(&c, half, &tri) {
                        grid.set([i, j, k], true);
                    }
                }
            }
        }
    }
}

/// Separating-axis test between a triangle and an axis-aligned cube of half
/// side `half`. Touching without interior overlap counts as separated.
pub fn triangle_box_overlap(center: &Point3<f64>, half: f64, tri: &[Point3<f64>; 3]) -> bool {
    let v = tri.map(|p| p - center);
    let e = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    let separated = |axis: Vector3<f64>| -> bool {
        let r = half * (axis.x.abs() + axis.y.abs() + axis.z.abs());
        let p = v.map(|q| q.dot(&axis));
        let (lo, hi) = (p[0].min(p[1]).min(p[2]), p[0].max(p[1]).max(p[2]));
        lo >= r || hi <= -r
    };
    for a in 0..3 {
        let mut axis = Vector3::zeros();
        axis[a] = 1.0;
        if separated(axis) {
            return false;
        }
    }
    let n = e[0].cross(&e[1]);
    if n.norm_squared() > 0.0 && separated(n) {
        return false;
    }
    let scale = e.iter().map(|x| x.norm_squared()).fold(0.0, f64::max);
    for ei in &e {
        for a in 0..3 {
            let mut u = Vector3::zeros();
            u[a] = 1.0;
            let axis = ei.cross(&u);
            if axis.norm_squared() > 1e-24 * scale && separated(axis) {
                return false;
            }
        }
    }
    true
}

fn touch_polygons(poly: &PolygonSet, grid: &mut VoxelGrid<bool>) {
    let frame = *grid.frame();
    let h = frame.spacing;
    for (a, b) in poly.edges() {
        let Some((i0, i1)) = cell_span(a.x.min(b.x), a.x.max(b.x), frame.origin.x, h, frame.dims[0])
        else {
            continue;
        };
        let Some((j0, j1)) = cell_span(a.y.min(b.y), a.y.max(b.y), frame.origin.y, h, frame.dims[1])
        else {
            continue;
        };
        for j in j0..=j1 {
            for i in i0..=i1 {
                if grid.get([i, j, 0]) {
                    continue;
                }
                let c = frame.cell_center([i, j, 0]);
                if segment_box_overlap(&Point2::new(c.x, c.y), h / 2.0, &a, &b) {
                    grid.set([i, j, 0], true);
                }
            }
        }
    }
}

/// Separating-axis test between a segment and an axis-aligned square.
pub fn segment_box_overlap(c: &Point2<f64>, half: f64, a: &Point2<f64>, b: &Point2<f64>) -> bool {
    let (pa, pb) = (a - c, b - c);
    if pa.x.min(pb.x) >= half || pa.x.max(pb.x) <= -half {
        return false;
    }
    if pa.y.min(pb.y) >= half || pa.y.max(pb.y) <= -half {
        return false;
    }
    let d = b - a;
    let n = (-d.y, d.x);
    if n.0 == 0.0 && n.1 == 0.0 {
        return false;
    }
    let r = half * (n.0.abs() + n.1.abs());
    let p = n.0 * pa.x + n.1 * pa.y;
    p.abs() < r
}

/// Forces a cell to be occupied (used for the tool tip).
pub fn mark_point(grid: &mut VoxelGrid<bool>, p: &Point3<f64>) {
    let idx = grid.frame().cell_of(p);
    if grid.frame().contains_index(idx) {
        grid.set(idx.map(|v| v as usize), true);
    }
}

/// Dimension consistency helper for callers mixing inputs.
pub fn same_dim(parts: &[&Solid]) -> Option<Dim> {
    let d = parts.first()?.dim();
    parts.iter().all(|s| s.dim() == d).then_some(d)
}
