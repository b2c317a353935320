//! Boundary representations: triangle meshes (3D) and polygon sets (2D).

use std::collections::HashMap;

use nalgebra::{Matrix3, Point2, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension of a scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dim {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

impl Dim {
    pub fn count(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            other => Err(Error::Config(format!("dimension must be 2 or 3, got {other}"))),
        }
    }
}

/// Axis-aligned bounding box. In 2D the z extent is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    pub fn grow(&mut self, p: &Point3<f64>) {
        for i in 0..3 {
            self.min[i] = self.min[i].min(p[i]);
            self.max[i] = self.max[i].max(p[i]);
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut b = *self;
        if !other.is_empty() {
            b.grow(&other.min);
            b.grow(&other.max);
        }
        b
    }

    /// Expands every side by `r` (in the first `dim` axes only).
    pub fn expanded(&self, r: f64, dim: Dim) -> Aabb {
        let mut b = *self;
        for i in 0..dim.count() {
            b.min[i] -= r;
            b.max[i] += r;
        }
        b
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= other.max[i] && other.min[i] <= self.max[i])
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    /// Euclidean distance from `p` to the box (zero inside).
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let e = (self.min[i] - p[i]).max(0.0).max(p[i] - self.max[i]);
            d2 += e * e;
        }
        d2.sqrt()
    }
}

/// Indexed triangle mesh with outward-facing counter-clockwise triangles.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

fn weld_key(p: &Point3<f64>) -> [u64; 3] {
    // -0.0 and 0.0 must weld together.
    [p.x + 0.0, p.y + 0.0, p.z + 0.0].map(f64::to_bits)
}

impl TriMesh {
    /// Builds an indexed mesh from a triangle soup, welding bitwise-equal vertices.
    pub fn from_soup(triangles: &[[Point3<f64>; 3]]) -> Self {
        let mut index: HashMap<[u64; 3], u32> = HashMap::new();
        let mut mesh = TriMesh::default();
        for tri in triangles {
            let mut ids = [0u32; 3];
            for (k, p) in tri.iter().enumerate() {
                ids[k] = *index.entry(weld_key(p)).or_insert_with(|| {
                    mesh.vertices.push(*p);
                    (mesh.vertices.len() - 1) as u32
                });
            }
            mesh.triangles.push(ids);
        }
        mesh
    }

    pub fn triangle(&self, i: usize) -> [Point3<f64>; 3] {
        self.triangles[i].map(|v| self.vertices[v as usize])
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    /// Signed enclosed volume (positive for outward-oriented meshes).
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
            })
            .sum()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                (b - a).cross(&(c - a)).norm() / 2.0
            })
            .sum()
    }

    /// Checks that the mesh is a closed, consistently oriented 2-manifold
    /// boundary with non-degenerate faces and nonzero volume.
    pub fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::DegenerateMesh("mesh has no triangles".into()));
        }
        let scale = self.aabb().diagonal().max(f64::MIN_POSITIVE);
        for (i, t) in self.triangles.iter().enumerate() {
            let [a, b, c] = self.triangle(i);
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::DegenerateMesh(format!("triangle {i} repeats a vertex")));
            }
            if (b - a).cross(&(c - a)).norm() <= 1e-14 * scale * scale {
                return Err(Error::DegenerateMesh(format!("triangle {i} has zero area")));
            }
        }
        let mut directed: HashMap<(u32, u32), i64> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *directed.entry((a, b)).or_default() += 1;
            }
        }
        let unpaired: i64 = directed
            .iter()
            .map(|(&(a, b), &n)| (n - directed.get(&(b, a)).copied().unwrap_or(0)).max(0))
            .sum();
        if unpaired > 0 {
            return Err(Error::NonWatertight { unpaired_edges: unpaired as usize });
        }
        if self.signed_volume().abs() <= 1e-12 * scale.powi(3) {
            return Err(Error::DegenerateMesh("mesh encloses zero volume".into()));
        }
        Ok(())
    }

    pub fn append(&mut self, other: &TriMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|v| v + base)));
    }

    /// Applies `p -> rotation * p + translation` to every vertex.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> TriMesh {
        TriMesh {
            vertices: self
                .vertices
                .iter()
                .map(|p| Point3::from(rotation * p.coords + translation))
                .collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Splits the mesh into vertex-connected shells.
    pub fn shells(&self) -> Vec<TriMesh> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for t in &self.triangles {
            for k in 1..3 {
                let a = find(&mut parent, t[0] as usize);
                let b = find(&mut parent, t[k] as usize);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut shell_of_root: HashMap<usize, usize> = HashMap::new();
        let mut shells: Vec<(Vec<u32>, HashMap<u32, u32>, TriMesh)> = Vec::new();
        for t in &self.triangles {
            let root = find(&mut parent, t[0] as usize);
            let next = shells.len();
            let s = *shell_of_root.entry(root).or_insert(next);
            if s == next {
                shells.push((Vec::new(), HashMap::new(), TriMesh::default()));
            }
            let (_, remap, mesh) = &mut shells[s];
            let tri = t.map(|v| {
                *remap.entry(v).or_insert_with(|| {
                    mesh.vertices.push(self.vertices[v as usize]);
                    (mesh.vertices.len() - 1) as u32
                })
            });
            mesh.triangles.push(tri);
        }
        shells.into_iter().map(|(_, _, m)| m).collect()
    }

    /// Axis-aligned box with outward orientation.
    pub fn cuboid(min: Point3<f64>, max: Point3<f64>) -> TriMesh {
        let v = |i: usize| {
            Point3::new(
                if i & 1 == 0 { min.x } else { max.x },
                if i & 2 == 0 { min.y } else { max.y },
                if i & 4 == 0 { min.z } else { max.z },
            )
        };
        let quads: [[u32; 4]; 6] = [
            [0, 2, 3, 1], // z-
            [4, 5, 7, 6], // z+
            [0, 1, 5, 4], // y-
            [2, 6, 7, 3], // y+
            [0, 4, 6, 2], // x-
            [1, 3, 7, 5], // x+
        ];
        let mut triangles = Vec::with_capacity(12);
        for q in quads {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        }
        TriMesh { vertices: (0..8).map(v).collect(), triangles }
    }

    /// Closed prism approximating a cylinder of the given radius along +z,
    /// from `z0` to `z1`. Vertices lie on the circle, so the prism is
    /// contained in the true cylinder.
    pub fn cylinder_z(radius: f64, z0: f64, z1: f64, segments: usize) -> TriMesh {
        let segments = segments.max(3);
        let mut vertices = vec![Point3::new(0.0, 0.0, z0), Point3::new(0.0, 0.0, z1)];
        for z in [z0, z1] {
            for k in 0..segments {
                let a = std::f64::consts::TAU * k as f64 / segments as f64;
                vertices.push(Point3::new(radius * a.cos(), radius * a.sin(), z));
            }
        }
        let ring = |level: usize, k: usize| (2 + level * segments + k % segments) as u32;
        let mut triangles = Vec::new();
        for k in 0..segments {
            triangles.push([0, ring(0, k + 1), ring(0, k)]);
            triangles.push([1, ring(1, k), ring(1, k + 1)]);
            triangles.push([ring(0, k), ring(0, k + 1), ring(1, k + 1)]);
            triangles.push([ring(0, k), ring(1, k + 1), ring(1, k)]);
        }
        TriMesh { vertices, triangles }
    }
}

/// Set of closed polygon loops interpreted with the nonzero winding rule.
/// Outer loops are counter-clockwise, holes clockwise.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolygonSet {
    pub loops: Vec<Vec<Point2<f64>>>,
}

impl PolygonSet {
    pub fn rect(min: Point2<f64>, max: Point2<f64>) -> PolygonSet {
        PolygonSet {
            loops: vec![vec![
                min,
                Point2::new(max.x, min.y),
                max,
                Point2::new(min.x, max.y),
            ]],
        }
    }

    pub fn union_of(parts: impl IntoIterator<Item = PolygonSet>) -> PolygonSet {
        PolygonSet { loops: parts.into_iter().flat_map(|p| p.loops).collect() }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2<f64>, Point2<f64>)> + '_ {
        self.loops.iter().flat_map(|l| (0..l.len()).map(move |i| (l[i], l[(i + 1) % l.len()])))
    }

    pub fn loop_area(l: &[Point2<f64>]) -> f64 {
        (0..l.len())
            .map(|i| {
                let (a, b) = (l[i], l[(i + 1) % l.len()]);
                a.x * b.y - a.y * b.x
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn signed_area(&self) -> f64 {
        self.loops.iter().map(|l| Self::loop_area(l)).sum()
    }

    pub fn aabb(&self) -> Aabb {
        let mut b = Aabb::empty();
        for p in self.loops.iter().flatten() {
            b.grow(&Point3::new(p.x, p.y, 0.0));
        }
        b
    }

    pub fn validate(&self) -> Result<()> {
        if self.loops.is_empty() {
            return Err(Error::DegenerateMesh("polygon set has no loops".into()));
        }
        let scale = self.aabb().diagonal().max(f64::MIN_POSITIVE);
        for (i, l) in self.loops.iter().enumerate() {
            if l.len() < 3 {
                return Err(Error::DegenerateMesh(format!("loop {i} has fewer than 3 vertices")));
            }
            if Self::loop_area(l).abs() <= 1e-14 * scale * scale {
                return Err(Error::DegenerateMesh(format!("loop {i} has zero area")));
            }
        }
        Ok(())
    }

    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> PolygonSet {
        PolygonSet {
            loops: self
                .loops
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|p| {
                            let q = rotation * Vector3::new(p.x, p.y, 0.0) + translation;
                            Point2::new(q.x, q.y)
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

/// A solid given by its boundary.
#[derive(Clone, Debug, PartialEq)]
pub enum Solid {
    Mesh(TriMesh),
    Polygons(PolygonSet),
}

impl Solid {
    pub fn dim(&self) -> Dim {
        match self {
            Solid::Mesh(_) => Dim::Three,
            Solid::Polygons(_) => Dim::Two,
        }
    }

    pub fn aabb(&self) -> Aabb {
        match self {
            Solid::Mesh(m) => m.aabb(),
            Solid::Polygons(p) => p.aabb(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Solid::Mesh(m) => m.validate(),
            Solid::Polygons(p) => p.validate(),
        }
    }

    /// Enclosed volume (area in 2D).
    pub fn measure(&self) -> f64 {
        match self {
            Solid::Mesh(m) => m.signed_volume(),
            Solid::Polygons(p) => p.signed_area(),
        }
    }

    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Solid {
        match self {
            Solid::Mesh(m) => Solid::Mesh(m.transformed(rotation, translation)),
            Solid::Polygons(p) => Solid::Polygons(p.transformed(rotation, translation)),
        }
    }

    /// Splits into independent boundary pieces: vertex-connected shells in
    /// 3D, individual loops in 2D.
    pub fn shells(&self) -> Vec<Solid> {
        match self {
            Solid::Mesh(m) => m.shells().into_iter().map(Solid::Mesh).collect(),
            Solid::Polygons(p) => p
                .loops
                .iter()
                .map(|l| Solid::Polygons(PolygonSet { loops: vec![l.clone()] }))
                .collect(),
        }
    }

    /// Concatenates boundaries; both must have the same dimension.
    pub fn merged(parts: &[Solid]) -> Option<Solid> {
        let first = parts.first()?;
        Some(match first {
            Solid::Mesh(_) => {
                let mut m = TriMesh::default();
                for p in parts {
                    if let Solid::Mesh(x) = p {
                        m.append(x);
                    }
                }
                Solid::Mesh(m)
            }
            Solid::Polygons(_) => Solid::Polygons(PolygonSet::union_of(parts.iter().filter_map(
                |p| match p {
                    Solid::Polygons(x) => Some(x.clone()),
                    _ => None,
                },
            ))),
        })
    }

    /// Boundary vertices (z = 0 in 2D).
    pub fn vertices(&self) -> Vec<Point3<f64>> {
        match self {
            Solid::Mesh(m) => m.vertices.clone(),
            Solid::Polygons(p) => p.loops.iter().flatten().map(|q| Point3::new(q.x, q.y, 0.0)).collect(),
        }
    }

    /// Distance from `p` to the boundary.
    pub fn boundary_distance(&self, p: &Point3<f64>) -> f64 {
        match self {
            Solid::Mesh(m) => (0..m.triangles.len())
                .map(|i| {
                    let [a, b, c] = m.triangle(i);
                    (crate::motion::collide::closest_point_triangle(p, &a, &b, &c) - p).norm()
                })
                .fold(f64::INFINITY, f64::min),
            Solid::Polygons(poly) => {
                let q = Point2::new(p.x, p.y);
                poly.edges()
                    .map(|(a, b)| crate::motion::collide::segment_point_distance(&a, &b, &q))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}
