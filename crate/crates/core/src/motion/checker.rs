//! Collision checking of tool configurations against a near-net shape.

use nalgebra::{Point2, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::collide::{mesh_winding, polygon_winding, segment_intersection, triangle_intersection};
use crate::cspace::{classify_count, overlap_count, Classification, Classified, ToolStack};
use crate::se3::{RigidTransform, RotationSample};
use crate::solids::voxelize::{centred_frame, voxelize_into};
use crate::solids::{Aabb, Dim, Policy, Solid, VoxelGrid};

/// Geometry used to decide collisions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    /// Voxel overlap counts and a conservative ball cover of the tool.
    #[default]
    Voxel,
    /// Exact triangle/segment intersection with the input boundaries.
    Mesh,
}

/// Tool geometry in the tip frame.
#[derive(Clone, Debug)]
pub struct ToolModel {
    pub solid: Solid,
    /// Ball centres whose union (with `cover_radius`) contains the tool.
    pub cover: Vec<Point3<f64>>,
    pub cover_radius: f64,
    /// Largest distance from the tip to the tool.
    pub radius: f64,
    far_vertex: Point3<f64>,
}

impl ToolModel {
    pub fn new(solid: &Solid, spacing: f64) -> Self {
        let s = spacing / 2.0;
        let frame = centred_frame(solid, s);
        let grid = voxelize_into(solid, &frame, Policy::Conservative);
        let cover: Vec<Point3<f64>> = grid
            .occupied()
            .map(|l| {
                let mut c = frame.cell_center(frame.unlinear(l));
                if frame.dim == Dim::Two {
                    c.z = 0.0;
                }
                c
            })
            .collect();
        let cover_radius = s * (solid.dim().count() as f64).sqrt() / 2.0;
        let verts = solid.vertices();
        let far_vertex = verts
            .iter()
            .copied()
            .max_by(|a, b| a.coords.norm().total_cmp(&b.coords.norm()))
            .unwrap_or_else(Point3::origin);
        ToolModel { solid: solid.clone(), cover, cover_radius, radius: far_vertex.coords.norm(), far_vertex }
    }
}

/// One obstacle boundary piece with cached bounds.
#[derive(Clone, Debug)]
pub struct Obstacle {
    pub solid: Solid,
    aabb: Aabb,
    piece_boxes: Vec<Aabb>,
}

impl Obstacle {
    pub fn new(solid: Solid) -> Self {
        let piece_boxes = match &solid {
            Solid::Mesh(m) => (0..m.triangles.len()).map(|i| Aabb::from_points(m.triangle(i).iter())).collect(),
            Solid::Polygons(p) => p
                .edges()
                .map(|(a, b)| Aabb::from_points([Point3::new(a.x, a.y, 0.0), Point3::new(b.x, b.y, 0.0)].iter()))
                .collect(),
        };
        let aabb = solid.aabb();
        Obstacle { solid, aabb, piece_boxes }
    }
}

/// Voxel and mesh collision queries for one near-net state.
pub struct CollisionChecker<'a> {
    pub mode: CheckMode,
    pub epsilon: f64,
    /// Mesh mode: intersections within this distance of the tip count as contact.
    pub contact_radius: f64,
    near_net: VoxelGrid<bool>,
    dilated: VoxelGrid<bool>,
    tools: &'a ToolStack,
    rotations: &'a RotationSample,
    tool: &'a ToolModel,
    obstacles: Vec<Obstacle>,
}

impl<'a> CollisionChecker<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mode: CheckMode,
        near_net: VoxelGrid<bool>,
        dilate: usize,
        obstacles: Vec<Solid>,
        tools: &'a ToolStack,
        rotations: &'a RotationSample,
        tool: &'a ToolModel,
        epsilon: f64,
    ) -> Self {
        let h = near_net.frame().spacing;
        let dim = near_net.frame().dim;
        let dilated = near_net.dilate(dilate);
        CollisionChecker {
            mode,
            epsilon,
            contact_radius: h * (dim.count() as f64).sqrt(),
            near_net,
            dilated,
            tools,
            rotations,
            tool,
            obstacles: obstacles.into_iter().map(Obstacle::new).collect(),
        }
    }

    pub fn near_net(&self) -> &VoxelGrid<bool> {
        &self.near_net
    }

    pub fn rotations(&self) -> &RotationSample {
        self.rotations
    }

    pub fn tool(&self) -> &ToolModel {
        self.tool
    }

    /// Contact classification in the checker's mode.
    pub fn classify(&self, tau: &RigidTransform) -> Classification {
        match self.mode {
            CheckMode::Voxel => self.voxel_classify(tau).class,
            CheckMode::Mesh => self.mesh_classify(tau),
        }
    }

    /// Strict freedom used for path interiors.
    pub fn clearance(&self, tau: &RigidTransform) -> bool {
        match self.mode {
            CheckMode::Voxel => self.cover_free(tau),
            CheckMode::Mesh => self.mesh_classify(tau) == Classification::Free,
        }
    }

    /// Overlap count with the translation snapped to the lattice and the
    /// rotation snapped to the nearest sample.
    pub fn voxel_classify(&self, tau: &RigidTransform) -> Classified {
        let (s, exact) = match self.rotations.index_of(&tau.rotation) {
            Some(s) => (s, true),
            None => (self.rotations.nearest(&tau.rotation).0, false),
        };
        let tip = self.near_net.frame().cell_of(&Point3::from(tau.translation));
        let count = overlap_count(&self.near_net, &self.tools.rasters[s], tip);
        Classified { class: classify_count(count, self.epsilon), count, approximate: !exact }
    }

    /// True when no cover ball meets an occupied cell of the dilated near-net.
    pub fn cover_free(&self, tau: &RigidTransform) -> bool {
        let f = *self.dilated.frame();
        let h = f.spacing;
        let r = self.tool.cover_radius;
        let rot = tau.rotation.matrix();
        let two_d = f.dim == Dim::Two;
        let bounds = f.aabb().expanded(r, f.dim);
        for c in &self.tool.cover {
            let w = rot * c.coords + tau.translation;
            let p = Point3::from(w);
            if two_d {
                if p.x < bounds.min.x || p.x > bounds.max.x || p.y < bounds.min.y || p.y > bounds.max.y {
                    continue;
                }
            } else if !bounds.contains(&p) {
                continue;
            }
            let lo = f.cell_of(&(p - Vector3::repeat(r)));
            let hi = f.cell_of(&(p + Vector3::repeat(r)));
            let (z0, z1) = if two_d { (0, 0) } else { (lo[2], hi[2]) };
            for k in z0..=z1 {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        if self.dilated.get_signed([i, j, k]) != Some(true) {
                            continue;
                        }
                        let cc = f.cell_center([i as usize, j as usize, k as usize]);
                        let mut d2 = 0.0;
                        let axes = if two_d { 2 } else { 3 };
                        for a in 0..axes {
                            let e = ((p[a] - cc[a]).abs() - h / 2.0).max(0.0);
                            d2 += e * e;
                        }
                        if d2 <= r * r {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Exact boundary test: `Free` when disjoint, `Contact` when every
    /// intersection lies within `contact_radius` of the tip.
    pub fn mesh_classify(&self, tau: &RigidTransform) -> Classification {
        match &self.tool.solid {
            Solid::Mesh(_) => self.mesh_classify_3d(tau),
            Solid::Polygons(_) => self.mesh_classify_2d(tau),
        }
    }

    fn mesh_classify_3d(&self, tau: &RigidTransform) -> Classification {
        let Solid::Mesh(tool) = &self.tool.solid else { unreachable!() };
        let rot = tau.rotation.matrix();
        let tip = Point3::from(tau.translation);
        let world: Vec<[Point3<f64>; 3]> = (0..tool.triangles.len())
            .map(|i| tool.triangle(i).map(|p| Point3::from(rot * p.coords + tau.translation)))
            .collect();
        let boxes: Vec<Aabb> = world.iter().map(|t| Aabb::from_points(t.iter())).collect();
        let tool_box = boxes.iter().fold(Aabb::empty(), |a, b| a.union(b));
        let far = tau.apply_point(&self.tool.far_vertex);
        let inv = tau.inverse();
        let rc = self.contact_radius;
        let mut touched = false;
        for obs in &self.obstacles {
            if !obs.aabb.intersects(&tool_box) {
                continue;
            }
            let Solid::Mesh(m) = &obs.solid else { continue };
            let mut hit = false;
            for (tt, tb) in world.iter().zip(&boxes) {
                if !tb.intersects(&obs.aabb) {
                    continue;
                }
                for (k, ob) in obs.piece_boxes.iter().enumerate() {
                    if !tb.intersects(ob) {
                        continue;
                    }
                    for p in triangle_intersection(tt, &m.triangle(k)) {
                        hit = true;
                        if (p - tip).norm() > rc {
                            return Classification::Collide;
                        }
                    }
                }
            }
            if hit {
                touched = true;
                continue;
            }
            if obs.aabb.contains(&far) && mesh_winding(m, &far) > 0.5 {
                return Classification::Collide;
            }
            for v in m.vertices.iter().filter(|v| tool_box.contains(v)) {
                if mesh_winding(tool, &inv.apply_point(v)) > 0.5 {
                    if (v - tip).norm() > rc {
                        return Classification::Collide;
                    }
                    touched = true;
                }
            }
        }
        if touched {
            Classification::Contact
        } else {
            Classification::Free
        }
    }

    fn mesh_classify_2d(&self, tau: &RigidTransform) -> Classification {
        let Solid::Polygons(tool) = &self.tool.solid else { unreachable!() };
        let rot = tau.rotation.matrix();
        let map = |p: &Point2<f64>| {
            let w = rot * Vector3::new(p.x, p.y, 0.0) + tau.translation;
            Point2::new(w.x, w.y)
        };
        let segs: Vec<(Point2<f64>, Point2<f64>)> = tool.edges().map(|(a, b)| (map(&a), map(&b))).collect();
        let seg_box = |a: &Point2<f64>, b: &Point2<f64>| {
            Aabb::from_points([Point3::new(a.x, a.y, 0.0), Point3::new(b.x, b.y, 0.0)].iter())
        };
        let boxes: Vec<Aabb> = segs.iter().map(|(a, b)| seg_box(a, b)).collect();
        let tool_box = boxes.iter().fold(Aabb::empty(), |a, b| a.union(b));
        let tip = Point2::new(tau.translation.x, tau.translation.y);
        let far3 = tau.apply_point(&self.tool.far_vertex);
        let far = Point2::new(far3.x, far3.y);
        let inv = tau.inverse();
        let rc = self.contact_radius;
        let mut touched = false;
        for obs in &self.obstacles {
            if !obs.aabb.intersects(&tool_box) {
                continue;
            }
            let Solid::Polygons(poly) = &obs.solid else { continue };
            let mut hit = false;
            let edges: Vec<_> = poly.edges().collect();
            for ((a, b), tb) in segs.iter().zip(&boxes) {
                if !tb.intersects(&obs.aabb) {
                    continue;
                }
                for (k, (c, d)) in edges.iter().enumerate() {
                    if !tb.intersects(&obs.piece_boxes[k]) {
                        continue;
                    }
                    for p in segment_intersection(a, b, c, d) {
                        hit = true;
                        if (p - tip).norm() > rc {
                            return Classification::Collide;
                        }
                    }
                }
            }
            if hit {
                touched = true;
                continue;
            }
            if polygon_winding(poly, &far) != 0 {
                return Classification::Collide;
            }
            for v in poly.loops.iter().flatten() {
                if !tool_box.contains(&Point3::new(v.x, v.y, 0.0)) {
                    continue;
                }
                let local = inv.apply_point(&Point3::new(v.x, v.y, 0.0));
                if polygon_winding(tool, &Point2::new(local.x, local.y)) != 0 {
                    if (v - tip).norm() > rc {
                        return Classification::Collide;
                    }
                    touched = true;
                }
            }
        }
        if touched {
            Classification::Contact
        } else {
            Classification::Free
        }
    }
}
