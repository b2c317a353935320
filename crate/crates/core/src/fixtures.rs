//! Small voxel-aligned test scenes (unit spacing) used by the tests, the
//! acceptance suite and the `fixture` CLI command.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Point2, Point3, Vector3};

use crate::motion::PlannerParams;
use crate::se3::{RigidTransform, Rotation, SamplingMethod};
use crate::solids::{PolygonSet, SceneInput, Solid, TriMesh, Policy};

/// A scene together with the sampling settings it is meant to be run with.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub scene: SceneInput,
    pub rotations: usize,
    pub method: SamplingMethod,
    pub epsilon_voxels: f64,
    pub planner: PlannerParams,
}

pub const NAMES: [&str; 8] =
    ["two-square", "l-part", "forest", "internal-void", "u-trap", "bracket", "column", "bare"];

pub fn by_name(name: &str) -> Option<Fixture> {
    Some(match name {
        "two-square" => two_square(),
        "l-part" => l_part(),
        "forest" => forest(),
        "internal-void" => internal_void(),
        "u-trap" => u_trap().0,
        "bracket" => bracket(true),
        "column" => column(),
        "bare" => bare(),
        _ => return None,
    })
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> PolygonSet {
    PolygonSet::rect(Point2::new(x0, y0), Point2::new(x1, y1))
}

fn rects(list: &[[f64; 4]]) -> Solid {
    Solid::Polygons(PolygonSet::union_of(list.iter().map(|r| rect(r[0], r[1], r[2], r[3]))))
}

fn boxes(list: &[[f64; 6]]) -> Solid {
    let mut m = TriMesh::default();
    for b in list {
        m.append(&TriMesh::cuboid(Point3::new(b[0], b[1], b[2]), Point3::new(b[3], b[4], b[5])));
    }
    Solid::Mesh(m)
}

/// Straight 2D rod along +y with the tip at the middle of its bottom edge.
pub fn rod_2d(half_width: f64, length: f64) -> Solid {
    rects(&[[-half_width, 0.0, half_width, length]])
}

/// Square 3D rod along +z with the tip at the centre of its bottom face.
pub fn rod_3d(half_width: f64, length: f64) -> Solid {
    boxes(&[[-half_width, -half_width, 0.0, half_width, half_width, length]])
}

/// 2D rod of length 4 carrying a 6 x 3 head.
pub fn hammer_2d() -> Solid {
    rects(&[[-0.45, 0.0, 0.45, 4.0], [-3.0, 4.0, 3.0, 7.0]])
}

fn scene_2d(part: Solid, support: Option<Solid>, tool: Solid) -> SceneInput {
    SceneInput {
        part,
        support,
        fixture: None,
        tool,
        tool_tip: Point3::origin(),
        spacing: 1.0,
        policy: Policy::Conservative,
    }
}

fn planar(name: &'static str, scene: SceneInput) -> Fixture {
    Fixture {
        name,
        scene,
        rotations: 8,
        method: SamplingMethod::Grid2d,
        epsilon_voxels: 2.0,
        planner: PlannerParams::default(),
    }
}

/// A square part with one rectangular support on its right side.
pub fn two_square() -> Fixture {
    planar(
        "two-square",
        scene_2d(rects(&[[0.0, 0.0, 6.0, 6.0]]), Some(rects(&[[6.0, 1.0, 10.0, 5.0]])), rod_2d(0.45, 6.0)),
    )
}

/// An L-shaped part with two columns under its arm and a block in the corner.
pub fn l_part() -> Fixture {
    planar(
        "l-part",
        scene_2d(
            rects(&[[0.0, 0.0, 3.0, 12.0], [3.0, 9.0, 16.0, 12.0]]),
            Some(rects(&[[7.0, 0.0, 9.0, 9.0], [12.0, 0.0, 14.0, 9.0], [3.0, 4.0, 5.0, 7.0]])),
            rod_2d(0.45, 6.0),
        ),
    )
}

/// Horizontal position of the groups in [`forest`].
pub fn forest_group_starts() -> [f64; 4] {
    [0, 1, 2, 3].map(|k| 3.0 + 13.0 * k as f64)
}

/// A plate held by four groups of three unit columns (outer, inner, outer)
/// with one-cell gaps. Inner columns become reachable only once their
/// neighbours are gone.
pub fn forest() -> Fixture {
    let mut cols = Vec::new();
    for g in forest_group_starts() {
        for dx in [0.0, 2.0, 4.0] {
            cols.push([g + dx, 0.0, g + dx + 1.0, 6.0]);
        }
    }
    planar("forest", scene_2d(rects(&[[0.0, 6.0, 50.0, 8.0]]), Some(rects(&cols)), rod_2d(0.45, 6.0)))
}

/// A hollow part with one column trapped in its cavity and one column
/// underneath it.
pub fn internal_void() -> Fixture {
    let outer = vec![
        Point2::new(0.0, 6.0),
        Point2::new(16.0, 6.0),
        Point2::new(16.0, 22.0),
        Point2::new(0.0, 22.0),
    ];
    let hole = vec![
        Point2::new(3.0, 9.0),
        Point2::new(3.0, 19.0),
        Point2::new(13.0, 19.0),
        Point2::new(13.0, 9.0),
    ];
    let part = Solid::Polygons(PolygonSet { loops: vec![outer, hole] });
    let support = rects(&[[7.0, 9.0, 8.0, 19.0], [7.0, 0.0, 8.0, 6.0]]);
    planar("internal-void", scene_2d(part, Some(support), rod_2d(0.45, 6.0)))
}

/// A closed box with a narrow slit in its lid and a hammer-shaped tool
/// whose head cannot pass the slit. Returns the fixture plus a start
/// configuration outside the box and a goal configuration inside it.
pub fn u_trap() -> (Fixture, RigidTransform, RigidTransform) {
    let part = rects(&[
        [0.0, 0.0, 21.0, 3.0],
        [0.0, 3.0, 3.0, 16.0],
        [18.0, 3.0, 21.0, 16.0],
        [3.0, 13.0, 9.0, 16.0],
        [12.0, 13.0, 18.0, 16.0],
    ]);
    let support = rects(&[[21.0, 0.0, 23.0, 2.0]]);
    let mut fx = planar("u-trap", scene_2d(part, Some(support), hammer_2d()));
    fx.planner.max_samples = 2000;
    let start = RigidTransform::new(Rotation::identity(), Vector3::new(10.5, 22.5, 0.0));
    let goal = RigidTransform::new(Rotation::planar(FRAC_PI_2), Vector3::new(12.5, 7.5, 0.0));
    (fx, start, goal)
}

/// An L-bracket (wall plus overhanging flange) carried by a 4 x 4 array of
/// 2 x 2 columns, optionally standing on a base plate.
pub fn bracket(base_plate: bool) -> Fixture {
    let part = boxes(&[[0.0, 0.0, 0.0, 3.0, 16.0, 14.0], [3.0, 0.0, 11.0, 17.0, 16.0, 14.0]]);
    let mut cols = Vec::new();
    for x in [5.0, 8.0, 11.0, 14.0] {
        for y in [2.0, 5.0, 8.0, 11.0] {
            cols.push([x, y, 0.0, x + 2.0, y + 2.0, 11.0]);
        }
    }
    let fixture = base_plate.then(|| boxes(&[[-1.0, -1.0, -2.0, 18.0, 17.0, 0.0]]));
    Fixture {
        name: "bracket",
        scene: SceneInput {
            part,
            support: Some(boxes(&cols)),
            fixture,
            tool: rod_3d(0.45, 6.0),
            tool_tip: Point3::origin(),
            spacing: 1.0,
            policy: Policy::Conservative,
        },
        rotations: 72,
        method: SamplingMethod::Hopf,
        epsilon_voxels: 2.0,
        planner: PlannerParams::default(),
    }
}

/// A single 3D column under a plate.
pub fn column() -> Fixture {
    let mut fx = bracket(false);
    fx.name = "column";
    fx.scene.part = boxes(&[[0.0, 0.0, 8.0, 8.0, 8.0, 10.0]]);
    fx.scene.support = Some(boxes(&[[3.0, 3.0, 0.0, 5.0, 5.0, 8.0]]));
    fx
}

/// A part without supports.
pub fn bare() -> Fixture {
    planar("bare", scene_2d(rects(&[[0.0, 0.0, 6.0, 6.0]]), None, rod_2d(0.45, 6.0)))
}
