use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{Point2, Point3, Vector3};
use proptest::prelude::*;

use peelplan::solids::io::*;
use peelplan::solids::voxelize::{segment_box_overlap, triangle_box_overlap};
use peelplan::solids::*;
use peelplan::Error;

fn uv_sphere(r: f64, n: usize) -> TriMesh {
    let p = |i: usize, j: usize| {
        let th = PI * i as f64 / n as f64;
        let ph = 2.0 * PI * (j % (2 * n)) as f64 / (2 * n) as f64;
        if i == 0 {
            return Point3::new(0.0, 0.0, r);
        }
        if i == n {
            return Point3::new(0.0, 0.0, -r);
        }
        Point3::new(r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos())
    };
    let mut tris = Vec::new();
    for i in 0..n {
        for j in 0..2 * n {
            let (a, b, c, d) = (p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1));
            if i != n - 1 {
                tris.push([a, b, c]);
            }
            if i != 0 {
                tris.push([a, c, d]);
            }
        }
    }
    TriMesh::from_soup(&tris)
}

fn cube(lo: f64, hi: f64) -> Solid {
    Solid::Mesh(TriMesh::cuboid(Point3::new(lo, lo, lo), Point3::new(hi, hi, hi)))
}

#[test]
fn sphere_volume_converges() {
    let mesh = uv_sphere(10.0, 48);
    mesh.validate().unwrap();
    let exact = mesh.signed_volume();
    let g = voxelize(&Solid::Mesh(mesh), 0.5, Policy::Centroid).unwrap();
    let rel = (g.measure() - exact).abs() / exact;
    assert!(rel < 0.02, "relative volume error {rel}");
}

#[test]
fn aligned_cube_is_exact_under_both_policies() {
    for policy in [Policy::Centroid, Policy::Conservative] {
        let g = voxelize(&cube(0.0, 4.0), 1.0, policy).unwrap();
        assert_eq!(g.count(), 64, "{policy:?}");
    }
    let square = Solid::Polygons(PolygonSet::rect(Point2::new(1.0, 2.0), Point2::new(4.0, 7.0)));
    for policy in [Policy::Centroid, Policy::Conservative] {
        assert_eq!(voxelize(&square, 1.0, policy).unwrap().count(), 15);
    }
}

#[test]
fn shifted_cube_conservative_covers_boundary_cells() {
    let g = voxelize(&cube(0.25, 3.75), 1.0, Policy::Conservative).unwrap();
    assert_eq!(g.count(), 64);
    let c = voxelize_into(&cube(0.6, 3.4), g.frame(), Policy::Centroid);
    assert_eq!(c.count(), 8);
    let g = voxelize_into(&cube(0.6, 3.4), g.frame(), Policy::Conservative);
    assert_eq!(g.count(), 64);
}

#[test]
fn polygon_with_hole() {
    let outer = vec![Point2::new(0.0, 0.0), Point2::new(6.0, 0.0), Point2::new(6.0, 6.0), Point2::new(0.0, 6.0)];
    let hole = vec![Point2::new(2.0, 2.0), Point2::new(2.0, 4.0), Point2::new(4.0, 4.0), Point2::new(4.0, 2.0)];
    let s = Solid::Polygons(PolygonSet { loops: vec![outer, hole] });
    assert_eq!(s.measure(), 32.0);
    assert_eq!(voxelize(&s, 1.0, Policy::Conservative).unwrap().count(), 32);
}

#[test]
fn open_mesh_is_rejected() {
    let mut m = TriMesh::cuboid(Point3::origin(), Point3::new(1.0, 1.0, 1.0));
    m.triangles.pop();
    match m.validate() {
        Err(Error::NonWatertight { unpaired_edges }) => assert!(unpaired_edges > 0),
        other => panic!("expected NonWatertight, got {other:?}"),
    }
    assert!(matches!(voxelize(&Solid::Mesh(m), 1.0, Policy::Centroid), Err(Error::NonWatertight { .. })));
}

#[test]
fn degenerate_inputs_are_rejected() {
    let flat = TriMesh::from_soup(&[
        [Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0)],
    ]);
    assert!(matches!(flat.validate(), Err(Error::DegenerateMesh(_))));
    let sliver = PolygonSet { loops: vec![vec![Point2::origin(), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)]] };
    assert!(matches!(sliver.validate(), Err(Error::DegenerateMesh(_))));
    assert!(matches!(PolygonSet { loops: vec![] }.validate(), Err(Error::DegenerateMesh(_))));
}

#[test]
fn overlap_primitives() {
    let tri = [Point3::new(-1.0, -1.0, 0.2), Point3::new(3.0, -1.0, 0.2), Point3::new(-1.0, 3.0, 0.2)];
    assert!(triangle_box_overlap(&Point3::origin(), 0.5, &tri));
    let far = tri.map(|p| p + Vector3::new(0.0, 0.0, 1.0));
    assert!(!triangle_box_overlap(&Point3::origin(), 0.5, &far));
    // Touching a face only does not count.
    let touching = tri.map(|p| Point3::new(p.x, p.y, 0.5));
    assert!(!triangle_box_overlap(&Point3::origin(), 0.5, &touching));
    let c = Point2::origin();
    assert!(segment_box_overlap(&c, 0.5, &Point2::new(-2.0, 0.1), &Point2::new(2.0, 0.1)));
    assert!(!segment_box_overlap(&c, 0.5, &Point2::new(-2.0, 0.5), &Point2::new(2.0, 0.5)));
    assert!(!segment_box_overlap(&c, 0.5, &Point2::new(0.6, -2.0), &Point2::new(0.6, 2.0)));
}

proptest! {
    #[test]
    fn conservative_contains_centroid(
        lo in prop::array::uniform3(-3.0f64..0.0),
        size in prop::array::uniform3(0.3f64..4.0),
        spacing in 0.3f64..1.2,
    ) {
        let hi = [lo[0] + size[0], lo[1] + size[1], lo[2] + size[2]];
        let s = Solid::Mesh(TriMesh::cuboid(Point3::from(lo), Point3::from(hi)));
        let cons = voxelize(&s, spacing, Policy::Conservative).unwrap();
        let cent = voxelize_into(&s, cons.frame(), Policy::Centroid);
        prop_assert_eq!(cent.subtract(&cons).unwrap().count(), 0);
        // Every cell meeting the box is marked.
        let f = *cons.frame();
        for l in 0..f.len() {
            let c = f.cell_center(f.unlinear(l));
            let h = f.spacing / 2.0;
            let meets = (0..3).all(|a| c[a] + h > lo[a] && c[a] - h < hi[a]);
            prop_assert_eq!(cons.values()[l], meets);
        }
    }

    #[test]
    fn polygon_centroid_matches_point_test(
        pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..7),
    ) {
        // Star-shaped polygon around the origin sorted by angle.
        let mut pts: Vec<Point2<f64>> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
        pts.sort_by(|a, b| a.y.atan2(a.x).total_cmp(&b.y.atan2(b.x)));
        let poly = PolygonSet { loops: vec![pts] };
        prop_assume!(poly.validate().is_ok());
        let s = Solid::Polygons(poly.clone());
        let g = voxelize(&s, 0.37, Policy::Centroid).unwrap();
        let f = *g.frame();
        for l in 0..f.len() {
            let c = f.cell_center(f.unlinear(l));
            let q = Point2::new(c.x, c.y);
            if poly.edges().any(|(a, b)| peelplan::motion::collide::segment_point_distance(&a, &b, &q) < 1e-9) {
                continue;
            }
            let inside = peelplan::motion::collide::polygon_winding(&poly, &q) != 0;
            prop_assert_eq!(g.values()[l], inside);
        }
    }
}

fn bfs_components(grid: &VoxelGrid<bool>, conn: Connectivity) -> Vec<Vec<usize>> {
    let f = *grid.frame();
    let offs = f.neighbours(conn);
    let mut seen = vec![false; f.len()];
    let mut out = Vec::new();
    for start in 0..f.len() {
        if !grid.values()[start] || seen[start] {
            continue;
        }
        let mut comp = vec![];
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        while let Some(l) = q.pop_front() {
            comp.push(l);
            let i = f.unlinear(l);
            for o in &offs {
                let n = [i[0] as i64 + o[0], i[1] as i64 + o[1], i[2] as i64 + o[2]];
                if f.contains_index(n) {
                    let m = f.linear([n[0] as usize, n[1] as usize, n[2] as usize]);
                    if grid.values()[m] && !seen[m] {
                        seen[m] = true;
                        q.push_back(m);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

proptest! {
    #[test]
    fn components_match_bfs(
        bits in prop::collection::vec(any::<bool>(), 6 * 5 * 4),
        full in any::<bool>(),
        two_d in any::<bool>(),
    ) {
        let (dims, dim) = if two_d { ([10, 12, 1], Dim::Two) } else { ([6, 5, 4], Dim::Three) };
        let frame = GridFrame { origin: Point3::origin(), spacing: 1.0, dims, dim };
        let values: Vec<bool> = bits.into_iter().cycle().take(frame.len()).collect();
        let grid = VoxelGrid::from_values(frame, values);
        let conn = if full { Connectivity::Full } else { Connectivity::Face };
        let lab = label_components(&grid, conn);
        prop_assert_eq!(lab.cells(), bfs_components(&grid, conn));
        prop_assert_eq!(lab.count, lab.cells().len());
    }
}

#[test]
fn diagonal_support_is_one_component_but_two_features() {
    let frame = GridFrame { origin: Point3::origin(), spacing: 1.0, dims: [6, 6, 1], dim: Dim::Two };
    let at = |x: usize, y: usize| frame.linear([x, y, 0]);
    let part = VoxelGrid::from_cells(frame, (0..6).map(|x| at(x, 5)));
    // Two cells under the part, joined through a diagonal chain below.
    let support = VoxelGrid::from_cells(frame, [at(1, 4), at(2, 3), at(3, 4)]);
    let dec = decompose(&part, &support, 1).unwrap();
    assert_eq!(dec.components.len(), 1);
    assert_eq!(dec.features.len(), 2);
    assert_eq!(dec.components[0].features, vec![0, 1]);
    assert!(dec.detached.is_empty());
    for f in &dec.features {
        assert_eq!(f.query_points[0], f.representative);
        assert!(f.cells.contains(&f.representative));
        assert_eq!(f.ring, f.cells);
    }
}

#[test]
fn features_are_support_cells_touching_the_part() {
    let fx = peelplan::fixtures::l_part();
    let scene = Scene::build(fx.scene).unwrap();
    let dec = scene.decompose(3).unwrap();
    let f = scene.frame;
    let part = &scene.part_grid;
    for feat in &dec.features {
        assert!(feat.query_points.len() <= 3 && !feat.query_points.is_empty());
        for &l in &feat.cells {
            assert!(scene.support_grid.values()[l]);
            let i = f.unlinear(l);
            let touches = f.neighbours(Connectivity::Face).iter().any(|o| {
                let n = [i[0] as i64 + o[0], i[1] as i64 + o[1], i[2] as i64 + o[2]];
                part.get_signed(n) == Some(true)
            });
            assert!(touches);
        }
    }
    // Two columns plus the corner block; the block touches both leg and arm faces.
    assert_eq!(dec.components.len(), 3);
    assert_eq!(dec.features.len(), 3);
}

#[test]
fn detached_support_has_no_features() {
    let mut fx = peelplan::fixtures::two_square();
    fx.scene.support = Some(Solid::Polygons(PolygonSet::union_of([
        PolygonSet::rect(Point2::new(6.0, 1.0), Point2::new(10.0, 5.0)),
        PolygonSet::rect(Point2::new(12.0, 1.0), Point2::new(14.0, 5.0)),
    ])));
    let scene = Scene::build(fx.scene).unwrap();
    let dec = scene.decompose(1).unwrap();
    assert_eq!(dec.components.len(), 2);
    assert_eq!(dec.detached, vec![1]);
    assert_eq!(dec.attached().count(), 1);
}

#[test]
fn scene_checks_inputs() {
    let mut fx = peelplan::fixtures::two_square();
    fx.scene.tool_tip = Point3::new(5.0, 3.0, 0.0);
    assert!(matches!(Scene::build(fx.scene.clone()), Err(Error::TipOffSurface { .. })));
    fx.scene.tool_tip = Point3::origin();
    fx.scene.tool = cube(0.0, 1.0);
    assert!(matches!(Scene::build(fx.scene.clone()), Err(Error::DimensionMismatch(_))));
    let mut fx = peelplan::fixtures::two_square();
    fx.scene.spacing = 0.0;
    assert!(matches!(Scene::build(fx.scene), Err(Error::Config(_))));
}

#[test]
fn scene_layers_are_disjoint() {
    let fx = peelplan::fixtures::bracket(true);
    let scene = Scene::build(fx.scene).unwrap();
    assert_eq!(scene.part_grid.intersection(&scene.support_grid).unwrap().count(), 0);
    assert_eq!(scene.fixture_grid.intersection(&scene.support_grid).unwrap().count(), 0);
    assert_eq!(scene.support_grid.count(), 16 * 4 * 11);
    assert_eq!(scene.part_grid.count(), 3 * 16 * 14 + 14 * 16 * 3);
    assert!((scene.tool_radius() - (0.45f64 * 0.45 * 2.0 + 36.0).sqrt()).abs() < 1e-12);
    let dec = scene.decompose(1).unwrap();
    let shells = scene.support_shells(&dec);
    assert_eq!(shells.len(), 16);
    let mut owners: Vec<usize> = shells.iter().map(|s| s.component.unwrap()).collect();
    owners.sort_unstable();
    assert_eq!(owners, (0..16).collect::<Vec<_>>());
}

#[test]
fn grid_frames_align_to_spacing() {
    let b = Aabb { min: Point3::new(0.3, -1.2, 2.0), max: Point3::new(2.9, 1.0, 3.1) };
    let f = GridFrame::covering(&b, 0.5, 1, Dim::Three);
    for a in 0..3 {
        let k = f.origin[a] / 0.5;
        assert!((k - k.round()).abs() < 1e-9);
        assert!(f.origin[a] < b.min[a] && f.aabb().max[a] > b.max[a]);
    }
    let p = Point3::new(1.1, 0.2, 2.6);
    let i = f.cell_of(&p);
    let c = f.cell_center([i[0] as usize, i[1] as usize, i[2] as usize]);
    assert!((0..3).all(|a| (c[a] - p[a]).abs() <= 0.25 + 1e-12));
    let g = VoxelGrid::from_cells(f, [f.linear([3, 3, 3])]);
    assert_eq!(g.dilate(1).count(), 27);
    assert!(matches!(
        g.union(&VoxelGrid::new(GridFrame::covering(&b, 1.0, 1, Dim::Three))),
        Err(Error::FrameMismatch)
    ));
}

#[test]
fn stl_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = uv_sphere(2.0, 8);
    for (name, ascii) in [("a.stl", true), ("b.stl", false)] {
        let p = dir.path().join(name);
        if ascii {
            write_stl_ascii(&mesh, &p).unwrap();
        } else {
            write_stl_binary(&mesh, &p).unwrap();
        }
        let back = read_stl(&p).unwrap();
        back.validate().unwrap();
        assert_eq!(back.triangles.len(), mesh.triangles.len());
        assert!((back.signed_volume() - mesh.signed_volume()).abs() < 1e-4);
    }
}

#[test]
fn obj_and_polygon_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = TriMesh::cuboid(Point3::new(1.0, 2.0, 3.0), Point3::new(2.5, 4.0, 3.5));
    let p = dir.path().join("m.obj");
    write_obj(&mesh, &p).unwrap();
    assert_eq!(read_obj(&p).unwrap(), mesh);
    assert_eq!(read_solid(&p).unwrap(), Solid::Mesh(mesh));

    let poly = PolygonSet::union_of([
        PolygonSet::rect(Point2::new(0.0, 0.0), Point2::new(3.0, 1.5)),
        PolygonSet::rect(Point2::new(-1.25, 4.0), Point2::new(0.0, 5.0)),
    ]);
    let p = dir.path().join("p.poly");
    write_polygons(&poly, &p).unwrap();
    assert_eq!(read_polygons(&p).unwrap(), poly);
}

#[test]
fn obj_quads_and_negative_indices() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("q.obj");
    let text = "# unit cube as quads\n\
        v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
        f 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf -8 -4 -1 -5\n";
    std::fs::write(&p, text).unwrap();
    let m = read_obj(&p).unwrap();
    assert_eq!(m.triangles.len(), 12);
    m.validate().unwrap();
    assert!((m.signed_volume() - 1.0).abs() < 1e-12);
}

#[test]
fn polygon_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("shape.txt");
    std::fs::write(&p, "# square\n0 0\n2 0\n2 2\n0 2\n0 0\n\n# second\n5 5\n6 5\n6 6\n").unwrap();
    let s = read_polygons(&p).unwrap();
    assert_eq!(s.loops.len(), 2);
    assert_eq!(s.loops[0].len(), 4);
    assert_eq!(s.signed_area(), 4.5);
    std::fs::write(&p, "0 0\n1 x\n").unwrap();
    assert!(matches!(read_polygons(&p), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn vtk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let frame = GridFrame { origin: Point3::new(-1.0, 0.0, 0.0), spacing: 0.5, dims: [3, 2, 2], dim: Dim::Three };
    let g = VoxelGrid::from_values(frame, (0..12u32).collect());
    let p = dir.path().join("g.vtk");
    write_vtk(&g, "counts", &p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("# vtk DataFile Version"));
    assert!(text.contains("DATASET STRUCTURED_POINTS"));
    let (dims, values) = read_vtk_values(&p).unwrap();
    assert_eq!(dims, [3, 2, 2]);
    assert_eq!(values, (0..12).map(f64::from).collect::<Vec<_>>());
}

#[test]
fn polyline_obj_lists_points_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("trace.obj");
    write_polyline_obj(&[Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(1.0, 2.0, 0.0)], &p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 3);
    assert!(text.lines().any(|l| l == "l 1 2 3"));
}
