//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::collections::BTreeSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{Matrix4, Point3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use peelplan::cspace::{contact_space, OverlapEngine, ToolRaster, ToolStack};
use peelplan::fixtures::{self, Fixture};
use peelplan::job::{self, JobConfig, RunOptions, ValidateOptions, Verdict};
use peelplan::motion::{CollisionChecker, LegError, LegPlanner, ToolModel};
use peelplan::rounds::{removable_rounds, PlanStatus};
use peelplan::se3::{
    random_rotation, riemannian_distance, sample_rotations, MetricWeights, RigidTransform,
    SamplingMethod,
};
use peelplan::sequencing::{exact_tour, tsp_tour, FiberGraph};
use peelplan::solids::{Decomposition, Dim, GridFrame, Policy, Scene, Solid, TriMesh, VoxelGrid};

const BUDGET: u64 = 4 << 30;

fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

// ---------------------------------------------------------------- oracles

/// Overlap of a rasterised tool with its tip at `tip` (near-net cell
/// coordinates, possibly outside the grid), by direct counting.
fn brute_count(near: &VoxelGrid<bool>, tool: &ToolRaster, tip: [i64; 3]) -> u32 {
    let d = near.frame().dims;
    let mut n = 0;
    for c in &tool.cells {
        let p = [tip[0] + c[0] as i64, tip[1] + c[1] as i64, tip[2] + c[2] as i64];
        if (0..3).all(|a| p[a] >= 0 && p[a] < d[a] as i64)
            && near.values()[p[0] as usize + d[0] * (p[1] as usize + d[1] * p[2] as usize)]
        {
            n += 1;
        }
    }
    n
}

/// Shifted-sum field: for every tip cell, the sum over tool cells of the
/// shifted indicator. Indexed like the engine's padded field.
fn shifted_sum_field(near: &VoxelGrid<bool>, tool: &ToolRaster, pad: [usize; 3], fdims: [usize; 3]) -> Vec<u32> {
    let nd = near.frame().dims;
    let mut out = vec![0u32; fdims[0] * fdims[1] * fdims[2]];
    for c in &tool.cells {
        for fz in 0..fdims[2] {
            let z = fz as i64 - pad[2] as i64 + c[2] as i64;
            if z < 0 || z >= nd[2] as i64 {
                continue;
            }
            for fy in 0..fdims[1] {
                let y = fy as i64 - pad[1] as i64 + c[1] as i64;
                if y < 0 || y >= nd[1] as i64 {
                    continue;
                }
                let row = nd[0] * (y as usize + nd[1] * z as usize);
                let frow = fdims[0] * (fy + fdims[1] * fz);
                for fx in 0..fdims[0] {
                    let x = fx as i64 - pad[0] as i64 + c[0] as i64;
                    if x >= 0 && x < nd[0] as i64 && near.values()[row + x as usize] {
                        out[frow + fx] += 1;
                    }
                }
            }
        }
    }
    out
}

fn random_grid(rng: &mut ChaCha8Rng, dims: [usize; 3], dim: Dim, density: f64) -> VoxelGrid<bool> {
    let frame = GridFrame { origin: Point3::origin(), spacing: 1.0, dims, dim };
    let values = (0..frame.len()).map(|_| rng.gen_bool(density)).collect();
    VoxelGrid::from_values(frame, values)
}

fn random_tool(rng: &mut ChaCha8Rng, dim: Dim) -> Solid {
    let mut m = TriMesh::default();
    let mut loops = Vec::new();
    for _ in 0..3 {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..3 {
            let x: f64 = rng.gen_range(-4.4..4.4);
            let y: f64 = rng.gen_range(-4.4..4.4);
            lo[a] = x.min(y) - 0.3;
            hi[a] = x.max(y) + 0.3;
        }
        match dim {
            Dim::Three => m.append(&TriMesh::cuboid(Point3::from(lo), Point3::from(hi))),
            Dim::Two => loops.extend(
                peelplan::solids::PolygonSet::rect(
                    nalgebra::Point2::new(lo[0], lo[1]),
                    nalgebra::Point2::new(hi[0], hi[1]),
                )
                .loops,
            ),
        }
    }
    match dim {
        Dim::Three => Solid::Mesh(m),
        Dim::Two => Solid::Polygons(peelplan::solids::PolygonSet { loops }),
    }
}

/// Principal matrix logarithm by inverse scaling and squaring
/// (Denman-Beavers square roots, then a Gregory series).
fn matrix_log(a: &Matrix4<f64>) -> Matrix4<f64> {
    let id = Matrix4::identity();
    let mut x = *a;
    let mut k = 0;
    while (x - id).norm() > 1e-3 {
        let mut y = x;
        let mut z = id;
        for _ in 0..100 {
            let yi = y.try_inverse().unwrap();
            let zi = z.try_inverse().unwrap();
            let yn = (y + zi) * 0.5;
            let zn = (z + yi) * 0.5;
            let done = (yn - y).norm() < 1e-15 * yn.norm();
            y = yn;
            z = zn;
            if done {
                break;
            }
        }
        x = y;
        k += 1;
    }
    // log(x) = 2 atanh((x - I)(x + I)^-1)
    let s = (x - id) * (x + id).try_inverse().unwrap();
    let s2 = s * s;
    let mut term = s;
    let mut sum = Matrix4::zeros();
    for n in 0..40 {
        sum += term / (2 * n + 1) as f64;
        term *= s2;
    }
    sum * 2.0 * (1u64 << k) as f64
}

fn homogeneous(t: &RigidTransform) -> Matrix4<f64> {
    let [w, x, y, z] = t.rotation.wxyz();
    let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
    let mut m = q.to_homogeneous();
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t.translation);
    m
}

fn random_transform(rng: &mut ChaCha8Rng, half: f64) -> RigidTransform {
    let t = Vector3::new(rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(-half..half));
    RigidTransform::new(random_rotation(rng), t)
}

fn scene_of(fx: &Fixture) -> (Scene, Decomposition) {
    let scene = Scene::build(fx.scene.clone()).expect("fixture scene");
    let dec = scene.decompose(1).expect("decomposition");
    (scene, dec)
}

fn tools_of(scene: &Scene, n: usize, method: SamplingMethod) -> (peelplan::se3::RotationSample, ToolStack) {
    let rot = sample_rotations(n, method, 0, scene.dim).unwrap();
    let tools = ToolStack::build(&scene.tool, &rot, scene.spacing, scene.policy, scene.tool_radius());
    (rot, tools)
}

// ---------------------------------------------------------------- criteria

fn convolution_oracle() -> String {
    let mut checked = 0usize;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        for dim in [Dim::Three, Dim::Two] {
            // The first seed uses the largest grids.
            let dims = match (dim, seed) {
                (Dim::Three, 0) => [32; 3],
                (Dim::Two, 0) => [128, 128, 1],
                (Dim::Three, _) => [0; 3].map(|_| rng.gen_range(12..=32)),
                (Dim::Two, _) => [rng.gen_range(64..=128), rng.gen_range(64..=128), 1],
            };
            let density = rng.gen_range(0.05..0.6);
            let near = random_grid(&mut rng, dims, dim, density);
            let tool = random_tool(&mut rng, dim);
            let method = if dim == Dim::Three { SamplingMethod::Fibonacci } else { SamplingMethod::Grid2d };
            let rot = sample_rotations(8, method, seed, dim).unwrap();
            let radius = tool.vertices().iter().map(|v| v.coords.norm()).fold(0.0, f64::max);
            let stack = ToolStack::build(&tool, &rot, 1.0, Policy::Conservative, radius);
            let engine = OverlapEngine::new(&near, stack.pad, BUDGET).unwrap();
            let fdims = engine.field_frame().dims;
            for raster in &stack.rasters {
                let field = engine.field(raster);
                let oracle = shifted_sum_field(&near, raster, stack.pad, fdims);
                assert_eq!(field.counts.values(), &oracle[..], "seed {seed} {dim:?} rotation {}", raster.rotation_index);
                checked += oracle.len();
            }
        }
    }
    format!("20 seeds, 3D and 2D, 8 rotations each, {checked} translations exact")
}

fn contact_equivalence() -> String {
    let mut total = 0usize;
    for fx in [fixtures::two_square(), fixtures::l_part(), fixtures::forest()] {
        let (scene, dec) = scene_of(&fx);
        let live: Vec<usize> = dec.attached().map(|c| c.id).collect();
        let near = peelplan::rounds::round_near_net(&scene, &dec, &live).unwrap();
        for n1 in [8, 16] {
            let (_, tools) = tools_of(&scene, n1, SamplingMethod::Grid2d);
            for eps in [2.0, 3.0] {
                let space = contact_space(&near, &tools, eps, BUDGET).unwrap();
                let got: BTreeSet<(usize, usize)> = space.entries().iter().map(|&(s, l, _)| (s, l)).collect();
                let sf = space.frame;
                let mut want = BTreeSet::new();
                let margin = 3i64;
                for (s, raster) in tools.rasters.iter().enumerate() {
                    for y in -margin..sf.dims[1] as i64 + margin {
                        for x in -margin..sf.dims[0] as i64 + margin {
                            let tip = [x - tools.pad[0] as i64, y - tools.pad[1] as i64, 0];
                            let c = brute_count(&near, raster, tip);
                            if c > 0 && (c as f64) < eps {
                                let inside = x >= 0 && y >= 0 && x < sf.dims[0] as i64 && y < sf.dims[1] as i64;
                                assert!(inside, "{}: contact outside the field frame", fx.name);
                                want.insert((s, x as usize + sf.dims[0] * y as usize));
                            }
                        }
                    }
                }
                assert_eq!(got, want, "{} n1={n1} eps={eps}", fx.name);
                total += want.len();
            }
        }
    }
    format!("two-square, l-part, forest; n1 in {{8,16}}, eps in {{2,3}}; {total} contacts matched")
}

fn forest_recursion() -> String {
    let fx = fixtures::forest();
    let (scene, dec) = scene_of(&fx);
    let (_, tools) = tools_of(&scene, fx.rotations, fx.method);
    let eps = fx.epsilon_voxels;
    let outcome = removable_rounds(&scene, &dec, &tools, eps, BUDGET).unwrap();

    // Brute-force peel.
    let mut live: Vec<usize> = dec.attached().map(|c| c.id).collect();
    let mut oracle_rounds: Vec<Vec<usize>> = Vec::new();
    while !live.is_empty() {
        let near = peelplan::rounds::round_near_net(&scene, &dec, &live).unwrap();
        let dims = near.frame().dims;
        let reachable_at = |cells: &[usize]| {
            cells.iter().any(|&cell| {
                let tip = [(cell % dims[0]) as i64, ((cell / dims[0]) % dims[1]) as i64, (cell / (dims[0] * dims[1])) as i64];
                tools.rasters.iter().any(|r| {
                    let c = brute_count(&near, r, tip);
                    c > 0 && (c as f64) < eps
                })
            })
        };
        let removable: Vec<usize> = live
            .iter()
            .copied()
            .filter(|&c| {
                dec.components[c].features.iter().all(|&f| {
                    let feat = &dec.features[f];
                    let ring: Vec<usize> = feat.ring.iter().copied().filter(|x| !feat.query_points.contains(x)).collect();
                    reachable_at(&feat.query_points) || reachable_at(&ring)
                })
            })
            .collect();
        if removable.is_empty() {
            break;
        }
        live.retain(|c| !removable.contains(c));
        oracle_rounds.push(removable);
    }
    let got: Vec<Vec<usize>> = outcome.rounds.iter().map(|r| r.removed.clone()).collect();
    assert_eq!(outcome.status, PlanStatus::AllRemoved);
    assert_eq!(got, oracle_rounds, "rounds differ from the brute-force peel");
    let sizes: Vec<usize> = got.iter().map(Vec::len).collect();
    assert_eq!(sizes, vec![8, 4]);
    format!("rounds {sizes:?}, AllRemoved, equal to brute-force peel")
}

fn non_manufacturability() -> String {
    let fx = fixtures::internal_void();
    let (scene, dec) = scene_of(&fx);
    let (_, tools) = tools_of(&scene, fx.rotations, fx.method);
    let outcome = removable_rounds(&scene, &dec, &tools, fx.epsilon_voxels, BUDGET).unwrap();
    let f = scene.frame;
    let trapped: Vec<usize> = dec
        .attached()
        .filter(|c| c.cells.iter().all(|&l| f.cell_center(f.unlinear(l)).y > 9.0))
        .map(|c| c.id)
        .collect();
    assert_eq!(trapped.len(), 1);
    assert_eq!(outcome.rounds.len(), 1, "stalls right after the first round");
    match &outcome.status {
        PlanStatus::Unreachable { remaining, blocking_features } => {
            assert_eq!(remaining, &trapped);
            let own: BTreeSet<usize> = dec.components[trapped[0]].features.iter().copied().collect();
            assert!(!blocking_features.is_empty());
            assert!(blocking_features.iter().all(|b| own.contains(b)));
            format!("Unreachable after round 1, trapped component {} named", trapped[0])
        }
        other => panic!("expected Unreachable, got {other:?}"),
    }
}

fn tsp_audit() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let metric = MetricWeights::default().with_length_scale(10.0);
    let mut violations = 0;
    let mut bounded = 0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=6);
        let reference = random_transform(&mut rng, 5.0);
        let fibers: Vec<(usize, Vec<RigidTransform>)> =
            (0..n).map(|i| (i, vec![random_transform(&mut rng, 5.0)])).collect();
        let graph = FiberGraph::build(reference, &fibers, metric).unwrap();
        let tour = tsp_tour(&graph);
        let pts: Vec<RigidTransform> = std::iter::once(reference).chain(fibers.iter().map(|f| f.1[0])).collect();
        let d = |a: usize, b: usize| riemannian_distance(&pts[a], &pts[b], &metric);
        let v = pts.len();

        // Exhaustive optimum over visiting orders.
        let mut perm: Vec<usize> = (1..v).collect();
        let mut best = f64::INFINITY;
        permutations(&mut perm, 0, &mut |p| {
            let mut c = d(0, p[0]) + d(p[p.len() - 1], 0);
            for w in p.windows(2) {
                c += d(w[0], w[1]);
            }
            best = best.min(c);
        });
        // Independent Prim tree weight.
        let mut in_tree = vec![false; v];
        let mut key = vec![f64::INFINITY; v];
        key[0] = 0.0;
        let mut mst = 0.0;
        for _ in 0..v {
            let u = (0..v).filter(|&i| !in_tree[i]).min_by(|&a, &b| key[a].total_cmp(&key[b])).unwrap();
            in_tree[u] = true;
            mst += key[u];
            for w in 0..v {
                if !in_tree[w] {
                    key[w] = key[w].min(d(u, w));
                }
            }
        }
        let mut triangle = true;
        for a in 0..v {
            for b in 0..v {
                for c in 0..v {
                    if d(a, c) > d(a, b) + d(b, c) + 1e-12 {
                        triangle = false;
                    }
                }
            }
        }
        assert!(tour.cost >= best - 1e-9, "tour {} below optimum {best}", tour.cost);
        assert!((tour.mst_weight - mst).abs() <= 1e-9, "tree weight {} vs {mst}", tour.mst_weight);
        if triangle {
            assert!(tour.cost <= 2.0 * mst + 1e-9, "tour {} above twice the tree {mst}", tour.cost);
            bounded += 1;
        } else {
            violations += 1;
            report(&format!("  criterion 5: instance with triangle violations (tour {}, 2*MST {})", tour.cost, 2.0 * mst));
        }
        if n <= 6 {
            let exact = exact_tour(&graph).unwrap();
            assert!((exact.cost - best).abs() <= 1e-9, "exact tour {} vs optimum {best}", exact.cost);
        }
    }
    format!("50 instances, optimum <= tour, {bounded} checked against 2*MST, {violations} triangle violations logged")
}

fn permutations(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if p.is_empty() {
        f(p);
        return;
    }
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

fn metric_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let unit = MetricWeights::default();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a = random_transform(&mut rng, 0.5);
        let b = random_transform(&mut rng, 0.5);
        let rel = homogeneous(&a).try_inverse().unwrap() * homogeneous(&b);
        let oracle = matrix_log(&rel).norm();
        let got = riemannian_distance(&a, &b, &unit);
        worst = worst.max((oracle - got).abs());
        assert!((oracle - got).abs() <= 1e-8, "distance {got} vs matrix log {oracle}");
    }
    for _ in 0..1000 {
        let a = random_transform(&mut rng, 0.5);
        let b = random_transform(&mut rng, 0.5);
        let c = random_transform(&mut rng, 0.5);
        let (ab, ba) = (riemannian_distance(&a, &b, &unit), riemannian_distance(&b, &a, &unit));
        assert!((ab - ba).abs() <= 1e-7, "asymmetric: {ab} vs {ba}");
        let (bc, ac) = (riemannian_distance(&b, &c, &unit), riemannian_distance(&a, &c, &unit));
        assert!(ac <= ab + bc + 1e-7, "triangle: {ac} > {ab} + {bc}");
    }
    format!("1000 pairs within 1e-8 of the matrix-log norm (worst {worst:.1e}); 1000 triples symmetric and triangular")
}

fn path_validity() -> String {
    let dir = tempfile::tempdir().unwrap();
    let config_path = job::write_fixture(&fixtures::bracket(true), dir.path()).unwrap();
    let config = JobConfig::load(&config_path).unwrap();
    let result = job::run(&config, &RunOptions::default()).unwrap();
    let doc = &result.document;
    assert_eq!(doc.status, Verdict::AllRemovedWithPaths, "bracket verdict");
    assert!(doc.rounds.len() >= 2, "bracket should need several rounds");
    let report = job::validate(doc, &config, &ValidateOptions::default()).unwrap();
    let failures: Vec<_> = report.failures().collect();
    assert!(failures.is_empty(), "replay failures: {failures:?}");
    let replayed = report.of_kind("collision").count();
    let legs: usize = doc.rounds.iter().map(|r| r.paths.len()).sum();
    assert_eq!(replayed, legs);

    let (fx, start, goal) = fixtures::u_trap();
    let scene = Scene::build(fx.scene.clone()).unwrap();
    let dec = scene.decompose(1).unwrap();
    let (rot, tools) = tools_of(&scene, fx.rotations, fx.method);
    let model = ToolModel::new(&scene.tool, scene.spacing);
    let live: Vec<usize> = dec.attached().map(|c| c.id).collect();
    let near = peelplan::rounds::round_near_net(&scene, &dec, &live).unwrap();
    let checker = CollisionChecker::new(
        Default::default(),
        near,
        fx.planner.dilate,
        vec![scene.part.clone()],
        &tools,
        &rot,
        &model,
        fx.epsilon_voxels,
    );
    assert!(checker.clearance(&start) && checker.clearance(&goal), "trap endpoints must be clear");
    let metric = MetricWeights::default().with_length_scale(scene.bounds().diagonal());
    let planner = LegPlanner::new(&checker, &fx.planner, metric, scene.bounds());
    let began = Instant::now();
    let leg = planner.plan_leg(&start, &goal, 7);
    assert_eq!(leg.err(), Some(LegError::PathNotFound));
    format!(
        "bracket: {} rounds, {legs} legs replayed in mesh mode without collisions; u-trap PathNotFound after {} samples in {:.2} s",
        doc.rounds.len(),
        fx.planner.max_samples,
        began.elapsed().as_secs_f64()
    )
}

fn single_core<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

fn performance() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    // One orientation on a 128^3 near-net shape.
    let near = random_grid(&mut rng, [128; 3], Dim::Three, 0.3);
    let tool = random_tool(&mut rng, Dim::Three);
    let rot = sample_rotations(1, SamplingMethod::Hopf, 0, Dim::Three).unwrap();
    let radius = tool.vertices().iter().map(|v| v.coords.norm()).fold(0.0, f64::max);
    let stack = ToolStack::build(&tool, &rot, 1.0, Policy::Conservative, radius);
    let slice = single_core(|| {
        let t = Instant::now();
        let engine = OverlapEngine::new(&near, stack.pad, BUDGET).unwrap();
        let field = engine.field(&stack.rasters[0]);
        assert!(field.counts.values().iter().any(|&c| c > 0));
        t.elapsed()
    });
    assert!(slice < Duration::from_secs(5), "128^3 slice took {slice:?}");

    // Growth with the number of orientations.
    let near = random_grid(&mut rng, [40; 3], Dim::Three, 0.3);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n1 in [8usize, 16, 32, 64] {
        let rot = sample_rotations(n1, SamplingMethod::Fibonacci, 0, Dim::Three).unwrap();
        let stack = ToolStack::build(&tool, &rot, 1.0, Policy::Conservative, radius);
        let best = (0..3)
            .map(|_| {
                single_core(|| {
                    let t = Instant::now();
                    let space = contact_space(&near, &stack, 2.0, BUDGET).unwrap();
                    std::hint::black_box(space.len());
                    t.elapsed().as_secs_f64()
                })
            })
            .fold(f64::INFINITY, f64::min);
        xs.push((n1 as f64).ln());
        ys.push(best.ln());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    assert!((slope - 1.0).abs() <= 0.15, "time grows with exponent {slope:.3}");
    format!("128^3 slice in {:.2} s on one core; slice time exponent {slope:.3}", slice.as_secs_f64())
}

fn determinism() -> String {
    let mut bytes = 0;
    for fx in [fixtures::forest(), fixtures::bracket(true)] {
        let dir = tempfile::tempdir().unwrap();
        let config = JobConfig::load(&job::write_fixture(&fx, dir.path()).unwrap()).unwrap();
        let a = job::run(&config, &RunOptions::default()).unwrap().document.to_json();
        let b = single_core(|| job::run(&config, &RunOptions::default()).unwrap().document.to_json());
        assert_eq!(a, b, "{} plans differ", fx.name);
        bytes += a.len();
    }
    format!("forest and bracket plans byte-identical across runs ({bytes} bytes)")
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> String); 9] = [
        ("1 convolution oracle", convolution_oracle),
        ("2 contact equivalence", contact_equivalence),
        ("3 forest recursion", forest_recursion),
        ("4 non-manufacturability", non_manufacturability),
        ("5 tour bound and optimality", tsp_audit),
        ("6 metric oracle", metric_oracle),
        ("7 path validity", path_validity),
        ("8 scaled performance", performance),
        ("9 determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let started = Instant::now();
        match catch_unwind(AssertUnwindSafe(f)) {
            Ok(msg) => report(&format!("PASS criterion {name} ({:.1} s): {msg}", started.elapsed().as_secs_f64())),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                report(&format!("FAIL criterion {name}: {msg}"));
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
