use std::collections::BTreeSet;

use serde::Serialize;

use super::config::JobConfig;
use super::document::{PlanDocument, Verdict, SCHEMA_VERSION};
use super::pipeline::Prepared;
use crate::cspace::{classify_count, overlap_count, rasterize_tool, Classification};
use crate::error::Result;
use crate::motion::{CheckMode, CollisionChecker};
use crate::rounds::round_near_net;
use crate::se3::{riemannian_distance, RigidTransform};
use crate::solids::{voxelize_into, GridFrame, Policy, VoxelGrid};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub kind: String,
    pub subject: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub assertions: Vec<Assertion>,
}

impl ValidationReport {
    fn check(&mut self, kind: &str, subject: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion {
            kind: kind.into(),
            subject: subject.into(),
            passed,
            detail: if passed { String::new() } else { detail.into() },
        });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Assertion> {
        self.assertions.iter().filter(move |a| a.kind == kind)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOptions {
    /// Also classify every fracture configuration on a lattice of half the spacing.
    pub refine: bool,
}

fn same_job(a: &JobConfig, b: &JobConfig) -> bool {
    let strip = |c: &JobConfig| {
        let mut c = c.clone();
        c.mode = Default::default();
        c.exact_tsp = false;
        c.output_dir = Default::default();
        c.base_dir = Default::default();
        c
    };
    strip(a) == strip(b)
}

/// Re-checks a plan against the scene described by `config`, replaying
/// every path through the exact boundary checker.
pub fn validate(doc: &PlanDocument, config: &JobConfig, options: &ValidateOptions) -> Result<ValidationReport> {
    let mut rep = ValidationReport::default();
    rep.check(
        "schema",
        "plan",
        doc.schema_version == SCHEMA_VERSION,
        format!("schema version {} (expected {SCHEMA_VERSION})", doc.schema_version),
    );
    rep.check("config", "plan", same_job(&doc.config, config), "plan was produced from a different job");

    let prep = Prepared::new(config)?;
    let scene = &prep.scene;
    let dec = &prep.dec;
    let metric = prep.metric;
    let reference = doc.reference.to_transform();
    let eps = config.epsilon_voxels;

    let same_scene = doc.scene.components.len() == dec.components.len()
        && doc.scene.features.len() == dec.features.len()
        && doc
            .scene
            .components
            .iter()
            .zip(&dec.components)
            .all(|(r, c)| r.cells == c.cells.len() && r.features == c.features);
    rep.check("scene", "decomposition", same_scene, "components or features differ from the recomputed scene");

    // Partition of components into rounds.
    let attached: BTreeSet<usize> = dec.attached().map(|c| c.id).collect();
    let mut live = attached.clone();
    let mut problems = Vec::new();
    for r in &doc.rounds {
        let remaining: BTreeSet<usize> = r.remaining.iter().copied().collect();
        if remaining != live {
            problems.push(format!("round {} starts with {:?}, expected {:?}", r.index, remaining, live));
        }
        for c in &r.removed {
            if !live.remove(c) {
                problems.push(format!("round {} removes component {c} which is not present", r.index));
            }
        }
        if r.removed.is_empty() {
            problems.push(format!("round {} removes nothing", r.index));
        }
    }
    match &doc.status {
        Verdict::Unreachable { remaining, .. } => {
            let rem: BTreeSet<usize> = remaining.iter().copied().collect();
            if rem != live || rem.is_empty() {
                problems.push(format!("unreachable set {rem:?} but {live:?} remain"));
            }
        }
        _ => {
            if !live.is_empty() {
                problems.push(format!("components {live:?} are never removed"));
            }
        }
    }
    rep.check("partition", "rounds", problems.is_empty(), problems.join("; "));

    let any_failure = doc.rounds.iter().any(|r| r.failure.is_some());
    let verdict_ok = match &doc.status {
        Verdict::AllRemovedWithPaths => !any_failure,
        Verdict::PathFailure { round, leg, .. } => doc
            .rounds
            .iter()
            .find(|r| r.failure.is_some())
            .is_some_and(|r| r.index == *round && r.failure.as_ref().unwrap().leg == *leg),
        Verdict::Unreachable { remaining, blocking_features } => {
            let rem: BTreeSet<usize> = remaining.iter().copied().collect();
            !live.is_empty()
                && rem == live
                && !blocking_features.is_empty()
                && blocking_features.iter().all(|f| {
                    doc.scene.features.get(*f).is_some_and(|r| rem.contains(&r.component))
                })
        }
    };
    rep.check("verdict", "plan", verdict_ok, format!("verdict {} disagrees with the round records", doc.status.name()));

    for r in &doc.rounds {
        let t = r.index;
        let near_net = round_near_net(scene, dec, &r.remaining)?;
        let stops: Vec<RigidTransform> = r.sequence.stops.iter().map(|s| s.configuration.to_transform()).collect();

        let mut expected: Vec<usize> =
            r.removed.iter().flat_map(|&c| dec.components[c].features.iter().copied()).collect();
        let mut visited: Vec<usize> = r.sequence.stops.iter().map(|s| s.feature).collect();
        expected.sort_unstable();
        visited.sort_unstable();
        rep.check(
            "tour",
            format!("round {t}"),
            expected == visited,
            format!("visits {visited:?}, expected each of {expected:?} once"),
        );

        let mut wps = vec![reference];
        wps.extend(stops.iter().copied());
        wps.push(reference);
        let legs: Vec<f64> = wps.windows(2).map(|w| riemannian_distance(&w[0], &w[1], &metric)).collect();
        let total: f64 = legs.iter().sum();
        let tol = 1e-9 * total.max(1.0);
        let cost_ok = (total - r.sequence.cost).abs() <= tol
            && legs.len() == r.sequence.leg_costs.len()
            && legs.iter().zip(&r.sequence.leg_costs).all(|(a, b)| (a - b).abs() <= tol);
        rep.check(
            "cost",
            format!("round {t}"),
            cost_ok,
            format!("recorded cost {} but configurations give {total}", r.sequence.cost),
        );

        let voxel = CollisionChecker::new(
            CheckMode::Voxel,
            near_net.clone(),
            config.planner.dilate,
            Vec::new(),
            &prep.tools,
            &prep.rotations,
            &prep.tool_model,
            eps,
        );
        for (s, tau) in r.sequence.stops.iter().zip(&stops) {
            let c = voxel.voxel_classify(tau);
            let exact = prep.rotations.index_of(&tau.rotation) == Some(s.rotation_index);
            rep.check(
                "fiber_contact",
                format!("round {t} feature {}", s.feature),
                c.class == Classification::Contact && exact,
                format!("overlap {} (sampled rotation {exact})", c.count),
            );
        }

        let mesh = CollisionChecker::new(
            CheckMode::Mesh,
            near_net.clone(),
            0,
            prep.obstacles(&r.remaining),
            &prep.tools,
            &prep.rotations,
            &prep.tool_model,
            eps,
        );
        for p in &r.paths {
            let subject = format!("round {t} leg {}", p.leg);
            let w: Vec<RigidTransform> = p.waypoints.iter().map(|x| x.to_transform()).collect();
            let start = wps.get(p.leg).copied();
            let goal = wps.get(p.leg + 1).copied();
            let close = |a: Option<&RigidTransform>, b: Option<RigidTransform>| match (a, b) {
                (Some(a), Some(b)) => riemannian_distance(a, &b, &metric) <= 1e-9,
                _ => false,
            };
            rep.check(
                "endpoints",
                subject.clone(),
                close(w.first(), start) && close(w.last(), goal),
                "path does not join the recorded configurations",
            );
            let step = w.windows(2).map(|x| riemannian_distance(&x[0], &x[1], &metric)).fold(0.0, f64::max);
            rep.check(
                "step",
                subject.clone(),
                step <= doc.path_resolution * (1.0 + 1e-9),
                format!("step {step} exceeds resolution {}", doc.path_resolution),
            );
            let interior = |i: usize| i >= p.clear_from && i <= p.clear_to;
            let bad = |i: usize, tau: &RigidTransform, strict: bool| {
                let c = mesh.mesh_classify(tau);
                let ok = if strict { c == Classification::Free } else { c != Classification::Collide };
                (!ok).then(|| format!("waypoint {i} is {c:?}"))
            };
            let mut problem = None;
            if p.clear_from > p.clear_to || p.clear_to >= w.len() {
                problem = Some("clear range out of bounds".to_string());
            }
            for i in 0..w.len() {
                if problem.is_some() {
                    break;
                }
                problem = bad(i, &w[i], interior(i));
                if problem.is_none() && i + 1 < w.len() {
                    let mid = w[i].interpolate(&w[i + 1], 0.5);
                    problem = bad(i, &mid, interior(i) && interior(i + 1)).map(|m| format!("midpoint after {m}"));
                }
            }
            rep.check("collision", subject, problem.is_none(), problem.unwrap_or_default());
        }
        let expected_legs = match &r.failure {
            None => r.sequence.stops.len() + 1,
            Some(f) => f.leg,
        };
        rep.check(
            "legs",
            format!("round {t}"),
            r.paths.len() == expected_legs,
            format!("{} paths, expected {expected_legs}", r.paths.len()),
        );

        if options.refine {
            refined_contacts(&mut rep, &prep, r.index, &r.remaining, &r.sequence.stops, &stops, eps)?;
        }
    }
    Ok(rep)
}

/// Classifies fracture configurations on a lattice of half the spacing
/// (cell centres of the original lattice stay cell centres) with the same
/// tolerated overlap volume. Both the geometry and the tool are sampled at
/// cell centres so the counts estimate true overlap volumes.
fn refined_contacts(
    rep: &mut ValidationReport,
    prep: &Prepared,
    round: usize,
    remaining: &[usize],
    records: &[super::document::StopRecord],
    stops: &[RigidTransform],
    eps: f64,
) -> Result<()> {
    let scene = &prep.scene;
    let coarse = scene.frame;
    let h = coarse.spacing / 2.0;
    let axes = scene.dim.count();
    let mut frame = GridFrame { origin: coarse.origin, spacing: h, dims: coarse.dims, dim: scene.dim };
    for a in 0..axes {
        frame.origin[a] += h / 2.0;
        frame.dims[a] = 2 * coarse.dims[a] - 1;
    }
    let mut fine = VoxelGrid::<bool>::new(frame);
    for o in &prep.obstacles(remaining) {
        fine = fine.union(&voxelize_into(o, &frame, Policy::Centroid))?;
    }
    let eps_fine = eps * (1u32 << axes) as f64;
    for (s, tau) in records.iter().zip(stops) {
        let raster = rasterize_tool(&scene.tool, s.rotation_index, &tau.rotation, h, Policy::Centroid);
        let tip = frame.cell_of(&nalgebra::Point3::from(tau.translation));
        let count = overlap_count(&fine, &raster, tip);
        let class = classify_count(count, eps_fine);
        rep.check(
            "refined_contact",
            format!("round {round} feature {}", s.feature),
            class == Classification::Contact,
            format!("overlap {count} at half spacing is {class:?}"),
        );
    }
    Ok(())
}
