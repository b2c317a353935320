use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use nalgebra::Vector3;
use serde::Serialize;

use super::config::{JobConfig, TransformRecord};
use super::document::*;
use crate::cspace::{contact_space_with_fields, projected_contact_field, ToolStack};
use crate::error::{Error, Result};
use crate::motion::{plan_round, CollisionChecker, LegPlanner, ToolModel};
use crate::rounds::{removable_rounds_observed, PlanStatus, RoundView};
use crate::se3::{riemannian_distance, sample_rotations, MetricWeights, RigidTransform, Rotation, RotationSample};
use crate::sequencing::plan_sequence;
use crate::solids::io::{write_polyline_obj, write_vtk};
use crate::solids::{Decomposition, Dim, Scene, Solid, VoxelGrid};

/// Scene state shared by planning and validation.
pub struct Prepared {
    pub scene: Scene,
    pub dec: Decomposition,
    pub rotations: RotationSample,
    pub tools: ToolStack,
    pub tool_model: ToolModel,
    pub metric: MetricWeights,
    pub reference: RigidTransform,
    /// Support boundary pieces merged per owning component (`None` for
    /// pieces that touch no component cell).
    pub shells: BTreeMap<Option<usize>, Solid>,
}

impl Prepared {
    pub fn new(config: &JobConfig) -> Result<Self> {
        let scene = Scene::build(config.scene_input()?)?;
        let dec = scene.decompose(config.query_points)?;
        let rotations = sample_rotations(config.rotations.count, config.method(), config.rotations.seed, scene.dim)?;
        let radius = scene.tool_radius();
        let tools = ToolStack::build(&scene.tool, &rotations, scene.spacing, scene.policy, radius);
        let tool_model = ToolModel::new(&scene.tool, scene.spacing);
        let bounds = scene.bounds();
        let metric = MetricWeights { rotation: config.metric.w_rot, translation: config.metric.w_trans, length_scale: 1.0 }
            .with_length_scale(bounds.diagonal().max(scene.spacing));
        let reference = match &config.reference {
            Some(r) => r.to_transform(),
            None => {
                let c = bounds.center();
                let lift = radius + 2.0 * scene.spacing;
                let t = match scene.dim {
                    Dim::Two => Vector3::new(c.x, bounds.max.y + lift, 0.0),
                    Dim::Three => Vector3::new(c.x, c.y, bounds.max.z + lift),
                };
                RigidTransform::new(Rotation::identity(), t)
            }
        };
        let mut groups: BTreeMap<Option<usize>, Vec<Solid>> = BTreeMap::new();
        for s in scene.support_shells(&dec) {
            groups.entry(s.component).or_default().push(s.solid);
        }
        let shells = groups
            .into_iter()
            .filter_map(|(k, v)| Solid::merged(&v).map(|s| (k, s)))
            .collect();
        Ok(Prepared { scene, dec, rotations, tools, tool_model, metric, reference, shells })
    }

    /// Boundary geometry present while the components in `live` remain.
    pub fn obstacles(&self, live: &[usize]) -> Vec<Solid> {
        let mut out = vec![self.scene.part.clone()];
        out.extend(self.scene.fixture.clone());
        for (k, s) in &self.shells {
            let keep = match k {
                None => true,
                Some(c) => live.contains(c) || self.dec.detached.contains(c),
            };
            if keep {
                out.push(s.clone());
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundTimings {
    pub contact_and_fibers_s: f64,
    pub sequencing_s: f64,
    pub paths_s: f64,
}

/// One line of the round log.
#[derive(Clone, Debug, Serialize)]
pub struct RoundLog {
    pub round: usize,
    pub removed: Vec<usize>,
    /// Fiber size per feature id.
    pub fiber_sizes: BTreeMap<usize, usize>,
    pub contact_size: usize,
    pub legs: usize,
    pub timings: RoundTimings,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub verdict: String,
    pub rounds: usize,
    pub removed_per_round: Vec<Vec<usize>>,
    pub legs: usize,
    pub tour_cost: f64,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnchorRecord {
    pub rotation_index: usize,
    pub count: u32,
    pub configuration: TransformRecord,
}

#[derive(Clone, Debug, Default)]
pub struct DebugOutput {
    pub grids: Vec<(String, VoxelGrid<u32>)>,
    /// Per round, per feature: fiber anchors.
    pub fibers: Vec<BTreeMap<usize, Vec<AnchorRecord>>>,
}

pub struct JobResult {
    pub document: PlanDocument,
    pub round_log: Vec<RoundLog>,
    pub summary: Summary,
    pub debug: Option<DebugOutput>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Keep overlap fields and fiber anchors for inspection.
    pub debug_fields: bool,
}

/// Runs the whole pipeline without writing anything.
pub fn run(config: &JobConfig, options: &RunOptions) -> Result<JobResult> {
    let started = Instant::now();
    let prep = Prepared::new(config)?;
    let scene = &prep.scene;
    let dim = scene.dim;
    let eps = config.epsilon_voxels;
    let budget = config.budget_bytes();
    let bounds = scene.bounds();
    let frame = scene.frame;

    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut logs: Vec<RoundLog> = Vec::new();
    let mut debug = options.debug_fields.then(DebugOutput::default);
    let mut failure: Option<Error> = None;
    let mut first_path_failure: Option<(usize, usize, crate::motion::LegError)> = None;

    let outcome = removable_rounds_observed(scene, &prep.dec, &prep.tools, eps, budget, |view: RoundView<'_>| {
        if failure.is_some() {
            return;
        }
        let r = view.result;
        let t0 = Instant::now();
        let features: Vec<usize> = r
            .removed
            .iter()
            .flat_map(|&c| prep.dec.components[c].features.iter().copied())
            .collect();
        let fiber_configs: Vec<(usize, Vec<RigidTransform>)> = features
            .iter()
            .map(|&f| (f, r.fiber(f).expect("fiber of a live feature").configurations(&prep.rotations, &frame)))
            .collect();
        let planned = plan_sequence(prep.reference, &fiber_configs, prep.metric, config.exact_tsp);
        let (graph, _, refined) = match planned {
            Ok(x) => x,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let sequencing_s = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let checker = CollisionChecker::new(
            config.mode,
            view.near_net.clone(),
            config.planner.dilate,
            prep.obstacles(&r.remaining),
            &prep.tools,
            &prep.rotations,
            &prep.tool_model,
            eps,
        );
        let planner = LegPlanner::new(&checker, &config.planner, prep.metric, bounds);
        let rp = plan_round(&refined, &graph, &planner, r.index);
        let paths_s = t1.elapsed().as_secs_f64();

        if let (Some(f), None) = (&rp.failure, &first_path_failure) {
            first_path_failure = Some((r.index, f.leg, f.error));
        }
        let seq = &rp.sequence;
        let wps = seq.waypoints();
        let leg_costs: Vec<f64> = wps.windows(2).map(|w| riemannian_distance(&w[0], &w[1], &prep.metric)).collect();
        let stops = seq
            .stops
            .iter()
            .map(|s| StopRecord {
                feature: s.feature,
                member: s.member,
                rotation_index: r.fiber(s.feature).unwrap().members[s.member].rotation,
                configuration: TransformRecord::from_transform(&s.configuration, dim),
            })
            .collect();
        let sequence = SequenceRecord {
            method: seq.method,
            stops,
            leg_costs,
            cost: seq.cost,
            graph_cost: seq.graph_cost,
            mst_weight: seq.mst_weight,
            within_mst_bound: seq.graph_cost <= 2.0 * seq.mst_weight + 1e-9,
            triangle_violations: seq.triangle_violations,
        };
        let paths: Vec<PathRecord> = rp
            .paths
            .iter()
            .enumerate()
            .map(|(leg, p)| PathRecord {
                leg,
                from: p.from,
                to: p.to,
                clear_from: p.clear_from,
                clear_to: p.clear_to,
                waypoints: p.waypoints.iter().map(|w| TransformRecord::from_transform(w, dim)).collect(),
            })
            .collect();
        rounds.push(RoundRecord {
            index: r.index,
            remaining: r.remaining.clone(),
            removed: r.removed.clone(),
            support_cells: r.support_cells,
            contact_size: r.contact_size,
            fibers: r
                .fibers
                .iter()
                .map(|f| FiberRecord {
                    feature: f.feature,
                    size: f.len(),
                    orientations: f.orientations().len(),
                    used_ring: f.used_ring,
                })
                .collect(),
            sequence,
            failure: rp.failure.map(|f| FailureRecord { leg: f.leg, from: f.from, to: f.to, error: f.error }),
            paths,
        });
        logs.push(RoundLog {
            round: r.index,
            removed: r.removed.clone(),
            fiber_sizes: r.fibers.iter().map(|f| (f.feature, f.len())).collect(),
            contact_size: r.contact_size,
            legs: rp.paths.len(),
            timings: RoundTimings {
                contact_and_fibers_s: view.timing.contact_and_fibers.as_secs_f64(),
                sequencing_s,
                paths_s,
            },
        });
        if let Some(d) = debug.as_mut() {
            let t = r.index;
            d.grids.push((format!("round{t}_near_net"), view.near_net.map(|b| b as u32)));
            d.grids.push((format!("round{t}_contact"), projected_contact_field(view.contact)));
            let all: Vec<usize> = (0..prep.tools.len()).collect();
            match contact_space_with_fields(view.near_net, &prep.tools, eps, budget, &all) {
                Ok((_, fields)) => {
                    for f in fields {
                        d.grids.push((format!("round{t}_overlap_r{}", f.rotation_index), f.counts));
                    }
                }
                Err(e) => failure = Some(e),
            }
            d.fibers.push(
                r.fibers
                    .iter()
                    .map(|f| {
                        let anchors = f
                            .members
                            .iter()
                            .enumerate()
                            .map(|(i, m)| AnchorRecord {
                                rotation_index: m.rotation,
                                count: m.count,
                                configuration: TransformRecord::from_transform(
                                    &f.configuration(i, &prep.rotations, &frame),
                                    dim,
                                ),
                            })
                            .collect();
                        (f.feature, anchors)
                    })
                    .collect(),
            );
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    let status = match (&outcome.status, first_path_failure) {
        (PlanStatus::Unreachable { remaining, blocking_features }, _) => Verdict::Unreachable {
            remaining: remaining.clone(),
            blocking_features: blocking_features.clone(),
        },
        (PlanStatus::AllRemoved, Some((round, leg, error))) => Verdict::PathFailure { round, leg, error },
        (PlanStatus::AllRemoved, None) => Verdict::AllRemovedWithPaths,
    };

    let document = PlanDocument {
        schema_version: SCHEMA_VERSION,
        generator: Generator::default(),
        config: config.clone(),
        scene: scene_record(&prep),
        rotations: RotationsRecord {
            method: prep.rotations.method,
            seed: prep.rotations.seed,
            count: prep.rotations.rotations.len(),
        },
        metric: MetricRecord {
            w_rot: prep.metric.rotation,
            w_trans: prep.metric.translation,
            length_scale: prep.metric.length_scale,
        },
        reference: TransformRecord::from_transform(&prep.reference, dim),
        path_resolution: crate::motion::path_resolution(scene.spacing, prep.tool_model.radius, &prep.metric),
        rounds,
        status,
    };
    let summary = Summary {
        verdict: document.status.name().into(),
        rounds: document.rounds.len(),
        removed_per_round: document.rounds.iter().map(|r| r.removed.clone()).collect(),
        legs: document.rounds.iter().map(|r| r.paths.len()).sum(),
        tour_cost: document.rounds.iter().map(|r| r.sequence.cost).sum::<f64>() + 0.0,
        elapsed_s: started.elapsed().as_secs_f64(),
    };
    Ok(JobResult { document, round_log: logs, summary, debug })
}

fn scene_record(prep: &Prepared) -> SceneRecord {
    let scene = &prep.scene;
    let f = &scene.frame;
    let origin = f.cell_center([0, 0, 0]);
    SceneRecord {
        dimension: scene.dim.count(),
        spacing: scene.spacing,
        grid_origin: [origin.x, origin.y, origin.z],
        grid_dims: f.dims,
        part_cells: scene.part_grid.count(),
        support_cells: scene.support_grid.count(),
        fixture_cells: scene.fixture_grid.count(),
        tool_radius: scene.tool_radius(),
        components: prep
            .dec
            .components
            .iter()
            .map(|c| ComponentRecord {
                id: c.id,
                cells: c.cells.len(),
                features: c.features.clone(),
                detached: prep.dec.detached.contains(&c.id),
            })
            .collect(),
        features: prep
            .dec
            .features
            .iter()
            .map(|x| {
                let p = x.representative_point(f);
                FeatureRecord {
                    id: x.id,
                    component: x.component,
                    cells: x.cells.len(),
                    representative: p.coords.iter().take(scene.dim.count()).copied().collect(),
                }
            })
            .collect(),
    }
}

/// Writes `plan.json`, `rounds.jsonl`, `summary.json`, path traces and,
/// when present, debug grids and fiber anchors into `dir`.
pub fn write_outputs(result: &JobResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("plan.json"), result.document.to_json())?;
    let mut log = String::new();
    for l in &result.round_log {
        log.push_str(&serde_json::to_string(l)?);
        log.push('\n');
    }
    std::fs::write(dir.join("rounds.jsonl"), log)?;
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&result.summary)? + "\n")?;
    let paths_dir = dir.join("paths");
    std::fs::create_dir_all(&paths_dir)?;
    for r in &result.document.rounds {
        for p in &r.paths {
            let trace: Vec<_> = p.waypoints.iter().map(|w| nalgebra::Point3::from(w.to_transform().translation)).collect();
            write_polyline_obj(&trace, &paths_dir.join(format!("round{}_leg{}.obj", r.index, p.leg)))?;
        }
    }
    if let Some(d) = &result.debug {
        let fields = dir.join("fields");
        std::fs::create_dir_all(&fields)?;
        for (name, g) in &d.grids {
            write_vtk(g, name, &fields.join(format!("{name}.vtk")))?;
        }
        std::fs::write(dir.join("fibers.json"), serde_json::to_string_pretty(&d.fibers)? + "\n")?;
    }
    Ok(())
}
