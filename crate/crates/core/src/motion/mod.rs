//! Collision-checked tool paths between consecutive fracture configurations.
//!
//! A leg leaves its start configuration along a short lattice path (the
//! approach segment) until the tool is strictly clear of the near-net shape,
//! travels through clear space (straight line or RRT-Connect), and enters the
//! goal configuration along its own approach segment.

pub mod checker;
pub mod collide;
pub mod rrt;

use std::collections::{HashMap, VecDeque};
use std::time::Duration;

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cspace::Classification;
use crate::se3::{riemannian_distance, MetricWeights, RigidTransform};
use crate::sequencing::{FiberGraph, VisitSequence};
use crate::solids::{Aabb, Dim};
pub use checker::{CheckMode, CollisionChecker, ToolModel};
use rrt::{rrt_connect, SearchSpace};

/// Motion-planning settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub max_samples: usize,
    pub goal_bias: f64,
    /// Minimum lattice steps of an approach segment.
    pub retract_voxels: usize,
    /// Maximum lattice steps of an approach segment.
    pub retract_limit: usize,
    /// Alternative fiber members tried when a leg fails.
    pub max_retries: usize,
    pub seed: u64,
    /// Dilation (in cells) of the near-net grid used for clearance.
    pub dilate: usize,
    pub time_limit_s: Option<f64>,
    /// Extra room around the scene for sampling; defaults to the tool radius.
    pub sampling_margin: Option<f64>,
    /// Try to replace runs of waypoints by straight segments.
    pub shortcut: bool,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            max_samples: 50_000,
            goal_bias: 0.1,
            retract_voxels: 2,
            retract_limit: 12,
            max_retries: 3,
            seed: 0,
            dilate: 1,
            time_limit_s: None,
            sampling_margin: None,
            shortcut: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegError {
    #[error("start configuration cannot be backed out to clear space")]
    StartInCollision,
    #[error("goal configuration cannot be approached from clear space")]
    GoalInCollision,
    #[error("no path found within the sampling budget")]
    PathNotFound,
}

/// Waypoints of one leg. Waypoints `clear_from..=clear_to` are strictly
/// clear; the ones before and after form the approach segments, which may
/// be in contact.
#[derive(Clone, Debug, PartialEq)]
pub struct ToolPath {
    /// Feature at the start (`None` for the reference configuration).
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub waypoints: Vec<RigidTransform>,
    pub clear_from: usize,
    pub clear_to: usize,
    pub resolution: f64,
}

impl ToolPath {
    pub fn tip_trace(&self) -> Vec<Point3<f64>> {
        self.waypoints.iter().map(|w| Point3::from(w.translation)).collect()
    }

    /// Largest distance between consecutive waypoints.
    pub fn max_step(&self, metric: &MetricWeights) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| riemannian_distance(&w[0], &w[1], metric))
            .fold(0.0, f64::max)
    }
}

/// Step bound that keeps every tool point within one cell between
/// consecutive waypoints.
pub fn path_resolution(spacing: f64, tool_radius: f64, metric: &MetricWeights) -> f64 {
    let trans = metric.translation_per_length() * spacing / 2.0;
    let rot = metric.rotation * 2f64.sqrt() * spacing / (2.0 * tool_radius.max(spacing));
    trans.min(rot)
}

/// Points from `a` (excluded) to `b` (included) with consecutive distance at most `res`.
pub fn densify(a: &RigidTransform, b: &RigidTransform, res: f64, metric: &MetricWeights) -> Vec<RigidTransform> {
    let d = riemannian_distance(a, b, metric);
    let mut n = ((d / res).ceil() as usize).max(1);
    loop {
        let pts: Vec<RigidTransform> = (1..=n)
            .map(|i| if i == n { *b } else { a.interpolate(b, i as f64 / n as f64) })
            .collect();
        let ok = std::iter::once(a)
            .chain(pts.iter())
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| riemannian_distance(w[0], w[1], metric) <= res);
        if ok || n > 1 << 20 {
            return pts;
        }
        n *= 2;
    }
}

fn mix_seed(parts: &[u64]) -> u64 {
    let mut x: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        x ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(x << 6).wrapping_add(x >> 2);
        x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x ^= x >> 31;
    }
    x
}

/// Plans legs against one collision checker.
pub struct LegPlanner<'a> {
    pub checker: &'a CollisionChecker<'a>,
    pub params: &'a PlannerParams,
    pub metric: MetricWeights,
    pub resolution: f64,
    pub bounds: Aabb,
    pub dim: Dim,
}

impl<'a> LegPlanner<'a> {
    pub fn new(
        checker: &'a CollisionChecker<'a>,
        params: &'a PlannerParams,
        metric: MetricWeights,
        scene_bounds: Aabb,
    ) -> Self {
        let f = checker.near_net().frame();
        let radius = checker.tool().radius;
        let margin = params.sampling_margin.unwrap_or(radius);
        LegPlanner {
            checker,
            params,
            metric,
            resolution: path_resolution(f.spacing, radius, &metric),
            bounds: scene_bounds.expanded(margin, f.dim),
            dim: f.dim,
        }
    }

    /// True when every densified point after `a` up to `b` is clear. The
    /// exact checker also samples the midpoint of every step.
    pub fn segment_clear(&self, a: &RigidTransform, b: &RigidTransform) -> bool {
        let pts = densify(a, b, self.resolution, &self.metric);
        if !pts.iter().all(|p| self.checker.clearance(p)) {
            return false;
        }
        self.checker.mode == CheckMode::Voxel
            || std::iter::once(a)
                .chain(&pts)
                .zip(&pts)
                .all(|(x, y)| self.checker.clearance(&x.interpolate(y, 0.5)))
    }

    fn lattice_dirs(&self, tau: &RigidTransform) -> Vec<Vector3<f64>> {
        let axes = self.dim.count();
        let mut dirs = Vec::new();
        for a in 0..axes {
            for s in [1.0, -1.0] {
                let mut d = Vector3::zeros();
                d[a] = s;
                dirs.push(d);
            }
        }
        let cover = &self.checker.tool().cover;
        let mean = cover.iter().fold(Vector3::zeros(), |acc, c| acc + c.coords) / cover.len().max(1) as f64;
        let axis = tau.rotation.apply(&mean);
        dirs.sort_by(|x, y| axis.dot(y).total_cmp(&axis.dot(x)));
        dirs
    }

    /// Shortest lattice path (fixed rotation, axis-aligned cell steps) from
    /// `tau` to a clear configuration; intermediate configurations must be Free.
    pub fn approach(&self, tau: &RigidTransform) -> Option<Vec<RigidTransform>> {
        if self.checker.clearance(tau) {
            return Some(vec![*tau]);
        }
        if self.checker.classify(tau) == Classification::Collide {
            return None;
        }
        let h = self.checker.near_net().frame().spacing;
        let dirs = self.lattice_dirs(tau);
        let at = |o: &[i64; 3]| {
            RigidTransform::new(
                tau.rotation,
                tau.translation + Vector3::new(o[0] as f64, o[1] as f64, o[2] as f64) * h,
            )
        };
        let mut parent: HashMap<[i64; 3], [i64; 3]> = HashMap::new();
        let mut queue = VecDeque::from([([0i64; 3], 0usize)]);
        parent.insert([0; 3], [0; 3]);
        let min_steps = self.params.retract_voxels.max(1);
        while let Some((o, steps)) = queue.pop_front() {
            if steps >= min_steps && self.checker.clearance(&at(&o)) {
                let mut cells = vec![o];
                let mut cur = o;
                while cur != [0; 3] {
                    cur = parent[&cur];
                    cells.push(cur);
                }
                cells.reverse();
                let mut path = vec![*tau];
                for w in cells.windows(2) {
                    path.extend(densify(&at(&w[0]), &at(&w[1]), self.resolution, &self.metric));
                }
                return Some(path);
            }
            if steps >= self.params.retract_limit {
                continue;
            }
            for d in &dirs {
                let n = [o[0] + d.x as i64, o[1] + d.y as i64, o[2] + d.z as i64];
                if parent.contains_key(&n) {
                    continue;
                }
                parent.insert(n, o);
                if self.checker.classify(&at(&n)) == Classification::Free {
                    queue.push_back((n, steps + 1));
                }
            }
        }
        None
    }

    fn shortcut(&self, path: Vec<RigidTransform>) -> Vec<RigidTransform> {
        if !self.params.shortcut || path.len() <= 2 {
            return path;
        }
        let mut out = vec![path[0]];
        let mut i = 0;
        while i < path.len() - 1 {
            let mut j = path.len() - 1;
            while j > i + 1 && !self.segment_clear(&path[i], &path[j]) {
                j -= 1;
            }
            out.push(path[j]);
            i = j;
        }
        out
    }

    /// Plans one leg from `start` to `goal`.
    pub fn plan_leg(
        &self,
        start: &RigidTransform,
        goal: &RigidTransform,
        seed: u64,
    ) -> Result<ToolPath, LegError> {
        let head = self.approach(start).ok_or(LegError::StartInCollision)?;
        let mut tail = self.approach(goal).ok_or(LegError::GoalInCollision)?;
        tail.reverse();
        let a = *head.last().unwrap();
        let b = tail[0];
        let coarse = if self.segment_clear(&a, &b) {
            vec![a, b]
        } else {
            let space = SearchSpace {
                bounds: self.bounds,
                dim: self.dim,
                rotations: {
                    let mut r = self.checker.rotations().rotations.clone();
                    r.push(a.rotation);
                    r.push(b.rotation);
                    r
                },
                max_samples: self.params.max_samples,
                goal_bias: self.params.goal_bias,
                step: self.resolution * 8.0,
                time_limit: self.params.time_limit_s.map(Duration::from_secs_f64),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let found = rrt_connect(&a, &b, &space, &self.metric, &mut rng, |x, y| self.segment_clear(x, y))
                .ok_or(LegError::PathNotFound)?;
            self.shortcut(found)
        };
        let mut waypoints = head.clone();
        let clear_from = waypoints.len() - 1;
        for w in coarse.windows(2) {
            waypoints.extend(densify(&w[0], &w[1], self.resolution, &self.metric));
        }
        let clear_to = waypoints.len() - 1;
        waypoints.extend_from_slice(&tail[1..]);
        Ok(ToolPath { from: None, to: None, waypoints, clear_from, clear_to, resolution: self.resolution })
    }
}

/// Failure of one leg of a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LegFailure {
    pub leg: usize,
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub error: LegError,
}

/// Paths for a round; on failure `paths` holds the legs planned before it.
#[derive(Clone, Debug)]
pub struct RoundPaths {
    /// The visit sequence with any stop configurations replaced during retries.
    pub sequence: VisitSequence,
    pub paths: Vec<ToolPath>,
    pub failure: Option<LegFailure>,
}

/// Plans every leg of `seq` (reference, stops, reference). When a leg fails,
/// up to `max_retries` other members of the goal fiber are tried, nearest first.
pub fn plan_round(seq: &VisitSequence, graph: &FiberGraph, planner: &LegPlanner<'_>, round: usize) -> RoundPaths {
    let mut seq = seq.clone();
    let mut paths = Vec::new();
    let k = seq.stops.len();
    for leg in 0..=k {
        let start = if leg == 0 { seq.reference } else { seq.stops[leg - 1].configuration };
        let from = (leg > 0).then(|| seq.stops[leg - 1].feature);
        let to = (leg < k).then(|| seq.stops[leg].feature);
        let goal = if leg < k { seq.stops[leg].configuration } else { seq.reference };
        let seed = |attempt: u64| mix_seed(&[planner.params.seed, round as u64, leg as u64, attempt]);
        let mut result = planner.plan_leg(&start, &goal, seed(0));
        if result.is_err() && leg < k {
            let vertex = graph.features.iter().position(|f| *f == Some(seq.stops[leg].feature)).unwrap();
            let configs = &graph.configs[vertex];
            let mut order: Vec<usize> = (0..configs.len()).filter(|&m| m != seq.stops[leg].member).collect();
            order.sort_by(|&x, &y| {
                riemannian_distance(&start, &configs[x], &planner.metric)
                    .total_cmp(&riemannian_distance(&start, &configs[y], &planner.metric))
                    .then(x.cmp(&y))
            });
            for (attempt, &m) in order.iter().take(planner.params.max_retries).enumerate() {
                let r = planner.plan_leg(&start, &configs[m], seed(attempt as u64 + 1));
                if r.is_ok() {
                    seq.stops[leg].member = m;
                    seq.stops[leg].configuration = configs[m];
                    result = r;
                    break;
                }
            }
        }
        match result {
            Ok(mut p) => {
                p.from = from;
                p.to = to;
                paths.push(p);
            }
            Err(error) => {
                log::warn!("round {round} leg {leg}: {error}");
                recompute_cost(&mut seq, &planner.metric);
                return RoundPaths { sequence: seq, paths, failure: Some(LegFailure { leg, from, to, error }) };
            }
        }
    }
    recompute_cost(&mut seq, &planner.metric);
    RoundPaths { sequence: seq, paths, failure: None }
}

fn recompute_cost(seq: &mut VisitSequence, metric: &MetricWeights) {
    seq.cost = seq
        .waypoints()
        .windows(2)
        .map(|w| riemannian_distance(&w[0], &w[1], metric))
        .sum();
}
