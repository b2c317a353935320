//! Bidirectional rapidly-exploring random trees (RRT-Connect) on SE(3).

use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::se3::{riemannian_distance, MetricWeights, RigidTransform, Rotation};
use crate::solids::{Aabb, Dim};

/// Sampling domain and budget of one search.
#[derive(Clone, Debug)]
pub struct SearchSpace {
    pub bounds: Aabb,
    pub dim: Dim,
    pub rotations: Vec<Rotation>,
    pub max_samples: usize,
    pub goal_bias: f64,
    /// Largest distance covered by one tree extension.
    pub step: f64,
    pub time_limit: Option<Duration>,
}

struct Tree {
    nodes: Vec<RigidTransform>,
    parent: Vec<usize>,
}

impl Tree {
    fn new(root: RigidTransform) -> Self {
        Tree { nodes: vec![root], parent: vec![usize::MAX] }
    }

    fn nearest(&self, q: &RigidTransform, metric: &MetricWeights) -> usize {
        let wt = metric.translation_per_length();
        let wr2 = 2.0 * metric.rotation * metric.rotation;
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let dt = (n.translation - q.translation).norm_squared() * wt * wt;
            if dt >= best.1 {
                continue;
            }
            let a = n.rotation.angle_to(&q.rotation);
            let d = dt + wr2 * a * a;
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn path_to_root(&self, mut i: usize) -> Vec<RigidTransform> {
        let mut out = Vec::new();
        while i != usize::MAX {
            out.push(self.nodes[i]);
            i = self.parent[i];
        }
        out
    }
}

enum Extend {
    Reached,
    Advanced,
    Trapped,
}

fn steer(from: &RigidTransform, to: &RigidTransform, step: f64, metric: &MetricWeights) -> RigidTransform {
    let d = riemannian_distance(from, to, metric);
    if d <= step {
        *to
    } else {
        from.interpolate(to, step / d)
    }
}

fn extend(
    tree: &mut Tree,
    q: &RigidTransform,
    space: &SearchSpace,
    metric: &MetricWeights,
    edge_free: &impl Fn(&RigidTransform, &RigidTransform) -> bool,
) -> Extend {
    let near = tree.nearest(q, metric);
    let from = tree.nodes[near];
    let new = steer(&from, q, space.step, metric);
    if !edge_free(&from, &new) {
        return Extend::Trapped;
    }
    tree.nodes.push(new);
    tree.parent.push(near);
    if new == *q {
        Extend::Reached
    } else {
        Extend::Advanced
    }
}

fn sample(rng: &mut ChaCha8Rng, space: &SearchSpace) -> RigidTransform {
    let b = &space.bounds;
    let mut t = Vector3::zeros();
    for a in 0..space.dim.count() {
        t[a] = if b.max[a] > b.min[a] { rng.gen_range(b.min[a]..b.max[a]) } else { b.min[a] };
    }
    let r = space.rotations[rng.gen_range(0..space.rotations.len())];
    RigidTransform::new(r, t)
}

/// Searches for a path of configurations from `start` to `goal` whose
/// consecutive segments satisfy `edge_free`. Both endpoints must be free.
pub fn rrt_connect(
    start: &RigidTransform,
    goal: &RigidTransform,
    space: &SearchSpace,
    metric: &MetricWeights,
    rng: &mut ChaCha8Rng,
    edge_free: impl Fn(&RigidTransform, &RigidTransform) -> bool,
) -> Option<Vec<RigidTransform>> {
    let began = Instant::now();
    let mut a = Tree::new(*start);
    let mut b = Tree::new(*goal);
    let mut a_is_start = true;
    for _ in 0..space.max_samples {
        if space.time_limit.is_some_and(|lim| began.elapsed() > lim) {
            return None;
        }
        let q = if rng.gen::<f64>() < space.goal_bias { b.nodes[0] } else { sample(rng, space) };
        if let Extend::Trapped = extend(&mut a, &q, space, metric, &edge_free) {
            std::mem::swap(&mut a, &mut b);
            a_is_start = !a_is_start;
            continue;
        }
        let target = *a.nodes.last().unwrap();
        loop {
            match extend(&mut b, &target, space, metric, &edge_free) {
                Extend::Advanced => continue,
                Extend::Trapped => break,
                Extend::Reached => {
                    let mut from_a = a.path_to_root(a.nodes.len() - 1);
                    from_a.reverse();
                    let from_b = b.path_to_root(b.nodes.len() - 1);
                    // `from_a` ends and `from_b` starts at the meeting node.
                    let mut path = from_a;
                    path.extend_from_slice(&from_b[1..]);
                    if !a_is_start {
                        path.reverse();
                    }
                    return Some(path);
                }
            }
        }
        std::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    None
}
