//! Visiting order of the features removed in one round.
//!
//! Fibers become vertices of a complete graph weighted by the minimum
//! pairwise configuration distance. The tour is a preorder walk of a
//! minimum spanning tree rooted at the reference configuration (or an exact
//! Held-Karp tour for small rounds); configurations are then chosen along
//! the fixed order by dynamic programming.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se3::{fiber_distance, riemannian_distance, MetricWeights, RigidTransform};

/// Complete graph over the reference configuration (vertex 0) and one
/// vertex per fiber.
#[derive(Clone, Debug)]
pub struct FiberGraph {
    /// Feature id of each vertex; `None` for the reference.
    pub features: Vec<Option<usize>>,
    pub configs: Vec<Vec<RigidTransform>>,
    pub weights: Vec<Vec<f64>>,
    /// Closest configuration pair `(index in u, index in v)` for edge `(u, v)`.
    pub pairs: Vec<Vec<(usize, usize)>>,
    pub metric: MetricWeights,
}

impl FiberGraph {
    /// Builds the graph; `fibers` are `(feature id, configurations)` and are
    /// ordered by feature id.
    pub fn build(
        reference: RigidTransform,
        fibers: &[(usize, Vec<RigidTransform>)],
        metric: MetricWeights,
    ) -> Result<FiberGraph> {
        let mut sorted: Vec<&(usize, Vec<RigidTransform>)> = fibers.iter().collect();
        sorted.sort_by_key(|f| f.0);
        let mut features = vec![None];
        let mut configs = vec![vec![reference]];
        for (id, c) in sorted {
            if c.is_empty() {
                return Err(Error::EmptyFiber);
            }
            features.push(Some(*id));
            configs.push(c.clone());
        }
        let n = configs.len();
        let mut weights = vec![vec![0.0; n]; n];
        let mut pairs = vec![vec![(0, 0); n]; n];
        for u in 0..n {
            for v in u + 1..n {
                let d = fiber_distance(&configs[u], &configs[v], &metric)?;
                weights[u][v] = d.distance;
                weights[v][u] = d.distance;
                pairs[u][v] = (d.first, d.second);
                pairs[v][u] = (d.second, d.first);
            }
        }
        Ok(FiberGraph { features, configs, weights, pairs, metric })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Prim's minimum spanning tree rooted at vertex 0; ties go to the
    /// smaller vertex id. Returns the parent of each vertex and the total weight.
    pub fn mst(&self) -> (Vec<Option<usize>>, f64) {
        let n = self.len();
        let mut parent = vec![None; n];
        let mut best = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        best[0] = 0.0;
        let mut total = 0.0;
        for _ in 0..n {
            let mut u = usize::MAX;
            for v in 0..n {
                if !done[v] && (u == usize::MAX || best[v] < best[u]) {
                    u = v;
                }
            }
            done[u] = true;
            total += best[u];
            for v in 0..n {
                if !done[v] && self.weights[u][v] < best[v] {
                    best[v] = self.weights[u][v];
                    parent[v] = Some(u);
                }
            }
        }
        (parent, total)
    }

    /// Number of vertex triples violating the triangle inequality, or
    /// `None` when the graph is too large to audit.
    pub fn triangle_violations(&self) -> Option<usize> {
        let n = self.len();
        if n > 160 {
            return None;
        }
        let w = &self.weights;
        let mut bad = 0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if a != b && b != c && a != c && w[a][c] > w[a][b] + w[b][c] + 1e-9 {
                        bad += 1;
                    }
                }
            }
        }
        Some(bad)
    }

    /// Weight of the closed tour `0 -> order... -> 0`.
    pub fn tour_weight(&self, order: &[usize]) -> f64 {
        let mut prev = 0;
        let mut total = 0.0;
        for &v in order {
            total += self.weights[prev][v];
            prev = v;
        }
        total + self.weights[prev][0]
    }
}

/// One stop of a tour.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stop {
    pub feature: usize,
    /// Index of the chosen configuration within the fiber.
    pub member: usize,
    #[serde(skip)]
    pub configuration: RigidTransform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TourMethod {
    MstPreorder,
    HeldKarp,
}

/// Closed tour from the reference configuration through every fiber.
#[derive(Clone, Debug, Serialize)]
pub struct VisitSequence {
    #[serde(skip)]
    pub reference: RigidTransform,
    pub stops: Vec<Stop>,
    /// Sum of configuration distances along the tour, including both reference legs.
    pub cost: f64,
    /// Sum of graph edge weights along the vertex tour.
    pub graph_cost: f64,
    pub mst_weight: f64,
    pub triangle_violations: Option<usize>,
    pub method: TourMethod,
}

impl VisitSequence {
    /// Reference, stops, reference.
    pub fn waypoints(&self) -> Vec<RigidTransform> {
        let mut v = vec![self.reference];
        v.extend(self.stops.iter().map(|s| s.configuration));
        v.push(self.reference);
        v
    }
}

fn path_cost(points: &[RigidTransform], metric: &MetricWeights) -> f64 {
    points.windows(2).map(|w| riemannian_distance(&w[0], &w[1], metric)).sum()
}

fn sequence_from_order(graph: &FiberGraph, order: &[usize], method: TourMethod) -> VisitSequence {
    let reference = graph.configs[0][0];
    let mut prev = 0;
    let stops: Vec<Stop> = order
        .iter()
        .map(|&v| {
            let (_, member) = graph.pairs[prev][v];
            prev = v;
            Stop {
                feature: graph.features[v].expect("non-reference vertex"),
                member,
                configuration: graph.configs[v][member],
            }
        })
        .collect();
    let mut seq = VisitSequence {
        reference,
        stops,
        cost: 0.0,
        graph_cost: graph.tour_weight(order),
        mst_weight: graph.mst().1,
        triangle_violations: graph.triangle_violations(),
        method,
    };
    seq.cost = path_cost(&seq.waypoints(), &graph.metric);
    seq
}

/// Preorder walk of the minimum spanning tree; children in increasing id order.
pub fn tsp_tour(graph: &FiberGraph) -> VisitSequence {
    let (parent, _) = graph.mst();
    let n = graph.len();
    let mut children = vec![Vec::new(); n];
    for v in 1..n {
        if let Some(p) = parent[v] {
            children[p].push(v);
        }
    }
    let mut order = Vec::with_capacity(n - 1);
    let mut stack = vec![0usize];
    while let Some(u) = stack.pop() {
        if u != 0 {
            order.push(u);
        }
        for &c in children[u].iter().rev() {
            stack.push(c);
        }
    }
    if let Some(v) = graph.triangle_violations().filter(|&v| v > 0) {
        log::info!("fiber graph violates the triangle inequality on {v} triple(s)");
    }
    sequence_from_order(graph, &order, TourMethod::MstPreorder)
}

/// Largest number of fibers accepted by [`exact_tour`].
pub const EXACT_TOUR_LIMIT: usize = 10;

/// Optimal vertex tour by Held-Karp dynamic programming.
pub fn exact_tour(graph: &FiberGraph) -> Result<VisitSequence> {
    let k = graph.len() - 1;
    if k > EXACT_TOUR_LIMIT {
        return Err(Error::Config(format!(
            "exact tour supports at most {EXACT_TOUR_LIMIT} features, got {k}"
        )));
    }
    if k == 0 {
        return Ok(sequence_from_order(graph, &[], TourMethod::HeldKarp));
    }
    let w = &graph.weights;
    let full = 1usize << k;
    let mut dp = vec![vec![f64::INFINITY; k]; full];
    let mut from = vec![vec![usize::MAX; k]; full];
    for j in 0..k {
        dp[1 << j][j] = w[0][j + 1];
    }
    for mask in 1..full {
        for j in 0..k {
            if mask & (1 << j) == 0 || !dp[mask][j].is_finite() {
                continue;
            }
            for n in 0..k {
                if mask & (1 << n) != 0 {
                    continue;
                }
                let next = mask | (1 << n);
                let c = dp[mask][j] + w[j + 1][n + 1];
                if c < dp[next][n] {
                    dp[next][n] = c;
                    from[next][n] = j;
                }
            }
        }
    }
    let last = full - 1;
    let mut end = 0;
    for j in 1..k {
        if dp[last][j] + w[j + 1][0] < dp[last][end] + w[end + 1][0] {
            end = j;
        }
    }
    let mut order = Vec::with_capacity(k);
    let (mut mask, mut j) = (last, end);
    loop {
        order.push(j + 1);
        let p = from[mask][j];
        mask &= !(1 << j);
        if p == usize::MAX {
            break;
        }
        j = p;
    }
    order.reverse();
    Ok(sequence_from_order(graph, &order, TourMethod::HeldKarp))
}

/// Re-chooses the configuration of every stop, keeping the order fixed, so
/// that the total configuration distance (reference to reference) is
/// minimal. Never increases the cost.
pub fn assign_configurations(seq: &VisitSequence, graph: &FiberGraph) -> VisitSequence {
    if seq.stops.is_empty() {
        return seq.clone();
    }
    let metric = &graph.metric;
    let vertex_of = |feature: usize| {
        graph
            .features
            .iter()
            .position(|f| *f == Some(feature))
            .expect("stop feature in graph")
    };
    let layers: Vec<&Vec<RigidTransform>> =
        seq.stops.iter().map(|s| &graph.configs[vertex_of(s.feature)]).collect();
    let mut cost: Vec<f64> =
        layers[0].iter().map(|c| riemannian_distance(&seq.reference, c, metric)).collect();
    let mut back: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 1..layers.len() {
        let mut next = vec![f64::INFINITY; layers[i].len()];
        let mut arg = vec![0usize; layers[i].len()];
        for (b, cb) in layers[i].iter().enumerate() {
            for (a, ca) in layers[i - 1].iter().enumerate() {
                let c = cost[a] + riemannian_distance(ca, cb, metric);
                if c < next[b] {
                    next[b] = c;
                    arg[b] = a;
                }
            }
        }
        cost = next;
        back.push(arg);
    }
    let last = layers.len() - 1;
    let mut end = 0;
    let mut best = f64::INFINITY;
    for (b, cb) in layers[last].iter().enumerate() {
        let c = cost[b] + riemannian_distance(cb, &seq.reference, metric);
        if c < best {
            best = c;
            end = b;
        }
    }
    let mut members = vec![0usize; layers.len()];
    members[last] = end;
    for i in (1..layers.len()).rev() {
        members[i - 1] = back[i][members[i]];
    }
    let mut out = seq.clone();
    for (i, s) in out.stops.iter_mut().enumerate() {
        s.member = members[i];
        s.configuration = layers[i][members[i]];
    }
    out.cost = path_cost(&out.waypoints(), metric);
    if out.cost > seq.cost {
        return seq.clone();
    }
    out
}

/// Builds the graph, orders it and assigns configurations. With `exact`,
/// rounds of up to [`EXACT_TOUR_LIMIT`] features are solved optimally and
/// larger ones fall back to the tree tour.
pub fn plan_sequence(
    reference: RigidTransform,
    fibers: &[(usize, Vec<RigidTransform>)],
    metric: MetricWeights,
    exact: bool,
) -> Result<(FiberGraph, VisitSequence, VisitSequence)> {
    let graph = FiberGraph::build(reference, fibers, metric)?;
    let tour = if exact && graph.len() - 1 <= EXACT_TOUR_LIMIT { exact_tour(&graph)? } else { tsp_tour(&graph) };
    let refined = assign_configurations(&tour, &graph);
    Ok((graph, tour, refined))
}
