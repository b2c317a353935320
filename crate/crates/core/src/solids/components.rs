//! Connected-component labelling and part/support contact features.

use nalgebra::Point3;
use serde::Serialize;

use super::grid::{Connectivity, GridFrame, VoxelGrid};
use crate::error::{Error, Result};

/// Component labels over a grid; `0` is background, components are numbered
/// from 1 in order of their smallest linear cell index.
#[derive(Clone, Debug)]
pub struct Labeling {
    pub labels: VoxelGrid<u32>,
    pub count: usize,
}

impl Labeling {
    /// Cells of each component, sorted by linear index.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (l, &v) in self.labels.values().iter().enumerate() {
            if v > 0 {
                out[v as usize - 1].push(l);
            }
        }
        out
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

/// Two-pass union-find labelling.
pub fn label_components(grid: &VoxelGrid<bool>, conn: Connectivity) -> Labeling {
    let frame = *grid.frame();
    // Neighbours already visited in linear order.
    let back: Vec<[i64; 3]> = frame
        .neighbours(conn)
        .into_iter()
        .filter(|d| d[2] < 0 || (d[2] == 0 && (d[1] < 0 || (d[1] == 0 && d[0] < 0))))
        .collect();
    let mut provisional = vec![0u32; frame.len()];
    let mut parent: Vec<u32> = vec![0];
    for l in grid.occupied() {
        let idx = frame.unlinear(l).map(|v| v as i64);
        let mut label = 0u32;
        for d in &back {
            let n = [idx[0] + d[0], idx[1] + d[1], idx[2] + d[2]];
            if !frame.contains_index(n) {
                continue;
            }
            let nl = provisional[frame.linear(n.map(|v| v as usize))];
            if nl == 0 {
                continue;
            }
            if label == 0 {
                label = find(&mut parent, nl);
            } else {
                let (a, b) = (find(&mut parent, label), find(&mut parent, nl));
                if a != b {
                    parent[a.max(b) as usize] = a.min(b);
                    label = a.min(b);
                }
            }
        }
        if label == 0 {
            label = parent.len() as u32;
            parent.push(label);
        }
        provisional[l] = label;
    }
    let mut final_of = vec![0u32; parent.len()];
    let mut count = 0u32;
    let mut labels = vec![0u32; frame.len()];
    for (l, &p) in provisional.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let root = find(&mut parent, p) as usize;
        if final_of[root] == 0 {
            count += 1;
            final_of[root] = count;
        }
        labels[l] = final_of[root];
    }
    Labeling { labels: VoxelGrid::from_values(frame, labels), count: count as usize }
}

/// Connected components as separate grids on the input frame, ordered by
/// smallest linear cell index.
pub fn connected_components(grid: &VoxelGrid<bool>, conn: Connectivity) -> Vec<VoxelGrid<bool>> {
    let lab = label_components(grid, conn);
    lab.cells()
        .into_iter()
        .map(|cells| VoxelGrid::from_cells(*grid.frame(), cells))
        .collect()
}

/// A connected piece of support material.
#[derive(Clone, Debug, Serialize)]
pub struct SupportComponent {
    pub id: usize,
    /// Occupied cells (linear indices, sorted).
    pub cells: Vec<usize>,
    /// Ids of the features this component owns.
    pub features: Vec<usize>,
}

/// A connected patch of support cells face-adjacent to the part.
#[derive(Clone, Debug, Serialize)]
pub struct DislocationFeature {
    pub id: usize,
    /// Owning support component.
    pub component: usize,
    /// Interface cells (linear indices, sorted).
    pub cells: Vec<usize>,
    /// Interface cell nearest the centroid of the patch.
    pub representative: usize,
    /// Cells at which the tool tip is placed first (starts with the representative).
    pub query_points: Vec<usize>,
    /// Patch cells with a face neighbour in free space; used when no
    /// query point is reachable.
    pub ring: Vec<usize>,
}

impl DislocationFeature {
    pub fn representative_point(&self, frame: &GridFrame) -> Point3<f64> {
        frame.cell_center(frame.unlinear(self.representative))
    }
}

/// Support components, their features, and components that never touch the part.
#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub components: Vec<SupportComponent>,
    pub features: Vec<DislocationFeature>,
    /// Components with no feature. They cannot be fractured off the part and
    /// are treated as fixture.
    pub detached: Vec<usize>,
}

impl Decomposition {
    /// Components that take part in planning.
    pub fn attached(&self) -> impl Iterator<Item = &SupportComponent> {
        self.components.iter().filter(|c| !c.features.is_empty())
    }
}

fn face_neighbours(frame: &GridFrame, l: usize) -> impl Iterator<Item = usize> + '_ {
    let idx = frame.unlinear(l).map(|v| v as i64);
    frame.neighbours(Connectivity::Face).into_iter().filter_map(move |d| {
        let n = [idx[0] + d[0], idx[1] + d[1], idx[2] + d[2]];
        frame.contains_index(n).then(|| frame.linear(n.map(|v| v as usize)))
    })
}

/// Splits `support` into full-connectivity components and extracts the
/// face-connected patches where it touches `part`. `query_count` bounds the
/// number of tool-tip query points per feature.
pub fn decompose(
    part: &VoxelGrid<bool>,
    support: &VoxelGrid<bool>,
    query_count: usize,
) -> Result<Decomposition> {
    if part.frame() != support.frame() {
        return Err(Error::FrameMismatch);
    }
    let frame = *support.frame();
    let comps = label_components(support, Connectivity::Full);
    let mut interface = VoxelGrid::<bool>::new(frame);
    for l in support.occupied() {
        if face_neighbours(&frame, l).any(|n| part.values()[n]) {
            interface.values_mut()[l] = true;
        }
    }
    let patches = label_components(&interface, Connectivity::Face);
    let mut components: Vec<SupportComponent> = comps
        .cells()
        .into_iter()
        .enumerate()
        .map(|(id, cells)| SupportComponent { id, cells, features: Vec::new() })
        .collect();
    let mut features = Vec::new();
    for (id, cells) in patches.cells().into_iter().enumerate() {
        let component = comps.labels.values()[cells[0]] as usize - 1;
        let representative = nearest_to_centroid(&frame, &cells);
        let query_points = farthest_points(&frame, &cells, representative, query_count.max(1));
        let ring: Vec<usize> = cells
            .iter()
            .copied()
            .filter(|&l| {
                face_neighbours(&frame, l).any(|n| !part.values()[n] && !support.values()[n])
            })
            .collect();
        components[component].features.push(id);
        features.push(DislocationFeature {
            id,
            component,
            cells,
            representative,
            query_points,
            ring,
        });
    }
    let detached = components.iter().filter(|c| c.features.is_empty()).map(|c| c.id).collect();
    Ok(Decomposition { components, features, detached })
}

/// Features of `support` against `part` (see [`decompose`]).
pub fn dislocation_features(
    part: &VoxelGrid<bool>,
    support: &VoxelGrid<bool>,
) -> Result<Vec<DislocationFeature>> {
    Ok(decompose(part, support, 1)?.features)
}

fn nearest_to_centroid(frame: &GridFrame, cells: &[usize]) -> usize {
    let n = cells.len() as f64;
    let c = cells
        .iter()
        .map(|&l| frame.cell_center(frame.unlinear(l)).coords)
        .sum::<nalgebra::Vector3<f64>>()
        / n;
    let mut best = (f64::INFINITY, cells[0]);
    for &l in cells {
        let d = (frame.cell_center(frame.unlinear(l)).coords - c).norm_squared();
        if d < best.0 - 1e-12 {
            best = (d, l);
        }
    }
    best.1
}

fn farthest_points(frame: &GridFrame, cells: &[usize], first: usize, k: usize) -> Vec<usize> {
    let pos = |l: usize| frame.cell_center(frame.unlinear(l));
    let mut chosen = vec![first];
    let mut dist: Vec<f64> = cells.iter().map(|&l| (pos(l) - pos(first)).norm()).collect();
    while chosen.len() < k.min(cells.len()) {
        let (i, d) = dist
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        if d <= 0.0 {
            break;
        }
        chosen.push(cells[i]);
        let p = pos(cells[i]);
        for (j, &l) in cells.iter().enumerate() {
            dist[j] = dist[j].min((pos(l) - p).norm());
        }
    }
    chosen
}
