//! Fibers: tool configurations in contact at each dislocation feature.

use serde::Serialize;

use crate::cspace::{contact_space, projected_contact_field, ContactSpace, ToolStack};
use crate::error::Result;
use crate::se3::{RigidTransform, RotationSample};
use crate::solids::{DislocationFeature, GridFrame, VoxelGrid};

/// One contact configuration: a sampled rotation with the tip at a feature cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FiberMember {
    pub rotation: usize,
    /// Scene cell holding the tool tip.
    pub cell: usize,
    pub count: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct Fiber {
    pub feature: usize,
    /// Ordered by query point, then rotation index.
    pub members: Vec<FiberMember>,
    /// True when the ring cells were needed because no query point was reachable.
    pub used_ring: bool,
}

impl Fiber {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Distinct rotation indices, sorted.
    pub fn orientations(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.members.iter().map(|m| m.rotation).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn configuration(&self, i: usize, rotations: &RotationSample, frame: &GridFrame) -> RigidTransform {
        let m = &self.members[i];
        RigidTransform::new(
            rotations.rotations[m.rotation],
            frame.cell_center(frame.unlinear(m.cell)).coords,
        )
    }

    pub fn configurations(&self, rotations: &RotationSample, frame: &GridFrame) -> Vec<RigidTransform> {
        (0..self.members.len()).map(|i| self.configuration(i, rotations, frame)).collect()
    }
}

fn members_at(cells: &[usize], space: &ContactSpace, frame: &GridFrame) -> Vec<FiberMember> {
    let mut out = Vec::new();
    for &cell in cells {
        let lattice = space.lattice_of_cell(frame, cell);
        for s in 0..space.slices.len() {
            if let Some(count) = space.get(s, lattice) {
                out.push(FiberMember { rotation: s, cell, count });
            }
        }
    }
    out
}

/// Fiber of one feature: contact configurations at its query points, or at
/// its ring cells when none of the query points is reachable.
pub fn feature_fiber(feature: &DislocationFeature, space: &ContactSpace, frame: &GridFrame) -> Fiber {
    let members = members_at(&feature.query_points, space, frame);
    if !members.is_empty() {
        return Fiber { feature: feature.id, members, used_ring: false };
    }
    let ring: Vec<usize> = feature
        .ring
        .iter()
        .copied()
        .filter(|c| !feature.query_points.contains(c))
        .collect();
    let members = members_at(&ring, space, frame);
    let used_ring = !members.is_empty();
    Fiber { feature: feature.id, members, used_ring }
}

/// Necessary condition for a nonempty fiber, read from the projected
/// contact field. Uses the same query/ring points as [`feature_fiber`].
pub fn early_accessibility(
    feature: &DislocationFeature,
    projected: &VoxelGrid<u32>,
    pad: [usize; 3],
    frame: &GridFrame,
) -> bool {
    let hit = |cell: &usize| {
        let idx = frame.unlinear(*cell);
        projected.get([0, 1, 2].map(|a| idx[a] + pad[a])) > 0
    };
    feature.query_points.iter().any(hit) || feature.ring.iter().any(hit)
}

/// Fibers of `features` against `near_net`.
pub fn fibration(
    near_net: &VoxelGrid<bool>,
    features: &[&DislocationFeature],
    tools: &ToolStack,
    epsilon: f64,
    budget_bytes: u64,
) -> Result<(ContactSpace, Vec<Fiber>)> {
    let space = contact_space(near_net, tools, epsilon, budget_bytes)?;
    let frame = near_net.frame();
    let projected = projected_contact_field(&space);
    let fibers = features
        .iter()
        .map(|f| {
            if early_accessibility(f, &projected, space.pad, frame) {
                feature_fiber(f, &space, frame)
            } else {
                Fiber { feature: f.id, members: Vec::new(), used_ring: false }
            }
        })
        .collect();
    Ok((space, fibers))
}
