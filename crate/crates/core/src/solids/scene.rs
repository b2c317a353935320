//! A voxelised part/support/fixture/tool scene on one shared lattice.

use std::collections::BTreeMap;

use nalgebra::Point3;

use super::components::{decompose, Decomposition, SupportComponent};
use super::grid::{GridFrame, VoxelGrid};
use super::mesh::{Aabb, Dim, Solid};
use super::voxelize::{voxelize_into, Policy};
use crate::error::{Error, Result};

/// Raw scene inputs.
#[derive(Clone, Debug)]
pub struct SceneInput {
    pub part: Solid,
    /// `None` when the part was printed without supports.
    pub support: Option<Solid>,
    pub fixture: Option<Solid>,
    pub tool: Solid,
    /// Tool tip in the tool's own coordinates.
    pub tool_tip: Point3<f64>,
    pub spacing: f64,
    pub policy: Policy,
}

/// Boundary piece of the support together with the component it belongs to.
#[derive(Clone, Debug)]
pub struct SupportShell {
    pub solid: Solid,
    pub component: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub dim: Dim,
    pub spacing: f64,
    pub policy: Policy,
    pub frame: GridFrame,
    pub part: Solid,
    pub support: Option<Solid>,
    pub fixture: Option<Solid>,
    /// Tool with its tip moved to the origin.
    pub tool: Solid,
    pub part_grid: VoxelGrid<bool>,
    /// Support with part cells removed.
    pub support_grid: VoxelGrid<bool>,
    /// Fixture with part and support cells removed (empty without a fixture).
    pub fixture_grid: VoxelGrid<bool>,
}

impl Scene {
    pub fn build(input: SceneInput) -> Result<Scene> {
        let dim = input.part.dim();
        let named = [("support", input.support.as_ref()), ("tool", Some(&input.tool)), ("fixture", input.fixture.as_ref())];
        for (name, s) in named {
            if let Some(s) = s {
                if s.dim() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "{name} is {}D but the part is {}D",
                        s.dim().count(),
                        dim.count()
                    )));
                }
            }
        }
        if !(input.spacing > 0.0 && input.spacing.is_finite()) {
            return Err(Error::Config(format!("spacing must be positive, got {}", input.spacing)));
        }
        input.part.validate()?;
        input.tool.validate()?;
        for s in input.support.iter().chain(&input.fixture) {
            s.validate()?;
        }
        let tip_gap = input.tool.boundary_distance(&input.tool_tip);
        if tip_gap > input.spacing {
            return Err(Error::TipOffSurface { distance: tip_gap, allowed: input.spacing });
        }
        let shift = -input.tool_tip.coords;
        let tool = input.tool.transformed(&nalgebra::Matrix3::identity(), &shift);

        let mut bounds = input.part.aabb();
        for s in input.support.iter().chain(&input.fixture) {
            bounds = bounds.union(&s.aabb());
        }
        let frame = GridFrame::covering(&bounds, input.spacing, 1, dim);
        let part_grid = voxelize_into(&input.part, &frame, input.policy);
        let support_grid = match &input.support {
            Some(s) => voxelize_into(s, &frame, input.policy).subtract(&part_grid)?,
            None => VoxelGrid::new(frame),
        };
        let fixture_grid = match &input.fixture {
            Some(f) => voxelize_into(f, &frame, input.policy)
                .subtract(&part_grid)?
                .subtract(&support_grid)?,
            None => VoxelGrid::new(frame),
        };
        Ok(Scene {
            dim,
            spacing: input.spacing,
            policy: input.policy,
            frame,
            part: input.part,
            support: input.support,
            fixture: input.fixture,
            tool,
            part_grid,
            support_grid,
            fixture_grid,
        })
    }

    pub fn decompose(&self, query_count: usize) -> Result<Decomposition> {
        decompose(&self.part_grid, &self.support_grid, query_count)
    }

    /// Bounding box of the scene lattice.
    pub fn bounds(&self) -> Aabb {
        let mut b = self.frame.aabb();
        if self.dim == Dim::Two {
            b.min.z = 0.0;
            b.max.z = 0.0;
        }
        b
    }

    /// Largest distance from the tip to a tool vertex.
    pub fn tool_radius(&self) -> f64 {
        self.tool.vertices().iter().map(|v| v.coords.norm()).fold(0.0, f64::max)
    }

    /// Support grid restricted to the given components.
    pub fn support_of<'a>(&self, comps: impl IntoIterator<Item = &'a SupportComponent>) -> VoxelGrid<bool> {
        VoxelGrid::from_cells(self.frame, comps.into_iter().flat_map(|c| c.cells.iter().copied()))
    }

    /// Part, fixture and the given support cells.
    pub fn near_net(&self, support: &VoxelGrid<bool>) -> Result<VoxelGrid<bool>> {
        self.part_grid.union(&self.fixture_grid)?.union(support)
    }

    /// Support boundary pieces, each assigned to the component whose cells
    /// it touches most.
    pub fn support_shells(&self, dec: &Decomposition) -> Vec<SupportShell> {
        let mut owner = vec![u32::MAX; self.frame.len()];
        for c in &dec.components {
            for &l in &c.cells {
                owner[l] = c.id as u32;
            }
        }
        let Some(support) = &self.support else { return Vec::new() };
        support
            .shells()
            .into_iter()
            .map(|solid| {
                let cells = voxelize_into(&solid, &self.frame, Policy::Conservative);
                let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
                for l in cells.occupied() {
                    if owner[l] != u32::MAX {
                        *votes.entry(owner[l] as usize).or_default() += 1;
                    }
                }
                let component = votes
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                    .map(|(&c, _)| c);
                SupportShell { solid, component }
            })
            .collect()
    }
}
