//! Configuration-space obstacles as overlap-count fields.
//!
//! For a rotation `r` and a lattice translation `t`, the overlap field counts
//! the voxels shared by the near-net shape and the tool placed at `(r, t)`.
//! Counts are obtained for all translations at once by zero-padded FFT
//! correlation of the two occupancy grids.

pub mod fft;

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::se3::{RigidTransform, Rotation, RotationSample};
use crate::solids::voxelize::{centred_frame, voxelize_into, Policy};
use crate::solids::{Aabb, Dim, GridFrame, Solid, VoxelGrid};
use fft::{good_size, Fft3};

/// Tool occupancy at one rotation, as cell offsets from the tip cell.
#[derive(Clone, Debug)]
pub struct ToolRaster {
    pub rotation_index: usize,
    pub rotation: Rotation,
    /// Occupied offsets, sorted.
    pub cells: Vec<[i32; 3]>,
    /// Largest absolute offset along each axis.
    pub extent: [usize; 3],
}

/// Rotates `tool` (tip at the origin) and rasterises it on a lattice whose
/// cell centres are integer multiples of `spacing`. The tip cell is always occupied.
pub fn rasterize_tool(
    tool: &Solid,
    rotation_index: usize,
    rotation: &Rotation,
    spacing: f64,
    policy: Policy,
) -> ToolRaster {
    let rotated = tool.transformed(&rotation.matrix(), &Vector3::zeros());
    let frame = centred_frame(&rotated, spacing);
    let mut grid = voxelize_into(&rotated, &frame, policy);
    crate::solids::voxelize::mark_point(&mut grid, &Point3::origin());
    let lo = [0, 1, 2].map(|a| (frame.origin[a] / spacing + 0.5).round() as i32);
    let mut cells: Vec<[i32; 3]> = grid
        .occupied()
        .map(|l| {
            let idx = frame.unlinear(l);
            [0, 1, 2].map(|a| idx[a] as i32 + lo[a])
        })
        .collect();
    if frame.dim == Dim::Two {
        for c in &mut cells {
            c[2] = 0;
        }
    }
    cells.sort_unstable_by_key(|c| (c[2], c[1], c[0]));
    let mut extent = [0usize; 3];
    for c in &cells {
        for a in 0..3 {
            extent[a] = extent[a].max(c[a].unsigned_abs() as usize);
        }
    }
    ToolRaster { rotation_index, rotation: *rotation, cells, extent }
}

/// Rasterised tool for every sampled rotation, sharing one padding.
#[derive(Clone, Debug)]
pub struct ToolStack {
    pub rasters: Vec<ToolRaster>,
    /// Cells added on each side of the near-net grid to form the translation lattice.
    pub pad: [usize; 3],
    pub spacing: f64,
    pub dim: Dim,
    /// Largest distance from the tip to the tool surface.
    pub radius: f64,
}

impl ToolStack {
    pub fn build(tool: &Solid, rotations: &RotationSample, spacing: f64, policy: Policy, radius: f64) -> Self {
        let rasters: Vec<ToolRaster> = rotations
            .rotations
            .par_iter()
            .enumerate()
            .map(|(i, r)| rasterize_tool(tool, i, r, spacing, policy))
            .collect();
        let dim = tool.dim();
        let mut pad = [0usize; 3];
        for r in &rasters {
            for a in 0..dim.count() {
                pad[a] = pad[a].max(r.extent[a] + 1);
            }
        }
        ToolStack { rasters, pad, spacing, dim, radius }
    }

    pub fn len(&self) -> usize {
        self.rasters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rasters.is_empty()
    }
}

/// Overlap counts for one rotation over the translation lattice.
#[derive(Clone, Debug)]
pub struct OverlapField {
    pub rotation_index: usize,
    pub rotation: Rotation,
    /// Counts on the padded translation lattice.
    pub counts: VoxelGrid<u32>,
}

impl OverlapField {
    /// Overlap volume (area in 2D) at the lattice point nearest `t`.
    pub fn value_at(&self, t: &Point3<f64>) -> Option<f64> {
        let f = self.counts.frame();
        self.counts
            .get_signed(f.cell_of(t))
            .map(|c| c as f64 * f.cell_measure())
    }
}

/// Voxel-count thresholds of the contact predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Free,
    Contact,
    Collide,
}

/// `0 -> Free`, `(0, epsilon) -> Contact`, otherwise `Collide`; `epsilon` is in voxels.
pub fn classify_count(count: u32, epsilon: f64) -> Classification {
    if count == 0 {
        Classification::Free
    } else if (count as f64) < epsilon {
        Classification::Contact
    } else {
        Classification::Collide
    }
}

/// FFT correlation engine for one near-net grid; the near-net spectrum is
/// computed once and reused for every rotation.
pub struct OverlapEngine {
    field_frame: GridFrame,
    pad: [usize; 3],
    fft: Fft3,
    spectrum: Vec<Complex64>,
}

/// Bytes held per rotation while evaluating a field on `dims`.
fn work_bytes(dims: [usize; 3]) -> u64 {
    dims.iter().map(|&d| d as u64).product::<u64>() * 16
}

impl OverlapEngine {
    pub fn new(near_net: &VoxelGrid<bool>, pad: [usize; 3], budget_bytes: u64) -> Result<Self> {
        let nf = *near_net.frame();
        let field_frame = nf.padded(pad);
        let dims = field_frame.dims.map(|d| if d > 1 { good_size(d) } else { 1 });
        let threads = rayon::current_num_threads() as u64;
        let required = work_bytes(dims) * (1 + threads) + field_frame.len() as u64 * 4 * threads;
        if required > budget_bytes {
            return Err(Error::GridTooLarge { required_bytes: required, budget_bytes });
        }
        let fft = Fft3::new(dims);
        let mut spectrum = vec![Complex64::default(); fft.len()];
        for l in near_net.occupied() {
            let idx = nf.unlinear(l);
            let p = [0, 1, 2].map(|a| idx[a] + pad[a]);
            spectrum[p[0] + dims[0] * (p[1] + dims[1] * p[2])] = Complex64::new(1.0, 0.0);
        }
        fft.forward(&mut spectrum);
        Ok(OverlapEngine { field_frame, pad, fft, spectrum })
    }

    pub fn field_frame(&self) -> &GridFrame {
        &self.field_frame
    }

    pub fn pad(&self) -> [usize; 3] {
        self.pad
    }

    /// Overlap counts at every lattice translation for one rotated tool.
    pub fn field(&self, tool: &ToolRaster) -> OverlapField {
        let dims = self.fft.dims();
        let mut buf = vec![Complex64::default(); self.fft.len()];
        for c in &tool.cells {
            let p = [0, 1, 2].map(|a| (-(c[a] as i64)).rem_euclid(dims[a] as i64) as usize);
            buf[p[0] + dims[0] * (p[1] + dims[1] * p[2])] += Complex64::new(1.0, 0.0);
        }
        self.fft.forward(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.fft.inverse(&mut buf);
        let scale = 1.0 / self.fft.len() as f64;
        let ff = self.field_frame;
        let mut counts = Vec::with_capacity(ff.len());
        for k in 0..ff.dims[2] {
            for j in 0..ff.dims[1] {
                let row = dims[0] * (j + dims[1] * k);
                for i in 0..ff.dims[0] {
                    let v = (buf[row + i].re * scale).round();
                    counts.push(if v > 0.0 { v as u32 } else { 0 });
                }
            }
        }
        OverlapField {
            rotation_index: tool.rotation_index,
            rotation: tool.rotation,
            counts: VoxelGrid::from_values(ff, counts),
        }
    }
}

/// Overlap field of one rasterised tool against `near_net`.
pub fn overlap_field(near_net: &VoxelGrid<bool>, tool: &ToolRaster, pad: [usize; 3]) -> Result<OverlapField> {
    Ok(OverlapEngine::new(near_net, pad, u64::MAX)?.field(tool))
}

/// Direct overlap count of a rasterised tool with its tip in lattice cell
/// `tip` of `near_net` (signed, may be outside the grid).
pub fn overlap_count(near_net: &VoxelGrid<bool>, tool: &ToolRaster, tip: [i64; 3]) -> u32 {
    tool.cells
        .iter()
        .filter(|c| {
            near_net
                .get_signed([tip[0] + c[0] as i64, tip[1] + c[1] as i64, tip[2] + c[2] as i64])
                .unwrap_or(false)
        })
        .count() as u32
}

/// Result of classifying a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Classified {
    pub class: Classification,
    pub count: u32,
    /// True when the rotation was not one of the samples and the nearest one was used.
    pub approximate: bool,
}

/// Overlap fields for every sampled rotation with lookup by configuration.
pub struct FieldStack<'a> {
    pub fields: Vec<OverlapField>,
    pub rotations: &'a RotationSample,
    pub tool_radius: f64,
    pub near_net_bounds: Aabb,
}

impl FieldStack<'_> {
    /// Classifies `tau`, snapping the translation to the lattice and the
    /// rotation to the nearest sample.
    pub fn classify(&self, tau: &RigidTransform, epsilon: f64) -> Result<Classified> {
        let (s, exact) = match self.rotations.index_of(&tau.rotation) {
            Some(s) => (s, true),
            None => (self.rotations.nearest(&tau.rotation).0, false),
        };
        let field = &self.fields[s];
        let f = field.counts.frame();
        let tip = Point3::from(tau.translation);
        match field.counts.get_signed(f.cell_of(&tip)) {
            Some(c) => Ok(Classified { class: classify_count(c, epsilon), count: c, approximate: !exact }),
            None if self.near_net_bounds.distance(&tip) > self.tool_radius => Ok(Classified {
                class: Classification::Free,
                count: 0,
                approximate: !exact,
            }),
            None => Err(Error::OutOfFieldBounds),
        }
    }
}

/// Lattice configurations in epsilon-contact with the near-net shape,
/// stored sparsely per rotation.
#[derive(Clone, Debug)]
pub struct ContactSpace {
    /// Translation lattice (near-net frame grown by `pad`).
    pub frame: GridFrame,
    pub pad: [usize; 3],
    pub epsilon: f64,
    /// For each rotation index: lattice index -> overlap count.
    pub slices: Vec<HashMap<usize, u32>>,
}

impl ContactSpace {
    pub fn get(&self, rotation: usize, lattice: usize) -> Option<u32> {
        self.slices[rotation].get(&lattice).copied()
    }

    pub fn len(&self) -> usize {
        self.slices.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries `(rotation, lattice index, count)` in sorted order.
    pub fn entries(&self) -> Vec<(usize, usize, u32)> {
        let mut out: Vec<(usize, usize, u32)> = self
            .slices
            .iter()
            .enumerate()
            .flat_map(|(s, m)| m.iter().map(move |(&l, &c)| (s, l, c)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Lattice index of a cell of the near-net frame.
    pub fn lattice_of_cell(&self, near_net: &GridFrame, cell: usize) -> usize {
        let idx = near_net.unlinear(cell);
        self.frame.linear([0, 1, 2].map(|a| idx[a] + self.pad[a]))
    }

    /// Translation of a lattice index.
    pub fn translation(&self, lattice: usize) -> Vector3<f64> {
        self.frame.cell_center(self.frame.unlinear(lattice)).coords
    }
}

/// Computes the contact space for all rotations of `tools`. Rotation indices
/// listed in `keep` also have their full overlap fields returned.
pub fn contact_space_with_fields(
    near_net: &VoxelGrid<bool>,
    tools: &ToolStack,
    epsilon: f64,
    budget_bytes: u64,
    keep: &[usize],
) -> Result<(ContactSpace, Vec<OverlapField>)> {
    let engine = OverlapEngine::new(near_net, tools.pad, budget_bytes)?;
    let results: Vec<(HashMap<usize, u32>, Option<OverlapField>)> = tools
        .rasters
        .par_iter()
        .map(|t| {
            let field = engine.field(t);
            let slice: HashMap<usize, u32> = field
                .counts
                .values()
                .iter()
                .enumerate()
                .filter(|(_, &c)| classify_count(c, epsilon) == Classification::Contact)
                .map(|(l, &c)| (l, c))
                .collect();
            let kept = keep.contains(&t.rotation_index).then_some(field);
            (slice, kept)
        })
        .collect();
    let mut slices = Vec::with_capacity(results.len());
    let mut fields = Vec::new();
    for (s, f) in results {
        slices.push(s);
        fields.extend(f);
    }
    Ok((
        ContactSpace { frame: *engine.field_frame(), pad: tools.pad, epsilon, slices },
        fields,
    ))
}

pub fn contact_space(
    near_net: &VoxelGrid<bool>,
    tools: &ToolStack,
    epsilon: f64,
    budget_bytes: u64,
) -> Result<ContactSpace> {
    Ok(contact_space_with_fields(near_net, tools, epsilon, budget_bytes, &[])?.0)
}

/// Number of rotations in contact at each lattice translation.
pub fn projected_contact_field(space: &ContactSpace) -> VoxelGrid<u32> {
    let mut g = VoxelGrid::<u32>::new(space.frame);
    for slice in &space.slices {
        for &l in slice.keys() {
            g.values_mut()[l] += 1;
        }
    }
    g
}
