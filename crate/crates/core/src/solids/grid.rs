//! Dense voxel grids on a shared cubic lattice.

use nalgebra::{Point3, Vector3};

use super::mesh::{Aabb, Dim};
use crate::error::{Error, Result};

/// Placement of a grid in space. Cell `(i, j, k)` covers
/// `origin + [i, i+1) x [j, j+1) x [k, k+1)` times `spacing`. Two-dimensional
/// grids have a single layer in z centred on z = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridFrame {
    pub origin: Point3<f64>,
    pub spacing: f64,
    pub dims: [usize; 3],
    pub dim: Dim,
}

impl GridFrame {
    /// Frame covering `bounds` with `pad` extra cells per side, whose cell
    /// corners lie on integer multiples of `spacing`.
    pub fn covering(bounds: &Aabb, spacing: f64, pad: usize, dim: Dim) -> GridFrame {
        let mut origin = Point3::new(0.0, 0.0, -spacing / 2.0);
        let mut dims = [1usize; 3];
        for a in 0..dim.count() {
            let lo = (bounds.min[a] / spacing).floor() as i64 - pad as i64;
            let hi = (bounds.max[a] / spacing).ceil() as i64 + pad as i64;
            origin[a] = lo as f64 * spacing;
            dims[a] = (hi - lo).max(1) as usize;
        }
        GridFrame { origin, spacing, dims, dim }
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing.powi(self.dim.count() as i32)
    }

    #[inline]
    pub fn linear(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    #[inline]
    pub fn unlinear(&self, mut l: usize) -> [usize; 3] {
        let i = l % self.dims[0];
        l /= self.dims[0];
        [i, l % self.dims[1], l / self.dims[1]]
    }

    pub fn contains_index(&self, idx: [i64; 3]) -> bool {
        (0..3).all(|a| idx[a] >= 0 && (idx[a] as usize) < self.dims[a])
    }

    pub fn cell_center(&self, idx: [usize; 3]) -> Point3<f64> {
        let mut p = self.origin;
        for a in 0..3 {
            p[a] += (idx[a] as f64 + 0.5) * self.spacing;
        }
        p
    }

    /// Signed index of the cell containing `p`.
    pub fn cell_of(&self, p: &Point3<f64>) -> [i64; 3] {
        let mut idx = [0i64; 3];
        for a in 0..self.dim.count() {
            idx[a] = ((p[a] - self.origin[a]) / self.spacing).floor() as i64;
        }
        idx
    }

    pub fn aabb(&self) -> Aabb {
        let mut max = self.origin;
        for a in 0..3 {
            max[a] += self.dims[a] as f64 * self.spacing;
        }
        Aabb { min: self.origin, max }
    }

    /// Whole-cell offset from `self` to `other`, if both sit on the same lattice.
    pub fn offset_to(&self, other: &GridFrame) -> Option<[i64; 3]> {
        if self.dim != other.dim || (self.spacing - other.spacing).abs() > 1e-12 * self.spacing {
            return None;
        }
        let mut off = [0i64; 3];
        for a in 0..3 {
            let d = (other.origin[a] - self.origin[a]) / self.spacing;
            let r = d.round();
            if (d - r).abs() > 1e-6 {
                return None;
            }
            off[a] = r as i64;
        }
        Some(off)
    }

    /// Same lattice grown by `pad[a]` cells on both sides of axis `a`.
    pub fn padded(&self, pad: [usize; 3]) -> GridFrame {
        let mut f = *self;
        for a in 0..3 {
            f.origin[a] -= pad[a] as f64 * self.spacing;
            f.dims[a] += 2 * pad[a];
        }
        f
    }

    /// Neighbour offsets for face (6/4) or full (26/8) connectivity.
    pub fn neighbours(&self, conn: Connectivity) -> Vec<[i64; 3]> {
        let zr: &[i64] = if self.dim == Dim::Two { &[0] } else { &[-1, 0, 1] };
        let mut out = Vec::new();
        for &dz in zr {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let nz = (dx != 0) as u8 + (dy != 0) as u8 + (dz != 0) as u8;
                    let keep = match conn {
                        Connectivity::Face => nz == 1,
                        Connectivity::Full => nz >= 1,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Voxel adjacency used for labelling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    /// Cells sharing a face (6 in 3D, 4 in 2D).
    Face,
    /// Cells sharing a face, edge or corner (26 in 3D, 8 in 2D).
    Full,
}

/// Dense scalar field over a [`GridFrame`], x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid<T> {
    frame: GridFrame,
    values: Vec<T>,
}

impl<T: Copy + Default> VoxelGrid<T> {
    pub fn new(frame: GridFrame) -> Self {
        VoxelGrid { values: vec![T::default(); frame.len()], frame }
    }
}

impl<T: Copy> VoxelGrid<T> {
    pub fn from_values(frame: GridFrame, values: Vec<T>) -> Self {
        assert_eq!(values.len(), frame.len(), "value count must match frame");
        VoxelGrid { frame, values }
    }

    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, idx: [usize; 3]) -> T {
        self.values[self.frame.linear(idx)]
    }

    /// Value at a signed index, `None` outside the grid.
    #[inline]
    pub fn get_signed(&self, idx: [i64; 3]) -> Option<T> {
        self.frame
            .contains_index(idx)
            .then(|| self.values[self.frame.linear(idx.map(|v| v as usize))])
    }

    #[inline]
    pub fn set(&mut self, idx: [usize; 3], v: T) {
        let l = self.frame.linear(idx);
        self.values[l] = v;
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> VoxelGrid<U> {
        VoxelGrid { frame: self.frame, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

impl VoxelGrid<bool> {
    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    /// Occupied volume (area in 2D).
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.frame.cell_measure()
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i)
    }

    fn check_frame(&self, other: &VoxelGrid<bool>) -> Result<()> {
        if self.frame.dims != other.frame.dims || self.frame.offset_to(&other.frame) != Some([0; 3])
        {
            return Err(Error::FrameMismatch);
        }
        Ok(())
    }

    /// Cells occupied in `self` but not in `other`.
    pub fn subtract(&self, other: &VoxelGrid<bool>) -> Result<VoxelGrid<bool>> {
        self.check_frame(other)?;
        Ok(VoxelGrid {
            frame: self.frame,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a && !b).collect(),
        })
    }

    pub fn union(&self, other: &VoxelGrid<bool>) -> Result<VoxelGrid<bool>> {
        self.check_frame(other)?;
        Ok(VoxelGrid {
            frame: self.frame,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a || b).collect(),
        })
    }

    pub fn intersection(&self, other: &VoxelGrid<bool>) -> Result<VoxelGrid<bool>> {
        self.check_frame(other)?;
        Ok(VoxelGrid {
            frame: self.frame,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a && b).collect(),
        })
    }

    /// Grid with only the listed cells set.
    pub fn from_cells(frame: GridFrame, cells: impl IntoIterator<Item = usize>) -> Self {
        let mut g = VoxelGrid::new(frame);
        for c in cells {
            g.values[c] = true;
        }
        g
    }

    /// Dilates by `steps` rings of full (26/8) connectivity.
    pub fn dilate(&self, steps: usize) -> VoxelGrid<bool> {
        let mut cur = self.clone();
        let nbrs = self.frame.neighbours(Connectivity::Full);
        for _ in 0..steps {
            let mut next = cur.clone();
            for l in cur.occupied() {
                let idx = self.frame.unlinear(l).map(|v| v as i64);
                for d in &nbrs {
                    let n = [idx[0] + d[0], idx[1] + d[1], idx[2] + d[2]];
                    if self.frame.contains_index(n) {
                        next.values[self.frame.linear(n.map(|v| v as usize))] = true;
                    }
                }
            }
            cur = next;
        }
        cur
    }

    /// Copies onto another frame on the same lattice; cells falling outside
    /// the target are dropped.
    pub fn resampled(&self, target: &GridFrame) -> Result<VoxelGrid<bool>> {
        let off = target.offset_to(&self.frame).ok_or(Error::FrameMismatch)?;
        let mut out = VoxelGrid::new(*target);
        for l in self.occupied() {
            let idx = self.frame.unlinear(l);
            let t = [0, 1, 2].map(|a| idx[a] as i64 + off[a]);
            if target.contains_index(t) {
                out.values[target.linear(t.map(|v| v as usize))] = true;
            }
        }
        Ok(out)
    }

    /// Bounding box of occupied cells in space, empty if none.
    pub fn occupied_aabb(&self) -> Aabb {
        let mut b = Aabb::empty();
        let h = Vector3::repeat(self.frame.spacing / 2.0);
        for l in self.occupied() {
            let c = self.frame.cell_center(self.frame.unlinear(l));
            b.grow(&(c - h));
            b.grow(&(c + h));
        }
        if self.frame.dim == Dim::Two && !b.is_empty() {
            b.min.z = 0.0;
            b.max.z = 0.0;
        }
        b
    }
}
