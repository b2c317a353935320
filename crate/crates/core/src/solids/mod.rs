//! Solid geometry: boundary representations, file formats, voxel grids,
//! connected components and contact features.

pub mod components;
pub mod grid;
pub mod io;
pub mod mesh;
pub mod scene;
pub mod voxelize;

pub use components::{
    connected_components, decompose, dislocation_features, label_components, Decomposition,
    DislocationFeature, Labeling, SupportComponent,
};
pub use grid::{Connectivity, GridFrame, VoxelGrid};
pub use mesh::{Aabb, Dim, PolygonSet, Solid, TriMesh};
pub use scene::{Scene, SceneInput, SupportShell};
pub use voxelize::{voxelize, voxelize_into, Policy};
