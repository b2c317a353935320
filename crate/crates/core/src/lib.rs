//! Planning the removal of support material from additively manufactured parts.
//!
//! The pipeline voxelises a part, its supports and a cutting tool; computes
//! which tool configurations touch each part/support interface without
//! colliding; peels support components off in rounds; orders the fracture
//! configurations of each round into a short tour; and connects them with
//! collision-checked tool paths.

pub mod cspace;
pub mod error;
pub mod fibration;
pub mod fixtures;
pub mod job;
pub mod motion;
pub mod rounds;
pub mod se3;
pub mod sequencing;
pub mod solids;

pub use error::{Error, Result};
