//! Batch jobs: configuration files, the end-to-end pipeline, plan documents
//! and their independent validation.

pub mod config;
pub mod document;
pub mod pipeline;
pub mod validate;

use std::path::{Path, PathBuf};

pub use config::{JobConfig, MetricConfig, RotationConfig, TransformRecord};
pub use document::{PlanDocument, Verdict, SCHEMA_VERSION};
pub use pipeline::{run, write_outputs, JobResult, Prepared, RunOptions};
pub use validate::{validate, Assertion, ValidateOptions, ValidationReport};

use crate::error::Result;
use crate::fixtures::Fixture;
use crate::solids::io::write_solid;
use crate::solids::{Dim, Solid};

/// Writes a fixture's geometry and a matching `config.json` into `dir`
/// and returns the configuration path.
pub fn write_fixture(fx: &Fixture, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let dim = fx.scene.part.dim();
    let ext = match dim {
        Dim::Two => "poly",
        Dim::Three => "stl",
    };
    let put = |name: &str, s: &Solid| -> Result<PathBuf> {
        let file = PathBuf::from(format!("{name}.{ext}"));
        write_solid(s, &dir.join(&file))?;
        Ok(file)
    };
    let tip = fx.scene.tool_tip;
    let config = JobConfig {
        dimension: dim.count(),
        part: put("part", &fx.scene.part)?,
        support: fx.scene.support.as_ref().map(|s| put("support", s)).transpose()?,
        tool: put("tool", &fx.scene.tool)?,
        fixture: fx.scene.fixture.as_ref().map(|s| put("fixture", s)).transpose()?,
        tool_tip: Some(tip.coords.iter().take(dim.count()).copied().collect()),
        spacing: fx.scene.spacing,
        voxelization: fx.scene.policy,
        rotations: RotationConfig { count: fx.rotations, method: Some(fx.method), seed: 0 },
        epsilon_voxels: fx.epsilon_voxels,
        metric: MetricConfig::default(),
        planner: fx.planner.clone(),
        query_points: 1,
        reference: None,
        output_dir: PathBuf::from("out"),
        exact_tsp: false,
        memory_budget_mb: 4096,
        mode: Default::default(),
        base_dir: dir.to_path_buf(),
    };
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config)? + "\n")?;
    Ok(path)
}
