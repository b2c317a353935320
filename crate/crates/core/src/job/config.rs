use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{CheckMode, PlannerParams};
use crate::se3::{RigidTransform, Rotation, SamplingMethod};
use crate::solids::io::read_solid;
use crate::solids::{Dim, Policy, SceneInput, Solid};

/// Rotation sampling settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationConfig {
    pub count: usize,
    /// Defaults to `grid2d` in 2D and `hopf` in 3D.
    #[serde(default)]
    pub method: Option<SamplingMethod>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RotationConfig {
    fn default() -> Self {
        RotationConfig { count: 72, method: None, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default = "one")]
    pub w_rot: f64,
    /// Weight per unit of translation after dividing by the scene diagonal.
    #[serde(default = "one")]
    pub w_trans: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { w_rot: 1.0, w_trans: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn one_usize() -> usize {
    1
}

fn default_budget() -> u64 {
    4096
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// A rigid transform as written in configuration and plan files:
/// `{"quaternion": [w, x, y, z], "translation": [x, y, z]}` in 3D or
/// `{"theta": a, "translation": [x, y]}` in 2D.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TransformRecord {
    Spatial { quaternion: [f64; 4], translation: [f64; 3] },
    Planar { theta: f64, translation: [f64; 2] },
}

impl TransformRecord {
    pub fn from_transform(t: &RigidTransform, dim: Dim) -> Self {
        match dim {
            Dim::Three => TransformRecord::Spatial {
                quaternion: t.rotation.wxyz(),
                translation: [t.translation.x, t.translation.y, t.translation.z],
            },
            Dim::Two => TransformRecord::Planar {
                theta: t.rotation.planar_angle(),
                translation: [t.translation.x, t.translation.y],
            },
        }
    }

    pub fn to_transform(&self) -> RigidTransform {
        match *self {
            TransformRecord::Spatial { quaternion, translation } => {
                RigidTransform::new(Rotation::from_wxyz(quaternion), Vector3::from(translation))
            }
            TransformRecord::Planar { theta, translation } => RigidTransform::new(
                Rotation::planar(theta),
                Vector3::new(translation[0], translation[1], 0.0),
            ),
        }
    }

    pub fn dim(&self) -> Dim {
        match self {
            TransformRecord::Spatial { .. } => Dim::Three,
            TransformRecord::Planar { .. } => Dim::Two,
        }
    }
}

/// A planning job. Relative paths are resolved against the directory of
/// the configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub dimension: usize,
    pub part: PathBuf,
    #[serde(default)]
    pub support: Option<PathBuf>,
    pub tool: PathBuf,
    /// Base plate or other fixed geometry.
    #[serde(default)]
    pub fixture: Option<PathBuf>,
    /// Tool tip in tool coordinates.
    #[serde(default)]
    pub tool_tip: Option<Vec<f64>>,
    pub spacing: f64,
    #[serde(default)]
    pub voxelization: Policy,
    #[serde(default)]
    pub rotations: RotationConfig,
    /// Tolerated overlap, in voxels.
    #[serde(default = "two")]
    pub epsilon_voxels: f64,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default)]
    pub planner: PlannerParams,
    /// Query points per contact feature.
    #[serde(default = "one_usize")]
    pub query_points: usize,
    /// Start and end configuration of every round; defaults to the
    /// unrotated tool with its tip above the scene.
    #[serde(default)]
    pub reference: Option<TransformRecord>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Solve the visiting order exactly when small enough.
    #[serde(default)]
    pub exact_tsp: bool,
    #[serde(default = "default_budget")]
    pub memory_budget_mb: u64,
    #[serde(default)]
    pub mode: CheckMode,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl JobConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: JobConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        c.base_dir = base_dir.to_path_buf();
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    pub fn dim(&self) -> Dim {
        Dim::from_count(self.dimension).expect("checked on load")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn method(&self) -> SamplingMethod {
        self.rotations.method.unwrap_or(match self.dim() {
            Dim::Two => SamplingMethod::Grid2d,
            Dim::Three => SamplingMethod::Hopf,
        })
    }

    pub fn budget_bytes(&self) -> u64 {
        self.memory_budget_mb.saturating_mul(1 << 20)
    }

    fn check(&self) -> Result<()> {
        let dim = Dim::from_count(self.dimension)?;
        let positive = [
            ("spacing", self.spacing),
            ("epsilon_voxels", self.epsilon_voxels),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.rotations.count == 0 {
            return Err(Error::Config("rotations.count must be positive".into()));
        }
        if self.query_points == 0 {
            return Err(Error::Config("query_points must be positive".into()));
        }
        if self.memory_budget_mb == 0 {
            return Err(Error::Config("memory_budget_mb must be positive".into()));
        }
        let MetricConfig { w_rot, w_trans } = self.metric;
        if !(w_rot >= 0.0 && w_trans >= 0.0 && w_rot + w_trans > 0.0 && (w_rot + w_trans).is_finite()) {
            return Err(Error::Config("metric weights must be non-negative and not both zero".into()));
        }
        let p = &self.planner;
        if p.max_samples == 0 || !(p.goal_bias >= 0.0 && p.goal_bias <= 1.0) {
            return Err(Error::Config("planner needs max_samples > 0 and goal_bias in [0, 1]".into()));
        }
        if p.time_limit_s.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Config("planner.time_limit_s must be positive".into()));
        }
        if let Some(tip) = &self.tool_tip {
            if tip.len() != dim.count() {
                return Err(Error::Config(format!("tool_tip needs {} coordinates", dim.count())));
            }
        }
        if let Some(r) = &self.reference {
            if r.dim() != dim {
                return Err(Error::Config("reference transform does not match the dimension".into()));
            }
        }
        Ok(())
    }

    fn read(&self, p: &Path, role: &str) -> Result<Solid> {
        let full = self.resolve(p);
        if !full.exists() {
            return Err(Error::Config(format!("{role} file {} does not exist", full.display())));
        }
        let s = read_solid(&full)?;
        if s.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{role} file {} is {}D but the job is {}D",
                full.display(),
                s.dim().count(),
                self.dimension
            )));
        }
        Ok(s)
    }

    /// Reads the referenced geometry.
    pub fn scene_input(&self) -> Result<SceneInput> {
        let tip = self.tool_tip.clone().unwrap_or_default();
        let at = |i: usize| tip.get(i).copied().unwrap_or(0.0);
        Ok(SceneInput {
            part: self.read(&self.part, "part")?,
            support: self.support.as_ref().map(|p| self.read(p, "support")).transpose()?,
            fixture: self.fixture.as_ref().map(|p| self.read(p, "fixture")).transpose()?,
            tool: self.read(&self.tool, "tool")?,
            tool_tip: Point3::new(at(0), at(1), at(2)),
            spacing: self.spacing,
            policy: self.voxelization,
        })
    }
}
