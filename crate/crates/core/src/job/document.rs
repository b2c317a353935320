use serde::{Deserialize, Serialize};

use super::config::{JobConfig, TransformRecord};
use crate::motion::LegError;
use crate::se3::SamplingMethod;
use crate::sequencing::TourMethod;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything `plan` decided, in a form that is byte-for-byte reproducible
/// from the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub schema_version: u32,
    pub generator: Generator,
    pub config: JobConfig,
    pub scene: SceneRecord,
    pub rotations: RotationsRecord,
    pub metric: MetricRecord,
    pub reference: TransformRecord,
    /// Largest metric step between consecutive path waypoints.
    pub path_resolution: f64,
    pub rounds: Vec<RoundRecord>,
    pub status: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub version: String,
}

impl Default for Generator {
    fn default() -> Self {
        Generator { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub dimension: usize,
    pub spacing: f64,
    /// Centre of the first cell.
    pub grid_origin: [f64; 3],
    pub grid_dims: [usize; 3],
    pub part_cells: usize,
    pub support_cells: usize,
    pub fixture_cells: usize,
    pub tool_radius: f64,
    pub components: Vec<ComponentRecord>,
    pub features: Vec<FeatureRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub id: usize,
    pub cells: usize,
    pub features: Vec<usize>,
    /// Components that do not touch the part stay in place as fixture.
    pub detached: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: usize,
    pub component: usize,
    pub cells: usize,
    /// Centre of the representative interface cell.
    pub representative: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationsRecord {
    pub method: SamplingMethod,
    pub seed: u64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub w_rot: f64,
    pub w_trans: f64,
    pub length_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: usize,
    pub remaining: Vec<usize>,
    pub removed: Vec<usize>,
    pub support_cells: usize,
    pub contact_size: usize,
    pub fibers: Vec<FiberRecord>,
    pub sequence: SequenceRecord,
    pub paths: Vec<PathRecord>,
    pub failure: Option<FailureRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberRecord {
    pub feature: usize,
    /// Number of contact configurations.
    pub size: usize,
    /// Number of distinct accessible orientations.
    pub orientations: usize,
    /// True when the query points had no contact configuration and the
    /// feature's rim was used instead.
    pub used_ring: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub method: TourMethod,
    pub stops: Vec<StopRecord>,
    /// Distances of reference -> stop 1 -> ... -> reference.
    pub leg_costs: Vec<f64>,
    pub cost: f64,
    /// Tour weight in the fiber graph before configurations were chosen.
    pub graph_cost: f64,
    pub mst_weight: f64,
    /// `graph_cost <= 2 * mst_weight`.
    pub within_mst_bound: bool,
    /// Triangle-inequality violations among graph weights (`None` when not audited).
    pub triangle_violations: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRecord {
    pub feature: usize,
    /// Index of the chosen configuration among the fiber's members.
    pub member: usize,
    pub rotation_index: usize,
    pub configuration: TransformRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub leg: usize,
    /// Feature at the start (`null` for the reference configuration).
    pub from: Option<usize>,
    pub to: Option<usize>,
    /// Waypoints `clear_from..=clear_to` are clear of all geometry; the
    /// others form the approach segments at either end.
    pub clear_from: usize,
    pub clear_to: usize,
    pub waypoints: Vec<TransformRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub leg: usize,
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub error: LegError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// Every attached support component is removed and every leg has a path.
    AllRemovedWithPaths,
    /// Some components have a feature that no tool configuration touches.
    Unreachable { remaining: Vec<usize>, blocking_features: Vec<usize> },
    /// All components are accessible but a leg could not be planned.
    PathFailure { round: usize, leg: usize, error: LegError },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::AllRemovedWithPaths => "all_removed_with_paths",
            Verdict::Unreachable { .. } => "unreachable",
            Verdict::PathFailure { .. } => "path_failure",
        }
    }
}

impl PlanDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan documents serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
