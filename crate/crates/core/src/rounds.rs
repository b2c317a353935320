//! Recursive peeling of support components into removal rounds.
//!
//! In each round every remaining component whose features all have a
//! nonempty fiber against the current near-net shape is removed at once.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cspace::{ContactSpace, ToolStack};
use crate::error::Result;
use crate::fibration::{fibration, Fiber};
use crate::solids::{Decomposition, Scene, VoxelGrid};

#[derive(Clone, Debug, Serialize)]
pub struct RoundResult {
    pub index: usize,
    /// Components present at the start of the round.
    pub remaining: Vec<usize>,
    /// Components removed in this round.
    pub removed: Vec<usize>,
    /// Fibers of every feature of the remaining components, by feature id.
    pub fibers: Vec<Fiber>,
    /// Support cells at the start of the round (detached components included).
    pub support_cells: usize,
    /// Number of contact configurations in the round's contact space.
    pub contact_size: usize,
}

impl RoundResult {
    pub fn fiber(&self, feature: usize) -> Option<&Fiber> {
        self.fibers.iter().find(|f| f.feature == feature)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanStatus {
    AllRemoved,
    Unreachable {
        /// Components that could not be removed.
        remaining: Vec<usize>,
        /// Features of those components with empty fibers.
        blocking_features: Vec<usize>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanOutcome {
    pub rounds: Vec<RoundResult>,
    pub status: PlanStatus,
}

/// Per-round wall-clock timings.
#[derive(Clone, Copy, Debug, Default)]
pub struct RoundTiming {
    pub contact_and_fibers: Duration,
}

/// Inputs handed to the round observer.
pub struct RoundView<'a> {
    pub result: &'a RoundResult,
    pub near_net: &'a VoxelGrid<bool>,
    pub contact: &'a ContactSpace,
    pub timing: RoundTiming,
}

/// Support grid (attached `live` plus detached components) for a round.
pub fn round_support(scene: &Scene, dec: &Decomposition, live: &[usize]) -> VoxelGrid<bool> {
    scene.support_of(
        live.iter()
            .chain(&dec.detached)
            .map(|&c| &dec.components[c]),
    )
}

/// Near-net grid when the components in `live` (and all detached ones) remain.
pub fn round_near_net(scene: &Scene, dec: &Decomposition, live: &[usize]) -> Result<VoxelGrid<bool>> {
    scene.near_net(&round_support(scene, dec, live))
}

pub fn removable_rounds(
    scene: &Scene,
    dec: &Decomposition,
    tools: &ToolStack,
    epsilon: f64,
    budget_bytes: u64,
) -> Result<PlanOutcome> {
    removable_rounds_observed(scene, dec, tools, epsilon, budget_bytes, |_| {})
}

/// As [`removable_rounds`], calling `observe` after every successful round.
pub fn removable_rounds_observed(
    scene: &Scene,
    dec: &Decomposition,
    tools: &ToolStack,
    epsilon: f64,
    budget_bytes: u64,
    mut observe: impl FnMut(RoundView<'_>),
) -> Result<PlanOutcome> {
    let mut live: Vec<usize> = dec.attached().map(|c| c.id).collect();
    let mut rounds = Vec::new();
    loop {
        if live.is_empty() {
            return Ok(PlanOutcome { rounds, status: PlanStatus::AllRemoved });
        }
        let started = Instant::now();
        let support = round_support(scene, dec, &live);
        let near_net = scene.near_net(&support)?;
        let features: Vec<_> = live
            .iter()
            .flat_map(|&c| dec.components[c].features.iter().map(|&f| &dec.features[f]))
            .collect();
        let (contact, mut fibers) = fibration(&near_net, &features, tools, epsilon, budget_bytes)?;
        fibers.sort_by_key(|f| f.feature);
        let timing = RoundTiming { contact_and_fibers: started.elapsed() };
        let reachable = |c: usize| {
            dec.components[c].features.iter().all(|&f| {
                fibers.iter().find(|x| x.feature == f).is_some_and(|x| !x.is_empty())
            })
        };
        let removed: Vec<usize> = live.iter().copied().filter(|&c| reachable(c)).collect();
        log::info!(
            "round {}: {} of {} components removable ({} contact configurations)",
            rounds.len(),
            removed.len(),
            live.len(),
            contact.len()
        );
        if removed.is_empty() {
            let blocking_features = fibers.iter().filter(|f| f.is_empty()).map(|f| f.feature).collect();
            return Ok(PlanOutcome {
                rounds,
                status: PlanStatus::Unreachable { remaining: live, blocking_features },
            });
        }
        let result = RoundResult {
            index: rounds.len(),
            remaining: live.clone(),
            removed: removed.clone(),
            fibers,
            support_cells: support.count(),
            contact_size: contact.len(),
        };
        observe(RoundView { result: &result, near_net: &near_net, contact: &contact, timing });
        rounds.push(result);
        live.retain(|c| !removed.contains(c));
    }
}
