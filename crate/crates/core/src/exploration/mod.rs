//! Star-discovery planning and the global strategy that picks where to fly next.

mod path;
mod star;
mod visibility;

use std::io::Write;

use nalgebra::Vector3;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::{OccupancyGrid, TraversabilityGrid, VoxelIndex};
use crate::rng;
use crate::sim::Waypoint;

pub use path::{path_length, plan_path, segment_traversable, voxel_route};
pub use star::{heights_around, plan_star_discovery, StarPlan, StarRay};
pub use visibility::{connected_components, interesting_voxels, mark_visited, ExplorationState};

#[derive(Debug, Error)]
pub enum ExplorationError {
    #[error("no plan: {0}")]
    NoPlan(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Tuning of star discovery and next-origin selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationParams {
    pub n_rays: usize,
    /// Number of voxel layers tried per star origin.
    pub height_layers: usize,
    /// Distance kept from the first blocked voxel; defaults to 1.5 voxels.
    pub margin_m: Option<f64>,
    pub n_candidates: usize,
    /// Inflation radius in x and y, voxels.
    pub hor_voxels: usize,
    /// Inflation radius in z, voxels.
    pub ver_voxels: usize,
    /// Also evaluate every sampled candidate shifted to each height layer.
    pub candidate_heights: bool,
}

impl Default for ExplorationParams {
    fn default() -> Self {
        Self {
            n_rays: 16,
            height_layers: 3,
            margin_m: None,
            n_candidates: 8,
            hor_voxels: 3,
            ver_voxels: 1,
            candidate_heights: false,
        }
    }
}

impl ExplorationParams {
    pub fn margin(&self, resolution: f64) -> f64 {
        self.margin_m.unwrap_or(1.5 * resolution)
    }

    pub fn validate(&self) -> Result<(), ExplorationError> {
        let bad = |m: &str| Err(ExplorationError::InvalidArgument(m.into()));
        if self.n_rays == 0 {
            return bad("n_rays must be positive");
        }
        if self.height_layers == 0 {
            return bad("height_layers must be positive");
        }
        if self.n_candidates == 0 {
            return bad("n_candidates must be positive");
        }
        if self.margin_m.is_some_and(|m| !(m >= 0.0 && m.is_finite())) {
            return bad("margin_m must be non-negative");
        }
        Ok(())
    }
}

/// Samples up to `n_candidates` distinct voxels of the largest component and returns the
/// one admitting the longest star discovery (ties: smaller voxel index).
#[allow(clippy::too_many_arguments)]
pub fn select_next_origin(
    trav: &TraversabilityGrid,
    map: &OccupancyGrid,
    components: &[Vec<VoxelIndex>],
    n_candidates: usize,
    n_rays: usize,
    height_layers: usize,
    margin: f64,
    candidate_heights: bool,
    seed: u64,
) -> Result<(Vector3<f64>, StarPlan), ExplorationError> {
    let comp = components
        .first()
        .filter(|c| !c.is_empty())
        .ok_or_else(|| ExplorationError::NoPlan("no interesting component".into()))?;
    let frame = trav.frame();
    let res = frame.resolution;
    let mut r = rng::seeded(seed);
    let mut picks: Vec<VoxelIndex> =
        index::sample(&mut r, comp.len(), n_candidates.min(comp.len()))
            .into_iter()
            .map(|i| comp[i])
            .collect();
    picks.sort_unstable();

    let mut candidates: Vec<(VoxelIndex, Vector3<f64>)> = Vec::new();
    for v in picks {
        let c = frame.center(v);
        if candidate_heights {
            for z in heights_around(c.z, res, height_layers) {
                candidates.push((v, Vector3::new(c.x, c.y, z)));
            }
        } else {
            candidates.push((v, c));
        }
    }
    let plans: Vec<Option<StarPlan>> = candidates
        .par_iter()
        .map(|(_, c)| {
            let heights = heights_around(c.z, res, height_layers);
            plan_star_discovery(trav, map, c, n_rays, &heights, margin).ok()
        })
        .collect();
    let mut best: Option<(usize, &StarPlan)> = None;
    for (i, p) in plans.iter().enumerate() {
        if let Some(p) = p {
            if best.is_none_or(|(_, b)| p.total_length > b.total_length) {
                best = Some((i, p));
            }
        }
    }
    best.map(|(_, p)| (p.origin, p.clone()))
        .ok_or_else(|| ExplorationError::NoPlan("no sampled candidate admits a star plan".into()))
}

/// Writes `x_m y_m z_m heading_rad` per line.
pub fn write_waypoints(waypoints: &[Waypoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "# x_m y_m z_m heading_rad")?;
    for p in waypoints {
        writeln!(
            w,
            "{} {} {} {}",
            p.position.x, p.position.y, p.position.z, p.heading
        )?;
    }
    Ok(())
}
