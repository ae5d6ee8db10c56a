use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::ExplorationError;
use crate::map::{raycast, GridFrame, OccupancyGrid, TraversabilityGrid, VoxelIndex};
use crate::sim::Waypoint;

/// One radial leg of a star discovery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarRay {
    pub angle: f64,
    pub reach: f64,
    pub endpoint: Vector3<f64>,
}

/// Out-and-back legs from one origin at a single height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarPlan {
    pub origin: Vector3<f64>,
    /// Voxel layer (z index) the legs are flown in.
    pub height_index: usize,
    pub rays: Vec<StarRay>,
    /// Starts at the origin, then `(endpoint, origin)` per ray; headings are 90 deg left
    /// of the leg direction.
    pub waypoints: Vec<Waypoint>,
    /// Flown distance, out and back.
    pub total_length: f64,
}

impl StarPlan {
    pub fn reach_sum(&self) -> f64 {
        self.rays.iter().map(|r| r.reach).sum()
    }
}

/// `layers` heights one voxel apart centered on `z`: `z`, `z - res`, `z + res`, `z - 2 res`, ...
pub fn heights_around(z: f64, resolution: f64, layers: usize) -> Vec<f64> {
    (0..layers.max(1))
        .map(|i| {
            let k = i.div_ceil(2) as f64;
            if i % 2 == 1 {
                z - k * resolution
            } else {
                z + k * resolution
            }
        })
        .collect()
}

/// Distance from `o` along `d` to where the ray enters `v`.
fn entry_distance(frame: &GridFrame, v: VoxelIndex, o: &Vector3<f64>, d: &Vector3<f64>) -> f64 {
    let lo = frame.origin + Vector3::new(v.x as f64, v.y as f64, v.z as f64) * frame.resolution;
    let hi = lo + Vector3::repeat(frame.resolution);
    let mut t = 0.0f64;
    for a in 0..3 {
        if d[a] != 0.0 {
            let t0 = (lo[a] - o[a]) / d[a];
            let t1 = (hi[a] - o[a]) / d[a];
            t = t.max(t0.min(t1));
        }
    }
    t
}

/// Free travel distance from `o` along the horizontal unit direction `d`.
fn free_reach(trav: &TraversabilityGrid, o: &Vector3<f64>, d: &Vector3<f64>) -> f64 {
    let frame = trav.frame();
    let span = (frame.max_corner() - frame.origin).norm();
    let far = o + d * span;
    let mut reach = span;
    let mut exited = true;
    raycast::try_for_each_voxel(frame, o, &far, |v| {
        if trav.is_traversable(v) {
            true
        } else {
            reach = entry_distance(frame, v, o, d);
            exited = false;
            false
        }
    });
    if exited {
        // left the grid without meeting a blocked voxel
        let c = frame.to_cell_coords(o);
        reach = (0..2)
            .filter(|&a| d[a] != 0.0)
            .map(|a| {
                let bound = if d[a] > 0.0 {
                    frame.dims[a] as f64
                } else {
                    0.0
                };
                (bound - c[a]) / d[a] * frame.resolution
            })
            .fold(f64::INFINITY, f64::min);
    }
    reach.max(0.0)
}

fn plan_at_height(
    trav: &TraversabilityGrid,
    origin: Vector3<f64>,
    height_index: usize,
    n_rays: usize,
    margin: f64,
) -> StarPlan {
    let res = trav.frame().resolution;
    let mut rays = Vec::new();
    for k in 0..n_rays {
        let angle = TAU * k as f64 / n_rays as f64;
        let d = Vector3::new(angle.cos(), angle.sin(), 0.0);
        let reach = free_reach(trav, &origin, &d) - margin;
        if reach < res {
            continue;
        }
        let endpoint = origin + d * reach;
        if !trav.is_point_traversable(&endpoint) {
            continue;
        }
        rays.push(StarRay {
            angle,
            reach,
            endpoint,
        });
    }
    let mut waypoints = Vec::with_capacity(2 * rays.len() + 1);
    if let Some(first) = rays.first() {
        waypoints.push(Waypoint::new(origin, first.angle + FRAC_PI_2));
    }
    for r in &rays {
        let heading = r.angle + FRAC_PI_2;
        waypoints.push(Waypoint::new(r.endpoint, heading));
        waypoints.push(Waypoint::new(origin, heading));
    }
    let total_length = 2.0 * rays.iter().map(|r| r.reach).sum::<f64>();
    StarPlan {
        origin,
        height_index,
        rays,
        waypoints,
        total_length,
    }
}

/// Plans a star discovery around `origin` at each candidate height and keeps the one with
/// the largest total reach (ties: earlier height in the list).
///
/// Heights are snapped to the center of their voxel layer. `map` is unused by the ray
/// reach but checked for agreeing indexing.
pub fn plan_star_discovery(
    trav: &TraversabilityGrid,
    map: &OccupancyGrid,
    origin: &Vector3<f64>,
    n_rays: usize,
    heights: &[f64],
    margin: f64,
) -> Result<StarPlan, ExplorationError> {
    if map.frame() != trav.frame() {
        return Err(ExplorationError::InvalidArgument(
            "map and traversability grid differ in indexing".into(),
        ));
    }
    if n_rays == 0 {
        return Err(ExplorationError::InvalidArgument(
            "n_rays must be positive".into(),
        ));
    }
    let frame = trav.frame();
    let mut best: Option<StarPlan> = None;
    for &h in heights {
        let Some(v) = frame.voxel_of(&Vector3::new(origin.x, origin.y, h)) else {
            continue;
        };
        if !trav.is_traversable(v) {
            continue;
        }
        let o = Vector3::new(origin.x, origin.y, frame.center(v).z);
        let plan = plan_at_height(trav, o, v.z, n_rays, margin);
        if best
            .as_ref()
            .is_none_or(|b| plan.total_length > b.total_length)
        {
            best = Some(plan);
        }
    }
    best.ok_or_else(|| {
        ExplorationError::NoPlan(format!(
            "origin ({:.3}, {:.3}) is blocked at every candidate height",
            origin.x, origin.y
        ))
    })
}
