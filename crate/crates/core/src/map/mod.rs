//! Log-odds voxel occupancy map fed by semi-dense depth frames.
//!
//! Each measurement is integrated by ray casting from the camera center: voxels in
//! front of the measured point become more likely free, the voxel at the point more likely
//! occupied. Measurements whose depth variance exceeds a threshold only contribute free
//! space, and only up to a range pulled back by a multiple of their standard deviation.
//!
//! Within one frame every voxel is updated at most once; a voxel that is both hit and
//! passed through by different rays of the same frame receives the hit only.

mod export;
mod grid;
mod inflate;
pub mod raycast;
mod storage;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{backproject, CameraIntrinsics, GeometryError, PixelMeasurement, Pose};

pub use export::{read_map_text, write_map_text, write_occupied_mesh_obj, MapText};
pub use grid::{GridFrame, VoxelIndex};
pub use inflate::{inflate, TraversabilityGrid};
pub use storage::Backing;
use storage::Storage;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("map file parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn probability(logodds: f64) -> f64 {
    1.0 / (1.0 + (-logodds).exp())
}

/// Inverse sensor model and classification constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorModelParams {
    pub p_hit: f64,
    pub p_miss: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// A touched voxel is occupied iff its probability exceeds this.
    pub occupancy_threshold: f64,
    /// Measurements with variance above this (m^2) only insert free space.
    pub variance_threshold_m2: f64,
    /// Free range of a high-variance measurement is `max(0, d - k_sigma * sqrt(variance))`.
    pub k_sigma: f64,
}

impl Default for SensorModelParams {
    fn default() -> Self {
        Self {
            p_hit: 0.7,
            p_miss: 0.4,
            p_min: 0.12,
            p_max: 0.97,
            occupancy_threshold: 0.86,
            variance_threshold_m2: 0.01,
            k_sigma: 2.0,
        }
    }
}

impl SensorModelParams {
    pub fn l_hit(&self) -> f64 {
        logit(self.p_hit)
    }
    pub fn l_miss(&self) -> f64 {
        logit(self.p_miss)
    }
    pub fn l_min(&self) -> f64 {
        logit(self.p_min)
    }
    pub fn l_max(&self) -> f64 {
        logit(self.p_max)
    }
    pub fn l_occupied(&self) -> f64 {
        logit(self.occupancy_threshold)
    }

    pub fn validate(&self) -> Result<(), MapError> {
        let open = |p: f64| p > 0.0 && p < 1.0;
        let ok = [
            self.p_hit,
            self.p_miss,
            self.p_min,
            self.p_max,
            self.occupancy_threshold,
        ]
        .into_iter()
        .all(open)
            && self.p_hit > 0.5
            && self.p_miss < 0.5
            && self.p_min < 0.5
            && self.p_max > 0.5
            && self.variance_threshold_m2 >= 0.0
            && self.k_sigma >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(MapError::InvalidArgument(format!(
                "inconsistent sensor model {self:?}"
            )))
        }
    }
}

/// One keyframe: pose plus semi-dense depth readings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiDenseFrame {
    pub pose: Pose<f64>,
    pub intrinsics: CameraIntrinsics<f64>,
    pub measurements: Vec<PixelMeasurement<f64>>,
}

impl SemiDenseFrame {
    pub fn validate(&self) -> Result<(), MapError> {
        if !self.pose.is_finite() {
            return Err(MapError::InvalidArgument("non-finite frame pose".into()));
        }
        self.intrinsics.validate()?;
        for m in &self.measurements {
            m.validate(&self.intrinsics)?;
        }
        Ok(())
    }

    /// World position of every measurement at its full depth.
    pub fn world_points(&self) -> Vec<Vector3<f64>> {
        self.measurements
            .iter()
            .filter_map(|m| backproject(&self.intrinsics, m.u, m.v, m.depth).ok())
            .map(|p| self.pose.transform_point(&p))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoxelState {
    Unknown,
    Free,
    Occupied,
}

impl VoxelState {
    pub fn as_str(&self) -> &'static str {
        match self {
            VoxelState::Unknown => "unknown",
            VoxelState::Free => "free",
            VoxelState::Occupied => "occupied",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StateCounts {
    pub free: usize,
    pub occupied: usize,
    pub unknown: usize,
    pub bbox: usize,
}

impl StateCounts {
    pub fn known(&self) -> usize {
        self.free + self.occupied
    }
}

/// Bounded voxel map of clamped occupancy log-odds.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    frame: GridFrame,
    params: SensorModelParams,
    storage: Storage,
}

impl OccupancyGrid {
    pub fn new(frame: GridFrame, params: SensorModelParams) -> Self {
        Self::with_backing(frame, params, Backing::Dense)
    }

    pub fn with_backing(frame: GridFrame, params: SensorModelParams, backing: Backing) -> Self {
        Self {
            storage: Storage::new(backing, &frame),
            frame,
            params,
        }
    }

    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn params(&self) -> &SensorModelParams {
        &self.params
    }

    pub fn backing(&self) -> Backing {
        self.storage.backing()
    }

    /// Log-odds of a voxel; 0 for never-updated voxels.
    pub fn logodds(&self, idx: VoxelIndex) -> Result<f64, MapError> {
        self.check(idx)?;
        Ok(self
            .storage
            .get(&self.frame, self.frame.linear(idx))
            .unwrap_or(0.0))
    }

    pub fn is_touched(&self, idx: VoxelIndex) -> bool {
        self.frame.contains_index(idx)
            && self
                .storage
                .get(&self.frame, self.frame.linear(idx))
                .is_some()
    }

    fn check(&self, idx: VoxelIndex) -> Result<(), MapError> {
        if self.frame.contains_index(idx) {
            Ok(())
        } else {
            Err(MapError::InvalidArgument(format!(
                "voxel {idx:?} outside grid dims {:?}",
                self.frame.dims
            )))
        }
    }

    fn classify(&self, value: Option<f64>) -> VoxelState {
        match value {
            None => VoxelState::Unknown,
            Some(l) if probability(l) > self.params.occupancy_threshold => VoxelState::Occupied,
            Some(_) => VoxelState::Free,
        }
    }

    pub fn voxel_state(&self, idx: VoxelIndex) -> Result<VoxelState, MapError> {
        self.check(idx)?;
        Ok(self.classify(self.storage.get(&self.frame, self.frame.linear(idx))))
    }

    #[inline]
    pub(crate) fn state_linear(&self, l: usize) -> VoxelState {
        self.classify(self.storage.get(&self.frame, l))
    }

    /// States of all voxels, indexed linearly.
    pub fn states(&self) -> Vec<VoxelState> {
        let mut out = vec![VoxelState::Unknown; self.frame.len()];
        for (l, v) in self.storage.touched(&self.frame) {
            out[l] = self.classify(Some(v));
        }
        out
    }

    /// Touched voxels with their log-odds, ascending by linear index.
    pub fn touched(&self) -> Vec<(VoxelIndex, f64)> {
        self.storage
            .touched(&self.frame)
            .into_iter()
            .map(|(l, v)| (self.frame.from_linear(l), v))
            .collect()
    }

    /// Adds `delta` to one voxel's log-odds and clamps.
    pub fn update(&mut self, idx: VoxelIndex, delta: f64) -> Result<(), MapError> {
        self.check(idx)?;
        self.update_linear(self.frame.linear(idx), delta);
        Ok(())
    }

    fn update_linear(&mut self, l: usize, delta: f64) {
        let cur = self.storage.get(&self.frame, l).unwrap_or(0.0);
        let next = (cur + delta).clamp(self.params.l_min(), self.params.l_max());
        self.storage.set(&self.frame, l, next);
    }

    /// Sets a voxel's log-odds directly (clamped). Used by map import.
    pub fn set_logodds(&mut self, idx: VoxelIndex, value: f64) -> Result<(), MapError> {
        self.check(idx)?;
        let v = value.clamp(self.params.l_min(), self.params.l_max());
        self.storage.set(&self.frame, self.frame.linear(idx), v);
        Ok(())
    }

    /// Ray-casts every measurement of `frame` into the map.
    pub fn integrate_frame(&mut self, frame: &SemiDenseFrame) -> Result<(), MapError> {
        frame.validate()?;
        let (hits, misses) = self.frame_updates(frame);
        let (l_hit, l_miss) = (self.params.l_hit(), self.params.l_miss());
        for l in misses {
            self.update_linear(l, l_miss);
        }
        for l in hits {
            self.update_linear(l, l_hit);
        }
        Ok(())
    }

    /// Sorted, de-duplicated hit and miss voxel sets for one frame (hits win).
    fn frame_updates(&self, frame: &SemiDenseFrame) -> (Vec<usize>, Vec<usize>) {
        let p = &self.params;
        let origin = frame.pose.position;
        let mut hits = Vec::new();
        let mut misses = Vec::new();
        for m in &frame.measurements {
            let Ok(p_cam) = backproject(&frame.intrinsics, m.u, m.v, m.depth) else {
                continue;
            };
            let (p_cam, is_hit) = if m.variance <= p.variance_threshold_m2 {
                (p_cam, true)
            } else {
                let r = (m.depth - p.k_sigma * m.variance.sqrt()).max(0.0);
                if r <= 0.0 {
                    continue;
                }
                (p_cam * (r / m.depth), false)
            };
            let end = frame.pose.transform_point(&p_cam);
            let end_voxel = self.frame.voxel_of(&end);
            raycast::for_each_voxel(&self.frame, &origin, &end, |v| {
                if Some(v) == end_voxel {
                    if is_hit {
                        hits.push(self.frame.linear(v));
                    }
                } else {
                    misses.push(self.frame.linear(v));
                }
            });
        }
        hits.sort_unstable();
        hits.dedup();
        misses.sort_unstable();
        misses.dedup();
        misses.retain(|l| hits.binary_search(l).is_err());
        (hits, misses)
    }

    pub fn count_states(&self) -> StateCounts {
        let mut c = StateCounts {
            bbox: self.frame.len(),
            ..Default::default()
        };
        for (_, v) in self.storage.touched(&self.frame) {
            match self.classify(Some(v)) {
                VoxelState::Free => c.free += 1,
                VoxelState::Occupied => c.occupied += 1,
                VoxelState::Unknown => unreachable!(),
            }
        }
        c.unknown = c.bbox - c.free - c.occupied;
        c
    }

    /// Whether every voxel crossed by the segment `a -> b` is free.
    pub fn line_of_sight(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> Result<bool, MapError> {
        for p in [a, b] {
            if !self.frame.contains_point(p) {
                return Err(MapError::InvalidArgument(format!(
                    "line-of-sight endpoint ({}, {}, {}) outside the map",
                    p.x, p.y, p.z
                )));
            }
        }
        Ok(self.los_unchecked(a, b))
    }

    pub(crate) fn los_unchecked(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        raycast::try_for_each_voxel(&self.frame, a, b, |v| {
            self.state_linear(self.frame.linear(v)) == VoxelState::Free
        })
    }
}

/// Axis-aligned bounds of camera centers and measured points of all keyframes.
pub fn keyframe_bounds(keyframes: &[SemiDenseFrame]) -> Option<(Vector3<f64>, Vector3<f64>)> {
    let mut pts = keyframes
        .iter()
        .flat_map(|f| std::iter::once(f.pose.position).chain(f.world_points()));
    let first = pts.next()?;
    Some(pts.fold((first, first), |(lo, hi), p| (lo.inf(&p), hi.sup(&p))))
}

/// Rebuilds a map from scratch by integrating `keyframes` in order into a fresh grid
/// covering their bounds plus `margin` meters.
pub fn regenerate(
    keyframes: &[SemiDenseFrame],
    params: SensorModelParams,
    resolution: f64,
    margin: f64,
    backing: Backing,
) -> Result<OccupancyGrid, MapError> {
    let (lo, hi) = keyframe_bounds(keyframes)
        .ok_or_else(|| MapError::InvalidArgument("no keyframes to regenerate from".into()))?;
    let m = Vector3::repeat(margin.max(0.0));
    let frame = GridFrame::covering(lo - m, hi + m, resolution)?;
    regenerate_in(frame, keyframes, params, backing)
}

/// Rebuilds a map on a fixed grid.
pub fn regenerate_in(
    frame: GridFrame,
    keyframes: &[SemiDenseFrame],
    params: SensorModelParams,
    backing: Backing,
) -> Result<OccupancyGrid, MapError> {
    params.validate()?;
    let mut grid = OccupancyGrid::with_backing(frame, params, backing);
    for kf in keyframes {
        grid.integrate_frame(kf)?;
    }
    Ok(grid)
}
