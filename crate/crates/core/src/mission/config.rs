use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::MissionError;
use crate::exploration::ExplorationParams;
use crate::geometry::CameraIntrinsics;
use crate::map::{Backing, GridFrame, SensorModelParams};
use crate::sim::{PoseNoise, RenderParams, WorldModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub resolution_m: f64,
    pub backing: Backing,
    /// Fixed map bounds; when absent the world bounds plus `bounds_margin_m` are used.
    pub bounds_min_m: Option<Vector3<f64>>,
    pub bounds_max_m: Option<Vector3<f64>>,
    pub bounds_margin_m: f64,
    pub sensor: SensorModelParams,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            resolution_m: 0.1,
            backing: Backing::Dense,
            bounds_min_m: None,
            bounds_max_m: None,
            bounds_margin_m: 0.2,
            sensor: SensorModelParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    pub start_m: Vector3<f64>,
    pub max_star_discoveries: usize,
    pub seed: u64,
    pub look_around_steps: usize,
    /// Height oscillation amplitude; defaults to 1.2 voxels so the camera visits the
    /// layers above and below the start voxel.
    pub look_around_amp_m: Option<f64>,
    /// Yaw steps per height oscillation.
    pub look_around_period_steps: usize,
    pub capture_spacing_m: f64,
    pub pose_noise: PoseNoise,
    /// Stop when a star discovery adds fewer free voxels than this fraction.
    pub min_free_growth: Option<f64>,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            start_m: Vector3::new(0.0, 0.0, 1.0),
            max_star_discoveries: 3,
            seed: 1,
            look_around_steps: 24,
            look_around_amp_m: None,
            look_around_period_steps: 3,
            capture_spacing_m: 0.25,
            pose_noise: PoseNoise::default(),
            min_free_growth: None,
        }
    }
}

/// File names written below the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub map_file: String,
    pub mesh_file: String,
    pub metrics_file: String,
    pub metrics_table_file: String,
    pub timings_file: String,
    pub log_file: String,
    pub resolved_config_file: String,
    pub waypoints_dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            map_file: "map.txt".into(),
            mesh_file: "map.obj".into(),
            metrics_file: "metrics.csv".into(),
            metrics_table_file: "metrics.txt".into(),
            timings_file: "timings.csv".into(),
            log_file: "mission_log.json".into(),
            resolved_config_file: "scenario.resolved.toml".into(),
            waypoints_dir: "waypoints".into(),
        }
    }
}

/// Complete description of a simulated mission.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub world: WorldModel,
    pub camera: CameraIntrinsics<f64>,
    pub render: RenderParams,
    pub map: MapConfig,
    pub exploration: ExplorationParams,
    pub mission: MissionConfig,
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, MissionError> {
        let cfg: Self =
            toml::from_str(s).map_err(|e| MissionError::Config(e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, MissionError> {
        let text = std::fs::read_to_string(path).map_err(|e| MissionError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            MissionError::Config(m) => MissionError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn look_around_amp(&self) -> f64 {
        self.mission
            .look_around_amp_m
            .unwrap_or(1.2 * self.map.resolution_m)
    }

    /// Grid the whole mission is mapped on.
    pub fn grid_frame(&self) -> Result<GridFrame, MissionError> {
        let (lo, hi) = match (self.map.bounds_min_m, self.map.bounds_max_m) {
            (Some(lo), Some(hi)) => (lo, hi),
            (None, None) => {
                let (lo, hi) = self
                    .world
                    .bounds()
                    .ok_or_else(|| MissionError::Config("world has no boxes".into()))?;
                let m = Vector3::repeat(self.map.bounds_margin_m);
                (lo - m, hi + m)
            }
            _ => {
                return Err(MissionError::Config(
                    "map.bounds_min_m and map.bounds_max_m must be given together".into(),
                ))
            }
        };
        if (0..3).any(|a| !(hi[a] > lo[a])) {
            return Err(MissionError::Config("map bounds are empty".into()));
        }
        GridFrame::covering(lo, hi, self.map.resolution_m)
            .map_err(|e| MissionError::Config(e.to_string()))
    }

    /// Checks every parameter before any phase runs.
    pub fn validate(&self) -> Result<(), MissionError> {
        let cfg = |e: String| MissionError::Config(e);
        self.world.validate().map_err(|e| cfg(e.to_string()))?;
        if self.world.boxes.is_empty() {
            return Err(cfg("world has no boxes".into()));
        }
        self.camera.validate().map_err(|e| cfg(e.to_string()))?;
        self.render.validate().map_err(|e| cfg(e.to_string()))?;
        self.map.sensor.validate().map_err(|e| cfg(e.to_string()))?;
        if !(self.map.resolution_m > 0.0 && self.map.bounds_margin_m >= 0.0) {
            return Err(cfg("map.resolution_m must be positive".into()));
        }
        self.exploration
            .validate()
            .map_err(|e| cfg(e.to_string()))?;
        let m = &self.mission;
        if !(m.capture_spacing_m > 0.0) {
            return Err(cfg("mission.capture_spacing_m must be positive".into()));
        }
        if m.look_around_amp_m.is_some_and(|a| !(a >= 0.0)) || m.look_around_period_steps == 0 {
            return Err(cfg("mission.look_around_amp_m and look_around_period_steps must be non-negative and positive".into()));
        }
        if m.look_around_steps < 4 {
            return Err(cfg("mission.look_around_steps must be at least 4".into()));
        }
        if !(m.pose_noise.position_sigma_m >= 0.0 && m.pose_noise.yaw_sigma_rad >= 0.0) {
            return Err(cfg("mission.pose_noise sigmas must be non-negative".into()));
        }
        let frame = self.grid_frame()?;
        if !frame.contains_point(&m.start_m) {
            return Err(cfg(format!(
                "mission.start_m {:?} outside the map",
                m.start_m.as_slice()
            )));
        }
        if self.world.near_surface(&m.start_m, self.map.resolution_m) {
            return Err(cfg(format!(
                "mission.start_m {:?} is within one voxel of a surface",
                m.start_m.as_slice()
            )));
        }
        Ok(())
    }
}
