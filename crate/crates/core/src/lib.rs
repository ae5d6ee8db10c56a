//! Semi-dense occupancy mapping and star-discovery exploration for a simulated MAV.
//!
//! * [`geometry`], [`eigen`], [`motion`]: camera model and the motion-direction analysis,
//!   generic over `f32`/`f64`.
//! * [`map`]: log-odds voxel map, ray integration, inflation, line of sight, exports.
//! * [`sim`]: box worlds, semi-dense depth rendering, trajectories.
//! * [`exploration`]: star discovery, visited/interesting voxels, next origin, paths.
//! * [`mission`]: the closed loop, scenario files, metrics and logs.

pub mod eigen;
pub mod exploration;
pub mod geometry;
pub mod map;
pub mod mission;
pub mod motion;
pub mod rng;
pub mod scalar;
pub mod sim;

pub use geometry::{backproject, project, CameraIntrinsics, GeometryError, PixelMeasurement, Pose};
pub use map::{OccupancyGrid, SemiDenseFrame, SensorModelParams, TraversabilityGrid, VoxelState};
pub use motion::{monte_carlo_summary, optimal_direction, DirectionAnalysis, McConfig, McSummary};
pub use scalar::Real;

pub type Pose64 = Pose<f64>;
pub type Pose32 = Pose<f32>;
pub type CameraIntrinsics64 = CameraIntrinsics<f64>;
pub type CameraIntrinsics32 = CameraIntrinsics<f32>;
pub type PixelMeasurement64 = PixelMeasurement<f64>;
pub type PixelMeasurement32 = PixelMeasurement<f32>;
pub type DirectionAnalysis64 = DirectionAnalysis<f64>;
pub type DirectionAnalysis32 = DirectionAnalysis<f32>;
pub type SymmetricEigen64 = eigen::SymmetricEigen3<f64>;
pub type SymmetricEigen32 = eigen::SymmetricEigen3<f32>;
