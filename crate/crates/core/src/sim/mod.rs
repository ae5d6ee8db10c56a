//! Synthetic box worlds, semi-dense depth rendering and flown trajectories.

mod render;
mod trajectory;
mod world;

use thiserror::Error;

pub use render::{render_dense_depth, render_semidense, DepthImage, RenderParams};
pub use trajectory::{execute_waypoints, look_around_poses, PoseNoise, Waypoint};
pub use world::{EdgeFeature, Face, Hit, Segment, SolidBox, WorldModel};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid world: {0}")]
    InvalidWorld(String),
}
