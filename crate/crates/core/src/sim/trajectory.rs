use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::rng;

/// Commanded position and camera heading (azimuth of the optical axis, radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: Vector3<f64>,
    pub heading: f64,
}

impl Waypoint {
    pub fn new(position: Vector3<f64>, heading: f64) -> Self {
        Self { position, heading }
    }
}

/// Tracking error added to every flown pose.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseNoise {
    pub position_sigma_m: f64,
    pub yaw_sigma_rad: f64,
}

impl PoseNoise {
    pub fn is_zero(&self) -> bool {
        self.position_sigma_m == 0.0 && self.yaw_sigma_rad == 0.0
    }
}

/// Full turn on the spot with a sinusoidal height oscillation.
///
/// Pose `k` sits at `center + (0, 0, amp sin(2 pi k / period))` looking at yaw `2 pi k / n`.
/// A short period makes every height see all azimuths.
pub fn look_around_poses(
    center: Vector3<f64>,
    n_steps: usize,
    vertical_amp: f64,
    period_steps: usize,
) -> Vec<Pose<f64>> {
    let n = n_steps.max(4);
    let period = period_steps.max(1) as f64;
    (0..n)
        .map(|k| {
            let yaw = TAU * k as f64 / n as f64;
            let dz = vertical_amp * (TAU * k as f64 / period).sin();
            Pose::camera_looking(center + Vector3::new(0.0, 0.0, dz), yaw)
        })
        .collect()
}

/// Camera poses captured along straight legs between consecutive waypoints.
///
/// Each leg is split into equal steps no longer than `capture_spacing` and flown with the
/// heading of the leg's target waypoint; both leg ends are captured.
pub fn execute_waypoints(
    waypoints: &[Waypoint],
    capture_spacing: f64,
    noise: &PoseNoise,
    seed: u64,
) -> Vec<Pose<f64>> {
    let mut commanded: Vec<(Vector3<f64>, f64)> = Vec::new();
    let mut push = |p: Vector3<f64>, h: f64| {
        if let Some((lp, lh)) = commanded.last() {
            if (lp - p).norm() < 1e-12 && (lh - h).abs() < 1e-12 {
                return;
            }
        }
        commanded.push((p, h));
    };
    match waypoints {
        [] => {}
        [only] => push(only.position, only.heading),
        _ => {
            for leg in waypoints.windows(2) {
                let (from, to) = (leg[0].position, leg[1].position);
                let heading = leg[1].heading;
                let len = (to - from).norm();
                let steps = if capture_spacing > 0.0 {
                    ((len / capture_spacing) - 1e-9).ceil().max(1.0) as usize
                } else {
                    1
                };
                for k in 0..=steps {
                    let t = k as f64 / steps as f64;
                    push(from + (to - from) * t, heading);
                }
            }
        }
    }

    if noise.is_zero() {
        return commanded
            .into_iter()
            .map(|(p, h)| Pose::camera_looking(p, h))
            .collect();
    }
    let mut r = rng::seeded(seed);
    let pos_n = Normal::new(0.0, noise.position_sigma_m.max(0.0)).expect("finite sigma");
    let yaw_n = Normal::new(0.0, noise.yaw_sigma_rad.max(0.0)).expect("finite sigma");
    commanded
        .into_iter()
        .map(|(p, h)| {
            let dp = Vector3::new(
                pos_n.sample(&mut r),
                pos_n.sample(&mut r),
                pos_n.sample(&mut r),
            );
            Pose::camera_looking(p + dp, h + yaw_n.sample(&mut r))
        })
        .collect()
}
