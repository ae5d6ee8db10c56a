//! Depth rendering of the box world.
//!
//! The semi-dense renderer keeps a pixel only if the surface point it sees lies, in the
//! image, within `edge_pixel_radius` of a projected edge feature of the face it hit, or if
//! that face is textured. Blank surfaces therefore produce no depth at all.

use nalgebra::{Vector2, Vector3};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::world::{Hit, Segment, WorldModel};
use crate::geometry::{project, CameraIntrinsics, PixelMeasurement, Pose};
use crate::map::SemiDenseFrame;
use crate::rng;

const NEAR: f64 = 1e-3;
const MIN_RANGE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderParams {
    pub edge_pixel_radius_px: f64,
    pub pixel_stride_px: u32,
    /// Depth noise standard deviation per meter of depth.
    pub depth_noise_sigma0: f64,
    /// Reported variance is `(depth_noise_sigma0 * d)^2 * variance_coeff`.
    pub variance_coeff: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            edge_pixel_radius_px: 1.5,
            pixel_stride_px: 4,
            depth_noise_sigma0: 0.02,
            variance_coeff: 1.0,
        }
    }
}

impl RenderParams {
    pub fn validate(&self) -> Result<(), super::SimError> {
        if self.edge_pixel_radius_px >= 0.0
            && self.pixel_stride_px >= 1
            && self.depth_noise_sigma0 >= 0.0
            && self.variance_coeff >= 0.0
        {
            Ok(())
        } else {
            Err(super::SimError::InvalidWorld(format!(
                "invalid render parameters {self:?}"
            )))
        }
    }
}

/// Depth along the optical axis at a subsampled pixel lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub stride: u32,
    pub cols: usize,
    pub rows: usize,
    /// Row-major, `None` where the ray escapes the world.
    pub depth: Vec<Option<f64>>,
}

impl DepthImage {
    /// Depth at pixel `(u, v)` if it is on the sampling lattice.
    pub fn at_pixel(&self, u: u32, v: u32) -> Option<f64> {
        if !u.is_multiple_of(self.stride) || !v.is_multiple_of(self.stride) {
            return None;
        }
        let (c, r) = ((u / self.stride) as usize, (v / self.stride) as usize);
        (c < self.cols && r < self.rows)
            .then(|| self.depth[r * self.cols + c])
            .flatten()
    }
}

fn lattice(intr: &CameraIntrinsics<f64>, stride: u32) -> (usize, usize) {
    let stride = stride.max(1);
    (
        intr.width.div_ceil(stride) as usize,
        intr.height.div_ceil(stride) as usize,
    )
}

/// World-frame ray through pixel `(u, v)` scaled so that `t` equals optical-axis depth.
fn pixel_ray(pose: &Pose<f64>, intr: &CameraIntrinsics<f64>, u: f64, v: f64) -> Vector3<f64> {
    pose.orientation * Vector3::new((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0)
}

fn cast(
    world: &WorldModel,
    pose: &Pose<f64>,
    intr: &CameraIntrinsics<f64>,
    u: f64,
    v: f64,
) -> Option<Hit> {
    world.raycast(&pose.position, &pixel_ray(pose, intr, u, v), MIN_RANGE)
}

pub fn render_dense_depth(
    world: &WorldModel,
    pose: &Pose<f64>,
    intr: &CameraIntrinsics<f64>,
    stride: u32,
) -> DepthImage {
    let stride = stride.max(1);
    let (cols, rows) = lattice(intr, stride);
    let mut depth = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            let (u, v) = ((c as u32 * stride) as f64, (r as u32 * stride) as f64);
            depth.push(cast(world, pose, intr, u, v).map(|h| h.t));
        }
    }
    DepthImage {
        stride,
        cols,
        rows,
        depth,
    }
}

/// Image-space segment, or `None` if entirely behind the camera.
fn project_segment(
    seg: &Segment,
    pose: &Pose<f64>,
    intr: &CameraIntrinsics<f64>,
) -> Option<(Vector2<f64>, Vector2<f64>)> {
    let mut a = pose.inverse_transform_point(&seg.a);
    let mut b = pose.inverse_transform_point(&seg.b);
    if a.z < NEAR && b.z < NEAR {
        return None;
    }
    if a.z < NEAR {
        a = b + (a - b) * ((b.z - NEAR) / (b.z - a.z));
    } else if b.z < NEAR {
        b = a + (b - a) * ((a.z - NEAR) / (a.z - b.z));
    }
    let pa = project(intr, &a)?;
    let pb = project(intr, &b)?;
    Some((Vector2::new(pa.u, pa.v), Vector2::new(pb.u, pb.v)))
}

pub(crate) fn point_segment_distance(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

type Edge2 = (Vector2<f64>, Vector2<f64>);

/// Semi-dense depth frame: noisy depth at textured pixels and near projected edges.
///
/// Pixels are visited row-major on the stride lattice; one Gaussian draw is made per
/// selected pixel from the stream seeded with `seed`.
pub fn render_semidense(
    world: &WorldModel,
    pose: &Pose<f64>,
    intr: &CameraIntrinsics<f64>,
    params: &RenderParams,
    seed: u64,
) -> SemiDenseFrame {
    let stride = params.pixel_stride_px.max(1);
    let (cols, rows) = lattice(intr, stride);
    // projected edges per (box, face), computed on first use
    let mut edge_cache: Vec<[Option<Vec<Edge2>>; 6]> = vec![Default::default(); world.boxes.len()];
    let mut r = rng::seeded(seed);
    let mut measurements = Vec::new();
    for row in 0..rows {
        for col in 0..cols {
            let (u, v) = ((col as u32 * stride) as f64, (row as u32 * stride) as f64);
            let Some(hit) = cast(world, pose, intr, u, v) else {
                continue;
            };
            let solid = &world.boxes[hit.box_index];
            let selected = solid.is_textured(hit.face) || {
                let edges = edge_cache[hit.box_index][hit.face as usize].get_or_insert_with(|| {
                    solid
                        .face_edges(hit.face)
                        .iter()
                        .filter_map(|s| project_segment(s, pose, intr))
                        .collect()
                });
                let p = Vector2::new(u, v);
                edges
                    .iter()
                    .any(|(a, b)| point_segment_distance(&p, a, b) <= params.edge_pixel_radius_px)
            };
            if !selected {
                continue;
            }
            let d = hit.t;
            let sigma = params.depth_noise_sigma0 * d;
            let noisy = if sigma > 0.0 {
                let n = Normal::new(0.0, sigma).expect("finite sigma");
                d + n.sample(&mut r)
            } else {
                d
            };
            if !(noisy > 0.0) || u >= intr.width as f64 || v >= intr.height as f64 {
                continue;
            }
            measurements.push(PixelMeasurement {
                u,
                v,
                depth: noisy,
                variance: sigma * sigma * params.variance_coeff,
            });
        }
    }
    SemiDenseFrame {
        pose: *pose,
        intrinsics: *intr,
        measurements,
    }
}
