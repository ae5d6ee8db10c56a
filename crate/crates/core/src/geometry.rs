//! Pinhole camera model, rigid poses and point transforms.
//!
//! Camera frame: right handed, `z` along the optical axis, `x` right, `y` down.
//! World frame: `z` up.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("pixel ({u}, {v}) outside the {width}x{height} image")]
    PixelOutOfBounds {
        u: f64,
        v: f64,
        width: u32,
        height: u32,
    },
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid pixel measurement: {0}")]
    InvalidMeasurement(String),
}

/// Rigid transform world <- body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct Pose<T: Real> {
    pub position: Vector3<T>,
    pub orientation: UnitQuaternion<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(position: Vector3<T>, orientation: UnitQuaternion<T>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_translation(position: Vector3<T>) -> Self {
        Self::new(position, UnitQuaternion::identity())
    }

    /// Pure rotation about world `z` by `yaw` radians, followed by a translation.
    pub fn from_yaw(position: Vector3<T>, yaw: T) -> Self {
        Self::new(
            position,
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        )
    }

    /// Camera pose with a horizontal optical axis pointing at azimuth `yaw`
    /// (radians from world `+x` towards `+y`) and image `y` pointing down.
    pub fn camera_looking(position: Vector3<T>, yaw: T) -> Self {
        let (s, c) = yaw.sin_cos();
        let zero = T::zero();
        let one = T::one();
        // columns: camera x (right), camera y (down), camera z (forward), in world coordinates
        let r = Matrix3::new(s, zero, c, -c, zero, s, zero, -one, zero);
        let rot = Rotation3::from_matrix_unchecked(r);
        Self::new(position, UnitQuaternion::from_rotation_matrix(&rot))
    }

    /// Azimuth of the optical axis for a camera pose (see [`Pose::camera_looking`]).
    pub fn camera_yaw(&self) -> T {
        let fwd = self.orientation * Vector3::z();
        fwd.y.atan2(fwd.x)
    }

    /// `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(
            self.orientation * other.position + self.position,
            self.orientation * other.orientation,
        )
    }

    pub fn inverse(&self) -> Self {
        let inv = self.orientation.inverse();
        Self::new(-(inv * self.position), inv)
    }

    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.orientation * p + self.position
    }

    pub fn inverse_transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.orientation.inverse() * (p - self.position)
    }

    pub fn is_finite(&self) -> bool {
        let q = self.orientation.quaternion();
        self.position
            .iter()
            .chain(q.coords.iter())
            .all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Pose<U> {
        let q = self.orientation.quaternion();
        let conv = |v: T| U::lit(v.to_f64_lossy());
        Pose::new(
            self.position.map(conv),
            UnitQuaternion::new_normalize(nalgebra::Quaternion::new(
                conv(q.w),
                conv(q.i),
                conv(q.j),
                conv(q.k),
            )),
        )
    }
}

/// `p_world = R * p_cam + t`.
pub fn transform_point<T: Real>(pose: &Pose<T>, p_cam: &Vector3<T>) -> Vector3<T> {
    pose.transform_point(p_cam)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound = "T: Real + Serialize + for<'a> Deserialize<'a>"
)]
pub struct CameraIntrinsics<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: u32,
    pub height: u32,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: u32, height: u32) -> Result<Self, GeometryError> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let w = T::lit(self.width as f64);
        let h = T::lit(self.height as f64);
        if !(self.fx > T::zero() && self.fy > T::zero()) {
            return Err(GeometryError::InvalidIntrinsics(
                "focal lengths must be positive".into(),
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::InvalidIntrinsics("empty image".into()));
        }
        if !(self.cx >= T::zero() && self.cx < w && self.cy >= T::zero() && self.cy < h) {
            return Err(GeometryError::InvalidIntrinsics(
                "principal point outside the image".into(),
            ));
        }
        Ok(())
    }

    /// Horizontal field of view in radians.
    pub fn horizontal_fov(&self) -> T {
        let w = T::lit(self.width as f64);
        (self.cx / self.fx).atan() + ((w - self.cx) / self.fx).atan()
    }

    fn contains_continuous(&self, u: T, v: T) -> bool {
        u >= T::zero()
            && v >= T::zero()
            && u <= T::lit(self.width as f64)
            && v <= T::lit(self.height as f64)
    }

    pub fn cast<U: Real>(&self) -> CameraIntrinsics<U> {
        let conv = |v: T| U::lit(v.to_f64_lossy());
        CameraIntrinsics {
            fx: conv(self.fx),
            fy: conv(self.fy),
            cx: conv(self.cx),
            cy: conv(self.cy),
            width: self.width,
            height: self.height,
        }
    }
}

impl<T: Real> Default for CameraIntrinsics<T> {
    /// 640x480 pinhole with `fx = fy = 537` px (about 62 deg horizontal field of view).
    fn default() -> Self {
        Self {
            fx: T::lit(537.0),
            fy: T::lit(537.0),
            cx: T::lit(320.0),
            cy: T::lit(240.0),
            width: 640,
            height: 480,
        }
    }
}

/// One semi-dense depth reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct PixelMeasurement<T: Real> {
    pub u: T,
    pub v: T,
    /// Meters along the optical axis.
    pub depth: T,
    /// Depth variance in m^2.
    pub variance: T,
}

impl<T: Real> PixelMeasurement<T> {
    pub fn new(
        intr: &CameraIntrinsics<T>,
        u: T,
        v: T,
        depth: T,
        variance: T,
    ) -> Result<Self, GeometryError> {
        let m = Self {
            u,
            v,
            depth,
            variance,
        };
        m.validate(intr)?;
        Ok(m)
    }

    pub fn validate(&self, intr: &CameraIntrinsics<T>) -> Result<(), GeometryError> {
        let w = T::lit(intr.width as f64);
        let h = T::lit(intr.height as f64);
        if !(self.u >= T::zero() && self.u < w && self.v >= T::zero() && self.v < h) {
            return Err(GeometryError::PixelOutOfBounds {
                u: self.u.to_f64_lossy(),
                v: self.v.to_f64_lossy(),
                width: intr.width,
                height: intr.height,
            });
        }
        if !(self.depth > T::zero()) {
            return Err(GeometryError::NonPositiveDepth(self.depth.to_f64_lossy()));
        }
        if !(self.variance >= T::zero()) {
            return Err(GeometryError::InvalidMeasurement(format!(
                "variance must be non-negative, got {}",
                self.variance.to_f64_lossy()
            )));
        }
        Ok(())
    }
}

/// Lifts pixel `(u, v)` at depth `d` into the camera frame.
///
/// Pixel coordinates are continuous; the closed range `[0, width] x [0, height]` is accepted.
/// The returned point has `z == d` exactly.
pub fn backproject<T: Real>(
    intr: &CameraIntrinsics<T>,
    u: T,
    v: T,
    d: T,
) -> Result<Vector3<T>, GeometryError> {
    if !intr.contains_continuous(u, v) {
        return Err(GeometryError::PixelOutOfBounds {
            u: u.to_f64_lossy(),
            v: v.to_f64_lossy(),
            width: intr.width,
            height: intr.height,
        });
    }
    if !(d > T::zero()) {
        return Err(GeometryError::NonPositiveDepth(d.to_f64_lossy()));
    }
    Ok(Vector3::new(
        d * (u - intr.cx) / intr.fx,
        d * (v - intr.cy) / intr.fy,
        d,
    ))
}

/// Image coordinates plus depth of a point in front of the camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint<T> {
    pub u: T,
    pub v: T,
    pub depth: T,
}

/// Projects a camera-frame point; `None` when the point is on or behind the image plane.
///
/// The result may fall outside the image.
pub fn project<T: Real>(intr: &CameraIntrinsics<T>, p_cam: &Vector3<T>) -> Option<ImagePoint<T>> {
    if !(p_cam.z > T::zero()) {
        return None;
    }
    Some(ImagePoint {
        u: intr.fx * p_cam.x / p_cam.z + intr.cx,
        v: intr.fy * p_cam.y / p_cam.z + intr.cy,
        depth: p_cam.z,
    })
}
