use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::MapError;

/// Integer voxel coordinates. Ordering is lexicographic on `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VoxelIndex {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl VoxelIndex {
    pub const fn new(x: usize, y: usize, z: usize) -> Self {
        Self { x, y, z }
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.x, self.y, self.z]
    }

    pub fn offset(&self, d: [i64; 3]) -> [i64; 3] {
        [
            self.x as i64 + d[0],
            self.y as i64 + d[1],
            self.z as i64 + d[2],
        ]
    }
}

impl From<[usize; 3]> for VoxelIndex {
    fn from(a: [usize; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Placement of a bounded voxel lattice in the world.
///
/// Voxel `(i, j, k)` spans `[origin + res * (i, j, k), origin + res * (i + 1, j + 1, k + 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridFrame {
    pub origin: Vector3<f64>,
    pub resolution: f64,
    pub dims: [usize; 3],
}

impl GridFrame {
    pub fn new(origin: Vector3<f64>, resolution: f64, dims: [usize; 3]) -> Result<Self, MapError> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(MapError::InvalidArgument(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if dims.contains(&0) {
            return Err(MapError::InvalidArgument(format!(
                "empty grid dims {dims:?}"
            )));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(MapError::InvalidArgument("non-finite grid origin".into()));
        }
        Ok(Self {
            origin,
            resolution,
            dims,
        })
    }

    /// Smallest grid aligned to multiples of `resolution` that contains `[min, max]`.
    pub fn covering(
        min: Vector3<f64>,
        max: Vector3<f64>,
        resolution: f64,
    ) -> Result<Self, MapError> {
        if !(resolution > 0.0) {
            return Err(MapError::InvalidArgument(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        let lo = min.map(|v| (v / resolution).floor());
        let hi = max.map(|v| (v / resolution).floor() + 1.0);
        let dims = [0, 1, 2].map(|a| ((hi[a] - lo[a]).round() as i64).max(1) as usize);
        Self::new(lo * resolution, resolution, dims)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn linear(&self, idx: VoxelIndex) -> usize {
        idx.x + self.dims[0] * (idx.y + self.dims[1] * idx.z)
    }

    #[inline]
    pub fn from_linear(&self, l: usize) -> VoxelIndex {
        let x = l % self.dims[0];
        let r = l / self.dims[0];
        VoxelIndex::new(x, r % self.dims[1], r / self.dims[1])
    }

    #[inline]
    pub fn contains_index(&self, idx: VoxelIndex) -> bool {
        idx.x < self.dims[0] && idx.y < self.dims[1] && idx.z < self.dims[2]
    }

    #[inline]
    pub fn checked_index(&self, c: [i64; 3]) -> Option<VoxelIndex> {
        (c.iter().all(|&v| v >= 0)
            && (c[0] as usize) < self.dims[0]
            && (c[1] as usize) < self.dims[1]
            && (c[2] as usize) < self.dims[2])
            .then(|| VoxelIndex::new(c[0] as usize, c[1] as usize, c[2] as usize))
    }

    /// Continuous lattice coordinates of a world point (voxel `i` spans `[i, i + 1)`).
    #[inline]
    pub fn to_cell_coords(&self, p: &Vector3<f64>) -> Vector3<f64> {
        (p - self.origin) / self.resolution
    }

    pub fn cell_of(&self, p: &Vector3<f64>) -> [i64; 3] {
        let c = self.to_cell_coords(p);
        [c.x.floor() as i64, c.y.floor() as i64, c.z.floor() as i64]
    }

    pub fn voxel_of(&self, p: &Vector3<f64>) -> Option<VoxelIndex> {
        self.checked_index(self.cell_of(p))
    }

    pub fn contains_point(&self, p: &Vector3<f64>) -> bool {
        self.voxel_of(p).is_some()
    }

    pub fn center(&self, idx: VoxelIndex) -> Vector3<f64> {
        self.origin
            + Vector3::new(idx.x as f64 + 0.5, idx.y as f64 + 0.5, idx.z as f64 + 0.5)
                * self.resolution
    }

    pub fn max_corner(&self) -> Vector3<f64> {
        self.origin
            + Vector3::new(
                self.dims[0] as f64,
                self.dims[1] as f64,
                self.dims[2] as f64,
            ) * self.resolution
    }

    pub fn indices(&self) -> impl Iterator<Item = VoxelIndex> + '_ {
        (0..self.len()).map(move |l| self.from_linear(l))
    }
}
