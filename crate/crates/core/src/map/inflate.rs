use nalgebra::Vector3;

use super::grid::{GridFrame, VoxelIndex};
use super::{OccupancyGrid, VoxelState};

/// Free space shrunk by the vehicle extent.
///
/// A voxel is blocked if any voxel within `hor` (x and y) and `ver` (z) of it is occupied,
/// unknown, or outside the map.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversabilityGrid {
    frame: GridFrame,
    hor: usize,
    ver: usize,
    blocked: Vec<bool>,
}

impl TraversabilityGrid {
    pub fn frame(&self) -> &GridFrame {
        &self.frame
    }

    pub fn radii(&self) -> (usize, usize) {
        (self.hor, self.ver)
    }

    pub fn is_traversable(&self, idx: VoxelIndex) -> bool {
        self.frame.contains_index(idx) && !self.blocked[self.frame.linear(idx)]
    }

    #[inline]
    pub fn is_traversable_linear(&self, l: usize) -> bool {
        !self.blocked[l]
    }

    pub fn is_point_traversable(&self, p: &Vector3<f64>) -> bool {
        self.frame
            .voxel_of(p)
            .is_some_and(|v| self.is_traversable(v))
    }

    pub fn traversable_count(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn traversable(&self) -> impl Iterator<Item = VoxelIndex> + '_ {
        self.blocked
            .iter()
            .enumerate()
            .filter(|(_, b)| !**b)
            .map(|(l, _)| self.frame.from_linear(l))
    }

    /// Builds a grid directly from a blocked mask (linear indexing of `frame`).
    pub fn from_blocked(frame: GridFrame, hor: usize, ver: usize, blocked: Vec<bool>) -> Self {
        assert_eq!(blocked.len(), frame.len());
        Self {
            frame,
            hor,
            ver,
            blocked,
        }
    }
}

/// Dilates every non-free voxel by a `(2 hor + 1) x (2 hor + 1) x (2 ver + 1)` box.
pub fn inflate(map: &OccupancyGrid, hor: usize, ver: usize) -> TraversabilityGrid {
    let frame = *map.frame();
    let seed: Vec<bool> = map
        .states()
        .into_iter()
        .map(|s| s != VoxelState::Free)
        .collect();
    let mut blocked = seed;
    for (axis, radius) in [(0, hor), (1, hor), (2, ver)] {
        blocked = dilate_axis(&frame, &blocked, axis, radius);
    }
    TraversabilityGrid {
        frame,
        hor,
        ver,
        blocked,
    }
}

/// 1-D dilation along `axis`; cells beyond the grid count as blocked.
fn dilate_axis(frame: &GridFrame, src: &[bool], axis: usize, radius: usize) -> Vec<bool> {
    if radius == 0 {
        return src.to_vec();
    }
    let dims = frame.dims;
    let n = dims[axis];
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let mut out = vec![false; src.len()];
    let mut prefix = vec![0usize; n + 1];
    for l0 in 0..src.len() {
        // first cell of each line along `axis`
        if (l0 / stride) % n != 0 {
            continue;
        }
        for i in 0..n {
            prefix[i + 1] = prefix[i] + src[l0 + i * stride] as usize;
        }
        for i in 0..n {
            let near_edge = i < radius || i + radius >= n;
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            out[l0 + i * stride] = near_edge || prefix[hi + 1] > prefix[lo];
        }
    }
    out
}
