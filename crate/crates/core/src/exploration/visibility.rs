use std::collections::{HashMap, VecDeque};

use nalgebra::Vector3;
use rayon::prelude::*;

use super::ExplorationError;
use crate::map::{OccupancyGrid, TraversabilityGrid, VoxelIndex, VoxelState};

/// Free voxels in direct line of sight of at least one origin, indexed linearly.
///
/// Sight lines run between voxel centers.
pub fn mark_visited(
    map: &OccupancyGrid,
    origins: &[Vector3<f64>],
) -> Result<Vec<bool>, ExplorationError> {
    let frame = map.frame();
    let centers: Vec<Vector3<f64>> = origins
        .iter()
        .map(|o| {
            frame.voxel_of(o).map(|v| frame.center(v)).ok_or_else(|| {
                ExplorationError::InvalidArgument(format!(
                    "origin ({:.3}, {:.3}, {:.3}) outside the map",
                    o.x, o.y, o.z
                ))
            })
        })
        .collect::<Result<_, _>>()?;
    Ok((0..frame.len())
        .into_par_iter()
        .map(|l| {
            map.state_linear(l) == VoxelState::Free && {
                let c = frame.center(frame.from_linear(l));
                centers.iter().any(|o| map.los_unchecked(o, &c))
            }
        })
        .collect())
}

/// Traversable voxels not marked visited, in ascending linear order.
pub fn interesting_voxels(trav: &TraversabilityGrid, visited: &[bool]) -> Vec<VoxelIndex> {
    let frame = trav.frame();
    assert_eq!(
        visited.len(),
        frame.len(),
        "visited mask does not match grid"
    );
    (0..frame.len())
        .filter(|&l| trav.is_traversable_linear(l) && !visited[l])
        .map(|l| frame.from_linear(l))
        .collect()
}

const NEIGHBORS6: [[i64; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

/// 6-connected components, each sorted ascending, ordered by size (largest first) and then
/// by smallest member.
pub fn connected_components(voxels: &[VoxelIndex]) -> Vec<Vec<VoxelIndex>> {
    let slot: HashMap<VoxelIndex, usize> =
        voxels.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut seen = vec![false; voxels.len()];
    let mut out = Vec::new();
    for start in 0..voxels.len() {
        if seen[start] || slot[&voxels[start]] != start {
            continue;
        }
        seen[start] = true;
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let v = voxels[i];
            comp.push(v);
            for d in NEIGHBORS6 {
                let c = v.offset(d);
                if c.iter().any(|&x| x < 0) {
                    continue;
                }
                let n = VoxelIndex::new(c[0] as usize, c[1] as usize, c[2] as usize);
                if let Some(&j) = slot.get(&n) {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    out
}

/// Bookkeeping of the global strategy after a star discovery.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationState {
    pub star_origins: Vec<Vector3<f64>>,
    pub visited: Vec<bool>,
    pub interesting: Vec<VoxelIndex>,
    pub components: Vec<Vec<VoxelIndex>>,
}

impl ExplorationState {
    pub fn compute(
        map: &OccupancyGrid,
        trav: &TraversabilityGrid,
        star_origins: Vec<Vector3<f64>>,
    ) -> Result<Self, ExplorationError> {
        let visited = mark_visited(map, &star_origins)?;
        let interesting = interesting_voxels(trav, &visited);
        let components = connected_components(&interesting);
        Ok(Self {
            star_origins,
            visited,
            interesting,
            components,
        })
    }

    pub fn visited_count(&self) -> usize {
        self.visited.iter().filter(|v| **v).count()
    }
}
