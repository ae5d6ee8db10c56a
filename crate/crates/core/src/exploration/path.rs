use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::Vector3;

use crate::map::{raycast, TraversabilityGrid};

const NEIGHBORS6: [[i64; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

/// Whether the straight segment stays inside traversable voxels.
pub fn segment_traversable(trav: &TraversabilityGrid, a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
    trav.is_point_traversable(a)
        && trav.is_point_traversable(b)
        && raycast::try_for_each_voxel(trav.frame(), a, b, |v| trav.is_traversable(v))
}

/// Length of a polyline.
pub fn path_length(points: &[Vector3<f64>]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Shortest 6-connected voxel route (A*), shortcut greedily into straight traversable
/// segments. Starts at `from` and ends at `to`; `None` when either is blocked or they are
/// not connected.
pub fn plan_path(
    trav: &TraversabilityGrid,
    from: &Vector3<f64>,
    to: &Vector3<f64>,
) -> Option<Vec<Vector3<f64>>> {
    let chain = voxel_route(trav, from, to)?;
    Some(shortcut(trav, &chain))
}

/// Centers of the A* voxel route with the exact endpoints substituted at both ends.
pub fn voxel_route(
    trav: &TraversabilityGrid,
    from: &Vector3<f64>,
    to: &Vector3<f64>,
) -> Option<Vec<Vector3<f64>>> {
    let frame = trav.frame();
    let s = frame.voxel_of(from).filter(|v| trav.is_traversable(*v))?;
    let g = frame.voxel_of(to).filter(|v| trav.is_traversable(*v))?;
    let (sl, gl) = (frame.linear(s), frame.linear(g));
    let h = |l: usize| {
        let v = frame.from_linear(l);
        let d = Vector3::new(
            v.x as f64 - g.x as f64,
            v.y as f64 - g.y as f64,
            v.z as f64 - g.z as f64,
        );
        d.norm()
    };
    let mut cost = vec![u32::MAX; frame.len()];
    let mut parent = vec![usize::MAX; frame.len()];
    // f scores are non-negative, so their bit patterns order like the values
    let mut open = BinaryHeap::new();
    cost[sl] = 0;
    open.push(Reverse((h(sl).to_bits(), 0u32, sl)));
    while let Some(Reverse((_, gc, l))) = open.pop() {
        if gc > cost[l] {
            continue;
        }
        if l == gl {
            break;
        }
        let v = frame.from_linear(l);
        for d in NEIGHBORS6 {
            let Some(n) = frame.checked_index(v.offset(d)) else {
                continue;
            };
            let nl = frame.linear(n);
            if !trav.is_traversable_linear(nl) {
                continue;
            }
            let nc = gc + 1;
            if nc < cost[nl] {
                cost[nl] = nc;
                parent[nl] = l;
                open.push(Reverse(((nc as f64 + h(nl)).to_bits(), nc, nl)));
            }
        }
    }
    if cost[gl] == u32::MAX {
        return None;
    }
    let mut rev = vec![gl];
    while *rev.last().unwrap() != sl {
        rev.push(parent[*rev.last().unwrap()]);
    }
    let mut pts: Vec<Vector3<f64>> = rev
        .iter()
        .rev()
        .map(|&l| frame.center(frame.from_linear(l)))
        .collect();
    if pts.len() == 1 {
        return Some(vec![*from, *to]);
    }
    pts[0] = *from;
    *pts.last_mut().unwrap() = *to;
    Some(pts)
}

fn shortcut(trav: &TraversabilityGrid, chain: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let mut out = vec![chain[0]];
    let mut i = 0;
    while i + 1 < chain.len() {
        let j = (i + 2..chain.len())
            .rev()
            .find(|&j| segment_traversable(trav, &chain[i], &chain[j]))
            .unwrap_or(i + 1);
        out.push(chain[j]);
        i = j;
    }
    out
}
