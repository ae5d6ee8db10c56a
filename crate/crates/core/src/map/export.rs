//! Text map format and OBJ mesh export.
//!
//! ```text
//! # resolution 0.1
//! # origin -1 -1 0
//! # dims 40 40 25
//! 12 3 4 -0.4054651081081644 free
//! ```
//!
//! Only touched voxels are listed, in ascending linear order.

use std::io::{BufRead, Write};

use nalgebra::Vector3;

use super::grid::{GridFrame, VoxelIndex};
use super::{MapError, OccupancyGrid, SensorModelParams, StateCounts, VoxelState};

pub fn write_map_text(map: &OccupancyGrid, mut w: impl Write) -> std::io::Result<()> {
    let f = map.frame();
    writeln!(w, "# resolution {}", f.resolution)?;
    writeln!(w, "# origin {} {} {}", f.origin.x, f.origin.y, f.origin.z)?;
    writeln!(w, "# dims {} {} {}", f.dims[0], f.dims[1], f.dims[2])?;
    for (idx, l) in map.touched() {
        let state = map.voxel_state(idx).map_err(std::io::Error::other)?;
        writeln!(w, "{} {} {} {} {}", idx.x, idx.y, idx.z, l, state.as_str())?;
    }
    Ok(())
}

/// Parsed map file.
#[derive(Debug, Clone, PartialEq)]
pub struct MapText {
    pub frame: GridFrame,
    pub voxels: Vec<(VoxelIndex, f64, VoxelState)>,
}

impl MapText {
    /// Counts from the exported state column.
    pub fn counts(&self) -> StateCounts {
        let mut c = StateCounts {
            bbox: self.frame.len(),
            ..Default::default()
        };
        for (_, _, s) in &self.voxels {
            match s {
                VoxelState::Free => c.free += 1,
                VoxelState::Occupied => c.occupied += 1,
                VoxelState::Unknown => {}
            }
        }
        c.unknown = c.bbox - c.free - c.occupied;
        c
    }

    pub fn into_grid(self, params: SensorModelParams) -> Result<OccupancyGrid, MapError> {
        let mut g = OccupancyGrid::new(self.frame, params);
        for (idx, l, _) in self.voxels {
            g.set_logodds(idx, l)?;
        }
        Ok(g)
    }
}

pub fn read_map_text(r: impl BufRead) -> Result<MapText, MapError> {
    let mut resolution = None;
    let mut origin = None;
    let mut dims = None;
    let mut voxels = Vec::new();
    let perr = |line: usize, msg: &str| MapError::Parse {
        line,
        msg: msg.to_string(),
    };
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let ln = i + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks[0] == "#" {
            let nums = |n: usize| -> Result<Vec<f64>, MapError> {
                let v: Result<Vec<f64>, _> = toks[2..].iter().map(|s| s.parse::<f64>()).collect();
                let v = v.map_err(|_| perr(ln, "bad number in header"))?;
                if v.len() != n {
                    return Err(perr(ln, "wrong header arity"));
                }
                Ok(v)
            };
            match toks.get(1).copied() {
                Some("resolution") => resolution = Some(nums(1)?[0]),
                Some("origin") => origin = Some(Vector3::from_vec(nums(3)?)),
                Some("dims") => {
                    let v = nums(3)?;
                    dims = Some([v[0] as usize, v[1] as usize, v[2] as usize]);
                }
                _ => {}
            }
            continue;
        }
        if toks.len() != 5 {
            return Err(perr(ln, "expected `i j k logodds state`"));
        }
        let ix: Result<Vec<usize>, _> = toks[..3].iter().map(|s| s.parse::<usize>()).collect();
        let ix = ix.map_err(|_| perr(ln, "bad voxel index"))?;
        let l: f64 = toks[3].parse().map_err(|_| perr(ln, "bad log-odds"))?;
        let s = match toks[4] {
            "free" => VoxelState::Free,
            "occupied" => VoxelState::Occupied,
            "unknown" => VoxelState::Unknown,
            _ => return Err(perr(ln, "bad state")),
        };
        voxels.push((VoxelIndex::new(ix[0], ix[1], ix[2]), l, s));
    }
    let frame = GridFrame::new(
        origin.ok_or_else(|| perr(0, "missing origin header"))?,
        resolution.ok_or_else(|| perr(0, "missing resolution header"))?,
        dims.ok_or_else(|| perr(0, "missing dims header"))?,
    )?;
    if let Some((v, _, _)) = voxels.iter().find(|(v, _, _)| !frame.contains_index(*v)) {
        return Err(perr(0, &format!("voxel {v:?} outside dims")));
    }
    Ok(MapText { frame, voxels })
}

/// Wavefront OBJ of the exposed faces of occupied voxels.
pub fn write_occupied_mesh_obj(map: &OccupancyGrid, mut w: impl Write) -> std::io::Result<()> {
    let f = map.frame();
    let states = map.states();
    let occupied = |c: [i64; 3]| {
        f.checked_index(c)
            .is_some_and(|v| states[f.linear(v)] == VoxelState::Occupied)
    };
    // (neighbor offset, quad corners as unit-cube offsets, counter-clockwise seen from outside)
    const FACES: [([i64; 3], [[u8; 3]; 4]); 6] = [
        ([-1, 0, 0], [[0, 0, 0], [0, 0, 1], [0, 1, 1], [0, 1, 0]]),
        ([1, 0, 0], [[1, 0, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1]]),
        ([0, -1, 0], [[0, 0, 0], [1, 0, 0], [1, 0, 1], [0, 0, 1]]),
        ([0, 1, 0], [[0, 1, 0], [0, 1, 1], [1, 1, 1], [1, 1, 0]]),
        ([0, 0, -1], [[0, 0, 0], [0, 1, 0], [1, 1, 0], [1, 0, 0]]),
        ([0, 0, 1], [[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]),
    ];
    writeln!(w, "# occupied voxel surface")?;
    let mut n_vertices = 0usize;
    for (l, s) in states.iter().enumerate() {
        if *s != VoxelState::Occupied {
            continue;
        }
        let v = f.from_linear(l);
        for (d, quad) in FACES {
            if occupied(v.offset(d)) {
                continue;
            }
            for c in quad {
                let p = f.origin
                    + Vector3::new(
                        (v.x + c[0] as usize) as f64,
                        (v.y + c[1] as usize) as f64,
                        (v.z + c[2] as usize) as f64,
                    ) * f.resolution;
                writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
            }
            writeln!(
                w,
                "f {} {} {} {}",
                n_vertices + 1,
                n_vertices + 2,
                n_vertices + 3,
                n_vertices + 4
            )?;
            n_vertices += 4;
        }
    }
    Ok(())
}
