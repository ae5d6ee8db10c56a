use std::time::Instant;

use log::{debug, info};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{MissionError, ScenarioConfig};
use crate::exploration::{
    self, heights_around, plan_path, plan_star_discovery, select_next_origin, ExplorationState,
    StarPlan,
};
use crate::geometry::Pose;
use crate::map::{
    inflate, regenerate_in, GridFrame, OccupancyGrid, SemiDenseFrame, TraversabilityGrid,
};
use crate::rng::derive_seed;
use crate::sim::{execute_waypoints, look_around_poses, render_semidense, Waypoint};

const POSE_NOISE_STREAM: u64 = 1 << 32;
const SELECTION_STREAM: u64 = 2 << 32;

pub const STATUS_COMPLETE_OR_BLOCKED: &str = "exploration-complete-or-blocked";
pub const STATUS_MAX_DISCOVERIES: &str = "max-star-discoveries";
pub const STATUS_LOW_GROWTH: &str = "free-growth-below-threshold";

/// Wall-clock and voxel counters of the map snapshot closing a phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionMetrics {
    pub phase: String,
    pub map_build_s: f64,
    pub inflation_s: f64,
    pub mark_in_sight_s: f64,
    pub path_s: f64,
    pub bbox: usize,
    pub free: usize,
    pub occupied: usize,
    /// `None` when no voxel is known.
    pub free_div_known: Option<f64>,
    pub free_div_bbox: f64,
    pub keyframes: usize,
    pub total_points: usize,
}

impl MissionMetrics {
    fn snapshot(phase: &str, map: &OccupancyGrid, keyframes: &[SemiDenseFrame]) -> Self {
        let c = map.count_states();
        Self {
            phase: phase.to_string(),
            map_build_s: 0.0,
            inflation_s: 0.0,
            mark_in_sight_s: 0.0,
            path_s: 0.0,
            bbox: c.bbox,
            free: c.free,
            occupied: c.occupied,
            free_div_known: (c.known() > 0).then(|| c.free as f64 / c.known() as f64),
            free_div_bbox: c.free as f64 / c.bbox as f64,
            keyframes: keyframes.len(),
            total_points: keyframes.iter().map(|k| k.measurements.len()).sum(),
        }
    }

    pub fn unknown(&self) -> usize {
        self.bbox - self.free - self.occupied
    }
}

/// One step of the mission with everything needed to re-fly it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub name: String,
    pub poses: Vec<Pose<f64>>,
    /// Index of the first keyframe captured in this phase.
    pub first_keyframe: usize,
    pub star_plan: Option<StarPlan>,
    pub path: Option<Vec<Vector3<f64>>>,
    /// Commanded waypoints handed to the trajectory executor.
    pub waypoints: Vec<Waypoint>,
    /// Flown poses outside traversable space of the map current at plan time.
    pub unsafe_poses: usize,
    pub interesting_voxels: Option<usize>,
    pub metrics: MissionMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionLog {
    pub config: ScenarioConfig,
    pub grid: GridFrame,
    pub status: String,
    pub phases: Vec<PhaseRecord>,
}

impl MissionLog {
    pub fn final_metrics(&self) -> Option<&MissionMetrics> {
        self.phases.last().map(|p| &p.metrics)
    }

    pub fn star_origins(&self) -> Vec<Vector3<f64>> {
        self.phases
            .iter()
            .filter_map(|p| p.star_plan.as_ref().map(|s| s.origin))
            .collect()
    }

    pub fn unsafe_poses(&self) -> usize {
        self.phases.iter().map(|p| p.unsafe_poses).sum()
    }

    pub fn all_poses(&self) -> impl Iterator<Item = &Pose<f64>> {
        self.phases.iter().flat_map(|p| p.poses.iter())
    }
}

/// Mission state threaded through the phases.
struct Runner<'a> {
    cfg: &'a ScenarioConfig,
    frame: GridFrame,
    keyframes: Vec<SemiDenseFrame>,
    map: OccupancyGrid,
    trav: TraversabilityGrid,
    phases: Vec<PhaseRecord>,
}

impl Runner<'_> {
    fn capture(&mut self, poses: &[Pose<f64>]) {
        let seed = self.cfg.mission.seed;
        for p in poses {
            let k = self.keyframes.len() as u64;
            self.keyframes.push(render_semidense(
                &self.cfg.world,
                p,
                &self.cfg.camera,
                &self.cfg.render,
                derive_seed(seed, k),
            ));
        }
    }

    /// Rebuilds map and traversability from all keyframes and returns a metrics snapshot.
    fn rebuild(&mut self, phase: &str) -> Result<MissionMetrics, MissionError> {
        let t = Instant::now();
        self.map = regenerate_in(
            self.frame,
            &self.keyframes,
            self.cfg.map.sensor,
            self.cfg.map.backing,
        )?;
        let map_build_s = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let e = &self.cfg.exploration;
        self.trav = inflate(&self.map, e.hor_voxels, e.ver_voxels);
        let inflation_s = t.elapsed().as_secs_f64();
        let mut m = MissionMetrics::snapshot(phase, &self.map, &self.keyframes);
        m.map_build_s = map_build_s;
        m.inflation_s = inflation_s;
        info!(
            "{phase}: {} keyframes, free {} occupied {} unknown {}",
            m.keyframes,
            m.free,
            m.occupied,
            m.unknown()
        );
        Ok(m)
    }

    fn unsafe_count(&self, poses: &[Pose<f64>]) -> usize {
        poses
            .iter()
            .filter(|p| !self.trav.is_point_traversable(&p.position))
            .count()
    }

    fn fly(&mut self, waypoints: &[Waypoint], noise_stream: u64) -> (Vec<Pose<f64>>, usize) {
        let m = &self.cfg.mission;
        let poses = execute_waypoints(
            waypoints,
            m.capture_spacing_m,
            &m.pose_noise,
            derive_seed(m.seed, noise_stream),
        );
        let unsafe_poses = self.unsafe_count(&poses);
        self.capture(&poses);
        (poses, unsafe_poses)
    }
}

/// Waypoints along a path, each facing the direction of the leg that reaches it.
fn path_waypoints(path: &[Vector3<f64>]) -> Vec<Waypoint> {
    let yaw = |a: &Vector3<f64>, b: &Vector3<f64>| {
        let d = b - a;
        (d.x.abs() + d.y.abs() > 1e-12).then(|| d.y.atan2(d.x))
    };
    let first = path
        .windows(2)
        .find_map(|w| yaw(&w[0], &w[1]))
        .unwrap_or(0.0);
    let mut heading = first;
    let mut out = vec![Waypoint::new(path[0], first)];
    for w in path.windows(2) {
        heading = yaw(&w[0], &w[1]).unwrap_or(heading);
        out.push(Waypoint::new(w[1], heading));
    }
    out
}

/// Runs look-around, then alternates star discovery and repositioning until no reachable
/// interesting component is left or a stop criterion fires.
pub fn run_mission(cfg: &ScenarioConfig) -> Result<MissionLog, MissionError> {
    run_mission_with_map(cfg).map(|(log, _)| log)
}

/// Like [`run_mission`], also returning the final map.
pub fn run_mission_with_map(
    cfg: &ScenarioConfig,
) -> Result<(MissionLog, OccupancyGrid), MissionError> {
    cfg.validate()?;
    let frame = cfg.grid_frame()?;
    let e = cfg.exploration;
    let res = frame.resolution;
    let margin = e.margin(res);
    let empty_map = OccupancyGrid::with_backing(frame, cfg.map.sensor, cfg.map.backing);
    let empty_trav = inflate(&empty_map, e.hor_voxels, e.ver_voxels);
    let mut r = Runner {
        cfg,
        frame,
        keyframes: Vec::new(),
        map: empty_map,
        trav: empty_trav,
        phases: Vec::new(),
    };

    // the look-around is centered on the start voxel
    let start = frame.center(
        frame
            .voxel_of(&cfg.mission.start_m)
            .expect("validated start"),
    );
    let poses = look_around_poses(
        start,
        cfg.mission.look_around_steps,
        cfg.look_around_amp(),
        cfg.mission.look_around_period_steps,
    );
    r.capture(&poses);
    let metrics = r.rebuild("look-around")?;
    r.phases.push(PhaseRecord {
        name: "look-around".into(),
        poses,
        first_keyframe: 0,
        star_plan: None,
        path: None,
        waypoints: Vec::new(),
        unsafe_poses: 0,
        interesting_voxels: None,
        metrics,
    });

    let mut current = start;
    let mut origins: Vec<Vector3<f64>> = Vec::new();
    let mut status = STATUS_MAX_DISCOVERIES.to_string();
    for k in 1..=cfg.mission.max_star_discoveries {
        let heights = heights_around(current.z, res, e.height_layers);
        let plan = match plan_star_discovery(&r.trav, &r.map, &current, e.n_rays, &heights, margin)
        {
            Ok(p) if !p.rays.is_empty() => p,
            Ok(_) | Err(_) => {
                info!("star discovery {k}: no plan from {current:?}");
                status = STATUS_COMPLETE_OR_BLOCKED.into();
                break;
            }
        };
        let free_before = r.phases.last().map_or(0, |p| p.metrics.free);
        let mut waypoints = plan.waypoints.clone();
        if (waypoints[0].position - current).norm() > 1e-12 {
            waypoints.insert(0, Waypoint::new(current, waypoints[0].heading));
        }
        let first_keyframe = r.keyframes.len();
        let (poses, unsafe_poses) = r.fly(&waypoints, POSE_NOISE_STREAM + 2 * k as u64);
        let name = format!("star-discovery {k}");
        let mut metrics = r.rebuild(&name)?;
        current = plan.origin;
        origins.push(plan.origin);

        let t = Instant::now();
        let state = ExplorationState::compute(&r.map, &r.trav, origins.clone())?;
        metrics.mark_in_sight_s = t.elapsed().as_secs_f64();
        debug!(
            "{name}: {} visited, {} interesting in {} components",
            state.visited_count(),
            state.interesting.len(),
            state.components.len()
        );
        let growth = if free_before > 0 {
            metrics.free as f64 / free_before as f64 - 1.0
        } else {
            f64::INFINITY
        };
        r.phases.push(PhaseRecord {
            name,
            poses,
            first_keyframe,
            star_plan: Some(plan),
            path: None,
            waypoints,
            unsafe_poses,
            interesting_voxels: Some(state.interesting.len()),
            metrics,
        });

        if state.components.is_empty() {
            status = STATUS_COMPLETE_OR_BLOCKED.into();
            break;
        }
        if k == cfg.mission.max_star_discoveries {
            break;
        }
        if cfg.mission.min_free_growth.is_some_and(|g| growth < g) {
            status = STATUS_LOW_GROWTH.into();
            break;
        }

        let t = Instant::now();
        let mut next = None;
        for (ci, _) in state.components.iter().enumerate() {
            let sel = select_next_origin(
                &r.trav,
                &r.map,
                &state.components[ci..],
                e.n_candidates,
                e.n_rays,
                e.height_layers,
                margin,
                e.candidate_heights,
                derive_seed(cfg.mission.seed, SELECTION_STREAM + k as u64),
            );
            let Ok((origin, _)) = sel else {
                continue;
            };
            if let Some(path) = plan_path(&r.trav, &current, &origin) {
                next = Some((origin, path));
                break;
            }
        }
        let path_s = t.elapsed().as_secs_f64();
        let Some((origin, path)) = next else {
            info!("no reachable interesting component after star discovery {k}");
            status = STATUS_COMPLETE_OR_BLOCKED.into();
            break;
        };
        info!(
            "reposition {k}: {:.2} m to ({:.2}, {:.2}, {:.2})",
            exploration::path_length(&path),
            origin.x,
            origin.y,
            origin.z
        );
        let waypoints = path_waypoints(&path);
        let first_keyframe = r.keyframes.len();
        let (poses, unsafe_poses) = r.fly(&waypoints, POSE_NOISE_STREAM + 2 * k as u64 + 1);
        let name = format!("reposition {k}");
        let mut metrics = r.rebuild(&name)?;
        metrics.path_s = path_s;
        r.phases.push(PhaseRecord {
            name,
            poses,
            first_keyframe,
            star_plan: None,
            path: Some(path),
            waypoints,
            unsafe_poses,
            interesting_voxels: None,
            metrics,
        });
        current = origin;
    }

    let log = MissionLog {
        config: cfg.clone(),
        grid: frame,
        status,
        phases: r.phases,
    };
    Ok((log, r.map))
}

/// Re-renders every logged pose, rebuilds the map after each phase and returns the
/// counters in phase order.
pub fn replay(log: &MissionLog) -> Result<Vec<MissionMetrics>, MissionError> {
    let cfg = &log.config;
    let mut r = Runner {
        cfg,
        frame: log.grid,
        keyframes: Vec::new(),
        map: OccupancyGrid::new(log.grid, cfg.map.sensor),
        trav: TraversabilityGrid::from_blocked(log.grid, 0, 0, vec![true; log.grid.len()]),
        phases: Vec::new(),
    };
    let mut out = Vec::with_capacity(log.phases.len());
    for p in &log.phases {
        if r.keyframes.len() != p.first_keyframe {
            return Err(MissionError::Replay(format!(
                "phase '{}' starts at keyframe {} but {} were replayed",
                p.name,
                p.first_keyframe,
                r.keyframes.len()
            )));
        }
        r.capture(&p.poses);
        out.push(r.rebuild(&p.name)?);
    }
    Ok(out)
}

/// Whether the counters of `a` and `b` agree (wall-clock fields ignored).
pub fn same_counters(a: &MissionMetrics, b: &MissionMetrics) -> bool {
    a.phase == b.phase
        && a.bbox == b.bbox
        && a.free == b.free
        && a.occupied == b.occupied
        && a.keyframes == b.keyframes
        && a.total_points == b.total_points
}
