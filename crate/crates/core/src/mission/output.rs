use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{MissionError, MissionLog, MissionMetrics};
use crate::exploration::write_waypoints;
use crate::map::{write_map_text, write_occupied_mesh_obj, OccupancyGrid};

const COUNTER_COLUMNS: [&str; 8] = [
    "phase",
    "bbox",
    "free",
    "occupied",
    "free_div_known",
    "free_div_bbox",
    "keyframes",
    "total_points",
];
const TIMING_COLUMNS: [&str; 5] = [
    "phase",
    "map_build_s",
    "inflation_s",
    "mark_in_sight_s",
    "path_s",
];

fn ratio(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |r| format!("{r:.6}"))
}

fn counter_row(m: &MissionMetrics) -> Vec<String> {
    vec![
        m.phase.clone(),
        m.bbox.to_string(),
        m.free.to_string(),
        m.occupied.to_string(),
        ratio(m.free_div_known),
        ratio(Some(m.free_div_bbox)),
        m.keyframes.to_string(),
        m.total_points.to_string(),
    ]
}

fn timing_row(m: &MissionMetrics) -> Vec<String> {
    vec![
        m.phase.clone(),
        format!("{:.4}", m.map_build_s),
        format!("{:.4}", m.inflation_s),
        format!("{:.4}", m.mark_in_sight_s),
        format!("{:.4}", m.path_s),
    ]
}

fn to_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Voxel counters per phase. Contains no wall-clock values, so equal runs give equal bytes.
pub fn metrics_csv(log: &MissionLog) -> String {
    to_csv(
        &COUNTER_COLUMNS,
        log.phases.iter().map(|p| counter_row(&p.metrics)),
    )
}

pub fn timings_csv(log: &MissionLog) -> String {
    to_csv(
        &TIMING_COLUMNS,
        log.phases.iter().map(|p| timing_row(&p.metrics)),
    )
}

/// Aligned text table of the counters, optionally followed by the timing columns.
pub fn metrics_table(log: &MissionLog, with_timings: bool) -> String {
    let mut header: Vec<&str> = COUNTER_COLUMNS.to_vec();
    if with_timings {
        header.extend(&TIMING_COLUMNS[1..]);
    }
    let rows: Vec<Vec<String>> = log
        .phases
        .iter()
        .map(|p| {
            let mut r = counter_row(&p.metrics);
            if with_timings {
                r.extend(timing_row(&p.metrics).into_iter().skip(1));
            }
            r
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header.clone());
    out.push('\n');
    for r in &rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MissionError + '_ {
    move |e| MissionError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), MissionError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Writes map, mesh, metrics, timings, waypoints, log and resolved config below `out_dir`.
/// Returns the written paths.
pub fn write_outputs(
    log: &MissionLog,
    map: &OccupancyGrid,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, MissionError> {
    let o = &log.config.output;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    let mut put = |name: &str, f: &mut dyn FnMut(&mut BufWriter<File>) -> std::io::Result<()>| {
        let p = out_dir.join(name);
        write_file(&p, |w| f(w))?;
        written.push(p);
        Ok::<(), MissionError>(())
    };
    put(&o.resolved_config_file, &mut |w| {
        w.write_all(log.config.to_toml_string().as_bytes())
    })?;
    put(&o.map_file, &mut |w| write_map_text(map, w))?;
    put(&o.mesh_file, &mut |w| write_occupied_mesh_obj(map, w))?;
    put(&o.metrics_file, &mut |w| {
        w.write_all(metrics_csv(log).as_bytes())
    })?;
    put(&o.metrics_table_file, &mut |w| {
        w.write_all(metrics_table(log, false).as_bytes())
    })?;
    put(&o.timings_file, &mut |w| {
        w.write_all(timings_csv(log).as_bytes())
    })?;
    put(&o.log_file, &mut |w| {
        serde_json::to_writer_pretty(&mut *w, log).map_err(std::io::Error::other)?;
        writeln!(w)
    })?;

    let wp_dir = out_dir.join(&o.waypoints_dir);
    fs::create_dir_all(&wp_dir).map_err(io_err(&wp_dir))?;
    for p in log.phases.iter().filter(|p| !p.waypoints.is_empty()) {
        let path = wp_dir.join(format!("{}.txt", p.name.replace(' ', "_")));
        write_file(&path, |w| write_waypoints(&p.waypoints, w))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads a mission log written by [`write_outputs`].
pub fn read_log(path: &Path) -> Result<MissionLog, MissionError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| MissionError::Log(format!("{}: {e}", path.display())))
}
