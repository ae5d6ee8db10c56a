use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use starscout::geometry::CameraIntrinsics;
use starscout::map::read_map_text;
use starscout::mission::{
    metrics_table, read_log, replay, run_mission_with_map, same_counters, write_outputs,
    ScenarioConfig,
};
use starscout::motion::{monte_carlo_summary, McConfig};

#[derive(Parser)]
#[command(
    name = "starscout",
    version,
    about = "Semi-dense mapping and star-discovery exploration"
)]
struct Cli {
    /// Seed overriding the scenario or analysis default.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for all outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full exploration mission from a TOML scenario.
    Run { scenario: PathBuf },
    /// Monte-Carlo eigen-analysis of the optimal motion direction.
    AnalyzeDirection(AnalyzeArgs),
    /// Voxel counts of an exported map.
    MapStats { map: PathBuf },
    /// Re-integrate a logged mission and compare its counters.
    Replay { log: PathBuf },
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 600)]
    points: usize,
    #[arg(long, default_value_t = 0.5)]
    depth_min: f64,
    #[arg(long, default_value_t = 5.0)]
    depth_max: f64,
    #[arg(long, default_value_t = 537.0)]
    fx: f64,
    #[arg(long, default_value_t = 537.0)]
    fy: f64,
    #[arg(long, default_value_t = 320.0)]
    cx: f64,
    #[arg(long, default_value_t = 240.0)]
    cy: f64,
    #[arg(long, default_value_t = 640)]
    width: u32,
    #[arg(long, default_value_t = 480)]
    height: u32,
}

type Res<T> = Result<T, String>;

fn write(path: &Path, text: &str) -> Res<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_run(scenario: &Path, seed: Option<u64>, out_dir: &Path) -> Res<()> {
    let mut cfg = ScenarioConfig::load(scenario).map_err(|e| e.to_string())?;
    if let Some(s) = seed {
        cfg.mission.seed = s;
    }
    let (log, map) = run_mission_with_map(&cfg).map_err(|e| e.to_string())?;
    let written = write_outputs(&log, &map, out_dir).map_err(|e| e.to_string())?;
    print!("{}", metrics_table(&log, true));
    println!("status: {}", log.status);
    for p in written {
        info!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs, seed: Option<u64>, out_dir: &Path) -> Res<()> {
    let intrinsics = CameraIntrinsics::new(a.fx, a.fy, a.cx, a.cy, a.width, a.height)
        .map_err(|e| e.to_string())?;
    let cfg = McConfig {
        intrinsics,
        n_points: a.points,
        depth_range: (a.depth_min, a.depth_max),
        trials: a.trials,
        seed: seed.unwrap_or(1),
    };
    let summary = monte_carlo_summary(&cfg).map_err(|e| e.to_string())?;
    print!("{}", summary.table());
    let json = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
    write(&out_dir.join("mc_summary.json"), &(json + "\n"))
}

fn cmd_map_stats(path: &Path) -> Res<()> {
    let f = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let m = read_map_text(BufReader::new(f)).map_err(|e| format!("{}: {e}", path.display()))?;
    let c = m.counts();
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            "n/a".to_string()
        } else {
            format!("{:.6}", num as f64 / den as f64)
        }
    };
    println!("resolution      {}", m.frame.resolution);
    println!(
        "dims            {} {} {}",
        m.frame.dims[0], m.frame.dims[1], m.frame.dims[2]
    );
    println!("bbox            {}", c.bbox);
    println!("free            {}", c.free);
    println!("occupied        {}", c.occupied);
    println!("unknown         {}", c.unknown);
    println!("free_div_known  {}", ratio(c.free, c.known()));
    println!("free_div_bbox   {}", ratio(c.free, c.bbox));
    Ok(())
}

fn cmd_replay(path: &Path) -> Res<()> {
    let log = read_log(path).map_err(|e| e.to_string())?;
    let metrics = replay(&log).map_err(|e| e.to_string())?;
    let mut mismatches = Vec::new();
    for (p, m) in log.phases.iter().zip(&metrics) {
        let ok = same_counters(&p.metrics, m);
        println!(
            "{:<20} free {:>8} occupied {:>8} keyframes {:>6}  {}",
            m.phase,
            m.free,
            m.occupied,
            m.keyframes,
            if ok { "match" } else { "MISMATCH" }
        );
        if !ok {
            mismatches.push(m.phase.clone());
        }
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(format!(
            "replay differs from log in phases: {}",
            mismatches.join(", ")
        ))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();
    let result = match &cli.command {
        Command::Run { scenario } => cmd_run(scenario, cli.seed, &cli.out_dir),
        Command::AnalyzeDirection(a) => cmd_analyze(a, cli.seed, &cli.out_dir),
        Command::MapStats { map } => cmd_map_stats(map),
        Command::Replay { log } => cmd_replay(log),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
