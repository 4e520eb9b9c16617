//! Command-line front end: synthesize traces, calibrate from traces,
//! replay traces into events and commands, dump classifications, and run
//! the target-selection benchmark.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tilt_engine::calibration::{CalibrationSet, DirectionLabel};
use tilt_engine::classify::LevelBoundaries;
use tilt_engine::harness::{self, BenchConfig, SessionResult, TargetSession};
use tilt_engine::mapping::GestureKind;
use tilt_engine::pipeline::{EngineConfig, ReplayEngine};
use tilt_engine::preprocess::{detect_stable, PreprocessConfig};
use tilt_engine::profiles::{load_profile, GestureKey};
use tilt_engine::trace::{parse_trace, serialize_trace, synth_trace, SynthSpec, Trace};
use tilt_engine::vec3::{self, Vec3};

#[derive(Parser)]
#[command(
    name = "tilt-engine",
    version,
    about = "Tilt-gesture recognition engine: trace replay, calibration, and synthetic benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a constant-orientation accelerometer trace
    Synth(SynthArgs),
    /// Build a calibration file from per-pose trace files
    Calibrate(CalibrateArgs),
    /// Replay a trace through a calibration and profile, printing events
    /// and commands as JSON Lines
    Replay(ReplayArgs),
    /// Print the classification of every stable point in a trace
    Classify(ClassifyArgs),
    /// Run the synthetic target-selection benchmark
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Gravity direction as "x,y,z" (normalized unless exactly zero)
    #[arg(long, conflicts_with_all = ["label", "tilt_deg"])]
    direction: Option<String>,
    /// Named tilt direction instead of an explicit vector
    #[arg(long, requires = "tilt_deg")]
    label: Option<String>,
    /// Tilt magnitude in degrees for --label
    #[arg(long)]
    tilt_deg: Option<f64>,
    /// Per-axis Gaussian noise sigma in g
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1000)]
    duration_ms: u64,
    #[arg(long, default_value_t = 100.0)]
    rate_hz: f64,
    /// Amplitude of the 8 Hz tremor sinusoid, in g
    #[arg(long, default_value_t = 0.0)]
    tremor_amp: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Trace file holding the steady rest pose
    #[arg(long)]
    steady: PathBuf,
    /// Direction trace as label[:level]=path (repeatable), e.g.
    /// --pose right=r.jsonl --pose up-left:2=ul2.jsonl
    #[arg(long = "pose", value_name = "LABEL[:LEVEL]=PATH")]
    poses: Vec<String>,
    /// Maximum acceleration magnitude used by the border rule
    #[arg(long, default_value_t = 1.0)]
    max_g: f64,
    /// Declared direction count for the border rule; defaults to the
    /// number of --pose arguments
    #[arg(long)]
    directions: Option<u32>,
    #[command(flatten)]
    preprocess: PreprocessFlags,
    /// Output calibration file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    calibration: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    /// Start mode; defaults to the profile's initial mode
    #[arg(long)]
    mode: Option<String>,
    #[command(flatten)]
    preprocess: PreprocessFlags,
    /// Level boundaries as "dead,l1,l2" degrees
    #[arg(long, default_value = "15,40,65")]
    boundaries: String,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    calibration: PathBuf,
    /// Quantize levels from the tilt angle
    #[arg(long)]
    levels: bool,
    #[arg(long, default_value = "15,40,65")]
    boundaries: String,
    #[command(flatten)]
    preprocess: PreprocessFlags,
}

#[derive(Args)]
struct BenchArgs {
    /// Number of targets
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["4", "8", "12", "16"]))]
    targets: String,
    #[arg(long, default_value_t = 500)]
    trials: u32,
    /// Synthetic subject noise sigma in g
    #[arg(long, default_value_t = 0.08)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use n evenly spaced azimuths at one tilt instead of two levels
    /// on eight azimuths for 12/16 targets
    #[arg(long)]
    pure_azimuth: bool,
    /// Append the result as a CSV row (header written to new files)
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PreprocessFlags {
    #[arg(long, default_value_t = 6)]
    window_size: usize,
    #[arg(long, default_value_t = 0.05)]
    stddev_threshold: f64,
    #[arg(long, default_value_t = 200)]
    dwell_ms: u64,
}

impl PreprocessFlags {
    fn to_config(&self) -> PreprocessConfig {
        PreprocessConfig {
            window_size: self.window_size,
            stddev_threshold: self.stddev_threshold,
            dwell_ms: self.dwell_ms,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {:#}", err);
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn parse_vec3(text: &str) -> Result<Vec3> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("expected three comma-separated numbers, got {:?}", text);
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .parse::<f64>()
            .with_context(|| format!("bad number {:?}", part))?;
    }
    Ok(v)
}

fn parse_boundaries(text: &str) -> Result<LevelBoundaries> {
    let v = parse_vec3(text)?;
    let b = LevelBoundaries {
        dead_zone_deg: v[0],
        l1_max_deg: v[1],
        l2_max_deg: v[2],
    };
    b.validate().map_err(|e| anyhow!(e.to_string()))?;
    Ok(b)
}

fn load_trace(path: &Path) -> Result<Trace> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    parse_trace(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let direction = match (&args.direction, &args.label) {
        (Some(text), None) => {
            let v = parse_vec3(text)?;
            vec3::normalize(v).ok_or_else(|| anyhow!("direction cannot be the zero vector"))?
        }
        (None, Some(label)) => {
            let label: DirectionLabel = label.parse().map_err(|e| anyhow!("{}", e))?;
            let azimuth = label
                .azimuth_deg()
                .ok_or_else(|| anyhow!("--label steady has no tilt; use --direction 0,0,1"))?;
            harness::pose(azimuth, args.tilt_deg.expect("clap enforces tilt_deg"))
        }
        (None, None) => [0.0, 0.0, 1.0],
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    let spec = SynthSpec {
        direction,
        noise_sigma: args.sigma,
        duration_ms: args.duration_ms,
        rate_hz: args.rate_hz,
        tremor_amp: args.tremor_amp,
        seed: args.seed,
    };
    let trace = synth_trace(&spec)?;
    match args.out {
        Some(path) => {
            let file =
                File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
            serialize_trace(&trace, BufWriter::new(file))?;
        }
        None => {
            let stdout = io::stdout();
            serialize_trace(&trace, BufWriter::new(stdout.lock()))?;
        }
    }
    Ok(())
}

fn first_stable_point(
    trace: &Trace,
    cfg: PreprocessConfig,
    what: &str,
) -> Result<tilt_engine::preprocess::StablePoint> {
    detect_stable(trace.samples.iter().copied(), cfg)?
        .into_iter()
        .next()
        .ok_or_else(|| anyhow!("{}: no stable point found; hold the pose longer", what))
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    if args.poses.is_empty() {
        bail!("at least one --pose is required");
    }
    let cfg = args.preprocess.to_config();

    let mut poses: Vec<(DirectionLabel, u8, PathBuf)> = Vec::new();
    for spec in &args.poses {
        let (gesture, path) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--pose must look like label[:level]=path, got {:?}", spec))?;
        let (label_text, level) = match gesture.split_once(':') {
            Some((l, lv)) => (
                l,
                lv.parse::<u8>()
                    .with_context(|| format!("bad level in {:?}", spec))?,
            ),
            None => (gesture, 1),
        };
        let label: DirectionLabel = label_text.parse().map_err(|e| anyhow!("{}", e))?;
        poses.push((label, level, PathBuf::from(path)));
    }

    let n_directions = args.directions.unwrap_or(poses.len() as u32);
    let mut set = CalibrationSet::new(args.max_g, n_directions)?;

    let steady_trace = load_trace(&args.steady)?;
    let steady_point = first_stable_point(&steady_trace, cfg, "steady trace")?;
    set = set.calibrate_steady(&steady_point)?;

    for (label, level, path) in poses {
        let trace = load_trace(&path)?;
        let point = first_stable_point(&trace, cfg, &format!("{} trace", label))?;
        set = set.try_add_direction(label, level, &point)?;
    }

    set.save(&args.out)?;
    eprintln!(
        "calibrated steady + {} points (virtual border {:.4} g) -> {}",
        set.points.len(),
        set.virtual_border,
        args.out.display()
    );
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let trace = load_trace(&args.trace)?;
    let calibration = CalibrationSet::load(&args.calibration)?;
    let profile = load_profile(&args.profile)?;
    let boundaries = parse_boundaries(&args.boundaries)?;

    let mut mode = match args.mode {
        Some(m) => {
            if !profile.modes.contains_key(&m) {
                bail!("profile has no mode {:?}", m);
            }
            m
        }
        None => profile.initial_mode.clone(),
    };

    let cfg = EngineConfig {
        preprocess: args.preprocess.to_config(),
        boundaries,
        levels_enabled: profile.levels_enabled,
        ..EngineConfig::default()
    };
    let mut engine = ReplayEngine::new(&calibration, cfg, profile.trigger, profile.pointer)?;

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for sample in &trace.samples {
        for event in engine.push(*sample)? {
            emit_event(&mut out, &profile, &mut mode, &event)?;
        }
    }
    for event in engine.finish() {
        emit_event(&mut out, &profile, &mut mode, &event)?;
    }
    out.flush()?;
    if engine.overflow_count() > 0 {
        eprintln!("{} sequence overflow(s) dropped", engine.overflow_count());
    }
    Ok(())
}

fn emit_event<W: Write>(
    out: &mut W,
    profile: &tilt_engine::profiles::MappingProfile,
    mode: &mut String,
    event: &tilt_engine::mapping::GestureEvent,
) -> Result<()> {
    // pointer ticks that moved nothing are noise on the wire
    if let GestureKind::Pointer { dx, dy } = event.kind {
        if dx == 0.0 && dy == 0.0 {
            return Ok(());
        }
    }
    writeln!(out, "{}", serde_json::to_string(event)?)?;
    if GestureKey::from_event(event).is_some() {
        if let Some(command) = profile.resolve(mode, event)? {
            writeln!(
                out,
                "{{\"t\":{},\"type\":\"command\",\"name\":{},\"mode\":{}}}",
                command.t,
                serde_json::to_string(&command.name)?,
                serde_json::to_string(mode)?
            )?;
        }
        *mode = profile.mode_switch(mode, event);
    }
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let trace = load_trace(&args.trace)?;
    let calibration = CalibrationSet::load(&args.calibration)?;
    let boundaries = parse_boundaries(&args.boundaries)?;
    let cfg = args.preprocess.to_config();

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for point in detect_stable(trace.samples.iter().copied(), cfg)? {
        let c = if args.levels {
            tilt_engine::classify_with_levels(&calibration, &boundaries, &point)?
        } else {
            tilt_engine::classify(&calibration, &point)?
        };
        writeln!(
            out,
            "{{\"t\":{},\"label\":{},\"level\":{},\"distance\":{},\"angle\":{}}}",
            point.t_end,
            serde_json::to_string(c.label.as_str())?,
            c.level,
            serde_json::to_string(&c.distance)?,
            serde_json::to_string(&c.angle.degrees())?
        )?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let session = TargetSession {
        n_targets: args.targets.parse::<u32>().expect("clap restricts values"),
        trials: args.trials,
        noise_sigma: args.sigma,
        seed: args.seed,
    };
    let cfg = BenchConfig {
        pure_azimuth: args.pure_azimuth,
        ..BenchConfig::default()
    };
    let result = harness::run_target_session(&session, &cfg)?;

    println!("{}", serde_json::to_string(&result)?);
    if let Some(path) = args.csv {
        append_csv_row(&path, &result).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn append_csv_row(path: &Path, result: &SessionResult) -> Result<()> {
    let fresh = !path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if fresh {
        writeln!(file, "{}", SessionResult::csv_header())?;
    }
    writeln!(file, "{}", result.csv_row())?;
    Ok(())
}
