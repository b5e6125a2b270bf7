use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pantrack::annotate::{annotate_frame, to_rgb, write_png};
use pantrack::evaluation::{aggregate, judge_sequence, measure_fps, EvalReport, FrameRule};
use pantrack::pipeline::TRACK_STATE_HEADER;
use pantrack::sequence_io::{load_ground_truth, load_sequence, read_detections, write_detections, GroundTruthBox};
use pantrack::synthetic::SceneSpec;
use pantrack::{run_sequence, Error, PipelineConfig, Result};

mod dump;

#[derive(Parser)]
#[command(name = "pantrack", version, about = "Detect and track moving objects in image sequences from a moving camera")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run detection and tracking over a frame directory.
    Track(TrackArgs),
    /// Score an existing detections CSV against ground truth.
    Eval(EvalArgs),
    /// Render a synthetic scene and its ground truth.
    Synth(SynthArgs),
    /// Track, score and time a sequence without writing frames.
    Benchmark(BenchmarkArgs),
}

/// Pipeline parameters. Flags override `--config`, which overrides defaults.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// JSON file with any of: eta, alpha, phi, min_blob_area,
    /// min_object_side, invisible_max.
    #[arg(long)]
    config: Option<PathBuf>,
    /// History length.
    #[arg(long)]
    eta: Option<usize>,
    /// Dilation window and association gate scale.
    #[arg(long)]
    alpha: Option<f64>,
    /// Cost assigned to infeasible track/detection pairs.
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    min_blob_area: Option<usize>,
    #[arg(long)]
    min_object_side: Option<usize>,
    /// Frames a track may go unseen before deletion (default 2 * eta).
    #[arg(long)]
    invisible_max: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.eta {
            c.eta = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.phi {
            c.phi = v;
        }
        if let Some(v) = self.min_blob_area {
            c.min_blob_area = v;
        }
        if let Some(v) = self.min_object_side {
            c.min_object_side = v;
        }
        if self.invisible_max.is_some() {
            c.invisible_max = self.invisible_max;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Rule {
    /// A frame is a true detection only if every truth box is matched.
    #[default]
    All,
    /// One matched truth box is enough.
    Any,
}

impl From<Rule> for FrameRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::All => FrameRule::All,
            Rule::Any => FrameRule::Any,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Directory holding the frames.
    #[arg(long)]
    input: PathBuf,
    /// File-name glob selecting frames, sorted by name.
    #[arg(long, default_value = "*.pgm")]
    pattern: String,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth file, one per object; enables scoring.
    #[arg(long)]
    gt: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    rule: Rule,
    /// Skip the annotated PNGs.
    #[arg(long)]
    no_annotate: bool,
    /// Write background, dissimilarity and weight images.
    #[arg(long)]
    dump_bg: bool,
    /// Write difference images and moving-pixel masks.
    #[arg(long)]
    dump_fg: bool,
    /// Write blob refinement images (mask blob, dilation, refined region).
    #[arg(long)]
    dump_blobs: bool,
    /// Write the per-frame Kalman state of every track as CSV.
    #[arg(long)]
    dump_tracks: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Detections CSV as written by `track`.
    #[arg(long)]
    detections: PathBuf,
    /// Ground-truth file, one per object.
    #[arg(long, required = true)]
    gt: Vec<PathBuf>,
    /// Report JSON path. The precision curve goes next to it as CSV.
    #[arg(long)]
    report: PathBuf,
    /// First scored frame (default eta + 1).
    #[arg(long)]
    first: Option<usize>,
    /// Last scored frame (default: last frame in either file).
    #[arg(long)]
    last: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    rule: Rule,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene description JSON.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, required = true)]
    gt: Vec<PathBuf>,
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    rule: Rule,
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::SpecValidation(_) => 2,
        Error::Io { .. } | Error::Format { .. } | Error::Parse { .. } | Error::EmptySequence(_) => 3,
        Error::InsufficientFrames { .. } => 4,
        _ => 1,
    }
}

fn precision_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    report.with_file_name(format!("{stem}_precision.csv"))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn load_truth(paths: &[PathBuf]) -> Result<Vec<GroundTruthBox>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(load_ground_truth(p)?);
    }
    Ok(all)
}

fn print_report(r: &EvalReport) {
    let fps = r.fps.map(|f| format!("  FPS {f:.1}")).unwrap_or_default();
    println!(
        "TD {:.1}%  FD {:.1}%  MD {:.1}%  ({} frames){fps}",
        r.td_pct, r.fd_pct, r.md_pct, r.counts.frames
    );
}

fn write_report(r: &EvalReport, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    r.write_json(path)?;
    r.write_precision_csv(precision_path(path))
}

fn track(args: &TrackArgs) -> Result<()> {
    let config = args.config.resolve()?;
    let truth = load_truth(&args.gt)?;
    let frames = load_sequence(&args.input.input, &args.input.pattern)?;
    if frames.len() <= config.eta {
        return Err(Error::InsufficientFrames {
            frames: frames.len(),
            eta: config.eta,
        });
    }
    create_dir(&args.out)?;
    let annotated = args.out.join("annotated");
    if !args.no_annotate {
        create_dir(&annotated)?;
        // no history yet, so nothing to draw
        for f in &frames[..config.eta] {
            write_png(annotated.join(format!("frame_{:04}.png", f.index())), &to_rgb(f))?;
        }
    }
    let debug = args.out.join("debug");
    let dumps = dump::Toggles {
        background: args.dump_bg,
        foreground: args.dump_fg,
        blobs: args.dump_blobs,
    };
    if dumps.any() {
        create_dir(&debug)?;
    }

    let total = frames.len();
    let summary = run_sequence(frames, &config, |frame, res| {
        if !args.no_annotate {
            let img = annotate_frame(frame, &res.tracks);
            write_png(annotated.join(format!("frame_{:04}.png", res.frame_index)), &img)?;
        }
        dump::write(&debug, &dumps, config.eta, res)
    })?;

    write_detections(args.out.join("detections.csv"), &summary.detections)?;
    if args.dump_tracks {
        let mut text = format!("{TRACK_STATE_HEADER}\n");
        for s in &summary.track_states {
            text.push_str(&s.csv_row());
            text.push('\n');
        }
        let path = args.out.join("tracks.csv");
        fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
    }
    println!(
        "{} frames, {} operated, {} detections",
        total,
        summary.operated_frames,
        summary.detections.len()
    );

    if !truth.is_empty() {
        let judgements = judge_sequence(&summary.detections, &truth, config.eta + 1, total);
        let report = aggregate(&judgements, args.rule.into())?
            .with_fps(measure_fps(summary.operated_frames, summary.compute_seconds)?);
        write_report(&report, &args.out.join("report.json"))?;
        print_report(&report);
    }
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let config = args.config.resolve()?;
    let detections = read_detections(&args.detections)?;
    let truth = load_truth(&args.gt)?;
    let seen = detections
        .iter()
        .map(|d| d.frame)
        .chain(truth.iter().map(|t| t.frame_index))
        .max()
        .unwrap_or(0);
    let first = args.first.unwrap_or(config.eta + 1);
    let last = args.last.unwrap_or(seen);
    let report = aggregate(&judge_sequence(&detections, &truth, first, last), args.rule.into())?;
    write_report(&report, &args.report)?;
    print_report(&report);
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SceneSpec::load(&args.spec)?;
    let scene = spec.write(&args.out)?;
    println!(
        "{} frames of {}x{}, {} objects -> {}",
        scene.frames.len(),
        spec.width,
        spec.height,
        scene.truth.len(),
        args.out.display()
    );
    Ok(())
}

fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let config = args.config.resolve()?;
    let truth = load_truth(&args.gt)?;
    let frames = load_sequence(&args.input.input, &args.input.pattern)?;
    let total = frames.len();
    let summary = run_sequence(frames, &config, |_, _| Ok(()))?;
    let judgements = judge_sequence(&summary.detections, &truth, config.eta + 1, total);
    let report = aggregate(&judgements, args.rule.into())?
        .with_fps(measure_fps(summary.operated_frames, summary.compute_seconds)?);
    write_report(&report, &args.report)?;
    print_report(&report);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Track(a) => track(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Benchmark(a) => benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
