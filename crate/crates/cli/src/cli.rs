use std::net::SocketAddr;
use std::path::PathBuf;

use annofix::correction::{DEFAULT_MIN_SEGMENT, DEFAULT_PASSES, DEFAULT_RADIUS};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::decisions::Choice;
use crate::render::Color;

#[derive(Debug, Parser)]
#[command(
    name = "annofix",
    version,
    about = "Measure, simulate and repair annotation errors in video detection datasets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Box size statistics, and center differences against a second annotation set
    Stats(StatsArgs),
    /// Corrupt a dataset's annotations with seeded noise
    Inject(InjectArgs),
    /// Hit rate, false alarms per minute, TA and MTA of detections
    Evaluate(EvaluateArgs),
    /// Correct annotation positions by template matching
    Correct(CorrectArgs),
    /// Draw annotation boxes over the frames of one video
    Render(RenderArgs),
    /// Operator review of corrected annotations
    #[command(subcommand)]
    Review(ReviewCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset root
    pub dataset: PathBuf,
    /// Second annotation tree to compare against (differences are `against - dataset`)
    #[arg(long)]
    pub against: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    /// Dataset root
    pub dataset: PathBuf,
    /// Noise config file `{"seed": n, "specs": [...]}`
    #[arg(long)]
    pub config: PathBuf,
    /// Output tree for corrupted labels and injection logs
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Image size `WxH` when frames are not available
    #[arg(long, value_parser = parse_size)]
    pub image_size: Option<(usize, usize)>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Annotation file, or dataset root
    pub annotations: PathBuf,
    /// Detection file, or directory of `<video_id>.json` files
    pub detections: PathBuf,
    /// Keep detections with score >= threshold
    #[arg(long, conflicts_with = "target_fa", required_unless_present = "target_fa")]
    pub threshold: Option<f64>,
    /// Calibrate the threshold to this many false alarms per minute
    #[arg(long)]
    pub target_fa: Option<f64>,
    /// Frame rate; overrides the rate stored in the annotation files
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    /// Dataset root
    pub dataset: PathBuf,
    /// Output tree for corrected labels and diagnostics
    #[arg(long)]
    pub out: PathBuf,
    /// Search radius in pixels
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: u32,
    #[arg(long, default_value_t = DEFAULT_PASSES)]
    pub passes: usize,
    /// Shortest visible segment that is corrected
    #[arg(long, default_value_t = DEFAULT_MIN_SEGMENT)]
    pub min_segment: usize,
    /// Keep fractional corrections instead of whole pixels
    #[arg(long)]
    pub subpixel: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Frame directory of one video
    pub frames: PathBuf,
    /// Annotation file to draw; repeat for several sets
    #[arg(long = "set", required = true)]
    pub sets: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// One colour per set: a name or `#rrggbb`
    #[arg(long, value_delimiter = ',', default_value = "green,red")]
    pub colors: Vec<Color>,
}

#[derive(Debug, Subcommand)]
pub enum ReviewCommand {
    /// Serve the review API (and a UI bundle, if given)
    Serve(ServeArgs),
    /// Merge the chosen annotation set of every video into one tree
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Dataset root
    pub dataset: PathBuf,
    /// Corrected annotation tree
    #[arg(long)]
    pub corrected: PathBuf,
    /// Decisions file; created on the first decision
    #[arg(long)]
    pub decisions: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Built UI bundle served at `/`
    #[arg(long)]
    pub ui: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Dataset root
    pub dataset: PathBuf,
    #[arg(long)]
    pub corrected: PathBuf,
    #[arg(long)]
    pub decisions: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Choice for videos without a decision
    #[arg(long, value_enum)]
    pub default: Option<Choice>,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| e.to_string());
    match (parse(w)?, parse(h)?) {
        (0, _) | (_, 0) => Err("image size must be positive".into()),
        size => Ok(size),
    }
}
