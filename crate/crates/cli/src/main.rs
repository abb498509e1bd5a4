use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use textloc::{Error, MagnitudeMode, PipelineConfig, StructuringElement};

mod detect;
mod eval;

/// Text localization with Sobel edge emphasis.
#[derive(Debug, Parser)]
#[command(name = "textloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect text boxes in a P5/P6 image or a directory of frames.
    Detect(Box<DetectArgs>),
    /// Score detections against ground-truth boxes.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Input image, or a directory of frames processed in file-name order.
    pub input: PathBuf,

    /// Write "x y w h" lines here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// `key = value` config file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Odd median window side.
    #[arg(long)]
    pub median_window: Option<usize>,

    #[arg(long, value_enum)]
    pub magnitude: Option<MagnitudeArg>,

    /// Component-bridging dilation element, WxH.
    #[arg(long, value_parser = parse_se)]
    pub bridge_se: Option<StructuringElement>,

    /// Gap-filling dilation element, WxH.
    #[arg(long, value_parser = parse_se)]
    pub fill_se: Option<StructuringElement>,

    /// Drop components smaller than this fraction of the mean area.
    #[arg(long)]
    pub min_area_fraction: Option<f64>,

    /// Drop components whose edge-pixel density is below this.
    #[arg(long)]
    pub min_edge_density: Option<f64>,

    /// Write every stage as a portable pixmap into this directory.
    #[arg(long)]
    pub debug_dir: Option<PathBuf>,

    /// Emphasized edge image (P5). Single-image input only.
    #[arg(long)]
    pub dump_edges: Option<PathBuf>,

    /// Otsu mask (P5). Single-image input only.
    #[arg(long)]
    pub dump_binary: Option<PathBuf>,

    /// Component labels (P6). Single-image input only.
    #[arg(long)]
    pub dump_components: Option<PathBuf>,

    /// Input with detected boxes drawn on it (P6). Single-image input only.
    #[arg(long)]
    pub dump_overlay: Option<PathBuf>,

    /// Frames processed concurrently.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Stop at the first unreadable or failing frame.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MagnitudeArg {
    Exact,
    Approx,
}

impl From<MagnitudeArg> for MagnitudeMode {
    fn from(m: MagnitudeArg) -> Self {
        match m {
            MagnitudeArg::Exact => MagnitudeMode::Exact,
            MagnitudeArg::Approx => MagnitudeMode::Approx,
        }
    }
}

fn parse_se(s: &str) -> Result<StructuringElement, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth annotation file or directory.
    #[arg(long)]
    pub gt: PathBuf,

    /// Detection file (optionally with `# frame` sections) or directory.
    #[arg(long)]
    pub pred: PathBuf,

    /// Average per-image rates instead of pooling counts.
    #[arg(long = "macro")]
    pub macro_average: bool,

    /// Fraction of a truth box a detection must cover to be a true detection.
    #[arg(long, default_value_t = 0.5)]
    pub tdb_overlap: f64,

    /// True detections covering less than this fraction also count as missing data.
    #[arg(long, default_value_t = 0.95)]
    pub mdb_coverage: f64,

    #[arg(long, value_enum, default_value_t = ReportFormat::Both)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Human,
    Kv,
    Both,
}

impl DetectArgs {
    pub fn pipeline_config(&self) -> textloc::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_config_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.median_window {
            cfg.median_window = v;
        }
        if let Some(v) = self.magnitude {
            cfg.magnitude_mode = v.into();
        }
        if let Some(v) = &self.bridge_se {
            cfg.bridge_se = v.clone();
        }
        if let Some(v) = &self.fill_se {
            cfg.fill_se = v.clone();
        }
        if let Some(v) = self.min_area_fraction {
            cfg.min_area_fraction = v;
        }
        if let Some(v) = self.min_edge_density {
            cfg.min_edge_density = v;
        }
        if let Some(v) = &self.debug_dir {
            cfg.debug_dir = Some(v.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_STAGE: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Config(_) | Error::ConfigLine { .. } => EXIT_USAGE,
        Error::Io(_)
        | Error::UnsupportedMagic(_)
        | Error::MalformedHeader(_)
        | Error::UnsupportedMaxval(_)
        | Error::TruncatedPayload { .. }
        | Error::Annotation { .. } => EXIT_IO,
        _ => EXIT_STAGE,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let result = match &cli.command {
        Command::Detect(args) => detect::run(args),
        Command::Eval(args) => eval::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
