//! `texreward` command-line front end.

mod commands;
mod inputs;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use texreward::error::{GeometryError, IoError, OptError, RewardError};

#[derive(Debug)]
pub enum CliError {
    /// Bad or unreadable input (exit 2).
    Input(String),
    /// Output could not be written (exit 2).
    Output(String),
    /// A check or run-time assertion failed (exit 1).
    Check(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Input(_) | CliError::Output(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<OptError> for CliError {
    fn from(e: OptError) -> Self {
        match e {
            OptError::NonFinite { .. } => CliError::Check(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

/// Raster size written as `WxH`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Size {
    pub width: usize,
    pub height: usize,
}

impl FromStr for Size {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad dimension `{t}` in `{s}`"));
        Ok(Size { width: parse(w)?, height: parse(h)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeArg {
    Unit,
    #[value(name = "signed_unit")]
    SignedUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WhichArg {
    Min,
    Max,
}

#[derive(Parser)]
#[command(name = "texreward", version, about = "Geometry-aware texture rewards: bake, project, mirror, evaluate, check, optimize")]
struct Cli {
    /// Use v-down texture coordinates (replaces every v with 1 - v on load).
    #[arg(long, global = true)]
    flip_v: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bake normalized mean curvature into a UV raster (raw f32 + sidecar + PNG preview).
    BakeCurvature(BakeArgs),
    /// Project principal directions into a smoothed UV vector field (JSONL + overlay PNG).
    ProjectField(FieldArgs),
    /// Estimate the mirror plane and UV mirror pairs (plane JSON + pairs JSONL).
    FindSymmetry(SymmetryArgs),
    /// Evaluate a reward spec on a texture.
    Eval(EvalArgs),
    /// Compare analytic texel gradients with central finite differences.
    GradCheck(GradCheckArgs),
    /// Gradient ascent directly on texels (they stand in for generator weights).
    Optimize(OptimizeArgs),
    /// Gradient ascent on camera elevation/azimuth against a mesh visibility proxy.
    OptimizeCamera(CameraArgs),
}

#[derive(Args, Serialize)]
pub struct BakeArgs {
    pub mesh: PathBuf,
    #[arg(long, default_value = "256x256")]
    pub size: Size,
    #[arg(long, value_enum, default_value = "unit")]
    pub range: RangeArg,
    /// Neighborhood radius of the quadric fit, in rings.
    #[arg(long, default_value_t = texreward::curvature::DEFAULT_RADIUS_RINGS)]
    pub rings: usize,
    /// Percentile clipped at each end before normalization.
    #[arg(long, default_value_t = texreward::curvature::DEFAULT_CLIP)]
    pub clip: f64,
    /// Dilate the PNG preview by one texel (raw output is unaffected).
    #[arg(long)]
    pub dilate_preview: bool,
    /// Raw output path; `.json`, `.coverage`, `.png` and `.manifest.json` siblings are written next to it.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct FieldArgs {
    pub mesh: PathBuf,
    #[arg(long, value_enum, default_value = "min")]
    pub which: WhichArg,
    /// Smoothing iterations.
    #[arg(long, default_value_t = 5)]
    pub smooth: usize,
    #[arg(long, default_value_t = texreward::curvature::DEFAULT_RADIUS_RINGS)]
    pub rings: usize,
    /// Draw the overlay over this texture instead of the UV coverage.
    #[arg(long)]
    pub texture: Option<PathBuf>,
    /// Overlay size when no texture is given.
    #[arg(long, default_value = "512x512")]
    pub overlay_size: Size,
    /// JSONL output; the overlay goes to the `.png` sibling.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct SymmetryArgs {
    pub mesh: PathBuf,
    /// Largest accepted reflection residual (default: 0.5% of the bounding-box diagonal).
    #[arg(long)]
    pub max_residual: Option<f64>,
    /// Plane JSON output; pairs go to the `.pairs.jsonl` sibling.
    #[arg(short, long)]
    pub out: PathBuf,
}

/// Geometry inputs for reward terms. Explicit files win; anything missing is
/// derived from `--mesh` at the texture's resolution.
#[derive(Args, Serialize, Clone)]
pub struct AuxArgs {
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// UV vector field JSONL (alignment).
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Mirror pairs JSONL (symmetry).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Baked `unit` curvature raw (emphasis).
    #[arg(long)]
    pub curv_unit: Option<PathBuf>,
    /// Baked `signed_unit` curvature raw (colorization).
    #[arg(long)]
    pub curv_signed: Option<PathBuf>,
    #[arg(long, default_value_t = texreward::curvature::DEFAULT_RADIUS_RINGS)]
    pub rings: usize,
    #[arg(long, default_value_t = texreward::curvature::DEFAULT_CLIP)]
    pub clip: f64,
    #[arg(long, value_enum, default_value = "min")]
    pub which: WhichArg,
    #[arg(long, default_value_t = 5)]
    pub smooth: usize,
    #[arg(long)]
    pub max_residual: Option<f64>,
}

#[derive(Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub texture: PathBuf,
    #[command(flatten)]
    pub aux: AuxArgs,
    /// Cosine threshold for the alignment count (reported when a field is available).
    #[arg(long, default_value_t = texreward::rewards::default_alignment_threshold())]
    pub tau: f64,
    /// Also write the reward gradient as a 3-channel raw raster.
    #[arg(long)]
    pub grad_out: Option<PathBuf>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct GradCheckArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Texture to check at; when absent, seeded noise of `--size` is used.
    #[arg(long)]
    pub texture: Option<PathBuf>,
    #[arg(long, default_value = "8x8")]
    pub size: Size,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of noise textures (seeds `seed`, `seed + 1`, ...).
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = texreward::gradcheck::DEFAULT_STEP)]
    pub eps: f64,
    #[arg(long, default_value_t = texreward::gradcheck::DEFAULT_REL_TOL)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = texreward::gradcheck::DEFAULT_ABS_TOL)]
    pub abs_tol: f64,
    #[command(flatten)]
    pub aux: AuxArgs,
    /// Test hook: perturb the analytic gradient of this term kind.
    #[arg(long, hide = true)]
    pub corrupt_term: Option<String>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// `noise:SEED` or a PNG path.
    #[arg(long, default_value = "noise:0")]
    pub init: String,
    /// Size of a noise initialization.
    #[arg(long, default_value = "64x64")]
    pub size: Size,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub log_every: usize,
    /// Skip clamping texels to [0, 1] after each step.
    #[arg(long)]
    pub no_clamp: bool,
    /// Write a PNG snapshot at every logged step.
    #[arg(long)]
    pub snapshots: bool,
    #[command(flatten)]
    pub aux: AuxArgs,
    /// Output directory.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct CameraArgs {
    pub mesh: PathBuf,
    /// Initial elevation in radians.
    #[arg(long, default_value_t = 0.0)]
    pub elevation: f64,
    /// Initial azimuth in radians.
    #[arg(long, default_value_t = 0.0)]
    pub azimuth: f64,
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub log_every: usize,
    /// Softplus sharpness of the visibility proxy.
    #[arg(long, default_value_t = texreward::optimize::DEFAULT_PROXY_SHARPNESS)]
    pub sharpness: f64,
    #[arg(short, long)]
    pub out: PathBuf,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TEXREWARD_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("TEXREWARD_THREADS must be a non-negative integer, got `{raw}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = configure_threads().and_then(|()| match &cli.command {
        Command::BakeCurvature(a) => commands::bake_curvature(a, cli.flip_v),
        Command::ProjectField(a) => commands::project_field(a, cli.flip_v),
        Command::FindSymmetry(a) => commands::find_symmetry(a, cli.flip_v),
        Command::Eval(a) => commands::eval(a, cli.flip_v),
        Command::GradCheck(a) => commands::grad_check(a, cli.flip_v),
        Command::Optimize(a) => commands::optimize(a, cli.flip_v),
        Command::OptimizeCamera(a) => commands::optimize_camera(a, cli.flip_v),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("texreward: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
