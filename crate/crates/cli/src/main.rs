mod commands;
mod config;
mod data;
mod manifest;
mod report;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayreg::LinkFunction;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "rayreg", version, about = "Rayleigh regression, robust fitting and anomaly detection")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replications and pixel loops.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Rendering of the summary printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Mle,
    Wmle,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailArg {
    Both,
    Upper,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Rrm,
    Csv,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConfigArgs {
    /// Flat JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DataArgs {
    /// Headered CSV file.
    pub data: PathBuf,
    #[arg(long)]
    pub response: String,
    /// Numeric covariate columns; an intercept is always added.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Categorical column expanded into dummy variables.
    #[arg(long)]
    pub dummy: Option<String>,
    /// Reference level of the dummy column.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long)]
    pub link: Option<LinkFunction>,
    /// Tail probability below which observations are downweighted.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    pub method: MethodArg,
    /// Size of the per-coefficient Wald tests.
    #[arg(long, default_value_t = 0.05)]
    pub pfa: f64,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct WaldArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Wmle)]
    pub method: MethodArg,
    /// Coefficients tested jointly, by name or zero-based index. Without
    /// it every non-intercept coefficient is tested separately against 0.
    #[arg(long, value_delimiter = ',')]
    pub interest: Vec<String>,
    /// Null values, one per tested coefficient (default 0).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub null: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub pfa: f64,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Wmle)]
    pub method: MethodArg,
    #[arg(long)]
    pub control_limit: Option<f64>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub replications: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BreakdownArgs {
    /// Smallest outlier count.
    #[arg(long, default_value_t = 1)]
    pub from: usize,
    #[arg(long, default_value_t = 100)]
    pub to: usize,
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    #[arg(long)]
    pub replications: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityArgs {
    /// Smallest outlier value.
    #[arg(long, default_value_t = 1.0)]
    pub from: f64,
    #[arg(long, default_value_t = 20.0)]
    pub to: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long)]
    pub replications: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DetectArgs {
    /// Image to inspect (RRM1 or CSV).
    #[arg(long)]
    pub interest: PathBuf,
    /// Reference image used as a covariate; repeat for several.
    #[arg(long = "covariate")]
    pub covariates: Vec<PathBuf>,
    /// Training rectangle `row,col,rows,cols`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub region: Vec<usize>,
    #[arg(long, value_enum, default_value_t = MethodArg::Wmle)]
    pub method: MethodArg,
    /// CSV of target centers with header `row,col`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TailArg::Both)]
    pub tail: TailArg,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub link: Option<LinkFunction>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SceneArgs {
    /// JSON scene parameters; missing keys take the defaults.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ImageFormat::Rrm)]
    pub image_format: ImageFormat,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Fit MLE and/or WMLE and report coefficients.
    Fit(FitArgs),
    /// Wald tests on fitted coefficients.
    Wald(WaldArgs),
    /// Quantile residuals and control-chart flags.
    Residuals(ResidualArgs),
    /// Monte Carlo bias and MSE table.
    Simulate(SimulateArgs),
    /// Total relative bias against the number of outliers.
    Breakdown(BreakdownArgs),
    /// Mean absolute sensitivity curve against the outlier value.
    Sensitivity(SensitivityArgs),
    /// Residual control-chart anomaly detection on an image.
    Detect(DetectArgs),
    /// Generate the seeded synthetic detection scene.
    SynthScene(SceneArgs),
    /// Re-run a command from its manifest and compare outputs.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Wald(_) => "wald",
            Command::Residuals(_) => "residuals",
            Command::Simulate(_) => "simulate",
            Command::Breakdown(_) => "breakdown",
            Command::Sensitivity(_) => "sensitivity",
            Command::Detect(_) => "detect",
            Command::SynthScene(_) => "synth-scene",
            Command::Replay(_) => "replay",
        }
    }

    fn config_path(&self) -> Option<&std::path::Path> {
        let c = match self {
            Command::Fit(a) => &a.config,
            Command::Wald(a) => &a.config,
            Command::Residuals(a) => &a.config,
            Command::Simulate(a) => &a.config,
            Command::Breakdown(a) => &a.config,
            Command::Sensitivity(a) => &a.config,
            Command::Detect(a) => &a.config,
            Command::SynthScene(a) => &a.config,
            Command::Replay(_) => return None,
        };
        c.config.as_deref()
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.command {
        Command::Replay(args) => commands::replay(args, &cli.global),
        cmd => {
            let cfg = config::load_config(cmd.config_path())?;
            commands::execute(cmd, cfg, &cli.global).map(|_| ())
        }
    }
}
